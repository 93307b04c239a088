use super::expansion::expansion_of;
use super::monitor::MonitorReport;
use crate::background::{BackgroundFoliation, Slice};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// The flow at one instant. `expansion` (½ tr χ_ω) and the sampled slice
/// always correspond to the stored ω.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub omega: ScalarField,
    pub expansion: ScalarField,
    /// Last accepted time step (0 before the first step).
    pub dt: f64,
    pub step: u64,
    pub monitors: MonitorReport,
    pub(crate) slice: Slice,
}

impl FlowState {
    /// Evaluates the geometry of ω at time t.
    pub fn new(bg: &BackgroundFoliation, omega: ScalarField, t: f64) -> Result<Self> {
        let (slice, expansion) = evaluate(bg, &omega)?;
        Ok(Self {
            t,
            omega,
            expansion,
            dt: 0.0,
            step: 0,
            monitors: MonitorReport::default(),
            slice,
        })
    }

    pub fn slice(&self) -> &Slice {
        &self.slice
    }

    /// max |tr χ_ω|.
    pub fn max_abs_tr_chi(&self) -> f64 {
        2.0 * self.expansion.max_abs()
    }
}

pub(crate) fn evaluate(bg: &BackgroundFoliation, omega: &ScalarField) -> Result<(Slice, ScalarField)> {
    let slice = bg.sample_at(omega)?;
    let e = expansion_of(&slice, omega)?;
    if e.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Stiffness { t: f64::NAN, dt: f64::NAN });
    }
    Ok((slice, e))
}

/// Expansion only, for intermediate Runge–Kutta stages.
fn stage(bg: &BackgroundFoliation, omega: &ScalarField) -> Result<ScalarField> {
    let slice = bg.sample_for_expansion(omega)?;
    let e = expansion_of(&slice, omega)?;
    if e.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Stiffness { t: f64::NAN, dt: f64::NAN });
    }
    Ok(e)
}

/// Parabolic limit cfl · h², h the smallest coordinate cell edge measured
/// with γ_ω.
pub fn cfl_time_step(slice: &Slice, cfl: f64) -> f64 {
    let grid = slice.grid();
    let (dth, dph) = (grid.d_theta(), grid.d_phi());
    let mut h2 = f64::INFINITY;
    for n in 0..grid.len() {
        let [gtt, _, gpp] = slice.gamma.g_at(n);
        h2 = h2.min(gtt * dth * dth);
        if !grid.is_axisymmetric() {
            h2 = h2.min(gpp * dph * dph);
        }
    }
    cfl * h2
}

pub(crate) struct Advanced {
    pub omega: ScalarField,
    pub slice: Slice,
    pub expansion: ScalarField,
    pub dt: f64,
}

enum Rejection {
    Domain(Vec<usize>),
    NonFinite,
}

fn classify(e: Error) -> std::result::Result<Rejection, Error> {
    match e {
        Error::ExitedDomain { nodes } => Ok(Rejection::Domain(nodes)),
        Error::Stiffness { .. } | Error::Definiteness { .. } => Ok(Rejection::NonFinite),
        other => Err(other),
    }
}

/// One classical RK4 step of ∂_t ω = −E(ω) starting with `dt`, halving it
/// whenever a stage leaves the background or produces non-finite values.
pub(crate) fn advance(
    bg: &BackgroundFoliation,
    state: &FlowState,
    mut dt: f64,
    dt_min: f64,
) -> Result<Advanced> {
    let grid = *state.omega.grid();
    let w = state.omega.values();
    let k1 = state.expansion.values();
    loop {
        let attempt = || -> Result<Advanced> {
            let shifted = |k: &[f64], c: f64| -> Result<ScalarField> {
                ScalarField::new(grid, w.iter().zip(k).map(|(w, k)| w - c * k).collect())
            };
            let k2 = stage(bg, &shifted(k1, 0.5 * dt)?)?;
            let k3 = stage(bg, &shifted(k2.values(), 0.5 * dt)?)?;
            let k4 = stage(bg, &shifted(k3.values(), dt)?)?;
            let next: Vec<f64> = (0..grid.len())
                .map(|n| {
                    w[n] - dt / 6.0
                        * (k1[n] + 2.0 * k2.values()[n] + 2.0 * k3.values()[n] + k4.values()[n])
                })
                .collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Stiffness { t: state.t, dt });
            }
            let omega = ScalarField::new(grid, next)?;
            let (slice, expansion) = evaluate(bg, &omega)?;
            Ok(Advanced {
                omega,
                slice,
                expansion,
                dt,
            })
        };
        let rejection = match attempt() {
            Ok(a) => return Ok(a),
            Err(e) => classify(e)?,
        };
        dt *= 0.5;
        if dt < dt_min {
            return Err(match rejection {
                Rejection::Domain(nodes) => Error::ExitedDomain { nodes },
                Rejection::NonFinite => Error::Stiffness { t: state.t, dt },
            });
        }
    }
}

/// Advances the state by one CFL-limited step without monitoring. The
/// driver [`super::Flow`] adds monitors, output clipping and termination.
pub fn step(state: &FlowState, bg: &BackgroundFoliation, cfl: f64, dt_min: f64) -> Result<FlowState> {
    let dt = cfl_time_step(&state.slice, cfl);
    let a = advance(bg, state, dt, dt_min)?;
    Ok(FlowState {
        t: state.t + a.dt,
        omega: a.omega,
        expansion: a.expansion,
        dt: a.dt,
        step: state.step + 1,
        monitors: state.monitors.clone(),
        slice: a.slice,
    })
}
