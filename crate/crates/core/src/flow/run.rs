use std::collections::VecDeque;

use super::history::{FlowHistory, HistoryRow, Leaf};
use super::monitor::monitor;
use super::stepper::{advance, cfl_time_step, FlowState};
use super::FlowConfig;
use crate::background::BackgroundFoliation;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::snapshot::FieldSnapshot;

#[derive(Debug, Clone, PartialEq)]
pub enum FlowStatus {
    Converged,
    ExitedDomain { nodes: Vec<usize> },
    /// Reached `max_time`, or stopped because the residual stalled.
    MaxTimeReached { stalled: bool },
    Stiffness { t: f64, dt: f64 },
}

impl FlowStatus {
    pub fn name(&self) -> &'static str {
        match self {
            FlowStatus::Converged => "converged",
            FlowStatus::ExitedDomain { .. } => "exited-domain",
            FlowStatus::MaxTimeReached { stalled: false } => "max-time-reached",
            FlowStatus::MaxTimeReached { stalled: true } => "stalled",
            FlowStatus::Stiffness { .. } => "stiffness",
        }
    }
}

/// Extremes of the per-step monitors over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunExtremes {
    pub min_tr_chi: f64,
    /// Largest nodal increase of ω over any step (negative when ω
    /// decreased strictly everywhere at every step).
    pub max_increment: f64,
    pub min_c0_low: f64,
    pub min_c0_high: f64,
    pub max_metric_residual: f64,
    /// (t, u_max) after every accepted step, starting with t = 0.
    pub u_max: Vec<(f64, f64)>,
}

impl RunExtremes {
    fn new() -> Self {
        Self {
            min_tr_chi: f64::INFINITY,
            max_increment: f64::NEG_INFINITY,
            min_c0_low: f64::INFINITY,
            min_c0_high: f64::INFINITY,
            max_metric_residual: 0.0,
            u_max: Vec::new(),
        }
    }

    fn absorb(&mut self, s: &FlowState) {
        let m = &s.monitors;
        self.min_tr_chi = self.min_tr_chi.min(m.min_tr_chi);
        if let Some(i) = m.max_increment {
            self.max_increment = self.max_increment.max(i);
        }
        self.min_c0_low = self.min_c0_low.min(m.c0_low);
        self.min_c0_high = self.min_c0_high.min(m.c0_high);
        if let Some(r) = m.metric_residual {
            self.max_metric_residual = self.max_metric_residual.max(r);
        }
        self.u_max.push((s.t, m.u_max));
    }

    /// sup of u_max over the run divided by its max over the first
    /// `fraction` of the elapsed time.
    pub fn gradient_growth(&self, fraction: f64) -> f64 {
        let Some(&(t_end, _)) = self.u_max.last() else {
            return f64::NAN;
        };
        let cut = fraction * t_end;
        let early = self
            .u_max
            .iter()
            .filter(|(t, _)| *t <= cut)
            .map(|&(_, u)| u)
            .fold(0.0, f64::max);
        let all = self.u_max.iter().map(|&(_, u)| u).fold(0.0, f64::max);
        if all == 0.0 {
            1.0
        } else {
            all / early
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub status: FlowStatus,
    pub state: FlowState,
    pub history: FlowHistory,
    /// Final ω corrected by the exponential-decay extrapolation of the last
    /// two output frames (equal to the final ω when no rate is available).
    pub omega_infinity: ScalarField,
    pub extremes: RunExtremes,
    pub warnings: Vec<String>,
}

/// The flow of a fixed initial surface through a fixed background.
#[derive(Debug, Clone)]
pub struct Flow<'a> {
    bg: &'a BackgroundFoliation,
    config: FlowConfig,
    omega0: ScalarField,
    lower_level: f64,
}

const EVENT_SLACK: f64 = 1e-9;

impl<'a> Flow<'a> {
    pub fn new(bg: &'a BackgroundFoliation, omega0: ScalarField, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        if omega0.grid() != bg.grid() {
            return Err(Error::Shape("initial surface is not on the background grid".into()));
        }
        let lower_level = match bg.weakly_trapped_levels().last() {
            Some(&k) => bg.lambda().value(k),
            None => bg.lambda().min,
        };
        Ok(Self {
            bg,
            config,
            omega0,
            lower_level,
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn omega0(&self) -> &ScalarField {
        &self.omega0
    }

    /// Level below which the flow is not expected to go.
    pub fn lower_level(&self) -> f64 {
        self.lower_level
    }

    /// State at t = 0. The initial surface must be outer un-trapped.
    pub fn initial_state(&self) -> Result<FlowState> {
        let mut s = FlowState::new(self.bg, self.omega0.clone(), 0.0)?;
        let bad: Vec<usize> = s
            .expansion
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &e)| !(e > 0.0))
            .map(|(n, _)| n)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Precondition {
                reason: "initial surface is not outer un-trapped (tr chi <= 0)".into(),
                nodes: bad,
            });
        }
        s.monitors = monitor(&s, None, &self.omega0, self.lower_level, self.config.monitor_tolerance)?;
        Ok(s)
    }

    /// One monitored step of at most `dt_cap`.
    pub fn step(&self, state: &FlowState, dt_cap: f64) -> Result<FlowState> {
        let dt = cfl_time_step(&state.slice, self.config.cfl).min(dt_cap);
        let a = advance(self.bg, state, dt, self.config.dt_min)?;
        let mut next = FlowState {
            t: state.t + a.dt,
            omega: a.omega,
            expansion: a.expansion,
            dt: a.dt,
            step: state.step + 1,
            monitors: Default::default(),
            slice: a.slice,
        };
        if a.dt == dt_cap {
            // Land exactly on event times.
            next.t = state.t + dt_cap;
        }
        next.monitors = monitor(
            &next,
            Some(state),
            &self.omega0,
            self.lower_level,
            self.config.monitor_tolerance,
        )?;
        Ok(next)
    }

    /// Runs from t = 0.
    pub fn run(&self) -> Result<FlowOutcome> {
        self.run_from(self.initial_state()?, self.config.max_time)
    }

    /// Runs from `state` until a terminal status or time `t_stop`
    /// (at most `max_time`).
    pub fn run_from(&self, state: FlowState, t_stop: f64) -> Result<FlowOutcome> {
        let cfg = &self.config;
        let t_stop = t_stop.min(cfg.max_time);
        let mut history = FlowHistory::default();
        let mut extremes = RunExtremes::new();
        let mut warnings: Vec<String> = Vec::new();
        let mut stall: VecDeque<f64> = VecDeque::with_capacity(cfg.stall_window + 1);

        let next_event = |t: f64, interval: f64| -> f64 {
            ((t / interval + EVENT_SLACK).floor() + 1.0) * interval
        };
        let at_event = |t: f64, interval: f64| -> bool {
            let k = (t / interval).round();
            (t - k * interval).abs() <= EVENT_SLACK * interval.max(t.abs())
        };

        let mut state = state;
        extremes.absorb(&state);
        history.rows.push(HistoryRow::new(state.t, &state.omega, &state.monitors));
        if cfg.leaf_interval.is_some() {
            history.leaves.push(leaf(&state));
        }
        stall.push_back(state.max_abs_tr_chi());

        let status = loop {
            if state.max_abs_tr_chi() < cfg.eps_mots {
                break FlowStatus::Converged;
            }
            if state.t >= t_stop * (1.0 - 1e-15) {
                break FlowStatus::MaxTimeReached { stalled: false };
            }
            let mut target = next_event(state.t, cfg.output_interval).min(t_stop);
            if let Some(li) = cfg.leaf_spacing(state.t) {
                target = target.min(next_event(state.t, li));
                if state.t < cfg.leaf_fine_until {
                    target = target.min(cfg.leaf_fine_until);
                }
            }
            let next = match self.step(&state, target - state.t) {
                Ok(s) => s,
                Err(Error::ExitedDomain { nodes }) => break FlowStatus::ExitedDomain { nodes },
                Err(Error::Stiffness { t, dt }) => break FlowStatus::Stiffness { t, dt },
                Err(e) => return Err(e),
            };
            state = next;
            extremes.absorb(&state);
            for w in &state.monitors.warnings {
                if warnings.len() < 32 && !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
            let converged = state.max_abs_tr_chi() < cfg.eps_mots;
            if at_event(state.t, cfg.output_interval) || converged {
                history.rows.push(HistoryRow::new(state.t, &state.omega, &state.monitors));
            }
            if cfg.leaf_interval.is_some() {
                let fine = cfg.leaf_fine_interval.filter(|_| state.t <= cfg.leaf_fine_until * (1.0 + EVENT_SLACK));
                let on_leaf = fine.is_some_and(|f| at_event(state.t, f))
                    || cfg.leaf_interval.is_some_and(|li| at_event(state.t, li))
                    || (fine.is_some() && (state.t - cfg.leaf_fine_until).abs() <= EVENT_SLACK);
                if on_leaf || converged {
                    history.leaves.push(leaf(&state));
                }
            }
            stall.push_back(state.max_abs_tr_chi());
            if stall.len() > cfg.stall_window {
                let old = stall.pop_front().expect("non-empty");
                if (old - state.max_abs_tr_chi()).abs() < cfg.stall_tolerance && !converged {
                    break FlowStatus::MaxTimeReached { stalled: true };
                }
            }
        };

        if history.rows.last().map(|r| r.t) != Some(state.t) {
            history.rows.push(HistoryRow::new(state.t, &state.omega, &state.monitors));
        }
        if cfg.leaf_interval.is_some() && history.leaves.last().map(|l| l.t) != Some(state.t) {
            history.leaves.push(leaf(&state));
        }
        let omega_infinity = extrapolate(&state, &history);
        Ok(FlowOutcome {
            status,
            state,
            history,
            omega_infinity,
            extremes,
            warnings,
        })
    }

    /// Snapshot sufficient to resume the run bit-for-bit.
    pub fn snapshot(&self, state: &FlowState) -> Result<FieldSnapshot> {
        FieldSnapshot::new(*state.omega.grid())
            .with_meta("t", format!("{:e}", state.t))
            .with_meta("dt", format!("{:e}", state.dt))
            .with_meta("step", state.step)
            .with_field("omega", &state.omega)?
            .with_field("omega0", &self.omega0)
    }

    /// Restores a state written by [`Flow::snapshot`]. The snapshot's ω₀
    /// must match this flow's.
    pub fn resume(&self, snap: &FieldSnapshot) -> Result<FlowState> {
        if snap.grid != *self.bg.grid() {
            return Err(Error::Shape("snapshot grid differs from the background grid".into()));
        }
        let omega0 = snap.field("omega0")?;
        if omega0 != self.omega0 {
            return Err(Error::Parameter("snapshot belongs to a different initial surface".into()));
        }
        let mut s = FlowState::new(self.bg, snap.field("omega")?, snap.meta_f64("t")?)?;
        s.dt = snap.meta_f64("dt")?;
        s.step = snap
            .meta("step")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse("snapshot lacks a valid step count".into()))?;
        s.monitors = monitor(&s, None, &self.omega0, self.lower_level, self.config.monitor_tolerance)?;
        Ok(s)
    }
}

fn leaf(s: &FlowState) -> Leaf {
    Leaf {
        t: s.t,
        omega: s.omega.clone(),
        expansion: s.expansion.clone(),
    }
}

/// ω_∞ ≈ ω(t₂) − E(t₂)/μ with E = ½ tr χ_ω decaying like e^{−μt}, μ from
/// the maxima of the last two output frames.
fn extrapolate(state: &FlowState, history: &FlowHistory) -> ScalarField {
    let e2 = state.expansion.max_abs();
    let prev = history
        .rows
        .iter()
        .rev()
        .find(|r| r.t < state.t - 1e-12 * state.t.abs().max(1.0));
    let Some(r) = prev else {
        return state.omega.clone();
    };
    let e1 = 0.5 * r.min_tr_chi.abs().max(r.max_tr_chi.abs());
    let mu = (e1 / e2).ln() / (state.t - r.t);
    if !(mu > 0.0 && mu.is_finite()) || e2 == 0.0 {
        return state.omega.clone();
    }
    state
        .omega
        .zip_with(&state.expansion, |w, e| w - e / mu)
        .expect("same grid")
}

/// Runs ω₀ to a MOTS (or another terminal status) from t = 0.
pub fn run_to_mots(
    omega0: &ScalarField,
    bg: &BackgroundFoliation,
    config: &FlowConfig,
) -> Result<FlowOutcome> {
    Flow::new(bg, omega0.clone(), config.clone())?.run()
}
