use super::stepper::FlowState;
use crate::calculus::grad_norm_sq;
use crate::error::Result;
use crate::field::ScalarField;

/// Diagnostics recomputed after every accepted step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorReport {
    pub min_tr_chi: f64,
    pub max_tr_chi: f64,
    /// max over the sphere of u = ½ |∇̸ω|².
    pub u_max: f64,
    /// min ω − (outermost weakly trapped level, or the bottom of the
    /// background when no level is trapped).
    pub c0_low: f64,
    /// min over nodes of ω₀ − ω.
    pub c0_high: f64,
    /// Largest nodal change ω(t) − ω(t − dt); negative while ω decreases
    /// everywhere. `None` before the first step.
    pub max_increment: Option<f64>,
    /// sup |(γ_ω(t) − γ_ω(t − dt)) / dt + tr χ_ω χ̲| over components.
    pub metric_residual: Option<f64>,
    pub warnings: Vec<String>,
}

impl MonitorReport {
    pub fn is_green(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Evaluates the monitors for `state`. `previous` is the state before the
/// last step, if any.
pub fn monitor(
    state: &FlowState,
    previous: Option<&FlowState>,
    omega0: &ScalarField,
    lower_level: f64,
    tolerance: f64,
) -> Result<MonitorReport> {
    let grid = *state.omega.grid();
    let tr = state.expansion.map(|e| 2.0 * e);
    let u = grad_norm_sq(&state.slice.gamma, &state.omega)?;
    let mut r = MonitorReport {
        min_tr_chi: tr.min(),
        max_tr_chi: tr.max(),
        u_max: 0.5 * u.max(),
        c0_low: state.omega.min() - lower_level,
        c0_high: omega0
            .values()
            .iter()
            .zip(state.omega.values())
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min),
        ..Default::default()
    };

    if let Some(prev) = previous {
        let dt = state.t - prev.t;
        let mut inc = f64::NEG_INFINITY;
        let mut bad_nodes = 0usize;
        for n in 0..grid.len() {
            let d = state.omega.values()[n] - prev.omega.values()[n];
            inc = inc.max(d);
            if prev.expansion.values()[n] > 0.0 && d > tolerance {
                bad_nodes += 1;
            }
        }
        r.max_increment = Some(inc);
        if bad_nodes > 0 {
            r.warnings
                .push(format!("omega increased at {bad_nodes} node(s) despite positive expansion"));
        }
        if dt > 0.0 {
            let chib = prev.slice.chib();
            let mut res: f64 = 0.0;
            for n in 0..grid.len() {
                let g1 = state.slice.gamma.g_at(n);
                let g0 = prev.slice.gamma.g_at(n);
                let c = chib.at(n);
                let trc = 2.0 * prev.expansion.values()[n];
                for k in 0..3 {
                    res = res.max(((g1[k] - g0[k]) / dt + trc * c[k]).abs());
                }
            }
            r.metric_residual = Some(res);
        }
    }
    if r.min_tr_chi < -tolerance {
        r.warnings
            .push(format!("expansion became negative (min tr chi = {:e})", r.min_tr_chi));
    }
    if r.c0_low < -tolerance || r.c0_high < -tolerance {
        r.warnings.push(format!(
            "confinement margin negative (low {:e}, high {:e})",
            r.c0_low, r.c0_high
        ));
    }
    Ok(r)
}
