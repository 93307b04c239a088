//! Mean curvature flow of graphs, ∂_t ω = −½ tr χ_ω, towards a MOTS.

mod expansion;
mod history;
mod monitor;
mod run;
mod stepper;

pub use expansion::{chi_graph, expansion_of, graph_expansion, null_partner_coefficients, NullPartner};
pub use history::{FlowHistory, HistoryRow, Leaf, HISTORY_COLUMNS};
pub use monitor::{monitor, MonitorReport};
pub use run::{run_to_mots, Flow, FlowOutcome, FlowStatus, RunExtremes};
pub use stepper::{cfl_time_step, step, FlowState};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// dt ≤ cfl · (smallest grid spacing measured in γ_ω)².
    pub cfl: f64,
    /// Convergence threshold on max |tr χ_ω|.
    pub eps_mots: f64,
    pub max_time: f64,
    pub dt_min: f64,
    /// Spacing in t of history rows.
    pub output_interval: f64,
    /// Spacing in t of the stored leaves used for gluing; `None` stores
    /// no leaves.
    pub leaf_interval: Option<f64>,
    /// Finer leaf spacing used for t < `leaf_fine_until`, where the leaves
    /// feed the mollifier in the gluing band.
    pub leaf_fine_interval: Option<f64>,
    pub leaf_fine_until: f64,
    /// Stall detection: max |tr χ_ω| must drop by at least
    /// `stall_tolerance` over `stall_window` steps.
    pub stall_window: usize,
    pub stall_tolerance: f64,
    /// Roundoff allowance for the positivity and monotonicity monitors.
    pub monitor_tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            cfl: 0.2,
            eps_mots: 1e-6,
            max_time: 100.0,
            dt_min: 1e-12,
            output_interval: 0.5,
            leaf_interval: None,
            leaf_fine_interval: None,
            leaf_fine_until: 0.0,
            stall_window: 1000,
            stall_tolerance: 1e-12,
            monitor_tolerance: 1e-10,
        }
    }
}

impl FlowConfig {
    /// Leaf spacing in effect at time t.
    pub fn leaf_spacing(&self, t: f64) -> Option<f64> {
        match self.leaf_fine_interval {
            Some(f) if t < self.leaf_fine_until => Some(f),
            _ => self.leaf_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cfl", self.cfl),
            ("eps_mots", self.eps_mots),
            ("max_time", self.max_time),
            ("dt_min", self.dt_min),
            ("output_interval", self.output_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(li) = self.leaf_interval {
            if !(li > 0.0 && li.is_finite()) {
                return Err(Error::Parameter(format!("leaf_interval must be positive, got {li}")));
            }
        }
        if let Some(li) = self.leaf_fine_interval {
            if !(li > 0.0 && li.is_finite()) || self.leaf_interval.is_none() {
                return Err(Error::Parameter(format!(
                    "leaf_fine_interval must be positive and needs leaf_interval, got {li}"
                )));
            }
        }
        if self.stall_window == 0 {
            return Err(Error::Parameter("stall_window must be at least 1".into()));
        }
        Ok(())
    }
}
