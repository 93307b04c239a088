//! Geometry of a graph Σ_ω = {(ω(z), z)} inside the background.
//!
//! All operators use the induced metric γ_ω, which on a null hypersurface
//! is the background metric evaluated at s = ω(z).

use crate::background::{BackgroundFoliation, Slice};
use crate::calculus::{contract, grad_norm_sq, gradient, hessian, laplace_beltrami, raise};
use crate::error::{Error, Result};
use crate::field::{CovectorField, ScalarField, SymTensor2Field};

/// ½ tr χ_ω from slice data already sampled at ω:
///
/// ½ tr χ_ω = −Δ̸ω − 2 τ(∇̸ω) + ½ tr χ + (½ tr χ̲ − κ) |∇̸ω|².
///
/// τ acts on the lift of ∇̸ω to the graph, whose L̲-component is |∇̸ω|² and
/// τ(L̲) = κ, which accounts for the sign of the κ-term. This is the trace
/// of [`chi_graph`].
pub fn expansion_of(slice: &Slice, omega: &ScalarField) -> Result<ScalarField> {
    let (tr_chi, tau) = match (&slice.tr_chi, &slice.tau) {
        (Some(c), Some(t)) => (c, t),
        _ => {
            return Err(Error::Capability(
                "graph expansion needs tr chi and tau on the background".into(),
            ))
        }
    };
    let g = &slice.gamma;
    let lap = laplace_beltrami(g, omega)?;
    let d = gradient(omega);
    let tau_d = contract(g, tau, &d)?;
    let grad2 = grad_norm_sq(g, omega)?;
    let mut out = lap.into_values();
    for (n, v) in out.iter_mut().enumerate() {
        *v = -*v - 2.0 * tau_d.values()[n]
            + 0.5 * tr_chi.values()[n]
            + (0.5 * slice.tr_chib.values()[n] - slice.kappa.values()[n]) * grad2.values()[n];
    }
    ScalarField::new(*omega.grid(), out)
}

/// Samples the background at ω and evaluates [`expansion_of`].
pub fn graph_expansion(bg: &BackgroundFoliation, omega: &ScalarField) -> Result<ScalarField> {
    expansion_of(&bg.sample_at(omega)?, omega)
}

/// Second fundamental form of the graph with respect to its null partner:
///
/// χ_ω = χ − 2(dω⊗τ + τ⊗dω) − 2κ dω⊗dω + |∇̸ω|² χ̲ − 2 ∇̸²ω.
pub fn chi_graph(slice: &Slice, omega: &ScalarField) -> Result<SymTensor2Field> {
    let chi = match (slice.chi(), &slice.tau) {
        (Some(c), Some(_)) => c,
        _ => {
            return Err(Error::Capability(
                "graph second fundamental form needs the full chi tensor and tau".into(),
            ))
        }
    };
    let tau = slice.tau.as_ref().expect("checked above");
    let g = &slice.gamma;
    let chib = slice.chib();
    let hess = hessian(g, omega)?;
    let d = gradient(omega);
    let grad2 = grad_norm_sq(g, omega)?;
    let mut out = SymTensor2Field::zeros(*omega.grid());
    for n in 0..omega.grid().len() {
        let (dt, dp) = (d.theta[n], d.phi[n]);
        let (tt, tp) = (tau.theta[n], tau.phi[n]);
        let k = slice.kappa.values()[n];
        let u = grad2.values()[n];
        let c = chi.at(n);
        let b = chib.at(n);
        let h = hess.at(n);
        let sym = [2.0 * dt * tt, dt * tp + tt * dp, 2.0 * dp * tp];
        let dd = [dt * dt, dt * dp, dp * dp];
        out.set(
            n,
            std::array::from_fn(|i| c[i] - 2.0 * sym[i] - 2.0 * k * dd[i] + u * b[i] - 2.0 * h[i]),
        );
    }
    Ok(out)
}

/// Coefficients of the graph's null partner L_ω = c_L L + c_L̲ L̲ + V with
/// V = −2∇̸ω tangent to the background slice.
#[derive(Debug, Clone, PartialEq)]
pub struct NullPartner {
    pub c_l: ScalarField,
    pub c_lbar: ScalarField,
    /// Contravariant components (V^θ, V^φ).
    pub tangential: CovectorField,
}

pub fn null_partner_coefficients(slice: &Slice, omega: &ScalarField) -> Result<NullPartner> {
    let grid = *omega.grid();
    let g = &slice.gamma;
    let (vt, vp) = raise(g, &gradient(omega))?;
    Ok(NullPartner {
        c_l: ScalarField::constant(grid, 1.0),
        c_lbar: grad_norm_sq(g, omega)?,
        tangential: CovectorField::new(
            grid,
            vt.into_iter().map(|v| -2.0 * v).collect(),
            vp.into_iter().map(|v| -2.0 * v).collect(),
        )?,
    })
}
