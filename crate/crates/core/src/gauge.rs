//! Rescalings L̲ = a k of the null generator.
//!
//! On an affine background (D_k k = 0, tr K = tr χ̲ > 0) the scale a is
//! built from the auxiliary function v solving v' = β(1 − v)², β = ½ tr K,
//! and (log a)' = β / v. The resulting L̲ satisfies
//!
//! G(L̲,L̲) − d(2κ − tr χ̲)(L̲) ≥ |(tr χ̲ − 4κ) χ̲̂| + 2|α̲̂| + 5/2 |χ̲̂|²
//!
//! whenever the energy condition G(k,k) ≥ 5/2 |K̂|² + 2 tr K |K̂| + 2|α̂| holds.

use crate::background::{BackgroundFoliation, LambdaGrid, Slice};
use crate::calculus::{gradient, norm_sq_at, raise, traceless_part};
use crate::error::{Error, Result};
use crate::field::{CovectorField, ScalarField, SymTensor2Field};
use crate::flow::{chi_graph, expansion_of};
use crate::grid::SphereGrid;
use crate::numerics::{cumulative_integral, derivative, invert_monotone};
use crate::par::map_indices;

/// Default relative tolerance of the gauge and energy checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Scale a, inaffinity κ = ∂_λ a and flow parameter s on every
/// (λ-level, node) of a background.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeProfile {
    grid: SphereGrid,
    lambda: LambdaGrid,
    pub a: Vec<ScalarField>,
    pub kappa: Vec<ScalarField>,
    /// ∂_λ κ.
    pub kappa_rate: Vec<ScalarField>,
    /// Auxiliary function of the construction (absent for supplied scales).
    pub v: Option<Vec<ScalarField>>,
    /// s(λ) = ∫_{λ_min}^λ du / a.
    pub s_of_lambda: Vec<ScalarField>,
}

/// Per-node series → per-level fields.
fn to_levels(grid: SphereGrid, rays: &[Vec<f64>], count: usize) -> Vec<ScalarField> {
    (0..count)
        .map(|k| {
            ScalarField::new(grid, rays.iter().map(|r| r[k]).collect()).expect("grid-sized")
        })
        .collect()
}

fn ray(levels: &[ScalarField], node: usize) -> Vec<f64> {
    levels.iter().map(|f| f.values()[node]).collect()
}

impl GaugeProfile {
    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn lambda(&self) -> &LambdaGrid {
        &self.lambda
    }

    /// The affine gauge a ≡ 1.
    pub fn affine(bg: &BackgroundFoliation) -> Self {
        let grid = *bg.grid();
        let l = *bg.lambda();
        Self {
            grid,
            lambda: l,
            a: vec![ScalarField::constant(grid, 1.0); l.count],
            kappa: vec![ScalarField::zeros(grid); l.count],
            kappa_rate: vec![ScalarField::zeros(grid); l.count],
            v: None,
            s_of_lambda: l
                .values()
                .map(|x| ScalarField::constant(grid, x - l.min))
                .collect(),
        }
    }

    /// A supplied scale. κ and ∂_λ κ are obtained by sixth-order finite
    /// differences along each generator.
    pub fn from_scale(bg: &BackgroundFoliation, a: Vec<ScalarField>) -> Result<Self> {
        let grid = *bg.grid();
        let l = *bg.lambda();
        if a.len() != l.count || a.iter().any(|f| f.grid() != &grid) {
            return Err(Error::Lattice("scale is not sampled on the background lattice".into()));
        }
        if let Some((k, n)) = first_where(&a, |v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "scale must be positive (lambda index {k}, node {n})"
            )));
        }
        let per_node: Vec<[Vec<f64>; 3]> = map_indices(grid.len(), |n| {
            let av = ray(&a, n);
            let kap = derivative(&av, l.step);
            let rate = derivative(&kap, l.step);
            let inv: Vec<f64> = av.iter().map(|x| 1.0 / x).collect();
            [kap, rate, cumulative_integral(&inv, l.step)]
        });
        let col = |i: usize| -> Vec<Vec<f64>> { per_node.iter().map(|r| r[i].clone()).collect() };
        Ok(Self {
            grid,
            lambda: l,
            a,
            kappa: to_levels(grid, &col(0), l.count),
            kappa_rate: to_levels(grid, &col(1), l.count),
            v: None,
            s_of_lambda: to_levels(grid, &col(2), l.count),
        })
    }

    /// Largest flow parameter reached by every generator.
    pub fn s_max(&self) -> f64 {
        self.s_of_lambda[self.lambda.count - 1].min()
    }
}

fn first_where(levels: &[ScalarField], bad: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    levels.iter().enumerate().find_map(|(k, f)| {
        f.values().iter().position(|&v| bad(v)).map(|n| (k, n))
    })
}

fn check_null_cone(bg: &BackgroundFoliation) -> Result<()> {
    for (k, s) in bg.slices().iter().enumerate() {
        if let Some(n) = s.tr_chib.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NotANullCone {
                lambda_index: k,
                node: n,
                value: s.tr_chib.values()[n],
            });
        }
    }
    Ok(())
}

/// Builds the scale a from v' = β(1 − v)², v(λ_min) = v₀ and
/// (log a)' = β/v, a(λ_min) = 1, using the closed form
/// v = (v₀ + (1 − v₀)B) / (1 + (1 − v₀)B), B = ∫ β.
pub fn construct_gauge(bg: &BackgroundFoliation, v0: &ScalarField) -> Result<GaugeProfile> {
    let grid = *bg.grid();
    if v0.grid() != &grid {
        return Err(Error::Shape("v0 is not on the background grid".into()));
    }
    if let Some(n) = v0.values().iter().position(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Domain(format!(
            "v0 must lie in (0, 1), got {} at node {n}",
            v0.values()[n]
        )));
    }
    if !bg.is_affine() {
        return Err(Error::Precondition {
            reason: "gauge construction starts from an affine background".into(),
            nodes: Vec::new(),
        });
    }
    check_null_cone(bg)?;

    let l = *bg.lambda();
    let h = l.step;
    let per_node: Vec<[Vec<f64>; 5]> = map_indices(grid.len(), |n| {
        let beta: Vec<f64> = bg.slices().iter().map(|s| 0.5 * s.tr_chib.values()[n]).collect();
        let dbeta = derivative(&beta, h);
        let b = cumulative_integral(&beta, h);
        let w0 = v0.values()[n];
        let v: Vec<f64> = b
            .iter()
            .map(|&bb| (w0 + (1.0 - w0) * bb) / (1.0 + (1.0 - w0) * bb))
            .collect();
        let ratio: Vec<f64> = beta.iter().zip(&v).map(|(b, v)| b / v).collect();
        let a: Vec<f64> = cumulative_integral(&ratio, h).iter().map(|x| x.exp()).collect();
        let kappa: Vec<f64> = a.iter().zip(&ratio).map(|(a, r)| a * r).collect();
        let rate: Vec<f64> = (0..l.count)
            .map(|k| {
                let dv = beta[k] * (1.0 - v[k]).powi(2);
                (kappa[k] * beta[k] + a[k] * dbeta[k]) / v[k] - a[k] * beta[k] * dv / (v[k] * v[k])
            })
            .collect();
        let inv_a: Vec<f64> = a.iter().map(|x| 1.0 / x).collect();
        let s = cumulative_integral(&inv_a, h);
        [a, kappa, rate, v, s]
    });
    let col = |i: usize| -> Vec<Vec<f64>> { per_node.iter().map(|r| r[i].clone()).collect() };
    Ok(GaugeProfile {
        grid,
        lambda: l,
        a: to_levels(grid, &col(0), l.count),
        kappa: to_levels(grid, &col(1), l.count),
        kappa_rate: to_levels(grid, &col(2), l.count),
        v: Some(to_levels(grid, &col(3), l.count)),
        s_of_lambda: to_levels(grid, &col(4), l.count),
    })
}

/// Both sides of the gauge inequality on every lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReport {
    /// Left side minus right side, per λ-level.
    pub slack: Vec<ScalarField>,
    pub min_slack: f64,
    /// Characteristic size of the terms, used to scale the tolerance.
    pub scale: f64,
    pub tolerance: f64,
    /// Energy-condition slack per λ-level (affine backgrounds only).
    pub energy_slack: Option<Vec<ScalarField>>,
    pub pass: bool,
}

impl GaugeReport {
    /// (λ, min slack over the sphere) per level.
    pub fn table(&self, lambda: &LambdaGrid) -> Vec<(f64, f64)> {
        self.slack
            .iter()
            .enumerate()
            .map(|(k, f)| (lambda.value(k), f.min()))
            .collect()
    }
}

fn norm(inv: [f64; 3], t: [f64; 3]) -> f64 {
    norm_sq_at(inv, t).sqrt()
}

/// Evaluates the gauge inequality for L̲ = a k on an affine background.
/// `tol` is relative to the largest term magnitude.
pub fn check_gauge_condition(
    bg: &BackgroundFoliation,
    gauge: &GaugeProfile,
    tol: f64,
) -> Result<GaugeReport> {
    if gauge.grid() != bg.grid() || gauge.lambda() != bg.lambda() {
        return Err(Error::Lattice("gauge and background lattices differ".into()));
    }
    if !bg.is_affine() {
        return Err(Error::Precondition {
            reason: "the gauge check rescales affine background fields".into(),
            nodes: Vec::new(),
        });
    }
    let grid = *bg.grid();
    let l = *bg.lambda();
    let tr_rate: Vec<Vec<f64>> = map_indices(grid.len(), |n| {
        let tr: Vec<f64> = bg.slices().iter().map(|s| s.tr_chib.values()[n]).collect();
        derivative(&tr, l.step)
    });

    let mut scale: f64 = 0.0;
    let mut slack = Vec::with_capacity(l.count);
    for (k, s) in bg.slices().iter().enumerate() {
        let mut out = vec![0.0; grid.len()];
        for (n, o) in out.iter_mut().enumerate() {
            let inv = s.gamma.inv_at(n);
            let a = gauge.a[k].values()[n];
            let kap = gauge.kappa[k].values()[n];
            let kap_rate = gauge.kappa_rate[k].values()[n];
            let tr_k = s.tr_chib.values()[n];
            let k_hat = norm(inv, s.chib_hat.at(n));
            let alpha = norm(inv, s.alphab_hat.at(n));
            let g = s.g_ll.values()[n];
            // d(2κ − tr χ̲)(L̲) with tr χ̲ = a tr K and L̲ = a ∂_λ.
            let d_term = a * (2.0 * kap_rate - (kap * tr_k + a * tr_rate[n][k]));
            let lhs = a * a * g - d_term;
            let rhs = (a * tr_k - 4.0 * kap).abs() * a * k_hat
                + 2.0 * a * a * alpha
                + 2.5 * a * a * k_hat * k_hat;
            *o = lhs - rhs;
            scale = scale
                .max((a * tr_k).powi(2))
                .max(kap * kap)
                .max((a * a * g).abs())
                .max(d_term.abs());
        }
        slack.push(ScalarField::new(grid, out)?);
    }
    let min_slack = slack.iter().map(ScalarField::min).fold(f64::INFINITY, f64::min);
    let tolerance = tol * scale.max(f64::MIN_POSITIVE);
    Ok(GaugeReport {
        min_slack,
        scale,
        tolerance,
        energy_slack: Some(check_energy_condition(bg)?),
        pass: min_slack >= -tolerance,
        slack,
    })
}

/// G(k,k) − 5/2 |K̂|² − 2 tr K |K̂| − 2|α̂| on every lattice point.
pub fn check_energy_condition(bg: &BackgroundFoliation) -> Result<Vec<ScalarField>> {
    if !bg.is_affine() {
        return Err(Error::Precondition {
            reason: "the energy condition is stated for an affine generator".into(),
            nodes: Vec::new(),
        });
    }
    bg.slices()
        .iter()
        .map(|s| {
            let vals = (0..bg.grid().len())
                .map(|n| {
                    let inv = s.gamma.inv_at(n);
                    let k_hat = norm(inv, s.chib_hat.at(n));
                    s.g_ll.values()[n]
                        - 2.5 * k_hat * k_hat
                        - 2.0 * s.tr_chib.values()[n] * k_hat
                        - 2.0 * norm(inv, s.alphab_hat.at(n))
                })
                .collect();
            ScalarField::new(*bg.grid(), vals)
        })
        .collect()
}

/// True when every energy slack is at least −tol·(field scale).
pub fn energy_condition_holds(bg: &BackgroundFoliation, slack: &[ScalarField], tol: f64) -> bool {
    let scale = bg
        .slices()
        .iter()
        .map(|s| s.g_ll.max_abs().max(s.tr_chib.max_abs().powi(2)))
        .fold(f64::MIN_POSITIVE, f64::max);
    slack.iter().all(|f| f.min() >= -tol * scale)
}

/// The background seen by the flow parameter s of L̲ = a k.
///
/// Level σ of the result is the graph λ = Λ(σ, z) of the affine
/// background, where s(Λ(σ, z), z) = σ. Its k-side fields are the affine
/// ones rescaled by a (tr χ̲ → a tr K, χ̲̂ → a K̂, G → a² G, α̲̂ → a² α̂,
/// κ = ∂_λ a); its L-side fields come from the graph geometry with the
/// partner L/a.
pub fn reparametrize(bg: &BackgroundFoliation, gauge: &GaugeProfile) -> Result<BackgroundFoliation> {
    if gauge.grid() != bg.grid() || gauge.lambda() != bg.lambda() {
        return Err(Error::Lattice("gauge and background lattices differ".into()));
    }
    if !bg.is_affine() {
        return Err(Error::Precondition {
            reason: "reparametrization starts from an affine background".into(),
            nodes: Vec::new(),
        });
    }
    let grid = *bg.grid();
    let l = *bg.lambda();
    let s_max = gauge.s_max();
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::Reparametrization(format!(
            "flow-parameter range collapsed (s_max = {s_max})"
        )));
    }
    let s_grid = LambdaGrid::new(0.0, s_max / (l.count - 1) as f64, l.count)?;
    let lambdas: Vec<f64> = l.values().collect();
    let s_rays: Vec<Vec<f64>> = (0..grid.len()).map(|n| ray(&gauge.s_of_lambda, n)).collect();
    for (n, r) in s_rays.iter().enumerate() {
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Reparametrization(format!(
                "s is not strictly increasing along the generator at node {n}"
            )));
        }
    }
    let affine_scale = gauge.a.iter().all(|f| f.values().iter().all(|&v| v == 1.0));

    let slices = map_indices(l.count, |j| -> Result<Slice> {
        let sigma = s_grid.value(j);
        let big_lambda: Vec<f64> = s_rays
            .iter()
            .enumerate()
            .map(|(n, r)| {
                if affine_scale {
                    return Ok(l.value(j).min(l.max()));
                }
                invert_monotone(&lambdas, r, sigma.min(r[l.count - 1])).ok_or_else(|| {
                    Error::Reparametrization(format!("s = {sigma} unreachable at node {n}"))
                })
            })
            .collect::<Result<_>>()?;
        let big_lambda = ScalarField::new(grid, big_lambda)?;
        let base = bg.sample_at(&big_lambda)?;
        let at = |levels: &[ScalarField]| -> Vec<f64> {
            big_lambda
                .values()
                .iter()
                .enumerate()
                .map(|(n, &x)| {
                    let st = bg.stencil_at(x);
                    (0..st.len).map(|m| st.weights[m] * levels[st.base + m].values()[n]).sum()
                })
                .collect()
        };
        let a = ScalarField::new(grid, at(&gauge.a))?;
        let kappa = ScalarField::new(grid, at(&gauge.kappa))?;

        let mut out = base.clone();
        out.kappa = kappa;
        out.tr_chib = base.tr_chib.zip_with(&a, |t, a| t * a)?;
        out.chib_hat = base.chib_hat.scaled(&a)?;
        let a2 = a.map(|x| x * x);
        out.g_ll = base.g_ll.zip_with(&a2, |g, a2| g * a2)?;
        out.alphab_hat = base.alphab_hat.scaled(&a2)?;

        if base.tr_chi.is_some() && base.tau.is_some() {
            let half = expansion_of(&base, &big_lambda)?;
            out.tr_chi = Some(half.zip_with(&a, |e, a| 2.0 * e / a)?);
            out.tau = Some(graph_torsion(&base, &big_lambda, &a)?);
            out.chi_hat = match base.chi_hat {
                Some(_) => {
                    let chi = chi_graph(&base, &big_lambda)?;
                    let inv_a = a.map(|x| 1.0 / x);
                    Some(traceless_part(&base.gamma, &chi.scaled(&inv_a)?)?)
                }
                None => None,
            };
        }
        Ok(out)
    });
    let slices = slices.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BackgroundFoliation::new(s_grid, affine_scale, slices)?.with_interpolation(bg.interpolation()))
}

/// Torsion of the graph λ = Λ(z) of an affine background with respect to
/// the pair (ã k, L_Λ / ã), ã(z) = a(Λ(z), z):
/// τ_i + ∂_i log ã − K_ij ∇^j Λ.
fn graph_torsion(base: &Slice, big_lambda: &ScalarField, a: &ScalarField) -> Result<CovectorField> {
    let tau = base.tau.as_ref().expect("caller checked");
    let grid = *big_lambda.grid();
    let dlog = gradient(&a.map(f64::ln));
    let (ut, up) = raise(&base.gamma, &gradient(big_lambda))?;
    let chib = base.chib();
    let mut th = vec![0.0; grid.len()];
    let mut ph = vec![0.0; grid.len()];
    for n in 0..grid.len() {
        let [ktt, ktp, kpp] = chib.at(n);
        th[n] = tau.theta[n] + dlog.theta[n] - (ktt * ut[n] + ktp * up[n]);
        ph[n] = tau.phi[n] + dlog.phi[n] - (ktp * ut[n] + kpp * up[n]);
    }
    CovectorField::new(grid, th, ph)
}

/// Helper for tests and scenarios: a tensor field of given γ-norm.
pub fn traceless_of_norm(grid: SphereGrid, gamma_scale: f64, norm_value: f64) -> SymTensor2Field {
    // diag(c r², −c r² sin²θ) has |·|² = 2c².
    let c = norm_value / 2f64.sqrt();
    SymTensor2Field::from_fn(grid, |t, _| {
        [c * gamma_scale, 0.0, -c * gamma_scale * t.sin().powi(2)]
    })
}
