//! Gluing the flow history to the background foliation.
//!
//! The chart is shifted so that the level Λ is the initial surface ω₀ of
//! the flow and the levels above it are the graphs ω₀ + (λ − Λ). With the
//! flow ω̃(t, z) the glued family is
//!
//! ```text
//! v(λ, z)   = ω̃(Λ − λ, z)            for λ < Λ
//!           = ω₀(z) + (λ − Λ)         for λ ≥ Λ
//! v_ε       = η_ε ⋆_λ v
//! ω̃_ε(λ, z) = ζ₁ ω̃(Λ − λ, z) + ζ₂ v_ε + ζ₃ (ω₀ + λ − Λ)
//! ```
//!
//! When ω₀ ≡ Λ this is the usual gluing onto the background levels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::background::BackgroundFoliation;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flow::{graph_expansion, Leaf};
use crate::grid::SphereGrid;
use crate::par::map_indices;
use crate::snapshot::FieldSnapshot;

/// Number of trapezoid intervals per ε used for the λ-convolution.
pub const SUBGRID_PER_EPS: usize = 128;

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 / (s * s - 1.0)).exp()
    } else {
        0.0
    }
}

/// ∫_{−1}^{1} exp(1/(s² − 1)) ds by trapezoid doubling (the integrand is
/// flat to all orders at ±1, so the rule converges spectrally).
pub fn bump_integral() -> f64 {
    let mut n = 16usize;
    let mut prev = f64::NAN;
    loop {
        let h = 2.0 / n as f64;
        let sum: f64 = (1..n).map(|i| bump(-1.0 + i as f64 * h)).sum::<f64>() * h;
        if (sum - prev).abs() < 1e-15 || n > 1 << 20 {
            return sum;
        }
        prev = sum;
        n *= 2;
    }
}

/// η(s) = C exp(1/(s² − 1)) on |s| < 1, normalised, and η_ε(s) = η(s/ε)/ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub eps: f64,
    pub c: f64,
}

impl MollifierSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("mollifier width must be positive, got {eps}")));
        }
        Ok(Self {
            eps,
            c: 1.0 / bump_integral(),
        })
    }

    pub fn eta(&self, s: f64) -> f64 {
        self.c * bump(s)
    }

    pub fn eta_eps(&self, s: f64) -> f64 {
        self.eta(s / self.eps) / self.eps
    }

    /// Nodes u_i − λ and trapezoid weights of the convolution subgrid.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        let n = 2 * SUBGRID_PER_EPS;
        let h = 2.0 * self.eps / n as f64;
        (1..n)
            .map(|i| {
                let off = -self.eps + i as f64 * h;
                (off, h * self.eta_eps(off))
            })
            .collect()
    }

    /// |Σ w_i − 1| for the convolution rule.
    pub fn normalization_error(&self) -> f64 {
        (self.quadrature().iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs()
    }
}

/// S(x) = e^{−1/x} / (e^{−1/x} + e^{−1/(1−x)}), a smooth step from 0 to 1
/// on [0, 1], and its derivative.
fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    let s = a / (a + b);
    (s, s * (1.0 - s) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))))
}

/// ζ₁ + ζ₂ + ζ₃ = 1 with ζ₁ = 1 below Λ − δ, 0 above Λ − δ/2,
/// ζ₃(λ) = ζ₁(2Λ − λ), ζ₂ = 1 on |λ − Λ| ≤ δ/2 and 0 on |λ − Λ| ≥ δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOfUnity {
    pub lambda_j: f64,
    pub delta: f64,
}

impl PartitionOfUnity {
    pub fn new(lambda_j: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || !lambda_j.is_finite() {
            return Err(Error::Parameter(format!("invalid junction ({lambda_j}, {delta})")));
        }
        Ok(Self { lambda_j, delta })
    }

    fn zeta1(&self, l: f64) -> (f64, f64) {
        let x = (l - (self.lambda_j - self.delta)) / (0.5 * self.delta);
        let (s, ds) = smooth_step(x);
        (1.0 - s, -ds / (0.5 * self.delta))
    }

    /// (ζ₁, ζ₂, ζ₃) at λ.
    pub fn zeta(&self, l: f64) -> [f64; 3] {
        let z1 = self.zeta1(l).0;
        let z3 = self.zeta1(2.0 * self.lambda_j - l).0;
        [z1, 1.0 - z1 - z3, z3]
    }

    /// (ζ₁′, ζ₂′, ζ₃′) at λ.
    pub fn dzeta(&self, l: f64) -> [f64; 3] {
        let d1 = self.zeta1(l).1;
        let d3 = -self.zeta1(2.0 * self.lambda_j - l).1;
        [d1, -d1 - d3, d3]
    }
}

/// The flow history seen as a function of t, interpolated with cubic
/// Lagrange polynomials through the nearest four leaves.
struct HistoryView<'a> {
    leaves: &'a [Leaf],
    times: Vec<f64>,
}

impl<'a> HistoryView<'a> {
    fn new(leaves: &'a [Leaf]) -> Result<Self> {
        if leaves.len() < 4 {
            return Err(Error::Resolution("gluing needs at least four flow leaves".into()));
        }
        let times: Vec<f64> = leaves.iter().map(|l| l.t).collect();
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter(
                "flow leaves must start at t = 0 and increase strictly in t".into(),
            ));
        }
        Ok(Self { leaves, times })
    }

    fn end(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Largest spacing of stored leaves on [0, t].
    fn max_gap_until(&self, t: f64) -> f64 {
        self.times
            .windows(2)
            .filter(|w| w[0] < t)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn weights(&self, t: f64) -> (usize, [f64; 4]) {
        let n = self.times.len();
        let k = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        let base = k.saturating_sub(1).min(n - 4);
        let xs = &self.times[base..base + 4];
        let mut w = [0.0; 4];
        for m in 0..4 {
            if xs[m] == t {
                w = [0.0; 4];
                w[m] = 1.0;
                return (base, w);
            }
        }
        for (m, wm) in w.iter_mut().enumerate() {
            let mut p = 1.0;
            for q in 0..4 {
                if q != m {
                    p *= (t - xs[q]) / (xs[m] - xs[q]);
                }
            }
            *wm = p;
        }
        (base, w)
    }

    /// (ω̃(t, z), ½ tr χ(t, z)) at one node.
    fn at(&self, t: f64, node: usize) -> (f64, f64) {
        let (base, w) = self.weights(t);
        let mut om = 0.0;
        let mut e = 0.0;
        for m in 0..4 {
            let l = &self.leaves[base + m];
            om += w[m] * l.omega.values()[node];
            e += w[m] * l.expansion.values()[node];
        }
        (om, e)
    }
}

/// The continuous chart v and its mollification, per node.
pub struct GlueChart<'a> {
    history: HistoryView<'a>,
    omega0: &'a ScalarField,
    lambda_j: f64,
    mollifier: MollifierSpec,
}

impl<'a> GlueChart<'a> {
    pub fn new(leaves: &'a [Leaf], lambda_j: f64, eps: f64) -> Result<Self> {
        let history = HistoryView::new(leaves)?;
        Ok(Self {
            omega0: &leaves[0].omega,
            history,
            lambda_j,
            mollifier: MollifierSpec::new(eps)?,
        })
    }

    pub fn mollifier(&self) -> &MollifierSpec {
        &self.mollifier
    }

    /// (v, ∂_λ v) at (λ, node).
    pub fn v(&self, l: f64, node: usize) -> (f64, f64) {
        if l < self.lambda_j {
            let (om, e) = self.history.at(self.lambda_j - l, node);
            (om, e)
        } else {
            (self.omega0.values()[node] + (l - self.lambda_j), 1.0)
        }
    }

    /// (v_ε, ∂_λ v_ε) at (λ, node); the derivative is the mollified ∂_λ v,
    /// valid because v is continuous.
    pub fn v_eps(&self, l: f64, node: usize) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for (off, w) in self.mollifier.quadrature() {
            let (a, b) = self.v(l - off, node);
            v += w * a;
            dv += w * b;
        }
        (v, dv)
    }

    /// sup over nodes and the given levels of |v_ε − v|.
    pub fn sup_mollification_error(&self, levels: &[f64]) -> f64 {
        let n = self.omega0.grid().len();
        levels
            .iter()
            .flat_map(|&l| (0..n).map(move |node| (l, node)))
            .map(|(l, node)| (self.v_eps(l, node).0 - self.v(l, node).0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtlasLeaf {
    pub sigma: f64,
    pub omega: ScalarField,
    /// ∂_σ ω̃.
    pub d_sigma: ScalarField,
    pub tr_chi: ScalarField,
}

/// A one-parameter family of cross-sections ω̃(σ, ·), σ increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FoliationAtlas {
    pub grid: SphereGrid,
    pub leaves: Vec<AtlasLeaf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    NotMonotone,
    NotUntrapped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub leaf: usize,
    pub sigma: f64,
    pub node: usize,
    pub kind: WitnessKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Verified,
    Failed(Vec<Witness>),
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueParams {
    /// Junction level Λ.
    pub lambda_j: f64,
    /// Overlap half-width δ.
    pub delta: f64,
    /// Mollifier width ε < δ/2.
    pub eps: f64,
}

fn leaf_from(bg: &BackgroundFoliation, sigma: f64, omega: ScalarField, d_sigma: ScalarField) -> Result<AtlasLeaf> {
    let tr_chi = graph_expansion(bg, &omega)?.map(|e| 2.0 * e);
    Ok(AtlasLeaf {
        sigma,
        omega,
        d_sigma,
        tr_chi,
    })
}

/// Glues the flow leaves (starting at t = 0 with the initial surface) to the
/// shifted background levels above Λ. The atlas parameter is
/// σ = λ − (Λ − T), T the time of the last leaf, so the limit surface of
/// the flow is the leaf σ = 0.
pub fn mollify_glue(leaves: &[Leaf], bg: &BackgroundFoliation, params: GlueParams) -> Result<FoliationAtlas> {
    let GlueParams {
        lambda_j,
        delta,
        eps,
    } = params;
    if !(eps < 0.5 * delta) {
        return Err(Error::Parameter(format!(
            "mollifier width {eps} must be below half the overlap {delta}"
        )));
    }
    let chart = GlueChart::new(leaves, lambda_j, eps)?;
    let pou = PartitionOfUnity::new(lambda_j, delta)?;
    let grid = *leaves[0].omega.grid();
    if grid != *bg.grid() {
        return Err(Error::Shape("flow leaves are not on the background grid".into()));
    }
    let t_end = chart.history.end();
    if t_end < delta + eps {
        return Err(Error::Parameter(format!(
            "flow history ends at t = {t_end}, inside the gluing band (delta + eps = {})",
            delta + eps
        )));
    }
    let gap = chart.history.max_gap_until(delta + eps);
    if gap > 0.5 * eps {
        return Err(Error::Resolution(format!(
            "flow leaves are {gap} apart near the junction; need at most eps/2 = {}",
            0.5 * eps
        )));
    }
    let omega0 = &leaves[0].omega;
    let top = bg.lambda().max() - omega0.max() + lambda_j;
    if top < lambda_j + delta {
        return Err(Error::Parameter(format!(
            "background ends before the gluing band closes (top level {top})"
        )));
    }
    let sigma0 = lambda_j - t_end;
    let n = grid.len();

    let mut atlas = Vec::new();
    // Flow part, λ ≤ Λ − δ: the leaves themselves, ∂_λ ω̃ = ½ tr χ.
    for l in leaves.iter().rev().filter(|l| l.t >= delta) {
        let lam = lambda_j - l.t;
        atlas.push(leaf_from(bg, lam - sigma0, l.omega.clone(), l.expansion.clone())?);
    }
    // Glue band and the background above it, on a uniform level grid.
    let step = (0.25 * eps).min(delta / 32.0);
    let count = ((top - (lambda_j - delta)) / step + 1e-9).floor() as usize;
    let levels: Vec<f64> = (1..=count).map(|j| lambda_j - delta + j as f64 * step).collect();
    let built: Vec<Result<AtlasLeaf>> = map_indices(levels.len(), |j| {
        let lam = levels[j];
        let z = pou.zeta(lam);
        let dz = pou.dzeta(lam);
        let mut w = vec![0.0; n];
        let mut d = vec![0.0; n];
        for node in 0..n {
            let upper = omega0.values()[node] + (lam - lambda_j);
            let (flow, dflow) = if z[0] > 0.0 || dz[0] != 0.0 {
                chart.history.at((lambda_j - lam).max(0.0), node)
            } else {
                (0.0, 0.0)
            };
            let (ve, dve) = if z[1] > 0.0 || dz[1] != 0.0 {
                chart.v_eps(lam, node)
            } else {
                (0.0, 0.0)
            };
            w[node] = z[0] * flow + z[1] * ve + z[2] * upper;
            d[node] = dz[0] * flow + z[0] * dflow + dz[1] * ve + z[1] * dve + dz[2] * upper + z[2];
        }
        leaf_from(bg, lam - sigma0, ScalarField::new(grid, w)?, ScalarField::new(grid, d)?)
    });
    for b in built {
        atlas.push(b?);
    }
    Ok(FoliationAtlas {
        grid,
        leaves: atlas,
    })
}

/// Atlas of the background levels λ_a ≤ λ ≤ λ_b (every lattice level in the
/// range), as uniform graphs with ∂_σ ω̃ = 1.
pub fn background_atlas(bg: &BackgroundFoliation, lambda_a: f64, lambda_b: f64) -> Result<FoliationAtlas> {
    let grid = *bg.grid();
    let l = bg.lambda();
    let leaves = (0..l.count)
        .map(|k| l.value(k))
        .filter(|&x| x >= lambda_a - 1e-12 && x <= lambda_b + 1e-12)
        .map(|x| {
            leaf_from(
                bg,
                x - lambda_a,
                ScalarField::constant(grid, x),
                ScalarField::constant(grid, 1.0),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    if leaves.is_empty() {
        return Err(Error::Parameter(format!(
            "no background level in [{lambda_a}, {lambda_b}]"
        )));
    }
    Ok(FoliationAtlas { grid, leaves })
}

/// Checks ∂_σ ω̃ > 0 and tr χ > 0 on every (leaf, node), recomputing the
/// expansion from the background.
pub fn verify_foliation(atlas: &FoliationAtlas, bg: &BackgroundFoliation) -> Result<Verdict> {
    let per_leaf: Vec<Result<Vec<Witness>>> = map_indices(atlas.leaves.len(), |k| {
        let leaf = &atlas.leaves[k];
        let tr = graph_expansion(bg, &leaf.omega)?;
        let mut w = Vec::new();
        for node in 0..atlas.grid.len() {
            let d = leaf.d_sigma.values()[node];
            if !(d > 0.0) {
                w.push(Witness {
                    leaf: k,
                    sigma: leaf.sigma,
                    node,
                    kind: WitnessKind::NotMonotone,
                    value: d,
                });
            }
            let e = 2.0 * tr.values()[node];
            if !(e > 0.0) {
                w.push(Witness {
                    leaf: k,
                    sigma: leaf.sigma,
                    node,
                    kind: WitnessKind::NotUntrapped,
                    value: e,
                });
            }
        }
        Ok(w)
    });
    let mut all = Vec::new();
    for r in per_leaf {
        all.extend(r?);
    }
    if atlas.leaves.windows(2).any(|p| !(p[1].sigma > p[0].sigma)) {
        return Err(Error::Parameter("atlas parameters must increase strictly".into()));
    }
    Ok(if all.is_empty() {
        Verdict::Verified
    } else {
        Verdict::Failed(all)
    })
}

/// Indices of leaves other than σ = 0 whose max tr χ is at most `eps_mots`.
pub fn outermost_violations(atlas: &FoliationAtlas, eps_mots: f64) -> Vec<usize> {
    atlas
        .leaves
        .iter()
        .enumerate()
        .filter(|(_, l)| l.sigma != 0.0 && l.tr_chi.max() <= eps_mots)
        .map(|(k, _)| k)
        .collect()
}

impl FoliationAtlas {
    /// Per-leaf summary rows: σ, min/max ω̃, min tr χ, min ∂_σ ω̃.
    pub fn summary_tsv(&self) -> String {
        let mut out = String::from("sigma\tmin_omega\tmax_omega\tmin_tr_chi\tmin_d_sigma\n");
        for l in &self.leaves {
            let _ = writeln!(
                out,
                "{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                l.sigma,
                l.omega.min(),
                l.omega.max(),
                l.tr_chi.min(),
                l.d_sigma.min()
            );
        }
        out
    }

    /// Leaves `0, stride, 2·stride, …` (and always the last) as one field
    /// snapshot with columns leaf_<index> (ω̃) and dsigma_<index> (∂_σ ω̃);
    /// the σ values are stored as metadata.
    pub fn leaves_snapshot(&self, stride: usize) -> Result<FieldSnapshot> {
        let stride = stride.max(1);
        let mut picked: Vec<usize> = (0..self.leaves.len()).step_by(stride).collect();
        if picked.last() != Some(&(self.leaves.len() - 1)) {
            picked.push(self.leaves.len() - 1);
        }
        let mut snap = FieldSnapshot::new(self.grid);
        for &k in &picked {
            snap = snap
                .with_meta(&format!("sigma_{k}"), format!("{:e}", self.leaves[k].sigma))
                .with_field(&format!("leaf_{k}"), &self.leaves[k].omega)?
                .with_field(&format!("dsigma_{k}"), &self.leaves[k].d_sigma)?;
        }
        Ok(snap)
    }

    /// Rebuilds an atlas from [`FoliationAtlas::leaves_snapshot`] output,
    /// recomputing the expansion of every leaf in `bg`.
    pub fn from_snapshot(snap: &FieldSnapshot, bg: &BackgroundFoliation) -> Result<Self> {
        if snap.grid != *bg.grid() {
            return Err(Error::Shape("atlas grid differs from the background grid".into()));
        }
        let mut indices: Vec<usize> = snap
            .fields
            .iter()
            .filter_map(|(name, _)| name.strip_prefix("leaf_")?.parse().ok())
            .collect();
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::Parse("atlas snapshot holds no leaf_<k> fields".into()));
        }
        let leaves = indices
            .iter()
            .map(|k| {
                leaf_from(
                    bg,
                    snap.meta_f64(&format!("sigma_{k}"))?,
                    snap.field(&format!("leaf_{k}"))?,
                    snap.field(&format!("dsigma_{k}"))?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: snap.grid,
            leaves,
        })
    }

    pub fn export(&self, dir: impl AsRef<Path>, stride: usize) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("atlas.tsv"), self.summary_tsv())?;
        self.leaves_snapshot(stride)?.save(dir.join("atlas_leaves.txt"))
    }
}
