//! The sampled null hypersurface Ω as a one-parameter family of slices.
//!
//! A [`BackgroundFoliation`] stores, for every level of a uniform λ-grid,
//! the induced metric and the expansion/shear/torsion data of the slice.
//! The k-side data (tr χ̲, χ̲̂, κ, G(L̲,L̲), α̲̂) are always present. The L-side
//! data (tr χ, τ and optionally χ̂) cannot be derived from the propagation
//! equations along the generator, so they are optional and must come from
//! an analytic model or a tabulated file.

mod analytic;
mod io;
mod raychaudhuri;

pub use analytic::{build_analytic, AnalyticBackground, Profile};
pub use io::{background_from_reader, background_to_text, read_background, write_background, BACKGROUND_FORMAT};
pub use raychaudhuri::{raychaudhuri_propagate, InitialSlice, Sources, FOCAL_LIMIT};

use std::str::FromStr;

use crate::calculus::{norm_sq_at, trace_at};
use crate::error::{Error, Result};
use crate::field::{CovectorField, MetricField, ScalarField, SymTensor2Field};
use crate::grid::SphereGrid;

/// Uniform grid λ_k = min + k·step, k = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub min: f64,
    pub step: f64,
    pub count: usize,
}

impl LambdaGrid {
    pub fn new(min: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !min.is_finite() || count < 2 {
            return Err(Error::Parameter(format!(
                "invalid lambda grid (min {min}, step {step}, count {count})"
            )));
        }
        Ok(Self { min, step, count })
    }

    /// Grid covering [min, max] with spacing as close to `step` as possible
    /// from below.
    pub fn spanning(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(max > min) || !(step > 0.0) {
            return Err(Error::Parameter(format!(
                "invalid lambda range [{min}, {max}] with step {step}"
            )));
        }
        let intervals = ((max - min) / step - 1e-9).ceil().max(1.0) as usize;
        Self::new(min, (max - min) / intervals as f64, intervals + 1)
    }

    pub fn value(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.value(self.count - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.value(k))
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.min && s <= self.max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Cubic,
    Linear,
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cubic" => Ok(Self::Cubic),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Parse(format!("unknown interpolation '{other}'"))),
        }
    }
}

/// Interpolation stencil: first lattice index and up to four weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub base: usize,
    pub weights: [f64; 4],
    pub len: usize,
}

/// Lagrange stencil on a uniform grid with `count` points for the
/// fractional index `t` (which must lie in [0, count-1]).
pub(crate) fn stencil(mut t: f64, count: usize, kind: Interpolation) -> Stencil {
    let r = t.round();
    if (t - r).abs() <= 1e-12 * r.abs().max(1.0) {
        t = r;
    }
    match kind {
        Interpolation::Linear => {
            let base = (t.floor() as usize).min(count - 2);
            let u = t - base as f64;
            Stencil {
                base,
                weights: [1.0 - u, u, 0.0, 0.0],
                len: 2,
            }
        }
        Interpolation::Cubic => {
            let base = (t.floor() as isize - 1).clamp(0, count as isize - 4) as usize;
            let x = t - base as f64;
            let mut weights = [0.0; 4];
            for (m, w) in weights.iter_mut().enumerate() {
                let mut p = 1.0;
                for q in 0..4 {
                    if q != m {
                        p *= (x - q as f64) / (m as f64 - q as f64);
                    }
                }
                *w = p;
            }
            Stencil {
                base,
                weights,
                len: 4,
            }
        }
    }
}

/// Geometry of one cross-section Σ_λ (or of a graph, after sampling).
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub gamma: MetricField,
    pub tr_chi: Option<ScalarField>,
    pub tau: Option<CovectorField>,
    pub chi_hat: Option<SymTensor2Field>,
    pub tr_chib: ScalarField,
    pub chib_hat: SymTensor2Field,
    pub kappa: ScalarField,
    pub g_ll: ScalarField,
    pub alphab_hat: SymTensor2Field,
}

impl Slice {
    pub fn grid(&self) -> &SphereGrid {
        self.gamma.grid()
    }

    /// Full χ̲ = χ̲̂ + ½ tr χ̲ γ.
    pub fn chib(&self) -> SymTensor2Field {
        let mut out = self.chib_hat.clone();
        for n in 0..self.grid().len() {
            let g = self.gamma.g_at(n);
            let h = self.chib_hat.at(n);
            let half = 0.5 * self.tr_chib.values()[n];
            out.set(n, std::array::from_fn(|k| h[k] + half * g[k]));
        }
        out
    }

    /// Full χ = χ̂ + ½ tr χ γ, when the L-side tensor data exist.
    pub fn chi(&self) -> Option<SymTensor2Field> {
        let (hat, tr) = (self.chi_hat.as_ref()?, self.tr_chi.as_ref()?);
        let mut out = hat.clone();
        for n in 0..self.grid().len() {
            let g = self.gamma.g_at(n);
            let h = hat.at(n);
            let half = 0.5 * tr.values()[n];
            out.set(n, std::array::from_fn(|k| h[k] + half * g[k]));
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundFoliation {
    grid: SphereGrid,
    lambda: LambdaGrid,
    affine: bool,
    interpolation: Interpolation,
    slices: Vec<Slice>,
}

impl BackgroundFoliation {
    /// Assemble and validate a foliation. `affine` declares that the
    /// generator is geodesic, which requires κ ≡ 0.
    pub fn new(lambda: LambdaGrid, affine: bool, slices: Vec<Slice>) -> Result<Self> {
        if slices.len() != lambda.count {
            return Err(Error::Lattice(format!(
                "{} slices for {} lambda levels",
                slices.len(),
                lambda.count
            )));
        }
        let grid = *slices[0].grid();
        let has_chi = slices[0].tr_chi.is_some();
        let has_tau = slices[0].tau.is_some();
        let has_chi_hat = slices[0].chi_hat.is_some();
        for (k, s) in slices.iter().enumerate() {
            if *s.grid() != grid
                || s.tr_chib.grid() != &grid
                || s.chib_hat.grid() != &grid
                || s.kappa.grid() != &grid
                || s.g_ll.grid() != &grid
                || s.alphab_hat.grid() != &grid
            {
                return Err(Error::Shape(format!("slice {k} does not conform to the grid")));
            }
            if s.tr_chi.is_some() != has_chi
                || s.tau.is_some() != has_tau
                || s.chi_hat.is_some() != has_chi_hat
            {
                return Err(Error::Lattice(format!(
                    "slice {k} carries a different set of L-side fields"
                )));
            }
            for n in 0..grid.len() {
                let inv = s.gamma.inv_at(n);
                for (name, t) in [("shear", s.chib_hat.at(n)), ("curvature", s.alphab_hat.at(n))] {
                    let tr = trace_at(inv, t);
                    if tr.abs() > 1e-10 * norm_sq_at(inv, t).sqrt().max(1e-300) {
                        return Err(Error::Geometry(format!(
                            "{name} data not traceless at lambda index {k}, node {n}"
                        )));
                    }
                }
                if affine && s.kappa.values()[n] != 0.0 {
                    return Err(Error::Geometry(format!(
                        "foliation declared affine but kappa = {} at lambda index {k}",
                        s.kappa.values()[n]
                    )));
                }
            }
        }
        Ok(Self {
            grid,
            lambda,
            affine,
            interpolation: Interpolation::Cubic,
            slices,
        })
    }

    pub fn with_interpolation(mut self, kind: Interpolation) -> Self {
        self.interpolation = kind;
        self
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn lambda(&self) -> &LambdaGrid {
        &self.lambda
    }

    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &Slice {
        &self.slices[k]
    }

    pub fn has_l_side(&self) -> bool {
        self.slices[0].tr_chi.is_some() && self.slices[0].tau.is_some()
    }

    pub fn has_chi_tensor(&self) -> bool {
        self.has_l_side() && self.slices[0].chi_hat.is_some()
    }

    /// Nodes whose value lies outside [λ_min, λ_max].
    pub fn out_of_range(&self, omega: &ScalarField) -> Vec<usize> {
        let (lo, hi) = (self.lambda.min, self.lambda.max());
        omega
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &w)| !(w >= lo && w <= hi))
            .map(|(n, _)| n)
            .collect()
    }

    pub(crate) fn stencil_at(&self, s: f64) -> Stencil {
        let t = (s - self.lambda.min) / self.lambda.step;
        stencil(t, self.lambda.count, self.interpolation)
    }

    /// Interpolate every field to the graph s = ω(z). The metric of the
    /// result is the induced metric γ_ω of the graph.
    pub fn sample_at(&self, omega: &ScalarField) -> Result<Slice> {
        self.sample_fields(omega, true)
    }

    /// Like [`Self::sample_at`] but leaves χ̂, α̲̂ and G(L̲,L̲) at zero
    /// (`chi_hat` = None); enough for the graph expansion.
    pub(crate) fn sample_for_expansion(&self, omega: &ScalarField) -> Result<Slice> {
        self.sample_fields(omega, false)
    }

    fn sample_fields(&self, omega: &ScalarField, all: bool) -> Result<Slice> {
        if omega.grid() != &self.grid {
            return Err(Error::Shape("graph function is not on the background grid".into()));
        }
        let outside = self.out_of_range(omega);
        if !outside.is_empty() {
            return Err(Error::ExitedDomain { nodes: outside });
        }
        let n = self.grid.len();
        let first = &self.slices[0];
        let mut gamma = SymTensor2Field::zeros(self.grid);
        let mut tr_chi = first.tr_chi.as_ref().map(|_| vec![0.0; n]);
        let mut tau = first.tau.as_ref().map(|_| (vec![0.0; n], vec![0.0; n]));
        let mut chi_hat = first
            .chi_hat
            .as_ref()
            .filter(|_| all)
            .map(|_| SymTensor2Field::zeros(self.grid));
        let mut tr_chib = vec![0.0; n];
        let mut chib_hat = SymTensor2Field::zeros(self.grid);
        let mut kappa = vec![0.0; n];
        let mut g_ll = vec![0.0; n];
        let mut alphab_hat = SymTensor2Field::zeros(self.grid);

        for (node, &w) in omega.values().iter().enumerate() {
            let st = self.stencil_at(w);
            let mut g = [0.0; 3];
            let mut h = [0.0; 3];
            let mut a = [0.0; 3];
            let mut c = [0.0; 3];
            let (mut trc, mut tt, mut tp, mut trb, mut kap, mut gl) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for m in 0..st.len {
                let wgt = st.weights[m];
                let s = &self.slices[st.base + m];
                let gm = s.gamma.g_at(node);
                let hm = s.chib_hat.at(node);
                for k in 0..3 {
                    g[k] += wgt * gm[k];
                    h[k] += wgt * hm[k];
                }
                if all {
                    let am = s.alphab_hat.at(node);
                    for k in 0..3 {
                        a[k] += wgt * am[k];
                    }
                    if let Some(ch) = &s.chi_hat {
                        let cm = ch.at(node);
                        for k in 0..3 {
                            c[k] += wgt * cm[k];
                        }
                    }
                    gl += wgt * s.g_ll.values()[node];
                }
                if let Some(f) = &s.tr_chi {
                    trc += wgt * f.values()[node];
                }
                if let Some(f) = &s.tau {
                    tt += wgt * f.theta[node];
                    tp += wgt * f.phi[node];
                }
                trb += wgt * s.tr_chib.values()[node];
                kap += wgt * s.kappa.values()[node];
            }
            gamma.set(node, g);
            chib_hat.set(node, h);
            alphab_hat.set(node, a);
            if let Some(f) = chi_hat.as_mut() {
                f.set(node, c);
            }
            if let Some(f) = tr_chi.as_mut() {
                f[node] = trc;
            }
            if let Some((ft, fp)) = tau.as_mut() {
                ft[node] = tt;
                fp[node] = tp;
            }
            tr_chib[node] = trb;
            kappa[node] = kap;
            g_ll[node] = gl;
        }

        let grid = self.grid;
        Ok(Slice {
            gamma: MetricField::new(gamma)?,
            tr_chi: tr_chi.map(|v| ScalarField::new(grid, v)).transpose()?,
            tau: tau.map(|(t, p)| CovectorField::new(grid, t, p)).transpose()?,
            chi_hat,
            tr_chib: ScalarField::new(grid, tr_chib)?,
            chib_hat,
            kappa: ScalarField::new(grid, kappa)?,
            g_ll: ScalarField::new(grid, g_ll)?,
            alphab_hat,
        })
    }

    /// Levels whose slice is weakly outer trapped (tr χ ≤ 0 at every node).
    pub fn weakly_trapped_levels(&self) -> Vec<usize> {
        self.slices
            .iter()
            .enumerate()
            .filter(|(_, s)| s.tr_chi.as_ref().is_some_and(|f| f.max() <= 0.0))
            .map(|(k, _)| k)
            .collect()
    }
}
