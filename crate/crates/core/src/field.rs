//! Nodal fields on a [`SphereGrid`].

use crate::error::{Error, Result};
use crate::grid::SphereGrid;

/// Smallest admissible metric determinant.
pub const DET_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: SphereGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SphereGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "scalar field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: SphereGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: SphereGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: SphereGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.coordinates().map(|(t, p)| f(t, p)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination of two conforming fields.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovectorField {
    grid: SphereGrid,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl CovectorField {
    pub fn new(grid: SphereGrid, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.len() || phi.len() != grid.len() {
            return Err(Error::Shape("covector components do not match grid".into()));
        }
        Ok(Self { grid, theta, phi })
    }

    pub fn zeros(grid: SphereGrid) -> Self {
        Self {
            grid,
            theta: vec![0.0; grid.len()],
            phi: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn at(&self, node: usize) -> [f64; 2] {
        [self.theta[node], self.phi[node]]
    }
}

/// Symmetric 2-tensor stored as (T_θθ, T_θφ, T_φφ).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2Field {
    grid: SphereGrid,
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

impl SymTensor2Field {
    pub fn new(grid: SphereGrid, tt: Vec<f64>, tp: Vec<f64>, pp: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if tt.len() != n || tp.len() != n || pp.len() != n {
            return Err(Error::Shape("tensor components do not match grid".into()));
        }
        Ok(Self { grid, tt, tp, pp })
    }

    pub fn zeros(grid: SphereGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            tt: vec![0.0; n],
            tp: vec![0.0; n],
            pp: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: SphereGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (n, (t, p)) in grid.coordinates().enumerate() {
            let [a, b, c] = f(t, p);
            out.tt[n] = a;
            out.tp[n] = b;
            out.pp[n] = c;
        }
        out
    }

    /// Round metric of the sphere of radius `r(θ, φ)`.
    pub fn round(grid: SphereGrid, r: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |t, p| {
            let r2 = r(t, p).powi(2);
            [r2, 0.0, r2 * t.sin().powi(2)]
        })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, node: usize) -> [f64; 3] {
        [self.tt[node], self.tp[node], self.pp[node]]
    }

    #[inline]
    pub fn set(&mut self, node: usize, v: [f64; 3]) {
        self.tt[node] = v[0];
        self.tp[node] = v[1];
        self.pp[node] = v[2];
    }

    pub fn scaled(&self, c: &ScalarField) -> Result<Self> {
        ensure_same_grid(&self.grid, c.grid())?;
        let mut out = self.clone();
        for (n, &s) in c.values().iter().enumerate() {
            out.tt[n] *= s;
            out.tp[n] *= s;
            out.pp[n] *= s;
        }
        Ok(out)
    }

    pub fn max_abs_component(&self) -> f64 {
        self.tt
            .iter()
            .chain(&self.tp)
            .chain(&self.pp)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Positive-definite metric with cached inverse and area element.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    g: SymTensor2Field,
    inv: SymTensor2Field,
    sqrt_det: Vec<f64>,
}

impl MetricField {
    pub fn new(g: SymTensor2Field) -> Result<Self> {
        let grid = *g.grid();
        let mut inv = SymTensor2Field::zeros(grid);
        let mut sqrt_det = vec![0.0; grid.len()];
        for n in 0..grid.len() {
            let [a, b, c] = g.at(n);
            let det = a * c - b * b;
            if !(det > DET_FLOOR) || !(a > 0.0) {
                return Err(Error::Definiteness { node: n, det });
            }
            inv.set(n, [c / det, -b / det, a / det]);
            sqrt_det[n] = det.sqrt();
        }
        Ok(Self { g, inv, sqrt_det })
    }

    /// Unit round metric dθ² + sin²θ dφ².
    pub fn unit_sphere(grid: SphereGrid) -> Self {
        Self::new(SymTensor2Field::round(grid, |_, _| 1.0)).expect("round metric is definite")
    }

    pub fn grid(&self) -> &SphereGrid {
        self.g.grid()
    }

    pub fn tensor(&self) -> &SymTensor2Field {
        &self.g
    }

    pub fn inverse(&self) -> &SymTensor2Field {
        &self.inv
    }

    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    #[inline]
    pub fn g_at(&self, node: usize) -> [f64; 3] {
        self.g.at(node)
    }

    #[inline]
    pub fn inv_at(&self, node: usize) -> [f64; 3] {
        self.inv.at(node)
    }

    /// Largest |g·g⁻¹ − I| entry relative to the metric scale.
    pub fn inverse_residual(&self) -> f64 {
        (0..self.grid().len())
            .map(|n| {
                let [a, b, c] = self.g_at(n);
                let [ia, ib, ic] = self.inv_at(n);
                let scale = a.abs().max(c.abs()).max(1.0) * ia.abs().max(ic.abs()).max(1.0);
                let m00 = a * ia + b * ib - 1.0;
                let m01 = a * ib + b * ic;
                let m10 = b * ia + c * ib;
                let m11 = b * ib + c * ic - 1.0;
                m00.abs().max(m01.abs()).max(m10.abs()).max(m11.abs()) / scale
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn ensure_same_grid(a: &SphereGrid, b: &SphereGrid) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "fields live on different grids ({}x{} {} vs {}x{} {})",
            a.n_theta(),
            a.n_phi(),
            a.mode(),
            b.n_theta(),
            b.n_phi(),
            b.mode()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_inverse_is_accurate() {
        let grid = SphereGrid::full(12, 12).unwrap();
        let g = SymTensor2Field::from_fn(grid, |t, p| {
            let s = t.sin();
            [2.0 + p.cos(), 0.3 * s * p.sin(), (1.5 + 0.2 * t.cos()) * s * s]
        });
        let m = MetricField::new(g).unwrap();
        assert!(m.inverse_residual() < 1e-12);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let grid = SphereGrid::axisymmetric(8).unwrap();
        let g = SymTensor2Field::from_fn(grid, |_, _| [1.0, 1.0, 1.0]);
        assert!(matches!(
            MetricField::new(g),
            Err(Error::Definiteness { .. })
        ));
    }

    #[test]
    fn shape_errors_are_reported() {
        let a = SphereGrid::axisymmetric(8).unwrap();
        let b = SphereGrid::axisymmetric(16).unwrap();
        assert!(ScalarField::new(a, vec![0.0; 3]).is_err());
        let fa = ScalarField::zeros(a);
        let fb = ScalarField::zeros(b);
        assert!(matches!(fa.zip_with(&fb, |x, _| x), Err(Error::Shape(_))));
    }
}
