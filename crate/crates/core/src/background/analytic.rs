use super::{raychaudhuri_propagate, BackgroundFoliation, InitialSlice, LambdaGrid, Slice, Sources};
use crate::error::{Error, Result};
use crate::field::{CovectorField, MetricField, ScalarField, SymTensor2Field};
use crate::grid::SphereGrid;

/// A scalar profile, either constant or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// One value per sample (per node for angular profiles, per λ-level
    /// for profiles along the generator).
    Samples(Vec<f64>),
}

impl Profile {
    fn expand(&self, len: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Profile::Constant(c) => Ok(vec![*c; len]),
            Profile::Samples(v) if v.len() == len => Ok(v.clone()),
            Profile::Samples(v) => Err(Error::Shape(format!(
                "{what} profile has {} samples, expected {len}",
                v.len()
            ))),
        }
    }
}

/// Closed-form backgrounds. The coordinate along the generator is
/// λ = r − r₀, so the areal radius of Σ_λ is r₀ + λ.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticBackground {
    MinkowskiCone {
        r0: f64,
    },
    /// Ingoing cone v = const in Eddington–Finkelstein coordinates,
    /// generated by the past-directed k = ∂_r.
    SchwarzschildCone {
        mass: f64,
        r0: f64,
    },
    /// Round, shear-free, affine data with an arbitrary energy density
    /// G(k,k) along the generator and an angular profile of tr χ̲ on the
    /// base slice. The base slice is the unit-radius round sphere scaled by
    /// `r0`. Only k-side fields are produced.
    ShearFreeCustom {
        r0: f64,
        tr_chib0: Profile,
        g_kk: Profile,
    },
}

impl AnalyticBackground {
    fn r0(&self) -> f64 {
        match self {
            Self::MinkowskiCone { r0 }
            | Self::SchwarzschildCone { r0, .. }
            | Self::ShearFreeCustom { r0, .. } => *r0,
        }
    }
}

pub fn build_analytic(
    spec: &AnalyticBackground,
    grid: SphereGrid,
    lambda: LambdaGrid,
) -> Result<BackgroundFoliation> {
    let r0 = spec.r0();
    if !r0.is_finite() || !lambda.max().is_finite() {
        return Err(Error::Domain("base radius and lambda range must be finite".into()));
    }
    for k in 0..lambda.count {
        let r = r0 + lambda.value(k);
        if !(r > 0.0) {
            return Err(Error::Domain(format!(
                "areal radius r0 + lambda = {r} is not positive at lambda = {}",
                lambda.value(k)
            )));
        }
    }

    match spec {
        AnalyticBackground::MinkowskiCone { r0 } => schwarzschild(0.0, *r0, grid, lambda),
        AnalyticBackground::SchwarzschildCone { mass, r0 } => {
            if !(*mass >= 0.0) {
                return Err(Error::Domain(format!("mass must be non-negative, got {mass}")));
            }
            schwarzschild(*mass, *r0, grid, lambda)
        }
        AnalyticBackground::ShearFreeCustom {
            r0,
            tr_chib0,
            g_kk,
        } => {
            let tr0 = tr_chib0.expand(grid.len(), "tr_chib0")?;
            let g = g_kk.expand(lambda.count, "g_kk")?;
            let initial = InitialSlice {
                gamma: MetricField::new(SymTensor2Field::round(grid, |_, _| *r0))?,
                tr_chib: ScalarField::new(grid, tr0)?,
                chib_hat: SymTensor2Field::zeros(grid),
            };
            let sources = Sources {
                kappa: vec![ScalarField::zeros(grid); lambda.count],
                g_ll: g.iter().map(|&v| ScalarField::constant(grid, v)).collect(),
                alphab_hat: vec![SymTensor2Field::zeros(grid); lambda.count],
            };
            raychaudhuri_propagate(&initial, &sources, lambda)
        }
    }
}

fn schwarzschild(
    mass: f64,
    r0: f64,
    grid: SphereGrid,
    lambda: LambdaGrid,
) -> Result<BackgroundFoliation> {
    let slices = lambda
        .values()
        .map(|l| {
            let r = r0 + l;
            Ok(Slice {
                gamma: MetricField::new(SymTensor2Field::round(grid, |_, _| r))?,
                tr_chi: Some(ScalarField::constant(grid, (2.0 / r) * (1.0 - 2.0 * mass / r))),
                tau: Some(CovectorField::zeros(grid)),
                chi_hat: Some(SymTensor2Field::zeros(grid)),
                tr_chib: ScalarField::constant(grid, 2.0 / r),
                chib_hat: SymTensor2Field::zeros(grid),
                kappa: ScalarField::zeros(grid),
                g_ll: ScalarField::zeros(grid),
                alphab_hat: SymTensor2Field::zeros(grid),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BackgroundFoliation::new(lambda, true, slices)
}
