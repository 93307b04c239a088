//! Transport of the k-side slice data along each null generator.
//!
//! Along a generator the induced metric, the expansion and the traceless
//! shear obey
//!
//! ```text
//! ∂_λ γ      = 2 χ̲ = 2 χ̲̂ + tr χ̲ γ
//! ∂_λ tr χ̲   = −½ (tr χ̲)² − |χ̲̂|² − G(L̲,L̲) + κ tr χ̲
//! ∂_λ χ̲̂      = −α̲̂ + |χ̲̂|² γ + κ χ̲̂
//! ```
//!
//! which is a closed ODE system per sphere node.

use super::{stencil, BackgroundFoliation, Interpolation, LambdaGrid, Slice};
use crate::calculus::{norm_sq_at, trace_at};
use crate::error::{Error, Result};
use crate::field::{MetricField, ScalarField, SymTensor2Field, DET_FLOOR};
use crate::grid::SphereGrid;
use crate::par::map_indices;

/// |tr χ̲| at or beyond this value is treated as a focal point.
pub const FOCAL_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSlice {
    pub gamma: MetricField,
    pub tr_chib: ScalarField,
    pub chib_hat: SymTensor2Field,
}

/// Source terms sampled on every λ-level.
#[derive(Debug, Clone, PartialEq)]
pub struct Sources {
    pub kappa: Vec<ScalarField>,
    pub g_ll: Vec<ScalarField>,
    pub alphab_hat: Vec<SymTensor2Field>,
}

type State = [f64; 7];

#[derive(Clone, Copy)]
struct Source {
    kappa: f64,
    g: f64,
    alpha: [f64; 3],
}

enum Failure {
    Focal(usize),
    Degenerate(usize),
}

fn inverse(g: [f64; 3]) -> Option<[f64; 3]> {
    let det = g[0] * g[2] - g[1] * g[1];
    (det > DET_FLOOR && g[0] > 0.0).then(|| [g[2] / det, -g[1] / det, g[0] / det])
}

fn project_traceless(inv: [f64; 3], g: [f64; 3], t: [f64; 3]) -> [f64; 3] {
    let half = 0.5 * trace_at(inv, t);
    std::array::from_fn(|k| t[k] - half * g[k])
}

fn rhs(y: &State, src: &Source) -> Option<State> {
    let g = [y[0], y[1], y[2]];
    let tr = y[3];
    let h = [y[4], y[5], y[6]];
    let inv = inverse(g)?;
    let h2 = norm_sq_at(inv, h);
    let alpha = project_traceless(inv, g, src.alpha);
    let mut d = [0.0; 7];
    for k in 0..3 {
        d[k] = 2.0 * h[k] + tr * g[k];
        d[4 + k] = -alpha[k] + h2 * g[k] + src.kappa * h[k];
    }
    d[3] = -0.5 * tr * tr - h2 - src.g + src.kappa * tr;
    Some(d)
}

fn axpy(y: &State, a: f64, d: &State) -> State {
    std::array::from_fn(|k| y[k] + a * d[k])
}

/// Fourth-order Runge–Kutta integration of the optical equations from the
/// initial slice over the whole λ-grid. Sources between lattice levels are
/// obtained by cubic interpolation in λ.
pub fn raychaudhuri_propagate(
    initial: &InitialSlice,
    sources: &Sources,
    lambda: LambdaGrid,
) -> Result<BackgroundFoliation> {
    let grid = *initial.gamma.grid();
    let count = lambda.count;
    if sources.kappa.len() != count
        || sources.g_ll.len() != count
        || sources.alphab_hat.len() != count
    {
        return Err(Error::Lattice(format!(
            "source fields must be sampled on all {count} lambda levels"
        )));
    }
    if count < 4 {
        return Err(Error::Lattice("need at least four lambda levels".into()));
    }
    for f in [&initial.tr_chib] {
        if f.grid() != &grid {
            return Err(Error::Shape("initial data do not share a grid".into()));
        }
    }
    if initial.chib_hat.grid() != &grid
        || sources.kappa.iter().any(|f| f.grid() != &grid)
        || sources.g_ll.iter().any(|f| f.grid() != &grid)
        || sources.alphab_hat.iter().any(|f| f.grid() != &grid)
    {
        return Err(Error::Shape("sources do not conform to the initial grid".into()));
    }

    let source_at = |node: usize, t: f64| -> Source {
        let st = stencil(t, count, Interpolation::Cubic);
        let mut s = Source {
            kappa: 0.0,
            g: 0.0,
            alpha: [0.0; 3],
        };
        for m in 0..st.len {
            let w = st.weights[m];
            let k = st.base + m;
            s.kappa += w * sources.kappa[k].values()[node];
            s.g += w * sources.g_ll[k].values()[node];
            let a = sources.alphab_hat[k].at(node);
            for c in 0..3 {
                s.alpha[c] += w * a[c];
            }
        }
        s
    };

    let h = lambda.step;
    let rays: Vec<std::result::Result<Vec<State>, Failure>> = map_indices(grid.len(), |node| {
        let g0 = initial.gamma.g_at(node);
        let h0 = initial.chib_hat.at(node);
        let mut y: State = [
            g0[0],
            g0[1],
            g0[2],
            initial.tr_chib.values()[node],
            h0[0],
            h0[1],
            h0[2],
        ];
        let mut out = Vec::with_capacity(count);
        out.push(y);
        for k in 0..count - 1 {
            let s0 = source_at(node, k as f64);
            let sm = source_at(node, k as f64 + 0.5);
            let s1 = source_at(node, (k + 1) as f64);
            let step = || -> Option<State> {
                let k1 = rhs(&y, &s0)?;
                let k2 = rhs(&axpy(&y, 0.5 * h, &k1), &sm)?;
                let k3 = rhs(&axpy(&y, 0.5 * h, &k2), &sm)?;
                let k4 = rhs(&axpy(&y, h, &k3), &s1)?;
                Some(std::array::from_fn(|c| {
                    y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
                }))
            };
            let Some(mut next) = step() else {
                // Area collapsing within the step: the generators focus.
                if y[3] < 0.0 && -y[3] * h > 0.25 {
                    return Err(Failure::Focal(k + 1));
                }
                return Err(Failure::Degenerate(k));
            };
            if next.iter().any(|v| !v.is_finite()) || next[3].abs() >= FOCAL_LIMIT {
                return Err(Failure::Focal(k + 1));
            }
            let g = [next[0], next[1], next[2]];
            let Some(inv) = inverse(g) else {
                if y[3] < 0.0 && -y[3] * h > 0.25 {
                    return Err(Failure::Focal(k + 1));
                }
                return Err(Failure::Degenerate(k + 1));
            };
            let hh = project_traceless(inv, g, [next[4], next[5], next[6]]);
            next[4..7].copy_from_slice(&hh);
            y = next;
            out.push(y);
        }
        Ok(out)
    });

    let mut focal: Option<usize> = None;
    let mut degenerate: Option<usize> = None;
    for r in &rays {
        match r {
            Err(Failure::Focal(k)) => focal = Some(focal.map_or(*k, |f| f.min(*k))),
            Err(Failure::Degenerate(k)) => {
                degenerate = Some(degenerate.map_or(*k, |f| f.min(*k)))
            }
            Ok(_) => {}
        }
    }
    match (focal, degenerate) {
        (Some(f), d) if d.is_none_or(|d| f <= d) => {
            return Err(Error::FocalPointReached {
                lambda: lambda.value(f),
                last_valid: lambda.value(f - 1),
            })
        }
        (_, Some(d)) => {
            return Err(Error::Geometry(format!(
                "induced metric lost definiteness near lambda = {}",
                lambda.value(d)
            )))
        }
        _ => {}
    }

    let rays: Vec<Vec<State>> = rays.into_iter().map(|r| r.ok().expect("checked")).collect();
    let affine = sources
        .kappa
        .iter()
        .all(|f| f.values().iter().all(|&v| v == 0.0));
    let slices = (0..count)
        .map(|k| assemble(grid, &rays, k, sources))
        .collect::<Result<Vec<_>>>()?;
    BackgroundFoliation::new(lambda, affine, slices)
}

fn assemble(grid: SphereGrid, rays: &[Vec<State>], k: usize, sources: &Sources) -> Result<Slice> {
    let n = grid.len();
    let mut gamma = SymTensor2Field::zeros(grid);
    let mut chib_hat = SymTensor2Field::zeros(grid);
    let mut tr = vec![0.0; n];
    for (node, ray) in rays.iter().enumerate() {
        let y = ray[k];
        gamma.set(node, [y[0], y[1], y[2]]);
        chib_hat.set(node, [y[4], y[5], y[6]]);
        tr[node] = y[3];
    }
    let gamma = MetricField::new(gamma)?;
    let mut alphab_hat = sources.alphab_hat[k].clone();
    for node in 0..n {
        let a = project_traceless(gamma.inv_at(node), gamma.g_at(node), alphab_hat.at(node));
        alphab_hat.set(node, a);
    }
    Ok(Slice {
        gamma,
        tr_chi: None,
        tau: None,
        chi_hat: None,
        tr_chib: ScalarField::new(grid, tr)?,
        chib_hat,
        kappa: sources.kappa[k].clone(),
        g_ll: sources.g_ll[k].clone(),
        alphab_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vacuum(grid: SphereGrid, count: usize) -> Sources {
        Sources {
            kappa: vec![ScalarField::zeros(grid); count],
            g_ll: vec![ScalarField::zeros(grid); count],
            alphab_hat: vec![SymTensor2Field::zeros(grid); count],
        }
    }

    fn round_initial(grid: SphereGrid, r: f64, tr: f64) -> InitialSlice {
        InitialSlice {
            gamma: MetricField::new(SymTensor2Field::round(grid, |_, _| r)).unwrap(),
            tr_chib: ScalarField::constant(grid, tr),
            chib_hat: SymTensor2Field::zeros(grid),
        }
    }

    #[test]
    fn schwarzschild_regression() {
        let grid = SphereGrid::axisymmetric(6).unwrap();
        let l = LambdaGrid::new(0.0, 1e-2, 301).unwrap();
        let bg = raychaudhuri_propagate(&round_initial(grid, 1.0, 2.0), &vacuum(grid, 301), l).unwrap();
        for (k, s) in bg.slices().iter().enumerate() {
            let r = 1.0 + l.value(k);
            assert!((s.tr_chib.values()[2] - 2.0 / r).abs() < 1e-8);
            let want = r * r;
            assert!((s.gamma.g_at(2)[0] - want).abs() < 1e-8 * want);
            assert_eq!(s.chib_hat.max_abs_component(), 0.0);
        }
        assert!(bg.is_affine());
    }

    #[test]
    fn converging_generators_hit_a_focal_point() {
        let grid = SphereGrid::axisymmetric(4).unwrap();
        // tr χ̲ = −2/(1 − λ) blows up at λ = 1.
        let l = LambdaGrid::new(0.0, 1e-2, 201).unwrap();
        let e = raychaudhuri_propagate(&round_initial(grid, 1.0, -2.0), &vacuum(grid, 201), l);
        match e {
            Err(Error::FocalPointReached { lambda, last_valid }) => {
                assert!(lambda > 0.9 && lambda < 1.01, "{lambda}");
                assert!(last_valid < lambda);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonzero_source_shear_stays_traceless() {
        let grid = SphereGrid::full(6, 8).unwrap();
        let count = 51;
        let l = LambdaGrid::new(0.0, 2e-2, count).unwrap();
        let mut src = vacuum(grid, count);
        for (k, a) in src.alphab_hat.iter_mut().enumerate() {
            let r = 1.0 + l.value(k);
            *a = SymTensor2Field::from_fn(grid, |t, p| {
                let s = t.sin();
                let c = 0.05 * (1.0 + p.cos());
                [c * r * r, 0.02 * r * r * s, -c * r * r * s * s]
            });
        }
        let bg = raychaudhuri_propagate(&round_initial(grid, 1.0, 2.0), &src, l).unwrap();
        let last = bg.slice(count - 1);
        assert!(last.chib_hat.max_abs_component() > 1e-3);
        for n in 0..grid.len() {
            let inv = last.gamma.inv_at(n);
            assert!(trace_at(inv, last.chib_hat.at(n)).abs() < 1e-12);
        }
    }
}
