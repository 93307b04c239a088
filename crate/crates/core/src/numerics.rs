//! One-dimensional helpers on uniform grids: cumulative quadrature,
//! finite-difference derivatives and local Lagrange interpolation.

/// Running integral F_k = ∫_{x_0}^{x_k} f of samples on a uniform grid,
/// fourth-order accurate (cubic through four neighbouring samples on every
/// interval). Needs at least four samples; with fewer it falls back to the
/// trapezoid rule.
pub fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        for k in 1..n {
            out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
        }
        return out;
    }
    let c = h / 24.0;
    for k in 0..n - 1 {
        let piece = if k == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k == n - 2 {
            c * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            c * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k + 1] = out[k] + piece;
    }
    out
}

/// Weights w_m such that Σ w_m f(x_m) = p'(x) for the interpolating
/// polynomial p through the nodes.
pub fn derivative_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|m| {
            let mut denom = 1.0;
            for q in 0..n {
                if q != m {
                    denom *= nodes[m] - nodes[q];
                }
            }
            let mut sum = 0.0;
            for skip in 0..n {
                if skip == m {
                    continue;
                }
                let mut p = 1.0;
                for q in 0..n {
                    if q != m && q != skip {
                        p *= x - nodes[q];
                    }
                }
                sum += p;
            }
            sum / denom
        })
        .collect()
}

/// Derivative of uniformly sampled data, sixth-order where seven samples
/// are available (centred in the interior, one-sided near the ends).
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = n.min(7);
    let half = width / 2;
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; width];
    (0..n)
        .map(|k| {
            let base = k.saturating_sub(half).min(n - width);
            let offset = k - base;
            let w = cache[offset].get_or_insert_with(|| {
                let nodes: Vec<f64> = (0..width).map(|m| m as f64).collect();
                derivative_weights(&nodes, offset as f64)
            });
            w.iter().zip(&f[base..base + width]).map(|(a, b)| a * b).sum::<f64>() / h
        })
        .collect()
}

/// Value at `x` of the Lagrange polynomial through (xs, ys).
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for m in 0..xs.len() {
        let mut p = ys[m];
        for q in 0..xs.len() {
            if q != m {
                p *= (x - xs[q]) / (xs[m] - xs[q]);
            }
        }
        total += p;
    }
    total
}

/// Inverse of a strictly increasing tabulation y_k = g(x_k): returns x
/// with g(x) = y by cubic interpolation of x as a function of y on the
/// four samples around the bracketing interval. `None` outside the range.
pub fn invert_monotone(xs: &[f64], ys: &[f64], y: f64) -> Option<f64> {
    let n = ys.len();
    if n < 2 || !(y >= ys[0] && y <= ys[n - 1]) {
        return None;
    }
    let k = match ys.binary_search_by(|v| v.partial_cmp(&y).expect("finite tabulation")) {
        Ok(k) => return Some(xs[k]),
        Err(k) => k - 1,
    };
    if n < 4 {
        let u = (y - ys[k]) / (ys[k + 1] - ys[k]);
        return Some(xs[k] + u * (xs[k + 1] - xs[k]));
    }
    // Solve the forward cubic through the nearest four nodes on [x_k, x_{k+1}].
    let base = k.saturating_sub(1).min(n - 4);
    let (px, py) = (&xs[base..base + 4], &ys[base..base + 4]);
    let (mut lo, mut hi) = (xs[k], xs[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lagrange(px, py, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
