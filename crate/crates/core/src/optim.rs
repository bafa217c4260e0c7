//! Derivative-free minimizers: golden-section search for scalar problems and
//! Nelder-Mead simplex for small boxes.

use crate::scalar::Real;

/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMin<T> {
    pub x: T,
    pub value: T,
    /// Minimizer lies within tolerance of the lower search bound.
    pub at_lower: bool,
    /// Minimizer lies within tolerance of the upper search bound.
    pub at_upper: bool,
}

/// Golden-section search on `[lo, hi]` preceded by a uniform grid scan that
/// picks the bracket around the smallest sampled value. Non-finite objective
/// values are treated as `+inf`.
pub fn golden_section<T: Real>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    grid: usize,
    tol: T,
) -> ScalarMin<T> {
    let mut eval = |x: T| {
        let v = f(x);
        if v.is_finite() { v } else { T::infinity() }
    };
    let grid = grid.max(2);
    let step = (hi - lo) / T::from_usize_lossy(grid);
    let xs: Vec<T> = (0..=grid).map(|k| if k == grid { hi } else { lo + step * T::from_usize_lossy(k) }).collect();
    let vals: Vec<T> = xs.iter().map(|&x| eval(x)).collect();
    let best = (0..vals.len())
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(grid)];

    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = eval(c);
    let mut fd = eval(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 500 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = eval(d);
        }
        iters += 1;
    }
    let mut x = (a + b) / T::lit(2.0);
    let mut value = eval(x);
    // the grid endpoints are not visited by the interior search
    for (&xe, &ve) in [(&xs[0], &vals[0]), (&xs[grid], &vals[grid])] {
        if ve < value {
            x = xe;
            value = ve;
        }
    }
    let edge = tol * T::lit(10.0);
    ScalarMin { x, value, at_lower: x - lo <= edge, at_upper: hi - x <= edge }
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexMin {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex in the box `[lower, upper]` (points are clamped into
/// the box). Stops when the spread of simplex values drops below `ftol`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    ftol: f64,
    max_iter: usize,
) -> SimplexMin {
    let n = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        let span = upper[i] - lower[i];
        let step = 0.1 * span;
        p[i] = if p[i] + step <= upper[i] { p[i] + step } else { p[i] - step };
        clamp(&mut p);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= ftol * (1.0 + values[0].abs()) {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clamp(&mut p);
            p
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    let mut p: Vec<f64> = (0..n).map(|j| best[j] + 0.5 * (simplex[i][j] - best[j])).collect();
                    clamp(&mut p);
                    values[i] = eval(&p);
                    simplex[i] = p;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap()).unwrap();
    SimplexMin { x: simplex[best].clone(), value: values[best], iterations, converged }
}
