//! Gauss-Legendre rules and composite panel integration.

use crate::scalar::Real;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds an `n`-point rule. Nodes come from Newton iteration on the
    /// Legendre recurrence, carried out in double precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, w * half))
    }

    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[a, b]` into equal panels no longer than `max_len`.
pub fn panels<T: Real>(a: T, b: T, max_len: T) -> Vec<(T, T)> {
    let span = b - a;
    if span <= T::zero() {
        return Vec::new();
    }
    let count = (span / max_len).ceil().to_usize().unwrap_or(1).max(1);
    let h = span / T::from_usize_lossy(count);
    (0..count)
        .map(|k| {
            let lo = a + h * T::from_usize_lossy(k);
            let hi = if k + 1 == count { b } else { lo + h };
            (lo, hi)
        })
        .collect()
}

/// Composite rule: the same Gauss-Legendre rule on every panel.
pub fn composite_nodes<T: Real>(rule: &GaussLegendre<T>, a: T, b: T, max_len: T) -> Vec<(T, T)> {
    panels(a, b, max_len)
        .into_iter()
        .flat_map(|(lo, hi)| rule.mapped(lo, hi).collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::<f64>::new(32);
        let w: f64 = rule.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
        // degree 63 is the exactness limit; use x^20 on [0, 2]
        let v = rule.integrate(0.0, 2.0, |x| x.powi(20));
        assert!((v - 2f64.powi(21) / 21.0).abs() / v < 1e-13);
        let small = GaussLegendre::<f64>::new(3);
        assert!((small.integrate(0.0, 1.0, |x| x.powi(5)) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn composite_exponential() {
        let rule = GaussLegendre::<f64>::new(32);
        let nodes = composite_nodes(&rule, 0.0, 3.0, 0.1);
        let v: f64 = nodes.iter().map(|&(x, w)| w * (-40.0 * x).exp()).sum();
        assert!((v - (1.0 - (-120.0f64).exp()) / 40.0).abs() < 1e-15);
        assert_eq!(panels(0.0, 1.0, 0.3).len(), 4);
        assert!(panels(1.0, 1.0, 0.3).is_empty());
    }
}
