//! Small dense linear algebra: matrices, LU inversion and a real non-symmetric
//! eigendecomposition (Hessenberg reduction followed by shifted QR, after the
//! EISPACK `orthes`/`hqr2` procedures).

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Inverse by LU decomposition with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = a.max_abs();
        if scale == T::zero() {
            return Err(Error::Singular("zero matrix".into()));
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().partial_cmp(&a[(y, col)].abs()).unwrap())
                .unwrap();
            if a[(pivot, col)].abs() <= scale * T::epsilon() * T::from_usize_lossy(n) {
                return Err(Error::Singular(format!("pivot {col} vanishes")));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] / d;
                inv[(col, j)] = inv[(col, j)] / d;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] - f * a[(col, j)];
                    inv[(i, j)] = inv[(i, j)] - f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off <= T::epsilon() * T::epsilon() * a.max_abs().powi(2) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Real Schur-based eigendecomposition of a general square matrix.
///
/// `vectors` holds the eigenvectors column-wise. For a complex pair
/// `re ± i·im` stored at columns `(k, k+1)` the columns hold the real and
/// imaginary parts of the eigenvector, as in EISPACK.
#[derive(Debug, Clone)]
pub struct RealEigen<T> {
    pub re: Vec<T>,
    pub im: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Eigenvalues and eigenvectors of a general real matrix.
pub fn eigen_general<T: Real>(a: &Matrix<T>) -> Result<RealEigen<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut v = Matrix::identity(n);
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 1 {
        d[0] = a[(0, 0)];
        return Ok(RealEigen { re: d, im: e, vectors: v });
    }
    orthes(&mut h, &mut v);
    hqr2(&mut h, &mut v, &mut d, &mut e)?;
    Ok(RealEigen { re: d, im: e, vectors: v })
}

fn orthes<T: Real>(h: &mut Matrix<T>, v: &mut Matrix<T>) {
    let n = h.rows();
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh = hh + ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh = hh - ort[m] * g;
        ort[m] = ort[m] - g;
        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[(i, j)]).sum::<T>() / hh;
            for i in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[i];
            }
        }
        for i in 0..=high {
            let f = (m..=high).rev().map(|j| ort[j] * h[(i, j)]).sum::<T>() / hh;
            for j in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[j];
            }
        }
        ort[m] = scale * ort[m];
        h[(m, m - 1)] = scale * g;
    }
    *v = Matrix::identity(n);
    for m in (1..high).rev() {
        if h[(m, m - 1)] == T::zero() {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let mut g = (m..=high).map(|i| ort[i] * v[(i, j)]).sum::<T>();
            g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] = v[(i, j)] + g * ort[i];
            }
        }
    }
}

fn cdiv<T: Real>(xr: T, xi: T, yr: T, yi: T) -> (T, T) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr2<T: Real>(hm: &mut Matrix<T>, vm: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let nn = hm.rows() as isize;
    let low: isize = 0;
    let high: isize = nn - 1;
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let zero = T::zero();

    macro_rules! h {
        ($i:expr, $j:expr) => {
            hm[(($i) as usize, ($j) as usize)]
        };
    }
    macro_rules! vv {
        ($i:expr, $j:expr) => {
            vm[(($i) as usize, ($j) as usize)]
        };
    }

    let mut n = nn - 1;
    let mut exshift = zero;
    let (mut p, mut q, mut r, mut s, mut z) = (zero, zero, zero, zero, zero);
    let (mut t, mut w, mut x, mut y);

    let mut norm = zero;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm = norm + h!(i, j).abs();
        }
    }

    let mut iter = 0usize;
    let mut total_iter = 0usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = h!(l - 1, l - 1).abs() + h!(l, l).abs();
            if s == zero {
                s = norm;
            }
            if h!(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            h!(n, n) = h!(n, n) + exshift;
            d[n as usize] = h!(n, n);
            e[n as usize] = zero;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h!(n, n - 1) * h!(n - 1, n);
            p = (h!(n - 1, n - 1) - h!(n, n)) / two;
            q = p * p + w;
            z = q.abs().sqrt();
            h!(n, n) = h!(n, n) + exshift;
            h!(n - 1, n - 1) = h!(n - 1, n - 1) + exshift;
            x = h!(n, n);
            if q >= zero {
                z = if p >= zero { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != zero {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = zero;
                e[n as usize] = zero;
                x = h!(n, n - 1);
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p = p / r;
                q = q / r;
                for j in (n - 1)..nn {
                    z = h!(n - 1, j);
                    h!(n - 1, j) = q * z + p * h!(n, j);
                    h!(n, j) = q * h!(n, j) - p * z;
                }
                for i in 0..=n {
                    z = h!(i, n - 1);
                    h!(i, n - 1) = q * z + p * h!(i, n);
                    h!(i, n) = q * h!(i, n) - p * z;
                }
                for i in low..=high {
                    z = vv!(i, n - 1);
                    vv!(i, n - 1) = q * z + p * vv!(i, n);
                    vv!(i, n) = q * vv!(i, n) - p * z;
                }
            } else {
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h!(n, n);
            y = zero;
            w = zero;
            if l < n {
                y = h!(n - 1, n - 1);
                w = h!(n, n - 1) * h!(n - 1, n);
            }
            if iter == 10 {
                exshift = exshift + x;
                for i in low..=n {
                    h!(i, i) = h!(i, i) - x;
                }
                s = h!(n, n - 1).abs() + h!(n - 1, n - 2).abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) / two;
                s = s * s + w;
                if s > zero {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in low..=n {
                        h!(i, i) = h!(i, i) - s;
                    }
                    exshift = exshift + s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > 100 * nn as usize + 100 {
                return Err(Error::Singular("QR iteration did not converge".into()));
            }

            let mut m = n - 2;
            while m >= l {
                z = h!(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h!(m + 1, m) + h!(m, m + 1);
                q = h!(m + 1, m + 1) - z - r - s;
                r = h!(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                if h!(m, m - 1).abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h!(m - 1, m - 1).abs() + z.abs() + h!(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h!(i, i - 2) = zero;
                if i > m + 2 {
                    h!(i, i - 3) = zero;
                }
            }

            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = h!(k, k - 1);
                    q = h!(k + 1, k - 1);
                    r = if notlast { h!(k + 2, k - 1) } else { zero };
                    x = p.abs() + q.abs() + r.abs();
                    if x == zero {
                        k += 1;
                        continue;
                    }
                    p = p / x;
                    q = q / x;
                    r = r / x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < zero {
                    s = -s;
                }
                if s != zero {
                    if k != m {
                        h!(k, k - 1) = -s * x;
                    } else if l != m {
                        h!(k, k - 1) = -h!(k, k - 1);
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q = q / p;
                    r = r / p;
                    for j in k..nn {
                        p = h!(k, j) + q * h!(k + 1, j);
                        if notlast {
                            p = p + r * h!(k + 2, j);
                            h!(k + 2, j) = h!(k + 2, j) - p * z;
                        }
                        h!(k, j) = h!(k, j) - p * x;
                        h!(k + 1, j) = h!(k + 1, j) - p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * h!(i, k) + y * h!(i, k + 1);
                        if notlast {
                            p = p + z * h!(i, k + 2);
                            h!(i, k + 2) = h!(i, k + 2) - p * r;
                        }
                        h!(i, k) = h!(i, k) - p;
                        h!(i, k + 1) = h!(i, k + 1) - p * q;
                    }
                    for i in low..=high {
                        p = x * vv!(i, k) + y * vv!(i, k + 1);
                        if notlast {
                            p = p + z * vv!(i, k + 2);
                            vv!(i, k + 2) = vv!(i, k + 2) - p * r;
                        }
                        vv!(i, k) = vv!(i, k) - p;
                        vv!(i, k + 1) = vv!(i, k + 1) - p * q;
                    }
                }
                k += 1;
            }
        }
    }

    if norm == zero {
        return Ok(());
    }

    // Back-substitute to find vectors of the upper triangular form.
    for n in (0..nn).rev() {
        p = d[n as usize];
        q = e[n as usize];
        if q == zero {
            let mut l = n;
            h!(n, n) = T::one();
            for i in (0..n).rev() {
                w = h!(i, i) - p;
                r = zero;
                for j in l..=n {
                    r = r + h!(i, j) * h!(j, n);
                }
                if e[i as usize] < zero {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i as usize] == zero {
                        h!(i, n) = if w != zero { -r / w } else { -r / (eps * norm) };
                    } else {
                        x = h!(i, i + 1);
                        y = h!(i + 1, i);
                        q = (d[i as usize] - p) * (d[i as usize] - p) + e[i as usize] * e[i as usize];
                        t = (x * s - z * r) / q;
                        h!(i, n) = t;
                        h!(i + 1, n) = if x.abs() > z.abs() { (-r - w * t) / x } else { (-s - y * t) / z };
                    }
                    t = h!(i, n).abs();
                    if (eps * t) * t > T::one() {
                        for j in i..=n {
                            h!(j, n) = h!(j, n) / t;
                        }
                    }
                }
            }
        } else if q < zero {
            let mut l = n - 1;
            if h!(n, n - 1).abs() > h!(n - 1, n).abs() {
                h!(n - 1, n - 1) = q / h!(n, n - 1);
                h!(n - 1, n) = -(h!(n, n) - p) / h!(n, n - 1);
            } else {
                let (cr, ci) = cdiv(zero, -h!(n - 1, n), h!(n - 1, n - 1) - p, q);
                h!(n - 1, n - 1) = cr;
                h!(n - 1, n) = ci;
            }
            h!(n, n - 1) = zero;
            h!(n, n) = T::one();
            for i in (0..n - 1).rev() {
                let mut ra = zero;
                let mut sa = zero;
                for j in l..=n {
                    ra = ra + h!(i, j) * h!(j, n - 1);
                    sa = sa + h!(i, j) * h!(j, n);
                }
                w = h!(i, i) - p;
                if e[i as usize] < zero {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i as usize] == zero {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h!(i, n - 1) = cr;
                        h!(i, n) = ci;
                    } else {
                        x = h!(i, i + 1);
                        y = h!(i + 1, i);
                        let di = d[i as usize] - p;
                        let mut vr = di * di + e[i as usize] * e[i as usize] - q * q;
                        let vi = di * two * q;
                        if vr == zero && vi == zero {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h!(i, n - 1) = cr;
                        h!(i, n) = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h!(i + 1, n - 1) = (-ra - w * h!(i, n - 1) + q * h!(i, n)) / x;
                            h!(i + 1, n) = (-sa - w * h!(i, n) - q * h!(i, n - 1)) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h!(i, n - 1), -s - y * h!(i, n), z, q);
                            h!(i + 1, n - 1) = cr;
                            h!(i + 1, n) = ci;
                        }
                    }
                    t = h!(i, n - 1).abs().max(h!(i, n).abs());
                    if (eps * t) * t > T::one() {
                        for j in i..=n {
                            h!(j, n - 1) = h!(j, n - 1) / t;
                            h!(j, n) = h!(j, n) / t;
                        }
                    }
                }
            }
        }
    }

    for j in (low..nn).rev() {
        for i in low..=high {
            z = zero;
            for k in low..=j.min(high) {
                z = z + vv!(i, k) * h!(k, j);
            }
            vv!(i, j) = z;
        }
    }
    Ok(())
}
