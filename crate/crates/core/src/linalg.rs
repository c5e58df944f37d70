//! Dense eigensolvers and small linear-algebra utilities.
//!
//! * Nonsymmetric eigenvalues: Householder reduction to upper Hessenberg form,
//!   then shifted QR. Real input uses the implicit Francis double shift in
//!   real arithmetic; complex input uses a Wilkinson single shift.
//! * Eigenvectors: inverse iteration with the shift nudged by
//!   `1e-10·‖M‖` so the shifted matrix is never exactly singular.
//! * Symmetric tridiagonal: implicit-shift QL with vector accumulation.
//!
//! Eigenvalues are reported sorted by real part, then imaginary part.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default dimension cap for [`eig_dense`].
pub const DEFAULT_MAX_DIM: usize = 4096;
/// QR sweeps allowed per unit of dimension.
const ITERATIONS_PER_DIM: usize = 40;
/// Subdiagonal deflation tolerance relative to the neighbouring diagonal.
const DEFLATION_TOL: f64 = 1e-14;
/// Relative shift nudge used by inverse iteration.
const INVERSE_ITERATION_NUDGE: f64 = 1e-10;
/// Residual contract, relative to `‖M‖`.
const RESIDUAL_CONTRACT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenReport {
    /// Sorted by (real part, imaginary part).
    pub values: Vec<C64>,
    /// Column `i` is the unit-norm eigenvector for `values[i]`, when requested.
    pub vectors: Option<Array2<C64>>,
    /// `‖Mv − λv‖/‖v‖` aligned with `values`; empty when vectors were not requested.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EigenReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    pub vectors: bool,
    pub max_dim: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { vectors: true, max_dim: DEFAULT_MAX_DIM }
    }
}

/// All eigenvalues and eigenvectors of a square complex matrix.
pub fn eig_dense(m: &Array2<C64>) -> Result<EigenReport> {
    eig_dense_with(m, EigOptions::default())
}

/// Eigenvalues only.
pub fn eigvals_dense(m: &Array2<C64>) -> Result<EigenReport> {
    eig_dense_with(m, EigOptions { vectors: false, ..EigOptions::default() })
}

pub fn eig_dense_with(m: &Array2<C64>, opts: EigOptions) -> Result<EigenReport> {
    let n = check_square(m)?;
    if n > opts.max_dim {
        return Err(Error::TooLarge { dim: n, cap: opts.max_dim });
    }
    if n == 0 {
        return Ok(EigenReport {
            values: Vec::new(),
            vectors: opts.vectors.then(|| Array2::zeros((0, 0))),
            residuals: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }

    let is_real = m.iter().all(|z| z.im == 0.0);
    let (mut values, iterations, converged) = if is_real {
        let mut h = m.mapv(|z| z.re);
        real_hessenberg(&mut h);
        real_hqr(&mut h)
    } else {
        let mut h = m.clone();
        complex_hessenberg(&mut h);
        complex_hqr(&mut h)
    };
    sort_values(&mut values);

    let mut report = EigenReport { values, vectors: None, residuals: Vec::new(), iterations, converged };
    if opts.vectors {
        let norm = frobenius_norm(m).max(f64::MIN_POSITIVE);
        let mut vecs = Array2::zeros((n, report.values.len()));
        let mut residuals = Vec::with_capacity(report.values.len());
        for (i, &lambda) in report.values.iter().enumerate() {
            let v = inverse_iteration(m, lambda, norm)?;
            residuals.push(residual(m, lambda, &v)?);
            vecs.column_mut(i).assign(&v);
        }
        if residuals.iter().any(|r| *r > RESIDUAL_CONTRACT * norm) {
            report.converged = false;
        }
        report.vectors = Some(vecs);
        report.residuals = residuals;
    }
    Ok(report)
}

fn check_square<T>(m: &Array2<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn sort_values(values: &mut [C64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

// Householder reduction of a real matrix to upper Hessenberg form, in place.
fn real_hessenberg(h: &mut Array2<f64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let alpha: f64 = (k + 1..n).map(|i| h[[i, k]] * h[[i, k]]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        let s = if v[0] >= 0.0 { alpha } else { -alpha };
        v[0] += s;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H ← P H
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * h[[k + 1 + t, j]]).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in v.iter().enumerate() {
                h[[k + 1 + t, j]] -= f * vi;
            }
        }
        // H ← H P
        for i in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * h[[i, k + 1 + t]]).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in v.iter().enumerate() {
                h[[i, k + 1 + t]] -= f * vi;
            }
        }
        for i in k + 2..n {
            h[[i, k]] = 0.0;
        }
    }
}

fn complex_hessenberg(h: &mut Array2<C64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let alpha: f64 = (k + 1..n).map(|i| h[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        let phase = if v[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // P = I − 2 v v^H / (v^H v)
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * h[[k + 1 + t, j]]).sum();
            let f = dot * (2.0 / vnorm2);
            for (t, vi) in v.iter().enumerate() {
                h[[k + 1 + t, j]] -= f * vi;
            }
        }
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| h[[i, k + 1 + t]] * vi).sum();
            let f = dot * (2.0 / vnorm2);
            for (t, vi) in v.iter().enumerate() {
                h[[i, k + 1 + t]] -= f * vi.conj();
            }
        }
        for i in k + 2..n {
            h[[i, k]] = C64::new(0.0, 0.0);
        }
    }
}

fn real_hessenberg_norm(h: &Array2<f64>) -> f64 {
    h.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

/// Index `l` of the top of the unreduced block ending at `hi`; zeroes the
/// negligible subdiagonal it finds.
fn real_find_split(h: &mut Array2<f64>, hi: usize, norm: f64) -> usize {
    let mut l = hi;
    while l > 0 {
        let mut s = h[[l - 1, l - 1]].abs() + h[[l, l]].abs();
        if s == 0.0 {
            s = norm;
        }
        if h[[l, l - 1]].abs() <= DEFLATION_TOL * s {
            h[[l, l - 1]] = 0.0;
            break;
        }
        l -= 1;
    }
    l
}

fn two_by_two_eigenvalues(a: f64, b: f64, c: f64, d: f64) -> (C64, C64) {
    let p = 0.5 * (a - d);
    let bc = b * c;
    let q = p * p + bc;
    if q >= 0.0 {
        let z = if p >= 0.0 { p + q.sqrt() } else { p - q.sqrt() };
        let l1 = d + z;
        let l2 = if z != 0.0 { d - bc / z } else { l1 };
        (C64::new(l1, 0.0), C64::new(l2, 0.0))
    } else {
        let im = (-q).sqrt();
        (C64::new(d + p, im), C64::new(d + p, -im))
    }
}

fn householder3(x: f64, y: f64, z: f64) -> Option<([f64; 3], f64)> {
    let alpha = (x * x + y * y + z * z).sqrt();
    if alpha == 0.0 {
        return None;
    }
    let v0 = x + if x >= 0.0 { alpha } else { -alpha };
    let v = [v0, y, z];
    let vn2 = v0 * v0 + y * y + z * z;
    Some((v, 2.0 / vn2))
}

/// Francis double-shift QR on a real Hessenberg matrix; eigenvalues only.
fn real_hqr(h: &mut Array2<f64>) -> (Vec<C64>, usize, bool) {
    let n = h.nrows();
    let norm = real_hessenberg_norm(h);
    let cap = ITERATIONS_PER_DIM * n;
    let mut values = Vec::with_capacity(n);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n as isize - 1;

    while hi >= 0 {
        let u = hi as usize;
        let l = real_find_split(h, u, norm);
        if l == u {
            values.push(C64::new(h[[u, u]], 0.0));
            hi -= 1;
            its = 0;
            continue;
        }
        if l + 1 == u {
            let (e1, e2) = two_by_two_eigenvalues(h[[u - 1, u - 1]], h[[u - 1, u]], h[[u, u - 1]], h[[u, u]]);
            values.push(e1);
            values.push(e2);
            hi -= 2;
            its = 0;
            continue;
        }
        if total >= cap {
            return (values, total, false);
        }
        total += 1;
        its += 1;

        // shift polynomial (H − σ₁)(H − σ₂) through its trace and determinant
        let (s, t) = if its.is_multiple_of(10) {
            let e = h[[u, u - 1]].abs() + h[[u - 1, u - 2]].abs();
            let a = 0.75 * e + h[[u, u]];
            (2.0 * a, a * a + 0.4375 * e * e)
        } else {
            let a = h[[u - 1, u - 1]];
            let b = h[[u - 1, u]];
            let c = h[[u, u - 1]];
            let d = h[[u, u]];
            (a + d, a * d - b * c)
        };

        let mut x = h[[l, l]] * h[[l, l]] + h[[l, l + 1]] * h[[l + 1, l]] - s * h[[l, l]] + t;
        let mut y = h[[l + 1, l]] * (h[[l, l]] + h[[l + 1, l + 1]] - s);
        let mut z = h[[l + 1, l]] * h[[l + 2, l + 1]];
        for k in l..u - 1 {
            if let Some((v, beta)) = householder3(x, y, z) {
                let q = if k == l { l } else { k - 1 };
                for j in q..=u {
                    let dot = v[0] * h[[k, j]] + v[1] * h[[k + 1, j]] + v[2] * h[[k + 2, j]];
                    let f = beta * dot;
                    h[[k, j]] -= f * v[0];
                    h[[k + 1, j]] -= f * v[1];
                    h[[k + 2, j]] -= f * v[2];
                }
                let r = (k + 3).min(u);
                for i in l..=r {
                    let dot = v[0] * h[[i, k]] + v[1] * h[[i, k + 1]] + v[2] * h[[i, k + 2]];
                    let f = beta * dot;
                    h[[i, k]] -= f * v[0];
                    h[[i, k + 1]] -= f * v[1];
                    h[[i, k + 2]] -= f * v[2];
                }
            }
            x = h[[k + 1, k]];
            y = h[[k + 2, k]];
            if k + 3 <= u {
                z = h[[k + 3, k]];
            }
        }
        // final 2-vector reflection
        let alpha = (x * x + y * y).sqrt();
        if alpha != 0.0 {
            let v0 = x + if x >= 0.0 { alpha } else { -alpha };
            let beta = 2.0 / (v0 * v0 + y * y);
            let k = u - 1;
            for j in (k - 1)..=u {
                let f = beta * (v0 * h[[k, j]] + y * h[[k + 1, j]]);
                h[[k, j]] -= f * v0;
                h[[k + 1, j]] -= f * y;
            }
            for i in l..=u {
                let f = beta * (v0 * h[[i, k]] + y * h[[i, k + 1]]);
                h[[i, k]] -= f * v0;
                h[[i, k + 1]] -= f * y;
            }
        }
        for i in l + 2..=u {
            for j in l..i - 1 {
                h[[i, j]] = 0.0;
            }
        }
    }
    (values, total, true)
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    // returns (c, s) with [c s; −s̄ c] · (a, b)ᵀ = (r, 0)ᵀ, c real
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Single-shift QR with Wilkinson shifts on a complex Hessenberg matrix.
fn complex_hqr(h: &mut Array2<C64>) -> (Vec<C64>, usize, bool) {
    let n = h.nrows();
    let norm = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let cap = ITERATIONS_PER_DIM * n;
    let mut values = Vec::with_capacity(n);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n as isize - 1;
    let zero = C64::new(0.0, 0.0);

    while hi >= 0 {
        let u = hi as usize;
        let mut l = u;
        while l > 0 {
            let mut s = h[[l - 1, l - 1]].norm() + h[[l, l]].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[[l, l - 1]].norm() <= DEFLATION_TOL * s {
                h[[l, l - 1]] = zero;
                break;
            }
            l -= 1;
        }
        if l == u {
            values.push(h[[u, u]]);
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= cap {
            return (values, total, false);
        }
        total += 1;
        its += 1;

        let a = h[[u - 1, u - 1]];
        let b = h[[u - 1, u]];
        let c = h[[u, u - 1]];
        let d = h[[u, u]];
        let mu = if its.is_multiple_of(10) {
            d + C64::new(1.5 * c.norm(), 0.0)
        } else {
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * 0.5 + disc;
            let m2 = (a + d) * 0.5 - disc;
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        for i in l..=u {
            h[[i, i]] -= mu;
        }
        let mut rots = Vec::with_capacity(u - l);
        for k in l..u {
            let (cs, sn) = givens(h[[k, k]], h[[k + 1, k]]);
            for j in k..=u {
                let x = h[[k, j]];
                let y = h[[k + 1, j]];
                h[[k, j]] = x * cs + sn * y;
                h[[k + 1, j]] = -sn.conj() * x + y * cs;
            }
            rots.push((cs, sn));
        }
        for (idx, &(cs, sn)) in rots.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 1).min(u) {
                let x = h[[i, k]];
                let y = h[[i, k + 1]];
                h[[i, k]] = x * cs + y * sn.conj();
                h[[i, k + 1]] = -x * sn + y * cs;
            }
        }
        for i in l..=u {
            h[[i, i]] += mu;
        }
    }
    (values, total, true)
}

fn start_vector(n: usize, attempt: usize) -> Array1<C64> {
    Array1::from_shape_fn(n, |j| {
        let t = (j + 1 + 7 * attempt) as f64;
        C64::new((t * 0.754_877_666_246_692_7).fract() - 0.5, (t * 0.569_840_290_998_053_3).fract() - 0.5)
    })
}

/// Unit eigenvector for a known eigenvalue by inverse iteration, with its
/// residual `‖Mv − λv‖`.
pub fn eigenvector_for(m: &Array2<C64>, lambda: C64) -> Result<(Array1<C64>, f64)> {
    check_square(m)?;
    let v = inverse_iteration(m, lambda, frobenius_norm(m).max(f64::MIN_POSITIVE))?;
    let r = residual(m, lambda, &v)?;
    Ok((v, r))
}

fn inverse_iteration(m: &Array2<C64>, lambda: C64, norm: f64) -> Result<Array1<C64>> {
    let n = m.nrows();
    let mut best: Option<(f64, Array1<C64>)> = None;
    for attempt in 0..3 {
        let mut nudge = INVERSE_ITERATION_NUDGE * norm;
        let lu = loop {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[[i, i]] -= lambda + nudge;
            }
            match Lu::factor(shifted) {
                Ok(lu) => break lu,
                Err(Error::Singular { .. }) if nudge < 1e-4 * norm => nudge *= 10.0,
                Err(e) => return Err(e),
            }
        };
        let mut v = start_vector(n, attempt);
        for _ in 0..3 {
            v = lu.solve(&v);
            let vn = vector_norm(&v);
            if vn == 0.0 || !vn.is_finite() {
                break;
            }
            v.mapv_inplace(|z| z / vn);
        }
        let r = residual(m, lambda, &v).unwrap_or(f64::INFINITY);
        if r <= RESIDUAL_CONTRACT * norm {
            return Ok(v);
        }
        if best.as_ref().is_none_or(|(br, _)| r < *br) {
            best = Some((r, v));
        }
    }
    Ok(best.map(|(_, v)| v).unwrap())
}

struct Lu {
    lu: Array2<C64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = f64::EPSILON * scale;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmag) =
                (k..n).map(|i| (i, a[[i, k]].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmag <= tol {
                return Err(Error::Singular { pivot: pmag, column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = a[[k, k]];
            for i in k + 1..n {
                let f = a[[i, k]] / pivot;
                a[[i, k]] = f;
                if f != C64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let t = a[[k, j]];
                        a[[i, j]] -= f * t;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    fn solve(&self, rhs: &Array1<C64>) -> Array1<C64> {
        let n = self.lu.nrows();
        let mut x: Array1<C64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }
}

/// Solves `M x = rhs` by partial-pivoting LU.
pub fn solve(m: &Array2<C64>, rhs: &Array1<C64>) -> Result<Array1<C64>> {
    let n = check_square(m)?;
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: rhs.len() });
    }
    Ok(Lu::factor(m.clone())?.solve(rhs))
}

pub fn inverse(m: &Array2<C64>) -> Result<Array2<C64>> {
    let n = check_square(m)?;
    let lu = Lu::factor(m.clone())?;
    let mut inv = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::zeros(n);
        e[j] = C64::new(1.0, 0.0);
        inv.column_mut(j).assign(&lu.solve(&e));
    }
    Ok(inv)
}

/// `‖Mv − λv‖₂ / ‖v‖₂`.
pub fn residual(m: &Array2<C64>, lambda: C64, v: &Array1<C64>) -> Result<f64> {
    let n = check_square(m)?;
    if v.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: v.len() });
    }
    let vn = vector_norm(v);
    if vn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let r = m.dot(v) - v.mapv(|z| z * lambda);
    Ok(vector_norm(&r) / vn)
}

pub fn vector_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
pub fn eig_sym_tridiag(diag: &[f64], offdiag: &[f64]) -> Result<EigenReport> {
    let n = diag.len();
    if n == 0 {
        if !offdiag.is_empty() {
            return Err(Error::DimensionMismatch { left: 0, right: offdiag.len() });
        }
        return Ok(EigenReport {
            values: Vec::new(),
            vectors: Some(Array2::zeros((0, 0))),
            residuals: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    if offdiag.len() + 1 != n {
        return Err(Error::DimensionMismatch { left: n - 1, right: offdiag.len() });
    }

    let mut d = diag.to_vec();
    let mut e: Vec<f64> = offdiag.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z = Array2::<f64>::eye(n);
    let cap = ITERATIONS_PER_DIM * n;
    let mut total = 0usize;
    let mut converged = true;

    'outer: for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if total >= cap {
                converged = false;
                break 'outer;
            }
            total += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let t = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * t;
                    z[[k, i]] = c * z[[k, i]] - s * t;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<C64> = order.iter().map(|&i| C64::new(d[i], 0.0)).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| C64::new(z[[r, order[c]]], 0.0));

    let norm = diag
        .iter()
        .map(|x| x * x)
        .chain(offdiag.iter().map(|x| 2.0 * x * x))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let residuals: Vec<f64> = (0..n)
        .map(|c| {
            let v = vectors.column(c);
            let lam = values[c].re;
            (0..n)
                .map(|r| {
                    let mut mv = diag[r] * v[r].re;
                    if r > 0 {
                        mv += offdiag[r - 1] * v[r - 1].re;
                    }
                    if r + 1 < n {
                        mv += offdiag[r] * v[r + 1].re;
                    }
                    (mv - lam * v[r].re).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    if residuals.iter().any(|r| *r > RESIDUAL_CONTRACT * norm) {
        converged = false;
    }
    Ok(EigenReport { values, vectors: Some(vectors), residuals, iterations: total, converged })
}

#[derive(Clone, Debug)]
pub struct Biorthonormalized {
    /// Right vectors, unchanged.
    pub phi: Array2<C64>,
    /// Left vectors, rescaled so `⟨ψᵢ, φᵢ⟩ = 1`.
    pub psi: Array2<C64>,
    /// `gram[i][j] = ⟨ψᵢ, φⱼ⟩` after rescaling.
    pub gram: Array2<C64>,
}

impl Biorthonormalized {
    /// Max `|gram − 𝟙|`.
    pub fn error(&self) -> f64 {
        self.gram
            .indexed_iter()
            .map(|((i, j), g)| if i == j { (g - C64::new(1.0, 0.0)).norm() } else { g.norm() })
            .fold(0.0, f64::max)
    }
}

/// Gram matrix `G[i][j] = ⟨ψᵢ, φⱼ⟩` between column sets.
pub fn gram(psi: &Array2<C64>, phi: &Array2<C64>) -> Array2<C64> {
    adjoint(psi).dot(phi)
}

/// Rescales each `ψᵢ` by `1/conj(⟨ψᵢ,φᵢ⟩)` so the diagonal of the mutual
/// Gram matrix is one. The off-diagonal is whatever the inputs give; for
/// eigenvectors of `M` and `M*` with distinct real eigenvalues it vanishes.
pub fn biorthonormalize(phi: &Array2<C64>, psi: &Array2<C64>) -> Result<Biorthonormalized> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { left: phi.ncols(), right: psi.ncols() });
    }
    let g = gram(psi, phi);
    let mut psi = psi.clone();
    for (i, mut col) in psi.axis_iter_mut(Axis(1)).enumerate() {
        let gi = g[[i, i]];
        let scale = vector_norm(&phi.column(i).to_owned()) * vector_norm(&col.to_owned());
        if gi.norm() <= 1e-12 * scale || gi.norm() == 0.0 {
            return Err(Error::VanishingGram { index: i, value: gi.norm() });
        }
        let f = gi.conj().inv();
        col.mapv_inplace(|z| z * f);
    }
    let g = gram(&psi, phi);
    Ok(Biorthonormalized { phi: phi.clone(), psi, gram: g })
}

/// Max distance under a greedy globally-closest pairing of two equal-size
/// multisets. Exact for well-separated clusters, which is how it is used.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = 0.0_f64;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if matched == a.len() {
            break;
        }
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cm(rows: &[&[f64]]) -> Array2<C64> {
        let n = rows.len();
        Array2::from_shape_fn((n, rows[0].len()), |(i, j)| C64::new(rows[i][j], 0.0))
    }

    fn reals(r: &EigenReport) -> Vec<f64> {
        r.values.iter().map(|z| z.re).collect()
    }

    #[test]
    fn swap_matrix() {
        let r = eig_dense(&cm(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(reals(&r)[..], [-1.0, 1.0][..], epsilon = 1e-14);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn upper_triangular() {
        let r = eig_dense(&cm(&[&[1.0, 1.0], &[0.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(reals(&r)[..], [1.0, 2.0][..], epsilon = 1e-14);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let r = eig_dense(&cm(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(r.values[0].im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.values[1].im, 1.0, epsilon = 1e-14);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn real_and_complex_paths_agree() {
        // companion matrix of (x−1)(x−2)(x−3)(x²+1)
        let real = cm(&[
            &[6.0, -12.0, 12.0, -11.0, 6.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0, 0.0],
        ]);
        let expected =
            [C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)];
        let r = eig_dense(&real).unwrap();
        assert!(multiset_distance(&r.values, &expected).unwrap() < 1e-10);
        // nudge into the complex path with a similarity by a complex diagonal
        let d = Array1::from_shape_fn(5, |i| C64::from_polar(1.0, 0.3 * i as f64));
        let dinv = d.mapv(|z| z.inv());
        let cplx = Array2::from_shape_fn((5, 5), |(i, j)| d[i] * real[[i, j]] * dinv[j]);
        let rc = eig_dense(&cplx).unwrap();
        assert!(rc.converged);
        assert!(multiset_distance(&rc.values, &expected).unwrap() < 1e-10);
        assert!(rc.max_residual() < 1e-9);
    }

    #[test]
    fn non_square_is_rejected() {
        let m = Array2::<C64>::zeros((2, 3));
        assert!(matches!(eig_dense(&m), Err(Error::NotSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn dimension_cap() {
        let m = Array2::<C64>::eye(5);
        let r = eig_dense_with(&m, EigOptions { vectors: false, max_dim: 4 });
        assert!(matches!(r, Err(Error::TooLarge { dim: 5, cap: 4 })));
    }

    #[test]
    fn tridiagonal_examples() {
        let r = eig_sym_tridiag(&[1.0, 3.0, 5.0], &[0.0, 0.0]).unwrap();
        assert_eq!(reals(&r), vec![1.0, 3.0, 5.0]);
        let r = eig_sym_tridiag(&[0.0, 0.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(reals(&r)[..], [-1.0, 1.0][..], epsilon = 1e-15);
        assert!(r.max_residual() < 1e-14);
        assert!(eig_sym_tridiag(&[1.0, 2.0], &[]).is_err());
    }

    #[test]
    fn solve_examples() {
        let x = solve(&Array2::eye(3), &array![C64::new(1.0, 2.0), C64::new(0.0, 0.0), C64::new(-3.0, 0.5)]).unwrap();
        assert_eq!(x[0], C64::new(1.0, 2.0));
        assert_eq!(x[2], C64::new(-3.0, 0.5));

        let x = solve(&cm(&[&[2.0, 0.0], &[0.0, 4.0]]), &array![C64::new(2.0, 0.0), C64::new(8.0, 0.0)]).unwrap();
        assert_eq!(x.to_vec(), vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);

        let hilbert = Array2::from_shape_fn((4, 4), |(i, j)| C64::new(1.0 / (i + j + 1) as f64, 0.0));
        let rhs = hilbert.sum_axis(Axis(1));
        let x = solve(&hilbert, &rhs).unwrap();
        for xi in x {
            assert_abs_diff_eq!(xi.re, 1.0, epsilon = 1e-8);
        }
        assert!(matches!(
            solve(&cm(&[&[1.0, 2.0], &[2.0, 4.0]]), &array![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn residual_examples() {
        let e1 = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let e2 = array![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(residual(&Array2::eye(2), C64::new(1.0, 0.0), &e1).unwrap(), 0.0);
        assert_eq!(residual(&cm(&[&[1.0, 0.0], &[0.0, 2.0]]), C64::new(1.0, 0.0), &e2).unwrap(), 1.0);
        assert!(matches!(residual(&Array2::eye(2), C64::new(1.0, 0.0), &Array1::zeros(2)), Err(Error::ZeroVector)));
    }

    #[test]
    fn biorthonormalize_examples() {
        let id = Array2::<C64>::eye(3);
        let b = biorthonormalize(&id, &id).unwrap();
        assert_eq!(b.psi, id);
        assert_eq!(b.error(), 0.0);

        // right/left eigenvectors of [[1,1],[0,2]]
        let phi = cm(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let psi = cm(&[&[1.0, 0.0], &[-1.0, 1.0]]);
        let b = biorthonormalize(&phi, &psi).unwrap();
        assert_eq!(b.psi, psi);
        assert_eq!(b.error(), 0.0);

        let mut phi5 = phi.clone();
        phi5.column_mut(0).mapv_inplace(|z| z * 5.0);
        let b = biorthonormalize(&phi5, &psi).unwrap();
        assert_abs_diff_eq!(b.psi[[0, 0]].re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b.psi[[1, 0]].re, -0.2, epsilon = 1e-15);
        assert!(b.error() < 1e-15);

        let bad = cm(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!(matches!(
            biorthonormalize(&cm(&[&[1.0, 0.0], &[0.0, 1.0]]), &bad),
            Err(Error::VanishingGram { index: 0, .. })
        ));
    }
}
