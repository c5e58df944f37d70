//! Finite-dimensional check of the similarity theorem: a matrix `M` with
//! distinct real eigenvalues is similar to `M*` through `S = ΨΦ⁻¹`, where
//! `Φ` holds the right eigenvectors of `M` and `Ψ` those of `M*`,
//! biorthonormalized so `⟨ψᵢ, φⱼ⟩ = δᵢⱼ`.
//!
//! Each `φᵢ` is scaled so its largest-magnitude component is exactly one,
//! which fixes the phase; `ψᵢ` is then pinned by biorthonormalization. `S` is
//! reproducible under that convention. It is usually *not* unitary; the
//! report carries `‖S*S − 𝟙‖_F` as a number rather than asserting anything.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, biorthonormalize, eig_dense, frobenius_norm, inverse, vector_norm};

/// Minimum eigenvalue gap, relative to `‖M‖_F`.
pub const MIN_RELATIVE_GAP: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Theorem1Report {
    pub spectrum_real: bool,
    pub max_imag: f64,
    /// Hausdorff distance between σ(M) and σ(M*).
    pub spectrum_match: f64,
    /// Max `|⟨ψᵢ,φⱼ⟩ − δᵢⱼ|`.
    pub biorth_error: f64,
    /// `‖M* − SMS⁻¹‖_F / ‖M‖_F`.
    pub similarity_error: f64,
    /// `‖S*S − 𝟙‖_F`.
    pub unitarity_defect: f64,
    /// Max over `i` of `‖M*Sφᵢ − λᵢSφᵢ‖/‖Sφᵢ‖`.
    pub column_identity_residual: f64,
    /// Real parts of σ(M), ascending.
    pub eigenvalues: Vec<f64>,
    pub s: Array2<C64>,
}

/// Hausdorff distance between two finite point sets in ℂ.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let directed = |x: &[C64], y: &[C64]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    directed(a, b).max(directed(b, a))
}

fn normalize_by_peak(v: &mut Array1<C64>) {
    let mut peak = C64::new(0.0, 0.0);
    for z in v.iter() {
        if z.norm() > peak.norm() {
            peak = *z;
        }
    }
    if peak.norm() > 0.0 {
        let f = peak.inv();
        v.mapv_inplace(|z| z * f);
    }
}

/// Greedy injective matching of `a[i]` to `b[j]` by proximity; returns `perm`
/// with `a[i] ↔ b[perm[i]]`.
fn match_by_value(a: &[C64], b: &[C64]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut perm = vec![usize::MAX; a.len()];
    let mut used = vec![false; b.len()];
    for (_, i, j) in pairs {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

pub fn verify_theorem1(m: &Array2<C64>, real_tol: f64) -> Result<Theorem1Report> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    let norm = frobenius_norm(m);

    let right = eig_dense(m)?;
    let max_imag = right.max_imag();
    if max_imag > real_tol {
        return Err(Error::ComplexSpectrum { max_imag, tol: real_tol });
    }
    let values = &right.values;
    let gap = values.windows(2).map(|w| (w[1] - w[0]).norm()).fold(f64::INFINITY, f64::min);
    let threshold = MIN_RELATIVE_GAP * norm;
    if n > 1 && gap <= threshold {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }
    let m_adj = adjoint(m);
    let left = eig_dense(&m_adj)?;
    if !right.converged || !left.converged {
        return Err(Error::NoConvergence { iterations: right.iterations + left.iterations, found: n, dim: n });
    }

    let conj_left: Vec<C64> = left.values.iter().map(|z| z.conj()).collect();
    let perm = match_by_value(values, &conj_left);
    let rv = right.vectors.as_ref().expect("vectors requested");
    let lv = left.vectors.as_ref().expect("vectors requested");
    let mut phi = Array2::zeros((n, n));
    let mut psi = Array2::zeros((n, n));
    for (i, &j) in perm.iter().enumerate() {
        let mut f = rv.column(i).to_owned();
        normalize_by_peak(&mut f);
        phi.column_mut(i).assign(&f);
        let mut g = lv.column(j).to_owned();
        normalize_by_peak(&mut g);
        psi.column_mut(i).assign(&g);
    }
    let bi = biorthonormalize(&phi, &psi)?;

    let s = bi.psi.dot(&inverse(&bi.phi)?);
    let s_inv = inverse(&s)?;
    let conjugated = s.dot(m).dot(&s_inv);
    let similarity_error = frobenius_norm(&(&m_adj - &conjugated)) / norm.max(f64::MIN_POSITIVE);
    let unitarity_defect = frobenius_norm(&(adjoint(&s).dot(&s) - Array2::<C64>::eye(n)));

    let mut column_identity_residual = 0.0_f64;
    for (i, lambda) in values.iter().enumerate() {
        let sphi = s.dot(&bi.phi.column(i));
        let r = m_adj.dot(&sphi) - sphi.mapv(|z| z * lambda);
        column_identity_residual =
            column_identity_residual.max(vector_norm(&r) / vector_norm(&sphi).max(f64::MIN_POSITIVE));
    }

    Ok(Theorem1Report {
        spectrum_real: max_imag <= real_tol,
        max_imag,
        spectrum_match: hausdorff(values, &left.values),
        biorth_error: bi.error(),
        similarity_error,
        unitarity_defect,
        column_identity_residual,
        eigenvalues: values.iter().map(|z| z.re).collect(),
        s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Json,
    Csv,
}

impl MatrixFormat {
    /// JSON if the text starts with `{`, CSV otherwise.
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with('{') {
            MatrixFormat::Json
        } else {
            MatrixFormat::Csv
        }
    }
}

#[derive(Deserialize)]
struct JsonMatrix {
    n: usize,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

/// Parses a square complex matrix.
///
/// JSON: `{"n": 2, "re": [[1,1],[0,2]], "im": [[0,0],[0,0]]}` (`im` optional).
/// CSV: one matrix row per line, `re,im` pairs in column order.
pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<Array2<C64>> {
    match format {
        MatrixFormat::Json => parse_json(text),
        MatrixFormat::Csv => parse_csv(text),
    }
}

fn parse_json(text: &str) -> Result<Array2<C64>> {
    let j: JsonMatrix = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let check = |rows: &Vec<Vec<f64>>, name: &str| -> Result<()> {
        if rows.len() != j.n || rows.iter().any(|r| r.len() != j.n) {
            return Err(Error::Parse(format!("\"{name}\" is not {0}x{0}", j.n)));
        }
        Ok(())
    };
    check(&j.re, "re")?;
    if let Some(im) = &j.im {
        check(im, "im")?;
    }
    Ok(Array2::from_shape_fn((j.n, j.n), |(r, c)| C64::new(j.re[r][c], j.im.as_ref().map_or(0.0, |im| im[r][c]))))
}

fn parse_csv(text: &str) -> Result<Array2<C64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() % 2 != 0 {
            return Err(Error::Parse(format!("row {line}: odd number of fields")));
        }
        let nums: Vec<f64> = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("row {line}: {f:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(nums.chunks(2).map(|p| C64::new(p[0], p[1])).collect());
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a square matrix, got {n} rows")));
    }
    Ok(Array2::from_shape_fn((n, n), |(r, c)| rows[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudoboson::ModelParams;
    use crate::sectors::{pseudo_jacobi, SectorSpec};
    use ndarray::array;

    fn real(m: Array2<f64>) -> Array2<C64> {
        m.mapv(|x| C64::new(x, 0.0))
    }

    #[test]
    fn two_by_two_witness() {
        let r = verify_theorem1(&real(array![[1.0, 1.0], [0.0, 2.0]]), 1e-12).unwrap();
        let expected = real(array![[1.0, -1.0], [-1.0, 2.0]]);
        let diff = r.s.iter().zip(expected.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{:?}", r.s);
        assert!(r.similarity_error <= 1e-12);
        assert!((r.unitarity_defect - 35.0_f64.sqrt()).abs() < 1e-10);
        assert!(r.unitarity_defect > 1.0);
        assert!(r.biorth_error < 1e-12);
    }

    #[test]
    fn self_adjoint_is_trivial() {
        let r = verify_theorem1(&real(array![[1.0, 0.0], [0.0, 2.0]]), 1e-12).unwrap();
        let eye = Array2::<C64>::eye(2);
        assert!(r.s.iter().zip(eye.iter()).all(|(a, b)| (a - b).norm() < 1e-14));
        assert!(r.similarity_error < 1e-14);
        assert!(r.unitarity_defect < 1e-14);
        assert!(r.spectrum_match < 1e-14);
    }

    #[test]
    fn rejects_complex_and_degenerate_spectra() {
        let rot = real(array![[0.0, -1.0], [1.0, 0.0]]);
        assert!(matches!(verify_theorem1(&rot, 1e-10), Err(Error::ComplexSpectrum { .. })));
        let jordan = real(array![[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(verify_theorem1(&jordan, 1e-10), Err(Error::DegenerateSpectrum { .. })));
        let deep = pseudo_jacobi(SectorSpec::new(0, 5), ModelParams::new(0.0, 0.75)).unwrap().to_dense();
        assert!(matches!(verify_theorem1(&deep, 1e-8), Err(Error::ComplexSpectrum { .. })));
    }

    #[test]
    fn shallow_pseudo_jacobi_section() {
        let m = pseudo_jacobi(SectorSpec::new(0, 2), ModelParams::new(0.0, 0.75)).unwrap().to_dense();
        let r = verify_theorem1(&m, 1e-10).unwrap();
        assert!(r.similarity_error <= 1e-8);
        assert!(r.column_identity_residual <= 1e-8);
        assert!(r.spectrum_match <= 1e-8);
    }

    #[test]
    fn scale_invariance() {
        let m = real(array![[1.0, 1.0, 0.5], [0.0, 2.0, -1.0], [0.0, 0.0, 4.0]]);
        let a = verify_theorem1(&m, 1e-10).unwrap();
        let b = verify_theorem1(&m.mapv(|z| z * -2.5), 1e-10).unwrap();
        let diff = a.s.iter().zip(b.s.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8);
        assert!((a.similarity_error - b.similarity_error).abs() < 1e-8);
    }

    #[test]
    fn parses_both_formats() {
        let j = parse_matrix(r#"{"n": 2, "re": [[1,1],[0,2]]}"#, MatrixFormat::Json).unwrap();
        assert_eq!(j, real(array![[1.0, 1.0], [0.0, 2.0]]));
        let j = parse_matrix(r#"{"n": 1, "re": [[1]], "im": [[-3]]}"#, MatrixFormat::Json).unwrap();
        assert_eq!(j[[0, 0]], C64::new(1.0, -3.0));
        let c = parse_matrix("1,0,1,0\n0,0,2,0.5\n", MatrixFormat::Csv).unwrap();
        assert_eq!(c[[1, 1]], C64::new(2.0, 0.5));
        assert_eq!(MatrixFormat::detect("  {\"n\":1}"), MatrixFormat::Json);
        assert_eq!(MatrixFormat::detect("1,0"), MatrixFormat::Csv);
        assert!(parse_matrix(r#"{"n": 2, "re": [[1,1]]}"#, MatrixFormat::Json).is_err());
        assert!(parse_matrix("1,0,2\n", MatrixFormat::Csv).is_err());
        assert!(parse_matrix("1,0,2,0\n", MatrixFormat::Csv).is_err());
    }

    #[test]
    fn hausdorff_distance() {
        let a = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let b = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(3.0, 0.0)];
        assert_eq!(hausdorff(&a, &b), 2.0);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }
}
