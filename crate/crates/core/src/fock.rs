//! Truncated two-mode Fock space.
//!
//! States are occupation pairs `|m,n⟩` with `0 ≤ m ≤ n_max_a`, `0 ≤ n ≤ n_max_b`,
//! laid out row-major: `index = m·(n_max_b+1) + n`. The basis is orthonormal, so
//! `⟨Φ₀,Φ₀⟩ = 1` and the unnormalized states `a*ᵐ b*ⁿ Φ₀` have norm² `m!·n!`.
//!
//! Ladder action that would leave the truncation is dropped (finite section).
//! Operators are stored row-sparse; every ladder-built operator has at most a
//! handful of entries per row, which keeps `trunc(40,40)` work cheap. Use
//! [`Operator::to_dense`] when a dense matrix is needed.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sectors::SectorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationSpec {
    /// Highest occupation of mode `a`.
    pub n_max_a: usize,
    /// Highest occupation of mode `b`.
    pub n_max_b: usize,
}

impl TruncationSpec {
    pub fn new(n_max_a: usize, n_max_b: usize) -> Self {
        Self { n_max_a, n_max_b }
    }

    pub fn square(n_max: usize) -> Self {
        Self::new(n_max, n_max)
    }

    pub fn dim(&self) -> usize {
        (self.n_max_a + 1) * (self.n_max_b + 1)
    }

    /// Index of `|m,n⟩`, or `None` outside the truncation.
    pub fn index(&self, m: usize, n: usize) -> Option<usize> {
        (m <= self.n_max_a && n <= self.n_max_b).then(|| m * (self.n_max_b + 1) + n)
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        (index / (self.n_max_b + 1), index % (self.n_max_b + 1))
    }

    /// All `(m, n)` pairs in index order.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim()).map(|i| self.state(i))
    }

    /// Smallest extent, i.e. the longest diagonal chain `|n,n⟩` held.
    pub fn min_extent(&self) -> usize {
        self.n_max_a.min(self.n_max_b)
    }
}

/// The space an [`Operator`] or [`FockVector`] lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    /// Full truncated two-mode space.
    Fock(TruncationSpec),
    /// A single Casimir sector chain in its own coordinates.
    Sector(SectorSpec),
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Fock(t) => t.dim(),
            Geometry::Sector(s) => s.depth,
        }
    }
}

impl From<TruncationSpec> for Geometry {
    fn from(t: TruncationSpec) -> Self {
        Geometry::Fock(t)
    }
}

impl From<SectorSpec> for Geometry {
    fn from(s: SectorSpec) -> Self {
        Geometry::Sector(s)
    }
}

/// Selects the basis states at least `margin` steps away from the truncation
/// boundary. Finite-section products of one-step operators are exact on these
/// rows: a product of `r` ladder factors is exact on rows with margin ≥ r−1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorMask {
    pub margin: usize,
}

impl InteriorMask {
    pub fn new(margin: usize) -> Self {
        Self { margin }
    }

    /// Indices of the selected states.
    pub fn select(&self, geometry: &Geometry) -> Result<Vec<usize>> {
        match geometry {
            Geometry::Fock(t) => {
                let limit = t.min_extent();
                if self.margin > limit {
                    return Err(Error::InvalidMargin { margin: self.margin, limit });
                }
                Ok(t.states()
                    .enumerate()
                    .filter(|(_, (m, n))| *m + self.margin <= t.n_max_a && *n + self.margin <= t.n_max_b)
                    .map(|(i, _)| i)
                    .collect())
            }
            Geometry::Sector(s) => {
                if self.margin >= s.depth {
                    return Err(Error::InvalidMargin { margin: self.margin, limit: s.depth.saturating_sub(1) });
                }
                Ok((0..s.depth - self.margin).collect())
            }
        }
    }
}

/// Complex square matrix on a truncated space, stored as sorted sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    geometry: Geometry,
    rows: Vec<Vec<(usize, C64)>>,
}

impl Operator {
    pub fn zeros(geometry: impl Into<Geometry>) -> Self {
        let geometry = geometry.into();
        Self { rows: vec![Vec::new(); geometry.dim()], geometry }
    }

    pub fn identity(geometry: impl Into<Geometry>) -> Self {
        let geometry = geometry.into();
        Self::from_diagonal(geometry, vec![C64::new(1.0, 0.0); geometry.dim()])
    }

    pub fn from_diagonal(geometry: impl Into<Geometry>, diag: Vec<C64>) -> Self {
        let geometry = geometry.into();
        assert_eq!(diag.len(), geometry.dim(), "diagonal length must match geometry");
        let rows = diag
            .into_iter()
            .enumerate()
            .map(|(i, v)| if v == C64::new(0.0, 0.0) { Vec::new() } else { vec![(i, v)] })
            .collect();
        Self { geometry, rows }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        geometry: impl Into<Geometry>,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let geometry = geometry.into();
        let dim = geometry.dim();
        let mut acc: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside {dim}x{dim}");
            *acc[r].entry(c).or_default() += v;
        }
        Self::from_row_maps(geometry, acc)
    }

    /// Dense matrix → operator, dropping exact zeros.
    pub fn from_dense(geometry: impl Into<Geometry>, m: &Array2<C64>) -> Result<Self> {
        let geometry = geometry.into();
        let dim = geometry.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: m.nrows().max(m.ncols()) });
        }
        let rows = m
            .rows()
            .into_iter()
            .map(|row| {
                row.iter().enumerate().filter(|(_, v)| **v != C64::new(0.0, 0.0)).map(|(j, v)| (j, *v)).collect()
            })
            .collect();
        Ok(Self { geometry, rows })
    }

    fn from_row_maps(geometry: Geometry, maps: Vec<BTreeMap<usize, C64>>) -> Self {
        let rows =
            maps.into_iter().map(|m| m.into_iter().filter(|(_, v)| *v != C64::new(0.0, 0.0)).collect()).collect();
        Self { geometry, rows }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let r = &self.rows[row];
        match r.binary_search_by_key(&col, |(c, _)| *c) {
            Ok(pos) => r[pos].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Nonzero entries of one row as `(col, value)`, sorted by column.
    pub fn row(&self, row: usize) -> &[(usize, C64)] {
        &self.rows[row]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose_with(|v| v.conj())
    }

    pub fn transpose(&self) -> Self {
        self.transpose_with(|v| v)
    }

    fn transpose_with(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, f(v)));
            }
        }
        Self { geometry: self.geometry, rows }
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch);
        }
        Ok(())
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| (j, v * s)).filter(|(_, v)| *v != C64::new(0.0, 0.0)).collect())
            .collect();
        Self { geometry: self.geometry, rows }
    }

    /// `Σ cᵢ Xᵢ` over operators sharing one geometry.
    pub fn linear_combination(terms: &[(C64, &Operator)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidArgument("empty linear combination".into()));
        };
        let mut acc: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); first.dim()];
        for (c, op) in terms {
            first.check_same(op)?;
            for (i, row) in op.rows.iter().enumerate() {
                for &(j, v) in row {
                    *acc[i].entry(j).or_default() += c * v;
                }
            }
        }
        Ok(Self::from_row_maps(first.geometry, acc))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        Self::linear_combination(&[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        Self::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)])
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        let mut acc: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(l, x) in row {
                for &(j, y) in &other.rows[l] {
                    *acc[i].entry(j).or_default() += x * y;
                }
            }
        }
        Ok(Self::from_row_maps(self.geometry, acc))
    }

    /// Max entrywise `|self − other|` over all entries.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.max_abs_diff_rows(other, 0..self.dim()))
    }

    /// Max entrywise `|self − other|` over the rows selected by `mask`.
    pub fn max_abs_diff_masked(&self, other: &Operator, mask: InteriorMask) -> Result<f64> {
        self.check_same(other)?;
        let rows = mask.select(&self.geometry)?;
        Ok(self.max_abs_diff_rows(other, rows))
    }

    fn max_abs_diff_rows(&self, other: &Operator, rows: impl IntoIterator<Item = usize>) -> f64 {
        let mut worst = 0.0_f64;
        for i in rows {
            let mut diff: BTreeMap<usize, C64> = self.rows[i].iter().copied().collect();
            for &(j, v) in &other.rows[i] {
                *diff.entry(j).or_default() -= v;
            }
            for v in diff.values() {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }
}

/// Complex coefficient vector over a truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    geometry: Geometry,
    coeffs: Vec<C64>,
}

impl FockVector {
    pub fn zeros(geometry: impl Into<Geometry>) -> Self {
        let geometry = geometry.into();
        Self { coeffs: vec![C64::new(0.0, 0.0); geometry.dim()], geometry }
    }

    /// Unit vector on basis index `index`.
    pub fn basis(geometry: impl Into<Geometry>, index: usize) -> Self {
        let mut v = Self::zeros(geometry);
        v.coeffs[index] = C64::new(1.0, 0.0);
        v
    }

    /// Unit vector `|m,n⟩` on a Fock truncation; `None` if outside.
    pub fn occupation(trunc: TruncationSpec, m: usize, n: usize) -> Option<Self> {
        trunc.index(m, n).map(|i| Self::basis(trunc, i))
    }

    pub fn from_coeffs(geometry: impl Into<Geometry>, coeffs: Vec<C64>) -> Result<Self> {
        let geometry = geometry.into();
        if coeffs.len() != geometry.dim() {
            return Err(Error::DimensionMismatch { left: geometry.dim(), right: coeffs.len() });
        }
        Ok(Self { geometry, coeffs })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self { geometry: self.geometry, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self − other`.
    pub fn sub(&self, other: &FockVector) -> Result<Self> {
        check_vectors(self, other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x - y).collect();
        Ok(Self { geometry: self.geometry, coeffs })
    }

    /// Largest `|coeff|` among states at the truncation boundary of a Fock
    /// geometry (last sector row for sector geometries).
    pub fn boundary_weight(&self) -> f64 {
        match self.geometry {
            Geometry::Fock(t) => t
                .states()
                .zip(&self.coeffs)
                .filter(|((m, n), _)| *m == t.n_max_a || *n == t.n_max_b)
                .map(|(_, c)| c.norm())
                .fold(0.0, f64::max),
            Geometry::Sector(_) => self.coeffs.last().map_or(0.0, |c| c.norm()),
        }
    }
}

fn check_vectors(v: &FockVector, w: &FockVector) -> Result<()> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch { left: v.len(), right: w.len() });
    }
    if v.geometry != w.geometry {
        return Err(Error::GeometryMismatch);
    }
    Ok(())
}

/// The four ladder matrices of a truncation.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: Operator,
    pub b: Operator,
    pub a_dag: Operator,
    pub b_dag: Operator,
}

impl LadderOps {
    pub fn trunc(&self) -> TruncationSpec {
        match self.a.geometry() {
            Geometry::Fock(t) => t,
            Geometry::Sector(_) => unreachable!("ladder operators always live on a Fock geometry"),
        }
    }
}

/// `a|m,n⟩ = √m |m−1,n⟩`, `b|m,n⟩ = √n |m,n−1⟩`, and their conjugate
/// transposes; raising past the truncation gives zero.
pub fn build_ladder_ops(trunc: TruncationSpec) -> LadderOps {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (col, (m, n)) in trunc.states().enumerate() {
        if m > 0 {
            let row = trunc.index(m - 1, n).unwrap();
            a.push((row, col, C64::new((m as f64).sqrt(), 0.0)));
        }
        if n > 0 {
            let row = trunc.index(m, n - 1).unwrap();
            b.push((row, col, C64::new((n as f64).sqrt(), 0.0)));
        }
    }
    let a = Operator::from_triplets(trunc, a);
    let b = Operator::from_triplets(trunc, b);
    LadderOps { a_dag: a.adjoint(), b_dag: b.adjoint(), a, b }
}

/// `XY − YX`.
pub fn commutator(x: &Operator, y: &Operator) -> Result<Operator> {
    x.matmul(y)?.sub(&y.matmul(x)?)
}

/// `⟨v, w⟩ = Σ conj(vᵢ) wᵢ`: antilinear in the first slot.
pub fn inner_product(v: &FockVector, w: &FockVector) -> Result<C64> {
    check_vectors(v, w)?;
    Ok(v.coeffs.iter().zip(&w.coeffs).map(|(x, y)| x.conj() * y).sum())
}

pub fn apply(x: &Operator, v: &FockVector) -> Result<FockVector> {
    if x.dim() != v.len() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: v.len() });
    }
    if x.geometry != v.geometry {
        return Err(Error::GeometryMismatch);
    }
    let coeffs = x.rows.iter().map(|row| row.iter().map(|&(j, a)| a * v.coeffs[j]).sum()).collect();
    Ok(FockVector { geometry: v.geometry, coeffs })
}
