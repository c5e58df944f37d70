//! Casimir sectors and the su(1,1) structure of the model.
//!
//! `a*a − b*b` is conserved, so the Fock space splits into chains
//! `ℋ_k = span{|j+k⁺, j+k⁻⟩ : j ≥ 0}` with `k⁺ = max(k,0)`, `k⁻ = max(−k,0)`.
//! On a chain the pair operators act as
//!
//! ```text
//! A₊ = a*b*  (subdiagonal √((j+1)(|k|+j+1)))
//! A₋ = ab    (= A₊ᵀ)
//! A₀ = a*a + bb* = diag(|k|+1+2j)
//! ```
//!
//! and `H = A₀ + βk + γ(A₊ − A₋)` is a pseudo-Jacobi matrix. Chain operators
//! live on [`Geometry::Sector`]; finite-section relations are checked on the
//! rows of [`InteriorMask`] (margin 1 for commutators, 2 for the Casimir
//! products).

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply, build_ladder_ops, commutator, FockVector, Geometry, InteriorMask, Operator, TruncationSpec};
use crate::linalg::{eig_sym_tridiag, eigenvector_for, eigvals_dense, multiset_distance, EigenReport};
use crate::pseudoboson::{build_hamiltonian, ModelParams};

/// Depth-doubling stops once successive eigenvalue lists agree to this.
pub const CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    /// Casimir label `m − n`.
    pub k: i64,
    /// Number of retained chain states.
    pub depth: usize,
}

impl SectorSpec {
    pub fn new(k: i64, depth: usize) -> Self {
        Self { k, depth }
    }

    pub fn abs_k(&self) -> usize {
        self.k.unsigned_abs() as usize
    }

    /// `(m, n)` of chain state `j`.
    pub fn occupation(&self, j: usize) -> (usize, usize) {
        let kp = self.k.max(0) as usize;
        let km = (-self.k).max(0) as usize;
        (j + kp, j + km)
    }

    /// `√((j+1)(|k|+j+1))`, the chain coupling between states `j` and `j+1`.
    pub fn coupling(&self, j: usize) -> f64 {
        (((j + 1) * (self.abs_k() + j + 1)) as f64).sqrt()
    }

    fn check_depth(&self, min: usize) -> Result<()> {
        if self.depth < min {
            return Err(Error::InvalidArgument(format!("sector depth {} below {min}", self.depth)));
        }
        Ok(())
    }
}

/// Number of chain states of sector `k` inside a box truncation.
pub fn sector_depth_in(trunc: TruncationSpec, k: i64) -> usize {
    let kp = k.max(0) as usize;
    let km = (-k).max(0) as usize;
    if kp > trunc.n_max_a || km > trunc.n_max_b {
        return 0;
    }
    (trunc.n_max_a - kp).min(trunc.n_max_b - km) + 1
}

/// Full-space indices of the chain states, in chain order.
pub fn sector_basis(spec: SectorSpec, trunc: TruncationSpec) -> Result<Vec<usize>> {
    let available = sector_depth_in(trunc, spec.k);
    if spec.depth > available {
        let (m, n) = spec.occupation(spec.depth - 1);
        return Err(Error::TruncationTooShallow { required: m.max(n), available: trunc.min_extent() });
    }
    Ok((0..spec.depth)
        .map(|j| {
            let (m, n) = spec.occupation(j);
            trunc.index(m, n).unwrap()
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct CasimirOps {
    /// `C = (a*a − b*b − 𝟙)(a*a − b*b + 𝟙)`, diagonal `(m−n)² − 1`.
    pub casimir: Operator,
    /// The sector label `a*a − b*b`, diagonal `m − n`.
    pub label: Operator,
}

pub fn casimir_full(trunc: TruncationSpec) -> CasimirOps {
    let label: Vec<C64> = trunc.states().map(|(m, n)| C64::new(m as f64 - n as f64, 0.0)).collect();
    let casimir = label.iter().map(|k| k * k - 1.0).collect();
    CasimirOps { casimir: Operator::from_diagonal(trunc, casimir), label: Operator::from_diagonal(trunc, label) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    /// `A₊ = a*b*` raises; `e₀` is annihilated by `A₋`.
    Lowest,
    /// Primed representation: `A′₊` is superdiagonal, `A′₀ = −A₀`; `e₀` is
    /// annihilated by `A′₊`.
    Highest,
}

#[derive(Clone, Debug)]
pub struct Su11Generators {
    pub plus: Operator,
    pub minus: Operator,
    pub zero: Operator,
    pub weight: Weight,
}

fn raw_generators(spec: SectorSpec) -> (Operator, Operator, Operator) {
    let geom = Geometry::Sector(spec);
    let plus = Operator::from_triplets(
        geom,
        (0..spec.depth.saturating_sub(1)).map(|j| (j + 1, j, C64::new(spec.coupling(j), 0.0))),
    );
    let minus = plus.transpose();
    let zero = Operator::from_diagonal(
        geom,
        (0..spec.depth).map(|j| C64::new((spec.abs_k() + 1 + 2 * j) as f64, 0.0)).collect(),
    );
    (plus, minus, zero)
}

pub fn su11_generators(spec: SectorSpec, weight: Weight) -> Result<Su11Generators> {
    spec.check_depth(2)?;
    let (plus, minus, zero) = raw_generators(spec);
    Ok(match weight {
        Weight::Lowest => Su11Generators { plus, minus, zero, weight },
        Weight::Highest => Su11Generators { plus: minus, minus: plus, zero: zero.scale(-1.0), weight },
    })
}

/// Max deviation of `[X₋,X₊] = X₀`, `[X₀,X₊] = 2X₊`, `[X₀,X₋] = −2X₋` on the
/// interior rows.
pub fn su11_relation_deviation(plus: &Operator, minus: &Operator, zero: &Operator, mask: InteriorMask) -> Result<f64> {
    let d1 = commutator(minus, plus)?.max_abs_diff_masked(zero, mask)?;
    let d2 = commutator(zero, plus)?.max_abs_diff_masked(&plus.scale(2.0), mask)?;
    let d3 = commutator(zero, minus)?.max_abs_diff_masked(&minus.scale(-2.0), mask)?;
    Ok(d1.max(d2).max(d3))
}

impl Su11Generators {
    pub fn relation_deviation(&self) -> Result<f64> {
        su11_relation_deviation(&self.plus, &self.minus, &self.zero, InteriorMask::new(1))
    }
}

/// The model restricted to sector `k`: `A₀ + βk·𝟙 + γ(A₊ − A₋)`.
pub fn pseudo_jacobi(spec: SectorSpec, p: ModelParams) -> Result<Operator> {
    spec.check_depth(1)?;
    let (plus, minus, zero) = raw_generators(spec);
    let id = Operator::identity(Geometry::Sector(spec));
    let r = |x: f64| C64::new(x, 0.0);
    Operator::linear_combination(&[
        (r(1.0), &zero),
        (r(p.beta * spec.k as f64), &id),
        (r(p.gamma), &plus),
        (r(-p.gamma), &minus),
    ])
}

/// `e^{i(π/2)A₀}` with exact powers of `i`.
pub fn transpose_phase(spec: SectorSpec) -> Operator {
    let phases = (0..spec.depth)
        .map(|j| match (spec.abs_k() + 1 + 2 * j) % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        })
        .collect();
    Operator::from_diagonal(Geometry::Sector(spec), phases)
}

/// Max `|Hᵀ − e^{i(π/2)A₀} H e^{−i(π/2)A₀}|`.
pub fn transpose_similarity_check(spec: SectorSpec, p: ModelParams) -> Result<f64> {
    let h = pseudo_jacobi(spec, p)?;
    let u = transpose_phase(spec);
    h.transpose().max_abs_diff(&u.matmul(&h)?.matmul(&u.adjoint())?)
}

#[derive(Clone, Debug)]
pub struct BGenerators {
    pub plus: Operator,
    pub minus: Operator,
    pub zero: Operator,
}

impl BGenerators {
    pub fn relation_deviation(&self) -> Result<f64> {
        su11_relation_deviation(&self.plus, &self.minus, &self.zero, InteriorMask::new(1))
    }
}

pub fn b_generators(spec: SectorSpec, gamma: f64) -> Result<BGenerators> {
    if gamma == 0.0 {
        return Err(Error::DegenerateGamma("the B generators"));
    }
    spec.check_depth(1)?;
    let (plus, minus, zero) = raw_generators(spec);
    let rho = gamma.hypot(1.0);
    let pre = gamma / (2.0 * rho);
    let r = |x: f64| C64::new(x, 0.0);
    Ok(BGenerators {
        plus: Operator::linear_combination(&[
            (r(pre * (1.0 + rho) / gamma), &plus),
            (r(pre * gamma / (1.0 + rho)), &minus),
            (r(-pre), &zero),
        ])?,
        minus: Operator::linear_combination(&[
            (r(pre * (rho - 1.0) / gamma), &plus),
            (r(pre * gamma / (rho - 1.0)), &minus),
            (r(pre), &zero),
        ])?,
        zero: Operator::linear_combination(&[
            (r(1.0 / rho), &zero),
            (r(gamma / rho), &plus),
            (r(-gamma / rho), &minus),
        ])?,
    })
}

/// Chain vector with components `(−α)ʲ √binom(|k|+j, j)`; annihilated by
/// `B₋` up to the truncation tail.
pub fn lowest_weight_vector(spec: SectorSpec, gamma: f64) -> Result<FockVector> {
    if gamma < 0.0 {
        return Err(Error::NegativeGamma(gamma));
    }
    spec.check_depth(1)?;
    let alpha = ModelParams::new(0.0, gamma).alpha();
    let mut coeffs = Vec::with_capacity(spec.depth);
    let mut c = 1.0;
    for j in 0..spec.depth {
        if j > 0 {
            c *= -alpha * (((spec.abs_k() + j) as f64) / j as f64).sqrt();
        }
        coeffs.push(C64::new(c, 0.0));
    }
    FockVector::from_coeffs(Geometry::Sector(spec), coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CasimirReduction {
    /// `B₀² − 2B₀ − 4B₊B₋` vs `(k²−1)𝟙`.
    pub b_deviation: f64,
    /// `A₀² − 2A₀ − 4A₊A₋` vs `(k²−1)𝟙`.
    pub a_deviation: f64,
}

impl CasimirReduction {
    pub fn max(&self) -> f64 {
        self.b_deviation.max(self.a_deviation)
    }
}

fn casimir_of(plus: &Operator, minus: &Operator, zero: &Operator) -> Result<Operator> {
    let r = |x: f64| C64::new(x, 0.0);
    Operator::linear_combination(&[(r(1.0), &zero.matmul(zero)?), (r(-2.0), zero), (r(-4.0), &plus.matmul(minus)?)])
}

pub fn casimir_reduction_check(spec: SectorSpec, gamma: f64) -> Result<CasimirReduction> {
    let b = b_generators(spec, gamma)?;
    let (plus, minus, zero) = raw_generators(spec);
    let k = spec.k as f64;
    let target = Operator::identity(Geometry::Sector(spec)).scale(k * k - 1.0);
    let mask = InteriorMask::new(2);
    Ok(CasimirReduction {
        b_deviation: casimir_of(&b.plus, &b.minus, &b.zero)?.max_abs_diff_masked(&target, mask)?,
        a_deviation: casimir_of(&plus, &minus, &zero)?.max_abs_diff_masked(&target, mask)?,
    })
}

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub spec: SectorSpec,
    /// The lowest `n_eigs` eigenvalues (by real part) with residuals.
    pub report: EigenReport,
    /// `βk + ρ(|k|+1+2n)`.
    pub targets: Vec<f64>,
    /// `|λₙ − targetₙ|`.
    pub errors: Vec<f64>,
}

impl SectorSpectrum {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// `βk + ρ(|k|+1+2n)`.
pub fn sector_target(spec: SectorSpec, p: ModelParams, n: usize) -> f64 {
    p.beta * spec.k as f64 + p.rho() * (spec.abs_k() + 1 + 2 * n) as f64
}

pub fn sector_spectrum(spec: SectorSpec, p: ModelParams, n_eigs: usize) -> Result<SectorSpectrum> {
    if n_eigs > spec.depth {
        return Err(Error::InvalidArgument(format!("n_eigs {n_eigs} exceeds depth {}", spec.depth)));
    }
    let h = pseudo_jacobi(spec, p)?.to_dense();
    let all = eigvals_dense(&h)?;
    if !all.converged {
        return Err(Error::NoConvergence { iterations: all.iterations, found: all.values.len(), dim: spec.depth });
    }
    let values = all.values[..n_eigs].to_vec();
    let mut vectors = Array2::zeros((spec.depth, n_eigs));
    let mut residuals = Vec::with_capacity(n_eigs);
    for (i, &lambda) in values.iter().enumerate() {
        let (v, r) = eigenvector_for(&h, lambda)?;
        vectors.column_mut(i).assign(&v);
        residuals.push(r);
    }
    let report = EigenReport { values, vectors: Some(vectors), residuals, iterations: all.iterations, converged: true };
    let targets: Vec<f64> = (0..n_eigs).map(|n| sector_target(spec, p, n)).collect();
    let errors = report.values.iter().zip(&targets).map(|(v, t)| (v - t).norm()).collect();
    Ok(SectorSpectrum { spec, report, targets, errors })
}

#[derive(Clone, Debug)]
pub struct SectorConvergence {
    pub k: i64,
    /// One entry per depth tried.
    pub steps: Vec<SectorSpectrum>,
    /// First depth whose list agreed with the previous one to [`CONVERGENCE_TOL`].
    pub converged_at: Option<usize>,
}

impl SectorConvergence {
    pub fn last(&self) -> &SectorSpectrum {
        self.steps.last().expect("at least one depth")
    }
}

/// Lowest `n_eigs` eigenvalues of sector `k` along a depth schedule (e.g.
/// 30 → 60 → 120). Runs every depth and records where successive lists first
/// agreed.
pub fn converge_sector_spectrum(k: i64, p: ModelParams, n_eigs: usize, depths: &[usize]) -> Result<SectorConvergence> {
    if depths.is_empty() {
        return Err(Error::InvalidArgument("empty depth schedule".into()));
    }
    let mut steps: Vec<SectorSpectrum> = Vec::with_capacity(depths.len());
    let mut converged_at = None;
    for &depth in depths {
        let s = sector_spectrum(SectorSpec::new(k, depth), p, n_eigs)?;
        if let Some(prev) = steps.last() {
            let diff = prev.report.values.iter().zip(&s.report.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if converged_at.is_none() && diff < CONVERGENCE_TOL {
                converged_at = Some(depth);
            }
        }
        steps.push(s);
    }
    Ok(SectorConvergence { k, steps, converged_at })
}

/// Max multiset distance between the spectrum of the full finite-section `H`
/// and the union of its sector sections.
pub fn full_vs_sector_check(p: ModelParams, trunc: TruncationSpec) -> Result<f64> {
    let (h, _) = build_hamiltonian(p, trunc);
    let full = eigvals_dense(&h.to_dense())?;
    let mut union = Vec::with_capacity(trunc.dim());
    for k in -(trunc.n_max_b as i64)..=(trunc.n_max_a as i64) {
        let spec = SectorSpec::new(k, sector_depth_in(trunc, k));
        union.extend(eigvals_dense(&pseudo_jacobi(spec, p)?.to_dense())?.values);
    }
    multiset_distance(&full.values, &union)
}

/// Max interior deviation of `[C, H]` from zero on the full space.
pub fn casimir_commutes_check(p: ModelParams, trunc: TruncationSpec) -> Result<f64> {
    let (h, _) = build_hamiltonian(p, trunc);
    let c = casimir_full(trunc);
    let comm = commutator(&c.casimir, &h)?;
    comm.max_abs_diff_masked(&Operator::zeros(trunc), InteriorMask::new(1))
}

/// Max `|H_full[(i),(j)] − H_sector[i][j]|` over a sector's chain; the sector
/// matrix is the compression of the full one.
pub fn sector_embedding_check(spec: SectorSpec, p: ModelParams, trunc: TruncationSpec) -> Result<f64> {
    let idx = sector_basis(spec, trunc)?;
    let (h, _) = build_hamiltonian(p, trunc);
    let hs = pseudo_jacobi(spec, p)?;
    let mut worst = 0.0_f64;
    for (i, &fi) in idx.iter().enumerate() {
        for (j, &fj) in idx.iter().enumerate() {
            worst = worst.max((h.get(fi, fj) - hs.get(i, j)).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub depth: usize,
    pub lowest: f64,
    /// A few of the lowest eigenvalues, ascending.
    pub low_spectrum: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityScan {
    pub k: i64,
    pub beta: f64,
    pub lambda: f64,
    pub points: Vec<ScanPoint>,
    /// `βk + √(1−λ²)(|k|+1)` when `|λ| < 1`.
    pub target: Option<f64>,
}

/// `γ → iλ`, phase-rotated to the real symmetric tridiagonal with diagonal
/// `βk+|k|+1+2j` and off-diagonal `λ√((j+1)(|k|+j+1))`. Finite sections of a
/// self-adjoint matrix have real eigenvalues, so instability for `|λ| > 1`
/// shows up as the lowest eigenvalue running off to −∞ with depth.
pub fn hermitian_variant_scan(k: i64, beta: f64, lambda: f64, depths: &[usize]) -> Result<StabilityScan> {
    let mut points = Vec::with_capacity(depths.len());
    for &depth in depths {
        let spec = SectorSpec::new(k, depth);
        spec.check_depth(1)?;
        let diag: Vec<f64> = (0..depth).map(|j| beta * k as f64 + (spec.abs_k() + 1 + 2 * j) as f64).collect();
        let off: Vec<f64> = (0..depth - 1).map(|j| lambda * spec.coupling(j)).collect();
        let rep = eig_sym_tridiag(&diag, &off)?;
        let low: Vec<f64> = rep.values.iter().take(4).map(|v| v.re).collect();
        points.push(ScanPoint { depth, lowest: low[0], low_spectrum: low });
    }
    let target =
        (lambda.abs() < 1.0).then(|| beta * k as f64 + (1.0 - lambda * lambda).sqrt() * (k.unsigned_abs() + 1) as f64);
    Ok(StabilityScan { k, beta, lambda, points, target })
}

/// `‖B₋Ψ₀‖/‖Ψ₀‖` and `‖B₀Ψ₀ − (|k|+1)Ψ₀‖/‖Ψ₀‖` for the chain lowest-weight state.
pub fn lowest_weight_residuals(spec: SectorSpec, gamma: f64) -> Result<(f64, f64)> {
    let b = b_generators(spec, gamma)?;
    let psi = lowest_weight_vector(spec, gamma)?;
    let n = psi.norm();
    let lowered = apply(&b.minus, &psi)?.norm() / n;
    let weight = (spec.abs_k() + 1) as f64;
    let eig = apply(&b.zero, &psi)?.sub(&psi.scale(weight))?.norm() / n;
    Ok((lowered, eig))
}

/// Restricts the full-space ladder algebra to a chain: entries of `a*b*`,
/// `ab` and `a*a + bb*` between chain states. Used to cross-check
/// [`su11_generators`] against the Fock construction.
pub fn generators_from_fock(spec: SectorSpec) -> Result<(Operator, Operator, Operator)> {
    let (m, n) = spec.occupation(spec.depth);
    let trunc = TruncationSpec::new(m, n);
    let l = build_ladder_ops(trunc);
    let plus_full = l.a_dag.matmul(&l.b_dag)?;
    let minus_full = l.a.matmul(&l.b)?;
    let zero_full = l.a_dag.matmul(&l.a)?.add(&l.b_dag.matmul(&l.b)?)?.add(&Operator::identity(trunc))?;
    let idx = sector_basis(spec, trunc)?;
    let geom = Geometry::Sector(spec);
    let restrict = |full: &Operator| {
        Operator::from_triplets(
            geom,
            idx.iter()
                .enumerate()
                .flat_map(|(i, &fi)| idx.iter().enumerate().map(move |(j, &fj)| (i, j, full.get(fi, fj)))),
        )
    };
    Ok((restrict(&plus_full), restrict(&minus_full), restrict(&zero_full)))
}
