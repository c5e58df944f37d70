//! The two-boson model
//!
//! ```text
//! H = a*a + b b* + β(a*a − b*b) + γ(a*b* − a b)
//! ```
//!
//! its pseudo-boson operators `c, d, c‡, d‡`, the biorthogonal eigenbases of
//! `H` and `H*`, and the diagonal phase `S` with `H* = S H S⁻¹`.
//!
//! The Hamiltonian matrix is the exact finite section of the model: `b b*` is
//! normal ordered to `b*b + 𝟙` before truncation, and every remaining term is
//! a normal-ordered product of truncated ladder matrices. Pseudo-boson
//! identities (commutators, the diagonal form) then hold exactly on the rows of
//! [`InteriorMask`] with margin 1.
//!
//! States use the orthonormal Fock basis; `Ψ_{m,n} = c‡ᵐ d‡ⁿ Ψ₀` is built by
//! raw powers, so `⟨Ψ′_{p,q}, Ψ_{m,n}⟩ = m!·n!·δ_{mp}δ_{nq}·⟨Ψ₀′,Ψ₀⟩`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    apply, build_ladder_ops, inner_product, FockVector, InteriorMask, LadderOps, Operator, TruncationSpec,
};

/// Tail tolerance for eigenvector construction.
pub const EIGENVECTOR_TAIL_TOL: f64 = 1e-10;
/// Tail tolerance for biorthogonality grids.
pub const BIORTH_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64) -> Self {
        Self { beta, gamma }
    }

    /// `ρ = √(1+γ²)`.
    pub fn rho(&self) -> f64 {
        self.gamma.hypot(1.0)
    }

    /// `α = γ/(1+ρ)`, the vacuum's pair amplitude.
    pub fn alpha(&self) -> f64 {
        self.gamma / (1.0 + self.rho())
    }

    /// The equivalent closed form `(ρ−1)/γ`; undefined at `γ = 0`.
    pub fn alpha_alt(&self) -> Option<f64> {
        (self.gamma != 0.0).then(|| (self.rho() - 1.0) / self.gamma)
    }

    /// `𝒩 = (2γρ)^(−1/2)`, defined for `γ > 0`.
    pub fn norm(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| (2.0 * self.gamma * self.rho()).powf(-0.5))
    }
}

pub fn energy(p: ModelParams, m: usize, n: usize) -> f64 {
    let rho = p.rho();
    rho + m as f64 * (p.beta + rho) + n as f64 * (-p.beta + rho)
}

/// `H` and its conjugate transpose.
pub fn build_hamiltonian(p: ModelParams, trunc: TruncationSpec) -> (Operator, Operator) {
    let l = build_ladder_ops(trunc);
    let h = hamiltonian_from(&l, p);
    let h_adj = h.adjoint();
    (h, h_adj)
}

fn hamiltonian_from(l: &LadderOps, p: ModelParams) -> Operator {
    let trunc = l.trunc();
    let mut entries = Vec::with_capacity(3 * trunc.dim());
    for (i, (m, n)) in trunc.states().enumerate() {
        let diag = (1.0 + p.beta) * m as f64 + (1.0 - p.beta) * n as f64 + 1.0;
        entries.push((i, i, C64::new(diag, 0.0)));
        if p.gamma != 0.0 {
            let pair = p.gamma * (((m + 1) * (n + 1)) as f64).sqrt();
            if let Some(j) = trunc.index(m + 1, n + 1) {
                entries.push((j, i, C64::new(pair, 0.0)));
                entries.push((i, j, C64::new(-pair, 0.0)));
            }
        }
    }
    Operator::from_triplets(trunc, entries)
}

#[derive(Clone, Debug)]
pub struct PseudoBosonSet {
    pub c: Operator,
    pub d: Operator,
    pub c_ddag: Operator,
    pub d_ddag: Operator,
    /// Set at `γ = 0`, where the set falls back to the ordinary bosons.
    pub degenerate: bool,
}

impl PseudoBosonSet {
    /// `(name, operator)` pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, &Operator); 4] {
        [("c", &self.c), ("d", &self.d), ("c‡", &self.c_ddag), ("d‡", &self.d_ddag)]
    }
}

pub fn build_pseudoboson_ops(p: ModelParams, trunc: TruncationSpec) -> Result<PseudoBosonSet> {
    pseudobosons_from(&build_ladder_ops(trunc), p)
}

fn pseudobosons_from(l: &LadderOps, p: ModelParams) -> Result<PseudoBosonSet> {
    if p.gamma < 0.0 {
        return Err(Error::NegativeGamma(p.gamma));
    }
    let Some(norm) = p.norm() else {
        return Ok(PseudoBosonSet {
            c: l.a.clone(),
            d: l.b.clone(),
            c_ddag: l.a_dag.clone(),
            d_ddag: l.b_dag.clone(),
            degenerate: true,
        });
    };
    let rho = p.rho();
    let g = p.gamma;
    let r = |x: f64| C64::new(norm * x, 0.0);
    let combo = |t: &[(C64, &Operator)]| Operator::linear_combination(t);
    Ok(PseudoBosonSet {
        c: combo(&[(r(rho - 1.0), &l.b_dag), (r(g), &l.a)])?,
        d: combo(&[(r(rho - 1.0), &l.a_dag), (r(g), &l.b)])?,
        d_ddag: combo(&[(r(1.0 + rho), &l.b_dag), (r(-g), &l.a)])?,
        c_ddag: combo(&[(r(1.0 + rho), &l.a_dag), (r(-g), &l.b)])?,
        degenerate: false,
    })
}

/// `β(c‡c − d‡d) + ρ(c‡c + d d‡)` assembled from the pseudo-boson set.
pub fn diagonal_form(p: ModelParams, set: &PseudoBosonSet) -> Result<Operator> {
    let cc = set.c_ddag.matmul(&set.c)?;
    let dd = set.d_ddag.matmul(&set.d)?;
    let dd_rev = set.d.matmul(&set.d_ddag)?;
    let rho = p.rho();
    let r = |x: f64| C64::new(x, 0.0);
    Operator::linear_combination(&[(r(p.beta + rho), &cc), (r(-p.beta), &dd), (r(rho), &dd_rev)])
}

/// Max interior deviation between `H` and its pseudo-boson diagonal form.
pub fn diagonal_form_check(p: ModelParams, trunc: TruncationSpec) -> Result<f64> {
    let l = build_ladder_ops(trunc);
    let set = pseudobosons_from(&l, p)?;
    let h = hamiltonian_from(&l, p);
    h.max_abs_diff_masked(&diagonal_form(p, &set)?, InteriorMask::new(1))
}

/// `Ψ₀ = exp(−α a*b*)Φ₀` and `Ψ₀′ = exp(α a*b*)Φ₀` in the orthonormal basis:
/// `⟨n,n|Ψ₀⟩ = (−α)ⁿ`, `⟨n,n|Ψ₀′⟩ = αⁿ`, cut at the shorter mode extent.
pub fn build_vacua(p: ModelParams, trunc: TruncationSpec) -> (FockVector, FockVector) {
    let alpha = p.alpha();
    let mut psi0 = vec![C64::new(0.0, 0.0); trunc.dim()];
    let mut psi0_prime = psi0.clone();
    let mut amp = 1.0;
    for n in 0..=trunc.min_extent() {
        let i = trunc.index(n, n).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        psi0[i] = C64::new(sign * amp, 0.0);
        psi0_prime[i] = C64::new(amp, 0.0);
        amp *= alpha;
    }
    (FockVector::from_coeffs(trunc, psi0).unwrap(), FockVector::from_coeffs(trunc, psi0_prime).unwrap())
}

/// Occupation depth needed so that `Ψ_{m,n}` keeps its vacuum tail above `tol`
/// away from the boundary.
pub fn required_depth(p: ModelParams, m: usize, n: usize, tol: f64) -> usize {
    let alpha = p.alpha().abs();
    let tail = if alpha == 0.0 { 0 } else { (tol.ln() / alpha.ln()).ceil().max(0.0) as usize };
    m + n + tail
}

fn check_depth(p: ModelParams, m: usize, n: usize, trunc: TruncationSpec, tol: f64) -> Result<()> {
    let required = required_depth(p, m, n, tol);
    let available = trunc.min_extent();
    if available < required {
        return Err(Error::TruncationTooShallow { required, available });
    }
    Ok(())
}

fn raise(op: &Operator, v: FockVector, times: usize) -> Result<FockVector> {
    (0..times).try_fold(v, |acc, _| apply(op, &acc))
}

/// Eigenvector of `H`: `Ψ_{m,n} = c‡ᵐ d‡ⁿ Ψ₀`.
pub fn eigenvector(p: ModelParams, m: usize, n: usize, trunc: TruncationSpec) -> Result<FockVector> {
    check_depth(p, m, n, trunc, EIGENVECTOR_TAIL_TOL)?;
    let set = build_pseudoboson_ops(p, trunc)?;
    let (psi0, _) = build_vacua(p, trunc);
    let v = raise(&set.d_ddag, psi0, n)?;
    raise(&set.c_ddag, v, m)
}

/// Eigenvector of `H*`: `Ψ′_{m,n} = c*ᵐ d*ⁿ Ψ₀′`.
pub fn eigenvector_adjoint(p: ModelParams, m: usize, n: usize, trunc: TruncationSpec) -> Result<FockVector> {
    check_depth(p, m, n, trunc, EIGENVECTOR_TAIL_TOL)?;
    let set = build_pseudoboson_ops(p, trunc)?;
    let (_, psi0_prime) = build_vacua(p, trunc);
    let v = raise(&set.d.adjoint(), psi0_prime, n)?;
    raise(&set.c.adjoint(), v, m)
}

/// `‖X v − E v‖ / ‖v‖`.
pub fn relative_residual(op: &Operator, energy: f64, v: &FockVector) -> Result<f64> {
    let vn = v.norm();
    if vn == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(apply(op, v)?.sub(&v.scale(energy))?.norm() / vn)
}

#[derive(Clone, Debug)]
pub struct BiorthReport {
    pub m_max: usize,
    pub n_max: usize,
    /// `gram[(m,n),(p,q)] = ⟨Ψ′_{p,q}, Ψ_{m,n}⟩`, pair `(m,n)` at index `m·(n_max+1)+n`.
    pub gram: Array2<C64>,
    /// `⟨Ψ₀′, Ψ₀⟩`.
    pub scale: C64,
    pub max_offdiag: f64,
    /// Max `|gram[(m,n),(m,n)] − m!n!·scale|`.
    pub max_diag_error: f64,
}

impl BiorthReport {
    pub fn pair_index(&self, m: usize, n: usize) -> usize {
        m * (self.n_max + 1) + n
    }

    pub fn entry(&self, mn: (usize, usize), pq: (usize, usize)) -> C64 {
        self.gram[[self.pair_index(mn.0, mn.1), self.pair_index(pq.0, pq.1)]]
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn biorthogonality_matrix(
    p: ModelParams,
    m_max: usize,
    n_max: usize,
    trunc: TruncationSpec,
) -> Result<BiorthReport> {
    check_depth(p, m_max, n_max, trunc, BIORTH_TAIL_TOL)?;
    let set = build_pseudoboson_ops(p, trunc)?;
    let (psi0, psi0_prime) = build_vacua(p, trunc);
    let c_adj = set.c.adjoint();
    let d_adj = set.d.adjoint();

    let mut right = Vec::new();
    let mut left = Vec::new();
    for m in 0..=m_max {
        for n in 0..=n_max {
            right.push(raise(&set.c_ddag, raise(&set.d_ddag, psi0.clone(), n)?, m)?);
            left.push(raise(&c_adj, raise(&d_adj, psi0_prime.clone(), n)?, m)?);
        }
    }

    let scale = inner_product(&psi0_prime, &psi0)?;
    let size = right.len();
    let mut gram = Array2::zeros((size, size));
    let mut max_offdiag = 0.0_f64;
    let mut max_diag_error = 0.0_f64;
    for (i, r) in right.iter().enumerate() {
        let (m, n) = (i / (n_max + 1), i % (n_max + 1));
        for (j, l) in left.iter().enumerate() {
            let g = inner_product(l, r)?;
            gram[[i, j]] = g;
            if i == j {
                max_diag_error = max_diag_error.max((g - scale * factorial(m) * factorial(n)).norm());
            } else {
                max_offdiag = max_offdiag.max(g.norm());
            }
        }
    }
    Ok(BiorthReport { m_max, n_max, gram, scale, max_offdiag, max_diag_error })
}

/// `i^(−(m+n))` computed exactly.
fn phase_power(power: usize, sign: i32) -> C64 {
    let k = (power % 4) as i32 * sign;
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `S = exp(−iπ/2 (a*a + b*b))`, diagonal with `S|m,n⟩ = (−i)^(m+n)|m,n⟩`.
pub fn similarity_operator(trunc: TruncationSpec) -> Operator {
    Operator::from_diagonal(trunc, trunc.states().map(|(m, n)| phase_power(m + n, -1)).collect())
}

/// Max `|H* − S H S⁻¹|`.
pub fn similarity_check(p: ModelParams, trunc: TruncationSpec) -> Result<f64> {
    let (h, h_adj) = build_hamiltonian(p, trunc);
    let s = similarity_operator(trunc);
    let s_inv = s.adjoint();
    h_adj.max_abs_diff(&s.matmul(&h)?.matmul(&s_inv)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumTable {
    /// `grid[m][n] = E_{m,n}`.
    pub grid: Vec<Vec<f64>>,
    /// Block `k` of the diagonal representation: `k(β+ρ)+ρ + j(−β+ρ)`.
    pub blocks: Vec<Vec<f64>>,
}

pub fn spectrum_table(p: ModelParams, m_max: usize, n_max: usize) -> SpectrumTable {
    let grid: Vec<Vec<f64>> = (0..=m_max).map(|m| (0..=n_max).map(|n| energy(p, m, n)).collect()).collect();
    let rho = p.rho();
    let blocks = (0..=m_max)
        .map(|k| {
            let start = k as f64 * (p.beta + rho) + rho;
            (0..=n_max).map(|j| start + j as f64 * (-p.beta + rho)).collect()
        })
        .collect();
    SpectrumTable { grid, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::commutator;
    use approx::assert_abs_diff_eq;

    const P: ModelParams = ModelParams { beta: 0.5, gamma: 0.75 };

    #[test]
    fn derived_quantities() {
        assert_eq!(P.rho(), 1.25);
        assert_abs_diff_eq!(P.alpha(), 1.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(P.alpha_alt().unwrap(), 1.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(P.norm().unwrap(), (15.0_f64 / 8.0).powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(P.norm().unwrap(), 0.730_296_743_340_221_5, epsilon = 1e-15);
        assert_eq!(ModelParams::new(0.0, 0.0).norm(), None);
        assert_eq!(ModelParams::new(0.0, 0.0).alpha(), 0.0);
    }

    #[test]
    fn uncoupled_hamiltonian_is_harmonic() {
        let t = TruncationSpec::square(4);
        let (h, h_adj) = build_hamiltonian(ModelParams::new(0.0, 0.0), t);
        for (i, (m, n)) in t.states().enumerate() {
            assert_eq!(h.get(i, i).re, (m + n + 1) as f64);
        }
        assert_eq!(h.nnz(), t.dim());
        assert_eq!(h, h_adj);
    }

    #[test]
    fn diagonal_oracle_with_beta() {
        let p = ModelParams::new(0.5, 0.0);
        let t = TruncationSpec::square(3);
        let (h, _) = build_hamiltonian(p, t);
        for (i, (m, n)) in t.states().enumerate() {
            let oracle = (1.0 + p.beta) * m as f64 + (1.0 - p.beta) * n as f64 + 1.0;
            assert_eq!(h.get(i, i).re, oracle);
        }
        let i10 = t.index(1, 0).unwrap();
        assert_eq!(h.get(i10, i10).re, 2.5);
        assert_eq!(energy(p, 1, 0), 2.5);
    }

    #[test]
    fn pair_creation_entry() {
        let t = TruncationSpec::square(3);
        let (h, h_adj) = build_hamiltonian(P, t);
        let (r, c) = (t.index(2, 1).unwrap(), t.index(1, 0).unwrap());
        assert_abs_diff_eq!(h.get(r, c).re, 0.75 * 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(r, c).re, 1.060_660_171_779_821, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(c, r).re, -0.75 * 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(h_adj.get(c, r), h.get(r, c));
    }

    #[test]
    fn pseudoboson_commutators() {
        let t = TruncationSpec::square(6);
        let set = build_pseudoboson_ops(P, t).unwrap();
        let id = Operator::identity(t);
        let mask = InteriorMask::new(1);
        assert!(commutator(&set.c, &set.c_ddag).unwrap().max_abs_diff_masked(&id, mask).unwrap() < 1e-12);
        assert!(commutator(&set.d, &set.d_ddag).unwrap().max_abs_diff_masked(&id, mask).unwrap() < 1e-12);
        let zero = Operator::zeros(t);
        assert!(commutator(&set.c, &set.d_ddag).unwrap().max_abs_diff_masked(&zero, mask).unwrap() < 1e-12);
    }

    #[test]
    fn c_ddag_is_not_the_adjoint_of_c() {
        let set = build_pseudoboson_ops(ModelParams::new(0.0, 1.0), TruncationSpec::square(4)).unwrap();
        assert!(set.c_ddag.max_abs_diff(&set.c.adjoint()).unwrap() > 0.4);
        assert!(set.d_ddag.max_abs_diff(&set.d.adjoint()).unwrap() > 0.4);
    }

    #[test]
    fn gamma_zero_falls_back_to_bosons() {
        let t = TruncationSpec::square(3);
        let set = build_pseudoboson_ops(ModelParams::new(0.3, 0.0), t).unwrap();
        assert!(set.degenerate);
        let l = build_ladder_ops(t);
        assert_eq!(set.c, l.a);
        assert_eq!(set.d_ddag, l.b_dag);
        assert!(diagonal_form_check(ModelParams::new(0.3, 0.0), t).unwrap() < 1e-14);
    }

    #[test]
    fn negative_gamma_is_rejected() {
        let r = build_pseudoboson_ops(ModelParams::new(0.0, -0.5), TruncationSpec::square(2));
        assert!(matches!(r, Err(Error::NegativeGamma(_))));
    }

    #[test]
    fn diagonal_form_holds_on_interior() {
        assert!(diagonal_form_check(P, TruncationSpec::square(8)).unwrap() <= 1e-10);
        assert!(diagonal_form_check(ModelParams::new(2.0, 1.0), TruncationSpec::square(6)).unwrap() <= 1e-10);
    }

    #[test]
    fn vacuum_series() {
        let t = TruncationSpec::square(30);
        let (psi0, psi0p) = build_vacua(P, t);
        let expected = [1.0, -1.0 / 3.0, 1.0 / 9.0, -1.0 / 27.0];
        for (n, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(psi0.coeffs()[t.index(n, n).unwrap()].re, *e, epsilon = 1e-16);
            assert_abs_diff_eq!(psi0p.coeffs()[t.index(n, n).unwrap()].re, e.abs(), epsilon = 1e-16);
        }
        let overlap = inner_product(&psi0p, &psi0).unwrap();
        assert_abs_diff_eq!(overlap.re, 0.9, epsilon = (1.0_f64 / 3.0).powi(60));
        let set = build_pseudoboson_ops(P, t).unwrap();
        assert!(apply(&set.c, &psi0).unwrap().norm() <= 1e-12 * psi0.norm());
        assert!(apply(&set.d, &psi0).unwrap().norm() <= 1e-12 * psi0.norm());
        assert!(apply(&set.c_ddag.adjoint(), &psi0p).unwrap().norm() <= 1e-12);
        assert!(apply(&set.d_ddag.adjoint(), &psi0p).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn energies() {
        assert_eq!(energy(P, 0, 0), 1.25);
        assert_eq!(energy(P, 1, 0), 3.0);
        assert_eq!(energy(P, 0, 1), 2.0);
        assert_eq!(energy(P, 2, 3), 7.0);
        let free = ModelParams::new(0.0, 0.0);
        for (m, n) in [(0, 0), (3, 1), (2, 5)] {
            assert_eq!(energy(free, m, n), (1 + m + n) as f64);
        }
    }

    #[test]
    fn ground_eigenvector_is_vacuum() {
        let t = TruncationSpec::square(30);
        assert_eq!(eigenvector(P, 0, 0, t).unwrap(), build_vacua(P, t).0);
    }

    #[test]
    fn first_excited_residual_and_biorthogonality() {
        let t = TruncationSpec::square(40);
        let (h, _) = build_hamiltonian(P, t);
        let v = eigenvector(P, 1, 0, t).unwrap();
        assert!(relative_residual(&h, energy(P, 1, 0), &v).unwrap() <= 1e-8);
        let left = eigenvector_adjoint(P, 1, 0, t).unwrap();
        let right = eigenvector(P, 0, 1, t).unwrap();
        assert!(inner_product(&left, &right).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn shallow_truncation_is_reported() {
        let r = eigenvector(P, 3, 3, TruncationSpec::square(10));
        assert!(matches!(r, Err(Error::TruncationTooShallow { required: 27, available: 10 })));
    }

    #[test]
    fn gram_examples() {
        let rep = biorthogonality_matrix(P, 2, 2, TruncationSpec::square(40)).unwrap();
        assert_abs_diff_eq!(rep.scale.re, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.entry((1, 1), (1, 1)).re, 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.entry((2, 0), (2, 0)).re, 1.8, epsilon = 1e-9);
        assert!(rep.entry((1, 0), (0, 1)).norm() <= 1e-10);
        assert!(rep.max_offdiag <= 1e-9 && rep.max_diag_error <= 1e-9);
    }

    #[test]
    fn similarity_is_exact() {
        assert!(similarity_check(P, TruncationSpec::square(6)).unwrap() <= 1e-13);
        assert_eq!(similarity_check(ModelParams::new(0.4, 0.0), TruncationSpec::square(6)).unwrap(), 0.0);
        let t = TruncationSpec::new(3, 4);
        let s = similarity_operator(t);
        assert_eq!(s.matmul(&s.adjoint()).unwrap().max_abs_diff(&Operator::identity(t)).unwrap(), 0.0);
    }

    #[test]
    fn spectrum_blocks() {
        let tab = spectrum_table(P, 2, 3);
        assert_eq!(tab.blocks[0], vec![1.25, 2.0, 2.75, 3.5]);
        assert_eq!(tab.blocks[1][0], 3.0);
        assert_eq!(tab.grid[2][3], 7.0);
        assert_eq!(tab.grid, tab.blocks);
        let free = spectrum_table(ModelParams::new(0.0, 0.0), 2, 2);
        assert_eq!(free.blocks[1], vec![2.0, 3.0, 4.0]);
    }
}
