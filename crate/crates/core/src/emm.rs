//! Equation-of-motion method on the span of ladder operators.
//!
//! For a quadratic Hamiltonian, `[H, f]` maps `f = Σ xᵢ a*ᵢ + yᵢ aᵢ` to another
//! ladder combination; the matrix of that map is assembled from
//!
//! ```text
//! [a*ᵢ aⱼ, a*ₖ] = δⱼₖ a*ᵢ        [a*ᵢ aⱼ, aₖ] = −δᵢₖ aⱼ
//! [aᵢ aⱼ, a*ₖ]  = δᵢₖ aⱼ + δⱼₖ aᵢ
//! [a*ᵢ a*ⱼ, aₖ] = −δᵢₖ a*ⱼ − δⱼₖ a*ᵢ
//! ```
//!
//! with coordinates ordered (all creations, then all annihilations).

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{LadderOps, Operator};
use crate::pseudoboson::ModelParams;

/// `H = Σ hᵢⱼ a*ᵢ aⱼ + Σ Pᵢⱼ a*ᵢ a*ⱼ + Σ Qᵢⱼ aᵢ aⱼ + constant`, with `P`, `Q` symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    pub hopping: Array2<C64>,
    pub pair_creation: Array2<C64>,
    pub pair_annihilation: Array2<C64>,
    pub constant: C64,
}

impl QuadraticHamiltonian {
    pub fn new(
        hopping: Array2<C64>,
        pair_creation: Array2<C64>,
        pair_annihilation: Array2<C64>,
        constant: C64,
    ) -> Result<Self> {
        let n = hopping.nrows();
        for m in [&hopping, &pair_creation, &pair_annihilation] {
            if m.dim() != (n, n) {
                return Err(Error::DimensionMismatch { left: n, right: m.nrows().max(m.ncols()) });
            }
        }
        for (name, m) in [("pair_creation", &pair_creation), ("pair_annihilation", &pair_annihilation)] {
            if m.iter().zip(m.t().iter()).any(|(x, y)| x != y) {
                return Err(Error::InvalidArgument(format!("{name} block must be symmetric")));
            }
        }
        Ok(Self { hopping, pair_creation, pair_annihilation, constant })
    }

    /// The two-boson model in normal order:
    /// `(1+β)a*a + (1−β)b*b + 1 + γ(a*b* − ab)`.
    pub fn model(p: ModelParams) -> Self {
        let r = |x: f64| C64::new(x, 0.0);
        let hopping = Array2::from_diag(&Array1::from(vec![r(1.0 + p.beta), r(1.0 - p.beta)]));
        let half = r(0.5 * p.gamma);
        let mut pair_creation = Array2::zeros((2, 2));
        pair_creation[[0, 1]] = half;
        pair_creation[[1, 0]] = half;
        let pair_annihilation = pair_creation.mapv(|z| -z);
        Self { hopping, pair_creation, pair_annihilation, constant: r(1.0) }
    }

    pub fn n_modes(&self) -> usize {
        self.hopping.nrows()
    }

    /// Finite-section matrix on a two-mode truncation. Normal-ordered products
    /// of truncated ladder matrices equal the exact compression.
    pub fn to_operator(&self, ladders: &LadderOps) -> Result<Operator> {
        if self.n_modes() != 2 {
            return Err(Error::InvalidArgument(format!("operator assembly needs 2 modes, got {}", self.n_modes())));
        }
        let create = [&ladders.a_dag, &ladders.b_dag];
        let annihilate = [&ladders.a, &ladders.b];
        let mut terms: Vec<(C64, Operator)> = vec![(self.constant, Operator::identity(ladders.trunc()))];
        for i in 0..2 {
            for j in 0..2 {
                terms.push((self.hopping[[i, j]], create[i].matmul(annihilate[j])?));
                terms.push((self.pair_creation[[i, j]], create[i].matmul(create[j])?));
                terms.push((self.pair_annihilation[[i, j]], annihilate[i].matmul(annihilate[j])?));
            }
        }
        let refs: Vec<(C64, &Operator)> = terms.iter().map(|(c, o)| (*c, o)).collect();
        Operator::linear_combination(&refs)
    }
}

/// Matrix `M` with `[H, f] ↔ M·(x, y)`.
pub fn adjoint_action_matrix(h: &QuadraticHamiltonian) -> Array2<C64> {
    let n = h.n_modes();
    let p_sym = &h.pair_creation + &h.pair_creation.t();
    let q_sym = &h.pair_annihilation + &h.pair_annihilation.t();
    let mut m = Array2::zeros((2 * n, 2 * n));
    m.slice_mut(s![..n, ..n]).assign(&h.hopping);
    m.slice_mut(s![..n, n..]).assign(&p_sym.mapv(|z| -z));
    m.slice_mut(s![n.., ..n]).assign(&q_sym);
    m.slice_mut(s![n.., n..]).assign(&h.hopping.t().mapv(|z| -z));
    m
}

/// The model's 4×4 matrix `T`, ordered `(x_a, x_b, y_a, y_b)`.
pub fn emm_t_matrix(p: ModelParams) -> Array2<f64> {
    let (b, g) = (p.beta, p.gamma);
    ndarray::array![
        [1.0 + b, 0.0, 0.0, -g],
        [0.0, 1.0 - b, -g, 0.0],
        [0.0, -g, -1.0 - b, 0.0],
        [-g, 0.0, 0.0, -1.0 + b],
    ]
}

/// `f = Σ xᵢ a*ᵢ + yᵢ aᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderCombination {
    pub x: Vec<C64>,
    pub y: Vec<C64>,
}

impl LadderCombination {
    pub fn new(x: Vec<C64>, y: Vec<C64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { left: x.len(), right: y.len() });
        }
        Ok(Self { x, y })
    }

    /// From a real coordinate vector `(x…, y…)`.
    pub fn from_coords(coords: &[f64]) -> Self {
        let n = coords.len() / 2;
        let c = |v: &[f64]| v.iter().map(|&t| C64::new(t, 0.0)).collect();
        Self { x: c(&coords[..n]), y: c(&coords[n..]) }
    }

    pub fn coords(&self) -> Array1<C64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { x: self.x.iter().map(|v| v * s).collect(), y: self.y.iter().map(|v| v * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.norm() == 0.0)
    }

    /// `x_a a* + x_b b* + y_a a + y_b b` as a truncated operator.
    pub fn to_operator(&self, ladders: &LadderOps) -> Result<Operator> {
        if self.x.len() != 2 {
            return Err(Error::InvalidArgument(format!("operator assembly needs 2 modes, got {}", self.x.len())));
        }
        Operator::linear_combination(&[
            (self.x[0], &ladders.a_dag),
            (self.x[1], &ladders.b_dag),
            (self.y[0], &ladders.a),
            (self.y[1], &ladders.b),
        ])
    }
}

/// The c-number `[f, g] = Σᵢ (yᶠᵢ xᵍᵢ − xᶠᵢ yᵍᵢ)`.
pub fn symplectic_pairing(f: &LadderCombination, g: &LadderCombination) -> Result<C64> {
    if f.x.len() != g.x.len() {
        return Err(Error::DimensionMismatch { left: f.x.len(), right: g.x.len() });
    }
    Ok((0..f.x.len()).map(|i| f.y[i] * g.x[i] - f.x[i] * g.y[i]).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmmEigenpair {
    pub lambda: f64,
    /// Unnormalized closed-form vector.
    pub vec: LadderCombination,
}

#[derive(Clone, Debug)]
pub struct EmmSolution {
    /// `λ₁ = −β−ρ, λ₂ = β−ρ, λ₃ = −β+ρ, λ₄ = β+ρ` in that order.
    pub pairs: Vec<EmmEigenpair>,
    /// γ = 0: eigenvectors are coordinate axes.
    pub degenerate: bool,
    /// Some eigenvalues coincide (only when `β = ±ρ` or `ρ = 0`).
    pub repeated_eigenvalues: bool,
}

impl EmmSolution {
    /// Pseudo-boson coefficients `(c, d, c‡, d‡)` with `𝒩` applied.
    pub fn pseudoboson_coefficients(&self, p: ModelParams) -> Result<[LadderCombination; 4]> {
        let norm = p.norm().ok_or(Error::DegenerateGamma("pseudo-boson normalization"))?;
        let v = |i: usize| self.pairs[i].vec.scale(norm);
        Ok([v(0), v(1), v(3), v(2)])
    }
}

pub fn emm_eigenpairs(p: ModelParams) -> EmmSolution {
    let rho = p.rho();
    let (b, g) = (p.beta, p.gamma);
    let lambdas = [-b - rho, b - rho, -b + rho, b + rho];
    let degenerate = g == 0.0;
    let vecs: [[f64; 4]; 4] = if degenerate {
        [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]]
    } else {
        [[0.0, rho - 1.0, g, 0.0], [rho - 1.0, 0.0, 0.0, g], [0.0, 1.0 + rho, -g, 0.0], [1.0 + rho, 0.0, 0.0, -g]]
    };
    let scale = lambdas.iter().map(|l| l.abs()).fold(1.0, f64::max);
    let repeated_eigenvalues =
        lambdas.iter().enumerate().any(|(i, a)| lambdas[i + 1..].iter().any(|c| (a - c).abs() <= 1e-12 * scale));
    let pairs = lambdas
        .iter()
        .zip(vecs.iter())
        .map(|(&lambda, v)| EmmEigenpair { lambda, vec: LadderCombination::from_coords(v) })
        .collect();
    EmmSolution { pairs, degenerate, repeated_eigenvalues }
}

#[derive(Clone, Debug)]
pub struct Su11Secular {
    /// `[[2,0,−2γ],[0,−2,−2γ],[−γ,−γ,0]]` acting on `(x, y, z)` of `xA₊ + yA₋ + zA₀`.
    pub matrix: Array2<f64>,
    /// `(2ρ, v₊)`, `(−2ρ, v₋)`, `(0, v₀)`; empty when degenerate.
    pub pairs: Vec<(f64, [f64; 3])>,
    pub degenerate: bool,
}

pub fn su11_secular(gamma: f64) -> Su11Secular {
    let g = gamma;
    let matrix = ndarray::array![[2.0, 0.0, -2.0 * g], [0.0, -2.0, -2.0 * g], [-g, -g, 0.0]];
    if g == 0.0 {
        return Su11Secular { matrix, pairs: Vec::new(), degenerate: true };
    }
    let rho = g.hypot(1.0);
    let pairs = vec![
        (2.0 * rho, [(1.0 + rho) / g, g / (1.0 + rho), -1.0]),
        (-2.0 * rho, [(rho - 1.0) / g, g / (rho - 1.0), 1.0]),
        (0.0, [g, -g, 1.0]),
    ];
    Su11Secular { matrix, pairs, degenerate: false }
}

/// `‖M v − λ v‖₂` for a real matrix.
pub fn real_residual(m: &Array2<f64>, lambda: f64, v: &[f64]) -> f64 {
    let v = Array1::from(v.to_vec());
    (m.dot(&v) - &v * lambda).mapv(|t| t * t).sum().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladder_ops, commutator, InteriorMask, TruncationSpec};
    use crate::linalg::{eigvals_dense, multiset_distance};
    use crate::pseudoboson::{build_hamiltonian, build_pseudoboson_ops};
    use approx::assert_abs_diff_eq;

    const P: ModelParams = ModelParams { beta: 0.5, gamma: 0.75 };

    fn real(m: &Array2<f64>) -> Array2<C64> {
        m.mapv(|t| C64::new(t, 0.0))
    }

    #[test]
    fn number_operator_action() {
        let w = C64::new(1.7, 0.0);
        let h = QuadraticHamiltonian::new(
            Array2::from_elem((1, 1), w),
            Array2::zeros((1, 1)),
            Array2::zeros((1, 1)),
            C64::new(0.0, 0.0),
        )
        .unwrap();
        let m = adjoint_action_matrix(&h);
        assert_eq!(m, ndarray::array![[w, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), -w]]);
    }

    #[test]
    fn constant_has_no_action() {
        let z = Array2::zeros((3, 3));
        let h = QuadraticHamiltonian::new(z.clone(), z.clone(), z, C64::new(4.0, 0.0)).unwrap();
        assert!(adjoint_action_matrix(&h).iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn asymmetric_pair_block_is_rejected() {
        let mut p = Array2::zeros((2, 2));
        p[[0, 1]] = C64::new(1.0, 0.0);
        let r = QuadraticHamiltonian::new(Array2::zeros((2, 2)), p, Array2::zeros((2, 2)), C64::new(0.0, 0.0));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn model_action_is_t() {
        for (b, g) in [(0.5, 0.75), (0.0, 0.0), (-1.3, 2.0), (3.0, 0.1)] {
            let p = ModelParams::new(b, g);
            assert_eq!(adjoint_action_matrix(&QuadraticHamiltonian::model(p)), real(&emm_t_matrix(p)));
        }
    }

    #[test]
    fn model_operator_matches_hamiltonian() {
        let t = TruncationSpec::square(5);
        let l = build_ladder_ops(t);
        let h = QuadraticHamiltonian::model(P).to_operator(&l).unwrap();
        assert!(h.max_abs_diff(&build_hamiltonian(P, t).0).unwrap() <= 1e-13);
    }

    #[test]
    fn t_entries_and_spectrum() {
        let t = emm_t_matrix(P);
        assert_eq!(t[[0, 0]], 1.5);
        assert_eq!(t[[0, 3]], -0.75);
        assert_eq!(t[[2, 2]], -1.5);
        assert!(t.iter().zip(t.t().iter()).all(|(a, b)| a == b));
        let r = eigvals_dense(&real(&t)).unwrap();
        let expected: Vec<C64> = [-1.75, -0.75, 0.75, 1.75].iter().map(|&v| C64::new(v, 0.0)).collect();
        assert!(multiset_distance(&r.values, &expected).unwrap() <= 1e-10);
        assert_eq!(
            emm_t_matrix(ModelParams::new(0.0, 0.0)),
            Array2::from_diag(&Array1::from(vec![1.0, 1.0, -1.0, -1.0]))
        );
    }

    #[test]
    fn closed_form_pairs() {
        let sol = emm_eigenpairs(P);
        assert!(!sol.degenerate && !sol.repeated_eigenvalues);
        let v4 = &sol.pairs[3];
        assert_eq!(v4.lambda, 1.75);
        assert_eq!(v4.vec, LadderCombination::from_coords(&[2.25, 0.0, 0.0, -0.75]));
        let t = emm_t_matrix(P);
        for pair in &sol.pairs {
            let v: Vec<f64> = pair.vec.coords().iter().map(|z| z.re).collect();
            assert!(real_residual(&t, pair.lambda, &v) <= 1e-12);
        }
    }

    #[test]
    fn degenerate_gamma_gives_axes() {
        let p = ModelParams::new(0.2, 0.0);
        let sol = emm_eigenpairs(p);
        assert!(sol.degenerate);
        let t = emm_t_matrix(p);
        for pair in &sol.pairs {
            let v: Vec<f64> = pair.vec.coords().iter().map(|z| z.re).collect();
            assert_eq!(real_residual(&t, pair.lambda, &v), 0.0);
        }
        assert!(sol.pseudoboson_coefficients(p).is_err());
    }

    #[test]
    fn collision_is_flagged() {
        let p = ModelParams::new(2.0_f64.sqrt(), 1.0);
        assert!(emm_eigenpairs(p).repeated_eigenvalues);
    }

    #[test]
    fn pairing_basics() {
        let a = LadderCombination::from_coords(&[0.0, 0.0, 1.0, 0.0]);
        let a_dag = LadderCombination::from_coords(&[1.0, 0.0, 0.0, 0.0]);
        let b_dag = LadderCombination::from_coords(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(symplectic_pairing(&a, &a_dag).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(symplectic_pairing(&a, &b_dag).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn model_pairing_structure() {
        let sol = emm_eigenpairs(P);
        for f in &sol.pairs {
            for g in &sol.pairs {
                let pair = symplectic_pairing(&f.vec, &g.vec).unwrap();
                assert!(((f.lambda + g.lambda) * pair).norm() <= 1e-12);
            }
        }
        let [c, _, c_ddag, _] = sol.pseudoboson_coefficients(P).unwrap();
        assert_abs_diff_eq!(symplectic_pairing(&c, &c_ddag).unwrap().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_reproduce_pseudoboson_operators() {
        let t = TruncationSpec::square(4);
        let l = build_ladder_ops(t);
        let set = build_pseudoboson_ops(P, t).unwrap();
        let coeffs = emm_eigenpairs(P).pseudoboson_coefficients(P).unwrap();
        for (combo, (_, op)) in coeffs.iter().zip(set.named()) {
            assert!(combo.to_operator(&l).unwrap().max_abs_diff(op).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn operator_level_eigen_relations() {
        let t = TruncationSpec::square(8);
        let (h, _) = build_hamiltonian(P, t);
        let set = build_pseudoboson_ops(P, t).unwrap();
        let rho = P.rho();
        let mask = InteriorMask::new(1);
        for (op, lambda) in [
            (&set.c_ddag, P.beta + rho),
            (&set.d_ddag, -P.beta + rho),
            (&set.c, -(P.beta + rho)),
            (&set.d, -(-P.beta + rho)),
        ] {
            let lhs = commutator(&h, op).unwrap();
            assert!(lhs.max_abs_diff_masked(&op.scale(lambda), mask).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn secular_problem() {
        let sec = su11_secular(0.75);
        assert!(!sec.degenerate);
        let values: Vec<f64> = sec.pairs.iter().map(|p| p.0).collect();
        assert_eq!(values, vec![2.5, -2.5, 0.0]);
        let v = sec.pairs[0].1;
        assert_abs_diff_eq!(v[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(v[2], -1.0);
        for (lambda, v) in &sec.pairs {
            assert!(real_residual(&sec.matrix, *lambda, v) <= 1e-12);
        }
        assert_ne!(sec.matrix, sec.matrix.t());
        assert!(su11_secular(0.0).degenerate);
    }
}
