//! Two-qubit simulation of sharp and gentle measurements, plus spectral
//! quantum values of correlation functionals.
//!
//! Observables live in the X-Z plane of the Bloch sphere:
//! `O(theta) = sin(theta) X + cos(theta) Z`, with outcome 0 on the `+1`
//! eigenspace.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bell::{self, BellFunctional};
use crate::boxes::{BipartiteBox, TripartiteBox};
use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Relative convergence tolerance of [`spectral_norm`].
pub const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_CAP: usize = 5_000_000;
const POWER_ITERATION_SEED: u64 = 0x5eed;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2, 2)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `sin(theta) X + cos(theta) Z`.
pub fn observable(theta: f64) -> ComplexMatrix {
    pauli_x() * c(theta.sin()) + pauli_z() * c(theta.cos())
}

/// Projector onto outcome `outcome` of [`observable`]`(theta)`.
pub fn projector(theta: f64, outcome: usize) -> ComplexMatrix {
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    (identity2() + observable(theta) * c(sign)) * c(0.5)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::input(format!("epsilon {epsilon} outside [0, 1/2]")));
    }
    Ok(())
}

/// Kraus pair of a gentle measurement in the computational basis:
/// `E0 = sqrt(1/2+eps)|0><0| + sqrt(1/2-eps)|1><1|`, `E1` with roles swapped.
pub fn kraus_gentle(epsilon: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_epsilon(epsilon)?;
    let hi = (0.5 + epsilon).sqrt();
    let lo = (0.5 - epsilon).sqrt();
    let e0 = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(hi), c(lo)]));
    let e1 = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(lo), c(hi)]));
    Ok((e0, e1))
}

/// The same Kraus pair expressed in the eigenbasis of `O(theta)`.
pub fn kraus_gentle_in_basis(epsilon: f64, theta: f64) -> Result<[ComplexMatrix; 2]> {
    check_epsilon(epsilon)?;
    let hi = c((0.5 + epsilon).sqrt());
    let lo = c((0.5 - epsilon).sqrt());
    let p0 = projector(theta, 0);
    let p1 = projector(theta, 1);
    Ok([&p0 * hi + &p1 * lo, &p0 * lo + &p1 * hi])
}

/// Statistics of a gentle measurement followed by a sharp one on the
/// single-qubit state `alpha|0> + sqrt(1-alpha^2)|1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GentleReport {
    /// `p(b^g = i)`.
    pub gentle_marginal: [f64; 2],
    /// `p~(b' = j)` of the sharp measurement after the gentle one.
    pub sharp_after: [f64; 2],
    /// `max_j |p~(b'=j) - p(b=j)|`.
    pub marginal_deviation: f64,
    /// `max_{i,j} |p~(b^g=i|b'=j) - (1/2 ± eps)|` over `j` with `p(b=j) > 0`.
    pub conditional_deviation: f64,
}

pub fn verify_gentle_assumptions(alpha: f64, epsilon: f64) -> Result<GentleReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::input(format!("amplitude {alpha} outside [0, 1]")));
    }
    let (e0, e1) = kraus_gentle(epsilon)?;
    let psi = DVector::from_vec(vec![c(alpha), c((1.0 - alpha * alpha).max(0.0).sqrt())]);
    let sharp_before = [psi[0].norm_sqr(), psi[1].norm_sqr()];

    let mut gentle_marginal = [0.0; 2];
    // joint[i][j] = p(b^g = i, b' = j)
    let mut joint = [[0.0; 2]; 2];
    for (i, e) in [e0, e1].iter().enumerate() {
        let branch = e * &psi;
        let p_i = branch.norm_squared();
        gentle_marginal[i] = p_i;
        if p_i <= 0.0 {
            continue;
        }
        let post = branch / c(p_i.sqrt());
        for (j, row) in joint[i].iter_mut().enumerate() {
            // p(b'=j | b^g=i) = |<j|psi_i>|^2
            *row = post[j].norm_sqr() * p_i;
        }
    }
    let sharp_after = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let marginal_deviation = (0..2)
        .map(|j| (sharp_after[j] - sharp_before[j]).abs())
        .fold(0.0, f64::max);
    let mut conditional_deviation: f64 = 0.0;
    for j in 0..2 {
        if sharp_before[j] <= 1e-12 {
            continue;
        }
        for i in 0..2 {
            let cond = joint[i][j] / sharp_before[j];
            let expected = if i == j { 0.5 + epsilon } else { 0.5 - epsilon };
            conditional_deviation = conditional_deviation.max((cond - expected).abs());
        }
    }
    Ok(GentleReport {
        gentle_marginal,
        sharp_after,
        marginal_deviation,
        conditional_deviation,
    })
}

/// A two-qubit state with measurement angles for both parties and the
/// strength of a gentle measurement of Bob's first observable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumScenario {
    state: ComplexMatrix,
    pub alice_angles: Vec<f64>,
    pub bob_angles: Vec<f64>,
    pub epsilon: f64,
}

impl QuantumScenario {
    pub fn new(state: ComplexMatrix, alice_angles: Vec<f64>, bob_angles: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if alice_angles.is_empty() || bob_angles.is_empty() {
            return Err(Error::input("each party needs at least one measurement angle"));
        }
        if alice_angles.iter().chain(&bob_angles).any(|t| !t.is_finite()) {
            return Err(Error::input("measurement angles must be finite"));
        }
        validate_density(&state)?;
        Ok(QuantumScenario {
            state,
            alice_angles,
            bob_angles,
            epsilon,
        })
    }

    /// Scenario on `|phi+> = (|00> + |11>)/sqrt(2)`.
    pub fn phi_plus(alice_angles: Vec<f64>, bob_angles: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::new(phi_plus_density(), alice_angles, bob_angles, epsilon)
    }

    pub fn state(&self) -> &ComplexMatrix {
        &self.state
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(QuantumScenario {
            epsilon,
            ..self.clone()
        })
    }
}

pub fn phi_plus_density() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
    &v * v.adjoint()
}

/// `|psi(theta_a)> ⊗ |psi(theta_b)>` where `|psi(theta)>` is the `+1`
/// eigenvector of `O(theta)`.
pub fn product_density(theta_a: f64, theta_b: f64) -> ComplexMatrix {
    let ket = |t: f64| DVector::from_vec(vec![c((t / 2.0).cos()), c((t / 2.0).sin())]);
    let v = ket(theta_a).kronecker(&ket(theta_b));
    &v * v.adjoint()
}

fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::validation("state", format!("expected 4x4, got {}x{}", rho.nrows(), rho.ncols())));
    }
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation("state", "non-finite entries"));
    }
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > STATE_TOL {
        return Err(Error::validation("state", format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::validation("state", format!("trace {tr} is not 1")));
    }
    let min_eig = rho.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -STATE_TOL {
        return Err(Error::validation("state", format!("not positive semidefinite (eigenvalue {min_eig:e})")));
    }
    Ok(())
}

fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> f64 {
    (op * rho).trace().re
}

/// Sharp measurement statistics `p(a,b|x,y) = Tr[(P_a|x ⊗ P_b|y) rho]`.
pub fn quantum_box(s: &QuantumScenario) -> Result<BipartiteBox> {
    let (n, m) = (s.alice_angles.len(), s.bob_angles.len());
    let pa = projectors(&s.alice_angles);
    let pb = projectors(&s.bob_angles);
    let mut probs = Vec::with_capacity(n * m * 4);
    for pax in &pa {
        for pby in &pb {
            for proj_a in pax {
                for proj_b in pby {
                    probs.push(expectation(&s.state, &proj_a.kronecker(proj_b)));
                }
            }
        }
    }
    BipartiteBox::with_tolerance(n, m, probs, STATE_TOL)
}

fn projectors(angles: &[f64]) -> Vec<[ComplexMatrix; 2]> {
    angles.iter().map(|&t| [projector(t, 0), projector(t, 1)]).collect()
}

/// Statistics after a gentle Kraus measurement of Bob's first observable:
/// `p~(a,b,g|x,y) = Tr[(P_a|x ⊗ P_b|y)(1 ⊗ E_g) rho (1 ⊗ E_g)^†]`.
pub fn tripartite_quantum_box(s: &QuantumScenario) -> Result<TripartiteBox> {
    let (n, m) = (s.alice_angles.len(), s.bob_angles.len());
    let kraus = kraus_gentle_in_basis(s.epsilon, s.bob_angles[0])?;
    let branches: Vec<ComplexMatrix> = kraus
        .iter()
        .map(|e| {
            let op = identity2().kronecker(e);
            &op * &s.state * op.adjoint()
        })
        .collect();
    let pa = projectors(&s.alice_angles);
    let pb = projectors(&s.bob_angles);
    let mut probs = Vec::with_capacity(n * m * 8);
    for pax in &pa {
        for pby in &pb {
            for proj_a in pax {
                for proj_b in pby {
                    let joint = proj_a.kronecker(proj_b);
                    for rho_g in &branches {
                        probs.push(expectation(rho_g, &joint));
                    }
                }
            }
        }
    }
    TripartiteBox::with_tolerance(n, m, probs, STATE_TOL)
}

/// Optimal qubit angles for the chain family on `n` settings per party.
///
/// Alice measures at `(2x-1) pi / 2n` and Bob at `(y-1) pi / n`
/// (1-based), which gives `<A_{x+j} B_x> = cos((2j+1) pi / 2n)` and
/// `<A_x B_{x+j}> = cos((2j-1) pi / 2n)`.
pub fn chain_angles(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::input(format!("chain angles need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let alice = (1..=n).map(|x| (2 * x - 1) as f64 * PI / (2.0 * nf)).collect();
    let bob = (1..=n).map(|y| (y - 1) as f64 * PI / nf).collect();
    Ok((alice, bob))
}

/// Angles reaching `2 sqrt(2)` for [`bell::chsh`] on `|phi+>`.
pub fn tsirelson_angles() -> (Vec<f64>, Vec<f64>) {
    (vec![0.0, PI / 2.0], vec![PI / 4.0, -PI / 4.0])
}

/// Largest singular value of `matrix` by power iteration on `C^T C`.
///
/// Zero rows and columns are skipped in the matrix-vector products, so
/// banded matrices cost `O(nnz)` per step.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> Result<f64> {
    let (rows, cols) = matrix.shape();
    if rows == 0 || cols == 0 || matrix.iter().all(|v| *v == 0.0) {
        return Err(Error::input("spectral norm of an empty or zero matrix"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let sparse: Vec<Vec<(usize, f64)>> = (0..rows)
        .map(|i| (0..cols).filter_map(|j| (matrix[(i, j)] != 0.0).then(|| (j, matrix[(i, j)]))).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut cv = vec![0.0; rows];
    let mut w = vec![0.0; cols];
    let mut previous = 0.0;
    let mut restarts = 0;
    for _ in 0..POWER_ITERATION_CAP {
        for (out, row) in cv.iter_mut().zip(&sparse) {
            *out = row.iter().map(|&(j, a)| a * v[j]).sum();
        }
        // Rayleigh quotient of C^T C at unit v
        let estimate = cv.iter().map(|x| x * x).sum::<f64>();
        w.iter_mut().for_each(|x| *x = 0.0);
        for (ci, row) in cv.iter().zip(&sparse) {
            for &(j, a) in row {
                w[j] += a * ci;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 || estimate < 1e-300 {
            // Start vector orthogonal to the row space: restart randomly.
            restarts += 1;
            if restarts > 8 {
                return Err(Error::Numerical("power iteration keeps collapsing to zero".into()));
            }
            v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            previous = 0.0;
            continue;
        }
        if (estimate - previous).abs() <= POWER_ITERATION_TOL * estimate {
            return Ok(estimate.sqrt());
        }
        previous = estimate;
        for (vj, wj) in v.iter_mut().zip(&w) {
            *vj = wj / norm;
        }
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge within {POWER_ITERATION_CAP} steps"
    )))
}

/// All singular values, descending.
pub fn singular_values(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = matrix.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Correlator matrix of a correlation-form functional.
pub fn correlator_matrix(f: &BellFunctional) -> Result<DMatrix<f64>> {
    let rows = f
        .correlator_matrix()
        .ok_or_else(|| Error::UnsupportedForm("functional has no correlator matrix".into()))?;
    Ok(DMatrix::from_fn(f.n(), f.m(), |i, j| rows[i][j]))
}

/// Upper bound `sqrt(n m) ||C||` on the quantum value of a correlation
/// functional; `n ||C||` for square matrices.
pub fn quantum_bound(f: &BellFunctional) -> Result<f64> {
    let c = correlator_matrix(f)?;
    Ok(((f.n() * f.m()) as f64).sqrt() * spectral_norm(&c)?)
}

/// `2n cos(pi / 2n)`.
pub fn chain_quantum_value(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * (PI / (2.0 * nf)).cos()
}

/// `n csc(pi / 2n) sin(k pi / n)`.
pub fn generalized_chain_quantum_value(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    nf * (k as f64 * PI / nf).sin() / (PI / (2.0 * nf)).sin()
}

/// Closed-form eigenvalues of the generalized-chain matrix with phases
/// `omega_j = exp(-i pi (2j+1) / n)`:
/// `lambda_j = (sum_{i=1}^{k+1} omega^{n-i} - sum_{i=n-k+2}^{n} omega^{n-i}) / omega^{n-1}`.
pub fn gen_chain_eigenvalues(n: usize, k: usize) -> Result<Vec<Complex64>> {
    if k < 1 || 2 * k > n {
        return Err(Error::input(format!("generalized chain needs 1 <= k <= n/2, got n={n} k={k}")));
    }
    let nf = n as f64;
    Ok((0..n)
        .map(|j| {
            let omega = Complex64::from_polar(1.0, -PI * (2 * j + 1) as f64 / nf);
            let pow = |e: usize| omega.powu(e as u32);
            let plus: Complex64 = (1..=k + 1).map(|i| pow(n - i)).sum();
            let minus: Complex64 = (n - k + 2..=n).map(|i| pow(n - i)).sum();
            (plus - minus) / pow(n - 1)
        })
        .collect())
}

/// Quantum CHSH monogamy `beta^2 + 4 <B1^g B1>^2 <= 8` on the gentle
/// extension of a 2x2 scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MonogamyReport {
    /// Largest `|beta|` over the CHSH variants with Bob's settings fixed.
    pub beta: f64,
    pub gentle_correlator: f64,
    pub lhs: f64,
    pub holds: bool,
}

/// Tolerance on the right-hand side `8` of the quantum monogamy check.
pub const MONOGAMY_TOL: f64 = 1e-8;

pub fn quantum_monogamy_check(s: &QuantumScenario) -> Result<MonogamyReport> {
    if s.alice_angles.len() != 2 || s.bob_angles.len() != 2 {
        return Err(Error::input("quantum monogamy check needs a 2x2 (CHSH) scenario"));
    }
    let tri = tripartite_quantum_box(s)?;
    let after = tri.marginalize_with_tolerance(STATE_TOL)?;
    let beta = chsh_variants_max(&after);
    let gentle_correlator = tri.gentle_correlator();
    let lhs = beta * beta + 4.0 * gentle_correlator * gentle_correlator;
    Ok(MonogamyReport {
        beta,
        gentle_correlator,
        lhs,
        holds: lhs <= 8.0 + MONOGAMY_TOL,
    })
}

/// `max |beta|` over the four placements of the minus sign in CHSH.
/// Each placement is reached from the standard form by relabeling Alice
/// alone, so Bob's gently measured setting keeps its role.
pub fn chsh_variants_max(p: &BipartiteBox) -> f64 {
    let e = |x, y| p.correlator_unchecked(x, y);
    let total = e(0, 0) + e(0, 1) + e(1, 0) + e(1, 1);
    (0..2)
        .flat_map(|x| (0..2).map(move |y| (x, y)))
        .map(|(x, y)| (total - 2.0 * e(x, y)).abs())
        .fold(0.0, f64::max)
}

/// Deterministic pseudo-random `(alpha, epsilon)` pairs for assumption checks.
pub fn sample_gentle_parameters(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=0.5)))
        .collect()
}

/// Evaluates `f` on the sharp statistics of `s`.
pub fn quantum_value_of(f: &BellFunctional, s: &QuantumScenario) -> Result<f64> {
    bell::evaluate(f, &quantum_box(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chain, chsh, generalized_chain};
    use crate::boxes::disturbance_total;
    use approx::assert_abs_diff_eq;

    fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn kraus_operators() {
        let (e0, e1) = kraus_gentle(0.0).unwrap();
        let half = ComplexMatrix::identity(2, 2) * c(std::f64::consts::FRAC_1_SQRT_2);
        assert!(max_abs_diff(&e0, &half) < 1e-15);
        assert!(max_abs_diff(&e1, &half) < 1e-15);

        let (e0, e1) = kraus_gentle(0.5).unwrap();
        assert!(max_abs_diff(&e0, &projector(0.0, 0)) < 1e-15);
        assert!(max_abs_diff(&e1, &projector(0.0, 1)) < 1e-15);

        let (e0, e1) = kraus_gentle(0.3).unwrap();
        assert_abs_diff_eq!(e0[(0, 0)].re, 0.8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e0[(1, 1)].re, 0.2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e1[(0, 0)].re, 0.2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e1[(1, 1)].re, 0.8f64.sqrt(), epsilon = 1e-15);

        assert!(kraus_gentle(-0.1).is_err());
        assert!(kraus_gentle(0.51).is_err());
    }

    #[test]
    fn kraus_completeness_on_grid() {
        for i in 0..50 {
            let eps = 0.5 * i as f64 / 49.0;
            let (e0, e1) = kraus_gentle(eps).unwrap();
            let sum = e0.adjoint() * &e0 + e1.adjoint() * &e1;
            assert!(max_abs_diff(&sum, &ComplexMatrix::identity(2, 2)) <= 1e-14);
        }
    }

    #[test]
    fn gentle_assumptions_examples() {
        let r = verify_gentle_assumptions(1.0, 0.2).unwrap();
        assert_abs_diff_eq!(r.gentle_marginal[0], 0.7, epsilon = 1e-12);
        assert!(r.marginal_deviation <= 1e-12 && r.conditional_deviation <= 1e-12);

        let r = verify_gentle_assumptions(std::f64::consts::FRAC_1_SQRT_2, 0.3).unwrap();
        // p(b'=0 | b^g=0) = (1/2+eps) alpha^2 / p(b^g=0) = 0.4 / 0.5
        let cond = 0.8 * 0.5 / r.gentle_marginal[0];
        assert_abs_diff_eq!(cond, 0.8, epsilon = 1e-12);
        assert!(r.marginal_deviation <= 1e-12 && r.conditional_deviation <= 1e-12);

        let r = verify_gentle_assumptions(0.6, 0.0).unwrap();
        assert_abs_diff_eq!(r.gentle_marginal[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.sharp_after[0], 0.36, epsilon = 1e-12);
    }

    #[test]
    fn phi_plus_correlators_are_angle_differences() {
        let s = QuantumScenario::phi_plus(vec![0.0, 0.3, 1.1], vec![0.7, -0.4], 0.0).unwrap();
        let p = quantum_box(&s).unwrap();
        for (x, ta) in s.alice_angles.iter().enumerate() {
            for (y, tb) in s.bob_angles.iter().enumerate() {
                assert_abs_diff_eq!(p.correlator(x, y).unwrap(), (ta - tb).cos(), epsilon = 1e-10);
            }
        }
        let s = QuantumScenario::phi_plus(vec![0.0], vec![PI / 8.0], 0.0).unwrap();
        assert_abs_diff_eq!(quantum_box(&s).unwrap().correlator(0, 0).unwrap(), 0.9238795325112867, epsilon = 1e-12);
    }

    #[test]
    fn tsirelson_scenario() {
        let (a, b) = tsirelson_angles();
        let s = QuantumScenario::phi_plus(a, b, 0.0).unwrap();
        assert_abs_diff_eq!(quantum_value_of(&chsh(), &s).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn equal_angles_give_perfect_correlation() {
        let t = vec![0.2, 1.3, 2.9];
        let p = quantum_box(&QuantumScenario::phi_plus(t.clone(), t, 0.0).unwrap()).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(p.correlator(x, x).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_angle_layout() {
        let (a, b) = chain_angles(2).unwrap();
        assert_abs_diff_eq!(a[0], PI / 4.0);
        assert_abs_diff_eq!(a[1], 3.0 * PI / 4.0);
        assert_eq!(b, vec![0.0, PI / 2.0]);
        for n in 2..10 {
            let (a, b) = chain_angles(n).unwrap();
            for w in b.windows(2).chain(a.windows(2)) {
                assert_abs_diff_eq!(w[1] - w[0], PI / n as f64, epsilon = 1e-14);
            }
        }
        assert!(chain_angles(1).is_err());
    }

    #[test]
    fn chain_angle_correlators() {
        for n in [3usize, 5, 8] {
            let (a, b) = chain_angles(n).unwrap();
            let p = quantum_box(&QuantumScenario::phi_plus(a, b, 0.0).unwrap()).unwrap();
            let nf = n as f64;
            for x in 0..n {
                for j in 0..n - x {
                    let below = ((2 * j + 1) as f64 * PI / (2.0 * nf)).cos();
                    assert_abs_diff_eq!(p.correlator(x + j, x).unwrap(), below, epsilon = 1e-10);
                    let above = ((2.0 * j as f64 - 1.0) * PI / (2.0 * nf)).cos();
                    assert_abs_diff_eq!(p.correlator(x, x + j).unwrap(), above, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn gentle_extension_at_zero_strength_is_identity_channel() {
        let (a, b) = chain_angles(3).unwrap();
        let s = QuantumScenario::phi_plus(a, b, 0.0).unwrap();
        let p = quantum_box(&s).unwrap();
        let tri = tripartite_quantum_box(&s).unwrap();
        let after = tri.marginalize().unwrap();
        for (u, v) in p.probs().iter().zip(after.probs()) {
            assert!((u - v).abs() <= 1e-10);
        }
        assert!(disturbance_total(&p, &after, 0).unwrap().total <= 1e-10);
    }

    #[test]
    fn gentle_correlator_is_twice_epsilon() {
        let (a, b) = tsirelson_angles();
        for eps in [0.0, 0.07, 0.25, 0.5] {
            let s = QuantumScenario::phi_plus(a.clone(), b.clone(), eps).unwrap();
            let tri = tripartite_quantum_box(&s).unwrap();
            assert_abs_diff_eq!(tri.gentle_correlator(), 2.0 * eps, epsilon = 1e-10);
            assert!(tri.max_signaling() <= 1e-10);
        }
    }

    #[test]
    fn sharp_measurement_reduces_chsh() {
        let (a, b) = tsirelson_angles();
        let s = QuantumScenario::phi_plus(a, b, 0.5).unwrap();
        let after = tripartite_quantum_box(&s).unwrap().marginalize().unwrap();
        let beta = bell::evaluate(&chsh(), &after).unwrap();
        assert!(beta < 2.0 * 2f64.sqrt() - 0.5);
        // (2 sqrt 2 - 2)/2 is the quantum bound at eps = 1/2
        assert!(beta <= 2.0 + 1e-10);
    }

    #[test]
    fn quantum_monogamy_examples() {
        let (a, b) = tsirelson_angles();
        let r = quantum_monogamy_check(&QuantumScenario::phi_plus(a.clone(), b.clone(), 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.lhs, 8.0, epsilon = 1e-9);
        assert!(r.holds);
        let r = quantum_monogamy_check(&QuantumScenario::phi_plus(a.clone(), b.clone(), 0.5).unwrap()).unwrap();
        assert!(r.beta <= 2.0 + 1e-9 && r.holds);
        let product = QuantumScenario::new(product_density(0.3, 1.2), a, b, 0.4).unwrap();
        let r = quantum_monogamy_check(&product).unwrap();
        assert!(r.beta <= 2.0 + 1e-10);
        assert!(r.lhs <= 4.0 + 4.0 * 0.8 * 0.8 + 1e-10 && r.holds);
        let wide = QuantumScenario::phi_plus(vec![0.0; 3], vec![0.0; 2], 0.1).unwrap();
        assert!(matches!(quantum_monogamy_check(&wide), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_invalid_states() {
        let mut rho = phi_plus_density();
        rho[(0, 0)] = c(2.0);
        assert!(QuantumScenario::new(rho, vec![0.0], vec![0.0], 0.0).is_err());
        let neg = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5), c(-0.5), c(0.0), c(0.0)]));
        assert!(QuantumScenario::new(neg, vec![0.0], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        let chsh_m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        assert_abs_diff_eq!(spectral_norm(&chsh_m).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(spectral_norm(&DMatrix::identity(3, 3)).unwrap(), 1.0, epsilon = 1e-12);
        let g = correlator_matrix(&generalized_chain(6, 2).unwrap()).unwrap();
        let closed = generalized_chain_quantum_value(6, 2);
        assert_abs_diff_eq!(6.0 * spectral_norm(&g).unwrap(), closed, epsilon = 1e-6);
        assert_abs_diff_eq!(closed, 20.0764, epsilon = 1e-4);
        assert!(spectral_norm(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn spectral_norm_recovers_from_orthogonal_start() {
        // all-ones start vector lies in the kernel
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0]);
        assert_abs_diff_eq!(spectral_norm(&m).unwrap(), 10f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn eigenvalue_formula_matches_singular_values() {
        for n in 2..=12 {
            for k in 1..=n / 2 {
                let mut lam: Vec<f64> = gen_chain_eigenvalues(n, k).unwrap().iter().map(|z| z.norm()).collect();
                lam.sort_by(|a, b| b.total_cmp(a));
                let sv = singular_values(&correlator_matrix(&generalized_chain(n, k).unwrap()).unwrap());
                for (l, s) in lam.iter().zip(&sv) {
                    assert!((l - s).abs() <= 1e-9, "n={n} k={k}: {l} vs {s}");
                }
                assert_abs_diff_eq!(n as f64 * lam[0], generalized_chain_quantum_value(n, k), epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(
            2.0 * gen_chain_eigenvalues(2, 1).unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(gen_chain_eigenvalues(4, 3).is_err());
    }

    #[test]
    fn chain_strategy_attains_the_spectral_bound() {
        for n in 2..=8 {
            for k in 1..=n / 2 {
                let f = generalized_chain(n, k).unwrap();
                let (a, b) = chain_angles(n).unwrap();
                let attained = quantum_value_of(&f, &QuantumScenario::phi_plus(a, b, 0.0).unwrap()).unwrap();
                let bound = quantum_bound(&f).unwrap();
                assert!((attained - bound).abs() <= 1e-9, "n={n} k={k}: {attained} vs {bound}");
            }
            let attained = {
                let (a, b) = chain_angles(n).unwrap();
                quantum_value_of(&chain(n).unwrap(), &QuantumScenario::phi_plus(a, b, 0.0).unwrap()).unwrap()
            };
            assert_abs_diff_eq!(attained, chain_quantum_value(n), epsilon = 1e-9);
        }
    }
}
