//! Runtime invariant suites with fixed seeds, plus the random generators
//! they draw from.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bell::{self, BellFunctional};
use crate::boxes::{deterministic_box, disturbance_total, make_pr_box, BipartiteBox, TripartiteBox};
use crate::error::{Error, Result};
use crate::lp::{self, solve_lp, LpProblem, LpStatus, Relation, Sense};
use crate::quantum::{self, QuantumScenario};
use crate::tradeoff;

pub const DEFAULT_SEED: u64 = 20_160_901;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Box,
    Lp,
    Quantum,
    Tradeoff,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "all" => Ok(Suite::All),
            "box" => Ok(Suite::Box),
            "lp" => Ok(Suite::Lp),
            "quantum" => Ok(Suite::Quantum),
            "tradeoff" => Ok(Suite::Tradeoff),
            other => Err(Error::input(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    /// Replaces the per-check slack when set.
    pub tol: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: DEFAULT_SEED,
            tol: None,
        }
    }
}

impl CheckConfig {
    fn slack(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// Outcome of one property. `worst` is the largest violation seen
/// (negative when every sample held with room to spare).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub samples: usize,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} (samples {}, worst excess {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            crate::io::format_sig(self.worst)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

/// Tracks the largest `value - allowed` over a property's samples.
struct Tally {
    name: String,
    worst: f64,
    samples: usize,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            name: name.to_string(),
            worst: f64::NEG_INFINITY,
            samples: 0,
        }
    }

    /// Records the requirement `value <= allowed`.
    fn at_most(&mut self, value: f64, allowed: f64) {
        let excess = value - allowed;
        self.worst = if excess.is_nan() { f64::INFINITY } else { self.worst.max(excess) };
        self.samples += 1;
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            passed: self.samples > 0 && self.worst <= 0.0,
            name: self.name,
            worst: self.worst,
            samples: self.samples,
        }
    }
}

/// Runs the requested suite. Errors from the library count as failures.
pub fn run_suite(suite: Suite, cfg: &CheckConfig) -> SuiteReport {
    let groups: &[fn(&CheckConfig) -> Vec<Result<CheckOutcome>>] = match suite {
        Suite::All => &[box_suite, lp_suite, quantum_suite, tradeoff_suite],
        Suite::Box => &[box_suite],
        Suite::Lp => &[lp_suite],
        Suite::Quantum => &[quantum_suite],
        Suite::Tradeoff => &[tradeoff_suite],
    };
    let outcomes = groups
        .iter()
        .flat_map(|g| g(cfg))
        .map(|r| {
            r.unwrap_or_else(|e| CheckOutcome {
                name: format!("error: {e}"),
                passed: false,
                worst: f64::INFINITY,
                samples: 0,
            })
        })
        .collect();
    SuiteReport { outcomes }
}

/// Box with `a xor b = f(x, y)` and uniform marginals.
pub fn xor_box(n: usize, m: usize, f: impl Fn(usize, usize) -> usize) -> Result<BipartiteBox> {
    BipartiteBox::from_fn(n, m, |x, y, a, b| if a ^ b == f(x, y) & 1 { 0.5 } else { 0.0 })
}

fn mixture(n: usize, m: usize, parts: &[(f64, BipartiteBox)]) -> Result<BipartiteBox> {
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    let mut probs = vec![0.0; n * m * 4];
    for (w, p) in parts {
        for (acc, v) in probs.iter_mut().zip(p.probs()) {
            *acc += w / total * v;
        }
    }
    BipartiteBox::new(n, m, probs)
}

fn random_extremal(rng: &mut impl Rng, n: usize, m: usize) -> Result<BipartiteBox> {
    if rng.gen_bool(0.5) {
        let alice: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let bob: Vec<usize> = (0..m).map(|_| rng.gen_range(0..2)).collect();
        deterministic_box(&alice, &bob)
    } else {
        let table: Vec<usize> = (0..n * m).map(|_| rng.gen_range(0..2)).collect();
        xor_box(n, m, |x, y| table[x * m + y])
    }
}

/// Random convex mixture of deterministic and XOR boxes.
pub fn random_ns_box(rng: &mut impl Rng, n: usize, m: usize) -> Result<BipartiteBox> {
    let parts = (0..rng.gen_range(1..=4))
        .map(|_| Ok((rng.gen_range(0.05..1.0), random_extremal(rng, n, m)?)))
        .collect::<Result<Vec<_>>>()?;
    mixture(n, m, &parts)
}

/// Random no-signaling extension: mixture of products `q ⊗ r` with
/// random boxes `q` and coins `r`.
pub fn random_tripartite(rng: &mut impl Rng, n: usize, m: usize) -> Result<TripartiteBox> {
    let count = rng.gen_range(1..=4);
    let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs = vec![0.0; n * m * 8];
    for w in weights {
        let u = rng.gen_range(0.0..=1.0);
        let part = TripartiteBox::product(&random_extremal(rng, n, m)?, [u, 1.0 - u])?;
        for (acc, v) in probs.iter_mut().zip(part.probs()) {
            *acc += w / total * v;
        }
    }
    TripartiteBox::new(n, m, probs)
}

/// Applies a random stochastic map to Bob's output at every setting
/// except `keep`. Alice's marginals and no-signaling are preserved.
pub fn random_bob_channel(rng: &mut impl Rng, p: &BipartiteBox, keep: usize) -> Result<BipartiteBox> {
    let m = p.n_inputs_b();
    let maps: Vec<[[f64; 2]; 2]> = (0..m)
        .map(|y| {
            if y == keep {
                [[1.0, 0.0], [0.0, 1.0]]
            } else {
                let (s, t) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
                // maps[y][from][to]
                [[s, 1.0 - s], [t, 1.0 - t]]
            }
        })
        .collect();
    BipartiteBox::from_fn(p.n_inputs_a(), m, |x, y, a, b| {
        (0..2).map(|from| p.p(x, y, a, from) * maps[y][from][b]).sum()
    })
}

fn box_suite(cfg: &CheckConfig) -> Vec<Result<CheckOutcome>> {
    vec![
        check_marginal_no_signaling(cfg),
        check_disturbance_nonnegative(cfg),
        check_disturbance_bound(cfg),
        check_correlator_form(cfg),
        check_linearity(cfg),
    ]
}

fn check_marginal_no_signaling(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(1);
    let mut t = Tally::new("marginalized extensions are no-signaling");
    for _ in 0..200 {
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let tri = random_tripartite(&mut rng, n, m)?;
        t.at_most(tri.marginalize()?.max_signaling(), cfg.slack(1e-9));
    }
    Ok(t.finish())
}

fn check_disturbance_nonnegative(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(2);
    let mut t = Tally::new("disturbance is nonnegative and vanishes on identical boxes");
    for _ in 0..200 {
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let p = random_ns_box(&mut rng, n, m)?;
        let q = random_bob_channel(&mut rng, &p, 0)?;
        t.at_most(-disturbance_total(&p, &q, 0)?.total, 0.0);
        t.at_most(disturbance_total(&p, &p, 0)?.total, cfg.slack(1e-12));
    }
    Ok(t.finish())
}

fn library_functionals(n: usize) -> Result<Vec<BellFunctional>> {
    let mut fs = Vec::new();
    if n == 2 {
        fs.push(bell::chsh());
    }
    if n >= 2 {
        fs.push(bell::chain(n)?);
        for k in 2..=n / 2 {
            fs.push(bell::generalized_chain(n, k)?);
        }
    }
    Ok(fs)
}

/// `n D >= |beta(p) - beta(p~)|` for rescaled functionals.
fn check_disturbance_bound(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(3);
    let mut t = Tally::new("n * disturbance bounds the change of every rescaled functional");
    for _ in 0..200 {
        let n = rng.gen_range(2..=5);
        let p = random_ns_box(&mut rng, n, n)?;
        let q = random_bob_channel(&mut rng, &p, 0)?;
        let d = disturbance_total(&p, &q, 0)?.total;
        let mut fs = library_functionals(n)?;
        let random_rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        fs.push(bell::rescale(&BellFunctional::from_correlators(&random_rows)?)?);
        for f in &fs {
            let gap = (bell::evaluate(f, &p)? - bell::evaluate(f, &q)?).abs();
            t.at_most(gap, n as f64 * d + cfg.slack(1e-7));
        }
    }
    Ok(t.finish())
}

fn check_correlator_form(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(4);
    let mut t = Tally::new("correlation-form evaluation matches sum C_xy <A_x B_y>");
    for _ in 0..100 {
        let (n, m) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let f = BellFunctional::from_correlators(&rows)?;
        let p = random_ns_box(&mut rng, n, m)?;
        let mut direct = 0.0;
        for (x, row) in rows.iter().enumerate() {
            for (y, c) in row.iter().enumerate() {
                direct += c * p.correlator(x, y)?;
            }
        }
        t.at_most((bell::evaluate(&f, &p)? - direct).abs(), cfg.slack(1e-12));
    }
    Ok(t.finish())
}

fn check_linearity(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(5);
    let mut t = Tally::new("evaluation is linear in the box");
    for _ in 0..100 {
        let n = rng.gen_range(2..=5);
        let (p, q) = (random_ns_box(&mut rng, n, n)?, random_ns_box(&mut rng, n, n)?);
        let lambda = rng.gen_range(0.0..=1.0);
        let f = bell::chain(n)?;
        let mixed = bell::evaluate(&f, &p.mix(&q, lambda)?)?;
        let split = lambda * bell::evaluate(&f, &p)? + (1.0 - lambda) * bell::evaluate(&f, &q)?;
        t.at_most((mixed - split).abs(), cfg.slack(1e-12));
    }
    Ok(t.finish())
}

fn lp_suite(cfg: &CheckConfig) -> Vec<Result<CheckOutcome>> {
    vec![
        check_ns_equals_algebraic(cfg),
        check_value_ordering(cfg),
        check_relevance_lower_bound(cfg),
        check_adversary_bounds(cfg),
        check_lp_against_vertices(cfg),
    ]
}

fn named_functionals() -> Result<Vec<BellFunctional>> {
    let mut fs = vec![bell::chsh()];
    for n in 2..=8 {
        fs.push(bell::chain(n)?);
    }
    for n in 2..=10 {
        for k in 1..=n / 2 {
            fs.push(bell::generalized_chain(n, k)?);
        }
    }
    Ok(fs)
}

fn check_ns_equals_algebraic(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("no-signaling value equals the algebraic maximum");
    for f in named_functionals()? {
        t.at_most((lp::ns_value(&f)? - f.algebraic_max()).abs(), cfg.slack(1e-6));
    }
    Ok(t.finish())
}

fn check_value_ordering(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(6);
    let mut t = Tally::new("classical <= no-signaling <= algebraic");
    let mut fs = named_functionals()?;
    for _ in 0..20 {
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        fs.push(BellFunctional::from_correlators(&rows)?);
    }
    for f in &fs {
        let (cl, ns) = (bell::classical_value(f)?, lp::ns_value(f)?);
        t.at_most(cl, ns + cfg.slack(1e-6));
        t.at_most(ns, f.algebraic_max() + cfg.slack(1e-6));
    }
    Ok(t.finish())
}

fn check_relevance_lower_bound(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(7);
    let mut t = Tally::new("relevance >= min(n, ns - classical) for total XOR games");
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect())
            .collect();
        let f = BellFunctional::from_correlators(&rows)?;
        let gap = lp::ns_value(&f)? - bell::classical_value(&f)?;
        t.at_most((n as f64).min(gap), lp::relevance(&f, 0)? + cfg.slack(1e-6));
    }
    Ok(t.finish())
}

/// Boxes the adversary is run against: PR, Tsirelson, chain-angle and
/// random boxes.
fn adversary_cases(rng: &mut impl Rng) -> Result<Vec<BipartiteBox>> {
    let (a, b) = quantum::tsirelson_angles();
    let mut cases = vec![make_pr_box(), quantum::quantum_box(&QuantumScenario::phi_plus(a, b, 0.0)?)?];
    for n in [2, 3] {
        let (a, b) = quantum::chain_angles(n)?;
        cases.push(quantum::quantum_box(&QuantumScenario::phi_plus(a, b, 0.0)?)?);
    }
    for _ in 0..4 {
        let n = rng.gen_range(2..=3);
        cases.push(random_ns_box(rng, n, n)?);
    }
    Ok(cases)
}

/// Main trade-off and monogamy on the adversary's optimal extension.
fn check_adversary_bounds(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(8);
    let mut t = Tally::new("adversary optimum respects the trade-off and monogamy");
    for p in adversary_cases(&mut rng)? {
        let n = p.n_inputs_a();
        let mut scored = Vec::new();
        for f in library_functionals(n)? {
            let (w, ns) = (lp::relevance(&f, 0)?, lp::ns_value(&f)?);
            scored.push((bell::evaluate(&f, &p)?, f, w, ns));
        }
        for step in 0..=5 {
            let eps = 0.1 * step as f64;
            let r = lp::min_disturbance_adversary(&p, eps)?;
            let after = r.extension.marginalize_with_tolerance(lp::RESIDUAL_TOL)?;
            let gentle = r.extension.gentle_correlator();
            for (beta, f, w, ns) in &scored {
                let bound = tradeoff::bound_general(n, *w, eps, beta.min(*ns), *ns)?;
                t.at_most(bound, r.d_min + cfg.slack(1e-6));
                t.at_most(bell::evaluate(f, &after)? + w * gentle, ns + cfg.slack(1e-6));
            }
        }
    }
    Ok(t.finish())
}

/// Optimum of `max c.x` over `A x <= b, x >= 0` by enumerating every
/// vertex of a 3-variable polytope.
pub fn vertex_optimum(c: [f64; 3], rows: &[([f64; 3], f64)]) -> Option<f64> {
    let mut planes: Vec<([f64; 3], f64)> = rows.to_vec();
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = -1.0;
        planes.push((e, 0.0));
    }
    let feasible = |x: &Vector3<f64>| planes.iter().all(|(a, b)| a[0] * x[0] + a[1] * x[1] + a[2] * x[2] <= b + 1e-9);
    let mut best: Option<f64> = None;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let (pi, pj, pk) = (planes[i], planes[j], planes[k]);
                let a = Matrix3::from_row_slice(&[
                    pi.0[0], pi.0[1], pi.0[2], pj.0[0], pj.0[1], pj.0[2], pk.0[0], pk.0[1], pk.0[2],
                ]);
                if a.determinant().abs() < 1e-9 {
                    continue;
                }
                let Some(x) = a.lu().solve(&Vector3::new(pi.1, pj.1, pk.1)) else {
                    continue;
                };
                if feasible(&x) {
                    let v = c[0] * x[0] + c[1] * x[1] + c[2] * x[2];
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
    }
    best
}

/// Random bounded 3-variable program `max c.x, A x <= b, x >= 0`; the
/// last three rows cap each variable.
pub fn random_small_lp(rng: &mut impl Rng) -> ([f64; 3], Vec<([f64; 3], f64)>) {
    let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let mut rows: Vec<([f64; 3], f64)> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let a = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            (a, rng.gen_range(-1.0..4.0))
        })
        .collect();
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        rows.push((e, rng.gen_range(0.5..5.0)));
    }
    (c, rows)
}

pub fn small_lp_problem(c: [f64; 3], rows: &[([f64; 3], f64)]) -> LpProblem {
    let mut lp = LpProblem::new(Sense::Maximize);
    for ci in c {
        lp.add_var(ci, 0.0, f64::INFINITY);
    }
    for (a, b) in rows {
        lp.add_constraint(a.iter().copied().enumerate().collect(), Relation::Le, *b);
    }
    lp
}

fn check_lp_against_vertices(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(9);
    let mut t = Tally::new("simplex agrees with vertex enumeration on 3-variable programs");
    for _ in 0..300 {
        let (c, rows) = random_small_lp(&mut rng);
        let sol = solve_lp(&small_lp_problem(c, &rows))?;
        match (vertex_optimum(c, &rows), sol.status) {
            (Some(v), LpStatus::Optimal) => t.at_most((v - sol.objective).abs(), cfg.slack(1e-9)),
            (None, LpStatus::Infeasible) => t.at_most(0.0, 0.0),
            _ => t.at_most(f64::INFINITY, 0.0),
        }
    }
    Ok(t.finish())
}

fn quantum_suite(cfg: &CheckConfig) -> Vec<Result<CheckOutcome>> {
    vec![
        check_kraus_completeness(cfg),
        check_gentle_axioms(cfg),
        check_quantum_extension(cfg),
        check_eigenvalues(cfg),
        check_spectral_optimality(cfg),
        check_quantum_monogamy(cfg),
    ]
}

fn check_kraus_completeness(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("gentle Kraus pair is complete");
    for i in 0..50 {
        let (e0, e1) = quantum::kraus_gentle(0.5 * i as f64 / 49.0)?;
        let sum = e0.adjoint() * &e0 + e1.adjoint() * &e1 - quantum::ComplexMatrix::identity(2, 2);
        t.at_most(sum.iter().map(|z| z.norm()).fold(0.0, f64::max), cfg.slack(1e-14));
    }
    Ok(t.finish())
}

fn check_gentle_axioms(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("gentle measurement leaves B1 intact and correlates at 1/2 + eps");
    for (alpha, eps) in quantum::sample_gentle_parameters(100, cfg.seed) {
        let r = quantum::verify_gentle_assumptions(alpha, eps)?;
        t.at_most(r.marginal_deviation, cfg.slack(1e-10));
        t.at_most(r.conditional_deviation, cfg.slack(1e-10));
    }
    Ok(t.finish())
}

fn random_scenario(rng: &mut impl Rng, n: usize, m: usize) -> Result<QuantumScenario> {
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-PI..PI)).collect();
    let eps = rng.gen_range(0.0..=0.5);
    if rng.gen_bool(0.7) {
        QuantumScenario::phi_plus(a, b, eps)
    } else {
        let (ta, tb) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        QuantumScenario::new(quantum::product_density(ta, tb), a, b, eps)
    }
}

/// No-signaling, gentle correlator and `n D >= |delta beta|` on quantum
/// extensions.
fn check_quantum_extension(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(10);
    let mut t = Tally::new("quantum extensions are no-signaling with <B1g B1> = 2 eps and n D >= |delta beta|");
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let s = random_scenario(&mut rng, n, n)?;
        let tri = quantum::tripartite_quantum_box(&s)?;
        t.at_most(tri.max_signaling(), cfg.slack(1e-10));
        t.at_most((tri.gentle_correlator() - 2.0 * s.epsilon).abs(), cfg.slack(1e-10));
        let before = quantum::quantum_box(&s)?;
        let after = tri.marginalize_with_tolerance(quantum::STATE_TOL)?;
        let d = disturbance_total(&before, &after, 0)?.total;
        for f in library_functionals(n)? {
            let gap = (bell::evaluate(&f, &before)? - bell::evaluate(&f, &after)?).abs();
            t.at_most(gap, n as f64 * d + cfg.slack(1e-7));
        }
    }
    Ok(t.finish())
}

fn check_eigenvalues(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("generalized-chain eigenvalue moduli are its singular values");
    for n in 2..=12 {
        for k in 1..=n / 2 {
            let mut moduli: Vec<f64> = quantum::gen_chain_eigenvalues(n, k)?.iter().map(|z| z.norm()).collect();
            moduli.sort_by(|a, b| b.total_cmp(a));
            let sv = quantum::singular_values(&quantum::correlator_matrix(&bell::generalized_chain(n, k)?)?);
            for (l, s) in moduli.iter().zip(&sv) {
                t.at_most((l - s).abs(), cfg.slack(1e-9));
            }
        }
    }
    Ok(t.finish())
}

fn check_spectral_optimality(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("chain-angle strategy attains n ||C|| for the generalized chain");
    for n in 2..=12 {
        let (a, b) = quantum::chain_angles(n)?;
        let s = QuantumScenario::phi_plus(a, b, 0.0)?;
        for k in 1..=n / 2 {
            let f = bell::generalized_chain(n, k)?;
            let attained = quantum::quantum_value_of(&f, &s)?;
            let bound = quantum::quantum_bound(&f)?;
            t.at_most(attained, bound + cfg.slack(1e-9));
            t.at_most((attained - bound).abs(), cfg.slack(1e-9));
        }
    }
    Ok(t.finish())
}

fn check_quantum_monogamy(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(11);
    let mut t = Tally::new("quantum CHSH monogamy beta^2 + 4 <B1g B1>^2 <= 8");
    let (a, b) = quantum::tsirelson_angles();
    for step in 0..=10 {
        let s = QuantumScenario::phi_plus(a.clone(), b.clone(), 0.05 * step as f64)?;
        t.at_most(quantum::quantum_monogamy_check(&s)?.lhs, 8.0 + cfg.slack(quantum::MONOGAMY_TOL));
    }
    for _ in 0..100 {
        let s = random_scenario(&mut rng, 2, 2)?;
        t.at_most(quantum::quantum_monogamy_check(&s)?.lhs, 8.0 + cfg.slack(quantum::MONOGAMY_TOL));
    }
    Ok(t.finish())
}

fn tradeoff_suite(cfg: &CheckConfig) -> Vec<Result<CheckOutcome>> {
    vec![
        check_general_monotonicity(cfg),
        check_chain_is_general(cfg),
        check_quantum_dominates(cfg),
        check_generalized_chain_wins(cfg),
    ]
}

fn check_general_monotonicity(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(12);
    let mut t = Tally::new("general bound is monotone in eps, beta and n and clamps at zero");
    for _ in 0..500 {
        let n = rng.gen_range(1..=20);
        let w = rng.gen_range(0.1..6.0);
        let beta_max = rng.gen_range(1.0..20.0);
        let beta = rng.gen_range(0.0..beta_max);
        let (e1, e2): (f64, f64) = (rng.gen_range(0.0..=0.5), rng.gen_range(0.0..=0.5));
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let b = |n, e, beta| tradeoff::bound_general(n, w, e, beta, beta_max);
        t.at_most(b(n, lo, beta)?, b(n, hi, beta)?);
        t.at_most(b(n, hi, beta)?, b(n, hi, rng.gen_range(beta..=beta_max))?);
        t.at_most(b(n + 1, hi, beta)?, b(n, hi, beta)?);
        t.at_most(-b(n, lo, beta)?, 0.0);
        let raw = tradeoff::raw_general(n, w, lo, beta, beta_max)?;
        t.at_most((b(n, lo, beta)? - raw.max(0.0)).abs(), 0.0);
    }
    Ok(t.finish())
}

fn check_chain_is_general(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = cfg.rng(13);
    let mut t = Tally::new("chain bound is the general bound at w = 2, beta_max = 2n");
    for _ in 0..500 {
        let n = rng.gen_range(2..=50);
        let eps = rng.gen_range(0.0..=0.5);
        let beta = rng.gen_range(0.0..=2.0 * n as f64);
        let gap = tradeoff::bound_chain(n, eps, beta)? - tradeoff::bound_general(n, 2.0, eps, beta, 2.0 * n as f64)?;
        t.at_most(gap.abs(), cfg.slack(1e-15));
    }
    Ok(t.finish())
}

fn check_quantum_dominates(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("quantum CHSH bound dominates the no-signaling bound");
    for i in 0..100 {
        let eps = 0.5 * i as f64 / 99.0;
        for j in 0..100 {
            let beta = 2.0 + (2.0 * SQRT_2 - 2.0) * j as f64 / 99.0;
            let ns = tradeoff::bound_general(2, 2.0, eps, beta, 4.0)?;
            t.at_most(ns, tradeoff::bound_quantum_chsh(eps, beta)? + cfg.slack(1e-12));
        }
    }
    Ok(t.finish())
}

/// Smallest `n0 <= limit` such that the generalized chain with
/// `k = floor(n^0.4)` beats the chain for every `n0 <= n <= limit`.
pub fn generalized_chain_crossover(epsilon: f64, limit: usize) -> Result<Option<usize>> {
    let mut n0 = None;
    for n in (2..=limit).rev() {
        let k = tradeoff::default_k(n);
        let gen = tradeoff::bound_gen_chain(n, k, epsilon)?;
        let chain = tradeoff::bound_chain(n, epsilon, quantum::chain_quantum_value(n))?;
        if gen > chain {
            n0 = Some(n);
        } else {
            break;
        }
    }
    Ok(n0)
}

fn check_generalized_chain_wins(_cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut t = Tally::new("generalized chain beats chain for all large n");
    let limit = 3000;
    for eps in [0.2, 0.3, 0.4, 0.5] {
        let n0 = generalized_chain_crossover(eps, limit)?;
        t.at_most(n0.map_or(f64::INFINITY, |n| n as f64), limit as f64);
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_valid_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let p = random_ns_box(&mut a, 3, 2).unwrap();
        assert_eq!(p, random_ns_box(&mut b, 3, 2).unwrap());
        let q = random_bob_channel(&mut a, &p, 0).unwrap();
        for x in 0..3 {
            for a_out in 0..2 {
                assert!((p.alice_marginal(x, a_out) - q.alice_marginal(x, a_out)).abs() < 1e-12);
            }
        }
        assert!(random_tripartite(&mut a, 2, 3).unwrap().max_signaling() < 1e-12);
    }

    #[test]
    fn vertex_oracle_on_known_program() {
        // max x + y + z with x + y + z <= 2 and each <= 1
        let rows = [([1.0, 1.0, 1.0], 2.0), ([1.0, 0.0, 0.0], 1.0), ([0.0, 1.0, 0.0], 1.0), ([0.0, 0.0, 1.0], 1.0)];
        assert_eq!(vertex_optimum([1.0, 1.0, 1.0], &rows), Some(2.0));
        assert_eq!(vertex_optimum([1.0, 0.0, 0.0], &[([1.0, 0.0, 0.0], -1.0)]), None);
    }

    #[test]
    fn crossover_exists() {
        let n0 = generalized_chain_crossover(0.5, 500).unwrap().unwrap();
        assert!(n0 < 50, "n0 = {n0}");
    }

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse("lp").unwrap(), Suite::Lp);
        assert!(Suite::parse("everything").is_err());
    }

    #[test]
    fn tradeoff_suite_passes() {
        let report = run_suite(Suite::Tradeoff, &CheckConfig::default());
        for o in &report.outcomes {
            assert!(o.passed, "{o}");
        }
    }
}
