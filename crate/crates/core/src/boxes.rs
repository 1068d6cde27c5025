//! Bipartite and tripartite no-signaling boxes with binary outputs.
//!
//! Settings are 0-based in storage (`x = 0..n`, `y = 0..m`); documentation
//! elsewhere in the crate uses 1-based names such as `B_1` for setting `0`.

use crate::error::{Error, Result};

/// Tolerance for normalization and no-signaling checks on construction.
pub const NS_TOL: f64 = 1e-9;
/// Entries in `[-CLAMP_TOL, 0)` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Alice marginals of two boxes compared by [`disturbance_total`] must agree to this.
pub const MARGINAL_TOL: f64 = 1e-7;
/// Below this, `p(a|x)` is treated as zero when conditioning.
pub const ZERO_PROB: f64 = 1e-12;

fn clamp_entry(field: impl FnOnce() -> String, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::validation(field(), "entry is not finite"));
    }
    if v < -CLAMP_TOL {
        return Err(Error::validation(field(), format!("negative probability {v}")));
    }
    if v > 1.0 + CLAMP_TOL {
        return Err(Error::validation(field(), format!("probability {v} exceeds 1")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// A conditional probability table `p(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteBox {
    n: usize,
    m: usize,
    probs: Vec<f64>,
}

impl BipartiteBox {
    /// Builds a box from a flat table in `(x, y, a, b)` row-major order,
    /// validating normalization and no-signaling.
    pub fn new(n: usize, m: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n, m, probs, NS_TOL)
    }

    /// Like `new` with a caller-chosen normalization and no-signaling tolerance.
    pub fn with_tolerance(n: usize, m: usize, mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::input("a box needs at least one setting per party"));
        }
        if probs.len() != n * m * 4 {
            return Err(Error::validation(
                "probs",
                format!("expected {} entries, found {}", n * m * 4, probs.len()),
            ));
        }
        for (i, v) in probs.iter_mut().enumerate() {
            let (x, y, a, b) = (i / (4 * m), (i / 4) % m, (i / 2) % 2, i % 2);
            *v = clamp_entry(|| format!("probs[{x}][{y}][{a}][{b}]"), *v)?;
        }
        let bx = BipartiteBox { n, m, probs };
        bx.validate(tol)?;
        Ok(bx)
    }

    /// Builds a box by evaluating `f(x, y, a, b)` on every entry.
    pub fn from_fn(n: usize, m: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut probs = Vec::with_capacity(n * m * 4);
        for x in 0..n {
            for y in 0..m {
                for a in 0..2 {
                    for b in 0..2 {
                        probs.push(f(x, y, a, b));
                    }
                }
            }
        }
        Self::new(n, m, probs)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        for x in 0..self.n {
            for y in 0..self.m {
                let s: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| self.p(x, y, a, b)).sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::validation(
                        format!("probs[{x}][{y}]"),
                        format!("entries sum to {s}, expected 1"),
                    ));
                }
            }
        }
        if let Some((field, dev)) = self.signaling_violation() {
            if dev > tol {
                return Err(Error::validation(field, format!("no-signaling violated by {dev:e}")));
            }
        }
        Ok(())
    }

    /// Largest deviation from no-signaling, with the offending marginal.
    fn signaling_violation(&self) -> Option<(String, f64)> {
        let mut worst: Option<(String, f64)> = None;
        let mut note = |field: String, dev: f64| {
            if worst.as_ref().map_or(true, |w| dev > w.1) {
                worst = Some((field, dev));
            }
        };
        for x in 0..self.n {
            for a in 0..2 {
                let r = self.p(x, 0, a, 0) + self.p(x, 0, a, 1);
                for y in 1..self.m {
                    let s = self.p(x, y, a, 0) + self.p(x, y, a, 1);
                    note(format!("alice marginal x={x} a={a} y={y}"), (s - r).abs());
                }
            }
        }
        for y in 0..self.m {
            for b in 0..2 {
                let r = self.p(0, y, 0, b) + self.p(0, y, 1, b);
                for x in 1..self.n {
                    let s = self.p(x, y, 0, b) + self.p(x, y, 1, b);
                    note(format!("bob marginal y={y} b={b} x={x}"), (s - r).abs());
                }
            }
        }
        worst
    }

    /// Largest deviation from the no-signaling equalities (0 for a single setting pair).
    pub fn max_signaling(&self) -> f64 {
        self.signaling_violation().map_or(0.0, |(_, d)| d)
    }

    pub fn n_inputs_a(&self) -> usize {
        self.n
    }

    pub fn n_inputs_b(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub(crate) fn index(m: usize, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * m + y) * 2 + a) * 2 + b
    }

    /// `p(a,b|x,y)`. Panics on out-of-range indices.
    #[inline]
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[Self::index(self.m, x, y, a, b)]
    }

    fn check_settings(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.n {
            return Err(Error::input(format!("alice setting {x} out of range 0..{}", self.n)));
        }
        if y >= self.m {
            return Err(Error::input(format!("bob setting {y} out of range 0..{}", self.m)));
        }
        Ok(())
    }

    /// `p(a|x)`, read off at `y = 0`.
    pub fn alice_marginal(&self, x: usize, a: usize) -> f64 {
        self.p(x, 0, a, 0) + self.p(x, 0, a, 1)
    }

    /// `p(b|y)`, read off at `x = 0`.
    pub fn bob_marginal(&self, y: usize, b: usize) -> f64 {
        self.p(0, y, 0, b) + self.p(0, y, 1, b)
    }

    /// Bob's conditional statistics `p(b|y,a,x)` for every `y`, i.e. the
    /// state Alice's outcome `a` on setting `x` steers him into. When
    /// `p(a|x)` vanishes the uniform distribution is returned.
    pub fn condition_on_alice(&self, x: usize, a: usize) -> Result<Vec<[f64; 2]>> {
        if x >= self.n {
            return Err(Error::input(format!("alice setting {x} out of range 0..{}", self.n)));
        }
        if a > 1 {
            return Err(Error::input(format!("alice outcome {a} is not binary")));
        }
        Ok(self.conditional_table(x, a))
    }

    fn conditional_table(&self, x: usize, a: usize) -> Vec<[f64; 2]> {
        let pa = self.alice_marginal(x, a);
        (0..self.m)
            .map(|y| {
                if pa < ZERO_PROB {
                    [0.5, 0.5]
                } else {
                    [self.p(x, y, a, 0) / pa, self.p(x, y, a, 1) / pa]
                }
            })
            .collect()
    }

    /// `<A_x B_y> = sum (-1)^(a+b) p(a,b|x,y)`.
    pub fn correlator(&self, x: usize, y: usize) -> Result<f64> {
        self.check_settings(x, y)?;
        Ok(self.correlator_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn correlator_unchecked(&self, x: usize, y: usize) -> f64 {
        self.p(x, y, 0, 0) - self.p(x, y, 0, 1) - self.p(x, y, 1, 0) + self.p(x, y, 1, 1)
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &BipartiteBox, lambda: f64) -> Result<BipartiteBox> {
        if self.n != other.n || self.m != other.m {
            return Err(Error::input("cannot mix boxes of different dimensions"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::input(format!("mixing weight {lambda} outside [0,1]")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect();
        BipartiteBox::new(self.n, self.m, probs)
    }

    /// The same box with Bob's outcomes relabeled `b -> 1 - b` on setting `y`.
    pub fn flip_bob_outputs(&self, y: usize) -> Result<BipartiteBox> {
        self.check_settings(0, y)?;
        let m = self.m;
        let mut probs = self.probs.clone();
        for x in 0..self.n {
            for a in 0..2 {
                probs.swap(Self::index(m, x, y, a, 0), Self::index(m, x, y, a, 1));
            }
        }
        BipartiteBox::new(self.n, m, probs)
    }

    /// Reorders Bob's settings: new setting `j` is old setting `perm[j]`.
    pub fn permute_bob_settings(&self, perm: &[usize]) -> Result<BipartiteBox> {
        let mut seen = vec![false; self.m];
        if perm.len() != self.m || perm.iter().any(|&j| j >= self.m || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::input("bob setting permutation is not a permutation"));
        }
        BipartiteBox::from_fn(self.n, self.m, |x, y, a, b| self.p(x, perm[y], a, b))
    }
}

/// The Popescu-Rohrlich box: `a xor b = x*y` (0-based settings), outputs uniform.
pub fn make_pr_box() -> BipartiteBox {
    BipartiteBox::from_fn(2, 2, |x, y, a, b| if (a ^ b) == (x & y) { 0.5 } else { 0.0 })
        .expect("PR box is a valid no-signaling box")
}

/// White noise: every outcome pair has probability 1/4.
pub fn uniform_box(n: usize, m: usize) -> Result<BipartiteBox> {
    BipartiteBox::from_fn(n, m, |_, _, _, _| 0.25)
}

/// Local deterministic box with Alice answering `alice[x]` and Bob `bob[y]`.
pub fn deterministic_box(alice: &[usize], bob: &[usize]) -> Result<BipartiteBox> {
    if alice.iter().chain(bob).any(|&o| o > 1) {
        return Err(Error::input("deterministic outputs must be binary"));
    }
    BipartiteBox::from_fn(alice.len(), bob.len(), |x, y, a, b| {
        if a == alice[x] && b == bob[y] {
            1.0
        } else {
            0.0
        }
    })
}

/// Extension `p(a,b,g|x,y)` with a single-input third party whose output is `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteBox {
    n: usize,
    m: usize,
    probs: Vec<f64>,
}

impl TripartiteBox {
    /// Flat table in `(x, y, a, b, g)` row-major order.
    pub fn new(n: usize, m: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n, m, probs, NS_TOL)
    }

    /// Like `new` with a caller-chosen normalization and no-signaling tolerance.
    pub fn with_tolerance(n: usize, m: usize, mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::input("a box needs at least one setting per party"));
        }
        if probs.len() != n * m * 8 {
            return Err(Error::validation(
                "probs",
                format!("expected {} entries, found {}", n * m * 8, probs.len()),
            ));
        }
        for (i, v) in probs.iter_mut().enumerate() {
            let (x, y, a, b, g) = (i / (8 * m), (i / 8) % m, (i / 4) % 2, (i / 2) % 2, i % 2);
            *v = clamp_entry(|| format!("probs[{x}][{y}][{a}][{b}][{g}]"), *v)?;
        }
        let tri = TripartiteBox { n, m, probs };
        for x in 0..n {
            for y in 0..m {
                let s: f64 = tri.probs[tri.index(x, y, 0, 0, 0)..tri.index(x, y, 0, 0, 0) + 8].iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::validation(
                        format!("probs[{x}][{y}]"),
                        format!("entries sum to {s}, expected 1"),
                    ));
                }
            }
        }
        let dev = tri.max_signaling();
        if dev > tol {
            return Err(Error::validation("probs", format!("party-wise no-signaling violated by {dev:e}")));
        }
        Ok(tri)
    }

    pub fn from_fn(
        n: usize,
        m: usize,
        f: impl Fn(usize, usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut probs = Vec::with_capacity(n * m * 8);
        for x in 0..n {
            for y in 0..m {
                for a in 0..2 {
                    for b in 0..2 {
                        for g in 0..2 {
                            probs.push(f(x, y, a, b, g));
                        }
                    }
                }
            }
        }
        Self::new(n, m, probs)
    }

    /// `p ⊗ q` where the third party outputs `g` with probability `grace[g]`.
    pub fn product(p: &BipartiteBox, grace: [f64; 2]) -> Result<Self> {
        Self::from_fn(p.n, p.m, |x, y, a, b, g| p.p(x, y, a, b) * grace[g])
    }

    pub fn n_inputs_a(&self) -> usize {
        self.n
    }

    pub fn n_inputs_b(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    fn index(&self, x: usize, y: usize, a: usize, b: usize, g: usize) -> usize {
        (((x * self.m + y) * 2 + a) * 2 + b) * 2 + g
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize, g: usize) -> f64 {
        self.probs[self.index(x, y, a, b, g)]
    }

    /// Largest violation of Alice's and Bob's no-signaling constraints,
    /// with the third party's outcome kept.
    pub fn max_signaling(&self) -> f64 {
        let mut worst: f64 = 0.0;
        // sum over a is independent of x
        for y in 0..self.m {
            for b in 0..2 {
                for g in 0..2 {
                    let r = self.p(0, y, 0, b, g) + self.p(0, y, 1, b, g);
                    for x in 1..self.n {
                        let s = self.p(x, y, 0, b, g) + self.p(x, y, 1, b, g);
                        worst = worst.max((s - r).abs());
                    }
                }
            }
        }
        // sum over b is independent of y
        for x in 0..self.n {
            for a in 0..2 {
                for g in 0..2 {
                    let r = self.p(x, 0, a, 0, g) + self.p(x, 0, a, 1, g);
                    for y in 1..self.m {
                        let s = self.p(x, y, a, 0, g) + self.p(x, y, a, 1, g);
                        worst = worst.max((s - r).abs());
                    }
                }
            }
        }
        worst
    }

    /// Sums out the third party's outcome.
    pub fn marginalize(&self) -> Result<BipartiteBox> {
        self.marginalize_with_tolerance(NS_TOL)
    }

    pub(crate) fn marginalize_with_tolerance(&self, tol: f64) -> Result<BipartiteBox> {
        let probs = self.probs.chunks(2).map(|g| g[0] + g[1]).collect();
        BipartiteBox::with_tolerance(self.n, self.m, probs, tol)
    }

    /// `<B_1^g B_1> = sum (-1)^(b+g) p(b,g|y=0)`, read off at `x = 0`.
    pub fn gentle_correlator(&self) -> f64 {
        let mut c = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for g in 0..2 {
                    let sign = if b == g { 1.0 } else { -1.0 };
                    c += sign * self.p(0, 0, a, b, g);
                }
            }
        }
        c
    }
}

/// Disturbance `D_{a,x}(B_y)` per setting together with the averaged total.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceReport {
    n: usize,
    m: usize,
    excluded: usize,
    per_setting: Vec<f64>,
    pub total: f64,
}

impl DisturbanceReport {
    /// `D_{a,x}(B_y)`; zero for the excluded setting.
    pub fn get(&self, x: usize, a: usize, y: usize) -> f64 {
        self.per_setting[(x * 2 + a) * self.m + y]
    }

    pub fn excluded_setting(&self) -> usize {
        self.excluded
    }

    pub fn n_inputs_a(&self) -> usize {
        self.n
    }
}

/// Averaged total disturbance of Bob's observables other than `excluded`
/// when `before` turns into `after`. Alice's settings are weighted
/// uniformly and her outcomes by `p(a|x)` of `before`.
pub fn disturbance_total(before: &BipartiteBox, after: &BipartiteBox, excluded: usize) -> Result<DisturbanceReport> {
    let (n, m) = (before.n, before.m);
    if after.n != n || after.m != m {
        return Err(Error::input(format!(
            "dimension mismatch: {n}x{m} vs {}x{}",
            after.n, after.m
        )));
    }
    if excluded >= m {
        return Err(Error::input(format!("excluded setting {excluded} out of range 0..{m}")));
    }
    for x in 0..n {
        for a in 0..2 {
            let d = (before.alice_marginal(x, a) - after.alice_marginal(x, a)).abs();
            if d > MARGINAL_TOL {
                return Err(Error::input(format!(
                    "alice marginals differ at x={x} a={a} by {d:e}"
                )));
            }
        }
    }
    let mut per_setting = vec![0.0; n * 2 * m];
    let mut total = 0.0;
    for x in 0..n {
        for a in 0..2 {
            let pre = before.conditional_table(x, a);
            let post = after.conditional_table(x, a);
            let weight = before.alice_marginal(x, a) / n as f64;
            for y in (0..m).filter(|&y| y != excluded) {
                let d = (pre[y][0] - post[y][0]).abs() + (pre[y][1] - post[y][1]).abs();
                per_setting[(x * 2 + a) * m + y] = d;
                total += weight * d;
            }
        }
    }
    Ok(DisturbanceReport {
        n,
        m,
        excluded,
        per_setting,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pr_box_correlators() {
        let pr = make_pr_box();
        assert_eq!(pr.correlator(0, 0).unwrap(), 1.0);
        assert_eq!(pr.correlator(0, 1).unwrap(), 1.0);
        assert_eq!(pr.correlator(1, 0).unwrap(), 1.0);
        assert_eq!(pr.correlator(1, 1).unwrap(), -1.0);
    }

    #[test]
    fn conditionals_of_pr_box() {
        let pr = make_pr_box();
        let c = pr.condition_on_alice(0, 0).unwrap();
        assert_eq!(c[0][0], 1.0);
        let c = pr.condition_on_alice(1, 1).unwrap();
        assert_eq!(c[1][0], 1.0);
    }

    #[test]
    fn degenerate_conditional_is_uniform() {
        let det = deterministic_box(&[1, 1], &[0, 1]).unwrap();
        let c = det.condition_on_alice(0, 0).unwrap();
        assert_eq!(c, vec![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn out_of_range_arguments() {
        let pr = make_pr_box();
        assert!(matches!(pr.condition_on_alice(2, 0), Err(Error::Input(_))));
        assert!(matches!(pr.condition_on_alice(0, 2), Err(Error::Input(_))));
        assert!(matches!(pr.correlator(0, 5), Err(Error::Input(_))));
    }

    #[test]
    fn uniform_box_has_zero_correlators() {
        let u = uniform_box(3, 4).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                assert_eq!(u.correlator(x, y).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn rejects_signaling_box() {
        // Bob's output copies Alice's input: signals x to Bob.
        let r = BipartiteBox::from_fn(2, 1, |x, _, a, b| if a == 0 && b == x { 1.0 } else { 0.0 });
        assert!(matches!(r, Err(Error::Validation { .. })));
    }

    #[test]
    fn rejects_unnormalized_and_negative() {
        let r = BipartiteBox::new(1, 1, vec![0.5, 0.5, 0.5, 0.0]);
        assert!(matches!(r, Err(Error::Validation { .. })));
        let r = BipartiteBox::new(1, 1, vec![-0.1, 0.6, 0.5, 0.0]);
        assert!(matches!(r, Err(Error::Validation { .. })));
    }

    #[test]
    fn tiny_negatives_are_clamped() {
        let b = BipartiteBox::new(1, 1, vec![-1e-13, 0.5, 0.5, 1e-13]).unwrap();
        assert_eq!(b.p(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn product_extension_marginalizes_back() {
        let pr = make_pr_box();
        let tri = TripartiteBox::product(&pr, [0.5, 0.5]).unwrap();
        assert_eq!(tri.marginalize().unwrap(), pr);
        assert_eq!(tri.gentle_correlator(), 0.0);
    }

    #[test]
    fn disturbance_of_identical_boxes_is_zero() {
        let pr = make_pr_box();
        let r = disturbance_total(&pr, &pr, 0).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn disturbance_of_flipped_second_setting() {
        let pr = make_pr_box();
        let flipped = pr.flip_bob_outputs(1).unwrap();
        let r = disturbance_total(&pr, &flipped, 0).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                assert_eq!(r.get(x, a, 1), 2.0);
                assert_eq!(r.get(x, a, 0), 0.0);
            }
        }
        assert_eq!(r.total, 2.0);
    }

    #[test]
    fn disturbance_rejects_mismatched_inputs() {
        let pr = make_pr_box();
        let u = uniform_box(2, 3).unwrap();
        assert!(matches!(disturbance_total(&pr, &u, 0), Err(Error::Input(_))));
        let det = deterministic_box(&[0, 0], &[0, 0]).unwrap();
        assert!(matches!(disturbance_total(&pr, &det, 0), Err(Error::Input(_))));
    }
}
