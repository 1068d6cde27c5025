//! Linear programs over the no-signaling polytope.

use super::simplex::{solve_lp, LpProblem, LpStatus, Relation, Sense};
use crate::bell::BellFunctional;
use crate::boxes::{disturbance_total, BipartiteBox, TripartiteBox};
use crate::error::{Error, Result};

/// Largest `n * m` accepted by the no-signaling value programs.
pub const MAX_NS_SETTINGS: usize = 400;
/// Largest `n * m` accepted by [`min_disturbance_adversary`].
pub const MAX_ADVERSARY_SETTINGS: usize = 100;

/// Column of `p(a,b|x,y)` in the bipartite programs.
fn var(m: usize, x: usize, y: usize, a: usize, b: usize) -> usize {
    BipartiteBox::index(m, x, y, a, b)
}

/// Maximization of `f` over no-signaling boxes: normalization per `(x,y)`
/// and marginals compared against setting 0 of the other party.
fn ns_program(f: &BellFunctional) -> Result<LpProblem> {
    let (n, m) = (f.n(), f.m());
    if n * m > MAX_NS_SETTINGS {
        return Err(Error::Resource(format!(
            "{n}x{m} settings exceed the no-signaling LP limit n*m <= {MAX_NS_SETTINGS}"
        )));
    }
    let mut lp = LpProblem::new(Sense::Maximize);
    for &c in f.coeffs() {
        lp.add_var(c, 0.0, f64::INFINITY);
    }
    for x in 0..n {
        for y in 0..m {
            let row = (0..2).flat_map(|a| (0..2).map(move |b| (var(m, x, y, a, b), 1.0))).collect();
            lp.add_constraint(row, Relation::Eq, 1.0);
        }
    }
    for x in 0..n {
        for a in 0..2 {
            for y in 1..m {
                let mut row = Vec::with_capacity(4);
                for b in 0..2 {
                    row.push((var(m, x, y, a, b), 1.0));
                    row.push((var(m, x, 0, a, b), -1.0));
                }
                lp.add_constraint(row, Relation::Eq, 0.0);
            }
        }
    }
    for y in 0..m {
        for b in 0..2 {
            for x in 1..n {
                let mut row = Vec::with_capacity(4);
                for a in 0..2 {
                    row.push((var(m, x, y, a, b), 1.0));
                    row.push((var(m, 0, y, a, b), -1.0));
                }
                lp.add_constraint(row, Relation::Eq, 0.0);
            }
        }
    }
    Ok(lp)
}

fn optimum(lp: &LpProblem, what: &str) -> Result<f64> {
    let sol = solve_lp(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        status => Err(Error::Solver(format!("{what} program ended {status:?}"))),
    }
}

/// Maximal value of `f` over no-signaling boxes.
pub fn ns_value(f: &BellFunctional) -> Result<f64> {
    optimum(&ns_program(f)?, "no-signaling value")
}

/// Maximal no-signaling value of `f` when Bob's setting `y_det` has a
/// deterministic outcome (maximized over which outcome).
pub fn ns_value_deterministic(f: &BellFunctional, y_det: usize) -> Result<f64> {
    if y_det >= f.m() {
        return Err(Error::input(format!("setting {y_det} out of range 0..{}", f.m())));
    }
    let base = ns_program(f)?;
    let m = f.m();
    let mut best = f64::NEG_INFINITY;
    for v in 0..2 {
        let mut lp = base.clone();
        for x in 0..f.n() {
            for a in 0..2 {
                lp.bounds[var(m, x, y_det, a, 1 - v)] = (0.0, 0.0);
            }
        }
        best = best.max(optimum(&lp, "deterministic-observable value")?);
    }
    Ok(best)
}

/// Relevance of Bob's setting `y`: how much the no-signaling value drops
/// once that observable is forced deterministic.
pub fn relevance(f: &BellFunctional, y: usize) -> Result<f64> {
    let w = ns_value(f)? - ns_value_deterministic(f, y)?;
    Ok(w.max(0.0))
}

/// Optimal gentle adversary for a box: the smallest averaged disturbance
/// any no-signaling extension can achieve while acting as a gentle
/// measurement of Bob's setting 0 with strength `epsilon`.
#[derive(Debug, Clone)]
pub struct AdversaryResult {
    pub d_min: f64,
    pub extension: TripartiteBox,
}

/// Minimizes the averaged disturbance over tripartite extensions of `p`
/// satisfying the gentle-measurement constraints at Bob's setting 0.
pub fn min_disturbance_adversary(p: &BipartiteBox, epsilon: f64) -> Result<AdversaryResult> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::input(format!("epsilon {epsilon} outside [0, 1/2]")));
    }
    let (n, m) = (p.n_inputs_a(), p.n_inputs_b());
    if n * m > MAX_ADVERSARY_SETTINGS {
        return Err(Error::Resource(format!(
            "{n}x{m} settings exceed the adversary LP limit n*m <= {MAX_ADVERSARY_SETTINGS}"
        )));
    }
    let tri = |x: usize, y: usize, a: usize, b: usize, g: usize| (((x * m + y) * 2 + a) * 2 + b) * 2 + g;
    let mut lp = LpProblem::new(Sense::Minimize);
    for x in 0..n {
        for y in 0..m {
            for a in 0..2 {
                for b in 0..2 {
                    for g in 0..2 {
                        let j = if y == 0 {
                            // Grace's outcome agrees with b with probability 1/2 + epsilon.
                            let weight = if g == b { 0.5 + epsilon } else { 0.5 - epsilon };
                            let v = weight * p.p(x, 0, a, b);
                            lp.add_var(0.0, v, v)
                        } else {
                            lp.add_var(0.0, 0.0, f64::INFINITY)
                        };
                        debug_assert_eq!(j, tri(x, y, a, b, g));
                    }
                }
            }
        }
    }
    // Alice's marginal is untouched (this also fixes normalization).
    for x in 0..n {
        for y in 1..m {
            for a in 0..2 {
                let row = (0..2).flat_map(|b| (0..2).map(move |g| (tri(x, y, a, b, g), 1.0))).collect();
                lp.add_constraint(row, Relation::Eq, p.alice_marginal(x, a));
            }
        }
    }
    // Sum over a independent of x, keeping (y, b, g).
    for y in 0..m {
        for b in 0..2 {
            for g in 0..2 {
                for x in 1..n {
                    let mut row = Vec::with_capacity(4);
                    for a in 0..2 {
                        row.push((tri(x, y, a, b, g), 1.0));
                        row.push((tri(0, y, a, b, g), -1.0));
                    }
                    lp.add_constraint(row, Relation::Eq, 0.0);
                }
            }
        }
    }
    // Sum over b independent of y, keeping (x, a, g).
    for x in 0..n {
        for a in 0..2 {
            for g in 0..2 {
                for y in 1..m {
                    let mut row = Vec::with_capacity(4);
                    for b in 0..2 {
                        row.push((tri(x, y, a, b, g), 1.0));
                        row.push((tri(x, 0, a, b, g), -1.0));
                    }
                    lp.add_constraint(row, Relation::Eq, 0.0);
                }
            }
        }
    }
    // t >= |p(a,b|x,y) - sum_g p~(a,b,g|x,y)| for y != 0.
    let scale = 1.0 / n as f64;
    for x in 0..n {
        for y in 1..m {
            for a in 0..2 {
                for b in 0..2 {
                    let t = lp.add_var(scale, 0.0, f64::INFINITY);
                    let target = p.p(x, y, a, b);
                    let g0 = tri(x, y, a, b, 0);
                    let g1 = tri(x, y, a, b, 1);
                    lp.add_constraint(vec![(t, 1.0), (g0, 1.0), (g1, 1.0)], Relation::Ge, target);
                    lp.add_constraint(vec![(t, 1.0), (g0, -1.0), (g1, -1.0)], Relation::Ge, -target);
                }
            }
        }
    }

    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("adversary program ended {:?}", sol.status)));
    }
    let table = sol.assignment[..n * m * 8].to_vec();
    let extension = TripartiteBox::with_tolerance(n, m, table, super::simplex::RESIDUAL_TOL)
        .map_err(|e| Error::Solver(format!("adversary extension is invalid: {e}")))?;
    let d_min = if sol.objective < 0.0 && sol.objective >= -1e-9 {
        0.0
    } else {
        sol.objective
    };
    let measured = disturbance_total(p, &extension.marginalize_with_tolerance(super::simplex::RESIDUAL_TOL)?, 0)?.total;
    if (measured - d_min).abs() > 1e-7 {
        return Err(Error::Solver(format!(
            "adversary objective {d_min} disagrees with measured disturbance {measured}"
        )));
    }
    Ok(AdversaryResult { d_min, extension })
}
