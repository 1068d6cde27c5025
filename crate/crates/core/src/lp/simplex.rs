//! Dense two-phase tableau simplex with Bland's pivoting rule.

use crate::error::{Error, Result};

/// Pivot and reduced-cost tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Residual allowed on constraints of a reported optimum.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse row `(variable, coefficient)`.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize c.x` subject to linear rows and per-variable bounds `[lo, hi]`.
///
/// Bounds may be infinite. Inequality rows are turned into equalities with
/// slack columns before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
            bounds: Vec::new(),
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<()> {
        let nv = self.objective.len();
        if self.bounds.len() != nv {
            return Err(Error::input(format!("{} bounds for {nv} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("objective has non-finite entries"));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::input(format!("variable {j} has malformed bounds [{lo}, {hi}]")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|&(j, a)| j >= nv || !a.is_finite()) {
                return Err(Error::input(format!("constraint {i} is malformed")));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.relation {
                Relation::Eq => (lhs - row.rhs).abs(),
                Relation::Le => (lhs - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - lhs).max(0.0),
            };
            worst = worst.max(v);
        }
        for (xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective; NaN unless `status` is `Optimal`.
    pub objective: f64,
    /// Optimal assignment; empty unless `status` is `Optimal`.
    pub assignment: Vec<f64>,
}

impl LpSolution {
    fn without_optimum(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            assignment: Vec::new(),
        }
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// `x = offset + sign * s[col]`
    Shifted { col: usize, offset: f64, sign: f64 },
    /// `x = s[pos] - s[neg]`
    Free { pos: usize, neg: usize },
}

/// Standard form `min c.s, A s = b, s >= 0` with `b >= 0`.
struct StandardForm {
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Column already forming an identity column with unit entry in that row.
    initial_basic: Vec<Option<usize>>,
    maps: Vec<VarMap>,
}

fn to_standard_form(p: &LpProblem) -> StandardForm {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut ncols = 0;
    let mut maps = Vec::with_capacity(p.num_vars());
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        let map = if lo == hi {
            VarMap::Fixed(lo)
        } else if lo.is_finite() {
            let col = ncols;
            ncols += 1;
            if hi.is_finite() {
                upper_rows.push((col, hi - lo));
            }
            VarMap::Shifted { col, offset: lo, sign: 1.0 }
        } else if hi.is_finite() {
            let col = ncols;
            ncols += 1;
            VarMap::Shifted { col, offset: hi, sign: -1.0 }
        } else {
            let (pos, neg) = (ncols, ncols + 1);
            ncols += 2;
            VarMap::Free { pos, neg }
        };
        maps.push(map);
    }

    let mut cost = vec![0.0; ncols];
    for (j, &c) in p.objective.iter().enumerate() {
        let c = sign * c;
        match maps[j] {
            VarMap::Fixed(_) => {}
            VarMap::Shifted { col, sign: s, .. } => cost[col] += c * s,
            VarMap::Free { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // (dense row over structural columns, relation, rhs)
    let mut staged: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(p.constraints.len() + upper_rows.len());
    for row in &p.constraints {
        let mut dense = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            match maps[j] {
                VarMap::Fixed(v) => rhs -= a * v,
                VarMap::Shifted { col, offset, sign: s } => {
                    rhs -= a * offset;
                    dense[col] += a * s;
                }
                VarMap::Free { pos, neg } => {
                    dense[pos] += a;
                    dense[neg] -= a;
                }
            }
        }
        staged.push((dense, row.relation, rhs));
    }
    for &(col, width) in &upper_rows {
        let mut dense = vec![0.0; ncols];
        dense[col] = 1.0;
        staged.push((dense, Relation::Le, width));
    }

    let n_slack = staged.iter().filter(|r| r.1 != Relation::Eq).count();
    let total = ncols + n_slack;
    let mut rows = Vec::with_capacity(staged.len());
    let mut rhs = Vec::with_capacity(staged.len());
    let mut initial_basic = Vec::with_capacity(staged.len());
    let mut slack = ncols;
    for (mut dense, rel, mut b) in staged {
        dense.resize(total, 0.0);
        let mut basic = None;
        match rel {
            Relation::Eq => {}
            Relation::Le => {
                dense[slack] = 1.0;
                basic = Some(slack);
                slack += 1;
            }
            Relation::Ge => {
                dense[slack] = -1.0;
                slack += 1;
            }
        }
        if b < 0.0 {
            b = -b;
            dense.iter_mut().for_each(|v| *v = -*v);
            basic = match rel {
                Relation::Ge => Some(slack - 1),
                _ => None,
            };
        }
        rows.push(dense);
        rhs.push(b);
        initial_basic.push(basic);
    }
    cost.resize(total, 0.0);
    StandardForm {
        cost,
        rows,
        rhs,
        initial_basic,
        maps,
    }
}

/// Dense tableau: `rows[i]` holds the row of `B^-1 A` followed by `B^-1 b`.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
    max_pivots: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let width = self.ncols + 1;
        let pv = self.rows[r][c];
        {
            let row = &mut self.rows[r];
            for v in row.iter_mut() {
                *v /= pv;
            }
            row[c] = 1.0;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for k in 0..width {
                cost[k] -= f * prow[k];
            }
            cost[c] = 0.0;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes using the reduced-cost row `cost` (last entry holds `-z`).
    /// Columns with `allowed[j] == false` never enter.
    fn run(&mut self, cost: &mut [f64], allowed: &[bool]) -> Result<PhaseOutcome> {
        loop {
            if self.pivots >= self.max_pivots {
                return Err(Error::Solver(format!(
                    "pivot limit {} reached ({} rows, {} columns)",
                    self.max_pivots,
                    self.rows.len(),
                    self.ncols
                )));
            }
            // Bland: lowest-index column with negative reduced cost.
            let Some(c) = (0..self.ncols).find(|&j| allowed[j] && cost[j] < -FEAS_TOL) else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > FEAS_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - FEAS_TOL
                                || (ratio <= best + FEAS_TOL && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio.min(best)))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(r, c, cost);
        }
    }
}

/// Solves `problem` to optimality or reports infeasibility/unboundedness.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.check()?;
    let sf = to_standard_form(problem);
    let nrows = sf.rows.len();
    let nstruct = sf.cost.len();

    // Artificial columns for rows without a ready basic column.
    let art_rows: Vec<usize> = (0..nrows).filter(|&i| sf.initial_basic[i].is_none()).collect();
    let ncols = nstruct + art_rows.len();
    let mut rows = Vec::with_capacity(nrows);
    let mut basis = Vec::with_capacity(nrows);
    let mut next_art = nstruct;
    for (i, (mut row, b)) in sf.rows.into_iter().zip(sf.rhs).enumerate() {
        row.resize(ncols + 1, 0.0);
        row[ncols] = b;
        match sf.initial_basic[i] {
            Some(col) => basis.push(col),
            None => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis,
        ncols,
        pivots: 0,
        max_pivots: 50 * (nrows + ncols).max(100),
    };

    if !art_rows.is_empty() {
        let mut cost = vec![0.0; ncols + 1];
        for &i in &art_rows {
            for (k, v) in tab.rows[i].iter().enumerate() {
                cost[k] -= v;
            }
        }
        for j in nstruct..ncols {
            cost[j] = 0.0;
        }
        let allowed = vec![true; ncols];
        tab.run(&mut cost, &allowed)?;
        let infeasibility = -cost[ncols];
        let scale = 1.0 + tab.rows.iter().map(|r| r[ncols].abs()).fold(0.0, f64::max);
        if infeasibility > RESIDUAL_TOL * scale {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible));
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= nstruct {
                let entering = (0..nstruct)
                    .filter(|&j| tab.rows[i][j].abs() > FEAS_TOL)
                    .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()));
                match entering {
                    Some(j) => {
                        tab.pivot(i, j, &mut cost);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase two over structural and slack columns only.
    let mut cost = vec![0.0; ncols + 1];
    cost[..nstruct].copy_from_slice(&sf.cost);
    for i in 0..tab.rows.len() {
        let cb = cost[tab.basis[i]];
        if cb != 0.0 {
            let row = &tab.rows[i];
            for k in 0..=ncols {
                cost[k] -= cb * row[k];
            }
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < nstruct).collect();
    if let PhaseOutcome::Unbounded = tab.run(&mut cost, &allowed)? {
        return Ok(LpSolution::without_optimum(LpStatus::Unbounded));
    }

    let mut s = vec![0.0; nstruct];
    for (i, &col) in tab.basis.iter().enumerate() {
        if col < nstruct {
            s[col] = tab.rhs(i).max(0.0);
        }
    }
    let assignment: Vec<f64> = sf
        .maps
        .iter()
        .map(|m| match *m {
            VarMap::Fixed(v) => v,
            VarMap::Shifted { col, offset, sign } => offset + sign * s[col],
            VarMap::Free { pos, neg } => s[pos] - s[neg],
        })
        .collect();
    let violation = problem.max_violation(&assignment);
    if violation > RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "optimum violates constraints by {violation:e} after {} pivots",
            tab.pivots
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&assignment),
        assignment,
    })
}
