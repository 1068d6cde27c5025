//! Closed-form lower bounds on the disturbance caused by a gentle
//! measurement of strength `epsilon`, and the curves built from them.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use crate::bell;
use crate::error::{Error, Result};
use crate::io::format_sig;
use crate::quantum;

/// Slack allowed when comparing a Bell value against its maximum.
const BETA_SLACK: f64 = 1e-12;
/// Default spacing of the `epsilon` grid.
pub const DEFAULT_EPS_STEP: f64 = 0.005;
/// Relative agreement required between `n ||C||` and its closed form.
pub const SPECTRAL_AGREEMENT: f64 = 1e-6;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::input(format!("epsilon {epsilon} outside [0, 1/2]")));
    }
    Ok(())
}

fn check_gen_chain(n: usize, k: usize) -> Result<()> {
    if k < 1 || 2 * k > n {
        return Err(Error::input(format!("generalized chain needs 1 <= k <= n/2, got n={n} k={k}")));
    }
    Ok(())
}

/// `(w 2eps - (beta_max - beta)) / n` before clamping.
pub fn raw_general(n: usize, w: f64, epsilon: f64, beta: f64, beta_max: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n == 0 {
        return Err(Error::input("number of Alice settings must be positive"));
    }
    if !(w.is_finite() && beta.is_finite() && beta_max.is_finite()) {
        return Err(Error::input("relevance and Bell values must be finite"));
    }
    if beta > beta_max + BETA_SLACK {
        return Err(Error::input(format!("beta {beta} exceeds its maximum {beta_max}")));
    }
    Ok((w * 2.0 * epsilon - (beta_max - beta)) / n as f64)
}

/// Main trade-off: `max(0, (w 2eps - (beta_max - beta)) / n)`.
pub fn bound_general(n: usize, w: f64, epsilon: f64, beta: f64, beta_max: f64) -> Result<f64> {
    Ok(raw_general(n, w, epsilon, beta, beta_max)?.max(0.0))
}

/// CHSH instance of [`bound_general`] (`w = 2`, `beta_max = 4`).
pub fn bound_chsh(epsilon: f64, beta: f64) -> Result<f64> {
    bound_general(2, 2.0, epsilon, beta, 4.0)
}

pub fn raw_chain(n: usize, epsilon: f64, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::input(format!("chain needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    if beta > 2.0 * nf + BETA_SLACK {
        return Err(Error::input(format!("beta {beta} exceeds 2n = {}", 2 * n)));
    }
    check_epsilon(epsilon)?;
    Ok(4.0 * epsilon / nf - (2.0 * nf - beta) / nf)
}

/// `max(0, 4eps/n - (2n - beta)/n)`.
pub fn bound_chain(n: usize, epsilon: f64, beta: f64) -> Result<f64> {
    Ok(raw_chain(n, epsilon, beta)?.max(0.0))
}

/// `sum_{j=1}^k cos((2j-1) pi / 2n)`.
fn cos_sum(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    (1..=k).map(|j| ((2 * j - 1) as f64 * PI / (2.0 * nf)).cos()).sum()
}

pub fn raw_gen_chain(n: usize, k: usize, epsilon: f64) -> Result<f64> {
    check_gen_chain(n, k)?;
    check_epsilon(epsilon)?;
    Ok(4.0 * k as f64 * epsilon / n as f64 - 2.0 * (k as f64 - cos_sum(n, k)))
}

/// `max(0, 4k eps/n - 2(k - sum_{j=1}^k cos((2j-1) pi/2n)))`, the trade-off
/// at the optimal quantum value of the generalized chain.
pub fn bound_gen_chain(n: usize, k: usize, epsilon: f64) -> Result<f64> {
    Ok(raw_gen_chain(n, k, epsilon)?.max(0.0))
}

pub fn raw_quantum_chsh(epsilon: f64, beta: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !beta.is_finite() || beta > 2.0 * SQRT_2 + BETA_SLACK {
        return Err(Error::input(format!("beta {beta} lies outside the quantum set (> 2 sqrt 2)")));
    }
    Ok(0.5 * (beta - (8.0 - 16.0 * epsilon * epsilon).sqrt()))
}

/// Quantum CHSH trade-off `max(0, (beta - sqrt(8 - 16 eps^2)) / 2)`.
pub fn bound_quantum_chsh(epsilon: f64, beta: f64) -> Result<f64> {
    Ok(raw_quantum_chsh(epsilon, beta)?.max(0.0))
}

/// Smallest `epsilon` at which [`bound_general`] becomes positive, capped
/// at `1/2`. `n` only scales the bound and does not move the threshold.
pub fn epsilon_threshold(n: usize, w: f64, beta: f64, beta_max: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("number of Alice settings must be positive"));
    }
    if !(w > 0.0) {
        return Err(Error::input(format!("relevance must be positive, got {w}")));
    }
    if beta > beta_max + BETA_SLACK {
        return Err(Error::input(format!("beta {beta} exceeds its maximum {beta_max}")));
    }
    Ok(((beta_max - beta).max(0.0) / (2.0 * w)).min(0.5))
}

/// The `k` maximizing [`bound_gen_chain`] at fixed `(n, epsilon)`, with
/// ties going to the smaller `k`.
pub fn best_k(n: usize, epsilon: f64) -> Result<(usize, f64)> {
    if n < 2 {
        return Err(Error::input(format!("generalized chain needs n >= 2, got {n}")));
    }
    let mut best = (1, bound_gen_chain(n, 1, epsilon)?);
    for k in 2..=n / 2 {
        let b = bound_gen_chain(n, k, epsilon)?;
        if b > best.1 {
            best = (k, b);
        }
    }
    Ok(best)
}

/// Default `k` for the generalized-chain curves: `floor(n^0.4)`, at least 1.
pub fn default_k(n: usize) -> usize {
    ((n as f64).powf(0.4).floor() as usize).clamp(1, (n / 2).max(1))
}

/// A bound sampled on an `epsilon` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub label: String,
    pub epsilons: Vec<f64>,
    /// Clamped bound.
    pub d_min: Vec<f64>,
    /// Unclamped bound; negative values locate the threshold.
    pub raw: Vec<f64>,
    /// Bell value the curve was drawn at.
    pub beta: f64,
    /// Number of Alice settings.
    pub n: usize,
}

impl BoundCurve {
    fn sample(label: String, n: usize, beta: f64, grid: &[f64], raw: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let raw = grid.iter().map(|&e| raw(e)).collect::<Result<Vec<_>>>()?;
        Ok(BoundCurve {
            label,
            epsilons: grid.to_vec(),
            d_min: raw.iter().map(|r| r.max(0.0)).collect(),
            raw,
            beta,
            n,
        })
    }

    /// First grid point with a strictly positive bound.
    pub fn first_positive(&self) -> Option<f64> {
        self.epsilons.iter().zip(&self.d_min).find(|(_, d)| **d > 0.0).map(|(e, _)| *e)
    }

    pub fn is_monotone(&self) -> bool {
        self.d_min.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `0, step, 2 step, ...` up to `1/2` inclusive.
pub fn epsilon_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::input(format!("epsilon step {step} outside (0, 1/2]")));
    }
    let count = (0.5 / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| (i as f64 * step).min(0.5)).collect();
    if 0.5 - grid[grid.len() - 1] > 1e-12 {
        grid.push(0.5);
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// CHSH: no-signaling vs quantum bound at the Tsirelson value.
    Chsh,
    /// Chain bounds at `beta = 2n cos(pi/2n)`.
    Chain,
    /// Chain vs generalized chain for large `n`.
    GeneralizedChain,
}

impl Figure {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Figure::Chsh),
            2 => Ok(Figure::Chain),
            3 => Ok(Figure::GeneralizedChain),
            _ => Err(Error::input(format!("unknown figure {id}; expected 1, 2 or 3"))),
        }
    }

    pub fn default_n_list(self) -> Vec<usize> {
        match self {
            Figure::Chsh => vec![2],
            Figure::Chain => vec![2, 3, 4, 6, 8, 12, 16],
            Figure::GeneralizedChain => (1..=10).map(|i| 100 * i).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureParams {
    pub eps_step: f64,
    /// Defaults to [`Figure::default_n_list`].
    pub n_list: Option<Vec<usize>>,
    /// Generalized-chain `k`; defaults to [`default_k`] per `n`.
    pub k: Option<usize>,
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            eps_step: DEFAULT_EPS_STEP,
            n_list: None,
            k: None,
        }
    }
}

/// Curves for one figure, sorted by label.
pub fn figure_data(figure: Figure, params: &FigureParams) -> Result<Vec<BoundCurve>> {
    let grid = epsilon_grid(params.eps_step)?;
    let n_list = params.n_list.clone().unwrap_or_else(|| figure.default_n_list());
    if n_list.is_empty() {
        return Err(Error::input("empty n list"));
    }
    let mut curves = match figure {
        Figure::Chsh => {
            let beta = 2.0 * SQRT_2;
            vec![
                BoundCurve::sample("ns_chsh".into(), 2, beta, &grid, |e| raw_general(2, 2.0, e, beta, 4.0))?,
                BoundCurve::sample("quantum_chsh".into(), 2, beta, &grid, |e| raw_quantum_chsh(e, beta))?,
            ]
        }
        Figure::Chain => n_list
            .iter()
            .map(|&n| {
                let beta = quantum::chain_quantum_value(n);
                BoundCurve::sample(format!("chain_n{n}"), n, beta, &grid, |e| raw_chain(n, e, beta))
            })
            .collect::<Result<Vec<_>>>()?,
        Figure::GeneralizedChain => generalized_chain_curves(&n_list, params.k, &grid)?,
    };
    curves.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(curves)
}

fn generalized_chain_curves(n_list: &[usize], k: Option<usize>, grid: &[f64]) -> Result<Vec<BoundCurve>> {
    let jobs: Vec<(usize, usize)> = n_list
        .iter()
        .map(|&n| {
            let k = k.unwrap_or_else(|| default_k(n));
            check_gen_chain(n, k)?;
            Ok((n, k))
        })
        .collect::<Result<_>>()?;
    let betas = spectral_values(&jobs)?;
    let mut curves = Vec::with_capacity(2 * jobs.len());
    for (&(n, k), &(beta_chain, beta_gen)) in jobs.iter().zip(&betas) {
        let chain_closed = quantum::chain_quantum_value(n);
        let gen_closed = quantum::generalized_chain_quantum_value(n, k);
        for (label, got, want) in [("chain", beta_chain, chain_closed), ("generalized chain", beta_gen, gen_closed)] {
            if (got - want).abs() > SPECTRAL_AGREEMENT * want {
                return Err(Error::Numerical(format!(
                    "{label} n={n}: spectral value {got} disagrees with closed form {want}"
                )));
            }
        }
        curves.push(BoundCurve::sample(format!("chain_n{n}"), n, beta_chain, grid, |e| {
            raw_chain(n, e, chain_closed)
        })?);
        curves.push(BoundCurve::sample(format!("genchain_n{n}_k{k}"), n, beta_gen, grid, |e| {
            raw_gen_chain(n, k, e)
        })?);
    }
    Ok(curves)
}

/// `n ||C||` for the chain and generalized chain at each `(n, k)`,
/// computed on worker threads.
fn spectral_values(jobs: &[(usize, usize)]) -> Result<Vec<(f64, f64)>> {
    let value = |n: usize, f: bell::BellFunctional| -> Result<f64> {
        Ok(n as f64 * quantum::spectral_norm(&quantum::correlator_matrix(&f)?)?)
    };
    let work = |&(n, k): &(usize, usize)| -> Result<(f64, f64)> {
        Ok((value(n, bell::chain(n)?)?, value(n, bell::generalized_chain(n, k)?)?))
    };
    let threads = crate::worker_threads().min(jobs.len()).max(1);
    let chunk = jobs.len().div_ceil(threads);
    let parts: Vec<Result<Vec<(f64, f64)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(work).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("spectral worker panicked".into()))))
            .collect()
    });
    let mut out = Vec::with_capacity(jobs.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Writes curves as CSV with header `epsilon,label,d_min,raw`, ordered by
/// label and then `epsilon`.
pub fn write_csv<W: Write>(curves: &[BoundCurve], mut out: W) -> Result<()> {
    let mut order: Vec<&BoundCurve> = curves.iter().collect();
    order.sort_by(|a, b| a.label.cmp(&b.label));
    writeln!(out, "epsilon,label,d_min,raw")?;
    for curve in order {
        let mut rows: Vec<usize> = (0..curve.epsilons.len()).collect();
        rows.sort_by(|&i, &j| curve.epsilons[i].total_cmp(&curve.epsilons[j]));
        for i in rows {
            writeln!(
                out,
                "{},{},{},{}",
                format_sig(curve.epsilons[i]),
                curve.label,
                format_sig(curve.d_min[i]),
                format_sig(curve.raw[i])
            )?;
        }
    }
    Ok(())
}
