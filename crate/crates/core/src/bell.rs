//! Bell functionals `beta = sum c(a,b,x,y) p(a,b|x,y)` over binary-output boxes.

use crate::boxes::BipartiteBox;
use crate::error::{Error, Result};

/// Largest Bob setting count accepted by [`classical_value`].
pub const MAX_ENUMERATION_SETTINGS: usize = 24;

/// A linear functional on `n x m` binary-output boxes.
///
/// Correlation-form functionals also carry their correlator matrix `C`, with
/// `c(a,b,x,y) = C[x][y] * (-1)^(a+b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    n: usize,
    m: usize,
    coeffs: Vec<f64>,
    correlators: Option<Vec<f64>>,
}

impl BellFunctional {
    /// Correlation-form functional from an `n x m` matrix given row by row.
    pub fn from_correlators(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::input("correlator matrix must be non-empty"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::input(format!("correlator row {i} has length {} (expected {m})", rows[i].len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("correlator matrix has non-finite entries"));
        }
        let mut coeffs = Vec::with_capacity(n * m * 4);
        for c in &flat {
            coeffs.extend_from_slice(&[*c, -*c, -*c, *c]);
        }
        Ok(BellFunctional {
            n,
            m,
            coeffs,
            correlators: Some(flat),
        })
    }

    /// General functional from a flat `(x, y, a, b)` coefficient table.
    pub fn from_coeffs(n: usize, m: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || m == 0 || coeffs.len() != n * m * 4 {
            return Err(Error::input(format!(
                "coefficient table for {n}x{m} settings needs {} entries, found {}",
                n * m * 4,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("coefficient table has non-finite entries"));
        }
        Ok(BellFunctional {
            n,
            m,
            coeffs,
            correlators: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `c(a,b,x,y)`.
    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coeffs[BipartiteBox::index(self.m, x, y, a, b)]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `C[x][y]` for correlation-form functionals.
    pub fn correlator(&self, x: usize, y: usize) -> Option<f64> {
        self.correlators.as_ref().map(|c| c[x * self.m + y])
    }

    /// Correlator matrix as rows, if present.
    pub fn correlator_matrix(&self) -> Option<Vec<Vec<f64>>> {
        self.correlators
            .as_ref()
            .map(|c| c.chunks(self.m).map(<[f64]>::to_vec).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc: f64, c| acc.max(c.abs()))
    }

    /// True when `max |c| = 1`.
    pub fn is_rescaled(&self) -> bool {
        (self.max_abs_coeff() - 1.0).abs() <= 1e-12
    }

    /// Largest value attainable by any assignment of conditional
    /// distributions, ignoring no-signaling: `sum_{x,y} max_{a,b} c`.
    pub fn algebraic_max(&self) -> f64 {
        self.coeffs
            .chunks(4)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum()
    }
}

/// `<A1B1> + <A1B2> + <A2B1> - <A2B2>`.
pub fn chsh() -> BellFunctional {
    BellFunctional::from_correlators(&[vec![1.0, 1.0], vec![1.0, -1.0]]).expect("valid CHSH matrix")
}

/// Braunstein-Caves chain: `sum_k (<A_k B_k> + <A_k B_{k+1}>)` for `k < n`,
/// closed by `<A_n B_n> - <A_n B_1>`.
pub fn chain(n: usize) -> Result<BellFunctional> {
    if n < 2 {
        return Err(Error::input(format!("chain inequality needs n >= 2, got {n}")));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for k in 0..n - 1 {
        rows[k][k] = 1.0;
        rows[k][k + 1] = 1.0;
    }
    rows[n - 1][n - 1] += 1.0;
    rows[n - 1][0] -= 1.0;
    BellFunctional::from_correlators(&rows)
}

/// Generalized chain with band parameter `k`: a sign-flipped circulant whose
/// first row is `+1` on columns `0..=k`, `-1` on columns `n-k+1..n` and zero
/// elsewhere. Each later row is the previous one shifted right, with the
/// entry wrapping from the last to the first column negated.
pub fn generalized_chain(n: usize, k: usize) -> Result<BellFunctional> {
    BellFunctional::from_correlators(&generalized_chain_matrix(n, k)?)
}

pub(crate) fn generalized_chain_matrix(n: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if k < 1 || 2 * k > n {
        return Err(Error::input(format!("generalized chain needs 1 <= k <= n/2, got n={n} k={k}")));
    }
    let first_row = |j: usize| -> f64 {
        if j <= k {
            1.0
        } else if j + k > n {
            -1.0
        } else {
            0.0
        }
    };
    Ok((0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let v = first_row((c + n - r) % n);
                    if c < r {
                        -v
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect())
}

/// `beta = sum c(a,b,x,y) p(a,b|x,y)`.
pub fn evaluate(f: &BellFunctional, p: &BipartiteBox) -> Result<f64> {
    if f.n != p.n_inputs_a() || f.m != p.n_inputs_b() {
        return Err(Error::input(format!(
            "functional is {}x{} but box is {}x{}",
            f.n,
            f.m,
            p.n_inputs_a(),
            p.n_inputs_b()
        )));
    }
    Ok(f.coeffs.iter().zip(p.probs()).map(|(c, q)| c * q).sum())
}

/// Divides every coefficient by `max |c|`.
pub fn rescale(f: &BellFunctional) -> Result<BellFunctional> {
    let s = f.max_abs_coeff();
    if s == 0.0 {
        return Err(Error::input("cannot rescale the zero functional"));
    }
    Ok(BellFunctional {
        n: f.n,
        m: f.m,
        coeffs: f.coeffs.iter().map(|c| c / s).collect(),
        correlators: f.correlators.as_ref().map(|c| c.iter().map(|v| v / s).collect()),
    })
}

/// Classical (local deterministic) value of a correlation functional:
/// `max_{b in {±1}^m} sum_x |sum_y C[x][y] b_y|`.
pub fn classical_value(f: &BellFunctional) -> Result<f64> {
    classical_value_with_threads(f, crate::worker_threads())
}

pub fn classical_value_with_threads(f: &BellFunctional, threads: usize) -> Result<f64> {
    let c = f
        .correlators
        .as_ref()
        .ok_or_else(|| Error::UnsupportedForm("classical value needs a correlator matrix".into()))?;
    if f.m > MAX_ENUMERATION_SETTINGS {
        return Err(Error::Resource(format!(
            "enumeration over 2^{} Bob strategies exceeds the limit 2^{MAX_ENUMERATION_SETTINGS}",
            f.m
        )));
    }
    // b_0 = +1 without loss of generality: the objective is invariant under b -> -b.
    let free_bits = f.m - 1;
    let total: u64 = 1 << free_bits;
    let threads = threads.max(1).min(total as usize);
    if threads == 1 {
        return Ok(best_in_range(c, f.n, f.m, 0, total));
    }
    let chunk = total.div_ceil(threads as u64);
    let best = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads as u64)
            .map(|t| {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(total);
                s.spawn(move || best_in_range(c, f.n, f.m, lo, hi))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("enumeration worker panicked"))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(best)
}

/// Walks Bob's sign vectors in Gray-code order over indices `lo..hi`,
/// updating Alice's inner sums one flipped column at a time.
fn best_in_range(c: &[f64], n: usize, m: usize, lo: u64, hi: u64) -> f64 {
    if lo >= hi {
        return f64::NEG_INFINITY;
    }
    let sign = |code: u64, y: usize| -> f64 {
        // bit y-1 of the Gray code holds b_y for y >= 1; b_0 = +1.
        if y > 0 && (code >> (y - 1)) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    };
    let mut code = lo ^ (lo >> 1);
    let mut sums: Vec<f64> = (0..n)
        .map(|x| (0..m).map(|y| c[x * m + y] * sign(code, y)).sum())
        .collect();
    let value = |sums: &[f64]| sums.iter().map(|s| s.abs()).sum::<f64>();
    let mut best = value(&sums);
    for i in lo + 1..hi {
        let next = i ^ (i >> 1);
        let bit = (code ^ next).trailing_zeros() as usize;
        let y = bit + 1;
        let old = sign(code, y);
        for (x, s) in sums.iter_mut().enumerate() {
            *s -= 2.0 * old * c[x * m + y];
        }
        code = next;
        best = best.max(value(&sums));
    }
    best
}
