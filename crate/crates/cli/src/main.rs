use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nonsig_lab::bell::{self, BellFunctional};
use nonsig_lab::check::{self, CheckConfig, Suite};
use nonsig_lab::io::{format_sig, read_box, tripartite_to_json, write_tripartite};
use nonsig_lab::quantum::{self, QuantumScenario};
use nonsig_lab::tradeoff::{self, Figure, FigureParams};
use nonsig_lab::{boxes, lp, Error};

#[derive(Parser, Debug)]
#[command(name = "nonsig-lab", version, about = "Information gain versus disturbance from Bell non-locality")]
struct Cli {
    /// Tolerance for input validation and pass/fail checks.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical, no-signaling and quantum values, relevance and threshold.
    Values {
        #[arg(long, value_enum)]
        inequality: Inequality,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Print one CSV row instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Bound curves for a figure as CSV.
    Bounds {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
        figure: u32,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = tradeoff::DEFAULT_EPS_STEP)]
        eps_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimal-disturbance gentle adversary for a box file.
    Adversary {
        #[arg(long = "box")]
        box_file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Where to write the optimal extension (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantum verifications.
    Quantum {
        #[arg(long, value_enum)]
        check: QuantumCheck,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Invariant suites.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = check::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Inequality {
    Chsh,
    Chain,
    Genchain,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum QuantumCheck {
    Gentle,
    Monogamy,
    Eigs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SuiteArg {
    All,
    Box,
    Lp,
    Quantum,
    Tradeoff,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Box => Suite::Box,
            SuiteArg::Lp => Suite::Lp,
            SuiteArg::Quantum => Suite::Quantum,
            SuiteArg::Tradeoff => Suite::Tradeoff,
        }
    }
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) => Failure::Usage(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(format!("I/O error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Outcome {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
        }
    }
    match cli.command {
        Command::Values { inequality, n, k, csv } => values(out, inequality, n, k, csv),
        Command::Bounds {
            figure,
            n_list,
            k,
            eps_step,
            out: path,
        } => bounds(figure, n_list, k, eps_step, path),
        Command::Adversary { box_file, epsilon, out: path } => adversary(out, box_file, epsilon, path, cli.tol),
        Command::Quantum { check, n, k, epsilon } => quantum_check(out, check, n, k, epsilon, cli.tol),
        Command::Check { suite, seed } => run_checks(out, suite.into(), seed, cli.tol),
    }
}

fn functional_for(inequality: Inequality, n: Option<usize>, k: Option<usize>) -> Result<(BellFunctional, usize, usize), Failure> {
    match inequality {
        Inequality::Chsh => {
            if n.is_some_and(|n| n != 2) || k.is_some_and(|k| k != 1) {
                return Err(Failure::Usage("chsh is fixed at n = 2".into()));
            }
            Ok((bell::chsh(), 2, 1))
        }
        Inequality::Chain => {
            let n = n.ok_or_else(|| Failure::Usage("chain needs --n".into()))?;
            if k.is_some_and(|k| k != 1) {
                return Err(Failure::Usage("chain takes no --k; use genchain".into()));
            }
            Ok((bell::chain(n)?, n, 1))
        }
        Inequality::Genchain => {
            let n = n.ok_or_else(|| Failure::Usage("genchain needs --n".into()))?;
            let k = k.ok_or_else(|| Failure::Usage("genchain needs --k".into()))?;
            Ok((bell::generalized_chain(n, k)?, n, k))
        }
    }
}

fn values(out: &mut impl Write, inequality: Inequality, n: Option<usize>, k: Option<usize>, csv: bool) -> Outcome {
    let (f, n, k) = functional_for(inequality, n, k)?;
    let name = format!("{inequality:?}").to_lowercase();
    let beta_cl = bell::classical_value(&f)?;
    let beta_ns = lp::ns_value(&f)?;
    let beta_q = quantum::quantum_bound(&f)?;
    let w = lp::relevance(&f, 0)?;
    let eps_th = tradeoff::epsilon_threshold(n, w, beta_q.min(beta_ns), beta_ns)?;
    let row = [beta_cl, beta_ns, beta_q, w, eps_th].map(format_sig);
    if csv {
        writeln!(out, "inequality,n,k,beta_cl,beta_ns,beta_q,w,eps_th")?;
        writeln!(out, "{name},{n},{k},{}", row.join(","))?;
    } else {
        writeln!(out, "inequality {name}")?;
        writeln!(out, "n {n}")?;
        writeln!(out, "k {k}")?;
        for (key, v) in ["beta_cl", "beta_ns", "beta_q", "w", "eps_th"].iter().zip(&row) {
            writeln!(out, "{key} {v}")?;
        }
    }
    Ok(())
}

fn bounds(figure: u32, n_list: Option<Vec<usize>>, k: Option<usize>, eps_step: f64, path: PathBuf) -> Outcome {
    let figure = Figure::from_id(figure)?;
    let curves = tradeoff::figure_data(figure, &FigureParams { eps_step, n_list, k })?;
    let file = File::create(&path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    tradeoff::write_csv(&curves, &mut writer)?;
    writer.flush()?;
    Ok(())
}

/// Library functionals that fit an `n x m` box.
fn library_for(n: usize, m: usize) -> Result<Vec<(String, BellFunctional)>, Failure> {
    let mut fs = Vec::new();
    if n == 2 && m == 2 {
        fs.push(("chsh".to_string(), bell::chsh()));
    }
    if n == m && n >= 2 {
        fs.push((format!("chain_n{n}"), bell::chain(n)?));
        for k in 2..=n / 2 {
            fs.push((format!("genchain_n{n}_k{k}"), bell::generalized_chain(n, k)?));
        }
    }
    Ok(fs)
}

fn adversary(out: &mut impl Write, box_file: PathBuf, epsilon: f64, path: Option<PathBuf>, tol: Option<f64>) -> Outcome {
    let p = read_box(&box_file, tol.unwrap_or(boxes::NS_TOL))?;
    let result = lp::min_disturbance_adversary(&p, epsilon)?;
    let n = p.n_inputs_a();
    writeln!(out, "epsilon {}", format_sig(epsilon))?;
    writeln!(out, "d_min {}", format_sig(result.d_min))?;
    writeln!(out, "gentle_correlator {}", format_sig(result.extension.gentle_correlator()))?;
    let mut violated = false;
    for (name, f) in library_for(n, p.n_inputs_b())? {
        let beta_max = lp::ns_value(&f)?;
        let w = lp::relevance(&f, 0)?;
        let beta = bell::evaluate(&f, &p)?;
        let bound = tradeoff::bound_general(n, w, epsilon, beta.min(beta_max), beta_max)?;
        let holds = result.d_min >= bound - tol.unwrap_or(1e-6);
        violated |= !holds;
        writeln!(
            out,
            "bound {name} beta {} w {} beta_max {} d_bound {} {}",
            format_sig(beta),
            format_sig(w),
            format_sig(beta_max),
            format_sig(bound),
            if holds { "ok" } else { "VIOLATED" }
        )?;
    }
    match path {
        Some(path) => write_tripartite(&path, &result.extension)?,
        None => write!(out, "{}", tripartite_to_json(&result.extension))?,
    }
    if violated {
        return Err(Failure::Invalid("adversary optimum falls below a trade-off bound".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: Option<f64>) -> Result<Vec<f64>, Failure> {
    match epsilon {
        Some(e) if (0.0..=0.5).contains(&e) => Ok(vec![e]),
        Some(e) => Err(Failure::Usage(format!("--epsilon {e} outside [0, 1/2]"))),
        None => Ok((0..=5).map(|i| 0.1 * i as f64).collect()),
    }
}

fn quantum_check(
    out: &mut impl Write,
    which: QuantumCheck,
    n: Option<usize>,
    k: Option<usize>,
    epsilon: Option<f64>,
    tol: Option<f64>,
) -> Outcome {
    let passed = match which {
        QuantumCheck::Gentle => {
            let eps = check_epsilon(epsilon)?;
            let limit = tol.unwrap_or(1e-10);
            let (mut marginal, mut conditional, mut gentle): (f64, f64, f64) = (0.0, 0.0, 0.0);
            let samples = quantum::sample_gentle_parameters(100, check::DEFAULT_SEED);
            for (alpha, e) in samples {
                let e = if epsilon.is_some() { eps[0] } else { e };
                let r = quantum::verify_gentle_assumptions(alpha, e)?;
                marginal = marginal.max(r.marginal_deviation);
                conditional = conditional.max(r.conditional_deviation);
            }
            let (a, b) = quantum::tsirelson_angles();
            for &e in &eps {
                let tri = quantum::tripartite_quantum_box(&QuantumScenario::phi_plus(a.clone(), b.clone(), e)?)?;
                gentle = gentle.max((tri.gentle_correlator() - 2.0 * e).abs());
            }
            writeln!(out, "max_marginal_deviation {}", format_sig(marginal))?;
            writeln!(out, "max_conditional_deviation {}", format_sig(conditional))?;
            writeln!(out, "max_gentle_correlator_deviation {}", format_sig(gentle))?;
            marginal <= limit && conditional <= limit && gentle <= limit
        }
        QuantumCheck::Monogamy => {
            let (a, b) = quantum::tsirelson_angles();
            let limit = tol.unwrap_or(quantum::MONOGAMY_TOL);
            let mut all = true;
            for e in check_epsilon(epsilon)? {
                let r = quantum::quantum_monogamy_check(&QuantumScenario::phi_plus(a.clone(), b.clone(), e)?)?;
                let holds = r.lhs <= 8.0 + limit;
                all &= holds;
                writeln!(
                    out,
                    "epsilon {} beta {} gentle_correlator {} lhs {} {}",
                    format_sig(e),
                    format_sig(r.beta),
                    format_sig(r.gentle_correlator),
                    format_sig(r.lhs),
                    if holds { "holds" } else { "VIOLATED" }
                )?;
            }
            all
        }
        QuantumCheck::Eigs => {
            let limit = tol.unwrap_or(1e-9);
            let pairs: Vec<(usize, usize)> = match (n, k) {
                (Some(n), Some(k)) => vec![(n, k)],
                (Some(n), None) => (1..=n / 2).map(|k| (n, k)).collect(),
                (None, None) => (2..=12).flat_map(|n| (1..=n / 2).map(move |k| (n, k))).collect(),
                (None, Some(_)) => return Err(Failure::Usage("--k needs --n".into())),
            };
            let (mut eig_dev, mut closed_dev): (f64, f64) = (0.0, 0.0);
            for (n, k) in pairs {
                let mut moduli: Vec<f64> = quantum::gen_chain_eigenvalues(n, k)?.iter().map(|z| z.norm()).collect();
                moduli.sort_by(|a, b| b.total_cmp(a));
                let c = quantum::correlator_matrix(&bell::generalized_chain(n, k)?)?;
                for (l, s) in moduli.iter().zip(quantum::singular_values(&c)) {
                    eig_dev = eig_dev.max((l - s).abs());
                }
                let closed = quantum::generalized_chain_quantum_value(n, k);
                let spectral = n as f64 * quantum::spectral_norm(&c)?;
                closed_dev = closed_dev.max((spectral - closed).abs() / closed);
            }
            writeln!(out, "max_eigenvalue_singular_value_deviation {}", format_sig(eig_dev))?;
            writeln!(out, "max_relative_spectral_closed_form_deviation {}", format_sig(closed_dev))?;
            eig_dev <= limit && closed_dev <= tradeoff::SPECTRAL_AGREEMENT
        }
    };
    if passed {
        Ok(())
    } else {
        Err(Failure::Invalid("quantum check exceeded its tolerance".into()))
    }
}

fn run_checks(out: &mut impl Write, suite: Suite, seed: u64, tol: Option<f64>) -> Outcome {
    let report = check::run_suite(suite, &CheckConfig { seed, tol });
    for outcome in &report.outcomes {
        writeln!(out, "{outcome}")?;
    }
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    writeln!(out, "{} passed, {failed} failed", report.outcomes.len() - failed)?;
    if failed > 0 {
        return Err(Failure::Invalid(format!("{failed} invariant check(s) failed")));
    }
    Ok(())
}
