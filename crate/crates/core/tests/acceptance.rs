//! Acceptance criteria, one report line each. Runs without the libtest
//! harness so the lines come out in order with their timings.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nonsig_lab::bell::{self, BellFunctional};
use nonsig_lab::boxes::{disturbance_total, make_pr_box};
use nonsig_lab::lp;
use nonsig_lab::quantum::{self, QuantumScenario};
use nonsig_lab::tradeoff::{self, Figure, FigureParams};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: nonsig_lab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn eps_grid() -> Vec<f64> {
    (0..=5).map(|i| i as f64 / 10.0).collect()
}

fn exact_values() -> Outcome {
    let mut cases: Vec<(String, BellFunctional, f64, Option<f64>, f64)> =
        vec![("chsh".into(), bell::chsh(), 4.0, Some(2.0), 2.0)];
    for n in 3..=8 {
        let nf = n as f64;
        cases.push((format!("chain({n})"), lib(bell::chain(n))?, 2.0 * nf, Some(2.0 * nf - 2.0), 2.0));
    }
    for (n, k) in [(4, 2), (6, 2), (6, 3), (8, 2)] {
        let classical = (n % k == 0).then(|| (2 * k * (n - k)) as f64);
        let f = lib(bell::generalized_chain(n, k))?;
        cases.push((format!("genchain({n},{k})"), f, (2 * k * n) as f64, classical, (2 * k) as f64));
    }
    for (name, f, ns, classical, w) in &cases {
        let got_ns = lib(lp::ns_value(f))?;
        ensure((got_ns - ns).abs() <= 1e-6, || format!("{name}: ns_value {got_ns} != {ns}"))?;
        let got_w = lib(lp::relevance(f, 0))?;
        ensure((got_w - w).abs() <= 1e-6, || format!("{name}: relevance {got_w} != {w}"))?;
        if let Some(cl) = classical {
            let got = lib(bell::classical_value(f))?;
            ensure(got == *cl, || format!("{name}: classical_value {got} != {cl}"))?;
        }
    }
    Ok(format!("{} functionals", cases.len()))
}

fn threshold() -> Outcome {
    let th = lib(tradeoff::epsilon_threshold(2, 2.0, 2.0 * SQRT_2, 4.0))?;
    ensure((th - 0.29289).abs() <= 5e-4, || format!("threshold {th}"))?;
    let shown = format!("{th:.3}");
    ensure(shown == "0.293", || format!("threshold prints as {shown}"))?;
    Ok(format!("eps_th = {th:.10} prints as {shown}"))
}

fn spectral() -> Outcome {
    let mut worst_value: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    let chsh = lib(quantum::quantum_bound(&bell::chsh()))?;
    worst_value = worst_value.max((chsh - 2.0 * SQRT_2).abs());
    for n in 2..=12usize {
        let nf = n as f64;
        let chain = lib(quantum::quantum_bound(&lib(bell::chain(n))?))?;
        worst_value = worst_value.max((chain - 2.0 * nf * (PI / (2.0 * nf)).cos()).abs());
        for k in 1..=n / 2 {
            let f = lib(bell::generalized_chain(n, k))?;
            let closed = nf / (PI / (2.0 * nf)).sin() * (k as f64 * PI / nf).sin();
            worst_value = worst_value.max((lib(quantum::quantum_bound(&f))? - closed).abs());

            let mut moduli: Vec<f64> = lib(quantum::gen_chain_eigenvalues(n, k))?.iter().map(|z| z.norm()).collect();
            moduli.sort_by(|a, b| b.total_cmp(a));
            let sv = quantum::singular_values(&lib(quantum::correlator_matrix(&f))?);
            ensure(sv.len() == moduli.len(), || format!("n={n} k={k}: {} eigenvalues", moduli.len()))?;
            for (l, s) in moduli.iter().zip(&sv) {
                worst_eig = worst_eig.max((l - s).abs());
            }
        }
    }
    ensure(worst_value <= 1e-6, || format!("spectral deviation {worst_value:e}"))?;
    ensure(worst_eig <= 1e-9, || format!("eigenvalue deviation {worst_eig:e}"))?;
    Ok(format!("max value deviation {worst_value:.2e}, max eigenvalue deviation {worst_eig:.2e}"))
}

fn gentle_axioms() -> Outcome {
    let pairs = quantum::sample_gentle_parameters(100, 2016);
    ensure(pairs.len() == 100, || format!("{} pairs", pairs.len()))?;
    let (mut marginal, mut conditional, mut correlator): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (ta, tb) = quantum::tsirelson_angles();
    let (ca, cb) = lib(quantum::chain_angles(3))?;
    for &(alpha, eps) in &pairs {
        let r = lib(quantum::verify_gentle_assumptions(alpha, eps))?;
        marginal = marginal.max(r.marginal_deviation);
        conditional = conditional.max(r.conditional_deviation);
        for (a, b) in [(&ta, &tb), (&ca, &cb)] {
            let s = lib(QuantumScenario::phi_plus(a.clone(), b.clone(), eps))?;
            let tri = lib(quantum::tripartite_quantum_box(&s))?;
            correlator = correlator.max((tri.gentle_correlator() - 2.0 * eps).abs());
        }
    }
    ensure(marginal <= 1e-10, || format!("marginal deviation {marginal:e}"))?;
    ensure(conditional <= 1e-10, || format!("conditional deviation {conditional:e}"))?;
    ensure(correlator <= 1e-10, || format!("<B1g B1> deviation {correlator:e}"))?;
    Ok(format!(
        "100 pairs: marginal {marginal:.1e}, conditional {conditional:.1e}, correlator {correlator:.1e}"
    ))
}

fn bound_consistency() -> Outcome {
    let mut checked = 0;
    let mut slack = f64::INFINITY;
    for n in 2..=4usize {
        let nf = n as f64;
        let f = lib(bell::chain(n))?;
        let (w, beta_max) = (2.0, 2.0 * nf);
        let (a, b) = lib(quantum::chain_angles(n))?;
        for eps in eps_grid() {
            let tag = format!("n={n} eps={eps}");
            let s = lib(QuantumScenario::phi_plus(a.clone(), b.clone(), eps))?;
            let p = lib(quantum::quantum_box(&s))?;
            let tri = lib(quantum::tripartite_quantum_box(&s))?;
            let signaling = tri.max_signaling();
            ensure(signaling <= 1e-10, || format!("{tag}: signaling {signaling:e}"))?;

            let after = lib(tri.marginalize())?;
            let d = lib(disturbance_total(&p, &after, 0))?.total;
            let (beta, beta_after) = (lib(bell::evaluate(&f, &p))?, lib(bell::evaluate(&f, &after))?);
            let gap = (beta - beta_after).abs();
            ensure(nf * d >= gap - 1e-7, || format!("{tag}: n D = {} < |dbeta| = {gap}", nf * d))?;

            let mono = beta_after + w * tri.gentle_correlator();
            ensure(mono <= beta_max + 1e-6, || format!("{tag}: monogamy {mono} > {beta_max}"))?;

            let mut bound = lib(tradeoff::bound_chain(n, eps, beta))?;
            if n == 2 {
                let r = lib(quantum::quantum_monogamy_check(&s))?;
                let lhs = r.beta * r.beta + 4.0 * (2.0 * eps) * (2.0 * eps);
                ensure(lhs <= 8.0 + 1e-8, || format!("{tag}: quantum monogamy {lhs} > 8"))?;
                bound = bound.max(lib(tradeoff::bound_quantum_chsh(eps, beta))?);
            }
            ensure(d >= bound - 1e-7, || format!("{tag}: D = {d} below bound {bound}"))?;
            slack = slack.min(d - bound);
            checked += 1;
        }
    }
    Ok(format!("{checked} scenarios, min D - bound {slack:.3e}"))
}

fn adversary() -> Outcome {
    let pr = make_pr_box();
    let mut values = Vec::new();
    for eps in eps_grid() {
        let d = lib(lp::min_disturbance_adversary(&pr, eps))?.d_min;
        let bound = lib(tradeoff::bound_chsh(eps, 4.0))?;
        ensure(d >= bound - 1e-6, || format!("eps={eps}: d_min {d} < {bound}"))?;
        values.push(d);
    }
    ensure(values[0] == 0.0, || format!("d_min(0) = {}", values[0]))?;
    ensure(values[5] >= 1.0 - 1e-6, || format!("d_min(0.5) = {}", values[5]))?;
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    Ok(format!("d_min = [{}]", shown.join(", ")))
}

/// `(epsilon, d_min, raw)` rows per label, parsed back from the CSV.
fn csv_curves(figure: Figure) -> Result<Vec<(String, Vec<(f64, f64, f64)>)>, String> {
    let curves = lib(tradeoff::figure_data(figure, &FigureParams::default()))?;
    let mut bytes = Vec::new();
    lib(tradeoff::write_csv(&curves, &mut bytes))?;
    let text = String::from_utf8(bytes).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure(lines.next() == Some("epsilon,label,d_min,raw"), || "bad CSV header".into())?;
    let mut out: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        ensure(cells.len() == 4, || format!("bad CSV row {line}"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{line}: {e}"));
        let row = (num(cells[0])?, num(cells[2])?, num(cells[3])?);
        match out.last_mut() {
            Some((label, rows)) if label == cells[1] => rows.push(row),
            _ => out.push((cells[1].to_string(), vec![row])),
        }
    }
    Ok(out)
}

fn curve<'a>(curves: &'a [(String, Vec<(f64, f64, f64)>)], label: &str) -> Result<&'a [(f64, f64, f64)], String> {
    curves
        .iter()
        .find(|(l, _)| l == label)
        .map(|(_, rows)| rows.as_slice())
        .ok_or_else(|| format!("no curve {label}"))
}

fn figures() -> Outcome {
    let fig1 = csv_curves(Figure::Chsh)?;
    let (dashed, thick) = (curve(&fig1, "ns_chsh")?, curve(&fig1, "quantum_chsh")?);
    ensure(dashed.len() == thick.len(), || "fig 1 grids differ".into())?;
    for (d, t) in dashed.iter().zip(thick) {
        let eps = d.0;
        ensure(eps >= 0.293 || d.1 == 0.0, || format!("fig 1: dashed {} at eps {eps}", d.1))?;
        ensure(eps == 0.0 || t.1 > 0.0, || format!("fig 1: thick {} at eps {eps}", t.1))?;
        ensure(t.1 >= d.1, || format!("fig 1: thick below dashed at eps {eps}"))?;
    }

    let fig2 = csv_curves(Figure::Chain)?;
    let mut previous = f64::INFINITY;
    let mut thresholds = Vec::new();
    for n in Figure::Chain.default_n_list() {
        let rows = curve(&fig2, &format!("chain_n{n}"))?;
        for w in rows.windows(2) {
            let slope = (w[1].2 - w[0].2) / (w[1].0 - w[0].0);
            ensure((slope - 4.0 / n as f64).abs() <= 1e-6, || format!("fig 2: n={n} slope {slope}"))?;
        }
        let (e0, r0) = (rows[0].0, rows[0].2);
        let th = e0 - r0 * n as f64 / 4.0;
        ensure(th < previous, || format!("fig 2: threshold {th} at n={n} not below {previous}"))?;
        previous = th;
        thresholds.push(format!("{th:.4}"));
    }

    let fig3 = csv_curves(Figure::GeneralizedChain)?;
    let mut windows = Vec::new();
    for n in [100, 1000] {
        let k = tradeoff::default_k(n);
        let chain = curve(&fig3, &format!("chain_n{n}"))?;
        let gen = curve(&fig3, &format!("genchain_n{n}_k{k}"))?;
        let wins: Vec<f64> = chain.iter().zip(gen).filter(|(c, g)| g.1 > c.1).map(|(c, _)| c.0).collect();
        ensure(!wins.is_empty(), || format!("fig 3: generalized chain never wins at n={n}"))?;
        windows.push(format!("n={n} k={k} from eps {}", wins[0]));
    }
    Ok(format!("fig 2 thresholds [{}]; fig 3 {}", thresholds.join(", "), windows.join(", ")))
}

fn hand_disturbance() -> Outcome {
    let pr = make_pr_box();
    let flipped = lib(pr.flip_bob_outputs(1))?;
    let d = lib(disturbance_total(&pr, &flipped, 0))?.total;
    ensure((d - 2.0).abs() <= 1e-12, || format!("D = {d}"))?;
    let f = bell::chsh();
    let delta = (lib(bell::evaluate(&f, &pr))? - lib(bell::evaluate(&f, &flipped))?).abs();
    ensure((delta - 4.0).abs() <= 1e-12, || format!("|dbeta| = {delta}"))?;
    ensure((2.0 * d - delta).abs() <= 1e-12, || format!("n D = {} vs {delta}", 2.0 * d))?;
    Ok(format!("D = {d}, n D = {}, |dbeta| = {delta}", 2.0 * d))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 8] = [
        ("exact values", 5, exact_values),
        ("threshold", 5, threshold),
        ("quantum values", 10, spectral),
        ("gentle measurement", 10, gentle_axioms),
        ("bound consistency", 60, bound_consistency),
        ("adversary", 10, adversary),
        ("figures", 30, figures),
        ("hand-computed disturbance", 5, hand_disturbance),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > Duration::from_secs(*limit) {
            outcome = Err(format!("took longer than {limit} s"));
        }
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!("[{tag}] {} {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
