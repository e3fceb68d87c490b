//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::time::{Duration, Instant};

use twochoice::dp::{dp_sweep, fn_hn, iterate_g, one_choice_values, residual_summary, DpSweep};
use twochoice::limits::{solve_b_alpha, TABLE_ALPHAS};
use twochoice::profile::PowerProfile;
use twochoice::published::{diff, rows, TableRow};
use twochoice::recursion::{
    classify_moments, moment_recursion, one_choice_moment_start, one_choice_scaled_thresholds,
    sandwich_bounds, trajectory, MomentBehavior, RecursionSpec,
};
use twochoice::sim::{run_prophet, run_two_choice, PolicyTable, SimConfig};
use twochoice::{Alpha, PowerLawDist, StreamFactory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

fn check(ok: bool, detail: String, failures: &mut Vec<String>) {
    if !ok {
        failures.push(detail);
    }
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0, 0.0, "");
    for printed in rows() {
        let computed = TableRow::from_constants(&solve_b_alpha(alpha(printed.alpha)));
        let d = diff(&computed, &printed);
        if d.max() > worst.0 {
            worst = (d.max(), printed.alpha, d.worst_column());
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst.0 < 2e-3 && elapsed < Duration::from_secs(5),
        detail: format!(
            "19 rows, max |dev| {:.2e} (α {}, {}), {:.2?}",
            worst.0, worst.1, worst.2, elapsed
        ),
    }
}

fn two_choice_convergence() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (a, target, tol) in [(1.0, 1.16562, 5e-3), (0.5, 1.68310, 1e-2)] {
        let start = Instant::now();
        let last = dp_sweep(alpha(a), 10_000, 8192).map(|t| *t.last().unwrap());
        let elapsed = start.elapsed();
        match last {
            Ok(t) => {
                let got = if a == 1.0 { t.w_n } else { t.scaled_two_choice(alpha(a)) };
                notes.push(format!("α {a}: {got:.5} vs {target} ({elapsed:.1?})"));
                check(
                    (got - target).abs() < tol && elapsed < Duration::from_secs(30),
                    format!("α {a}: {got} outside {target} ± {tol} or slow"),
                    &mut failures,
                );
            }
            Err(e) => failures.push(format!("α {a}: {e}")),
        }
    }
    outcome(failures, notes)
}

fn one_choice_limits() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let n = 10_000;
    for a in [0.5, 1.0, 2.0] {
        let al = alpha(a);
        let target = 1.0 + 1.0 / a;
        let dp = n as f64 * iterate_g(al, 1.0, n).powf(a);
        let spec = RecursionSpec::new(al, PowerProfile { alpha: al }, 1, iterate_g(al, 1.0, 1)).unwrap();
        let z = trajectory(&spec, n).unwrap().last().unwrap().z;
        let rec = z.powf(a);
        notes.push(format!("α {a}: {dp:.4}/{rec:.4}"));
        check((dp - target).abs() < 1e-2, format!("α {a} dp route {dp}"), &mut failures);
        check((rec - target).abs() < 1e-2, format!("α {a} recursion route {rec}"), &mut failures);
    }
    outcome(failures, notes)
}

fn sandwich_ordering() -> Outcome {
    let n = 5000;
    let traces = dp_sweep(alpha(1.0), n, 8192).unwrap();
    match sandwich_bounds(alpha(1.0), &[32, 64], &traces, n) {
        Ok(triples) => Outcome {
            pass: true,
            detail: triples
                .iter()
                .map(|t| format!("j {}: {:.5} ≤ {:.5} ≤ {:.5} over {} n", t.j, t.lower, t.w, t.upper, t.checked))
                .collect::<Vec<_>>()
                .join("; "),
        },
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn structural_invariants() -> Outcome {
    let mut failures = Vec::new();
    let n_max = 2000;
    for a in [0.3, 1.0, 3.0] {
        let al = alpha(a);
        let v1 = one_choice_values(al, 2 * n_max);
        let mut sweep = DpSweep::new(al, 4096).unwrap();
        let mut prev_b = f64::INFINITY;
        while sweep.stage() <= n_max {
            let p = fn_hn(sweep.grid());
            let n = p.n;
            if !p.one_minus_f.windows(2).all(|w| w[1] > w[0]) {
                failures.push(format!("α {a} n {n}: f_n not strictly decreasing"));
            }
            if !p.h.windows(2).all(|w| w[1] > w[0]) {
                failures.push(format!("α {a} n {n}: h_n not strictly increasing"));
            }
            let r = residual_summary(&p);
            if !(r.min_eps > 0.0 && r.max_excess < 0.0) {
                failures.push(format!("α {a} n {n}: residual bounds {r:?}"));
            }
            let t = sweep.step().unwrap();
            if t.b_n > prev_b {
                failures.push(format!("α {a} n {n}: b_n increased"));
            }
            if t.b_n < t.v1 {
                failures.push(format!("α {a} n {n}: b_n < V_n¹"));
            }
            if !(t.v2 > v1[2 * n]) {
                failures.push(format!("α {a} n {n}: V_n² ≤ V_2n¹"));
            }
            prev_b = t.b_n;
            if failures.len() > 5 {
                break;
            }
        }
        let c = solve_b_alpha(al);
        check(c.b_alpha > 1.0 + 1.0 / a, format!("α {a}: b_α ≤ 1 + 1/α"), &mut failures);
        check(c.two_choice_limit < 1.0 + 1.0 / a, format!("α {a}: h^α(b_α) ≥ 1 + 1/α"), &mut failures);
    }
    outcome(failures, vec!["α ∈ {0.3, 1, 3}, every stage n ≤ 2000, grid 4096".into()])
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for a in [0.5, 1.0, 2.0] {
        let al = alpha(a);
        let traces = dp_sweep(al, 200, 8192).unwrap();
        let dist = PowerLawDist::pure(al);
        for n in [10, 50, 200] {
            let table = PolicyTable::from_traces(al, n, &traces).unwrap();
            let r = run_two_choice(&dist, &table, &SimConfig::new(n, 100_000, StreamFactory::DEFAULT_SEED)).unwrap();
            let exact = traces[n - 2].v2;
            let z = (r.mean - exact) / r.stderr;
            worst = worst.max(z.abs());
            check(z.abs() < 3.0, format!("α {a} n {n}: z = {z:.2}"), &mut failures);
        }
    }
    let dist = PowerLawDist::pure(alpha(1.0));
    let r = run_prophet(&dist, &SimConfig::new(9, 100_000, StreamFactory::DEFAULT_SEED)).unwrap();
    let z = (r.mean - 0.1) / r.stderr;
    check(z.abs() < 3.0, format!("prophet: z = {z:.2}"), &mut failures);
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), format!("took {elapsed:.1?}"), &mut failures);
    outcome(
        failures,
        vec![format!("9 two-choice cells, max |z| {worst:.2}; prophet z {z:.2}; {elapsed:.1?}")],
    )
}

fn moment_dichotomy() -> Outcome {
    let al = alpha(1.0);
    let seq = one_choice_scaled_thresholds(al, 100_000);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (r, want) in [(1.5, MomentBehavior::Bounded), (3.0, MomentBehavior::Divergent)] {
        let traj = moment_recursion(al, r, &seq, 2, one_choice_moment_start(al, r)).unwrap();
        let d = classify_moments(&traj, 1000, 100_000).unwrap();
        notes.push(format!("r {r}: {:?}, growth {:.2}", d.behavior, d.growth));
        check(d.behavior == want, format!("r {r}: {d:?}"), &mut failures);
    }
    outcome(failures, notes)
}

fn asymptotes() -> Outcome {
    let hi = solve_b_alpha(alpha(10.0));
    let lo = solve_b_alpha(alpha(0.1));
    let imp = (hi.rel_improvement - 0.7946).abs();
    let two = (hi.two_choice_limit - (1.0 - (-1f64).exp())).abs();
    let r34 = (lo.ratio_31_42 - 2.0).abs();
    Outcome {
        pass: imp < 0.004 && two < 0.06 && r34 < 0.08,
        detail: format!("α 10: |imp − 0.7946| {imp:.4}, |two − (1 − 1/e)| {two:.4}; α 0.1: |r34 − 2| {r34:.4}"),
    }
}

fn outcome(failures: Vec<String>, notes: Vec<String>) -> Outcome {
    let pass = failures.is_empty();
    let detail = if pass { notes.join("; ") } else { failures.join("; ") };
    Outcome { pass, detail }
}

fn main() {
    assert_eq!(rows().len(), TABLE_ALPHAS.len());
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("table reproduction", table_reproduction),
        ("two-choice convergence", two_choice_convergence),
        ("one-choice limits", one_choice_limits),
        ("sandwich ordering", sandwich_ordering),
        ("structural invariants", structural_invariants),
        ("monte carlo vs dp", monte_carlo),
        ("moment dichotomy", moment_dichotomy),
        ("asymptotes", asymptotes),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
