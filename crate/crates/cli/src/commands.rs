//! One function per subcommand. Each returns a report; failed checks are
//! recorded in it rather than returned as errors.

use anyhow::{bail, Context, Result};
use twochoice::dp::{dp_sweep, fn_hn, one_choice_values, prophet_value, residual_summary, DpSweep};
use twochoice::limits::{asymptote_check, q_root, solve_b_alpha, Direction, TABLE_ALPHAS};
use twochoice::published::{self, TableRow, COLUMNS};
use twochoice::recursion::{
    classify_moments, moment_recursion, one_choice_moment_start, one_choice_scaled_thresholds,
    sandwich_bounds, MomentBehavior, SandwichFn,
};
use twochoice::sim::{run_one_choice, run_prophet, run_two_choice, OneChoiceTable, PolicyTable, SimConfig};
use twochoice::{Alpha, Error, PowerLawDist, Profile, SimReport};

use crate::args::{Behavior, Command, DirectionArg};
use crate::report::{Report, Value};

/// Largest accepted deviation from a printed table cell.
pub const TABLE_TOLERANCE: f64 = 2e-3;

fn alpha(a: f64) -> Result<Alpha> {
    Ok(Alpha::new(a)?)
}

pub fn run(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Table1 { alphas, diff } => table1(alphas, *diff),
        Command::Converge { alpha: a, n, grid_size } => converge(alpha(*a)?, *n, *grid_size),
        Command::Sandwich {
            alpha: a,
            n,
            js,
            grid_size,
        } => sandwich(alpha(*a)?, *n, js, *grid_size),
        Command::Simulate {
            alpha: a,
            n,
            trials,
            seed,
            grid_size,
            r,
            z_max,
        } => {
            let mut cfg = SimConfig::new(*n, *trials, *seed);
            if let Some(r) = r {
                cfg = cfg.with_moment(*r);
            }
            simulate(alpha(*a)?, &cfg, *grid_size, *z_max)
        }
        Command::Moments {
            alpha: a,
            r,
            n,
            from,
            expect,
        } => moments(alpha(*a)?, *r, *n, *from, *expect),
        Command::Asymptote { direction, alphas } => asymptote(*direction, alphas),
    }
}

pub fn table1(alphas: &[f64], with_diff: bool) -> Result<Report> {
    let alphas = if alphas.is_empty() { TABLE_ALPHAS.to_vec() } else { alphas.to_vec() };
    let mut columns: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    if with_diff {
        columns.extend(COLUMNS[1..].iter().map(|c| format!("dev_{c}")));
    }
    let mut rep = Report {
        command: "table1".into(),
        columns,
        ..Report::default()
    };
    let mut worst = (0.0, 0.0, "");
    for a in alphas {
        let row = TableRow::from_constants(&solve_b_alpha(alpha(a)?));
        let mut cells: Vec<Value> = row.cells().iter().map(|&c| c.into()).collect();
        if with_diff {
            let printed = published::row_for(a).with_context(|| format!("no printed row for α = {a}"))?;
            let d = published::diff(&row, &printed);
            if d.max() > worst.0 {
                worst = (d.max(), a, d.worst_column());
            }
            cells.extend(d.deviations.iter().map(|&x| Value::from(x)));
        }
        rep.push(cells);
    }
    if with_diff {
        rep.note("max_deviation", worst.0);
        rep.check(
            "table deviation",
            worst.0 < TABLE_TOLERANCE,
            format!("max |computed − printed| {:.2e} at α {} ({})", worst.0, worst.1, worst.2),
        );
    }
    Ok(rep)
}

pub fn converge(alpha: Alpha, n_max: usize, grid_size: usize) -> Result<Report> {
    let mut rep = Report::new(
        "converge",
        &[
            "n", "V1", "V2", "b_n", "W_n", "B_n", "nF_V1", "nF_V2", "min_eps", "max_eps", "max_excess",
        ],
    );
    let a = alpha.get();
    let mut sweep = DpSweep::new(alpha, grid_size)?;
    let mut prev_b = f64::INFINITY;
    let mut bad_residual = Vec::new();
    let mut bad_shape = Vec::new();
    let mut bad_b = Vec::new();
    while sweep.stage() <= n_max {
        let p = fn_hn(sweep.grid());
        let r = residual_summary(&p);
        if !(p.one_minus_f.windows(2).all(|w| w[1] > w[0]) && p.h.windows(2).all(|w| w[1] > w[0])) {
            bad_shape.push(p.n);
        }
        if !(r.min_eps > 0.0 && r.max_excess < 0.0) {
            bad_residual.push(p.n);
        }
        let t = sweep.step()?;
        if t.b_n > prev_b {
            bad_b.push(t.n);
        }
        prev_b = t.b_n;
        let nf = t.n as f64;
        rep.push(vec![
            t.n.into(),
            t.v1.into(),
            t.v2.into(),
            t.b_n.into(),
            t.w_n.into(),
            t.b_scaled.into(),
            (nf * t.v1.powf(a)).into(),
            (nf * t.v2.powf(a)).into(),
            r.min_eps.into(),
            r.max_eps.into(),
            r.max_excess.into(),
        ]);
    }
    let limit = solve_b_alpha(alpha);
    rep.note("limit_W", limit.d_alpha);
    rep.note("limit_B", limit.b_alpha);
    rep.note("limit_nF_V2", limit.two_choice_limit);
    rep.check("residual bounds", bad_residual.is_empty(), describe("0 < ε_n < y/2n fails", &bad_residual));
    rep.check("profile monotonicity", bad_shape.is_empty(), describe("f_n or h_n not strictly monotone", &bad_shape));
    rep.check("threshold monotonicity", bad_b.is_empty(), describe("b_n increases", &bad_b));
    Ok(rep)
}

fn describe(what: &str, stages: &[usize]) -> String {
    match stages {
        [] => "all stages".into(),
        [first, ..] => format!("{what} at {} stages, first n = {first}", stages.len()),
    }
}

pub fn sandwich(alpha: Alpha, n_max: usize, js: &[usize], grid_size: usize) -> Result<Report> {
    let mut rep = Report::new(
        "sandwich",
        &["j", "cap", "n", "lower", "W_n", "upper", "lower_limit", "root_condition", "checked"],
    );
    let traces = dp_sweep(alpha, n_max, grid_size)?;
    let d = solve_b_alpha(alpha).d_alpha;
    rep.note("upper_limit", d);
    match sandwich_bounds(alpha, js, &traces, n_max) {
        Ok(triples) => {
            for t in triples {
                let k = SandwichFn::new(alpha, t.j, t.cap)?;
                let admissible = k.is_admissible();
                // without the root condition the lower recursion rises to the plateau
                let lower_limit = if admissible { k.value(q_root(&k, alpha)?) } else { k.value(k.cap) };
                rep.push(vec![
                    t.j.into(),
                    t.cap.into(),
                    t.n.into(),
                    t.lower.into(),
                    t.w.into(),
                    t.upper.into(),
                    lower_limit.into(),
                    admissible.into(),
                    t.checked.into(),
                ]);
            }
            rep.check("sandwich ordering", true, format!("Z⁻ ≤ W ≤ Z⁺ for n ≤ {n_max}, j ∈ {js:?}"));
        }
        Err(e @ Error::OrderingViolation { .. }) => rep.check("sandwich ordering", false, e.to_string()),
        Err(e) => return Err(e.into()),
    }
    Ok(rep)
}

pub fn simulate(alpha: Alpha, cfg: &SimConfig, grid_size: usize, z_max: f64) -> Result<Report> {
    let mut columns = vec!["policy", "n", "trials", "seed", "mean", "stderr", "exact", "z", "scaled_mean"];
    if cfg.moment_r.is_some() {
        columns.extend(["r", "moment_mean", "moment_stderr"]);
    }
    let mut rep = Report::new("simulate", &columns);
    let n = cfg.n;
    let dist = PowerLawDist::pure(alpha);
    let traces = dp_sweep(alpha, n, grid_size)?;
    let runs: [(SimReport, f64); 3] = [
        (
            run_one_choice(&dist, &OneChoiceTable::new(alpha, n)?, cfg)?,
            one_choice_values(alpha, n)[n],
        ),
        (
            run_two_choice(&dist, &PolicyTable::from_traces(alpha, n, &traces)?, cfg)?,
            traces[n - 2].v2,
        ),
        (run_prophet(&dist, cfg)?, prophet_value(alpha, n)),
    ];
    for (r, exact) in &runs {
        let z = (r.mean - exact) / r.stderr;
        let mut row: Vec<Value> = vec![
            r.policy.name().into(),
            r.n.into(),
            r.trials.into(),
            Value::Int(cfg.seed),
            r.mean.into(),
            r.stderr.into(),
            (*exact).into(),
            z.into(),
            r.scaled_mean.into(),
        ];
        if let Some(m) = r.moment_r {
            row.extend([m.r.into(), m.mean.into(), m.stderr.into()]);
        }
        rep.push(row);
        rep.check(
            &format!("{} vs exact", r.policy.name()),
            z.abs() <= z_max,
            format!("mean {:.6} exact {exact:.6} z {z:.2} (limit {z_max})", r.mean),
        );
    }
    let [(one, _), (two, _), (pro, _)] = &runs;
    let ordered = |hi: &SimReport, lo: &SimReport| lo.mean <= hi.mean + 3.0 * hi.stderr.hypot(lo.stderr);
    rep.check(
        "policy ordering",
        ordered(one, two) && ordered(two, pro),
        format!("one {:.6} ≥ two {:.6} ≥ prophet {:.6}", one.mean, two.mean, pro.mean),
    );
    Ok(rep)
}

/// Indices `2..=10`, then roughly twenty per decade, then `n_max`.
fn ladder(n_max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (2..=n_max.min(10)).collect();
    let mut k = 0;
    loop {
        let n = (10f64 * 10f64.powf(k as f64 / 20.0)).round() as usize;
        if n >= n_max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        k += 1;
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

pub fn moments(alpha: Alpha, r: f64, n_max: usize, from: usize, expect: Option<Behavior>) -> Result<Report> {
    if from >= n_max {
        bail!("--from ({from}) must be below --n ({n_max})");
    }
    let mut rep = Report::new("moments", &["n", "S_n"]);
    let seq = one_choice_scaled_thresholds(alpha, n_max - 1);
    let traj = moment_recursion(alpha, r, &seq, 2, one_choice_moment_start(alpha, r))?;
    let mut marks = ladder(n_max);
    marks.push(from);
    marks.sort_unstable();
    marks.dedup();
    for n in marks {
        rep.push(vec![n.into(), traj[n - 2].1.into()]);
    }
    let d = classify_moments(&traj, from, n_max)?;
    let behavior = match d.behavior {
        MomentBehavior::Bounded => "bounded",
        MomentBehavior::Divergent => "divergent",
        MomentBehavior::Undetermined => "undetermined",
    };
    rep.note("r", r);
    rep.note("behavior", behavior);
    rep.note("growth", d.growth);
    rep.note("window_min", d.window_min);
    rep.note("window_max", d.window_max);
    let detail = format!(
        "{behavior}: S_{n_max}/S_{from} = {:.3}, window [{:.4}, {:.4}]",
        d.growth, d.window_min, d.window_max
    );
    match expect {
        Some(want) => {
            let name = match want {
                Behavior::Bounded => "bounded",
                Behavior::Divergent => "divergent",
            };
            rep.check(&format!("moments {name}"), name == behavior, detail);
        }
        None => rep.check("moments diagnosis", true, detail),
    }
    Ok(rep)
}

pub fn asymptote(direction: DirectionArg, alphas: &[f64]) -> Result<Report> {
    let direction = match direction {
        DirectionArg::ToZero => Direction::ToZero,
        DirectionArg::ToInfinity => Direction::ToInfinity,
    };
    let mut alphas: Vec<f64> = if alphas.is_empty() {
        TABLE_ALPHAS.to_vec()
    } else {
        alphas.to_vec()
    };
    if alphas.len() == TABLE_ALPHAS.len() && alphas == TABLE_ALPHAS {
        match direction {
            Direction::ToZero => {
                alphas.retain(|&a| a <= 1.0);
                alphas.reverse();
            }
            Direction::ToInfinity => alphas.retain(|&a| a >= 1.0),
        }
    }
    let alphas = alphas.into_iter().map(alpha).collect::<Result<Vec<_>>>()?;
    let report = asymptote_check(direction, &alphas)?;
    let mut rep = Report::new("asymptote", &["quantity", "limit", "alpha", "value", "gap"]);
    for s in &report.series {
        for ((&a, &v), &g) in s.alphas.iter().zip(&s.values).zip(&s.gaps) {
            rep.push(vec![s.quantity.as_str().into(), s.limit.into(), a.into(), v.into(), g.into()]);
        }
        rep.note(&format!("{}_monotone", s.quantity), s.monotone_approach);
        rep.note(&format!("{}_final_gap", s.quantity), *s.gaps.last().expect("non-empty"));
    }
    Ok(rep)
}
