//! The `report` subcommand: every check in one run, written to a directory.

use std::fmt::Write as _;
use std::path::Path;

use medianlab::bounds;
use medianlab::verify::{certificate_check, lb_sweep, LbSweep, MechanismKind, SweepOptions};
use medianlab::{NormOrder, TieBreak};
use serde::Serialize;

use crate::commands::{prediction_rows, run_sp, sweep_failures, ub_rows, write_sweep_csv};
use crate::output::{human, human_opt, write_csv, CliResult, Failure};

const CANONICAL_Q: [f64; 10] = [1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0, 1000.0, f64::INFINITY];
const CERT_Q: [f64; 5] = [1.5, 2.0, 3.0, 5.0, 10.0];
const LB_DIMS_2: [usize; 5] = [8, 16, 64, 256, 1024];
const LB_DIMS_INF: [usize; 3] = [50, 100, 1000];

fn order(q: f64) -> NormOrder {
    if q.is_infinite() {
        NormOrder::INFINITY
    } else {
        NormOrder::new(q).expect("canonical q values are valid")
    }
}

#[derive(Serialize)]
struct BoundRow {
    q: NormOrder,
    a_star: Option<f64>,
    delta_star: Option<f64>,
    lambda_star: f64,
    ub: f64,
    residual_u: f64,
    residual_uprime: f64,
    residual_a: f64,
}

#[derive(Serialize)]
struct CertRow {
    q: f64,
    lambda_star: f64,
    lambda: f64,
    min_u: f64,
    argmin_a: f64,
    pass: bool,
    min_u_at_1_01: f64,
    fails_at_1_01: bool,
}

#[derive(Serialize)]
struct SpRow {
    mechanism: String,
    q: NormOrder,
    trials: usize,
    violations: usize,
    worst_delta: f64,
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

struct Report {
    checks: Vec<Check>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }
}

pub fn run(dir: &Path, perturb_lambda: f64, sp_trials: usize, seed: u64) -> CliResult {
    if !(perturb_lambda > 0.0 && perturb_lambda.is_finite()) {
        return Err(Failure::Usage(format!(
            "--perturb-lambda must be positive, got {perturb_lambda}"
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let mut rep = Report { checks: Vec::new() };
    let mut md = String::new();
    writeln!(md, "# medianlab report\n\nseed: {seed}\n").unwrap();

    // upper bounds
    let sols = CANONICAL_Q
        .iter()
        .map(|&q| bounds::ub(order(q)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<BoundRow> = sols
        .iter()
        .map(|s| BoundRow {
            q: s.q,
            a_star: s.a_star,
            delta_star: s.delta_star,
            lambda_star: s.lambda_star,
            ub: s.ub,
            residual_u: s.residual_u,
            residual_uprime: s.residual_uprime,
            residual_a: s.residual_a,
        })
        .collect();
    write_csv(Some(&dir.join("bounds.csv")), &[], &rows)?;
    writeln!(md, "## Upper bounds\n\n| q | a* | lambda* | UB |\n|---|---|---|---|").unwrap();
    for s in &sols {
        writeln!(
            md,
            "| {} | {} | {} | {} |",
            s.q,
            human_opt(s.a_star),
            human(s.lambda_star),
            human(s.ub)
        )
        .unwrap();
    }
    let ub2 = bounds::ub(NormOrder::TWO)?.ub;
    let closed = (6.0 * 3f64.sqrt() - 8.0).sqrt();
    rep.check(
        "UB(2) closed form",
        (ub2 - closed).abs() <= 1e-9,
        format!("{ub2:.12} vs {closed:.12}"),
    );
    let ub_inf = bounds::ub(NormOrder::INFINITY)?.ub;
    rep.check("UB(inf) = 3", ub_inf == 3.0, format!("{ub_inf}"));
    let worst_res = sols
        .iter()
        .map(|s| s.residual_u.abs().max(s.residual_uprime.abs()).max(s.residual_a.abs()))
        .fold(0.0, f64::max);
    rep.check("tangency residuals", worst_res <= 1e-9, format!("max {worst_res:.3e}"));
    let mono = sols.windows(2).all(|w| w[1].ub >= w[0].ub);
    rep.check("UB nondecreasing on canonical q", mono, String::new());

    // curves
    let ub_curve = ub_rows(1.0, 20.0, 100)?;
    write_csv(Some(&dir.join("ub_curve.csv")), &[], &ub_curve)?;
    let curve_mono = ub_curve.windows(2).all(|w| w[1].ub >= w[0].ub);
    rep.check("UB curve nondecreasing on [1, 20]", curve_mono, "100 points".into());

    let pred = prediction_rows(200)?;
    write_csv(Some(&dir.join("prediction_curve.csv")), &[], &pred)?;
    let max_ra = pred.iter().map(|r| r.r_a).fold(0.0, f64::max);
    rep.check("max r_a < 1.11", max_ra < 1.11, human(max_ra));
    let c0 = &pred[0];
    rep.check(
        "consistency = robustness at c = 0",
        (c0.consistency - c0.robustness).abs() <= 1e-9,
        human(c0.consistency),
    );
    let rb_dec = pred.windows(2).all(|w| w[1].r_b < w[0].r_b);
    rep.check("r_b strictly decreasing", rb_dec, String::new());
    writeln!(
        md,
        "\n## Prediction bounds (q = 2)\n\nconsistency(0) = robustness(0) = {}; max r_a = {}; r_b from {} to {}\n",
        human(c0.consistency),
        human(max_ra),
        human(pred[0].r_b),
        human(pred[pred.len() - 1].r_b)
    )
    .unwrap();

    // lower bounds
    let sweep2 = lb_sweep(
        NormOrder::TWO,
        &LB_DIMS_2,
        &SweepOptions {
            build_max_d: 256,
            seed,
            ..SweepOptions::default()
        },
    )?;
    write_sweep_csv(Some(&dir.join("lb_sweep_q2.csv")), &sweep2.rows)?;
    let sweep_inf = lb_sweep(
        NormOrder::INFINITY,
        &LB_DIMS_INF,
        &SweepOptions {
            n: 2000,
            seed,
            ..SweepOptions::default()
        },
    )?;
    write_sweep_csv(Some(&dir.join("lb_sweep_qinf.csv")), &sweep_inf.rows)?;
    for (label, sweep) in [("q = 2", &sweep2), ("q = inf", &sweep_inf)] {
        sweep_markdown(&mut md, label, sweep);
        let f = sweep_failures(sweep);
        rep.check(&format!("lower-bound sweep {label}"), f.is_empty(), f.join("; "));
    }
    writeln!(
        md,
        "The built L-infinity instances give 3 - 2/d; with half of each coordinate's \
         entries at 0 this is the most the construction allows.\n"
    )
    .unwrap();

    // certificates
    let mut certs = Vec::new();
    for q in CERT_Q {
        let qo = order(q);
        let star = bounds::ub(qo)?.lambda_star;
        let lambda = star * perturb_lambda;
        let at = certificate_check(qo, lambda, 10_000)?;
        let above = certificate_check(qo, star * 1.01, 10_000)?;
        certs.push(CertRow {
            q,
            lambda_star: star,
            lambda,
            min_u: at.min_u,
            argmin_a: at.argmin_a,
            pass: at.pass && at.min_u.abs() <= 1e-8,
            min_u_at_1_01: above.min_u,
            fails_at_1_01: !above.pass,
        });
    }
    write_csv(Some(&dir.join("certificates.csv")), &[], &certs)?;
    writeln!(
        md,
        "## Certificates\n\n| q | lambda | min u | tight at 1.01 lambda* |\n|---|---|---|---|"
    )
    .unwrap();
    for c in &certs {
        writeln!(
            md,
            "| {} | {} | {:.3e} | {} |",
            c.q,
            human(c.lambda),
            c.min_u,
            if c.fails_at_1_01 { "yes" } else { "no" }
        )
        .unwrap();
        rep.check(
            &format!("certificate q = {}", c.q),
            c.pass && c.fails_at_1_01,
            format!("lambda {:.12}, min u {:.3e}", c.lambda, c.min_u),
        );
    }

    // strategy-proofness
    let tb = TieBreak::Lower;
    let mut runs: Vec<(MechanismKind, NormOrder)> = [NormOrder::ONE, NormOrder::TWO, NormOrder::INFINITY]
        .iter()
        .map(|&q| (MechanismKind::Median { tie_break: tb }, q))
        .collect();
    runs.extend(
        [0.25, 0.5, 0.75]
            .iter()
            .map(|&c| (MechanismKind::Cmp { c, tie_break: tb }, NormOrder::TWO)),
    );
    runs.push((MechanismKind::Mean, NormOrder::TWO));
    let sp = run_sp(&runs, sp_trials, seed)?;
    let sp_rows: Vec<SpRow> = sp
        .iter()
        .map(|r| SpRow {
            mechanism: r.mechanism.clone(),
            q: r.q,
            trials: r.trials,
            violations: r.violations,
            worst_delta: r.worst_delta,
        })
        .collect();
    write_csv(Some(&dir.join("strategyproofness.csv")), &[], &sp_rows)?;
    writeln!(
        md,
        "\n## Strategy-proofness\n\n| mechanism | q | trials | violations |\n|---|---|---|---|"
    )
    .unwrap();
    for r in &sp {
        writeln!(md, "| {} | {} | {} | {} |", r.mechanism, r.q, r.trials, r.violations).unwrap();
        let (name, pass) = match r.mechanism.as_str() {
            "mean" => (format!("harness detects {}", r.mechanism), r.violations > 0),
            _ => (format!("{} q = {}", r.mechanism, r.q), r.violations == 0),
        };
        rep.check(&name, pass, format!("{} violations", r.violations));
    }

    // checks
    let failed = rep.checks.iter().filter(|c| !c.pass).count();
    writeln!(
        md,
        "\n## Checks\n\n{} of {} passed\n",
        rep.checks.len() - failed,
        rep.checks.len()
    )
    .unwrap();
    for c in &rep.checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(md, "- {mark} {}", c.name).unwrap();
        } else {
            writeln!(md, "- {mark} {}: {}", c.name, c.detail).unwrap();
        }
    }
    let path = dir.join("summary.md");
    std::fs::write(&path, &md).map_err(|e| Failure::io(&path, e))?;
    println!("wrote {}", path.display());
    for c in rep.checks.iter().filter(|c| !c.pass) {
        println!("FAIL {}: {}", c.name, c.detail);
    }
    if failed > 0 {
        return Err(Failure::Check(format!(
            "{failed} of {} checks failed",
            rep.checks.len()
        )));
    }
    println!("all {} checks passed", rep.checks.len());
    Ok(())
}

fn sweep_markdown(md: &mut String, label: &str, sweep: &LbSweep) {
    writeln!(
        md,
        "## Lower bound, {label}\n\n| d | predicted | built | UB | gap |\n|---|---|---|---|---|"
    )
    .unwrap();
    for r in &sweep.rows {
        writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            r.d,
            human(r.predicted_lb),
            human_opt(r.empirical_lb),
            human(r.ub),
            human(r.gap)
        )
        .unwrap();
    }
    if let Some(c) = sweep.fitted_c {
        writeln!(md, "\nfitted C in gap ~ C/d: {}\n", human(c)).unwrap();
    }
}
