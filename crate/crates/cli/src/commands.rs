use std::path::Path;

use medianlab::bounds::{self, c_grid, comparison_curves, consistency_bound, robustness_bound, ub_curve};
use medianlab::instances::{
    gen_lb_instance, gen_lb_weighted, gen_linf_instance, gen_random_instance, load_instance, save_instance,
    GeneratorSpec,
};
use medianlab::optfac::{evaluate_mechanism, EvalReport, SolverConfig};
use medianlab::verify::{
    adversarial_search, certificate_check, lb_sweep, strategyproofness_suite, LbSweep, MechanismKind, SpConfig,
    SpReport, SweepOptions, SweepRow,
};
use medianlab::{CoordinateMedian, Instance, Mechanism, NormOrder, Point, PredictionMedian, TieBreak};
use serde::Serialize;

use crate::output::{human, human_opt, print_json, print_pairs, write_csv, CliResult, Failure};
use crate::{Command, CurveCmd, EvalArgs, GenCmd, GenCommon, SpMechanism, VerifyCmd};

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Bounds(a) => bounds_cmd(a.q, a.json),
        Command::Curve(c) => curve_cmd(c),
        Command::Gen(g) => gen_cmd(g),
        Command::Eval(e) => eval_cmd(e),
        Command::Verify(v) => verify_cmd(v),
        Command::Report(r) => crate::report::run(&r.output, r.perturb_lambda, r.sp_trials, r.seed.seed),
    }
}

fn bounds_cmd(q: NormOrder, json: bool) -> CliResult {
    let sol = bounds::ub(q)?;
    if json {
        return print_json(&sol);
    }
    print_pairs(&[
        ("q", q.to_string()),
        ("a*", human_opt(sol.a_star)),
        ("delta*", human_opt(sol.delta_star)),
        ("lambda*", human(sol.lambda_star)),
        ("UB", human(sol.ub)),
        ("residual u(a*)", format!("{:.3e}", sol.residual_u)),
        ("residual u'(a*)", format!("{:.3e}", sol.residual_uprime)),
        ("residual a*", format!("{:.3e}", sol.residual_a)),
    ]);
    Ok(())
}

#[derive(Serialize)]
pub struct UbRow {
    pub q: f64,
    pub a_star: Option<f64>,
    pub lambda_star: f64,
    pub ub: f64,
}

#[derive(Serialize)]
pub struct PredictionRow {
    pub c: f64,
    pub consistency: f64,
    pub robustness: f64,
    pub r_a: f64,
    pub r_b: f64,
}

pub fn ub_rows(q_min: f64, q_max: f64, steps: usize) -> CliResult<Vec<UbRow>> {
    Ok(ub_curve(q_min, q_max, steps)?
        .into_iter()
        .map(|s| UbRow {
            q: s.q.value(),
            a_star: s.a_star,
            lambda_star: s.lambda_star,
            ub: s.ub,
        })
        .collect())
}

pub fn prediction_rows(steps: usize) -> CliResult<Vec<PredictionRow>> {
    if steps == 0 {
        return Err(Failure::Usage("--c-steps must be >= 1".into()));
    }
    Ok(comparison_curves(&c_grid(steps))?
        .into_iter()
        .map(|r| PredictionRow {
            c: r.c,
            consistency: r.consistency,
            robustness: r.robustness,
            r_a: r.r_a,
            r_b: r.r_b,
        })
        .collect())
}

fn curve_cmd(cmd: CurveCmd) -> CliResult {
    match cmd {
        CurveCmd::Ub {
            q_min,
            q_max,
            steps,
            output,
        } => write_csv(
            output.as_deref(),
            &["q", "a_star", "lambda_star", "ub"],
            &ub_rows(q_min, q_max, steps)?,
        ),
        CurveCmd::Prediction { c_steps, output } => write_csv(
            output.as_deref(),
            &["c", "consistency", "robustness", "r_a", "r_b"],
            &prediction_rows(c_steps)?,
        ),
    }
}

fn save(inst: &Instance, common: &GenCommon) -> CliResult {
    save_instance(inst, &common.output, common.encoding.into())?;
    println!(
        "wrote {} ({} points, d = {})",
        common.output.display(),
        inst.len(),
        inst.dim()
    );
    Ok(())
}

fn gen_cmd(cmd: GenCmd) -> CliResult {
    match cmd {
        GenCmd::Lb {
            q,
            d,
            n,
            weighted,
            common,
        } => {
            let inst = if weighted {
                gen_lb_weighted(q, d)?
            } else {
                gen_lb_instance(q, d, n, common.seed.seed)?
            };
            save(&inst, &common)?;
            println!("predicted ratio {}", human(bounds::lb_ratio(q, d)?));
        }
        GenCmd::Linf { d, n, common } => {
            let inst = gen_linf_instance(d, n, common.seed.seed)?;
            save(&inst, &common)?;
            if inst.len() != n {
                println!("n rounded up to {} (a multiple of 2(d-1))", inst.len());
            }
        }
        GenCmd::Random {
            d,
            n,
            distribution,
            common,
        } => {
            let spec = GeneratorSpec::random(d, n, common.seed.seed, distribution.into());
            save(&gen_random_instance(&spec)?, &common)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    report: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistency_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    robustness_bound: Option<f64>,
}

fn solver_config(restarts: usize, max_iters: usize, seed: u64) -> CliResult<SolverConfig> {
    let cfg = SolverConfig {
        restarts,
        max_iters,
        ..SolverConfig::default()
    }
    .with_seed(seed);
    cfg.validate()?;
    Ok(cfg)
}

fn eval_cmd(a: EvalArgs) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let cfg = solver_config(a.solver.restarts, a.solver.max_iters, a.seed.seed)?;
    let tb: TieBreak = a.tie_break.into();
    let mut out = EvalOutput {
        report: evaluate_mechanism(&inst, a.q, &cfg, &CoordinateMedian { tie_break: tb })?,
        consistency_bound: None,
        robustness_bound: None,
    };
    if let (Some(pred), Some(c)) = (a.prediction, a.c) {
        if pred.len() != inst.dim() {
            return Err(Failure::Usage(format!(
                "prediction has {} coordinates, instance has d = {}",
                pred.len(),
                inst.dim()
            )));
        }
        let mech = PredictionMedian::new(Point::new(pred)?, c, tb)?;
        out.report = evaluate_mechanism(&inst, a.q, &cfg, &mech as &dyn Mechanism)?;
        if a.q == NormOrder::TWO {
            out.consistency_bound = Some(consistency_bound(c)?);
            out.robustness_bound = Some(robustness_bound(c)?);
        } else {
            eprintln!("warning: consistency and robustness bounds are only known for q = 2; none printed");
        }
    }
    if a.json {
        return print_json(&out);
    }
    let r = &out.report;
    let mut pairs = vec![
        ("mechanism", r.mechanism.clone()),
        ("q", r.q.to_string()),
        ("n", inst.len().to_string()),
        ("d", inst.dim().to_string()),
        ("SC(mechanism)", human(r.sc_mechanism)),
        ("SC(optimal)", human(r.sc_optimal)),
        ("ratio", human(r.empirical_ratio)),
        ("UB(q)", human(r.theoretical_ub)),
        ("solver converged", r.solver_converged.to_string()),
    ];
    if let Some(v) = out.consistency_bound {
        pairs.push(("consistency bound", human(v)));
    }
    if let Some(v) = out.robustness_bound {
        pairs.push(("robustness bound", human(v)));
    }
    print_pairs(&pairs);
    Ok(())
}

fn verify_cmd(cmd: VerifyCmd) -> CliResult {
    match cmd {
        VerifyCmd::Cert { q, lambda, grid, json } => {
            let lambda = match lambda {
                Some(l) => l,
                None => bounds::ub(q)?.lambda_star,
            };
            let rep = certificate_check(q, lambda, grid)?;
            if json {
                print_json(&rep)?;
            } else {
                print_pairs(&[
                    ("q", q.to_string()),
                    ("lambda", human(rep.lambda)),
                    ("delta", human(rep.delta)),
                    ("z", human(rep.z)),
                    ("min u", format!("{:.3e}", rep.min_u)),
                    ("argmin a", human(rep.argmin_a)),
                    ("result", if rep.pass { "pass" } else { "FAIL" }.into()),
                ]);
            }
            if rep.pass {
                Ok(())
            } else {
                Err(Failure::Check(format!(
                    "min u = {:.3e} < 0 at lambda = {lambda}",
                    rep.min_u
                )))
            }
        }
        VerifyCmd::Sp {
            trials,
            mechanism,
            c,
            q,
            tie_break,
            json,
            seed,
        } => {
            let tb: TieBreak = tie_break.into();
            let runs = sp_runs(mechanism, c, q, tb)?;
            let reports = run_sp(&runs, trials, seed.seed)?;
            if json {
                print_json(&reports)?;
            } else {
                print_sp_table(&reports);
            }
            let bad: usize = reports.iter().map(|r| r.violations).sum();
            if bad == 0 {
                Ok(())
            } else {
                Err(Failure::Check(format!("{bad} profitable deviations")))
            }
        }
        VerifyCmd::Lb {
            q,
            dims,
            build_max_d,
            n,
            output,
            seed,
        } => {
            let opts = SweepOptions {
                build_max_d,
                n,
                seed: seed.seed,
                ..SweepOptions::default()
            };
            let sweep = lb_sweep(q, &dims, &opts)?;
            if let Some(path) = &output {
                write_sweep_csv(Some(path), &sweep.rows)?;
            }
            print_sweep(&sweep);
            let failures = sweep_failures(&sweep);
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Check(failures.join("; ")))
            }
        }
        VerifyCmd::Search {
            q,
            d,
            n,
            restarts,
            min_ratio,
            output,
            json,
            seed,
        } => {
            let solver = SolverConfig::default().with_seed(seed.seed);
            let res = adversarial_search(q, d, n, restarts, seed.seed, &solver)?;
            if let Some(path) = &output {
                save_instance(&res.best_instance, path, medianlab::instances::Encoding::Decimal)?;
            }
            let ub = bounds::ub(q)?.ub;
            if json {
                print_json(&res)?;
            } else {
                print_pairs(&[
                    ("q", q.to_string()),
                    ("d", d.to_string()),
                    ("n", n.to_string()),
                    ("restarts", restarts.to_string()),
                    ("best ratio", human(res.best_ratio)),
                    ("proxy ratio", human(res.proxy_ratio)),
                    ("UB(q)", human(ub)),
                ]);
            }
            if res.best_ratio > ub + 1e-6 {
                return Err(Failure::Check(format!("ratio {} exceeds UB {ub}", res.best_ratio)));
            }
            match min_ratio {
                Some(m) if res.best_ratio < m => Err(Failure::Check(format!(
                    "best ratio {} below the requested {m}",
                    res.best_ratio
                ))),
                _ => Ok(()),
            }
        }
    }
}

fn sp_runs(
    mechanism: Option<SpMechanism>,
    c: Option<f64>,
    q: Option<NormOrder>,
    tb: TieBreak,
) -> CliResult<Vec<(MechanismKind, NormOrder)>> {
    let cs = match c {
        Some(c) => vec![c],
        None => vec![0.25, 0.5, 0.75],
    };
    let median_qs = match q {
        Some(q) => vec![q],
        None => vec![NormOrder::ONE, NormOrder::TWO, NormOrder::INFINITY],
    };
    let q2 = q.unwrap_or(NormOrder::TWO);
    let cmp = |cs: &[f64]| -> Vec<(MechanismKind, NormOrder)> {
        cs.iter()
            .map(|&c| (MechanismKind::Cmp { c, tie_break: tb }, q2))
            .collect()
    };
    Ok(match mechanism {
        None => {
            let mut runs: Vec<_> = median_qs
                .iter()
                .map(|&q| (MechanismKind::Median { tie_break: tb }, q))
                .collect();
            runs.extend(cmp(&cs));
            runs
        }
        Some(SpMechanism::Median) => median_qs
            .iter()
            .map(|&q| (MechanismKind::Median { tie_break: tb }, q))
            .collect(),
        Some(SpMechanism::Cmp) => cmp(&cs),
        Some(SpMechanism::Mean) => vec![(MechanismKind::Mean, q2)],
    })
}

pub fn run_sp(runs: &[(MechanismKind, NormOrder)], trials: usize, seed: u64) -> CliResult<Vec<SpReport>> {
    runs.iter()
        .map(|(kind, q)| {
            let cfg = SpConfig {
                trials,
                seed,
                q: *q,
                ..SpConfig::default()
            };
            Ok(strategyproofness_suite(kind, &cfg)?)
        })
        .collect()
}

fn print_sp_table(reports: &[SpReport]) {
    println!(
        "{:<24} {:>6} {:>8} {:>10} {:>14}",
        "mechanism", "q", "trials", "violations", "worst delta"
    );
    for r in reports {
        println!(
            "{:<24} {:>6} {:>8} {:>10} {:>14}",
            r.mechanism,
            r.q.to_string(),
            r.trials,
            r.violations,
            format!("{:.3e}", r.worst_delta)
        );
    }
}

pub fn write_sweep_csv(path: Option<&Path>, rows: &[SweepRow]) -> CliResult {
    write_csv(path, &["d", "predicted_lb", "empirical_lb", "ub", "gap"], rows)
}

fn print_sweep(sweep: &LbSweep) {
    println!("q = {}", sweep.q);
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}",
        "d", "predicted", "empirical", "UB", "gap"
    );
    for r in &sweep.rows {
        println!(
            "{:>8} {:>12} {:>12} {:>12} {:>12}",
            r.d,
            human(r.predicted_lb),
            human_opt(r.empirical_lb),
            human(r.ub),
            human(r.gap)
        );
    }
    for (d, why) in &sweep.skipped {
        println!("skipped d = {d}: {why}");
    }
    if let Some(c) = sweep.fitted_c {
        println!("fitted gap constant C = {} (gap ~ C/d)", human(c));
    }
}

/// Failed conditions of a lower-bound sweep, empty when all hold.
pub fn sweep_failures(sweep: &LbSweep) -> Vec<String> {
    let mut out = Vec::new();
    if sweep.rows.is_empty() {
        out.push("no feasible dimension".into());
    }
    if !sweep.predicted_nondecreasing() {
        out.push("predicted ratio decreases in d".into());
    }
    if sweep.rows.iter().any(|r| r.predicted_lb > r.ub + 1e-9) {
        out.push("predicted ratio above UB".into());
    }
    if sweep.rows.len() >= 2 && !sweep.gap_decreasing() {
        out.push("gap does not shrink".into());
    }
    for r in sweep.mismatches(0.02) {
        out.push(format!(
            "d = {}: built instance gives {:.6}, predicted {:.6}",
            r.d,
            r.empirical_lb.unwrap_or(f64::NAN),
            r.predicted_lb
        ));
    }
    out
}
