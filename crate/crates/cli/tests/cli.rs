use std::path::Path;
use std::process::{Command, Output};

fn medianlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medianlab"))
        .args(args)
        .env_remove("MEDIANLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bounds_values() {
    let o = medianlab(&["bounds", "--q", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1.546708"));
    let o = medianlab(&["bounds", "--q", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ub = v["ub"].as_f64().unwrap();
    assert!((ub - (6.0 * 3f64.sqrt() - 8.0).sqrt()).abs() < 1e-12);
    let o = medianlab(&["bounds", "--q", "1", "--json"]);
    assert_eq!(
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["ub"],
        1.0
    );
    let o = medianlab(&["bounds", "--q", "inf", "--json"]);
    assert_eq!(
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["ub"],
        3.0
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&medianlab(&["bounds", "--q", "0.5"])), 2);
    assert_eq!(code(&medianlab(&["bounds", "--q", "2", "--nope"])), 2);
    assert_eq!(code(&medianlab(&[])), 2);
    assert_eq!(code(&medianlab(&["verify", "cert", "--q", "inf"])), 2);
    assert_eq!(
        code(&medianlab(&["eval", "--instance", "x", "--q", "2", "--c", "0.5"])),
        2
    );
    assert_eq!(code(&medianlab(&["--help"])), 0);
}

#[test]
fn ub_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ub.csv");
    let o = medianlab(&[
        "curve",
        "ub",
        "--q-min",
        "1",
        "--q-max",
        "20",
        "--steps",
        "100",
        "-o",
        p(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,a_star,lambda_star,ub");
    let ubs: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ubs.len(), 100);
    assert!(ubs.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn prediction_curve_csv() {
    let o = medianlab(&["curve", "prediction", "--c-steps", "200"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "c,consistency,robustness,r_a,r_b");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][1], rows[0][2]);
    assert!(rows.iter().all(|r| r[3] < 1.11));
    // machine output keeps full precision
    let first = text.lines().nth(1).unwrap();
    assert!(first.split(',').nth(1).unwrap().len() >= 14);
}

#[test]
fn curve_to_unwritable_path_exits_3() {
    let o = medianlab(&["curve", "prediction", "-o", "/nonexistent-dir/x.csv"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn gen_then_eval_lb() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.inst.json");
    let o = medianlab(&["gen", "lb", "--q", "2", "--d", "100", "--n", "10000", "-o", p(&f)]);
    assert_eq!(code(&o), 0);
    let o = medianlab(&["eval", "--instance", p(&f), "--q", "2", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ratio = v["empirical_ratio"].as_f64().unwrap();
    let predicted = medianlab::bounds::lb_ratio(medianlab::NormOrder::TWO, 100).unwrap();
    assert!((ratio - predicted).abs() <= 0.02 * predicted);
    assert!(ratio <= v["theoretical_ub"].as_f64().unwrap() + 1e-6);
}

#[test]
fn gen_infeasible_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.inst.json");
    assert_eq!(code(&medianlab(&["gen", "lb", "--q", "2", "--d", "3", "-o", p(&f)])), 2);
    assert_eq!(code(&medianlab(&["gen", "linf", "--d", "1", "-o", p(&f)])), 2);
}

#[test]
fn linf_instance_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("l.inst.json");
    assert_eq!(
        code(&medianlab(&["gen", "linf", "--d", "10", "--n", "100", "-o", p(&f)])),
        0
    );
    let o = medianlab(&["eval", "--instance", p(&f), "--q", "inf", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // the balanced construction reaches 3 - 2/d
    assert!((v["empirical_ratio"].as_f64().unwrap() - 2.8).abs() < 1e-9);
}

#[test]
fn random_gen_reproducible_and_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.inst.json");
    let b = dir.path().join("b.inst.json");
    let c = dir.path().join("c.inst.json");
    medianlab(&["gen", "random", "--d", "2", "--n", "5", "--seed", "1", "-o", p(&a)]);
    medianlab(&["gen", "random", "--d", "2", "--n", "5", "--seed", "1", "-o", p(&b)]);
    let o = Command::new(env!("CARGO_BIN_EXE_medianlab"))
        .args(["gen", "random", "--d", "2", "--n", "5", "-o", p(&c)])
        .env("MEDIANLAB_SEED", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert_eq!(ta, std::fs::read(&c).unwrap());
}

#[test]
fn eval_two_points_ratio_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("two.inst.json");
    std::fs::write(
        &f,
        r#"{"version":"1","d":2,"n":2,"points":[[0,0],[2,4]],"meta":{"generator":"manual"}}"#,
    )
    .unwrap();
    let o = medianlab(&["eval", "--instance", p(&f), "--q", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["empirical_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn eval_with_accurate_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.inst.json");
    medianlab(&["gen", "random", "--d", "3", "--n", "9", "--seed", "4", "-o", p(&f)]);
    let o = medianlab(&["eval", "--instance", p(&f), "--q", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let opt: Vec<String> = v["optimal_point"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.to_string())
        .collect();
    let pred = opt.join(",");
    let o = medianlab(&[
        "eval",
        "--instance",
        p(&f),
        "--q",
        "2",
        "--prediction",
        &pred,
        "--c",
        "0.5",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["empirical_ratio"].as_f64().unwrap() <= (4.0f64 / 3.0).sqrt() + 1e-6);
    assert!((v["consistency_bound"].as_f64().unwrap() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);

    let o = medianlab(&[
        "eval",
        "--instance",
        p(&f),
        "--q",
        "3",
        "--prediction",
        &pred,
        "--c",
        "0.5",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("consistency_bound").is_none());
}

#[test]
fn eval_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.inst.json");
    assert_eq!(code(&medianlab(&["eval", "--instance", p(&f), "--q", "2"])), 3);
    std::fs::write(&f, r#"{"version":"1","d":2,"n":1,"points":[[0]]}"#).unwrap();
    assert_eq!(code(&medianlab(&["eval", "--instance", p(&f), "--q", "2"])), 2);
    std::fs::write(&f, r#"{"version":"1","d":1,"n":1,"points":[[0]]}"#).unwrap();
    assert_eq!(
        code(&medianlab(&[
            "eval",
            "--instance",
            p(&f),
            "--q",
            "2",
            "--prediction",
            "1,2",
            "--c",
            "0.5"
        ])),
        2
    );
}

#[test]
fn verify_cert_pass_and_fail() {
    assert_eq!(code(&medianlab(&["verify", "cert", "--q", "2"])), 0);
    let lam = medianlab::bounds::ub(medianlab::NormOrder::TWO).unwrap().lambda_star * 1.01;
    assert_eq!(
        code(&medianlab(&[
            "verify",
            "cert",
            "--q",
            "2",
            "--lambda",
            &lam.to_string()
        ])),
        1
    );
}

#[test]
fn verify_sp() {
    let o = medianlab(&["verify", "sp", "--trials", "10000"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&medianlab(&["verify", "sp", "--trials", "500", "--mechanism", "mean"])),
        1
    );
}

#[test]
fn verify_lb_sweeps() {
    let o = medianlab(&[
        "verify",
        "lb",
        "--q",
        "2",
        "--dims",
        "8,16,64,256,1024",
        "--build-max-d",
        "64",
        "--n",
        "4000",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("fitted gap constant"));
    // formula gaps are 1/d; the built instances fall 1/d short of the formula
    let o = medianlab(&["verify", "lb", "--q", "inf", "--dims", "2,10,100", "--build-max-d", "0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for g in ["0.500000", "0.100000", "0.010000"] {
        assert!(text.contains(g));
    }
    let o = medianlab(&["verify", "lb", "--q", "inf", "--dims", "2,10,100", "--n", "200"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_search_writes_instance() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.inst.json");
    let o = medianlab(&[
        "verify",
        "search",
        "--q",
        "2",
        "--d",
        "20",
        "--n",
        "40",
        "--restarts",
        "4",
        "-o",
        p(&f),
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let best = v["best_ratio"].as_f64().unwrap();
    let inst = medianlab::instances::load_instance(&f).unwrap();
    assert_eq!(inst.len(), 40);
    let r = medianlab::optfac::ratio_against(
        &inst,
        medianlab::NormOrder::TWO,
        &vec![1.0; 20],
        medianlab::TieBreak::Lower,
    )
    .unwrap();
    assert!(r <= best + 1e-9);
    assert_eq!(
        code(&medianlab(&[
            "verify",
            "search",
            "--q",
            "2",
            "--d",
            "4",
            "--n",
            "8",
            "--restarts",
            "2",
            "--min-ratio",
            "1.6"
        ])),
        1
    );
}

#[test]
fn report_deterministic_and_tamper_detected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(
        code(&medianlab(&[
            "report",
            "-o",
            p(&a),
            "--seed",
            "7",
            "--sp-trials",
            "2000"
        ])),
        0
    );
    assert_eq!(
        code(&medianlab(&[
            "report",
            "-o",
            p(&b),
            "--seed",
            "7",
            "--sp-trials",
            "2000"
        ])),
        0
    );
    for name in [
        "summary.md",
        "bounds.csv",
        "ub_curve.csv",
        "prediction_curve.csv",
        "lb_sweep_q2.csv",
        "lb_sweep_qinf.csv",
        "certificates.csv",
        "strategyproofness.csv",
    ] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let summary = std::fs::read_to_string(a.join("summary.md")).unwrap();
    assert!(summary.contains("| 2 | 0.133975 | 0.646535 | 1.546708 |"));
    assert!(summary.contains("| inf | - | 0.333333 | 3.000000 |"));
    assert!(summary.contains("max r_a = 1.105"));
    let o = medianlab(&["report", "-o", p(&c), "--perturb-lambda", "1.01", "--sp-trials", "500"]);
    assert_eq!(code(&o), 1);
}
