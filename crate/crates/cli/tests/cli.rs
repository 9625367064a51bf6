use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use valagg_cli::summary::SummaryRecord;

fn valagg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_valagg"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VAL_AGG_OUT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(dir: &Path) -> SummaryRecord {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(i).unwrap().to_string())
        .collect()
}

fn polyline_points(svg: &str, class: &str) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter(|l| l.starts_with(&format!("<polyline class=\"{class}\"")))
        .map(|l| {
            let pts = l
                .split("points=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap();
            pts.split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn run_writes_the_exact_recursion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = valagg(
        &[
            "run", "--theta", "10", "--iters", "4", "--x1", "1", "--out", "r",
        ],
        tmp.path(),
    );
    ok(&out);
    let csv = fs::read_to_string(tmp.path().join("r/trace.csv")).unwrap();
    assert_eq!(column(&csv, "x"), ["1.0", "10.0", "55.0", "220.0"]);
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,x,f_n_xn,F_xn_xn,S_n,step_norm"
    );
}

#[test]
fn single_iteration_gives_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(&["run", "--iters", "1", "--out", "r"], tmp.path()));
    let csv = fs::read_to_string(tmp.path().join("r/trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let s = summary(&tmp.path().join("r"));
    assert_eq!(s.iterations_completed, 1);
    assert!(s.fitted_exponent.is_none());
}

#[test]
fn convergence_exponent_at_half() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &["run", "--theta", "0.5", "--iters", "10000", "--out", "r"],
        tmp.path(),
    ));
    let s = summary(&tmp.path().join("r"));
    let e = s.fitted_exponent.unwrap();
    assert!((-1.05..=-0.95).contains(&e), "exponent {e}");
    assert!(s.convergent);
    for (tag, b) in &s.bounds {
        assert!(!b.applicable || b.passed, "{tag} failed");
    }
}

#[test]
fn theta_sweep_tracks_theory() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &[
            "sweep",
            "--theta",
            "0.3,0.6,0.9",
            "--iters",
            "5000",
            "--out",
            "s",
            "--jobs",
            "3",
        ],
        tmp.path(),
    ));
    let csv = fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    assert_eq!(column(&csv, "theta"), ["0.3", "0.6", "0.9"]);
    let jsonl = fs::read_to_string(tmp.path().join("s/sweep.jsonl")).unwrap();
    let recs: Vec<SummaryRecord> = jsonl
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 3);
    for r in &recs {
        let fitted = r.fitted_exponent.unwrap();
        let theory = r.theoretical_exponent.unwrap();
        assert!((fitted - theory).abs() < 0.05, "{fitted} vs {theory}");
        assert!(r.convergent);
    }
    for i in 0..3 {
        assert!(tmp
            .path()
            .join(format!("s/points/{i:04}/trace.csv"))
            .exists());
    }
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--theta", "0.7", "--iters", "300"];
    ok(&valagg(
        &[&["run", "--out", "r"][..], &args].concat(),
        tmp.path(),
    ));
    ok(&valagg(
        &[&["sweep", "--out", "s"][..], &args].concat(),
        tmp.path(),
    ));
    let a = fs::read(tmp.path().join("r/trace.csv")).unwrap();
    let b = fs::read(tmp.path().join("s/points/0000/trace.csv")).unwrap();
    assert_eq!(a, b);
    let mut sa = summary(&tmp.path().join("r"));
    let mut sb = summary(&tmp.path().join("s/points/0000"));
    sa.wall_time_ms = 0;
    sb.wall_time_ms = 0;
    assert_eq!(sa, sb);
}

#[test]
fn regularization_weight_sweep_stabilizes_above_half() {
    // θ = 1.5 with R = ‖x‖²·α gives θ_eff = 1.5/(1+λ), stable iff λ > 0.5.
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &[
            "sweep",
            "--theta",
            "1.5",
            "--transformer",
            "weighted",
            "--lambda",
            "0,0.25,1,2",
            "--iters",
            "3000",
            "--out",
            "s",
        ],
        tmp.path(),
    ));
    let csv = fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    let lambdas: Vec<f64> = column(&csv, "lambda")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    let conv = column(&csv, "convergent");
    for (l, c) in lambdas.iter().zip(&conv) {
        assert_eq!(c == "true", *l > 0.5, "lambda {l}");
    }
    let cor3 = column(&csv, "corollary3_passed");
    assert!(cor3.iter().all(|v| v != "false"), "{cor3:?}");
}

#[test]
fn verify_passes_and_filters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = valagg(&["verify"], tmp.path());
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);

    let out = valagg(&["verify", "--only", "thm2"], tmp.path());
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("criterion  5"));
    assert!(!text.contains("criterion  3"));
}

#[test]
fn corrupted_constants_fail_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = valagg(&["verify", "--corrupt-theta", "0.5"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("lemma3"), "{}", stderr(&out));
}

#[test]
fn plot_draws_envelope_above_trace() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &["run", "--theta", "0.6", "--iters", "2000", "--out", "r"],
        tmp.path(),
    ));
    for kind in ["self_value", "s_curve", "step_norm"] {
        let svg_path = format!("{kind}.svg");
        ok(&valagg(
            &["plot", "r/trace.csv", "--kind", kind, "--out", &svg_path],
            tmp.path(),
        ));
        let svg = fs::read_to_string(tmp.path().join(&svg_path)).unwrap();
        let emp = &polyline_points(&svg, "empirical")[0];
        let env = &polyline_points(&svg, "envelope")[0];
        // Same x positions from the tail; SVG y grows downward.
        let shared = emp.len().min(env.len());
        let (emp, env) = (&emp[emp.len() - shared..], &env[env.len() - shared..]);
        for (e, v) in emp.iter().zip(env) {
            assert!((e.0 - v.0).abs() < 1e-9);
            assert!(
                e.1 >= v.1 - 0.02,
                "{kind}: empirical above envelope at x={}",
                e.0
            );
        }
    }
}

#[test]
fn plot_rejects_empty_trace() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("empty.csv"),
        "n,x,f_n_xn,F_xn_xn,S_n,step_norm\n",
    )
    .unwrap();
    let out = valagg(&["plot", "empty.csv", "--out", "p.svg"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("p.svg").exists());
}

#[test]
fn plot_overlays_traces_with_legend() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &[
            "sweep", "--theta", "0.4,0.8", "--iters", "500", "--out", "s",
        ],
        tmp.path(),
    ));
    ok(&valagg(
        &[
            "plot",
            "s/points/0000/trace.csv",
            "s/points/0001/trace.csv",
            "--out",
            "p.svg",
        ],
        tmp.path(),
    ));
    let svg = fs::read_to_string(tmp.path().join("p.svg")).unwrap();
    assert_eq!(polyline_points(&svg, "empirical").len(), 2);
    assert_eq!(polyline_points(&svg, "envelope").len(), 2);
    assert!(svg.contains(">theta=0.4</text>") && svg.contains(">theta=0.8</text>"));
}

#[test]
fn config_file_errors_point_at_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.cfg");
    fs::write(&cfg, "# demo\ntheta = 0.5\niters = many\n").unwrap();
    let out = valagg(&["run", "--config", "exp.cfg", "--out", "r"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("exp.cfg:3") && err.contains("iters"), "{err}");
    assert!(!tmp.path().join("r").exists());

    fs::write(&cfg, "theta = 0.5\nwidth = 3\n").unwrap();
    let err = stderr(&valagg(&["run", "--config", "exp.cfg"], tmp.path()));
    assert!(err.contains("exp.cfg:2") && err.contains("width"), "{err}");

    let out = valagg(&["run", "--theta", "0.3,0.4"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep"));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("exp.cfg"),
        "instance = affine\nM = 0.5,0.1;0,0.5\nb = 0.1,0.2\nalpha = 1.5\nx1 = 1,1\niters = 50\n",
    )
    .unwrap();
    ok(&valagg(
        &["run", "--config", "exp.cfg", "--iters", "80", "--out", "r"],
        tmp.path(),
    ));
    let s = summary(&tmp.path().join("r"));
    assert_eq!(s.iterations_completed, 80);
    assert_eq!(s.config["M"], "0.5,0.1;0.0,0.5");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        valagg(&["run", "--theta", "-1"], tmp.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        valagg(
            &["run", "--instance", "imitation", "--theta", "0.3"],
            tmp.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        valagg(
            &["sweep", "--theta", "0.1,0.2,0.3", "--max-points", "2"],
            tmp.path()
        )
        .status
        .code(),
        Some(2)
    );
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = valagg(&["run", "--out", "blocker/sub"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(
        valagg(&["plot", "missing.csv", "--out", "p.svg"], tmp.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_valagg"))
        .args(["run", "--iters", "3"])
        .current_dir(tmp.path())
        .env("VAL_AGG_OUT", "from-env")
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("from-env/trace.csv").exists());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "run",
            "--instance",
            "imitation",
            "--noise",
            "uniform",
            "--sigma",
            "0.3",
            "--m0",
            "2",
            "--r",
            "0.5",
            "--seed",
            "17",
            "--iters",
            "200",
            "--out",
            out,
        ]
    };
    ok(&valagg(&args("a"), tmp.path()));
    ok(&valagg(&args("b"), tmp.path()));
    let a = fs::read(tmp.path().join("a/trace.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
    let mut sa = summary(&tmp.path().join("a"));
    let mut sb = summary(&tmp.path().join("b"));
    sa.wall_time_ms = 0;
    sb.wall_time_ms = 0;
    assert_eq!(sa, sb);
    assert_eq!(sa.config["seed"], "17");
    assert!(!sa.bounds["thm1"].applicable);
}

#[test]
fn summary_round_trips_with_missing_values() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &[
            "run",
            "--theta",
            "5",
            "--iters",
            "400",
            "--set",
            "abort_magnitude=1e6",
            "--out",
            "r",
        ],
        tmp.path(),
    ));
    let text = fs::read_to_string(tmp.path().join("r/summary.json")).unwrap();
    let s: SummaryRecord = serde_json::from_str(&text).unwrap();
    assert!(
        s.aborted.is_some(),
        "iterates should pass the abort threshold"
    );
    assert!(!s.convergent);
    let again = serde_json::to_string_pretty(&s).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn affine_matrix_from_flags() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&valagg(
        &[
            "run",
            "--instance",
            "affine",
            "--M",
            "0.4,0;0,0.2",
            "--b",
            "1,-1",
            "--alpha",
            "3",
            "--x1",
            "0,0",
            "--iters",
            "200",
            "--out",
            "r",
        ],
        tmp.path(),
    ));
    let s = summary(&tmp.path().join("r"));
    assert!((s.base_constants.theta.unwrap() - 0.4).abs() < 1e-9);
    assert_eq!(s.config["alpha"], "3.0");
}

#[test]
fn malformed_trace_names_the_row() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.csv"),
        "n,x,f_n_xn,F_xn_xn,S_n,step_norm\n1,1.0,0.5,0.5,,0.1\n2,oops,0.1,0.1,0.2,0.1\n",
    )
    .unwrap();
    let out = valagg(&["plot", "bad.csv", "--out", "p.svg"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));
    assert!(!tmp.path().join("p.svg").exists());
}
