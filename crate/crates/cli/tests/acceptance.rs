//! CLI-side acceptance: the lambda-limit reproduction (criterion 7) and
//! byte-level determinism of the JSON reports (criterion 9).

use std::process::{Command, Output};
use std::time::Instant;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asympair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Criterion 7: for each lambda in {-1, 0, 2}, `construct` on
/// `delta x_n = a_n |x_{n-1}|` with summable positive a produces a solution
/// whose value at n = 200 sits within 1e-6 of its limit, and verifying the
/// trajectory against y = lambda with Z = o(1) confirms equivalence.
#[test]
fn criterion_7_lambda_limits_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    for lambda in [-1.0f64, 0.0, 2.0] {
        let csv = dir.path().join(format!("traj_{lambda}.csv"));
        let m_bound = lambda.abs() + 1.0;
        let out = run(&[
            "construct",
            "--m",
            "1",
            "--seq",
            "2*geo(0.5)",
            "--b",
            "0",
            "--f",
            "abs(x)",
            "--sigma",
            "n-1",
            "--y",
            &format!("{lambda}"),
            "--p",
            "4",
            "--M",
            &format!("{m_bound}"),
            "--N",
            "1024",
            "--tol",
            "1e-10",
            "--space",
            "o(1)",
            "--csv",
            csv.to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert!(
            out.status.success(),
            "lambda={lambda}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let metrics = &report["items"][0]["metrics"];
        assert_eq!(metrics["solution_kind"], "p-solution", "lambda={lambda}");
        assert_eq!(metrics["bound_check"], true);

        // Tail value at n = 200 against the limit (the settled tail value).
        let body = std::fs::read_to_string(&csv).unwrap();
        let col_x = |line: &str| -> f64 { line.split(',').nth(1).unwrap().parse().unwrap() };
        let lines: Vec<&str> = body.lines().collect();
        let x200 = col_x(lines[200]);
        let x_end = col_x(lines[1024]);
        assert!(
            (x200 - x_end).abs() < 1e-6,
            "lambda={lambda}: x_200 = {x200} vs limit {x_end}"
        );

        // Equivalence against y = lambda via the trajectory file.
        let verify = run(&[
            "verify",
            "--seq-file",
            csv.to_str().unwrap(),
            "--space",
            "o(1)",
            "--format",
            "json",
        ]);
        assert!(verify.status.success(), "lambda={lambda}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&verify)).unwrap();
        assert_eq!(v["items"][0]["metrics"]["outcome"], "InSpace", "lambda={lambda}");
    }
    println!("ACCEPTANCE C7 lambda limits via CLI: PASS (lambda in {{-1, 0, 2}}, x_200 settled to 1e-6)");
}

/// Criterion 9: rerunning each workflow yields byte-identical JSON reports
/// once the wall-time field is excluded.
#[test]
fn criterion_9_deterministic_reports() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    // A construct run to provide the verify input (itself part of the battery).
    let construct_args = vec![
        "construct", "--m", "1", "--seq", "geo(0.5)", "--b", "0", "--f", "sin(x)", "--sigma",
        "n", "--y", "2", "--p", "1", "--M", "1", "--N", "512", "--space", "o(0.6^n)", "--csv",
        traj.to_str().unwrap(), "--format", "json",
    ];
    let traj_path = traj.to_str().unwrap();
    let battery: Vec<(&str, Vec<&str>)> = vec![
        ("c1-inversion-pair", vec![
            "pairs", "--name", "geometric", "--m", "2", "--lambda", "0.5", "--check", "geo(0.3)",
            "--N", "128", "--format", "json",
        ]),
        ("c2-closed-form-pair", vec![
            "pairs", "--name", "A-to-A", "--m", "2", "--t", "1", "--check", "pow(n,-4.5)", "--N",
            "128", "--format", "json",
        ]),
        ("c3-grid-classify", vec![
            "classify", "--seq", "pow(n,-3.5)", "--seq", "pow(n,-0.5)", "--space", "A(2)",
            "--format", "json",
        ]),
        ("c4-bertrand-classify", vec![
            "classify", "--seq", "pow(n,-1)*pow(ln(n),-2)", "--space", "A(1)", "--format", "json",
        ]),
        ("c5-gauss-classify", vec![
            "classify", "--seq", "pow(n,-3)", "--space", "A(3)", "--format", "json",
        ]),
        ("c6-construct", construct_args),
        ("c7-verify", vec![
            "verify", "--seq-file", traj_path, "--space", "o(1)", "--format", "json",
        ]),
        ("c8-solve", vec![
            "solve", "--m", "2", "--seq", "0", "--b", "0", "--init", "0,1", "--N", "64",
            "--format", "json",
        ]),
    ];
    let strip_wall = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.trim_start().starts_with("\"wall_ms\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    for (label, args) in &battery {
        let first = run(args);
        let second = run(args);
        assert_eq!(
            first.status.code(),
            second.status.code(),
            "{label}: exit codes differ"
        );
        let a = strip_wall(&stdout(&first));
        let b = strip_wall(&stdout(&second));
        assert!(!a.is_empty(), "{label}: empty report");
        assert_eq!(a, b, "{label}: non-deterministic report");
    }
    // The trajectory file itself must also be byte-stable across runs.
    let bytes_1 = std::fs::read(&traj).unwrap();
    run(&battery.iter().find(|(l, _)| *l == "c6-construct").unwrap().1);
    let bytes_2 = std::fs::read(&traj).unwrap();
    assert_eq!(bytes_1, bytes_2, "trajectory CSV differs across runs");
    println!(
        "ACCEPTANCE C9 deterministic reports: PASS ({} workflows re-run byte-identically in {:.2}s)",
        battery.len(),
        started.elapsed().as_secs_f64()
    );
}
