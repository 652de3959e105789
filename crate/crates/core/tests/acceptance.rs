//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its headline numbers once every assertion has held. Criteria involving
//! the command-line front end live in the CLI crate's acceptance tests.

use std::time::Instant;

use asympair::engine::{
    construct_solution, forward_solve, verify_equivalence_traj, ConstructOpts, EquationSpec,
    SolutionKind,
};
use asympair::pairs::{check_pair_instance, lookup_pair, PairParams};
use asympair::remainder::{remainder, remainder_sequence, RemainderOpts};
use asympair::seq::{delta, Sequence};
use asympair::spaces::{
    bertrand_test, direct_sum_oracle, gauss_test, log_test, raabe_test, schlomilch_test,
    ClassifyOptions, Outcome, SpaceSpec,
};
use asympair::{parse_delay_spec, parse_function_spec, parse_sequence_spec};

fn seq(text: &str) -> Sequence {
    parse_sequence_spec(text).unwrap()
}

/// Criterion 1: delta^m r^m a = (-1)^m a pointwise for n <= 50, within 1e-8,
/// across m in {1,2,3} and the geometric/power/impulse family; under 10 s.
#[test]
fn criterion_1_operator_inversion() {
    let started = Instant::now();
    let mut cases = 0usize;
    for m in 1..=3u32 {
        let family = vec![
            seq("geo(0.3)"),
            seq("geo(0.5)"),
            seq("geo(0.9)"),
            seq(&format!("pow(n,{})", -(m as f64) - 1.5)),
            Sequence::impulse(5).unwrap(),
        ];
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for a in family {
            let r = remainder_sequence(&a, m, RemainderOpts::tol(1e-9)).unwrap();
            let d = delta(&r, m).unwrap();
            for n in 1..=50u64 {
                let lhs = d.value(n).unwrap();
                let rhs = sign * a.value(n).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-8,
                    "m={m} a={} n={n}: {lhs} vs {rhs}",
                    a.label()
                );
                cases += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE C1 operator inversion: PASS ({cases} pointwise checks in {:.2}s)",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: closed-form remainders of geo(0.5), verified first by the
/// definitional nested-sum oracle to 1e-14, then by the implementation to
/// 1e-12 relative for n <= 40.
#[test]
fn criterion_2_closed_form_remainder() {
    // Independent oracle: m-fold backward partial summation, straight from
    // the iterated-sum definition (no binomial kernel involved).
    let brute = |m: u32, n: u64| -> f64 {
        let cap = n + 260;
        let mut level: Vec<f64> = (1..=cap).map(|j| 0.5f64.powi(j as i32)).collect();
        for _ in 0..m {
            let mut acc = 0.0;
            for v in level.iter_mut().rev() {
                acc += *v;
                *v = acc;
            }
        }
        level[n as usize - 1]
    };
    for m in 1..=2u32 {
        for n in 1..=40u64 {
            let expect = 2f64.powi(m as i32 - n as i32); // 2^(m-n)
            let oracle = brute(m, n);
            assert!(
                (oracle - expect).abs() <= 1e-14 * expect,
                "oracle drifts from closed form at m={m} n={n}: {oracle} vs {expect}"
            );
            let tol_n = 1e-13 * expect;
            let got = remainder(&seq("geo(0.5)"), m, n, tol_n).unwrap();
            assert!(got.certified);
            assert!(
                (got.value - expect).abs() <= 1e-12 * expect,
                "m={m} n={n}: {} vs {expect}",
                got.value
            );
        }
    }
    println!("ACCEPTANCE C2 closed-form remainder: PASS (r^1, r^2 of geo(0.5), n <= 40)");
}

/// Criterion 3: the power-sequence ground-truth grid yields zero wrong
/// decisive verdicts and at least 80% decisive rates for the Raabe,
/// Schlomilch and logarithmic tests at N = 10^4.
#[test]
fn criterion_3_membership_ground_truth() {
    let n = 10_000u64;
    let band = 0.05;
    let mut decisive = [0usize; 3];
    let mut total = 0usize;
    for s in [0.5f64, 1.5, 2.5, 3.5] {
        let a = seq(&format!("pow(n,{})", -s));
        for t in [1.0f64, 2.0, 3.0] {
            if (s - t).abs() < 0.5 {
                continue;
            }
            total += 1;
            let truth = if s > t { Outcome::InSpace } else { Outcome::NotInSpace };
            let verdicts = [
                raabe_test(&a, t, n, band).unwrap(),
                schlomilch_test(&a, t, n, band).unwrap(),
                log_test(&a, t, n, band).unwrap(),
            ];
            for (i, v) in verdicts.iter().enumerate() {
                if v.is_decisive() {
                    assert_eq!(
                        v.outcome, truth,
                        "{} wrong on s={s}, t={t}: {v:?}",
                        v.test_name
                    );
                    decisive[i] += 1;
                }
            }
        }
    }
    for (i, name) in ["raabe", "schlomilch", "logarithmic"].iter().enumerate() {
        let rate = decisive[i] as f64 / total as f64;
        assert!(rate >= 0.8, "{name} decisive rate {rate:.2} below 80%");
    }
    println!(
        "ACCEPTANCE C3 membership ground truth: PASS ({total} grid points, decisive {:?}/{total} per test, 0 wrong)",
        decisive
    );
}

/// Criterion 4: Bertrand boundary family n^-t (ln n)^-c, decisive and
/// correct (in A(t) iff c > 1), with a non-contradicting oracle cross-check
/// at N = 10^6; under 30 s.
#[test]
fn criterion_4_bertrand_boundary() {
    let started = Instant::now();
    let band = 0.05;
    for t in [1.0f64, 2.0] {
        for c in [0.5f64, 2.0] {
            let a = seq(&format!("pow(n,{}) * pow(ln(n), {})", -t, -c));
            let truth = if c > 1.0 { Outcome::InSpace } else { Outcome::NotInSpace };
            let v = bertrand_test(&a, t, 10_000, band).unwrap();
            assert_eq!(v.outcome, truth, "bertrand t={t} c={c}: {v:?}");
            let oracle = direct_sum_oracle(&a, t, 1_000_000, band).unwrap();
            if oracle.is_decisive() {
                assert_eq!(oracle.outcome, truth, "oracle contradicts at t={t} c={c}");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE C4 bertrand boundary: PASS (4 cases with oracle cross-check in {:.2}s)",
        elapsed.as_secs_f64()
    );
}

/// Criterion 5: the Gauss equality case. lambda = t decides NotInSpace;
/// lambda > t decides InSpace.
#[test]
fn criterion_5_gauss_equality() {
    let a = seq("pow(n,-3)");
    let v = gauss_test(&a, 3.0, 10_000, 0.05).unwrap();
    assert_eq!(v.outcome, Outcome::NotInSpace, "{v:?}");
    let v = gauss_test(&a, 2.0, 10_000, 0.05).unwrap();
    assert_eq!(v.outcome, Outcome::InSpace, "{v:?}");
    println!("ACCEPTANCE C5 gauss equality case: PASS (pow(n,-3) vs t = 3 and t = 2)");
}

/// Criterion 6: the reference construction scenario at full size.
#[test]
fn criterion_6_reference_construction() {
    let eq = EquationSpec::new(
        1,
        seq("geo(0.5)"),
        seq("0"),
        parse_function_spec("sin(x)").unwrap(),
        parse_delay_spec("n").unwrap(),
    )
    .unwrap();
    let y = Sequence::constant(2.0);
    let opts = ConstructOpts {
        n_end: 2048,
        tol: 1e-10,
        max_iter: 200,
    };
    let rep = construct_solution(&eq, &y, 1, 1.0, &opts).unwrap();
    assert!(rep.iterations <= 50, "{} iterations", rep.iterations);
    assert!(rep.residual_max < 1e-9, "residual {}", rep.residual_max);
    assert_eq!(rep.trajectory.kind, SolutionKind::PSolution);
    assert!(rep.bound_check);
    for n in 1..=2048u64 {
        let x_n = rep.trajectory.value(n).unwrap();
        assert!(
            (x_n - 2.0).abs() <= 2f64.powi(1 - (n.min(1060)) as i32) + 1e-10,
            "bound violated at n={n}"
        );
    }
    let replay = forward_solve(&eq, 1, &rep.trajectory.values[..1], opts.n_end).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=opts.n_end {
        worst = worst.max((replay.value(n).unwrap() - rep.trajectory.value(n).unwrap()).abs());
    }
    assert!(worst < 1e-8, "replay deviates by {worst}");
    println!(
        "ACCEPTANCE C6 reference construction: PASS ({} iterations, residual {:.2e}, replay gap {:.2e})",
        rep.iterations, rep.residual_max, worst
    );
}

/// Criterion 8: every catalog pair verified on three representatives each:
/// inversion within 1e-8 and decisive membership of the witness; under 60 s.
#[test]
fn criterion_8_pair_instance_suite() {
    let started = Instant::now();
    let cases: Vec<(&str, u32, PairParams, Vec<Sequence>)> = vec![
        (
            "power-evanescent",
            2,
            PairParams { s: Some(-3.0), ..Default::default() },
            vec![seq("pow(n,-3.5)"), seq("pow(n,-4)"), seq("pow(n,-4.5)")],
        ),
        (
            "power",
            1,
            PairParams { s: Some(0.5), ..Default::default() },
            vec![seq("pow(n,0.25)"), seq("1"), seq("pow(n,-0.4)")],
        ),
        (
            "geometric",
            2,
            PairParams { lambda: Some(0.5), ..Default::default() },
            vec![seq("geo(0.3)"), seq("geo(0.4)"), seq("pow(n,2)*geo(0.3)")],
        ),
        (
            "A-to-pow",
            2,
            PairParams { s: Some(0.0), ..Default::default() },
            vec![seq("pow(n,-3.5)"), seq("pow(n,-4)"), seq("geo(0.6)")],
        ),
        (
            "A-to-A",
            2,
            PairParams { t: Some(1.0), ..Default::default() },
            vec![seq("pow(n,-4.5)"), seq("pow(n,-3.5)"), seq("geo(0.5)")],
        ),
        (
            "fin",
            2,
            PairParams::default(),
            vec![
                Sequence::impulse(1).unwrap(),
                Sequence::impulse(4).unwrap(),
                seq("table(1,-2,3)"),
            ],
        ),
    ];
    let mut checked = 0usize;
    for (name, m, params, reps) in cases {
        let pair = lookup_pair(name, m, &params).unwrap();
        for a in reps {
            let rep = check_pair_instance(&pair, &a, 192, 1e-8).unwrap();
            assert!(
                rep.inversion_ok,
                "{name} / {}: inversion residual {}",
                a.label(),
                rep.inversion_residual
            );
            assert_eq!(
                rep.membership.outcome,
                Outcome::InSpace,
                "{name} / {}: membership {:?}",
                a.label(),
                rep.membership
            );
            assert!(rep.passed);
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE C8 pair instances: PASS ({checked} instances across 6 catalog pairs in {:.2}s)",
        elapsed.as_secs_f64()
    );
}

/// The lambda-limit scenario behind criterion 7, at library level: the CLI
/// acceptance test drives the same construction end to end.
#[test]
fn lambda_limit_family_library_level() {
    for lambda in [-1.0f64, 0.0, 2.0] {
        let eq = EquationSpec::new(
            1,
            seq("2*geo(0.5)"),
            seq("0"),
            parse_function_spec("abs(x)").unwrap(),
            parse_delay_spec("n-1").unwrap(),
        )
        .unwrap();
        let y = Sequence::constant(lambda);
        let m_bound = lambda.abs() + 1.0;
        let rep = construct_solution(
            &eq,
            &y,
            4,
            m_bound,
            &ConstructOpts {
                n_end: 1024,
                tol: 1e-10,
                max_iter: 200,
            },
        )
        .unwrap();
        assert_eq!(rep.trajectory.kind, SolutionKind::PSolution, "lambda={lambda}");
        let x200 = rep.trajectory.value(200).unwrap();
        let x_end = rep.trajectory.value(1024).unwrap();
        assert!(
            (x200 - x_end).abs() < 1e-6,
            "lambda={lambda}: tail not settled ({x200} vs {x_end})"
        );
        let v = verify_equivalence_traj(
            &rep.trajectory,
            &y,
            &SpaceSpec::LittleO1,
            1024,
            &ClassifyOptions::default(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::InSpace, "lambda={lambda}: {v:?}");
    }
    println!("ACCEPTANCE C7 (library half) lambda limits: PASS (lambda in {{-1, 0, 2}})");
}
