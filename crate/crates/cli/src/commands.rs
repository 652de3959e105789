//! The five workflows behind the subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use asympair::engine::{
    construct_solution, forward_solve, residual, verify_equivalence, verify_equivalence_traj,
    ConstructOpts, EquationSpec, SolutionKind,
};
use asympair::pairs::{check_pair_instance, lookup_pair, PairParams};
use asympair::seq::Sequence;
use asympair::spaces::{ClassifyOptions, Outcome, SpaceSpec};
use asympair::{parse_delay_spec, parse_function_spec, parse_sequence_spec, Error};
use clap::Args;
use serde_json::Value;

use crate::csvio;
use crate::report::{num, outcome_str, Item, Report, VerdictOut};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 5;

fn classify_opts(n: u64, band: f64) -> ClassifyOptions {
    ClassifyOptions {
        n_samples: n,
        band,
        oracle_n: n.saturating_mul(10).clamp(10_000, 1_000_000),
    }
}

/// Order-stable parallel map over at most `jobs` worker threads.
fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

fn load_file_sequence(path: &Path, tail: Option<&str>) -> Result<Sequence, Error> {
    let tail = match tail {
        Some(t) => csvio::parse_tail(t)?,
        None => {
            return Err(Error::InvalidParameter(
                "--seq-file requires an explicit --tail declaration (use `unknown` to opt out of certification)"
                    .into(),
            ))
        }
    };
    let values = csvio::read_value_csv(path)?;
    Sequence::from_table(path.display().to_string(), values, tail)
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Sequence expression(s); repeatable.
    #[arg(long = "seq", allow_hyphen_values = true)]
    pub seqs: Vec<String>,
    /// CSV file with header `n,value` (requires --tail).
    #[arg(long = "seq-file")]
    pub seq_file: Option<PathBuf>,
    /// Tail declaration for --seq-file: geometric(C,rho) | power(C,s) | finite(p) | unknown.
    #[arg(long)]
    pub tail: Option<String>,
    /// Target space, e.g. A(2), o(1), O(n^-1), o(0.6^n), Fin(5).
    #[arg(long)]
    pub space: String,
    #[arg(long = "N", default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.05)]
    pub band: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<(Report, i32), Error> {
    let space = SpaceSpec::parse(&args.space)?;
    let mut inputs: Vec<(String, Sequence)> = Vec::new();
    for text in &args.seqs {
        inputs.push((text.clone(), parse_sequence_spec(text)?));
    }
    if let Some(path) = &args.seq_file {
        inputs.push((
            path.display().to_string(),
            load_file_sequence(path, args.tail.as_deref())?,
        ));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidParameter(
            "classify needs at least one --seq or --seq-file".into(),
        ));
    }
    let opts = classify_opts(args.n, args.band);

    let mut config = BTreeMap::new();
    config.insert("space".into(), Value::String(space.to_string()));
    config.insert("N".into(), Value::from(args.n));
    config.insert("band".into(), num(args.band));
    config.insert("oracle_n".into(), Value::from(opts.oracle_n));
    config.insert("jobs".into(), Value::from(args.jobs as u64));
    let mut report = Report::new("classify", config);

    let results = par_map(&inputs, args.jobs, |(label, seq)| {
        (label.clone(), asympair::classify_space(seq, &space, &opts))
    });
    for (label, res) in results {
        let c = res?;
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "outcome".into(),
            Value::String(outcome_str(c.verdict.outcome).into()),
        );
        metrics.insert("decided_by".into(), Value::String(c.verdict.test_name.clone()));
        report.items.push(Item {
            label,
            verdicts: c.attempts.iter().map(VerdictOut::from).collect(),
            metrics,
        });
    }
    Ok((report, EXIT_OK))
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Coefficient sequence a.
    #[arg(long = "seq", allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub b: String,
    /// Scalar function f over x.
    #[arg(long, default_value = "sin(x)")]
    pub f: String,
    /// Delay map over n, e.g. `n`, `n-1`, `0.5*n+3`.
    #[arg(long, default_value = "n")]
    pub sigma: String,
    #[arg(long, default_value_t = 1)]
    pub p: u64,
    /// Comma-separated initial values x_p..x_{p+m-1}.
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
    #[arg(long = "N", default_value_t = 200)]
    pub n: u64,
    /// Write the trajectory as CSV (`n,x`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_init(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad initial value `{v}`")))
        })
        .collect()
}

fn build_equation(m: u32, a: &str, b: &str, f: &str, sigma: &str) -> Result<EquationSpec, Error> {
    EquationSpec::new(
        m,
        parse_sequence_spec(a)?,
        parse_sequence_spec(b)?,
        parse_function_spec(f)?,
        parse_delay_spec(sigma)?,
    )
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(Report, i32), Error> {
    let eq = build_equation(args.m, &args.a, &args.b, &args.f, &args.sigma)?;
    let init = parse_init(&args.init)?;
    let traj = forward_solve(&eq, args.p, &init, args.n)?;
    let res = residual(&eq, &traj)?;

    let mut config = BTreeMap::new();
    config.insert("m".into(), Value::from(args.m));
    config.insert("a".into(), Value::String(args.a.clone()));
    config.insert("b".into(), Value::String(args.b.clone()));
    config.insert("f".into(), Value::String(args.f.clone()));
    config.insert("sigma".into(), Value::String(args.sigma.clone()));
    config.insert("p".into(), Value::from(args.p));
    config.insert("N".into(), Value::from(args.n));
    let mut report = Report::new("solve", config);

    if let Some(path) = &args.csv {
        csvio::write_solve_csv(path, traj.start, &traj.values)?;
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("residual".into(), num(res));
    metrics.insert("x_first".into(), num(traj.values[0]));
    metrics.insert("x_last".into(), num(*traj.values.last().unwrap()));
    metrics.insert("length".into(), Value::from(traj.values.len()));
    report.items.push(Item {
        label: format!("forward solve from p = {}", args.p),
        verdicts: vec![],
        metrics,
    });
    Ok((report, EXIT_OK))
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Coefficient sequence a (must carry a certified tail).
    #[arg(long = "seq", allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, default_value = "sin(x)")]
    pub f: String,
    #[arg(long, default_value = "n")]
    pub sigma: String,
    /// Target sequence y with delta^m y = b.
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
    #[arg(long, default_value_t = 1)]
    pub p: u64,
    /// Bound M with |f| <= M on the sampled balls.
    #[arg(long = "M", default_value_t = 1.0, allow_negative_numbers = true)]
    pub m_bound: f64,
    #[arg(long = "N", default_value_t = 2048)]
    pub n: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: u32,
    #[arg(long, default_value_t = 0.05)]
    pub band: f64,
    /// Equivalence space Z; alternative to --pair.
    #[arg(long)]
    pub space: Option<String>,
    /// Catalog pair supplying Z (with --t/--s/--lambda as needed).
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Write the trajectory as CSV (`n,x,y,diff,R`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn cmd_construct(args: &ConstructArgs) -> Result<(Report, i32), Error> {
    let eq = build_equation(args.m, &args.a, &args.b, &args.f, &args.sigma)?;
    let y = parse_sequence_spec(&args.y)?;
    let opts = ConstructOpts {
        n_end: args.n,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let cls_opts = classify_opts(args.n, args.band);

    let mut verdicts: Vec<VerdictOut> = Vec::new();
    let z = match (&args.space, &args.pair) {
        (Some(text), None) => SpaceSpec::parse(text)?,
        (None, Some(name)) => {
            let pair = lookup_pair(
                name,
                args.m,
                &PairParams {
                    s: args.s,
                    t: args.t,
                    lambda: args.lambda,
                    p: None,
                },
            )?;
            let pre = asympair::classify_space(&eq.a, &pair.a_space, &cls_opts)?;
            if pre.verdict.outcome == Outcome::NotInSpace {
                return Err(Error::Precondition(format!(
                    "coefficient sequence is not in the pair's A = {}",
                    pair.a_space
                )));
            }
            verdicts.push(VerdictOut::from(&pre.verdict));
            pair.z_space
        }
        _ => {
            return Err(Error::InvalidParameter(
                "construct needs exactly one of --space or --pair".into(),
            ))
        }
    };

    let mut config = BTreeMap::new();
    config.insert("m".into(), Value::from(args.m));
    config.insert("a".into(), Value::String(args.a.clone()));
    config.insert("b".into(), Value::String(args.b.clone()));
    config.insert("f".into(), Value::String(args.f.clone()));
    config.insert("sigma".into(), Value::String(args.sigma.clone()));
    config.insert("y".into(), Value::String(args.y.clone()));
    config.insert("p".into(), Value::from(args.p));
    config.insert("M".into(), num(args.m_bound));
    config.insert("N".into(), Value::from(args.n));
    config.insert("tol".into(), num(args.tol));
    config.insert("max_iter".into(), Value::from(args.max_iter));
    config.insert("band".into(), num(args.band));
    config.insert("Z".into(), Value::String(z.to_string()));
    let mut report = Report::new("construct", config);

    let rep = construct_solution(&eq, &y, args.p, args.m_bound, &opts)?;
    let equiv = verify_equivalence_traj(&rep.trajectory, &y, &z, args.n, &cls_opts)?;
    verdicts.push(VerdictOut::from(&equiv));

    if let Some(path) = &args.csv {
        let ys: Result<Vec<f64>, Error> = (1..=args.n).map(|n| y.value(n)).collect();
        csvio::write_construct_csv(path, &rep.trajectory.values, &ys?, &rep.bound_radii)?;
    }

    let mut metrics = BTreeMap::new();
    metrics.insert("iterations".into(), Value::from(rep.iterations));
    metrics.insert("final_sup_change".into(), num(rep.final_sup_change));
    metrics.insert("residual_max".into(), num(rep.residual_max));
    metrics.insert("bound_check".into(), Value::Bool(rep.bound_check));
    metrics.insert("certified_tail".into(), Value::Bool(rep.certified_tail));
    metrics.insert("R_p".into(), num(rep.r_p));
    metrics.insert(
        "solution_kind".into(),
        Value::String(
            match rep.trajectory.kind {
                SolutionKind::PSolution => "p-solution",
                SolutionKind::Candidate => "candidate",
            }
            .into(),
        ),
    );
    let x_last = *rep.trajectory.values.last().unwrap();
    metrics.insert("x_last".into(), num(x_last));
    let tail32 = &rep.trajectory.values[rep.trajectory.values.len().saturating_sub(32)..];
    let span = tail32.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail32.iter().cloned().fold(f64::INFINITY, f64::min);
    metrics.insert("x_tail_span_last32".into(), num(span));

    let ok = rep.bound_check
        && rep.trajectory.kind == SolutionKind::PSolution
        && equiv.outcome != Outcome::NotInSpace;
    report.items.push(Item {
        label: format!("construct toward `{}` from p = {}", args.y, args.p),
        verdicts,
        metrics,
    });
    Ok((report, if ok { EXIT_OK } else { EXIT_VERDICT }))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// First sequence x (DSL); or use --seq-file.
    #[arg(long = "seq", allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Second sequence y (DSL).
    #[arg(long = "seq2", allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Trajectory CSV (`n,x,y,...`) supplying both sequences.
    #[arg(long = "seq-file")]
    pub seq_file: Option<PathBuf>,
    #[arg(long)]
    pub space: String,
    #[arg(long = "N", default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.05)]
    pub band: f64,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(Report, i32), Error> {
    let z = SpaceSpec::parse(&args.space)?;
    let opts = classify_opts(args.n, args.band);

    let mut config = BTreeMap::new();
    config.insert("space".into(), Value::String(z.to_string()));
    config.insert("N".into(), Value::from(args.n));
    config.insert("band".into(), num(args.band));
    let mut report = Report::new("verify", config);

    let (label, verdict) = match (&args.x, &args.y, &args.seq_file) {
        (Some(x), Some(y), None) => {
            let xs = parse_sequence_spec(x)?;
            let ys = parse_sequence_spec(y)?;
            let v = verify_equivalence(&xs, &ys, &z, 1, args.n, &opts)?;
            (format!("({x}) - ({y})"), v)
        }
        (None, None, Some(path)) => {
            let (xs, ys) = csvio::read_traj_csv(path)?;
            let hi = (xs.len() as u64).min(args.n);
            let traj = asympair::Trajectory {
                start: 1,
                values: xs,
                solution_from: 1,
                kind: asympair::SolutionKind::Candidate,
            };
            let y_seq = Sequence::from_table_padded("y", ys);
            let v = verify_equivalence_traj(&traj, &y_seq, &z, hi, &opts)?;
            (format!("{} (x - y columns)", path.display()), v)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "verify needs either --seq and --seq2, or --seq-file".into(),
            ))
        }
    };

    let exit = if verdict.outcome == Outcome::NotInSpace {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "outcome".into(),
        Value::String(outcome_str(verdict.outcome).into()),
    );
    report.items.push(Item {
        label,
        verdicts: vec![VerdictOut::from(&verdict)],
        metrics,
    });
    Ok((report, exit))
}

// ---------------------------------------------------------------------------
// pairs
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct PairsArgs {
    /// Catalog name: power-evanescent | power | geometric | A-to-pow | A-to-A | fin.
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p: Option<u64>,
    /// Run the instance check against this sequence expression.
    #[arg(long, allow_hyphen_values = true)]
    pub check: Option<String>,
    #[arg(long = "N", default_value_t = 192)]
    pub n: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

pub fn cmd_pairs(args: &PairsArgs) -> Result<(Report, i32), Error> {
    let pair = lookup_pair(
        &args.name,
        args.m,
        &PairParams {
            s: args.s,
            t: args.t,
            lambda: args.lambda,
            p: args.p,
        },
    )?;

    let mut config = BTreeMap::new();
    config.insert("name".into(), Value::String(args.name.clone()));
    config.insert("m".into(), Value::from(args.m));
    config.insert("N".into(), Value::from(args.n));
    config.insert("tol".into(), num(args.tol));
    let mut report = Report::new("pairs", config);

    let mut metrics = BTreeMap::new();
    metrics.insert("A".into(), Value::String(pair.a_space.to_string()));
    metrics.insert("Z".into(), Value::String(pair.z_space.to_string()));
    metrics.insert("evanescent".into(), Value::Bool(pair.evanescent));

    let mut verdicts = Vec::new();
    let mut exit = EXIT_OK;
    let label = if let Some(check) = &args.check {
        let a = parse_sequence_spec(check)?;
        let rep = check_pair_instance(&pair, &a, args.n, args.tol)?;
        verdicts.push(VerdictOut::from(&rep.precondition));
        verdicts.push(VerdictOut::from(&rep.membership));
        metrics.insert("inversion_residual".into(), num(rep.inversion_residual));
        metrics.insert("inversion_ok".into(), Value::Bool(rep.inversion_ok));
        metrics.insert("passed".into(), Value::Bool(rep.passed));
        metrics.insert(
            "route".into(),
            Value::String(format!("{:?}", rep.route)),
        );
        if let Some(w) = rep.precondition_warning {
            metrics.insert("warning".into(), Value::String(w));
        }
        if !rep.passed {
            exit = EXIT_VERDICT;
        }
        format!("{} pair, m = {}, checked on `{check}`", pair.name, pair.m)
    } else {
        format!("{} pair, m = {}", pair.name, pair.m)
    };
    report.items.push(Item {
        label,
        verdicts,
        metrics,
    });
    Ok((report, exit))
}
