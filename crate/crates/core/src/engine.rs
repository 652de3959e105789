//! Forward simulation of `delta^m x_n = a_n f(x_sigma(n)) + b_n`, the
//! fixed-point construction of solutions with prescribed asymptotic
//! behavior, and asymptotic-equivalence verification.
//!
//! The construction iterates the map
//! `H(x)(n) = y_n + (-1)^m r^m_n(a (f o x o sigma))` for n >= p (and y_n
//! below p) starting from x = y, where y solves `delta^m y = b`. Each
//! remainder is evaluated with certified truncation. Existence of the fixed
//! point is guaranteed by a Schauder argument, which says nothing about
//! Picard convergence: the iteration therefore monitors its sup-change and
//! aborts on sustained growth, and a failure report refutes nothing.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{DelaySpec, FunctionSpec};
use crate::remainder::{remainder, remainder_sequence, RemainderOpts};
use crate::seq::{binomial_f64, Sequence, TailModel};
use crate::spaces::{classify_space_windowed, ClassifyOptions, SpaceSpec, Verdict};

/// The equation `delta^m x_n = a_n f(x_sigma(n)) + b_n`.
#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub order: u32,
    pub a: Sequence,
    pub b: Sequence,
    pub f: FunctionSpec,
    pub sigma: DelaySpec,
}

impl EquationSpec {
    pub fn new(order: u32, a: Sequence, b: Sequence, f: FunctionSpec, sigma: DelaySpec) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("equation order must be >= 1".into()));
        }
        Ok(EquationSpec { order, a, b, f, sigma })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SolutionKind {
    /// Satisfies the equation from `solution_from` on (within tolerance).
    PSolution,
    /// Produced by the construction but not certified by the residual check.
    Candidate,
}

/// A finite stretch of a sequence: `values[i] = x_{start + i}`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: u64,
    pub values: Vec<f64>,
    /// Index from which the recurrence is claimed to hold.
    pub solution_from: u64,
    pub kind: SolutionKind,
}

impl Trajectory {
    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64 - 1
    }

    pub fn value(&self, n: u64) -> Option<f64> {
        if n < self.start || n > self.end() {
            None
        } else {
            Some(self.values[(n - self.start) as usize])
        }
    }

    /// View the stored stretch as a Sequence; indices outside it error.
    pub fn to_sequence(&self, label: impl Into<String>) -> Sequence {
        let start = self.start;
        let end = self.end();
        let values = Arc::new(self.values.clone());
        Sequence::from_fn(label.into(), move |n| {
            if n < start || n > end {
                Err(Error::Eval {
                    index: n,
                    reason: format!("outside the stored trajectory range [{start}, {end}]"),
                })
            } else {
                Ok(values[(n - start) as usize])
            }
        })
    }
}

fn delta_weights(m: u32) -> Vec<f64> {
    (0..=m as u64)
        .map(|k| {
            let c = binomial_f64(m as u64, k);
            if (m as u64 - k).is_multiple_of(2) {
                c
            } else {
                -c
            }
        })
        .collect()
}

/// Solve the recurrence forward from given initial values
/// `init = [x_p, ..., x_{p+m-1}]` up to index `n_end`.
///
/// Causality requires `sigma(n) <= n + m - 1` and `sigma(n) >= p` on the
/// whole solve range; both are checked before stepping.
pub fn forward_solve(eq: &EquationSpec, p: u64, init: &[f64], n_end: u64) -> Result<Trajectory> {
    let m = eq.order;
    if p == 0 {
        return Err(Error::InvalidParameter("start index p must be >= 1".into()));
    }
    if init.len() != m as usize {
        return Err(Error::InvalidParameter(format!(
            "forward solve needs exactly m = {m} initial values, got {}",
            init.len()
        )));
    }
    if n_end <= p + m as u64 {
        return Err(Error::InvalidParameter(format!(
            "n_end = {n_end} must exceed p + m = {}",
            p + m as u64
        )));
    }
    for n in p..=n_end - m as u64 {
        let s = eq.sigma.apply(n);
        if s > n + m as u64 - 1 {
            return Err(Error::Precondition(format!(
                "causality violated: sigma({n}) = {s} > n + m - 1"
            )));
        }
        if s < p {
            return Err(Error::Precondition(format!(
                "sigma({n}) = {s} references an index before the start p = {p}"
            )));
        }
    }
    let weights = delta_weights(m);
    let mut values = init.to_vec();
    for n in p..=n_end - m as u64 {
        let s = eq.sigma.apply(n);
        let x_sigma = values[(s - p) as usize];
        let mut acc = eq.a.value(n)? * eq.f.eval(x_sigma)? + eq.b.value(n)?;
        for (k, w) in weights.iter().enumerate().take(m as usize) {
            acc -= w * values[(n - p) as usize + k];
        }
        if !acc.is_finite() {
            return Err(Error::Eval {
                index: n + m as u64,
                reason: "forward recurrence overflowed to a non-finite value".into(),
            });
        }
        values.push(acc);
    }
    Ok(Trajectory {
        start: p,
        values,
        solution_from: p,
        kind: SolutionKind::PSolution,
    })
}

/// Max-norm defect of the recurrence over the trajectory's valid range.
pub fn residual(eq: &EquationSpec, traj: &Trajectory) -> Result<f64> {
    let m = eq.order as u64;
    let end = traj.end();
    if traj.values.len() <= m as usize {
        return Err(Error::IndexRange(format!(
            "trajectory of length {} cannot support order {m}",
            traj.values.len()
        )));
    }
    let weights = delta_weights(eq.order);
    let mut worst = 0.0f64;
    for n in traj.solution_from..=end - m {
        let s = eq.sigma.apply(n);
        let x_sigma = traj.value(s).ok_or_else(|| {
            Error::IndexRange(format!(
                "sigma({n}) = {s} falls outside the stored range [{}, {end}]",
                traj.start
            ))
        })?;
        let mut d = -eq.a.value(n)? * eq.f.eval(x_sigma)? - eq.b.value(n)?;
        for (k, w) in weights.iter().enumerate() {
            d += w * traj.value(n + k as u64).unwrap();
        }
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Result of the framed-interior ball check backing the construction.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PreconditionReport {
    pub ok: bool,
    /// R_p = M * r^m_p |a| including its truncation bound.
    pub r_p: f64,
    /// min over the sampled grid of M - |f(u)|.
    pub margin: f64,
    /// A sampled point violating the bound, if any.
    pub witness: Option<(u64, f64)>,
}

/// Check that every ball of radius `R_p = M r^m_p|a|` around the sampled
/// values of `y o sigma` stays inside `{|f| <= M}`. The check samples n
/// densely on `[p, p+256]` and then geometrically up to `n_check`, and walks
/// each interval with a grid step of at most `R_p / 64`: a pragmatic
/// certificate for a continuous f, flagged as sampled rather than proven.
pub fn check_precondition(
    eq: &EquationSpec,
    y: &Sequence,
    p: u64,
    m_bound: f64,
    tol: f64,
    n_check: u64,
) -> Result<PreconditionReport> {
    if !(m_bound > 0.0) {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let abs_a = eq.a.abs();
    let r = remainder(&abs_a, eq.order, p, tol)?;
    let r_p = m_bound * (r.value + r.tail_bound.unwrap_or(0.0));

    let mut indices = Vec::new();
    let mut n = p;
    while n <= n_check.max(p) && n <= p + 256 {
        indices.push(n);
        n += 1;
    }
    while n <= n_check {
        indices.push(n);
        n = n.saturating_mul(2);
    }

    let mut ok = true;
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for &n in &indices {
        let s = eq.sigma.apply(n);
        let center = y.value(s)?;
        let (lo, hi) = (center - r_p, center + r_p);
        if let Some(cert) = eq.f.declared_bound() {
            if cert.lo <= lo && hi <= cert.hi && cert.bound <= m_bound {
                margin = margin.min(m_bound - cert.bound);
                continue;
            }
        }
        let steps = 128u32;
        for i in 0..=steps {
            let u = lo + (hi - lo) * i as f64 / steps as f64;
            match eq.f.eval(u) {
                Ok(v) => {
                    margin = margin.min(m_bound - v.abs());
                    if v.abs() > m_bound {
                        ok = false;
                        witness.get_or_insert((n, u));
                    }
                }
                Err(_) => {
                    ok = false;
                    margin = margin.min(f64::NEG_INFINITY.max(-m_bound));
                    witness.get_or_insert((n, u));
                }
            }
        }
    }
    Ok(PreconditionReport {
        ok,
        r_p,
        margin,
        witness,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ConstructOpts {
    pub n_end: u64,
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ConstructOpts {
    fn default() -> Self {
        ConstructOpts {
            n_end: 2048,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Outcome of a converged (or certified-degenerate) construction.
#[derive(Clone, Debug)]
pub struct ConstructReport {
    /// x on `[1, n_end]`; equals y below p.
    pub trajectory: Trajectory,
    pub iterations: u32,
    pub final_sup_change: f64,
    /// max over `[p, n_end - m]` of the recurrence defect.
    pub residual_max: f64,
    /// Whether |x_n - y_n| <= M r^m_n|a| + tol held for all n >= p.
    pub bound_check: bool,
    /// All remainder evaluations carried certified truncation bounds.
    pub certified_tail: bool,
    pub r_p: f64,
    /// M r^m_n|a| for n >= p (zero below p), aligned with the trajectory.
    pub bound_radii: Vec<f64>,
}

/// Construct a p-solution asymptotic to `y` by Picard iteration of H.
///
/// Preconditions checked here: the ball certificate from
/// [`check_precondition`], and `delta^m y = b` within tolerance on the
/// window. Convergence is declared when the sup-change over `[1, n_end]`
/// drops below `tol`; growth over three consecutive iterations aborts early.
/// Non-convergence is an error stating that existence is not refuted.
pub fn construct_solution(
    eq: &EquationSpec,
    y: &Sequence,
    p: u64,
    m_bound: f64,
    opts: &ConstructOpts,
) -> Result<ConstructReport> {
    let m = eq.order;
    let n_end = opts.n_end;
    if n_end <= p + m as u64 + 1 {
        return Err(Error::InvalidParameter(format!(
            "n_end = {n_end} too small for p = {p}, m = {m}"
        )));
    }
    let pre = check_precondition(eq, y, p, m_bound, opts.tol, n_end)?;
    if !pre.ok {
        return Err(Error::Precondition(format!(
            "ball check failed: |f| exceeds M = {m_bound} within radius {} of y (witness {:?})",
            pre.r_p, pre.witness
        )));
    }

    // y must actually solve delta^m y = b on the window.
    let weights = delta_weights(m);
    for n in p..=n_end - m as u64 {
        let mut d = -eq.b.value(n)?;
        let mut scale = eq.b.value(n)?.abs();
        for (k, w) in weights.iter().enumerate() {
            let yv = y.value(n + k as u64)?;
            d += w * yv;
            scale += w.abs() * yv.abs();
        }
        if d.abs() > opts.tol + 32.0 * f64::EPSILON * scale {
            return Err(Error::Precondition(format!(
                "delta^{m} y differs from b by {d:.3e} at n = {n}; y is not in delta^-m b"
            )));
        }
    }

    let y_vals: Vec<f64> = (1..=n_end).map(|n| y.value(n)).collect::<Result<_>>()?;
    let product_tail = match eq.a.tail() {
        TailModel::Geometric { scale, ratio } => TailModel::Geometric {
            scale: scale * m_bound,
            ratio,
        },
        TailModel::Power { scale, exponent } => TailModel::Power {
            scale: scale * m_bound,
            exponent,
        },
        TailModel::Finite { zero_from } => TailModel::Finite { zero_from },
        TailModel::Unknown => TailModel::Unknown,
    };
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let r_opts = RemainderOpts::tol(opts.tol / 4.0);

    let mut x = y_vals.clone();
    let mut iterations = 0;
    let mut sup_change = f64::INFINITY;
    let mut certified = true;
    let mut recent_changes = [f64::INFINITY; 4];
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        // a (f o x o sigma), with x extended by y beyond the horizon: the
        // extension error is bounded by R_{n_end} and folds into tol.
        let x_arc = Arc::new(x.clone());
        let (a, f, sigma, y_ext) = (eq.a.clone(), eq.f.clone(), eq.sigma.clone(), y.clone());
        let ax_star = Sequence::from_fn("a(f.x.sigma)", move |j| {
            let s = sigma.apply(j);
            let xv = if s as usize <= x_arc.len() {
                x_arc[(s - 1) as usize]
            } else {
                y_ext.value(s)?
            };
            Ok(a.value(j)? * f.eval(xv)?)
        })
        .with_tail(product_tail)?;

        let mut change = 0.0f64;
        let mut x_new = x.clone();
        for n in p..=n_end {
            let r = remainder(&ax_star, m, n, r_opts.tol)?;
            certified &= r.certified;
            let v = y_vals[(n - 1) as usize] + sign * r.value;
            change = change.max((v - x[(n - 1) as usize]).abs());
            x_new[(n - 1) as usize] = v;
        }
        x = x_new;
        sup_change = change;
        if change < opts.tol {
            converged = true;
            break;
        }
        recent_changes.rotate_left(1);
        recent_changes[3] = change;
        if recent_changes[0].is_finite()
            && recent_changes.windows(2).all(|w| w[1] > w[0])
        {
            return Err(Error::Convergence(format!(
                "sup-change grew over three consecutive iterations (last {change:.3e}); \
                 aborting. A fixed point may still exist: existence not refuted"
            )));
        }
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "no convergence after {} iterations (last sup-change {sup_change:.3e}); \
             existence not refuted",
            opts.max_iter
        )));
    }

    // Radius audit: |x - y| <= M r^m|a| + tol must hold from p on.
    let r_abs = remainder_sequence(&eq.a.abs(), m, r_opts)?;
    let mut bound_radii = vec![0.0; n_end as usize];
    let mut bound_check = true;
    for n in p..=n_end {
        let r_n = m_bound * r_abs.value(n)?;
        bound_radii[(n - 1) as usize] = r_n;
        if (x[(n - 1) as usize] - y_vals[(n - 1) as usize]).abs() > r_n + opts.tol {
            bound_check = false;
        }
    }

    // Recurrence defect over [p, n_end - m], with x extended by y beyond the
    // horizon exactly as during the iteration (sigma may advance past it).
    let mut residual_max = 0.0f64;
    for n in p..=n_end - m as u64 {
        let s = eq.sigma.apply(n);
        let x_sigma = if s <= n_end {
            x[(s - 1) as usize]
        } else {
            y.value(s)?
        };
        let mut d = -eq.a.value(n)? * eq.f.eval(x_sigma)? - eq.b.value(n)?;
        for (k, w) in weights.iter().enumerate() {
            d += w * x[(n - 1) as usize + k];
        }
        residual_max = residual_max.max(d.abs());
    }
    let mut traj = Trajectory {
        start: 1,
        values: x,
        solution_from: p,
        kind: SolutionKind::Candidate,
    };
    if residual_max < 10.0 * opts.tol {
        traj.kind = SolutionKind::PSolution;
    }
    Ok(ConstructReport {
        trajectory: traj,
        iterations,
        final_sup_change: sup_change,
        residual_max,
        bound_check,
        certified_tail: certified,
        r_p: pre.r_p,
        bound_radii,
    })
}

/// Classify `x - y` against the space Z on the overlap `[lo, hi]`.
pub fn verify_equivalence(
    x: &Sequence,
    y: &Sequence,
    z: &SpaceSpec,
    lo: u64,
    hi: u64,
    opts: &ClassifyOptions,
) -> Result<Verdict> {
    if hi < lo || hi - lo + 1 < 100 {
        return Err(Error::IndexRange(format!(
            "equivalence needs an overlap of at least 100 indices, got [{lo}, {hi}]"
        )));
    }
    let (xc, yc) = (x.clone(), y.clone());
    let diff = Sequence::from_fn(format!("({}) - ({})", x.label(), y.label()), move |n| {
        Ok(xc.value(n)? - yc.value(n)?)
    });
    Ok(classify_space_windowed(&diff, z, lo, hi, opts)?.verdict)
}

/// Trajectory flavor of [`verify_equivalence`]: the overlap is the stored
/// range clipped to `[1, n]`.
pub fn verify_equivalence_traj(
    traj: &Trajectory,
    y: &Sequence,
    z: &SpaceSpec,
    n: u64,
    opts: &ClassifyOptions,
) -> Result<Verdict> {
    let hi = traj.end().min(n);
    verify_equivalence(&traj.to_sequence("x"), y, z, traj.start, hi, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_delay_spec, parse_function_spec, parse_sequence_spec};
    use crate::spaces::Outcome;

    fn seq(text: &str) -> Sequence {
        parse_sequence_spec(text).unwrap()
    }

    fn eq(m: u32, a: &str, b: &str, f: &str, sigma: &str) -> EquationSpec {
        EquationSpec::new(
            m,
            seq(a),
            seq(b),
            parse_function_spec(f).unwrap(),
            parse_delay_spec(sigma).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn forward_solve_trivial_cases() {
        // a = b = 0: constant.
        let e = eq(1, "0", "0", "sin(x)", "n");
        let t = forward_solve(&e, 1, &[4.25], 50).unwrap();
        assert!(t.values.iter().all(|v| *v == 4.25));

        // delta x = 1 from x_1 = 0: x_n = n - 1.
        let e = eq(1, "0", "1", "sin(x)", "n");
        let t = forward_solve(&e, 1, &[0.0], 50).unwrap();
        for n in 1..=50u64 {
            assert_eq!(t.value(n).unwrap(), (n - 1) as f64);
        }

        // delta^2 x = 0 from (0, 1): x_n = n - 1 (Pol(1) is the kernel).
        let e = eq(2, "0", "0", "sin(x)", "n");
        let t = forward_solve(&e, 1, &[0.0, 1.0], 50).unwrap();
        for n in 1..=50u64 {
            assert_eq!(t.value(n).unwrap(), (n - 1) as f64);
        }
        assert!(residual(&e, &t).unwrap() <= 1e-12);
    }

    #[test]
    fn forward_solve_delayed_absolute_value() {
        // delta x_n = a_n |x_{n-1}| with summable positive a: increasing and
        // convergent from x_1 = 2.
        let e = eq(1, "geo(0.5)", "0", "abs(x)", "n-1");
        let t = forward_solve(&e, 1, &[2.0], 400).unwrap();
        for w in t.values.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!((t.value(400).unwrap() - t.value(200).unwrap()).abs() < 1e-12);
        assert!(residual(&e, &t).unwrap() < 1e-12);
    }

    #[test]
    fn forward_solve_rejects_bad_sigma() {
        // Advance beyond n + m - 1 breaks causality.
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n+3");
        assert!(matches!(
            forward_solve(&e, 1, &[0.0], 50),
            Err(Error::Precondition(_))
        ));
        // Delay reaching below p is undefined.
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n-1");
        assert!(matches!(
            forward_solve(&e, 3, &[0.0], 50),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn precondition_ball_checks() {
        // Bounded f: every ball fits, via the declared bound of sin.
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n");
        let pre = check_precondition(&e, &Sequence::constant(2.0), 1, 1.0, 1e-10, 512).unwrap();
        assert!(pre.ok);
        assert!((pre.r_p - 1.0).abs() < 1e-9); // r^1_1(geo(0.5)) = 1

        // f(u) = 1/u around y = 1: fine for small radius...
        let e = eq(1, "0.05*geo(0.5)", "0", "1/x", "n");
        let pre = check_precondition(&e, &Sequence::constant(1.0), 1, 2.0, 1e-10, 512).unwrap();
        assert!(pre.ok, "{pre:?}"); // R_1 = 2*0.05 = 0.1, interval [0.9, 1.1]
        assert!(pre.margin > 0.8);

        // ...but not when the ball reaches toward the pole.
        let e = eq(1, "0.3*geo(0.5)", "0", "1/x", "n");
        let pre = check_precondition(&e, &Sequence::constant(1.0), 1, 2.0, 1e-10, 512).unwrap();
        assert!(!pre.ok); // R_1 = 0.6, |1/0.4| = 2.5 > 2
        assert!(pre.witness.is_some());
    }

    #[test]
    fn construct_degenerate_identity() {
        // a = 0 makes H the identity: x = y after one sweep.
        let e = eq(1, "0", "0", "sin(x)", "n");
        let y = Sequence::constant(1.5);
        let rep = construct_solution(&e, &y, 1, 1.0, &ConstructOpts {
            n_end: 128,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.final_sup_change, 0.0);
        assert!(rep.trajectory.values.iter().all(|v| *v == 1.5));
        assert_eq!(rep.trajectory.kind, SolutionKind::PSolution);
        assert!(rep.bound_check);
    }

    #[test]
    fn construct_sin_scenario_small() {
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n");
        let y = Sequence::constant(2.0);
        let opts = ConstructOpts {
            n_end: 256,
            tol: 1e-10,
            max_iter: 100,
        };
        let rep = construct_solution(&e, &y, 1, 1.0, &opts).unwrap();
        assert!(rep.iterations <= 50, "{} iterations", rep.iterations);
        assert!(rep.residual_max < 1e-9, "residual {}", rep.residual_max);
        assert!(rep.bound_check);
        assert!(rep.certified_tail);
        assert_eq!(rep.trajectory.kind, SolutionKind::PSolution);
        // Defect bound with the closed-form radius: |x_n - 2| <= 2^(1-n).
        for n in 1..=60u64 {
            let x_n = rep.trajectory.value(n).unwrap();
            assert!(
                (x_n - 2.0).abs() <= 2f64.powi(1 - n as i32) + 1e-10,
                "n={n}: {x_n}"
            );
        }
        // Replay: the construction must be self-consistent under the forward
        // recurrence started from its own initial values.
        let replay = forward_solve(&e, 1, &rep.trajectory.values[..1], opts.n_end).unwrap();
        let mut worst = 0.0f64;
        for n in 1..=opts.n_end {
            worst = worst.max((replay.value(n).unwrap() - rep.trajectory.value(n).unwrap()).abs());
        }
        assert!(worst < 1e-8, "replay deviates by {worst}");
        // Equivalence: x - y lies in o(0.6^n).
        let v = verify_equivalence_traj(
            &rep.trajectory,
            &y,
            &SpaceSpec::LittleOGeo { lambda: 0.6 },
            opts.n_end,
            &ClassifyOptions::default(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::InSpace, "{v:?}");
    }

    #[test]
    fn construct_handles_advancing_sigma() {
        // The fixed-point route has no causality constraint: sigma may look
        // ahead of the horizon, where x is extended by y.
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n+5");
        let y = Sequence::constant(2.0);
        let rep = construct_solution(&e, &y, 1, 1.0, &ConstructOpts {
            n_end: 256,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(rep.trajectory.kind, SolutionKind::PSolution);
        assert!(rep.residual_max < 1e-9);
        // The explicit forward recurrence rightly refuses the same map.
        assert!(matches!(
            forward_solve(&e, 1, &[2.0], 64),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn construct_rejects_wrong_y() {
        // y with delta y != b is not a coset representative.
        let e = eq(1, "geo(0.5)", "1", "sin(x)", "n");
        let y = Sequence::constant(2.0); // delta y = 0 != 1 = b
        assert!(matches!(
            construct_solution(&e, &y, 1, 1.0, &ConstructOpts {
                n_end: 64,
                ..Default::default()
            }),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn divergent_iteration_aborts_without_overclaiming() {
        // A steep f inside the certified region: |sin(50u)| <= 1 keeps the
        // ball check green, but the iteration map is far from contractive.
        // The report must refuse, not fabricate a solution.
        let e = eq(1, "geo(0.5)", "0", "sin(50*x)", "n");
        let y = Sequence::constant(2.0);
        match construct_solution(&e, &y, 1, 1.0, &ConstructOpts {
            n_end: 128,
            max_iter: 60,
            ..Default::default()
        }) {
            Err(Error::Convergence(msg)) => {
                assert!(msg.contains("existence not refuted"), "{msg}");
            }
            other => panic!("expected a convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn bounded_f_reaches_polynomial_targets() {
        // f continuous and bounded: any kernel element y is approached by a
        // solution; the defect lies in the geometric pair's Z = o(0.6^n).
        // Coefficients sampled across [-3, 3].
        for (m, coeffs) in [
            (1u32, vec![-2.5]),
            (1, vec![3.0]),
            (1, vec![0.0]),
            (2, vec![1.0, 0.25]),
            (2, vec![-3.0, 3.0]),
            (2, vec![0.5, -1.75]),
        ] {
            let e = eq(m, "geo(0.5)", "0", "sin(x)", "n");
            let poly = crate::pairs::poly_sequence(&coeffs).unwrap();
            let y = poly.to_sequence();
            let opts = ConstructOpts {
                n_end: 512,
                tol: 1e-10,
                max_iter: 120,
            };
            let rep = construct_solution(&e, &y, 1, 1.0, &opts).unwrap();
            assert_eq!(rep.trajectory.kind, SolutionKind::PSolution, "m={m}");
            assert!(rep.bound_check);
            let v = verify_equivalence_traj(
                &rep.trajectory,
                &y,
                &SpaceSpec::LittleOGeo { lambda: 0.6 },
                opts.n_end,
                &ClassifyOptions::default(),
            )
            .unwrap();
            assert_eq!(v.outcome, Outcome::InSpace, "m={m}: {v:?}");
        }
    }

    #[test]
    fn equivalence_examples() {
        let opts = ClassifyOptions::default();
        // Identical sequences: difference is identically zero.
        let y = seq("pow(n,-1)");
        let v = verify_equivalence(&y, &y.clone(), &SpaceSpec::LittleO1, 1, 500, &opts).unwrap();
        assert_eq!(v.outcome, Outcome::InSpace);
        // x = y + 1/n is not o(n^-2) away from y.
        let x = seq("pow(n,-1) + 5");
        let y = Sequence::constant(5.0);
        let v = verify_equivalence(&x, &y, &SpaceSpec::LittleOPow { s: -2.0 }, 1, 2000, &opts).unwrap();
        assert_eq!(v.outcome, Outcome::NotInSpace);
        // Constant offset never vanishes.
        let x = Sequence::constant(5.1);
        let v = verify_equivalence(&x, &y, &SpaceSpec::LittleO1, 1, 2000, &opts).unwrap();
        assert_eq!(v.outcome, Outcome::NotInSpace);
        // Too-short overlap is refused.
        assert!(verify_equivalence(&x, &y, &SpaceSpec::LittleO1, 1, 64, &opts).is_err());
    }

    #[test]
    fn tolerance_halving_does_not_worsen_residual() {
        let e = eq(1, "geo(0.5)", "0", "sin(x)", "n");
        let y = Sequence::constant(2.0);
        let mut last = f64::INFINITY;
        for tol in [1e-8, 5e-9, 2.5e-9] {
            let rep = construct_solution(&e, &y, 1, 1.0, &ConstructOpts {
                n_end: 256,
                tol,
                max_iter: 200,
            })
            .unwrap();
            assert!(
                rep.residual_max <= last * (1.0 + 1e-6) + 1e-15,
                "residual grew: {} after {}",
                rep.residual_max,
                last
            );
            last = rep.residual_max;
        }
    }
}
