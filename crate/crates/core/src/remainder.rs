//! The iterated remainder operator of order m,
//! `r^m(a)(n) = sum_{j >= n} C(m-1+j-n, m-1) a_j`,
//! with truncated evaluation and certified tail bounds.
//!
//! The binomial form is valid on the absolutely-admissible class A(m)
//! (sum of n^(m-1)|a_n| finite), which is where this module operates:
//! conditionally but not absolutely m-summable sequences are refused.
//! Truncation sums forward from j = n and stops once the certified bound on
//! the remaining binomial-weighted tail drops below the target. Without a
//! usable tail model the caller must opt into uncertified heuristics, and
//! results are flagged accordingly.
//!
//! Tail bounds, anchored at `n` and truncated at `J`:
//!
//! * geometric `|a_j| <= C rho^j`: the remaining tail is at most
//!   `C * C(m-1+J-n, m-1) * rho^J * (1-rho)^-m`, using
//!   `C(m-1+i0+i, m-1) <= C(m-1+i0, m-1) C(m-1+i, m-1)` and the binomial
//!   series `sum_i C(m-1+i, m-1) rho^i = (1-rho)^-m`;
//! * power `|a_j| <= C j^s`, `s < -m`: the kernel inequality
//!   `C(m-1+j-n, m-1) <= (j-n+1)^(m-1) <= j^(m-1)` reduces the tail to
//!   `C * sum_{j >= J} j^(m-1+s) <= C (J-1)^(m+s) / (-(m+s))` by integral
//!   comparison;
//! * finite support: the sum is finite, hence exact.
//!
//! Bounds account for truncation; double-precision summation rounding is a
//! few ulps of the partial sum and is not folded in.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use crate::error::{Error, Result};
use crate::seq::{binomial_f64, Sequence, TailModel};
use crate::spaces::{direct_sum_oracle, Outcome, Verdict};

/// Fallback guard band for verdicts derived from tail declarations.
const DEFAULT_BAND: f64 = 0.05;

/// Entries cached in the shared a-value prefix (32 MB of f64 at the cap).
const PREFIX_CACHE_CAP: usize = 1 << 22;

/// One truncated remainder evaluation.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct RemainderResult {
    pub value: f64,
    /// First index beyond the summed range.
    pub truncation_index: u64,
    /// Certified bound on |true value - value|; `None` when uncertified.
    pub tail_bound: Option<f64>,
    pub certified: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct RemainderOpts {
    /// Absolute truncation target (and floor, in relative mode).
    pub tol: f64,
    /// Permit heuristic truncation when no usable tail model exists.
    pub allow_uncertified: bool,
    /// Optional relative target: stop once the tail bound is below
    /// `max(tol, rel_target * |partial|)`. Keeps ratio statistics of
    /// remainder sequences meaningful at large n.
    pub rel_target: Option<f64>,
    pub max_terms: u64,
}

impl Default for RemainderOpts {
    fn default() -> Self {
        RemainderOpts {
            tol: 1e-10,
            allow_uncertified: false,
            rel_target: None,
            max_terms: 50_000_000,
        }
    }
}

impl RemainderOpts {
    pub fn tol(tol: f64) -> Self {
        RemainderOpts {
            tol,
            ..Default::default()
        }
    }

    fn target(&self, partial: f64) -> f64 {
        match self.rel_target {
            Some(r) => (r * partial.abs()).max(self.tol),
            None => self.tol,
        }
    }
}

/// Bound on `sum_{j >= from} C(m-1+j-anchor, m-1) |a_j|` under a tail model.
fn kernel_tail_bound(model: TailModel, m: u32, anchor: u64, from: u64) -> Option<f64> {
    debug_assert!(from >= anchor && anchor >= 1);
    match model {
        TailModel::Geometric { scale, ratio } => {
            let binom = binomial_f64(m as u64 - 1 + (from - anchor), m as u64 - 1);
            Some(scale * binom * ratio.powi(from as i32) * (1.0 - ratio).powi(-(m as i32)))
        }
        TailModel::Power { scale, exponent } => {
            let q = m as f64 + exponent;
            if q >= 0.0 {
                return None;
            }
            Some(if from >= 2 {
                scale * ((from - 1) as f64).powf(q) / (-q)
            } else {
                scale * (1.0 + 1.0 / (-q))
            })
        }
        TailModel::Finite { zero_from } => {
            if from >= zero_from {
                Some(0.0)
            } else {
                None
            }
        }
        TailModel::Unknown => None,
    }
}

/// Upper bound on the binomial-weighted tail
/// `sum_{j >= from} C(m-1+j-from, m-1) |a_j|` from the model alone.
pub fn tail_bound(model: TailModel, m: u32, from: u64) -> Result<f64> {
    if m == 0 || from == 0 {
        return Err(Error::InvalidParameter(
            "tail_bound needs m >= 1 and from >= 1".into(),
        ));
    }
    match model {
        TailModel::Unknown => Err(Error::TailUnsupported(
            "no tail bound without a declared model".into(),
        )),
        TailModel::Power { exponent, .. } if m as f64 + exponent >= 0.0 => {
            Err(Error::TailUnsupported(format!(
                "power tail with exponent {exponent} >= -{m} is not in A({m})"
            )))
        }
        TailModel::Finite { zero_from } if from < zero_from => Err(Error::TailUnsupported(
            format!("finite tail starts at {zero_from}; values before it are unmodeled"),
        )),
        model => Ok(kernel_tail_bound(model, m, from, from)
            .expect("admissible models always produce a bound")),
    }
}

fn admissible(model: TailModel, m: u32) -> Result<()> {
    match model {
        TailModel::Geometric { .. } | TailModel::Finite { .. } => Ok(()),
        TailModel::Power { exponent, .. } => {
            if m as f64 + exponent < 0.0 {
                Ok(())
            } else {
                Err(Error::TailUnsupported(format!(
                    "power tail exponent {exponent} >= -{m}: not absolutely m-summable"
                )))
            }
        }
        TailModel::Unknown => Err(Error::UncertifiedRefused(
            "sequence has no tail model; pass the uncertified-ok flag to proceed heuristically"
                .into(),
        )),
    }
}

/// Evaluate `r^m(a)(n)` with certified truncation error at most `tol`.
pub fn remainder(a: &Sequence, m: u32, n: u64, tol: f64) -> Result<RemainderResult> {
    remainder_with(a, m, n, &RemainderOpts::tol(tol))
}

/// Evaluate `r^m(a)(n)` under explicit truncation options.
pub fn remainder_with(a: &Sequence, m: u32, n: u64, opts: &RemainderOpts) -> Result<RemainderResult> {
    check_args(m, n, opts.tol)?;
    let eval = |j: u64| a.value(j);
    remainder_impl(&eval, a.tail(), m, n, opts)
}

fn check_args(m: u32, n: u64, tol: f64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "remainder needs order m >= 1 and index n >= 1".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    Ok(())
}

fn remainder_impl(
    a_value: &dyn Fn(u64) -> Result<f64>,
    tail: TailModel,
    m: u32,
    n: u64,
    opts: &RemainderOpts,
) -> Result<RemainderResult> {
    if let TailModel::Finite { zero_from } = tail {
        // Finite support: the binomial sum is finite and exact.
        let mut partial = 0.0;
        let mut w = 1.0;
        let mut j = n;
        while j < zero_from {
            partial += w * a_value(j)?;
            let i = j - n;
            w *= (m as u64 + i) as f64 / (i + 1) as f64;
            j += 1;
        }
        return Ok(RemainderResult {
            value: partial,
            truncation_index: j,
            tail_bound: Some(0.0),
            certified: true,
        });
    }

    match admissible(tail, m) {
        Ok(()) => {
            let mut partial = 0.0;
            let mut w = 1.0;
            let mut i = 0u64;
            loop {
                let j = n + i;
                if i.is_multiple_of(64) {
                    let bound = kernel_tail_bound(tail, m, n, j)
                        .expect("admissible models always produce a bound");
                    if bound <= opts.target(partial) {
                        return Ok(RemainderResult {
                            value: partial,
                            truncation_index: j,
                            tail_bound: Some(bound),
                            certified: true,
                        });
                    }
                    if i >= opts.max_terms {
                        return Err(Error::TruncationUnreachable(format!(
                            "tail bound still {bound:.3e} after {i} terms (target {:.3e}, r^{m} at n = {n})",
                            opts.target(partial)
                        )));
                    }
                }
                partial += w * a_value(j)?;
                w *= (m as u64 + i) as f64 / (i + 1) as f64;
                i += 1;
            }
        }
        Err(refusal) => {
            if !opts.allow_uncertified {
                return Err(refusal);
            }
            // Heuristic: stop when a block of 64 terms stops mattering
            // relative to the partial sum; abort if block magnitudes keep
            // growing (the weighted series looks divergent).
            let mut partial = 0.0;
            let mut w = 1.0;
            let mut i = 0u64;
            let mut recent: [f64; 3] = [f64::INFINITY; 3];
            loop {
                let mut block = 0.0;
                for _ in 0..64 {
                    let j = n + i;
                    block += w * a_value(j)?;
                    w *= (m as u64 + i) as f64 / (i + 1) as f64;
                    i += 1;
                }
                partial += block;
                let mag = block.abs();
                recent.rotate_left(1);
                recent[2] = mag;
                if mag <= opts.tol * partial.abs().max(1.0) {
                    return Ok(RemainderResult {
                        value: partial,
                        truncation_index: n + i,
                        tail_bound: None,
                        certified: false,
                    });
                }
                if recent[0].is_finite() && recent[0] > 0.0 && recent[1] >= recent[0] && recent[2] >= recent[1]
                {
                    return Err(Error::Diverging(format!(
                        "uncertified r^{m} at n = {n}: partial increments non-decreasing \
                         over three consecutive blocks"
                    )));
                }
                if i >= opts.max_terms {
                    return Err(Error::TruncationUnreachable(format!(
                        "uncertified r^{m} at n = {n}: no convergence after {i} terms"
                    )));
                }
            }
        }
    }
}

/// How the tail model of `a` carries over to `r^m(a)`:
/// geometric stays geometric with an inflated scale, a power tail loses m
/// orders, finite support is preserved (r^m Fin(p) = Fin(p)).
fn derived_tail(tail: TailModel, m: u32) -> TailModel {
    match tail {
        TailModel::Geometric { scale, ratio } => TailModel::Geometric {
            scale: scale * (1.0 - ratio).powi(-(m as i32)),
            ratio,
        },
        TailModel::Power { scale, exponent } => {
            let q = m as f64 + exponent;
            if q < 0.0 {
                // r^m_n |a| <= C (n-1)^(m+s) / -(m+s) <= C 2^-(m+s)/-(m+s) n^(m+s)
                TailModel::Power {
                    scale: scale * 2f64.powf(-q) / (-q),
                    exponent: q,
                }
            } else {
                TailModel::Unknown
            }
        }
        TailModel::Finite { zero_from } => TailModel::Finite { zero_from },
        TailModel::Unknown => TailModel::Unknown,
    }
}

/// `r^m(a)` as a lazy sequence: values are computed on demand with the
/// requested truncation options and cached (append-only, idempotent).
pub fn remainder_sequence(a: &Sequence, m: u32, opts: RemainderOpts) -> Result<Sequence> {
    check_args(m, 1, opts.tol)?;
    if !opts.allow_uncertified {
        admissible(a.tail(), m)?;
    }
    let tail = derived_tail(a.tail(), m);
    let label = format!("r^{}({})", m, a.label());
    let inner = RemainderSeqState {
        a: a.clone(),
        m,
        opts,
        prefix: RwLock::new(Arc::new(Vec::new())),
        cache: Mutex::new(HashMap::new()),
    };
    let state = Arc::new(inner);
    let seq = Sequence::from_fn(label.clone(), move |n| state.value(n)).with_label(label);
    match tail {
        TailModel::Unknown => Ok(seq),
        t => seq.with_tail(t),
    }
}

struct RemainderSeqState {
    a: Sequence,
    m: u32,
    opts: RemainderOpts,
    /// Cached a_1..a_k prefix so that many-index evaluations of slowly
    /// decaying tails do not re-evaluate the same terms. Grows by doubling;
    /// readers take an Arc snapshot and index it without further locking.
    prefix: RwLock<Arc<Vec<f64>>>,
    cache: Mutex<HashMap<u64, f64>>,
}

impl RemainderSeqState {
    /// Snapshot the prefix, extended to cover index `j` (capped).
    fn ensure(&self, j: u64) -> Result<Arc<Vec<f64>>> {
        {
            let g = self.prefix.read().unwrap();
            if g.len() as u64 >= j {
                return Ok(Arc::clone(&g));
            }
        }
        let mut g = self.prefix.write().unwrap();
        if (g.len() as u64) < j {
            let target = j
                .max(g.len() as u64 * 2)
                .max(4096)
                .min(PREFIX_CACHE_CAP as u64);
            let mut v: Vec<f64> = (**g).clone();
            let mut idx = v.len() as u64 + 1;
            while idx <= target {
                match self.a.value(idx) {
                    Ok(x) => v.push(x),
                    Err(e) => {
                        if idx <= j {
                            return Err(e);
                        }
                        break;
                    }
                }
                idx += 1;
            }
            *g = Arc::new(v);
        }
        Ok(Arc::clone(&g))
    }

    fn value(&self, n: u64) -> Result<f64> {
        if let Some(v) = self.cache.lock().unwrap().get(&n) {
            return Ok(*v);
        }
        let snap = std::cell::RefCell::new(self.ensure(n.min(PREFIX_CACHE_CAP as u64))?);
        let eval = |j: u64| -> Result<f64> {
            {
                let s = snap.borrow();
                if j as usize <= s.len() {
                    return Ok(s[(j - 1) as usize]);
                }
            }
            if j as usize > PREFIX_CACHE_CAP {
                return self.a.value(j);
            }
            let grown = self.ensure(j)?;
            if j as usize <= grown.len() {
                let v = grown[(j - 1) as usize];
                *snap.borrow_mut() = grown;
                Ok(v)
            } else {
                self.a.value(j)
            }
        };
        let res = remainder_impl(&eval, self.a.tail(), self.m, n, &self.opts)?;
        self.cache.lock().unwrap().entry(n).or_insert(res.value);
        Ok(res.value)
    }
}

/// Membership of `a` in A(m), decided from the declared tail model when one
/// exists (the DSL declares tight decay classes), otherwise delegated to the
/// direct partial-sum oracle at t = m.
pub fn in_a_m(a: &Sequence, m: u32) -> Result<Verdict> {
    if m == 0 {
        return Err(Error::InvalidParameter("order m must be >= 1".into()));
    }
    let model_verdict = |outcome, statistic: f64, margin: f64, note: &str| {
        let mut v = Verdict {
            test_name: "tail-model".into(),
            outcome,
            statistic,
            margin,
            window: (0, 0),
            certified: true,
            note: Some(note.to_string()),
        };
        v.margin = v.margin.max(DEFAULT_BAND);
        v
    };
    match a.tail() {
        TailModel::Geometric { .. } => Ok(model_verdict(
            Outcome::InSpace,
            f64::INFINITY,
            f64::INFINITY,
            "geometric tails lie in A(t) for every t",
        )),
        TailModel::Finite { .. } => Ok(model_verdict(
            Outcome::InSpace,
            f64::INFINITY,
            f64::INFINITY,
            "finitely supported",
        )),
        TailModel::Power { exponent, .. } => {
            let dist = (exponent + m as f64).abs();
            if exponent < -(m as f64) {
                Ok(model_verdict(
                    Outcome::InSpace,
                    -exponent,
                    dist,
                    "declared power decay below -m",
                ))
            } else {
                Ok(model_verdict(
                    Outcome::NotInSpace,
                    -exponent,
                    dist,
                    "declared power decay at or above -m",
                ))
            }
        }
        TailModel::Unknown => direct_sum_oracle(a, m as f64, 100_000, DEFAULT_BAND),
    }
}
