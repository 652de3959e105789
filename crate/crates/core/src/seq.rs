//! Sequences over the positive integers, declared tail-decay models, exact
//! binomial coefficients and the iterated forward difference operator.
//!
//! A [`Sequence`] is an evaluator `n -> f64` for `n >= 1`, not a stored
//! array: the theory concerns infinite tails, and finite prefixes are only
//! materialized at computation boundaries. All arithmetic is `f64`;
//! exactness claims apply to integer binomials only.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// How many indices a declared tail model is sampled against.
const TAIL_CHECK_SAMPLES: u64 = 256;

/// Declared decay class of a sequence tail.
///
/// A model is a bound promise over the whole index range:
/// `Geometric { scale, ratio }` asserts `|a_n| <= scale * ratio^n`,
/// `Power { scale, exponent }` asserts `|a_n| <= scale * n^exponent`
/// and `Finite { zero_from }` asserts `a_n = 0` for `n >= zero_from`.
/// Models are declared (by the DSL or the caller) and sanity-checked by
/// sampling; they are never inferred from data.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    Geometric { scale: f64, ratio: f64 },
    Power { scale: f64, exponent: f64 },
    Finite { zero_from: u64 },
    Unknown,
}

impl TailModel {
    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometric tail scale must be positive and finite, got {scale}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0, 1) for a decaying tail, got {ratio}"
            )));
        }
        Ok(TailModel::Geometric { scale, ratio })
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power tail scale must be positive and finite, got {scale}"
            )));
        }
        if !exponent.is_finite() {
            return Err(Error::InvalidParameter(
                "power tail exponent must be finite".into(),
            ));
        }
        Ok(TailModel::Power { scale, exponent })
    }

    pub fn finite(zero_from: u64) -> Result<Self> {
        if zero_from == 0 {
            return Err(Error::InvalidParameter(
                "finite tail index must be a positive integer".into(),
            ));
        }
        Ok(TailModel::Finite { zero_from })
    }

    /// The bound the model promises at index `n`, `None` for `Unknown`.
    pub fn bound_at(&self, n: u64) -> Option<f64> {
        match *self {
            TailModel::Geometric { scale, ratio } => Some(scale * ratio.powi(n as i32)),
            TailModel::Power { scale, exponent } => Some(scale * (n as f64).powf(exponent)),
            TailModel::Finite { zero_from } => {
                if n >= zero_from {
                    Some(0.0)
                } else {
                    None
                }
            }
            TailModel::Unknown => None,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, TailModel::Unknown)
    }
}

impl fmt::Display for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TailModel::Geometric { scale, ratio } => write!(f, "geometric({scale}, {ratio})"),
            TailModel::Power { scale, exponent } => write!(f, "power({scale}, {exponent})"),
            TailModel::Finite { zero_from } => write!(f, "finite({zero_from})"),
            TailModel::Unknown => write!(f, "unknown"),
        }
    }
}

type Evaluator = dyn Fn(u64) -> Result<f64> + Send + Sync;

/// A real sequence indexed from 1: a total, deterministic evaluator plus an
/// optional tail-decay declaration and a label for reports.
#[derive(Clone)]
pub struct Sequence {
    label: String,
    tail: TailModel,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sequence")
            .field("label", &self.label)
            .field("tail", &self.tail)
            .finish()
    }
}

impl Sequence {
    pub fn from_fn<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(u64) -> Result<f64> + Send + Sync + 'static,
    {
        Sequence {
            label: label.into(),
            tail: TailModel::Unknown,
            eval: Arc::new(eval),
        }
    }

    /// The constant sequence `c`. Zero gets a `Finite(1)` tail.
    pub fn constant(c: f64) -> Self {
        let tail = if c == 0.0 {
            TailModel::Finite { zero_from: 1 }
        } else {
            TailModel::Power {
                scale: c.abs(),
                exponent: 0.0,
            }
        };
        Sequence {
            label: format!("{c}"),
            tail,
            eval: Arc::new(move |_| Ok(c)),
        }
    }

    /// `rho^n` with its geometric tail attached; requires `0 < rho < 1`.
    pub fn geometric(rho: f64) -> Result<Self> {
        let tail = TailModel::geometric(1.0, rho)?;
        Ok(Sequence {
            label: format!("geo({rho})"),
            tail,
            eval: Arc::new(move |n| Ok(rho.powi(n as i32))),
        })
    }

    /// `n^s` with its power tail attached.
    pub fn power_of_n(s: f64) -> Result<Self> {
        let tail = TailModel::power(1.0, s)?;
        Ok(Sequence {
            label: format!("pow(n,{s})"),
            tail,
            eval: Arc::new(move |n| Ok((n as f64).powf(s))),
        })
    }

    /// The unit sequence at index `p`: 1 at `p`, 0 elsewhere.
    pub fn impulse(p: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter(
                "impulse index must be a positive integer".into(),
            ));
        }
        Ok(Sequence {
            label: format!("impulse({p})"),
            tail: TailModel::Finite { zero_from: p + 1 },
            eval: Arc::new(move |n| Ok(if n == p { 1.0 } else { 0.0 })),
        })
    }

    /// Values at indices `1..=values.len()`, zero afterwards.
    pub fn from_table_padded(label: impl Into<String>, values: Vec<f64>) -> Self {
        let k = values.len() as u64;
        Sequence {
            label: label.into(),
            tail: TailModel::Finite { zero_from: k + 1 },
            eval: Arc::new(move |n| {
                if n >= 1 && n <= k {
                    Ok(values[(n - 1) as usize])
                } else {
                    Ok(0.0)
                }
            }),
        }
    }

    /// Values at indices `1..=values.len()`; evaluation beyond the table is
    /// an error unless the declared tail certifies zeros there.
    pub fn from_table(label: impl Into<String>, values: Vec<f64>, tail: TailModel) -> Result<Self> {
        let k = values.len() as u64;
        if let TailModel::Finite { zero_from } = tail {
            if zero_from > k + 1 {
                return Err(Error::InvalidParameter(format!(
                    "finite({zero_from}) tail declared but the table only covers indices 1..={k}"
                )));
            }
        }
        let seq = Sequence {
            label: label.into(),
            tail,
            eval: Arc::new(move |n| {
                if n >= 1 && n <= k {
                    Ok(values[(n - 1) as usize])
                } else if matches!(tail, TailModel::Finite { zero_from } if n >= zero_from) {
                    Ok(0.0)
                } else {
                    Err(Error::Eval {
                        index: n,
                        reason: format!("table sequence has no value beyond index {k}"),
                    })
                }
            }),
        };
        seq.check_tail_claim()?;
        Ok(seq)
    }

    /// Evaluate at `n >= 1`. Non-finite results are reported as domain
    /// violations, never returned.
    pub fn value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Eval {
                index: 0,
                reason: "sequences are indexed from 1".into(),
            });
        }
        let v = (self.eval)(n)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval {
                index: n,
                reason: format!("evaluator produced a non-finite value ({v})"),
            })
        }
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Attach a declared tail model, sanity-checking the claim by sampling.
    pub fn with_tail(mut self, tail: TailModel) -> Result<Self> {
        self.tail = tail;
        self.check_tail_claim()?;
        Ok(self)
    }

    /// Pointwise absolute value; the tail bound carries over unchanged.
    pub fn abs(&self) -> Sequence {
        let inner = Arc::clone(&self.eval);
        Sequence {
            label: format!("|{}|", self.label),
            tail: self.tail,
            eval: Arc::new(move |n| inner(n).map(f64::abs)),
        }
    }

    /// Scale by a constant; the tail scale follows.
    pub fn scaled(&self, factor: f64) -> Sequence {
        let inner = Arc::clone(&self.eval);
        let tail = match self.tail {
            TailModel::Geometric { scale, ratio } if factor != 0.0 => TailModel::Geometric {
                scale: scale * factor.abs(),
                ratio,
            },
            TailModel::Power { scale, exponent } if factor != 0.0 => TailModel::Power {
                scale: scale * factor.abs(),
                exponent,
            },
            TailModel::Finite { zero_from } => TailModel::Finite { zero_from },
            _ if factor == 0.0 => TailModel::Finite { zero_from: 1 },
            _ => TailModel::Unknown,
        };
        Sequence {
            label: format!("{} * ({})", factor, self.label),
            tail,
            eval: Arc::new(move |n| inner(n).map(|v| factor * v)),
        }
    }

    fn check_tail_claim(&self) -> Result<()> {
        // Sampling cannot prove the declaration; it catches blatant lies.
        for n in 1..=TAIL_CHECK_SAMPLES {
            let v = match self.value(n) {
                Ok(v) => v,
                // A partially-defined evaluator is caught elsewhere.
                Err(_) => continue,
            };
            if let Some(bound) = self.tail.bound_at(n) {
                // Small slack for the rounding in the bound evaluation itself.
                if v.abs() > bound * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::TailViolated(format!(
                        "|a_{n}| = {} exceeds the declared bound {} ({})",
                        v.abs(),
                        bound,
                        self.tail
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Exact binomial coefficient C(n, k); overflow is reported, never wrapped.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "binomial requires k <= n, got C({n}, {k})"
        )));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc stays equal to C(n - k + i, i), so it is exact at every step.
        acc = acc * (n - k + i) as u128 / i as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::BinomialOverflow { n, k });
        }
    }
    Ok(acc as u64)
}

/// C(n, k) as f64 for kernel weights with small k; exact while the integer
/// value fits 2^53.
pub(crate) fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    acc
}

/// The m-fold forward difference `(delta^m x)_n = sum_k (-1)^(m-k) C(m,k) x_{n+k}`.
///
/// The result's tail model is unknown unless `x` is finitely supported, in
/// which case the support bound carries over (delta^m Fin(p) = Fin(p)).
pub fn delta(x: &Sequence, m: u32) -> Result<Sequence> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "difference order m must be >= 1".into(),
        ));
    }
    let weights: Vec<f64> = (0..=m as u64)
        .map(|k| {
            let c = binomial_f64(m as u64, k);
            if (m as u64 - k).is_multiple_of(2) {
                c
            } else {
                -c
            }
        })
        .collect();
    let tail = match x.tail() {
        TailModel::Finite { zero_from } => TailModel::Finite { zero_from },
        _ => TailModel::Unknown,
    };
    let inner = x.clone();
    Ok(Sequence {
        label: format!("delta^{}({})", m, x.label()),
        tail,
        eval: Arc::new(move |n| {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                acc += w * inner.value(n + k as u64)?;
            }
            Ok(acc)
        }),
    })
}

/// Materialize `[x_1, ..., x_len]`.
pub fn sample_prefix(x: &Sequence, len: u64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::InvalidParameter(
            "sample length must be >= 1".into(),
        ));
    }
    (1..=len).map(|n| x.value(n)).collect()
}
