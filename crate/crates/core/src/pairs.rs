//! The catalog of named asymptotic difference pairs, polynomial kernels of
//! delta^m, the two delta^-m inversion routes, and instance-level checking
//! of the pair axioms.
//!
//! A pair (A, Z) of order m promises A inside delta^m Z, so every a in A is
//! delta^m z for some z in Z. For evanescent pairs (Z inside the null
//! sequences) that witness is z = (-1)^m r^m(a) and both facts are checked
//! numerically: the inversion residual delta^m z - a and the classified
//! membership of z in Z. Non-evanescent pairs invert through m-fold
//! cumulative sums instead (the remainder series diverge) and their
//! membership checks are best-effort growth classification.

use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::remainder::{remainder_sequence, RemainderOpts};
use crate::seq::{delta, Sequence, TailModel};
use crate::spaces::{classify_space, ClassifyOptions, Outcome, SpaceSpec, Verdict};

/// A named, fully parameterized asymptotic difference pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairSpec {
    pub name: String,
    pub m: u32,
    pub a_space: SpaceSpec,
    pub z_space: SpaceSpec,
    pub evanescent: bool,
}

/// Optional parameters for catalog lookup; each entry uses the ones it needs.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairParams {
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub lambda: Option<f64>,
    /// Support bound for the `fin` pair; may also be resolved per instance.
    pub p: Option<u64>,
}

/// Look up a catalog pair by name and validate its parameters against the
/// hypotheses of the underlying example.
///
/// Names: `power-evanescent` (s < -m), `power` ((s+1)...(s+m) != 0),
/// `geometric` (lambda in (0,1) or > 1), `A-to-pow` (s <= m-1),
/// `A-to-A` (t >= 1), `fin`.
pub fn lookup_pair(name: &str, m: u32, params: &PairParams) -> Result<PairSpec> {
    if m == 0 {
        return Err(Error::InvalidParameter("pair order m must be >= 1".into()));
    }
    let need = |opt: Option<f64>, what: &str| {
        opt.ok_or_else(|| Error::InvalidParameter(format!("pair `{name}` needs parameter {what}")))
    };
    match name {
        "power-evanescent" => {
            let s = need(params.s, "s")?;
            if !(s < -(m as f64)) {
                return Err(Error::InvalidParameter(format!(
                    "power-evanescent pair requires s < -m, got s = {s}, m = {m}"
                )));
            }
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: SpaceSpec::LittleOPow { s },
                z_space: SpaceSpec::LittleOPow { s: s + m as f64 },
                evanescent: true,
            })
        }
        "power" => {
            let s = need(params.s, "s")?;
            for i in 1..=m {
                if s + i as f64 == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power pair requires (s+1)(s+2)...(s+m) != 0; s = {s} makes factor s+{i} vanish"
                    )));
                }
            }
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: SpaceSpec::LittleOPow { s },
                z_space: SpaceSpec::LittleOPow { s: s + m as f64 },
                evanescent: s + (m as f64) < 0.0,
            })
        }
        "geometric" => {
            let lambda = need(params.lambda, "lambda")?;
            if !(lambda > 0.0 && lambda != 1.0 && lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "geometric pair requires lambda in (0,1) or (1,inf), got {lambda}"
                )));
            }
            let space = SpaceSpec::LittleOGeo { lambda };
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: space,
                z_space: space,
                evanescent: lambda < 1.0,
            })
        }
        "A-to-pow" => {
            let s = need(params.s, "s")?;
            if !(s <= m as f64 - 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "A-to-pow pair requires s <= m-1 so that A(m-s) is defined, got s = {s}"
                )));
            }
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: SpaceSpec::A { t: m as f64 - s },
                z_space: SpaceSpec::LittleOPow { s },
                evanescent: s <= 0.0,
            })
        }
        "A-to-A" => {
            let t = need(params.t, "t")?;
            if !(t >= 1.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "A-to-A pair requires t >= 1, got {t}"
                )));
            }
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: SpaceSpec::A { t: t + m as f64 },
                z_space: SpaceSpec::A { t },
                evanescent: true,
            })
        }
        "fin" => {
            let p = params.p.unwrap_or(1);
            Ok(PairSpec {
                name: name.into(),
                m,
                a_space: SpaceSpec::Fin { zero_from: p },
                z_space: SpaceSpec::Fin { zero_from: p },
                evanescent: true,
            })
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown pair `{other}`; catalog: power-evanescent, power, geometric, A-to-pow, A-to-A, fin"
        ))),
    }
}

/// A polynomial sequence `n -> sum c_k n^k` of degree < m; the kernel of
/// delta^m supplies the coset freedom of delta^-m.
#[derive(Clone, Debug)]
pub struct PolynomialSeq {
    coeffs: Vec<f64>,
}

impl PolynomialSeq {
    pub fn zero() -> Self {
        PolynomialSeq { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        PolynomialSeq { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, n: u64) -> f64 {
        let x = n as f64;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn to_sequence(&self) -> Sequence {
        let poly = self.clone();
        let tail = if self.coeffs.iter().all(|c| *c == 0.0) {
            TailModel::Finite { zero_from: 1 }
        } else {
            TailModel::Power {
                scale: self.coeffs.iter().map(|c| c.abs()).sum(),
                exponent: self.degree() as f64,
            }
        };
        Sequence::from_fn(format!("poly{:?}", self.coeffs), move |n| Ok(poly.eval(n)))
            .with_tail(tail)
            .expect("polynomial bound is valid by construction")
    }
}

/// Build a polynomial sequence from coefficients `c_0..c_{k-1}`.
pub fn poly_sequence(coeffs: &[f64]) -> Result<PolynomialSeq> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(
            "polynomial coefficients must be finite".into(),
        ));
    }
    Ok(PolynomialSeq {
        coeffs: coeffs.to_vec(),
    })
}

/// The running-sum sequence S(b): S_1 = 0, S_{n+1} = S_n + b_n, so that
/// delta S = b. Prefix sums are cached.
fn cumulative_sum(b: &Sequence) -> Sequence {
    struct State {
        b: Sequence,
        // prefix[i] = S_{i+1}; prefix[0] = 0.
        prefix: RwLock<Vec<f64>>,
    }
    impl State {
        fn value(&self, n: u64) -> Result<f64> {
            {
                let p = self.prefix.read().unwrap();
                if (n as usize) <= p.len() {
                    return Ok(p[n as usize - 1]);
                }
            }
            let mut p = self.prefix.write().unwrap();
            if p.is_empty() {
                p.push(0.0);
            }
            while (p.len() as u64) < n {
                let k = p.len() as u64; // next index to fill is k+1; S_{k+1} = S_k + b_k
                let last = *p.last().unwrap();
                p.push(last + self.b.value(k)?);
            }
            Ok(p[n as usize - 1])
        }
    }
    let st = Arc::new(State {
        b: b.clone(),
        prefix: RwLock::new(Vec::new()),
    });
    let label = format!("cumsum({})", b.label());
    Sequence::from_fn(label.clone(), move |n| st.value(n)).with_label(label)
}

/// Which inverse of delta^m to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum InverseRoute {
    /// `y = poly + (-1)^m r^m(b)`; needs a certified A(m) tail on b.
    Remainder,
    /// `y = poly + S^m(b)` with zero seeds; works for any b, but the
    /// asymptotics of y are uncertified.
    CumulativeSum,
    /// Remainder when the tail permits it, cumulative sums otherwise.
    Auto,
}

/// A representative of `delta^-m b`, i.e. a sequence y with `delta^m y = b`,
/// shifted by the polynomial coset representative. The residual
/// `|delta^m y - b|` is verified on a sampled prefix before returning.
pub fn delta_inverse(
    b: &Sequence,
    m: u32,
    poly: &PolynomialSeq,
    tol: f64,
    route: InverseRoute,
) -> Result<Sequence> {
    if m == 0 {
        return Err(Error::InvalidParameter("order m must be >= 1".into()));
    }
    if poly.coeffs.len() > m as usize {
        return Err(Error::InvalidParameter(format!(
            "coset polynomial must have degree < m = {m}, got {} coefficients",
            poly.coeffs.len()
        )));
    }
    let admissible = matches!(
        b.tail(),
        TailModel::Finite { .. } | TailModel::Geometric { .. }
    ) || matches!(b.tail(), TailModel::Power { exponent, .. } if exponent < -(m as f64));
    let use_remainder = match route {
        InverseRoute::Remainder => {
            if !admissible {
                return Err(Error::TailUnsupported(format!(
                    "remainder route needs a certified A({m}) tail; `{}` has {}",
                    b.label(),
                    b.tail()
                )));
            }
            true
        }
        InverseRoute::CumulativeSum => false,
        InverseRoute::Auto => admissible,
    };

    let y = if use_remainder {
        let opts = RemainderOpts::tol(tol / 2f64.powi(m as i32 + 1));
        let r = remainder_sequence(b, m, opts)?;
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let signed = r.scaled(sign);
        let p = poly.clone();
        let tail = signed.tail();
        let seq = Sequence::from_fn(format!("delta^-{}({})", m, b.label()), move |n| {
            Ok(p.eval(n) + signed.value(n)?)
        });
        if poly.coeffs.iter().all(|c| *c == 0.0) {
            match tail {
                TailModel::Unknown => seq,
                t => seq.with_tail(t)?,
            }
        } else {
            seq
        }
    } else {
        let mut acc = b.clone();
        for _ in 0..m {
            acc = cumulative_sum(&acc);
        }
        let p = poly.clone();
        Sequence::from_fn(format!("delta^-{}({})", m, b.label()), move |n| {
            Ok(p.eval(n) + acc.value(n)?)
        })
    };

    // Residual spot check on a sampled prefix.
    let d = delta(&y, m)?;
    for n in 1..=64u64 {
        let resid = (d.value(n)? - b.value(n)?).abs();
        if resid >= tol {
            return Err(Error::Convergence(format!(
                "delta^-{m} residual {resid:.3e} at n = {n} exceeds tol {tol:.3e}"
            )));
        }
    }
    Ok(y)
}

/// Report from checking one pair instance.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairCheckReport {
    pub pair: PairSpec,
    pub precondition: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precondition_warning: Option<String>,
    pub route: InverseRoute,
    /// max over the window of |delta^m z - a|.
    pub inversion_residual: f64,
    pub inversion_ok: bool,
    pub membership: Verdict,
    pub passed: bool,
}

/// Verify a pair instance: given a in A, produce the witness z with
/// `delta^m z = a` and check both the inversion residual (within `tol` for
/// n <= check_n) and the classified membership of z in Z.
pub fn check_pair_instance(
    pair: &PairSpec,
    a: &Sequence,
    check_n: u64,
    tol: f64,
) -> Result<PairCheckReport> {
    if check_n < 64 {
        return Err(Error::InvalidParameter(
            "pair instance check needs N >= 64".into(),
        ));
    }
    let opts = ClassifyOptions {
        n_samples: check_n,
        ..ClassifyOptions::default()
    };
    // The fin pair quantifies over all supports; resolve the instance's one.
    let (a_space, z_space) = if pair.name == "fin" {
        match a.tail() {
            TailModel::Finite { zero_from } => (
                SpaceSpec::Fin { zero_from },
                SpaceSpec::Fin { zero_from },
            ),
            _ => (pair.a_space, pair.z_space),
        }
    } else {
        (pair.a_space, pair.z_space)
    };

    let pre = classify_space(a, &a_space, &opts)?;
    let precondition = pre.verdict.clone();
    let precondition_warning = match precondition.outcome {
        Outcome::NotInSpace => {
            return Err(Error::Precondition(format!(
                "`{}` classified NotInSpace for {} (pair `{}`)",
                a.label(),
                a_space,
                pair.name
            )))
        }
        Outcome::Inconclusive => Some(format!(
            "membership of `{}` in {} is inconclusive; proceeding anyway",
            a.label(),
            a_space
        )),
        Outcome::InSpace => None,
    };

    let sign = if pair.m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (z_check, z_classify, route) = if pair.evanescent {
        // Two truncation profiles of the same witness: absolute accuracy for
        // the inversion residual at small n, relative accuracy so that ratio
        // statistics of z stay meaningful at large n.
        let abs_opts = RemainderOpts::tol(tol / 2f64.powi(pair.m as i32 + 1));
        let rel_opts = RemainderOpts {
            tol: 1e-12,
            rel_target: Some(1e-6),
            ..Default::default()
        };
        let zc = remainder_sequence(a, pair.m, abs_opts)?.scaled(sign);
        let zm = remainder_sequence(a, pair.m, rel_opts)?.scaled(sign);
        (zc, zm, InverseRoute::Remainder)
    } else {
        let mut acc = a.clone();
        for _ in 0..pair.m {
            acc = cumulative_sum(&acc);
        }
        (acc.clone(), acc, InverseRoute::CumulativeSum)
    };

    let d = delta(&z_check, pair.m)?;
    let mut inversion_residual = 0.0f64;
    for n in 1..=check_n {
        let resid = (d.value(n)? - a.value(n)?).abs();
        if resid > inversion_residual {
            inversion_residual = resid;
        }
    }
    let inversion_ok = inversion_residual < tol;

    let membership = classify_space(&z_classify, &z_space, &opts)?.verdict;
    let passed = inversion_ok && membership.outcome == Outcome::InSpace;
    Ok(PairCheckReport {
        pair: pair.clone(),
        precondition,
        precondition_warning,
        route,
        inversion_residual,
        inversion_ok,
        membership,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_sequence_spec;

    fn seq(text: &str) -> Sequence {
        parse_sequence_spec(text).unwrap()
    }

    #[test]
    fn lookup_examples() {
        let p = lookup_pair(
            "A-to-A",
            2,
            &PairParams {
                t: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.a_space, SpaceSpec::A { t: 3.0 });
        assert_eq!(p.z_space, SpaceSpec::A { t: 1.0 });
        assert!(p.evanescent);

        let p = lookup_pair(
            "power-evanescent",
            2,
            &PairParams {
                s: Some(-3.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.a_space, SpaceSpec::LittleOPow { s: -3.0 });
        assert_eq!(p.z_space, SpaceSpec::LittleOPow { s: -1.0 });
        assert!(p.evanescent);

        // Example hypothesis: (s+1)...(s+m) must not vanish.
        assert!(lookup_pair(
            "power",
            1,
            &PairParams {
                s: Some(-1.0),
                ..Default::default()
            }
        )
        .is_err());
        // s = 0.5 is fine and gives a non-evanescent pair for m = 1.
        let p = lookup_pair(
            "power",
            1,
            &PairParams {
                s: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!p.evanescent);

        assert!(lookup_pair("frobnicate", 1, &PairParams::default()).is_err());
        assert!(lookup_pair(
            "geometric",
            2,
            &PairParams {
                lambda: Some(1.0),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn polynomial_sequences_lie_in_the_kernel() {
        let c = poly_sequence(&[5.0]).unwrap();
        let d = delta(&c.to_sequence(), 1).unwrap();
        for n in 1..=50 {
            assert_eq!(d.value(n).unwrap(), 0.0);
        }
        let lin = poly_sequence(&[0.0, 1.0]).unwrap();
        let d = delta(&lin.to_sequence(), 2).unwrap();
        for n in 1..=50 {
            assert_eq!(d.value(n).unwrap(), 0.0);
        }
        let q = poly_sequence(&[1.0, 2.0, 3.0]).unwrap();
        let d = delta(&q.to_sequence(), 3).unwrap();
        for n in 1..=100 {
            assert!(d.value(n).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn delta_inverse_examples() {
        // b = 0 with a constant coset representative.
        let y = delta_inverse(
            &Sequence::constant(0.0),
            1,
            &PolynomialSeq::constant(3.5),
            1e-10,
            InverseRoute::Auto,
        )
        .unwrap();
        for n in 1..=20 {
            assert_eq!(y.value(n).unwrap(), 3.5);
        }

        // b = geo(0.5), remainder route: y_n = -2^(1-n).
        let y = delta_inverse(
            &seq("geo(0.5)"),
            1,
            &PolynomialSeq::zero(),
            1e-10,
            InverseRoute::Remainder,
        )
        .unwrap();
        for n in 1..=30u64 {
            let expect = -(2f64.powi(1 - n as i32));
            assert!((y.value(n).unwrap() - expect).abs() < 1e-10, "n={n}");
        }

        // b = 1, cumulative route with zero seeds: y_n = n - 1.
        let y = delta_inverse(
            &Sequence::constant(1.0),
            1,
            &PolynomialSeq::zero(),
            1e-10,
            InverseRoute::CumulativeSum,
        )
        .unwrap();
        for n in 1..=20 {
            assert_eq!(y.value(n).unwrap(), (n - 1) as f64);
        }

        // The remainder route refuses non-summable tails.
        assert!(matches!(
            delta_inverse(
                &Sequence::constant(1.0),
                1,
                &PolynomialSeq::zero(),
                1e-10,
                InverseRoute::Remainder
            ),
            Err(Error::TailUnsupported(_))
        ));
    }

    #[test]
    fn inverse_routes_agree_up_to_polynomials() {
        // Both routes invert delta^m, so their difference lies in Pol(m-1).
        let b = seq("geo(0.5)");
        for m in 1..=2u32 {
            let yr = delta_inverse(&b, m, &PolynomialSeq::zero(), 1e-10, InverseRoute::Remainder)
                .unwrap();
            let yc =
                delta_inverse(&b, m, &PolynomialSeq::zero(), 1e-10, InverseRoute::CumulativeSum)
                    .unwrap();
            let diff = Sequence::from_fn("route-diff", move |n| {
                Ok(yr.value(n)? - yc.value(n)?)
            });
            let d = delta(&diff, m).unwrap();
            for n in 1..=100 {
                assert!(d.value(n).unwrap().abs() < 1e-8, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn inverses_of_close_inputs_stay_close() {
        // a - b in A implies delta^-m a and delta^-m b differ by an element
        // of Z (here through the remainder route, pair A-to-A m=2, t=1).
        let a = seq("pow(n,-4)");
        let b = seq("pow(n,-4) + pow(n,-3.6)");
        let ya = delta_inverse(&a, 2, &PolynomialSeq::zero(), 1e-8, InverseRoute::Remainder).unwrap();
        let yb = delta_inverse(&b, 2, &PolynomialSeq::zero(), 1e-8, InverseRoute::Remainder).unwrap();
        let diff = Sequence::from_fn("ya-yb", move |n| Ok(ya.value(n)? - yb.value(n)?));
        // a - b = -pow(n,-3.6) lies in A(3); the difference of inverses must
        // lie in Z = A(1). Its decay is n^-1.6, caught by the cascade.
        let c = classify_space(
            &diff,
            &SpaceSpec::A { t: 1.0 },
            &ClassifyOptions {
                n_samples: 192,
                oracle_n: 20_000,
                ..ClassifyOptions::default()
            },
        )
        .unwrap();
        assert_eq!(c.verdict.outcome, Outcome::InSpace, "{:?}", c.verdict);
    }

    #[test]
    fn check_pair_instances_pass() {
        // (A(3), A(1)) with a = pow(n,-4.5): z decays like n^-2.5.
        let pair = lookup_pair(
            "A-to-A",
            2,
            &PairParams {
                t: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        let rep = check_pair_instance(&pair, &seq("pow(n,-4.5)"), 192, 1e-8).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.route, InverseRoute::Remainder);

        // (o(n^-3), o(n^-1)) with a = pow(n,-3.5): z decays like n^-1.5.
        let pair = lookup_pair(
            "power-evanescent",
            2,
            &PairParams {
                s: Some(-3.0),
                ..Default::default()
            },
        )
        .unwrap();
        let rep = check_pair_instance(&pair, &seq("pow(n,-3.5)"), 192, 1e-8).unwrap();
        assert!(rep.passed, "{rep:?}");

        // Fin pair with an impulse: exact zeros beyond the support.
        let pair = lookup_pair("fin", 2, &PairParams::default()).unwrap();
        let rep = check_pair_instance(&pair, &Sequence::impulse(4).unwrap(), 64, 1e-10).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.inversion_residual, 0.0);

        // Non-evanescent power pair goes through cumulative sums.
        let pair = lookup_pair(
            "power",
            1,
            &PairParams {
                s: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        let rep = check_pair_instance(&pair, &seq("pow(n,0.25)"), 192, 1e-8).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.route, InverseRoute::CumulativeSum);
        assert!(!rep.membership.certified);
    }

    #[test]
    fn check_pair_refuses_bad_precondition() {
        let pair = lookup_pair(
            "A-to-A",
            2,
            &PairParams {
                t: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        // pow(n,-2) is decisively outside A(3).
        assert!(matches!(
            check_pair_instance(&pair, &seq("pow(n,-2)"), 128, 1e-8),
            Err(Error::Precondition(_))
        ));
    }
}
