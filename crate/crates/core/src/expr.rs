//! The small expression DSL for sequences, scalar functions and delay maps.
//!
//! Grammar:
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := factor (('*'|'/') factor)*
//! factor  := ('-')* atom ['^' number]
//! atom    := number | var | builtin '(' args ')' | '(' expr ')'
//! builtin := pow | geo | ln | sin | cos | exp | abs | min | max | impulse | table
//! ```
//!
//! Sequence expressions use the variable `n`; scalar function expressions use
//! `x` and reject the sequence-only builtins (`geo`, `impulse`, `table`).
//! `geo(rho)` denotes `rho^n` and carries a geometric tail, `pow(n, s)` with a
//! constant exponent carries a power tail, and `impulse(p)` / `table(...)`
//! carry finite tails. Tail models propagate through `+ - * /` and constant
//! powers as conservative bound algebra; anything else degrades to `unknown`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::seq::{Sequence, TailModel};

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Expr {
    Num(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Ln(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    // Sequence-only builtins.
    Geo(f64),
    Impulse(u64),
    Table(Vec<f64>),
}

impl Expr {
    fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Geo(_) | Expr::Impulse(_) | Expr::Table(_) => false,
            Expr::Var => true,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.contains_var() || b.contains_var(),
            Expr::Neg(a)
            | Expr::Ln(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Abs(a) => a.contains_var(),
        }
    }

    /// Constant value of a variable-free subtree, when it evaluates cleanly.
    fn const_value(&self) -> Option<f64> {
        if self.contains_var() {
            return None;
        }
        eval_expr(self, 1.0).ok()
    }
}

/// Evaluate with the variable bound to `v`. Division by zero, `ln` of a
/// non-positive argument and non-finite results are domain errors.
pub(crate) fn eval_expr(e: &Expr, v: f64) -> std::result::Result<f64, String> {
    let out = match e {
        Expr::Num(c) => *c,
        Expr::Var => v,
        Expr::Add(a, b) => eval_expr(a, v)? + eval_expr(b, v)?,
        Expr::Sub(a, b) => eval_expr(a, v)? - eval_expr(b, v)?,
        Expr::Mul(a, b) => eval_expr(a, v)? * eval_expr(b, v)?,
        Expr::Div(a, b) => {
            let d = eval_expr(b, v)?;
            if d == 0.0 {
                return Err("division by zero".into());
            }
            eval_expr(a, v)? / d
        }
        Expr::Pow(a, b) => {
            let base = eval_expr(a, v)?;
            let exp = eval_expr(b, v)?;
            if base == 0.0 && exp < 0.0 {
                return Err("zero raised to a negative power".into());
            }
            if base < 0.0 && exp.fract() != 0.0 {
                return Err(format!("negative base {base} with non-integer exponent {exp}"));
            }
            base.powf(exp)
        }
        Expr::Neg(a) => -eval_expr(a, v)?,
        Expr::Ln(a) => {
            let u = eval_expr(a, v)?;
            if u <= 0.0 {
                return Err(format!("ln of non-positive argument {u}"));
            }
            u.ln()
        }
        Expr::Sin(a) => eval_expr(a, v)?.sin(),
        Expr::Cos(a) => eval_expr(a, v)?.cos(),
        Expr::Exp(a) => eval_expr(a, v)?.exp(),
        Expr::Abs(a) => eval_expr(a, v)?.abs(),
        Expr::Min(a, b) => eval_expr(a, v)?.min(eval_expr(b, v)?),
        Expr::Max(a, b) => eval_expr(a, v)?.max(eval_expr(b, v)?),
        Expr::Geo(rho) => rho.powf(v),
        Expr::Impulse(p) => {
            if (v - *p as f64).abs() < 0.5 {
                1.0
            } else {
                0.0
            }
        }
        Expr::Table(vals) => {
            let idx = v.round();
            if idx >= 1.0 && idx <= vals.len() as f64 {
                vals[idx as usize - 1]
            } else {
                0.0
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(format!("non-finite result ({out})"))
    }
}

// ---------------------------------------------------------------------------
// Tail-model algebra
// ---------------------------------------------------------------------------

/// Max of t^s * q^t over t >= 1 (s > 0, 0 < q < 1), as a continuous upper
/// bound for the discrete supremum.
fn max_poly_geo(s: f64, q: f64) -> f64 {
    debug_assert!(s > 0.0 && q > 0.0 && q < 1.0);
    let t_star = -s / q.ln();
    if t_star <= 1.0 {
        q
    } else {
        (s * t_star.ln() + t_star * q.ln()).exp()
    }
}

/// Inflate a bound model so it also covers the first `upto - 1` values of
/// `extra` added on top; used for `finite + known` sums.
fn inflate_for_prefix(model: TailModel, extra: &Expr, upto: u64) -> TailModel {
    if upto <= 1 {
        return model;
    }
    if upto > 4096 {
        return TailModel::Unknown;
    }
    let shape = |n: u64| -> f64 {
        match model {
            TailModel::Geometric { ratio, .. } => ratio.powi(n as i32),
            TailModel::Power { exponent, .. } => (n as f64).powf(exponent),
            _ => 1.0,
        }
    };
    let mut scale = match model {
        TailModel::Geometric { scale, .. } | TailModel::Power { scale, .. } => scale,
        _ => return TailModel::Unknown,
    };
    for n in 1..upto {
        let v = match eval_expr(extra, n as f64) {
            Ok(v) => v.abs(),
            Err(_) => return TailModel::Unknown,
        };
        let needed = v / shape(n) + scale;
        if needed > scale {
            scale = needed;
        }
    }
    match model {
        TailModel::Geometric { ratio, .. } => TailModel::Geometric { scale, ratio },
        TailModel::Power { exponent, .. } => TailModel::Power { scale, exponent },
        other => other,
    }
}

fn add_tails(ta: TailModel, tb: TailModel, ea: &Expr, eb: &Expr) -> TailModel {
    use TailModel::*;
    match (ta, tb) {
        (Finite { zero_from: p }, Finite { zero_from: q }) => Finite {
            zero_from: p.max(q),
        },
        (Finite { zero_from }, other) => inflate_for_prefix(other, ea, zero_from),
        (other, Finite { zero_from }) => inflate_for_prefix(other, eb, zero_from),
        (Geometric { scale: c1, ratio: r1 }, Geometric { scale: c2, ratio: r2 }) => Geometric {
            scale: c1 + c2,
            ratio: r1.max(r2),
        },
        (Power { scale: c1, exponent: s1 }, Power { scale: c2, exponent: s2 }) => Power {
            scale: c1 + c2,
            exponent: s1.max(s2),
        },
        (Geometric { scale: cg, ratio }, Power { scale: cp, exponent })
        | (Power { scale: cp, exponent }, Geometric { scale: cg, ratio }) => {
            if exponent >= 0.0 {
                // rho^n <= 1 <= n^s
                Power {
                    scale: cg + cp,
                    exponent,
                }
            } else {
                // rho^n <= K * n^s with K = max n^(-s) rho^n
                Power {
                    scale: cg * max_poly_geo(-exponent, ratio) + cp,
                    exponent,
                }
            }
        }
        _ => Unknown,
    }
}

fn mul_tails(ta: TailModel, tb: TailModel) -> TailModel {
    use TailModel::*;
    match (ta, tb) {
        (Finite { zero_from: p }, Finite { zero_from: q }) => Finite {
            zero_from: p.min(q),
        },
        (Finite { zero_from }, g) | (g, Finite { zero_from }) if g.is_known() => {
            Finite { zero_from }
        }
        (Geometric { scale: c1, ratio: r1 }, Geometric { scale: c2, ratio: r2 }) => Geometric {
            scale: c1 * c2,
            ratio: r1 * r2,
        },
        (Power { scale: c1, exponent: s1 }, Power { scale: c2, exponent: s2 }) => Power {
            scale: c1 * c2,
            exponent: s1 + s2,
        },
        (Geometric { scale: cg, ratio }, Power { scale: cp, exponent })
        | (Power { scale: cp, exponent }, Geometric { scale: cg, ratio }) => {
            if exponent <= 0.0 {
                Geometric {
                    scale: cg * cp,
                    ratio,
                }
            } else {
                // n^s rho^n <= K * rho'^n for any rho' in (rho, 1).
                let ratio_up = (1.0 + ratio) / 2.0;
                let k = max_poly_geo(exponent, ratio / ratio_up);
                Geometric {
                    scale: cg * cp * k,
                    ratio: ratio_up,
                }
            }
        }
        _ => Unknown,
    }
}

fn pow_tail(base: TailModel, k: f64) -> TailModel {
    use TailModel::*;
    if !(k > 0.0) {
        return Unknown;
    }
    match base {
        Finite { zero_from } => Finite { zero_from },
        Geometric { scale, ratio } => {
            let r = ratio.powf(k);
            if r < 1.0 {
                Geometric {
                    scale: scale.powf(k).max(scale.powf(k) /* |a|^k <= (C rho^n)^k */),
                    ratio: r,
                }
            } else {
                Unknown
            }
        }
        Power { scale, exponent } => Power {
            scale: scale.powf(k),
            exponent: exponent * k,
        },
        Unknown => Unknown,
    }
}

fn infer_tail(e: &Expr) -> TailModel {
    use TailModel::*;
    match e {
        Expr::Num(c) => {
            if *c == 0.0 {
                Finite { zero_from: 1 }
            } else {
                Power {
                    scale: c.abs(),
                    exponent: 0.0,
                }
            }
        }
        Expr::Var => Power {
            scale: 1.0,
            exponent: 1.0,
        },
        Expr::Geo(rho) => Geometric {
            scale: 1.0,
            ratio: *rho,
        },
        Expr::Impulse(p) => Finite { zero_from: p + 1 },
        Expr::Table(vals) => Finite {
            zero_from: vals.len() as u64 + 1,
        },
        Expr::Sin(_) | Expr::Cos(_) => Power {
            scale: 1.0,
            exponent: 0.0,
        },
        Expr::Neg(a) | Expr::Abs(a) => infer_tail(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
            // |min| and |max| are both bounded by |a| + |b|.
            add_tails(infer_tail(a), infer_tail(b), a, b)
        }
        Expr::Mul(a, b) => mul_tails(infer_tail(a), infer_tail(b)),
        Expr::Div(a, b) => match b.const_value() {
            Some(c) if c != 0.0 => match infer_tail(a) {
                Geometric { scale, ratio } => Geometric {
                    scale: scale / c.abs(),
                    ratio,
                },
                Power { scale, exponent } => Power {
                    scale: scale / c.abs(),
                    exponent,
                },
                other => other,
            },
            _ => Unknown,
        },
        Expr::Pow(a, b) => match (a.as_ref(), b.const_value()) {
            (Expr::Var, Some(s)) => Power {
                scale: 1.0,
                exponent: s,
            },
            (_, Some(k)) => pow_tail(infer_tail(a), k),
            _ => Unknown,
        },
        Expr::Ln(_) | Expr::Exp(_) => Unknown,
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexed {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        let (tline, tcol) = (line, col);
        let mut push = |t: Tok| {
            out.push(Lexed {
                tok: t,
                line: tline,
                col: tcol,
            })
        };
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
                col += 1;
            }
            '-' => {
                push(Tok::Minus);
                i += 1;
                col += 1;
            }
            '*' => {
                push(Tok::Star);
                i += 1;
                col += 1;
            }
            '/' => {
                push(Tok::Slash);
                i += 1;
                col += 1;
            }
            '^' => {
                push(Tok::Caret);
                i += 1;
                col += 1;
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            ',' | ';' => {
                push(Tok::Comma);
                i += 1;
                col += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = bytes[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    line: tline,
                    col: tcol,
                    message: format!("malformed number `{s}`"),
                })?;
                push(Tok::Num(v));
                col += (i - start) as u32;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                push(Tok::Ident(s));
                col += (i - start) as u32;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Sequence, // variable `n`, all builtins
    Function, // variable `x`, scalar builtins only
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|l| (l.line, l.col))
            .unwrap_or((1, 1))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.parse_term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Minus) {
                let rhs = self.parse_term()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_factor()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.parse_factor()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Slash) {
                let rhs = self.parse_factor()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        let mut negations = 0u32;
        while self.eat(&Tok::Minus) {
            negations += 1;
        }
        let mut atom = self.parse_atom()?;
        if self.eat(&Tok::Caret) {
            let neg_exp = self.eat(&Tok::Minus);
            match self.peek().cloned() {
                Some(Tok::Num(v)) => {
                    self.pos += 1;
                    let e = if neg_exp { -v } else { v };
                    atom = Expr::Pow(Box::new(atom), Box::new(Expr::Num(e)));
                }
                _ => return Err(self.err("expected a number after `^`")),
            }
        }
        for _ in 0..negations {
            atom = Expr::Neg(Box::new(atom));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let var_name = match self.mode {
                    Mode::Sequence => "n",
                    Mode::Function => "x",
                };
                if name == var_name {
                    return Ok(Expr::Var);
                }
                if self.peek() != Some(&Tok::LParen) {
                    return Err(self.err(format!("unknown identifier `{name}`")));
                }
                self.pos += 1; // consume '('
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        args.push(self.parse_expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                self.builtin(&name, args)
            }
            _ => Err(self.err("expected a number, variable, builtin or `(`")),
        }
    }

    fn builtin(&self, name: &str, mut args: Vec<Expr>) -> Result<Expr> {
        let argc = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(self.err(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let unary = |f: fn(Box<Expr>) -> Expr, args: &mut Vec<Expr>| f(Box::new(args.remove(0)));
        match name {
            "ln" => {
                argc(1)?;
                Ok(unary(Expr::Ln, &mut args))
            }
            "sin" => {
                argc(1)?;
                Ok(unary(Expr::Sin, &mut args))
            }
            "cos" => {
                argc(1)?;
                Ok(unary(Expr::Cos, &mut args))
            }
            "exp" => {
                argc(1)?;
                Ok(unary(Expr::Exp, &mut args))
            }
            "abs" => {
                argc(1)?;
                Ok(unary(Expr::Abs, &mut args))
            }
            "min" => {
                argc(2)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::Min(Box::new(a), Box::new(b)))
            }
            "max" => {
                argc(2)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::Max(Box::new(a), Box::new(b)))
            }
            "pow" => {
                argc(2)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::Pow(Box::new(a), Box::new(b)))
            }
            "geo" => {
                self.sequence_only(name)?;
                argc(1)?;
                let rho = args[0]
                    .const_value()
                    .ok_or_else(|| self.err("`geo` expects a constant ratio"))?;
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(self.err(format!(
                        "geometric ratio must lie in (0, 1) for a decaying tail, got {rho}"
                    )));
                }
                Ok(Expr::Geo(rho))
            }
            "impulse" => {
                self.sequence_only(name)?;
                argc(1)?;
                let p = args[0]
                    .const_value()
                    .filter(|p| *p >= 1.0 && p.fract() == 0.0)
                    .ok_or_else(|| self.err("`impulse` expects a positive integer index"))?;
                Ok(Expr::Impulse(p as u64))
            }
            "table" => {
                self.sequence_only(name)?;
                if args.is_empty() {
                    return Err(self.err("`table` needs at least one value"));
                }
                let mut vals = Vec::with_capacity(args.len());
                for a in &args {
                    vals.push(
                        a.const_value()
                            .ok_or_else(|| self.err("`table` expects constant values"))?,
                    );
                }
                Ok(Expr::Table(vals))
            }
            other => Err(self.err(format!("unknown identifier `{other}`"))),
        }
    }

    fn sequence_only(&self, name: &str) -> Result<()> {
        if self.mode == Mode::Sequence {
            Ok(())
        } else {
            Err(self.err(format!("`{name}` is only available in sequence expressions")))
        }
    }
}

fn parse(text: &str, mode: Mode) -> Result<Expr> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser { toks, pos: 0, mode };
    let e = p.parse_expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Parse a sequence expression over `n` and build its evaluator, with the
/// inferred tail model attached.
pub fn parse_sequence_spec(text: &str) -> Result<Sequence> {
    let expr = parse(text, Mode::Sequence)?;
    let tail = infer_tail(&expr);
    let shared = Arc::new(expr);
    let for_eval = Arc::clone(&shared);
    let seq = Sequence::from_fn(text.trim().to_string(), move |n| {
        eval_expr(&for_eval, n as f64).map_err(|reason| Error::Eval { index: n, reason })
    })
    .with_label(text.trim().to_string());
    seq.with_tail(tail)
}

/// A certified bound for a scalar function over an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCert {
    pub bound: f64,
    pub lo: f64,
    pub hi: f64,
}

/// A scalar function of one variable, parsed from the DSL.
#[derive(Clone)]
pub struct FunctionSpec {
    label: String,
    expr: Arc<Expr>,
    declared_bound: Option<BoundCert>,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("label", &self.label)
            .field("declared_bound", &self.declared_bound)
            .finish()
    }
}

impl FunctionSpec {
    pub fn eval(&self, u: f64) -> Result<f64> {
        eval_expr(&self.expr, u).map_err(|reason| Error::FnDomain { arg: u, reason })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn declared_bound(&self) -> Option<BoundCert> {
        self.declared_bound
    }

    /// Declare `|f| <= bound` on `[lo, hi]`; spot-checked on a coarse grid.
    pub fn with_declared_bound(mut self, bound: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(bound > 0.0) || lo >= hi {
            return Err(Error::InvalidParameter(
                "declared bound needs bound > 0 and lo < hi".into(),
            ));
        }
        for i in 0..=64 {
            let u = lo + (hi - lo) * i as f64 / 64.0;
            if let Ok(v) = self.eval(u) {
                if v.abs() > bound * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "declared bound {bound} violated at {u}: |f| = {}",
                        v.abs()
                    )));
                }
            }
        }
        self.declared_bound = Some(BoundCert { bound, lo, hi });
        Ok(self)
    }
}

/// Parse a scalar function expression over `x`. `sin(x)` and `cos(x)` get a
/// declared bound of 1 on the whole line.
pub fn parse_function_spec(text: &str) -> Result<FunctionSpec> {
    let expr = parse(text, Mode::Function)?;
    let declared_bound = match &expr {
        Expr::Sin(a) | Expr::Cos(a) if **a == Expr::Var => Some(BoundCert {
            bound: 1.0,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }),
        _ => None,
    };
    Ok(FunctionSpec {
        label: text.trim().to_string(),
        expr: Arc::new(expr),
        declared_bound,
    })
}

/// The delay/advance map `sigma`. The affine form is
/// `sigma(n) = max(1, ceil(alpha n + beta))` with `alpha > 0`, which
/// guarantees values in the positive integers and `sigma(n) -> infinity`.
#[derive(Clone, Debug, PartialEq)]
pub enum DelaySpec {
    Affine { alpha: f64, beta: f64 },
    Table { values: Vec<u64>, alpha: f64, beta: f64 },
}

impl DelaySpec {
    pub fn affine(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delay map needs finite alpha > 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(DelaySpec::Affine { alpha, beta })
    }

    pub fn identity() -> Self {
        DelaySpec::Affine {
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn table(values: Vec<u64>, alpha: f64, beta: f64) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::InvalidParameter(
                "delay table values must be positive integers".into(),
            ));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "delay table tail rule needs alpha > 0".into(),
            ));
        }
        Ok(DelaySpec::Table { values, alpha, beta })
    }

    pub fn apply(&self, n: u64) -> u64 {
        match self {
            DelaySpec::Affine { alpha, beta } => affine_sigma(*alpha, *beta, n),
            DelaySpec::Table { values, alpha, beta } => {
                if n >= 1 && (n as usize) <= values.len() {
                    values[(n - 1) as usize]
                } else {
                    affine_sigma(*alpha, *beta, n)
                }
            }
        }
    }
}

fn affine_sigma(alpha: f64, beta: f64, n: u64) -> u64 {
    let v = (alpha * n as f64 + beta).ceil();
    if v < 1.0 {
        1
    } else {
        v as u64
    }
}

/// Parse a delay expression such as `n`, `n-1` or `0.5*n+3`; the expression
/// must be affine in `n` with positive slope.
pub fn parse_delay_spec(text: &str) -> Result<DelaySpec> {
    let expr = parse(text, Mode::Sequence)?;
    let probe = |n: f64| {
        eval_expr(&expr, n).map_err(|reason| Error::Parse {
            line: 1,
            col: 1,
            message: format!("delay expression failed at n = {n}: {reason}"),
        })
    };
    let v1 = probe(1.0)?;
    let v2 = probe(2.0)?;
    let alpha = v2 - v1;
    let beta = v1 - alpha;
    for n in 3..=8 {
        let v = probe(n as f64)?;
        let lin = alpha * n as f64 + beta;
        if (v - lin).abs() > 1e-9 * (1.0 + v.abs()) {
            return Err(Error::Parse {
                line: 1,
                col: 1,
                message: format!("delay expression `{}` is not affine in n", text.trim()),
            });
        }
    }
    DelaySpec::affine(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates_basics() {
        let s = parse_sequence_spec("pow(n,-2)").unwrap();
        assert_eq!(s.value(5).unwrap(), 0.04);
        assert_eq!(
            s.tail(),
            TailModel::Power {
                scale: 1.0,
                exponent: -2.0
            }
        );

        let g = parse_sequence_spec("geo(0.5)").unwrap();
        assert_eq!(g.value(3).unwrap(), 0.125);
        assert_eq!(
            g.tail(),
            TailModel::Geometric {
                scale: 1.0,
                ratio: 0.5
            }
        );
    }

    #[test]
    fn product_with_bounded_factor() {
        let s = parse_sequence_spec("pow(n,-2) * (3 + sin(n))").unwrap();
        let expect = 3.0 + 1f64.sin();
        assert!((s.value(1).unwrap() - expect).abs() < 1e-12);
        // power(1,-2) times power(4,0)
        assert_eq!(
            s.tail(),
            TailModel::Power {
                scale: 4.0,
                exponent: -2.0
            }
        );
    }

    #[test]
    fn scaled_geometric_keeps_a_geometric_tail() {
        let s = parse_sequence_spec("2*geo(0.5)").unwrap();
        assert_eq!(s.value(1).unwrap(), 1.0);
        match s.tail() {
            TailModel::Geometric { scale, ratio } => {
                assert!(scale >= 2.0);
                assert_eq!(ratio, 0.5);
            }
            other => panic!("expected geometric tail, got {other}"),
        }
    }

    #[test]
    fn caret_power_and_unary_minus() {
        let s = parse_sequence_spec("n^2").unwrap();
        assert_eq!(s.value(7).unwrap(), 49.0);
        let t = parse_sequence_spec("-n^2 + 1").unwrap();
        assert_eq!(t.value(3).unwrap(), -8.0);
        let u = parse_sequence_spec("n^-2").unwrap();
        assert_eq!(u.value(2).unwrap(), 0.25);
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_sequence_spec("pow(n,") {
            Err(Error::Parse { line: 1, col, .. }) => assert!(col >= 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_sequence_spec("frob(n)"),
            Err(Error::Parse { .. })
        ));
        // Out-of-range geometric ratio is rejected as declared-decaying.
        assert!(matches!(
            parse_sequence_spec("geo(1.5)"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn domain_violations_are_reported() {
        let s = parse_sequence_spec("1/(n-3)").unwrap();
        assert!(matches!(s.value(3), Err(Error::Eval { index: 3, .. })));
        let l = parse_sequence_spec("ln(n-1)").unwrap();
        assert!(l.value(1).is_err());
        assert!(l.value(2).is_ok());
    }

    #[test]
    fn function_mode_uses_x_and_rejects_sequence_builtins() {
        let f = parse_function_spec("abs(x)").unwrap();
        assert_eq!(f.eval(-3.5).unwrap(), 3.5);
        assert!(parse_function_spec("geo(0.5)").is_err());
        let sin = parse_function_spec("sin(x)").unwrap();
        assert_eq!(sin.declared_bound().unwrap().bound, 1.0);
        let g = parse_function_spec("1/x").unwrap();
        assert!(g.eval(0.0).is_err());
    }

    #[test]
    fn impulse_and_table() {
        let e = parse_sequence_spec("impulse(4)").unwrap();
        assert_eq!(e.value(4).unwrap(), 1.0);
        assert_eq!(e.value(5).unwrap(), 0.0);
        assert_eq!(e.tail(), TailModel::Finite { zero_from: 5 });

        let t = parse_sequence_spec("table(1, -2, 3)").unwrap();
        assert_eq!(t.value(2).unwrap(), -2.0);
        assert_eq!(t.value(9).unwrap(), 0.0);
        assert_eq!(t.tail(), TailModel::Finite { zero_from: 4 });
    }

    #[test]
    fn delay_specs() {
        let id = parse_delay_spec("n").unwrap();
        assert_eq!(id.apply(7), 7);
        let lag = parse_delay_spec("n-1").unwrap();
        assert_eq!(lag.apply(1), 1); // clamped to 1
        assert_eq!(lag.apply(5), 4);
        let half = parse_delay_spec("0.5*n+3").unwrap();
        assert_eq!(half.apply(10), 8);
        assert!(parse_delay_spec("n^2").is_err());
        assert!(parse_delay_spec("1-n").is_err()); // negative slope
    }

    #[test]
    fn sum_of_tails_takes_weaker_class() {
        let s = parse_sequence_spec("geo(0.5) + pow(n,-2)").unwrap();
        match s.tail() {
            TailModel::Power { scale, exponent } => {
                assert_eq!(exponent, -2.0);
                assert!(scale >= 2.0);
            }
            other => panic!("expected power tail, got {other}"),
        }
        // The claimed bound indeed covers both summands where it matters.
        for n in 1..=64u64 {
            let bound = s.tail().bound_at(n).unwrap();
            assert!(s.value(n).unwrap().abs() <= bound * (1.0 + 1e-12));
        }
    }
}
