//! Scalar expressions over state, impulsive-control and ordinary-control
//! variables.
//!
//! Expressions are parsed once against a [`Names`] table, after which every
//! variable is a positional [`VarId`]. Evaluation takes a flat slice laid out
//! as `[x1..xn, u1..um, a1..al]`. Derivatives are symbolic and go through the
//! folding constructors ([`Expr::add`], [`Expr::mul`], ...) so that repeated
//! differentiation stays small.

mod parser;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub use parser::parse;

/// Position of a variable in the flat evaluation slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    State,
    Impulse,
    Ordinary,
}

/// Declared variable names, grouped as state (`x`), impulsive control (`u`)
/// and ordinary control (`a`).
#[derive(Debug, Clone, PartialEq)]
pub struct Names {
    state: Vec<String>,
    impulse: Vec<String>,
    ordinary: Vec<String>,
}

impl Names {
    pub fn new(state: Vec<String>, impulse: Vec<String>, ordinary: Vec<String>) -> Self {
        Self {
            state,
            impulse,
            ordinary,
        }
    }

    /// `x1..xn`, `u1..um`, `a1..al`.
    pub fn standard(n: usize, m: usize, l: usize) -> Self {
        let gen = |p: &str, k: usize| (1..=k).map(|i| format!("{p}{i}")).collect();
        Self::new(gen("x", n), gen("u", m), gen("a", l))
    }

    pub fn n(&self) -> usize {
        self.state.len()
    }

    pub fn m(&self) -> usize {
        self.impulse.len()
    }

    pub fn l(&self) -> usize {
        self.ordinary.len()
    }

    pub fn len(&self) -> usize {
        self.n() + self.m() + self.l()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        let pos = |v: &[String]| v.iter().position(|s| s == name);
        if let Some(i) = pos(&self.state) {
            return Some(VarId(i));
        }
        if let Some(i) = pos(&self.impulse) {
            return Some(VarId(self.n() + i));
        }
        pos(&self.ordinary).map(|i| VarId(self.n() + self.m() + i))
    }

    pub fn group(&self, id: VarId) -> Group {
        if id.0 < self.n() {
            Group::State
        } else if id.0 < self.n() + self.m() {
            Group::Impulse
        } else {
            Group::Ordinary
        }
    }

    pub fn name(&self, id: VarId) -> &str {
        let (n, m) = (self.n(), self.m());
        if id.0 < n {
            &self.state[id.0]
        } else if id.0 < n + m {
            &self.impulse[id.0 - n]
        } else {
            &self.ordinary[id.0 - n - m]
        }
    }

    pub fn state_var(&self, i: usize) -> VarId {
        VarId(i)
    }

    pub fn impulse_var(&self, alpha: usize) -> VarId {
        VarId(self.n() + alpha)
    }

    pub fn ordinary_var(&self, k: usize) -> VarId {
        VarId(self.n() + self.m() + k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> Result<f64> {
        match self {
            Func::Log if v <= 0.0 => Err(Error::Domain(format!("log of nonpositive value {v}"))),
            Func::Sqrt if v < 0.0 => Err(Error::Domain(format!("sqrt of negative value {v}"))),
            _ => Ok(match self {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Tanh => v.tanh(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(VarId),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} produced a non-finite value")))
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Num(0.0)
    }

    pub fn one() -> Self {
        Expr::Num(1.0)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    // Folding constructors. They only simplify when the result is
    // unambiguous; anything else builds the node as given.

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            e => Expr::Neg(Box::new(e)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if x.powf(y).is_finite() => Expr::Num(x.powf(y)),
            (_, Some(y)) if y == 0.0 => Expr::one(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(v) = a.as_num() {
            if let Ok(r) = f.apply(v) {
                if r.is_finite() {
                    return Expr::Num(r);
                }
            }
        }
        Expr::Call(f, Box::new(a))
    }

    /// Evaluates with variables taken positionally from `vals`.
    pub fn eval(&self, vals: &[f64]) -> Result<f64> {
        self.eval_by(&|id: VarId| vals.get(id.0).copied().ok_or(id))
            .map_err(|e| match e {
                EvalFail::Missing(id) => Error::MissingBinding(format!("#{}", id.0)),
                EvalFail::Err(e) => e,
            })
    }

    /// Evaluates with variables looked up by name.
    pub fn eval_env(&self, names: &Names, env: &HashMap<String, f64>) -> Result<f64> {
        self.eval_by(&|id: VarId| env.get(names.name(id)).copied().ok_or(id))
            .map_err(|e| match e {
                EvalFail::Missing(id) => Error::MissingBinding(names.name(id).to_string()),
                EvalFail::Err(e) => e,
            })
    }

    fn eval_by<F>(&self, lookup: &F) -> std::result::Result<f64, EvalFail>
    where
        F: Fn(VarId) -> std::result::Result<f64, VarId>,
    {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(id) => lookup(*id).map_err(EvalFail::Missing)?,
            Expr::Neg(a) => -a.eval_by(lookup)?,
            Expr::Add(a, b) => a.eval_by(lookup)? + b.eval_by(lookup)?,
            Expr::Sub(a, b) => a.eval_by(lookup)? - b.eval_by(lookup)?,
            Expr::Mul(a, b) => a.eval_by(lookup)? * b.eval_by(lookup)?,
            Expr::Div(a, b) => {
                let num = a.eval_by(lookup)?;
                let den = b.eval_by(lookup)?;
                if den == 0.0 {
                    return Err(EvalFail::Err(Error::Domain("division by zero".into())));
                }
                num / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval_by(lookup)?;
                let exp = b.eval_by(lookup)?;
                finite(base.powf(exp), "power").map_err(EvalFail::Err)?
            }
            Expr::Call(f, a) => f.apply(a.eval_by(lookup)?).map_err(EvalFail::Err)?,
        };
        finite(v, "evaluation").map_err(EvalFail::Err)
    }

    /// Variables referenced anywhere in the tree.
    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(id) => {
                out.insert(*id);
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(id) => *id == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Exact first partial derivative with respect to `v`.
    pub fn diff(&self, v: VarId) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self {
            Expr::Num(_) => Expr::zero(),
            Expr::Var(id) => Expr::Num(if *id == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(v)),
            Expr::Add(a, b) => Expr::add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => Expr::sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => Expr::add(Expr::mul(a.diff(v), (**b).clone()), Expr::mul((**a).clone(), b.diff(v))),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = Expr::sub(Expr::mul(a.diff(v), (**b).clone()), Expr::mul((**a).clone(), b.diff(v)));
                Expr::div(num, Expr::pow((**b).clone(), Expr::Num(2.0)))
            }
            Expr::Pow(a, b) => {
                if !b.depends_on(v) {
                    // c * a^(c-1) * a'
                    let reduced = Expr::pow((**a).clone(), Expr::sub((**b).clone(), Expr::one()));
                    Expr::mul(Expr::mul((**b).clone(), reduced), a.diff(v))
                } else {
                    // a^b * (b' log a + b a' / a)
                    let log_term = Expr::mul(b.diff(v), Expr::call(Func::Log, (**a).clone()));
                    let ratio = Expr::div(Expr::mul((**b).clone(), a.diff(v)), (**a).clone());
                    Expr::mul(self.clone(), Expr::add(log_term, ratio))
                }
            }
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Log => Expr::div(Expr::one(), inner),
                    Func::Sqrt => Expr::div(Expr::one(), Expr::mul(Expr::Num(2.0), Expr::call(Func::Sqrt, inner))),
                    Func::Tanh => Expr::sub(Expr::one(), Expr::pow(Expr::call(Func::Tanh, inner), Expr::Num(2.0))),
                };
                Expr::mul(outer, a.diff(v))
            }
        }
    }

    /// Exact second partial derivative, `d/dw (d/dv self)`.
    pub fn diff2(&self, v: VarId, w: VarId) -> Expr {
        self.diff(v).diff(w)
    }

    /// Pretty-printer bound to a name table. The output reparses to the same tree.
    pub fn display<'a>(&'a self, names: &'a Names) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 0,
            _ => 5,
        }
    }
}

enum EvalFail {
    Missing(VarId),
    Err(Error),
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a Names,
}

impl ExprDisplay<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
        let paren = e.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match e {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var(id) => f.write_str(self.names.name(*id))?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write(f, a, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.write(f, a, 1)?;
                f.write_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " })?;
                self.write(f, b, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.write(f, a, 2)?;
                f.write_str(if matches!(e, Expr::Mul(..)) { "*" } else { "/" })?;
                self.write(f, b, 3)?;
            }
            Expr::Pow(a, b) => {
                self.write(f, a, 5)?;
                f.write_str("^")?;
                self.write(f, b, 3)?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write(f, a, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.expr, 0)
    }
}
