//! Expression DSL: parsing, evaluation and exact forward-mode
//! differentiation of scalar expressions in named variables and time.
//!
//! Trees are immutable after construction and evaluation is pure, so
//! expressions can be shared freely across threads. Identical tree plus
//! identical point gives a bit-identical result.

mod eval;
mod parse;

pub use eval::{Gradient, SecondDerivs};

/// Unary function names recognised by the grammar. `pow(a, b)` is also
/// accepted and normalises to the `^` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            "tanh" => Some(Func::Tanh),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

/// Names that may never be used as variables.
pub const RESERVED: &[&str] = &[
    "exp", "log", "sin", "cos", "sinh", "cosh", "tanh", "sqrt", "abs", "pow",
];

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Fun(Func, Box<Expr>),
}

/// Parse failure, annotated with the byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("`{name}` takes {expected} argument(s), got {got} (at {pos})")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid variable `{name}`: {why}")]
    BadVariable { name: String, why: String },
}

/// Runtime evaluation failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("result is not finite")]
    NonFinite,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("point has {got} coordinates, system has {expected}")]
    Dimension { expected: usize, got: usize },
}

/// The state variables of a system plus the name of the time variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    time: String,
}

impl VarSet {
    pub fn new<I, S>(names: I, time: &str) -> Result<VarSet, ParseError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut all: Vec<&str> = names.iter().map(String::as_str).collect();
        all.push(time);
        for (i, n) in all.iter().enumerate() {
            if n.is_empty() || !is_ident(n) {
                return Err(ParseError::BadVariable {
                    name: n.to_string(),
                    why: "not a valid identifier".into(),
                });
            }
            if RESERVED.contains(n) {
                return Err(ParseError::BadVariable {
                    name: n.to_string(),
                    why: "clashes with a reserved function name".into(),
                });
            }
            if all[..i].contains(n) {
                return Err(ParseError::BadVariable {
                    name: n.to_string(),
                    why: "declared twice".into(),
                });
            }
        }
        Ok(VarSet {
            names,
            time: time.to_string(),
        })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn time(&self) -> &str {
        &self.time
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parse an expression bound to these variables (time included).
    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        let mut allowed: Vec<&str> = self.names.iter().map(String::as_str).collect();
        allowed.push(&self.time);
        Expr::parse(text, &allowed)
    }

    /// Parse allowing extra identifiers besides the state variables and time.
    pub fn parse_with_extra(&self, text: &str, extra: &[&str]) -> Result<Expr, ParseError> {
        let mut allowed: Vec<&str> = self.names.iter().map(String::as_str).collect();
        allowed.push(&self.time);
        allowed.extend_from_slice(extra);
        Expr::parse(text, &allowed)
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Evaluation locus: state values in declared order plus the time.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub u: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(u: Vec<f64>, t: f64) -> Point {
        Point { u, t }
    }
}

impl Expr {
    /// Parse `text` against the allowed identifier list (grammar in the
    /// crate documentation). Unknown identifiers are rejected here, so a
    /// successfully parsed expression is bound to its variable set.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Expr, ParseError> {
        parse::parse(text, allowed)
    }

    /// Structural derivative with respect to `var` (also used for time).
    /// Produces a new tree; no simplification beyond constant folding of
    /// additive zeros and multiplicative units.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(n) => Expr::Num(if n == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Expr::Pow(a, b) => {
                let da = a.diff(var);
                if let Expr::Num(k) = **b {
                    // d(u^k) = k u^(k-1) u'
                    return mul(mul(Expr::Num(k), pow((**a).clone(), Expr::Num(k - 1.0))), da);
                }
                let db = b.diff(var);
                // u^v (v' log u + v u' / u)
                mul(
                    Expr::Pow(a.clone(), b.clone()),
                    add(
                        mul(db, fun(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), da), (**a).clone()),
                    ),
                )
            }
            Expr::Fun(f, a) => {
                let da = a.diff(var);
                let a = (**a).clone();
                match f {
                    Func::Exp => mul(fun(Func::Exp, a), da),
                    Func::Log => div(da, a),
                    Func::Sin => mul(fun(Func::Cos, a), da),
                    Func::Cos => neg(mul(fun(Func::Sin, a), da)),
                    Func::Sinh => mul(fun(Func::Cosh, a), da),
                    Func::Cosh => mul(fun(Func::Sinh, a), da),
                    Func::Tanh => mul(
                        sub(
                            Expr::Num(1.0),
                            pow(fun(Func::Tanh, a), Expr::Num(2.0)),
                        ),
                        da,
                    ),
                    Func::Sqrt => div(da, mul(Expr::Num(2.0), fun(Func::Sqrt, a))),
                    // sign(u) = u/|u|; errors at u = 0 exactly as required.
                    Func::Abs => mul(div(a.clone(), fun(Func::Abs, a)), da),
                }
            }
        }
    }

    /// Replace every occurrence of `var` with `replacement`.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(n) => {
                if n == var {
                    replacement.clone()
                } else {
                    Expr::Var(n.clone())
                }
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(var, replacement))),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Mul(a, b) => Expr::Mul(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Pow(a, b) => Expr::Pow(
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Fun(f, a) => Expr::Fun(*f, Box::new(a.substitute(var, replacement))),
        }
    }

    /// Does the tree reference `name` anywhere?
    pub fn references(&self, name: &str) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(n) => n == name,
            Expr::Neg(a) | Expr::Fun(_, a) => a.references(name),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.references(name) || b.references(name),
        }
    }

    pub fn eval(&self, vs: &VarSet, pt: &Point) -> Result<f64, EvalError> {
        eval::eval(self, vs, pt)
    }

    pub fn gradient(&self, vs: &VarSet, pt: &Point) -> Result<Gradient, EvalError> {
        eval::gradient(self, vs, pt)
    }

    /// Second partials with respect to the state variables only, as a
    /// symmetric `n x n` matrix.
    pub fn hessian(&self, vs: &VarSet, pt: &Point) -> Result<Vec<Vec<f64>>, EvalError> {
        eval::hessian(self, vs, pt)
    }

    /// Full second-derivative data over `(u, t)`.
    pub fn second_derivatives(&self, vs: &VarSet, pt: &Point) -> Result<SecondDerivs, EvalError> {
        eval::second_derivatives(self, vs, pt)
    }

}

// Smart constructors used by `diff`: fold out the additive zeros and
// multiplicative units that would otherwise bury every derivative tree.

pub(crate) fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x * y);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        return a;
    }
    if is_zero(&a) {
        return Expr::Num(0.0);
    }
    Expr::Div(Box::new(a), Box::new(b))
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    if let Expr::Num(k) = b {
        if k == 1.0 {
            return a;
        }
        if k == 0.0 {
            return Expr::Num(1.0);
        }
        return Expr::Pow(Box::new(a), Box::new(Expr::Num(k)));
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

pub(crate) fn fun(f: Func, a: Expr) -> Expr {
    Expr::Fun(f, Box::new(a))
}

// Printing with minimal parentheses; `parse(print(e))` reconstructs the
// same tree for any parser-produced `e`.

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_prec(self, f, 0)
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Num(v) if *v < 0.0 => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, f: &mut std::fmt::Formatter<'_>, min: u8) -> std::fmt::Result {
    let p = prec(e);
    if p < min {
        write!(f, "(")?;
    }
    match e {
        Expr::Num(v) => write!(f, "{:?}", v)?,
        Expr::Var(n) => write!(f, "{}", n)?,
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_prec(a, f, 4)?;
        }
        Expr::Add(a, b) => {
            write_prec(a, f, 1)?;
            write!(f, " + ")?;
            write_prec(b, f, 2)?;
        }
        Expr::Sub(a, b) => {
            write_prec(a, f, 1)?;
            write!(f, " - ")?;
            write_prec(b, f, 2)?;
        }
        Expr::Mul(a, b) => {
            write_prec(a, f, 2)?;
            write!(f, "*")?;
            write_prec(b, f, 3)?;
        }
        Expr::Div(a, b) => {
            write_prec(a, f, 2)?;
            write!(f, "/")?;
            write_prec(b, f, 3)?;
        }
        Expr::Pow(a, b) => {
            write_prec(a, f, 5)?;
            write!(f, "^")?;
            write_prec(b, f, 3)?;
        }
        Expr::Fun(func, a) => {
            write!(f, "{}(", func.name())?;
            write_prec(a, f, 0)?;
            write!(f, ")")?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}
