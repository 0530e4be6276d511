//! Expression trees for problem functions: parsing, printing, evaluation,
//! and differentiation.
//!
//! Expressions are plain ASTs over a fixed variable space. Constraint
//! functions must be smooth (no `abs`/`min`/`max`); objectives may use the
//! nonsmooth nodes, whose derivative selection rules are documented on
//! [`grad`].

mod parse;

pub use parse::parse_expr;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Names reserved for builtin functions; not usable as variable names.
pub const RESERVED: [&str; 3] = ["abs", "min", "max"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable index {index} out of range for point of dimension {dim}")]
    VarIndexOutOfRange { index: usize, dim: usize },
    #[error("invalid variable space: {0}")]
    InvalidVarSpace(String),
    #[error("no symbolic derivative for nonsmooth node `{0}`")]
    NonsmoothDerivative(&'static str),
}

/// Ordered, named variable space; the dimension of every point and gradient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarSpace {
    names: Vec<String>,
}

impl VarSpace {
    /// Builds a variable space from unique, non-reserved identifier names.
    pub fn new<I, S>(names: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ExprError::InvalidVarSpace("no variables declared".into()));
        }
        for name in &names {
            if !is_identifier(name) {
                return Err(ExprError::InvalidVarSpace(format!(
                    "`{name}` is not a valid identifier"
                )));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(ExprError::InvalidVarSpace(format!(
                    "`{name}` is a reserved function name"
                )));
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(ExprError::InvalidVarSpace(format!(
                    "duplicate variable `{name}`"
                )));
            }
        }
        Ok(VarSpace { names })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Expression AST node. Powers carry nonnegative integer exponents only;
/// `Min`/`Max` are n-ary with at least one argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    /// Negation; folds a constant operand so `-2` and `Const(-2)` are one AST.
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(base: Expr, exponent: u32) -> Expr {
        Expr::Pow(Box::new(base), exponent)
    }

    pub fn abs(e: Expr) -> Expr {
        Expr::Abs(Box::new(e))
    }

    /// N-ary minimum. Panics on an empty argument list.
    pub fn min_of(args: Vec<Expr>) -> Expr {
        assert!(!args.is_empty(), "min requires at least one argument");
        Expr::Min(args)
    }

    /// N-ary maximum. Panics on an empty argument list.
    pub fn max_of(args: Vec<Expr>) -> Expr {
        assert!(!args.is_empty(), "max requires at least one argument");
        Expr::Max(args)
    }

    /// True if the tree contains an `abs`, `min`, or `max` node.
    pub fn contains_nonsmooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Abs(_) | Expr::Min(_) | Expr::Max(_) => true,
            Expr::Neg(e) | Expr::Pow(e, _) => e.contains_nonsmooth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_nonsmooth() || b.contains_nonsmooth()
            }
        }
    }

    /// Largest variable index referenced, if any variable occurs.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Abs(e) | Expr::Pow(e, _) => e.max_var_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var_index(), b.max_var_index()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Min(args) | Expr::Max(args) => {
                args.iter().filter_map(|e| e.max_var_index()).max()
            }
        }
    }

    /// Renders the expression with variable names; the output reparses to a
    /// structurally identical tree.
    pub fn display<'a>(&'a self, vars: &'a VarSpace) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, vars }
    }

    pub fn to_text(&self, vars: &VarSpace) -> String {
        self.display(vars).to_string()
    }
}

/// Evaluates `e` at `x`. Division by zero is an error; `0^0` evaluates to 1.
pub fn eval(e: &Expr, x: &[f64]) -> Result<f64, ExprError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var(i) => x.get(*i).copied().ok_or(ExprError::VarIndexOutOfRange {
            index: *i,
            dim: x.len(),
        }),
        Expr::Neg(u) => Ok(-eval(u, x)?),
        Expr::Abs(u) => Ok(eval(u, x)?.abs()),
        Expr::Add(a, b) => Ok(eval(a, x)? + eval(b, x)?),
        Expr::Sub(a, b) => Ok(eval(a, x)? - eval(b, x)?),
        Expr::Mul(a, b) => Ok(eval(a, x)? * eval(b, x)?),
        Expr::Div(a, b) => {
            let den = eval(b, x)?;
            if den == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            Ok(eval(a, x)? / den)
        }
        Expr::Pow(u, k) => Ok(eval(u, x)?.powi(*k as i32)),
        Expr::Min(args) => {
            let mut best = f64::INFINITY;
            for a in args {
                let v = eval(a, x)?;
                if v < best {
                    best = v;
                }
            }
            Ok(best)
        }
        Expr::Max(args) => {
            let mut best = f64::NEG_INFINITY;
            for a in args {
                let v = eval(a, x)?;
                if v > best {
                    best = v;
                }
            }
            Ok(best)
        }
    }
}

/// Gradient of `e` at `x`, propagating derivatives through the tree.
///
/// Nonsmooth selection rules: the derivative of `abs` at 0 is 0; at a tie,
/// `min`/`max` take the first listed argument's derivative. For smooth trees
/// the result equals the evaluated symbolic derivative of every coordinate.
pub fn grad(e: &Expr, x: &[f64]) -> Result<Vec<f64>, ExprError> {
    Ok(eval_with_grad(e, x)?.1)
}

/// Evaluates value and gradient in one pass.
pub fn eval_with_grad(e: &Expr, x: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
    let n = x.len();
    match e {
        Expr::Const(c) => Ok((*c, vec![0.0; n])),
        Expr::Var(i) => {
            let v = x.get(*i).copied().ok_or(ExprError::VarIndexOutOfRange {
                index: *i,
                dim: n,
            })?;
            let mut g = vec![0.0; n];
            g[*i] = 1.0;
            Ok((v, g))
        }
        Expr::Neg(u) => {
            let (v, mut g) = eval_with_grad(u, x)?;
            g.iter_mut().for_each(|gi| *gi = -*gi);
            Ok((-v, g))
        }
        Expr::Abs(u) => {
            let (v, mut g) = eval_with_grad(u, x)?;
            if v > 0.0 {
                Ok((v, g))
            } else if v < 0.0 {
                g.iter_mut().for_each(|gi| *gi = -*gi);
                Ok((-v, g))
            } else {
                Ok((0.0, vec![0.0; n]))
            }
        }
        Expr::Add(a, b) => {
            let (va, mut ga) = eval_with_grad(a, x)?;
            let (vb, gb) = eval_with_grad(b, x)?;
            for (gi, hi) in ga.iter_mut().zip(&gb) {
                *gi += hi;
            }
            Ok((va + vb, ga))
        }
        Expr::Sub(a, b) => {
            let (va, mut ga) = eval_with_grad(a, x)?;
            let (vb, gb) = eval_with_grad(b, x)?;
            for (gi, hi) in ga.iter_mut().zip(&gb) {
                *gi -= hi;
            }
            Ok((va - vb, ga))
        }
        Expr::Mul(a, b) => {
            let (va, ga) = eval_with_grad(a, x)?;
            let (vb, gb) = eval_with_grad(b, x)?;
            let g = ga
                .iter()
                .zip(&gb)
                .map(|(gi, hi)| gi * vb + va * hi)
                .collect();
            Ok((va * vb, g))
        }
        Expr::Div(a, b) => {
            let (va, ga) = eval_with_grad(a, x)?;
            let (vb, gb) = eval_with_grad(b, x)?;
            if vb == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            let g = ga
                .iter()
                .zip(&gb)
                .map(|(gi, hi)| (gi * vb - va * hi) / (vb * vb))
                .collect();
            Ok((va / vb, g))
        }
        Expr::Pow(u, k) => {
            let (v, mut g) = eval_with_grad(u, x)?;
            if *k == 0 {
                return Ok((1.0, vec![0.0; n]));
            }
            let scale = *k as f64 * v.powi(*k as i32 - 1);
            g.iter_mut().for_each(|gi| *gi *= scale);
            Ok((v.powi(*k as i32), g))
        }
        Expr::Min(args) => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for a in args {
                let (v, g) = eval_with_grad(a, x)?;
                match &best {
                    Some((bv, _)) if v >= *bv => {}
                    _ => best = Some((v, g)),
                }
            }
            Ok(best.expect("min has at least one argument"))
        }
        Expr::Max(args) => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for a in args {
                let (v, g) = eval_with_grad(a, x)?;
                match &best {
                    Some((bv, _)) if v <= *bv => {}
                    _ => best = Some((v, g)),
                }
            }
            Ok(best.expect("max has at least one argument"))
        }
    }
}

/// Symbolic partial derivative with respect to variable `var`.
///
/// Defined for smooth trees only; `abs`/`min`/`max` nodes are rejected.
pub fn diff(e: &Expr, var: usize) -> Result<Expr, ExprError> {
    // Folding helpers keep product-rule output from ballooning.
    fn fadd(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (Expr::Const(z), _) if *z == 0.0 => b,
            (_, Expr::Const(z)) if *z == 0.0 => a,
            _ => Expr::add(a, b),
        }
    }
    fn fsub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            (_, Expr::Const(z)) if *z == 0.0 => a,
            _ => Expr::sub(a, b),
        }
    }
    fn fmul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (Expr::Const(z), _) | (_, Expr::Const(z)) if *z == 0.0 => Expr::Const(0.0),
            (Expr::Const(o), _) if *o == 1.0 => b,
            (_, Expr::Const(o)) if *o == 1.0 => a,
            _ => Expr::mul(a, b),
        }
    }

    match e {
        Expr::Const(_) => Ok(Expr::Const(0.0)),
        Expr::Var(i) => Ok(Expr::Const(if *i == var { 1.0 } else { 0.0 })),
        Expr::Neg(u) => Ok(Expr::neg(diff(u, var)?)),
        Expr::Add(a, b) => Ok(fadd(diff(a, var)?, diff(b, var)?)),
        Expr::Sub(a, b) => Ok(fsub(diff(a, var)?, diff(b, var)?)),
        Expr::Mul(a, b) => {
            let da = diff(a, var)?;
            let db = diff(b, var)?;
            Ok(fadd(
                fmul(da, (**b).clone()),
                fmul((**a).clone(), db),
            ))
        }
        Expr::Div(a, b) => {
            let da = diff(a, var)?;
            let db = diff(b, var)?;
            let num = fsub(
                fmul(da, (**b).clone()),
                fmul((**a).clone(), db),
            );
            Ok(Expr::div(num, Expr::pow((**b).clone(), 2)))
        }
        Expr::Pow(u, k) => {
            if *k == 0 {
                return Ok(Expr::Const(0.0));
            }
            let du = diff(u, var)?;
            let inner = if *k == 1 {
                Expr::Const(1.0)
            } else {
                fmul(Expr::Const(*k as f64), Expr::pow((**u).clone(), *k - 1))
            };
            Ok(fmul(inner, du))
        }
        Expr::Abs(_) => Err(ExprError::NonsmoothDerivative("abs")),
        Expr::Min(_) => Err(ExprError::NonsmoothDerivative("min")),
        Expr::Max(_) => Err(ExprError::NonsmoothDerivative("max")),
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    vars: &'a VarSpace,
}

// Printing precedence: sums 1, products 2, negation 3, powers 4, atoms 5.
// An operand whose own level is below the context minimum is parenthesized,
// which is exactly what makes print-parse structurally idempotent.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(c) if *c < 0.0 => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self.expr, self.vars, 1, f)
    }
}

fn write_prec(e: &Expr, vars: &VarSpace, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_prec(e, vars, 1, f)?;
        return write!(f, ")");
    }
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var(i) => write!(f, "{}", vars.name(*i)),
        Expr::Neg(u) => {
            write!(f, "-")?;
            write_prec(u, vars, 4, f)
        }
        Expr::Add(a, b) => {
            write_prec(a, vars, 1, f)?;
            write!(f, " + ")?;
            write_prec(b, vars, 2, f)
        }
        Expr::Sub(a, b) => {
            write_prec(a, vars, 1, f)?;
            write!(f, " - ")?;
            write_prec(b, vars, 2, f)
        }
        Expr::Mul(a, b) => {
            write_prec(a, vars, 2, f)?;
            write!(f, " * ")?;
            write_prec(b, vars, 3, f)
        }
        Expr::Div(a, b) => {
            write_prec(a, vars, 2, f)?;
            write!(f, " / ")?;
            write_prec(b, vars, 3, f)
        }
        Expr::Pow(base, k) => {
            write_prec(base, vars, 5, f)?;
            write!(f, "^{k}")
        }
        Expr::Abs(u) => {
            write!(f, "abs(")?;
            write_prec(u, vars, 1, f)?;
            write!(f, ")")
        }
        Expr::Min(args) => write_call(f, "min", args, vars),
        Expr::Max(args) => write_call(f, "max", args, vars),
    }
}

fn write_call(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    args: &[Expr],
    vars: &VarSpace,
) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write_prec(a, vars, 1, f)?;
    }
    write!(f, ")")
}
