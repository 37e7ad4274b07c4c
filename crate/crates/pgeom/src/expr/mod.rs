//! Symbolic scalar expressions over named chart coordinates.
//!
//! [`Expr`] is an immutable expression DAG (shared subtrees via `Arc`) with
//! exact differentiation, best-effort simplification and checked numeric
//! evaluation. Construction goes through smart constructors that fold
//! constants and 0/1 identities eagerly, which keeps the derived geometric
//! expressions (Christoffel symbols, curvature, iterated Lie derivatives)
//! from exploding when most coefficients vanish.

// The by-value smart constructors share names with the operator traits; the
// traits are implemented as well and delegate here.
#![allow(clippy::should_implement_trait)]

use std::collections::HashMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

mod parser;
pub use parser::{parse, ParseError};

/// Elementary functions available in the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Expression node. Obtain via [`Expr::kind`].
#[derive(Debug)]
pub enum ExprKind {
    Const(f64),
    Var {
        name: Arc<str>,
        index: usize,
    },
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Integer power only; general powers are written via exp/ln.
    Pow(Expr, i32),
    Call(Func, Expr),
}

/// Immutable, cheaply clonable symbolic expression.
///
/// Safe to share and evaluate from concurrent workers.
#[derive(Clone)]
pub struct Expr(Arc<ExprKind>);

/// Evaluation failure. Carries a rendering of the offending subexpression.
#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("ln of non-positive value {value} in `{expr}`")]
    LnNonPositive { value: f64, expr: String },
    #[error("sqrt of negative value {value} in `{expr}`")]
    SqrtNegative { value: f64, expr: String },
    #[error("point has dimension {dim} but `{name}` has coordinate index {index}")]
    PointDimension {
        name: String,
        index: usize,
        dim: usize,
    },
    #[error("non-finite result in `{expr}`")]
    NonFinite { expr: String },
}

impl Expr {
    fn raw(kind: ExprKind) -> Expr {
        Expr(Arc::new(kind))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0
    }

    fn ptr(&self) -> *const ExprKind {
        Arc::as_ptr(&self.0)
    }

    pub fn constant(value: f64) -> Expr {
        assert!(value.is_finite(), "expression constants must be finite");
        Expr::raw(ExprKind::Const(value))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: impl Into<Arc<str>>, index: usize) -> Expr {
        Expr::raw(ExprKind::Var {
            name: name.into(),
            index,
        })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind() {
            ExprKind::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = x + y;
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::raw(ExprKind::Add(a, b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        if Arc::ptr_eq(&a.0, &b.0) {
            return Expr::zero();
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = x - y;
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::raw(ExprKind::Sub(a, b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = x * y;
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::raw(ExprKind::Mul(a, b))
    }

    /// `0/x` folds to `0`: equal on the common domain (`x != 0`).
    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if y != 0.0 {
                let v = x / y;
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::raw(ExprKind::Div(a, b))
    }

    pub fn neg(a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            return Expr::constant(-x);
        }
        if let ExprKind::Neg(inner) = a.kind() {
            return inner.clone();
        }
        Expr::raw(ExprKind::Neg(a))
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return a;
        }
        if let Some(x) = a.as_const() {
            let v = x.powi(n);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        if let ExprKind::Pow(base, m) = a.kind() {
            if let Some(k) = m.checked_mul(n) {
                return Expr::pow(base.clone(), k);
            }
        }
        Expr::raw(ExprKind::Pow(a, n))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            let v = match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Ln if x > 0.0 => x.ln(),
                Func::Sqrt if x >= 0.0 => x.sqrt(),
                _ => f64::NAN,
            };
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::raw(ExprKind::Call(f, a))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::call(Func::Ln, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self.clone())
    }

    pub fn powi(&self, n: i32) -> Expr {
        Expr::pow(self.clone(), n)
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Evaluate at a point (one shot). For many expressions over the same
    /// point use [`Evaluator`], which shares work across the DAG.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        Evaluator::new(point).eval(self)
    }

    /// Exact partial derivative with respect to the coordinate of the given
    /// chart index.
    pub fn diff(&self, index: usize) -> Expr {
        let mut memo: HashMap<*const ExprKind, Expr> = HashMap::new();
        self.diff_memo(index, &mut memo)
    }

    fn diff_memo(&self, index: usize, memo: &mut HashMap<*const ExprKind, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr()) {
            return hit.clone();
        }
        let out = match self.kind() {
            ExprKind::Const(_) => Expr::zero(),
            ExprKind::Var { index: i, .. } => {
                if *i == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::Neg(a) => Expr::neg(a.diff_memo(index, memo)),
            ExprKind::Add(a, b) => Expr::add(a.diff_memo(index, memo), b.diff_memo(index, memo)),
            ExprKind::Sub(a, b) => Expr::sub(a.diff_memo(index, memo), b.diff_memo(index, memo)),
            ExprKind::Mul(a, b) => {
                let da = a.diff_memo(index, memo);
                let db = b.diff_memo(index, memo);
                Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
            }
            ExprKind::Div(a, b) => {
                let da = a.diff_memo(index, memo);
                let db = b.diff_memo(index, memo);
                // (a'b - ab') / b^2
                let num = Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db));
                Expr::div(num, Expr::pow(b.clone(), 2))
            }
            ExprKind::Pow(a, n) => {
                let da = a.diff_memo(index, memo);
                Expr::mul(
                    Expr::mul(Expr::constant(f64::from(*n)), Expr::pow(a.clone(), n - 1)),
                    da,
                )
            }
            ExprKind::Call(f, a) => {
                let da = a.diff_memo(index, memo);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => Expr::neg(a.sin()),
                    Func::Exp => a.exp(),
                    Func::Ln => Expr::div(Expr::one(), a.clone()),
                    Func::Sqrt => Expr::div(Expr::one(), Expr::mul(Expr::constant(2.0), a.sqrt())),
                };
                Expr::mul(outer, da)
            }
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Best-effort simplification: constant folding, 0/1 identities, double
    /// negation. Never required for correctness; identity checks are numeric.
    pub fn simplify(&self) -> Expr {
        let mut memo: HashMap<*const ExprKind, Expr> = HashMap::new();
        self.simplify_memo(&mut memo)
    }

    fn simplify_memo(&self, memo: &mut HashMap<*const ExprKind, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr()) {
            return hit.clone();
        }
        let out = match self.kind() {
            ExprKind::Const(_) | ExprKind::Var { .. } => self.clone(),
            ExprKind::Neg(a) => Expr::neg(a.simplify_memo(memo)),
            ExprKind::Add(a, b) => Expr::add(a.simplify_memo(memo), b.simplify_memo(memo)),
            ExprKind::Sub(a, b) => Expr::sub(a.simplify_memo(memo), b.simplify_memo(memo)),
            ExprKind::Mul(a, b) => Expr::mul(a.simplify_memo(memo), b.simplify_memo(memo)),
            ExprKind::Div(a, b) => Expr::div(a.simplify_memo(memo), b.simplify_memo(memo)),
            ExprKind::Pow(a, n) => Expr::pow(a.simplify_memo(memo), *n),
            ExprKind::Call(f, a) => Expr::call(*f, a.simplify_memo(memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Rebuild with every coordinate index shifted by `offset`.
    ///
    /// Used for vertical lifts into a product chart; names are kept.
    pub fn shift_indices(&self, offset: usize) -> Expr {
        let mut memo: HashMap<*const ExprKind, Expr> = HashMap::new();
        self.shift_memo(offset, &mut memo)
    }

    fn shift_memo(&self, offset: usize, memo: &mut HashMap<*const ExprKind, Expr>) -> Expr {
        if offset == 0 {
            return self.clone();
        }
        if let Some(hit) = memo.get(&self.ptr()) {
            return hit.clone();
        }
        let out = match self.kind() {
            ExprKind::Const(_) => self.clone(),
            ExprKind::Var { name, index } => Expr::var(name.clone(), index + offset),
            ExprKind::Neg(a) => Expr::neg(a.shift_memo(offset, memo)),
            ExprKind::Add(a, b) => {
                Expr::add(a.shift_memo(offset, memo), b.shift_memo(offset, memo))
            }
            ExprKind::Sub(a, b) => {
                Expr::sub(a.shift_memo(offset, memo), b.shift_memo(offset, memo))
            }
            ExprKind::Mul(a, b) => {
                Expr::mul(a.shift_memo(offset, memo), b.shift_memo(offset, memo))
            }
            ExprKind::Div(a, b) => {
                Expr::div(a.shift_memo(offset, memo), b.shift_memo(offset, memo))
            }
            ExprKind::Pow(a, n) => Expr::pow(a.shift_memo(offset, memo), *n),
            ExprKind::Call(f, a) => Expr::call(*f, a.shift_memo(offset, memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Largest coordinate index referenced, if any variable occurs.
    pub fn max_var_index(&self) -> Option<usize> {
        match self.kind() {
            ExprKind::Const(_) => None,
            ExprKind::Var { index, .. } => Some(*index),
            ExprKind::Neg(a) | ExprKind::Pow(a, _) | ExprKind::Call(_, a) => a.max_var_index(),
            ExprKind::Add(a, b)
            | ExprKind::Sub(a, b)
            | ExprKind::Mul(a, b)
            | ExprKind::Div(a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

/// Point-bound evaluator with a per-node memo.
///
/// Shared subtrees of a DAG are evaluated once per point, so evaluating a
/// whole family of residual expressions through one `Evaluator` costs the
/// size of the union of their DAGs. The lifetime parameter pins every
/// evaluated expression for the evaluator's lifetime, keeping the pointer
/// keys in the memo valid.
pub struct Evaluator<'a> {
    point: &'a [f64],
    cache: HashMap<*const ExprKind, f64>,
    _pin: PhantomData<&'a ExprKind>,
}

impl<'a> Evaluator<'a> {
    pub fn new(point: &'a [f64]) -> Self {
        Evaluator {
            point,
            cache: HashMap::new(),
            _pin: PhantomData,
        }
    }

    pub fn point(&self) -> &[f64] {
        self.point
    }

    pub fn eval(&mut self, e: &'a Expr) -> Result<f64, EvalError> {
        if let Some(v) = self.cache.get(&e.ptr()) {
            return Ok(*v);
        }
        let v = match e.kind() {
            ExprKind::Const(c) => *c,
            ExprKind::Var { name, index } => {
                if *index >= self.point.len() {
                    return Err(EvalError::PointDimension {
                        name: name.to_string(),
                        index: *index,
                        dim: self.point.len(),
                    });
                }
                self.point[*index]
            }
            ExprKind::Neg(a) => -self.eval(a)?,
            ExprKind::Add(a, b) => self.eval(a)? + self.eval(b)?,
            ExprKind::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            ExprKind::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            ExprKind::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero {
                        expr: e.to_string(),
                    });
                }
                num / den
            }
            ExprKind::Pow(a, n) => self.eval(a)?.powi(*n),
            ExprKind::Call(f, a) => {
                let x = self.eval(a)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(EvalError::LnNonPositive {
                                value: x,
                                expr: e.to_string(),
                            });
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtNegative {
                                value: x,
                                expr: e.to_string(),
                            });
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite {
                expr: e.to_string(),
            });
        }
        self.cache.insert(e.ptr(), v);
        Ok(v)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.kind(), other.kind()) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a == b,
            (
                ExprKind::Var {
                    name: n1,
                    index: i1,
                },
                ExprKind::Var {
                    name: n2,
                    index: i2,
                },
            ) => i1 == i2 && n1 == n2,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Add(a1, b1), ExprKind::Add(a2, b2))
            | (ExprKind::Sub(a1, b1), ExprKind::Sub(a2, b2))
            | (ExprKind::Mul(a1, b1), ExprKind::Mul(a2, b2))
            | (ExprKind::Div(a1, b1), ExprKind::Div(a2, b2)) => a1 == a2 && b1 == b2,
            (ExprKind::Pow(a, n), ExprKind::Pow(b, m)) => n == m && a == b,
            (ExprKind::Call(f, a), ExprKind::Call(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

// Precedence levels for printing. Must stay consistent with the parser's
// binding powers so that parse . print is the identity on parsed trees.
const PREC_ADD: u8 = 1;
const PREC_NEG: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn prec(&self) -> u8 {
        match self.kind() {
            ExprKind::Add(..) | ExprKind::Sub(..) => PREC_ADD,
            ExprKind::Neg(_) => PREC_NEG,
            ExprKind::Const(c) if *c < 0.0 => PREC_NEG,
            ExprKind::Mul(..) | ExprKind::Div(..) => PREC_MUL,
            ExprKind::Pow(..) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let needs_parens = self.prec() < min;
        if needs_parens {
            write!(f, "(")?;
        }
        match self.kind() {
            ExprKind::Const(c) => write!(f, "{c}")?,
            ExprKind::Var { name, .. } => write!(f, "{name}")?,
            ExprKind::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, PREC_MUL)?;
            }
            ExprKind::Add(a, b) => {
                a.fmt_prec(f, PREC_ADD)?;
                write!(f, " + ")?;
                b.fmt_prec(f, PREC_ADD + 1)?;
            }
            ExprKind::Sub(a, b) => {
                a.fmt_prec(f, PREC_ADD)?;
                write!(f, " - ")?;
                b.fmt_prec(f, PREC_ADD + 1)?;
            }
            ExprKind::Mul(a, b) => {
                a.fmt_prec(f, PREC_MUL)?;
                write!(f, "*")?;
                b.fmt_prec(f, PREC_MUL + 1)?;
            }
            ExprKind::Div(a, b) => {
                a.fmt_prec(f, PREC_MUL)?;
                write!(f, "/")?;
                b.fmt_prec(f, PREC_MUL + 1)?;
            }
            ExprKind::Pow(a, n) => {
                a.fmt_prec(f, PREC_ATOM)?;
                write!(f, "^{n}")?;
            }
            ExprKind::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if needs_parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(format!("x{}", i + 1), i)
    }

    #[test]
    fn smart_constructors_fold() {
        let e = Expr::add(Expr::mul(Expr::zero(), x(0)), x(1));
        assert_eq!(e, x(1));
        assert_eq!(Expr::pow(x(0), 1), x(0));
        assert_eq!(
            Expr::mul(Expr::constant(2.0), Expr::constant(3.0)),
            Expr::constant(6.0)
        );
        assert_eq!(Expr::neg(Expr::neg(x(0))), x(0));
    }

    #[test]
    fn eval_basics() {
        let e = &x(0) * &x(1);
        assert_eq!(e.eval(&[2.0, 3.0]).unwrap(), 6.0);

        let inv = Expr::div(Expr::one(), x(0));
        assert!(matches!(
            inv.eval(&[0.0, 1.0]),
            Err(EvalError::DivisionByZero { .. })
        ));

        let d = x(0).powi(3).diff(0);
        assert_eq!(d.eval(&[2.0, 0.0]).unwrap(), 12.0);
    }

    #[test]
    fn eval_domain_errors_identify_node() {
        let e = Expr::add(x(0), x(1).ln());
        let err = e.eval(&[1.0, -1.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ln"), "{msg}");
        assert!(msg.contains("x2"), "{msg}");
    }

    #[test]
    fn diff_chain_rule() {
        // d/dx2 sin(x1*x2) = x1*cos(x1*x2)
        let e = (&x(0) * &x(1)).sin();
        let d = e.diff(1);
        let p = [0.7f64, -0.3];
        let expected = p[0] * (p[0] * p[1]).cos();
        assert!((d.eval(&p).unwrap() - expected).abs() < 1e-15);
        // constants differentiate to zero
        assert_eq!(Expr::constant(4.25).diff(0), Expr::zero());
    }

    #[test]
    fn central_difference_agrees() {
        let e = Expr::add((&x(0) * &x(1)).sin(), (&x(0) + Expr::constant(2.0)).ln()) * x(1).powi(3);
        let d = e.diff(0);
        let p = [0.4, 0.8];
        let exact = d.eval(&p).unwrap();
        for h in [1e-3, 1e-4] {
            let plus = e.eval(&[p[0] + h, p[1]]).unwrap();
            let minus = e.eval(&[p[0] - h, p[1]]).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            assert!((exact - fd).abs() <= 10.0 * h * h, "h={h}: {exact} vs {fd}");
        }
    }

    #[test]
    fn display_round_trips() {
        let coords = vec!["x1".to_string(), "x2".to_string()];
        for src in [
            "x1^2 + sin(x2)",
            "-x1*x2",
            "(x1 + x2)/(1 + x1^2)",
            "x1 - (x2 - 1)",
            "sqrt(1 + x1^2)*exp(-x2)",
        ] {
            let e = parse(src, &coords).unwrap();
            let printed = e.to_string();
            let reparsed = parse(&printed, &coords).unwrap();
            assert_eq!(printed, reparsed.to_string(), "src={src}");
            let p = [0.3, 0.7];
            assert!((e.eval(&p).unwrap() - reparsed.eval(&p).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_indices_moves_vars() {
        let e = &x(0) + x(1).powi(2);
        let shifted = e.shift_indices(2);
        assert_eq!(e.eval(&[1.0, 3.0]).unwrap(), 10.0);
        assert_eq!(shifted.eval(&[0.0, 0.0, 1.0, 3.0]).unwrap(), 10.0);
    }
}
