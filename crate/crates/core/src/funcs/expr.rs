use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

/// Branch-cut direction attached to a `log` or fractional power.
///
/// The branch takes `arg(w)` in `(angle - 2π, angle]`; `angle = π` is the
/// principal branch. The angle is not reduced modulo 2π: its representative
/// selects which sheet the half-open range covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut(pub f64);

impl Cut {
    pub const PRINCIPAL: Cut = Cut(std::f64::consts::PI);
}

/// Expression tree over the variable `x`.
///
/// Numeric literals are exact non-negative rationals in parsed input; the
/// simplifier may produce negative ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigRational),
    I,
    Pi,
    E,
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Rational power. Integer exponents (denominator 1) are single-valued
    /// and ignore `cut`.
    Pow {
        base: Box<Expr>,
        exp: Ratio<i64>,
        cut: Option<Cut>,
    },
    Exp(Box<Expr>),
    Log {
        arg: Box<Expr>,
        cut: Option<Cut>,
    },
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

pub fn x() -> Expr {
    Expr::X
}

pub fn int(n: i64) -> Expr {
    Expr::Num(BigRational::from_integer(BigInt::from(n)))
}

pub fn rat(p: i64, q: i64) -> Expr {
    Expr::Num(BigRational::new(BigInt::from(p), BigInt::from(q)))
}

/// Exact complex constant `re + im·i` (each part converted exactly from f64).
pub fn complex(z: Complex64) -> Expr {
    let re = BigRational::from_f64(z.re).expect("finite real part");
    let im = BigRational::from_f64(z.im).expect("finite imaginary part");
    let re_e = Expr::Num(re.clone()).simplify();
    if im.is_zero() {
        return re_e;
    }
    let im_e = Expr::Num(im).simplify() * Expr::I;
    if re.is_zero() {
        im_e.simplify()
    } else {
        (re_e + im_e).simplify()
    }
}

pub fn exp(e: Expr) -> Expr {
    Expr::Exp(Box::new(e))
}

pub fn log(e: Expr) -> Expr {
    Expr::Log {
        arg: Box::new(e),
        cut: None,
    }
}

pub fn sin(e: Expr) -> Expr {
    Expr::Sin(Box::new(e))
}

pub fn cos(e: Expr) -> Expr {
    Expr::Cos(Box::new(e))
}

pub fn powi(base: Expr, n: i64) -> Expr {
    Expr::Pow {
        base: Box::new(base),
        exp: Ratio::from_integer(n),
        cut: None,
    }
}

pub fn powr(base: Expr, p: i64, q: i64) -> Expr {
    Expr::Pow {
        base: Box::new(base),
        exp: Ratio::new(p, q),
        cut: None,
    }
}

macro_rules! bin_op {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

bin_op!(Add, add, Add);
bin_op!(Sub, sub, Sub);
bin_op!(Mul, mul, Mul);
bin_op!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print(self))
    }
}

impl Expr {
    pub fn is_num(&self) -> bool {
        matches!(self, Expr::Num(_))
    }

    fn as_num(&self) -> Option<&BigRational> {
        match self {
            Expr::Num(r) => Some(r),
            _ => None,
        }
    }

    fn is_zero_num(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    fn is_one_num(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::X => false,
            Expr::Num(_) | Expr::I | Expr::Pi | Expr::E => true,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => a.is_constant(),
            Expr::Log { arg, .. } => arg.is_constant(),
            Expr::Pow { base, .. } => base.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::I | Expr::Pi | Expr::E | Expr::X => 1,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => 1 + a.size(),
            Expr::Log { arg, .. } => 1 + arg.size(),
            Expr::Pow { base, .. } => 1 + base.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Replaces every occurrence of `x` by `value`.
    pub fn substitute(&self, value: &Expr) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(value));
        match self {
            Expr::X => value.clone(),
            Expr::Num(_) | Expr::I | Expr::Pi | Expr::E => self.clone(),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Pow { base, exp, cut } => Expr::Pow {
                base: s(base),
                exp: *exp,
                cut: *cut,
            },
            Expr::Exp(a) => Expr::Exp(s(a)),
            Expr::Log { arg, cut } => Expr::Log {
                arg: s(arg),
                cut: *cut,
            },
            Expr::Sin(a) => Expr::Sin(s(a)),
            Expr::Cos(a) => Expr::Cos(s(a)),
        }
    }

    /// Bottom-up algebraic clean-up: exact rational constant folding and the
    /// usual neutral/absorbing element rules. Never changes the value of the
    /// expression at any point where it is defined.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) | I | Pi | E | X => self.clone(),
            Neg(a) => match a.simplify() {
                Num(r) => Num(-r),
                Neg(inner) => *inner,
                other => Neg(Box::new(other)),
            },
            Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(p), Num(q)) => Num(p + q),
                    _ if a.is_zero_num() => b,
                    _ if b.is_zero_num() => a,
                    (_, Neg(inner)) => Sub(Box::new(a.clone()), inner.clone()),
                    _ => Add(Box::new(a), Box::new(b)),
                }
            }
            Sub(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(p), Num(q)) => Num(p - q),
                    _ if b.is_zero_num() => a,
                    _ if a.is_zero_num() => Neg(Box::new(b)).simplify(),
                    _ if a == b => Num(BigRational::zero()),
                    _ => Sub(Box::new(a), Box::new(b)),
                }
            }
            Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(p), Num(q)) => Num(p * q),
                    _ if a.is_zero_num() || b.is_zero_num() => Num(BigRational::zero()),
                    _ if a.is_one_num() => b,
                    _ if b.is_one_num() => a,
                    (Num(p), _) if *p == -BigRational::one() => Neg(Box::new(b)).simplify(),
                    (_, Num(q)) if *q == -BigRational::one() => Neg(Box::new(a)).simplify(),
                    // keep numeric factors on the left
                    (_, Num(_)) => Mul(Box::new(b), Box::new(a)),
                    (Num(p), Mul(c, d)) if c.is_num() => {
                        let q = c.as_num().unwrap();
                        Mul(Box::new(Num(p * q)), d.clone())
                    }
                    _ => Mul(Box::new(a), Box::new(b)),
                }
            }
            Div(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Num(p), Num(q)) if !q.is_zero() => Num(p / q),
                    _ if b.is_one_num() => a,
                    _ if a.is_zero_num() && !b.is_zero_num() => Num(BigRational::zero()),
                    (_, Num(q)) if !q.is_zero() => {
                        Mul(Box::new(Num(q.recip())), Box::new(a.clone())).simplify()
                    }
                    _ if a == b && !b.is_zero_num() && b.is_constant() => Num(BigRational::one()),
                    _ => Div(Box::new(a), Box::new(b)),
                }
            }
            Pow { base, exp, cut } => {
                let base = base.simplify();
                if exp.is_integer() {
                    let n = exp.to_integer();
                    if n == 0 {
                        return Num(BigRational::one());
                    }
                    if n == 1 {
                        return base;
                    }
                    if let Num(r) = &base {
                        if !(r.is_zero() && n < 0) && n.unsigned_abs() <= 64 {
                            return Num(num_traits::pow::Pow::pow(r, n as i32));
                        }
                    }
                    if let Pow {
                        base: inner,
                        exp: e2,
                        ..
                    } = &base
                    {
                        if e2.is_integer() {
                            return Pow {
                                base: inner.clone(),
                                exp: *e2 * *exp,
                                cut: None,
                            };
                        }
                    }
                    return Pow {
                        base: Box::new(base),
                        exp: *exp,
                        cut: None,
                    };
                }
                Pow {
                    base: Box::new(base),
                    exp: *exp,
                    cut: *cut,
                }
            }
            Exp(a) => {
                let a = a.simplify();
                if a.is_zero_num() {
                    Num(BigRational::one())
                } else {
                    Exp(Box::new(a))
                }
            }
            Log { arg, cut } => {
                let a = arg.simplify();
                if a.is_one_num() && cut.is_none() {
                    Num(BigRational::zero())
                } else {
                    Log {
                        arg: Box::new(a),
                        cut: *cut,
                    }
                }
            }
            Sin(a) => {
                let a = a.simplify();
                if a.is_zero_num() {
                    Num(BigRational::zero())
                } else {
                    Sin(Box::new(a))
                }
            }
            Cos(a) => {
                let a = a.simplify();
                if a.is_zero_num() {
                    Num(BigRational::one())
                } else {
                    Cos(Box::new(a))
                }
            }
        }
    }

    /// Coefficients (ascending degree) when the expression is a polynomial in
    /// `x` with complex constant coefficients.
    pub fn as_polynomial(&self) -> Option<Vec<Complex64>> {
        use Expr::*;
        let constant = |z: Complex64| Some(vec![z]);
        match self {
            Num(r) => constant(Complex64::new(r.to_f64()?, 0.0)),
            I => constant(Complex64::new(0.0, 1.0)),
            Pi => constant(Complex64::new(std::f64::consts::PI, 0.0)),
            E => constant(Complex64::new(std::f64::consts::E, 0.0)),
            X => Some(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
            Neg(a) => Some(a.as_polynomial()?.into_iter().map(|c| -c).collect()),
            Add(a, b) | Sub(a, b) => {
                let (p, q) = (a.as_polynomial()?, b.as_polynomial()?);
                let sign = if matches!(self, Sub(..)) { -1.0 } else { 1.0 };
                let mut out = vec![Complex64::new(0.0, 0.0); p.len().max(q.len())];
                for (k, c) in p.iter().enumerate() {
                    out[k] += c;
                }
                for (k, c) in q.iter().enumerate() {
                    out[k] += c * sign;
                }
                Some(trim(out))
            }
            Mul(a, b) => Some(trim(poly_mul(&a.as_polynomial()?, &b.as_polynomial()?))),
            Div(a, b) => {
                let q = b.as_polynomial()?;
                if q.len() != 1 || q[0] == Complex64::new(0.0, 0.0) {
                    return None;
                }
                Some(a.as_polynomial()?.into_iter().map(|c| c / q[0]).collect())
            }
            Pow { base, exp, .. } => {
                if !exp.is_integer() || *exp.numer() < 0 {
                    return None;
                }
                let p = base.as_polynomial()?;
                let mut acc = vec![Complex64::new(1.0, 0.0)];
                for _ in 0..exp.to_integer() {
                    acc = poly_mul(&acc, &p);
                }
                Some(trim(acc))
            }
            Exp(a) if a.is_constant() => {
                let c = super::eval::eval(self, Complex64::new(0.0, 0.0)).ok()?;
                constant(c)
            }
            Sin(a) | Cos(a) if a.is_constant() => {
                let c = super::eval::eval(self, Complex64::new(0.0, 0.0)).ok()?;
                constant(c)
            }
            Log { arg, .. } if arg.is_constant() => {
                let c = super::eval::eval(self, Complex64::new(0.0, 0.0)).ok()?;
                constant(c)
            }
            _ => None,
        }
    }

    /// Exact rational value of a constant integer power-free tree, if any.
    pub fn rational_value(&self) -> Option<BigRational> {
        match self.simplify() {
            Expr::Num(r) => Some(r),
            _ => None,
        }
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Num(_) | Expr::I | Expr::Pi | Expr::E | Expr::X => {}
            Expr::Neg(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => a.walk(visit),
            Expr::Log { arg, .. } => arg.walk(visit),
            Expr::Pow { base, .. } => base.walk(visit),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }

    /// Rebuilds the tree, letting `f` replace branch nodes (`log`, fractional
    /// powers) bottom-up.
    pub fn map_branch_nodes(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
        use Expr::*;
        let mut m = |e: &Expr| Box::new(e.map_branch_nodes(f));
        match self {
            Num(_) | I | Pi | E | X => self.clone(),
            Neg(a) => Neg(m(a)),
            Add(a, b) => {
                let a = m(a);
                Add(a, m(b))
            }
            Sub(a, b) => {
                let a = m(a);
                Sub(a, m(b))
            }
            Mul(a, b) => {
                let a = m(a);
                Mul(a, m(b))
            }
            Div(a, b) => {
                let a = m(a);
                Div(a, m(b))
            }
            Exp(a) => Exp(m(a)),
            Sin(a) => Sin(m(a)),
            Cos(a) => Cos(m(a)),
            Log { arg, cut } => {
                let rebuilt = Log {
                    arg: m(arg),
                    cut: *cut,
                };
                f(&rebuilt)
            }
            Pow { base, exp, cut } => {
                let rebuilt = Pow {
                    base: m(base),
                    exp: *exp,
                    cut: *cut,
                };
                if exp.is_integer() {
                    rebuilt
                } else {
                    f(&rebuilt)
                }
            }
        }
    }
}

fn poly_mul(p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn trim(mut p: Vec<Complex64>) -> Vec<Complex64> {
    while p.len() > 1 && p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    p
}

/// `Ratio<i64>` → `f64`.
pub(crate) fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub(crate) fn bigrational_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplify_folds_constants() {
        let e = (int(2) * int(3) + int(0) * x()) / int(2);
        assert_eq!(e.simplify(), int(3));
        let e = powi(x(), 1) * int(1) - int(0);
        assert_eq!(e.simplify(), x());
    }

    #[test]
    fn polynomial_extraction() {
        let e = powi(x() - int(1), 2) + int(3) * x();
        let p = e.as_polynomial().unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p[2] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(sin(x()).as_polynomial().is_none());
    }

    #[test]
    fn complex_constant_is_exact() {
        let z = Complex64::new(0.5, -2.0);
        let e = complex(z);
        let v = super::super::eval::eval(&e, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(v, z);
    }
}
