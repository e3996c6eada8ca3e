use num_complex::Complex64;
use num_rational::BigRational;

use super::expr::{Cut, Expr};
use crate::error::{Error, Result};
use crate::scalar::{Precision, Scalar};

#[derive(Debug, Clone)]
enum Op<T> {
    Const(T),
    X,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Powi(i64),
    PowFrac { r: T, branch: Option<Branch<T>> },
    Exp,
    Log { branch: Option<Branch<T>> },
    Sin,
    Cos,
}

/// Precomputed data for a non-principal cut: `log_θ(w) = Log(w·rot) + i·shift`.
#[derive(Debug, Clone)]
struct Branch<T> {
    rot: T,
    shift: T,
}

impl<T: Scalar> Branch<T> {
    fn new(cut: Option<Cut>, bits: u32) -> Option<Self> {
        let angle = cut?.0;
        if angle == std::f64::consts::PI {
            return None;
        }
        let shift = T::from_f64(angle, bits) - T::pi(bits);
        let rot = (-shift.mul_i()).exp();
        Some(Branch {
            rot,
            shift: shift.mul_i(),
        })
    }
}

/// An expression flattened into a stack program with constants already
/// converted to the working scalar type.
#[derive(Debug, Clone)]
pub struct Compiled<T> {
    ops: Vec<Op<T>>,
    bits: u32,
}

fn rational<T: Scalar>(r: &BigRational, bits: u32) -> T {
    T::from_rational(r, bits)
}

impl<T: Scalar> Compiled<T> {
    pub fn new(e: &Expr, bits: u32) -> Self {
        let mut ops = Vec::with_capacity(e.size());
        emit(e, bits, &mut ops);
        Compiled { ops, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn eval(&self, z: &T) -> Result<T> {
        let mut stack: Vec<T> = Vec::with_capacity(16);
        let point = || z.to_c64();
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => c.clone(),
                Op::X => z.clone(),
                Op::Neg => -stack.pop().unwrap(),
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => {
                            if b.is_zero() {
                                return Err(Error::domain(point(), "division by zero"));
                            }
                            a / b
                        }
                    }
                }
                Op::Powi(n) => {
                    let a = stack.pop().unwrap();
                    if *n < 0 && a.is_zero() {
                        return Err(Error::domain(point(), "negative power of zero"));
                    }
                    a.powi(*n)
                }
                Op::PowFrac { r, branch } => {
                    let a = stack.pop().unwrap();
                    if a.is_zero() {
                        if r.re() > 0.0 {
                            T::zero(self.bits)
                        } else {
                            return Err(Error::domain(point(), "branch point of a power"));
                        }
                    } else {
                        (r.clone() * log_branch(&a, branch.as_ref(), point)?).exp()
                    }
                }
                Op::Exp => stack.pop().unwrap().exp(),
                Op::Log { branch } => {
                    let a = stack.pop().unwrap();
                    if a.is_zero() {
                        return Err(Error::domain(point(), "logarithm of zero"));
                    }
                    log_branch(&a, branch.as_ref(), point)?
                }
                Op::Sin => stack.pop().unwrap().sin(),
                Op::Cos => stack.pop().unwrap().cos(),
            };
            if !v.is_finite() {
                return Err(Error::Overflow { point: point() });
            }
            stack.push(v);
        }
        Ok(stack.pop().unwrap())
    }
}

impl<T: Scalar> Compiled<T> {
    /// Normalized Taylor coefficients `f^{(k)}(z0)/k!`, `k < order`, by
    /// forward-mode jet propagation through the program.
    pub fn taylor(&self, z0: &T, order: usize) -> Result<Vec<T>> {
        assert!(order >= 1);
        let bits = self.bits;
        let zero = T::zero(bits);
        let point = || z0.to_c64();
        let constant = |c: T| {
            let mut v = vec![zero.clone(); order];
            v[0] = c;
            v
        };
        let mut stack: Vec<Vec<T>> = Vec::new();
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => constant(c.clone()),
                Op::X => {
                    let mut v = constant(z0.clone());
                    if order > 1 {
                        v[1] = T::one(bits);
                    }
                    v
                }
                Op::Neg => stack.pop().unwrap().into_iter().map(|c| -c).collect(),
                Op::Add | Op::Sub => {
                    let q = stack.pop().unwrap();
                    let p = stack.pop().unwrap();
                    p.into_iter()
                        .zip(q)
                        .map(|(a, b)| if matches!(op, Op::Add) { a + b } else { a - b })
                        .collect()
                }
                Op::Mul => {
                    let q = stack.pop().unwrap();
                    let p = stack.pop().unwrap();
                    jet_mul(&p, &q, bits)
                }
                Op::Div => {
                    let q = stack.pop().unwrap();
                    let p = stack.pop().unwrap();
                    if q[0].is_zero() {
                        return Err(Error::domain(point(), "division by zero"));
                    }
                    jet_div(&p, &q)
                }
                Op::Powi(n) => {
                    let a = stack.pop().unwrap();
                    if *n >= 0 {
                        let mut acc = constant(T::one(bits));
                        let mut base = a;
                        let mut e = *n as u64;
                        while e > 0 {
                            if e & 1 == 1 {
                                acc = jet_mul(&acc, &base, bits);
                            }
                            e >>= 1;
                            if e > 0 {
                                base = jet_mul(&base, &base, bits);
                            }
                        }
                        acc
                    } else {
                        if a[0].is_zero() {
                            return Err(Error::domain(point(), "negative power of zero"));
                        }
                        let r = T::from_int(*n, bits);
                        jet_pow(&a, &r, a[0].powi(*n), bits)
                    }
                }
                Op::PowFrac { r, branch } => {
                    let a = stack.pop().unwrap();
                    if a[0].is_zero() {
                        return Err(Error::domain(point(), "branch point of a power"));
                    }
                    let p0 = (r.clone() * log_branch(&a[0], branch.as_ref(), point)?).exp();
                    jet_pow(&a, r, p0, bits)
                }
                Op::Exp => {
                    let a = stack.pop().unwrap();
                    let mut e = vec![a[0].exp()];
                    for k in 1..order {
                        let mut s = zero.clone();
                        for j in 1..=k {
                            s = s + a[j].scale(j as f64) * e[k - j].clone();
                        }
                        e.push(s.div_u(k as u64));
                    }
                    e
                }
                Op::Log { branch } => {
                    let a = stack.pop().unwrap();
                    if a[0].is_zero() {
                        return Err(Error::domain(point(), "logarithm of zero"));
                    }
                    let mut l = vec![log_branch(&a[0], branch.as_ref(), point)?];
                    for k in 1..order {
                        let mut s = zero.clone();
                        for j in 1..k {
                            s = s + l[j].scale(j as f64) * a[k - j].clone();
                        }
                        l.push((a[k].clone() - s.div_u(k as u64)) / a[0].clone());
                    }
                    l
                }
                Op::Sin | Op::Cos => {
                    let a = stack.pop().unwrap();
                    let mut s = vec![a[0].sin()];
                    let mut c = vec![a[0].cos()];
                    for k in 1..order {
                        let mut ds = zero.clone();
                        let mut dc = zero.clone();
                        for j in 1..=k {
                            let aj = a[j].scale(j as f64);
                            ds = ds + aj.clone() * c[k - j].clone();
                            dc = dc - aj * s[k - j].clone();
                        }
                        s.push(ds.div_u(k as u64));
                        c.push(dc.div_u(k as u64));
                    }
                    if matches!(op, Op::Sin) {
                        s
                    } else {
                        c
                    }
                }
            };
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Overflow { point: point() });
            }
            stack.push(v);
        }
        Ok(stack.pop().unwrap())
    }
}

fn jet_mul<T: Scalar>(p: &[T], q: &[T], bits: u32) -> Vec<T> {
    let n = p.len();
    (0..n)
        .map(|k| {
            let mut s = T::zero(bits);
            for j in 0..=k {
                s = s + p[j].clone() * q[k - j].clone();
            }
            s
        })
        .collect()
}

fn jet_div<T: Scalar>(p: &[T], q: &[T]) -> Vec<T> {
    let mut c: Vec<T> = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let mut s = p[k].clone();
        for j in 0..k {
            s = s - c[j].clone() * q[k - j].clone();
        }
        c.push(s / q[0].clone());
    }
    c
}

// p = a^r with p0 = a0^r already on the right sheet
fn jet_pow<T: Scalar>(a: &[T], r: &T, p0: T, bits: u32) -> Vec<T> {
    let mut p = vec![p0];
    let one = T::one(bits);
    for k in 1..a.len() {
        let mut s = T::zero(bits);
        for j in 1..=k {
            let w = (r.clone() + one.clone()).scale(j as f64) - T::from_int(k as i64, bits);
            s = s + w * a[j].clone() * p[k - j].clone();
        }
        p.push(s / a[0].scale(k as f64));
    }
    p
}

fn log_branch<T: Scalar>(
    a: &T,
    branch: Option<&Branch<T>>,
    point: impl Fn() -> Complex64,
) -> Result<T> {
    match branch {
        None => {
            if a.on_negative_axis() {
                return Err(Error::domain(point(), "argument lies on the branch cut"));
            }
            Ok(a.ln())
        }
        Some(b) => {
            let v = a.clone() * b.rot.clone();
            if v.on_negative_axis() {
                return Err(Error::domain(point(), "argument lies on the branch cut"));
            }
            Ok(v.ln() + b.shift.clone())
        }
    }
}

fn emit<T: Scalar>(e: &Expr, bits: u32, ops: &mut Vec<Op<T>>) {
    match e {
        Expr::Num(r) => ops.push(Op::Const(rational(r, bits))),
        Expr::I => ops.push(Op::Const(T::i_unit(bits))),
        Expr::Pi => ops.push(Op::Const(T::pi(bits))),
        Expr::E => ops.push(Op::Const(T::one(bits).exp())),
        Expr::X => ops.push(Op::X),
        Expr::Neg(a) => {
            emit(a, bits, ops);
            ops.push(Op::Neg);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            emit(a, bits, ops);
            emit(b, bits, ops);
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Expr::Pow { base, exp, cut } => {
            emit(base, bits, ops);
            if exp.is_integer() {
                ops.push(Op::Powi(exp.to_integer()));
            } else {
                let r = BigRational::new((*exp.numer()).into(), (*exp.denom()).into());
                ops.push(Op::PowFrac {
                    r: rational(&r, bits),
                    branch: Branch::new(*cut, bits),
                });
            }
        }
        Expr::Exp(a) => {
            emit(a, bits, ops);
            ops.push(Op::Exp);
        }
        Expr::Log { arg, cut } => {
            emit(arg, bits, ops);
            ops.push(Op::Log {
                branch: Branch::new(*cut, bits),
            });
        }
        Expr::Sin(a) => {
            emit(a, bits, ops);
            ops.push(Op::Sin);
        }
        Expr::Cos(a) => {
            emit(a, bits, ops);
            ops.push(Op::Cos);
        }
    }
}

/// Double-precision evaluation.
pub fn eval(e: &Expr, z: Complex64) -> Result<Complex64> {
    Compiled::<Complex64>::new(e, 53).eval(&z)
}

/// Evaluates at the requested working precision and rounds the result to
/// double.
pub fn evaluate(e: &Expr, z: Complex64, precision: Precision) -> Result<Complex64> {
    if precision.is_double() {
        return eval(e, z);
    }
    let bits = precision.bits();
    let zc = rug::Complex::with_val(bits, (z.re, z.im));
    Compiled::<rug::Complex>::new(e, bits)
        .eval(&zc)
        .map(|v| v.to_c64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse::parse_expr;

    fn ev(s: &str, z: Complex64) -> Result<Complex64> {
        eval(&parse_expr(s).unwrap(), z)
    }

    #[test]
    fn basic_values() {
        assert_eq!(ev("x^2", Complex64::new(3.0, 0.0)).unwrap(), Complex64::new(9.0, 0.0));
        let e = ev("exp(x)", Complex64::new(1.0, 0.0)).unwrap();
        assert!((e.re - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn cut_is_an_error() {
        let err = ev("log(x)", Complex64::new(-1.0, 0.0)).unwrap_err();
        assert_eq!(err.code(), "E_DOMAIN");
        assert!(ev("log(x)", Complex64::new(-1.0, 1e-300)).is_ok());
        assert!(ev("1/(x-2)", Complex64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn explicit_cut_selects_sheet() {
        // cut along +i: arg in (-3π/2, π/2]
        let z = Complex64::new(-1.0, 0.0);
        let v = ev("log[1.5707963267948966](x)", z).unwrap();
        assert!((v.im + std::f64::consts::PI).abs() < 1e-15);
        // same ray one turn up: arg in (π/2, 5π/2]
        let v = ev("log[7.853981633974483](x)", Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.im - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        let s = ev("x^(1/2)[7.853981633974483]", Complex64::new(4.0, 0.0)).unwrap();
        assert!((s - Complex64::new(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn overflow_is_reported() {
        let err = ev("exp(x)", Complex64::new(1000.0, 0.0)).unwrap_err();
        assert_eq!(err.code(), "E_OVERFLOW");
    }

    #[test]
    fn high_precision_agrees() {
        let e = parse_expr("sin(x)/(x - 3) + log(x + 2*i)^(3)").unwrap();
        let z = Complex64::new(0.3, 0.7);
        let a = eval(&e, z).unwrap();
        let b = evaluate(&e, z, Precision::digits(50)).unwrap();
        assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm());
    }

    #[test]
    fn taylor_matches_known_series() {
        let e = parse_expr("exp(2*x)/(1 - x) + log(1 + x)*sin(x)^2 + (1 + x)^(1/2)").unwrap();
        let c = Compiled::<Complex64>::new(&e, 53);
        let t = c.taylor(&Complex64::new(0.0, 0.0), 8).unwrap();
        // sum the series at a small point and compare with direct evaluation
        let h = Complex64::new(0.01, 0.005);
        let mut s = Complex64::new(0.0, 0.0);
        for (k, ck) in t.iter().enumerate() {
            s += ck * h.powu(k as u32);
        }
        let direct = c.eval(&h).unwrap();
        assert!((s - direct).norm() < 1e-14, "{s} vs {direct}");
        assert!((t[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn taylor_of_pole_coefficients() {
        let e = parse_expr("1/(x - 2)").unwrap();
        let t = Compiled::<Complex64>::new(&e, 53)
            .taylor(&Complex64::new(1.0, 0.0), 30)
            .unwrap();
        for c in t {
            assert!((c + Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn deterministic() {
        let e = parse_expr("exp(x)*cos(x)/(1 + x^2)").unwrap();
        let z = Complex64::new(0.1234, -2.5);
        assert_eq!(eval(&e, z).unwrap().re.to_bits(), eval(&e, z).unwrap().re.to_bits());
    }
}
