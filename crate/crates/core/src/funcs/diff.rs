use num_rational::Ratio;

use super::expr::{int, Expr};

/// Symbolic derivative with respect to `x`, simplified.
pub fn differentiate(e: &Expr) -> Expr {
    d(e).simplify()
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn d(e: &Expr) -> Expr {
    use Expr::*;
    match e {
        Num(_) | I | Pi | E => int(0),
        X => int(1),
        Neg(a) => Neg(b(d(a))),
        Add(a, c) => Add(b(d(a)), b(d(c))),
        Sub(a, c) => Sub(b(d(a)), b(d(c))),
        Mul(a, c) => Add(
            b(Mul(b(d(a)), c.clone())),
            b(Mul(a.clone(), b(d(c)))),
        ),
        Div(a, c) => Div(
            b(Sub(
                b(Mul(b(d(a)), c.clone())),
                b(Mul(a.clone(), b(d(c)))),
            )),
            b(Pow {
                base: c.clone(),
                exp: Ratio::from_integer(2),
                cut: None,
            }),
        ),
        Pow { base, exp, cut } => {
            let lowered = *exp - Ratio::from_integer(1);
            let coeff = Expr::Num(num_rational::BigRational::new(
                (*exp.numer()).into(),
                (*exp.denom()).into(),
            ));
            let inner = Pow {
                base: base.clone(),
                exp: lowered,
                cut: if lowered.is_integer() { None } else { *cut },
            };
            Mul(b(Mul(b(coeff), b(inner))), b(d(base)))
        }
        Exp(a) => Mul(b(e.clone()), b(d(a))),
        Log { arg, .. } => Div(b(d(arg)), arg.clone()),
        Sin(a) => Mul(b(Cos(a.clone())), b(d(a))),
        Cos(a) => Neg(b(Mul(b(Sin(a.clone())), b(d(a))))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::eval::eval;
    use crate::funcs::parse::parse_expr;
    use num_complex::Complex64;

    #[test]
    fn simple_rules() {
        let e = differentiate(&parse_expr("x^2").unwrap());
        assert_eq!(crate::funcs::print::print(&e), "2*x");
        let e = differentiate(&parse_expr("log(x - 2)").unwrap());
        let v = eval(&e, Complex64::new(3.5, 0.0)).unwrap();
        assert!((v - Complex64::new(1.0 / 1.5, 0.0)).norm() < 1e-15);
        assert_eq!(differentiate(&parse_expr("pi*e + i").unwrap()), int(0));
    }

    #[test]
    fn fractional_power_keeps_cut() {
        let e = parse_expr("(x - 1)^(3/2)[7.0]").unwrap();
        let de = differentiate(&e);
        let mut seen = false;
        de.walk(&mut |n| {
            if let Expr::Pow { cut, .. } = n {
                seen |= cut.is_some();
            }
        });
        assert!(seen);
    }
}
