use num_rational::{BigRational, Ratio};
use num_traits::Signed;

use super::expr::{Cut, Expr};

/// Canonical text form; `parse_expr(&print(e)) == e` for every tree the
/// parser can produce.
pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    write(e, 1, &mut out);
    out
}

fn num(r: &BigRational, out: &mut String) {
    if r.is_negative() {
        out.push_str("(-");
        num(&-r, out);
        out.push(')');
    } else if r.is_integer() {
        out.push_str(&r.numer().to_string());
    } else {
        out.push_str(&format!("{}/{}", r.numer(), r.denom()));
    }
}

fn exponent(r: Ratio<i64>, out: &mut String) {
    if r.is_integer() && *r.numer() >= 0 {
        out.push_str(&r.numer().to_string());
    } else if r.is_integer() {
        out.push_str(&format!("({})", r.numer()));
    } else {
        out.push_str(&format!("({}/{})", r.numer(), r.denom()));
    }
}

fn cut(c: &Option<Cut>, out: &mut String) {
    if let Some(Cut(a)) = c {
        out.push_str(&format!("[{a:?}]"));
    }
}

// precedence: 1 sum, 2 product, 3 unary, 4 power, 5 atom
fn write(e: &Expr, min: u8, out: &mut String) {
    let (prec, body) = match e {
        Expr::Num(r) => {
            let mut s = String::new();
            num(r, &mut s);
            (5, s)
        }
        Expr::I => (5, "i".into()),
        Expr::Pi => (5, "pi".into()),
        Expr::E => (5, "e".into()),
        Expr::X => (5, "x".into()),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let mut s = String::new();
            write(a, 1, &mut s);
            s.push_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " });
            write(b, 2, &mut s);
            (1, s)
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            let mut s = String::new();
            write(a, 2, &mut s);
            s.push_str(if matches!(e, Expr::Mul(..)) { "*" } else { " / " });
            write(b, 3, &mut s);
            (2, s)
        }
        Expr::Neg(a) => {
            let mut s = String::from("-");
            write(a, 3, &mut s);
            (3, s)
        }
        Expr::Pow { base, exp, cut: c } => {
            let mut s = String::new();
            write(base, 5, &mut s);
            s.push('^');
            exponent(*exp, &mut s);
            cut(c, &mut s);
            (4, s)
        }
        Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => {
            let name = match e {
                Expr::Exp(_) => "exp",
                Expr::Sin(_) => "sin",
                _ => "cos",
            };
            let mut s = format!("{name}(");
            write(a, 1, &mut s);
            s.push(')');
            (5, s)
        }
        Expr::Log { arg, cut: c } => {
            let mut s = String::from("log");
            cut(c, &mut s);
            s.push('(');
            write(arg, 1, &mut s);
            s.push(')');
            (5, s)
        }
    };
    if prec < min {
        out.push('(');
        out.push_str(&body);
        out.push(')');
    } else {
        out.push_str(&body);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse::parse_expr;

    #[test]
    fn round_trip_examples() {
        for s in [
            "x^2",
            "1/(x - 2)",
            "log(x - (1/2 + i))",
            "-(x + 1)^3*exp(-x) / sin(x)",
            "(x - 1)^(1/2)[4.71238898038469]",
            "log[7.5](x - 2*i)",
            "--x",
            "x - (1 - x)",
            "1 / 2*x",
            "(-x)^(-2)",
        ] {
            let e = parse_expr(s).unwrap();
            let printed = print(&e);
            assert_eq!(parse_expr(&printed).unwrap(), e, "{s} -> {printed}");
        }
        assert_eq!(print(&parse_expr("log(x - (1/2 + i))").unwrap()), "log(x - (1/2 + i))");
    }
}
