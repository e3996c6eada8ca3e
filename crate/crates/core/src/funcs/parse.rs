use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::Zero;

use super::expr::{Cut, Expr};
use crate::error::{Error, Result};

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => return self.number(start).map(|t| (t, start)),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                return Ok((Tok::Ident(s.to_string()), start));
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            _ => {
                let ch = std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    // decimal `12.5`, or rational `p/q` when both sides are digit runs with no spaces
    fn number(&mut self, start: usize) -> Result<Tok> {
        let int_part = self.digits();
        let mut value = if int_part.is_empty() {
            BigRational::zero()
        } else {
            BigRational::from_integer(int_part.parse::<BigInt>().unwrap())
        };
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.digits();
            if int_part.is_empty() && frac.is_empty() {
                return Err(Error::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
            if !frac.is_empty() {
                let den = num_traits::pow(BigInt::from(10), frac.len());
                value += BigRational::new(frac.parse::<BigInt>().unwrap(), den);
            }
            return Ok(Tok::Num(value));
        }
        if self.src.get(self.pos) == Some(&b'/')
            && self.src.get(self.pos + 1).is_some_and(|b| b.is_ascii_digit())
        {
            let save = self.pos;
            self.pos += 1;
            let den = self.digits().parse::<BigInt>().unwrap();
            if den.is_zero() {
                self.pos = save;
            } else {
                value /= BigRational::from_integer(den);
            }
        }
        Ok(Tok::Num(value))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    depth: usize,
}

/// Parses the expression language.
///
/// ```text
/// expr  := term (("+"|"-") term)*
/// term  := unary (("*"|"/") unary)*
/// unary := "-" unary | power
/// power := atom ("^" exponent ("[" angle "]")?)?
/// exponent := integer | "(" "-"? integer ("/" integer)? ")"
/// atom  := number | "i" | "pi" | "e" | "x" | func ("[" angle "]")? "(" expr ")" | "(" expr ")"
/// ```
///
/// An optional `[angle]` attaches a branch cut (see [`Cut`]).
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut lex = Lexer {
        src: text.as_bytes(),
        pos: 0,
    };
    let (tok, at) = lex.next()?;
    let mut p = Parser {
        lex,
        tok,
        at,
        depth: 0,
    };
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.at,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.tok == t {
            self.bump()
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.tok == Tok::Minus {
            self.enter()?;
            self.bump()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let exp = self.exponent()?;
        let cut = self.cut()?;
        if cut.is_some() && exp.is_integer() {
            return Err(self.error("branch annotation on an integer power"));
        }
        Ok(Expr::Pow {
            base: Box::new(base),
            exp,
            cut,
        })
    }

    fn small_int(&mut self) -> Result<i64> {
        match &self.tok {
            Tok::Num(r) if r.is_integer() => {
                let v: i64 = r
                    .to_integer()
                    .try_into()
                    .map_err(|_| self.error("exponent too large"))?;
                self.bump()?;
                Ok(v)
            }
            _ => Err(self.error("expected integer exponent")),
        }
    }

    fn exponent(&mut self) -> Result<Ratio<i64>> {
        match &self.tok {
            Tok::Num(r) if r.is_integer() => Ok(Ratio::from_integer(self.small_int()?)),
            Tok::Num(r) => {
                // a literal `p/q` directly after `^`
                let (n, d) = (r.numer().clone(), r.denom().clone());
                let n: i64 = n.try_into().map_err(|_| self.error("exponent too large"))?;
                let d: i64 = d.try_into().map_err(|_| self.error("exponent too large"))?;
                self.bump()?;
                Ok(Ratio::new(n, d))
            }
            Tok::LParen => {
                self.bump()?;
                let neg = if self.tok == Tok::Minus {
                    self.bump()?;
                    true
                } else {
                    false
                };
                let r = match &self.tok {
                    Tok::Num(r) => {
                        let r = r.clone();
                        let n: i64 = r
                            .numer()
                            .clone()
                            .try_into()
                            .map_err(|_| self.error("exponent too large"))?;
                        let d: i64 = r
                            .denom()
                            .clone()
                            .try_into()
                            .map_err(|_| self.error("exponent too large"))?;
                        self.bump()?;
                        let mut r = Ratio::new(n, d);
                        if self.tok == Tok::Slash {
                            self.bump()?;
                            let q = self.small_int()?;
                            if q == 0 {
                                return Err(self.error("zero denominator in exponent"));
                            }
                            r /= Ratio::from_integer(q);
                        }
                        r
                    }
                    _ => return Err(self.error("expected rational exponent")),
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(if neg { -r } else { r })
            }
            _ => Err(self.error("expected exponent")),
        }
    }

    fn cut(&mut self) -> Result<Option<Cut>> {
        if self.tok != Tok::LBracket {
            return Ok(None);
        }
        let start = self.at + 1;
        let src = self.lex.src;
        let mut end = start;
        while end < src.len() && src[end] != b']' {
            end += 1;
        }
        if end >= src.len() {
            return Err(self.error("unterminated branch annotation"));
        }
        let text = std::str::from_utf8(&src[start..end]).unwrap().trim();
        let angle: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("bad branch angle `{text}`"),
        })?;
        if !angle.is_finite() {
            return Err(Error::Syntax {
                offset: start,
                message: "branch angle must be finite".into(),
            });
        }
        self.lex.pos = end + 1;
        self.bump()?;
        Ok(Some(Cut(angle)))
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.at;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(r) => {
                self.bump()?;
                Ok(Expr::Num(r))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "i" => Ok(Expr::I),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    "exp" | "log" | "sin" | "cos" => {
                        let cut = self.cut()?;
                        if cut.is_some() && name != "log" {
                            return Err(Error::Syntax {
                                offset: at,
                                message: format!("`{name}` takes no branch annotation"),
                            });
                        }
                        self.expect(Tok::LParen, "`(` after function name")?;
                        let arg = Box::new(self.expr()?);
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(match name.as_str() {
                            "exp" => Expr::Exp(arg),
                            "log" => Expr::Log { arg, cut },
                            "sin" => Expr::Sin(arg),
                            _ => Expr::Cos(arg),
                        })
                    }
                    _ => Err(Error::UnknownIdentifier { name, offset: at }),
                }
            }
            Tok::End => Err(Error::Syntax {
                offset: at,
                message: "unexpected end of input".into(),
            }),
            other => {
                self.tok = other;
                Err(self.error("expected a number, variable, constant or `(`"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::expr::{int, rat, x};

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2*x^2").unwrap();
        assert_eq!(e, int(1) + int(2) * crate::funcs::expr::powi(x(), 2));
        let e = parse_expr("-x^2").unwrap();
        assert!(matches!(e, Expr::Neg(_)));
        let e = parse_expr("x - 1 - 2").unwrap();
        assert_eq!(e, (x() - int(1)) - int(2));
    }

    #[test]
    fn rational_literals() {
        assert_eq!(parse_expr("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_expr("0.25").unwrap(), rat(1, 4));
        assert_eq!(
            parse_expr("1 / 2").unwrap(),
            Expr::Div(Box::new(int(1)), Box::new(int(2)))
        );
    }

    #[test]
    fn fractional_exponent_and_cut() {
        let e = parse_expr("(x - 1)^(1/2)[1.5]").unwrap();
        match e {
            Expr::Pow { exp, cut, .. } => {
                assert_eq!(exp, Ratio::new(1, 2));
                assert_eq!(cut, Some(Cut(1.5)));
            }
            _ => panic!(),
        }
        assert!(parse_expr("log[-2.5](x)").is_ok());
        assert!(parse_expr("x^(-3)").is_ok());
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expr("x + * 2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse_expr("2*foo(x)") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("(x").is_err());
        assert!(parse_expr("x^y").is_err());
        assert!(parse_expr("x $").is_err());
    }
}
