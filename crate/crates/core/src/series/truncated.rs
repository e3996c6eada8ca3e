use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable a truncated series is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesVar {
    /// Borel plane variable.
    P,
    /// Inverse summation size `1/N`.
    InvN,
    /// Inverse of the `q = e^{1/x}` parameter.
    InvX,
}

impl SeriesVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesVar::P => "p",
            SeriesVar::InvN => "1/N",
            SeriesVar::InvX => "1/x",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "p" => Some(SeriesVar::P),
            "1/N" => Some(SeriesVar::InvN),
            "1/x" => Some(SeriesVar::InvX),
            _ => None,
        }
    }

    fn is_inverse(self) -> bool {
        !matches!(self, SeriesVar::P)
    }
}

impl fmt::Display for SeriesVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Σ_{n<M} c_n v^n` with `M = coeffs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub var: SeriesVar,
    pub coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    var: String,
    order: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            var: self.var.as_str().into(),
            order: self.order(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SeriesJson::deserialize(d)?;
        let var = SeriesVar::parse(&j.var)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown variable {}", j.var)))?;
        if j.coeffs.len() != j.order {
            return Err(serde::de::Error::custom("order does not match coefficient count"));
        }
        Ok(TruncatedSeries {
            var,
            coeffs: j.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
        })
    }
}

impl TruncatedSeries {
    pub fn new(var: SeriesVar, coeffs: Vec<Complex64>) -> Self {
        TruncatedSeries { var, coeffs }
    }

    pub fn zeros(var: SeriesVar, order: usize) -> Self {
        TruncatedSeries::new(var, vec![Complex64::new(0.0, 0.0); order])
    }

    pub fn from_fn(var: SeriesVar, order: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        TruncatedSeries::new(var, (0..order).map(f).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Partial sum at `v`, Horner form.
    pub fn eval(&self, v: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * v + c)
    }

    fn check_tag(&self, other: &Self) -> Result<()> {
        if self.var != other.var {
            return Err(Error::TagMismatch {
                left: self.var.to_string(),
                right: other.var.to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        let m = self.order().min(other.order());
        Ok(TruncatedSeries::from_fn(self.var, m, |k| {
            self.coeffs[k] + other.coeffs[k]
        }))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        TruncatedSeries::new(self.var, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        let m = self.order().min(other.order());
        Ok(TruncatedSeries::from_fn(self.var, m, |k| {
            (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum()
        }))
    }
}

/// Exact counterpart of [`TruncatedSeries`] with rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSeries {
    pub var: SeriesVar,
    pub coeffs: Vec<BigRational>,
}

impl RationalSeries {
    pub fn new(var: SeriesVar, coeffs: Vec<BigRational>) -> Self {
        RationalSeries { var, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn to_complex(&self) -> TruncatedSeries {
        TruncatedSeries::new(
            self.var,
            self.coeffs
                .iter()
                .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
                .collect(),
        )
    }
}

/// Formal Borel transform `Σ a_n v^{n+1} ↦ Σ a_n p^n / n!` of a series in an
/// inverse variable. The result has order `M − 1`.
pub fn borel_transform(s: &TruncatedSeries) -> Result<TruncatedSeries> {
    if !s.var.is_inverse() {
        return Err(Error::TagMismatch {
            left: s.var.to_string(),
            right: "1/N".into(),
        });
    }
    if s.coeffs.first().is_some_and(|c| *c != Complex64::new(0.0, 0.0)) {
        return Err(Error::ConstantTerm(format!("{}", s.coeffs[0])));
    }
    let mut out = Vec::with_capacity(s.order().saturating_sub(1));
    let mut inv_fact = 1.0f64;
    for n in 0..s.order().saturating_sub(1) {
        if n > 0 {
            inv_fact /= n as f64;
        }
        out.push(s.coeffs[n + 1] * inv_fact);
    }
    Ok(TruncatedSeries::new(SeriesVar::P, out))
}

/// Exact Borel transform of a rational series in an inverse variable.
pub fn borel_transform_exact(s: &RationalSeries) -> Result<RationalSeries> {
    if !s.var.is_inverse() {
        return Err(Error::TagMismatch {
            left: s.var.to_string(),
            right: "1/x".into(),
        });
    }
    if s.coeffs.first().is_some_and(|c| !c.is_zero()) {
        return Err(Error::ConstantTerm(s.coeffs[0].to_string()));
    }
    let mut out = Vec::with_capacity(s.order().saturating_sub(1));
    let mut fact = num_bigint::BigInt::from(1);
    for n in 0..s.order().saturating_sub(1) {
        if n > 0 {
            fact *= n;
        }
        out.push(&s.coeffs[n + 1] / BigRational::from_integer(fact.clone()));
    }
    Ok(RationalSeries::new(SeriesVar::P, out))
}

/// Coefficientwise product, order = min of the two orders.
pub fn hadamard_product(a: &TruncatedSeries, b: &TruncatedSeries) -> Result<TruncatedSeries> {
    a.check_tag(b)?;
    let m = a.order().min(b.order());
    Ok(TruncatedSeries::from_fn(a.var, m, |k| a.coeffs[k] * b.coeffs[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn factorial_series_to_geometric() {
        let mut fact = 1.0;
        let s = TruncatedSeries::from_fn(SeriesVar::InvN, 12, |k| {
            if k == 0 {
                return c(0.0);
            }
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            c(fact)
        });
        let b = borel_transform(&s).unwrap();
        assert_eq!(b.var, SeriesVar::P);
        assert_eq!(b.order(), 11);
        for v in &b.coeffs {
            assert!((v - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_term_rejected() {
        let s = TruncatedSeries::new(SeriesVar::InvN, vec![c(1.0), c(1.0)]);
        assert_eq!(borel_transform(&s).unwrap_err().code(), "E_CONSTANT_TERM");
        let p = TruncatedSeries::new(SeriesVar::P, vec![c(0.0), c(1.0)]);
        assert_eq!(borel_transform(&p).unwrap_err().code(), "E_TAG");
    }

    #[test]
    fn json_shape() {
        let s = TruncatedSeries::new(SeriesVar::InvN, vec![c(0.0), Complex64::new(1.0, -2.0)]);
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["var"], "1/N");
        assert_eq!(j["order"], 2);
        assert_eq!(j["coeffs"][1][1], -2.0);
        let back: TruncatedSeries = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn hadamard_identity_and_tags() {
        let a = TruncatedSeries::from_fn(SeriesVar::P, 8, |k| c(k as f64 + 1.0));
        let inv = TruncatedSeries::from_fn(SeriesVar::P, 10, |k| c(1.0 / (k as f64 + 1.0)));
        let ones = TruncatedSeries::from_fn(SeriesVar::P, 8, |_| c(1.0));
        assert_eq!(hadamard_product(&a, &ones).unwrap(), a);
        let h = hadamard_product(&a, &inv).unwrap();
        assert_eq!(h.order(), 8);
        assert!(h.coeffs.iter().all(|v| (v - 1.0).norm() < 1e-15));
        let other = TruncatedSeries::from_fn(SeriesVar::InvN, 8, |_| c(1.0));
        assert!(hadamard_product(&a, &other).is_err());
    }
}
