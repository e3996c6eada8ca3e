//! Complex scalar abstraction shared by every numerical routine.
//!
//! Two implementations exist: `Complex64` (IEEE double, the default working
//! precision) and `rug::Complex` (MPC arbitrary precision). Routines are
//! written once, generic over [`Scalar`], and instantiated with whichever
//! precision the caller asks for.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

/// Environment variable overriding the default working precision
/// (decimal digits).
pub const PRECISION_ENV: &str = "RESURGIA_PRECISION";

/// Working precision, expressed in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Precision {
    pub digits: u32,
}

impl Precision {
    pub const DOUBLE: Precision = Precision { digits: 16 };

    pub fn digits(digits: u32) -> Self {
        Precision {
            digits: digits.max(1),
        }
    }

    /// Mantissa bits needed for `digits` decimal digits plus eight guard bits.
    /// Double precision maps to exactly 53 bits.
    pub fn bits(self) -> u32 {
        if self.is_double() {
            53
        } else {
            (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + 8
        }
    }

    pub fn is_double(self) -> bool {
        self.digits <= 16
    }

    /// Reads `RESURGIA_PRECISION`, falling back to double precision.
    pub fn from_env() -> Self {
        std::env::var(PRECISION_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .map(Precision::digits)
            .unwrap_or(Precision::DOUBLE)
    }

    /// Smallest tolerance that is meaningful at this precision.
    pub fn epsilon(self) -> f64 {
        10f64.powi(-(self.digits.min(300) as i32))
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn bits(&self) -> u32;
    fn from_c64(z: Complex64, bits: u32) -> Self;
    fn from_rational(r: &BigRational, bits: u32) -> Self;
    fn pi(bits: u32) -> Self;
    fn to_c64(&self) -> Complex64;
    fn to_mpc(&self) -> Complex;
    /// Natural log of the modulus; finite even where `|z|` underflows an f64.
    fn ln_norm(&self) -> f64;
    fn exp(&self) -> Self;
    /// Principal logarithm (cut on the negative real axis).
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, n: i64) -> Self;
    fn conj(&self) -> Self;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;
    /// Exactly on the principal cut: zero imaginary part, negative real part.
    fn on_negative_axis(&self) -> bool;
    fn scale(&self, x: f64) -> Self;
    fn mul_i(&self) -> Self;
    /// Exact division by a positive integer.
    fn div_u(&self, n: u64) -> Self;

    fn from_f64(x: f64, bits: u32) -> Self {
        Self::from_c64(Complex64::new(x, 0.0), bits)
    }
    fn from_int(n: i64, bits: u32) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)), bits)
    }
    fn zero(bits: u32) -> Self {
        Self::from_f64(0.0, bits)
    }
    fn one(bits: u32) -> Self {
        Self::from_f64(1.0, bits)
    }
    fn i_unit(bits: u32) -> Self {
        Self::from_c64(Complex64::new(0.0, 1.0), bits)
    }
    fn norm(&self) -> f64 {
        self.ln_norm().exp()
    }
    fn re(&self) -> f64 {
        self.to_c64().re
    }
    fn im(&self) -> f64 {
        self.to_c64().im
    }
    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl Scalar for Complex64 {
    fn bits(&self) -> u32 {
        53
    }
    fn from_c64(z: Complex64, _bits: u32) -> Self {
        z
    }
    fn from_rational(r: &BigRational, _bits: u32) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn pi(_bits: u32) -> Self {
        Complex64::new(std::f64::consts::PI, 0.0)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn to_mpc(&self) -> Complex {
        Complex::with_val(53, (self.re, self.im))
    }
    fn ln_norm(&self) -> f64 {
        self.norm().ln()
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
    fn sin(&self) -> Self {
        Complex64::sin(*self)
    }
    fn cos(&self) -> Self {
        Complex64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        Complex64::sqrt(*self)
    }
    fn powi(&self, n: i64) -> Self {
        if n >= 0 {
            int_pow(*self, n as u64)
        } else {
            Complex64::new(1.0, 0.0) / int_pow(*self, n.unsigned_abs())
        }
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn on_negative_axis(&self) -> bool {
        self.im == 0.0 && self.re < 0.0
    }
    fn scale(&self, x: f64) -> Self {
        *self * x
    }
    fn mul_i(&self) -> Self {
        Complex64::new(-self.im, self.re)
    }
    fn div_u(&self, n: u64) -> Self {
        self / n as f64
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

fn int_pow(z: Complex64, mut n: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

pub(crate) fn bigint_to_rug(n: &BigInt) -> Integer {
    Integer::from_str_radix(&n.to_str_radix(16), 16).expect("hex digits")
}

pub(crate) fn rational_to_rug(r: &BigRational) -> Rational {
    Rational::from((bigint_to_rug(r.numer()), bigint_to_rug(r.denom())))
}

impl Scalar for Complex {
    fn bits(&self) -> u32 {
        self.prec().0
    }
    fn from_c64(z: Complex64, bits: u32) -> Self {
        Complex::with_val(bits, (z.re, z.im))
    }
    fn from_rational(r: &BigRational, bits: u32) -> Self {
        if r.denom().is_positive() && r.numer().is_zero() {
            return Complex::new(bits);
        }
        let q = rational_to_rug(r);
        Complex::with_val(bits, (Float::with_val(bits, &q), 0))
    }
    fn pi(bits: u32) -> Self {
        Complex::with_val(bits, (Float::with_val(bits, Constant::Pi), 0))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.real().to_f64(), self.imag().to_f64())
    }
    fn to_mpc(&self) -> Complex {
        self.clone()
    }
    fn ln_norm(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let modulus = Float::with_val(self.prec().0, self.abs_ref());
        modulus.ln().to_f64()
    }
    fn exp(&self) -> Self {
        self.clone().exp()
    }
    fn ln(&self) -> Self {
        self.clone().ln()
    }
    fn sin(&self) -> Self {
        self.clone().sin()
    }
    fn cos(&self) -> Self {
        self.clone().cos()
    }
    fn sqrt(&self) -> Self {
        self.clone().sqrt()
    }
    fn powi(&self, n: i64) -> Self {
        let n = i32::try_from(n).expect("exponent fits in i32");
        self.clone().pow(n)
    }
    fn conj(&self) -> Self {
        self.clone().conj()
    }
    fn is_finite(&self) -> bool {
        self.real().is_finite() && self.imag().is_finite()
    }
    fn is_zero(&self) -> bool {
        self.real().is_zero() && self.imag().is_zero()
    }
    fn on_negative_axis(&self) -> bool {
        self.imag().is_zero() && self.real().is_sign_negative() && !self.real().is_zero()
    }
    fn scale(&self, x: f64) -> Self {
        self.clone() * Float::with_val(self.prec().0, x)
    }
    fn mul_i(&self) -> Self {
        self.clone().mul_i(false)
    }
    fn div_u(&self, n: u64) -> Self {
        Complex::with_val(self.prec(), self / n)
    }
    fn norm(&self) -> f64 {
        Float::with_val(self.prec().0, self.abs_ref()).to_f64()
    }
}

/// Deterministic pairwise summation; the reduction tree depends only on the
/// number of terms, so results are reproducible.
pub fn pairwise_sum<T: Scalar>(terms: &[T], bits: u32) -> T {
    match terms.len() {
        0 => T::zero(bits),
        1 => terms[0].clone(),
        2 => terms[0].clone() + terms[1].clone(),
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid], bits) + pairwise_sum(&terms[mid..], bits)
        }
    }
}

/// Kahan-Babushka-Neumaier compensated sum, applied to real and imaginary
/// parts separately.
pub fn neumaier_sum<I: IntoIterator<Item = Complex64>>(terms: I) -> Complex64 {
    let mut sum = [0.0f64; 2];
    let mut comp = [0.0f64; 2];
    for z in terms {
        for (k, v) in [z.re, z.im].into_iter().enumerate() {
            let t = sum[k] + v;
            if sum[k].abs() >= v.abs() {
                comp[k] += (sum[k] - t) + v;
            } else {
                comp[k] += (v - t) + sum[k];
            }
            sum[k] = t;
        }
    }
    Complex64::new(sum[0] + comp[0], sum[1] + comp[1])
}

/// Decimal rendering with `digits` significant digits for reports.
pub fn to_decimal<T: Scalar>(z: &T, digits: usize) -> (String, String) {
    let c = z.to_mpc();
    (
        c.real().to_string_radix(10, Some(digits)),
        c.imag().to_string_radix(10, Some(digits)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_bits() {
        assert_eq!(Precision::DOUBLE.bits(), 53);
        assert!(Precision::digits(64).bits() >= 212);
    }

    #[test]
    fn mp_matches_double() {
        let z = Complex64::new(0.3, -1.2);
        let m = <Complex as Scalar>::from_c64(z, 200);
        for (a, b) in [
            (Scalar::exp(&z), Scalar::exp(&m).to_c64()),
            (Scalar::ln(&z), Scalar::ln(&m).to_c64()),
            (Scalar::sin(&z), Scalar::sin(&m).to_c64()),
            (Scalar::powi(&z, -3), Scalar::powi(&m, -3).to_c64()),
        ] {
            assert!((a - b).norm() < 1e-14 * a.norm().max(1.0));
        }
    }

    #[test]
    fn rational_conversion() {
        let r = BigRational::new(BigInt::from(-7), BigInt::from(3));
        let m = <Complex as Scalar>::from_rational(&r, 300);
        assert!((m.to_c64().re + 7.0 / 3.0).abs() < 1e-15);
        assert!(m.ln_norm().is_finite());
    }

    #[test]
    fn neumaier_beats_naive() {
        let mut terms = vec![Complex64::new(1.0, 0.0)];
        terms.extend(std::iter::repeat(Complex64::new(1e-16, 0.0)).take(10_000));
        let s = neumaier_sum(terms);
        assert!((s.re - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn tiny_moduli_keep_their_logarithm() {
        let tiny = <Complex as Scalar>::from_f64(10.0, 600).powi(-400);
        assert!((tiny.ln_norm() + 400.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }
}
