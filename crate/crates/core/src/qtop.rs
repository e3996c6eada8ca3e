//! Sums of quantum factorials `I_t(q) = Σ_k q^{a·k(k+1)/2} (q)_k^b ε^k` at
//! roots of unity and as formal series at `q = e^{1/x}`, their generating
//! series, and a numerical radius-of-convergence probe.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{to_decimal, Precision, Scalar};
use crate::series::{borel_transform_exact, RationalSeries, SeriesVar, TruncatedSeries};

/// Fewest decimal digits used for root-of-unity sums.
pub const MIN_ROOT_DIGITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub a: i64,
    pub b: i64,
    pub eps: i64,
}

impl Triple {
    pub fn new(a: i64, b: i64, eps: i64) -> Result<Self> {
        if eps != 1 && eps != -1 {
            return Err(Error::InvalidArgument(format!("ε = {eps} must be ±1")));
        }
        Ok(Triple { a, b, eps })
    }

    /// The trefoil triple `(0, 1, 1)`.
    pub const TREFOIL: Triple = Triple { a: 0, b: 1, eps: 1 };

    fn require_positive_b(&self) -> Result<()> {
        if self.b <= 0 {
            return Err(Error::Unsupported(format!(
                "b = {} ≤ 0: (q)_k^b has poles at roots of unity and no expansion in 1/x",
                self.b
            )));
        }
        Ok(())
    }
}

/// `(q)_n = Π_{k=1}^n (1 − q^k)`.
pub fn qfactorial(q: Complex64, n: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut qk = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        qk *= q;
        acc *= 1.0 - qk;
    }
    acc
}

/// Multiprecision `I_t(e^{2πi/n})`. Powers of `q` are read from a table
/// indexed mod `n`, so `1 − q^n` is exactly zero and the sum terminates.
pub fn i_at_root_of_unity_mp(t: Triple, n: u32, precision: Precision) -> Result<Complex> {
    t.require_positive_b()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let bits = precision.bits().max(Precision::digits(MIN_ROOT_DIGITS).bits()) + 16;
    let two_pi_i = Scalar::mul_i(&<Complex as Scalar>::pi(bits).scale(2.0));
    let table: Vec<Complex> = (0..n)
        .map(|j| Scalar::exp(&(two_pi_i.clone() * Complex::with_val(bits, j) / Complex::with_val(bits, n))))
        .collect();
    let nn = n as i64;
    let power = |m: i64| table[m.rem_euclid(nn) as usize].clone();
    let one = Complex::with_val(bits, 1);
    let mut fact = one.clone();
    let mut sum = Complex::with_val(bits, 0);
    for k in 0..=nn {
        if k > 0 {
            fact *= one.clone() - power(k);
        }
        if k == nn {
            debug_assert!(fact.is_zero());
            break;
        }
        let mut term = power(t.a * k * (k + 1) / 2) * Scalar::powi(&fact, t.b);
        if t.eps < 0 && k % 2 == 1 {
            term = -term;
        }
        sum += term;
    }
    Ok(sum)
}

pub fn i_at_root_of_unity(t: Triple, n: u32, precision: Precision) -> Result<Complex64> {
    Ok(i_at_root_of_unity_mp(t, n, precision)?.to_c64())
}

/// Series in `h` kept as `Σ c_n h^n / n!` with integer `c_n`; products are
/// binomial convolutions.
#[derive(Debug, Clone)]
struct Egf(Vec<BigInt>);

impl Egf {
    fn one(m: usize) -> Self {
        let mut v = vec![BigInt::zero(); m];
        if m > 0 {
            v[0] = BigInt::one();
        }
        Egf(v)
    }

    /// `e^{ch}`.
    fn exp(c: i64, m: usize) -> Self {
        let c = BigInt::from(c);
        let mut v = Vec::with_capacity(m);
        let mut p = BigInt::one();
        for _ in 0..m {
            v.push(p.clone());
            p *= &c;
        }
        Egf(v)
    }

    /// `1 − e^{jh}`.
    fn one_minus_exp(j: i64, m: usize) -> Self {
        let mut e = Egf::exp(j, m);
        for (n, c) in e.0.iter_mut().enumerate() {
            *c = if n == 0 { BigInt::zero() } else { -c.clone() };
        }
        e
    }

    fn mul(&self, other: &Egf, binom: &[Vec<BigInt>]) -> Egf {
        let m = self.0.len();
        let mut out = vec![BigInt::zero(); m];
        for (n, slot) in out.iter_mut().enumerate() {
            for j in 0..=n {
                if self.0[j].is_zero() || other.0[n - j].is_zero() {
                    continue;
                }
                *slot += &binom[n][j] * &self.0[j] * &other.0[n - j];
            }
        }
        Egf(out)
    }

    fn valuation(&self) -> usize {
        self.0.iter().position(|c| !c.is_zero()).unwrap_or(self.0.len())
    }
}

fn binomials(m: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for n in 1..m {
        let prev = &rows[n - 1];
        let mut row = vec![BigInt::one(); n + 1];
        for j in 1..n {
            row[j] = &prev[j - 1] + &prev[j];
        }
        rows.push(row);
    }
    rows
}

/// `I_t(e^{1/x})` as an exact series in `1/x` with `order` coefficients.
/// Only `k < order/b + 1` contribute, since `(q)_k = O(x^{−k})`.
pub fn i_formal_series(t: Triple, order: usize) -> Result<RationalSeries> {
    t.require_positive_b()?;
    let m = order;
    let binom = binomials(m);
    let mut total = vec![BigInt::zero(); m];
    let mut fact = Egf::one(m);
    for k in 0..m as i64 {
        if k > 0 {
            fact = fact.mul(&Egf::one_minus_exp(k, m), &binom);
        }
        // (q)_k^b has valuation b·k
        if fact.valuation() * t.b as usize >= m {
            break;
        }
        let mut term = Egf::exp(t.a * k * (k + 1) / 2, m);
        for _ in 0..t.b {
            term = term.mul(&fact, &binom);
        }
        let sign = if t.eps < 0 && k % 2 == 1 { -1 } else { 1 };
        for (slot, c) in total.iter_mut().zip(term.0) {
            *slot += c * sign;
        }
    }
    let mut factorial = BigInt::one();
    let coeffs = total
        .into_iter()
        .enumerate()
        .map(|(n, c)| {
            if n > 0 {
                factorial *= n;
            }
            BigRational::new(c, factorial.clone())
        })
        .collect();
    Ok(RationalSeries::new(SeriesVar::InvX, coeffs))
}

/// Root-of-unity table, formal series and the two generating series of a
/// triple.
#[derive(Debug, Clone)]
pub struct QSeriesData {
    pub triple: Triple,
    /// `I_t(e^{2πi/n})` for `n = 1..=roots.len()`.
    pub roots: Vec<Complex>,
    pub formal: RationalSeries,
    /// `1 + Σ_{n≥1} I_t(e^{2πi/n}) pⁿ`.
    pub l_np: Vec<Complex64>,
    /// Borel transform of the formal series without its constant term.
    pub l_p: RationalSeries,
}

#[derive(Serialize)]
struct QSeriesJson<'a> {
    triple: &'a Triple,
    roots: Vec<[String; 2]>,
    formal: Vec<String>,
    l_np: &'a [Complex64],
    l_p: Vec<String>,
}

impl Serialize for QSeriesData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let digits = 30;
        QSeriesJson {
            triple: &self.triple,
            roots: self
                .roots
                .iter()
                .map(|z| {
                    let (re, im) = to_decimal(z, digits);
                    [re, im]
                })
                .collect(),
            formal: self.formal.coeffs.iter().map(|c| c.to_string()).collect(),
            l_np: &self.l_np,
            l_p: self.l_p.coeffs.iter().map(|c| c.to_string()).collect(),
        }
        .serialize(s)
    }
}

pub fn generating_series(t: Triple, roots: u32, order: usize) -> Result<QSeriesData> {
    t.require_positive_b()?;
    let precision = Precision::digits(MIN_ROOT_DIGITS);
    let values = (1..=roots)
        .map(|n| i_at_root_of_unity_mp(t, n, precision))
        .collect::<Result<Vec<_>>>()?;
    let formal = i_formal_series(t, order + 1)?;
    let mut shifted = formal.clone();
    shifted.coeffs[0] = BigRational::zero();
    let l_p = borel_transform_exact(&shifted)?;
    let l_np = std::iter::once(Complex64::new(1.0, 0.0))
        .chain(values.iter().map(|v| v.to_c64()))
        .collect();
    Ok(QSeriesData {
        triple: t,
        roots: values,
        formal,
        l_np,
        l_p,
    })
}

/// `ln |r|`, finite for rationals far outside the f64 range.
pub fn ln_abs_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_int(r.numer()) - ln_abs_int(r.denom())
}

fn ln_abs_int(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 900;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    /// Best estimate; `f64::INFINITY` when `infinite` is set.
    pub radius: f64,
    /// `|c_n|^{−1/n}` at the last nonzero coefficient.
    pub root_test: f64,
    /// Root test extrapolated linearly in `1/n`.
    pub root_test_extrapolated: f64,
    /// Domb-Sykes: ratios fitted linearly in `1/n`, intercept inverted.
    pub domb_sykes: f64,
    pub band: (f64, f64),
    pub infinite: bool,
    pub terms_used: usize,
}

/// Radius probe on the coefficients of a truncated series.
pub fn radius_probe(s: &TruncatedSeries) -> Result<RadiusEstimate> {
    let logs: Vec<f64> = s
        .coeffs
        .iter()
        .map(|c| if c.norm() == 0.0 { f64::NEG_INFINITY } else { c.norm().ln() })
        .collect();
    radius_probe_ln(&logs)
}

/// Radius probe from `ln |c_n|` (`−∞` for zero coefficients).
pub fn radius_probe_ln(ln_abs: &[f64]) -> Result<RadiusEstimate> {
    let nz: Vec<(f64, f64)> = ln_abs
        .iter()
        .enumerate()
        .filter(|(n, l)| *n > 0 && l.is_finite())
        .map(|(n, l)| (n as f64, *l))
        .collect();
    if nz.len() < 16 {
        return Err(Error::InvalidArgument(format!(
            "radius probe needs at least 16 nonzero coefficients, got {}",
            nz.len()
        )));
    }
    let tail = &nz[nz.len() / 2..];
    let root: Vec<(f64, f64)> = tail.iter().map(|(n, l)| (1.0 / n, (-l / n).exp())).collect();
    let root_test = root.last().expect("nonempty").1;
    let root_test_extrapolated = linear_fit(&root).0;
    // consecutive nonzero coefficients, rescaled to one step of n
    let ratios: Vec<(f64, f64)> = tail
        .windows(2)
        .map(|w| {
            let step = w[1].0 - w[0].0;
            (1.0 / w[1].0, ((w[1].1 - w[0].1) / step).exp())
        })
        .collect();
    let (inv_r, _) = linear_fit(&ratios);
    let domb_sykes = if inv_r > 0.0 { 1.0 / inv_r } else { f64::INFINITY };
    let increasing = root.windows(2).all(|w| w[1].1 >= w[0].1);
    let infinite = increasing && (inv_r <= 1e-3 * (1.0 / root_test));
    let radius = if infinite { f64::INFINITY } else { domb_sykes };
    let candidates = [root_test, root_test_extrapolated, domb_sykes];
    let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().cloned().fold(0.0, f64::max);
    Ok(RadiusEstimate {
        radius,
        root_test,
        root_test_extrapolated,
        domb_sykes,
        band: (lo, if infinite { f64::INFINITY } else { hi }),
        infinite,
        terms_used: tail.len(),
    })
}

/// Least-squares line `y = c0 + c1·x`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn quantum_factorials() {
        assert_eq!(qfactorial(Complex64::new(0.3, 0.1), 0), Complex64::new(1.0, 0.0));
        assert_eq!(qfactorial(Complex64::new(-1.0, 0.0), 2).norm(), 0.0);
        let q = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((qfactorial(q, 2) - 3.0).norm() < 1e-14);
    }

    #[test]
    fn trefoil_roots() {
        let t = Triple::TREFOIL;
        let p = Precision::digits(64);
        assert!((i_at_root_of_unity(t, 1, p).unwrap() - 1.0).norm() < 1e-15);
        assert!((i_at_root_of_unity(t, 2, p).unwrap() - 3.0).norm() < 1e-15);
        let v = i_at_root_of_unity(t, 3, p).unwrap();
        assert!((v - Complex64::new(5.5, -(3f64.sqrt()) / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn trefoil_formal_start() {
        let s = i_formal_series(Triple::TREFOIL, 6).unwrap();
        assert_eq!(s.coeffs[0], r(1, 1));
        assert_eq!(s.coeffs[1], r(-1, 1));
        // brute force: 1 + (1 − e^h) + (1 − e^h)(1 − e^{2h}) + ... through h²
        assert_eq!(s.coeffs[2], r(-1, 2) + r(2, 1));
    }

    #[test]
    fn truncation_in_k_is_harmless() {
        let a = i_formal_series(Triple::new(1, 2, -1).unwrap(), 12).unwrap();
        let b = i_formal_series(Triple::new(1, 2, -1).unwrap(), 20).unwrap();
        assert_eq!(a.coeffs[..], b.coeffs[..12]);
    }

    #[test]
    fn negative_b_is_unsupported() {
        let t = Triple::new(2, -1, -1).unwrap();
        assert_eq!(i_formal_series(t, 5).unwrap_err().code(), "E_UNSUPPORTED");
        assert_eq!(i_at_root_of_unity(t, 5, Precision::DOUBLE).unwrap_err().code(), "E_UNSUPPORTED");
    }

    #[test]
    fn galois_conjugates() {
        let t = Triple::new(1, 1, -1).unwrap();
        let v = i_at_root_of_unity(t, 7, Precision::digits(64)).unwrap();
        let q = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI / 7.0);
        let direct: Complex64 = (0..7u32)
            .map(|k| {
                let s = if k % 2 == 1 { -1.0 } else { 1.0 };
                q.powu(k * (k + 1) / 2) * qfactorial(q, k) * s
            })
            .sum();
        assert!((v.conj() - direct).norm() < 1e-12);
    }

    #[test]
    fn borel_relation() {
        let d = generating_series(Triple::TREFOIL, 4, 12).unwrap();
        let mut fact = BigRational::one();
        for k in 0..12 {
            if k > 0 {
                fact *= BigRational::from_integer(k.into());
            }
            assert_eq!(&d.l_p.coeffs[k] * &fact, d.formal.coeffs[k + 1]);
        }
        assert_eq!(d.l_np[0], Complex64::new(1.0, 0.0));
        assert!((d.l_np[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn probes() {
        let geo = TruncatedSeries::from_fn(SeriesVar::P, 60, |_| Complex64::new(1.0, 0.0));
        let e = radius_probe(&geo).unwrap();
        assert!((e.radius - 1.0).abs() < 0.02 && !e.infinite);
        let mut f = 1.0;
        let ex = TruncatedSeries::from_fn(SeriesVar::P, 60, |n| {
            if n > 0 {
                f /= n as f64;
            }
            Complex64::new(f, 0.0)
        });
        assert!(radius_probe(&ex).unwrap().infinite);
        let short = TruncatedSeries::from_fn(SeriesVar::P, 10, |_| Complex64::new(1.0, 0.0));
        assert!(radius_probe(&short).is_err());
    }

    #[test]
    fn large_rational_logs() {
        let big = BigRational::new(BigInt::from(10).pow(400), BigInt::from(3));
        assert!((ln_abs_rational(&big) - (400.0 * 10f64.ln() - 3f64.ln())).abs() < 1e-9);
    }
}
