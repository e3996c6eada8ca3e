//! Laplace transforms on `(0, ∞)`, finite-interval double-exponential
//! quadrature and contour integrals over circles.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{neumaier_sum, pairwise_sum, Scalar};

/// Largest number of trapezoid nodes used on a circle.
pub const MAX_CIRCLE_NODES: usize = 1 << 14;
const MAX_LEVEL: u32 = 11;

/// Exponential bound `|g(p)| ≤ c·e^{a·p}` on `p ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub c: f64,
    pub a: f64,
}

impl Envelope {
    pub fn new(c: f64, a: f64) -> Self {
        Envelope { c, a }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceResult<T> {
    #[serde(skip)]
    pub value: T,
    pub p_max: f64,
    /// Size of the last refinement step of the finite-range quadrature.
    pub error_estimate: f64,
    /// Bound on `∫_{p_max}^∞` from the envelope.
    pub tail_bound: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn t_max(bits: u32) -> f64 {
    // nodes closer to an endpoint than ~2^{-bits} relative carry no weight
    let target = bits as f64 * std::f64::consts::LN_2 + 20.0;
    (2.0 * target / std::f64::consts::PI).ln() + 0.5
}

/// `∫_a^b g(p) dp` by tanh-sinh quadrature with step halving until two levels
/// agree to `tol`. Integrable endpoint singularities are allowed; `g` is never
/// evaluated at the endpoints themselves.
pub fn integrate<T, G>(g: G, a: f64, b: f64, tol: f64, bits: u32) -> Result<Quadrature<T>>
where
    T: Scalar,
    G: Fn(&T) -> Result<T>,
{
    let len = b - a;
    if len <= 0.0 {
        return Ok(Quadrature {
            value: T::zero(bits),
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let tm = t_max(bits);
    let half_pi = T::pi(bits).scale(0.5);
    let lo = T::from_f64(a, bits);
    let hi = T::from_f64(b, bits);
    let width = T::from_f64(len, bits);
    let one = T::one(bits);
    let mut evaluations = 0usize;
    // contribution of the node pair at ±t
    let mut pair = |t: f64| -> Result<T> {
        let et = T::from_f64(t, bits).exp();
        let inv = one.clone() / et.clone();
        let sinh = (et.clone() - inv.clone()).scale(0.5);
        let cosh = (et + inv).scale(0.5);
        let u = half_pi.clone() * sinh;
        let v = (u.scale(-2.0)).exp(); // e^{-2u}, u ≥ 0
        let denom = one.clone() + v.clone();
        let offset = width.clone() * v.clone() / denom.clone();
        let weight = width.clone() * half_pi.clone() * cosh * v.scale(2.0) / (denom.clone() * denom);
        let left = lo.clone() + offset.clone();
        let right = hi.clone() - offset;
        let mut acc = T::zero(bits);
        for (node, end) in [(left, &lo), (right, &hi)] {
            if (node.clone() - end.clone()).is_zero() {
                continue;
            }
            evaluations += 1;
            acc = acc + g(&node)? * weight.clone();
            if t == 0.0 {
                break;
            }
        }
        Ok(acc)
    };
    let mut h = 0.5f64;
    let mut terms: Vec<T> = vec![];
    let mut k = 0i64;
    while (k as f64) * h <= tm {
        terms.push(pair(k as f64 * h)?);
        k += 1;
    }
    let mut sum = pairwise_sum(&terms, bits);
    let mut prev = sum.clone() * T::from_f64(h, bits);
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_LEVEL {
        h /= 2.0;
        let mut fresh = vec![];
        let mut k = 1i64;
        while (k as f64) * h <= tm {
            fresh.push(pair(k as f64 * h)?);
            k += 2;
        }
        sum = sum + pairwise_sum(&fresh, bits);
        let cur = sum.clone() * T::from_f64(h, bits);
        delta = (cur.clone() - prev.clone()).norm();
        prev = cur;
        if delta <= tol {
            return Ok(Quadrature {
                value: prev,
                error_estimate: delta,
                evaluations,
            });
        }
    }
    Err(Error::convergence("tanh-sinh quadrature", delta))
}

/// `∫_0^∞ e^{−np} g(p) dp` to absolute accuracy `tol`. The range is cut at
/// `p_max` where the envelope tail `c·e^{−(n−a)p}/(n−a)` falls below `tol/2`.
pub fn laplace_with<T, G>(g: G, n: f64, tol: f64, env: Envelope, bits: u32) -> Result<LaplaceResult<T>>
where
    T: Scalar,
    G: Fn(&T) -> Result<T>,
{
    if env.a >= n {
        return Err(Error::Growth { rate: env.a, n });
    }
    let gap = n - env.a;
    let p_max = ((2.0 * env.c.max(1e-300) / (tol * gap)).ln() / gap).max(1.0 / n);
    let tail_bound = env.c * (-gap * p_max).exp() / gap;
    let nt = T::from_f64(-n, bits);
    let q = integrate(
        |p: &T| Ok((nt.clone() * p.clone()).exp() * g(p)?),
        0.0,
        p_max,
        tol / 2.0,
        bits,
    )?;
    Ok(LaplaceResult {
        value: q.value,
        p_max,
        error_estimate: q.error_estimate,
        tail_bound,
        evaluations: q.evaluations,
    })
}

/// Double-precision Laplace transform with envelope `|g(p)| ≤ e^{0·p}`
/// scaled by a sampled magnitude.
pub fn laplace<G>(g: G, n: f64, tol: f64) -> Result<LaplaceResult<Complex64>>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let c = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .filter_map(|&p| g(Complex64::new(p, 0.0)).ok())
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    laplace_with(|p: &Complex64| g(*p), n, tol, Envelope::new(2.0 * c, 0.0), 53)
}

/// `∮ g(s) ds` counterclockwise over `|s − center| = radius`.
pub fn circle_integral<G>(g: G, center: Complex64, radius: f64, tol: f64) -> Result<Complex64>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let mean = circle_mean(
        |s| Ok(g(s)? * (s - center)),
        center,
        radius,
        tol / (2.0 * std::f64::consts::PI),
    )?;
    Ok(two_pi_i * mean)
}

/// Mean of `g` over `|s − center| = r`, doubling the node count until two
/// successive means agree to `tol`.
pub fn circle_mean<G>(g: G, center: Complex64, r: f64, tol: f64) -> Result<Complex64>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let node = |k: usize, n: usize| {
        center + Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
    };
    let mut n = 16usize;
    let mut sum = neumaier_sum((0..n).map(|k| g(node(k, n))).collect::<Result<Vec<_>>>()?);
    let mut prev = sum / n as f64;
    let mut delta = f64::INFINITY;
    while n < MAX_CIRCLE_NODES {
        let fresh: Vec<Complex64> = (0..n)
            .map(|k| g(node(2 * k + 1, 2 * n)))
            .collect::<Result<_>>()?;
        sum += neumaier_sum(fresh);
        n *= 2;
        let cur = sum / n as f64;
        delta = (cur - prev).norm();
        prev = cur;
        if delta <= tol {
            return Ok(cur);
        }
    }
    Err(Error::convergence("circle quadrature", delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constant_kernel() {
        let r = laplace(|_| Ok(c(1.0 / 6.0)), 10.0, 1e-14).unwrap();
        assert!((r.value - 1.0 / 60.0).norm() < 1e-15);
        assert!(r.tail_bound <= 5e-15);
    }

    #[test]
    fn sqrt_endpoint() {
        let r = laplace(|p| Ok(p.sqrt()), 1.0, 1e-13).unwrap();
        let expected = std::f64::consts::PI.sqrt() / 2.0;
        assert!((r.value.re - expected).abs() < 1e-12, "{}", r.value.re - expected);
    }

    #[test]
    fn growth_is_rejected() {
        let err = laplace_with(|p: &Complex64| Ok(*p), 1.0, 1e-10, Envelope::new(1.0, 2.0), 53)
            .unwrap_err();
        assert_eq!(err.code(), "E_GROWTH");
    }

    #[test]
    fn multiprecision_exponential() {
        let bits = 400;
        let r = laplace_with(
            |p: &rug::Complex| Ok(Scalar::exp(&p.clone().scale(0.5))),
            3.0,
            1e-100,
            Envelope::new(1.0, 0.5),
            bits,
        )
        .unwrap();
        let exact = rug::Complex::with_val(bits, rug::Rational::from((2, 5)));
        let diff = rug::Complex::with_val(bits, &r.value - &exact);
        let d = Scalar::norm(&diff);
        assert!(d < 1e-98, "{d} {:?}", (r.error_estimate, r.evaluations));
    }

    #[test]
    fn finite_interval() {
        let q = integrate(|x: &Complex64| Ok(x.ln()), 0.0, 1.0, 1e-14, 53).unwrap();
        assert!((q.value.re + 1.0).abs() < 1e-13);
    }

    #[test]
    fn circles() {
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let v = circle_integral(|s| Ok(1.0 / s), c(0.0), 0.7, 1e-14).unwrap();
        assert!((v - two_pi_i).norm() < 1e-14);
        let v = circle_integral(|s| Ok(1.0 / (s - 5.0)), c(0.0), 1.0, 1e-14).unwrap();
        assert!(v.norm() < 1e-14);
        let v = circle_integral(|s| Ok(s.exp() / (s * s)), c(0.0), 0.3, 1e-14).unwrap();
        assert!((v - two_pi_i).norm() < 1e-13);
        let v = circle_integral(|s| Ok(s * s * s - 2.0 * s + 4.0), c(0.3), 2.0, 1e-14).unwrap();
        assert!(v.norm() < 1e-12);
    }
}
