//! The Borel kernel `G_f(p)` of the Euler-Maclaurin remainder, evaluated
//! either from its `1/n²` series or from a double contour integral, together
//! with its singularity set and the Stirling kernel `H`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcs::{
    differentiate, growth_rate, singularities, strip_adapted, Compiled, Expr, Region,
};
use crate::quad::{circle_mean, integrate, Envelope};
use crate::scalar::{pairwise_sum, Scalar};
use crate::series::{bernoulli_table, endpoint_jump_coeffs, hurwitz_zeta, SeriesVar, TruncatedSeries};

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;
/// Minimum number of directly summed `n` terms.
pub const MIN_DIRECT_TERMS: usize = 16;
/// Distance below which a point counts as hitting a kernel singularity.
pub const SINGULAR_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Series,
    Integral,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelEval {
    pub value: Complex64,
    pub tail_bound: f64,
    pub route: Route,
    /// Directly summed `n` terms (series) or integrand evaluations (integral).
    pub terms: usize,
}

/// Distance from `{0, 1}` to the nearest singularity of `f`.
fn endpoint_distance(f: &Expr) -> Result<(f64, Vec<Complex64>)> {
    let sings = singularities(f, Region::Plane)?;
    let omegas: Vec<Complex64> = sings.iter().map(|s| s.location).collect();
    let d = omegas
        .iter()
        .map(|w| w.norm().min((w - 1.0).norm()))
        .fold(f64::INFINITY, f64::min);
    Ok((d, omegas))
}

/// `G_f` by the `n`-series: the first `n0` terms summed directly, the rest
/// through the Taylor expansion of `f′` at `0` and `1`, which turns the tail
/// into a power series in `p` with Hurwitz-zeta coefficients.
pub struct SeriesKernel<T> {
    fp: Compiled<T>,
    n0: usize,
    /// Coefficients of `p^{2k}` in the tail.
    tail: Vec<T>,
    tail_abs: Vec<f64>,
    omegas: Vec<Complex64>,
    bits: u32,
    f: Expr,
}

impl<T: Scalar> SeriesKernel<T> {
    /// Prepares evaluation for `|p| ≤ p_max` at `bits` of precision.
    pub fn new(f: &Expr, p_max: f64, bits: u32) -> Result<Self> {
        let f = strip_adapted(f);
        let (rho, omegas) = endpoint_distance(&f)?;
        if rho < 1e-12 {
            return Err(Error::domain(
                Complex64::new(if omegas.iter().any(|w| w.norm() < 1e-12) { 0.0 } else { 1.0 }, 0.0),
                "f′ must be continuous at 0 and 1",
            ));
        }
        let n0 = if rho.is_finite() {
            MIN_DIRECT_TERMS.max((4.0 * p_max / (TWO_PI * rho)).ceil() as usize)
        } else {
            MIN_DIRECT_TERMS
        };
        let j_max = 2 * ((bits as usize) / 4 + 12);
        let jumps = endpoint_jump_coeffs::<T>(&f, j_max + 2, bits)?;
        let two_pi = T::pi(bits).scale(2.0);
        let inv_two_pi_sq = (two_pi.clone() * two_pi.clone()).powi(-1);
        let pref = inv_two_pi_sq.clone().scale(2.0);
        let mut tail = Vec::with_capacity(j_max / 2 + 1);
        let mut pow = T::one(bits); // (2πi)^{−j}
        for j in (0..=j_max).step_by(2) {
            let zeta: T = hurwitz_zeta((j + 2) as u32, (n0 + 1) as u64, bits);
            let c = pref.clone() * jumps[j + 1].scale((j + 1) as f64) * pow.clone() * zeta;
            tail.push(c);
            pow = -(pow * inv_two_pi_sq.clone());
        }
        let tail_abs = tail.iter().map(|c| c.norm()).collect();
        Ok(SeriesKernel {
            fp: Compiled::new(&differentiate(&f), bits),
            n0,
            tail,
            tail_abs,
            omegas,
            bits,
            f,
        })
    }

    pub fn direct_terms(&self) -> usize {
        self.n0
    }

    /// The strip-adapted summand the kernel was built from.
    pub fn summand(&self) -> &Expr {
        &self.f
    }

    /// Refuses points within [`SINGULAR_GUARD`] of `2πinω` or `2πin(ω−1)`.
    pub fn check_point(&self, p: Complex64) -> Result<()> {
        for w in &self.omegas {
            for b in [*w, w - 1.0] {
                let step = Complex64::new(0.0, TWO_PI) * b;
                if step.norm() == 0.0 {
                    continue;
                }
                let n = (p / step).re.round();
                for m in [n - 1.0, n, n + 1.0] {
                    if m == 0.0 {
                        continue;
                    }
                    let d = (p - step * m).norm();
                    if d < SINGULAR_GUARD {
                        return Err(Error::NearSingularity { point: p, distance: d });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, p: &T) -> Result<T> {
        let bits = self.bits;
        let mut terms = Vec::with_capacity(self.n0);
        let neg_i_p_over_2pi = p.mul_i().scale(-1.0) / T::pi(bits).scale(2.0);
        let one = T::one(bits);
        for n in 1..=self.n0 {
            let z = neg_i_p_over_2pi.div_u(n as u64);
            let v = self.fp.eval(&(one.clone() + z.clone()))?
                + self.fp.eval(&(one.clone() - z.clone()))?
                - self.fp.eval(&z)?
                - self.fp.eval(&(-z))?;
            terms.push(v.div_u((n * n) as u64));
        }
        let two_pi = T::pi(bits).scale(2.0);
        let direct = pairwise_sum(&terms, bits) / (two_pi.clone() * two_pi);
        let p2 = p.clone() * p.clone();
        let tail = self
            .tail
            .iter()
            .rev()
            .fold(T::zero(bits), |acc, c| acc * p2.clone() + c.clone());
        Ok(direct + tail)
    }

    /// Size of the last two tail terms at `|p|`, a bound on the dropped part
    /// since the tail ratio is at most `1/4`.
    pub fn tail_bound(&self, p_abs: f64) -> f64 {
        let k = self.tail_abs.len();
        let ln_p = p_abs.max(1e-300).ln();
        (k.saturating_sub(2)..k)
            .map(|i| (self.tail_abs[i].max(1e-300).ln() + 2.0 * i as f64 * ln_p).exp())
            .sum::<f64>()
            * 2.0
    }

    /// Exponential envelope `|G(p)| ≤ c·e^{a p}` on `[0, p_max]`: `a` from the
    /// vertical growth rate of `f`, `c` from samples with a safety factor.
    pub fn envelope(&self, p_max: f64) -> Envelope {
        self.envelope_along(Complex64::new(1.0, 0.0), p_max)
    }

    /// Envelope of `q ↦ G(q·dir)` on `0 ≤ q ≤ q_max`.
    pub fn envelope_along(&self, dir: Complex64, q_max: f64) -> Envelope {
        let a = growth_rate(&self.f).unwrap_or(0.0) / TWO_PI * dir.norm();
        let mut c = 0.0f64;
        for k in 0..=12 {
            let q = q_max * k as f64 / 12.0;
            if let Ok(v) = self.eval(&T::from_c64(dir * q, self.bits)) {
                c = c.max(v.norm() * (-a * q).exp());
            }
        }
        Envelope::new(4.0 * c.max(1e-300), a)
    }
}

/// `G_f(p)` from the series route.
pub fn g_series(f: &Expr, p: Complex64, tol: f64) -> Result<KernelEval> {
    let k = SeriesKernel::<Complex64>::new(f, p.norm(), 53)?;
    k.check_point(p)?;
    let value = k.eval(&p)?;
    let tail_bound = k.tail_bound(p.norm());
    if tail_bound > tol {
        return Err(Error::convergence("kernel series tail", tail_bound));
    }
    Ok(KernelEval {
        value,
        tail_bound,
        route: Route::Series,
        terms: k.direct_terms(),
    })
}

/// Maclaurin coefficients of `G_f` through `p^{m−1}`, read from the
/// endpoint Taylor data: slot `j` (even) is
/// `(2/4π²)·(j+1)·Δc_{j+1}·(2πi)^{−j}·ζ(j+2)`.
pub fn g_taylor_coeffs(f: &Expr, m: usize) -> Result<TruncatedSeries> {
    let jumps = endpoint_jump_coeffs::<Complex64>(f, m + 1, 53)?;
    let mut out = TruncatedSeries::zeros(SeriesVar::P, m);
    // log of |(2/4π²)(j+1)(2π)^{-j} ζ(j+2)| kept in logs to reach high orders
    for j in (0..m).step_by(2) {
        if jumps[j + 1].norm() == 0.0 {
            continue;
        }
        let zeta: Complex64 = hurwitz_zeta((j + 2) as u32, 1, 53);
        let ln_mag = (2.0 / (4.0 * PI * PI)).ln() + ((j + 1) as f64).ln()
            - j as f64 * TWO_PI.ln()
            + zeta.re.ln()
            + jumps[j + 1].norm().ln();
        let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let phase = jumps[j + 1] / jumps[j + 1].norm();
        out.coeffs[j] = phase * sign * ln_mag.exp();
    }
    Ok(out)
}

/// `G_f(p)` from the double integral
/// `(2πi)^{−3} ∫_0^∞ u/(e^u−1) ∮_{|s|=r0} (f(s) − f(1+s))/s² · 2cosh(pu/(2πis)) ds du`,
/// valid for `|p| < 2π·r0`.
pub fn g_integral(f: &Expr, p: Complex64, tol: f64) -> Result<KernelEval> {
    let f = strip_adapted(f);
    let (d, _) = endpoint_distance(&f)?;
    let r0 = (d / 2.0).min(0.45);
    let kappa = p.norm() / (TWO_PI * r0);
    if kappa >= 0.9 {
        return Err(Error::InvalidArgument(format!(
            "|p| = {} is outside the integral route's domain |p| < {}",
            p.norm(),
            0.9 * TWO_PI * r0
        )));
    }
    let prog = Compiled::<Complex64>::new(&f, 53);
    let bracket = |s: Complex64| -> Result<Complex64> {
        let v = prog.eval(&s)? - prog.eval(&(s + 1.0))?;
        Ok(v / (s * s))
    };
    let mut b_max = 0.0f64;
    for k in 0..64 {
        let s = Complex64::from_polar(r0, TWO_PI * k as f64 / 64.0);
        let v = bracket(s).map_err(|_| Error::NearSingularity {
            point: s,
            distance: r0,
        })?;
        b_max = b_max.max(v.norm() * r0 * r0);
    }
    let evaluations = std::cell::Cell::new(0usize);
    let two_pi_i = Complex64::new(0.0, TWO_PI);
    // ∮ h ds = 2πi · mean(h(s)·s)
    let inner = |u: f64| -> Result<Complex64> {
        let a = p * u / two_pi_i;
        let m = circle_mean(
            |s| {
                evaluations.set(evaluations.get() + 1);
                let w = a / s;
                Ok(bracket(s)? * (w.exp() + (-w).exp()) * s)
            },
            Complex64::new(0.0, 0.0),
            r0,
            (tol * 1e-2 * u.exp_m1() / u.max(1e-300)).max(1e-14 * b_max / r0 * (kappa * u).exp()),
        )?;
        Ok(two_pi_i * m)
    };
    // tail of the u-integral: ≲ 4π·b/r0 · U e^{−(1−κ)U}/(1−κ)
    let k_tail = 4.0 * PI * b_max / r0 / (1.0 - kappa) * 10.0;
    let mut u_max = 40.0f64;
    for _ in 0..8 {
        u_max = ((k_tail * u_max.max(1.0)) / (tol * 1e-2)).ln().max(1.0) / (1.0 - kappa);
    }
    let q = integrate(
        |u: &Complex64| {
            let u = u.re;
            let w = u / u.exp_m1();
            Ok(inner(u)? * w)
        },
        0.0,
        u_max,
        tol * 0.1 * (TWO_PI).powi(3),
        53,
    )?;
    let value = q.value / two_pi_i.powi(3);
    Ok(KernelEval {
        value,
        tail_bound: q.error_estimate / TWO_PI.powi(3) + tol * 1e-2,
        route: Route::Integral,
        terms: evaluations.get(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularPoint {
    pub p: Complex64,
    pub omega: Complex64,
    pub n: i64,
    /// True for points `2πin(ω−1)`.
    pub shifted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularitySet {
    /// Singularities `ω` of `f′`; the set is `{2πinω, 2πin(ω−1) : n ≠ 0}`.
    pub generators: Vec<Complex64>,
    pub radius: f64,
    /// Points with `|p| ≤ radius`, sorted by modulus.
    pub points: Vec<SingularPoint>,
}

impl SingularitySet {
    pub fn nearest(&self) -> Option<f64> {
        self.points.first().map(|q| q.p.norm())
    }
}

/// Singularities of `G_f` inside `|p| ≤ radius`.
pub fn g_singularity_set(f: &Expr, radius: f64) -> Result<SingularitySet> {
    let fp = differentiate(f);
    let generators: Vec<Complex64> = singularities(&fp, Region::Plane)?
        .iter()
        .map(|s| s.location)
        .collect();
    let mut points = vec![];
    for &w in &generators {
        for (b, shifted) in [(w, false), (w - 1.0, true)] {
            let step = (TWO_PI * b).norm();
            if step == 0.0 {
                continue;
            }
            let n_max = (radius / step).floor() as i64;
            for n in (-n_max..=n_max).filter(|&n| n != 0) {
                let p = Complex64::new(0.0, TWO_PI * n as f64) * b;
                if p.norm() <= radius {
                    points.push(SingularPoint {
                        p,
                        omega: w,
                        n,
                        shifted,
                    });
                }
            }
        }
    }
    points.sort_by(|a, b| {
        (a.p.norm(), a.p.arg())
            .partial_cmp(&(b.p.norm(), b.p.arg()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SingularitySet {
        generators,
        radius,
        points,
    })
}

/// Stirling kernel `H(p) = (p/(e^p − 1) − 1 + p/2)/p²`, whose Maclaurin
/// series is `Σ_{n≥1} B_{2n}/(2n)! p^{2n−2}`.
pub fn h_kernel(p: Complex64) -> Result<Complex64> {
    let n = (p.im / TWO_PI).round();
    if n != 0.0 {
        let d = (p - Complex64::new(0.0, TWO_PI * n)).norm();
        if d < SINGULAR_GUARD {
            return Err(Error::NearSingularity { point: p, distance: d });
        }
    }
    if p.norm() < 1.0 {
        Ok(h_taylor(p, 40))
    } else {
        Ok((p / p.exp_m1_c() - 1.0 + p / 2.0) / (p * p))
    }
}

/// Partial sum of the Maclaurin series of `H` with `terms` terms.
pub fn h_taylor(p: Complex64, terms: usize) -> Complex64 {
    let table = bernoulli_table(2 * terms + 2);
    let p2 = p * p;
    let mut fact = 2.0f64;
    let mut coeffs = Vec::with_capacity(terms);
    for n in 1..=terms {
        if n > 1 {
            fact *= ((2 * n - 1) * (2 * n)) as f64;
        }
        coeffs.push(crate::funcs::bigrational_f64(&table[2 * n]) / fact);
    }
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * p2 + c)
}

trait ExpM1 {
    fn exp_m1_c(self) -> Self;
}

impl ExpM1 for Complex64 {
    fn exp_m1_c(self) -> Self {
        if self.norm() < 0.5 {
            // e^z − 1 = 2 e^{z/2} sinh(z/2)
            let h = self / 2.0;
            2.0 * h.exp() * h.sinh()
        } else {
            self.exp() - 1.0
        }
    }
}

/// `G_f + c·H` style sum of a series kernel and a multiple of `H`, evaluated
/// at double precision.
pub(crate) fn h_envelope(p_max: f64) -> Envelope {
    let mut c = 0.0f64;
    for k in 0..=16 {
        let p = p_max * k as f64 / 16.0;
        if let Ok(v) = h_kernel(Complex64::new(p, 0.0)) {
            c = c.max(v.norm());
        }
    }
    Envelope::new(2.0 * c, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn quadratic_kernel_is_constant() {
        let f = parse_expr("x^2").unwrap();
        for p in [c(0.0), c(0.3), c(5.0), Complex64::new(2.0, 1.0)] {
            let v = g_series(&f, p, 1e-12).unwrap();
            assert!((v.value - 1.0 / 6.0).norm() < 1e-14, "{p}: {}", v.value);
        }
        let v = g_integral(&f, c(0.3), 1e-11).unwrap();
        assert!((v.value - 1.0 / 6.0).norm() < 1e-10, "{}", v.value);
    }

    #[test]
    fn constant_kernel_vanishes() {
        let f = parse_expr("7/3").unwrap();
        assert_eq!(g_series(&f, c(1.0), 1e-12).unwrap().value, c(0.0));
        assert!(g_integral(&f, c(1.0), 1e-12).unwrap().value.norm() < 1e-15);
    }

    #[test]
    fn routes_agree() {
        for (src, p) in [("exp(x)", c(1.0)), ("1/(x - 2)", c(1.0)), ("x^5", Complex64::new(0.5, 0.4))] {
            let f = parse_expr(src).unwrap();
            let a = g_series(&f, p, 1e-12).unwrap();
            let b = g_integral(&f, p, 1e-10).unwrap();
            assert!((a.value - b.value).norm() < 1e-8, "{src}: {} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn taylor_coefficients_match_borel_of_remainder() {
        let f = parse_expr("exp(x/2) + 1/(x - 3)").unwrap();
        let g = g_taylor_coeffs(&f, 12).unwrap();
        let r = crate::series::borel_transform(&crate::series::em_remainder_series(&f, 13).unwrap()).unwrap();
        for k in 0..12 {
            assert!((g.coeffs[k] - r.coeffs[k]).norm() < 1e-14 * r.coeffs[k].norm().max(1e-3), "slot {k}");
        }
        // and the series evaluator near 0
        let v = g_series(&f, c(0.05), 1e-14).unwrap().value;
        assert!((v - g.eval(c(0.05))).norm() < 1e-12);
    }

    #[test]
    fn singularity_set_of_simple_pole() {
        let s = g_singularity_set(&parse_expr("1/(x - 2)").unwrap(), 30.0).unwrap();
        assert!((s.nearest().unwrap() - TWO_PI).abs() < 1e-12);
        assert!(s.points.iter().any(|q| (q.p - Complex64::new(0.0, 4.0 * PI)).norm() < 1e-12));
        assert!(g_singularity_set(&parse_expr("exp(x)").unwrap(), 30.0).unwrap().points.is_empty());
        let err = g_series(&parse_expr("1/(x - 2)").unwrap(), Complex64::new(0.0, TWO_PI), 1e-10);
        assert_eq!(err.unwrap_err().code(), "E_NEAR_SINGULARITY");
    }

    #[test]
    fn stirling_kernel() {
        assert!((h_kernel(c(0.0)).unwrap() - 1.0 / 12.0).norm() < 1e-16);
        let direct = (c(1.0) / (c(1.0).exp() - 1.0) - 1.0 + 0.5) / 1.0;
        assert!((h_taylor(c(1.0), 40) - direct).norm() < 1e-12);
        let p = Complex64::new(1.3, -2.1);
        assert!((h_kernel(p.conj()).unwrap() - h_kernel(p).unwrap().conj()).norm() < 1e-15);
        assert!(h_kernel(Complex64::new(0.0, TWO_PI)).is_err());
    }

    #[test]
    fn multiprecision_series_kernel() {
        let f = parse_expr("1/(x - 2)").unwrap();
        let k64 = SeriesKernel::<Complex64>::new(&f, 3.0, 53).unwrap();
        let kmp = SeriesKernel::<rug::Complex>::new(&f, 3.0, 300).unwrap();
        let p = 2.5;
        let a = k64.eval(&c(p)).unwrap();
        let b = kmp.eval(&rug::Complex::with_val(300, p)).unwrap().to_c64();
        assert!((a - b).norm() < 1e-14);
    }
}
