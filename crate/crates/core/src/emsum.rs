//! Summation drivers for `Σ_{k=1}^N f(k/N)`: the classical truncated
//! Euler-Maclaurin formula, its exact Laplace form, Abel-Plana, the
//! transseries-corrected form for singularities in the strip, the
//! logarithmic form and Stirling's formula.

use num_complex::Complex64;
use serde::Serialize;

use crate::borel::{h_envelope, h_kernel, SeriesKernel};
use crate::error::{Error, Result};
use crate::funcs::{
    check_strip_hypothesis, differentiate, growth_rate, ray_sign, singularities, strip_adapted,
    variation, Compiled, Expr, HypothesisReport, Region, SingularityKind, SingularityRecord,
    StripHypothesis,
};
use crate::quad::{integrate, laplace_with, Envelope};
use crate::scalar::{neumaier_sum, pairwise_sum, to_decimal, Precision, Scalar};
use crate::series::{endpoint_jump_coeffs, hurwitz_zeta};

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

/// Default number of exponentially small correction orders per singularity.
pub const DEFAULT_M_MAX: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub name: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LaplaceSummary {
    pub p_max: f64,
    pub error_estimate: f64,
    pub tail_bound: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Laplace transform of the variation along the vertical cut.
    Branch,
    /// Residue at a pole, taken on a small circle.
    Pole,
}

/// One exponentially small correction `N·e^{±2πiλ(m+1)N}·(ℒG_{λ,m})(N)`.
#[derive(Debug, Clone, Serialize)]
pub struct TransseriesTerm {
    pub lambda: Complex64,
    pub m: usize,
    pub mode: CorrectionMode,
    /// `e^{2πiλ(m+1)N}` for `Im λ > 0`, `e^{−2πiλ(m+1)N}` otherwise
    /// (may underflow; see `log10_magnitude`).
    pub prefactor: Complex64,
    /// `(ℒG_{λ,m})(N)`; for poles the contour integral divided by `N` and the
    /// prefactor.
    pub laplace_value: Complex64,
    pub value: Complex64,
    /// `log10 e^{−2π|Im λ|(m+1)N}`.
    pub log10_magnitude: f64,
}

/// Every term of an exact summation identity together with the direct sum.
#[derive(Debug, Clone, Serialize)]
pub struct SummationReport {
    pub mode: String,
    pub n: u64,
    /// `N∫_0^1 f`.
    pub integral_term: Complex64,
    /// `½(f(1) − f(0))`.
    pub boundary_term: Complex64,
    pub laplace_term: Complex64,
    /// Further closed-form terms (logarithmic mode).
    pub extra_terms: Vec<Term>,
    pub corrections: Vec<TransseriesTerm>,
    /// Estimate of the corrections beyond `m_max`.
    pub correction_tail: f64,
    pub total: Complex64,
    pub oracle: Complex64,
    /// `|total − oracle|` at working precision.
    pub residual: f64,
    pub laplace: LaplaceSummary,
    pub precision_digits: u32,
    /// Decimal rendering of the total when working above double precision.
    pub total_decimal: Option<[String; 2]>,
    pub hypothesis: Option<HypothesisReport>,
}

impl SummationReport {
    /// Re-adds the listed terms in double precision.
    pub fn sum_of_terms(&self) -> Complex64 {
        neumaier_sum(
            [self.integral_term, self.boundary_term, self.laplace_term]
                .into_iter()
                .chain(self.extra_terms.iter().map(|t| t.value))
                .chain(self.corrections.iter().map(|c| c.value)),
        )
    }

    /// `|Σ terms − oracle|` recomputed from the listed terms.
    pub fn recompute_residual(&self) -> f64 {
        (self.sum_of_terms() - self.oracle).norm()
    }
}

fn node<T: Scalar>(k: u64, n: u64, bits: u32) -> T {
    T::from_rational(
        &num_rational::BigRational::new(k.into(), n.into()),
        bits,
    )
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(())
}

/// `Σ_{k=1}^N f(k/N)` with compensated summation.
pub fn direct_sum(f: &Expr, n: u64) -> Result<Complex64> {
    check_n(n)?;
    let prog = Compiled::<Complex64>::new(f, 53);
    let terms = (1..=n)
        .map(|k| prog.eval(&Complex64::new(k as f64 / n as f64, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(neumaier_sum(terms))
}

fn direct_sum_t<T: Scalar>(f: &Expr, n: u64, bits: u32) -> Result<T> {
    if bits <= 53 {
        return Ok(T::from_c64(direct_sum(f, n)?, bits));
    }
    let prog = Compiled::<T>::new(f, bits);
    let terms = (1..=n)
        .map(|k| prog.eval(&node::<T>(k, n, bits)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms, bits))
}

/// `∫_0^1 f`.
pub fn integral_01(f: &Expr, tol: f64) -> Result<Complex64> {
    integral_01_t::<Complex64>(f, tol, 53)
}

fn integral_01_t<T: Scalar>(f: &Expr, tol: f64, bits: u32) -> Result<T> {
    let prog = Compiled::<T>::new(f, bits);
    Ok(integrate(|x: &T| prog.eval(x), 0.0, 1.0, tol, bits)?.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalResult {
    pub value: Complex64,
    /// Magnitude of the first omitted term.
    pub first_omitted: f64,
    /// Slots of the `1/N` series included.
    pub order: usize,
}

/// Truncated Euler-Maclaurin: `N∫f + ½(f(1)−f(0)) + Σ_{2n−1<M} B_{2n}/(2n)!
/// (f^{(2n−1)}(1) − f^{(2n−1)}(0))/N^{2n−1}`.
pub fn em_classical(f: &Expr, n: u64, m: usize) -> Result<ClassicalResult> {
    check_n(n)?;
    let nf = n as f64;
    let slots = remainder_slots(f, m + 2)?;
    let base = integral_01(f, 1e-15)? * nf + boundary(f)?;
    let terms: Vec<Complex64> = (0..m).map(|k| slots[k] / nf.powi(k as i32)).collect();
    let first_omitted = (m..m + 2)
        .map(|k| slots[k].norm() / nf.powi(k as i32))
        .find(|v| *v > 0.0)
        .unwrap_or(0.0);
    Ok(ClassicalResult {
        value: base + neumaier_sum(terms),
        first_omitted,
        order: m,
    })
}

/// Order `M` of the smallest first-omitted term, searched up to `cap`.
pub fn optimal_order(f: &Expr, n: u64, cap: usize) -> Result<usize> {
    check_n(n)?;
    let nf = n as f64;
    let slots = remainder_slots(f, cap + 2)?;
    let mut best = (f64::INFINITY, 1usize);
    for k in (1..cap).step_by(2) {
        let v = slots[k].norm() / nf.powi(k as i32);
        if v == 0.0 {
            return Ok(k);
        }
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok(best.1)
}

fn remainder_slots(f: &Expr, m: usize) -> Result<Vec<Complex64>> {
    Ok(crate::series::em_remainder_series(f, m)?.coeffs)
}

fn boundary(f: &Expr) -> Result<Complex64> {
    Ok((crate::funcs::eval(f, Complex64::new(1.0, 0.0))?
        - crate::funcs::eval(f, Complex64::new(0.0, 0.0))?)
        / 2.0)
}

struct Main<T> {
    integral: T,
    boundary: T,
    laplace: T,
    summary: LaplaceSummary,
}

/// `∫_0^∞ e^{−nq} G_f(q·dir)·dir dq`, choosing the kernel's design range
/// from the envelope.
pub(crate) fn laplace_of_kernel<T: Scalar>(
    f: &Expr,
    n: f64,
    dir: Complex64,
    tol: f64,
    bits: u32,
) -> Result<(T, LaplaceSummary)> {
    let scale = dir.norm();
    let mut design = (40.0 / n).max(1.0);
    for _ in 0..6 {
        let kernel = SeriesKernel::<T>::new(f, design * scale, bits)?;
        let env = kernel.envelope_along(dir, design);
        let env = Envelope::new(env.c * scale, env.a);
        if env.a >= n {
            return Err(Error::Growth { rate: env.a, n });
        }
        let gap = n - env.a;
        let q_max = (2.0 * env.c / (tol * gap)).ln() / gap;
        if q_max > design * 1.0001 {
            design = q_max * 1.1;
            continue;
        }
        let d = T::from_c64(dir, bits);
        let r = laplace_with(|q: &T| Ok(kernel.eval(&(q.clone() * d.clone()))? * d.clone()), n, tol, env, bits)?;
        let summary = LaplaceSummary {
            p_max: r.p_max,
            error_estimate: r.error_estimate,
            tail_bound: r.tail_bound + kernel.tail_bound(r.p_max * scale) * scale,
            evaluations: r.evaluations,
        };
        return Ok((r.value, summary));
    }
    Err(Error::convergence("Laplace range selection", f64::NAN))
}

fn main_terms<T: Scalar>(f: &Expr, n: u64, tol: f64, bits: u32) -> Result<Main<T>> {
    let nf = n as f64;
    let prog = Compiled::<T>::new(f, bits);
    let integral = integral_01_t::<T>(f, tol / (10.0 * nf), bits)?.scale(nf);
    let boundary =
        (prog.eval(&T::one(bits))? - prog.eval(&T::zero(bits))?).scale(0.5);
    let (laplace, summary) = laplace_of_kernel::<T>(f, nf, Complex64::new(1.0, 0.0), tol / 4.0, bits)?;
    Ok(Main {
        integral,
        boundary,
        laplace,
        summary,
    })
}

fn hypothesis_error(report: HypothesisReport) -> Error {
    Error::Hypothesis {
        which: report.which.to_string(),
        summary: report.summary(),
        report: Box::new(report),
    }
}

/// Exact Euler-Maclaurin summation `N∫f + ½(f(1)−f(0)) + ∫_0^∞ e^{−Np}G_f(p)dp`
/// for `f` without singularities in the strip `0 ≤ Re x ≤ 1`.
pub fn em_exact(f: &Expr, n: u64, tol: f64) -> Result<SummationReport> {
    em_exact_with(f, n, tol, Precision::DOUBLE)
}

pub fn em_exact_with(f: &Expr, n: u64, tol: f64, precision: Precision) -> Result<SummationReport> {
    check_n(n)?;
    let report = check_strip_hypothesis(f, StripHypothesis::A1);
    if !report.holds {
        return Err(hypothesis_error(report));
    }
    let mut out = if precision.is_double() {
        exact_t::<Complex64>(f, n, tol, 53, &[], 0)?
    } else {
        exact_t::<rug::Complex>(f, n, tol, precision.bits(), &[], 0)?
    };
    out.mode = "exact".into();
    out.precision_digits = precision.digits;
    out.hypothesis = Some(report);
    Ok(out)
}

/// Shared by the exact and transseries drivers: main terms plus the given
/// corrections, checked against the direct sum at working precision.
fn exact_t<T: Scalar>(
    f: &Expr,
    n: u64,
    tol: f64,
    bits: u32,
    lambdas: &[SingularityRecord],
    m_max: usize,
) -> Result<SummationReport> {
    let main = main_terms::<T>(f, n, tol, bits)?;
    let mut corrections = vec![];
    let mut correction_sum = T::zero(bits);
    let mut correction_tail = 0.0;
    for rec in lambdas {
        let (terms, values, tail) = corrections_for::<T>(f, rec, n, tol, m_max, bits)?;
        for v in values {
            correction_sum = correction_sum + v;
        }
        corrections.extend(terms);
        correction_tail += tail;
    }
    let total = main.integral.clone() + main.boundary.clone() + main.laplace.clone() + correction_sum;
    let oracle = direct_sum_t::<T>(f, n, bits)?;
    let residual = (total.clone() - oracle.clone()).norm();
    Ok(SummationReport {
        mode: String::new(),
        n,
        integral_term: main.integral.to_c64(),
        boundary_term: main.boundary.to_c64(),
        laplace_term: main.laplace.to_c64(),
        extra_terms: vec![],
        corrections,
        correction_tail,
        total: total.to_c64(),
        oracle: oracle.to_c64(),
        residual,
        laplace: main.summary,
        precision_digits: 16,
        total_decimal: (bits > 53).then(|| {
            let digits = ((bits as f64 - 8.0) / std::f64::consts::LOG2_10) as usize;
            let (re, im) = to_decimal(&total, digits);
            [re, im]
        }),
        hypothesis: None,
    })
}

/// Options for [`em_transseries_with`].
#[derive(Debug, Clone, Copy)]
pub struct TransseriesOptions {
    pub m_max: usize,
    pub precision: Precision,
    /// Skip the correction terms (main terms only).
    pub main_only: bool,
}

impl Default for TransseriesOptions {
    fn default() -> Self {
        TransseriesOptions {
            m_max: DEFAULT_M_MAX,
            precision: Precision::DOUBLE,
            main_only: false,
        }
    }
}

/// Euler-Maclaurin summation with exponentially small corrections from the
/// singularities of `f` inside the strip.
pub fn em_transseries(f: &Expr, n: u64, tol: f64, m_max: usize) -> Result<SummationReport> {
    em_transseries_with(
        f,
        n,
        tol,
        TransseriesOptions {
            m_max,
            ..Default::default()
        },
    )
}

pub fn em_transseries_with(
    f: &Expr,
    n: u64,
    tol: f64,
    opt: TransseriesOptions,
) -> Result<SummationReport> {
    check_n(n)?;
    let report = check_strip_hypothesis(f, StripHypothesis::A2);
    if !report.holds {
        return Err(hypothesis_error(report));
    }
    let fa = strip_adapted(f);
    let lambdas = if opt.main_only {
        vec![]
    } else {
        singularities(&fa, Region::strip())?
    };
    let bits = opt.precision.bits();
    let mut out = if opt.precision.is_double() {
        exact_t::<Complex64>(&fa, n, tol, bits, &lambdas, opt.m_max)?
    } else {
        exact_t::<rug::Complex>(&fa, n, tol, bits, &lambdas, opt.m_max)?
    };
    out.mode = "transseries".into();
    out.precision_digits = opt.precision.digits;
    out.hypothesis = Some(report);
    Ok(out)
}

/// Correction terms `m = 0..=m_max` for one strip singularity, their values
/// at working precision, and an estimate of the dropped orders.
fn corrections_for<T: Scalar>(
    f: &Expr,
    rec: &SingularityRecord,
    n: u64,
    tol: f64,
    m_max: usize,
    bits: u32,
) -> Result<(Vec<TransseriesTerm>, Vec<T>, f64)> {
    let lambda = rec.location;
    let sigma = ray_sign(lambda);
    let nf = n as f64;
    let lam = T::from_c64(lambda, bits);
    let two_pi = T::pi(bits).scale(2.0);
    let mut terms = vec![];
    let mut values = vec![];
    let mut last_abs = 0.0;
    let branch = match rec.kind {
        SingularityKind::Pole { .. } => None,
        _ => {
            if crate::funcs::ratio_f64(rec.alpha) <= -1.0 {
                return Err(Error::Unsupported(format!(
                    "branch point at {lambda} with exponent {} ≤ −1",
                    rec.alpha
                )));
            }
            Some(Compiled::<T>::new(&variation(f, rec)?, bits))
        }
    };
    let rate = growth_rate(f).unwrap_or(0.0);
    for m in 0..=m_max {
        let k = (m + 1) as f64;
        // e^{2πiσλ(m+1)N}
        let phase = (lam.mul_i() * two_pi.clone()).scale(sigma * k * nf).exp();
        let log10_magnitude = -TWO_PI * lambda.im.abs() * k * nf / std::f64::consts::LN_10;
        let (value, laplace_value, mode) = match &branch {
            Some(v) => {
                // G_m(p) = (d/(2π(m+1)))·V(d·p/(2π(m+1))), d = iσ
                let d_over = T::i_unit(bits).scale(sigma) / two_pi.clone().scale(k);
                let env_scale = {
                    let mut c = 0.0f64;
                    for j in 1..=8 {
                        let p = T::from_f64(j as f64 * 0.5, bits);
                        if let Ok(g) = v.eval(&(d_over.clone() * p)) {
                            c = c.max(g.norm() / (j as f64 * 0.5).powf(crate::funcs::ratio_f64(rec.alpha)).max(1.0));
                        }
                    }
                    c * d_over.norm()
                };
                let env = Envelope::new(4.0 * env_scale.max(1e-300) + 1.0, rate / (TWO_PI * k) + 0.5);
                let lt_tol = tol / (nf * phase.norm().max(1e-300));
                let lt_tol = lt_tol.min(1e-3).max(f64::MIN_POSITIVE);
                let r = laplace_with(
                    |p: &T| Ok(d_over.clone() * v.eval(&(d_over.clone() * p.clone()))?),
                    nf,
                    lt_tol,
                    env,
                    bits,
                )?;
                let value = phase.clone() * r.value.clone().scale(nf);
                (value, r.value, CorrectionMode::Branch)
            }
            None => {
                let value = pole_term::<T>(f, rec, n, m, bits)?;
                let lv = value.clone() / (phase.clone().scale(nf));
                (value, lv, CorrectionMode::Pole)
            }
        };
        last_abs = value.norm();
        terms.push(TransseriesTerm {
            lambda,
            m,
            mode,
            prefactor: phase.to_c64(),
            laplace_value: laplace_value.to_c64(),
            value: value.to_c64(),
            log10_magnitude,
        });
        values.push(value);
    }
    let ratio = (-TWO_PI * lambda.im.abs() * nf).exp();
    let tail = last_abs * ratio / (1.0 - ratio).max(1e-300);
    Ok((terms, values, tail))
}

/// Pole contribution of order `m`: `±N∮ f(u) e^{±2πiN(m+1)u} du` around `λ`.
fn pole_term<T: Scalar>(f: &Expr, rec: &SingularityRecord, n: u64, m: usize, bits: u32) -> Result<T> {
    let lambda = rec.location;
    let sigma = ray_sign(lambda);
    let others: f64 = singularities(f, Region::Plane)?
        .iter()
        .filter(|s| (s.location - lambda).norm() > 1e-9)
        .map(|s| (s.location - lambda).norm())
        .fold(f64::INFINITY, f64::min);
    let r = (lambda.im.abs() / 2.0).min(others / 2.0).min(0.25);
    let prog = Compiled::<T>::new(f, bits);
    let nf = n as f64;
    let two_pi_i = T::i_unit(bits) * T::pi(bits).scale(2.0);
    let w = two_pi_i.scale(sigma * nf * (m + 1) as f64);
    let integral = circle_integral_t::<T>(
        |u: &T| Ok(prog.eval(u)? * (w.clone() * u.clone()).exp()),
        lambda,
        r,
        bits,
    )?;
    Ok(integral.scale(sigma * nf))
}

/// `∮ g(u) du` over `|u − center| = r`, trapezoid with node doubling at
/// working precision.
fn circle_integral_t<T: Scalar>(
    g: impl Fn(&T) -> Result<T>,
    center: Complex64,
    r: f64,
    bits: u32,
) -> Result<T> {
    let c = T::from_c64(center, bits);
    let rt = T::from_f64(r, bits);
    let two_pi = T::pi(bits).scale(2.0);
    let eval_at = |k: usize, nodes: usize| -> Result<T> {
        let theta = two_pi.clone().scale(k as f64 / nodes as f64);
        let e = theta.mul_i().exp();
        let u = c.clone() + rt.clone() * e.clone();
        Ok(g(&u)? * rt.clone() * e.mul_i())
    };
    let mut nodes = 32usize;
    let mut sum = pairwise_sum(
        &(0..nodes).map(|k| eval_at(k, nodes)).collect::<Result<Vec<_>>>()?,
        bits,
    );
    let mut prev = sum.clone() * two_pi.clone().scale(1.0 / nodes as f64);
    let eps = 2f64.powi(-(bits as i32) + 8);
    while nodes < (1 << 16) {
        let fresh = (0..nodes)
            .map(|k| eval_at(2 * k + 1, 2 * nodes))
            .collect::<Result<Vec<_>>>()?;
        sum = sum + pairwise_sum(&fresh, bits);
        nodes *= 2;
        let cur = sum.clone() * two_pi.clone().scale(1.0 / nodes as f64);
        let delta = (cur.clone() - prev.clone()).norm();
        let scale = cur.norm().max(sum.norm() * two_pi.norm() / nodes as f64).max(1e-300);
        if delta <= eps * scale.max(1.0) || delta == 0.0 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::convergence("residue contour", f64::NAN))
}

/// Abel-Plana: `N∫f + ½(f(1)−f(0)) + i∫_0^∞ [f(iy/N) − f(1+iy/N) − f(−iy/N) +
/// f(1−iy/N)]/(e^{2πy} − 1) dy`.
pub fn abel_plana(f: &Expr, n: u64, tol: f64) -> Result<Complex64> {
    check_n(n)?;
    let report = check_strip_hypothesis(f, StripHypothesis::A1);
    if !report.holds {
        return Err(hypothesis_error(report));
    }
    let nf = n as f64;
    let prog = Compiled::<Complex64>::new(f, 53);
    let bracket = |y: f64| -> Result<Complex64> {
        let z = Complex64::new(0.0, y / nf);
        Ok(prog.eval(&z)? - prog.eval(&(1.0 + z))? - prog.eval(&(-z))? + prog.eval(&(1.0 - z))?)
    };
    let y_int = geometric_weight_integral(bracket, nf, growth_rate(f), tol)?;
    Ok(integral_01(f, tol / (10.0 * nf))? * nf + boundary(f)? + Complex64::new(0.0, 1.0) * y_int)
}

/// `∫_0^∞ h(y)/(e^{2πy} − 1) dy` for `h(y) = O(y)` at 0, as a Laplace
/// transform at `2π` of `h(y)/(1 − e^{−2πy})`.
fn geometric_weight_integral(
    h: impl Fn(f64) -> Result<Complex64>,
    nf: f64,
    rate: Option<f64>,
    tol: f64,
) -> Result<Complex64> {
    let a = rate.unwrap_or(0.0) / nf;
    let g = |y: f64| -> Result<Complex64> { Ok(h(y)? / (-(-TWO_PI * y).exp_m1())) };
    let mut c = 0.0f64;
    for k in 1..=16 {
        let y = k as f64 * 0.25;
        c = c.max(g(y)?.norm() * (-a * y).exp());
    }
    let env = Envelope::new(4.0 * c + 1e-300, a);
    Ok(laplace_with(|y: &Complex64| g(y.re), TWO_PI, tol / 2.0, env, 53)?.value)
}

/// Summation of `c·log x + g(x)` over `x = k/N`, with the Stirling kernel
/// absorbing the logarithmic endpoint singularity.
pub fn em_log(c: Complex64, g: &Expr, n: u64, tol: f64) -> Result<SummationReport> {
    check_n(n)?;
    let report = check_strip_hypothesis(g, StripHypothesis::A1);
    if !report.holds {
        return Err(hypothesis_error(report));
    }
    let nf = n as f64;
    let integral = integral_01(g, tol / (10.0 * nf))? * nf - c * nf;
    let bnd = boundary(g)?;
    let log_n = c / 2.0 * nf.ln();
    let log_2pi = c / 2.0 * TWO_PI.ln();
    // Laplace transform of G_g + c·H
    let mut design = (40.0 / nf).max(1.0);
    let mut result = None;
    for _ in 0..6 {
        let kernel = SeriesKernel::<Complex64>::new(g, design, 53)?;
        let genv = kernel.envelope(design);
        let henv = h_envelope(design);
        let env = Envelope::new(genv.c + c.norm() * henv.c, genv.a);
        if env.a >= nf {
            return Err(Error::Growth { rate: env.a, n: nf });
        }
        let gap = nf - env.a;
        let p_max = (2.0 * env.c / (tol * gap)).ln() / gap;
        if p_max > design * 1.0001 {
            design = p_max * 1.1;
            continue;
        }
        let r = laplace_with(
            |p: &Complex64| Ok(kernel.eval(p)? + c * h_kernel(*p)?),
            nf,
            tol / 4.0,
            env,
            53,
        )?;
        result = Some(r);
        break;
    }
    let r = result.ok_or_else(|| Error::convergence("Laplace range selection", f64::NAN))?;
    let prog = Compiled::<Complex64>::new(g, 53);
    let oracle = neumaier_sum(
        (1..=n)
            .map(|k| {
                let x = k as f64 / nf;
                Ok(c * x.ln() + prog.eval(&Complex64::new(x, 0.0))?)
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let extra_terms = vec![
        Term {
            name: "(c/2) log N".into(),
            value: log_n,
        },
        Term {
            name: "(c/2) log 2π".into(),
            value: log_2pi,
        },
    ];
    let total = neumaier_sum([integral, bnd, r.value, log_n, log_2pi]);
    Ok(SummationReport {
        mode: "log".into(),
        n,
        integral_term: integral,
        boundary_term: bnd,
        laplace_term: r.value,
        extra_terms,
        corrections: vec![],
        correction_tail: 0.0,
        total,
        oracle,
        residual: (total - oracle).norm(),
        laplace: LaplaceSummary {
            p_max: r.p_max,
            error_estimate: r.error_estimate,
            tail_bound: r.tail_bound,
            evaluations: r.evaluations,
        },
        precision_digits: 16,
        total_decimal: None,
        hypothesis: Some(report),
    })
}

/// `(ℒH)(N)`.
pub fn laplace_h(n: f64, tol: f64) -> Result<Complex64> {
    let p_guess = (2.0 / (tol * n)).ln().max(1.0) / n * 2.0;
    let env = h_envelope(p_guess.max(1.0));
    Ok(laplace_with(|p: &Complex64| h_kernel(*p), n, tol, env, 53)?.value)
}

/// `log(N!/N^N) = ½log N − N + ½log 2π + (ℒH)(N)`.
pub fn stirling_exact(n: u64, tol: f64) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let lh = laplace_h(nf, tol / 2.0)?;
    Ok(0.5 * nf.ln() - nf + 0.5 * TWO_PI.ln() + lh.re)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// The four one-sided pieces of the Abel-Plana bracket, each written both
/// as a `y`-integral against `1/(e^{2πy} − 1)` and as a `1/n²`-weighted sum
/// of Laplace transforms of `f′` along rays from `0` or `1`:
///
/// * `−i∫(f(1+iy/N) − f(1)) = (1/4π²)Σ n^{−2}∫e^{−Np} f′(1 − p/(2πin)) dp`
/// * ` i∫(f(1−iy/N) − f(1)) = (1/4π²)Σ n^{−2}∫e^{−Np} f′(1 + p/(2πin)) dp`
/// * ` i∫(f(iy/N) − f(0))   = −(1/4π²)Σ n^{−2}∫e^{−Np} f′(−p/(2πin)) dp`
/// * `−i∫(f(−iy/N) − f(0))  = −(1/4π²)Σ n^{−2}∫e^{−Np} f′(p/(2πin)) dp`
pub fn abel_plana_term_identities(f: &Expr, n: u64, tol: f64) -> Result<[IdentityCheck; 4]> {
    check_n(n)?;
    let report = check_strip_hypothesis(f, StripHypothesis::A1);
    if !report.holds {
        return Err(hypothesis_error(report));
    }
    let nf = n as f64;
    let prog = Compiled::<Complex64>::new(f, 53);
    let dprog = Compiled::<Complex64>::new(&differentiate(f), 53);
    let rate = growth_rate(f);
    let i = Complex64::new(0.0, 1.0);
    // (anchor, sign s in f(a + s·iy/N), lhs factor, rhs factor, sign t in f′(a + t·p/(2πin)))
    let cases: [(&str, f64, f64, Complex64, f64, f64); 4] = [
        ("right-up", 1.0, 1.0, -i, 1.0, -1.0),
        ("right-down", 1.0, -1.0, i, 1.0, 1.0),
        ("left-up", 0.0, 1.0, i, -1.0, -1.0),
        ("left-down", 0.0, -1.0, -i, -1.0, 1.0),
    ];
    let n0 = 30usize;
    let order = 48usize;
    let mut out = vec![];
    for (name, a, s, lhs_factor, rhs_sign, t) in cases {
        let fa = prog.eval(&Complex64::new(a, 0.0))?;
        let h = |y: f64| -> Result<Complex64> {
            Ok(prog.eval(&Complex64::new(a, s * y / nf))? - fa)
        };
        let lhs = lhs_factor * geometric_weight_integral(h, nf, rate, tol / 10.0)?;
        // n ≤ n0 by quadrature
        let mut terms = vec![];
        for k in 1..=n0 {
            let w = Complex64::new(0.0, -t / (TWO_PI * k as f64)); // t/(2πik)
            let g = |p: &Complex64| dprog.eval(&(Complex64::new(a, 0.0) + w * p));
            let env_a = rate.unwrap_or(0.0) / (TWO_PI * k as f64);
            let mut c = 0.0f64;
            for j in 0..=8 {
                c = c.max(g(&Complex64::new(j as f64, 0.0))?.norm());
            }
            let r = laplace_with(g, nf, tol / (10.0 * n0 as f64), Envelope::new(4.0 * c + 1e-300, env_a), 53)?;
            terms.push(r.value / (k * k) as f64);
        }
        // n > n0 by Watson's lemma: ∫e^{−Np} f′(a + w p) dp ~ Σ_j f^{(j+1)}(a) w^j j!/N^{j+1}
        let jets = dprog.taylor(&Complex64::new(a, 0.0), order)?;
        let mut w_pow = Complex64::new(1.0, 0.0);
        let wt = Complex64::new(0.0, -t / TWO_PI);
        let mut fact_ratio = 1.0 / nf; // j!/N^{j+1} · (1/j!) absorbed below
        let mut tail = vec![];
        let mut prev = f64::INFINITY;
        for (j, cj) in jets.iter().enumerate() {
            // f′^{(j)}(a) = j!·c_j, times j!/N^{j+1}
            if j > 0 {
                w_pow *= wt;
                fact_ratio *= (j as f64) * (j as f64) / nf;
            }
            let zeta: Complex64 = hurwitz_zeta((j + 2) as u32, (n0 + 1) as u64, 53);
            let term = cj * w_pow * fact_ratio * zeta.re;
            let mag = term.norm();
            if mag > prev && prev > 0.0 && j > 4 {
                break;
            }
            tail.push(term);
            if mag > 0.0 {
                prev = mag;
            }
        }
        terms.extend(tail);
        let rhs = rhs_sign * neumaier_sum(terms) / (4.0 * PI * PI);
        out.push(IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            residual: (lhs - rhs).norm(),
        });
    }
    Ok(out.try_into().expect("four identities"))
}

/// Endpoint Taylor jumps `f^{(k)}(1) − f^{(k)}(0)`, exposed for diagnostics.
pub fn endpoint_derivative_jumps(f: &Expr, order: usize) -> Result<Vec<Complex64>> {
    let c = endpoint_jump_coeffs::<Complex64>(f, order, 53)?;
    let mut fact = 1.0f64;
    Ok(c
        .iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v * fact
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn direct_sums() {
        assert!((direct_sum(&p("x^2"), 10).unwrap().re - 3.85).abs() < 1e-14);
        assert!((direct_sum(&p("x"), 7).unwrap().re - 4.0).abs() < 1e-15);
        assert!((direct_sum(&p("5/2"), 9).unwrap().re - 22.5).abs() < 1e-14);
    }

    #[test]
    fn classical_terminates_for_polynomials() {
        let r = em_classical(&p("x^2"), 10, 4).unwrap();
        assert!((r.value.re - 3.85).abs() < 1e-13);
        let r = em_classical(&p("exp(x)"), 2, 6).unwrap();
        let d = direct_sum(&p("exp(x)"), 2).unwrap();
        assert!((r.value - d).norm() <= 2.0 * r.first_omitted);
    }

    #[test]
    fn exact_quadratic() {
        let r = em_exact(&p("x^2"), 10, 1e-13).unwrap();
        assert!((r.total.re - 3.85).abs() < 1e-12);
        assert!((r.laplace_term.re - 1.0 / 60.0).abs() < 1e-13);
        assert!(r.residual < 1e-12);
        assert!((r.sum_of_terms() - r.total).norm() < 1e-13);
    }

    #[test]
    fn exact_pole_outside_strip() {
        let r = em_exact(&p("1/(x - 2)"), 25, 1e-13).unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
    }

    #[test]
    fn exact_refuses_strip_singularity() {
        let err = em_exact(&p("log(x - (1/2 + 2*i))"), 10, 1e-12).unwrap_err();
        assert!(err.is_hypothesis());
    }

    #[test]
    fn abel_plana_matches() {
        let v = abel_plana(&p("x^2"), 10, 1e-12).unwrap();
        assert!((v.re - 3.85).abs() < 1e-10);
        let a = abel_plana(&p("exp(x)"), 5, 1e-12).unwrap();
        let b = em_exact(&p("exp(x)"), 5, 1e-12).unwrap();
        assert!((a - b.total).norm() < 2e-12);
    }

    #[test]
    fn stirling_values() {
        assert!(stirling_exact(1, 1e-12).unwrap().abs() < 1e-10);
        assert!((stirling_exact(2, 1e-12).unwrap() + 2f64.ln()).abs() < 1e-10);
        let lh = laplace_h(1.0, 1e-13).unwrap();
        assert!((lh.re - (1.0 - 0.5 * TWO_PI.ln())).abs() < 1e-10);
    }

    #[test]
    fn log_mode() {
        let r = em_log(Complex64::new(1.0, 0.0), &p("0"), 6, 1e-12).unwrap();
        let exact = (720f64).ln() - 6.0 * 6f64.ln();
        assert!((r.total.re - exact).abs() < 1e-10);
        let r = em_log(Complex64::new(2.0, 0.0), &p("x^2"), 10, 1e-12).unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
    }

    #[test]
    fn log_correction_closes_the_gap() {
        let f = p("log(x - (1/2 + i))");
        let main = em_transseries_with(&f, 3, 1e-14, TransseriesOptions { main_only: true, ..Default::default() }).unwrap();
        let full = em_transseries(&f, 3, 1e-14, 4).unwrap();
        assert!(main.residual > 1e-9, "{}", main.residual);
        assert!(full.residual < 1e-12 * full.oracle.norm().max(1.0), "{} vs {}", full.residual, main.residual);
    }

    #[test]
    fn pole_correction_closes_the_gap() {
        for src in ["1/(x - (1/2 + i))", "1/(x - (1/3 - 1/2*i))^2", "exp(x)/(x - (3/4 + 1/2*i))"] {
            let f = p(src);
            let main = em_transseries_with(&f, 4, 1e-14, TransseriesOptions { main_only: true, ..Default::default() }).unwrap();
            let full = em_transseries(&f, 4, 1e-14, 6).unwrap();
            assert!(full.residual < 1e-11 * main.residual.max(1e-300).max(full.oracle.norm()), "{src}: {} vs {}", full.residual, main.residual);
            assert!(full.residual < main.residual * 1e-3, "{src}: {} vs {}", full.residual, main.residual);
        }
    }

    #[test]
    fn sqrt_branch_correction() {
        let f = p("(x - (1/2 + 1/2*i))^(1/2)*exp(x/4)");
        let main = em_transseries_with(&f, 4, 1e-14, TransseriesOptions { main_only: true, ..Default::default() }).unwrap();
        let full = em_transseries(&f, 4, 1e-14, 6).unwrap();
        assert!(full.residual < main.residual * 1e-3, "{} vs {}", full.residual, main.residual);
    }

    #[test]
    fn identities_for_quadratic() {
        for c in abel_plana_term_identities(&p("x^2"), 10, 1e-10).unwrap() {
            assert!(c.residual < 1e-8, "{}: {} vs {}", c.name, c.lhs, c.rhs);
        }
    }
}
