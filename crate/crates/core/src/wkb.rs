//! Exact solutions of the difference equation `y(x+ε) = a(x)·y(x)` through
//! the Borel kernel of `s ↦ log a(sx)`, and the matching formal WKB
//! coefficients.

use num_complex::Complex64;
use serde::Serialize;

use crate::borel::{g_integral, g_series};
use crate::emsum::{integral_01, laplace_of_kernel, LaplaceSummary};
use crate::error::{Error, Result};
use crate::funcs::{
    check_strip_hypothesis, complex, eval, log, x as var, Compiled, Expr, StripHypothesis,
};
use crate::series::em_remainder_series;

/// `s ↦ log a(s·x)`, refusing cases where the principal logarithm is not
/// continuous along `[0, x]`.
pub fn log_slice(a: &Expr, x: Complex64) -> Result<Expr> {
    let scaled = complex(x) * var();
    let f = match a {
        // log e^{b} = b on the whole segment
        Expr::Exp(b) => b.substitute(&scaled),
        _ => log(a.substitute(&scaled)),
    };
    let inner = a.substitute(&scaled);
    let prog = Compiled::<Complex64>::new(&inner, 53);
    if !matches!(a, Expr::Exp(_)) {
        let mut prev: Option<Complex64> = None;
        for k in 0..=256 {
            let s = k as f64 / 256.0;
            let v = prog.eval(&Complex64::new(s, 0.0))?;
            if v.norm() == 0.0 {
                return Err(Error::domain(x * s, "a vanishes on the segment [0, x]"));
            }
            if let Some(p) = prev {
                if (v.arg() - p.arg()).abs() > std::f64::consts::PI {
                    return Err(Error::Unsupported(format!(
                        "log a crosses its branch cut between 0 and {x}"
                    )));
                }
            }
            prev = Some(v);
        }
    }
    Ok(f.simplify())
}

fn check_slice(f: &Expr) -> Result<()> {
    let report = check_strip_hypothesis(f, StripHypothesis::A1);
    if report.holds {
        return Ok(());
    }
    Err(Error::Hypothesis {
        which: report.which.to_string(),
        summary: report.summary(),
        report: Box::new(report),
    })
}

fn nonzero(x: Complex64) -> Result<()> {
    if x.norm() == 0.0 {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    Ok(())
}

/// `G(q, x) = G_f(q/x)/x` with `f(s) = log a(sx)`.
pub fn wkb_kernel(a: &Expr, q: Complex64, x: Complex64, tol: f64) -> Result<Complex64> {
    nonzero(x)?;
    let f = log_slice(a, x)?;
    check_slice(&f)?;
    let p = q / x;
    let g = match g_series(&f, p, tol) {
        Ok(v) => v,
        Err(Error::Convergence { .. }) => g_integral(&f, p, tol)?,
        Err(e) => return Err(e),
    };
    Ok(g.value / x)
}

#[derive(Debug, Clone, Serialize)]
pub struct WkbSolution {
    pub a: String,
    pub x: Complex64,
    pub eps: f64,
    /// `√(a(0)/a(x))`.
    pub prefactor: Complex64,
    /// `∫_0^x log a`.
    pub action: Complex64,
    /// `∫_0^∞ e^{−q/ε} G(q, x) dq`.
    pub laplace_correction: Complex64,
    /// `log y`, finite where `y` itself overflows.
    pub log_value: Complex64,
    pub value: Complex64,
    pub laplace: LaplaceSummary,
}

impl WkbSolution {
    /// `prefactor · exp(action/ε + correction)` recomposed from the parts.
    pub fn recompose(&self) -> Complex64 {
        self.prefactor * (self.action / self.eps + self.laplace_correction).exp()
    }
}

pub fn wkb_solve(a: &Expr, x: Complex64, eps: f64, tol: f64) -> Result<WkbSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must be positive")));
    }
    let one = Complex64::new(1.0, 0.0);
    if x.norm() == 0.0 {
        return Ok(WkbSolution {
            a: a.to_string(),
            x,
            eps,
            prefactor: one,
            action: 0.0 * one,
            laplace_correction: 0.0 * one,
            log_value: 0.0 * one,
            value: one,
            laplace: LaplaceSummary::default(),
        });
    }
    let f = log_slice(a, x)?;
    check_slice(&f)?;
    let half_jump = (eval(&f, one)? - eval(&f, 0.0 * one)?) / 2.0;
    let action = integral_01(&f, tol * eps / 10.0)? * x;
    let (laplace_correction, laplace) =
        laplace_of_kernel::<Complex64>(&f, 1.0 / eps, 1.0 / x, tol / 4.0, 53)?;
    let log_value = -half_jump + action / eps + laplace_correction;
    Ok(WkbSolution {
        a: a.to_string(),
        x,
        eps,
        prefactor: (-half_jump).exp(),
        action,
        laplace_correction,
        log_value,
        value: log_value.exp(),
        laplace,
    })
}

/// `|y(x+ε) − a(x)·y(x)| / max(|y(x)|, 1)`, computed through logarithms so
/// that large `y` does not overflow.
pub fn verify_difference_equation(a: &Expr, x: Complex64, eps: f64, tol: f64) -> Result<f64> {
    let y0 = wkb_solve(a, x, eps, tol)?;
    let y1 = wkb_solve(a, x + eps, eps, tol)?;
    let ax = eval(a, x)?;
    let d = y1.log_value - y0.log_value - ax.ln();
    // |e^d − 1| without cancellation for small d
    let em1 = Complex64::new(d.re.exp_m1(), 0.0) * Complex64::new(d.im.cos(), d.im.sin())
        + Complex64::new(d.im.cos() - 1.0, d.im.sin());
    let scale = y0.log_value.re.min(0.0).exp();
    Ok(em1.norm() * scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct WkbAsymptotics {
    pub x: Complex64,
    /// `F_0, …, F_K` with `log y ~ Σ F_k ε^{k−1}`.
    pub coeffs: Vec<Complex64>,
}

impl WkbAsymptotics {
    /// `Σ_k F_k ε^{k−1}`.
    pub fn partial_sum(&self, eps: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * eps.powi(k as i32 - 1))
            .sum()
    }
}

pub fn wkb_asymptotic_coeffs(a: &Expr, x: Complex64, order: usize) -> Result<WkbAsymptotics> {
    let zero = Complex64::new(0.0, 0.0);
    if x.norm() == 0.0 {
        return Ok(WkbAsymptotics {
            x,
            coeffs: vec![zero; order + 1],
        });
    }
    let f = log_slice(a, x)?;
    let one = Complex64::new(1.0, 0.0);
    let mut coeffs = vec![zero; order + 1];
    coeffs[0] = integral_01(&f, 1e-15)? * x;
    if order >= 1 {
        coeffs[1] = -(eval(&f, one)? - eval(&f, zero)?) / 2.0;
    }
    if order >= 2 {
        let slots = em_remainder_series(&f, order)?;
        let mut xpow = one;
        for k in 1..order {
            xpow *= x;
            coeffs[k + 1] = slots.coeffs[k] / xpow;
        }
    }
    Ok(WkbAsymptotics { x, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exponential_closed_form() {
        let a = p("exp(x)");
        assert_eq!(wkb_kernel(&a, c(0.7), c(0.9), 1e-12).unwrap(), c(0.0));
        for (x, eps) in [(0.5, 0.1), (1.3, 0.05), (0.2, 0.3)] {
            let s = wkb_solve(&a, c(x), eps, 1e-13).unwrap();
            let expected = (-x / 2.0 + x * x / (2.0 * eps)).exp();
            assert!((s.value.re - expected).abs() < 1e-12 * expected, "{x} {eps}");
            assert!((s.recompose() - s.value).norm() < 1e-12 * expected);
        }
    }

    #[test]
    fn constant_coefficient() {
        let s = wkb_solve(&p("3"), c(0.7), 0.1, 1e-13).unwrap();
        assert!((s.value.re - 3f64.powf(7.0)).abs() < 1e-9 * 3f64.powf(7.0));
    }

    #[test]
    fn linear_coefficient_residual() {
        let r = verify_difference_equation(&p("1 + x/2"), c(0.6), 0.05, 1e-13).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn telescoping() {
        let a = p("1 + x/2");
        let eps = 0.1;
        let s = wkb_solve(&a, c(0.8), eps, 1e-13).unwrap();
        let direct: f64 = (0..8).map(|k| (1.0 + k as f64 * eps / 2.0).ln()).sum();
        assert!((s.log_value.re - direct).abs() < 1e-9);
    }

    #[test]
    fn coefficients() {
        let w = wkb_asymptotic_coeffs(&p("exp(x)"), c(0.8), 5).unwrap();
        assert!((w.coeffs[0] - 0.32).norm() < 1e-14);
        assert!((w.coeffs[1] + 0.4).norm() < 1e-14);
        assert!(w.coeffs[2..].iter().all(|v| v.norm() < 1e-14));
        let w = wkb_asymptotic_coeffs(&p("1 + x/2"), c(0.6), 4).unwrap();
        // F_2 = B_2/2!·((log a)'(x) − (log a)'(0))
        let f2 = (0.5 / 1.3 - 0.5) / 12.0;
        assert!((w.coeffs[2].re - f2).abs() < 1e-13);
        assert!(w.coeffs[3].norm() < 1e-15);
    }

    #[test]
    fn dual_route_kernel() {
        let a = p("1 + x/2");
        let f = log_slice(&a, c(0.8)).unwrap();
        let s = g_series(&f, c(0.5 / 0.8), 1e-12).unwrap().value / 0.8;
        let i = g_integral(&f, c(0.5 / 0.8), 1e-12).unwrap().value / 0.8;
        assert!((s - i).norm() < 1e-8);
        assert!((wkb_kernel(&a, c(0.5), c(0.8), 1e-12).unwrap() - s).norm() < 1e-14);
    }

    #[test]
    fn rejects_zero_of_a() {
        assert!(wkb_solve(&p("x - 1/2"), c(1.0), 0.1, 1e-10).is_err());
    }
}
