//! Truncated power series, Bernoulli numbers, the Euler-Maclaurin remainder
//! series, Borel transforms and Hadamard products.

mod bernoulli;
mod truncated;
mod zeta;

use num_complex::Complex64;

pub use bernoulli::bernoulli_numbers;
pub(crate) use bernoulli::bernoulli_table;
pub use truncated::{
    borel_transform, borel_transform_exact, hadamard_product, RationalSeries, SeriesVar,
    TruncatedSeries,
};
pub use zeta::hurwitz_zeta;

use crate::error::{Error, Result};
use crate::funcs::{Compiled, Expr};
use crate::scalar::Scalar;

/// Asymptotic Euler-Maclaurin remainder of `Σ f(k/N) − N∫f − ½(f(1) − f(0))`
/// as a series in `1/N` of order `m`: slot `2n−1` holds
/// `B_{2n}/(2n)! · (f^{(2n−1)}(1) − f^{(2n−1)}(0))`.
pub fn em_remainder_series(f: &Expr, m: usize) -> Result<TruncatedSeries> {
    let d = endpoint_jump_coeffs::<Complex64>(f, m + 1, 53)?;
    let table = bernoulli_table(m + 2);
    let mut out = TruncatedSeries::zeros(crate::series::SeriesVar::InvN, m);
    for k in (1..m).step_by(2) {
        // B_{2n}/(2n)! · (2n−1)! = B_{2n}/(2n)
        let b = crate::funcs::bigrational_f64(&table[k + 1]) / (k + 1) as f64;
        out.coeffs[k] = d[k] * b;
    }
    Ok(out)
}

/// Normalized Taylor-coefficient differences `c_k(1) − c_k(0)` of `f`,
/// `k < order`.
pub(crate) fn endpoint_jump_coeffs<T: Scalar>(f: &Expr, order: usize, bits: u32) -> Result<Vec<T>> {
    let prog = Compiled::<T>::new(f, bits);
    let at = |z: f64| {
        prog.taylor(&T::from_f64(z, bits), order).map_err(|e| match e {
            Error::Domain { point, .. } => Error::domain(point, "singularity at an endpoint"),
            other => other,
        })
    };
    let one = at(1.0)?;
    let zero = at(0.0)?;
    Ok(one.into_iter().zip(zero).map(|(a, b)| a - b).collect())
}

/// `(1/2πi)∮_{|s|=r} A(s) B(p/s) ds/s`, the analytic form of the Hadamard
/// product, by the trapezoidal rule with node doubling.
pub fn hadamard_integral<A, B>(a: A, b: B, p: Complex64, r: f64, tol: f64) -> Result<Complex64>
where
    A: Fn(Complex64) -> Result<Complex64>,
    B: Fn(Complex64) -> Result<Complex64>,
{
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let integrand = |s: Complex64| -> Result<Complex64> {
        let va = a(s).map_err(|e| near(e, s))?;
        let vb = b(p / s).map_err(|e| near(e, p / s))?;
        Ok(va * vb)
    };
    crate::quad::circle_mean(integrand, Complex64::new(0.0, 0.0), r, tol)
}

fn near(e: Error, z: Complex64) -> Error {
    match e {
        Error::Domain { .. } | Error::Overflow { .. } => Error::NearSingularity {
            point: z,
            distance: 0.0,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse_expr;

    #[test]
    fn remainder_examples() {
        let s = em_remainder_series(&parse_expr("x^2").unwrap(), 8).unwrap();
        assert!((s.coeffs[1] - 1.0 / 6.0).norm() < 1e-16);
        assert!(s.coeffs.iter().enumerate().all(|(k, c)| k == 1 || c.norm() == 0.0));
        let s = em_remainder_series(&parse_expr("3/2").unwrap(), 6).unwrap();
        assert!(s.coeffs.iter().all(|c| c.norm() == 0.0));
        let s = em_remainder_series(&parse_expr("exp(x)").unwrap(), 6).unwrap();
        let e = std::f64::consts::E;
        assert!((s.coeffs[1].re - (e - 1.0) / 12.0).abs() < 1e-15);
        assert!((s.coeffs[3].re + (e - 1.0) / 720.0).abs() < 1e-15);
    }

    #[test]
    fn remainder_refuses_endpoint_singularity() {
        let err = em_remainder_series(&parse_expr("log(x)").unwrap(), 4).unwrap_err();
        assert_eq!(err.code(), "E_DOMAIN");
    }

    #[test]
    fn geometric_hadamard_integral() {
        let geo = |s: Complex64| Ok(1.0 / (1.0 - s));
        let v = hadamard_integral(geo, geo, Complex64::new(0.1, 0.0), 0.5, 1e-14).unwrap();
        assert!((v - 1.0 / 0.9).norm() < 1e-13);
        let a = |s: Complex64| Ok(s.exp() * (1.0 + s));
        let p = Complex64::new(0.3, 0.2);
        let v = hadamard_integral(a, geo, p, 0.6, 1e-14).unwrap();
        assert!((v - a(p).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn radius_independence() {
        let a = |s: Complex64| Ok((1.0 - s / 2.0).inv());
        let b = |w: Complex64| Ok((w * 0.5).exp());
        let p = Complex64::new(0.2, 0.1);
        let v1 = hadamard_integral(a, b, p, 0.4, 1e-14).unwrap();
        let v2 = hadamard_integral(a, b, p, 1.2, 1e-14).unwrap();
        assert!((v1 - v2).norm() < 1e-10);
    }
}
