use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use resurgia::borel::{g_integral, g_series};
use resurgia::emsum::{direct_sum, em_exact};
use resurgia::funcs::{differentiate, eval, parse_expr, print, Expr};
use resurgia::quad::{circle_integral, laplace};
use resurgia::series::{bernoulli_numbers, borel_transform, SeriesVar, TruncatedSeries};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Small random expressions that stay analytic on a neighbourhood of [0, 1].
fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        (1i64..6).prop_map(|n| n.to_string()),
        (1i64..5, 2i64..7).prop_map(|(p, q)| format!("{p}/{q}")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            inner.clone().prop_map(|a| format!("exp(({a})/4)")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.prop_map(|a| format!("1/(3 + x^2 + ({a})^2)")),
        ]
    })
}

fn parsed(s: &str) -> Expr {
    parse_expr(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn print_parse_round_trip(src in arb_expr(), t in 0.0f64..1.0) {
        let e = parsed(&src);
        let back = parsed(&print(&e));
        let (a, b) = (eval(&e, c(t)).unwrap(), eval(&back, c(t)).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{src} -> {}", print(&e));
    }

    #[test]
    fn derivative_matches_central_difference(src in arb_expr(), t in 0.1f64..0.9) {
        let e = parsed(&src);
        let d = eval(&differentiate(&e), c(t)).unwrap();
        let h = 1e-5;
        let fd = (eval(&e, c(t + h)).unwrap() - eval(&e, c(t - h)).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).norm() <= 1e-6 * (1.0 + d.norm()), "{src}: {d} vs {fd}");
    }

    #[test]
    fn polynomial_sums_are_exact(a in -3i64..4, b in -3i64..4, k in 0i64..4, n in 1u64..40) {
        let f = parsed(&format!("{a}*x^3 + {b}*x + {k}"));
        let r = em_exact(&f, n, 1e-13).unwrap();
        let oracle = direct_sum(&f, n).unwrap();
        prop_assert!((r.total - oracle).norm() < 1e-10 * (1.0 + oracle.norm()));
    }

    #[test]
    fn kernel_routes_agree(shift in 1.5f64..4.0, pr in 0.0f64..2.0, pi in -1.0f64..1.0) {
        let f = parsed(&format!("1/(x + {shift})"));
        let p = Complex64::new(pr, pi);
        let s = g_series(&f, p, 1e-12).unwrap().value;
        let i = g_integral(&f, p, 1e-12).unwrap().value;
        prop_assert!((s - i).norm() < 1e-9, "{s} vs {i}");
    }
}

#[test]
fn bernoulli_values() {
    let b = bernoulli_numbers(13);
    let f = |k: usize| b[k].to_f64().unwrap();
    assert_abs_diff_eq!(f(1), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(f(2), 1.0 / 6.0, epsilon = 1e-15);
    assert_abs_diff_eq!(f(4), -1.0 / 30.0, epsilon = 1e-15);
    assert_abs_diff_eq!(f(12), -691.0 / 2730.0, epsilon = 1e-15);
    assert_eq!(f(11), 0.0);
}

#[test]
fn borel_of_geometric_series_is_exponential() {
    // Σ x^{-(n+1)} n!  ↦  Σ pⁿ / 1
    let mut fact = 1.0;
    let s = TruncatedSeries::from_fn(SeriesVar::InvX, 10, |n| {
        if n == 0 {
            return c(0.0);
        }
        if n > 1 {
            fact *= (n - 1) as f64;
        }
        c(fact)
    });
    let b = borel_transform(&s).unwrap();
    for v in &b.coeffs[..9] {
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
    }
}

#[test]
fn laplace_of_exponential() {
    let r = laplace(|p| Ok((-p).exp()), 3.0, 1e-13).unwrap();
    assert_abs_diff_eq!(r.value.re, 0.25, epsilon = 1e-12);
}

#[test]
fn residue_by_circle() {
    let v = circle_integral(|s| Ok(s.exp() / (s - 0.5)), c(0.5), 0.2, 1e-13).unwrap();
    let expected = Complex64::new(0.0, 2.0 * std::f64::consts::PI) * 0.5f64.exp();
    assert_abs_diff_eq!((v - expected).norm(), 0.0, epsilon = 1e-12);
}
