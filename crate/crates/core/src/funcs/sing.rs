use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use super::eval::{eval, Compiled};
use super::expr::{complex, x, Cut, Expr};
use super::roots::{poly_roots, Root};
use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;

/// Where to look for singularities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    /// `re_min ≤ Re ≤ re_max`, `im_min ≤ Im ≤ im_max`; bounds may be infinite.
    Rect {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    Disk {
        center: Complex64,
        radius: f64,
    },
    Plane,
}

impl Region {
    /// The closed vertical strip `0 ≤ Re ≤ 1`.
    pub fn strip() -> Self {
        Region::Rect {
            re_min: 0.0,
            re_max: 1.0,
            im_min: f64::NEG_INFINITY,
            im_max: f64::INFINITY,
        }
    }

    pub fn disk(radius: f64) -> Self {
        Region::Disk {
            center: Complex64::new(0.0, 0.0),
            radius,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => z.re >= re_min && z.re <= re_max && z.im >= im_min && z.im <= im_max,
            Region::Disk { center, radius } => (z - center).norm() <= radius,
            Region::Plane => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SingularityKind {
    Pole { order: u32 },
    Logarithmic,
    Algebraic { alpha: (i64, i64) },
}

/// Local model `f(λ+u) = u^α (log u)^β h(u)` of one singularity.
#[derive(Debug, Clone, Serialize)]
pub struct SingularityRecord {
    pub location: Complex64,
    pub kind: SingularityKind,
    #[serde(serialize_with = "ser_ratio")]
    pub alpha: Ratio<i64>,
    pub beta: u8,
    /// Regular factor `h`, as an expression in the local variable `u` (= `x`).
    /// For poles it is `u^m f(λ+u)`; for branch points it is the variation
    /// divided by the monodromy factor (`2πi` or `(1 − e^{−2πiασ})u^α` with
    /// `σ = ±1` the direction of the cut ray).
    #[serde(serialize_with = "ser_expr")]
    pub germ: Expr,
    /// Location error estimate from Newton refinement.
    pub accuracy: f64,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Local {
    Pole(u32),
    Log,
    Power(Ratio<i64>),
    Essential,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    z: Complex64,
    kind: Local,
    accuracy: f64,
}

fn same_point(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * a.norm().max(1.0)
}

fn rank(k: Local) -> (u8, i64) {
    match k {
        Local::Essential => (4, 0),
        Local::Log => (3, 0),
        Local::Power(r) => (2, 0) .max((2, -(*r.numer() * 1000 / *r.denom()))),
        Local::Pole(m) => (1, m as i64),
    }
}

fn merge(mut a: Vec<Site>, b: Vec<Site>, multiplicative: bool) -> Vec<Site> {
    for s in b {
        if let Some(t) = a.iter_mut().find(|t| same_point(t.z, s.z)) {
            t.kind = match (t.kind, s.kind) {
                (Local::Pole(m), Local::Pole(n)) if multiplicative => Local::Pole(m + n),
                (k1, k2) => {
                    if rank(k2) > rank(k1) {
                        k2
                    } else {
                        k1
                    }
                }
            };
            t.accuracy = t.accuracy.max(s.accuracy);
        } else {
            a.push(s);
        }
    }
    a
}

fn is_zero_expr(e: &Expr) -> bool {
    matches!(e.rational_value(), Some(r) if num_traits::Zero::is_zero(&r))
}

/// Zeros (with multiplicity) of an expression that is a product of a
/// polynomial, exponentials and constants.
fn zeros(e: &Expr) -> Result<Vec<Root>> {
    if let Some(p) = e.as_polynomial() {
        if p.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::domain(Complex64::new(0.0, 0.0), "identically zero"));
        }
        return poly_roots(&p);
    }
    match e {
        Expr::Neg(a) => zeros(a),
        Expr::Exp(_) => Ok(vec![]),
        Expr::Mul(a, b) => {
            let mut out = zeros(a)?;
            for r in zeros(b)? {
                if let Some(t) = out.iter_mut().find(|t| same_point(t.z, r.z)) {
                    t.multiplicity += r.multiplicity;
                } else {
                    out.push(r);
                }
            }
            Ok(out)
        }
        Expr::Pow { base, exp, .. } if exp.is_integer() && *exp.numer() > 0 => Ok(zeros(base)?
            .into_iter()
            .map(|mut r| {
                r.multiplicity *= *exp.numer() as u32;
                r
            })
            .collect()),
        Expr::Div(a, b) => {
            let bz = zeros(b)?;
            Ok(zeros(a)?
                .into_iter()
                .filter(|r| !bz.iter().any(|s| same_point(s.z, r.z)))
                .collect())
        }
        _ => Err(Error::Unsupported(format!(
            "cannot isolate the zeros of `{e}`"
        ))),
    }
}

fn multiplicity_in(e: &Expr, z: Complex64) -> u32 {
    match zeros(e) {
        Ok(rs) => rs
            .iter()
            .find(|r| same_point(r.z, z))
            .map_or(0, |r| r.multiplicity),
        Err(_) => 0,
    }
}

fn analyze(e: &Expr) -> Result<Vec<Site>> {
    use Expr::*;
    Ok(match e {
        Num(_) | I | Pi | E | X => vec![],
        Neg(a) => analyze(a)?,
        Add(a, b) | Sub(a, b) => merge(analyze(a)?, analyze(b)?, false),
        Mul(a, b) => merge(analyze(a)?, analyze(b)?, true),
        Div(a, b) => {
            if is_zero_expr(b) {
                return Err(Error::domain(Complex64::new(0.0, 0.0), "division by zero"));
            }
            let mut poles = vec![];
            for r in zeros(b)? {
                let cancel = multiplicity_in(a, r.z);
                if r.multiplicity > cancel {
                    poles.push(Site {
                        z: r.z,
                        kind: Local::Pole(r.multiplicity - cancel),
                        accuracy: r.accuracy,
                    });
                }
            }
            let inner: Vec<Site> = analyze(b)?
                .into_iter()
                .filter(|s| !matches!(s.kind, Local::Pole(_)))
                .collect();
            merge(merge(analyze(a)?, inner, false), poles, true)
        }
        Pow { base, exp, .. } if exp.is_integer() => {
            let n = *exp.numer();
            if n >= 0 {
                analyze(base)?
                    .into_iter()
                    .map(|mut s| {
                        if let Local::Pole(m) = s.kind {
                            s.kind = Local::Pole(m * n as u32);
                        }
                        s
                    })
                    .filter(|s| n > 0 || !matches!(s.kind, Local::Pole(_)))
                    .collect()
            } else {
                let inv = Div(Box::new(super::expr::int(1)), base.clone());
                let powered = Pow {
                    base: Box::new(inv),
                    exp: Ratio::from_integer(-n),
                    cut: None,
                };
                analyze(&powered)?
            }
        }
        Pow { base, exp, .. } => {
            let mut out: Vec<Site> = analyze(base)?
                .into_iter()
                .map(|mut s| {
                    if let Local::Pole(m) = s.kind {
                        s.kind = Local::Power(-*exp * Ratio::from_integer(m as i64));
                    }
                    s
                })
                .collect();
            for r in zeros(base)? {
                let alpha = *exp * Ratio::from_integer(r.multiplicity as i64);
                let kind = if alpha.is_integer() {
                    if *alpha.numer() >= 0 {
                        continue;
                    }
                    Local::Pole((-*alpha.numer()) as u32)
                } else {
                    Local::Power(alpha)
                };
                out = merge(
                    out,
                    vec![Site {
                        z: r.z,
                        kind,
                        accuracy: r.accuracy,
                    }],
                    false,
                );
            }
            out
        }
        Log { arg, .. } => {
            let mut out: Vec<Site> = analyze(arg)?
                .into_iter()
                .map(|mut s| {
                    if matches!(s.kind, Local::Pole(_)) {
                        s.kind = Local::Log;
                    }
                    s
                })
                .collect();
            for r in zeros(arg)? {
                out = merge(
                    out,
                    vec![Site {
                        z: r.z,
                        kind: Local::Log,
                        accuracy: r.accuracy,
                    }],
                    false,
                );
            }
            out
        }
        Exp(a) | Sin(a) | Cos(a) => analyze(a)?
            .into_iter()
            .map(|mut s| {
                s.kind = Local::Essential;
                s
            })
            .collect(),
    })
}

/// All singularities of `f` inside `region`.
pub fn singularities(f: &Expr, region: Region) -> Result<Vec<SingularityRecord>> {
    let mut out = Vec::new();
    for site in analyze(f)? {
        if !region.contains(site.z) {
            continue;
        }
        let (kind, alpha, beta) = match site.kind {
            Local::Essential => {
                return Err(Error::Unsupported(format!(
                    "essential singularity near {}",
                    site.z
                )))
            }
            Local::Pole(m) => (
                SingularityKind::Pole { order: m },
                Ratio::from_integer(-(m as i64)),
                0,
            ),
            Local::Log => (SingularityKind::Logarithmic, Ratio::from_integer(0), 1),
            Local::Power(a) => (
                SingularityKind::Algebraic {
                    alpha: (*a.numer(), *a.denom()),
                },
                a,
                0,
            ),
        };
        let mut rec = SingularityRecord {
            location: site.z,
            kind,
            alpha,
            beta,
            germ: x(),
            accuracy: site.accuracy,
        };
        rec.germ = match kind {
            SingularityKind::Pole { order } => {
                let shifted = f.substitute(&(complex(site.z) + x()));
                (super::expr::powi(x(), order as i64) * shifted).simplify()
            }
            SingularityKind::Logarithmic => {
                let v = variation(f, &rec)?;
                (v / (complex(Complex64::new(0.0, 2.0 * PI)))).simplify()
            }
            SingularityKind::Algebraic { .. } => {
                let v = variation(f, &rec)?;
                let sigma = ray_sign(site.z);
                let factor = Complex64::new(1.0, 0.0)
                    - Complex64::new(0.0, -2.0 * PI * sigma * super::expr::ratio_f64(alpha)).exp();
                let ua = Expr::Pow {
                    base: Box::new(x()),
                    exp: alpha,
                    cut: None,
                };
                (v / (complex(factor) * ua)).simplify()
            }
        };
        out.push(rec);
    }
    out.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// `g(λ+u) ≈ c·u^κ` near `u = 0`.
fn local_power(g: &Expr, lambda: Complex64) -> Option<(Complex64, i64)> {
    let scan = |e: &Expr| -> Option<(Complex64, i64)> {
        let t = Compiled::<Complex64>::new(e, 53).taylor(&lambda, 12).ok()?;
        let scale = t.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return None;
        }
        t.iter()
            .enumerate()
            .find(|(_, c)| c.norm() > 1e-9 * scale)
            .map(|(k, c)| (*c, k as i64))
    };
    match scan(g) {
        Some((c, k)) if k > 0 => Some((c, k)),
        Some(_) => None,
        None => {
            let inv = Expr::Div(Box::new(super::expr::int(1)), Box::new(g.clone()));
            let (c, k) = scan(&inv)?;
            (k > 0).then(|| (c.inv(), -k))
        }
    }
}

/// Direction of the cut ray used for a singularity: up for `Im λ ≥ 0`,
/// down otherwise.
pub fn ray_sign(lambda: Complex64) -> f64 {
    if lambda.im >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Jump of `f` across the vertical ray `λ + iσℝ⁺` (σ = [`ray_sign`]):
/// the starting value minus the value reached after one turn around `λ`
/// (clockwise for an upward ray, counterclockwise for a downward one), as an
/// expression in the displacement `u = x` along the ray.
///
/// With this convention `log(x − λ)` has variation `2πi` for `Im λ > 0`.
pub fn variation(f: &Expr, rec: &SingularityRecord) -> Result<Expr> {
    if matches!(rec.kind, SingularityKind::Pole { .. }) {
        return Err(Error::Unsupported(
            "poles have no variation; use the residue path".into(),
        ));
    }
    let lambda = rec.location;
    let sigma = ray_sign(lambda);
    let sheet = |turn: bool| {
        f.map_branch_nodes(&mut |node: &Expr| {
            let arg = match node {
                Expr::Log { arg, .. } => arg,
                Expr::Pow { base, .. } => base,
                _ => return node.clone(),
            };
            let Some((c, kappa)) = local_power(arg, lambda) else {
                return node.clone();
            };
            let phi = c.arg() + kappa as f64 * sigma * PI / 2.0;
            let mut angle = phi + PI;
            if turn {
                angle -= 2.0 * PI * kappa as f64 * sigma;
            }
            let cut = Some(Cut(angle));
            match node {
                Expr::Log { arg, .. } => Expr::Log {
                    arg: arg.clone(),
                    cut,
                },
                Expr::Pow { base, exp, .. } => Expr::Pow {
                    base: base.clone(),
                    exp: *exp,
                    cut,
                },
                _ => unreachable!(),
            }
        })
    };
    let shift = complex(lambda) + x();
    let start = recenter(&sheet(false).substitute(&shift));
    let turned = recenter(&sheet(true).substitute(&shift));
    if start == turned {
        return Err(Error::Unsupported(format!(
            "no branch node of `{f}` is singular at {lambda}"
        )));
    }
    Ok(Expr::Sub(Box::new(start), Box::new(turned)))
}

/// Re-expands polynomial branch arguments in powers of `x`, dropping a
/// constant term that is rounding noise, so `(λ + x) − λ` becomes `x`.
fn recenter(e: &Expr) -> Expr {
    e.map_branch_nodes(&mut |node: &Expr| {
        let arg = match node {
            Expr::Log { arg, .. } => arg,
            Expr::Pow { base, .. } => base,
            _ => return node.clone(),
        };
        let Some(mut c) = arg.as_polynomial() else {
            return node.clone();
        };
        let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if c.len() < 2 || c[0].norm() > 1e-13 * scale {
            return node.clone();
        }
        c[0] = Complex64::new(0.0, 0.0);
        let poly = c
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(k, v)| complex(*v) * super::expr::powi(x(), k as i64))
            .reduce(|a, b| a + b)
            .expect("nonconstant polynomial");
        let poly = Box::new(poly.simplify());
        match node {
            Expr::Log { cut, .. } => Expr::Log { arg: poly, cut: *cut },
            Expr::Pow { exp, cut, .. } => Expr::Pow { base: poly, exp: *exp, cut: *cut },
            _ => unreachable!(),
        }
    })
}

/// Rewrites `f` so that every branch node singular at a single point `λ`
/// has its cut along a ray leaving the strip `0 ≤ Re x ≤ 1`: vertically for
/// `λ` inside the strip, horizontally outward otherwise. Values on `[0, 1]`
/// are unchanged; nodes for which this cannot be arranged are left alone.
pub fn strip_adapted(f: &Expr) -> Expr {
    f.map_branch_nodes(&mut |node: &Expr| {
        let (arg, make): (&Expr, Box<dyn Fn(Cut) -> Expr>) = match node {
            Expr::Log { arg, .. } => {
                let a = arg.clone();
                (arg, Box::new(move |c| Expr::Log { arg: a.clone(), cut: Some(c) }))
            }
            Expr::Pow { base, exp, .. } => {
                let (b, e) = (base.clone(), *exp);
                (base, Box::new(move |c| Expr::Pow { base: b.clone(), exp: e, cut: Some(c) }))
            }
            _ => return node.clone(),
        };
        let mut points: Vec<Complex64> = zeros(arg).map(|r| r.iter().map(|r| r.z).collect()).unwrap_or_default();
        match analyze(arg) {
            Ok(sites) => points.extend(sites.iter().map(|s| s.z)),
            Err(_) => return node.clone(),
        }
        if points.len() != 1 {
            return node.clone();
        }
        let lambda = points[0];
        let dir = if (0.0..=1.0).contains(&lambda.re) {
            if lambda.im == 0.0 {
                return node.clone();
            }
            Complex64::new(0.0, ray_sign(lambda))
        } else if lambda.re > 1.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
        let Some((c, kappa)) = local_power(arg, lambda) else {
            return node.clone();
        };
        let phi = c.arg() + kappa as f64 * dir.arg();
        let Ok(g_mid) = eval(arg, Complex64::new(0.5, 0.0)) else {
            return node.clone();
        };
        let k = ((g_mid.arg() - phi) / (2.0 * PI)).ceil();
        let adapted = make(Cut(phi + 2.0 * PI * k));
        for j in 0..=8 {
            let t = Complex64::new(j as f64 / 8.0, 0.0);
            match (eval(node, t), eval(&adapted, t)) {
                (Ok(a), Ok(b)) if (a - b).norm() <= 1e-12 * a.norm().max(1.0) => {}
                (Err(_), _) => {}
                _ => return node.clone(),
            }
        }
        adapted
    })
}

/// Evaluates the variation at a point of the ray `u = iσs`.
pub fn variation_at(v: &Expr, lambda: Complex64, s: f64) -> Result<Complex64> {
    eval(v, Complex64::new(0.0, ray_sign(lambda) * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn strip_examples() {
        assert!(singularities(&p("1/(x-2)"), Region::strip()).unwrap().is_empty());
        let s = singularities(&p("log(x - (1/2 + i))"), Region::strip()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, SingularityKind::Logarithmic);
        assert_eq!(s[0].beta, 1);
        assert!((s[0].location - Complex64::new(0.5, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn poles_of_rational() {
        let s = singularities(&p("1/(x^2 + 1)"), Region::disk(2.0)).unwrap();
        assert_eq!(s.len(), 2);
        for r in &s {
            assert_eq!(r.kind, SingularityKind::Pole { order: 1 });
            assert_eq!(r.alpha, Ratio::from_integer(-1));
            assert!((r.location.norm() - 1.0).abs() < 1e-12);
        }
        let s = singularities(&p("(x - 1)/((x - 1)*(x + 3)^2)"), Region::Plane).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, SingularityKind::Pole { order: 2 });
    }

    #[test]
    fn unsupported_zero_set() {
        let err = singularities(&p("1/(exp(x) - x)"), Region::Plane).unwrap_err();
        assert_eq!(err.code(), "E_UNSUPPORTED");
    }

    #[test]
    fn log_variation_is_two_pi_i() {
        let f = p("log(x - (1/2 + 2*i))");
        let s = singularities(&f, Region::strip()).unwrap();
        let v = variation(&f, &s[0]).unwrap();
        for t in [0.1, 1.0, 7.0] {
            let val = variation_at(&v, s[0].location, t).unwrap();
            assert!((val - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-13);
        }
        assert!((eval(&s[0].germ, Complex64::new(0.0, 0.3)).unwrap() - 1.0).norm() < 1e-13);
    }

    #[test]
    fn lower_half_plane_log() {
        let f = p("log(x - (1/2 - i))");
        let s = singularities(&f, Region::strip()).unwrap();
        let v = variation(&f, &s[0]).unwrap();
        let val = variation_at(&v, s[0].location, 2.0).unwrap();
        assert!((val - Complex64::new(0.0, -2.0 * PI)).norm() < 1e-13);
    }

    #[test]
    fn sqrt_variation_against_continuation() {
        let lambda = Complex64::new(0.25, 0.5);
        let f = p("(x - (1/4 + 1/2*i))^(1/2)*exp(x)");
        let s = singularities(&f, Region::strip()).unwrap();
        assert_eq!(s[0].kind, SingularityKind::Algebraic { alpha: (1, 2) });
        let v = variation(&f, &s[0]).unwrap();
        for t in [0.05, 0.3, 1.1, 2.5] {
            let u = Complex64::new(0.0, t);
            // continue sqrt(w) from w = u once around clockwise by small steps
            let steps = 400;
            let mut root = Complex64::new(0.0, t).sqrt();
            let start = root;
            for k in 1..=steps {
                let w = u * Complex64::new(0.0, -2.0 * PI * k as f64 / steps as f64).exp();
                let cand = w.sqrt();
                root = if (cand - root).norm() < (cand + root).norm() { cand } else { -cand };
            }
            let h = (lambda + u).exp();
            let expected = (start - root) * h;
            let got = variation_at(&v, lambda, t).unwrap();
            assert!((got - expected).norm() < 1e-8 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn adapted_cuts_leave_the_strip() {
        for src in ["(x - (1/2 + i))^(1/2)", "log(x - (1/4 - 2*i))", "(x - 2 - i)^(1/3)", "log(3*i - 2*x)"] {
            let f = p(src);
            let g = strip_adapted(&f);
            assert_ne!(f, g, "{src}");
            for k in 0..=10 {
                let t = Complex64::new(k as f64 / 10.0, 0.0);
                assert!((eval(&f, t).unwrap() - eval(&g, t).unwrap()).norm() < 1e-14);
            }
            // continuity across horizontal lines inside the strip
            for re in [0.05, 0.2, 0.6, 0.95] {
                for im in [-2.0, -1.0, 0.5, 1.0, 1.5] {
                    let a = eval(&g, Complex64::new(re, im + 1e-9));
                    let b = eval(&g, Complex64::new(re, im - 1e-9));
                    if let (Ok(a), Ok(b)) = (a, b) {
                        assert!((a - b).norm() < 1e-6, "{src} at {re}+{im}i");
                    }
                }
            }
        }
    }

    #[test]
    fn variation_refuses_poles() {
        let f = p("1/(x - (1/2 + i))");
        let s = singularities(&f, Region::strip()).unwrap();
        assert!(variation(&f, &s[0]).is_err());
    }
}
