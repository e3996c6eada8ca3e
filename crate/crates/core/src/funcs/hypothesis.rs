use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use super::eval::eval;
use super::expr::Expr;
use super::sing::{singularities, Region, SingularityRecord};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StripHypothesis {
    A1,
    A2,
}

impl fmt::Display for StripHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StripHypothesis::A1 => write!(f, "A1"),
            StripHypothesis::A2 => write!(f, "A2"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplingOptions {
    /// Largest |Im u| sampled.
    pub height: f64,
    /// Required gap between the sampled growth rate and 2π.
    pub safety: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            height: 24.0,
            safety: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleWitness {
    pub point: Complex64,
    /// `log|f(u)| / |Im u|` at the witness, or the fitted slope there.
    pub rate: f64,
}

/// Outcome of checking the strip hypotheses. The decay part is sampled and
/// therefore always marked heuristic.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub which: StripHypothesis,
    pub holds: bool,
    /// No singularities in the strip (A1), or none on `[0, 1]` (A2).
    pub singularities_ok: bool,
    /// Strip singularities have pairwise distinct real parts.
    pub distinct_real_parts: bool,
    pub decay_ok: bool,
    /// `f(u) e^{−2π|Im u|}` integrable on vertical lines; only checked for A2.
    pub l1_ok: Option<bool>,
    pub witnesses: Vec<SingularityRecord>,
    /// Rate from the symbolic growth classifier, if it recognises `f`.
    pub symbolic_rate: Option<f64>,
    pub sampled_rate: f64,
    /// `2π − rate` for the rate used in the verdict.
    pub decay_margin: f64,
    pub sample_witness: Option<SampleWitness>,
    pub sampling: SamplingOptions,
    pub heuristic: bool,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn summary(&self) -> String {
        let mut parts = vec![];
        if !self.singularities_ok {
            let locs: Vec<String> = self
                .witnesses
                .iter()
                .map(|w| format!("{}", w.location))
                .collect();
            parts.push(format!("singularities at [{}]", locs.join(", ")));
        }
        if !self.distinct_real_parts {
            parts.push("singularities share a real part".into());
        }
        if !self.decay_ok {
            parts.push(format!(
                "growth rate {:.4} is not below 2π (margin {:.4})",
                self.sampled_rate.max(self.symbolic_rate.unwrap_or(0.0)),
                self.decay_margin
            ));
        }
        parts.extend(self.notes.iter().cloned());
        if parts.is_empty() {
            "holds".into()
        } else {
            parts.join("; ")
        }
    }
}

fn affine(e: &Expr) -> Option<(Complex64, Complex64)> {
    let p = e.as_polynomial()?;
    match p.len() {
        0 => Some((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))),
        1 => Some((p[0], Complex64::new(0.0, 0.0))),
        2 => Some((p[0], p[1])),
        _ => None,
    }
}

/// Symbolic rate `τ` such that `|f(a + iy)| ≲ (1+|y|)^k e^{τ|y|}` on vertical
/// lines, for the expression shapes it recognises.
pub fn growth_rate(e: &Expr) -> Option<f64> {
    use Expr::*;
    if e.as_polynomial().is_some() {
        return Some(0.0);
    }
    match e {
        Num(_) | I | Pi | E | X => Some(0.0),
        Neg(a) => growth_rate(a),
        Add(a, b) | Sub(a, b) => Some(growth_rate(a)?.max(growth_rate(b)?)),
        Mul(a, b) => Some(growth_rate(a)? + growth_rate(b)?),
        Div(a, b) => {
            let ga = growth_rate(a)?;
            if b.as_polynomial().is_some() {
                return Some(ga);
            }
            match &**b {
                Exp(g) => affine(g).map(|(_, c1)| ga + c1.im.abs()),
                _ => None,
            }
        }
        Pow { base, exp, .. } => {
            if exp.is_integer() && *exp.numer() >= 0 {
                Some(growth_rate(base)? * *exp.numer() as f64)
            } else if base.as_polynomial().is_some() {
                Some(0.0)
            } else {
                None
            }
        }
        Log { arg, .. } => growth_rate(arg).map(|_| 0.0),
        Exp(a) => affine(a).map(|(_, c1)| c1.im.abs()),
        Sin(a) | Cos(a) => affine(a).map(|(_, c1)| c1.re.abs()),
    }
}

/// Checks (A1) or (A2) for `f` with default sampling.
pub fn check_strip_hypothesis(f: &Expr, which: StripHypothesis) -> HypothesisReport {
    check_strip_hypothesis_with(f, which, SamplingOptions::default())
}

pub fn check_strip_hypothesis_with(
    f: &Expr,
    which: StripHypothesis,
    sampling: SamplingOptions,
) -> HypothesisReport {
    let mut notes = vec![];
    let (witnesses, resolved) = match singularities(f, Region::strip()) {
        Ok(s) => (s, true),
        Err(e) => {
            notes.push(format!("singularities could not be enumerated: {e}"));
            (vec![], false)
        }
    };
    let (singularities_ok, witnesses) = match which {
        StripHypothesis::A1 => (resolved && witnesses.is_empty(), witnesses),
        StripHypothesis::A2 => {
            let on_segment: Vec<SingularityRecord> = witnesses
                .iter()
                .filter(|w| w.location.im.abs() < 1e-12)
                .cloned()
                .collect();
            if on_segment.is_empty() {
                (resolved, witnesses)
            } else {
                (false, on_segment)
            }
        }
    };
    let mut distinct_real_parts = true;
    for (i, a) in witnesses.iter().enumerate() {
        for b in &witnesses[i + 1..] {
            if (a.location.re - b.location.re).abs() < 1e-9 {
                distinct_real_parts = false;
            }
        }
    }

    let symbolic_rate = growth_rate(f);
    let (sampled_rate, sample_witness) = sample_growth(f, &sampling);
    let verdict_rate = symbolic_rate.unwrap_or(sampled_rate);
    let decay_margin = TWO_PI - verdict_rate;
    let decay_ok = decay_margin > sampling.safety;
    if let Some(s) = symbolic_rate {
        if (s - sampled_rate).abs() > 0.5 && sampled_rate.is_finite() {
            notes.push(format!(
                "sampled rate {sampled_rate:.3} disagrees with symbolic rate {s:.3}"
            ));
        }
    }
    let l1_ok = match which {
        StripHypothesis::A1 => None,
        StripHypothesis::A2 => Some(decay_ok),
    };
    let holds = singularities_ok
        && decay_ok
        && (which == StripHypothesis::A1 || distinct_real_parts);
    HypothesisReport {
        which,
        holds,
        singularities_ok,
        distinct_real_parts,
        decay_ok,
        l1_ok,
        witnesses,
        symbolic_rate,
        sampled_rate,
        decay_margin,
        sample_witness: if decay_ok { None } else { sample_witness },
        sampling,
        heuristic: true,
        notes,
    }
}

/// Largest slope of `log|f|` in `|Im u|` over a grid of vertical lines in the
/// strip, measured between half height and full height.
fn sample_growth(f: &Expr, opt: &SamplingOptions) -> (f64, Option<SampleWitness>) {
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let h = opt.height;
    for re in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for sign in [1.0, -1.0] {
            let lo = Complex64::new(re, sign * h / 2.0);
            let hi = Complex64::new(re, sign * h);
            let rate = match (eval(f, lo), eval(f, hi)) {
                (Ok(a), Ok(b)) => {
                    if a.norm() == 0.0 || b.norm() == 0.0 {
                        continue;
                    }
                    (b.norm().ln() - a.norm().ln()) / (h / 2.0)
                }
                (_, Err(crate::Error::Overflow { .. })) => f64::INFINITY,
                _ => continue,
            };
            if rate > worst {
                worst = rate;
                witness = Some(SampleWitness { point: hi, rate });
            }
        }
    }
    (worst.max(0.0), witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::parse::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn entire_polynomial() {
        let r = check_strip_hypothesis(&p("x^2"), StripHypothesis::A1);
        assert!(r.holds);
        assert!(r.heuristic);
        assert_eq!(r.symbolic_rate, Some(0.0));
    }

    #[test]
    fn pole_in_strip() {
        let f = p("1/(x - (1/2 + i))");
        let r = check_strip_hypothesis(&f, StripHypothesis::A1);
        assert!(!r.holds);
        assert_eq!(r.witnesses.len(), 1);
        assert!((r.witnesses[0].location - Complex64::new(0.5, 1.0)).norm() < 1e-12);
        let r = check_strip_hypothesis(&f, StripHypothesis::A2);
        assert!(r.holds, "{}", r.summary());
    }

    #[test]
    fn bounded_exponential() {
        let r = check_strip_hypothesis(&p("exp(7*x)"), StripHypothesis::A1);
        assert!(r.holds);
        assert_eq!(r.symbolic_rate, Some(0.0));
        assert!(r.sampled_rate < 0.1);
    }

    #[test]
    fn oscillating_growth_fails() {
        let r = check_strip_hypothesis(&p("sin(7*x)"), StripHypothesis::A1);
        assert!(!r.decay_ok);
        assert!(!r.holds);
        assert!((r.symbolic_rate.unwrap() - 7.0).abs() < 1e-12);
        assert!(r.sample_witness.is_some());
        let r = check_strip_hypothesis(&p("sin(x)/(x - 3)"), StripHypothesis::A1);
        assert!(r.holds);
    }

    #[test]
    fn shared_real_parts() {
        let f = p("log(x - (1/2 + i)) + log(x - (1/2 - 2*i))");
        let r = check_strip_hypothesis(&f, StripHypothesis::A2);
        assert!(!r.distinct_real_parts);
        assert!(!r.holds);
    }

    #[test]
    fn classifier_agrees_with_sampling() {
        for s in ["exp(2*i*x)", "cos(3*x)*x", "x^3 + exp(x)", "sin(x)*sin(2*x)"] {
            let f = p(s);
            let sym = growth_rate(&f).unwrap();
            let (smp, _) = sample_growth(&f, &SamplingOptions::default());
            assert!((sym - smp).abs() < 0.5, "{s}: {sym} vs {smp}");
        }
    }
}
