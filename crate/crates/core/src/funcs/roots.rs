use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: Complex64,
    pub multiplicity: u32,
    /// Size of the last Newton correction: an estimate of the location error.
    pub accuracy: f64,
}

fn horner(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn derivative(p: &[Complex64]) -> Vec<Complex64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Roots of `Σ coeffs[k] x^k`, clustered by multiplicity and polished by
/// Newton's method on the appropriate derivative.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Root>> {
    let mut p: Vec<Complex64> = coeffs.to_vec();
    while p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    let deg = p.len().saturating_sub(1);
    if deg == 0 {
        return Ok(vec![]);
    }
    if deg > MAX_DEGREE {
        return Err(Error::Unsupported(format!(
            "polynomial of degree {deg} exceeds the root-finding cap {MAX_DEGREE}"
        )));
    }
    // leading zeros at the origin
    let mut zeros_at_origin = 0u32;
    while p[0].norm() == 0.0 {
        p.remove(0);
        zeros_at_origin += 1;
    }
    let mut raw = aberth(&p)?;
    raw.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(zeros_at_origin as usize));
    let full: Vec<Complex64> = {
        let mut q = vec![Complex64::new(0.0, 0.0); zeros_at_origin as usize];
        q.extend_from_slice(&p);
        q
    };
    let scale = raw.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![raw[i]];
        used[i] = true;
        for j in i + 1..raw.len() {
            if !used[j] && (raw[j] - raw[i]).norm() < 1e-3 * scale {
                used[j] = true;
                members.push(raw[j]);
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        match refine(&full, mean, members.len() as u32) {
            Some(root) => out.push(root),
            None => {
                for z in members {
                    out.push(refine(&full, z, 1).unwrap_or(Root {
                        z,
                        multiplicity: 1,
                        accuracy: f64::INFINITY,
                    }));
                }
            }
        }
    }
    if zeros_at_origin > 0 {
        for r in out.iter_mut() {
            if r.z.norm() < 1e-12 {
                r.z = Complex64::new(0.0, 0.0);
                r.accuracy = 0.0;
            }
        }
    }
    for r in &out {
        if r.accuracy > 1e-12 * r.z.norm().max(1.0) {
            return Err(Error::convergence("polynomial root refinement", r.accuracy));
        }
    }
    out.sort_by(|a, b| {
        (a.z.re, a.z.im)
            .partial_cmp(&(b.z.re, b.z.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Newton on the `(m−1)`th derivative, then a check that the lower
/// derivatives vanish too; `None` if the cluster is not a genuine `m`-fold root.
fn refine(p: &[Complex64], start: Complex64, m: u32) -> Option<Root> {
    let mut derivs = vec![p.to_vec()];
    for _ in 0..m {
        let next = derivative(derivs.last().unwrap());
        derivs.push(next);
    }
    let q = &derivs[m as usize - 1];
    let dq = &derivs[m as usize];
    let mut z = start;
    let mut step = f64::INFINITY;
    for _ in 0..80 {
        let d = horner(dq, z);
        if d.norm() == 0.0 {
            break;
        }
        let delta = horner(q, z) / d;
        z -= delta;
        step = delta.norm();
        if step <= 1e-17 * z.norm().max(1.0) {
            break;
        }
    }
    if !z.is_finite() {
        return None;
    }
    let r = z.norm().max(1.0);
    for (j, dj) in derivs.iter().enumerate().take(m as usize - 1) {
        let mag: f64 = dj
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * r.powi(k as i32))
            .sum();
        if horner(dj, z).norm() > 1e-7_f64.powf(1.0 / (m - j as u32) as f64) * mag {
            return None;
        }
    }
    Some(Root {
        z,
        multiplicity: m,
        accuracy: step,
    })
}

fn aberth(p: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = p.len() - 1;
    let lead = p[deg];
    let monic: Vec<Complex64> = p.iter().map(|c| c / lead).collect();
    if deg == 1 {
        return Ok(vec![-monic[0]]);
    }
    let dp = derivative(&monic);
    let radius = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let r0 = radius.min(
        // geometric-mean guess keeps the start inside the root annulus
        monic[0].norm().powf(1.0 / deg as f64).max(1e-3),
    );
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(r0, t)
        })
        .collect();
    for _ in 0..800 {
        let mut worst = 0.0f64;
        for i in 0..deg {
            let pz = horner(&monic, z[i]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / horner(&dp, z[i]);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        s += d.inv();
                    }
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                worst = worst.max(w.norm() / z[i].norm().max(1e-300));
            }
        }
        if worst < 1e-15 {
            break;
        }
    }
    if z.iter().any(|c| !c.is_finite()) {
        return Err(Error::convergence("Aberth iteration", f64::INFINITY));
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Complex, DMatrix};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simple_and_multiple_roots() {
        // (x^2 + 1)
        let r = poly_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].z - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1].z - c(0.0, 1.0)).norm() < 1e-14);
        // (x - 2)^3 (x + i)
        let mut q = vec![c(1.0, 0.0)];
        for root in [c(2.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(0.0, -1.0)] {
            let mut next = vec![c(0.0, 0.0); q.len() + 1];
            for (k, a) in q.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * root;
            }
            q = next;
        }
        let r = poly_roots(&q).unwrap();
        assert_eq!(r.len(), 2);
        let triple = r.iter().find(|r| r.multiplicity == 3).unwrap();
        assert!((triple.z - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn agrees_with_companion_matrix() {
        let coeffs = [c(-3.0, 1.0), c(0.5, 0.0), c(2.0, -1.0), c(0.0, 0.0), c(1.0, 0.0), c(0.25, 0.0)];
        let n = coeffs.len() - 1;
        let lead = coeffs[n];
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex::new(1.0, 0.0);
        }
        for i in 0..n {
            let a = -coeffs[i] / lead;
            m[(i, n - 1)] = Complex::new(a.re, a.im);
        }
        let eig = m.eigenvalues().expect("eigenvalues");
        let found = poly_roots(&coeffs).unwrap();
        assert_eq!(found.len(), n);
        for e in eig.iter() {
            let e = c(e.re, e.im);
            let best = found.iter().map(|r| (r.z - e).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{e}");
        }
    }
}
