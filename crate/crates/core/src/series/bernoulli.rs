use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `B_0, …, B_{m−1}` from `Σ_{k≤n} C(n+1, k) B_k = 0` (so `B_1 = −1/2`).
pub fn bernoulli_numbers(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m);
    if m == 0 {
        return b;
    }
    b.push(BigRational::one());
    for n in 1..m {
        if n > 1 && n % 2 == 1 {
            b.push(BigRational::zero());
            continue;
        }
        // binomials C(n+1, k) for k = 0..n
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            if !bk.is_zero() {
                acc += bk * BigRational::from_integer(binom.clone());
            }
            binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
        }
        // binom is now C(n+1, n) = n+1
        b.push(-acc / BigRational::from_integer(binom));
    }
    b
}

/// Shared table holding at least `m` Bernoulli numbers.
pub(crate) fn bernoulli_table(m: usize) -> Arc<Vec<BigRational>> {
    static TABLE: OnceLock<Mutex<Arc<Vec<BigRational>>>> = OnceLock::new();
    let cell = TABLE.get_or_init(|| Mutex::new(Arc::new(bernoulli_numbers(64))));
    let mut guard = cell.lock().unwrap_or_else(|e| e.into_inner());
    if guard.len() < m {
        *guard = Arc::new(bernoulli_numbers(m.max(2 * guard.len())));
    }
    guard.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn first_values() {
        let b = bernoulli_numbers(13);
        assert_eq!(b[0], r(1, 1));
        assert_eq!(b[1], r(-1, 2));
        assert_eq!(b[2], r(1, 6));
        assert_eq!(b[3], r(0, 1));
        assert_eq!(b[4], r(-1, 30));
        assert_eq!(b[6], r(1, 42));
        assert_eq!(b[12], r(-691, 2730));
        for n in (3..13).step_by(2) {
            assert!(b[n].is_zero());
        }
    }

    #[test]
    fn convolution_identity() {
        let b = bernoulli_numbers(40);
        for n in 1..40usize {
            let mut binom = BigInt::one();
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate().take(n + 1) {
                acc += bk * BigRational::from_integer(binom.clone());
                binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
            }
            assert!(acc.is_zero(), "n = {n}");
        }
    }
}
