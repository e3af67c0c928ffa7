//! Exact prime counting by a segmented odd-only sieve.

use crate::error::{LabError, Result};

/// Largest argument accepted by [`prime_pi`].
pub const PRIME_PI_MAX: f64 = 1.0e8;

const SEGMENT: usize = 1 << 16;

/// Number of primes `<= x`.
pub fn prime_pi(x: f64) -> Result<u64> {
    if !(x <= PRIME_PI_MAX) {
        return Err(LabError::RangeExceeded {
            x,
            max: PRIME_PI_MAX,
        });
    }
    if x < 2.0 {
        return Ok(0);
    }
    let n = x.floor() as u64;
    if n == 2 {
        return Ok(1);
    }
    let root = (n as f64).sqrt() as u64 + 1;
    let base = small_primes(root);
    // count 2, then odd primes in [3, n]
    let mut count = 1u64;
    let mut seg = vec![true; SEGMENT];
    let mut lo = 3u64;
    while lo <= n {
        // seg[i] stands for lo + 2i
        let hi = (lo + 2 * SEGMENT as u64 - 2).min(if n.is_multiple_of(2) { n - 1 } else { n });
        let len = ((hi - lo) / 2 + 1) as usize;
        seg[..len].fill(true);
        for &p in base.iter().skip(1) {
            if p * p > hi {
                break;
            }
            let mut m = (p * p).max(lo.div_ceil(p) * p);
            if m % 2 == 0 {
                m += p;
            }
            while m <= hi {
                seg[((m - lo) / 2) as usize] = false;
                m += 2 * p;
            }
        }
        count += seg[..len].iter().filter(|&&b| b).count() as u64;
        lo = hi + 2;
    }
    Ok(count)
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut is = vec![true; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if is[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                is[j] = false;
                j += i;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: u64) -> u64 {
        (2..=n)
            .filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0))
            .count() as u64
    }

    #[test]
    fn known_values() {
        assert_eq!(prime_pi(2.0).unwrap(), 1);
        assert_eq!(prime_pi(10.0).unwrap(), 4);
        assert_eq!(prime_pi(1.0e4).unwrap(), 1229);
        assert_eq!(prime_pi(1.0e5).unwrap(), 9592);
        assert_eq!(prime_pi(1.0e6).unwrap(), 78498);
    }

    #[test]
    fn matches_trial_division() {
        for n in (2..3000).step_by(37).chain([3, 4, 5, 9, 131072, 131073]) {
            assert_eq!(prime_pi(n as f64).unwrap(), brute(n), "n = {n}");
        }
    }

    #[test]
    fn range_guard() {
        assert!(matches!(
            prime_pi(2.0e8),
            Err(LabError::RangeExceeded { .. })
        ));
        assert_eq!(prime_pi(1.5).unwrap(), 0);
    }
}
