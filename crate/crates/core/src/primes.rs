//! Smallest-prime-factor sieve, prime counting (plain and in arithmetic
//! progressions), interval extraction and the logarithmic integral.
//!
//! A single [`PrimeSieve`] backs every prime sum, product and factorization
//! in the crate. It is immutable once built and may be shared freely between
//! worker threads.

use crate::error::{Error, Result};

/// Smallest-prime-factor table for `2..=limit`, plus the ascending list of
/// primes extracted from it.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    limit: u64,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

/// Largest limit accepted by [`build_sieve`]; table entries are stored as `u32`.
pub const MAX_SIEVE_LIMIT: u64 = u32::MAX as u64 - 1;

/// Builds the SPF table with a linear sieve.
pub fn build_sieve(limit: u64) -> Result<PrimeSieve> {
    PrimeSieve::new(limit)
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::arg(format!(
                "sieve limit must be at least 2, got {limit}"
            )));
        }
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::arg(format!(
                "sieve limit {limit} exceeds the supported maximum {MAX_SIEVE_LIMIT}"
            )));
        }
        let len = limit as usize + 1;
        let mut spf: Vec<u32> = Vec::new();
        spf.try_reserve_exact(len)
            .map_err(|e| Error::Resource(format!("sieve table of {len} entries: {e}")))?;
        spf.resize(len, 0);

        // π(x) < 1.26 x / ln x for x > 1
        let estimate = (1.26 * limit as f64 / (limit as f64).ln()) as usize + 16;
        let mut primes: Vec<u32> = Vec::new();
        primes
            .try_reserve(estimate)
            .map_err(|e| Error::Resource(format!("prime list of {estimate} entries: {e}")))?;

        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let j = i * p as usize;
                if j >= len {
                    break;
                }
                spf[j] = p;
            }
        }
        primes.shrink_to_fit();
        Ok(PrimeSieve { limit, spf, primes })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `i`, or `None` outside `2..=limit`.
    pub fn spf(&self, i: u64) -> Option<u64> {
        if (2..=self.limit).contains(&i) {
            Some(self.spf[i as usize] as u64)
        } else {
            None
        }
    }

    pub fn is_prime(&self, i: u64) -> bool {
        self.spf(i) == Some(i)
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Primes `p <= x`, clamped to the sieve limit.
    pub fn primes_up_to(&self, x: u64) -> &[u32] {
        &self.primes[..self.count_le(x)]
    }

    fn count_le(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| (p as u64) <= x)
    }

    pub(crate) fn check_range(&self, what: &'static str, value: u64) -> Result<()> {
        if value > self.limit {
            Err(Error::OutOfRange {
                what,
                value,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    /// π(x).
    pub fn prime_count(&self, x: u64) -> Result<u64> {
        self.check_range("x", x)?;
        Ok(self.count_le(x) as u64)
    }

    /// π(x; h, a): primes `p <= x` with `p ≡ a (mod h)`.
    pub fn prime_count_ap(&self, x: u64, h: u64, a: i64) -> Result<u64> {
        self.check_range("x", x)?;
        if h == 0 {
            return Err(Error::arg("modulus h must be at least 1"));
        }
        let residue = (a as i128).rem_euclid(h as i128) as u64;
        Ok(self
            .primes_up_to(x)
            .iter()
            .filter(|&&p| p as u64 % h == residue)
            .count() as u64)
    }

    /// Primes in `I_ℓ = (n/(ℓ+1), n/ℓ]`, ascending.
    pub fn interval_primes(&self, n: u64, ell: u64) -> Result<&[u32]> {
        self.check_range("n", n)?;
        if ell == 0 {
            return Err(Error::arg("interval index ℓ must be at least 1"));
        }
        // p > n/(ℓ+1) over the reals is p > ⌊n/(ℓ+1)⌋ for integer p
        let lo = self.count_le(n / (ell + 1));
        let hi = self.count_le(n / ell);
        Ok(&self.primes[lo..hi])
    }

    /// Complete factorization of `n` by repeated smallest-prime-factor
    /// division, as ascending `(prime, exponent)` pairs.
    pub fn factor_pairs(&self, mut n: u64) -> Result<Vec<(u64, u64)>> {
        if n == 0 {
            return Err(Error::arg("cannot factor 0"));
        }
        self.check_range("n", n)?;
        let mut out: Vec<(u64, u64)> = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        Ok(out)
    }
}

/// Relative tolerance targeted by [`log_integral`].
pub const LI_REL_TOL: f64 = 1e-9;

/// `li(x) = ∫_2^x du / log u`, by adaptive Simpson quadrature in the
/// variable `t = log u` (integrand `e^t / t`).
pub fn log_integral(x: f64) -> Result<f64> {
    if x.is_nan() || x < 2.0 || !x.is_finite() {
        return Err(Error::arg(format!(
            "log_integral needs finite x >= 2, got {x}"
        )));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    let f = |t: f64| t.exp() / t;
    let a = std::f64::consts::LN_2;
    let b = x.ln();
    // rough magnitude: li(x) ~ x / log x
    let scale = (x / b).max(1.0);
    let tol = LI_REL_TOL * 0.1 * scale;
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    Ok(adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 60))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = simpson(a, m, fa, lm, fm);
    let right = simpson(m, b, fm, rm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, lm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, rm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_prime_trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    // li(x) - li(2) from the Ramanujan-free power series
    // li(x) = γ + ln ln x + Σ (ln x)^k / (k·k!), independent of the quadrature.
    fn li_series(x: f64) -> f64 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        const LI_2: f64 = 1.045_163_780_117_493;
        let l = x.ln();
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= l / k as f64;
            sum += term / k as f64;
        }
        EULER_GAMMA + l.ln() + sum - LI_2
    }

    #[test]
    fn sieve_small_tables() {
        let s = build_sieve(10).unwrap();
        let got: Vec<u64> = (2..=10).map(|i| s.spf(i).unwrap()).collect();
        assert_eq!(got, vec![2, 3, 2, 5, 2, 7, 2, 3, 2]);
        let s = build_sieve(2).unwrap();
        assert_eq!(s.spf(2), Some(2));
        assert_eq!(s.primes(), &[2]);
    }

    #[test]
    fn sieve_rejects_tiny_limits() {
        assert!(matches!(build_sieve(1), Err(Error::Argument(_))));
        assert!(matches!(build_sieve(0), Err(Error::Argument(_))));
    }

    #[test]
    fn sieve_fixed_points_match_trial_division() {
        let s = build_sieve(100_000).unwrap();
        let trial: Vec<u32> = (2..=100_000u64)
            .filter(|&n| is_prime_trial(n))
            .map(|n| n as u32)
            .collect();
        assert_eq!(s.primes(), trial.as_slice());
        for i in 2..=100_000u64 {
            let p = s.spf(i).unwrap();
            assert_eq!(i % p, 0);
            assert!(is_prime_trial(p));
            assert_eq!(p == i, is_prime_trial(i));
        }
    }

    #[test]
    fn sieve_million_has_78498_primes() {
        let s = build_sieve(1_000_000).unwrap();
        let fixed = (2..=1_000_000u64).filter(|&i| s.spf(i) == Some(i)).count();
        assert_eq!(fixed, 78_498);
    }

    #[test]
    fn prime_count_examples() {
        let s = build_sieve(1000).unwrap();
        assert_eq!(s.prime_count(1).unwrap(), 0);
        assert_eq!(s.prime_count(10).unwrap(), 4);
        assert_eq!(s.prime_count(100).unwrap(), 25);
        assert!(matches!(s.prime_count(1001), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn prime_count_ap_examples() {
        let s = build_sieve(1000).unwrap();
        assert_eq!(s.prime_count_ap(100, 4, 1).unwrap(), 11);
        assert_eq!(s.prime_count_ap(10, 1, 0).unwrap(), 4);
        assert_eq!(s.prime_count_ap(100, 4, 2).unwrap(), 1);
        assert_eq!(s.prime_count_ap(100, 4, -3).unwrap(), 11);
        assert!(s.prime_count_ap(2000, 4, 1).is_err());
        assert!(s.prime_count_ap(10, 0, 1).is_err());
    }

    #[test]
    fn interval_primes_examples() {
        let s = build_sieve(1000).unwrap();
        assert_eq!(
            s.interval_primes(100, 1).unwrap(),
            &[53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
        );
        assert!(s.interval_primes(10, 10).unwrap().is_empty());
        assert_eq!(s.interval_primes(100, 2).unwrap(), &[37, 41, 43, 47]);
    }

    #[test]
    fn li_examples() {
        assert_eq!(log_integral(2.0).unwrap(), 0.0);
        assert!(log_integral(1.5).is_err());
        assert!(log_integral(f64::NAN).is_err());
        // golden values from a 30-digit quadrature oracle
        let golden = [
            (100.0, 29.080_977_803_962_1),
            (1000.0, 176.564_494_210_035),
            (1e6, 78_626.503_995_682_1),
            (1e7, 664_917.359_884_789),
        ];
        for (x, want) in golden {
            let got = log_integral(x).unwrap();
            assert!(
                ((got - want) / want).abs() <= LI_REL_TOL,
                "li({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn li_matches_series_oracle() {
        for &x in &[2.5, 3.0, 10.0, 57.0, 1234.5, 99_999.0, 5e6] {
            let (got, want) = (log_integral(x).unwrap(), li_series(x));
            assert!(
                ((got - want) / want).abs() <= LI_REL_TOL,
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn li_ratio_to_x_over_log_x() {
        // the (1, 1.3) band only holds from x ≈ 205 on
        let ratio = |x: f64| log_integral(x).unwrap() / (x / x.ln());
        assert!((ratio(100.0) - 1.339_228_5).abs() < 1e-6);
        let mut x = 250.0;
        while x <= 1e7 {
            let r = ratio(x);
            assert!(r > 1.0 && r < 1.3, "x={x} ratio={r}");
            x *= 1.07;
        }
    }

    proptest! {
        #[test]
        fn residue_classes_partition_count(x in 0u64..5000, h in 1u64..60) {
            let s = build_sieve(5000).unwrap();
            let total: u64 = (0..h as i64).map(|a| s.prime_count_ap(x, h, a).unwrap()).sum();
            prop_assert_eq!(total, s.prime_count(x).unwrap());
        }

        #[test]
        fn intervals_partition_tail(n in 1u64..5000, big_l in 1u64..40) {
            let s = build_sieve(5000).unwrap();
            let mut joined: Vec<u32> = Vec::new();
            for ell in (1..=big_l).rev() {
                joined.extend_from_slice(s.interval_primes(n, ell).unwrap());
            }
            let expect: Vec<u32> = s.primes_up_to(n).iter().copied()
                .filter(|&p| (p as u64) * (big_l + 1) > n).collect();
            prop_assert_eq!(joined, expect);
        }

        #[test]
        fn li_strictly_increasing(x in 2.0f64..1e7, dx in 1e-3f64..1e3) {
            prop_assert!(log_integral(x + dx).unwrap() > log_integral(x).unwrap());
        }
    }
}
