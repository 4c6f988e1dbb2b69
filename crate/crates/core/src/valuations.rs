//! Legendre's formula, base-p digit sums and the factored form of n!.

use crate::error::{Error, Result};
use crate::factored::FactoredNat;
use crate::primes::PrimeSieve;

/// s_p(N), the sum of the base-p digits of N.
pub fn digit_sum(mut n: u64, p: u64) -> u64 {
    assert!(p >= 2, "base must be at least 2");
    let mut s = 0;
    while n > 0 {
        s += n % p;
        n /= p;
    }
    s
}

/// ν_p(N!) as `Σ_{j≥1} ⌊N/p^j⌋`.
pub fn legendre(n: u64, p: u64) -> u64 {
    assert!(p >= 2, "p must be at least 2");
    let mut total = 0;
    let mut q = n / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// n! as a factored natural.
pub fn factorial_factored(n: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    sieve.check_range("n", n)?;
    Ok(FactoredNat::from_pairs(
        sieve
            .primes_up_to(n)
            .iter()
            .map(|&p| (p as u64, legendre(n, p as u64))),
    ))
}

/// n! for any n, using the sieve when it is large enough and otherwise a
/// local one.
pub(crate) fn factorial_any(n: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    if n <= sieve.limit() {
        factorial_factored(n, sieve)
    } else {
        let local = PrimeSieve::new(n).map_err(|e| match e {
            Error::Argument(msg) => Error::Resource(msg),
            other => other,
        })?;
        factorial_factored(n, &local)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::build_sieve;
    use num_bigint::BigUint;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    #[test]
    fn digit_sum_examples() {
        assert_eq!(digit_sum(10, 2), 2);
        assert_eq!(digit_sum(0, 7), 0);
        assert_eq!(digit_sum(26, 3), 6);
    }

    #[test]
    fn legendre_examples() {
        // 10! = 3628800 = 2^8 · 3^4 · 5^2 · 7, by trial division
        let mut f = BigUint::from(3_628_800u32);
        let mut twos = 0;
        while (&f % 2u32).is_zero() {
            f /= 2u32;
            twos += 1;
        }
        assert_eq!(legendre(10, 2), twos);
        assert_eq!(legendre(0, 5), 0);
        assert_eq!(legendre(100, 97), 1);
    }

    #[test]
    fn factorial_examples() {
        let s = build_sieve(600).unwrap();
        assert_eq!(
            factorial_factored(5, &s).unwrap(),
            FactoredNat::from_pairs([(2, 3), (3, 1), (5, 1)])
        );
        assert!(factorial_factored(1, &s).unwrap().is_one());
        assert!(factorial_factored(0, &s).unwrap().is_one());
        assert_eq!(
            factorial_factored(12, &s).unwrap().expand(64).unwrap(),
            BigUint::from(479_001_600u32)
        );
        assert!(factorial_factored(601, &s).is_err());
    }

    #[test]
    fn factorial_matches_iterative_product() {
        let s = build_sieve(500).unwrap();
        let mut prod = BigUint::one();
        for n in 1..=500u64 {
            prod *= n;
            assert_eq!(
                factorial_factored(n, &s).unwrap().expand(1 << 16).unwrap(),
                prod,
                "n={n}"
            );
        }
    }

    #[test]
    fn factorial_any_beyond_sieve() {
        let s = build_sieve(10).unwrap();
        assert_eq!(factorial_any(20, &s).unwrap().exponent(19), 1);
    }

    proptest! {
        #[test]
        fn legendre_digit_identity(n in 0u64..1_000_000, p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 97, 101, 9973])) {
            prop_assert_eq!(legendre(n, p) * (p - 1), n - digit_sum(n, p));
        }

        #[test]
        fn legendre_error_term(n in 2u64..100_000, p in prop::sample::select(vec![2u64, 3, 5, 7, 31, 113, 1009])) {
            prop_assume!(p <= n);
            let digits = std::iter::successors(Some(n), |&m| Some(m / p)).take_while(|&m| m > 0).count() as u64;
            // N/(p-1) - ν = s_p(N)/(p-1), in (0, digits]
            let s = digit_sum(n, p);
            prop_assert!(s > 0 && s <= (p - 1) * digits);
        }
    }
}
