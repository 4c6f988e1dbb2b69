//! φ(n!), σ₀(n!) and σ_k(n!) for k ≥ 1.
//!
//! φ and σ₀ only involve primes below n and stay fully factored. σ_k is kept
//! as an exact big integer together with a partial factorization, since its
//! factors `(p^{k(a+1)} − 1)/(p^k − 1)` are in general hard to factor.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factored::{
    factor_big_with_primes, factor_small, product_tree, CofactorKind, FactoredNat,
    PartialFactorization, DEFAULT_BIT_CAP,
};
use crate::primes::PrimeSieve;
use crate::valuations::{factorial_factored, legendre};

/// The arithmetic function on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithFn {
    Phi,
    /// σ_k; `Sigma(0)` counts divisors.
    Sigma(u32),
}

impl fmt::Display for ArithFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithFn::Phi => f.write_str("phi"),
            ArithFn::Sigma(k) => write!(f, "sigma:{k}"),
        }
    }
}

impl FromStr for ArithFn {
    type Err = Error;

    /// `phi` or `sigma:k`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("phi") {
            return Ok(ArithFn::Phi);
        }
        if s.eq_ignore_ascii_case("sigma") {
            return Ok(ArithFn::Sigma(1));
        }
        if let Some(k) = s.strip_prefix("sigma:") {
            let k: u32 = k
                .parse()
                .map_err(|_| Error::arg(format!("bad sigma exponent in {s:?}")))?;
            return Ok(ArithFn::Sigma(k));
        }
        Err(Error::arg(format!(
            "unknown function {s:?}; expected phi or sigma:k"
        )))
    }
}

impl Serialize for ArithFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ArithFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// f(n!) in whichever representation suits f.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsValue {
    Factored(FactoredNat),
    Hybrid(PartialFactorization),
}

/// Options for the σ_k (k ≥ 1) evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmaOptions {
    /// Primes up to this bound are divided out of every factor. Clamped to
    /// the sieve limit.
    pub trial_bound: u64,
    /// Pollard-rho budget per composite remainder; 0 disables rho.
    pub rho_iters: u64,
    pub bit_cap: u64,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        SigmaOptions {
            trial_bound: u64::MAX,
            rho_iters: 0,
            bit_cap: DEFAULT_BIT_CAP,
        }
    }
}

/// σ_k(n!) with its exact value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaK {
    pub value: BigUint,
    pub hybrid: PartialFactorization,
}

/// φ(n!) = n! ∏_{p≤n} (p−1)/p.
pub fn phi_factorial(n: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    let mut out = factorial_factored(n, sieve)?;
    for &p in sieve.primes_up_to(n) {
        let p = p as u64;
        let ok = out.try_div_prime_power(p, 1);
        debug_assert!(ok);
        out.mul_assign(&factor_small(p - 1, sieve)?);
    }
    Ok(out)
}

/// σ₀(n!) = ∏_{p≤n} (ν_p(n!) + 1).
pub fn sigma0_factorial(n: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    sieve.check_range("n", n)?;
    let mut out = FactoredNat::one();
    for &p in sieve.primes_up_to(n) {
        let e = legendre(n, p as u64) + 1;
        if e > sieve.limit() {
            return Err(Error::Internal(format!(
                "ν_{p}({n}!) + 1 = {e} is beyond the sieve limit {}",
                sieve.limit()
            )));
        }
        out.mul_assign(&factor_small(e, sieve)?);
    }
    Ok(out)
}

/// Upper estimate of the bit length of σ_k(n!).
pub fn sigma_k_bit_estimate(n: u64, k: u32, sieve: &PrimeSieve) -> Result<u64> {
    sieve.check_range("n", n)?;
    let bits: f64 = sieve
        .primes_up_to(n)
        .iter()
        .map(|&p| (k as f64) * (legendre(n, p as u64) + 1) as f64 * (p as f64).log2())
        .sum();
    Ok(bits.ceil() as u64 + 1)
}

/// `(p^{k(a+1)} − 1) / (p^k − 1) = Σ_{j=0}^{a} p^{jk}`.
fn sigma_k_prime_power(p: u64, a: u64, k: u32) -> BigUint {
    let pk = BigUint::from(p).pow(k);
    let exp = u32::try_from(a + 1).expect("exponent fits in u32");
    (pk.pow(exp) - 1u32) / (pk - 1u32)
}

pub(crate) fn sigma_k_pieces(
    n: u64,
    k: u32,
    sieve: &PrimeSieve,
    bit_cap: u64,
) -> Result<Vec<BigUint>> {
    if k == 0 {
        return Err(Error::arg(
            "sigma_k evaluation needs k >= 1; use sigma0_factorial for k = 0",
        ));
    }
    let bits = sigma_k_bit_estimate(n, k, sieve)?;
    if bits > bit_cap {
        return Err(Error::BitCap {
            bits,
            cap: bit_cap,
            context: Some(format!("sigma:{k} at n = {n}")),
        });
    }
    Ok(sieve
        .primes_up_to(n)
        .par_iter()
        .map(|&p| sigma_k_prime_power(p as u64, legendre(n, p as u64), k))
        .collect())
}

/// The exact value of σ_k(n!), k ≥ 1.
pub fn sigma_k_value(n: u64, k: u32, sieve: &PrimeSieve, bit_cap: u64) -> Result<BigUint> {
    Ok(product_tree(sigma_k_pieces(n, k, sieve, bit_cap)?))
}

/// σ_k(n!), k ≥ 1, exactly and as a partial factorization: every factor
/// `(p^{k(a+1)} − 1)/(p^k − 1)` is trial divided, then optionally handed to
/// Pollard rho.
pub fn sigma_k_factorial(
    n: u64,
    k: u32,
    sieve: &PrimeSieve,
    opts: &SigmaOptions,
) -> Result<SigmaK> {
    let pieces = sigma_k_pieces(n, k, sieve, opts.bit_cap)?;
    let trial = sieve.primes_up_to(opts.trial_bound);
    let parts: Vec<PartialFactorization> = pieces
        .par_iter()
        .map(|piece| factor_big_with_primes(piece, trial, opts.rho_iters))
        .collect::<Result<_>>()?;
    let hybrid = merge_partials(parts);
    let value = product_tree(pieces);
    debug_assert_eq!(hybrid.value(), value);
    Ok(SigmaK { value, hybrid })
}

fn merge_partials(parts: Vec<PartialFactorization>) -> PartialFactorization {
    let mut factored_part = FactoredNat::one();
    let mut cofactor = BigUint::one();
    let mut kinds = Vec::new();
    for part in parts {
        factored_part.mul_assign(&part.factored_part);
        if part.cofactor_kind != CofactorKind::Unit {
            cofactor *= part.cofactor;
            kinds.push(part.cofactor_kind);
        }
    }
    let cofactor_kind = match kinds.as_slice() {
        [] => CofactorKind::Unit,
        [one] => *one,
        _ => CofactorKind::Composite,
    };
    PartialFactorization {
        factored_part,
        cofactor,
        cofactor_kind,
    }
}

/// f(n!) for either family.
pub fn evaluate(f: ArithFn, n: u64, sieve: &PrimeSieve, opts: &SigmaOptions) -> Result<RhsValue> {
    match f {
        ArithFn::Phi => phi_factorial(n, sieve).map(RhsValue::Factored),
        ArithFn::Sigma(0) => sigma0_factorial(n, sieve).map(RhsValue::Factored),
        ArithFn::Sigma(k) => {
            sigma_k_factorial(n, k, sieve, opts).map(|s| RhsValue::Hybrid(s.hybrid))
        }
    }
}

/// ν_q(φ(n!)) computed without factoring φ(n!): the exponent of q in n!,
/// less one when q ≤ n, plus `Σ_j π(n; q^j, 1)` for the factors p − 1.
pub fn nu_q_phi_factorial_direct(n: u64, q: u64, sieve: &PrimeSieve) -> Result<u64> {
    sieve.check_range("n", n)?;
    let mut total = legendre(n, q);
    if q <= n {
        total -= 1;
    }
    let mut qj = q;
    while qj <= n {
        total += sieve.prime_count_ap(n, qj, 1)?;
        qj = match qj.checked_mul(q) {
            Some(v) => v,
            None => break,
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::build_sieve;
    use num_integer::Integer;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn big_factorial(n: u64) -> BigUint {
        (1..=n).fold(BigUint::one(), |acc, k| acc * k)
    }

    // trial-divide the big integer n! by d = 2, 3, ... ≤ n
    fn walk_factor(mut v: BigUint, n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        for d in 2..=n.max(1) {
            let mut e = 0;
            loop {
                let (q, r) = v.div_rem(&BigUint::from(d));
                if !r.is_zero() {
                    break;
                }
                v = q;
                e += 1;
            }
            if e > 0 {
                out.push((d, e));
            }
        }
        assert!(v.is_one());
        out
    }

    fn divisors(n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut d = 1;
        while d * d <= n {
            if n.is_multiple_of(d) {
                out.push(d);
                if d * d != n {
                    out.push(n / d);
                }
            }
            d += 1;
        }
        out
    }

    #[test]
    fn phi_examples() {
        let s = build_sieve(100).unwrap();
        assert_eq!(
            phi_factorial(3, &s).unwrap(),
            FactoredNat::prime_power(2, 1)
        );
        assert!(phi_factorial(1, &s).unwrap().is_one());
        assert_eq!(
            phi_factorial(5, &s).unwrap(),
            FactoredNat::prime_power(2, 5)
        );
        assert!(phi_factorial(101, &s).is_err());
    }

    #[test]
    fn sigma0_examples() {
        let s = build_sieve(100).unwrap();
        assert_eq!(
            sigma0_factorial(4, &s).unwrap(),
            FactoredNat::prime_power(2, 3)
        );
        assert!(sigma0_factorial(1, &s).unwrap().is_one());
        assert_eq!(
            sigma0_factorial(6, &s).unwrap(),
            FactoredNat::from_pairs([(2, 1), (3, 1), (5, 1)])
        );
    }

    #[test]
    fn sigma_k_examples() {
        let s = build_sieve(100).unwrap();
        let v = |n, k| {
            sigma_k_factorial(n, k, &s, &SigmaOptions::default())
                .unwrap()
                .value
        };
        assert_eq!(v(2, 1), BigUint::from(3u32));
        assert_eq!(v(3, 1), BigUint::from(12u32));
        assert_eq!(v(3, 2), BigUint::from(50u32));
        assert!(sigma_k_value(3, 0, &s, DEFAULT_BIT_CAP).is_err());
        let capped = sigma_k_value(60, 3, &s, 100);
        assert!(matches!(capped, Err(Error::BitCap { .. })));
    }

    #[test]
    fn small_factorials_against_divisor_enumeration() {
        let s = build_sieve(100).unwrap();
        for n in 1..=10u64 {
            let nf: u64 = (1..=n).product();
            let divs = divisors(nf);
            let phi = (1..=nf).filter(|&x| x.gcd(&nf) == 1).count() as u64;
            assert_eq!(
                phi_factorial(n, &s).unwrap().expand(128).unwrap(),
                BigUint::from(phi)
            );
            assert_eq!(
                sigma0_factorial(n, &s).unwrap().expand(128).unwrap(),
                BigUint::from(divs.len())
            );
            for k in 1..=3u32 {
                let want: BigUint = divs.iter().map(|&d| BigUint::from(d).pow(k)).sum();
                assert_eq!(
                    sigma_k_value(n, k, &s, DEFAULT_BIT_CAP).unwrap(),
                    want,
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn phi_against_factor_walk() {
        let s = build_sieve(200).unwrap();
        for n in 1..=120u64 {
            let nf = big_factorial(n);
            let mut phi = nf.clone();
            for (p, _) in walk_factor(nf, n) {
                phi = phi / p * (p - 1);
            }
            assert_eq!(
                phi_factorial(n, &s).unwrap().expand(1 << 16).unwrap(),
                phi,
                "n={n}"
            );
        }
    }

    #[test]
    fn hybrid_multiplies_back() {
        let s = build_sieve(10_000).unwrap();
        for (n, k) in [(10, 1), (25, 2), (40, 3), (60, 1)] {
            let r = sigma_k_factorial(
                n,
                k,
                &s,
                &SigmaOptions {
                    trial_bound: 2000,
                    rho_iters: 0,
                    bit_cap: DEFAULT_BIT_CAP,
                },
            )
            .unwrap();
            assert_eq!(r.hybrid.value(), r.value);
            // cofactor has no prime factor below the trial bound
            for &p in s.primes_up_to(2000) {
                assert!(!(&r.hybrid.cofactor % p).is_zero() || r.hybrid.cofactor.is_one());
            }
        }
        // σ(10!) = 511 · 121 · 31 · 8 = 2^3 · 7 · 11^2 · 31 · 73
        let r = sigma_k_factorial(10, 1, &s, &SigmaOptions::default()).unwrap();
        assert!(r.hybrid.is_complete());
        assert_eq!(r.value, BigUint::from(15_334_088u32));
    }

    #[test]
    fn nu_q_direct_examples() {
        let s = build_sieve(100).unwrap();
        assert_eq!(nu_q_phi_factorial_direct(10, 2, &s).unwrap(), 11);
        assert_eq!(nu_q_phi_factorial_direct(1, 2, &s).unwrap(), 0);
        assert_eq!(nu_q_phi_factorial_direct(10, 3, &s).unwrap(), 4);
        // φ(10!) = 829440 = 2^11 · 3^4 · 5
        assert_eq!(
            phi_factorial(10, &s).unwrap().expand(64).unwrap(),
            BigUint::from(829_440u32)
        );
    }

    #[test]
    fn full_mersenne_divisor_fails_for_some_k_above_one() {
        // 2^{k(ν₂(n!)+1)} − 1 | σ_k(n!) holds for k = 1 only; these are every
        // counterexample with 2 ≤ n ≤ 60, k ≤ 3 (independent oracle)
        let expected: Vec<(u64, u32)> = vec![
            (2, 2),
            (3, 2),
            (4, 2),
            (5, 2),
            (6, 2),
            (7, 2),
            (8, 2),
            (9, 2),
            (21, 2),
            (2, 3),
            (10, 3),
            (11, 3),
        ];
        let s = build_sieve(100).unwrap();
        let mut failing = Vec::new();
        for k in 1..=3u32 {
            for n in 2..=60u64 {
                let v = sigma_k_value(n, k, &s, DEFAULT_BIT_CAP).unwrap();
                let m = (BigUint::one() << (k as u64 * (legendre(n, 2) + 1))) - 1u32;
                if !(v % m).is_zero() {
                    failing.push((n, k));
                }
            }
        }
        assert_eq!(failing, expected);
    }

    #[test]
    fn parse_arith_fn() {
        assert_eq!("phi".parse::<ArithFn>().unwrap(), ArithFn::Phi);
        assert_eq!("sigma:0".parse::<ArithFn>().unwrap(), ArithFn::Sigma(0));
        assert_eq!("sigma:3".parse::<ArithFn>().unwrap(), ArithFn::Sigma(3));
        assert!("sigma:x".parse::<ArithFn>().is_err());
        assert!("tau".parse::<ArithFn>().is_err());
        assert_eq!(ArithFn::Sigma(2).to_string(), "sigma:2");
    }

    proptest! {
        #[test]
        fn phi_valuation_two_routes(n in 1u64..3000, q in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 47])) {
            let s = build_sieve(3000).unwrap();
            let phi = phi_factorial(n, &s).unwrap();
            prop_assert_eq!(phi.exponent(q), nu_q_phi_factorial_direct(n, q, &s).unwrap());
        }

        #[test]
        fn sigma_k_divisible_by_two_part_factor(n in 2u64..60, k in 1u32..=3) {
            let s = build_sieve(100).unwrap();
            let v = sigma_k_value(n, k, &s, DEFAULT_BIT_CAP).unwrap();
            let e = k as u64 * (legendre(n, 2) + 1);
            let m = ((BigUint::one() << e) - 1u32) / ((BigUint::one() << k) - 1u32);
            prop_assert!((v % m).is_zero());
        }
    }
}
