//! Exact arithmetic on integers and rationals held as prime factorizations,
//! plus factoring of moderately large integers.
//!
//! [`FactoredNat`] and [`FactoredRat`] keep their factors in an ordered map,
//! so iteration, multiplication, hashing and serialization are all
//! deterministic. Both serialize as a JSON object mapping decimal prime
//! strings to decimal exponent strings, keys in ascending numeric order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::primes::PrimeSieve;

/// Default cap on the bit size of an expanded value (2²⁴ bits).
pub const DEFAULT_BIT_CAP: u64 = 1 << 24;

/// Default Pollard-rho iteration budget per composite.
pub const DEFAULT_RHO_ITERS: u64 = 10_000_000;

/// Log-magnitude gap below which [`FactoredNat::cmp_magnitude`] falls back
/// to exact big-integer comparison.
pub const CMP_LOG_SLACK: f64 = 1e-6;

/// Miller–Rabin with the first 13 prime bases is deterministic below this bound.
pub const MR_CERTIFIED_BOUND: u128 = 3_317_044_064_679_887_385_961_981;

const MR_WITNESSES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// A positive integer as a map `prime -> exponent >= 1`. The empty map is 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactoredNat {
    factors: BTreeMap<u64, u64>,
}

/// Returned by [`FactoredNat::div_exact`] when the divisor has a prime with a
/// larger exponent than the dividend. `witness` is the smallest such prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotDivisible {
    pub witness: u64,
}

impl fmt::Display for NotDivisible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not divisible (witness prime {})", self.witness)
    }
}

impl std::error::Error for NotDivisible {}

impl FactoredNat {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn prime_power(p: u64, e: u64) -> Self {
        let mut out = Self::one();
        out.mul_prime_power(p, e);
        out
    }

    /// Multiplies together `(prime, exponent)` pairs. Primality of the keys is
    /// the caller's responsibility.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut out = Self::one();
        for (p, e) in pairs {
            out.mul_prime_power(p, e);
        }
        out
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Number of distinct prime factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `(prime, exponent)` pairs in ascending prime order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, u64)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    /// ν_q of the represented value.
    pub fn exponent(&self, q: u64) -> u64 {
        self.factors.get(&q).copied().unwrap_or(0)
    }

    pub fn largest_prime(&self) -> Option<u64> {
        self.factors.keys().next_back().copied()
    }

    pub fn mul_prime_power(&mut self, p: u64, e: u64) {
        if e > 0 {
            *self.factors.entry(p).or_insert(0) += e;
        }
    }

    /// Divides out `p^e`; returns `false` (leaving `self` untouched) when the
    /// exponent of `p` is too small.
    pub fn try_div_prime_power(&mut self, p: u64, e: u64) -> bool {
        if e == 0 {
            return true;
        }
        match self.factors.get_mut(&p) {
            Some(have) if *have > e => {
                *have -= e;
                true
            }
            Some(have) if *have == e => {
                self.factors.remove(&p);
                true
            }
            _ => false,
        }
    }

    /// Exponent-wise sum.
    pub fn mul(&self, other: &FactoredNat) -> FactoredNat {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    pub fn mul_assign(&mut self, other: &FactoredNat) {
        for (p, e) in other.iter() {
            self.mul_prime_power(p, e);
        }
    }

    pub fn pow(&self, k: u64) -> FactoredNat {
        if k == 0 {
            return Self::one();
        }
        FactoredNat {
            factors: self.factors.iter().map(|(&p, &e)| (p, e * k)).collect(),
        }
    }

    /// Exponent-wise difference, or the smallest prime at which `other`
    /// exceeds `self`.
    pub fn div_exact(&self, other: &FactoredNat) -> Result<FactoredNat, NotDivisible> {
        let mut out = self.clone();
        for (p, e) in other.iter() {
            if !out.try_div_prime_power(p, e) {
                return Err(NotDivisible { witness: p });
            }
        }
        Ok(out)
    }

    pub fn divides(&self, other: &FactoredNat) -> bool {
        self.iter().all(|(p, e)| other.exponent(p) >= e)
    }

    /// Natural logarithm of the represented value.
    pub fn ln(&self) -> f64 {
        self.iter().map(|(p, e)| e as f64 * (p as f64).ln()).sum()
    }

    /// Upper estimate of the bit length of the expanded value.
    pub fn bit_estimate(&self) -> u64 {
        let bits: f64 = self.iter().map(|(p, e)| e as f64 * (p as f64).log2()).sum();
        (bits * (1.0 + 1e-12)).floor() as u64 + 1
    }

    /// Compares represented magnitudes. Uses `Σ e·log p` when the gap is
    /// clearly beyond floating-point error, exact expansion of the
    /// non-shared part otherwise.
    pub fn cmp_magnitude(&self, other: &FactoredNat) -> Ordering {
        let mut gap = 0.0f64;
        let mut weight = 0.0f64;
        let mut keys: Vec<u64> = self
            .factors
            .keys()
            .chain(other.factors.keys())
            .copied()
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let mut left = FactoredNat::one();
        let mut right = FactoredNat::one();
        for p in keys {
            let (a, b) = (self.exponent(p), other.exponent(p));
            let lp = (p as f64).ln();
            gap += (a as f64 - b as f64) * lp;
            weight += (a.abs_diff(b)) as f64 * lp;
            match a.cmp(&b) {
                Ordering::Greater => left.mul_prime_power(p, a - b),
                Ordering::Less => right.mul_prime_power(p, b - a),
                Ordering::Equal => {}
            }
        }
        let slack = CMP_LOG_SLACK.max(8.0 * f64::EPSILON * weight);
        if gap > slack {
            Ordering::Greater
        } else if gap < -slack {
            Ordering::Less
        } else {
            left.expand_unbounded().cmp(&right.expand_unbounded())
        }
    }

    /// The represented integer, refusing values above `cap_bits` bits.
    pub fn expand(&self, cap_bits: u64) -> Result<BigUint> {
        let bits = self.bit_estimate();
        if bits > cap_bits.saturating_add(1) {
            return Err(Error::BitCap {
                bits,
                cap: cap_bits,
                context: None,
            });
        }
        Ok(self.expand_unbounded())
    }

    pub(crate) fn expand_unbounded(&self) -> BigUint {
        let twos = self.exponent(2);
        let powers: Vec<BigUint> = self
            .iter()
            .filter(|&(p, _)| p != 2)
            .map(|(p, e)| big_pow(p, e))
            .collect();
        product_tree(powers) << twos
    }
}

fn big_pow(p: u64, e: u64) -> BigUint {
    let exp = u32::try_from(e).expect("exponent fits in u32");
    BigUint::from(p).pow(exp)
}

/// Balanced product of a list of big integers.
pub(crate) fn product_tree(mut v: Vec<BigUint>) -> BigUint {
    if v.is_empty() {
        return BigUint::one();
    }
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a * b),
                None => next.push(a),
            }
        }
        v = next;
    }
    v.pop().unwrap()
}

impl std::ops::Mul for &FactoredNat {
    type Output = FactoredNat;
    fn mul(self, rhs: &FactoredNat) -> FactoredNat {
        FactoredNat::mul(self, rhs)
    }
}

impl fmt::Display for FactoredNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for (p, e) in self.iter() {
            if !first {
                f.write_str(" * ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// A positive rational as a map `prime -> nonzero exponent`. The empty map is 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FactoredRat {
    factors: BTreeMap<u64, i64>,
}

impl FactoredRat {
    pub fn one() -> Self {
        Self::default()
    }

    /// `num/den` for positive integers, reduced through factorization.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::arg(format!(
                "{num}/{den} is not a positive rational"
            )));
        }
        let mut out = FactoredRat::from(&factor_u64(num));
        out.mul_assign(&FactoredRat::from(&factor_u64(den)).inv());
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, q: u64) -> i64 {
        self.factors.get(&q).copied().unwrap_or(0)
    }

    fn add_exp(&mut self, p: u64, e: i64) {
        if e == 0 {
            return;
        }
        let slot = self.factors.entry(p).or_insert(0);
        *slot += e;
        if *slot == 0 {
            self.factors.remove(&p);
        }
    }

    pub fn mul_assign(&mut self, other: &FactoredRat) {
        for (p, e) in other.iter() {
            self.add_exp(p, e);
        }
    }

    pub fn mul(&self, other: &FactoredRat) -> FactoredRat {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    pub fn inv(&self) -> FactoredRat {
        FactoredRat {
            factors: self.factors.iter().map(|(&p, &e)| (p, -e)).collect(),
        }
    }

    /// Numerator and denominator in lowest terms.
    pub fn split(&self) -> (FactoredNat, FactoredNat) {
        let num = FactoredNat::from_pairs(
            self.iter()
                .filter(|&(_, e)| e > 0)
                .map(|(p, e)| (p, e as u64)),
        );
        let den = FactoredNat::from_pairs(
            self.iter()
                .filter(|&(_, e)| e < 0)
                .map(|(p, e)| (p, e.unsigned_abs())),
        );
        (num, den)
    }

    /// The value as a natural number, when it is one.
    pub fn to_nat(&self) -> Option<FactoredNat> {
        if self.factors.values().any(|&e| e < 0) {
            None
        } else {
            Some(self.split().0)
        }
    }

    pub fn ln(&self) -> f64 {
        self.iter().map(|(p, e)| e as f64 * (p as f64).ln()).sum()
    }
}

impl From<&FactoredNat> for FactoredRat {
    fn from(n: &FactoredNat) -> Self {
        FactoredRat {
            factors: n.iter().map(|(p, e)| (p, e as i64)).collect(),
        }
    }
}

impl fmt::Display for FactoredRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (num, den) = self.split();
        if den.is_one() {
            write!(f, "{num}")
        } else {
            write!(f, "({num}) / ({den})")
        }
    }
}

/// ν_q for factored naturals and rationals.
pub trait Valuation {
    fn valuation(&self, q: u64) -> i64;
}

impl Valuation for FactoredNat {
    fn valuation(&self, q: u64) -> i64 {
        self.exponent(q) as i64
    }
}

impl Valuation for FactoredRat {
    fn valuation(&self, q: u64) -> i64 {
        self.exponent(q)
    }
}

// --- serialization -------------------------------------------------------

impl Serialize for FactoredNat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.len()))?;
        for (p, e) in self.iter() {
            map.serialize_entry(&p.to_string(), &e.to_string())?;
        }
        map.end()
    }
}

impl Serialize for FactoredRat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.factors.len()))?;
        for (p, e) in self.iter() {
            map.serialize_entry(&p.to_string(), &e.to_string())?;
        }
        map.end()
    }
}

struct FactorMapVisitor<const SIGNED: bool>;

impl<'de, const SIGNED: bool> Visitor<'de> for FactorMapVisitor<SIGNED> {
    type Value = BTreeMap<u64, i64>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an object mapping decimal primes to decimal exponents")
    }

    fn visit_map<A: MapAccess<'de>>(
        self,
        mut access: A,
    ) -> std::result::Result<Self::Value, A::Error> {
        let mut out = BTreeMap::new();
        while let Some((k, v)) = access.next_entry::<String, String>()? {
            let p: u64 = k
                .parse()
                .map_err(|_| de::Error::custom(format!("bad prime {k:?}")))?;
            if primality(&BigUint::from(p)) != Primality::Prime {
                return Err(de::Error::custom(format!("{p} is not prime")));
            }
            let e: i64 = v
                .parse()
                .map_err(|_| de::Error::custom(format!("bad exponent {v:?}")))?;
            if e == 0 || (!SIGNED && e < 0) {
                return Err(de::Error::custom(format!(
                    "exponent {e} not allowed for prime {p}"
                )));
            }
            if out.insert(p, e).is_some() {
                return Err(de::Error::custom(format!("duplicate prime {p}")));
            }
        }
        Ok(out)
    }
}

impl<'de> Deserialize<'de> for FactoredNat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = deserializer.deserialize_map(FactorMapVisitor::<false>)?;
        Ok(FactoredNat {
            factors: m.into_iter().map(|(p, e)| (p, e as u64)).collect(),
        })
    }
}

impl<'de> Deserialize<'de> for FactoredRat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(FactoredRat {
            factors: deserializer.deserialize_map(FactorMapVisitor::<true>)?,
        })
    }
}

// --- factoring -----------------------------------------------------------

/// Complete factorization of `1 <= n <= sieve.limit` by SPF division.
pub fn factor_small(n: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    if n == 1 {
        return Ok(FactoredNat::one());
    }
    Ok(FactoredNat::from_pairs(sieve.factor_pairs(n)?))
}

/// Complete factorization of any `u64` (trial division, then Pollard rho).
pub fn factor_u64(n: u64) -> FactoredNat {
    assert!(n > 0, "cannot factor 0");
    let mut n = n;
    let mut out = FactoredNat::one();
    for p in [2u64, 3, 5] {
        while n.is_multiple_of(p) {
            out.mul_prime_power(p, 1);
            n /= p;
        }
    }
    let mut d = 7u64;
    let mut step = [4u64, 2, 4, 2, 4, 6, 2, 6].iter().cycle();
    while d <= 1 << 16 && d * d <= n {
        while n.is_multiple_of(d) {
            out.mul_prime_power(d, 1);
            n /= d;
        }
        d += step.next().unwrap();
    }
    if n > 1 {
        let rest = factor_big(&BigUint::from(n), 0, u64::MAX).expect("n >= 1");
        debug_assert!(rest.is_complete());
        out.mul_assign(&rest.factored_part);
    }
    out
}

/// Outcome of a primality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    Prime,
    Composite,
    /// Passed every witness but lies above [`MR_CERTIFIED_BOUND`].
    ProbablePrime,
}

/// Miller–Rabin with the bases 2..=41; a proof below [`MR_CERTIFIED_BOUND`].
pub fn primality(n: &BigUint) -> Primality {
    let two = BigUint::from(2u32);
    if *n < two {
        return Primality::Composite;
    }
    for &w in &MR_WITNESSES {
        if *n == BigUint::from(w) {
            return Primality::Prime;
        }
        if (n % w).is_zero() {
            return Primality::Composite;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &w in &MR_WITNESSES {
        let mut x = BigUint::from(w).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return Primality::Composite;
    }
    let certified = n.to_u128().is_some_and(|v| v < MR_CERTIFIED_BOUND);
    if certified {
        Primality::Prime
    } else {
        Primality::ProbablePrime
    }
}

/// Status of the unfactored remainder of a [`PartialFactorization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CofactorKind {
    /// Cofactor is 1; the factorization is complete.
    Unit,
    /// A certified prime too large to store as a map key.
    Prime,
    /// Known composite that the rho budget did not split.
    Composite,
    /// Passed Miller–Rabin but is beyond the certified range.
    Unknown,
}

/// `value = factored_part × cofactor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialFactorization {
    pub factored_part: FactoredNat,
    #[serde(serialize_with = "serialize_decimal")]
    pub cofactor: BigUint,
    pub cofactor_kind: CofactorKind,
}

pub(crate) fn serialize_decimal<S: Serializer>(
    v: &BigUint,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl PartialFactorization {
    pub fn is_complete(&self) -> bool {
        self.cofactor_kind == CofactorKind::Unit
    }

    pub fn value(&self) -> BigUint {
        self.factored_part.expand_unbounded() * &self.cofactor
    }

    /// Largest prime known to divide the value.
    pub fn largest_known_prime(&self) -> Option<BigUint> {
        let from_map = self.factored_part.largest_prime().map(BigUint::from);
        if self.cofactor_kind == CofactorKind::Prime {
            Some(from_map.map_or(self.cofactor.clone(), |p| p.max(self.cofactor.clone())))
        } else {
            from_map
        }
    }
}

/// Trial division to `trial_bound`, then Pollard rho (Brent) with an
/// iteration budget of `effort` per composite.
pub fn factor_big(n: &BigUint, trial_bound: u64, effort: u64) -> Result<PartialFactorization> {
    let primes = if trial_bound >= 2 {
        PrimeSieve::new(trial_bound)?.primes().to_vec()
    } else {
        Vec::new()
    };
    factor_big_with_primes(n, &primes, effort)
}

fn rem_u64(limbs: &[u64], p: u64) -> u64 {
    let mut r: u128 = 0;
    for &limb in limbs.iter().rev() {
        r = ((r << 64) | limb as u128) % p as u128;
    }
    r as u64
}

/// Divides every prime in `primes` out of `n`, stopping early once the
/// remainder is below the square of the next trial prime.
pub(crate) fn trial_divide(n: &BigUint, primes: &[u32]) -> (FactoredNat, BigUint) {
    let mut rest = n.clone();
    let mut found = FactoredNat::one();
    let mut limbs = rest.to_u64_digits();
    for &p in primes {
        let p = p as u64;
        if rest.is_one() {
            break;
        }
        if let Some(r) = rest.to_u128() {
            if (p as u128) * (p as u128) > r {
                break;
            }
        }
        if rem_u64(&limbs, p) == 0 {
            let mut e = 0;
            loop {
                let (q, r) = rest.div_rem(&BigUint::from(p));
                if !r.is_zero() {
                    break;
                }
                rest = q;
                e += 1;
            }
            found.mul_prime_power(p, e);
            limbs = rest.to_u64_digits();
        }
    }
    // what is left is 1, a prime, or has no factor among `primes`
    if let (Some(r), Some(&last)) = (rest.to_u64(), primes.last()) {
        if r > 1 && r as u128 <= (last as u128) * (last as u128) {
            // no factor up to the largest trial prime and below its square: prime
            found.mul_prime_power(r, 1);
            rest = BigUint::one();
        }
    }
    (found, rest)
}

/// Divides each of `primes` out of `n` completely, with no primality
/// inference on the remainder.
pub(crate) fn divide_over(n: &BigUint, primes: &[u64]) -> (FactoredNat, BigUint) {
    let mut rest = n.clone();
    let mut found = FactoredNat::one();
    let mut limbs = rest.to_u64_digits();
    for &p in primes {
        if rest.is_one() {
            break;
        }
        if rem_u64(&limbs, p) == 0 {
            let mut e = 0;
            while rem_u64(&limbs, p) == 0 {
                rest /= p;
                limbs = rest.to_u64_digits();
                e += 1;
            }
            found.mul_prime_power(p, e);
        }
    }
    (found, rest)
}

pub(crate) fn factor_big_with_primes(
    n: &BigUint,
    primes: &[u32],
    effort: u64,
) -> Result<PartialFactorization> {
    if n.is_zero() {
        return Err(Error::arg("cannot factor 0"));
    }
    let (mut factored_part, rest) = trial_divide(n, primes);
    let mut leftovers: Vec<(BigUint, CofactorKind)> = Vec::new();
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        match primality(&m) {
            Primality::Prime => match m.to_u64() {
                Some(p) => factored_part.mul_prime_power(p, 1),
                None => leftovers.push((m, CofactorKind::Prime)),
            },
            Primality::ProbablePrime => leftovers.push((m, CofactorKind::Unknown)),
            Primality::Composite => match pollard_brent_split(&m, effort) {
                Some(d) => {
                    let other = &m / &d;
                    stack.push(d);
                    stack.push(other);
                }
                None => leftovers.push((m, CofactorKind::Composite)),
            },
        }
    }
    let (cofactor, cofactor_kind) = match leftovers.len() {
        0 => (BigUint::one(), CofactorKind::Unit),
        1 => leftovers.pop().unwrap(),
        _ => (
            leftovers
                .into_iter()
                .fold(BigUint::one(), |acc, (v, _)| acc * v),
            CofactorKind::Composite,
        ),
    };
    Ok(PartialFactorization {
        factored_part,
        cofactor,
        cofactor_kind,
    })
}

/// A nontrivial divisor of the composite `n`, trying polynomials
/// `x² + c` for `c = 1, 2, ...` until `budget` iterations are spent.
pub fn pollard_brent_split(n: &BigUint, budget: u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let mut remaining = budget;
    let mut c = 1u64;
    while remaining > 0 {
        match brent(n, &BigUint::from(c), &mut remaining) {
            Some(d) if d != *n => return Some(d),
            _ => c += 1,
        }
    }
    None
}

fn brent(n: &BigUint, c: &BigUint, remaining: &mut u64) -> Option<BigUint> {
    const BATCH: u64 = 128;
    let one = BigUint::one();
    let step = |y: &BigUint| (y * y + c) % n;
    let abs_diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };

    let mut y = BigUint::from(2u32);
    let mut x = y.clone();
    let mut ys = y.clone();
    let mut q = one.clone();
    let mut g = one.clone();
    let mut r: u64 = 1;
    while g == one {
        x = y.clone();
        for _ in 0..r {
            y = step(&y);
        }
        let mut k = 0;
        while k < r && g == one {
            ys = y.clone();
            let batch = BATCH.min(r - k);
            for _ in 0..batch {
                y = step(&y);
                q = (q * abs_diff(&x, &y)) % n;
            }
            g = q.gcd(n);
            k += batch;
        }
        let spent = 2 * r;
        if *remaining <= spent {
            *remaining = 0;
            if g == one {
                return None;
            }
        } else {
            *remaining -= spent;
        }
        r *= 2;
    }
    if g == *n {
        // batch overshot; replay one step at a time
        loop {
            ys = step(&ys);
            g = abs_diff(&x, &ys).gcd(n);
            if g > one {
                break;
            }
        }
    }
    if g == *n {
        None
    } else {
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::build_sieve;
    use proptest::prelude::*;

    fn nat(pairs: &[(u64, u64)]) -> FactoredNat {
        FactoredNat::from_pairs(pairs.iter().copied())
    }

    fn big_factorial(n: u64) -> BigUint {
        (1..=n).fold(BigUint::one(), |acc, k| acc * k)
    }

    fn factored_factorial(n: u64) -> FactoredNat {
        let mut out = FactoredNat::one();
        for k in 2..=n {
            out.mul_assign(&factor_u64(k));
        }
        out
    }

    #[test]
    fn mul_examples() {
        assert_eq!(
            nat(&[(2, 3)]).mul(&nat(&[(2, 1), (3, 1)])),
            nat(&[(2, 4), (3, 1)])
        );
        assert_eq!(FactoredNat::one().mul(&nat(&[(5, 2)])), nat(&[(5, 2)]));
        let prod = factored_factorial(10).mul(&factored_factorial(5));
        assert_eq!(
            prod.expand(1 << 20).unwrap(),
            big_factorial(10) * big_factorial(5)
        );
    }

    #[test]
    fn div_exact_examples() {
        assert_eq!(
            nat(&[(2, 4), (3, 1)]).div_exact(&nat(&[(2, 1)])),
            Ok(nat(&[(2, 3), (3, 1)]))
        );
        assert_eq!(
            nat(&[(2, 1)]).div_exact(&nat(&[(3, 1)])),
            Err(NotDivisible { witness: 3 })
        );
        assert_eq!(
            factored_factorial(10).div_exact(&factored_factorial(7)),
            Ok(nat(&[(2, 4), (3, 2), (5, 1)]))
        );
        // witness is the smallest failing prime
        assert_eq!(
            nat(&[(7, 1)]).div_exact(&nat(&[(3, 1), (5, 1)])),
            Err(NotDivisible { witness: 3 })
        );
    }

    #[test]
    fn cmp_examples() {
        assert_eq!(
            nat(&[(2, 10)]).cmp_magnitude(&nat(&[(3, 6)])),
            Ordering::Greater
        );
        assert_eq!(
            nat(&[(2, 2), (3, 1)]).cmp_magnitude(&nat(&[(2, 2), (3, 1)])),
            Ordering::Equal
        );
        let rhs = factored_factorial(19).mul(&nat(&[(2, 4)]));
        assert_eq!(
            factored_factorial(20).cmp_magnitude(&rhs),
            Ordering::Greater
        );
        assert_eq!(
            nat(&[(2, 84)]).cmp_magnitude(&nat(&[(3, 53)])),
            BigUint::from(2u32)
                .pow(84)
                .cmp(&BigUint::from(3u32).pow(53))
        );
    }

    #[test]
    fn expand_examples() {
        assert_eq!(
            nat(&[(2, 3), (3, 2)]).expand(64).unwrap(),
            BigUint::from(72u32)
        );
        assert_eq!(FactoredNat::one().expand(64).unwrap(), BigUint::one());
        assert_eq!(
            factored_factorial(12).expand(64).unwrap(),
            BigUint::from(479_001_600u32)
        );
        assert!(matches!(
            nat(&[(2, 100)]).expand(64),
            Err(Error::BitCap { .. })
        ));
        assert!(nat(&[(2, 64)]).expand(65).is_ok());
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(nat(&[(2, 4), (3, 1)]).valuation(2), 4);
        assert_eq!(nat(&[(2, 4)]).valuation(5), 0);
        let alpha = FactoredRat::from_ratio(4, 9).unwrap();
        assert_eq!(alpha.valuation(3), -2);
        assert_eq!(alpha.valuation(2), 2);
    }

    #[test]
    fn rational_reduces() {
        let a = FactoredRat::from_ratio(6, 4).unwrap();
        let (num, den) = a.split();
        assert_eq!((num, den), (nat(&[(3, 1)]), nat(&[(2, 1)])));
        assert!(a.to_nat().is_none());
        assert_eq!(
            FactoredRat::from_ratio(12, 4).unwrap().to_nat(),
            Some(nat(&[(3, 1)]))
        );
        assert!(FactoredRat::from_ratio(0, 1).is_err());
        assert!(FactoredRat::from_ratio(3, 3).unwrap().is_one());
    }

    #[test]
    fn factor_small_examples() {
        let s = build_sieve(100).unwrap();
        assert_eq!(factor_small(48, &s).unwrap(), nat(&[(2, 4), (3, 1)]));
        assert_eq!(factor_small(1, &s).unwrap(), FactoredNat::one());
        assert_eq!(factor_small(97, &s).unwrap(), nat(&[(97, 1)]));
        assert!(matches!(
            factor_small(101, &s),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn factor_big_examples() {
        let r = factor_big(&BigUint::from(2047u32), 3000, DEFAULT_RHO_ITERS).unwrap();
        assert_eq!(r.factored_part, nat(&[(23, 1), (89, 1)]));
        assert!(r.is_complete());
        let r = factor_big(&BigUint::one(), 3000, DEFAULT_RHO_ITERS).unwrap();
        assert!(r.factored_part.is_one() && r.cofactor.is_one());
        let r = factor_big(&BigUint::from(536_870_911u32), 3000, DEFAULT_RHO_ITERS).unwrap();
        assert_eq!(r.factored_part, nat(&[(233, 1), (1103, 1), (2089, 1)]));
        assert!(factor_big(&BigUint::zero(), 10, 10).is_err());
    }

    #[test]
    fn factor_big_uses_rho_beyond_trial_bound() {
        // 2^62 - 1 = 3 · 715827883 · 2147483647
        let n = (BigUint::one() << 62u32) - 1u32;
        let r = factor_big(&n, 100, DEFAULT_RHO_ITERS).unwrap();
        assert_eq!(
            r.factored_part,
            nat(&[(3, 1), (715_827_883, 1), (2_147_483_647, 1)])
        );
        // no budget: the composite stays unresolved but the product is intact
        let r = factor_big(&n, 100, 0).unwrap();
        assert_eq!(r.cofactor_kind, CofactorKind::Composite);
        assert_eq!(r.value(), n);
    }

    #[test]
    fn large_prime_cofactor_is_flagged() {
        // 2^64 + 13 is prime, above u64 and below the certified bound
        let n = (BigUint::one() << 64u32) + 13u32;
        let r = factor_big(&n, 1000, 1000).unwrap();
        assert_eq!(r.cofactor_kind, CofactorKind::Prime);
        assert_eq!(r.largest_known_prime(), Some(n));
        // 2^89 - 1 is prime but beyond certification
        let n = (BigUint::one() << 89u32) - 1u32;
        assert_eq!(primality(&n), Primality::ProbablePrime);
        let r = factor_big(&n, 1000, 1000).unwrap();
        assert_eq!(r.cofactor_kind, CofactorKind::Unknown);
    }

    #[test]
    fn primality_matches_trial_division() {
        let s = build_sieve(20_000).unwrap();
        for n in 0..20_000u64 {
            assert_eq!(
                primality(&BigUint::from(n)) == Primality::Prime,
                s.is_prime(n),
                "n={n}"
            );
        }
        // strong pseudoprime to bases 2..37, caught by base 41
        let psi12 = BigUint::parse_bytes(b"318665857834031151167461", 10).unwrap();
        assert_eq!(primality(&psi12), Primality::Composite);
    }

    #[test]
    fn json_keys_ascending_numeric() {
        let a = nat(&[(11, 1), (2, 3), (3, 12)]);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            r#"{"2":"3","3":"12","11":"1"}"#
        );
        let r = FactoredRat::from_ratio(4, 9).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"2":"2","3":"-2"}"#);
        assert!(
            serde_json::from_str::<FactoredNat>(r#"{"4":"1"}"#).is_err()
        );
        assert!(serde_json::from_str::<FactoredNat>(r#"{"2":"-1"}"#).is_err());
        assert!(serde_json::from_str::<FactoredNat>(r#"{"2":"0"}"#).is_err());
    }

    fn small_nat() -> impl Strategy<Value = FactoredNat> {
        proptest::collection::btree_map(
            prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 101, 65_537]),
            1u64..60,
            0..5,
        )
        .prop_map(|m| FactoredNat { factors: m })
    }

    proptest! {
        #[test]
        fn expand_is_multiplicative(a in small_nat(), b in small_nat()) {
            prop_assert_eq!(a.mul(&b).expand(1 << 16).unwrap(), a.expand(1 << 16).unwrap() * b.expand(1 << 16).unwrap());
        }

        #[test]
        fn div_undoes_mul(a in small_nat(), b in small_nat()) {
            prop_assert_eq!(a.mul(&b).div_exact(&b), Ok(a));
        }

        #[test]
        fn cmp_agrees_with_big_integers(a in small_nat(), b in small_nat()) {
            prop_assert_eq!(a.cmp_magnitude(&b), a.expand_unbounded().cmp(&b.expand_unbounded()));
        }

        #[test]
        fn json_round_trip(a in small_nat()) {
            let s = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<FactoredNat>(&s).unwrap(), a);
        }

        #[test]
        fn factor_big_multiplies_back(n in 1u64..u64::MAX) {
            let r = factor_big(&BigUint::from(n), 50, DEFAULT_RHO_ITERS).unwrap();
            prop_assert!(r.is_complete());
            prop_assert_eq!(r.value(), BigUint::from(n));
            for (p, _) in r.factored_part.iter() {
                prop_assert_eq!(primality(&BigUint::from(p)), Primality::Prime);
            }
            prop_assert_eq!(factor_u64(n), r.factored_part);
        }
    }
}
