//! Bhargava generalized factorials.
//!
//! Closed forms cover the integers, arithmetic progressions `sℤ + t` and the
//! squares. Any other set goes through the p-ordering engine: for each prime
//! p, greedily pick `a_0, a_1, ...` from the set with `a_k` minimizing
//! `ν_p(∏_{i<k}(a_k − a_i))`; the minimum reached at step m is `ν_p(m!_S)`.
//!
//! Infinite sets are handled by truncation. A result is accepted once two
//! successive truncation lengths (starting at `4(m+1)`, doubling each round)
//! agree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factored::{factor_u64, FactoredNat};
use crate::primes::PrimeSieve;
use crate::valuations::factorial_any;

/// Default number of truncation doublings for the stability protocol.
pub const DEFAULT_STABILITY_DOUBLINGS: u32 = 3;

/// A subset of ℤ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetSpec {
    Integers,
    /// `{s·x + t : x ∈ ℤ}`, `s >= 1`.
    Ap {
        s: u64,
        t: i64,
    },
    /// `{x² : x ∈ ℤ}`.
    Squares,
    /// A finite, strictly ascending set.
    Explicit(Vec<i64>),
}

impl SetSpec {
    pub fn ap(s: u64, t: i64) -> Result<Self> {
        if s == 0 {
            return Err(Error::arg("arithmetic progression needs s >= 1"));
        }
        Ok(SetSpec::Ap { s, t })
    }

    pub fn explicit(elements: Vec<i64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::arg("explicit set needs at least one element"));
        }
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("explicit set must be strictly ascending"));
        }
        Ok(SetSpec::Explicit(elements))
    }

    /// The first `len` elements used to approximate the set.
    pub fn truncation(&self, len: usize) -> Vec<i64> {
        match self {
            SetSpec::Integers => (0..len as i64).collect(),
            SetSpec::Ap { s, t } => (0..len as i64).map(|i| t + *s as i64 * i).collect(),
            SetSpec::Squares => (0..len as i64).map(|i| i * i).collect(),
            SetSpec::Explicit(v) => v.iter().take(len).copied().collect(),
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Integers => f.write_str("Z"),
            SetSpec::Ap { s, t } => write!(f, "ap:{s},{t}"),
            SetSpec::Squares => f.write_str("squares"),
            SetSpec::Explicit(v) => {
                f.write_str("explicit:")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SetSpec {
    type Err = Error;

    /// `Z`, `ap:s,t`, `squares` or `explicit:a,b,c,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |what: &str| Error::arg(format!("bad set spec {s:?}: {what}"));
        if s == "Z" || s.eq_ignore_ascii_case("integers") {
            return Ok(SetSpec::Integers);
        }
        if s.eq_ignore_ascii_case("squares") {
            return Ok(SetSpec::Squares);
        }
        if let Some(rest) = s.strip_prefix("ap:") {
            let (a, b) = rest.split_once(',').ok_or_else(|| bad("expected ap:s,t"))?;
            let step: u64 = a
                .trim()
                .parse()
                .map_err(|_| bad("s must be a positive integer"))?;
            let offset: i64 = b.trim().parse().map_err(|_| bad("t must be an integer"))?;
            return SetSpec::ap(step, offset);
        }
        if let Some(rest) = s.strip_prefix("explicit:") {
            let elements = rest
                .split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("elements must be integers"))?;
            return SetSpec::explicit(elements);
        }
        Err(bad("expected Z, ap:s,t, squares or explicit:a,b,..."))
    }
}

impl Serialize for SetSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SetSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// m!_S for the three closed-form families: m!, s^m·m!, (2m)!/2.
///
/// `0!_T` is defined as 1 (the closed form would give 1/2).
pub fn bhargava_closed(spec: &SetSpec, m: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    match spec {
        SetSpec::Integers => factorial_any(m, sieve),
        SetSpec::Ap { s, .. } => {
            let mut out = factorial_any(m, sieve)?;
            out.mul_assign(&factor_u64(*s).pow(m));
            Ok(out)
        }
        SetSpec::Squares => {
            if m == 0 {
                return Ok(FactoredNat::one());
            }
            let mut out = factorial_any(2 * m, sieve)?;
            let ok = out.try_div_prime_power(2, 1);
            debug_assert!(ok);
            Ok(out)
        }
        SetSpec::Explicit(_) => Err(Error::arg(
            "explicit sets have no closed form; use the p-ordering engine",
        )),
    }
}

fn nu_p(mut x: u128, p: u128) -> u64 {
    let mut e = 0;
    while x.is_multiple_of(p) {
        x /= p;
        e += 1;
    }
    e
}

/// The minimal valuations `v_p(0), ..., v_p(m)` of a greedy p-ordering of
/// `elements`. Ties go to the earliest element.
pub fn p_sequence(elements: &[i64], p: u64, m: usize) -> Vec<u64> {
    assert!(elements.len() > m, "need at least m + 1 elements");
    let p = p as u128;
    let mut acc = vec![0u64; elements.len()];
    let mut used = vec![false; elements.len()];
    let mut out = Vec::with_capacity(m + 1);
    let mut last = 0usize;
    used[0] = true;
    out.push(0);
    for _ in 1..=m {
        let a = elements[last];
        let mut best: Option<usize> = None;
        for (i, &x) in elements.iter().enumerate() {
            if used[i] {
                continue;
            }
            acc[i] += nu_p((x as i128 - a as i128).unsigned_abs(), p);
            if best.is_none_or(|b| acc[i] < acc[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("an unused element remains");
        used[b] = true;
        out.push(acc[b]);
        last = b;
    }
    out
}

/// True when at least `m + 1` residue classes mod p occur in `elements`;
/// then the greedy ordering never pays a factor of p in its first m steps.
fn enough_residues(elements: &[i64], p: u64, m: usize) -> bool {
    let mut seen: Vec<u64> = Vec::with_capacity(m + 1);
    for &x in elements {
        let r = (x as i128).rem_euclid(p as i128) as u64;
        if !seen.contains(&r) {
            seen.push(r);
            if seen.len() > m {
                return true;
            }
        }
    }
    false
}

/// m!_S of a finite set, examining the given primes.
pub fn bhargava_finite(elements: &[i64], m: u64, primes: &[u64]) -> Result<FactoredNat> {
    let m = m as usize;
    if elements.len() <= m {
        return Err(Error::arg(format!(
            "set has {} elements, need at least m + 1 = {}",
            elements.len(),
            m + 1
        )));
    }
    if elements.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("elements must be strictly ascending"));
    }
    let mut out = FactoredNat::one();
    if m == 0 {
        return Ok(out);
    }
    for &p in primes {
        if enough_residues(elements, p, m) {
            continue;
        }
        out.mul_prime_power(p, p_sequence(elements, p, m)[m]);
    }
    Ok(out)
}

/// Primes up to the largest pairwise difference of `elements`.
fn primes_for(elements: &[i64]) -> Result<Vec<u64>> {
    let span = match (elements.first(), elements.last()) {
        (Some(&lo), Some(&hi)) => (hi as i128 - lo as i128) as u64,
        _ => 0,
    };
    if span < 2 {
        return Ok(Vec::new());
    }
    Ok(PrimeSieve::new(span)?
        .primes()
        .iter()
        .map(|&p| p as u64)
        .collect())
}

/// One truncation round of the stability protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Round {
    pub truncation_len: usize,
    pub value: FactoredNat,
}

/// Outcome of the p-ordering engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeneralOutcome {
    /// Finite sets are computed exactly; infinite ones after two rounds agree.
    Stable {
        value: FactoredNat,
        rounds: Vec<Round>,
    },
    StabilityNotReached {
        rounds: Vec<Round>,
    },
}

impl GeneralOutcome {
    pub fn value(&self) -> Option<&FactoredNat> {
        match self {
            GeneralOutcome::Stable { value, .. } => Some(value),
            GeneralOutcome::StabilityNotReached { .. } => None,
        }
    }
}

/// m!_S through p-orderings. Explicit sets are used as given; the other
/// families are truncated to `4(m+1)` elements and doubled up to
/// `stability_doublings` times until two rounds agree.
pub fn bhargava_general(
    spec: &SetSpec,
    m: u64,
    stability_doublings: u32,
) -> Result<GeneralOutcome> {
    if let SetSpec::Explicit(elements) = spec {
        let value = bhargava_finite(elements, m, &primes_for(elements)?)?;
        return Ok(GeneralOutcome::Stable {
            rounds: vec![Round {
                truncation_len: elements.len(),
                value: value.clone(),
            }],
            value,
        });
    }
    let mut len = 4 * (m as usize + 1);
    let mut rounds: Vec<Round> = Vec::new();
    for _ in 0..=stability_doublings {
        let elements = spec.truncation(len);
        let value = bhargava_finite(&elements, m, &primes_for(&elements)?)?;
        let agrees = rounds.last().is_some_and(|r| r.value == value);
        rounds.push(Round {
            truncation_len: len,
            value: value.clone(),
        });
        if agrees {
            return Ok(GeneralOutcome::Stable { value, rounds });
        }
        len *= 2;
    }
    Ok(GeneralOutcome::StabilityNotReached { rounds })
}
