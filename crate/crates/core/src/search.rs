//! Exhaustive, certificate-producing enumeration of the solutions of
//! `α·m₁!_{S₁}⋯m_r!_{S_r} = f(n!)`.
//!
//! For each n the right-hand side is brought to factored form and divided
//! by α, giving a target T that the product `∏ g_i(m_i)` must equal, where
//! `g_i(m) = m!_{S_i}`. Each `g_i` is strictly increasing in `m ≥ 1` and
//! `g_i(m) | g_i(m+1)`, so the recursion walks `m` upwards, subtracting the
//! exponents of `g_i(m)/g_i(m−1)` from T, and stops at the first prime that
//! goes negative. The last position is matched exactly: a log-magnitude
//! binary search proposes the only possible `m` and the exponents confirm it.
//!
//! σ_k(n!) for k ≥ 1 is trial divided by every prime that can occur in a
//! left-hand side of admissible size. A remainder other than 1 proves there
//! is no solution at that n; otherwise the value is fully factored and takes
//! the same path as φ and σ₀.
//!
//! Tuples are canonical when `m` is nondecreasing across positions that share
//! a set; positions with different sets are independent. With all sets equal
//! this is `m₁ ≤ … ≤ m_r`. Every `m_i ≥ 1`.

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arithfun::{phi_factorial, sigma0_factorial, sigma_k_pieces, ArithFn};
use crate::bhargava::{bhargava_closed, SetSpec};
use crate::error::{Error, Result};
use crate::factored::{
    divide_over, factor_small, factor_u64, FactoredNat, FactoredRat, DEFAULT_BIT_CAP,
};
use crate::primes::PrimeSieve;
use crate::valuations::digit_sum;

pub const SEARCH_SCHEMA: &str = "arithfact.search/1";

/// Largest n accepted by default for φ and σ₀.
pub const DEFAULT_N_CAP_FACTORED: u64 = 100_000;
/// Largest n accepted by default for σ_k, k ≥ 1.
pub const DEFAULT_N_CAP_SIGMA_K: u64 = 2_000;

/// One equation instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSpec {
    pub f: ArithFn,
    pub alpha: FactoredRat,
    pub sets: Vec<SetSpec>,
}

impl EquationSpec {
    pub fn new(f: ArithFn, alpha: FactoredRat, sets: Vec<SetSpec>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::arg(
                "need at least one factorial on the left-hand side",
            ));
        }
        if sets.iter().any(|s| matches!(s, SetSpec::Explicit(_))) {
            return Err(Error::arg(
                "search supports Z, ap:s,t and squares sets only",
            ));
        }
        Ok(EquationSpec { f, alpha, sets })
    }

    pub fn r(&self) -> usize {
        self.sets.len()
    }

    /// α as `a/b` in lowest terms.
    pub fn alpha_string(&self) -> String {
        let (num, den) = self.alpha.split();
        let (num, den) = (num.expand_unbounded(), den.expand_unbounded());
        format!("{num}/{den}")
    }

    /// The default n limit for this function family.
    pub fn default_n_cap(&self) -> u64 {
        match self.f {
            ArithFn::Phi | ArithFn::Sigma(0) => DEFAULT_N_CAP_FACTORED,
            ArithFn::Sigma(_) => DEFAULT_N_CAP_SIGMA_K,
        }
    }
}

impl fmt::Display for EquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} *", self.alpha_string())?;
        for (i, s) in self.sets.iter().enumerate() {
            write!(f, " m{}!_{}", i + 1, s)?;
        }
        write!(f, " = {}(n!)", self.f)
    }
}

impl Serialize for EquationSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Echo<'a> {
            f: ArithFn,
            alpha: String,
            alpha_factored: &'a FactoredRat,
            r: usize,
            sets: &'a [SetSpec],
        }
        Echo {
            f: self.f,
            alpha: self.alpha_string(),
            alpha_factored: &self.alpha,
            r: self.r(),
            sets: &self.sets,
        }
        .serialize(s)
    }
}

/// Parses `a/b` (or `a`) with positive integers a, b.
pub fn parse_alpha(s: &str) -> Result<FactoredRat> {
    let s = s.trim();
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let parse = |x: &str| {
        x.trim()
            .parse::<u64>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| {
                Error::arg(format!(
                    "alpha must be a/b with positive integers, got {s:?}"
                ))
            })
    };
    FactoredRat::from_ratio(parse(a)?, parse(b)?)
}

/// `α·∏ m_i!_{S_i}`, when it is an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LhsValue {
    Integer(FactoredNat),
    NotInteger(FactoredRat),
}

pub fn lhs_value(spec: &EquationSpec, m: &[u64], sieve: &PrimeSieve) -> Result<LhsValue> {
    if m.len() != spec.r() {
        return Err(Error::arg(format!(
            "expected {} values of m, got {}",
            spec.r(),
            m.len()
        )));
    }
    let mut acc = spec.alpha.clone();
    for (set, &mi) in spec.sets.iter().zip(m) {
        acc.mul_assign(&FactoredRat::from(&bhargava_closed(set, mi, sieve)?));
    }
    Ok(match acc.to_nat() {
        Some(v) => LhsValue::Integer(v),
        None => LhsValue::NotInteger(acc),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Largest admissible `m_i`; `None` uses the size bound, which makes the
    /// search complete.
    pub m_cap: Option<u64>,
    pub bit_cap: u64,
    pub workers: usize,
    /// Re-verify every solution by independent big-integer evaluation.
    pub verify: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            m_cap: None,
            bit_cap: DEFAULT_BIT_CAP,
            workers: 1,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NStatus {
    Searched,
    /// f(n!)/α is not an integer.
    AlphaNotCancelled,
    /// σ_k(n!) has a prime factor no admissible left-hand side can contain.
    RhsNotSmooth,
    /// The m-cap cut off a branch that was still alive.
    Incomplete,
}

/// Per-n search statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NStats {
    pub n: u64,
    pub status: NStatus,
    pub rhs_bits: u64,
    pub nodes: u64,
    pub divisibility_cuts: u64,
    pub size_cuts: u64,
    pub exact_checks: u64,
    pub solutions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NOutcome {
    /// Canonical tuples in positional order, ascending.
    pub solutions: Vec<Vec<u64>>,
    pub stats: NStats,
}

/// ln g(m) tables and step factorizations for one set at one n.
struct SetTable {
    set: SetSpec,
    /// `steps[m]` factors `g(m)/g(m−1)` over the target's primes; `None` when
    /// it contains a prime the target lacks.
    steps: Vec<Option<Vec<(usize, u64)>>>,
    /// `lg[m] = ln g(m)`; index 0 unused.
    lg: Vec<f64>,
    size_cap: u64,
}

fn step_numbers(set: &SetSpec, m: u64) -> [u64; 2] {
    match set {
        SetSpec::Integers => [m, 1],
        SetSpec::Ap { s, .. } => [*s, m],
        SetSpec::Squares if m == 1 => [1, 1],
        SetSpec::Squares => [2 * m - 1, 2 * m],
        SetSpec::Explicit(_) => unreachable!("rejected by EquationSpec::new"),
    }
}

fn factor_any(v: u64, sieve: &PrimeSieve) -> Result<FactoredNat> {
    if v <= sieve.limit() {
        factor_small(v, sieve)
    } else {
        Ok(factor_u64(v))
    }
}

/// Largest `m` with `ln g(m) <= budget`, and the table up to it.
fn log_table(set: &SetSpec, budget: f64) -> (Vec<f64>, u64) {
    let mut lg = vec![0.0];
    let mut acc = 0.0;
    let mut m = 1u64;
    loop {
        let [a, b] = step_numbers(set, m);
        acc += (a as f64).ln() + (b as f64).ln();
        if acc > budget {
            return (lg, m - 1);
        }
        lg.push(acc);
        m += 1;
    }
}

impl SetTable {
    fn build(
        set: &SetSpec,
        ln_target: f64,
        tol: f64,
        m_limit: u64,
        universe: &[u64],
        sieve: &PrimeSieve,
    ) -> Result<Self> {
        let (mut lg, size_cap) = log_table(set, ln_target + tol);
        // one extra step beyond the cap lets the incomplete check look ahead
        let table_len = size_cap.min(m_limit).saturating_add(1).min(size_cap);
        lg.truncate(table_len as usize + 1);
        let mut steps = vec![None; 1];
        for m in 1..=table_len {
            let mut combined = FactoredNat::one();
            for v in step_numbers(set, m) {
                combined.mul_assign(&factor_any(v, sieve)?);
            }
            let mapped: Option<Vec<(usize, u64)>> = combined
                .iter()
                .map(|(p, e)| universe.binary_search(&p).ok().map(|i| (i, e)))
                .collect();
            steps.push(mapped);
        }
        Ok(SetTable {
            set: set.clone(),
            steps,
            lg,
            size_cap,
        })
    }
}

struct Walk<'a> {
    tables: Vec<&'a SetTable>,
    exps: Vec<u64>,
    nonzero: usize,
    tol: f64,
    m_cap: u64,
    chosen: Vec<u64>,
    found: Vec<Vec<u64>>,
    stats: NStats,
}

impl Walk<'_> {
    fn apply(&mut self, step: &Option<Vec<(usize, u64)>>) -> bool {
        let Some(step) = step else { return false };
        if step.iter().any(|&(i, e)| self.exps[i] < e) {
            return false;
        }
        for &(i, e) in step {
            self.exps[i] -= e;
            if self.exps[i] == 0 {
                self.nonzero -= 1;
            }
        }
        true
    }

    fn undo(&mut self, step: &Option<Vec<(usize, u64)>>) {
        for &(i, e) in step.as_ref().expect("only applied steps are undone") {
            if self.exps[i] == 0 {
                self.nonzero += 1;
            }
            self.exps[i] += e;
        }
    }

    /// Applies `g(m)` from scratch; returns how many steps went through.
    fn apply_upto(&mut self, table: &SetTable, m: u64) -> u64 {
        for j in 1..=m {
            if !self.apply(&table.steps[j as usize]) {
                return j - 1;
            }
        }
        m
    }

    fn undo_upto(&mut self, table: &SetTable, m: u64) {
        for j in (1..=m).rev() {
            self.undo(&table.steps[j as usize]);
        }
    }

    fn reach(&self, below: usize, j_set: &SetSpec, m: u64) -> f64 {
        self.tables[..below]
            .iter()
            .map(|t| {
                let mut ub = t.size_cap.min(self.m_cap);
                if t.set == *j_set {
                    ub = ub.min(m);
                }
                t.lg[ub.min(t.lg.len() as u64 - 1) as usize]
            })
            .sum()
    }

    fn walk(&mut self, j: usize, ub: u64, ln_rem: f64) {
        let table = self.tables[j];
        let bound = table.size_cap.min(ub);
        let upper = bound.min(self.m_cap);
        if j == 0 {
            let lg = &table.lg;
            let hi = upper.min(lg.len() as u64 - 1);
            let mut m = lg[1..=hi as usize].partition_point(|&v| v < ln_rem - self.tol) as u64 + 1;
            while m <= hi && lg[m as usize] <= ln_rem + self.tol {
                self.stats.exact_checks += 1;
                let done = self.apply_upto(table, m);
                if done == m && self.nonzero == 0 {
                    self.chosen[0] = m;
                    self.found.push(self.chosen.clone());
                }
                self.undo_upto(table, done);
                m += 1;
            }
            if upper < bound && lg[upper as usize] < ln_rem - self.tol {
                let done = self.apply_upto(table, upper + 1);
                if done == upper + 1 {
                    self.stats.status = NStatus::Incomplete;
                }
                self.undo_upto(table, done);
            }
            return;
        }
        let mut applied = 0;
        let mut cut = false;
        for m in 1..=upper {
            self.stats.nodes += 1;
            if !self.apply(&table.steps[m as usize]) {
                self.stats.divisibility_cuts += 1;
                cut = true;
                break;
            }
            applied = m;
            let ln_after = ln_rem - table.lg[m as usize];
            if self.reach(j, &table.set, m) + self.tol < ln_after {
                self.stats.size_cuts += 1;
                continue;
            }
            self.chosen[j] = m;
            let next_ub = if self.tables[j - 1].set == table.set {
                m
            } else {
                u64::MAX
            };
            self.walk(j - 1, next_ub, ln_after);
        }
        if !cut && upper < bound && (upper as usize + 1) < table.steps.len()
            && self.apply(&table.steps[upper as usize + 1]) {
                self.stats.status = NStatus::Incomplete;
                self.undo(&table.steps[upper as usize + 1]);
            }
        self.undo_upto(table, applied);
    }
}

fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        v.to_f64().expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        (v >> shift).to_f64().expect("fits in f64").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn log_tolerance(ln_target: f64) -> f64 {
    1e-6 + 1e-12 * ln_target.abs()
}

/// Largest prime that can divide `g(m)` for `m <= m_max`.
fn prime_reach(set: &SetSpec, m_max: u64) -> u64 {
    match set {
        SetSpec::Integers => m_max,
        SetSpec::Ap { s, .. } if m_max > 0 => m_max.max(*s),
        SetSpec::Ap { .. } => 0,
        SetSpec::Squares => 2 * m_max,
        SetSpec::Explicit(_) => unreachable!("rejected by EquationSpec::new"),
    }
}

/// f(n!) fully factored, or `None` when σ_k(n!) is not smooth over the
/// primes an admissible left-hand side can contain.
fn factored_rhs(
    spec: &EquationSpec,
    n: u64,
    sieve: &PrimeSieve,
    bit_cap: u64,
) -> Result<Option<FactoredNat>> {
    match spec.f {
        ArithFn::Phi => phi_factorial(n, sieve).map(Some),
        ArithFn::Sigma(0) => sigma0_factorial(n, sieve).map(Some),
        ArithFn::Sigma(k) => {
            let pieces = sigma_k_pieces(n, k, sieve, bit_cap)?;
            let ln_target = pieces.iter().map(ln_big).sum::<f64>() - spec.alpha.ln();
            let tol = log_tolerance(ln_target);
            let reach = spec
                .sets
                .iter()
                .map(|s| prime_reach(s, log_table(s, ln_target + tol).1))
                .max()
                .unwrap_or(0);
            let mut primes: Vec<u64> = if reach >= 2 {
                if reach <= sieve.limit() {
                    sieve
                        .primes_up_to(reach)
                        .iter()
                        .map(|&p| p as u64)
                        .collect()
                } else {
                    PrimeSieve::new(reach)?
                        .primes()
                        .iter()
                        .map(|&p| p as u64)
                        .collect()
                }
            } else {
                Vec::new()
            };
            primes.extend(
                spec.alpha
                    .split()
                    .0
                    .iter()
                    .map(|(p, _)| p)
                    .filter(|&p| p > reach),
            );
            let mut out = FactoredNat::one();
            for piece in &pieces {
                let (found, rest) = divide_over(piece, &primes);
                if !rest.is_one() {
                    return Ok(None);
                }
                out.mul_assign(&found);
            }
            Ok(Some(out))
        }
    }
}

/// Every canonical tuple solving the equation at this n.
pub fn solve_for_n(
    spec: &EquationSpec,
    n: u64,
    sieve: &PrimeSieve,
    opts: &SearchOptions,
) -> Result<NOutcome> {
    sieve.check_range("n", n)?;
    let mut stats = NStats {
        n,
        status: NStatus::Searched,
        rhs_bits: 0,
        nodes: 0,
        divisibility_cuts: 0,
        size_cuts: 0,
        exact_checks: 0,
        solutions: 0,
    };
    let Some(rhs) = factored_rhs(spec, n, sieve, opts.bit_cap)? else {
        stats.status = NStatus::RhsNotSmooth;
        return Ok(NOutcome {
            solutions: Vec::new(),
            stats,
        });
    };
    stats.rhs_bits = rhs.bit_estimate();
    let Some(target) = FactoredRat::from(&rhs).mul(&spec.alpha.inv()).to_nat() else {
        stats.status = NStatus::AlphaNotCancelled;
        return Ok(NOutcome {
            solutions: Vec::new(),
            stats,
        });
    };

    let universe: Vec<u64> = target.iter().map(|(p, _)| p).collect();
    let exps: Vec<u64> = target.iter().map(|(_, e)| e).collect();
    let ln_target = target.ln();
    let tol = log_tolerance(ln_target);
    let m_cap = opts.m_cap.unwrap_or(u64::MAX);

    // group equal sets next to each other, keeping positional order inside a group
    let mut order: Vec<usize> = (0..spec.r()).collect();
    order.sort_by(|&a, &b| spec.sets[a].cmp(&spec.sets[b]));
    let mut distinct: Vec<SetTable> = Vec::new();
    for set in &spec.sets {
        if !distinct.iter().any(|t| t.set == *set) {
            distinct.push(SetTable::build(
                set, ln_target, tol, m_cap, &universe, sieve,
            )?);
        }
    }
    let tables: Vec<&SetTable> = order
        .iter()
        .map(|&i| {
            distinct
                .iter()
                .find(|t| t.set == spec.sets[i])
                .expect("table built")
        })
        .collect();

    let mut walk = Walk {
        tables,
        nonzero: exps.iter().filter(|&&e| e > 0).count(),
        exps,
        tol,
        m_cap,
        chosen: vec![0; spec.r()],
        found: Vec::new(),
        stats,
    };
    walk.walk(spec.r() - 1, u64::MAX, ln_target);

    let mut solutions: Vec<Vec<u64>> = walk
        .found
        .iter()
        .map(|chosen| {
            let mut m = vec![0; chosen.len()];
            for (j, &pos) in order.iter().enumerate() {
                m[pos] = chosen[j];
            }
            m
        })
        .collect();
    solutions.sort();
    solutions.dedup();
    let mut stats = walk.stats;
    stats.solutions = solutions.len();
    Ok(NOutcome { solutions, stats })
}

/// Serialized value of one side of a solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub factored: FactoredNat,
    pub bits: u64,
    /// SHA-256 of the decimal expansion, when within the bit cap.
    pub sha256: Option<String>,
}

impl Certificate {
    fn new(value: FactoredNat, bit_cap: u64) -> Self {
        let sha256 = value.expand(bit_cap).ok().map(|v| {
            Sha256::digest(v.to_str_radix(10).as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect()
        });
        Certificate {
            bits: value.bit_estimate(),
            factored: value,
            sha256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    /// Both sides recomputed as big integers and compared.
    BigInteger,
    /// The values exceed the bit cap; the factored certificates still agree.
    SkippedBitCap,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionRecord {
    pub n: u64,
    pub m: Vec<u64>,
    pub lhs_certificate: Certificate,
    pub rhs_certificate: Certificate,
    pub verification: Verification,
}

fn big_factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// m!_S by direct products, independent of the factored closed forms.
fn bhargava_big(set: &SetSpec, m: u64) -> BigUint {
    match set {
        SetSpec::Integers => big_factorial(m),
        SetSpec::Ap { s, .. } => BigUint::from(*s).pow(m as u32) * big_factorial(m),
        SetSpec::Squares if m == 0 => BigUint::one(),
        SetSpec::Squares => big_factorial(2 * m) / 2u32,
        SetSpec::Explicit(_) => unreachable!("rejected by EquationSpec::new"),
    }
}

/// f(n!) as a big integer: φ by the product formula over n!, σ₀ and σ_k by
/// multiplicativity with exponents from the digit-sum form of Legendre.
fn rhs_big(f: ArithFn, n: u64, sieve: &PrimeSieve) -> BigUint {
    let primes = sieve.primes_up_to(n);
    let exponent = |p: u64| (n - digit_sum(n, p)) / (p - 1);
    match f {
        ArithFn::Phi => primes
            .iter()
            .fold(big_factorial(n), |acc, &p| acc / p * (p - 1)),
        ArithFn::Sigma(0) => primes
            .iter()
            .fold(BigUint::one(), |acc, &p| acc * (exponent(p as u64) + 1)),
        ArithFn::Sigma(k) => primes.iter().fold(BigUint::one(), |acc, &p| {
            let pk = BigUint::from(p).pow(k);
            let mut term = BigUint::one();
            let mut sum = BigUint::one();
            for _ in 0..exponent(p as u64) {
                term *= &pk;
                sum += &term;
            }
            acc * sum
        }),
    }
}

/// Builds and checks the certificates of a solution found by [`solve_for_n`].
pub fn certify(
    spec: &EquationSpec,
    n: u64,
    m: &[u64],
    sieve: &PrimeSieve,
    opts: &SearchOptions,
) -> Result<SolutionRecord> {
    let lhs = match lhs_value(spec, m, sieve)? {
        LhsValue::Integer(v) => v,
        LhsValue::NotInteger(v) => {
            return Err(Error::Internal(format!(
                "lhs {v} of reported solution is not an integer"
            )))
        }
    };
    let rhs = factored_rhs(spec, n, sieve, opts.bit_cap)?
        .ok_or_else(|| Error::Internal(format!("rhs at n = {n} became non-smooth")))?;
    if lhs != rhs {
        return Err(Error::Internal(format!(
            "certificates disagree at n = {n}, m = {m:?}"
        )));
    }
    let verification = if !opts.verify {
        Verification::Disabled
    } else if rhs.bit_estimate() > opts.bit_cap {
        Verification::SkippedBitCap
    } else {
        let (num, den) = spec.alpha.split();
        let lhs_big = m
            .iter()
            .zip(&spec.sets)
            .fold(num.expand_unbounded(), |acc, (&mi, set)| {
                acc * bhargava_big(set, mi)
            });
        let rhs_big = rhs_big(spec.f, n, sieve);
        if lhs_big != rhs_big.clone() * den.expand_unbounded() || rhs.expand_unbounded() != rhs_big
        {
            return Err(Error::Internal(format!(
                "big-integer re-verification failed at n = {n}, m = {m:?}"
            )));
        }
        Verification::BigInteger
    };
    Ok(SolutionRecord {
        n,
        m: m.to_vec(),
        lhs_certificate: Certificate::new(lhs, opts.bit_cap),
        rhs_certificate: Certificate::new(rhs, opts.bit_cap),
        verification,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conventions {
    pub m_min: u64,
    pub tuple_order: &'static str,
    pub squares_zero: &'static str,
    pub provenance: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            m_min: 1,
            tuple_order: "m nondecreasing across positions that share a set",
            squares_zero: "0!_squares = 1",
            provenance: "exhaustive enumeration by this program",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportOptions {
    pub m_cap: Option<u64>,
    pub bit_cap: u64,
    pub verify: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchReport {
    pub schema: &'static str,
    pub spec: EquationSpec,
    pub n_min: u64,
    pub n_max: u64,
    pub options: ReportOptions,
    pub conventions: Conventions,
    /// False when any n was cut short by the m-cap.
    pub complete: bool,
    /// Largest n with a solution; no solution exists in `(last_solution_n, n_max]`.
    pub last_solution_n: Option<u64>,
    pub solutions: Vec<SolutionRecord>,
    pub per_n: Vec<NStats>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SearchReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// `n,m1,...,mr`, one row per solution.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Resource(e.to_string());
        let mut header = vec!["n".to_string()];
        header.extend((1..=self.spec.r()).map(|i| format!("m{i}")));
        w.write_record(&header).map_err(io)?;
        for rec in &self.solutions {
            let mut row = vec![rec.n.to_string()];
            row.extend(rec.m.iter().map(|m| m.to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Resource(e.to_string()))
    }

    /// Solutions as `(n, m)` pairs.
    pub fn solution_pairs(&self) -> Vec<(u64, Vec<u64>)> {
        self.solutions.iter().map(|r| (r.n, r.m.clone())).collect()
    }
}

/// Runs [`solve_for_n`] over `1..=n_max` on `opts.workers` threads and
/// certifies every solution. Output order is independent of scheduling.
pub fn search(
    spec: &EquationSpec,
    n_max: u64,
    sieve: &PrimeSieve,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    let start = Instant::now();
    sieve.check_range("n_max", n_max)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("worker pool: {e}")))?;
    let per_n: Vec<(NOutcome, Vec<SolutionRecord>)> = pool.install(|| {
        (1..=n_max)
            .into_par_iter()
            .map(|n| {
                let outcome = solve_for_n(spec, n, sieve, opts)?;
                let records = outcome
                    .solutions
                    .iter()
                    .map(|m| certify(spec, n, m, sieve, opts))
                    .collect::<Result<Vec<_>>>()?;
                Ok((outcome, records))
            })
            .collect::<Result<_>>()
    })?;
    let mut solutions = Vec::new();
    let mut stats = Vec::with_capacity(per_n.len());
    for (outcome, records) in per_n {
        stats.push(outcome.stats);
        solutions.extend(records);
    }
    Ok(SearchReport {
        schema: SEARCH_SCHEMA,
        spec: spec.clone(),
        n_min: 1,
        n_max,
        options: ReportOptions {
            m_cap: opts.m_cap,
            bit_cap: opts.bit_cap,
            verify: opts.verify,
        },
        conventions: Conventions::default(),
        complete: stats.iter().all(|s| s.status != NStatus::Incomplete),
        last_solution_n: solutions.last().map(|r| r.n),
        solutions,
        per_n: stats,
        wall_time: start.elapsed(),
    })
}
