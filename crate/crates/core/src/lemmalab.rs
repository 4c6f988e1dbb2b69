//! Numerical checks of the estimates behind the finiteness arguments:
//! Legendre's error term, valuations on the intervals `I_ℓ`, the exponent of
//! q in `∏(p−1)`, the short-interval prime bound, the σ₀ valuation bound and
//! the growth of the largest prime factor of `2^N − 1`.
//!
//! Each suite produces typed records, a CSV table and a summary
//! `{checks_run, failures, extremal_constants}`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::arithfun::sigma0_factorial;
use crate::error::{Error, Result};
use crate::factored::{factor_big, factor_u64, DEFAULT_RHO_ITERS};
use crate::primes::{log_integral, PrimeSieve};
use crate::valuations::{digit_sum, legendre};

pub const VERIFY_SCHEMA: &str = "arithfact.verify/1";

/// Tolerance band for `exact / main_term` in the asymptotic check.
pub const ASYMPTOTIC_BAND: (f64, f64) = (0.9, 1.1);
/// Smallest n at which the asymptotic band is asserted.
pub const ASYMPTOTIC_MIN_N: u64 = 1_000_000;
pub const ASYMPTOTIC_QS: [u64; 4] = [2, 3, 5, 7];

/// Trial bound used before rho when factoring `2^N − 1`.
const STEWART_TRIAL_BOUND: u64 = 1 << 16;

fn require_prime(q: u64) -> Result<()> {
    let f = if q >= 2 {
        factor_u64(q)
    } else {
        Default::default()
    };
    if f.len() == 1 && f.exponent(q) == 1 {
        Ok(())
    } else {
        Err(Error::arg(format!("q must be prime, got {q}")))
    }
}

/// ν_q of `∏_{p≤n}(p−1)` three ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuQRecord {
    pub n: u64,
    pub q: u64,
    /// By factoring each p − 1 with the sieve.
    pub exact: u64,
    /// `Σ_j π(n; q^j, 1)`.
    pub counting: u64,
    /// `q/(q−1)² · li(n)`; zero for n ≤ 2.
    pub main_term: f64,
    /// `exact / main_term`, when the main term is positive.
    pub ratio: Option<f64>,
}

pub fn nu_q_prime_product(n: u64, q: u64, sieve: &PrimeSieve) -> Result<NuQRecord> {
    sieve.check_range("n", n)?;
    require_prime(q)?;
    let exact = sieve
        .primes_up_to(n)
        .par_iter()
        .map(|&p| {
            let mut m = p as u64 - 1;
            let mut e = 0;
            while m > 1 {
                let s = sieve.spf(m).expect("p - 1 is within the sieve");
                if s == q {
                    e += 1;
                }
                m /= s;
            }
            e
        })
        .sum();
    let mut counting = 0;
    let mut qj = q;
    while qj <= n {
        counting += sieve.prime_count_ap(n, qj, 1)?;
        qj = match qj.checked_mul(q) {
            Some(v) => v,
            None => break,
        };
    }
    let main_term = if n > 2 {
        q as f64 / ((q - 1) as f64).powi(2) * log_integral(n as f64)?
    } else {
        0.0
    };
    Ok(NuQRecord {
        n,
        q,
        exact,
        counting,
        main_term,
        ratio: (main_term > 0.0).then(|| exact as f64 / main_term),
    })
}

/// One interval `I_ℓ` against `π(x+y) − π(x) ≤ 2y/log y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrunRecord {
    pub n: u64,
    pub ell: u64,
    pub x: f64,
    pub y: f64,
    pub count: u64,
    pub bound: f64,
    pub ok: bool,
}

/// Intervals with `y < 3` are skipped.
pub fn brun_titchmarsh_check(n: u64, ell_max: u64, sieve: &PrimeSieve) -> Result<Vec<BrunRecord>> {
    sieve.check_range("n", n)?;
    let mut out = Vec::new();
    for ell in 1..=ell_max {
        let y = n as f64 / (ell * (ell + 1)) as f64;
        if y < 3.0 {
            continue;
        }
        let count = sieve.interval_primes(n, ell)?.len() as u64;
        let bound = 2.0 * y / y.ln();
        out.push(BrunRecord {
            n,
            ell,
            x: n as f64 / (ell + 1) as f64,
            y,
            count,
            bound,
            ok: count as f64 <= bound,
        });
    }
    Ok(out)
}

/// `ν_q(σ₀(n!)) ≥ π(n/(q−1)) − π(n/q)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sigma0Record {
    pub n: u64,
    pub q: u64,
    pub lhs: u64,
    pub rhs: u64,
    pub ok: bool,
}

pub fn sigma0_valuation_bound(n: u64, q: u64, sieve: &PrimeSieve) -> Result<Sigma0Record> {
    sieve.check_range("n", n)?;
    require_prime(q)?;
    if q * q > n {
        return Err(Error::arg(format!(
            "need q <= sqrt(n), got q = {q}, n = {n}"
        )));
    }
    let lhs = sigma0_factorial(n, sieve)?.exponent(q);
    let rhs = sieve.prime_count(n / (q - 1))? - sieve.prime_count(n / q)?;
    Ok(Sigma0Record {
        n,
        q,
        lhs,
        rhs,
        ok: lhs >= rhs,
    })
}

/// Largest prime found in `2^N − 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StewartRecord {
    #[serde(rename = "N")]
    pub exponent: u32,
    pub largest_found_prime: u64,
    pub complete: bool,
    /// `N·exp(log N / (104 log log N))`, for information.
    pub stewart_bound: Option<f64>,
    /// `largest_found_prime > N`; not asserted below 7.
    pub ok: bool,
}

pub const STEWART_MAX_N: u32 = 64;
pub const STEWART_ASSERT_FROM: u32 = 7;

pub fn stewart_check(n_min: u32, n_max: u32, effort: u64) -> Result<Vec<StewartRecord>> {
    if n_min < 2 || n_min > n_max || n_max > STEWART_MAX_N {
        return Err(Error::arg(format!(
            "need 2 <= N_min <= N_max <= {STEWART_MAX_N}, got {n_min}..{n_max}"
        )));
    }
    (n_min..=n_max)
        .into_par_iter()
        .map(|e| {
            let m = (BigUint::one() << e) - 1u32;
            let pf = factor_big(&m, STEWART_TRIAL_BOUND, effort)?;
            let largest = pf
                .largest_known_prime()
                .and_then(|p| p.to_u64())
                .unwrap_or(0);
            let nf = e as f64;
            let stewart_bound =
                (nf.ln().ln() > 0.0).then(|| nf * (nf.ln() / (104.0 * nf.ln().ln())).exp());
            Ok(StewartRecord {
                exponent: e,
                largest_found_prime: largest,
                complete: pf.is_complete(),
                stewart_bound,
                ok: e < STEWART_ASSERT_FROM || largest > e as u64,
            })
        })
        .collect()
}

/// Legendre identity and error term for one prime over `p <= N <= n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreRow {
    pub p: u64,
    pub checks: u64,
    pub identity_failures: u64,
    pub bound_failures: u64,
    /// Values of N failing either check.
    pub failures: u64,
    /// Largest `N/(p−1) − ν_p(N!)`.
    pub max_error: f64,
    pub max_error_n: u64,
    /// Largest error divided by the digit count `⌊log_p N⌋ + 1`.
    pub max_constant: f64,
}

fn digits(mut n: u64, p: u64) -> u64 {
    let mut d = 0;
    while n > 0 {
        n /= p;
        d += 1;
    }
    d
}

fn is_prime_u64(x: u64) -> bool {
    x >= 2 && factor_u64(x).iter().all(|(p, _)| p == x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreSweep {
    pub rows: Vec<LegendreRow>,
    /// Checks of `ν_p(N!) = 0` and `N/(p−1) <= 1` for p the least prime above N.
    pub above_checks: u64,
    pub above_failures: u64,
    pub above_max_ratio: f64,
}

pub fn legendre_error_sweep(n_max: u64, sieve: &PrimeSieve) -> Result<LegendreSweep> {
    sieve.check_range("n_max", n_max)?;
    let rows: Vec<LegendreRow> = sieve
        .primes_up_to(n_max)
        .par_iter()
        .map(|&p| {
            let p = p as u64;
            let mut row = LegendreRow {
                p,
                checks: 0,
                identity_failures: 0,
                bound_failures: 0,
                failures: 0,
                max_error: 0.0,
                max_error_n: p,
                max_constant: 0.0,
            };
            for n in p..=n_max {
                row.checks += 1;
                let nu = legendre(n, p);
                let s = digit_sum(n, p);
                let identity = nu * (p - 1) == n - s;
                // N/(p−1) − ν = s/(p−1), and the bound is s <= (p−1)·digits
                let d = digits(n, p);
                let bound = s > 0 && s <= (p - 1) * d;
                row.identity_failures += u64::from(!identity);
                row.bound_failures += u64::from(!bound);
                row.failures += u64::from(!(identity && bound));
                let err = s as f64 / (p - 1) as f64;
                if err > row.max_error {
                    row.max_error = err;
                    row.max_error_n = n;
                }
                row.max_constant = row.max_constant.max(err / d as f64);
            }
            row
        })
        .collect();
    let above: Vec<(bool, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let p = (n + 1..)
                .find(|&x| is_prime_u64(x))
                .expect("primes are unbounded");
            let ratio = n as f64 / (p - 1) as f64;
            (legendre(n, p) == 0 && n < p, ratio)
        })
        .collect();
    Ok(LegendreSweep {
        rows,
        above_checks: above.len() as u64,
        above_failures: above.iter().filter(|(ok, _)| !ok).count() as u64,
        above_max_ratio: above.iter().map(|&(_, r)| r).fold(0.0, f64::max),
    })
}

/// Valuations on `I_ℓ` for one n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalRow {
    pub n: u64,
    pub intervals: u64,
    pub primes_checked: u64,
    pub failures: u64,
}

/// `ν_p(n!) = ℓ` for every `p ∈ I_ℓ` with `(ℓ+1)² <= n`, over `n <= n_max`.
pub fn interval_valuation_sweep(n_max: u64, sieve: &PrimeSieve) -> Result<Vec<IntervalRow>> {
    sieve.check_range("n_max", n_max)?;
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut row = IntervalRow {
                n,
                intervals: 0,
                primes_checked: 0,
                failures: 0,
            };
            let mut ell = 1;
            while (ell + 1) * (ell + 1) <= n {
                row.intervals += 1;
                for &p in sieve.interval_primes(n, ell)? {
                    row.primes_checked += 1;
                    if legendre(n, p as u64) != ell {
                        row.failures += 1;
                    }
                }
                ell += 1;
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Legendre,
    Intervals,
    Lemma4,
    Brun,
    Sigma0,
    Stewart,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Legendre,
        Suite::Intervals,
        Suite::Lemma4,
        Suite::Brun,
        Suite::Sigma0,
        Suite::Stewart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Legendre => "legendre",
            Suite::Intervals => "intervals",
            Suite::Lemma4 => "lemma4",
            Suite::Brun => "brun",
            Suite::Sigma0 => "sigma0",
            Suite::Stewart => "stewart",
        }
    }

    /// Default `--n` for the suite.
    pub fn default_n(self) -> u64 {
        match self {
            Suite::Legendre | Suite::Intervals | Suite::Sigma0 => 10_000,
            Suite::Lemma4 => 100_000,
            Suite::Brun => 1_000_000,
            Suite::Stewart => 0,
        }
    }

    /// CSV columns, fixed per suite.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Suite::Legendre => &[
                "p",
                "checks",
                "identity_failures",
                "bound_failures",
                "max_error",
                "max_error_n",
                "max_constant",
            ],
            Suite::Intervals => &["n", "intervals", "primes_checked", "failures"],
            Suite::Lemma4 => &["n", "q", "exact", "counting", "main_term", "ratio", "ok"],
            Suite::Brun => &["n", "ell", "x", "y", "count", "bound", "ok"],
            Suite::Sigma0 => &["n", "q", "lhs", "rhs", "ok"],
            Suite::Stewart => &[
                "N",
                "largest_found_prime",
                "complete",
                "stewart_bound",
                "ok",
            ],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown suite {s:?}")))
    }
}

/// Scale parameters for [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyParams {
    /// Largest n; `None` takes [`Suite::default_n`].
    pub n: Option<u64>,
    pub q_max: u64,
    pub ell_max: u64,
    pub stewart_min: u32,
    pub stewart_max: u32,
    pub rho_iters: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            n: None,
            q_max: 50,
            ell_max: 30,
            stewart_min: 2,
            stewart_max: STEWART_MAX_N,
            rho_iters: DEFAULT_RHO_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub checks_run: u64,
    pub failures: u64,
    pub extremal_constants: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub parameters: BTreeMap<&'static str, u64>,
    #[serde(flatten)]
    pub summary: Summary,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.summary.failures == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Resource(e.to_string());
        w.write_record(self.suite.columns()).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Resource(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub checks_run: u64,
    pub failures: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn new(suites: Vec<SuiteReport>) -> Self {
        VerifyReport {
            schema: VERIFY_SCHEMA,
            checks_run: suites.iter().map(|s| s.summary.checks_run).sum(),
            failures: suites.iter().map(|s| s.summary.failures).sum(),
            suites,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Values of n for the multi-scale suites: powers of ten from `start`
/// below `n`, then `n` itself.
fn scales(start: u64, n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(start), |&x| x.checked_mul(10))
        .take_while(|&x| x < n)
        .collect();
    out.push(n);
    out
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

fn extremal(pairs: &[(&'static str, f64)]) -> BTreeMap<&'static str, f64> {
    pairs
        .iter()
        .copied()
        .filter(|(_, v)| v.is_finite())
        .collect()
}

/// Largest n a suite needs from the sieve.
pub fn required_limit(suite: Suite, params: &VerifyParams) -> u64 {
    match suite {
        Suite::Stewart => 2,
        _ => params.n.unwrap_or(suite.default_n()),
    }
}

pub fn run_suite(suite: Suite, params: &VerifyParams, sieve: &PrimeSieve) -> Result<SuiteReport> {
    let n = params.n.unwrap_or(suite.default_n());
    let mut parameters = BTreeMap::new();
    if suite != Suite::Stewart {
        parameters.insert("n", n);
    }
    let (checks_run, failures, rows, extremal_constants) = match suite {
        Suite::Legendre => {
            let sweep = legendre_error_sweep(n, sieve)?;
            let checks = sweep.rows.iter().map(|r| r.checks).sum::<u64>() + sweep.above_checks;
            let failed = sweep.rows.iter().map(|r| r.failures).sum::<u64>() + sweep.above_failures;
            let rows = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.p.to_string(),
                        r.checks.to_string(),
                        r.identity_failures.to_string(),
                        r.bound_failures.to_string(),
                        fmt_f64(r.max_error),
                        r.max_error_n.to_string(),
                        fmt_f64(r.max_constant),
                    ]
                })
                .collect();
            let ext = extremal(&[
                (
                    "max_constant",
                    sweep
                        .rows
                        .iter()
                        .map(|r| r.max_constant)
                        .fold(0.0, f64::max),
                ),
                (
                    "max_error",
                    sweep.rows.iter().map(|r| r.max_error).fold(0.0, f64::max),
                ),
                ("above_max_ratio", sweep.above_max_ratio),
            ]);
            (checks, failed, rows, ext)
        }
        Suite::Intervals => {
            let sweep = interval_valuation_sweep(n, sieve)?;
            let rows = sweep
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.intervals.to_string(),
                        r.primes_checked.to_string(),
                        r.failures.to_string(),
                    ]
                })
                .collect();
            let ext = extremal(&[(
                "max_ell",
                sweep.iter().map(|r| r.intervals).max().unwrap_or(0) as f64,
            )]);
            (
                sweep.iter().map(|r| r.primes_checked).sum(),
                sweep.iter().map(|r| r.failures).sum(),
                rows,
                ext,
            )
        }
        Suite::Lemma4 => {
            parameters.insert("q_max", params.q_max);
            let qs: Vec<u64> = (2..=params.q_max).filter(|&q| is_prime_u64(q)).collect();
            let mut records = Vec::new();
            for m in scales(1_000, n) {
                for &q in &qs {
                    records.push(nu_q_prime_product(m, q, sieve)?);
                }
            }
            let asymptotic =
                |r: &NuQRecord| r.n >= ASYMPTOTIC_MIN_N && ASYMPTOTIC_QS.contains(&r.q);
            let in_band = |r: &NuQRecord| {
                r.ratio
                    .is_some_and(|x| x >= ASYMPTOTIC_BAND.0 && x <= ASYMPTOTIC_BAND.1)
            };
            let ok = |r: &NuQRecord| r.exact == r.counting && (!asymptotic(r) || in_band(r));
            let checks =
                records.len() as u64 + records.iter().filter(|r| asymptotic(r)).count() as u64;
            let failed = records.iter().filter(|r| r.exact != r.counting).count() as u64
                + records
                    .iter()
                    .filter(|r| asymptotic(r) && !in_band(r))
                    .count() as u64;
            let rows = records
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.q.to_string(),
                        r.exact.to_string(),
                        r.counting.to_string(),
                        fmt_f64(r.main_term),
                        r.ratio.map(fmt_f64).unwrap_or_default(),
                        ok(r).to_string(),
                    ]
                })
                .collect();
            let top = records
                .iter()
                .filter(|r| r.n == n && ASYMPTOTIC_QS.contains(&r.q));
            let ratios: Vec<f64> = top.filter_map(|r| r.ratio).collect();
            let ext = extremal(&[
                (
                    "min_ratio_small_q",
                    ratios.iter().copied().fold(f64::INFINITY, f64::min),
                ),
                (
                    "max_ratio_small_q",
                    ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ),
            ]);
            (checks, failed, rows, ext)
        }
        Suite::Brun => {
            parameters.insert("ell_max", params.ell_max);
            let mut records = Vec::new();
            for m in scales(10_000, n) {
                records.extend(brun_titchmarsh_check(m, params.ell_max, sieve)?);
            }
            let rows = records
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.ell.to_string(),
                        fmt_f64(r.x),
                        fmt_f64(r.y),
                        r.count.to_string(),
                        fmt_f64(r.bound),
                        r.ok.to_string(),
                    ]
                })
                .collect();
            let ext = extremal(&[(
                "max_count_over_bound",
                records
                    .iter()
                    .map(|r| r.count as f64 / r.bound)
                    .fold(0.0, f64::max),
            )]);
            (
                records.len() as u64,
                records.iter().filter(|r| !r.ok).count() as u64,
                rows,
                ext,
            )
        }
        Suite::Sigma0 => {
            let mut records = Vec::new();
            for m in scales(100, n) {
                let qs: Vec<u64> = sieve
                    .primes_up_to(m.isqrt())
                    .iter()
                    .map(|&q| q as u64)
                    .collect();
                let batch: Result<Vec<_>> = qs
                    .par_iter()
                    .map(|&q| sigma0_valuation_bound(m, q, sieve))
                    .collect();
                records.extend(batch?);
            }
            let rows = records
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.q.to_string(),
                        r.lhs.to_string(),
                        r.rhs.to_string(),
                        r.ok.to_string(),
                    ]
                })
                .collect();
            let ext = extremal(&[(
                "min_slack",
                records
                    .iter()
                    .map(|r| r.lhs as f64 - r.rhs as f64)
                    .fold(f64::INFINITY, f64::min),
            )]);
            (
                records.len() as u64,
                records.iter().filter(|r| !r.ok).count() as u64,
                rows,
                ext,
            )
        }
        Suite::Stewart => {
            parameters.insert("n_min", params.stewart_min as u64);
            parameters.insert("n_max", params.stewart_max as u64);
            parameters.insert("rho_iters", params.rho_iters);
            let records = stewart_check(params.stewart_min, params.stewart_max, params.rho_iters)?;
            let rows = records
                .iter()
                .map(|r| {
                    vec![
                        r.exponent.to_string(),
                        r.largest_found_prime.to_string(),
                        r.complete.to_string(),
                        r.stewart_bound.map(fmt_f64).unwrap_or_default(),
                        r.ok.to_string(),
                    ]
                })
                .collect();
            let asserted: Vec<&StewartRecord> = records
                .iter()
                .filter(|r| r.exponent >= STEWART_ASSERT_FROM)
                .collect();
            let ext = extremal(&[(
                "min_largest_over_n",
                asserted
                    .iter()
                    .map(|r| r.largest_found_prime as f64 / r.exponent as f64)
                    .fold(f64::INFINITY, f64::min),
            )]);
            (
                asserted.len() as u64,
                asserted.iter().filter(|r| !r.ok).count() as u64,
                rows,
                ext,
            )
        }
    };
    Ok(SuiteReport {
        suite,
        parameters,
        summary: Summary {
            checks_run,
            failures,
            extremal_constants,
        },
        rows,
    })
}
