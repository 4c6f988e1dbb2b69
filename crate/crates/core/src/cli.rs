//! Command-line front end: `eval`, `search`, `bhargava` and `verify`.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::arithfun::{evaluate, ArithFn, RhsValue, SigmaOptions};
use crate::bhargava::{
    bhargava_closed, bhargava_general, GeneralOutcome, SetSpec, DEFAULT_STABILITY_DOUBLINGS,
};
use crate::error::{Error, Result};
use crate::factored::{CofactorKind, FactoredNat, DEFAULT_BIT_CAP, DEFAULT_RHO_ITERS};
use crate::lemmalab::{required_limit, run_suite, Suite, SuiteReport, VerifyParams, VerifyReport};
use crate::primes::PrimeSieve;
use crate::search::{parse_alpha, search, EquationSpec, SearchOptions, SearchReport};

/// Sieve size used when `--sieve-limit` is not given and the command needs less.
pub const DEFAULT_SIEVE_LIMIT: u64 = 1_000_000;

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 internal error or failed checks, 2 bad arguments.

CSV columns (version 1, fixed):
  eval                prime,exponent,kind
  search              n,m1,...,mr
  bhargava            prime,exponent
  verify legendre     p,checks,identity_failures,bound_failures,max_error,max_error_n,max_constant
  verify intervals    n,intervals,primes_checked,failures
  verify lemma4       n,q,exact,counting,main_term,ratio,ok
  verify brun         n,ell,x,y,count,bound,ok
  verify sigma0       n,q,lhs,rhs,ok
  verify stewart      N,largest_found_prime,complete,stewart_bound,ok
`verify all --format csv` needs --out DIR and writes one <suite>.csv per suite.";

#[derive(Debug, Parser)]
#[command(name = "arithfact", version)]
#[command(about = "Exact arithmetic functions of factorials, solution search and lemma checks")]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Sieve bound; defaults to max(largest n needed, 10^6).
    #[arg(long, global = true)]
    pub sieve_limit: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Largest value, in bits, that is ever expanded to a big integer.
    #[arg(long, global = true, default_value_t = DEFAULT_BIT_CAP)]
    pub bit_cap: u64,

    /// Pollard rho iteration budget per composite.
    #[arg(long, global = true)]
    pub rho_iters: Option<u64>,

    /// Truncation doublings allowed in the p-ordering engine.
    #[arg(long, global = true, default_value_t = DEFAULT_STABILITY_DOUBLINGS)]
    pub stability_doublings: u32,

    /// Largest m_i tried by `search`; below the size bound the search may be incomplete.
    #[arg(long, global = true)]
    pub m_cap: Option<u64>,

    /// Largest n_max accepted by `search` (default 100000 for phi and sigma:0, 2000 for sigma:k).
    #[arg(long, global = true)]
    pub n_cap: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print f(n!) factored, and in decimal when under the bit cap
    Eval {
        /// phi, sigma or sigma:k
        f: String,
        n: u64,
    },

    /// Enumerate every solution of alpha * m1!_S1 ... mr!_Sr = f(n!) for n <= n_max
    Search {
        /// phi, sigma or sigma:k
        f: String,
        /// Positive rational a/b
        alpha: String,
        /// Number of factorials on the left
        r: usize,
        /// Comma-separated sets: Z, ap:s:t or squares (ap:s,t is also accepted when r = 1)
        sets: String,
        n_max: u64,
    },

    /// Compute the Bhargava factorial m!_S
    Bhargava {
        /// Z, ap:s,t, squares or explicit:a,b,...
        set: String,
        m: u64,
        /// Use the p-ordering engine instead of the closed form
        #[arg(long)]
        general: bool,
    },

    /// Run lemma verification suites; exit code 0 iff there are no failures
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Largest n (per-suite defaults: legendre, intervals, sigma0 10^4; lemma4 10^5; brun 10^6)
        #[arg(long)]
        n: Option<u64>,
        /// Largest q for lemma4
        #[arg(long, default_value_t = 50)]
        qmax: u64,
        /// Largest interval index for brun
        #[arg(long, default_value_t = 30)]
        lmax: u64,
        /// Smallest exponent for stewart
        #[arg(long, default_value_t = 2)]
        nmin: u32,
        /// Largest exponent for stewart
        #[arg(long, default_value_t = 64)]
        nmax: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Legendre,
    Intervals,
    Lemma4,
    Brun,
    Sigma0,
    Stewart,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Legendre => vec![Suite::Legendre],
            SuiteArg::Intervals => vec![Suite::Intervals],
            SuiteArg::Lemma4 => vec![Suite::Lemma4],
            SuiteArg::Brun => vec![Suite::Brun],
            SuiteArg::Sigma0 => vec![Suite::Sigma0],
            SuiteArg::Stewart => vec![Suite::Stewart],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

fn sieve_for(global: &GlobalOpts, needed: u64) -> Result<PrimeSieve> {
    let limit = match global.sieve_limit {
        Some(l) if l < needed => {
            return Err(Error::Argument(format!(
                "--sieve-limit {l} is below the {needed} this command needs"
            )))
        }
        Some(l) => l,
        None => needed.max(DEFAULT_SIEVE_LIMIT),
    };
    PrimeSieve::new(limit)
}

fn emit(global: &GlobalOpts, body: &[u8]) -> Result<()> {
    let io_err = |e: io::Error| Error::Resource(e.to_string());
    match &global.out {
        Some(path) => fs::write(path, body).map_err(io_err),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)
                .and_then(|_| out.flush())
                .map_err(io_err)
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Resource(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Resource(e.to_string()))
}

fn factored_rows(v: &FactoredNat) -> impl Iterator<Item = Vec<String>> + '_ {
    v.iter().map(|(p, e)| vec![p.to_string(), e.to_string()])
}

fn decimal(v: &FactoredNat, bit_cap: u64) -> Option<String> {
    v.expand(bit_cap).ok().map(|x| x.to_str_radix(10))
}

/// Parses a command and runs it; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers as usize)
        .build()
        .map_err(|e| Error::Resource(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Eval { f, n } => cmd_eval(g, f, *n),
        Command::Search {
            f,
            alpha,
            r,
            sets,
            n_max,
        } => cmd_search(g, f, alpha, *r, sets, *n_max),
        Command::Bhargava { set, m, general } => cmd_bhargava(g, set, *m, *general),
        Command::Verify {
            suite,
            n,
            qmax,
            lmax,
            nmin,
            nmax,
        } => {
            let params = VerifyParams {
                n: *n,
                q_max: *qmax,
                ell_max: *lmax,
                stewart_min: *nmin,
                stewart_max: *nmax,
                rho_iters: g.rho_iters.unwrap_or(DEFAULT_RHO_ITERS),
            };
            cmd_verify(g, *suite, &params)
        }
    }
}

fn cmd_eval(g: &GlobalOpts, f: &str, n: u64) -> Result<i32> {
    let f: ArithFn = f.parse()?;
    let sieve = sieve_for(g, n)?;
    let opts = SigmaOptions {
        rho_iters: g.rho_iters.unwrap_or(0),
        bit_cap: g.bit_cap,
        ..SigmaOptions::default()
    };
    let value = evaluate(f, n, &sieve, &opts)?;
    let body = match (g.format, &value) {
        (Format::Json, RhsValue::Factored(v)) => to_json(&json!({
            "schema": "arithfact.eval/1",
            "f": f,
            "n": n,
            "factored": v,
            "complete": true,
            "bits": v.bit_estimate(),
            "decimal": decimal(v, g.bit_cap),
        }))?,
        (Format::Json, RhsValue::Hybrid(h)) => to_json(&json!({
            "schema": "arithfact.eval/1",
            "f": f,
            "n": n,
            "factored": h.factored_part,
            "cofactor": h.cofactor.to_str_radix(10),
            "cofactor_kind": h.cofactor_kind,
            "complete": h.is_complete(),
            "bits": h.value().bits(),
            "decimal": h.value().to_str_radix(10),
        }))?,
        (Format::Csv, RhsValue::Factored(v)) => csv_bytes(
            &["prime", "exponent", "kind"],
            factored_rows(v).map(|mut r| {
                r.push("prime".into());
                r
            }),
        )?,
        (Format::Csv, RhsValue::Hybrid(h)) => {
            let mut rows: Vec<Vec<String>> = factored_rows(&h.factored_part)
                .map(|mut r| {
                    r.push("prime".into());
                    r
                })
                .collect();
            let kind = match h.cofactor_kind {
                CofactorKind::Unit => None,
                CofactorKind::Prime => Some("prime"),
                CofactorKind::Composite => Some("composite"),
                CofactorKind::Unknown => Some("unknown"),
            };
            if let Some(kind) = kind {
                rows.push(vec![h.cofactor.to_str_radix(10), "1".into(), kind.into()]);
            }
            csv_bytes(&["prime", "exponent", "kind"], rows)?
        }
        (Format::Table, RhsValue::Factored(v)) => {
            let mut s = format!("{f}({n}!) = {v}\n");
            if let Some(d) = decimal(v, g.bit_cap) {
                if d != v.to_string() {
                    s.push_str(&format!("  = {d}\n"));
                }
            }
            s.into_bytes()
        }
        (Format::Table, RhsValue::Hybrid(h)) => {
            let mut s = format!("{f}({n}!) = {}", h.factored_part);
            if !h.is_complete() {
                s.push_str(&format!(" * {} [{:?}]", h.cofactor, h.cofactor_kind));
            }
            s.push_str(&format!("\n  = {}\n", h.value()));
            s.into_bytes()
        }
    };
    emit(g, &body)?;
    Ok(0)
}

/// Splits the `sets` argument into r set strings. Commas separate sets, so
/// an AP may be written `ap:s:t`; a lone `ap:s,t` is accepted when r = 1.
fn split_sets(sets: &str, r: usize) -> Result<Vec<SetSpec>> {
    let parts: Vec<String> = if r == 1 {
        vec![sets.trim().to_string()]
    } else {
        sets.split(',').map(|s| s.trim().to_string()).collect()
    };
    if parts.len() != r {
        return Err(Error::Argument(format!(
            "r = {r} but {} sets were given",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| match p.strip_prefix("ap:") {
            Some(rest) => format!("ap:{}", rest.replacen(':', ",", 1)).parse(),
            None => p.parse(),
        })
        .collect()
}

fn cmd_search(
    g: &GlobalOpts,
    f: &str,
    alpha: &str,
    r: usize,
    sets: &str,
    n_max: u64,
) -> Result<i32> {
    if r == 0 {
        return Err(Error::Argument("r must be at least 1".into()));
    }
    let spec = EquationSpec::new(f.parse()?, parse_alpha(alpha)?, split_sets(sets, r)?)?;
    let n_cap = g.n_cap.unwrap_or(spec.default_n_cap());
    if n_max > n_cap {
        return Err(Error::Argument(format!(
            "n_max = {n_max} is above the cap {n_cap}; raise it with --n-cap"
        )));
    }
    let sieve = sieve_for(g, n_max)?;
    let opts = SearchOptions {
        m_cap: g.m_cap,
        bit_cap: g.bit_cap,
        workers: g.workers as usize,
        verify: true,
    };
    let report = search(&spec, n_max, &sieve, &opts)?;
    let body = match g.format {
        Format::Json => report.to_json()?.into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
        Format::Table => search_table(&report).into_bytes(),
    };
    emit(g, &body)?;
    eprintln!(
        "searched {} for n <= {n_max}: {} solutions in {:.3} s",
        report.spec,
        report.solutions.len(),
        report.wall_time.as_secs_f64()
    );
    if !report.complete {
        eprintln!("warning: incomplete search, --m-cap cut off live branches (see per_n status)");
    }
    Ok(0)
}

fn search_table(report: &SearchReport) -> String {
    let mut s = format!("{}\n", report.spec);
    for rec in &report.solutions {
        let ms: Vec<String> = rec.m.iter().map(|m| m.to_string()).collect();
        s.push_str(&format!("  n = {:<6} m = ({})\n", rec.n, ms.join(", ")));
    }
    s.push_str(&format!(
        "{} solutions for n <= {}; complete: {}; last solution at n = {}\n",
        report.solutions.len(),
        report.n_max,
        report.complete,
        report
            .last_solution_n
            .map_or("none".to_string(), |n| n.to_string())
    ));
    s
}

fn cmd_bhargava(g: &GlobalOpts, set: &str, m: u64, general: bool) -> Result<i32> {
    let spec: SetSpec = set.parse()?;
    let (value, outcome) = if general || matches!(spec, SetSpec::Explicit(_)) {
        let outcome = bhargava_general(&spec, m, g.stability_doublings)?;
        (outcome.value().cloned(), Some(outcome))
    } else {
        let needed = match spec {
            SetSpec::Squares => 2 * m,
            _ => m,
        };
        let sieve = sieve_for(g, needed.min(DEFAULT_SIEVE_LIMIT))?;
        (Some(bhargava_closed(&spec, m, &sieve)?), None)
    };
    let body = match g.format {
        Format::Json => {
            let method = if outcome.is_some() {
                "p_ordering"
            } else {
                "closed_form"
            };
            to_json(&json!({
                "schema": "arithfact.bhargava/1",
                "set": spec,
                "m": m,
                "method": method,
                "factored": value,
                "decimal": value.as_ref().and_then(|v| decimal(v, g.bit_cap)),
                "general": outcome,
            }))?
        }
        Format::Csv => match &value {
            Some(v) => csv_bytes(&["prime", "exponent"], factored_rows(v))?,
            None => csv_bytes(&["prime", "exponent"], std::iter::empty())?,
        },
        Format::Table => match (&value, &outcome) {
            (Some(v), _) => {
                let d = decimal(v, g.bit_cap).unwrap_or_else(|| "(above bit cap)".into());
                format!("{m}!_{spec} = {v} = {d}\n").into_bytes()
            }
            (None, Some(GeneralOutcome::StabilityNotReached { rounds })) => {
                let mut s = format!("{m}!_{spec}: no two truncations agreed\n");
                for r in rounds {
                    s.push_str(&format!("  {} elements: {}\n", r.truncation_len, r.value));
                }
                s.into_bytes()
            }
            _ => unreachable!("a missing value comes from the general engine"),
        },
    };
    emit(g, &body)?;
    Ok(if value.is_some() { 0 } else { 1 })
}

fn write_suite_csv(report: &SuiteReport, path: &Path) -> Result<()> {
    let file =
        File::create(path).map_err(|e| Error::Resource(format!("{}: {e}", path.display())))?;
    report.write_csv(file)
}

fn cmd_verify(g: &GlobalOpts, suite: SuiteArg, params: &VerifyParams) -> Result<i32> {
    let suites = suite.suites();
    if suite == SuiteArg::All && g.format == Format::Csv && g.out.is_none() {
        return Err(Error::Argument(
            "verify all --format csv needs --out DIR".into(),
        ));
    }
    let needed = suites
        .iter()
        .map(|&s| required_limit(s, params))
        .max()
        .unwrap_or(2);
    let sieve = sieve_for(g, needed)?;
    let reports = suites
        .iter()
        .map(|&s| run_suite(s, params, &sieve))
        .collect::<Result<Vec<_>>>()?;
    let report = VerifyReport::new(reports);
    match g.format {
        Format::Json => emit(g, report.to_json()?.as_bytes())?,
        Format::Csv if suite == SuiteArg::All => {
            let dir = g.out.as_ref().expect("checked above");
            fs::create_dir_all(dir)
                .map_err(|e| Error::Resource(format!("{}: {e}", dir.display())))?;
            for r in &report.suites {
                write_suite_csv(r, &dir.join(format!("{}.csv", r.suite)))?;
            }
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report.suites[0].write_csv(&mut buf)?;
            emit(g, &buf)?;
        }
        Format::Table => {
            let mut s = String::new();
            for r in &report.suites {
                let consts: Vec<String> = r
                    .summary
                    .extremal_constants
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.6}"))
                    .collect();
                s.push_str(&format!(
                    "{:<10} {:<4} checks={:<10} failures={:<4} {}\n",
                    r.suite.name(),
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.summary.checks_run,
                    r.summary.failures,
                    consts.join(" ")
                ));
            }
            emit(g, s.as_bytes())?;
        }
    }
    Ok(if report.failures == 0 { 0 } else { 1 })
}
