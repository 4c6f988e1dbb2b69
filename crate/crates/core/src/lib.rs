//! Factored arithmetic for arithmetic functions of factorials.
//!
//! The crate evaluates φ(n!), σ₀(n!) and σ_k(n!) exactly, computes Bhargava
//! generalized factorials, enumerates every solution of
//! `α·m₁!_{S₁}⋯m_r!_{S_r} = f(n!)` in a range, and checks the analytic
//! estimates behind the finiteness of those solution sets numerically.

pub mod arithfun;
pub mod bhargava;
pub mod cli;
pub mod error;
pub mod factored;
pub mod lemmalab;
pub mod primes;
pub mod search;
pub mod valuations;

pub use arithfun::{ArithFn, RhsValue, SigmaOptions};
pub use bhargava::SetSpec;
pub use error::{Error, Result};
pub use factored::{FactoredNat, FactoredRat, PartialFactorization, Valuation};
pub use primes::{build_sieve, PrimeSieve};
