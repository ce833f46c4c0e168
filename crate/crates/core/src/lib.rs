//! Exact-arithmetic toolkit for sum-product experiments over the rationals.
//!
//! Everything countable is counted exactly: product sets and their shifted
//! iterates, mixed energies via representation tables, p-adic valuation
//! embeddings, and the bipartite graph regularization pipeline on lattice
//! sets. Floating point appears only where k-th roots or weight vectors are
//! inherently real, and every such spot documents its tolerance.
//!
//! ```
//! use sumprodlab::energy::mixed_energy;
//! use sumprodlab::{Budget, Rational, RationalSet};
//!
//! let a: RationalSet = ["1", "2", "4"].iter().map(|s| s.parse().unwrap()).collect();
//! let u: Rational = "1".parse()?;
//! assert_eq!(mixed_energy(&a, &u, 2, &Budget::default())?, 15);
//! # Ok::<(), sumprodlab::Error>(())
//! ```
//!
//! Module map:
//! - [`rational`]: canonical fractions, factorization, valuations, the
//!   prime-valuation embedding.
//! - [`setops`]: finite-set algebra (sum/product/ratio sets, doubling,
//!   multiplicative dimension).
//! - [`energy`]: representation tables, mixed and classical energies,
//!   p-adic splitting verifiers.
//! - [`separation`]: separating-constant probes and lambda estimation.
//! - [`fibering`]: restricted sumsets, fiber decompositions, degree pruning,
//!   and the regularized decomposition with certificates.
//! - [`applications`]: solution/incidence/basis counters and growth
//!   experiments.
//! - [`generators`]: deterministic and seeded test families.
//! - [`io`]: the text/CSV/JSON file formats used by the CLI.
//! - [`suites`]: the theorem-backed verification suites aggregated by
//!   `sumprodlab verify`.

pub mod applications;
pub mod energy;
pub mod error;
pub mod fibering;
pub mod generators;
pub mod io;
pub mod rational;
pub mod separation;
pub mod setops;
pub mod suites;

pub use error::{Error, Result};
pub use rational::Rational;
pub use setops::{Budget, RationalSet};
