//! Approximate output-pattern probabilities of a lossy Gaussian boson sampler.
//!
//! Every input mode receives the squeezed vacuum `exp(α/2 · a†²)|0⟩`, loses
//! photons as `a† → c·a† + s·b†`, and is mixed by an interferometer `U`. The
//! probability of an output pattern `n⃗` is written as a Gaussian average,
//! split into a Monte Carlo part over `ξ₀` and analytic Wick moments of the
//! fluctuations `(χ, χ̃)`, which are expanded to order 0, 2 or 4 in `c`.
//!
//! * [`model`]: parameters and derived Gaussian constants.
//! * [`unitary`]: Haar sampling, validation and the JSON file format.
//! * [`precompute`]: contractions of `U` and factorial tables.
//! * [`trace`]: closed-form traces and the per-sample integrand.
//! * [`estimator`]: reproducible parallel Monte Carlo averaging.
//! * [`oracle`]: exact probabilities by perfect-matching (Wick) summation.
//! * [`cli`]: the batch front end behind the `gbs-taylor` binary.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod model;
pub mod oracle;
pub mod pattern;
pub mod precompute;
pub mod trace;
pub mod unitary;

pub use error::{Error, Result};
pub use estimator::{estimate, estimate_distribution, Estimate, SamplingPlan};
pub use model::{derive_params, params_from_experiment, ModelParams};
pub use oracle::{enumerate_patterns, exact_probability, normalization_check};
pub use pattern::OutputPattern;
pub use precompute::{build_tables, PrecomputeTables};
pub use trace::{CrossPairWeight, Order};
pub use unitary::{check_unitary, haar_random, UnitaryMatrix};
