//! Dataset inference for self-supervised encoders.
//!
//! The crate answers one question: were the representations produced by a
//! suspect encoder derived from a victim's private training data? It fits a
//! Gaussian mixture density on the suspect's representations of one half of
//! the private set, scores the other half against held-out data, and runs a
//! one-sided Welch t-test on the two log-likelihood samples.
//!
//! Around that core sit the forensic scores used to judge how close two
//! encoders are (nearest-neighbor mutual information, cosine and l2 scores),
//! the output obfuscations an attacker might apply, and a synthetic
//! representation generator used for reproducible end-to-end checks.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The type
//! aliases at the crate root fix the scalar to `f64`, which is what the CLI
//! and the on-disk formats are calibrated for.

pub mod entropy;
pub mod error;
pub mod gmm;
pub mod inference;
mod linalg;
pub mod obfuscate;
pub mod preprocess;
pub mod repio;
pub mod rng;
mod scalar;
pub mod similarity;
pub mod special;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Representation matrix with `f64` entries.
pub type Representations = repio::RepresentationSet<f64>;
/// Representation matrix with `f32` entries.
pub type Representations32 = repio::RepresentationSet<f32>;
/// Gaussian mixture over `f64` representations.
pub type Gmm = gmm::GmmModel<f64>;
/// Gaussian mixture over `f32` representations.
pub type Gmm32 = gmm::GmmModel<f32>;
pub type StandardizationStats = preprocess::StandardizationStats<f64>;
pub type TTestResult = stats::TTestResult<f64>;
pub type OwnershipVerdict = inference::OwnershipVerdict<f64>;
pub type EntropyEstimate = entropy::EntropyEstimate<f64>;
pub type MutualInfoScore = entropy::MutualInfoScore<f64>;
pub type SimilarityReport = similarity::SimilarityReport<f64>;
pub type Histogram = similarity::Histogram<f64>;
pub type SyntheticWorld = synth::SyntheticWorld<f64>;
