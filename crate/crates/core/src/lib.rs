//! Information-theoretic measures of predictive uncertainty for
//! classification.
//!
//! Given posterior samples of a predictive distribution (an ensemble, MC
//! dropout passes, Laplace samples, ...), this crate computes the full grid of
//! total (TU), aleatoric (AU) and epistemic (EU) uncertainty measures under the
//! log, zero-one, Brier, spherical and Renyi scoring rules, audits the exact
//! relationships between the cells, and evaluates scores with detection and
//! selective-prediction metrics.
//!
//! ```
//! use uncq_core::{epistemic, EnsembleItem, MeasureSpec, Predictor, ProbVec, Truth};
//!
//! let item = EnsembleItem::new(
//!     "x",
//!     vec![ProbVec::new(vec![0.8, 0.2])?, ProbVec::new(vec![0.2, 0.8])?],
//! );
//! // mutual information
//! let mi = epistemic(&MeasureSpec::epistemic(Predictor::Sampled, Truth::Predictive), &item)?;
//! assert!((mi - 0.192745).abs() < 1e-6);
//! # Ok::<(), uncq_core::Error>(())
//! ```

pub mod audit;
pub mod error;
pub mod io;
pub mod measures;
pub mod metrics;
pub mod scoring;
pub mod synth;
pub mod types;

pub use audit::{
    audit_identities, audit_identities_with_rule, AuditReport, CheckStatus, IdentityCheck,
};
pub use error::{Error, Result};
pub use measures::{
    aleatoric, epistemic, evaluate, is_correct, posterior_mean, score_dataset, total_uncertainty,
    MeasureValue,
};
pub use metrics::{
    auarc, aupr, auroc, fpr_at_tpr, mann_whitney, retention_curve, DetectionSet, MannWhitney,
    RetentionSet,
};
pub use scoring::{divergence, entropy, total, Rule};
pub use types::{
    normalize, validate_item, EnsembleItem, MeasureSpec, Pairs, Predictor, ProbVec, Quantity,
    ScoreRecord, Truth,
};
