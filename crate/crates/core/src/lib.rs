//! Recovery of a bounded, exactly-low-rank matrix from partially observed
//! 1-bit measurements.
//!
//! Entries of an unknown matrix `M*` with `rank(M*) <= r` and
//! `max |M*_ij| <= alpha` are observed only through random signs: for each
//! revealed index `(i, j)` we see `+1` with probability `f(M*_ij)` and `-1`
//! otherwise, where `f` is a logistic or Gaussian CDF link. The estimator
//! is constrained maximum likelihood, computed by gradient descent on a
//! log-barrier objective over a thin factorization `M = U V^T`, following
//! the central path as the barrier weight is halved and selecting it by
//! cross-validation.
//!
//! The crate is organized around that pipeline:
//!
//! * [`links`] — link functions, their derivatives, and the curvature and
//!   Lipschitz constants used by the error-bound calculator.
//! * [`sampling`] — observation masks (Bernoulli, bi-regular, block model),
//!   their bipartite spectral statistics, and the sampling operator.
//! * [`observe`] — ground-truth generation and binary observation sampling.
//! * [`objective`] — negative log-likelihood, its derivatives, and the
//!   barrier-augmented factored objective.
//! * [`solver`] — gradient descent with backtracking, central-path
//!   continuation, cross-validated barrier selection, and the
//!   rank-deficiency optimality certificate.
//! * [`bounds`] — evaluation of the theoretical estimation-error bounds.
//! * [`eval`] — relative MSE and sign-prediction accuracy metrics.
//! * [`movielens`] — MovieLens 100k ingestion, binarization, and splits.

pub mod bounds;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod links;
pub mod movielens;
pub mod objective;
pub mod observe;
pub mod rng;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use links::{LinkConstants, LinkEval, LinkKind, LinkModel};
pub use objective::{FactorPair, ObjectiveValue};
pub use observe::{BinaryObservations, GroundTruth};
pub use sampling::{Mask, SpectralReport};
pub use solver::{Certificate, FitReport, SolverConfig};
