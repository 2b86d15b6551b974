//! Persistence probabilities of partial sums and iterated partial sums of
//! i.i.d. zero-mean increments.
//!
//! * [`distributions`]: increment laws, closed-form tails, decay-condition checks.
//! * [`walks`]: path functionals, including the shift intervals of the
//!   first-argmax decomposition.
//! * [`exact`]: exact rational persistence tables for Rademacher steps.
//! * [`montecarlo`]: deterministic parallel estimators.
//! * [`bounds`]: two-sided convolution bounds and their constants.
//! * [`gaussian`]: integrated Brownian motion comparisons.

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod montecarlo;
pub mod rng;
pub mod special;
pub mod walks;

pub use distributions::{DecayParams, DistributionSpec, GridSpec, Law};
pub use error::{Error, Result};
pub use exact::{ExactTable, Order, Strictness};
pub use montecarlo::{Estimate, RunConfig};
pub use walks::{KInterval, Path, PathDiagnostics};
