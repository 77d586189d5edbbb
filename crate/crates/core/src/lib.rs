//! Counting copies of a fixed motif in inhomogeneous random hypergraphs.
//!
//! Each edge of size `k` over the vertex set `[n]` is present independently
//! with probability `p_k`. The crate enumerates copies of a pattern, samples
//! the model, computes exact and asymptotic moments of the copy count,
//! materialises its Hoeffding decomposition, evaluates normal-approximation
//! bounds and estimates Kolmogorov / Wasserstein distances to the standard
//! normal law.

pub mod bounds;
pub mod copies;
pub mod distance;
pub mod error;
pub mod harness;
pub mod hoeffding;
pub mod moments;
pub mod normal;
pub mod oracle;
pub mod pattern;
pub mod prob;
pub mod scalar;
pub mod sim;
pub mod surrogate;

pub use error::{Error, Result};
pub use pattern::Pattern;
pub use prob::{EdgeProb, ProbabilitySpec, Schedule, ScheduleSpec};
