//! Coherent state exchange toolkit.
//!
//! Dense state-vector simulation of multiparty coherent state exchange,
//! the cooperative quantum game where any fixed amount of entanglement is
//! provably suboptimal, see-saw strategy search, and the one-extra-round
//! near-perfect-completeness transformation. Closed-form (Gram-matrix)
//! evaluation backs every quantity that is too large to simulate densely.

pub mod completeness;
pub mod error;
pub mod exchange;
pub mod game;
pub mod optimizer;
pub mod statevec;

pub use error::{Error, Result};

/// Evaluation backend: explicit state vectors, or closed-form overlaps
/// among the handful of structured states everything lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Gram,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Dense => write!(f, "dense"),
            Backend::Gram => write!(f, "gram"),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dense" => Ok(Backend::Dense),
            "gram" => Ok(Backend::Gram),
            other => Err(format!("unknown backend `{other}` (expected dense|gram)")),
        }
    }
}
