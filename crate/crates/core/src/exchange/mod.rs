//! Exchange resource states, the cyclic-shift exchange procedure (plain
//! and controlled), non-orthogonal variants, and universal embezzling
//! families at desk scale.

pub mod net;
pub mod resource;

pub use net::{EmbezzleOutcome, UniversalFamily};
pub use resource::{
    normalization_n1, normalization_n1_gram, overlap_formula, ExchangeMethod, ExchangeOutcome,
    ExchangeResource, ShiftDirection, DENSE_BUDGET,
};
