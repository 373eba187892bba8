//! Dense multipartite pure-state and density-operator kernel.
//!
//! Everything here is an immutable value and every operation is a pure
//! function, so independent inputs may be evaluated concurrently.

pub mod density;
pub mod isometry;
pub mod layout;
pub mod measures;
pub mod pure;
mod serial;

pub use density::DensityOperator;
pub use isometry::LocalIsometry;
pub use layout::{Subsystem, SubsystemLayout};
pub use measures::{entropy, fidelity, trace_distance};
pub use pure::PureState;
