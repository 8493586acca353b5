//! SL-invariant multipartite entanglement measures and the entanglement
//! resilience factor (ERF) of single-qudit quantum channels.
//!
//! The ERF of a channel `$` with Kraus operators `K_j` on a `d`-level system is
//! `F[$] = min Σ_j |det K_j|^{2/d}` over all Kraus representations. For any
//! SL-invariant measure `E`, applying `$` to one qudit of a pure state scales
//! `E` by exactly `F[$]`, independently of the state. This crate computes
//! the measures and the ERF by several independent routes and checks that
//! law and its corollaries numerically.

pub mod channels;
pub mod erf;
pub mod error;
pub mod evolution;
pub mod format;
pub mod measures;
pub mod normalform;
pub mod optim;
pub mod random;
pub mod states;
pub mod symmetry;
pub mod tensor;

pub use channels::{
    apply_local, choi_state, make_channel, mix_kraus, ChannelFamily, QuantumChannel,
};
pub use erf::{
    erf, erf_choi_concurrence, erf_choi_gconcurrence, erf_minimize, ErfMethod, ErfReport,
};
pub use error::{Error, Result};
pub use measures::{
    apply_slocc, convex_roof, measure_pure, wootters_concurrence, ConvexRoofResult, MeasureKind,
    SloccElement,
};
pub use optim::RoofConfig;
pub use states::{DensityOperator, MultiState};
pub use tensor::{ComplexMatrix, Dims, Permutation, C64};
