//! Joint sparsity and beamforming design for RDARS-aided multi-user downlink.
//!
//! An RDARS (reconfigurable distributed antennas and reflecting surface) is a
//! ULA whose elements either connect to the base station over fiber and
//! transmit, or passively reflect with a tunable phase. Here the connected
//! elements form a uniform sparse array with spacing `eta * d`, so mode
//! selection reduces to picking one integer.
//!
//! Module map:
//!
//! - [`scenario`]: system parameters, geometry, path loss, scenario files.
//! - [`array`]: steering vectors, mode selection, LoS channels, effective channels.
//! - [`metrics`]: SINR, sum rate, MSE and channel squared-correlation.
//! - [`closed_form`]: single-UE optimum, two-UE correlation analysis and sparsity selection.
//! - [`wmmse`]: the alternating WMMSE / power-iteration solver with sparsity search.
//! - [`campaign`]: seeded Monte Carlo campaigns and CSV output.
//! - [`validation`]: invariant checks shared by the `validate` command and the acceptance suite.

pub mod array;
pub mod campaign;
pub mod closed_form;
mod error;
pub mod metrics;
pub mod scenario;
pub mod validation;
pub mod wmmse;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

pub use array::{ChannelSet, ModeSelection, PassiveBeam};
pub use metrics::{BeamformingSolution, RateReport};
pub use scenario::{Geometry, SystemConfig};
