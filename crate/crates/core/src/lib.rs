//! Linear MIMO transceivers that diagonalize the channel and achieve capacity
//! for an arbitrary transmit covariance.
//!
//! Module map:
//! - [`matrix`], [`matdecomp`]: complex matrices and the Hermitian EVD, SVD,
//!   PSD square roots and rank tests everything else is built on;
//! - [`channel`]: noise whitening, capacity under a fixed covariance and
//!   rank reduction of covariances the channel cannot fully see;
//! - [`transceiver`]: the diagonalizing capacity-achieving design, the
//!   channel-SVD and EVD + zero-forcing baselines, the condition checker and
//!   the MMSE-SIC rate;
//! - [`optim`]: water-filling, WMMSE for the two-user interference channel
//!   and the interference-capped cognitive-radio covariance;
//! - [`ensemble`]: seeded random instances.

pub mod channel;
pub mod ensemble;
pub mod error;
pub mod matdecomp;
pub mod matrix;
pub mod optim;
pub mod transceiver;

pub use channel::{capacity, rank_reduce, whiten, MimoChannel, TransmitCovariance};
pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use num_complex::Complex64;
pub use transceiver::{
    achievable_rate, check_conditions, evd_zf_design, mmse_sic_rate, mmse_sic_rate_ordered,
    stream_snrs, svd_design, svd_waterfill_design, theorem1_design, ConditionReport,
    LinearTransceiver,
};
