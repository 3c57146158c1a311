//! Inter-block interference analysis for block transmission over channels
//! with fractional delays.
//!
//! The crate builds time, frequency and prolate-spheroidal signaling bases,
//! computes the exact interference each waveform collects from neighbouring
//! blocks of a zero-guarded frame, bounds it through Slepian concentration
//! eigenvalues, and runs Monte-Carlo QPSK link simulations with per-block
//! LMMSE equalization.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the experiments use.

pub mod basis;
pub mod channel;
pub mod error;
pub mod ibi;
pub mod prolate;
pub mod scalar;
pub mod simulate;
pub mod tridiag;

pub use basis::{
    assemble_frame, build_basis, build_basis_with, extract_block, Domain, FrameLayout, GuardMode, PsBandwidth,
    SignalingBasis,
};
pub use channel::{
    channel_matrix, delay_matrix, doppler_matrix, exponential_profile, ChannelOperator, ChannelPreset, ChannelSpec,
    ExponentialProfile, PathSpec, PRNG_ID,
};
pub use error::{Error, Result};
pub use ibi::{
    bandlimited_shift, cross_correlation, ibi_bound, ibi_energy_exact, s2ibi_sweep, tail_energy, CrossCorrelation,
    IbiBound, IbiReport, SweepOptions,
};
pub use prolate::{generate_dpss, sinc_kernel_matrix, DpssSet};
pub use scalar::{Cplx, Real};
pub use simulate::{awgn, lmmse_equalize, qpsk_demap, qpsk_map, run_ber, BerCurve, BerPoint, SimConfig};

pub type DpssSet64 = DpssSet<f64>;
pub type PathSpec64 = PathSpec<f64>;
pub type ChannelSpec64 = ChannelSpec<f64>;
pub type SignalingBasis64 = SignalingBasis<f64>;
pub type IbiReport64 = IbiReport<f64>;
pub type IbiBound64 = IbiBound<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type Complex64 = Cplx<f64>;

pub type DpssSet32 = DpssSet<f32>;
pub type SignalingBasis32 = SignalingBasis<f32>;
pub type ChannelSpec32 = ChannelSpec<f32>;
