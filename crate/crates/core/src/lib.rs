//! Baseband OFDM simulation and pilot-phase estimation of carrier frequency
//! offset and phase noise.
//!
//! The estimator fits a line to the phases of evenly spaced pilot samples in
//! each OFDM symbol: the slope gives the normalized frequency offset and the
//! intercept gives the symbol's accumulated phase, from which phase noise is
//! split off. Symbols without pilots are filled in by linear interpolation.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod impairments;
pub mod model;
pub mod pilots;
pub mod scalar;
pub mod txrx;

pub use error::{Error, Result};
pub use estimator::{
    estimate_cfo_moose, estimate_cfo_regression, estimate_cfo_sum, estimate_frame, estimate_phn,
    extract_phase_series, fit_phase_line, interpolate_cfo, ls_oracle, smooth_cfo, unwrap,
    EstimationMode, FrameOptions, KnownSignal, PhaseSeries, PilotEstimator, RegressionFit,
};
pub use impairments::{
    apply_awgn, apply_cfo, apply_channel, apply_phn, spectrum_moment4, ChannelKind, ChannelModel,
    ImpairmentState,
};
pub use model::{
    pilot_time_indices, validate, EstimateRecord, FreqGrid, OfdmParams, PatternKind, PilotGeometry,
    TimeFrame,
};
pub use pilots::{gen_pattern, isotropy_gap, pilot_bearing_symbols, solve_y2, PilotLattice};
pub use scalar::Real;
pub use txrx::{
    demodulate_frame, modulate_frame, random_grid, ConstellationKind, ConstellationSpec, PilotFill,
};

pub type FreqGrid64 = FreqGrid<f64>;
pub type TimeFrame64 = TimeFrame<f64>;
pub type EstimateRecord64 = EstimateRecord<f64>;
pub type PhaseSeries64 = PhaseSeries<f64>;
pub type RegressionFit64 = RegressionFit<f64>;
pub type ChannelModel64 = ChannelModel<f64>;
pub type ImpairmentState64 = ImpairmentState<f64>;

pub type FreqGrid32 = FreqGrid<f32>;
pub type TimeFrame32 = TimeFrame<f32>;
pub type EstimateRecord32 = EstimateRecord<f32>;
pub type PhaseSeries32 = PhaseSeries<f32>;
pub type RegressionFit32 = RegressionFit<f32>;
pub type ChannelModel32 = ChannelModel<f32>;
pub type ImpairmentState32 = ImpairmentState<f32>;
