//! Control-theoretic budget pacing toolkit.
//!
//! Models the ad-spend process as an LTI plant (a zero-order-hold pacing
//! interval, a gain, and a first-order sensing filter), measures open-loop
//! stability with Bode gain/phase margins, designs PI and zero-pole
//! compensators against those margins, converts them to executable
//! difference equations via the Tustin transform, and validates the whole
//! loop in a stochastic time-domain pacing simulator with PE/SWPE error
//! metrics.

pub mod bode;
pub mod compensator;
pub mod discrete;
pub mod error;
pub mod metrics;
pub mod plant;
pub mod poly;
pub mod sensing;
pub mod sim;
pub mod tf;
pub mod traffic;

pub use bode::{
    freq_response, log_spaced, stability_report, stability_report_with_sweep,
    FrequencyResponseSample, StabilityReport, SweepConfig,
};
pub use compensator::{
    evaluate_compensator, grid_search, pid_tf, select_best, zero_pole_tf, CompensatorSpec,
    GridSearchResult, PiController, PidSpec, ZeroPoleSpec, LAMBDA_FLOOR,
};
pub use discrete::{
    inverse_tustin, to_recurrence, tustin, DiscreteTransferFunction, RecurrenceCoefficients,
    RecurrenceFilter,
};
pub use error::{Error, Result};
pub use metrics::{pacing_error, CohortVelocities, PacingErrorReport};
pub use plant::{
    closed_loop_tracking, compensated_open_loop, lpf_tf, plant_open_loop, zoh_tf, PlantParams,
};
pub use poly::{poly_mul, Polynomial};
pub use sensing::{
    regularize, smoother_to_laplace, LowPassFilter, LpfConfig, SampleStream, Smoother,
    SmootherConfig,
};
pub use sim::{
    desired_velocity, estimate_w_n, plant_step, run_closed_loop, BaselineStepController,
    CohortConfig, ControllerKind, SimTrace, TraceRow,
};
pub use tf::{tf_feedback, tf_series, TransferFunction};
pub use traffic::{traffic_fft, TrafficCurve, TrafficSpectrum};
