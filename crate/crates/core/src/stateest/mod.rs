//! Measurement generation, WLS AC state estimation and residual-based
//! bad-data detection.

mod bdd;
mod io;
mod measure;
mod wls;

pub use bdd::{
    chi_square_test, chi_square_threshold, largest_normalized_residual, run_bdd, BddPolicy, BddVerdict,
    ChiSquareVerdict, LnrOutcome,
};
pub use io::{
    from_records, measurements_to_csv, measurements_to_json, parse_csv_records, parse_measurements_csv,
    parse_measurements_json, to_records, MeasurementRecord, CSV_HEADER,
};
pub use measure::{
    eval_h, eval_jacobian, eval_point, generate_measurements, location_string, measurement_id, parse_location,
    Location, Measurement, MeasurementKind, MeasurementLayout, MeasurementPoint, MeasurementSet, NoiseSigmas,
    StateIndex,
};
pub use wls::{wls_estimate, EstimationResult, WlsOptions, CRITICAL_OMEGA};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("unobservable: {0}")]
    Unobservable(String),
    #[error("state estimation did not converge in {iterations} iterations (J = {objective})")]
    NotConverged { iterations: usize, objective: f64 },
    #[error("degrees of freedom must be at least 1, got {0}")]
    InsufficientRedundancy(i64),
    #[error("every measurement is critical")]
    AllCritical,
    #[error("invalid measurement {0}")]
    InvalidMeasurement(String),
    #[error("invalid sigma {sigma} for {kind}")]
    InvalidSigma { kind: MeasurementKind, sigma: f64 },
    #[error("invalid bad-data policy {0:?}")]
    InvalidPolicy(BddPolicy),
    #[error("measurement record {row}: {reason}")]
    BadRecord { row: usize, reason: String },
    #[error("numerical error: {0}")]
    Numerical(String),
}
