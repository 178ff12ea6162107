//! Synthesis and evaluation of AC false-data-injection attacks.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`netmodel`] parses MATPOWER cases and builds the bus admittance matrix.
//! * [`acpf`] solves the AC power flow and evaluates flows and injections.
//! * [`zone`] grows and checks attack zones.
//! * [`attackgen`] designs the attacked state and the measurement deltas.
//! * [`stateest`] generates measurements, runs WLS estimation and bad-data tests.
//! * [`impact`] compares clean and attacked operation and renders reports.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acpf;
pub mod attackgen;
pub mod cases;
pub mod impact;
pub mod netmodel;
pub mod stateest;
pub mod zone;

pub use acpf::{BranchFlow, StateVector};
pub use netmodel::{Grid, NetworkCase};
