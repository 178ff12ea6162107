//! Network case model, MATPOWER ingestion and nodal admittance assembly.

mod admittance;
mod case;
mod grid;
mod matpower;

pub use admittance::{build_admittance, AdmittanceModel, BranchAdmittance, SparseComplex};
pub use case::{Branch, Bus, BusKind, Generator, NetworkCase};
pub use grid::Grid;
pub use matpower::parse_case;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaseError {
    #[error("missing table `{0}`")]
    MissingTable(&'static str),
    #[error("malformed row {row} of table `{table}`: {reason}")]
    MalformedRow {
        table: &'static str,
        row: usize,
        reason: String,
    },
    #[error("unterminated matrix for `{0}`")]
    Unterminated(String),
    #[error("baseMVA must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("duplicate bus id {0}")]
    DuplicateBus(u32),
    #[error("no slack bus")]
    NoSlack,
    #[error("more than one slack bus: {0:?}")]
    MultipleSlack(Vec<u32>),
    #[error("unknown endpoint: branch {branch} references bus {bus}")]
    UnknownEndpoint { branch: usize, bus: u32 },
    #[error("generator {generator} references unknown bus {bus}")]
    UnknownGeneratorBus { generator: usize, bus: u32 },
    #[error("branch {branch} connects bus {bus} to itself")]
    SelfLoop { branch: usize, bus: u32 },
    #[error("branch {branch} has zero impedance")]
    ZeroImpedance { branch: usize },
    #[error("branch {branch} has invalid tap ratio {tap}")]
    InvalidTap { branch: usize, tap: f64 },
    #[error("network is disconnected: bus {unreached} is unreachable")]
    Disconnected { unreached: u32 },
    #[error("invalid case JSON: {0}")]
    Json(String),
}
