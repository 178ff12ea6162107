//! Bundled network cases.

use crate::netmodel::{CaseError, Grid};

/// IEEE 39-bus New England system in MATPOWER format.
pub const CASE39: &str = include_str!("../data/case39.m");

/// Resolve a bundled case by name (`case39`).
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "case39" => Some(CASE39),
        _ => None,
    }
}

pub fn case39() -> Result<Grid, CaseError> {
    Grid::from_matpower(CASE39)
}
