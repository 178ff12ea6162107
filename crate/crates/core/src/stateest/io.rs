//! CSV and JSON forms of measurement sets.

use serde::{Deserialize, Serialize};

use super::measure::{location_string, parse_location, Measurement, MeasurementKind, MeasurementPoint, MeasurementSet, StateIndex};
use super::EstimationError;
use crate::netmodel::Grid;

pub const CSV_HEADER: [&str; 5] = ["id", "kind", "location", "value", "variance"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub id: String,
    pub kind: MeasurementKind,
    pub location: String,
    pub value: f64,
    pub variance: f64,
}

pub fn to_records(grid: &Grid, ms: &MeasurementSet) -> Vec<MeasurementRecord> {
    ms.measurements
        .iter()
        .map(|m| MeasurementRecord {
            id: m.point.id.clone(),
            kind: m.point.kind,
            location: location_string(grid, m.point.location),
            value: m.value,
            variance: m.variance,
        })
        .collect()
}

/// Resolve records against the grid. Ids must be canonical and unique.
pub fn from_records(grid: &Grid, records: &[MeasurementRecord]) -> Result<MeasurementSet, EstimationError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut measurements = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let bad = |reason: String| EstimationError::BadRecord { row: i + 1, reason };
        let location = parse_location(grid, rec.kind, &rec.location).map_err(bad)?;
        let point = MeasurementPoint::new(grid, rec.kind, location).map_err(bad)?;
        if point.id != rec.id {
            return Err(bad(format!("id {:?} does not match kind/location (expected {:?})", rec.id, point.id)));
        }
        if !seen.insert(point.id.clone()) {
            return Err(bad(format!("duplicate id {:?}", rec.id)));
        }
        if !rec.value.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        if !(rec.variance > 0.0 && rec.variance.is_finite()) {
            return Err(bad(format!("variance must be positive, got {}", rec.variance)));
        }
        measurements.push(Measurement {
            point,
            value: rec.value,
            variance: rec.variance,
        });
    }
    Ok(MeasurementSet {
        measurements,
        n_state: StateIndex::new(grid).dim(),
    })
}

pub fn measurements_to_csv(grid: &Grid, ms: &MeasurementSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for rec in to_records(grid, ms) {
        w.write_record([
            rec.id,
            rec.kind.to_string(),
            rec.location,
            rec.value.to_string(),
            rec.variance.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn parse_measurements_csv(grid: &Grid, text: &str) -> Result<MeasurementSet, EstimationError> {
    let records = parse_csv_records(text)?;
    from_records(grid, &records)
}

/// Syntactic CSV parse without grid resolution.
pub fn parse_csv_records(text: &str) -> Result<Vec<MeasurementRecord>, EstimationError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| EstimationError::BadRecord { row: 0, reason: e.to_string() })?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(EstimationError::BadRecord {
            row: 0,
            reason: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let bad = |reason: String| EstimationError::BadRecord { row: i + 1, reason };
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
        out.push(MeasurementRecord {
            id: row[0].to_string(),
            kind: row[1].parse().map_err(bad)?,
            location: row[2].to_string(),
            value: num(&row[3])?,
            variance: num(&row[4])?,
        });
    }
    Ok(out)
}

pub fn measurements_to_json(grid: &Grid, ms: &MeasurementSet) -> String {
    serde_json::to_string_pretty(&to_records(grid, ms)).expect("records serialize")
}

pub fn parse_measurements_json(grid: &Grid, text: &str) -> Result<MeasurementSet, EstimationError> {
    let records: Vec<MeasurementRecord> =
        serde_json::from_str(text).map_err(|e| EstimationError::BadRecord { row: 0, reason: e.to_string() })?;
    from_records(grid, &records)
}
