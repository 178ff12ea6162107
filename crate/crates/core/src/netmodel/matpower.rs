//! Reader for the table subset of MATPOWER `.m` case files.
//!
//! Only `baseMVA`, `bus`, `gen` and `branch` are interpreted. Every other
//! assignment (`version`, `gencost`, `areas`, cell arrays, ...) is skipped.

use super::case::{Branch, Bus, BusKind, Generator, NetworkCase};
use super::CaseError;

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

enum Value<'a> {
    Matrix(&'a str),
    Scalar(&'a str),
    Other,
}

struct Assignment<'a> {
    field: &'a str,
    value: Value<'a>,
}

/// Parse MATPOWER case text into a validated [`NetworkCase`].
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let cleaned = strip_comments(text);
    let assignments = scan_assignments(&cleaned)?;

    let find = |name: &str| assignments.iter().rev().find(|a| a.field == name);

    let base_mva = match find("baseMVA") {
        Some(Assignment { value: Value::Scalar(s), .. }) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| CaseError::MalformedRow {
                table: "baseMVA",
                row: 1,
                reason: format!("not a number: {:?}", s.trim()),
            })?,
        Some(_) => {
            return Err(CaseError::MalformedRow {
                table: "baseMVA",
                row: 1,
                reason: "expected a scalar".into(),
            })
        }
        None => return Err(CaseError::MissingTable("baseMVA")),
    };
    if !(base_mva > 0.0 && base_mva.is_finite()) {
        return Err(CaseError::NonPositiveBase(base_mva));
    }

    let matrix = |name: &'static str, min_cols: usize| -> Result<Vec<Vec<f64>>, CaseError> {
        match find(name) {
            Some(Assignment { value: Value::Matrix(body), .. }) => parse_matrix(name, body, min_cols),
            Some(_) => Err(CaseError::MalformedRow {
                table: name,
                row: 1,
                reason: "expected a bracketed matrix".into(),
            }),
            None => Err(CaseError::MissingTable(name)),
        }
    };
    let bus_rows = matrix("bus", BUS_COLS)?;
    let gen_rows = matrix("gen", GEN_COLS)?;
    let branch_rows = matrix("branch", BRANCH_COLS)?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    for (i, row) in bus_rows.iter().enumerate() {
        let id = integer_id("bus", i, row[0])?;
        let kind = match row[1] {
            1.0 => BusKind::Pq,
            2.0 => BusKind::Pv,
            3.0 => BusKind::Slack,
            t => {
                return Err(CaseError::MalformedRow {
                    table: "bus",
                    row: i + 1,
                    reason: format!("unsupported bus type {t}"),
                })
            }
        };
        buses.push(Bus {
            id,
            kind,
            pd: row[2] / base_mva,
            qd: row[3] / base_mva,
            gs: row[4] / base_mva,
            bs: row[5] / base_mva,
            vmax: row[11],
            vmin: row[12],
        });
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    for (i, row) in gen_rows.iter().enumerate() {
        generators.push(Generator {
            bus: integer_id("gen", i, row[0])?,
            pg: row[1] / base_mva,
            qg: row[2] / base_mva,
            qmax: row[3] / base_mva,
            qmin: row[4] / base_mva,
            vset: row[5],
            in_service: row[7] > 0.0,
            pmax: row[8] / base_mva,
            pmin: row[9] / base_mva,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (i, row) in branch_rows.iter().enumerate() {
        // tap = 0 means a plain line
        let tap = if row[8] == 0.0 { 1.0 } else { row[8] };
        branches.push(Branch {
            from: integer_id("branch", i, row[0])?,
            to: integer_id("branch", i, row[1])?,
            r: row[2],
            x: row[3],
            b: row[4],
            rating: (row[5] > 0.0).then(|| row[5] / base_mva),
            tap,
            shift: row[9].to_radians(),
            in_service: row[10] != 0.0,
        });
    }

    // PV buses without an online generator behave as PQ buses.
    for bus in buses.iter_mut().filter(|b| b.kind == BusKind::Pv) {
        if !generators.iter().any(|g| g.in_service && g.bus == bus.id) {
            log::debug!("bus {} is PV without an online generator; treating as PQ", bus.id);
            bus.kind = BusKind::Pq;
        }
    }

    NetworkCase::new(base_mva, buses, branches, generators)
}

fn integer_id(table: &'static str, row: usize, v: f64) -> Result<u32, CaseError> {
    if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(CaseError::MalformedRow {
            table,
            row: row + 1,
            reason: format!("bus number {v} is not a positive integer"),
        })
    }
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_str = false;
        for c in line.chars() {
            match c {
                '\'' => in_str = !in_str,
                '%' | '#' if !in_str => break,
                _ => {}
            }
            out.push(c);
        }
        out.push('\n');
    }
    out
}

fn scan_assignments(text: &str) -> Result<Vec<Assignment<'_>>, CaseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        // left-hand side up to '=' or end of statement
        let start = pos;
        while pos < bytes.len() && !matches!(bytes[pos], b'=' | b';' | b'\n') {
            pos += 1;
        }
        if pos >= bytes.len() || bytes[pos] != b'=' {
            pos += 1;
            continue;
        }
        let lhs = text[start..pos].trim();
        pos += 1;
        while pos < bytes.len() && matches!(bytes[pos], b' ' | b'\t' | b'\r') {
            pos += 1;
        }
        let value = match bytes.get(pos) {
            Some(&open @ (b'[' | b'{')) => {
                let close = if open == b'[' { b']' } else { b'}' };
                let body_start = pos + 1;
                let end = text[body_start..]
                    .bytes()
                    .position(|b| b == close)
                    .map(|p| body_start + p)
                    .ok_or(CaseError::Unterminated(field_name(lhs).to_string()))?;
                pos = end + 1;
                if open == b'[' {
                    Value::Matrix(&text[body_start..end])
                } else {
                    Value::Other
                }
            }
            _ => {
                let vstart = pos;
                while pos < bytes.len() && !matches!(bytes[pos], b';' | b'\n') {
                    pos += 1;
                }
                Value::Scalar(&text[vstart..pos])
            }
        };
        // skip to end of statement
        while pos < bytes.len() && !matches!(bytes[pos], b';' | b'\n') {
            pos += 1;
        }
        pos += 1;
        if lhs.contains('.') {
            out.push(Assignment { field: field_name(lhs), value });
        }
    }
    Ok(out)
}

fn field_name(lhs: &str) -> &str {
    lhs.rsplit('.').next().unwrap_or(lhs).trim()
}

fn parse_matrix(table: &'static str, body: &str, min_cols: usize) -> Result<Vec<Vec<f64>>, CaseError> {
    let mut rows = Vec::new();
    for raw in body.split([';', '\n']) {
        let tokens: Vec<&str> = raw
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|_| CaseError::MalformedRow {
                table,
                row: row_no,
                reason: format!("not a number: {tok:?}"),
            })?;
            if v.is_nan() {
                return Err(CaseError::MalformedRow {
                    table,
                    row: row_no,
                    reason: "NaN entry".into(),
                });
            }
            row.push(v);
        }
        if row.len() < min_cols {
            return Err(CaseError::MalformedRow {
                table,
                row: row_no,
                reason: format!("expected at least {min_cols} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CaseError::MissingTable(table));
    }
    Ok(rows)
}
