use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::flows::{injection_at, injection_partials};
use super::{PowerFlowError, StateVector};
use crate::netmodel::{BusKind, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerFlowOptions {
    /// Bound on the largest P/Q mismatch, p.u.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { tol: 1e-8, max_iter: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub state: StateVector,
    pub iterations: usize,
    /// Infinity norm of the mismatch before each Newton step and after the
    /// last one.
    pub mismatch_history: Vec<f64>,
}

impl PowerFlowSolution {
    pub fn final_mismatch(&self) -> f64 {
        *self.mismatch_history.last().unwrap_or(&f64::INFINITY)
    }
}

/// Full Newton-Raphson power flow in polar coordinates from a flat start.
/// Reactive limits are not enforced.
pub fn solve_power_flow(grid: &Grid, opts: &PowerFlowOptions) -> Result<PowerFlowSolution, PowerFlowError> {
    if !(opts.tol > 0.0) {
        return Err(PowerFlowError::InvalidTolerance(opts.tol));
    }
    let case = &grid.case;
    let sched = case.scheduled_injections();
    let pvpq: Vec<usize> = (0..grid.n_bus())
        .filter(|&i| case.buses[i].kind != BusKind::Slack)
        .collect();
    let pq: Vec<usize> = (0..grid.n_bus())
        .filter(|&i| case.buses[i].kind == BusKind::Pq)
        .collect();
    let n_ang = pvpq.len();
    let dim = n_ang + pq.len();

    // column of each bus's angle / magnitude in the Jacobian
    let mut ang_col = vec![None; grid.n_bus()];
    let mut mag_col = vec![None; grid.n_bus()];
    for (c, &i) in pvpq.iter().enumerate() {
        ang_col[i] = Some(c);
    }
    for (c, &i) in pq.iter().enumerate() {
        mag_col[i] = Some(n_ang + c);
    }

    let mut state = StateVector::flat_start(case);
    let mismatch = |state: &StateVector| -> DVector<f64> {
        let mut f = DVector::zeros(dim);
        for (r, &i) in pvpq.iter().enumerate() {
            let s = injection_at(&grid.model, state, i);
            f[r] = s.re - sched[i].0;
            if let Some(c) = mag_col[i] {
                f[c] = s.im - sched[i].1;
            }
        }
        f
    };

    let mut history = Vec::new();
    let mut f = mismatch(&state);
    let mut norm = f.amax();
    history.push(norm);
    let mut iterations = 0;
    while norm >= opts.tol {
        if iterations == opts.max_iter {
            return Err(PowerFlowError::NotConverged {
                iterations,
                mismatch: norm,
            });
        }
        iterations += 1;

        let mut jac = DMatrix::zeros(dim, dim);
        for (r, &i) in pvpq.iter().enumerate() {
            let q_row = mag_col[i];
            for p in injection_partials(&grid.model, &state, i) {
                if let Some(c) = ang_col[p.bus] {
                    jac[(r, c)] = p.d_angle.re;
                    if let Some(qr) = q_row {
                        jac[(qr, c)] = p.d_angle.im;
                    }
                }
                if let Some(c) = mag_col[p.bus] {
                    jac[(r, c)] = p.d_mag.re;
                    if let Some(qr) = q_row {
                        jac[(qr, c)] = p.d_mag.im;
                    }
                }
            }
        }
        let dx = jac.lu().solve(&(-&f)).ok_or(PowerFlowError::SingularJacobian { iteration: iterations })?;
        for (c, &i) in pvpq.iter().enumerate() {
            state.va[i] += dx[c];
        }
        for (c, &i) in pq.iter().enumerate() {
            state.vm[i] += dx[n_ang + c];
        }
        f = mismatch(&state);
        norm = f.amax();
        if !norm.is_finite() {
            return Err(PowerFlowError::NotConverged {
                iterations,
                mismatch: norm,
            });
        }
        history.push(norm);
        log::trace!("newton iteration {iterations}: mismatch {norm:e}");
    }
    log::debug!("power flow converged in {iterations} iterations");
    Ok(PowerFlowSolution {
        state,
        iterations,
        mismatch_history: history,
    })
}
