use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::measure::{eval_h, eval_jacobian, MeasurementSet, StateIndex};
use super::EstimationError;
use crate::acpf::StateVector;
use crate::netmodel::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WlsOptions {
    /// Converged once the largest accepted state update is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WlsOptions {
    fn default() -> Self {
        WlsOptions { tol: 1e-10, max_iter: 50 }
    }
}

/// Below this residual variance a measurement is treated as critical.
pub const CRITICAL_OMEGA: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub x_hat: StateVector,
    pub ids: Vec<String>,
    /// z − h(x̂), in measurement order.
    pub residuals: Vec<f64>,
    /// Σ r_i² / σ_i².
    pub objective: f64,
    /// Diagonal of the residual covariance Ω = R − H G⁻¹ Hᵀ.
    pub omega: Vec<f64>,
    /// r_i / sqrt(Ω_ii); `None` for critical measurements.
    pub normalized: Vec<Option<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub dof: i64,
    pub gradient_norm: f64,
    pub objective_history: Vec<f64>,
}

fn weighted_objective(r: &[f64], w: &[f64]) -> f64 {
    r.iter().zip(w).map(|(r, w)| r * r * w).sum()
}

/// Gauss-Newton WLS estimation with a backtracking line search on the
/// weighted objective. `init = None` starts flat (V = 1, θ = 0).
pub fn wls_estimate(
    grid: &Grid,
    ms: &MeasurementSet,
    init: Option<&StateVector>,
    opts: &WlsOptions,
) -> Result<EstimationResult, EstimationError> {
    let layout = ms.layout();
    let index = StateIndex::new(grid);
    let n = index.dim();
    let m = ms.len();
    if m <= n {
        return Err(EstimationError::Unobservable(format!("{m} measurements for {n} states")));
    }
    let z = ms.values();
    let weights: Vec<f64> = ms.measurements.iter().map(|m| 1.0 / m.variance).collect();
    if let Some(bad) = ms.measurements.iter().find(|m| !(m.variance > 0.0) || !m.value.is_finite()) {
        return Err(EstimationError::InvalidMeasurement(bad.point.id.clone()));
    }

    let mut state = match init {
        Some(s) => {
            let mut s = s.clone();
            s.va[index.slack] = 0.0;
            s
        }
        None => StateVector::uniform(&grid.case),
    };
    let residual = |s: &StateVector| -> Vec<f64> {
        eval_h(grid, s, &layout).iter().zip(&z).map(|(h, z)| z - h).collect()
    };

    let mut r = residual(&state);
    let mut objective = weighted_objective(&r, &weights);
    let mut history = vec![objective];
    let mut iterations = 0;
    let mut converged = false;
    let mut x = index.to_vector(&state);

    while iterations < opts.max_iter {
        iterations += 1;
        let h = eval_jacobian(grid, &state, &layout);
        let (gain, grad) = normal_equations(&h, &weights, &r);
        let chol = gain
            .cholesky()
            .ok_or_else(|| EstimationError::Unobservable("gain matrix is not positive definite".into()))?;
        let dx = chol.solve(&grad);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial_x: Vec<f64> = x.iter().zip(dx.iter()).map(|(x, d)| x + alpha * d).collect();
            let mut trial = state.clone();
            index.apply(&mut trial, &trial_x);
            if trial.vm.iter().all(|&v| v > 0.0) {
                let tr = residual(&trial);
                let tj = weighted_objective(&tr, &weights);
                if tj.is_finite() && tj <= objective * (1.0 + 1e-12) + 1e-300 {
                    accepted = Some((trial_x, trial, tr, tj));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let step = alpha * dx.amax();
        match accepted {
            Some((nx, ns, nr, nj)) => {
                x = nx;
                state = ns;
                r = nr;
                objective = nj;
                history.push(objective);
            }
            None => {
                // No descent along the GN direction: stationary to working precision.
                converged = dx.amax() < opts.tol.sqrt();
                break;
            }
        }
        if step < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EstimationError::NotConverged {
            iterations,
            objective,
        });
    }

    let h = eval_jacobian(grid, &state, &layout);
    let (gain, grad) = normal_equations(&h, &weights, &r);
    let gain_inv = gain
        .cholesky()
        .ok_or_else(|| EstimationError::Unobservable("gain matrix is not positive definite".into()))?
        .inverse();
    let hg = &h * &gain_inv;
    let omega: Vec<f64> = (0..m)
        .map(|i| ms.measurements[i].variance - hg.row(i).dot(&h.row(i)))
        .collect();
    let normalized = omega
        .iter()
        .zip(&r)
        .map(|(&o, &ri)| (o >= CRITICAL_OMEGA).then(|| ri / o.sqrt()))
        .collect();

    Ok(EstimationResult {
        x_hat: state,
        ids: ms.measurements.iter().map(|m| m.point.id.clone()).collect(),
        residuals: r,
        objective,
        omega,
        normalized,
        converged,
        iterations,
        dof: m as i64 - n as i64,
        gradient_norm: grad.norm(),
        objective_history: history,
    })
}

/// G = Hᵀ W H and Hᵀ W r.
fn normal_equations(h: &DMatrix<f64>, w: &[f64], r: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let mut hw = h.clone();
    for (i, &wi) in w.iter().enumerate() {
        hw.row_mut(i).scale_mut(wi);
    }
    let gain = h.transpose() * &hw;
    let grad = hw.transpose() * DVector::from_column_slice(r);
    (gain, grad)
}
