use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::wls::EstimationResult;
use super::EstimationError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BddPolicy {
    pub confidence: f64,
    pub lnr_threshold: f64,
}

impl Default for BddPolicy {
    fn default() -> Self {
        BddPolicy {
            confidence: 0.95,
            lnr_threshold: 3.0,
        }
    }
}

impl BddPolicy {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) || !(self.lnr_threshold > 0.0) {
            return Err(EstimationError::InvalidPolicy(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareVerdict {
    pub objective: f64,
    pub threshold: f64,
    pub dof: i64,
    pub confidence: f64,
    /// J exceeds the threshold.
    pub detected: bool,
}

/// Inverse chi-square CDF at `confidence` with `dof` degrees of freedom.
pub fn chi_square_threshold(dof: i64, confidence: f64) -> Result<f64, EstimationError> {
    if dof < 1 {
        return Err(EstimationError::InsufficientRedundancy(dof));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| EstimationError::Numerical(e.to_string()))?;
    Ok(dist.inverse_cdf(confidence))
}

pub fn chi_square_test(res: &EstimationResult, policy: &BddPolicy) -> Result<ChiSquareVerdict, EstimationError> {
    policy.validate()?;
    let threshold = chi_square_threshold(res.dof, policy.confidence)?;
    Ok(ChiSquareVerdict {
        objective: res.objective,
        threshold,
        dof: res.dof,
        confidence: policy.confidence,
        detected: res.objective > threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnrOutcome {
    pub id: String,
    /// |r_i^N| of the selected measurement.
    pub value: f64,
    /// Measurements excluded because Ω_ii is numerically zero.
    pub critical: Vec<String>,
}

/// Largest |r_i^N|; ties go to the lexicographically lowest id.
pub fn largest_normalized_residual(res: &EstimationResult) -> Result<LnrOutcome, EstimationError> {
    let mut best: Option<(f64, &str)> = None;
    let mut critical = Vec::new();
    for (id, rn) in res.ids.iter().zip(&res.normalized) {
        match rn {
            None => critical.push(id.clone()),
            Some(v) => {
                let v = v.abs();
                let better = match best {
                    None => true,
                    Some((bv, bid)) => v > bv || (v == bv && id.as_str() < bid),
                };
                if better {
                    best = Some((v, id));
                }
            }
        }
    }
    let (value, id) = best.ok_or(EstimationError::AllCritical)?;
    Ok(LnrOutcome {
        id: id.to_string(),
        value,
        critical,
    })
}

/// Combined chi-square and largest-normalized-residual verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BddVerdict {
    pub chi_square: ChiSquareVerdict,
    pub lnr: LnrOutcome,
    pub lnr_threshold: f64,
    pub lnr_flagged: bool,
    pub detected: bool,
}

pub fn run_bdd(res: &EstimationResult, policy: &BddPolicy) -> Result<BddVerdict, EstimationError> {
    let chi_square = chi_square_test(res, policy)?;
    let lnr = largest_normalized_residual(res)?;
    let lnr_flagged = lnr.value > policy.lnr_threshold;
    Ok(BddVerdict {
        detected: chi_square.detected || lnr_flagged,
        chi_square,
        lnr,
        lnr_threshold: policy.lnr_threshold,
        lnr_flagged,
    })
}
