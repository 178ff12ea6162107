use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::netmodel::NetworkCase;

/// Bus voltage magnitudes (p.u.) and angles (radians), stored by bus
/// position in the owning case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub bus: Vec<u32>,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
}

impl StateVector {
    /// V = 1, θ = 0 everywhere; generator buses take their setpoints.
    pub fn flat_start(case: &NetworkCase) -> Self {
        let bus: Vec<u32> = case.buses.iter().map(|b| b.id).collect();
        let vm = case
            .buses
            .iter()
            .map(|b| match b.kind {
                crate::netmodel::BusKind::Pq => 1.0,
                _ => case.voltage_setpoint(b.id).unwrap_or(1.0),
            })
            .collect();
        StateVector {
            va: vec![0.0; bus.len()],
            vm,
            bus,
        }
    }

    /// V = 1, θ = 0 at every bus, regardless of setpoints.
    pub fn uniform(case: &NetworkCase) -> Self {
        let n = case.buses.len();
        StateVector {
            bus: case.buses.iter().map(|b| b.id).collect(),
            vm: vec![1.0; n],
            va: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.bus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bus.is_empty()
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.bus.iter().position(|&b| b == id)
    }

    /// (V, θ) of a bus by id.
    pub fn get(&self, id: u32) -> Option<(f64, f64)> {
        self.position(id).map(|i| (self.vm[i], self.va[i]))
    }

    pub fn set(&mut self, id: u32, vm: f64, va: f64) -> bool {
        match self.position(id) {
            Some(i) => {
                self.vm[i] = vm;
                self.va[i] = va;
                true
            }
            None => false,
        }
    }

    pub fn phasor(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.vm[i], self.va[i])
    }

    pub fn phasors(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.phasor(i)).collect()
    }

    /// Whether the state is laid out for `case` and has a zero slack angle
    /// and positive magnitudes.
    pub fn is_valid_for(&self, case: &NetworkCase) -> bool {
        self.bus.len() == case.buses.len()
            && self.bus.iter().zip(&case.buses).all(|(&id, b)| id == b.id)
            && self.va[case.slack_index()] == 0.0
            && self.vm.iter().all(|&v| v > 0.0)
            && self.va.iter().all(|a| a.is_finite())
    }
}
