use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::netmodel::{AdmittanceModel, BranchAdmittance, Grid};

/// Complex power at both ends of a branch, positive into the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub pf: f64,
    pub qf: f64,
    pub pt: f64,
    pub qt: f64,
    pub sf: f64,
    pub st: f64,
}

impl BranchFlow {
    fn from_complex(sf: Complex64, st: Complex64) -> Self {
        BranchFlow {
            pf: sf.re,
            qf: sf.im,
            pt: st.re,
            qt: st.im,
            sf: sf.norm(),
            st: st.norm(),
        }
    }

    /// Flow seen at one end, given the bus position of that end.
    pub fn at_end(&self, stamp: &BranchAdmittance, bus: usize) -> (f64, f64) {
        if bus == stamp.from {
            (self.pf, self.qf)
        } else {
            (self.pt, self.qt)
        }
    }
}

/// Two-port evaluation of one branch at the given state.
pub fn branch_flow(state: &StateVector, stamp: &BranchAdmittance) -> BranchFlow {
    let vf = state.phasor(stamp.from);
    let vt = state.phasor(stamp.to);
    let sf = vf * (stamp.yff * vf + stamp.yft * vt).conj();
    let st = vt * (stamp.ytf * vf + stamp.ytt * vt).conj();
    BranchFlow::from_complex(sf, st)
}

/// Flows for every in-service branch, in admittance-model order.
pub fn all_branch_flows(model: &AdmittanceModel, state: &StateVector) -> Vec<BranchFlow> {
    model.branches.iter().map(|b| branch_flow(state, b)).collect()
}

/// Net complex injection (generation minus load) at a bus position:
/// S_k = V_k conj(Σ_j Y_kj V_j).
pub fn injection_at(model: &AdmittanceModel, state: &StateVector, k: usize) -> Complex64 {
    let vk = state.phasor(k);
    let current: Complex64 = model.ybus.row(k).map(|(j, y)| y * state.phasor(j)).sum();
    vk * current.conj()
}

/// (P, Q) injection at a bus id, or `None` when the bus is unknown.
pub fn bus_injection(grid: &Grid, state: &StateVector, bus: u32) -> Option<(f64, f64)> {
    let k = grid.case.bus_index(bus)?;
    let s = injection_at(&grid.model, state, k);
    Some((s.re, s.im))
}

pub fn all_injections(model: &AdmittanceModel, state: &StateVector) -> Vec<Complex64> {
    let v = state.phasors();
    let i = model.ybus.mul_vec(&v);
    v.iter().zip(&i).map(|(v, i)| v * i.conj()).collect()
}

/// Partial derivatives of a complex power quantity with respect to one
/// bus's angle and magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPartial {
    pub bus: usize,
    pub d_angle: Complex64,
    pub d_mag: Complex64,
}

/// ∂S_k/∂θ_j and ∂S_k/∂V_j for every bus j coupled to k (including k).
pub fn injection_partials(model: &AdmittanceModel, state: &StateVector, k: usize) -> Vec<PowerPartial> {
    let j_unit = Complex64::new(0.0, 1.0);
    let vk = state.vm[k];
    let mut own = PowerPartial {
        bus: k,
        d_angle: Complex64::new(0.0, 0.0),
        d_mag: Complex64::new(0.0, 0.0),
    };
    let mut out = Vec::new();
    for (j, y) in model.ybus.row(k) {
        if j == k {
            own.d_mag += 2.0 * vk * y.conj();
            continue;
        }
        let t = vk * state.vm[j] * y.conj() * Complex64::from_polar(1.0, state.va[k] - state.va[j]);
        own.d_angle += j_unit * t;
        own.d_mag += t / vk;
        out.push(PowerPartial {
            bus: j,
            d_angle: -j_unit * t,
            d_mag: t / state.vm[j],
        });
    }
    out.push(own);
    out.sort_by_key(|p| p.bus);
    out
}

/// Partials of the from-end (`at_from = true`) or to-end complex flow
/// with respect to the two terminal buses: `[from, to]`.
pub fn branch_flow_partials(
    state: &StateVector,
    stamp: &BranchAdmittance,
    at_from: bool,
) -> [PowerPartial; 2] {
    let j_unit = Complex64::new(0.0, 1.0);
    let (near, far, y_self, y_mut) = if at_from {
        (stamp.from, stamp.to, stamp.yff, stamp.yft)
    } else {
        (stamp.to, stamp.from, stamp.ytt, stamp.ytf)
    };
    let vn = state.vm[near];
    let vf = state.vm[far];
    let a = vn * vf * y_mut.conj() * Complex64::from_polar(1.0, state.va[near] - state.va[far]);
    let near_p = PowerPartial {
        bus: near,
        d_angle: j_unit * a,
        d_mag: 2.0 * vn * y_self.conj() + a / vn,
    };
    let far_p = PowerPartial {
        bus: far,
        d_angle: -j_unit * a,
        d_mag: a / vf,
    };
    if at_from {
        [near_p, far_p]
    } else {
        [far_p, near_p]
    }
}
