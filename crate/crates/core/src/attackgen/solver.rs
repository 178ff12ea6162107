//! Augmented-Lagrangian design of the attacked interior state.
//!
//! Decision variables are the angles then magnitudes of the interior
//! buses, in ascending bus-id order. Equalities hold the zero-injection
//! interior buses at zero net injection; inequalities are the overload
//! targets and the magnitude bounds, folded into the least-squares merit
//! through the closed-form non-negative slack of the PHR method. Each
//! outer round runs a damped Gauss-Newton solve with backtracking on the
//! merit, updates the multipliers and grows the penalty.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttackError, AttackMode, AttackSpec};
use crate::acpf::{branch_flow, branch_flow_partials, injection_at, injection_partials, StateVector};
use crate::netmodel::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Largest acceptable constraint violation, p.u.
    pub tol_eq: f64,
    /// Inner Gauss-Newton step tolerance.
    pub tol_opt: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Amount by which the returned flow exceeds the overload bound.
    pub overload_margin: f64,
    /// Arbitrary mode: widening of [Vmin, Vmax], p.u.
    pub bound_widening: f64,
    /// Arbitrary mode: half-width of the uniform magnitude perturbation, p.u.
    pub perturb_vm: f64,
    /// Arbitrary mode: half-width of the uniform angle perturbation, rad.
    pub perturb_va: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol_eq: 1e-6,
            tol_opt: 1e-12,
            max_outer: 20,
            max_inner: 200,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            overload_margin: 1e-9,
            bound_widening: 0.1,
            perturb_vm: 0.05,
            perturb_va: 0.35,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub mode: AttackMode,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub polish_iterations: usize,
    /// Largest violation of the stated constraints at the returned point.
    pub max_violation: f64,
    /// ‖x_attacked − x_base‖₂ over interior states.
    pub deviation_norm: f64,
    pub final_penalty: f64,
}

const POLISH_TOL: f64 = 1e-12;

struct Problem<'a> {
    grid: &'a Grid,
    base: &'a StateVector,
    interior: Vec<usize>,
    /// Decision column of each bus position's angle (magnitude is +k).
    col: Vec<Option<usize>>,
    zero_inj: Vec<usize>,
    /// (model slot, bound) with g = Pf − bound.
    targets: Vec<(usize, f64)>,
    v_lo: Vec<f64>,
    v_hi: Vec<f64>,
    y0: Vec<f64>,
    optimal: bool,
}

impl<'a> Problem<'a> {
    fn k(&self) -> usize {
        self.interior.len()
    }

    fn dim(&self) -> usize {
        2 * self.k()
    }

    fn n_eq(&self) -> usize {
        2 * self.zero_inj.len()
    }

    fn n_ineq(&self) -> usize {
        self.targets.len() + 2 * self.k()
    }

    fn state(&self, y: &[f64]) -> StateVector {
        let mut s = self.base.clone();
        let k = self.k();
        for (c, &i) in self.interior.iter().enumerate() {
            s.va[i] = y[c];
            s.vm[i] = y[k + c];
        }
        s
    }

    fn eq(&self, s: &StateVector) -> Vec<f64> {
        self.zero_inj
            .iter()
            .flat_map(|&b| {
                let inj = injection_at(&self.grid.model, s, b);
                [inj.re, inj.im]
            })
            .collect()
    }

    fn eq_jac(&self, s: &StateVector) -> DMatrix<f64> {
        let k = self.k();
        let mut j = DMatrix::zeros(self.n_eq(), self.dim());
        for (r, &b) in self.zero_inj.iter().enumerate() {
            for p in injection_partials(&self.grid.model, s, b) {
                if let Some(c) = self.col[p.bus] {
                    j[(2 * r, c)] = p.d_angle.re;
                    j[(2 * r + 1, c)] = p.d_angle.im;
                    j[(2 * r, k + c)] = p.d_mag.re;
                    j[(2 * r + 1, k + c)] = p.d_mag.im;
                }
            }
        }
        j
    }

    /// Inequalities g ≥ 0: targets, then lower and upper magnitude bounds.
    fn ineq(&self, y: &[f64], s: &StateVector) -> Vec<f64> {
        let k = self.k();
        let mut g: Vec<f64> = self
            .targets
            .iter()
            .map(|&(slot, bound)| branch_flow(s, &self.grid.model.branches[slot]).pf - bound)
            .collect();
        g.extend((0..k).map(|c| y[k + c] - self.v_lo[c]));
        g.extend((0..k).map(|c| self.v_hi[c] - y[k + c]));
        g
    }

    fn ineq_jac(&self, s: &StateVector) -> DMatrix<f64> {
        let k = self.k();
        let nt = self.targets.len();
        let mut j = DMatrix::zeros(self.n_ineq(), self.dim());
        for (r, &(slot, _)) in self.targets.iter().enumerate() {
            for p in branch_flow_partials(s, &self.grid.model.branches[slot], true) {
                if let Some(c) = self.col[p.bus] {
                    j[(r, c)] += p.d_angle.re;
                    j[(r, k + c)] += p.d_mag.re;
                }
            }
        }
        for c in 0..k {
            j[(nt + c, k + c)] = 1.0;
            j[(nt + k + c, k + c)] = -1.0;
        }
        j
    }

    fn max_violation(&self, y: &[f64], margin: f64) -> f64 {
        let s = self.state(y);
        let eq = self.eq(&s).into_iter().map(f64::abs);
        let nt = self.targets.len();
        let ineq = self
            .ineq(y, &s)
            .into_iter()
            .enumerate()
            .map(|(i, g)| if i < nt { (-(g + margin)).max(0.0) } else { (-g).max(0.0) });
        eq.chain(ineq).fold(0.0, f64::max)
    }

    fn deviation(&self, y: &[f64]) -> f64 {
        y.iter().zip(&self.y0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

struct Multipliers {
    eq: Vec<f64>,
    ineq: Vec<f64>,
    penalty: f64,
}

/// Least-squares merit R(y) whose half squared norm is the augmented
/// Lagrangian up to a constant, with its Jacobian.
fn merit(p: &Problem, mult: &Multipliers, y: &[f64], with_jac: bool) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let s = p.state(y);
    if s.vm.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let n = p.dim();
    let rows = if p.optimal { n } else { 0 } + p.n_eq() + p.n_ineq();
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(if with_jac { rows } else { 0 }, n);
    let sq = mult.penalty.sqrt();
    let mut row = 0;
    if p.optimal {
        let w = std::f64::consts::SQRT_2;
        for c in 0..n {
            r[row] = w * (y[c] - p.y0[c]);
            if with_jac {
                jac[(row, c)] = w;
            }
            row += 1;
        }
    }
    let c = p.eq(&s);
    let cj = with_jac.then(|| p.eq_jac(&s));
    for (i, (&ci, &li)) in c.iter().zip(&mult.eq).enumerate() {
        r[row] = sq * (ci + li / mult.penalty);
        if let Some(cj) = &cj {
            jac.row_mut(row).copy_from(&(cj.row(i) * sq));
        }
        row += 1;
    }
    let g = p.ineq(y, &s);
    let gj = with_jac.then(|| p.ineq_jac(&s));
    for (i, (&gi, &ni)) in g.iter().zip(&mult.ineq).enumerate() {
        let t = ni / mult.penalty - gi;
        if t > 0.0 {
            r[row] = sq * t;
            if let Some(gj) = &gj {
                jac.row_mut(row).copy_from(&(gj.row(i) * -sq));
            }
        }
        row += 1;
    }
    if r.iter().all(|v| v.is_finite()) {
        Some((r, jac))
    } else {
        None
    }
}

/// Minimum-norm least-squares solution of A x = b.
fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Some(DVector::zeros(a.ncols()));
    }
    svd.solve(b, smax * 1e-13).ok()
}

fn inner_solve(p: &Problem, mult: &Multipliers, y: &mut Vec<f64>, params: &SolverParams) -> Result<usize, AttackError> {
    let (mut r, mut jac) = merit(p, mult, y, true).ok_or(AttackError::NotConverged {
        stage: "inner solve",
        max_violation: f64::NAN,
    })?;
    let mut phi = 0.5 * r.norm_squared();
    for it in 0..params.max_inner {
        let step = min_norm_solve(&jac, &(-&r)).ok_or(AttackError::NotConverged {
            stage: "inner linear solve",
            max_violation: f64::NAN,
        })?;
        let slope = (jac.transpose() * &r).dot(&step);
        if !(slope < 0.0) {
            return Ok(it);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Some((tr, _)) = merit(p, mult, &trial, false) {
                let tphi = 0.5 * tr.norm_squared();
                if tphi <= phi + 1e-4 * alpha * slope {
                    accepted = Some((trial, tphi));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, tphi)) = accepted else {
            return Ok(it);
        };
        let moved = alpha * step.amax();
        *y = trial;
        let improvement = phi - tphi;
        phi = tphi;
        if moved < params.tol_opt || improvement <= 1e-16 * phi.max(1e-300) {
            return Ok(it + 1);
        }
        let (nr, nj) = merit(p, mult, y, true).expect("accepted trial has a finite merit");
        r = nr;
        jac = nj;
    }
    Ok(params.max_inner)
}

/// Newton projection onto the violated constraints with minimum-norm
/// steps, to push the final violation below working precision.
fn polish(p: &Problem, y: &mut [f64], margin: f64) -> usize {
    let nt = p.targets.len();
    for it in 0..30 {
        let s = p.state(y);
        let c = p.eq(&s);
        let g = p.ineq(y, &s);
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
        let cj = p.eq_jac(&s);
        for (i, &ci) in c.iter().enumerate() {
            rows.push((ci, cj.row(i).iter().copied().collect()));
        }
        let gj = p.ineq_jac(&s);
        for (i, &gi) in g.iter().enumerate() {
            // aim the overload rows strictly inside the feasible side
            let target = if i < nt { margin } else { 0.0 };
            if gi < target {
                rows.push((gi - target, gj.row(i).iter().copied().collect()));
            }
        }
        let worst = rows.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max);
        if worst <= POLISH_TOL {
            return it;
        }
        let a = DMatrix::from_fn(rows.len(), p.dim(), |i, j| rows[i].1[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|(v, _)| -v));
        let Some(step) = min_norm_solve(&a, &b) else {
            return it;
        };
        for (yi, d) in y.iter_mut().zip(step.iter()) {
            *yi += d;
        }
    }
    30
}

pub(super) struct DesignOutcome {
    pub x_attacked: StateVector,
    pub report: SolverReport,
}

pub(super) fn solve(grid: &Grid, base: &StateVector, spec: &AttackSpec) -> Result<DesignOutcome, AttackError> {
    let params = &spec.params;
    let case = &grid.case;
    let zone = &spec.zone;
    let interior: Vec<usize> = zone.interior.iter().map(|&b| case.bus_index(b).unwrap()).collect();
    let k = interior.len();
    let mut col = vec![None; grid.n_bus()];
    for (c, &i) in interior.iter().enumerate() {
        col[i] = Some(c);
    }
    let widen = match spec.mode {
        AttackMode::Optimal => 0.0,
        AttackMode::Arbitrary => params.bound_widening,
    };
    let mut targets = Vec::new();
    for t in &spec.targets {
        let slot = grid.model.branch_slot[t.branch].expect("validated target is in service");
        let base_pf = branch_flow(base, &grid.model.branches[slot]).pf;
        targets.push((slot, t.lambda * base_pf + params.overload_margin));
    }
    let mut y0 = vec![0.0; 2 * k];
    for (c, &i) in interior.iter().enumerate() {
        y0[c] = base.va[i];
        y0[k + c] = base.vm[i];
    }
    let problem = Problem {
        grid,
        base,
        zero_inj: zone.zero_injection.iter().map(|&b| case.bus_index(b).unwrap()).collect(),
        v_lo: interior.iter().map(|&i| case.buses[i].vmin - widen).collect(),
        v_hi: interior.iter().map(|&i| case.buses[i].vmax + widen).collect(),
        interior,
        col,
        targets,
        y0: y0.clone(),
        optimal: spec.mode == AttackMode::Optimal,
    };

    let mut y = match spec.mode {
        AttackMode::Optimal => y0.clone(),
        AttackMode::Arbitrary => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut y = y0.clone();
            for c in 0..k {
                y[k + c] += rng.random_range(-params.perturb_vm..=params.perturb_vm);
                y[c] += rng.random_range(-params.perturb_va..=params.perturb_va);
            }
            y
        }
    };

    // The unconstrained minimizer is the base point itself.
    if spec.mode == AttackMode::Optimal && problem.max_violation(&y, 0.0) < params.tol_eq {
        let targets_ok = problem.ineq(&y, &problem.state(&y))[..problem.targets.len()]
            .iter()
            .all(|&g| g + params.overload_margin >= 0.0);
        if targets_ok {
            return Ok(DesignOutcome {
                x_attacked: base.clone(),
                report: SolverReport {
                    mode: spec.mode,
                    outer_iterations: 0,
                    inner_iterations: 0,
                    polish_iterations: 0,
                    max_violation: problem.max_violation(&y, params.overload_margin),
                    deviation_norm: 0.0,
                    final_penalty: params.penalty_init,
                },
            });
        }
    }

    let mut mult = Multipliers {
        eq: vec![0.0; problem.n_eq()],
        ineq: vec![0.0; problem.n_ineq()],
        penalty: params.penalty_init,
    };
    let mut inner_total = 0;
    let mut outer = 0;
    let mut violation = f64::INFINITY;
    while outer < params.max_outer {
        outer += 1;
        inner_total += inner_solve(&problem, &mult, &mut y, params)?;
        let s = problem.state(&y);
        let c = problem.eq(&s);
        let g = problem.ineq(&y, &s);
        for (l, ci) in mult.eq.iter_mut().zip(&c) {
            *l += mult.penalty * ci;
        }
        for (nu, gi) in mult.ineq.iter_mut().zip(&g) {
            *nu = (*nu - mult.penalty * gi).max(0.0);
        }
        violation = problem.max_violation(&y, 0.0);
        log::debug!(
            "outer {outer}: violation {violation:e}, penalty {:e}, deviation {:e}",
            mult.penalty,
            problem.deviation(&y)
        );
        if violation < params.tol_eq {
            break;
        }
        mult.penalty *= params.penalty_growth;
    }
    if violation >= params.tol_eq {
        return Err(AttackError::Infeasible { max_violation: violation });
    }

    let polish_iterations = polish(&problem, &mut y, params.overload_margin);
    let max_violation = problem.max_violation(&y, params.overload_margin);
    if max_violation >= params.tol_eq || problem.state(&y).vm.iter().any(|&v| !(v > 0.0)) {
        return Err(AttackError::Infeasible { max_violation });
    }
    Ok(DesignOutcome {
        x_attacked: problem.state(&y),
        report: SolverReport {
            mode: spec.mode,
            outer_iterations: outer,
            inner_iterations: inner_total,
            polish_iterations,
            max_violation,
            deviation_norm: problem.deviation(&y),
            final_penalty: mult.penalty,
        },
    })
}
