//! Independent reference computations shared by the integration and
//! acceptance suites.

use acfdi::netmodel::NetworkCase;
use acfdi::stateest::{eval_h, eval_jacobian, MeasurementLayout, StateIndex};
use acfdi::{Grid, StateVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ybus through incidence matrices: Cfᵀ Yf + Ctᵀ Yt + diag(Ysh).
pub fn dense_ybus_oracle(case: &NetworkCase) -> Vec<Vec<Complex64>> {
    let n = case.buses.len();
    let idx = |id: u32| case.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let bc = Complex64::new(0.0, br.b / 2.0);
        let t = Complex64::from_polar(br.tap, br.shift);
        // Yf row: [ (ys+bc)/|t|², -ys/conj(t) ]  Yt row: [ -ys/t, ys+bc ]
        let yf = [(ys + bc) / (t * t.conj()), -ys / t.conj()];
        let yt = [-ys / t, ys + bc];
        let (f, tb) = (idx(br.from), idx(br.to));
        let cols = [f, tb];
        for c in 0..2 {
            y[f][cols[c]] += yf[c];
            y[tb][cols[c]] += yt[c];
        }
    }
    for (i, b) in case.buses.iter().enumerate() {
        y[i][i] += Complex64::new(b.gs, b.bs);
    }
    y
}

/// Largest entry-wise gap between the model's Ybus and the oracle.
pub fn ybus_max_gap(grid: &Grid) -> f64 {
    let oracle = dense_ybus_oracle(&grid.case);
    let n = grid.n_bus();
    let mut worst = 0.0f64;
    for (i, row) in oracle.iter().enumerate().take(n) {
        for (j, &o) in row.iter().enumerate().take(n) {
            worst = worst.max((grid.model.ybus.get(i, j) - o).norm());
        }
    }
    worst
}

pub fn random_state(grid: &Grid, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = StateVector::flat_start(&grid.case);
    let slack = grid.case.slack_index();
    for i in 0..s.len() {
        s.vm[i] = rng.random_range(0.9..1.1);
        s.va[i] = if i == slack { 0.0 } else { rng.random_range(-0.5..0.5) };
    }
    s
}

/// Max relative gap, |a − fd| / max(|a|, |fd|, 1), between the analytic
/// Jacobian and central differences with step `step` at `states` random points.
pub fn jacobian_fd_max_rel_error(grid: &Grid, states: u64, step: f64) -> f64 {
    let layout = MeasurementLayout::full(grid);
    let index = StateIndex::new(grid);
    let mut worst = 0.0f64;
    for seed in 0..states {
        let s = random_state(grid, seed);
        let jac = eval_jacobian(grid, &s, &layout);
        let x = index.to_vector(&s);
        for c in 0..index.dim() {
            let (mut plus, mut minus) = (s.clone(), s.clone());
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += step;
            xm[c] -= step;
            index.apply(&mut plus, &xp);
            index.apply(&mut minus, &xm);
            let hp = eval_h(grid, &plus, &layout);
            let hm = eval_h(grid, &minus, &layout);
            for r in 0..layout.len() {
                let fd = (hp[r] - hm[r]) / (2.0 * step);
                let a = jac[(r, c)];
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1.0));
            }
        }
    }
    worst
}

/// Regularized lower incomplete gamma P(a, x): series below a + 1,
/// Lentz continued fraction above.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let prefix = (-x + a * x.ln() - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..10_000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * prefix
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - prefix * h
    }
}

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Chi-square quantile by bisection on P(dof/2, x/2).
pub fn chi_square_quantile(dof: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, dof + 100.0 * dof.sqrt() + 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_p(dof / 2.0, mid / 2.0) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
