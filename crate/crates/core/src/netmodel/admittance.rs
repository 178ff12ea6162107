use num_complex::Complex64;
use serde::Serialize;

use super::case::NetworkCase;

/// Row-compressed sparse complex matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseComplex {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseComplex {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseComplex { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(p) => self.vals[a + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| self.row(i).map(|(j, y)| y * x[j]).sum()).collect()
    }
}

/// Two-port admittance parameters of one in-service branch, with the
/// ends resolved to bus positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchAdmittance {
    pub branch: usize,
    pub from: usize,
    pub to: usize,
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
    /// Series admittance 1/(r + jx).
    pub series: Complex64,
    /// Complex tap t = tap * e^{j shift}.
    pub ratio: Complex64,
}

impl BranchAdmittance {
    /// π-model stamps with the ideal transformer on the from side.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parameters(
        branch: usize,
        from: usize,
        to: usize,
        r: f64,
        x: f64,
        b: f64,
        tap: f64,
        shift: f64,
    ) -> Self {
        let series = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
        let charging = Complex64::new(0.0, b / 2.0);
        let ratio = Complex64::from_polar(tap, shift);
        let ytt = series + charging;
        BranchAdmittance {
            branch,
            from,
            to,
            yff: ytt / (tap * tap),
            yft: -series / ratio.conj(),
            ytf: -series / ratio,
            ytt,
            series,
            ratio,
        }
    }
}

/// Bus admittance matrix plus the per-branch stamps it was built from.
#[derive(Debug, Clone, Serialize)]
pub struct AdmittanceModel {
    pub ybus: SparseComplex,
    pub branches: Vec<BranchAdmittance>,
    /// Bus shunt admittance Gs + jBs per bus position.
    pub shunts: Vec<Complex64>,
    /// For each case branch index, its position in `branches` (None when
    /// out of service).
    pub branch_slot: Vec<Option<usize>>,
}

impl AdmittanceModel {
    pub fn branch(&self, case_branch: usize) -> Option<&BranchAdmittance> {
        self.branch_slot
            .get(case_branch)
            .copied()
            .flatten()
            .map(|s| &self.branches[s])
    }

    /// Branch stamps incident to a bus position.
    pub fn incident(&self, bus: usize) -> impl Iterator<Item = &BranchAdmittance> + '_ {
        self.branches.iter().filter(move |b| b.from == bus || b.to == bus)
    }
}

/// Assemble the nodal admittance matrix of the in-service network.
pub fn build_admittance(case: &NetworkCase) -> AdmittanceModel {
    let n = case.buses.len();
    let mut branches = Vec::new();
    let mut branch_slot = vec![None; case.branches.len()];
    let mut triplets = Vec::with_capacity(4 * case.branches.len() + n);
    for (k, br) in case.in_service_branches() {
        let f = case.bus_index(br.from).expect("validated endpoint");
        let t = case.bus_index(br.to).expect("validated endpoint");
        let stamp = BranchAdmittance::from_parameters(k, f, t, br.r, br.x, br.b, br.tap, br.shift);
        triplets.push((f, f, stamp.yff));
        triplets.push((f, t, stamp.yft));
        triplets.push((t, f, stamp.ytf));
        triplets.push((t, t, stamp.ytt));
        branch_slot[k] = Some(branches.len());
        branches.push(stamp);
    }
    let shunts: Vec<Complex64> = case.buses.iter().map(|b| Complex64::new(b.gs, b.bs)).collect();
    for (i, &y) in shunts.iter().enumerate() {
        if y != Complex64::new(0.0, 0.0) {
            triplets.push((i, i, y));
        }
    }
    AdmittanceModel {
        ybus: SparseComplex::from_triplets(n, triplets),
        branches,
        shunts,
        branch_slot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_case;

    fn two_bus(r: f64, x: f64, b: f64, tap: f64) -> NetworkCase {
        let text = format!(
            "mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0 0 0 1 1 0 230 1 1.1 0.9; 2 1 0 0 0 0 1 1 0 230 1 1.1 0.9];\n\
             mpc.gen = [1 0 0 10 -10 1 100 1 20 0];\nmpc.branch = [1 2 {r} {x} {b} 0 0 0 {tap} 0 1];\n"
        );
        parse_case(&text).unwrap()
    }

    #[test]
    fn single_lossless_branch() {
        let y = build_admittance(&two_bus(0.0, 0.1, 0.0, 0.0)).ybus;
        let c = |re, im| Complex64::new(re, im);
        assert!((y.get(0, 0) - c(0.0, -10.0)).norm() < 1e-12);
        assert!((y.get(0, 1) - c(0.0, 10.0)).norm() < 1e-12);
        assert!((y.get(1, 0) - c(0.0, 10.0)).norm() < 1e-12);
        assert!((y.get(1, 1) - c(0.0, -10.0)).norm() < 1e-12);
    }

    #[test]
    fn off_nominal_tap() {
        let y = build_admittance(&two_bus(0.01, 0.1, 0.0, 1.025)).ybus;
        let series = Complex64::new(1.0, 0.0) / Complex64::new(0.01, 0.1);
        assert!((y.get(0, 0) - series / (1.025 * 1.025)).norm() < 1e-12);
        assert!((y.get(0, 1) + series / 1.025).norm() < 1e-12);
        assert!((y.get(1, 0) + series / 1.025).norm() < 1e-12);
        assert!((y.get(1, 1) - series).norm() < 1e-12);
    }

    #[test]
    fn triplets_are_summed() {
        let one = Complex64::new(1.0, 0.0);
        let m = SparseComplex::from_triplets(2, vec![(1, 1, one), (0, 1, one), (1, 1, one)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 1), Complex64::new(2.0, 0.0));
        assert_eq!(m.get(1, 0), Complex64::new(0.0, 0.0));
    }
}
