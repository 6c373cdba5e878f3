//! Exact rational LP solver (revised simplex, two phases).
//!
//! Solves `min c^T x : A x = b, x >= 0` entirely in rational arithmetic,
//! so optima, dual multipliers, and Farkas certificates of infeasibility
//! are exact. Column access goes through the [`LpColumns`] trait; the
//! Boolean-quadratic membership problem generates its exponentially many
//! columns on demand instead of materializing them.
//!
//! Entering columns are picked by floating-point pricing with exact
//! re-verification, falling back to Bland's rule under degeneracy, which
//! guarantees termination.

use crate::rational::{to_f64, Rat};
use num_traits::Zero;

/// Column access for the LP `min c^T x : A x = b, x >= 0`.
pub trait LpColumns {
    fn num_cols(&self) -> usize;
    fn rows(&self) -> usize;
    /// Dense column `j` (length `rows()`).
    fn column(&self, j: usize) -> Vec<Rat>;
    fn cost(&self, j: usize) -> Rat;
}

/// A dense column-major LP.
pub struct DenseLp {
    pub rows: usize,
    pub cost: Vec<Rat>,
    pub columns: Vec<Vec<Rat>>,
}

impl LpColumns for DenseLp {
    fn num_cols(&self) -> usize {
        self.columns.len()
    }
    fn rows(&self) -> usize {
        self.rows
    }
    fn column(&self, j: usize) -> Vec<Rat> {
        self.columns[j].clone()
    }
    fn cost(&self, j: usize) -> Rat {
        self.cost[j].clone()
    }
}

#[derive(Debug)]
pub enum LpOutcome {
    Optimal {
        /// Nonzero structural variables as (column, value).
        solution: Vec<(usize, Rat)>,
        value: Rat,
        /// Dual multipliers, one per row.
        duals: Vec<Rat>,
    },
    /// Farkas certificate `y`: `y^T A_j <= 0` for every column `j` and
    /// `y^T b > 0`.
    Infeasible { farkas: Vec<Rat> },
    Unbounded,
}

struct Tableau<'a, C: LpColumns> {
    cols: &'a C,
    m: usize,
    /// Sign flip applied per row so the working right-hand side is >= 0.
    row_sign: Vec<bool>,
    /// Basis column labels; labels >= num_cols are artificial.
    basis: Vec<usize>,
    binv: Vec<Vec<Rat>>,
    xb: Vec<Rat>,
    is_basic: Vec<bool>,
}

impl<'a, C: LpColumns> Tableau<'a, C> {
    fn new(cols: &'a C, b_in: &[Rat]) -> Self {
        let m = b_in.len();
        assert_eq!(m, cols.rows());
        let row_sign: Vec<bool> = b_in.iter().map(|v| v < &Rat::zero()).collect();
        let b: Vec<Rat> = b_in
            .iter()
            .zip(&row_sign)
            .map(|(v, &s)| if s { -v.clone() } else { v.clone() })
            .collect();
        let mut binv = vec![vec![Rat::zero(); m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = Rat::from_integer(1.into());
        }
        let n = cols.num_cols();
        Tableau {
            cols,
            m,
            row_sign,
            basis: (n..n + m).collect(),
            binv,
            xb: b,
            is_basic: vec![false; n],
        }
    }

    /// Column `j` with the row sign normalization applied.
    fn column(&self, j: usize) -> Vec<Rat> {
        let mut col = self.cols.column(j);
        for (i, &s) in self.row_sign.iter().enumerate() {
            if s {
                col[i] = -col[i].clone();
            }
        }
        col
    }

    /// y = c_B^T B^{-1} for the given basic cost function.
    fn duals(&self, cost_of: &dyn Fn(usize) -> Rat) -> Vec<Rat> {
        let mut y = vec![Rat::zero(); self.m];
        for (i, &label) in self.basis.iter().enumerate() {
            let cb = cost_of(label);
            if cb.is_zero() {
                continue;
            }
            for k in 0..self.m {
                y[k] += &cb * &self.binv[i][k];
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[Rat], cost_of: &dyn Fn(usize) -> Rat) -> Rat {
        let col = self.column(j);
        let mut acc = cost_of(j);
        for (yi, aij) in y.iter().zip(&col) {
            if !aij.is_zero() {
                acc -= yi * aij;
            }
        }
        acc
    }

    /// One simplex phase. Returns false if unbounded.
    fn run_phase(&mut self, cost_of: &dyn Fn(usize) -> Rat) -> bool {
        let n = self.cols.num_cols();
        let mut degenerate_streak = 0usize;
        loop {
            let y = self.duals(cost_of);
            let y_f: Vec<f64> = y.iter().map(to_f64).collect();

            // Entering column: float pricing first, exact Bland scan as the
            // degeneracy-safe fallback.
            let bland = degenerate_streak > 30;
            let mut entering: Option<usize> = None;
            if !bland {
                let mut best = -1e-9;
                let mut best_j = None;
                for j in 0..n {
                    if self.is_basic[j] {
                        continue;
                    }
                    let col = self.column(j);
                    let mut rc = to_f64(&cost_of(j));
                    for (yi, aij) in y_f.iter().zip(&col) {
                        rc -= yi * to_f64(aij);
                    }
                    if rc < best {
                        best = rc;
                        best_j = Some(j);
                    }
                }
                if let Some(j) = best_j {
                    if self.reduced_cost(j, &y, cost_of) < Rat::zero() {
                        entering = Some(j);
                    }
                }
            }
            if entering.is_none() {
                // Exact scan in index order (Bland).
                for j in 0..n {
                    if self.is_basic[j] {
                        continue;
                    }
                    if self.reduced_cost(j, &y, cost_of) < Rat::zero() {
                        entering = Some(j);
                        break;
                    }
                }
            }
            let Some(j) = entering else {
                return true; // optimal for this phase
            };

            // Direction d = B^{-1} a_j.
            let col = self.column(j);
            let mut d = vec![Rat::zero(); self.m];
            for (i, di) in d.iter_mut().enumerate() {
                for k in 0..self.m {
                    if !col[k].is_zero() {
                        *di += &self.binv[i][k] * &col[k];
                    }
                }
            }

            // Ratio test with Bland tie-breaking on the leaving label.
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.m {
                if d[i] > Rat::zero() {
                    let ratio = &self.xb[i] / &d[i];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, theta)) = leave else {
                return false; // unbounded direction
            };
            if theta.is_zero() {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            // Pivot: update B^{-1} and the basic solution.
            let piv = d[r].clone();
            for k in 0..self.m {
                self.binv[r][k] /= &piv;
            }
            self.xb[r] /= &piv;
            let xb_r = self.xb[r].clone();
            let binv_r = self.binv[r].clone();
            for i in 0..self.m {
                if i == r || d[i].is_zero() {
                    continue;
                }
                let f = d[i].clone();
                for k in 0..self.m {
                    let delta = &f * &binv_r[k];
                    self.binv[i][k] -= delta;
                }
                let delta = &f * &xb_r;
                self.xb[i] -= delta;
            }
            let old = self.basis[r];
            if old < n {
                self.is_basic[old] = false;
            }
            self.basis[r] = j;
            self.is_basic[j] = true;
        }
    }
}

/// Solve `min c^T x : A x = b, x >= 0` exactly.
pub fn solve_lp<C: LpColumns>(cols: &C, b: &[Rat]) -> LpOutcome {
    let n = cols.num_cols();
    let mut tab = Tableau::new(cols, b);

    // Phase 1: minimize the sum of artificial variables.
    let phase1_cost = |label: usize| -> Rat {
        if label >= n {
            Rat::from_integer(1.into())
        } else {
            Rat::zero()
        }
    };
    if !tab.run_phase(&phase1_cost) {
        // Phase 1 is bounded below by zero; unbounded cannot happen.
        unreachable!("phase 1 of the simplex cannot be unbounded");
    }
    let infeas: Rat = tab
        .basis
        .iter()
        .zip(&tab.xb)
        .filter(|(l, _)| **l >= n)
        .map(|(_, v)| v.clone())
        .sum();
    if !infeas.is_zero() {
        let y = tab.duals(&phase1_cost);
        // Undo the row normalization for the caller's coordinates.
        let farkas: Vec<Rat> = y
            .iter()
            .zip(&tab.row_sign)
            .map(|(v, &s)| if s { -v.clone() } else { v.clone() })
            .collect();
        return LpOutcome::Infeasible { farkas };
    }

    // Phase 2: the real objective. Artificial labels keep cost zero and can
    // never enter (they are not scanned); ones parked in the basis stay at
    // level zero.
    let phase2_cost = |label: usize| -> Rat {
        if label < n {
            cols.cost(label)
        } else {
            Rat::zero()
        }
    };
    if !tab.run_phase(&phase2_cost) {
        return LpOutcome::Unbounded;
    }
    let mut solution = Vec::new();
    let mut value = Rat::zero();
    for (i, &label) in tab.basis.iter().enumerate() {
        if label < n && !tab.xb[i].is_zero() {
            value += cols.cost(label) * &tab.xb[i];
            solution.push((label, tab.xb[i].clone()));
        }
    }
    solution.sort_by_key(|(j, _)| *j);
    let y = tab.duals(&phase2_cost);
    let duals: Vec<Rat> = y
        .iter()
        .zip(&tab.row_sign)
        .map(|(v, &s)| if s { -v.clone() } else { v.clone() })
        .collect();
    LpOutcome::Optimal {
        solution,
        value,
        duals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn lp(rows: usize, cost: Vec<Rat>, cols: Vec<Vec<Rat>>) -> DenseLp {
        DenseLp {
            rows,
            cost,
            columns: cols,
        }
    }

    #[test]
    fn solves_small_lp_exactly() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s = 1  ->  optimum -2 at x2 = 1.
        let p = lp(
            1,
            vec![rat_int(-1), rat_int(-2), rat_int(0)],
            vec![vec![rat_int(1)], vec![rat_int(1)], vec![rat_int(1)]],
        );
        match solve_lp(&p, &[rat_int(1)]) {
            LpOutcome::Optimal {
                value, solution, ..
            } => {
                assert_eq!(value, rat_int(-2));
                assert_eq!(solution, vec![(1, rat_int(1))]);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility_with_farkas() {
        // x1 + x2 = -1, x >= 0 is infeasible.
        let p = lp(
            1,
            vec![rat_int(0), rat_int(0)],
            vec![vec![rat_int(1)], vec![rat_int(1)]],
        );
        match solve_lp(&p, &[rat_int(-1)]) {
            LpOutcome::Infeasible { farkas } => {
                // y^T A_j <= 0 for all j, y^T b > 0.
                for j in 0..2 {
                    let col = p.column(j);
                    let dot: Rat = farkas.iter().zip(&col).map(|(a, b)| a * b).sum();
                    assert!(dot <= rat_int(0));
                }
                let yb: Rat = farkas
                    .iter()
                    .zip([rat_int(-1)].iter())
                    .map(|(a, b)| a * b)
                    .sum();
                assert!(yb > rat_int(0));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 0: both can grow without bound.
        let p = lp(
            1,
            vec![rat_int(-1), rat_int(0)],
            vec![vec![rat_int(1)], vec![rat_int(-1)]],
        );
        match solve_lp(&p, &[rat_int(0)]) {
            LpOutcome::Unbounded => {}
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn two_constraint_moment_lp() {
        // max f0 s.t. f0 + f1 + f2 = 1, f0 - f1/2 - f2/3 = 0, f >= 0.
        // Only the most negative second-row coefficient matters at the
        // optimum: f0 = (1/2)/(1 + 1/2) = 1/3 via f1.
        let p = lp(
            2,
            vec![rat_int(-1), rat_int(0), rat_int(0)],
            vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(1), rat(-1, 2)],
                vec![rat_int(1), rat(-1, 3)],
            ],
        );
        match solve_lp(&p, &[rat_int(1), rat_int(0)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat(-1, 3)),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn duals_certify_optimality() {
        // min x1 + x2 s.t. x1 + 2 x2 = 4, x1 = 1 -> x = (1, 3/2), value 5/2.
        let p = lp(
            2,
            vec![rat_int(1), rat_int(1)],
            vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(2), rat_int(0)],
            ],
        );
        match solve_lp(&p, &[rat_int(4), rat_int(1)]) {
            LpOutcome::Optimal {
                value,
                duals,
                solution,
            } => {
                assert_eq!(value, rat(5, 2));
                assert_eq!(solution, vec![(0, rat_int(1)), (1, rat(3, 2))]);
                // Dual feasibility: c_j - y^T A_j >= 0.
                for j in 0..2 {
                    let col = p.column(j);
                    let dot: Rat = duals.iter().zip(&col).map(|(a, b)| a * b).sum();
                    assert!(p.cost(j) - dot >= rat_int(0));
                }
                // Strong duality: y^T b = value.
                let yb: Rat = duals[0].clone() * rat_int(4) + duals[1].clone();
                assert_eq!(yb, rat(5, 2));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
