//! Block-structured conic programs and a deterministic primal-dual solver.
//!
//! Programs are stated in the primal standard form
//!
//! ```text
//! maximize  <C, X>
//! such that <A_j, X> = b_j   (j = 1..m)
//!           X in K
//! ```
//!
//! where `K` is a product of positive semidefinite and nonnegative-orthant
//! blocks and `<., .>` is the trace inner product on each block. The dual
//! minimizes `b^T y` subject to `sum_j y_j A_j - C in K` (the cone is
//! self-dual), and weak duality `primal <= dual` always holds.
//!
//! Inequality constraints are encoded by appending nonnegative slack
//! blocks. The solver ([`solve`]) is a homogeneous self-dual embedding
//! interior-point method; it is fully deterministic: the same program and
//! options produce bit-identical reports.

mod solver;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// One cone block of the product cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeBlock {
    /// Positive semidefinite matrices of the given side length.
    Psd { size: usize },
    /// Componentwise nonnegative vectors of the given length.
    Nonneg { len: usize },
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match self {
            ConeBlock::Psd { size } => *size,
            ConeBlock::Nonneg { len } => *len,
        }
    }
}

/// A per-block value: symmetric matrix on PSD blocks, vector on
/// nonnegative blocks.
#[derive(Clone, Debug)]
pub enum BlockValue {
    Psd(DMatrix<f64>),
    Nonneg(DVector<f64>),
}

impl BlockValue {
    pub fn as_psd(&self) -> &DMatrix<f64> {
        match self {
            BlockValue::Psd(m) => m,
            _ => panic!("expected a PSD block"),
        }
    }

    pub fn as_nonneg(&self) -> &DVector<f64> {
        match self {
            BlockValue::Nonneg(v) => v,
            _ => panic!("expected a nonnegative block"),
        }
    }
}

/// Sparse coefficient of a linear functional on one block.
///
/// For PSD blocks the entries are upper-triangle triplets `(r, c, v)` with
/// `r <= c`, describing the symmetric matrix with those entries mirrored;
/// for nonnegative blocks they are `(i, i, v)` pairs.
#[derive(Clone, Debug, Default)]
pub struct BlockCoeff {
    pub block: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// One equality constraint `<A_j, X> = b_j`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<BlockCoeff>,
    pub rhs: f64,
}

/// A block-structured conic program in primal standard form.
#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    pub blocks: Vec<ConeBlock>,
    /// The objective `C`, sparse per block. Blocks without coefficients have
    /// a zero objective there.
    pub objective: Vec<BlockCoeff>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("program has no constraints")]
    NoConstraints,
    #[error("constraint {index} references block {block} out of range")]
    BlockOutOfRange { index: usize, block: usize },
    #[error("constraint {index} has an out-of-range or non-upper-triangle entry")]
    BadEntry { index: usize },
    #[error("non-finite coefficient or right-hand side in constraint {index}")]
    NonFinite { index: usize },
    #[error("tolerance {0} outside supported range [1e-12, 1e-2]")]
    BadTolerance(f64),
}

impl ConicProgram {
    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.constraints.is_empty() {
            return Err(ProgramError::NoConstraints);
        }
        let check = |coeffs: &[BlockCoeff], index: usize| -> Result<(), ProgramError> {
            for bc in coeffs {
                let Some(block) = self.blocks.get(bc.block) else {
                    return Err(ProgramError::BlockOutOfRange {
                        index,
                        block: bc.block,
                    });
                };
                for &(r, c, v) in &bc.entries {
                    if !v.is_finite() {
                        return Err(ProgramError::NonFinite { index });
                    }
                    let ok = match block {
                        ConeBlock::Psd { size } => r <= c && c < *size,
                        ConeBlock::Nonneg { len } => r == c && r < *len,
                    };
                    if !ok {
                        return Err(ProgramError::BadEntry { index });
                    }
                }
            }
            Ok(())
        };
        check(&self.objective, usize::MAX)?;
        for (j, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(ProgramError::NonFinite { index: j });
            }
            check(&con.coeffs, j)?;
        }
        Ok(())
    }

    /// `<A, X>` for a sparse coefficient list over block values.
    pub fn apply_coeffs(coeffs: &[BlockCoeff], x: &[BlockValue]) -> f64 {
        let mut acc = 0.0;
        for bc in coeffs {
            match &x[bc.block] {
                BlockValue::Psd(m) => {
                    for &(r, c, v) in &bc.entries {
                        acc += v * m[(r, c)] * if r == c { 1.0 } else { 2.0 };
                    }
                }
                BlockValue::Nonneg(vec) => {
                    for &(i, _, v) in &bc.entries {
                        acc += v * vec[i];
                    }
                }
            }
        }
        acc
    }

    /// Debug dump in a plain text format: one block header line per block,
    /// then one line per constraint with sparse triplets and the right-hand
    /// side. Not a stability-guaranteed format.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            match b {
                ConeBlock::Psd { size } => writeln!(out, "block {i} psd {size}").unwrap(),
                ConeBlock::Nonneg { len } => writeln!(out, "block {i} nonneg {len}").unwrap(),
            }
        }
        let fmt_coeffs = |coeffs: &[BlockCoeff], out: &mut String| {
            for bc in coeffs {
                for &(r, c, v) in &bc.entries {
                    write!(out, " {}:{}:{}:{v}", bc.block, r, c).unwrap();
                }
            }
        };
        out.push_str("objective");
        fmt_coeffs(&self.objective, &mut out);
        out.push('\n');
        for con in &self.constraints {
            write!(out, "constraint {}", con.rhs).unwrap();
            fmt_coeffs(&con.coeffs, &mut out);
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

/// The result of a solve: primal/dual values in the maximization
/// convention, the primal block solution `X`, the dual multipliers `y`,
/// and the dual slack `Z = sum_j y_j A_j - C`.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_solution: Vec<BlockValue>,
    pub dual_multipliers: Vec<f64>,
    pub dual_slack: Vec<BlockValue>,
    pub iterations: usize,
    /// Relative duality gap at termination.
    pub final_gap: f64,
}

/// Options for [`solve`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            max_iterations: 120,
        }
    }
}

/// Solve a conic program with the homogeneous self-dual interior-point
/// method. Deterministic: identical inputs produce bit-identical reports.
pub fn solve(program: &ConicProgram, options: &SolveOptions) -> Result<SolveReport, ProgramError> {
    program.validate()?;
    if !(1e-12..=1e-2).contains(&options.tolerance) {
        return Err(ProgramError::BadTolerance(options.tolerance));
    }
    Ok(solver::solve_hsd(program, options))
}

/// Residual summary recomputed from scratch for a report; used by tests and
/// as a numeric pre-screen before exact certification.
#[derive(Clone, Debug)]
pub struct KktResiduals {
    /// `max_j |<A_j, X> - b_j|`.
    pub primal_infeasibility: f64,
    /// Most negative eigenvalue (PSD blocks) or entry (nonnegative blocks)
    /// of `sum_j y_j A_j - C`, clamped at zero: a dual-cone violation.
    pub dual_cone_violation: f64,
    /// Most negative eigenvalue or entry of `X`: a primal-cone violation.
    pub primal_cone_violation: f64,
    /// `dual_value - primal_value` recomputed from the solutions.
    pub gap: f64,
}

/// Recompute feasibility and gap residuals of a report from scratch.
pub fn check_kkt(program: &ConicProgram, report: &SolveReport) -> KktResiduals {
    let x = &report.primal_solution;
    let y = &report.dual_multipliers;
    let mut primal_infeasibility = 0.0f64;
    for con in &program.constraints {
        let lhs = ConicProgram::apply_coeffs(&con.coeffs, x);
        primal_infeasibility = primal_infeasibility.max((lhs - con.rhs).abs());
    }
    // Z = sum_j y_j A_j - C, assembled densely per block.
    let mut z: Vec<BlockValue> = program
        .blocks
        .iter()
        .map(|b| match b {
            ConeBlock::Psd { size } => BlockValue::Psd(DMatrix::zeros(*size, *size)),
            ConeBlock::Nonneg { len } => BlockValue::Nonneg(DVector::zeros(*len)),
        })
        .collect();
    let mut add = |coeffs: &[BlockCoeff], w: f64, z: &mut Vec<BlockValue>| {
        for bc in coeffs {
            match &mut z[bc.block] {
                BlockValue::Psd(m) => {
                    for &(r, c, v) in &bc.entries {
                        m[(r, c)] += w * v;
                        if r != c {
                            m[(c, r)] += w * v;
                        }
                    }
                }
                BlockValue::Nonneg(vec) => {
                    for &(i, _, v) in &bc.entries {
                        vec[i] += w * v;
                    }
                }
            }
        }
    };
    for (j, con) in program.constraints.iter().enumerate() {
        add(&con.coeffs, y[j], &mut z);
    }
    add(&program.objective, -1.0, &mut z);

    let min_eig = |bv: &BlockValue| -> f64 {
        match bv {
            BlockValue::Psd(m) => {
                if m.nrows() == 0 {
                    0.0
                } else {
                    let eig = m.clone().symmetric_eigenvalues();
                    eig.iter().cloned().fold(f64::INFINITY, f64::min)
                }
            }
            BlockValue::Nonneg(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    };
    let dual_cone_violation = z
        .iter()
        .map(|b| (-min_eig(b)).max(0.0))
        .fold(0.0, f64::max);
    let primal_cone_violation = x
        .iter()
        .map(|b| (-min_eig(b)).max(0.0))
        .fold(0.0, f64::max);

    let primal_value = ConicProgram::apply_coeffs(&program.objective, x);
    let dual_value: f64 = program
        .constraints
        .iter()
        .zip(y)
        .map(|(con, yj)| con.rhs * yj)
        .sum();
    KktResiduals {
        primal_infeasibility,
        dual_cone_violation,
        primal_cone_violation,
        gap: dual_value - primal_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psd_entry(block: usize, r: usize, c: usize, v: f64) -> BlockCoeff {
        BlockCoeff {
            block,
            entries: vec![(r, c, v)],
        }
    }

    /// maximize <I, X> s.t. tr X = 1, X in psd(2): the objective equals the
    /// constraint, so the value is 1.
    #[test]
    fn trace_objective_equals_constraint() {
        let program = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 2 }],
            objective: vec![BlockCoeff {
                block: 0,
                entries: vec![(0, 0, 1.0), (1, 1, 1.0)],
            }],
            constraints: vec![Constraint {
                coeffs: vec![BlockCoeff {
                    block: 0,
                    entries: vec![(0, 0, 1.0), (1, 1, 1.0)],
                }],
                rhs: 1.0,
            }],
        };
        let report = solve(&program, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal_value - 1.0).abs() < 1e-8, "{}", report.primal_value);
        assert!((report.dual_value - 1.0).abs() < 1e-8);
    }

    /// maximize X_12 + X_21 s.t. X_11 = X_22 = 1: a 2x2 correlation matrix
    /// is PSD iff |X_12| <= 1, so the optimum is 2 at the all-ones matrix.
    #[test]
    fn correlation_offdiagonal() {
        let program = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 2 }],
            objective: vec![psd_entry(0, 0, 1, 1.0)],
            constraints: vec![
                Constraint {
                    coeffs: vec![psd_entry(0, 0, 0, 1.0)],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![psd_entry(0, 1, 1, 1.0)],
                    rhs: 1.0,
                },
            ],
        };
        let report = solve(&program, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal_value - 2.0).abs() < 1e-8);
        let x = report.primal_solution[0].as_psd();
        assert!((x[(0, 1)] - 1.0).abs() < 1e-6);
        let kkt = check_kkt(&program, &report);
        assert!(kkt.primal_infeasibility < 1e-8);
        assert!(kkt.dual_cone_violation < 1e-8);
    }

    /// Perturbing a solution must show up in the recomputed residuals.
    #[test]
    fn kkt_detects_perturbation() {
        let program = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 2 }],
            objective: vec![psd_entry(0, 0, 1, 1.0)],
            constraints: vec![
                Constraint {
                    coeffs: vec![psd_entry(0, 0, 0, 1.0)],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![psd_entry(0, 1, 1, 1.0)],
                    rhs: 1.0,
                },
            ],
        };
        let mut report = solve(&program, &SolveOptions::default()).unwrap();
        if let BlockValue::Psd(m) = &mut report.primal_solution[0] {
            m[(0, 0)] += 0.1;
        }
        let kkt = check_kkt(&program, &report);
        assert!(kkt.primal_infeasibility >= 0.09, "{}", kkt.primal_infeasibility);
    }

    /// Lovasz theta of the 5-cycle. Oracle: the circulant symmetry
    /// reduction gives theta(C_n) = n cos(pi/n) / (1 + cos(pi/n)) for odd
    /// n, which is sqrt(5) at n = 5.
    #[test]
    fn theta_c5_is_sqrt5() {
        let n = 5usize;
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let mut objective_entries = Vec::new();
        for r in 0..n {
            for c in r..n {
                objective_entries.push((r, c, 1.0));
            }
        }
        let mut constraints = vec![Constraint {
            coeffs: vec![BlockCoeff {
                block: 0,
                entries: (0..n).map(|i| (i, i, 1.0)).collect(),
            }],
            rhs: 1.0,
        }];
        for &(u, v) in &edges {
            constraints.push(Constraint {
                coeffs: vec![psd_entry(0, u.min(v), u.max(v), 1.0)],
                rhs: 0.0,
            });
        }
        let program = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: n }],
            objective: vec![BlockCoeff {
                block: 0,
                entries: objective_entries,
            }],
            constraints,
        };
        let report = solve(&program, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let closed_form = 5.0 * (std::f64::consts::PI / 5.0).cos()
            / (1.0 + (std::f64::consts::PI / 5.0).cos());
        assert!((closed_form - 5.0f64.sqrt()).abs() < 1e-12);
        assert!(
            (report.primal_value - closed_form).abs() < 1e-7,
            "theta(C5) = {}",
            report.primal_value
        );
        assert!((report.dual_value - report.primal_value).abs() < 1e-7);
    }

    /// A pure LP through the same machinery:
    /// max x2 s.t. x1 + x2 = 1, x >= 0 gives 1.
    #[test]
    fn simple_lp() {
        let program = ConicProgram {
            blocks: vec![ConeBlock::Nonneg { len: 2 }],
            objective: vec![BlockCoeff {
                block: 0,
                entries: vec![(1, 1, 1.0)],
            }],
            constraints: vec![Constraint {
                coeffs: vec![BlockCoeff {
                    block: 0,
                    entries: vec![(0, 0, 1.0), (1, 1, 1.0)],
                }],
                rhs: 1.0,
            }],
        };
        let report = solve(&program, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal_value - 1.0).abs() < 1e-9);
    }

    fn random_decoupled_pair(seed: u64) -> (ConicProgram, ConicProgram, ConicProgram) {
        // Two small random PSD programs and their concatenation. Uses a
        // deterministic xorshift stream.
        let mut state = seed.max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let make = |next: &mut dyn FnMut() -> f64, block: usize| -> (Vec<BlockCoeff>, Vec<Constraint>) {
            let size = 3;
            let mut obj = Vec::new();
            for r in 0..size {
                for c in r..size {
                    obj.push((r, c, next()));
                }
            }
            // tr X = 1 keeps it bounded.
            let cons = vec![Constraint {
                coeffs: vec![BlockCoeff {
                    block,
                    entries: (0..size).map(|i| (i, i, 1.0)).collect(),
                }],
                rhs: 1.0,
            }];
            (
                vec![BlockCoeff {
                    block,
                    entries: obj,
                }],
                cons,
            )
        };
        let (obj_a, cons_a) = make(&mut next, 0);
        let (obj_b, cons_b) = make(&mut next, 0);
        let a = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 3 }],
            objective: obj_a.clone(),
            constraints: cons_a.clone(),
        };
        let b = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 3 }],
            objective: obj_b.clone(),
            constraints: cons_b.clone(),
        };
        let mut obj_b1 = obj_b;
        for bc in &mut obj_b1 {
            bc.block = 1;
        }
        let mut cons_b1 = cons_b;
        for con in &mut cons_b1 {
            for bc in &mut con.coeffs {
                bc.block = 1;
            }
        }
        let joint = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 3 }, ConeBlock::Psd { size: 3 }],
            objective: obj_a.into_iter().chain(obj_b1).collect(),
            constraints: cons_a.into_iter().chain(cons_b1).collect(),
        };
        (a, b, joint)
    }

    #[test]
    fn decoupled_blocks_solve_to_sum() {
        for seed in [3u64, 17, 2024] {
            let (a, b, joint) = random_decoupled_pair(seed);
            let opts = SolveOptions::default();
            let va = solve(&a, &opts).unwrap().primal_value;
            let vb = solve(&b, &opts).unwrap().primal_value;
            let vj = solve(&joint, &opts).unwrap().primal_value;
            assert!(
                (vj - (va + vb)).abs() < 1e-7,
                "seed {seed}: {vj} vs {va} + {vb}"
            );
        }
    }

    #[test]
    fn scaling_covariance() {
        let (a, _, _) = random_decoupled_pair(99);
        let opts = SolveOptions::default();
        let base = solve(&a, &opts).unwrap().primal_value;
        for s in [2.0, 0.5, 10.0] {
            let mut scaled = a.clone();
            for con in &mut scaled.constraints {
                con.rhs *= s;
            }
            let v = solve(&scaled, &opts).unwrap().primal_value;
            assert!(
                (v - s * base).abs() <= 1e-8 * (1.0 + (s * base).abs()),
                "s={s}: {v} vs {}",
                s * base
            );
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let (_, _, joint) = random_decoupled_pair(7);
        let opts = SolveOptions::default();
        let r1 = solve(&joint, &opts).unwrap();
        let r2 = solve(&joint, &opts).unwrap();
        assert_eq!(r1.primal_value.to_bits(), r2.primal_value.to_bits());
        assert_eq!(r1.dual_value.to_bits(), r2.dual_value.to_bits());
        assert_eq!(r1.iterations, r2.iterations);
        for (a, b) in r1.dual_multipliers.iter().zip(&r2.dual_multipliers) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in r1.primal_solution.iter().zip(&r2.primal_solution) {
            match (a, b) {
                (BlockValue::Psd(ma), BlockValue::Psd(mb)) => {
                    for (x, y) in ma.iter().zip(mb.iter()) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
                (BlockValue::Nonneg(va), BlockValue::Nonneg(vb)) => {
                    for (x, y) in va.iter().zip(vb.iter()) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
                _ => panic!("block kind mismatch"),
            }
        }
    }

    #[test]
    fn rejects_malformed_programs() {
        let empty = ConicProgram {
            blocks: vec![ConeBlock::Psd { size: 2 }],
            objective: vec![],
            constraints: vec![],
        };
        assert!(matches!(
            solve(&empty, &SolveOptions::default()),
            Err(ProgramError::NoConstraints)
        ));
        let bad_tol = ConicProgram {
            blocks: vec![ConeBlock::Nonneg { len: 1 }],
            objective: vec![],
            constraints: vec![Constraint {
                coeffs: vec![BlockCoeff {
                    block: 0,
                    entries: vec![(0, 0, 1.0)],
                }],
                rhs: 1.0,
            }],
        };
        assert!(matches!(
            solve(
                &bad_tol,
                &SolveOptions {
                    tolerance: 1e-1,
                    max_iterations: 10
                }
            ),
            Err(ProgramError::BadTolerance(_))
        ));
    }

    #[test]
    fn dump_format_is_line_per_constraint() {
        let (a, _, _) = random_decoupled_pair(1);
        let text = a.dump();
        assert!(text.lines().next().unwrap().starts_with("block 0 psd 3"));
        assert_eq!(
            text.lines().filter(|l| l.starts_with("constraint")).count(),
            a.constraints.len()
        );
    }
}
