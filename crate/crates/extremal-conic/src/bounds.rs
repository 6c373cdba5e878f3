//! Bound programs for the four geometric problems.
//!
//! - [`kissing_lp`]: the two-point linear programming bound for kissing
//!   numbers, minimizing `1 + sum_k f_k` over nonnegative `f` with
//!   `sum_k f_k P_k^n(t) <= -1` on `[-1, 1/2]`.
//! - [`kissing_three_point`]: the semidefinite three-point bound,
//!   minimizing `1 + <F_0, J>` over PSD blocks `F_0..F_d` with the pair
//!   constraint `sum_k <F_k, S_k(u,u,1)> <= -1/3` on `[-1, 1/2]` and the
//!   triple constraint `sum_k <F_k, S_k(u,v,t)> <= 0` on the admissible
//!   region.
//! - [`avoid_orthogonal`]: the exact rational bound `1/n` for measurable
//!   sets on the sphere avoiding orthogonal pairs.
//! - [`avoid_distance_plane`]: the closed-form two-point bound
//!   `|Omega_min|/(1 + |Omega_min|)` for measurable one-avoiding sets.
//!
//! Semi-infinite constraints are enforced on Chebyshev grids, refined by a
//! deterministic cutting loop; the raw values here are therefore grid
//! relaxations, and the certified values come from [`crate::verify`] via
//! the margin-tightened pipelines [`kissing_lp_certified`] and
//! [`kissing_three_point_certified`].

use crate::conic::{
    self, BlockCoeff, ConeBlock, ConicProgram, Constraint, SolveOptions, SolveStatus,
};
use crate::orthopoly::{
    bessel_omega, gegenbauer, gegenbauer_at_zero, s_matrix_avg_unit, PolyMatrix, Polynomial,
};
use crate::rational::{rat_int, rationalize, to_f64, Rat};
use crate::simplex::{self, DenseLp, LpOutcome};
use crate::verify::{
    certify_trivariate, certify_univariate, detect_kernel, nullspace, BoxBudget, Certificate,
    RatMatrix, VerifyError,
};
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("solver did not reach an optimal solution: {status:?}")]
    Solver { status: SolveStatus },
    #[error("no negative value of the radial profile found below the horizon")]
    NoNegativeProfile,
    #[error("certification failed after retries: {0}")]
    Certification(String),
    #[error(transparent)]
    Program(#[from] conic::ProgramError),
    #[error(transparent)]
    Orthopoly(#[from] crate::orthopoly::OrthopolyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemTag {
    KissingLp,
    KissingThreePoint,
    AvoidOrthogonalSphere,
    AvoidDistancePlane,
}

/// Discretization metadata recorded with each bound.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridSpec {
    Interval {
        points: usize,
        lo: f64,
        hi: f64,
        refinements: usize,
    },
    TripleGrid {
        axis_points: usize,
        t_points: usize,
        pair_points: usize,
        triple_candidates: usize,
        active_constraints: usize,
        cut_rounds: usize,
    },
    Exact,
    RadialScan {
        step: f64,
        horizon: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub status: String,
    pub iterations: usize,
    pub final_gap: f64,
}

impl SolverSummary {
    fn from_report(report: &conic::SolveReport) -> SolverSummary {
        SolverSummary {
            status: format!("{:?}", report.status),
            iterations: report.iterations,
            final_gap: report.final_gap,
        }
    }

    fn exact() -> SolverSummary {
        SolverSummary {
            status: "Exact".to_string(),
            iterations: 0,
            final_gap: 0.0,
        }
    }
}

/// The feasible data of the minimization side of a bound program.
#[derive(Clone, Debug)]
pub enum BoundSolution {
    /// Coefficients `f_0..f_d` of the LP bound.
    LpCoefficients { f: Vec<f64> },
    /// Dense symmetric blocks `F_0..F_d` of the three-point bound.
    ThreePointBlocks { blocks: Vec<Vec<Vec<f64>>> },
    /// Exact rational coefficients of the orthogonality-avoiding bound.
    SphereExact { f: Vec<Rat>, value: Rat },
    /// Closed-form parameters of the plane bound.
    PlaneClosedForm { omega_min: f64, minimizer: f64 },
}

/// A computed bound: the numeric value, the feasible solution data it came
/// from, and the discretization/solver metadata needed for certification.
#[derive(Clone, Debug)]
pub struct BoundResult {
    pub problem: ProblemTag,
    pub n: u32,
    pub d: Option<u32>,
    pub value: f64,
    pub solution: BoundSolution,
    pub grid: GridSpec,
    pub solver: SolverSummary,
}

impl BoundResult {
    /// Re-derive the objective from the stored solution; the type invariant
    /// is that this matches `value` to 1e-9.
    pub fn recompute_value(&self) -> f64 {
        match &self.solution {
            BoundSolution::LpCoefficients { f } => 1.0 + f.iter().sum::<f64>(),
            BoundSolution::ThreePointBlocks { blocks } => {
                1.0 + blocks[0].iter().flatten().sum::<f64>()
            }
            BoundSolution::SphereExact { value, .. } => to_f64(value),
            BoundSolution::PlaneClosedForm { omega_min, .. } => {
                omega_min.abs() / (1.0 + omega_min.abs())
            }
        }
    }

    fn validate(self) -> Self {
        let recomputed = self.recompute_value();
        debug_assert!(
            (recomputed - self.value).abs() <= 1e-9 * (1.0 + self.value.abs()),
            "stored value {} differs from recomputed {recomputed}",
            self.value
        );
        if matches!(
            self.problem,
            ProblemTag::KissingLp | ProblemTag::KissingThreePoint
        ) {
            debug_assert!(self.value >= 1.0 - 1e-9);
        }
        self
    }
}

/// Chebyshev-Lobatto points on `[lo, hi]`, endpoints included, in
/// increasing order.
fn chebyshev_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            let x = (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            lo + (hi - lo) * (1.0 - x) / 2.0
        })
        .collect()
}

fn accept(program: &ConicProgram, report: &conic::SolveReport) -> Result<(), BoundError> {
    if report.status == SolveStatus::Optimal {
        return Ok(());
    }
    // Near-optimal breakdown is tolerated when the recomputed residuals are
    // far below what the certification margin absorbs.
    let kkt = conic::check_kkt(program, report);
    let scale = 1.0 + report.primal_value.abs().max(report.dual_value.abs());
    if report.final_gap <= 1e-6
        && kkt.primal_infeasibility <= 5e-6 * scale
        && kkt.primal_cone_violation <= 1e-7 * scale
    {
        return Ok(());
    }
    Err(BoundError::Solver {
        status: report.status,
    })
}

fn lp_options() -> SolveOptions {
    SolveOptions {
        tolerance: 1e-10,
        max_iterations: 200,
    }
}

fn sdp_options() -> SolveOptions {
    SolveOptions {
        tolerance: 1e-9,
        max_iterations: 150,
    }
}

/// Solve the two-point LP on an explicit grid with an optional margin on
/// the right-hand side; returns the coefficients and the report.
fn kissing_lp_on_grid(
    n: u32,
    d: u32,
    grid: &[f64],
    margin: f64,
) -> Result<(Vec<f64>, conic::SolveReport), BoundError> {
    let polys: Vec<Polynomial> = (0..=d).map(|k| gegenbauer(n, k)).collect::<Result<_, _>>()?;
    let nf = d as usize + 1;
    let mut constraints = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let entries: Vec<(usize, usize, f64)> = polys
            .iter()
            .enumerate()
            .map(|(k, p)| (k, k, p.eval_f64(t)))
            .collect();
        constraints.push(Constraint {
            coeffs: vec![
                BlockCoeff { block: 0, entries },
                BlockCoeff {
                    block: 1,
                    entries: vec![(i, i, 1.0)],
                },
            ],
            rhs: -1.0 - margin,
        });
    }
    let program = ConicProgram {
        blocks: vec![
            ConeBlock::Nonneg { len: nf },
            ConeBlock::Nonneg { len: grid.len() },
        ],
        objective: vec![BlockCoeff {
            block: 0,
            entries: (0..nf).map(|k| (k, k, -1.0)).collect(),
        }],
        constraints,
    };
    let report = conic::solve(&program, &lp_options())?;
    accept(&program, &report)?;
    let f = report.primal_solution[0]
        .as_nonneg()
        .iter()
        .copied()
        .collect();
    Ok((f, report))
}

/// Worst violation of `sum_k f_k P_k^n(t) <= -1 - margin` over the whole
/// interval, located by a dense scan with local parabolic refinement.
fn lp_worst_violation(polys: &[Polynomial], f: &[f64], margin: f64) -> (f64, f64) {
    let eval = |t: f64| -> f64 {
        let mut acc = 1.0 + margin;
        for (p, &fk) in polys.iter().zip(f) {
            if fk != 0.0 {
                acc += fk * p.eval_f64(t);
            }
        }
        acc
    };
    let scan = 4001usize;
    let (mut best_t, mut best_v) = (-1.0, eval(-1.0));
    for i in 1..scan {
        let t = -1.0 + 1.5 * i as f64 / (scan - 1) as f64;
        let v = eval(t);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }
    // Parabolic refinement around the best sample.
    let h = 1.5 / (scan - 1) as f64;
    let (mut a, mut b) = ((best_t - h).max(-1.0), (best_t + h).min(0.5));
    for _ in 0..60 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if eval(m1) >= eval(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = (a + b) / 2.0;
    let v = eval(t);
    if v > best_v {
        (t, v)
    } else {
        (best_t, best_v)
    }
}

/// The two-point linear programming bound for the kissing number in
/// dimension `n` at truncation degree `d`. Constraints start on a
/// Chebyshev grid of the given size and the grid is refined at the worst
/// violation until the solution satisfies the full interval constraint to
/// 1e-9, so the returned value matches the truncated bound to solver
/// accuracy.
pub fn kissing_lp(n: u32, d: u32, grid_size: usize) -> Result<BoundResult, BoundError> {
    if n < 3 {
        return Err(BoundError::Parameter(format!("dimension {n} < 3")));
    }
    if !(2..=20).contains(&d) {
        return Err(BoundError::Parameter(format!(
            "degree {d} outside supported range 2..=20"
        )));
    }
    if grid_size < 4 * d as usize {
        return Err(BoundError::Parameter(format!(
            "grid size {grid_size} below 4d = {}",
            4 * d
        )));
    }
    let polys: Vec<Polynomial> = (0..=d).map(|k| gegenbauer(n, k)).collect::<Result<_, _>>()?;
    let mut grid = chebyshev_points(grid_size, -1.0, 0.5);
    let mut refinements = 0usize;
    loop {
        let (f, report) = kissing_lp_on_grid(n, d, &grid, 0.0)?;
        let (worst_t, worst_v) = lp_worst_violation(&polys, &f, 0.0);
        if worst_v > 1e-9 && refinements < 60 {
            refinements += 1;
            grid.push(worst_t);
            continue;
        }
        let value = 1.0 + f.iter().sum::<f64>();
        return Ok(BoundResult {
            problem: ProblemTag::KissingLp,
            n,
            d: Some(d),
            value,
            solution: BoundSolution::LpCoefficients { f },
            grid: GridSpec::Interval {
                points: grid.len(),
                lo: -1.0,
                hi: 0.5,
                refinements,
            },
            solver: SolverSummary::from_report(&report),
        }
        .validate());
    }
}

/// The margin-tightened, certified version of [`kissing_lp`]: re-solve with
/// the right-hand side tightened, round the coefficients to rationals, and
/// prove feasibility exactly. Sign violations between grid points are fed
/// back as cuts; rounding failures double the margin (up to 4 retries).
pub fn kissing_lp_certified(
    n: u32,
    d: u32,
    grid_size: usize,
    margin: Option<f64>,
) -> Result<(BoundResult, Certificate), BoundError> {
    let raw = kissing_lp(n, d, grid_size)?;
    // Margin scaled so the bound inflation cannot cross the next integer.
    let mut margin = margin.unwrap_or_else(|| 1e-5f64.min(0.25 / raw.value.max(1.0)));
    let mut grid = chebyshev_points(grid_size, -1.0, 0.5);
    let mut refinements = 0usize;
    let mut last_failure = String::new();
    for _attempt in 0..4 {
        let mut cuts_left = 40;
        loop {
            let (f, report) = kissing_lp_on_grid(n, d, &grid, margin)?;
            let f_rat: Vec<Rat> = f
                .iter()
                .map(|&x| {
                    if x <= 1e-12 {
                        Rat::zero()
                    } else {
                        rationalize(x, 1u64 << 40).unwrap_or_else(Rat::zero)
                    }
                })
                .collect();
            let _ = (&report, refinements);
            match certify_univariate(&f_rat, n, d) {
                Ok(cert) => {
                    // The reported bound is the raw (unmargined) value; the
                    // certificate carries the rigorous rational one.
                    return Ok((raw, cert));
                }
                Err(VerifyError::SignViolation { witness, .. }) if cuts_left > 0 => {
                    // The violation is between grid points; add it as a cut.
                    cuts_left -= 1;
                    refinements += 1;
                    let w = to_f64(&witness[0]);
                    grid.push(w);
                }
                Err(e) => {
                    last_failure = e.to_string();
                    break;
                }
            }
        }
        margin *= 2.0;
    }
    Err(BoundError::Certification(last_failure))
}

/// Kernel data shared by the three-point assembly and cut search.
struct ThreePointData {
    mats: Vec<PolyMatrix>,
    /// Per block, row-major entries of `S_k(u, u, 1)` as polynomials in u.
    diag_polys: Vec<Vec<Polynomial>>,
}

impl ThreePointData {
    fn new(n: u32, d: u32) -> Result<ThreePointData, BoundError> {
        let mats: Vec<PolyMatrix> = (0..=d)
            .map(|k| s_matrix_avg_unit(n, k, d))
            .collect::<Result<_, _>>()?;
        let diag_polys = mats
            .iter()
            .map(|m| {
                let size = m.size();
                let mut polys = Vec::with_capacity(size * size);
                for i in 0..size {
                    for j in 0..size {
                        polys.push(m.entry(i, j).substitute_diagonal());
                    }
                }
                polys
            })
            .collect();
        Ok(ThreePointData { mats, diag_polys })
    }

    /// Constraint coefficients at a pair point `(u, u, 1)`.
    fn pair_coeffs(&self, u: f64) -> Vec<BlockCoeff> {
        self.mats
            .iter()
            .zip(&self.diag_polys)
            .enumerate()
            .map(|(k, (m, polys))| {
                let size = m.size();
                let mut entries = Vec::new();
                for i in 0..size {
                    for j in i..size {
                        let v = polys[i * size + j].eval_f64(u);
                        if v != 0.0 {
                            entries.push((i, j, v));
                        }
                    }
                }
                BlockCoeff { block: k, entries }
            })
            .collect()
    }

    /// Constraint coefficients at a triple point `(u, v, t)`.
    fn triple_coeffs(&self, u: f64, v: f64, t: f64) -> Vec<BlockCoeff> {
        self.mats
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let size = m.size();
                let mut entries = Vec::new();
                for i in 0..size {
                    for j in i..size {
                        let val = m.entry(i, j).eval_f64(u, v, t);
                        if val != 0.0 {
                            entries.push((i, j, val));
                        }
                    }
                }
                BlockCoeff { block: k, entries }
            })
            .collect()
    }

    /// `sum_k <F_k, S_k(u,v,t)>` for floating blocks.
    fn aggregate_eval(&self, blocks: &[Vec<Vec<f64>>], u: f64, v: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, m) in self.mats.iter().enumerate() {
            let size = m.size();
            for i in 0..size {
                for j in 0..size {
                    let w = blocks[k][i][j];
                    if w != 0.0 {
                        acc += w * m.entry(i, j).eval_f64(u, v, t);
                    }
                }
            }
        }
        acc
    }
}

/// Admissible `t`-interval for a pair `(u, v)`: pairwise inner products of
/// three unit vectors require `t` within `uv +- sqrt((1-u^2)(1-v^2))`,
/// intersected with `[-1, 1/2]`.
fn admissible_t_range(u: f64, v: f64) -> (f64, f64) {
    let r = ((1.0 - u * u) * (1.0 - v * v)).max(0.0).sqrt();
    ((u * v - r).max(-1.0), (u * v + r).min(0.5))
}

/// The candidate triple grid: Chebyshev pairs `(u, v)` with `u <= v`, each
/// carrying Chebyshev points of its admissible `t`-range.
fn triple_candidates(axis_points: usize, t_points: usize) -> Vec<(f64, f64, f64)> {
    let axis = chebyshev_points(axis_points, -1.0, 0.5);
    let mut out = Vec::new();
    for (i, &u) in axis.iter().enumerate() {
        for &v in &axis[i..] {
            let (tl, th) = admissible_t_range(u, v);
            if th - tl < 1e-12 {
                if th >= tl {
                    out.push((u, v, (tl + th) / 2.0));
                }
                continue;
            }
            for &t in &chebyshev_points(t_points, tl, th) {
                out.push((u, v, t));
            }
        }
    }
    out
}

struct ThreePointSolve {
    blocks: Vec<Vec<Vec<f64>>>,
    report: conic::SolveReport,
    active: usize,
    rounds: usize,
}

/// Cutting-loop solve of the three-point SDP: start from a coarse subset
/// of the triple grid and add violated candidates until the full grid is
/// satisfied within `cut_tol`.
fn three_point_solve(
    data: &ThreePointData,
    d: u32,
    pair_grid: &[f64],
    candidates: &[(f64, f64, f64)],
    margin: f64,
    cut_tol: f64,
) -> Result<ThreePointSolve, BoundError> {
    let blocks_spec: Vec<ConeBlock> = (0..=d)
        .map(|k| ConeBlock::Psd {
            size: (d - k + 1) as usize,
        })
        .collect();
    let nblocks = blocks_spec.len();
    // Deterministic coarse seed.
    let mut active: Vec<usize> = (0..candidates.len()).step_by(7).collect();
    let mut active_set = vec![false; candidates.len()];
    for &i in &active {
        active_set[i] = true;
    }
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > 40 {
            return Err(BoundError::Certification(
                "cutting loop failed to stabilize".into(),
            ));
        }
        let m = pair_grid.len() + active.len();
        let mut constraints = Vec::with_capacity(m);
        for &u in pair_grid {
            let mut coeffs = data.pair_coeffs(u);
            coeffs.push(BlockCoeff {
                block: nblocks,
                entries: vec![(constraints.len(), constraints.len(), 1.0)],
            });
            constraints.push(Constraint {
                coeffs,
                rhs: -1.0 / 3.0 - margin,
            });
        }
        for &ci in &active {
            let (u, v, t) = candidates[ci];
            let mut coeffs = data.triple_coeffs(u, v, t);
            coeffs.push(BlockCoeff {
                block: nblocks,
                entries: vec![(constraints.len(), constraints.len(), 1.0)],
            });
            constraints.push(Constraint {
                coeffs,
                rhs: -margin,
            });
        }
        let mut all_blocks = blocks_spec.clone();
        all_blocks.push(ConeBlock::Nonneg { len: m });
        // Objective: maximize -<F_0, J>.
        let size0 = (d + 1) as usize;
        let mut obj_entries = Vec::new();
        for i in 0..size0 {
            for j in i..size0 {
                obj_entries.push((i, j, -1.0));
            }
        }
        let program = ConicProgram {
            blocks: all_blocks,
            objective: vec![BlockCoeff {
                block: 0,
                entries: obj_entries,
            }],
            constraints,
        };
        let report = conic::solve(&program, &sdp_options())?;
        accept(&program, &report)?;
        let blocks: Vec<Vec<Vec<f64>>> = (0..=d as usize)
            .map(|k| {
                let mat = report.primal_solution[k].as_psd();
                (0..mat.nrows())
                    .map(|i| (0..mat.ncols()).map(|j| mat[(i, j)]).collect())
                    .collect()
            })
            .collect();
        // Violated candidates against the full grid.
        let mut violated: Vec<(usize, f64)> = Vec::new();
        for (ci, &(u, v, t)) in candidates.iter().enumerate() {
            if active_set[ci] {
                continue;
            }
            let val = data.aggregate_eval(&blocks, u, v, t) + margin;
            if val > cut_tol {
                violated.push((ci, val));
            }
        }
        if violated.is_empty() {
            return Ok(ThreePointSolve {
                blocks,
                report,
                active: active.len(),
                rounds,
            });
        }
        violated.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(ci, _) in violated.iter().take(200) {
            active.push(ci);
            active_set[ci] = true;
        }
    }
}

fn three_point_grid_dims(d: u32) -> (usize, usize, usize) {
    let axis_points = (2 * d as usize + 16).max(24);
    let t_points = (d as usize + 5).max(10);
    let pair_points = 2 * d as usize + 50;
    (axis_points, t_points, pair_points)
}

/// The three-point SDP bound for the kissing number in dimension `n` at
/// truncation degree `d`. The raw value is a grid relaxation; certified
/// values come from [`kissing_three_point_certified`].
pub fn kissing_three_point(n: u32, d: u32) -> Result<BoundResult, BoundError> {
    kissing_three_point_with(n, d, 0.0).map(|s| s.0)
}

fn kissing_three_point_with(
    n: u32,
    d: u32,
    margin: f64,
) -> Result<(BoundResult, Vec<Vec<Vec<f64>>>), BoundError> {
    if n < 3 {
        return Err(BoundError::Parameter(format!("dimension {n} < 3")));
    }
    if !(3..=14).contains(&d) {
        return Err(BoundError::Parameter(format!(
            "degree {d} outside supported range 3..=14"
        )));
    }
    let data = ThreePointData::new(n, d)?;
    let (axis_points, t_points, pair_points) = three_point_grid_dims(d);
    let pair_grid = chebyshev_points(pair_points, -1.0, 0.5);
    let candidates = triple_candidates(axis_points, t_points);
    let cut_tol = (margin / 4.0).max(1e-8);
    let solve = three_point_solve(&data, d, &pair_grid, &candidates, margin, cut_tol)?;
    let value = 1.0 + solve.blocks[0].iter().flatten().sum::<f64>();
    let result = BoundResult {
        problem: ProblemTag::KissingThreePoint,
        n,
        d: Some(d),
        value,
        solution: BoundSolution::ThreePointBlocks {
            blocks: solve.blocks.clone(),
        },
        grid: GridSpec::TripleGrid {
            axis_points,
            t_points,
            pair_points,
            triple_candidates: candidates.len(),
            active_constraints: solve.active,
            cut_rounds: solve.rounds,
        },
        solver: SolverSummary::from_report(&solve.report),
    }
    .validate();
    Ok((result, solve.blocks))
}

/// Round the floating three-point blocks to exact rational PSD matrices on
/// their numerically detected faces.
fn round_three_point_blocks(
    blocks: &[Vec<Vec<f64>>],
    kernel_tol: f64,
    den_cap: u64,
) -> Vec<RatMatrix> {
    blocks
        .iter()
        .map(|b| {
            let s = b.len();
            let mat = nalgebra::DMatrix::from_fn(s, s, |i, j| b[i][j]);
            let kernel = detect_kernel(&mat, kernel_tol);
            if kernel.is_empty() {
                let mut out = vec![vec![Rat::zero(); s]; s];
                for i in 0..s {
                    for j in i..s {
                        let r = rationalize((b[i][j] + b[j][i]) / 2.0, den_cap)
                            .unwrap_or_else(Rat::zero);
                        out[i][j] = r.clone();
                        out[j][i] = r;
                    }
                }
                out
            } else {
                // Round on the face: X = V Z V^T with V exact rational.
                let comp = nullspace(&kernel);
                let r = comp.len();
                let mut vf = nalgebra::DMatrix::zeros(s, r);
                let mut v_cols = vec![vec![Rat::zero(); r]; s];
                for (j, col) in comp.iter().enumerate() {
                    for i in 0..s {
                        vf[(i, j)] = to_f64(&col[i]);
                        v_cols[i][j] = col[i].clone();
                    }
                }
                let z = match (vf.transpose() * &vf).try_inverse() {
                    Some(g) => &g * vf.transpose() * &mat * &vf * &g,
                    None => return vec![vec![Rat::zero(); s]; s],
                };
                let mut z_rat = vec![vec![Rat::zero(); r]; r];
                for i in 0..r {
                    for j in i..r {
                        let v = rationalize((z[(i, j)] + z[(j, i)]) / 2.0, den_cap)
                            .unwrap_or_else(Rat::zero);
                        z_rat[i][j] = v.clone();
                        z_rat[j][i] = v;
                    }
                }
                let back = crate::verify::FacialBackMap {
                    complements: vec![Some(v_cols)],
                };
                back.lift_block(0, &z_rat)
            }
        })
        .collect()
}

/// Certified three-point bound: margin-tightened cutting solve, rational
/// rounding on the detected faces, and rigorous verification (Sturm for
/// the pair constraint, dyadic interval branch-and-bound for the triple
/// constraint). Failures escalate the kernel threshold and then the margin
/// (up to 4 retries).
pub fn kissing_three_point_certified(
    n: u32,
    d: u32,
    budget: BoxBudget,
    margin: Option<f64>,
) -> Result<(BoundResult, Certificate), BoundError> {
    let mut margin = margin.unwrap_or(1e-5);
    let mut last_failure = String::new();
    for _attempt in 0..4 {
        let (result, blocks) = kissing_three_point_with(n, d, margin)?;
        for kernel_tol in [1e-7, 1e-5, 1e-3] {
            let rat_blocks = round_three_point_blocks(&blocks, kernel_tol, 1u64 << 36);
            match certify_trivariate(&rat_blocks, n, d, budget) {
                Ok(cert) => return Ok((result, cert)),
                Err(e) => {
                    last_failure = e.to_string();
                    // A PSD failure wants a larger kernel cut; anything else
                    // wants a fresh margin.
                    if !matches!(e, VerifyError::NotPsd { .. }) {
                        break;
                    }
                }
            }
        }
        margin *= 2.0;
    }
    Err(BoundError::Certification(last_failure))
}

/// The exact `1/n` bound for measurable orthogonality-avoiding sets on
/// `S^{n-1}`: maximize `f_0` subject to `sum f_k = 1`,
/// `sum f_k P_k^n(0) = 0`, `f >= 0`, solved in rational arithmetic. The
/// trace constraint and edge constraint are the whole program because the
/// objective `<J, A>` of an invariant kernel collapses to `f_0` under the
/// normalized surface measure.
pub fn avoid_orthogonal(n: u32, d: u32) -> Result<BoundResult, BoundError> {
    if n < 2 {
        return Err(BoundError::Parameter(format!("dimension {n} < 2")));
    }
    if d < 2 {
        return Err(BoundError::Parameter(format!(
            "degree {d} < 2 makes the program degenerate"
        )));
    }
    let values_at_zero: Vec<Rat> = (0..=d)
        .map(|k| gegenbauer_at_zero(n, k))
        .collect::<Result<_, _>>()?;
    let nf = d as usize + 1;
    let lp = DenseLp {
        rows: 2,
        cost: {
            let mut c = vec![Rat::zero(); nf];
            c[0] = rat_int(-1); // maximize f_0
            c
        },
        columns: (0..nf)
            .map(|k| vec![rat_int(1), values_at_zero[k].clone()])
            .collect(),
    };
    let outcome = simplex::solve_lp(&lp, &[rat_int(1), rat_int(0)]);
    let LpOutcome::Optimal {
        solution, value, ..
    } = outcome
    else {
        return Err(BoundError::Parameter(
            "orthogonality LP unexpectedly infeasible".into(),
        ));
    };
    let exact = -value;
    let mut f = vec![Rat::zero(); nf];
    for (k, v) in solution {
        f[k] = v;
    }
    Ok(BoundResult {
        problem: ProblemTag::AvoidOrthogonalSphere,
        n,
        d: Some(d),
        value: to_f64(&exact),
        solution: BoundSolution::SphereExact { f, value: exact },
        grid: GridSpec::Exact,
        solver: SolverSummary::exact(),
    }
    .validate())
}

/// The closed-form two-point bound for measurable one-avoiding sets:
/// `|Omega_min| / (1 + |Omega_min|)`, where `Omega_min < 0` is the global
/// minimum of the radial positive-type profile, located by a dense scan
/// plus golden-section refinement. The closed form follows from the mass
/// decomposition of any feasible radial measure: the atom at zero carries
/// the mean value and is dominated by `|Omega_min|` times the rest.
pub fn avoid_distance_plane(n: u32, search_horizon: f64) -> Result<BoundResult, BoundError> {
    if n < 2 {
        return Err(BoundError::Parameter(format!("dimension {n} < 2")));
    }
    if search_horizon < 20.0 {
        return Err(BoundError::Parameter(format!(
            "search horizon {search_horizon} < 20"
        )));
    }
    let step = 1e-3;
    let count = (search_horizon / step).ceil() as usize;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..=count {
        let t = i as f64 * step;
        let v = bessel_omega(n, t)?;
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_v >= 0.0 || best_i == 0 || best_i == count {
        return Err(BoundError::NoNegativeProfile);
    }
    // Golden-section refinement on the bracketing interval.
    let (mut a, mut b) = ((best_i - 1) as f64 * step, (best_i + 1) as f64 * step);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = bessel_omega(n, x1)?;
    let mut f2 = bessel_omega(n, x2)?;
    while b - a > 1e-12 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = bessel_omega(n, x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = bessel_omega(n, x2)?;
        }
    }
    let minimizer = (a + b) / 2.0;
    let omega_min = bessel_omega(n, minimizer)?.min(best_v);
    let value = omega_min.abs() / (1.0 + omega_min.abs());
    Ok(BoundResult {
        problem: ProblemTag::AvoidDistancePlane,
        n,
        d: None,
        value,
        solution: BoundSolution::PlaneClosedForm {
            omega_min,
            minimizer,
        },
        grid: GridSpec::RadialScan {
            step,
            horizon: search_horizon,
        },
        solver: SolverSummary::exact(),
    }
    .validate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn lp_dimension_8_hits_240() {
        let r = kissing_lp(8, 6, 200).unwrap();
        assert!(
            (r.value - 240.0).abs() < 1e-4,
            "kissing LP dim 8: {}",
            r.value
        );
    }

    #[test]
    fn lp_dimension_3_bracket() {
        let r = kissing_lp(3, 10, 200).unwrap();
        assert!(r.value >= 12.0 && r.value <= 14.0, "{}", r.value);
    }

    #[test]
    fn lp_rejects_bad_parameters() {
        assert!(kissing_lp(2, 6, 200).is_err());
        assert!(kissing_lp(8, 1, 200).is_err());
        assert!(kissing_lp(8, 6, 10).is_err());
    }

    #[test]
    fn lp_certified_dimension_8() {
        let (result, cert) = kissing_lp_certified(8, 6, 200, None).unwrap();
        assert_eq!(cert.certified_integer_bound, 240.into());
        assert!(cert.certified_bound < rat_int(241));
        assert!(cert.certified_bound >= rat_int(240));
        assert!((result.value - 240.0).abs() < 1e-3);
    }

    #[test]
    fn orthogonal_sphere_is_one_over_n() {
        for n in 2..=8u32 {
            for d in [2u32, 5, 9, 12] {
                let r = avoid_orthogonal(n, d).unwrap();
                let BoundSolution::SphereExact { value, f } = &r.solution else {
                    panic!("wrong solution kind");
                };
                assert_eq!(value, &rat(1, n as i64), "n={n} d={d}");
                assert_eq!(&f[0], value);
                let total: Rat = f.iter().cloned().sum();
                assert_eq!(total, rat_int(1));
            }
        }
    }

    #[test]
    fn orthogonal_sphere_optimum_uses_most_negative_value() {
        // P_2^n(0) = -1/(n-1) is the most negative among P_k^n(0), which
        // pins the optimum at 1/n by the two-constraint argument.
        for n in 2..=8u32 {
            let p2 = gegenbauer_at_zero(n, 2).unwrap();
            assert_eq!(p2, rat(-1, n as i64 - 1));
            for k in 0..=12u32 {
                assert!(gegenbauer_at_zero(n, k).unwrap() >= p2, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn plane_bound_dimension_two() {
        let r = avoid_distance_plane(2, 50.0).unwrap();
        assert!(
            r.value > 0.2871185 && r.value < 0.2871200,
            "plane bound: {}",
            r.value
        );
        let BoundSolution::PlaneClosedForm {
            omega_min,
            minimizer,
        } = r.solution
        else {
            panic!("wrong solution kind");
        };
        // The minimum of J_0 sits at the first zero of J_1.
        assert!((minimizer - 3.8317059702).abs() < 1e-6);
        assert!((omega_min + 0.4027593957).abs() < 1e-9);
    }

    #[test]
    fn plane_bound_dominates_known_constants() {
        let r = avoid_distance_plane(2, 50.0).unwrap();
        assert!(r.value >= 0.2470);
        assert!(r.value >= 0.22936);
    }

    #[test]
    fn plane_bound_decreases_with_dimension() {
        let v2 = avoid_distance_plane(2, 60.0).unwrap().value;
        let v3 = avoid_distance_plane(3, 60.0).unwrap().value;
        let v4 = avoid_distance_plane(4, 60.0).unwrap().value;
        assert!(v2 > v3 && v3 > v4, "{v2} {v3} {v4}");
    }

    #[test]
    fn three_point_small_degree_smoke() {
        // At low degree the simplified three-point form can be weaker than
        // the LP bound; validity (>= 12) and sanity are what matter here.
        let r = kissing_three_point(3, 4).unwrap();
        assert!(r.value >= 12.0, "three-point n=3 d=4: {}", r.value);
        assert!(r.value <= 30.0, "three-point n=3 d=4: {}", r.value);
    }
}
