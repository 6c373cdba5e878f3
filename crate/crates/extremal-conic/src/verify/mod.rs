//! Exact certification: from floating solver output to rational proof.
//!
//! The pipeline has four stages, mirroring standard practice for rigorous
//! semidefinite bounds: detect the kernel of the numerical solution
//! ([`detect_kernel`]), restrict the program to the face it spans
//! ([`facial_reduce`]), round onto the active affine constraints in exact
//! arithmetic ([`round_least_squares`]), and finally verify the rounded
//! solution rigorously. Verification reduces to two primitives:
//!
//! - univariate polynomial nonpositivity on an interval, decided by Sturm
//!   root counting and exact sign evaluation ([`certify_univariate`]);
//! - trivariate polynomial nonpositivity on the admissible region of
//!   triple inner products, decided by dyadic interval branch-and-bound
//!   ([`certify_trivariate`]).
//!
//! No accept/reject decision anywhere in this module depends on floating
//! point arithmetic.

mod interval;
mod ldlt;
mod ratlinalg;
mod sturm;

pub use interval::{DyInterval, Dyadic};
pub use ldlt::{ldlt_psd, LdltError, LdltWitness, RatMatrix};
pub use ratlinalg::{independent_rows, nullspace, project_affine, rank, solve_exact};
pub use sturm::{count_roots_half_open, isolate_roots, prove_nonpositive, SturmTranscript};

use crate::conic::{BlockCoeff, ConeBlock, ConicProgram, Constraint};
use crate::orthopoly::{gegenbauer, s_matrix_avg_unit, Polynomial, TriPolynomial};
use crate::rational::{floor_int, limit_denominator, rat, rat_int, rationalize, Rat};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("coefficient {index} is negative")]
    NegativeCoefficient { index: usize },
    #[error("constraint violated at a rational point (value {value_at_witness})")]
    SignViolation {
        witness: Vec<Rat>,
        value_at_witness: Rat,
    },
    #[error("box budget of {budget} exhausted ({processed} processed)")]
    BudgetExhausted {
        budget: u64,
        processed: u64,
        worst_box: Vec<(f64, f64)>,
    },
    #[error("block {block} is not positive semidefinite: {source}")]
    NotPsd {
        block: usize,
        #[source]
        source: LdltError,
    },
    #[error("active constraint system is inconsistent after rationalization")]
    InconsistentSystem,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Orthopoly(#[from] crate::orthopoly::OrthopolyError),
}

/// Branch-and-bound statistics stored in certificates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BoxTranscript {
    pub budget: u64,
    pub boxes_processed: u64,
    pub discharged_outside: u64,
    pub discharged_nonpositive: u64,
    pub discharged_symmetry: u64,
    pub max_depth: u32,
}

/// How a certificate was verified, with enough data to re-run the same
/// checks from the file alone.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VerificationTranscript {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_constraint: Option<SturmTranscript>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_constraint: Option<BoxTranscript>,
}

/// Exact certificate payload.
#[derive(Clone, Debug, PartialEq)]
pub enum CertificateData {
    /// Nonnegative coefficients of the two-point (LP) bound.
    LpCoefficients { f: Vec<Rat> },
    /// PSD blocks of the three-point bound plus their factorization
    /// witnesses.
    ThreePointBlocks {
        blocks: Vec<RatMatrix>,
        psd_witnesses: Vec<LdltWitness>,
    },
}

/// A self-contained exact proof of an upper bound: rational feasible data
/// for the minimization side of a bound program, the exactly recomputed
/// objective, and the verification transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub problem: String,
    pub n: u32,
    pub d: u32,
    pub data: CertificateData,
    pub certified_bound: Rat,
    /// Floor of the bound; valid for integer quantities like kissing
    /// numbers.
    pub certified_integer_bound: BigInt,
    pub verification: VerificationTranscript,
    pub version: String,
}

/// Rational basis of the numerically detected kernel of an approximately
/// PSD matrix: eigenvectors with eigenvalue below `tolerance`, each
/// rationalized by continued fractions and then re-orthogonalized exactly.
/// Entries that sit near small rationals are snapped to them when the
/// snapped vector still agrees with the numerical one.
pub fn detect_kernel(x: &DMatrix<f64>, tolerance: f64) -> Vec<Vec<Rat>> {
    let n = x.nrows();
    if n == 0 {
        return Vec::new();
    }
    let eig = x.clone().symmetric_eigen();
    // Deterministic order: ascending eigenvalue, index tie-break.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let kernel_cols: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] < tolerance)
        .collect();
    if kernel_cols.is_empty() {
        return Vec::new();
    }
    // The eigensolver returns an arbitrary rotation of a degenerate
    // eigenspace; reduced row echelon form is a canonical, rotation
    // invariant basis of the same span, and structured kernels become
    // small rationals in it.
    let mut rows: Vec<Vec<f64>> = kernel_cols
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0usize;
    for c in 0..n {
        // Largest remaining pivot in this column.
        let Some((p, pv)) = (r..rows.len())
            .map(|i| (i, rows[i][c]))
            .max_by(|a, b| {
                a.1.abs()
                    .partial_cmp(&b.1.abs())
                    .unwrap_or(Ordering::Equal)
            })
        else {
            break;
        };
        if pv.abs() < 1e-7 {
            continue;
        }
        rows.swap(r, p);
        for k in 0..n {
            rows[r][k] /= pv;
        }
        for i in 0..rows.len() {
            if i == r {
                continue;
            }
            let f = rows[i][c];
            if f != 0.0 {
                for k in 0..n {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);

    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for row in rows {
        // Small-rational snap, verified against the float vector; fall back
        // to a tight continued-fraction approximation when the kernel is
        // not small-rational.
        let snapped: Option<Vec<Rat>> = row
            .iter()
            .map(|&x| {
                let r = rationalize(x, 1000)?;
                let back = crate::rational::to_f64(&r);
                if (back - x).abs() <= 1e-7 {
                    Some(r)
                } else {
                    None
                }
            })
            .collect();
        let vec_rat = snapped.unwrap_or_else(|| {
            row.iter()
                .map(|&x| rationalize(x, 1u64 << 40).unwrap_or_else(|| rat_int(0)))
                .collect()
        });
        if vec_rat.iter().any(|x| !x.is_zero()) {
            basis.push(vec_rat);
        }
    }
    // Exact Gram-Schmidt; drop dependent vectors.
    let mut ortho: Vec<Vec<Rat>> = Vec::new();
    for mut v in basis {
        for u in &ortho {
            let vu: Rat = v.iter().zip(u).map(|(a, b)| a * b).sum();
            let uu: Rat = u.iter().map(|a| a * a).sum();
            let f = vu / uu;
            if f.is_zero() {
                continue;
            }
            for (vi, ui) in v.iter_mut().zip(u) {
                let delta = &f * ui;
                *vi -= delta;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            ortho.push(v);
        }
    }
    ortho
}

/// Exact rational congruence data mapping a facially reduced solution back
/// to original block coordinates: per block, the columns spanning the
/// orthogonal complement of the detected kernel (`None` means untouched).
#[derive(Clone, Debug)]
pub struct FacialBackMap {
    pub complements: Vec<Option<Vec<Vec<Rat>>>>,
}

impl FacialBackMap {
    /// Lift a reduced rational block matrix to original coordinates:
    /// `X = V Z V^T`.
    pub fn lift_block(&self, block: usize, z: &RatMatrix) -> RatMatrix {
        match &self.complements[block] {
            None => z.clone(),
            Some(v) => {
                let n = v.len();
                let r = if n == 0 { 0 } else { v[0].len() };
                let mut out = vec![vec![Rat::zero(); n]; n];
                for a in 0..n {
                    for b in 0..=a {
                        let mut acc = Rat::zero();
                        for i in 0..r {
                            for j in 0..r {
                                if z[i][j].is_zero() {
                                    continue;
                                }
                                acc += &v[a][i] * &z[i][j] * &v[b][j];
                            }
                        }
                        out[a][b] = acc.clone();
                        out[b][a] = acc;
                    }
                }
                out
            }
        }
    }
}

/// Substitute each PSD block `X` by `V Z V^T`, where `V` spans the exact
/// rational orthogonal complement of the provided kernel basis. Returns
/// the smaller program (with floating coefficients congruence-transformed)
/// and the exact back-map.
pub fn facial_reduce(
    program: &ConicProgram,
    kernels: &[Vec<Vec<Rat>>],
) -> Result<(ConicProgram, FacialBackMap), VerifyError> {
    if kernels.len() != program.blocks.len() {
        return Err(VerifyError::Shape(format!(
            "kernel list covers {} blocks, program has {}",
            kernels.len(),
            program.blocks.len()
        )));
    }
    let mut complements: Vec<Option<Vec<Vec<Rat>>>> = Vec::new();
    let mut new_blocks = Vec::new();
    let mut v_float: Vec<Option<DMatrix<f64>>> = Vec::new();
    for (bi, blk) in program.blocks.iter().enumerate() {
        let kern = &kernels[bi];
        if kern.is_empty() {
            complements.push(None);
            v_float.push(None);
            new_blocks.push(*blk);
            continue;
        }
        let ConeBlock::Psd { size } = blk else {
            return Err(VerifyError::Shape(format!(
                "kernel given for non-PSD block {bi}"
            )));
        };
        for v in kern {
            if v.len() != *size {
                return Err(VerifyError::Shape(format!(
                    "kernel vector length {} does not match block size {size}",
                    v.len()
                )));
            }
        }
        // Columns of V = basis of the null space of the kernel rows.
        let basis = nullspace(kern);
        let r = basis.len();
        let mut v_cols = vec![vec![Rat::zero(); r]; *size];
        for (j, col) in basis.iter().enumerate() {
            for i in 0..*size {
                v_cols[i][j] = col[i].clone();
            }
        }
        let mut vf = DMatrix::zeros(*size, r);
        for i in 0..*size {
            for j in 0..r {
                vf[(i, j)] = crate::rational::to_f64(&v_cols[i][j]);
            }
        }
        complements.push(Some(v_cols));
        v_float.push(Some(vf));
        new_blocks.push(ConeBlock::Psd { size: r });
    }

    let transform = |coeffs: &[BlockCoeff]| -> Vec<BlockCoeff> {
        coeffs
            .iter()
            .map(|bc| match &v_float[bc.block] {
                None => bc.clone(),
                Some(vf) => {
                    let size = vf.nrows();
                    let mut dense = DMatrix::zeros(size, size);
                    for &(r0, c0, val) in &bc.entries {
                        dense[(r0, c0)] += val;
                        if r0 != c0 {
                            dense[(c0, r0)] += val;
                        }
                    }
                    let reduced = vf.transpose() * dense * vf;
                    let r = reduced.nrows();
                    let mut entries = Vec::new();
                    for i in 0..r {
                        for j in i..r {
                            let v = reduced[(i, j)];
                            if v != 0.0 {
                                entries.push((i, j, v));
                            }
                        }
                    }
                    BlockCoeff {
                        block: bc.block,
                        entries,
                    }
                }
            })
            .collect()
    };

    let reduced = ConicProgram {
        blocks: new_blocks,
        objective: transform(&program.objective),
        constraints: program
            .constraints
            .iter()
            .map(|c| Constraint {
                coeffs: transform(&c.coeffs),
                rhs: c.rhs,
            })
            .collect(),
    };
    Ok((reduced, FacialBackMap { complements }))
}

/// Rationalize a floating solution and project it exactly onto the affine
/// set `{x : B x = d}` of active constraints. The output satisfies the
/// equalities exactly; an inconsistent rationalized system is an error.
pub fn round_least_squares(
    x_hat: &[f64],
    active: &[(Vec<Rat>, Rat)],
    denominator_cap: u64,
) -> Result<Vec<Rat>, VerifyError> {
    let x0: Vec<Rat> = x_hat
        .iter()
        .map(|&x| rationalize(x, denominator_cap).ok_or(VerifyError::InconsistentSystem))
        .collect::<Result<_, _>>()?;
    if active.is_empty() {
        return Ok(x0);
    }
    let rows: Vec<Vec<Rat>> = active.iter().map(|(r, _)| r.clone()).collect();
    let rhs: Vec<Rat> = active.iter().map(|(_, d)| d.clone()).collect();
    let keep = independent_rows(&rows);
    let b_kept: Vec<Vec<Rat>> = keep.iter().map(|&i| rows[i].clone()).collect();
    let d_kept: Vec<Rat> = keep.iter().map(|&i| rhs[i].clone()).collect();
    let x = project_affine(&b_kept, &d_kept, &x0).ok_or(VerifyError::InconsistentSystem)?;
    // Dependent rows must be consistent with the projection.
    for (row, di) in rows.iter().zip(&rhs) {
        let mut acc = Rat::zero();
        for (aij, xj) in row.iter().zip(&x) {
            if !aij.is_zero() {
                acc += aij * xj;
            }
        }
        if &acc != di {
            return Err(VerifyError::InconsistentSystem);
        }
    }
    Ok(x)
}

/// Certify the two-point (LP) kissing bound: given exact `f_k >= 0`, prove
/// `sum_k f_k P_k^n(t) + 1 <= 0` on `[-1, 1/2]` and return the certificate
/// with bound `1 + sum_k f_k`.
pub fn certify_univariate(f: &[Rat], n: u32, d: u32) -> Result<Certificate, VerifyError> {
    if f.len() != d as usize + 1 {
        return Err(VerifyError::Shape(format!(
            "expected {} coefficients, got {}",
            d + 1,
            f.len()
        )));
    }
    for (k, fk) in f.iter().enumerate() {
        if fk.is_negative() {
            return Err(VerifyError::NegativeCoefficient { index: k });
        }
    }
    let mut p = Polynomial::one();
    for (k, fk) in f.iter().enumerate() {
        if fk.is_zero() {
            continue;
        }
        p = p.add(&gegenbauer(n, k as u32)?.scale(fk));
    }
    let transcript = prove_nonpositive(&p, &rat_int(-1), &rat(1, 2)).map_err(|witness| {
        let value = p.eval(&witness);
        VerifyError::SignViolation {
            witness: vec![witness],
            value_at_witness: value,
        }
    })?;
    let certified_bound: Rat = f.iter().fold(rat_int(1), |acc, fk| acc + fk);
    Ok(Certificate {
        problem: "kissing-lp".to_string(),
        n,
        d,
        data: CertificateData::LpCoefficients { f: f.to_vec() },
        certified_bound: certified_bound.clone(),
        certified_integer_bound: floor_int(&certified_bound),
        verification: VerificationTranscript {
            method: "sturm".to_string(),
            edge_constraint: Some(transcript),
            region_constraint: None,
        },
        version: crate::VERSION.to_string(),
    })
}

/// The admissible-region polynomial `g = 1 + 2uvt - u^2 - v^2 - t^2`,
/// nonnegative exactly on the triples realizable as pairwise inner
/// products of three unit vectors.
pub fn region_polynomial() -> TriPolynomial {
    TriPolynomial::one()
        .add(&TriPolynomial::monomial(rat_int(2), (1, 1, 1)))
        .sub(&TriPolynomial::monomial(rat_int(1), (2, 0, 0)))
        .sub(&TriPolynomial::monomial(rat_int(1), (0, 2, 0)))
        .sub(&TriPolynomial::monomial(rat_int(1), (0, 0, 2)))
}

/// `sum_k <F_k, S_k(u, v, t)>` as an exact trivariate polynomial, using the
/// unit-normalized averaged symmetrized kernels.
pub fn three_point_aggregate(
    blocks: &[RatMatrix],
    n: u32,
    d: u32,
) -> Result<TriPolynomial, VerifyError> {
    let mut p = TriPolynomial::zero();
    for (k, fk) in blocks.iter().enumerate() {
        let s = s_matrix_avg_unit(n, k as u32, d)?;
        let size = s.size();
        if fk.len() != size {
            return Err(VerifyError::Shape(format!(
                "block {k} has size {}, expected {size}",
                fk.len()
            )));
        }
        for i in 0..size {
            for j in 0..size {
                if fk[i][j].is_zero() {
                    continue;
                }
                p = p.add(&s.entry(i, j).scale(&fk[i][j]));
            }
        }
    }
    Ok(p)
}

/// Options for the trivariate branch-and-bound.
#[derive(Clone, Copy, Debug)]
pub struct BoxBudget {
    pub max_boxes: u64,
    pub max_depth: u32,
}

impl Default for BoxBudget {
    fn default() -> Self {
        BoxBudget {
            max_boxes: 2_000_000,
            max_depth: 56,
        }
    }
}

/// Certify the three-point kissing bound: exact PSD checks on the blocks,
/// a Sturm proof of the pair constraint `sum_k <F_k, S_k(u,u,1)> <= -1/3`
/// on `[-1, 1/2]`, and an interval branch-and-bound proof of
/// `sum_k <F_k, S_k(u,v,t)> <= 0` on the admissible region inside
/// `[-1, 1/2]^3`. The certified bound is `1 + <F_0, J>`.
pub fn certify_trivariate(
    blocks: &[RatMatrix],
    n: u32,
    d: u32,
    budget: BoxBudget,
) -> Result<Certificate, VerifyError> {
    if blocks.len() != d as usize + 1 {
        return Err(VerifyError::Shape(format!(
            "expected {} blocks, got {}",
            d + 1,
            blocks.len()
        )));
    }
    // Exact PSD witnesses.
    let mut witnesses = Vec::with_capacity(blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        let expected = (d as usize + 1) - k;
        if b.len() != expected || b.iter().any(|row| row.len() != expected) {
            return Err(VerifyError::Shape(format!(
                "block {k} must be {expected}x{expected}"
            )));
        }
        let w = ldlt_psd(b).map_err(|source| VerifyError::NotPsd { block: k, source })?;
        witnesses.push(w);
    }

    // Pair constraint via Sturm.
    let aggregate = three_point_aggregate(blocks, n, d)?;
    let diag = aggregate.substitute_diagonal();
    let pair_poly = diag.add(&Polynomial::constant(rat(1, 3)));
    let pair_transcript =
        prove_nonpositive(&pair_poly, &rat_int(-1), &rat(1, 2)).map_err(|witness| {
            let value = pair_poly.eval(&witness);
            VerifyError::SignViolation {
                witness: vec![witness.clone(), witness.clone(), rat_int(1)],
                value_at_witness: value,
            }
        })?;

    // Region constraint via branch-and-bound.
    let box_transcript = prove_region_nonpositive(&aggregate, budget)?;

    // Bound: 1 + <F_0, J>.
    let mut f0j = Rat::zero();
    for row in &blocks[0] {
        for v in row {
            f0j += v;
        }
    }
    let certified_bound = rat_int(1) + f0j;
    Ok(Certificate {
        problem: "kissing-three-point".to_string(),
        n,
        d,
        data: CertificateData::ThreePointBlocks {
            blocks: blocks.to_vec(),
            psd_witnesses: witnesses,
        },
        certified_bound: certified_bound.clone(),
        certified_integer_bound: floor_int(&certified_bound),
        verification: VerificationTranscript {
            method: "sturm+interval-branch-bound".to_string(),
            edge_constraint: Some(pair_transcript),
            region_constraint: Some(box_transcript),
        },
        version: crate::VERSION.to_string(),
    })
}

/// A trivariate polynomial prepared for fast interval evaluation: grouped
/// exponents with interval-enclosed coefficients, plus its gradient.
struct DyPoly {
    groups: Vec<(u32, Vec<(u32, Vec<(u32, DyInterval)>)>)>,
    max_deg: (u32, u32, u32),
}

impl DyPoly {
    fn build(p: &TriPolynomial) -> DyPoly {
        let mut groups: Vec<(u32, Vec<(u32, Vec<(u32, DyInterval)>)>)> = Vec::new();
        for ((a, b, c), coef) in p.terms() {
            let iv = DyInterval::from_rat(coef);
            let ga = match groups.binary_search_by_key(a, |g| g.0) {
                Ok(i) => i,
                Err(i) => {
                    groups.insert(i, (*a, Vec::new()));
                    i
                }
            };
            let vb = &mut groups[ga].1;
            let gb = match vb.binary_search_by_key(b, |g| g.0) {
                Ok(i) => i,
                Err(i) => {
                    vb.insert(i, (*b, Vec::new()));
                    i
                }
            };
            vb[gb].1.push((*c, iv));
        }
        DyPoly {
            groups,
            max_deg: p.degrees(),
        }
    }

    fn eval(&self, pu: &[DyInterval], pv: &[DyInterval], pt: &[DyInterval]) -> DyInterval {
        let mut total = DyInterval::ZERO;
        for (a, vb) in &self.groups {
            let mut sum_b = DyInterval::ZERO;
            for (b, vc) in vb {
                let mut sum_c = DyInterval::ZERO;
                for (c, coef) in vc {
                    sum_c = sum_c.add(coef.mul(pt[*c as usize]));
                }
                sum_b = sum_b.add(sum_c.mul(pv[*b as usize]));
            }
            total = total.add(sum_b.mul(pu[*a as usize]));
        }
        total
    }
}

struct BoxRegion {
    lo: [Dyadic; 3],
    hi: [Dyadic; 3],
    depth: u32,
}

fn powers(iv: DyInterval, max: u32) -> Vec<DyInterval> {
    (0..=max).map(|k| iv.pow(k)).collect()
}

/// Prove `p <= 0` on `{(u,v,t) in [-1,1/2]^3 : g >= 0}` where `g` is the
/// admissible-region polynomial. Requires `p` symmetric under permutations
/// of the variables (true for symmetrized kernels by construction), which
/// justifies discharging boxes containing no sorted triple.
fn prove_region_nonpositive(
    p: &TriPolynomial,
    budget: BoxBudget,
) -> Result<BoxTranscript, VerifyError> {
    for perm in [[1usize, 0, 2], [0, 2, 1]] {
        if &p.permute(perm) != p {
            return Err(VerifyError::Shape(
                "region polynomial must be symmetric under variable permutations".into(),
            ));
        }
    }
    let g = region_polynomial();
    let pd = DyPoly::build(p);
    let grad = [
        DyPoly::build(&p.derivative(0)),
        DyPoly::build(&p.derivative(1)),
        DyPoly::build(&p.derivative(2)),
    ];
    let gd = DyPoly::build(&g);
    let g_grad = [
        DyPoly::build(&g.derivative(0)),
        DyPoly::build(&g.derivative(1)),
        DyPoly::build(&g.derivative(2)),
    ];
    let max_deg = pd.max_deg;

    let mut transcript = BoxTranscript {
        budget: budget.max_boxes,
        boxes_processed: 0,
        discharged_outside: 0,
        discharged_nonpositive: 0,
        discharged_symmetry: 0,
        max_depth: 0,
    };

    let lo = Dyadic::from_int(-1);
    let hi = Dyadic { m: 1, e: -1 }; // 1/2
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(BoxRegion {
        lo: [lo; 3],
        hi: [hi; 3],
        depth: 0,
    });
    // Breadth-first order so a genuine violation in one part of the region
    // is found even when another part needs deep refinement.
    let mut undischarged: Option<BoxRegion> = None;

    while let Some(bx) = queue.pop_front() {
        transcript.boxes_processed += 1;
        transcript.max_depth = transcript.max_depth.max(bx.depth);
        if transcript.boxes_processed > budget.max_boxes {
            let worst_box = (0..3)
                .map(|i| (bx.lo[i].to_f64(), bx.hi[i].to_f64()))
                .collect();
            return Err(VerifyError::BudgetExhausted {
                budget: budget.max_boxes,
                processed: transcript.boxes_processed,
                worst_box,
            });
        }
        if bx.depth > budget.max_depth {
            // Park it; failure is reported after the search for witnesses.
            if undischarged.is_none() {
                undischarged = Some(bx);
            }
            continue;
        }

        // Symmetry: boxes containing no sorted triple u <= v <= t are
        // covered by a permuted box.
        if bx.lo[0].cmp_exact(bx.hi[1]) == Ordering::Greater
            || bx.lo[1].cmp_exact(bx.hi[2]) == Ordering::Greater
        {
            transcript.discharged_symmetry += 1;
            continue;
        }

        let iu = DyInterval::new(bx.lo[0], bx.hi[0]);
        let iv = DyInterval::new(bx.lo[1], bx.hi[1]);
        let it = DyInterval::new(bx.lo[2], bx.hi[2]);
        let pu = powers(iu, max_deg.0.max(2));
        let pv = powers(iv, max_deg.1.max(2));
        let pt = powers(it, max_deg.2.max(2));

        // Outside test: g < 0 on the whole box.
        let g_bound = bound_above(&gd, &g_grad, &bx, &pu, &pv, &pt);
        if g_bound.sign() == Ordering::Less {
            transcript.discharged_outside += 1;
            continue;
        }

        // Nonpositivity test: p <= 0 on the whole box.
        let p_bound = bound_above(&pd, &grad, &bx, &pu, &pv, &pt);
        if p_bound.sign() != Ordering::Greater {
            transcript.discharged_nonpositive += 1;
            continue;
        }

        // Certain violation? Only report when the center is strictly
        // admissible and p is strictly positive there.
        let center = [
            bx.lo[0].midpoint(bx.hi[0]),
            bx.lo[1].midpoint(bx.hi[1]),
            bx.lo[2].midpoint(bx.hi[2]),
        ];
        let cu = powers(DyInterval::point(center[0]), max_deg.0.max(2));
        let cv = powers(DyInterval::point(center[1]), max_deg.1.max(2));
        let ct = powers(DyInterval::point(center[2]), max_deg.2.max(2));
        let g_center = gd.eval(&cu, &cv, &ct);
        let p_center = pd.eval(&cu, &cv, &ct);
        if g_center.lo.sign() == Ordering::Greater && p_center.lo.sign() == Ordering::Greater {
            let witness: Vec<Rat> = center.iter().map(|d| d.to_rat()).collect();
            let exact = p.eval(&witness[0], &witness[1], &witness[2]);
            if exact.is_positive() {
                return Err(VerifyError::SignViolation {
                    witness,
                    value_at_witness: exact,
                });
            }
        }

        // Bisect the widest side.
        let widths: Vec<f64> = (0..3)
            .map(|i| {
                DyInterval::new(bx.lo[i], bx.hi[i]).width_f64()
            })
            .collect();
        let split = widths
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap();
        let mid = bx.lo[split].midpoint(bx.hi[split]);
        let mut left = BoxRegion {
            lo: bx.lo,
            hi: bx.hi,
            depth: bx.depth + 1,
        };
        left.hi[split] = mid;
        let mut right = BoxRegion {
            lo: bx.lo,
            hi: bx.hi,
            depth: bx.depth + 1,
        };
        right.lo[split] = mid;
        queue.push_back(left);
        queue.push_back(right);
    }
    if let Some(bx) = undischarged {
        let worst_box = (0..3)
            .map(|i| (bx.lo[i].to_f64(), bx.hi[i].to_f64()))
            .collect();
        return Err(VerifyError::BudgetExhausted {
            budget: budget.max_boxes,
            processed: transcript.boxes_processed,
            worst_box,
        });
    }
    Ok(transcript)
}

/// Upper bound of a polynomial over a box: the tighter of the naive
/// interval evaluation and the first-order (mean value) form around the
/// box center.
fn bound_above(
    p: &DyPoly,
    grad: &[DyPoly; 3],
    bx: &BoxRegion,
    pu: &[DyInterval],
    pv: &[DyInterval],
    pt: &[DyInterval],
) -> Dyadic {
    let naive = p.eval(pu, pv, pt).hi;
    let center = [
        bx.lo[0].midpoint(bx.hi[0]),
        bx.lo[1].midpoint(bx.hi[1]),
        bx.lo[2].midpoint(bx.hi[2]),
    ];
    let cu = powers(DyInterval::point(center[0]), (pu.len() - 1) as u32);
    let cv = powers(DyInterval::point(center[1]), (pv.len() - 1) as u32);
    let ct = powers(DyInterval::point(center[2]), (pt.len() - 1) as u32);
    let mut mv = p.eval(&cu, &cv, &ct);
    for (i, gp) in grad.iter().enumerate() {
        let gi = gp.eval(pu, pv, pt);
        let dev = DyInterval::new(bx.lo[i], bx.hi[i]).sub(DyInterval::point(center[i]));
        mv = mv.add(gi.mul(dev));
    }
    if mv.hi.cmp_exact(naive) == Ordering::Less {
        mv.hi
    } else {
        naive
    }
}

#[cfg(test)]
mod tests;
