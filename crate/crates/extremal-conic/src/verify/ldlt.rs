//! Exact rational LDL^T factorization with diagonal pivoting.
//!
//! The factorization doubles as a positive-semidefiniteness proof: a
//! symmetric rational matrix is PSD iff the pivoted elimination below runs
//! to completion with nonnegative pivots, and the stored factors can be
//! re-verified by exact reconstruction.

use crate::rational::Rat;
use num_traits::{Signed, Zero};

/// Symmetric matrix entries as dense rows (callers keep them symmetric).
pub type RatMatrix = Vec<Vec<Rat>>;

/// A witness that a rational symmetric matrix is positive semidefinite:
/// `P A P^T = L D L^T` with `L` unit lower triangular and `D >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdltWitness {
    /// Pivot order: step `k` eliminated original index `perm[k]`.
    pub perm: Vec<usize>,
    /// Strictly-lower rows of `L` (row `k` has `k` entries).
    pub lower: Vec<Vec<Rat>>,
    /// Pivots; trailing zeros correspond to the kernel of the matrix.
    pub diag: Vec<Rat>,
}

#[derive(Debug, thiserror::Error)]
pub enum LdltError {
    #[error("matrix is not positive semidefinite: negative pivot at step {step}")]
    NegativePivot { step: usize },
    #[error("matrix is not positive semidefinite: zero diagonal with nonzero row at step {step}")]
    ZeroDiagonalNonzeroRow { step: usize },
    #[error("matrix is not symmetric at ({r}, {c})")]
    NotSymmetric { r: usize, c: usize },
}

/// Factor a symmetric rational matrix, proving it PSD, or report why not.
///
/// Deterministic: the pivot at each step is the largest remaining diagonal
/// entry, ties broken by smallest index.
pub fn ldlt_psd(a: &RatMatrix) -> Result<LdltWitness, LdltError> {
    let n = a.len();
    for (r, row) in a.iter().enumerate() {
        for c in 0..r {
            if row[c] != a[c][r] {
                return Err(LdltError::NotSymmetric { r, c });
            }
        }
    }
    let mut work: RatMatrix = a.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut lower: Vec<Vec<Rat>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    // Rows of L are built in pivot order over the *remaining* index list;
    // translate to per-step coefficients against earlier pivots.
    let mut l_cols: Vec<Vec<Rat>> = vec![Vec::new(); n]; // per original index: multipliers per step

    for step in 0..n {
        // Largest remaining diagonal entry.
        let mut best: Option<(usize, &Rat)> = None;
        for &i in &remaining {
            match best {
                None => best = Some((i, &work[i][i])),
                Some((_, bv)) if &work[i][i] > bv => best = Some((i, &work[i][i])),
                _ => {}
            }
        }
        let (p, pv) = best.unwrap();
        if pv.is_negative() {
            return Err(LdltError::NegativePivot { step });
        }
        if pv.is_zero() {
            // PSD with zero diagonal forces the whole remaining block to be
            // zero; otherwise some 2x2 principal minor is negative.
            for &i in &remaining {
                for &j in &remaining {
                    if !work[i][j].is_zero() {
                        return Err(LdltError::ZeroDiagonalNonzeroRow { step });
                    }
                }
            }
            // Emit zero pivots for the kernel directions in index order;
            // within the zero block L is the identity.
            let mut extra = 0usize;
            for &i in &remaining {
                perm.push(i);
                let mut row = l_cols[i].clone();
                row.extend(std::iter::repeat(Rat::zero()).take(extra));
                lower.push(row);
                diag.push(Rat::zero());
                extra += 1;
            }
            break;
        }
        let d = pv.clone();
        perm.push(p);
        lower.push(l_cols[p].clone());
        diag.push(d.clone());
        remaining.retain(|&i| i != p);
        // Multipliers and Schur complement update.
        let mults: Vec<(usize, Rat)> = remaining
            .iter()
            .map(|&i| (i, &work[i][p] / &d))
            .collect();
        for &(i, ref li) in &mults {
            for &(j, ref lj) in &mults {
                if j > i {
                    continue;
                }
                let delta = li * lj * &d;
                let val = &work[i][j] - &delta;
                work[i][j] = val.clone();
                work[j][i] = val;
            }
        }
        for (i, li) in mults {
            l_cols[i].push(li);
        }
    }
    Ok(LdltWitness { perm, lower, diag })
}

impl LdltWitness {
    /// Exact re-verification: the factors reconstruct `a` under the stored
    /// permutation and every pivot is nonnegative. No floating arithmetic.
    pub fn verify(&self, a: &RatMatrix) -> bool {
        let n = a.len();
        if self.perm.len() != n || self.lower.len() != n || self.diag.len() != n {
            return false;
        }
        // perm must be a permutation.
        let mut seen = vec![false; n];
        for &p in &self.perm {
            if p >= n || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        if self.diag.iter().any(|d| d.is_negative()) {
            return false;
        }
        for i in 0..n {
            if self.lower[i].len() != i {
                return false;
            }
        }
        let l_entry = |i: usize, k: usize| -> Rat {
            use std::cmp::Ordering;
            match k.cmp(&i) {
                Ordering::Less => self.lower[i][k].clone(),
                Ordering::Equal => Rat::from_integer(1.into()),
                Ordering::Greater => Rat::zero(),
            }
        };
        for i in 0..n {
            for j in 0..=i {
                let mut acc = Rat::zero();
                for k in 0..=j.min(i) {
                    let term = l_entry(i, k) * l_entry(j, k) * &self.diag[k];
                    acc += term;
                }
                if acc != a[self.perm[i]][self.perm[j]] {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn mat(rows: &[&[i64]]) -> RatMatrix {
        rows.iter()
            .map(|r| r.iter().map(|&v| rat_int(v)).collect())
            .collect()
    }

    #[test]
    fn factors_positive_definite() {
        let a = mat(&[&[4, 2, 0], &[2, 3, 1], &[0, 1, 5]]);
        let w = ldlt_psd(&a).unwrap();
        assert!(w.verify(&a));
        assert!(w.diag.iter().all(|d| d > &rat_int(0)));
    }

    #[test]
    fn handles_semidefinite_rank_deficiency() {
        // all-ones 3x3: rank one PSD.
        let a = mat(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]);
        let w = ldlt_psd(&a).unwrap();
        assert!(w.verify(&a));
        assert_eq!(w.diag.iter().filter(|d| d.is_zero()).count(), 2);
    }

    #[test]
    fn rejects_indefinite() {
        let a = mat(&[&[1, 2], &[2, 1]]);
        assert!(ldlt_psd(&a).is_err());
        let b = mat(&[&[0, 1], &[1, 0]]);
        assert!(ldlt_psd(&b).is_err());
        let c = mat(&[&[-1]]);
        assert!(ldlt_psd(&c).is_err());
    }

    #[test]
    fn verify_rejects_tampered_witness() {
        let a = mat(&[&[4, 2], &[2, 3]]);
        let mut w = ldlt_psd(&a).unwrap();
        assert!(w.verify(&a));
        w.diag[0] += rat(1, 7);
        assert!(!w.verify(&a));
    }

    #[test]
    fn rational_entries_stay_exact() {
        let a = vec![
            vec![rat(1, 3), rat(1, 7)],
            vec![rat(1, 7), rat(2, 5)],
        ];
        let w = ldlt_psd(&a).unwrap();
        assert!(w.verify(&a));
    }
}
