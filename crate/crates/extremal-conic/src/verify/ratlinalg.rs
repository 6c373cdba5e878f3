//! Exact linear algebra over the rationals: elimination, null spaces, and
//! affine least-squares projection.

use crate::rational::Rat;
use num_traits::Zero;

/// Row-reduce a copy of `a` (optionally augmented with `rhs`), returning
/// reduced rows, the pivot column of each row, and the transformed rhs.
fn row_reduce(a: &[Vec<Rat>], rhs: Option<&[Rat]>) -> (Vec<Vec<Rat>>, Vec<usize>, Vec<Rat>) {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut rows: Vec<Vec<Rat>> = a.to_vec();
    let mut b: Vec<Rat> = rhs.map(|r| r.to_vec()).unwrap_or_else(|| vec![Rat::zero(); m]);
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..n {
        // First row with a nonzero entry in this column.
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        b.swap(r, p);
        let inv = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x /= &inv;
        }
        b[r] /= &inv;
        for i in 0..m {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for k in 0..n {
                let delta = &f * &rows[r][k];
                rows[i][k] -= delta;
            }
            let delta = &f * &b[r];
            b[i] -= delta;
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    rows.truncate(r);
    let consistent_len = r;
    // Inconsistency is signaled by nonzero rhs beyond the rank; keep the
    // full b so callers can check.
    let _ = consistent_len;
    (rows, pivots, b)
}

/// Exact solution of `A x = b` when consistent; `None` otherwise. With
/// multiple solutions, free variables are set to zero.
pub fn solve_exact(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let (rows, pivots, rhs) = row_reduce(a, Some(b));
    let rank = rows.len();
    for bi in rhs.iter().skip(rank) {
        if !bi.is_zero() {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        // After full reduction the pivot rows read off directly, minus the
        // free-variable contributions (free vars are zero here).
        x[c] = rhs[i].clone();
    }
    // Validate (free variables may interact when the reduction is partial).
    for (row, bi) in a.iter().zip(b) {
        let mut acc = Rat::zero();
        for (aij, xj) in row.iter().zip(&x) {
            if !aij.is_zero() && !xj.is_zero() {
                acc += aij * xj;
            }
        }
        if &acc != bi {
            return None;
        }
    }
    Some(x)
}

/// A basis of the null space of `a` (as column vectors).
pub fn nullspace(a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let (rows, pivots, _) = row_reduce(a, None);
    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Rat::zero(); n];
        v[free] = Rat::from_integer(1.into());
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[i][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Rank of a rational matrix.
pub fn rank(a: &[Vec<Rat>]) -> usize {
    row_reduce(a, None).1.len()
}

/// Independent rows of `a` (indices), in order: each new row is reduced
/// against the rows kept so far and kept iff a nonzero remains.
pub fn independent_rows(a: &[Vec<Rat>]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut reduced: Vec<(usize, Vec<Rat>)> = Vec::new();
    for (i, arow) in a.iter().enumerate() {
        let mut row = arow.clone();
        for (pc, rrow) in &reduced {
            if !row[*pc].is_zero() {
                let f = row[*pc].clone();
                for (rk, rr) in row.iter_mut().zip(rrow) {
                    if !rr.is_zero() {
                        *rk -= &f * rr;
                    }
                }
            }
        }
        if let Some(pc) = row.iter().position(|v| !v.is_zero()) {
            let inv = row[pc].clone();
            for v in row.iter_mut() {
                *v /= &inv;
            }
            reduced.push((pc, row));
            kept.push(i);
        }
    }
    kept
}

/// Exact Euclidean projection of `x0` onto the affine set `{x : B x = d}`:
/// `x = x0 + B^T w` where `(B B^T) w = d - B x0`. Requires `B` to have
/// independent rows (reduce first with [`independent_rows`]); returns
/// `None` when the system is inconsistent.
pub fn project_affine(b_mat: &[Vec<Rat>], d: &[Rat], x0: &[Rat]) -> Option<Vec<Rat>> {
    let m = b_mat.len();
    let n = x0.len();
    if m == 0 {
        return Some(x0.to_vec());
    }
    // Residual d - B x0.
    let mut resid = Vec::with_capacity(m);
    for (row, di) in b_mat.iter().zip(d) {
        let mut acc = Rat::zero();
        for (aij, xj) in row.iter().zip(x0) {
            if !aij.is_zero() {
                acc += aij * xj;
            }
        }
        resid.push(di - &acc);
    }
    // Gram matrix B B^T.
    let mut gram = vec![vec![Rat::zero(); m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut acc = Rat::zero();
            for k in 0..n {
                if !b_mat[i][k].is_zero() && !b_mat[j][k].is_zero() {
                    acc += &b_mat[i][k] * &b_mat[j][k];
                }
            }
            gram[i][j] = acc.clone();
            gram[j][i] = acc;
        }
    }
    let w = solve_exact(&gram, &resid)?;
    let mut x = x0.to_vec();
    for (i, wi) in w.iter().enumerate() {
        if wi.is_zero() {
            continue;
        }
        for k in 0..n {
            if !b_mat[i][k].is_zero() {
                let delta = wi * &b_mat[i][k];
                x[k] += delta;
            }
        }
    }
    Some(x)
}
