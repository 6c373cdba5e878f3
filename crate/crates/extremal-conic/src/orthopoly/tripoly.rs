//! Trivariate polynomials and the matrix kernels for three-point bounds.
//!
//! `Y_k^n` is the matrix kernel parametrizing positive kernels on the
//! sphere invariant under the stabilizer of a pole: entry `(i, j)` is
//!
//! ```text
//! lambda_{i,j} P_i^{n+2k}(u) P_j^{n+2k}(v) Q_k^{n-1}(u, v, t)
//! ```
//!
//! with `Q_k^{n-1}(u,v,t) = ((1-u^2)(1-v^2))^{k/2} P_k^{n-1}((t-uv)/sqrt((1-u^2)(1-v^2)))`.
//! Because `P_k^{n-1}` has the parity of `k`, the half-integer powers cancel
//! and `Q_k^{n-1}` is a genuine polynomial with rational coefficients.
//!
//! `S_k^n` symmetrizes `Y_k^n` over all six permutations of `(u, v, t)`;
//! its entries are invariant under any permutation of the three variables
//! and the matrix is symmetric.

use super::{gegenbauer, harmonic_dim, surface_area, OrthopolyError, Polynomial};
use crate::rational::{rat_int, to_f64, Rat};
use num_traits::Zero;
use std::collections::BTreeMap;

/// A polynomial in three variables `u, v, t` with exact rational
/// coefficients, stored sparsely as exponent triple -> coefficient with no
/// zero coefficients retained.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TriPolynomial {
    terms: BTreeMap<(u32, u32, u32), Rat>,
}

impl TriPolynomial {
    pub fn zero() -> Self {
        TriPolynomial::default()
    }

    pub fn one() -> Self {
        TriPolynomial::constant(rat_int(1))
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = TriPolynomial::default();
        p.add_term((0, 0, 0), c);
        p
    }

    /// `c * u^a v^b t^e`.
    pub fn monomial(c: Rat, exps: (u32, u32, u32)) -> Self {
        let mut p = TriPolynomial::default();
        p.add_term(exps, c);
        p
    }

    /// Embed a univariate polynomial in variable `var` (0 = u, 1 = v, 2 = t).
    pub fn from_univariate(p: &Polynomial, var: usize) -> Self {
        let mut out = TriPolynomial::default();
        for (i, c) in p.coeffs().iter().enumerate() {
            let mut exps = (0u32, 0u32, 0u32);
            match var {
                0 => exps.0 = i as u32,
                1 => exps.1 = i as u32,
                _ => exps.2 = i as u32,
            }
            out.add_term(exps, c.clone());
        }
        out
    }

    fn add_term(&mut self, exps: (u32, u32, u32), c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32, u32), &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Maximum exponent of each variable.
    pub fn degrees(&self) -> (u32, u32, u32) {
        let mut d = (0, 0, 0);
        for (a, b, c) in self.terms.keys() {
            d.0 = d.0.max(*a);
            d.1 = d.1.max(*b);
            d.2 = d.2.max(*c);
        }
        d
    }

    pub fn add(&self, other: &TriPolynomial) -> TriPolynomial {
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &TriPolynomial) -> TriPolynomial {
        self.add(&other.scale(&rat_int(-1)))
    }

    pub fn scale(&self, c: &Rat) -> TriPolynomial {
        if c.is_zero() {
            return TriPolynomial::zero();
        }
        TriPolynomial {
            terms: self.terms.iter().map(|(e, a)| (*e, a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &TriPolynomial) -> TriPolynomial {
        let mut out = TriPolynomial::default();
        for (e1, c1) in self.terms.iter() {
            for (e2, c2) in other.terms.iter() {
                out.add_term((e1.0 + e2.0, e1.1 + e2.1, e1.2 + e2.2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> TriPolynomial {
        let mut out = TriPolynomial::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Apply a permutation of the variables: `perm[i]` is the variable that
    /// argument slot `i` becomes, so the monomial `u^a v^b t^e` maps to the
    /// monomial with exponent `a` on variable `perm[0]`, etc.
    pub fn permute(&self, perm: [usize; 3]) -> TriPolynomial {
        let mut out = TriPolynomial::default();
        for (e, c) in self.terms.iter() {
            let old = [e.0, e.1, e.2];
            let mut new = [0u32; 3];
            for i in 0..3 {
                new[perm[i]] += old[i];
            }
            out.add_term((new[0], new[1], new[2]), c.clone());
        }
        out
    }

    /// Exact substitution `(u, v, t) <- (x, x, 1)`, producing a univariate
    /// polynomial in `x`.
    pub fn substitute_diagonal(&self) -> Polynomial {
        let mut coeffs: Vec<Rat> = Vec::new();
        for (e, c) in self.terms.iter() {
            let deg = (e.0 + e.1) as usize;
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, rat_int(0));
            }
            coeffs[deg] += c;
        }
        Polynomial::new(coeffs)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, u: &Rat, v: &Rat, t: &Rat) -> Rat {
        // Powers are cached; exponents stay small.
        let dmax = self.degrees();
        let pu = rat_powers(u, dmax.0);
        let pv = rat_powers(v, dmax.1);
        let pt = rat_powers(t, dmax.2);
        let mut acc = rat_int(0);
        for (e, c) in self.terms.iter() {
            acc += c * &pu[e.0 as usize] * &pv[e.1 as usize] * &pt[e.2 as usize];
        }
        acc
    }

    /// Floating evaluation.
    pub fn eval_f64(&self, u: f64, v: f64, t: f64) -> f64 {
        let dmax = self.degrees();
        let pu = f64_powers(u, dmax.0);
        let pv = f64_powers(v, dmax.1);
        let pt = f64_powers(t, dmax.2);
        let mut acc = 0.0;
        for (e, c) in self.terms.iter() {
            acc += to_f64(c) * pu[e.0 as usize] * pv[e.1 as usize] * pt[e.2 as usize];
        }
        acc
    }

    /// Partial derivative with respect to variable `var` (0 = u, 1 = v, 2 = t).
    pub fn derivative(&self, var: usize) -> TriPolynomial {
        let mut out = TriPolynomial::default();
        for (e, c) in self.terms.iter() {
            let exp = [e.0, e.1, e.2][var];
            if exp == 0 {
                continue;
            }
            let mut ne = [e.0, e.1, e.2];
            ne[var] -= 1;
            out.add_term((ne[0], ne[1], ne[2]), c * rat_int(exp as i64));
        }
        out
    }
}

fn rat_powers(x: &Rat, max: u32) -> Vec<Rat> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(rat_int(1));
    for i in 0..max as usize {
        let next = &v[i] * x;
        v.push(next);
    }
    v
}

fn f64_powers(x: f64, max: u32) -> Vec<f64> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(1.0);
    for i in 0..max as usize {
        v.push(v[i] * x);
    }
    v
}

/// A square matrix of trivariate polynomials, optionally carrying a
/// floating normalization factor per entry on top of the exact data.
#[derive(Clone, Debug)]
pub struct PolyMatrix {
    size: usize,
    entries: Vec<TriPolynomial>,
    scale: Option<Vec<f64>>,
}

impl PolyMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &TriPolynomial {
        &self.entries[i * self.size + j]
    }

    /// The floating normalization factor for entry `(i, j)` (1 if none).
    pub fn scale_factor(&self, i: usize, j: usize) -> f64 {
        self.scale
            .as_ref()
            .map_or(1.0, |s| s[i * self.size + j])
    }

    /// Floating evaluation of the full matrix, normalization included.
    pub fn eval_f64(&self, u: f64, v: f64, t: f64) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                m[(i, j)] = self.scale_factor(i, j) * self.entry(i, j).eval_f64(u, v, t);
            }
        }
        m
    }
}

/// The kernel factor `Q_k^{n-1}(u, v, t)`, a genuine polynomial despite the
/// half-integer powers in its defining expression. `Q_0 = 1`.
pub fn q_poly(n: u32, k: u32) -> Result<TriPolynomial, OrthopolyError> {
    if n < 3 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 3 });
    }
    let p = gegenbauer(n - 1, k)?;
    // (t - uv)^j * ((1-u^2)(1-v^2))^{(k-j)/2}, summed over coefficients j of
    // P_k^{n-1}; parity of the polynomial makes every exponent integral.
    let lin = TriPolynomial::monomial(rat_int(1), (0, 0, 1)).add(&TriPolynomial::monomial(
        rat_int(-1),
        (1, 1, 0),
    ));
    let one_m_u2 = TriPolynomial::one().sub(&TriPolynomial::monomial(rat_int(1), (2, 0, 0)));
    let one_m_v2 = TriPolynomial::one().sub(&TriPolynomial::monomial(rat_int(1), (0, 2, 0)));
    let quad = one_m_u2.mul(&one_m_v2);
    let mut out = TriPolynomial::zero();
    for (j, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        debug_assert!((k as usize - j) % 2 == 0);
        let term = lin.pow(j as u32).mul(&quad.pow((k - j as u32) / 2));
        out = out.add(&term.scale(c));
    }
    Ok(out)
}

fn lambda_factor(n: u32, k: u32, i: u32, j: u32) -> f64 {
    let hi = harmonic_dim(n + 2 * k, i).unwrap() as f64;
    let hj = harmonic_dim(n + 2 * k, j).unwrap() as f64;
    (surface_area(n) / surface_area(n - 1))
        * (surface_area(n + 2 * k - 1) / surface_area(n + 2 * k))
        * (hi * hj).sqrt()
}

/// The matrix kernel `Y_k^n` truncated at degree `d`: size
/// `(d - k + 1) x (d - k + 1)`, entry `(i, j)` the exact polynomial
/// `P_i^{n+2k}(u) P_j^{n+2k}(v) Q_k^{n-1}(u,v,t)` with floating
/// normalization `lambda_{i,j}` carried separately.
pub fn y_matrix(n: u32, k: u32, d: u32) -> Result<PolyMatrix, OrthopolyError> {
    if n < 3 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 3 });
    }
    if k > d {
        return Err(OrthopolyError::IndexExceedsDegree { k, d });
    }
    let size = (d - k + 1) as usize;
    let q = q_poly(n, k)?;
    let gegen: Vec<Polynomial> = (0..size)
        .map(|i| gegenbauer(n + 2 * k, i as u32))
        .collect::<Result<_, _>>()?;
    let in_u: Vec<TriPolynomial> = gegen
        .iter()
        .map(|p| TriPolynomial::from_univariate(p, 0))
        .collect();
    let in_v: Vec<TriPolynomial> = gegen
        .iter()
        .map(|p| TriPolynomial::from_univariate(p, 1))
        .collect();
    let mut entries = Vec::with_capacity(size * size);
    let mut scale = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            entries.push(in_u[i].mul(&in_v[j]).mul(&q));
            scale.push(lambda_factor(n, k, i as u32, j as u32));
        }
    }
    Ok(PolyMatrix {
        size,
        entries,
        scale: Some(scale),
    })
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// `S_k^n`: the sum of `Y_k^n` over all six permutations of `(u, v, t)`.
/// Entries are invariant under any permutation of the variables and the
/// matrix is symmetric; the floating normalization is inherited from
/// `Y_k^n`.
pub fn s_matrix(n: u32, k: u32, d: u32) -> Result<PolyMatrix, OrthopolyError> {
    let y = y_matrix(n, k, d)?;
    let size = y.size;
    let mut entries = Vec::with_capacity(size * size);
    for idx in 0..size * size {
        let mut sum = TriPolynomial::zero();
        for perm in PERMS {
            sum = sum.add(&y.entries[idx].permute(perm));
        }
        entries.push(sum);
    }
    Ok(PolyMatrix {
        size,
        entries,
        scale: y.scale,
    })
}

/// The symmetrized kernel with unit normalization, averaged over the six
/// permutations so that the matrix evaluated at the coincident triple
/// `(1, 1, 1)` is the all-ones matrix. All entries are exact rationals;
/// this is the variant the bound programs and the certification path use.
pub fn s_matrix_avg_unit(n: u32, k: u32, d: u32) -> Result<PolyMatrix, OrthopolyError> {
    if n < 3 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 3 });
    }
    if k > d {
        return Err(OrthopolyError::IndexExceedsDegree { k, d });
    }
    let size = (d - k + 1) as usize;
    let q = q_poly(n, k)?;
    let gegen: Vec<Polynomial> = (0..size)
        .map(|i| gegenbauer(n + 2 * k, i as u32))
        .collect::<Result<_, _>>()?;
    let sixth = Rat::new(1.into(), 6.into());
    let mut entries = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let raw = TriPolynomial::from_univariate(&gegen[i], 0)
                .mul(&TriPolynomial::from_univariate(&gegen[j], 1))
                .mul(&q);
            let mut sum = TriPolynomial::zero();
            for perm in PERMS {
                sum = sum.add(&raw.permute(perm));
            }
            entries.push(sum.scale(&sixth));
        }
    }
    Ok(PolyMatrix {
        size,
        entries,
        scale: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn q0_is_one_and_q1_is_t_minus_uv() {
        for n in 3..8 {
            assert_eq!(q_poly(n, 0).unwrap(), TriPolynomial::one());
            let q1 = q_poly(n, 1).unwrap();
            let expected = TriPolynomial::monomial(rat_int(1), (0, 0, 1))
                .add(&TriPolynomial::monomial(rat_int(-1), (1, 1, 0)));
            assert_eq!(q1, expected);
        }
        assert!(q_poly(2, 1).is_err());
    }

    #[test]
    fn q_at_pole_recovers_gegenbauer() {
        // Q_k^{n-1}(0, 0, t) = P_k^{n-1}(t); at (0, 0, 1) this is 1.
        let q = q_poly(4, 2).unwrap();
        assert_eq!(q.eval(&rat_int(0), &rat_int(0), &rat_int(1)), rat_int(1));
        let p = gegenbauer(3, 2).unwrap();
        for tv in [rat(1, 3), rat(-2, 5), rat_int(0)] {
            assert_eq!(q.eval(&rat_int(0), &rat_int(0), &tv), p.eval(&tv));
        }
    }

    #[test]
    fn q_matches_symbolic_reconstruction_at_random_points() {
        // Reconstruct ((1-u^2)(1-v^2))^{k/2} P_k^{n-1}((t-uv)/sqrt(...))
        // with floating square roots on rational points and compare.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for n in [3u32, 4, 5] {
            for k in [1u32, 2, 3, 4] {
                let q = q_poly(n, k).unwrap();
                let p = gegenbauer(n - 1, k).unwrap();
                for _ in 0..50 {
                    let u = 0.9 * next();
                    let v = 0.9 * next();
                    let t = 0.9 * next();
                    let w = ((1.0 - u * u) * (1.0 - v * v)).sqrt();
                    let expected = w.powi(k as i32) * p.eval_f64((t - u * v) / w);
                    let got = q.eval_f64(u, v, t);
                    assert!(
                        (expected - got).abs() < 1e-10,
                        "n={n} k={k} u={u} v={v} t={t}: {expected} vs {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn y_matrix_shapes_and_pole_values() {
        // k = d gives a 1x1 matrix.
        let y = y_matrix(4, 3, 3).unwrap();
        assert_eq!(y.size(), 1);
        // (4, 0, 2) entry (0,0) is the constant lambda_{0,0}.
        let y = y_matrix(4, 0, 2).unwrap();
        assert_eq!(y.entry(0, 0), &TriPolynomial::one());
        let expected = lambda_factor(4, 0, 0, 0);
        assert!((y.eval_f64(0.3, -0.2, 0.1)[(0, 0)] - expected).abs() < 1e-12);
        assert!(y_matrix(4, 3, 2).is_err());
    }

    #[test]
    fn y_entry_matches_componentwise_product() {
        let y = y_matrix(3, 1, 3).unwrap();
        let p1 = gegenbauer(5, 1).unwrap();
        let q1 = q_poly(3, 1).unwrap();
        let lam = lambda_factor(3, 1, 1, 0);
        for (u, v, t) in [(0.2, -0.4, 0.3), (-0.9, 0.1, 0.5), (0.0, 0.0, 1.0)] {
            let byhand = lam * p1.eval_f64(u) * q1.eval_f64(u, v, t);
            let got = y.eval_f64(u, v, t)[(1, 0)];
            assert!((byhand - got).abs() < 1e-12, "{byhand} vs {got}");
        }
    }

    #[test]
    fn s_matrix_symmetry_properties() {
        for (n, k, d) in [(3u32, 0u32, 2u32), (3, 1, 3), (4, 2, 4)] {
            let s = s_matrix(n, k, d).unwrap();
            let (u, v, t) = (0.31, -0.47, 0.11);
            let m_uvt = s.eval_f64(u, v, t);
            // Swapping arguments leaves the evaluated matrix unchanged
            // entrywise (hence trivially equal to its own transpose pattern).
            let m_vut = s.eval_f64(v, u, t);
            let m_tvu = s.eval_f64(t, v, u);
            assert!((&m_uvt - &m_vut).norm() < 1e-12);
            assert!((&m_uvt - &m_tvu).norm() < 1e-12);
            // The matrix itself is symmetric.
            assert!((&m_uvt - &m_uvt.transpose()).norm() < 1e-12);
            // At a fixed point of the permutation action every entry equals
            // the same evaluation; check symmetry again there.
            let fixed = s.eval_f64(0.25, 0.25, 0.25);
            assert!((&fixed - &fixed.transpose()).norm() < 1e-12);
        }
    }

    #[test]
    fn s_matrix_equals_direct_permutation_loop() {
        // Independent oracle: sum Y over explicit permutations of the
        // evaluation point rather than of the polynomial.
        let n = 3;
        let (k, d) = (0, 2);
        let y = y_matrix(n, k, d).unwrap();
        let s = s_matrix(n, k, d).unwrap();
        let pt = [0.5, 0.5, 0.5];
        let mut direct = nalgebra::DMatrix::zeros(y.size(), y.size());
        for perm in PERMS {
            // Y evaluated at the permuted point.
            direct += y.eval_f64(pt[perm[0]], pt[perm[1]], pt[perm[2]]);
        }
        let got = s.eval_f64(pt[0], pt[1], pt[2]);
        assert!((&direct - &got).norm() < 1e-12);
    }

    #[test]
    fn avg_unit_is_all_ones_at_coincident_triple() {
        for (n, k, d) in [(3u32, 0u32, 3u32), (3, 1, 3), (4, 0, 2), (4, 2, 5)] {
            let s = s_matrix_avg_unit(n, k, d).unwrap();
            let m = s.eval_f64(1.0, 1.0, 1.0);
            for i in 0..s.size() {
                for j in 0..s.size() {
                    let expected = if k == 0 { 1.0 } else { 0.0 };
                    assert!(
                        (m[(i, j)] - expected).abs() < 1e-12,
                        "n={n} k={k} entry ({i},{j}) = {}",
                        m[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn s_matrix_permutation_invariance_exact_on_coefficients() {
        let s = s_matrix(3, 1, 4).unwrap();
        for idx in 0..s.size() * s.size() {
            for perm in PERMS {
                assert_eq!(s.entries[idx].permute(perm), s.entries[idx]);
            }
        }
    }
}
