//! Orthogonal polynomials and harmonic analysis on the unit sphere.
//!
//! The building blocks for all spherical bounds in this crate:
//!
//! - [`gegenbauer`]: the degree-`k` polynomial `P_k^n` orthogonal on
//!   `[-1, 1]` under the weight `(1 - t^2)^{(n-3)/2}` and normalized by
//!   `P_k^n(1) = 1`. Positive combinations `sum f_k P_k^n(x . y)` are exactly
//!   the rotation-invariant positive-definite kernels on the sphere
//!   `S^{n-1}`, which is what makes these polynomials the right coordinate
//!   system for two-point bounds.
//! - [`q_poly`], [`y_matrix`], [`s_matrix`]: the trivariate kernels used by
//!   three-point bounds, where only the subgroup fixing a pole acts.
//! - [`harmonic_dim`], [`surface_area`]: dimensions of spaces of spherical
//!   harmonics and sphere surface areas, used in normalization constants.
//! - [`bessel_omega`]: the radial profile of positive-type functions on
//!   Euclidean space, used by the one-avoiding plane bound.
//!
//! All polynomial data is exact rational; floating point enters only in
//! normalization constants that multiply exact polynomials and in
//! evaluation for the numerical solver.

mod bessel;
mod poly;
mod tripoly;

pub use bessel::bessel_omega;
pub use poly::Polynomial;
pub use tripoly::{q_poly, s_matrix, s_matrix_avg_unit, y_matrix, PolyMatrix, TriPolynomial};

use crate::rational::{rat_int, Rat};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OrthopolyError {
    #[error("dimension n = {n} is too small (need n >= {min})")]
    DimensionTooSmall { n: u32, min: u32 },
    #[error("matrix index k = {k} exceeds truncation degree d = {d}")]
    IndexExceedsDegree { k: u32, d: u32 },
    #[error("negative radius t = {t}")]
    NegativeRadius { t: f64 },
}

/// The Gegenbauer polynomial `P_k^n`, normalized by `P_k^n(1) = 1`:
/// the unique degree-`k` polynomial orthogonal to all lower degrees under
/// the weight `(1 - t^2)^{(n-3)/2}` on `[-1, 1]` with that normalization.
///
/// Built by the three-term recurrence
/// `(k + n - 3) P_k = (2k + n - 4) t P_{k-1} - (k - 1) P_{k-2}`
/// (Chebyshev recurrence when `n = 2`); the defining orthogonality
/// relation is checked against exact moment integrals in the test suite
/// rather than used as the constructor.
pub fn gegenbauer(n: u32, k: u32) -> Result<Polynomial, OrthopolyError> {
    if n < 2 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 2 });
    }
    let mut p_prev = Polynomial::one();
    if k == 0 {
        return Ok(p_prev);
    }
    let t = Polynomial::monomial(rat_int(1), 1);
    let mut p = t.clone();
    for j in 2..=k {
        let next = if n == 2 {
            // T_j = 2 t T_{j-1} - T_{j-2}
            t.mul(&p).scale(&rat_int(2)).sub(&p_prev)
        } else {
            let a = rat_int(2 * j as i64 + n as i64 - 4);
            let b = rat_int(j as i64 - 1);
            let den = rat_int(j as i64 + n as i64 - 3);
            t.mul(&p)
                .scale(&(a / &den))
                .sub(&p_prev.scale(&(b / &den)))
        };
        p_prev = std::mem::replace(&mut p, next);
    }
    Ok(p)
}

/// Dimension `h_k^n` of the space of homogeneous harmonic polynomials of
/// degree `k` in `n` variables: the number of degree-`k` monomials minus
/// the number of degree-`(k-2)` monomials.
pub fn harmonic_dim(n: u32, k: u32) -> Result<u128, OrthopolyError> {
    if n < 2 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 2 });
    }
    fn homogeneous(n: u32, k: u32) -> u128 {
        // C(n + k - 1, k)
        let mut num: u128 = 1;
        let mut den: u128 = 1;
        for i in 0..k as u128 {
            num *= n as u128 + i;
            den *= i + 1;
        }
        num / den
    }
    let lower = if k >= 2 { homogeneous(n, k - 2) } else { 0 };
    Ok(homogeneous(n, k) - lower)
}

/// Surface area of the unit sphere `S^{n-1}`: `2 pi^{n/2} / Gamma(n/2)`.
pub fn surface_area(n: u32) -> f64 {
    assert!(n >= 1);
    use std::f64::consts::PI;
    // Gamma(n/2) accumulated by the functional equation; n stays desk-scale
    // so there is no overflow concern here.
    let mut gamma = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x + 0.5 < n as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

/// Exact value of `P_k^n(0)`, used by the orthogonality-avoiding bound.
pub fn gegenbauer_at_zero(n: u32, k: u32) -> Result<Rat, OrthopolyError> {
    Ok(gegenbauer(n, k)?.eval(&rat_int(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn degree_zero_and_one() {
        for n in 2..10 {
            assert_eq!(gegenbauer(n, 0).unwrap(), Polynomial::one());
            let p1 = gegenbauer(n, 1).unwrap();
            assert_eq!(p1.degree(), 1);
            assert_eq!(p1.eval(&rat_int(1)), rat_int(1));
        }
        assert_eq!(
            gegenbauer(1, 3).unwrap_err(),
            OrthopolyError::DimensionTooSmall { n: 1, min: 2 }
        );
    }

    #[test]
    fn legendre_p2() {
        // Gram-Schmidt on {1, t, t^2} with the flat weight (n = 3) gives
        // (3t^2 - 1)/2 after normalizing at t = 1.
        let p = gegenbauer(3, 2).unwrap();
        assert_eq!(p.coeff(0), rat(-1, 2));
        assert_eq!(p.coeff(1), rat_int(0));
        assert_eq!(p.coeff(2), rat(3, 2));
    }

    #[test]
    fn p2_closed_form_matches_moment_argument() {
        // E[t^2] = 1/n under the sphere weight forces
        // P_2^n = (n t^2 - 1)/(n - 1).
        for n in 3..=8u32 {
            let p = gegenbauer(n, 2).unwrap();
            let nn = rat_int(n as i64);
            let den = rat_int(n as i64 - 1);
            assert_eq!(p.coeff(2), nn / &den);
            assert_eq!(p.coeff(0), rat_int(-1) / den);
        }
    }

    #[test]
    fn normalization_at_one_is_exact() {
        for n in 2..=9 {
            for k in 0..=16 {
                let p = gegenbauer(n, k).unwrap();
                assert_eq!(p.eval(&rat_int(1)), rat_int(1), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn parity() {
        for n in 2..=6 {
            for k in 0..=10 {
                let p = gegenbauer(n, k).unwrap();
                let reflected = p.reflect();
                let expected = if k % 2 == 0 {
                    p
                } else {
                    p.scale(&rat_int(-1))
                };
                assert_eq!(reflected, expected);
            }
        }
    }

    /// Exact moment of the sphere weight: integral over [-1, 1] of
    /// t^m (1 - t^2)^{(n-3)/2} dt, represented as a + b*pi with a, b
    /// rational. Odd n gives a polynomial weight (b = 0); even n gives a
    /// rational multiple of pi for even m. Either way the representation
    /// is exact, and orthogonality of two polynomials under the weight is
    /// equivalent to both components vanishing.
    fn weight_moment(n: u32, m: u32) -> (Rat, Rat) {
        if m % 2 == 1 {
            return (rat_int(0), rat_int(0));
        }
        // I(m, e) = int t^m (1-t^2)^{e/2} with e = n - 3.
        // Recurrence in m: I(m, e) = (m-1)/(m+e+2) * I(m-2, e).
        // Base: I(0, e) = int (1-t^2)^{e/2}:
        //   e odd (n even): Wallis product ending at pi/2;
        //   e even (n odd): polynomial, integrates to a rational.
        let e = n as i64 - 3;
        let mut base_rat;
        let mut base_pi = rat_int(0);
        if (n as i64 - 3) % 2 == 0 {
            // (1-t^2)^{e/2} expanded binomially; integrate term by term.
            let half_e = e / 2;
            let mut acc = rat_int(0);
            let mut binom = rat_int(1);
            for j in 0..=half_e {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                acc += binom.clone() * rat(2 * sign, 2 * j + 1);
                binom = binom * rat(half_e - j, j + 1);
            }
            base_rat = acc;
        } else {
            // int_{-1}^{1} (1-t^2)^{(2s+1)/2} dt = pi * C(2s+2, s+1) / 4^{s+1}
            // with s = (e-1)/2, by the Wallis formula.
            let s = (e - 1) / 2;
            let mut c = rat_int(1);
            for j in 0..(s + 1) {
                c = c * rat(s + 2 + j, j + 1);
            }
            let mut pow4 = rat_int(1);
            for _ in 0..(s + 1) {
                pow4 = pow4 * rat_int(4);
            }
            base_pi = c / pow4;
            base_rat = rat_int(0);
        }
        let mut m_cur = 0i64;
        while m_cur < m as i64 {
            // I(m+2, e) / I(m, e) = (m+1)/(m+e+3), from the Beta integral.
            let factor = rat(m_cur + 1, m_cur + e + 3);
            base_rat = base_rat * factor.clone();
            base_pi = base_pi * factor;
            m_cur += 2;
        }
        (base_rat, base_pi)
    }

    #[test]
    fn orthogonality_via_exact_moments() {
        for n in 2..=8u32 {
            let polys: Vec<Polynomial> =
                (0..=8).map(|k| gegenbauer(n, k).unwrap()).collect();
            for k in 0..polys.len() {
                for l in 0..k {
                    let prod = polys[k].mul(&polys[l]);
                    let mut rat_part = rat_int(0);
                    let mut pi_part = rat_int(0);
                    for (m, c) in prod.coeffs().iter().enumerate() {
                        let (a, b) = weight_moment(n, m as u32);
                        rat_part += c * a;
                        pi_part += c * b;
                    }
                    assert_eq!(rat_part, rat_int(0), "n={n} k={k} l={l}");
                    assert_eq!(pi_part, rat_int(0), "n={n} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn harmonic_dims() {
        assert_eq!(harmonic_dim(5, 0).unwrap(), 1);
        for n in 2..12 {
            assert_eq!(harmonic_dim(n, 0).unwrap(), 1);
            assert_eq!(harmonic_dim(n, 1).unwrap(), n as u128);
        }
        for k in 0..12 {
            assert_eq!(harmonic_dim(3, k).unwrap(), 2 * k as u128 + 1);
        }
        assert_eq!(harmonic_dim(4, 2).unwrap(), 9);
    }

    #[test]
    fn surface_areas() {
        let pi = std::f64::consts::PI;
        assert!((surface_area(2) - 2.0 * pi).abs() < 1e-12);
        assert!((surface_area(3) - 4.0 * pi).abs() < 1e-12);
        assert!((surface_area(4) - 2.0 * pi * pi).abs() < 1e-12);
        // Closed form for S^4: 8 pi^2 / 3.
        assert!((surface_area(5) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
    }
}
