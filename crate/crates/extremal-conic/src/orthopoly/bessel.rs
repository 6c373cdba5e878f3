//! The radial profile of positive-type functions on Euclidean space.
//!
//! `Omega_n(t) = Gamma(n/2) (2/t)^{(n-2)/2} J_{(n-2)/2}(t)`, normalized so
//! `Omega_n(0) = 1`; it is the spherical average of a plane wave of
//! frequency `t` and, for `n = 2`, the Bessel function `J_0`. Rotation
//! invariant positive-type functions are exactly the nonnegative mixtures
//! of these profiles, which reduces the one-avoiding bound on the plane to
//! a two-constraint moment problem over the radial measure.

use super::OrthopolyError;

/// Evaluate `Omega_n(t)` for `n >= 2`, `t >= 0`.
///
/// Ascending series below the switch radius, order-recurrence evaluation
/// above it; both paths agree to well below `1e-12` on the overlap and the
/// result is accurate to about `1e-12` on `[0, 100]` for desk-scale `n`.
pub fn bessel_omega(n: u32, t: f64) -> Result<f64, OrthopolyError> {
    if n < 2 {
        return Err(OrthopolyError::DimensionTooSmall { n, min: 2 });
    }
    if t < 0.0 {
        return Err(OrthopolyError::NegativeRadius { t });
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t <= SERIES_SWITCH {
        Ok(omega_series(n, t))
    } else if n % 2 == 1 {
        Ok(omega_spherical(n, t))
    } else {
        Ok(omega_integer_order(n, t))
    }
}

/// Series/recurrence switch point. The alternating series keeps its largest
/// term near `exp(t)/sqrt(t)`-scale growth in check only for small `t`; at
/// `t = 9` the cancellation still leaves ~1e-13 absolute accuracy, while the
/// downward recurrence is already fully stable there.
const SERIES_SWITCH: f64 = 9.0;

/// Ascending series: `Omega_n(t) = sum_m (-t^2/4)^m / (m! (n/2)_m)`,
/// where `(n/2)_m` is the rising factorial. Valid for all `t`, used for
/// small `t` where no cancellation occurs.
fn omega_series(n: u32, t: f64) -> f64 {
    let x = -t * t / 4.0;
    let half_n = n as f64 / 2.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for m in 1..200 {
        term *= x / (m as f64 * (half_n + m as f64 - 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// Even `n`: integer order `nu = (n-2)/2`. Downward (Miller) recurrence on
/// `J_k`, normalized by `J_0 + 2 J_2 + 2 J_4 + ... = 1`, then scaled to
/// `Omega_n`.
fn omega_integer_order(n: u32, t: f64) -> f64 {
    let nu = (n as usize - 2) / 2;
    // Start well above both the order and the turning point.
    let start = (t as usize).max(nu) + 15 + (10.0 * t.cbrt()) as usize;
    let start = if start % 2 == 0 { start } else { start + 1 };
    let mut f_next = 0.0f64;
    let mut f = 1e-300f64;
    let mut norm = 0.0f64;
    let mut j_nu = 0.0f64;
    for k in (1..=start).rev() {
        let f_prev = (2.0 * k as f64 / t) * f - f_next;
        f_next = f;
        f = f_prev;
        if k - 1 == nu {
            j_nu = f;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * f;
        }
        // Rescale before overflow; relative structure is all that matters.
        if f.abs() > 1e250 {
            f /= 1e250;
            f_next /= 1e250;
            norm /= 1e250;
            j_nu /= 1e250;
        }
    }
    norm += f; // J_0 term
    let j = j_nu / norm;
    // Omega = Gamma(n/2) (2/t)^nu J_nu with Gamma(n/2) = (nu)! here.
    let mut scale = 1.0f64;
    for m in 1..=nu {
        scale *= m as f64 * 2.0 / t;
    }
    scale * j
}

/// Odd `n`: half-integer order. `J_{l+1/2}(t) = sqrt(2t/pi) j_l(t)` with
/// `l = (n-3)/2`; the spherical functions come from a downward recurrence
/// anchored on the closed forms `j_0 = sin t / t`, `j_1 = sin t / t^2 - cos t / t`.
fn omega_spherical(n: u32, t: f64) -> f64 {
    let l = (n as usize - 3) / 2;
    let j_l = spherical_j(l, t);
    // Omega_n(t) = (2l+1)!! j_l(t) / t^l.
    let mut scale = 1.0f64;
    for m in 0..l {
        scale *= (2 * m + 3) as f64 / t;
    }
    scale * j_l
}

fn spherical_j(l: usize, t: f64) -> f64 {
    let j0 = t.sin() / t;
    if l == 0 {
        return j0;
    }
    let j1 = t.sin() / (t * t) - t.cos() / t;
    if l == 1 {
        return j1;
    }
    if t > l as f64 {
        // Upward recurrence is stable above the turning point.
        let mut prev = j0;
        let mut cur = j1;
        for k in 1..l {
            let next = (2.0 * k as f64 + 1.0) / t * cur - prev;
            prev = cur;
            cur = next;
        }
        cur
    } else {
        // Downward recurrence, anchored on whichever of j_0, j_1 is larger.
        let start = l + 15 + (10.0 * t.cbrt()) as usize;
        let mut f_next = 0.0f64;
        let mut f = 1e-300f64;
        let mut f_l = 0.0f64;
        let mut f0 = 0.0f64;
        let mut f1 = 0.0f64;
        for k in (0..=start).rev() {
            let f_prev = (2.0 * k as f64 + 3.0) / t * f - f_next;
            f_next = f;
            f = f_prev;
            if k == l {
                f_l = f;
            }
            if k == 1 {
                f1 = f;
            }
            if k == 0 {
                f0 = f;
            }
            if f.abs() > 1e250 {
                f /= 1e250;
                f_next /= 1e250;
                f_l /= 1e250;
                f0 /= 1e250;
                f1 /= 1e250;
            }
        }
        if f0.abs() >= f1.abs() {
            f_l * j0 / f0
        } else {
            f_l * j1 / f1
        }
    }
}
