//! Dense univariate polynomials over the rationals.

use crate::rational::Rat;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// A univariate polynomial with exact rational coefficients, stored densely
/// with `coeffs[i]` the coefficient of `t^i` and trailing zeros trimmed.
///
/// The zero polynomial has `degree() == -1` by convention.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Rat>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Polynomial::new(vec![c])
    }

    /// The monomial `c * t^k`.
    pub fn monomial(c: Rat, k: usize) -> Self {
        if c.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![Rat::zero(); k + 1];
        coeffs[k] = c;
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Coefficient of `t^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn leading_coeff(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    /// Exact evaluation by Horner's scheme.
    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Floating evaluation by Horner's scheme.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + crate::rational::to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rat::from_integer(i.into()))
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, c: &Rat) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }

    /// `p(-t)`.
    pub fn reflect(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 1 { -c.clone() } else { c.clone() })
            .collect();
        Polynomial::new(coeffs)
    }

    /// Exact Euclidean division: returns `(quotient, remainder)`.
    ///
    /// Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = divisor.coeffs.len();
        if rem.len() < dd {
            return (Polynomial::zero(), self.clone());
        }
        let lead = divisor.leading_coeff();
        let mut quot = vec![Rat::zero(); rem.len() - dd + 1];
        for i in (0..quot.len()).rev() {
            let q = &rem[i + dd - 1] / &lead;
            if q.is_zero() {
                continue;
            }
            for (j, b) in divisor.coeffs.iter().enumerate() {
                let t = &q * b;
                rem[i + j] -= t;
            }
            quot[i] = q;
        }
        rem.truncate(dd - 1);
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    /// Divide every coefficient by the content (gcd of numerators over lcm of
    /// denominators) so the result has coprime integer coefficients with the
    /// same sign pattern. Used to keep remainder sequences small.
    pub fn primitive_part(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        use num_bigint::BigInt;
        use num_integer::Integer;
        let mut den_lcm = BigInt::one();
        for c in &self.coeffs {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den_lcm / c.denom()))
            .collect();
        let mut g = BigInt::zero();
        for v in &ints {
            g = g.gcd(v);
        }
        let coeffs = ints
            .into_iter()
            .map(|v| Rat::from_integer(v / &g))
            .collect();
        Polynomial::new(coeffs)
    }

    /// Greatest common divisor, returned in primitive form.
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = std::mem::replace(&mut b, r.primitive_part());
        }
        if a.is_zero() {
            a
        } else {
            // Normalize to a positive leading coefficient.
            let lead = a.leading_coeff();
            if lead.is_negative() {
                a.scale(&-Rat::one())
            } else {
                a
            }
        }
    }

    /// The square-free part `p / gcd(p, p')`, which has the same real roots
    /// as `p`, each with multiplicity one.
    pub fn squarefree_part(&self) -> Polynomial {
        if self.degree() <= 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() <= 0 {
            return self.clone();
        }
        let (q, r) = self.div_rem(&g);
        debug_assert!(r.is_zero());
        q
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*t"),
                _ => format!("{c}*t^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn degree_conventions() {
        assert_eq!(Polynomial::zero().degree(), -1);
        assert_eq!(Polynomial::one().degree(), 0);
        assert_eq!(Polynomial::new(vec![rat_int(0), rat_int(0)]).degree(), -1);
        assert_eq!(Polynomial::monomial(rat_int(3), 4).degree(), 4);
    }

    #[test]
    fn div_rem_roundtrip() {
        // (t^3 - 2t + 1) = (t - 1)(t^2 + t - 1) + 0
        let p = Polynomial::new(vec![rat_int(1), rat_int(-2), rat_int(0), rat_int(1)]);
        let d = Polynomial::new(vec![rat_int(-1), rat_int(1)]);
        let (q, r) = p.div_rem(&d);
        assert_eq!(q.mul(&d).add(&r), p);
        assert!(r.is_zero());
    }

    #[test]
    fn gcd_detects_common_factor() {
        let f = Polynomial::new(vec![rat_int(-1), rat_int(0), rat_int(1)]); // t^2-1
        let g = Polynomial::new(vec![rat_int(1), rat_int(1)]); // t+1
        let h = f.gcd(&g);
        assert_eq!(h.degree(), 1);
        assert!(h.eval(&rat(-1, 1)).is_zero());
    }

    #[test]
    fn squarefree_part_drops_multiplicity() {
        // (t-1)^2 (t+2)
        let f = Polynomial::new(vec![rat_int(-1), rat_int(1)]);
        let p = f.mul(&f).mul(&Polynomial::new(vec![rat_int(2), rat_int(1)]));
        let sf = p.squarefree_part();
        assert_eq!(sf.degree(), 2);
        assert!(sf.eval(&rat_int(1)).is_zero());
        assert!(sf.eval(&rat_int(-2)).is_zero());
    }
}
