//! Shared exact-arithmetic helpers built on [`num_rational::BigRational`].

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Shorthand used throughout the crate.
pub type Rat = BigRational;

/// `p/q` from machine integers.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// `n` as a rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// computed by the continued-fraction algorithm.
///
/// Returns `None` for non-finite input.
pub fn rationalize(x: f64, max_den: u64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    // Exact conversion followed by a walk down the continued-fraction
    // convergents keeps everything in integer arithmetic.
    let exact = Rat::from_float(x)?;
    Some(limit_denominator(&exact, max_den))
}

/// Best approximation of `x` among rationals with denominator `<= max_den`.
pub fn limit_denominator(x: &Rat, max_den: u64) -> Rat {
    let max_den_int = BigInt::from(max_den.max(1));
    if x.denom() <= &max_den_int {
        return x.clone();
    }
    // The convergent walk below needs floor semantics; reduce to x >= 0.
    if x.is_negative() {
        return -limit_denominator(&-x.clone(), max_den);
    }
    let max_den = max_den_int;
    // Continued-fraction convergents p_k/q_k. The expansion cannot run to
    // completion before q exceeds max_den, because the final convergent is
    // x itself whose denominator is already known to be too large.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut n = x.numer().clone();
    let mut d = x.denom().clone();
    loop {
        let a = &n / &d;
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        let r = &n - &a * &d;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        n = std::mem::replace(&mut d, r);
    }
    // Choose between the last convergent p1/q1 and the best semiconvergent.
    let k = (&max_den - &q0) / &q1;
    let semi = Rat::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let conv = Rat::new(p1, q1);
    if (x - &semi).abs() < (x - &conv).abs() {
        semi
    } else {
        conv
    }
}

/// Lossy conversion for reporting.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Floor of a rational as a `BigInt`.
pub fn floor_int(x: &Rat) -> BigInt {
    x.floor().to_integer()
}

/// Serialize a `BigInt` as a canonical decimal string (no leading zeros,
/// `-` sign for negatives).
pub fn int_to_string(x: &BigInt) -> String {
    x.to_str_radix(10)
}

/// Parse a canonical decimal integer string. Rejects empty strings,
/// leading zeros, `-0`, and any non-digit character, so that every
/// accepted string has exactly one parse.
pub fn int_from_canonical(s: &str) -> Option<BigInt> {
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (Sign::Minus, rest),
        None => (Sign::Plus, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    if sign == Sign::Minus && digits == "0" {
        return None;
    }
    let magnitude = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    Some(if sign == Sign::Minus {
        -magnitude
    } else {
        magnitude
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.333333333333, 1000).unwrap(), rat(1, 3));
        assert_eq!(rationalize(0.5, 10).unwrap(), rat(1, 2));
        assert_eq!(rationalize(-2.25, 100).unwrap(), rat(-9, 4));
        assert_eq!(rationalize(240.0, 10).unwrap(), rat_int(240));
    }

    #[test]
    fn limit_denominator_is_best_approximation() {
        // pi ~ 355/113 is the classic best approximation below denominator 1000.
        let pi = Rat::from_float(std::f64::consts::PI).unwrap();
        assert_eq!(limit_denominator(&pi, 1000), rat(355, 113));
    }

    #[test]
    fn canonical_integer_parsing_is_strict() {
        assert_eq!(int_from_canonical("123"), Some(BigInt::from(123)));
        assert_eq!(int_from_canonical("-7"), Some(BigInt::from(-7)));
        assert_eq!(int_from_canonical("0"), Some(BigInt::zero()));
        assert!(int_from_canonical("0123").is_none());
        assert!(int_from_canonical("-0").is_none());
        assert!(int_from_canonical("").is_none());
        assert!(int_from_canonical("12a").is_none());
        assert!(int_from_canonical("+5").is_none());
    }
}
