//! Self-contained dyadic interval arithmetic.
//!
//! Values are `m * 2^e` with a 62-bit mantissa; every operation rounds
//! outward using pure integer arithmetic, so enclosures are rigorous and
//! completely independent of the floating-point environment. This is what
//! makes the branch-and-bound certification sound: all accept/reject
//! decisions reduce to integer sign tests on interval endpoints.

use crate::rational::Rat;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

/// A dyadic rational `m * 2^e`, normalized to `|m| < 2^62` (but not
/// minimized: trailing zero bits in `m` are allowed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub m: i64,
    pub e: i32,
}

const MANT_BITS: u32 = 62;
const MANT_LIMIT: i128 = 1i128 << MANT_BITS;

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { m: 0, e: 0 };
    pub const ONE: Dyadic = Dyadic { m: 1, e: 0 };

    pub fn from_int(v: i64) -> Dyadic {
        norm_round(v as i128, 0, false)
    }

    /// Exact value as a rational.
    pub fn to_rat(self) -> Rat {
        let m = BigInt::from(self.m);
        if self.e >= 0 {
            Rat::from_integer(m << self.e as usize)
        } else {
            Rat::new(m, BigInt::from(1) << (-self.e) as usize)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.m as f64 * (self.e as f64).exp2()
    }

    pub fn neg(self) -> Dyadic {
        Dyadic {
            m: -self.m,
            e: self.e,
        }
    }

    pub fn sign(self) -> Ordering {
        self.m.cmp(&0)
    }

    /// Exact comparison.
    pub fn cmp_exact(self, other: Dyadic) -> Ordering {
        if self.m == 0 || other.m == 0 {
            return self.m.cmp(&other.m);
        }
        let (sa, sb) = (self.m > 0, other.m > 0);
        if sa != sb {
            return sa.cmp(&sb);
        }
        let d = self.e - other.e;
        if d >= 0 {
            if d > 64 {
                // |self| >= 2^64 |other| in magnitude; sign decides.
                return if sa { Ordering::Greater } else { Ordering::Less };
            }
            ((self.m as i128) << d).cmp(&(other.m as i128))
        } else {
            if -d > 64 {
                return if sa { Ordering::Less } else { Ordering::Greater };
            }
            (self.m as i128).cmp(&((other.m as i128) << (-d)))
        }
    }

    /// Exact midpoint when representable; falls back to a down-rounded
    /// midpoint otherwise (still strictly inside for nondegenerate input).
    pub fn midpoint(self, other: Dyadic) -> Dyadic {
        let e = self.e.min(other.e) - 1;
        let sa = (self.e - e) as u32;
        let sb = (other.e - e) as u32;
        if sa <= 64 && sb <= 64 {
            let sum = ((self.m as i128) << sa) + ((other.m as i128) << sb);
            norm_round(sum, e - 1, false)
        } else {
            add_round(self, other, false).half()
        }
    }

    fn half(self) -> Dyadic {
        Dyadic {
            m: self.m,
            e: self.e - 1,
        }
    }
}

/// Round `m * 2^e` to a representable dyadic, toward +infinity when `up`,
/// toward -infinity otherwise.
fn norm_round(mut m: i128, mut e: i32, up: bool) -> Dyadic {
    if m == 0 {
        return Dyadic::ZERO;
    }
    while m.abs() >= MANT_LIMIT {
        m = if up { (m + 1) >> 1 } else { m >> 1 };
        e += 1;
    }
    Dyadic { m: m as i64, e }
}

fn add_round(a: Dyadic, b: Dyadic, up: bool) -> Dyadic {
    if a.m == 0 {
        return b;
    }
    if b.m == 0 {
        return a;
    }
    let (hi, lo) = if a.e >= b.e { (a, b) } else { (b, a) };
    let gap = hi.e - lo.e;
    if gap > 64 {
        // The small addend only matters through the rounding direction.
        let mut m = (hi.m as i128) << 1;
        if up && lo.m > 0 {
            m += 1;
        }
        if !up && lo.m < 0 {
            m -= 1;
        }
        return norm_round(m, hi.e - 1, up);
    }
    let m = ((hi.m as i128) << gap) + lo.m as i128;
    norm_round(m, lo.e, up)
}

fn mul_round(a: Dyadic, b: Dyadic, up: bool) -> Dyadic {
    norm_round(a.m as i128 * b.m as i128, a.e + b.e, up)
}

/// Directed conversion from an exact rational.
fn rat_round(x: &Rat, up: bool) -> Dyadic {
    if x.is_zero() {
        return Dyadic::ZERO;
    }
    let num = x.numer();
    let den = x.denom();
    // Aim for a quotient with ~MANT_BITS bits.
    let e = num.bits() as i64 - den.bits() as i64 - (MANT_BITS as i64 + 1);
    let (scaled_num, scaled_den) = if e <= 0 {
        (num.clone() << (-e) as usize, den.clone())
    } else {
        (num.clone(), den.clone() << e as usize)
    };
    let (q, r) = num_integer::Integer::div_mod_floor(&scaled_num, &scaled_den);
    let mut m = q.to_i128().expect("quotient fits by construction");
    if up && !r.is_zero() {
        m += 1;
    }
    norm_round(m, e as i32, up)
}

/// A closed interval with dyadic endpoints; `lo <= hi` always.
#[derive(Clone, Copy, Debug)]
pub struct DyInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl DyInterval {
    pub const ZERO: DyInterval = DyInterval {
        lo: Dyadic::ZERO,
        hi: Dyadic::ZERO,
    };

    pub fn point(x: Dyadic) -> DyInterval {
        DyInterval { lo: x, hi: x }
    }

    pub fn new(lo: Dyadic, hi: Dyadic) -> DyInterval {
        debug_assert!(lo.cmp_exact(hi) != Ordering::Greater);
        DyInterval { lo, hi }
    }

    pub fn from_rat(x: &Rat) -> DyInterval {
        DyInterval {
            lo: rat_round(x, false),
            hi: rat_round(x, true),
        }
    }

    pub fn add(self, other: DyInterval) -> DyInterval {
        DyInterval {
            lo: add_round(self.lo, other.lo, false),
            hi: add_round(self.hi, other.hi, true),
        }
    }

    pub fn neg(self) -> DyInterval {
        DyInterval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn sub(self, other: DyInterval) -> DyInterval {
        self.add(other.neg())
    }

    pub fn mul(self, other: DyInterval) -> DyInterval {
        let pairs = [
            (self.lo, other.lo),
            (self.lo, other.hi),
            (self.hi, other.lo),
            (self.hi, other.hi),
        ];
        let mut lo = mul_round(pairs[0].0, pairs[0].1, false);
        let mut hi = mul_round(pairs[0].0, pairs[0].1, true);
        for &(x, y) in &pairs[1..] {
            let d = mul_round(x, y, false);
            if d.cmp_exact(lo) == Ordering::Less {
                lo = d;
            }
            let u = mul_round(x, y, true);
            if u.cmp_exact(hi) == Ordering::Greater {
                hi = u;
            }
        }
        DyInterval { lo, hi }
    }

    pub fn scale(self, c: Dyadic) -> DyInterval {
        self.mul(DyInterval::point(c))
    }

    /// `self^k` with the even-power sign tightening (an interval straddling
    /// zero has `x^{2j} >= 0`).
    pub fn pow(self, k: u32) -> DyInterval {
        if k == 0 {
            return DyInterval::point(Dyadic::ONE);
        }
        let lo_sign = self.lo.sign();
        let hi_sign = self.hi.sign();
        if lo_sign != Ordering::Less {
            // Nonnegative interval: monotone.
            DyInterval {
                lo: pow_mag(self.lo, k, false),
                hi: pow_mag(self.hi, k, true),
            }
        } else if hi_sign != Ordering::Greater {
            // Nonpositive: reflect.
            let refl = DyInterval {
                lo: pow_mag(self.hi.neg(), k, false),
                hi: pow_mag(self.lo.neg(), k, true),
            };
            if k % 2 == 0 {
                refl
            } else {
                refl.neg()
            }
        } else if k % 2 == 0 {
            let a = pow_mag(self.lo.neg(), k, true);
            let b = pow_mag(self.hi, k, true);
            let hi = if a.cmp_exact(b) == Ordering::Greater { a } else { b };
            DyInterval {
                lo: Dyadic::ZERO,
                hi,
            }
        } else {
            DyInterval {
                lo: pow_mag(self.lo.neg(), k, true).neg(),
                hi: pow_mag(self.hi, k, true),
            }
        }
    }

    pub fn contains_zero(self) -> bool {
        self.lo.sign() != Ordering::Greater && self.hi.sign() != Ordering::Less
    }

    /// Exact membership test for a rational point.
    pub fn contains_rat(self, x: &Rat) -> bool {
        &self.lo.to_rat() <= x && x <= &self.hi.to_rat()
    }

    pub fn width_f64(self) -> f64 {
        add_round(self.hi, self.lo.neg(), true).to_f64()
    }
}

/// `x^k` for nonnegative `x` with directed rounding.
fn pow_mag(x: Dyadic, k: u32, up: bool) -> Dyadic {
    debug_assert!(x.sign() != Ordering::Less);
    let mut acc = Dyadic::ONE;
    for _ in 0..k {
        acc = mul_round(acc, x, up);
    }
    acc
}
