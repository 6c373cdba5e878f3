//! Sturm sequences: exact real-root counting, isolation, and sign proofs
//! for rational polynomials on closed intervals.

use crate::orthopoly::Polynomial;
use crate::rational::{rat, Rat};
use num_traits::{Signed, Zero};

/// The signed remainder sequence of `p`, with each remainder reduced to its
/// primitive integer form (positive scaling preserves the sign structure).
pub fn sturm_sequence(p: &Polynomial) -> Vec<Polynomial> {
    let mut seq = Vec::new();
    if p.is_zero() {
        return seq;
    }
    seq.push(p.primitive_part());
    let dp = p.derivative();
    if dp.is_zero() {
        return seq;
    }
    seq.push(dp.primitive_part());
    loop {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(r.scale(&rat(-1, 1)).primitive_part());
    }
    seq
}

fn sign_variations(seq: &[Polynomial], x: &Rat) -> usize {
    let mut count = 0usize;
    let mut last: Option<bool> = None; // sign of the previous nonzero value
    for q in seq {
        let v = q.eval(x);
        if v.is_zero() {
            continue;
        }
        let s = v.is_positive();
        if let Some(prev) = last {
            if prev != s {
                count += 1;
            }
        }
        last = Some(s);
    }
    count
}

/// Number of distinct real roots of `p` in the half-open interval `(a, b]`,
/// assuming `p(a) != 0`. Multiplicities do not matter: the count uses the
/// square-free part.
pub fn count_roots_half_open(p: &Polynomial, a: &Rat, b: &Rat) -> usize {
    let q = p.squarefree_part();
    if q.degree() <= 0 {
        return 0;
    }
    let seq = sturm_sequence(&q);
    sign_variations(&seq, a) - sign_variations(&seq, b)
}

/// Disjoint open isolating intervals, in increasing order, one per distinct
/// root of `p` inside the open interval `(a, b)`. Requires `p(a) != 0` and
/// `p(b) != 0`. Interval endpoints are non-roots lying strictly inside
/// `(a, b)`, so they double as sign samples for the adjacent root-free
/// regions.
pub fn isolate_roots(p: &Polynomial, a: &Rat, b: &Rat) -> Vec<(Rat, Rat)> {
    let q = p.squarefree_part();
    let seq = sturm_sequence(&q);
    let va = sign_variations(&seq, a);
    let vb = sign_variations(&seq, b);
    let mut out = Vec::new();
    subdivide(&q, &seq, a.clone(), b.clone(), va, vb, &mut out);
    // Pull endpoints shared with (a, b) strictly inside.
    for iv in &mut out {
        if &iv.0 == a {
            iv.0 = shrink(&q, &seq, &iv.0, &iv.1, true);
        }
        if &iv.1 == b {
            iv.1 = shrink(&q, &seq, &iv.0, &iv.1, false);
        }
    }
    out
}

/// An interior non-root point of `(l, r)` on the requested side of the
/// unique root inside: left of it when `left_side`, right otherwise.
fn shrink(q: &Polynomial, seq: &[Polynomial], l: &Rat, r: &Rat, left_side: bool) -> Rat {
    let vl = sign_variations(seq, l);
    let mut frac = rat(1, 2);
    loop {
        let cand = if left_side {
            l + (r - l) * &frac
        } else {
            r - (r - l) * &frac
        };
        if !q.eval(&cand).is_zero() {
            let vc = sign_variations(seq, &cand);
            // Root count in (l, cand] is vl - vc; zero means cand is left of
            // the root, one means it is right of it.
            let left_of_root = vl == vc;
            if left_of_root == left_side {
                return cand;
            }
        }
        frac = frac / rat(2, 1);
    }
}

fn subdivide(
    q: &Polynomial,
    seq: &[Polynomial],
    a: Rat,
    b: Rat,
    va: usize,
    vb: usize,
    out: &mut Vec<(Rat, Rat)>,
) {
    let count = va - vb;
    if count == 0 {
        return;
    }
    if count == 1 {
        out.push((a, b));
        return;
    }
    // A non-root split point; q has finitely many roots, so walking down
    // dyadic offsets terminates.
    let mut mid = (&a + &b) / rat(2, 1);
    let mut denom = 4i64;
    while q.eval(&mid).is_zero() {
        mid = &a + (&b - &a) * rat(1, denom);
        denom *= 2;
    }
    let vm = sign_variations(seq, &mid);
    subdivide(q, seq, a, mid.clone(), va, vm, out);
    subdivide(q, seq, mid, b, vm, vb, out);
}

/// Transcript of a nonpositivity proof on an interval.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct SturmTranscript {
    pub distinct_roots: usize,
    pub sample_points: usize,
}

/// Exact proof that `p(t) <= 0` for all `t` in `[a, b]`.
///
/// Roots of the square-free part are isolated; between consecutive roots
/// the sign is constant, so checking `p` at the interval endpoints and at
/// every isolation endpoint decides the claim. On failure the returned
/// witness is a rational point with `p > 0`.
pub fn prove_nonpositive(p: &Polynomial, a: &Rat, b: &Rat) -> Result<SturmTranscript, Rat> {
    assert!(a < b);
    if p.is_zero() {
        return Ok(SturmTranscript {
            distinct_roots: 0,
            sample_points: 0,
        });
    }
    if p.degree() == 0 {
        if p.coeff(0).is_positive() {
            return Err(a.clone());
        }
        return Ok(SturmTranscript {
            distinct_roots: 0,
            sample_points: 1,
        });
    }
    // Deflate roots sitting exactly at the endpoints so the Sturm queries
    // see non-root endpoints.
    let mut q = p.squarefree_part();
    for endpoint in [a, b] {
        while q.degree() > 0 && q.eval(endpoint).is_zero() {
            let linear = Polynomial::new(vec![-endpoint.clone(), Rat::from_integer(1.into())]);
            let (quot, rem) = q.div_rem(&linear);
            debug_assert!(rem.is_zero());
            q = quot;
        }
    }
    let mut samples: Vec<Rat> = vec![a.clone(), b.clone()];
    if q.degree() > 0 {
        for (l, r) in isolate_roots(&q, a, b) {
            samples.push(l);
            samples.push(r);
        }
    }
    samples.sort();
    samples.dedup();
    let mut roots = 0usize;
    if q.degree() > 0 {
        let seq = sturm_sequence(&q);
        roots = sign_variations(&seq, a) - sign_variations(&seq, b);
    }
    for s in &samples {
        if p.eval(s).is_positive() {
            return Err(s.clone());
        }
    }
    Ok(SturmTranscript {
        distinct_roots: roots,
        sample_points: samples.len(),
    })
}
