use super::*;
use crate::conic::{self, SolveOptions};
use crate::orthopoly::gegenbauer;
use crate::rational::{rat, rat_int, to_f64};
use nalgebra::DMatrix;

#[test]
fn kernel_of_identity_is_empty() {
    let x = DMatrix::identity(4, 4);
    assert!(detect_kernel(&x, 1e-8).is_empty());
}

#[test]
fn kernel_of_all_ones_is_two_dimensional() {
    let x = DMatrix::from_element(3, 3, 1.0);
    let basis = detect_kernel(&x, 1e-8);
    assert_eq!(basis.len(), 2);
    // Every basis vector must have zero coordinate sum (orthogonal to the
    // all-ones eigenvector), and the two stated vectors must lie in the span.
    for v in &basis {
        let s: Rat = v.iter().cloned().sum();
        assert!(s.is_zero());
    }
    for target in [
        vec![rat_int(1), rat_int(-1), rat_int(0)],
        vec![rat_int(1), rat_int(0), rat_int(-1)],
    ] {
        let mut rows: Vec<Vec<Rat>> = basis.clone();
        rows.push(target);
        assert_eq!(rank(&rows), 2, "vector not in detected kernel span");
    }
}

#[test]
fn kernel_picks_up_tiny_eigenvalue() {
    let mut x = DMatrix::identity(2, 2);
    x[(1, 1)] = 1e-12;
    let basis = detect_kernel(&x, 1e-8);
    assert_eq!(basis.len(), 1);
    assert_eq!(basis[0], vec![rat_int(0), rat_int(1)]);
}

#[test]
fn facial_reduce_identity_on_empty_kernels() {
    let program = crate::conic::ConicProgram {
        blocks: vec![crate::conic::ConeBlock::Psd { size: 2 }],
        objective: vec![],
        constraints: vec![crate::conic::Constraint {
            coeffs: vec![crate::conic::BlockCoeff {
                block: 0,
                entries: vec![(0, 0, 1.0), (1, 1, 1.0)],
            }],
            rhs: 1.0,
        }],
    };
    let (reduced, back) = facial_reduce(&program, &[vec![]]).unwrap();
    assert_eq!(reduced.blocks, program.blocks);
    assert!(back.complements[0].is_none());
}

#[test]
fn facial_reduce_deletes_killed_coordinate() {
    let program = crate::conic::ConicProgram {
        blocks: vec![crate::conic::ConeBlock::Psd { size: 2 }],
        objective: vec![crate::conic::BlockCoeff {
            block: 0,
            entries: vec![(0, 0, 1.0)],
        }],
        constraints: vec![crate::conic::Constraint {
            coeffs: vec![crate::conic::BlockCoeff {
                block: 0,
                entries: vec![(0, 0, 1.0), (1, 1, 2.0)],
            }],
            rhs: 1.0,
        }],
    };
    let kernel = vec![vec![rat_int(0), rat_int(1)]];
    let (reduced, back) = facial_reduce(&program, &[kernel]).unwrap();
    assert_eq!(reduced.blocks, vec![crate::conic::ConeBlock::Psd { size: 1 }]);
    // Back-map lifts the 1x1 block into the (0,0) corner.
    let lifted = back.lift_block(0, &vec![vec![rat(1, 3)]]);
    assert_eq!(lifted[0][0], rat(1, 3));
    assert!(lifted[0][1].is_zero() && lifted[1][1].is_zero());
}

/// Facial reduction preserves the optimum on the theta program of the
/// 5-cycle (closed form sqrt(5)).
#[test]
fn facial_reduce_preserves_theta_c5() {
    let n = 5usize;
    let mut constraints = vec![crate::conic::Constraint {
        coeffs: vec![crate::conic::BlockCoeff {
            block: 0,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }],
        rhs: 1.0,
    }];
    for i in 0..n {
        let j = (i + 1) % n;
        constraints.push(crate::conic::Constraint {
            coeffs: vec![crate::conic::BlockCoeff {
                block: 0,
                entries: vec![(i.min(j), i.max(j), 1.0)],
            }],
            rhs: 0.0,
        });
    }
    let mut obj = Vec::new();
    for r in 0..n {
        for c in r..n {
            obj.push((r, c, 1.0));
        }
    }
    let program = crate::conic::ConicProgram {
        blocks: vec![crate::conic::ConeBlock::Psd { size: n }],
        objective: vec![crate::conic::BlockCoeff {
            block: 0,
            entries: obj,
        }],
        constraints,
    };
    let report = conic::solve(&program, &SolveOptions::default()).unwrap();
    let kernel = detect_kernel(report.primal_solution[0].as_psd(), 1e-6);
    // theta(C5) has a rank-2... the optimal face leaves some kernel; the
    // reduced program must reproduce the optimum either way.
    let (reduced, _) = facial_reduce(&program, &[kernel]).unwrap();
    let re_report = conic::solve(&reduced, &SolveOptions::default()).unwrap();
    assert!(
        (re_report.primal_value - 5.0f64.sqrt()).abs() < 1e-7,
        "reduced optimum {}",
        re_report.primal_value
    );
}

#[test]
fn rounding_is_projection_fixed_point() {
    // Already-exact feasible input is returned unchanged.
    let x = [0.5f64, 0.5];
    let active = vec![(vec![rat_int(1), rat_int(1)], rat_int(1))];
    let rounded = round_least_squares(&x, &active, 1 << 20).unwrap();
    assert_eq!(rounded, vec![rat(1, 2), rat(1, 2)]);
}

#[test]
fn rounding_snaps_to_equality() {
    let x = [0.33333334f64];
    let active = vec![(vec![rat_int(1)], rat(1, 3))];
    let rounded = round_least_squares(&x, &active, 1 << 20).unwrap();
    assert_eq!(rounded, vec![rat(1, 3)]);
}

#[test]
fn rounding_reports_inconsistency() {
    let x = [0.5f64];
    let active = vec![
        (vec![rat_int(1)], rat_int(0)),
        (vec![rat_int(1)], rat_int(1)),
    ];
    assert!(matches!(
        round_least_squares(&x, &active, 1 << 20),
        Err(VerifyError::InconsistentSystem)
    ));
}

/// Expand a polynomial in the Gegenbauer basis {P_0^n, ..., P_d^n} by
/// exact back-substitution.
fn gegenbauer_coefficients(p: &Polynomial, n: u32, d: u32) -> Vec<Rat> {
    let mut rem = p.clone();
    let mut coeffs = vec![rat_int(0); d as usize + 1];
    for k in (0..=d as usize).rev() {
        let basis = gegenbauer(n, k as u32).unwrap();
        let c = rem.coeff(k) / basis.coeff(k);
        if !c.is_zero() {
            rem = rem.sub(&basis.scale(&c));
        }
        coeffs[k] = c;
    }
    assert!(rem.is_zero(), "expansion left a remainder: {rem:?}");
    coeffs
}

/// The classical exact optimality certificate for kissing(8) <= 240:
/// p(t) = (320/3)(t+1)(t+1/2)^2 t^2 (t-1/2) expanded in the P_k^8 basis
/// gives nonnegative coefficients with 1 + sum f_k = 240 exactly.
#[test]
fn certify_univariate_dimension_eight_exactly_240() {
    let c = rat(320, 3);
    let p = Polynomial::new(vec![rat_int(1), rat_int(1)])
        .mul(&Polynomial::new(vec![rat(1, 2), rat_int(1)]))
        .mul(&Polynomial::new(vec![rat(1, 2), rat_int(1)]))
        .mul(&Polynomial::monomial(rat_int(1), 2))
        .mul(&Polynomial::new(vec![rat(-1, 2), rat_int(1)]))
        .scale(&c);
    // p = 1 + sum f_k P_k^8 must hold, so expand p - 1.
    let shifted = p.sub(&Polynomial::one());
    let f = gegenbauer_coefficients(&shifted, 8, 6);
    for (k, fk) in f.iter().enumerate() {
        assert!(!fk.is_negative(), "f_{k} = {fk} negative");
    }
    let cert = certify_univariate(&f, 8, 6).unwrap();
    assert_eq!(cert.certified_bound, rat_int(240));
    assert_eq!(cert.certified_integer_bound, 240.into());
    assert_eq!(cert.problem, "kissing-lp");
}

#[test]
fn certify_univariate_rejects_all_zero() {
    // p = 1 > 0 on the whole interval.
    let f = vec![rat_int(0); 7];
    match certify_univariate(&f, 8, 6) {
        Err(VerifyError::SignViolation { value_at_witness, .. }) => {
            assert!(value_at_witness.is_positive());
        }
        other => panic!("expected sign violation, got {other:?}"),
    }
}

#[test]
fn certify_univariate_rejects_negative_coefficients() {
    let mut f = vec![rat_int(0); 7];
    f[3] = rat_int(-1);
    assert!(matches!(
        certify_univariate(&f, 8, 6),
        Err(VerifyError::NegativeCoefficient { index: 3 })
    ));
}

#[test]
fn sturm_counts_match_descartes_isolation() {
    // Oracle: Vincent/Descartes bisection, an independent exact algorithm.
    fn descartes_variations(q: &Polynomial, a: &Rat, b: &Rat) -> usize {
        // Transform q to (1+x)^deg q((a + b x)/(1 + x)) and count coefficient
        // sign changes.
        let deg = q.degree().max(0) as usize;
        let mut acc = Polynomial::zero();
        let lin_num = Polynomial::new(vec![a.clone(), b.clone()]); // a + b x
        let lin_den = Polynomial::new(vec![rat_int(1), rat_int(1)]); // 1 + x
        for (k, c) in q.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = Polynomial::constant(c.clone());
            for _ in 0..k {
                term = term.mul(&lin_num);
            }
            for _ in 0..(deg - k) {
                term = term.mul(&lin_den);
            }
            acc = acc.add(&term);
        }
        let mut count = 0;
        let mut last: Option<bool> = None;
        for c in acc.coeffs() {
            if c.is_zero() {
                continue;
            }
            let s = c.is_positive();
            if let Some(prev) = last {
                if prev != s {
                    count += 1;
                }
            }
            last = Some(s);
        }
        count
    }
    fn descartes_count(q: &Polynomial, a: &Rat, b: &Rat) -> usize {
        assert!(!q.eval(a).is_zero() && !q.eval(b).is_zero());
        let v = descartes_variations(q, a, b);
        match v {
            0 => 0,
            1 => 1,
            _ => {
                let mut mid = (a + b) / rat(2, 1);
                let mut denom = 4i64;
                while q.eval(&mid).is_zero() {
                    mid = a + (b - a) * rat(1, denom);
                    denom *= 2;
                }
                descartes_count(q, a, &mid) + descartes_count(q, &mid, b)
            }
        }
    }

    let mut state = 0x5deece66du64;
    let mut next_i64 = move |bound: i64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as i64 % (2 * bound + 1)) - bound
    };
    for trial in 0..500 {
        let deg = 1 + (next_i64(100).unsigned_abs() as usize % 25);
        let coeffs: Vec<Rat> = (0..=deg)
            .map(|_| rat(next_i64(9), (next_i64(4).abs() + 1).max(1)))
            .collect();
        let p = Polynomial::new(coeffs);
        if p.degree() < 1 {
            continue;
        }
        let q = p.squarefree_part();
        let mut a = rat(next_i64(6), 1);
        let mut b = &a + rat((next_i64(5).abs() + 1).max(1), 1);
        // Nudge endpoints off roots.
        while q.eval(&a).is_zero() {
            a -= rat(1, 7);
        }
        while q.eval(&b).is_zero() || b <= a {
            b += rat(1, 7);
        }
        let sturm = count_roots_half_open(&p, &a, &b);
        let oracle = descartes_count(&q, &a, &b);
        assert_eq!(sturm, oracle, "trial {trial} deg {deg} on ({a}, {b})");
    }
}

#[test]
fn region_branch_bound_accepts_margin_case() {
    // p = u^2 + v^2 + t^2 - 3 is <= -1/2-ish on the admissible region
    // inside the box (since u^2+v^2+t^2 <= 1 + 2uvt <= 5/4 there).
    let p = TriPolynomial::monomial(rat_int(1), (2, 0, 0))
        .add(&TriPolynomial::monomial(rat_int(1), (0, 2, 0)))
        .add(&TriPolynomial::monomial(rat_int(1), (0, 0, 2)))
        .sub(&TriPolynomial::constant(rat_int(3)));
    let transcript = prove_region_nonpositive(&p, BoxBudget::default()).unwrap();
    assert!(transcript.boxes_processed < 100_000);
    assert!(transcript.discharged_nonpositive > 0);
}

#[test]
fn region_branch_bound_finds_violation_witness() {
    // p = u + v + t - 1 is positive at (1/2, 1/2, 1/2), which is strictly
    // admissible.
    let p = TriPolynomial::monomial(rat_int(1), (1, 0, 0))
        .add(&TriPolynomial::monomial(rat_int(1), (0, 1, 0)))
        .add(&TriPolynomial::monomial(rat_int(1), (0, 0, 1)))
        .sub(&TriPolynomial::one());
    match prove_region_nonpositive(&p, BoxBudget::default()) {
        Err(VerifyError::SignViolation {
            witness,
            value_at_witness,
        }) => {
            assert!(value_at_witness.is_positive());
            // The witness must actually be admissible.
            let g = region_polynomial();
            assert!(g.eval(&witness[0], &witness[1], &witness[2]) > rat_int(0));
        }
        other => panic!("expected sign violation, got {other:?}"),
    }
}

#[test]
fn region_branch_bound_rejects_asymmetric_input() {
    let p = TriPolynomial::monomial(rat_int(1), (1, 0, 0));
    assert!(matches!(
        prove_region_nonpositive(&p, BoxBudget::default()),
        Err(VerifyError::Shape(_))
    ));
}

#[test]
fn certify_trivariate_rejects_zero_blocks() {
    // All-zero blocks fail the pair constraint at +1/3.
    let blocks: Vec<RatMatrix> = (0..4)
        .map(|k| vec![vec![rat_int(0); 4 - k]; 4 - k])
        .collect();
    match certify_trivariate(&blocks, 3, 3, BoxBudget::default()) {
        Err(VerifyError::SignViolation { value_at_witness, .. }) => {
            assert_eq!(value_at_witness, rat(1, 3));
        }
        other => panic!("expected sign violation, got {other:?}"),
    }
}

#[test]
fn certify_trivariate_rejects_non_psd_block() {
    let mut blocks: Vec<RatMatrix> = (0..4)
        .map(|k| vec![vec![rat_int(0); 4 - k]; 4 - k])
        .collect();
    blocks[0][0][1] = rat_int(1);
    blocks[0][1][0] = rat_int(1);
    assert!(matches!(
        certify_trivariate(&blocks, 3, 3, BoxBudget::default()),
        Err(VerifyError::NotPsd { block: 0, .. })
    ));
}

mod interval_containment {
    use super::super::interval::{DyInterval, Dyadic};
    use crate::orthopoly::TriPolynomial;
    use crate::rational::{rat, Rat};
    use proptest::prelude::*;

    fn arb_tripoly() -> impl Strategy<Value = TriPolynomial> {
        proptest::collection::vec(
            ((0u32..5, 0u32..5, 0u32..5), -50i64..50, 1i64..20),
            1..12,
        )
        .prop_map(|terms| {
            let mut p = TriPolynomial::zero();
            for (exps, num, den) in terms {
                p = p.add(&TriPolynomial::monomial(rat(num, den), exps));
            }
            p
        })
    }

    proptest! {
        /// Exact evaluation at the box center lies inside the interval
        /// enclosure of the box evaluation.
        #[test]
        fn center_value_inside_enclosure(
            p in arb_tripoly(),
            corners in proptest::array::uniform6(-64i64..64i64),
        ) {
            let mk = |a: i64, b: i64| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                (
                    Dyadic { m: lo, e: -6 },
                    Dyadic { m: hi, e: -6 },
                )
            };
            let (ul, uh) = mk(corners[0], corners[1]);
            let (vl, vh) = mk(corners[2], corners[3]);
            let (tl, th) = mk(corners[4], corners[5]);
            let deg = p.degrees();
            let pu: Vec<DyInterval> = (0..=deg.0).map(|k| DyInterval::new(ul, uh).pow(k)).collect();
            let pv: Vec<DyInterval> = (0..=deg.1).map(|k| DyInterval::new(vl, vh).pow(k)).collect();
            let pt: Vec<DyInterval> = (0..=deg.2).map(|k| DyInterval::new(tl, th).pow(k)).collect();
            // Naive enclosure via grouped evaluation.
            let mut total = DyInterval::ZERO;
            for ((a, b, c), coef) in p.terms() {
                let term = DyInterval::from_rat(coef)
                    .mul(pu[*a as usize])
                    .mul(pv[*b as usize])
                    .mul(pt[*c as usize]);
                total = total.add(term);
            }
            let center = [ul.midpoint(uh), vl.midpoint(vh), tl.midpoint(th)];
            let exact: Rat = p.eval(&center[0].to_rat(), &center[1].to_rat(), &center[2].to_rat());
            prop_assert!(total.contains_rat(&exact));
        }
    }
}
