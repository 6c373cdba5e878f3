use extremal_conic::conic::{self, BlockCoeff, ConeBlock, ConicProgram, Constraint, SolveOptions};
use extremal_conic::graphs::Graph;
use extremal_conic::lasserre::{enumerate_independent_sets, lasserre_bound};
use std::collections::HashMap;

fn build(g: &Graph, t: u32) -> ConicProgram {
    let sets_t = enumerate_independent_sets(g, t).unwrap();
    let sets_2t = enumerate_independent_sets(g, 2 * t).unwrap();
    let index_2t: HashMap<&[u32], usize> = sets_2t.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut patterns = vec![Vec::new(); sets_2t.len()];
    for i in 0..sets_t.len() {
        for j in i..sets_t.len() {
            let mut u: Vec<u32> = sets_t[i].iter().chain(sets_t[j].iter()).copied().collect();
            u.sort_unstable(); u.dedup();
            if let Some(&s) = index_2t.get(u.as_slice()) { patterns[s].push((i, j)); }
        }
    }
    let n_t = sets_t.len();
    let m = sets_2t.len() - 1;
    let mut constraints = Vec::new();
    for (s_idx, s) in sets_2t.iter().enumerate().skip(1) {
        let entries: Vec<(usize, usize, f64)> = patterns[s_idx].iter().map(|&(i, j)| (i, j, 1.0)).collect();
        let rhs = if s.len() == 1 { -1.0 } else { 0.0 };
        constraints.push(Constraint {
            coeffs: vec![
                BlockCoeff { block: 0, entries },
                BlockCoeff { block: 1, entries: vec![(s_idx - 1, s_idx - 1, 1.0)] },
            ],
            rhs,
        });
    }
    ConicProgram {
        blocks: vec![ConeBlock::Psd { size: n_t }, ConeBlock::Nonneg { len: m }],
        objective: vec![BlockCoeff { block: 0, entries: vec![(0, 0, -1.0)] }],
        constraints,
    }
}

fn main() {
    for t in [1u32, 2] {
        let g = Graph::cycle(5);
        let p = build(&g, t);
        let report = conic::solve(&p, &SolveOptions::default()).unwrap();
        println!("example t={t}: status={:?} value={}", report.status, -report.dual_value);
        match lasserre_bound(&g, t) {
            Ok(r) => println!("library t={t}: value={}", r.value),
            Err(e) => println!("library t={t}: ERR {e}"),
        }
    }
}
