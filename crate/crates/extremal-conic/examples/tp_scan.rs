use extremal_conic::bounds::kissing_three_point;
fn main() {
    for (n, ds) in [(4u32, vec![6u32, 7, 8]), (3, vec![9, 10]), (5, vec![8]), (6, vec![8])] {
        for d in ds {
            let start = std::time::Instant::now();
            match kissing_three_point(n, d) {
                Ok(r) => println!("n={n} d={d}: value={:.6} [{:?}]", r.value, start.elapsed()),
                Err(e) => println!("n={n} d={d}: ERROR {e} [{:?}]", start.elapsed()),
            }
        }
    }
}
