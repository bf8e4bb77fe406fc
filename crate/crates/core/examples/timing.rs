//! Wall-clock timing of the exact solvers on random Simon instances.
//!
//! `cargo run --release -p exact-simon --example timing -- 12 5`

use std::time::Instant;

use exact_simon::oracle::{random_simon_instance, SimonOracle};
use exact_simon::simon::{qp_solve_optimized, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let n = args.first().copied().unwrap_or(10);
    let seeds = args.get(1).copied().unwrap_or(5) as u64;
    let opts = SolverOptions::default();
    let t = Instant::now();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_simon_instance(n, &mut rng).expect("instance");
        let out = qp_solve_optimized(&o, &mut rng, &opts).expect("solve");
        assert_eq!(&out.basis, o.hidden_basis());
        println!("seed {seed}: {} queries", o.query_count());
    }
    println!("n={n}: {:.3} s per solve", t.elapsed().as_secs_f64() / seeds as f64);
}
