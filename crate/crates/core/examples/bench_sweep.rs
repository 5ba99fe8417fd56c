//! A small seeded sweep, run sequentially and in parallel; the two CSV
//! renderings are identical.

use refined_schur::bench::{run_bench, to_csv, BenchConfig, BenchKind, Recipe};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = BenchConfig {
        kind: BenchKind::Real,
        n: vec![7, 9],
        m: vec![2, 3],
        a_max: vec![2, 3],
        trials: 10,
        seed: 42,
        recipe: Recipe::Qr,
        parallel: true,
    };
    let parallel = to_csv(&run_bench(&config)?);
    config.parallel = false;
    let sequential = to_csv(&run_bench(&config)?);
    print!("{parallel}");
    assert_eq!(parallel, sequential);
    eprintln!("parallel and sequential output match");
    Ok(())
}
