//! A complex pair of multiplicity 4 on a random 10-state, 3-input system.
//!
//! Prints which construction each pair used and the scaling `δ` of every
//! 2×2 diagonal block; `δ = 1` gives a normal block.

use refined_schur::bench::{gen_complex_repeated, GridPoint, Recipe};
use refined_schur::driver::{assign, AssignConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let point = GridPoint {
        n: 10,
        m: 3,
        a_max: 4,
    };
    let inst = gen_complex_repeated(&point, 7, 0, Recipe::Qr)?;

    let result = assign(&inst.system, &inst.poles, &AssignConfig::default())?;
    for step in &result.diagnostics.steps {
        println!(
            "group {} at column {:>2}: {:?} (state rank {}, coupling {:.3e})",
            step.group, step.start, step.case, step.state_rank, step.coupling_norm_sq
        );
    }
    for blk in &result.complex_blocks {
        println!(
            "block at {:>2}: α = {:+.4}, β = {:+.4}, δ = {:.4}",
            blk.start, blk.alpha, blk.beta, blk.delta
        );
    }
    for g in &result.groups {
        println!("{} x{} -> blocks {:?}", g.pole, g.multiplicity, g.sizes);
    }
    Ok(())
}
