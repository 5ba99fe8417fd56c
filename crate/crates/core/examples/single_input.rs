//! Single-input chain of integrators with a triple real pole.
//!
//! With one input the closed loop can only have a single eigenvector per
//! pole, so the placement splits the group into 1×1 blocks and the
//! computed eigenvalues lose accuracy the way a Jordan block does.

use nalgebra::dmatrix;
use refined_schur::driver::{assign, AssignConfig, SystemPair};
use refined_schur::metrics::{robustness_report, MetricsConfig};
use refined_schur::poles::{build_pole_spec, PoleOptions, RawPole};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
    let b = dmatrix![0.0; 0.0; 1.0];
    let sys = SystemPair::new(a, b)?;
    let spec = build_pole_spec(&[RawPole::new(-1.0, 0.0, 3)], &PoleOptions::default())?;

    let result = assign(&sys, &spec, &AssignConfig::default())?;
    println!("F = {:.6}", result.f);
    println!("T = {:.6}", result.t);
    for g in &result.groups {
        println!(
            "pole {} x{}: block sizes {:?}",
            g.pole, g.multiplicity, g.sizes
        );
    }

    let report = robustness_report(
        sys.a(),
        sys.b(),
        &result.f,
        &spec,
        Some((&result.x, &result.t)),
        &MetricsConfig::default(),
    );
    println!("departure      {:.3e}", report.dep);
    println!("non-diagonal.  {}", report.non_diagonalizable);
    println!("precs          {}", report.precs);
    println!("g_multi        {}", report.g_multi[0].geometric);
    Ok(())
}
