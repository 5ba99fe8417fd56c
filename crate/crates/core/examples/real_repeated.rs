//! A real pole of multiplicity 5 on a random 9-state, 3-input system.
//!
//! At most `m` independent eigenvectors can share one eigenvalue, so the
//! group becomes blocks of sizes 3 and 2 and the geometric multiplicity
//! of the closed loop is 3.

use refined_schur::bench::{gen_real_repeated, GridPoint, Recipe};
use refined_schur::driver::{assign, AssignConfig};
use refined_schur::metrics::{robustness_report, MetricsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let point = GridPoint {
        n: 9,
        m: 3,
        a_max: 5,
    };
    let inst = gen_real_repeated(&point, 2024, 0, Recipe::Qr)?;
    let (sys, spec) = (&inst.system, &inst.poles);

    let result = assign(sys, spec, &AssignConfig::default())?;
    for g in &result.groups {
        println!(
            "{:>24} x{} -> blocks {:?}",
            g.pole.to_string(),
            g.multiplicity,
            g.sizes
        );
    }
    let d = &result.diagnostics;
    println!(
        "orthogonality {:.2e}  residual {:.2e}  reconstruction {:.2e}",
        d.orthogonality, d.residual, d.reconstruction
    );

    let report = robustness_report(
        sys.a(),
        sys.b(),
        &result.f,
        spec,
        Some((&result.x, &result.t)),
        &MetricsConfig::default(),
    );
    println!(
        "‖F‖_F = {:.4}, dep = {:.4}, precs = {}",
        report.f_norm, report.dep, report.precs
    );
    for g in &report.g_multi {
        println!(
            "{:>24}: algebraic {} geometric {}",
            g.pole.to_string(),
            g.algebraic,
            g.geometric
        );
    }
    Ok(())
}
