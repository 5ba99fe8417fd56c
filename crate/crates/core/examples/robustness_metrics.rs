//! The robustness measures on hand-made closed loops: a normal matrix, a
//! nearly defective one and an exact Jordan block.

use nalgebra::dmatrix;
use num_complex::Complex64;
use refined_schur::linalg::Mat;
use refined_schur::metrics::{
    departure_from_normality, eigvec_condition, geometric_multiplicity, precs,
};

fn show(name: &str, ac: &Mat, poles: &[Complex64]) {
    let cond = eigvec_condition(ac);
    let p = precs(poles, ac, 1e-12)
        .map(|r| r.precs.to_string())
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{name:<16} dep {:>10.3e}  κ_F {:>10.3e}  defective {:<5}  precs {p:>5}  g_multi(1) {}",
        departure_from_normality(ac, poles),
        cond.value,
        cond.non_diagonalizable,
        geometric_multiplicity(ac, Complex64::new(1.0, 0.0), 1e-8),
    );
}

fn main() {
    let one = Complex64::new(1.0, 0.0);
    show("identity", &Mat::identity(2, 2), &[one, one]);
    show(
        "near-defective",
        &dmatrix![1.0, 1.0; 0.0, 1.0 + 1e-8],
        &[one, one],
    );
    show("jordan", &dmatrix![1.0, 1.0; 0.0, 1.0], &[one, one]);
    let rot = dmatrix![1.0, 2.0; -2.0, 1.0];
    show(
        "rotation",
        &rot,
        &[Complex64::new(1.0, 2.0), Complex64::new(1.0, -2.0)],
    );
}
