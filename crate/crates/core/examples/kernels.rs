//! The dense building blocks: null space, QR split of `B`, Jacobi
//! orthogonalization of a vector pair and the paired Hamiltonian
//! eigendecomposition.

use nalgebra::{dmatrix, dvector};
use refined_schur::linalg::{
    apply_j, hamiltonian_paired_eig, jacobi_orthogonalize, null_basis, qr_split, svd,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = dmatrix![1.0, 2.0, 3.0; 2.0, 4.0, 6.0];
    let s = null_basis(&m, None);
    println!(
        "null basis of a rank-1 2×3 matrix: {} columns, ‖MS‖ = {:.1e}",
        s.ncols(),
        (&m * &s).norm()
    );

    let b = dmatrix![1.0, 0.0; 1.0, 1.0; 0.0, 1.0];
    let qr = qr_split(&b, None)?;
    println!(
        "‖Q₂ᵀB‖ = {:.1e}, R = {:.4}",
        (qr.q2.transpose() * &b).norm(),
        qr.r
    );

    let x = dvector![1.0, 0.0, 1.0];
    let y = dvector![1.0, 1.0, 0.0];
    let (c, s) = jacobi_orthogonalize(&x, &y, 1e-14)?;
    let (p, q) = (&x * c - &y * s, &x * s + &y * c);
    println!(
        "rotation (c, s) = ({c:.6}, {s:.6}), pᵀq = {:.1e}",
        p.dot(&q)
    );

    let a = dmatrix![2.0, 1.0; 1.0, 0.0];
    let bb = dmatrix![0.0, 0.5; 0.5, 1.0];
    let (u, theta) = hamiltonian_paired_eig(&a, &bb)?;
    println!("θ = {theta:.6?}");
    let u1 = u.column(0).into_owned();
    println!("‖u₃ − J·u₁‖ = {:.1e}", (u.column(2) - apply_j(&u1)).norm());
    println!(
        "singular values of U: {:.6?}",
        svd(&u, None).singular_values
    );
    Ok(())
}
