mod common;

use nalgebra::DVector;
use refined_schur::linalg::{
    apply_j, hamiltonian_paired_eig, null_basis, null_basis_with_rank, qr_split,
    real_schur_eigvals, svd, CMat, Mat, EPS,
};

use common::{complex_matrix, source};

fn symmetric(src: &mut refined_schur::bench::NormalSource, n: usize) -> Mat {
    let g = src.matrix(n, n);
    (&g + g.transpose()) * 0.5
}

#[test]
fn null_basis_random_real_and_complex() {
    let mut src = source(50);
    for trial in 0..60 {
        let (p, q) = (1 + trial % 7, 2 + (trial * 3) % 9);
        // Low rank on every third trial.
        let m = if trial % 3 == 0 && p > 1 {
            src.matrix(p, 1) * src.matrix(1, q)
        } else {
            src.matrix(p, q)
        };
        let sigma1 = svd(&m, None).sigma_max();
        let (s, rank) = null_basis_with_rank(&m, None);
        assert_eq!(s.ncols(), q - rank);
        let dims = p.max(q) as f64;
        assert!((&m * &s).norm() <= 10.0 * EPS * dims * sigma1.max(1.0));
        let cols = s.ncols().max(1) as f64;
        assert!(
            (s.transpose() * &s - Mat::identity(s.ncols(), s.ncols())).norm() <= 10.0 * EPS * cols
        );

        let mc = complex_matrix(&mut src, p, q);
        let sigma1 = svd(&mc, None).sigma_max();
        let s = null_basis(&mc, None);
        assert_eq!(s.ncols(), q.saturating_sub(p));
        assert!((&mc * &s).norm() <= 10.0 * EPS * dims * sigma1);
        let k = s.ncols();
        assert!((s.adjoint() * &s - CMat::identity(k, k)).norm() <= 10.0 * EPS * cols);
    }
}

#[test]
fn null_basis_of_wide_random_matrix() {
    let mut src = source(51);
    let m = src.matrix(5, 8);
    let s = null_basis(&m, None);
    assert_eq!(s.ncols(), 3);
    let sigma1 = svd(&m, None).sigma_max();
    for j in 0..3 {
        assert!((&m * s.column(j)).norm() <= 10.0 * EPS * 8.0 * sigma1);
    }
}

#[test]
fn qr_split_random_tolerances() {
    let mut src = source(52);
    for (n, m) in [(3, 1), (5, 2), (8, 8), (13, 6)] {
        let b = src.matrix(n, m);
        let qr = qr_split(&b, None).unwrap();
        let mut q = Mat::zeros(n, n);
        q.columns_mut(0, m).copy_from(&qr.q1);
        q.columns_mut(m, n - m).copy_from(&qr.q2);
        let tol = 10.0 * EPS * n as f64;
        assert!((q.transpose() * &q - Mat::identity(n, n)).norm() <= tol);
        assert!((&qr.q1 * &qr.r - &b).norm() <= tol * b.norm());
        assert!((qr.q2.transpose() * &b).norm() <= tol * b.norm());
    }
}

#[test]
fn jacobi_random_pairs() {
    let mut src = source(53);
    for trial in 0..1000 {
        let len = 2 + trial % 9;
        let x = DVector::from_fn(len, |_, _| src.next());
        let y = DVector::from_fn(len, |_, _| src.next()) * (0.01 + (trial % 5) as f64);
        let (c, s) = refined_schur::linalg::jacobi_orthogonalize(&x, &y, 1e-15).unwrap();
        let xt = &x * c - &y * s;
        let yt = &x * s + &y * c;
        assert!(
            xt.dot(&yt).abs() <= 1e-12 * x.norm() * y.norm(),
            "trial {trial}"
        );
        assert!((c * c + s * s - 1.0).abs() <= 4.0 * EPS);
    }
}

#[test]
fn jacobi_unit_and_diagonal_values() {
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let y = DVector::from_vec(vec![1.0, 1.0]);
    let (c, s) = refined_schur::linalg::jacobi_orthogonalize(&x, &y, 1e-15).unwrap();
    assert!((c - 0.850651).abs() < 1e-6 && (s - 0.525731).abs() < 1e-6);
    let xt = &x * c - &y * s;
    let yt = &x * s + &y * c;
    assert!(xt.dot(&yt).abs() <= 1e-14);
}

fn check_paired(a: &Mat, b: &Mat) {
    let n = a.nrows();
    let (u, theta) = hamiltonian_paired_eig(a, b).unwrap();
    assert!(theta.windows(2).all(|w| w[0] >= w[1]) && theta.iter().all(|&t| t >= 0.0));
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(b);
    h.view_mut((n, 0), (n, n)).copy_from(b);
    h.view_mut((n, n), (n, n)).copy_from(&(-a));
    let mut k = Mat::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(b);
    k.view_mut((0, n), (n, n)).copy_from(&(-a));
    k.view_mut((n, 0), (n, n)).copy_from(&(-a));
    k.view_mut((n, n), (n, n)).copy_from(&(-b));
    let mut d = Mat::zeros(2 * n, 2 * n);
    let mut off = Mat::zeros(2 * n, 2 * n);
    for (j, &t) in theta.iter().enumerate() {
        d[(j, j)] = t;
        d[(n + j, n + j)] = -t;
        off[(j, n + j)] = -t;
        off[(n + j, j)] = -t;
    }
    let tol = 100.0 * EPS * n as f64;
    assert!((&u * d * u.transpose() - &h).norm() <= tol * h.norm().max(1.0));
    assert!((&u * off * u.transpose() - &k).norm() <= tol * k.norm().max(1.0));
    assert!((u.transpose() * &u - Mat::identity(2 * n, 2 * n)).norm() <= tol);
    for j in 0..n {
        let paired = apply_j(&u.column(j).into_owned());
        assert!((paired - u.column(n + j)).norm() <= tol);
    }
}

#[test]
fn hamiltonian_random_symmetric() {
    let mut src = source(54);
    for n in 1..=6 {
        for _ in 0..10 {
            let a = symmetric(&mut src, n);
            let b = symmetric(&mut src, n);
            check_paired(&a, &b);
        }
    }
}

#[test]
fn hamiltonian_degenerate_clusters() {
    // A = I, B = 0 gives θ = 1 with multiplicity n.
    for n in 1..=4 {
        check_paired(&Mat::identity(n, n), &Mat::zeros(n, n));
    }
    let mut src = source(55);
    let q = src.matrix(3, 3).qr().q();
    let a = &q * Mat::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 0.5])) * q.transpose();
    check_paired(&a, &Mat::zeros(3, 3));
}

#[test]
fn eigenvalues_of_random_matrices_close_under_conjugation() {
    let mut src = source(56);
    for n in [2, 5, 9, 13] {
        let m = src.matrix(n, n);
        let ev = real_schur_eigvals(&m).unwrap();
        assert_eq!(ev.len(), n);
        let trace: f64 = ev.iter().map(|z| z.re).sum();
        assert!((trace - m.trace()).abs() <= 1e-12 * m.norm() * n as f64);
        for z in &ev {
            if z.im != 0.0 {
                assert!(ev.iter().any(|w| (w - z.conj()).norm() <= 1e-12 * m.norm()));
            }
        }
    }
    let companion = Mat::from_row_slice(2, 2, &[2.0, -1.0, 1.0, 0.0]);
    for z in real_schur_eigvals(&companion).unwrap() {
        assert!((z - 1.0).norm() < 1e-7);
    }
}
