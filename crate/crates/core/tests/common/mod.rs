#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use refined_schur::bench::NormalSource;
use refined_schur::driver::{AssignmentResult, SystemPair};
use refined_schur::linalg::{real_schur_eigvals, CMat, Mat};
use refined_schur::metrics::{match_eigenvalues, DEFAULT_ZERO_TOL};
use refined_schur::poles::{build_pole_spec, PoleKind, PoleOptions, PoleOrder, PoleSpec, RawPole};

pub fn source(seed: u64) -> NormalSource {
    NormalSource::new(seed, 0xfeed)
}

/// Orthonormal basis of the range of a random `rows × cols` matrix.
pub fn orthonormal(src: &mut NormalSource, rows: usize, cols: usize) -> Mat {
    src.matrix(rows, cols).qr().q()
}

pub fn complex_matrix(src: &mut NormalSource, rows: usize, cols: usize) -> CMat {
    let re = src.matrix(rows, cols);
    let im = src.matrix(rows, cols);
    CMat::from_fn(rows, cols, |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

pub fn complex_orthonormal(src: &mut NormalSource, rows: usize, cols: usize) -> CMat {
    complex_matrix(src, rows, cols).qr().q()
}

/// `[S₁; S₂]` with orthonormal columns and prescribed singular values of
/// `S₁` (padded with zeros up to `d`). Needs `p ≥ d`.
pub fn split_kernel(
    src: &mut NormalSource,
    n: usize,
    p: usize,
    d: usize,
    sigma: &[f64],
) -> (CMat, CMat) {
    assert!(p >= d && sigma.len() <= n.min(d));
    let u = complex_orthonormal(src, n, d.min(n));
    let w = complex_orthonormal(src, p, d);
    let v = complex_orthonormal(src, d, d);
    let mut s = vec![0.0; d];
    s[..sigma.len()].copy_from_slice(sigma);
    let vh = v.adjoint();
    let mut s1 = CMat::zeros(n, d);
    let mut s2 = CMat::zeros(p, d);
    for k in 0..d {
        let row = vh.row(k);
        if k < u.ncols() && s[k] > 0.0 {
            s1 += u.column(k) * row * Complex64::new(s[k], 0.0);
        }
        s2 += w.column(k) * row * Complex64::new((1.0 - s[k] * s[k]).sqrt(), 0.0);
    }
    (s1, s2)
}

/// Largest matched pole error of the closed loop.
pub fn matched_error(spec: &PoleSpec, ac: &Mat) -> f64 {
    match real_schur_eigvals(ac) {
        Ok(ev) => match_eigenvalues(&spec.expand(), &ev, DEFAULT_ZERO_TOL).max_error(),
        Err(_) => f64::INFINITY,
    }
}

/// Same poles with group `first` moved to the front.
pub fn with_group_first(spec: &PoleSpec, first: usize) -> PoleSpec {
    let mut order: Vec<usize> = vec![first];
    order.extend((0..spec.groups().len()).filter(|&i| i != first));
    let raw: Vec<RawPole> = order
        .iter()
        .map(|&i| {
            let g = spec.groups()[i];
            RawPole::new(g.value.re, g.value.im, g.multiplicity)
        })
        .collect();
    let opts = PoleOptions {
        order: PoleOrder::AsGiven,
        conjugate_pairs: true,
        ..PoleOptions::default()
    };
    build_pole_spec(&raw, &opts).expect("reordered spec")
}

/// Index of the group with the largest multiplicity of the given kind.
pub fn repeated_group(spec: &PoleSpec, kind: PoleKind) -> usize {
    (0..spec.groups().len())
        .filter(|&i| spec.groups()[i].kind == kind)
        .max_by_key(|&i| spec.groups()[i].multiplicity)
        .expect("group of the requested kind")
}

/// One completed assignment kept for the suite-wide checks.
pub struct Run {
    pub label: String,
    pub sys: SystemPair,
    pub spec: PoleSpec,
    pub result: AssignmentResult,
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// First-order rounding bound on the relative error of the closed-loop
/// eigenvalue nearest `target`: `cond(λ)·n·ε·‖A_c‖_F / |λ|`, with
/// `cond(λ) = ‖x‖‖y‖/|yᴴx|` from the eigenvector matrix and its inverse.
pub fn rounding_bound(ac: &Mat, target: Complex64) -> f64 {
    let Ok((values, vectors)) = refined_schur::linalg::eigen_decomposition(ac) else {
        return f64::INFINITY;
    };
    let Some(inv) = vectors.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let k = (0..values.len())
        .min_by(|&i, &j| {
            (values[i] - target)
                .norm()
                .total_cmp(&(values[j] - target).norm())
        })
        .expect("nonempty spectrum");
    let cond = vectors.column(k).norm() * inv.row(k).norm();
    let n = ac.nrows() as f64;
    cond * n * f64::EPSILON * ac.norm() / target.norm().max(DEFAULT_ZERO_TOL)
}
