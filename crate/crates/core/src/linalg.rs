//! Dense kernels: QR split of the input matrix, SVD with numerical rank,
//! orthonormal null bases, the Jacobi 2×2 orthogonalization, the paired
//! eigendecomposition of symmetric Hamiltonian-structured matrices and an
//! eigenvalue routine for verification.
//!
//! Everything above this module talks to nalgebra only through these
//! functions and the [`Mat`] / [`CMat`] aliases.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{AssignError, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub const EPS: f64 = f64::EPSILON;

/// Scalars the kernels are generic over: `f64` and `Complex64`.
pub trait Field: ComplexField<RealField = f64> + faer::traits::ComplexField + Copy {}
impl Field for f64 {}
impl Field for Complex64 {}

/// Singular value decomposition `M = U·diag(σ)·V*`.
///
/// `u` is thin (`rows × min(rows, cols)`), `v` is always the full
/// `cols × cols` unitary factor so trailing columns span the null space.
#[derive(Debug, Clone)]
pub struct SvdResult<T: Field> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<T>,
    pub numerical_rank: usize,
}

impl<T: Field> SvdResult<T> {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

/// Default relative rank tolerance `max(rows, cols)·ε`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * EPS
}

/// Numerical rank of a non-increasing singular value list at a relative
/// tolerance: `#{σᵢ > tol·σ₁}`.
pub fn rank_from_singular_values(sv: &[f64], rel_tol: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// SVD with descending singular values and a full right factor.
///
/// `rank_tol` is relative to σ₁; `None` selects [`default_rank_tol`].
pub fn svd<T: Field>(m: &DMatrix<T>, rank_tol: Option<f64>) -> SvdResult<T> {
    let (rows, cols) = m.shape();
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(rows, cols));
    let k = rows.min(cols);
    if k == 0 {
        return SvdResult {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DMatrix::identity(cols, cols),
            numerical_rank: 0,
        };
    }

    let fm = faer::Mat::<T>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = match fm.svd() {
        Ok(d) => d,
        Err(_) => {
            // Non-convergence is reported as rank zero with NaN factors.
            return SvdResult {
                u: DMatrix::from_element(rows, k, T::from_real(f64::NAN)),
                singular_values: vec![f64::NAN; k],
                v: DMatrix::from_element(cols, cols, T::from_real(f64::NAN)),
                numerical_rank: 0,
            };
        }
    };
    let (fu, fs, fv) = (dec.U(), dec.S().column_vector(), dec.V());
    let u_all = DMatrix::<T>::from_fn(rows, rows, |i, j| fu[(i, j)]);
    let v_all = DMatrix::<T>::from_fn(cols, cols, |i, j| fv[(i, j)]);
    let sv_all: Vec<f64> = (0..k).map(|i| ComplexField::real(fs[i])).collect();

    let mut order: Vec<usize> = (0..sv_all.len()).collect();
    order.sort_by(|&i, &j| sv_all[j].total_cmp(&sv_all[i]).then(i.cmp(&j)));

    let mut u = DMatrix::zeros(rows, k);
    let mut v = DMatrix::zeros(cols, cols);
    let mut sv = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        sv.push(sv_all[src]);
        u.column_mut(dst).copy_from(&u_all.column(src));
        v.column_mut(dst).copy_from(&v_all.column(src));
    }
    for j in k..cols {
        v.column_mut(j).copy_from(&v_all.column(j));
    }
    let numerical_rank = rank_from_singular_values(&sv, tol);
    SvdResult {
        u,
        singular_values: sv,
        v,
        numerical_rank,
    }
}

/// Orthonormal basis of the null space of `M` (real or complex), taken from
/// the trailing right singular vectors. The result may have zero columns.
pub fn null_basis<T: Field>(m: &DMatrix<T>, rank_tol: Option<f64>) -> DMatrix<T> {
    null_basis_with_rank(m, rank_tol).0
}

/// [`null_basis`] together with the numerical rank of `M`.
pub fn null_basis_with_rank<T: Field>(
    m: &DMatrix<T>,
    rank_tol: Option<f64>,
) -> (DMatrix<T>, usize) {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return (DMatrix::identity(cols, cols), 0);
    }
    let dec = svd(m, rank_tol);
    let r = dec.numerical_rank;
    (dec.v.columns(r, cols - r).into_owned(), r)
}

/// The QR split `B = Q₁R` with `[Q₁ Q₂]` orthogonal.
#[derive(Debug, Clone)]
pub struct QrSplit {
    pub q1: Mat,
    pub q2: Mat,
    pub r: Mat,
}

/// QR decomposition of a full-column-rank `n × m` matrix, returning the
/// range basis `Q₁`, its orthogonal complement `Q₂` and the square factor `R`.
pub fn qr_split(b: &Mat, rank_tol: Option<f64>) -> Result<QrSplit> {
    let (n, m) = b.shape();
    if m == 0 || n < m {
        return Err(AssignError::DimensionMismatch(format!(
            "input matrix must satisfy n >= m >= 1, got {n}x{m}"
        )));
    }
    let sv = svd(b, rank_tol);
    if sv.numerical_rank < m {
        return Err(AssignError::RankDeficientInput {
            rank: sv.numerical_rank,
            needed: m,
        });
    }
    // Householder QR of [B 0] yields a square orthogonal Q whose trailing
    // columns complete the range of B.
    let mut padded = Mat::zeros(n, n);
    padded.view_mut((0, 0), (n, m)).copy_from(b);
    let qr = padded.qr();
    let q = qr.q();
    let r_full = qr.r();
    Ok(QrSplit {
        q1: q.columns(0, m).into_owned(),
        q2: q.columns(m, n - m).into_owned(),
        r: r_full.view((0, 0), (m, m)).upper_triangle(),
    })
}

/// Rotation `(c, s)` such that `c·x − s·y` and `s·x + c·y` are orthogonal.
///
/// Returns the identity rotation when `|xᵀy| ≤ tol·‖x‖‖y‖`.
pub fn jacobi_orthogonalize(x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(AssignError::DimensionMismatch(format!(
            "vector lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    let mut pair = Mat::zeros(x.len(), 2);
    pair.set_column(0, x);
    pair.set_column(1, y);
    if svd(&pair, None).numerical_rank < 2 {
        return Err(AssignError::DependentVectors);
    }
    let rho1 = x.norm_squared();
    let rho2 = y.norm_squared();
    let gamma = x.dot(y);
    if gamma.abs() <= tol * (rho1 * rho2).sqrt() {
        return Ok((1.0, 0.0));
    }
    let tau = (rho2 - rho1) / (2.0 * gamma);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    Ok((c, t * c))
}

/// Applies `J = [0 −I; I 0]` to a vector of even length.
pub fn apply_j(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len() / 2;
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        out[i] = -u[n + i];
        out[n + i] = u[i];
    }
    out
}

/// Paired eigendecomposition `[A B; B −A] = U·diag(Θ, −Θ)·Uᵀ` with
/// `u_{n+j} = J·u_j` and `θ₁ ≥ … ≥ θₙ ≥ 0`.
///
/// The same `U` also gives `[B −A; −A −B] = U·[0 −Θ; −Θ 0]·Uᵀ`.
pub fn hamiltonian_paired_eig(a: &Mat, b: &Mat) -> Result<(Mat, Vec<f64>)> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(AssignError::DimensionMismatch(
            "paired eigendecomposition needs two square blocks of equal size".into(),
        ));
    }
    for m in [a, b] {
        let asym = (m - m.transpose()).norm();
        if asym > 10.0 * EPS * m.norm().max(f64::MIN_POSITIVE) {
            return Err(AssignError::NotSymmetric { asymmetry: asym });
        }
    }
    if n == 0 {
        return Ok((Mat::zeros(0, 0), Vec::new()));
    }

    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(b);
    h.view_mut((n, 0), (n, n)).copy_from(b);
    h.view_mut((n, n), (n, n)).copy_from(&(-a));
    // Exact symmetrization before the solver.
    let h = (&h + h.transpose()) * 0.5;

    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let scale = h.norm().max(f64::MIN_POSITIVE);
    let zero_tol = 100.0 * EPS * (2 * n) as f64 * scale;

    // Strictly positive eigenvalues pair with distinct negative ones, so
    // their eigenvectors and the J-images are orthogonal automatically.
    let positive = order
        .iter()
        .take(n)
        .take_while(|&&i| eig.eigenvalues[i] > zero_tol)
        .count();

    let mut basis: Vec<DVector<f64>> = order[..positive]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    // The (near-)zero eigenspace is J-invariant; pick half of it so that the
    // chosen vectors and their J-images stay mutually orthogonal.
    let middle: Vec<DVector<f64>> = order[positive..2 * n - positive]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    for cand in middle {
        if basis.len() == n {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for w in &basis {
                let jw = apply_j(w);
                v -= w * w.dot(&v);
                v -= &jw * jw.dot(&v);
            }
        }
        let nv = v.norm();
        if nv > 0.5 {
            basis.push(v / nv);
        }
    }
    if basis.len() != n {
        return Err(AssignError::NumericalDegeneracy(
            "could not complete the paired eigenbasis".into(),
        ));
    }

    let mut u = Mat::zeros(2 * n, 2 * n);
    let mut theta = Vec::with_capacity(n);
    for (j, col) in basis.iter().enumerate() {
        u.set_column(j, col);
        u.set_column(n + j, &apply_j(col));
        // Rayleigh quotient keeps θ consistent with the chosen vector.
        theta.push((col.dot(&(&h * col))).max(0.0));
    }
    Ok((u, theta))
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn real_schur_eigvals(m: &Mat) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(AssignError::DimensionMismatch(
            "eigenvalues need a square matrix".into(),
        ));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(AssignError::NonFinite("eigenvalue input".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m)
        .eigenvalues()
        .map_err(|_| AssignError::ConvergenceFailure)
}

/// Eigenvalues and unit-norm eigenvectors (as columns) of a real matrix.
pub fn eigen_decomposition(m: &Mat) -> Result<(Vec<Complex64>, CMat)> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(AssignError::DimensionMismatch(
            "eigenvectors need a square matrix".into(),
        ));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(AssignError::NonFinite("eigenvector input".into()));
    }
    let dec = to_faer(m)
        .eigen()
        .map_err(|_| AssignError::ConvergenceFailure)?;
    let (u, s) = (dec.U(), dec.S().column_vector());
    let values = (0..n).map(|i| s[i]).collect();
    let mut x = CMat::from_fn(n, n, |i, j| u[(i, j)]);
    for mut col in x.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col.unscale_mut(nrm);
        }
    }
    Ok((values, x))
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Converts a real matrix to its complex counterpart.
pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real parts of a complex matrix.
pub fn real_part(m: &CMat) -> Mat {
    m.map(|z| z.re)
}

/// Imaginary parts of a complex matrix.
pub fn imag_part(m: &CMat) -> Mat {
    m.map(|z| z.im)
}

/// Frobenius norm of `XᵀX − I`.
pub fn orthogonality_defect(x: &Mat) -> f64 {
    let k = x.ncols();
    (x.transpose() * x - Mat::identity(k, k)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn qr_split_unit_column() {
        let b = dmatrix![1.0; 0.0];
        let qr = qr_split(&b, None).unwrap();
        assert!((qr.r[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((qr.q1[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(qr.q2[(0, 0)].abs() < 1e-15);
        assert!((qr.q2[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qr_split_square_identity_has_empty_complement() {
        let b = Mat::identity(3, 3);
        let qr = qr_split(&b, None).unwrap();
        assert_eq!(qr.q2.shape(), (3, 0));
        assert!(orthogonality_defect(&qr.q1) < 1e-14);
        let det: f64 = (0..3).map(|i| qr.r[(i, i)]).product();
        assert!((det.abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qr_split_three_four() {
        let b = dmatrix![3.0; 4.0];
        let qr = qr_split(&b, None).unwrap();
        // Gram–Schmidt by hand: q = b/5, R = 5 up to sign.
        let r = qr.r[(0, 0)];
        assert!((r.abs() - 5.0).abs() < 1e-14);
        assert!((qr.q1[(0, 0)] - 3.0 / r).abs() < 1e-15);
        assert!((qr.q1[(1, 0)] - 4.0 / r).abs() < 1e-15);
        assert!((qr.q2.transpose() * &b).norm() < 1e-14);
        assert!((&qr.q1 * &qr.r - &b).norm() < 1e-14);
    }

    #[test]
    fn qr_split_rejects_rank_deficient() {
        let b = dmatrix![1.0, 2.0; 2.0, 4.0; 0.0, 0.0];
        assert!(matches!(
            qr_split(&b, None),
            Err(AssignError::RankDeficientInput { rank: 1, needed: 2 })
        ));
    }

    #[test]
    fn null_basis_axis_kernel() {
        let m = dmatrix![1.0, 0.0; 0.0, 0.0];
        let s: Mat = null_basis(&m, None);
        assert_eq!(s.ncols(), 1);
        assert!(s[(0, 0)].abs() < 1e-15);
        assert!((s[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn null_basis_of_zero_map_is_everything() {
        let m = Mat::zeros(2, 3);
        let s = null_basis(&m, None);
        assert_eq!(s.shape(), (3, 3));
        assert!(orthogonality_defect(&s) < 1e-14);
    }

    #[test]
    fn null_basis_complex() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let m = CMat::from_row_slice(1, 2, &[one, i]);
        let s = null_basis(&m, None);
        assert_eq!(s.ncols(), 1);
        assert!((&m * &s).norm() < 1e-15);
        assert!((s.adjoint() * &s)[(0, 0)].re - 1.0 < 1e-15);
    }

    #[test]
    fn svd_sorted_and_reconstructs() {
        let m = dmatrix![1.0, 2.0, 0.0; 0.0, 3.0, 4.0];
        let d = svd(&m, None);
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(d.v.shape(), (3, 3));
        let k = d.singular_values.len();
        let sig = Mat::from_diagonal(&DVector::from_vec(d.singular_values.clone()));
        let recon = &d.u * sig * d.v.columns(0, k).transpose();
        assert!((recon - &m).norm() < 1e-14);
    }

    #[test]
    fn jacobi_already_orthogonal() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 2.0]);
        assert_eq!(jacobi_orthogonalize(&x, &y, 1e-14).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn jacobi_unit_and_diagonal() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let (c, s) = jacobi_orthogonalize(&x, &y, 1e-14).unwrap();
        assert!((c - 0.850_650_808_352_039_9).abs() < 1e-6);
        assert!((s - 0.525_731_112_119_133_6).abs() < 1e-6);
        let xt = &x * c - &y * s;
        let yt = &x * s + &y * c;
        assert!(xt.dot(&yt).abs() < 1e-14);
    }

    #[test]
    fn jacobi_equal_norm_pair() {
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let (c, s) = jacobi_orthogonalize(&x, &y, 1e-14).unwrap();
        let xt = &x * c - &y * s;
        let yt = &x * s + &y * c;
        assert!(xt.dot(&yt).abs() < 1e-14);
    }

    #[test]
    fn jacobi_rejects_dependent() {
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let y = DVector::from_vec(vec![2.0, 4.0]);
        assert_eq!(
            jacobi_orthogonalize(&x, &y, 1e-14),
            Err(AssignError::DependentVectors)
        );
    }

    #[test]
    fn hamiltonian_zero_blocks() {
        let z = Mat::zeros(2, 2);
        let (u, theta) = hamiltonian_paired_eig(&z, &z).unwrap();
        assert!(theta.iter().all(|&t| t.abs() < 1e-15));
        assert!(orthogonality_defect(&u) < 1e-13);
        for j in 0..2 {
            let paired = apply_j(&u.column(j).into_owned());
            assert!((paired - u.column(2 + j)).norm() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_diagonal_case() {
        let a = Mat::identity(1, 1);
        let b = Mat::zeros(1, 1);
        let (u, theta) = hamiltonian_paired_eig(&a, &b).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-15);
        // u₁ = ±e₁, u₂ = J u₁ = ±e₂
        assert!((u[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((u[(1, 1)] - u[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_rejects_asymmetric() {
        let a = dmatrix![1.0, 2.0; 0.0, 1.0];
        let b = Mat::zeros(2, 2);
        assert!(matches!(
            hamiltonian_paired_eig(&a, &b),
            Err(AssignError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eigvals_diagonal_and_rotation() {
        let d = Mat::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let mut ev: Vec<f64> = real_schur_eigvals(&d)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[2] - 3.0).abs() < 1e-14);

        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        let ev = real_schur_eigvals(&rot).unwrap();
        assert!(ev
            .iter()
            .all(|z| z.re.abs() < 1e-14 && (z.im.abs() - 1.0).abs() < 1e-14));
        assert!((ev[0].im + ev[1].im).abs() < 1e-14);
    }

    #[test]
    fn eigvals_double_root_companion() {
        // s² − 2s + 1 has the double root 1.
        let c = dmatrix![0.0, 1.0; -1.0, 2.0];
        for z in real_schur_eigvals(&c).unwrap() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-7);
        }
    }
}
