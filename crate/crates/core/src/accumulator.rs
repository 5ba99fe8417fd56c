//! The partially built real Schur pair `(X, T)` together with the block
//! bookkeeping the assignment steps need, and the constraint matrices whose
//! null spaces parametrize admissible new columns.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{orthogonality_defect, Field, Mat};
use crate::poles::Pole;

/// Fixed data of one assignment run: `A`, the complement `Q₂` of `range(B)`
/// and the precomputed product `Q₂ᵀA`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: Mat,
    pub q2: Mat,
    q2t_a: Mat,
    q2t: Mat,
    /// Relative tolerance for every numerical rank decision of a run.
    pub rank_tol: f64,
}

impl Problem {
    pub fn new(a: Mat, q2: Mat, rank_tol: f64) -> Self {
        let q2t = q2.transpose();
        let q2t_a = &q2t * &a;
        Problem {
            a,
            q2,
            q2t_a,
            q2t,
            rank_tol,
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of inputs `m` (the complement has `n − m` columns).
    pub fn inputs(&self) -> usize {
        self.a.nrows() - self.q2.ncols()
    }

    /// `‖Q₂ᵀ(AX − XT)‖_F`.
    pub fn residual(&self, x: &Mat, t: &Mat) -> f64 {
        (&self.q2t_a * x - &self.q2t * x * t).norm()
    }
}

/// `[[Q₂ᵀ(A − λI), −Q₂ᵀX_p], [X_qᵀ, 0]]` of shape `(n − m + q) × (n + p)`.
pub fn build_constraint_matrix<T: Field>(
    prob: &Problem,
    lambda: T,
    x_p: &Mat,
    x_q: &Mat,
) -> DMatrix<T> {
    let n = prob.n();
    let nm = prob.q2.ncols();
    let (p, q) = (x_p.ncols(), x_q.ncols());
    let mut out = DMatrix::<T>::zeros(nm + q, n + p);
    for i in 0..nm {
        for j in 0..n {
            out[(i, j)] =
                T::from_real(prob.q2t_a[(i, j)]) - lambda * T::from_real(prob.q2t[(i, j)]);
        }
    }
    if p > 0 {
        let coupling = &prob.q2t * x_p;
        for i in 0..nm {
            for j in 0..p {
                out[(i, n + j)] = T::from_real(-coupling[(i, j)]);
            }
        }
    }
    for i in 0..q {
        for j in 0..n {
            out[(nm + i, j)] = T::from_real(x_q[(j, i)]);
        }
    }
    out
}

/// Real-pole specialization of [`build_constraint_matrix`].
pub fn real_constraint_matrix(prob: &Problem, lambda: f64, x_p: &Mat, x_q: &Mat) -> Mat {
    build_constraint_matrix(prob, lambda, x_p, x_q)
}

/// Complex-pole specialization of [`build_constraint_matrix`].
pub fn complex_constraint_matrix(
    prob: &Problem,
    lambda: Complex64,
    x_p: &Mat,
    x_q: &Mat,
) -> DMatrix<Complex64> {
    build_constraint_matrix(prob, lambda, x_p, x_q)
}

/// One diagonal block `D_kk` of `T`: `λI` for a real pole, or a run of
/// 2×2 blocks `D(δ)` for a complex pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalBlock {
    pub start: usize,
    pub size: usize,
    pub pole: Pole,
}

/// A 2×2 block `[[α, δβ], [−β/δ, α]]` placed at column `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBlockParams {
    pub start: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl ComplexBlockParams {
    pub fn block(&self) -> Mat {
        Mat::from_row_slice(
            2,
            2,
            &[
                self.alpha,
                self.delta * self.beta,
                -self.beta / self.delta,
                self.alpha,
            ],
        )
    }

    /// Contribution `(δ − 1/δ)²β²` to the squared departure from normality.
    pub fn delta_penalty(&self) -> f64 {
        let d = self.delta - 1.0 / self.delta;
        d * d * self.beta * self.beta
    }
}

/// Which construction produced a step's new columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepCase {
    /// Real pole: `count` new columns with diagonal `λI`.
    RealBlock { count: usize },
    /// First complex pair with the paired eigendecomposition.
    ComplexInitial,
    /// Rank ≥ 2, orthonormal real/imaginary parts, `δ = 1`.
    CaseIIIOrthonormal,
    /// Rank ≥ 2 without orthonormal parts: rotation plus free-parameter fit.
    CaseIIIRotated,
    /// Rank 1 with independent real/imaginary parts.
    CaseIV,
    /// New diagonal block opened against the full prefix.
    CaseV,
}

/// Per-step record used for the runtime feasibility checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub group: usize,
    pub case: StepCase,
    /// Column count before the step.
    pub start: usize,
    /// Rows and numerical rank of the full-prefix constraint matrix, when
    /// one was built.
    pub constraint_rows: Option<usize>,
    pub constraint_rank: Option<usize>,
    /// Numerical rank of the state block of the null basis used.
    pub state_rank: usize,
    /// `‖v‖²` of the new coupling columns.
    pub coupling_norm_sq: f64,
    /// Whether a free-parameter Hessian was factorized (Cholesky).
    pub hessian_factorized: Option<bool>,
}

impl StepRecord {
    /// Full row rank of the full-prefix constraint matrix, if checked.
    pub fn constraint_full_rank(&self) -> Option<bool> {
        match (self.constraint_rows, self.constraint_rank) {
            (Some(r), Some(k)) => Some(r == k),
            _ => None,
        }
    }
}

/// Partially built `X` (orthonormal columns) and leading block of `T`.
#[derive(Debug, Clone)]
pub struct SchurAccumulator {
    x: Mat,
    t: Mat,
    blocks: Vec<DiagonalBlock>,
    complex_blocks: Vec<ComplexBlockParams>,
    steps: Vec<StepRecord>,
}

impl SchurAccumulator {
    pub fn new(n: usize) -> Self {
        SchurAccumulator {
            x: Mat::zeros(n, 0),
            t: Mat::zeros(0, 0),
            blocks: Vec::new(),
            complex_blocks: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn columns(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn t(&self) -> &Mat {
        &self.t
    }

    pub fn blocks(&self) -> &[DiagonalBlock] {
        &self.blocks
    }

    pub fn complex_blocks(&self) -> &[ComplexBlockParams] {
        &self.complex_blocks
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// First `p` columns of `X`.
    pub fn prefix(&self, p: usize) -> Mat {
        self.x.columns(0, p).into_owned()
    }

    /// Appends columns `x_new` with coupling `coupling` (rows `0..p` of the
    /// new columns of `T`) and diagonal block `diag`.
    pub fn push(&mut self, x_new: &Mat, coupling: &Mat, diag: &Mat) {
        let r = self.columns();
        let c = x_new.ncols();
        let p = coupling.nrows();
        debug_assert!(p <= r);
        debug_assert_eq!(coupling.ncols(), c);
        debug_assert_eq!(diag.shape(), (c, c));

        let n = self.x.nrows();
        let mut x = Mat::zeros(n, r + c);
        x.columns_mut(0, r).copy_from(&self.x);
        x.columns_mut(r, c).copy_from(x_new);

        let mut t = Mat::zeros(r + c, r + c);
        t.view_mut((0, 0), (r, r)).copy_from(&self.t);
        t.view_mut((0, r), (p, c)).copy_from(coupling);
        t.view_mut((r, r), (c, c)).copy_from(diag);

        self.x = x;
        self.t = t;
    }

    /// Opens a new diagonal block or extends the last one.
    pub fn note_block(&mut self, start: usize, size: usize, pole: Pole, extend: bool) {
        match self.blocks.last_mut() {
            Some(b) if extend && b.pole == pole && b.start + b.size == start => b.size += size,
            _ => self.blocks.push(DiagonalBlock { start, size, pole }),
        }
    }

    pub fn note_complex_block(&mut self, params: ComplexBlockParams) {
        self.complex_blocks.push(params);
    }

    pub fn note_step(&mut self, step: StepRecord) {
        self.steps.push(step);
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.x)
    }

    /// Entries of `T` below its quasi-triangular profile must be zero.
    pub fn below_profile_max(&self) -> f64 {
        let r = self.columns();
        let mut sub_allowed = vec![false; r];
        for cb in &self.complex_blocks {
            sub_allowed[cb.start] = true;
        }
        let mut worst = 0.0f64;
        for j in 0..r {
            for i in j + 1..r {
                if i == j + 1 && sub_allowed[j] {
                    continue;
                }
                worst = worst.max(self.t[(i, j)].abs());
            }
        }
        worst
    }

    pub fn into_parts(
        self,
    ) -> (
        Mat,
        Mat,
        Vec<DiagonalBlock>,
        Vec<ComplexBlockParams>,
        Vec<StepRecord>,
    ) {
        (self.x, self.t, self.blocks, self.complex_blocks, self.steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qr_split, svd};
    use nalgebra::dmatrix;

    fn chain_problem() -> Problem {
        // n = 3, m = 1
        let a = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 1.0, -2.0, 3.0];
        let b = dmatrix![0.0; 0.0; 1.0];
        let qr = qr_split(&b, None).unwrap();
        Problem::new(a, qr.q2, 1e-10)
    }

    #[test]
    fn empty_prefix_is_projected_shift() {
        let prob = chain_problem();
        let empty = Mat::zeros(3, 0);
        let m = real_constraint_matrix(&prob, 2.0, &empty, &empty);
        let expected = prob.q2.transpose() * (&prob.a - Mat::identity(3, 3) * 2.0);
        assert!((m - expected).norm() < 1e-15);
    }

    #[test]
    fn shape_with_prefix() {
        let prob = chain_problem();
        let x = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let m = real_constraint_matrix(&prob, 1.0, &x, &x);
        assert_eq!(m.shape(), (3, 4));
        let mc = complex_constraint_matrix(&prob, Complex64::new(1.0, 1.0), &x, &x);
        assert_eq!(mc.shape(), (3, 4));
        // Full row rank (controllable chain).
        assert_eq!(svd(&m, None).numerical_rank, 3);
    }

    #[test]
    fn push_builds_block_upper_t() {
        let mut acc = SchurAccumulator::new(3);
        let e = Mat::identity(3, 3);
        acc.push(
            &e.columns(0, 2).into_owned(),
            &Mat::zeros(0, 2),
            &(Mat::identity(2, 2) * 4.0),
        );
        acc.push(
            &e.columns(2, 1).into_owned(),
            &dmatrix![1.0; 2.0],
            &dmatrix![7.0],
        );
        assert_eq!(
            acc.t(),
            &dmatrix![4.0, 0.0, 1.0; 0.0, 4.0, 2.0; 0.0, 0.0, 7.0]
        );
        assert_eq!(acc.below_profile_max(), 0.0);
        assert!(acc.orthogonality_defect() < 1e-15);
    }

    #[test]
    fn delta_block_eigen_structure() {
        let p = ComplexBlockParams {
            start: 0,
            alpha: 0.5,
            beta: 1.5,
            delta: 2.0,
        };
        let blk = p.block();
        // trace 2α, determinant α² + β²
        assert!((blk.trace() - 1.0).abs() < 1e-15);
        assert!((blk.determinant() - (0.25 + 2.25)).abs() < 1e-12);
        assert!((p.delta_penalty() - 1.5f64.powi(2) * 2.25).abs() < 1e-12);
    }
}
