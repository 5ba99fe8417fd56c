//! Placement of a complex conjugate pair `{λ, λ̄}` of multiplicity `a`.
//!
//! Each step adds two real columns `x_a, x_b` and a 2×2 block
//! `D(δ) = [[α, δβ], [−β/δ, α]]`. A pair either joins the current diagonal
//! block (coupling only into the columns before that block) or opens a new
//! one (coupling into every earlier column).

use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;

use crate::accumulator::{
    complex_constraint_matrix, ComplexBlockParams, Problem, SchurAccumulator, StepCase, StepRecord,
};
use crate::error::{AssignError, Result};
use crate::linalg::{
    hamiltonian_paired_eig, imag_part, jacobi_orthogonalize, null_basis, null_basis_with_rank,
    real_part, svd, CMat, Mat, SvdResult, EPS,
};
use crate::poles::Pole;

type CVec = DVector<Complex64>;

/// Relative gap below which leading singular values count as one cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// Tolerance on `|uᵀu| / ‖u‖²` for the orthonormal real/imaginary test.
const PAIRING_TOL: f64 = 1e-10;

/// The quadratic `f(y) = ζ + gᵀy + yᵀHy` minimized over the free kernel
/// directions.
#[derive(Debug, Clone)]
pub struct PairQuadratic {
    pub h: Mat,
    pub g: DVector<f64>,
    pub zeta: f64,
}

impl PairQuadratic {
    pub fn eval(&self, y: &DVector<f64>) -> f64 {
        self.zeta + self.g.dot(y) + y.dot(&(&self.h * y))
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.g + (&self.h * y) * 2.0
    }
}

/// New columns for one conjugate pair.
#[derive(Debug, Clone)]
pub struct PairPlacement {
    pub xa: DVector<f64>,
    pub xb: DVector<f64>,
    pub va: DVector<f64>,
    pub vb: DVector<f64>,
    pub delta: f64,
    pub case: StepCase,
    /// Present when free parameters were optimized.
    pub quadratic: Option<PairQuadratic>,
    /// The optimal free parameters `y` (empty without free directions).
    pub y: DVector<f64>,
}

impl PairPlacement {
    pub fn objective(&self) -> f64 {
        self.va.norm_squared() + self.vb.norm_squared()
    }

    fn columns(&self) -> (Mat, Mat) {
        let n = self.xa.len();
        let p = self.va.len();
        let mut x = Mat::zeros(n, 2);
        x.set_column(0, &self.xa);
        x.set_column(1, &self.xb);
        let mut v = Mat::zeros(p, 2);
        v.set_column(0, &self.va);
        v.set_column(1, &self.vb);
        (x, v)
    }
}

/// Whether `Re u` and `Im u` are independent: `σ₂ > tol·σ₁` for `[Re u, Im u]`.
pub fn independent_parts(u: &CVec, rank_tol: f64) -> bool {
    let n = u.len();
    let mut pair = Mat::zeros(n, 2);
    pair.set_column(0, &u.map(|z| z.re));
    pair.set_column(1, &u.map(|z| z.im));
    svd(&pair, Some(rank_tol)).numerical_rank == 2
}

/// Whether some phase of `u` has orthogonal real and imaginary parts of
/// equal norm; equivalently `uᵀu = 0`.
pub fn orthonormal_parts(u: &CVec, tol: f64) -> bool {
    let quad: Complex64 = u.iter().map(|z| z * z).sum();
    quad.norm() <= tol * u.norm_squared()
}

/// Coefficients `z` with `u = S·z` satisfying `Re u ⊥ Im u` and
/// `‖Re u‖ = ‖Im u‖ = 1`, for `S` with orthonormal columns.
///
/// Returns `None` for a single column that does not already satisfy the
/// condition.
pub fn paired_coefficients(s: &CMat) -> Result<Option<CVec>> {
    let d = s.ncols();
    if d == 0 {
        return Ok(None);
    }
    let s1 = real_part(s);
    let s2 = imag_part(s);
    let p = s1.transpose() * &s2 + s2.transpose() * &s1;
    let q = s1.transpose() * &s1 - s2.transpose() * &s2;
    let p = (&p + p.transpose()) * 0.5;
    let q = (&q + q.transpose()) * 0.5;

    let (y1, y2) = if p.norm() <= PAIRING_TOL && q.norm() <= PAIRING_TOL {
        let mut e1 = DVector::zeros(d);
        e1[0] = 1.0;
        (e1.clone(), e1)
    } else {
        if d < 2 {
            return Ok(None);
        }
        let (u, theta) = hamiltonian_paired_eig(&p, &q)?;
        if theta[0] <= 0.0 {
            return Ok(None);
        }
        let mu = (theta[1] / theta[0]).sqrt();
        let y = u.column(0) * mu + u.column(1) - u.column(d) * mu + u.column(d + 1);
        (y.rows(0, d).into_owned(), y.rows(d, d).into_owned())
    };
    let z = CVec::from_fn(d, |i, _| Complex64::new(y1[i], y2[i]));
    let u = s * &z;
    let nu = u.map(|c| c.re).norm();
    if nu == 0.0 {
        return Ok(None);
    }
    Ok(Some(z.unscale(nu)))
}

fn split_complex(v: &CVec) -> (DVector<f64>, DVector<f64>) {
    (v.map(|z| z.re), v.map(|z| z.im))
}

/// Orthonormal pair from a paired state vector (`δ = 1`).
fn paired_placement(u: &CVec, w: &CVec, case: StepCase) -> PairPlacement {
    let (xa, xb) = split_complex(u);
    let (va, vb) = split_complex(w);
    PairPlacement {
        xa,
        xb,
        va,
        vb,
        delta: 1.0,
        case,
        quadratic: None,
        y: DVector::zeros(0),
    }
}

/// Jacobi-rotated pair from state vector `u` with coupling `w₀` and free
/// coupling directions `W` (columns whose state part vanishes).
pub fn rotated_pair(
    u: &CVec,
    w0: &CVec,
    free: &CMat,
    rank_tol: f64,
    case: StepCase,
) -> Result<PairPlacement> {
    if !independent_parts(u, rank_tol) {
        return Err(AssignError::DependentRealImag);
    }
    let (re, im) = split_complex(u);
    let (c, s) = jacobi_orthogonalize(&re, &im, EPS).map_err(|e| match e {
        AssignError::DependentVectors => AssignError::DependentRealImag,
        other => other,
    })?;
    let xt_a = &re * c - &im * s;
    let xt_b = &re * s + &im * c;
    let (na, nb) = (xt_a.norm(), xt_b.norm());
    let delta = na / nb;

    let (w0r, w0i) = split_complex(w0);
    let a0 = &w0r * c - &w0i * s;
    let b0 = &w0r * s + &w0i * c;
    let (ia2, ib2) = (1.0 / (na * na), 1.0 / (nb * nb));

    let f = free.ncols();
    let p = w0.len();
    let mut y = DVector::zeros(2 * f);
    let mut quadratic = None;
    let mut w = w0.clone();
    if f > 0 {
        let wr = real_part(free);
        let wi = imag_part(free);
        let mut y1 = Mat::zeros(p, 2 * f);
        let mut y2 = Mat::zeros(p, 2 * f);
        y1.columns_mut(0, f).copy_from(&wr);
        y1.columns_mut(f, f).copy_from(&(-&wi));
        y2.columns_mut(0, f).copy_from(&wi);
        y2.columns_mut(f, f).copy_from(&wr);
        let a1 = &y1 * c - &y2 * s;
        let b1 = &y1 * s + &y2 * c;
        let h = (a1.transpose() * &a1) * ia2 + (b1.transpose() * &b1) * ib2;
        let h = (&h + h.transpose()) * 0.5;
        let g = (a1.transpose() * &a0 * ia2 + b1.transpose() * &b0 * ib2) * 2.0;
        let zeta = a0.norm_squared() * ia2 + b0.norm_squared() * ib2;
        let chol = Cholesky::new(h.clone()).ok_or_else(|| {
            AssignError::NumericalDegeneracy(
                "free-parameter Hessian is not positive definite".into(),
            )
        })?;
        y = chol.solve(&g) * -0.5;
        let eta = CVec::from_fn(f, |i, _| Complex64::new(y[i], y[f + i]));
        w += free * eta;
        quadratic = Some(PairQuadratic { h, g, zeta });
    }

    let (wr, wi) = split_complex(&w);
    let va = (&wr * c - &wi * s) / na;
    let vb = (&wr * s + &wi * c) / nb;
    Ok(PairPlacement {
        xa: xt_a / na,
        xb: xt_b / nb,
        va,
        vb,
        delta,
        case,
        quadratic,
        y,
    })
}

/// Kernel state block of rank ≥ 2.
///
/// A repeated leading singular value is paired directly (`δ = 1`); a
/// simple one is used as is when its parts are already orthonormal, and
/// otherwise goes through [`rotated_pair`] with the kernel directions that
/// have no state part as free parameters.
pub fn place_pair_case3(s1: &CMat, s2: &CMat, rank_tol: f64) -> Result<PairPlacement> {
    case3_from_svd(&svd(s1, Some(rank_tol)), s2, rank_tol)
}

fn case3_from_svd(dec: &SvdResult<Complex64>, s2: &CMat, rank_tol: f64) -> Result<PairPlacement> {
    let d = dec.v.ncols();
    let rank = dec.numerical_rank;
    if rank < 2 {
        return Err(AssignError::InsufficientRank { requested: 2, rank });
    }
    let sv = &dec.singular_values;
    let cluster = sv[..rank]
        .iter()
        .take_while(|&&s| s >= sv[0] * (1.0 - CLUSTER_TOL))
        .count();
    if cluster >= 2 {
        let ucl = dec.u.columns(0, cluster).into_owned();
        if let Some(z) = paired_coefficients(&ucl)? {
            let u = &ucl * &z;
            let mut coef = CVec::zeros(d);
            for j in 0..cluster {
                coef += dec.v.column(j) * (z[j] / sv[j]);
            }
            let w = s2 * coef;
            return Ok(paired_placement(&u, &w, StepCase::CaseIIIOrthonormal));
        }
    }

    let u1: CVec = dec.u.column(0).into_owned();
    if orthonormal_parts(&u1, PAIRING_TOL) {
        let root2 = std::f64::consts::SQRT_2;
        let w = s2 * dec.v.column(0) * Complex64::new(root2 / sv[0], 0.0);
        let u = u1 * Complex64::new(root2, 0.0);
        return Ok(paired_placement(&u, &w, StepCase::CaseIIIOrthonormal));
    }

    let free = s2 * dec.v.columns(rank, d - rank);
    let root = std::f64::consts::FRAC_1_SQRT_2;
    let candidates = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(root, 0.0), Complex64::new(root, 0.0)],
        [Complex64::new(root, 0.0), Complex64::new(0.0, root)],
    ];
    for [c1, c2] in candidates {
        let u = dec.u.column(0) * c1 + dec.u.column(1) * c2;
        let coef = dec.v.column(0) * (c1 / sv[0]) + dec.v.column(1) * (c2 / sv[1]);
        let w0 = s2 * coef;
        match rotated_pair(&u, &w0, &free, rank_tol, StepCase::CaseIIIRotated) {
            Err(AssignError::DependentRealImag) => continue,
            other => return other,
        }
    }
    Err(AssignError::DependentRealImag)
}

/// Kernel state block of rank 1: rotate the unique state direction and fit
/// the remaining kernel directions.
pub fn place_pair_case4(s1: &CMat, s2: &CMat, rank_tol: f64) -> Result<PairPlacement> {
    case4_from_svd(&svd(s1, Some(rank_tol)), s2, rank_tol)
}

fn case4_from_svd(dec: &SvdResult<Complex64>, s2: &CMat, rank_tol: f64) -> Result<PairPlacement> {
    let d = dec.v.ncols();
    if dec.numerical_rank == 0 {
        return Err(AssignError::InsufficientRank {
            requested: 1,
            rank: 0,
        });
    }
    let sigma = dec.singular_values[0];
    let u: CVec = dec.u.column(0).into_owned();
    let w0 = s2 * dec.v.column(0) * Complex64::new(1.0 / sigma, 0.0);
    let free = s2 * dec.v.columns(1, d - 1);
    rotated_pair(&u, &w0, &free, rank_tol, StepCase::CaseIV)
}

/// Null basis of a constraint matrix split into state and coupling rows,
/// plus the rank report of the matrix itself.
struct Kernel {
    state: SvdResult<Complex64>,
    s2: CMat,
    rows: usize,
    rank: usize,
    state_rank: usize,
}

fn kernel(prob: &Problem, lambda: Complex64, acc: &SchurAccumulator, p: usize) -> Kernel {
    let n = prob.n();
    let xq = acc.x();
    let xp = acc.prefix(p);
    let m = complex_constraint_matrix(prob, lambda, &xp, xq);
    let rows = m.nrows();
    let (s, rank) = null_basis_with_rank(&m, Some(prob.rank_tol));
    let s1 = s.rows(0, n).into_owned();
    let s2 = s.rows(n, p).into_owned();
    let state = svd(&s1, Some(prob.rank_tol));
    let state_rank = state.numerical_rank;
    Kernel {
        state,
        s2,
        rows,
        rank,
        state_rank,
    }
}

/// First pair of a run: the kernel of `Q₂ᵀ(A − λI)` has orthonormal state
/// columns, so the pairing yields `δ = 1` whenever it has two or more
/// dimensions.
pub fn initial_complex_pair(prob: &Problem, lambda: Complex64) -> Result<PairPlacement> {
    let n = prob.n();
    let empty = Mat::zeros(n, 0);
    let m = complex_constraint_matrix(prob, lambda, &empty, &empty);
    let s = null_basis(&m, Some(prob.rank_tol));
    if s.ncols() == 0 {
        return Err(AssignError::FeasibilityBreakdown(format!(
            "no admissible direction for pole {lambda}"
        )));
    }
    if let Some(z) = paired_coefficients(&s)? {
        let u = &s * z;
        return Ok(paired_placement(
            &u,
            &CVec::zeros(0),
            StepCase::ComplexInitial,
        ));
    }
    // One-dimensional kernel without orthonormal parts: accept δ ≠ 1.
    let u: CVec = s.column(0).into_owned();
    rotated_pair(
        &u,
        &CVec::zeros(0),
        &CMat::zeros(0, 0),
        prob.rank_tol,
        StepCase::ComplexInitial,
    )
    .map_err(|e| match e {
        AssignError::DependentRealImag => AssignError::UnsupportedConfiguration(
            "single kernel direction with dependent real and imaginary parts".into(),
        ),
        other => other,
    })
}

/// Opens a new diagonal block: couples into the full prefix, where a
/// kernel direction with independent parts always exists for a
/// controllable pair.
pub fn place_pair_case5(
    prob: &Problem,
    lambda: Complex64,
    acc: &SchurAccumulator,
) -> Result<(PairPlacement, StepRecord)> {
    let l = acc.columns();
    let k = kernel(prob, lambda, acc, l);
    let placement = match k.state_rank {
        0 => Err(AssignError::FeasibilityBreakdown(format!(
            "no admissible direction for pole {lambda} after {l} columns"
        ))),
        1 => case4_from_svd(&k.state, &k.s2, prob.rank_tol).map_err(|e| match e {
            AssignError::DependentRealImag => AssignError::FeasibilityBreakdown(format!(
                "kernel direction for pole {lambda} has dependent real and imaginary parts"
            )),
            other => other,
        }),
        _ => case3_from_svd(&k.state, &k.s2, prob.rank_tol),
    }?;
    let record = StepRecord {
        group: 0,
        case: StepCase::CaseV,
        start: l,
        constraint_rows: Some(k.rows),
        constraint_rank: Some(k.rank),
        state_rank: k.state_rank,
        coupling_norm_sq: placement.objective(),
        hessian_factorized: placement.quadratic.as_ref().map(|_| true),
    };
    Ok((placement, record))
}

/// Places `a` copies of `{λ, λ̄}` (with `Im λ > 0`) after the current
/// prefix and returns the realized block sizes in pairs.
pub fn assign_complex_group(
    acc: &mut SchurAccumulator,
    prob: &Problem,
    lambda: Complex64,
    a: usize,
    group: usize,
) -> Result<Vec<usize>> {
    if lambda.im == 0.0 {
        return Err(AssignError::InvalidPole(format!("{lambda} is real")));
    }
    let lambda = if lambda.im < 0.0 {
        lambda.conj()
    } else {
        lambda
    };
    let pole = Pole::new(lambda.re, lambda.im);
    let r0 = acc.columns();
    let mut block_start = r0;
    let mut sizes: Vec<usize> = Vec::new();

    for i in 0..a {
        let l = acc.columns();
        let (placement, record, new_block) = if i == 0 && r0 == 0 {
            let pl = initial_complex_pair(prob, lambda)?;
            let rec = StepRecord {
                group,
                case: pl.case,
                start: 0,
                constraint_rows: None,
                constraint_rank: None,
                state_rank: 0,
                coupling_norm_sq: 0.0,
                hessian_factorized: None,
            };
            (pl, rec, true)
        } else if i == 0 {
            let (pl, mut rec) = place_pair_case5(prob, lambda, acc)?;
            rec.case = pl.case;
            (pl, rec, true)
        } else {
            let k = kernel(prob, lambda, acc, block_start);
            let attempt = match k.state_rank {
                0 => None,
                1 => match case4_from_svd(&k.state, &k.s2, prob.rank_tol) {
                    Ok(pl) => Some(pl),
                    Err(AssignError::DependentRealImag) => None,
                    Err(e) => return Err(e),
                },
                _ => Some(case3_from_svd(&k.state, &k.s2, prob.rank_tol)?),
            };
            match attempt {
                Some(pl) => {
                    let rec = StepRecord {
                        group,
                        case: pl.case,
                        start: l,
                        constraint_rows: None,
                        constraint_rank: None,
                        state_rank: k.state_rank,
                        coupling_norm_sq: pl.objective(),
                        hessian_factorized: pl.quadratic.as_ref().map(|_| true),
                    };
                    (pl, rec, false)
                }
                None => {
                    let (pl, rec) = place_pair_case5(prob, lambda, acc)?;
                    (pl, rec, true)
                }
            }
        };

        if new_block {
            block_start = l;
        }
        let (x, v) = placement.columns();
        let params = ComplexBlockParams {
            start: l,
            alpha: lambda.re,
            beta: lambda.im,
            delta: placement.delta,
        };
        acc.push(&x, &v, &params.block());
        acc.note_block(l, 2, pole, !new_block);
        acc.note_complex_block(params);
        let mut record = record;
        record.group = group;
        record.coupling_norm_sq = placement.objective();
        acc.note_step(record);
        if new_block {
            sizes.push(1);
        } else if let Some(last) = sizes.last_mut() {
            *last += 1;
        }
    }
    Ok(sizes)
}
