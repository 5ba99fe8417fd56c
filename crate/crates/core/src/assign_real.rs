//! Placement of a real pole of multiplicity `a`: repeated greedy blocks
//! `λI_{n_k}`, each minimizing the Frobenius norm of its coupling into the
//! already placed columns.

use crate::accumulator::{real_constraint_matrix, Problem, SchurAccumulator, StepCase, StepRecord};
use crate::error::{AssignError, Result};
use crate::linalg::{null_basis_with_rank, svd, Mat, SvdResult};
use crate::poles::Pole;

/// Optimal new columns for one block.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub x: Mat,
    pub v: Mat,
    pub objective: f64,
}

/// Minimizes `‖S₂Z‖_F` subject to `(S₁Z)ᵀ(S₁Z) = I_c`, assuming the columns
/// of `[S₁; S₂]` are orthonormal.
///
/// The minimizer is `Z = V[:, :c]·diag(1/σ₁, …, 1/σ_c)`; the returned state
/// block uses the left singular vectors directly, so it is orthonormal to
/// rounding regardless of `σ_c`.
pub fn solve_block_optimization(
    s1: &Mat,
    s2: &Mat,
    count: usize,
    rank_tol: Option<f64>,
) -> Result<BlockSolution> {
    let d = s1.ncols();
    if s2.ncols() != d {
        return Err(AssignError::DimensionMismatch(format!(
            "state block has {d} columns, coupling block {}",
            s2.ncols()
        )));
    }
    block_from_svd(&svd(s1, rank_tol), s2, count)
}

fn block_from_svd(dec: &SvdResult<f64>, s2: &Mat, count: usize) -> Result<BlockSolution> {
    if count == 0 || count > dec.numerical_rank {
        return Err(AssignError::InsufficientRank {
            requested: count,
            rank: dec.numerical_rank,
        });
    }
    let mut z = dec.v.columns(0, count).into_owned();
    for (j, &s) in dec.singular_values.iter().take(count).enumerate() {
        z.column_mut(j).scale_mut(1.0 / s);
    }
    let x = dec.u.columns(0, count).into_owned();
    let v = s2 * &z;
    let objective = dec.singular_values[..count]
        .iter()
        .map(|s| 1.0 / (s * s))
        .sum::<f64>()
        - count as f64;
    Ok(BlockSolution { x, v, objective })
}

/// Places `a` copies of the real pole `lambda` after the current prefix
/// and returns the realized block sizes `n₁, …, n_l`.
pub fn assign_real_group(
    acc: &mut SchurAccumulator,
    prob: &Problem,
    lambda: f64,
    a: usize,
    group: usize,
) -> Result<Vec<usize>> {
    let n = prob.n();
    let mut sizes = Vec::new();
    let mut placed = 0;
    while placed < a {
        let r = acc.columns();
        let x = acc.x().clone();
        let m = real_constraint_matrix(prob, lambda, &x, &x);
        let rows = m.nrows();
        let (s, m_rank) = null_basis_with_rank(&m, Some(prob.rank_tol));
        let s1 = s.rows(0, n).into_owned();
        let s2 = s.rows(n, r).into_owned();
        let dec = svd(&s1, Some(prob.rank_tol));
        let state_rank = dec.numerical_rank;
        if state_rank == 0 {
            return Err(AssignError::FeasibilityBreakdown(format!(
                "no admissible direction for pole {lambda} after {r} columns"
            )));
        }
        let c = (a - placed).min(state_rank);
        let sol = block_from_svd(&dec, &s2, c)?;
        acc.push(&sol.x, &sol.v, &(Mat::identity(c, c) * lambda));
        acc.note_block(r, c, Pole::real(lambda), false);
        acc.note_step(StepRecord {
            group,
            case: StepCase::RealBlock { count: c },
            start: r,
            constraint_rows: Some(rows),
            constraint_rank: Some(m_rank),
            state_rank,
            coupling_norm_sq: sol.v.norm_squared(),
            hessian_factorized: None,
        });
        sizes.push(c);
        placed += c;
    }
    Ok(sizes)
}
