//! End-to-end assignment: split `B`, place every pole group in order,
//! recover `F` and verify the result.

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::accumulator::{
    ComplexBlockParams, DiagonalBlock, Problem, SchurAccumulator, StepRecord,
};
use crate::assign_complex::assign_complex_group;
use crate::assign_real::assign_real_group;
use crate::error::{AssignError, Result};
use crate::linalg::{qr_split, real_schur_eigvals, svd, Mat};
use crate::metrics::{match_eigenvalues, DEFAULT_ZERO_TOL};
use crate::poles::{Pole, PoleKind, PoleSpec};

/// The open-loop pair `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemPair {
    a: Mat,
    b: Mat,
}

impl SystemPair {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(AssignError::DimensionMismatch(format!(
                "A is {}×{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 || b.ncols() > n {
            return Err(AssignError::DimensionMismatch(format!(
                "B is {}×{}, expected {n}×m with 1 ≤ m ≤ {n}",
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(AssignError::NonFinite("A".into()));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(AssignError::NonFinite("B".into()));
        }
        Ok(SystemPair { a, b })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// `A + BF`.
    pub fn closed_loop(&self, f: &Mat) -> Mat {
        &self.a + &self.b * f
    }
}

/// Dimension of the reachable subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub rank: usize,
    pub n: usize,
}

impl ControllabilityReport {
    pub fn controllable(&self) -> bool {
        self.rank == self.n
    }
}

/// Numerical rank of `[B, AB, …, Aⁿ⁻¹B]`, accumulated block by block with
/// an orthonormal basis so powers of `A` never have to be formed.
///
/// A new direction counts when its component outside the current basis
/// exceeds `tol` relative to `‖A‖_F` (or `‖B‖_F` for the first block).
pub fn controllability_rank(sys: &SystemPair, tol: f64) -> ControllabilityReport {
    let n = sys.states();
    let scale_a = sys.a.norm().max(f64::MIN_POSITIVE);
    let first = svd(&sys.b, Some(tol));
    let r0 = first.numerical_rank;
    let mut basis = first.u.columns(0, r0).into_owned();
    let mut last = basis.clone();
    while basis.ncols() < n && last.ncols() > 0 {
        let mut next = &sys.a * &last;
        for _ in 0..2 {
            let proj = basis.transpose() * &next;
            next -= &basis * proj;
        }
        let dec = svd(&next, None);
        let added = dec
            .singular_values
            .iter()
            .filter(|&&s| s > tol * scale_a)
            .count();
        last = dec.u.columns(0, added).into_owned();
        let k = basis.ncols();
        let mut grown = Mat::zeros(n, k + added);
        grown.columns_mut(0, k).copy_from(&basis);
        grown.columns_mut(k, added).copy_from(&last);
        basis = grown;
    }
    ControllabilityReport {
        rank: basis.ncols().min(n),
        n,
    }
}

/// [`controllability_rank`] as a gate.
pub fn check_controllability(sys: &SystemPair, tol: f64) -> Result<ControllabilityReport> {
    let report = controllability_rank(sys, tol);
    if report.controllable() {
        Ok(report)
    } else {
        Err(AssignError::Uncontrollable {
            rank: report.rank,
            n: report.n,
        })
    }
}

/// What to do when the controllability test fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllabilityGate {
    #[default]
    Error,
    Warn,
}

/// Tolerances of one assignment run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignConfig {
    /// Relative tolerance for every numerical rank decision in the
    /// construction.
    pub rank_tol: f64,
    /// Residual bound relative to `‖A‖_F`.
    pub residual_tol: f64,
    /// Orthogonality bound per state (`‖XᵀX − I‖_F ≤ n·tol`).
    pub orthogonality_tol: f64,
    pub controllability_tol: f64,
    pub controllability: ControllabilityGate,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig {
            rank_tol: 1e-10,
            residual_tol: 1e-9,
            orthogonality_tol: 1e-9,
            controllability_tol: 1e-10,
            controllability: ControllabilityGate::Error,
        }
    }
}

/// Realized block structure of one pole group: sizes `n₁, …, n_l` count
/// columns for a real pole and pairs for a complex one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    pub pole: Pole,
    pub kind: PoleKind,
    pub multiplicity: usize,
    pub sizes: Vec<usize>,
}

impl GroupStructure {
    pub fn max_block(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Residuals and per-step ranks of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖XᵀX − I‖_F`.
    pub orthogonality: f64,
    /// `‖Q₂ᵀ(AX − XT)‖_F`.
    pub residual: f64,
    /// `‖A + BF − XTXᵀ‖_F`.
    pub reconstruction: f64,
    /// Largest matched relative error of `eig(A + BF)` against the targets.
    pub max_pole_error: f64,
    pub steps: Vec<StepRecord>,
}

/// A completed assignment `A + BF = XTXᵀ`.
#[derive(Debug, Clone)]
pub struct AssignmentResult {
    pub f: Mat,
    pub x: Mat,
    pub t: Mat,
    pub groups: Vec<GroupStructure>,
    pub blocks: Vec<DiagonalBlock>,
    pub complex_blocks: Vec<ComplexBlockParams>,
    pub diagnostics: Diagnostics,
}

/// `F = R⁻¹Q₁ᵀ(XTXᵀ − A)`.
pub fn recover_feedback(a: &Mat, q1: &Mat, r: &Mat, x: &Mat, t: &Mat) -> Result<Mat> {
    let scale = r.diagonal().amax();
    if scale == 0.0 || r.diagonal().iter().any(|d| d.abs() <= f64::EPSILON * scale) {
        return Err(AssignError::SingularR);
    }
    let rhs = q1.transpose() * (x * t * x.transpose() - a);
    r.solve_upper_triangular(&rhs).ok_or(AssignError::SingularR)
}

/// Assigns the poles of `spec` to `A + BF`.
pub fn assign(
    sys: &SystemPair,
    spec: &PoleSpec,
    config: &AssignConfig,
) -> Result<AssignmentResult> {
    let n = sys.states();
    if spec.total_real_dimension() != n {
        return Err(AssignError::DimensionMismatch(format!(
            "poles span dimension {}, system has {n} states",
            spec.total_real_dimension()
        )));
    }
    if !(config.rank_tol > 0.0 && config.rank_tol < 1.0) {
        return Err(AssignError::InvalidConfig(format!(
            "rank tolerance {}",
            config.rank_tol
        )));
    }
    match (
        check_controllability(sys, config.controllability_tol),
        config.controllability,
    ) {
        (Ok(_), _) => {}
        (Err(e), ControllabilityGate::Error) => return Err(e),
        (Err(e), ControllabilityGate::Warn) => warn!("{e}; continuing"),
    }

    let qr = qr_split(&sys.b, None)?;
    let prob = Problem::new(sys.a.clone(), qr.q2.clone(), config.rank_tol);
    let mut acc = SchurAccumulator::new(n);
    let mut groups = Vec::with_capacity(spec.groups().len());
    for (gi, g) in spec.groups().iter().enumerate() {
        let sizes = match g.kind {
            PoleKind::Real => assign_real_group(&mut acc, &prob, g.value.re, g.multiplicity, gi)?,
            PoleKind::ComplexPair => {
                assign_complex_group(&mut acc, &prob, g.value.to_complex(), g.multiplicity, gi)?
            }
        };
        groups.push(GroupStructure {
            pole: g.value,
            kind: g.kind,
            multiplicity: g.multiplicity,
            sizes,
        });
    }

    let orthogonality = acc.orthogonality_defect();
    let residual = prob.residual(acc.x(), acc.t());
    let (x, t, blocks, complex_blocks, steps) = acc.into_parts();
    let f = recover_feedback(&sys.a, &qr.q1, &qr.r, &x, &t)?;
    let ac = sys.closed_loop(&f);
    let reconstruction = (&ac - &x * &t * x.transpose()).norm();

    let a_norm = sys.a.norm().max(f64::MIN_POSITIVE);
    if orthogonality > config.orthogonality_tol * n as f64 {
        return Err(AssignError::NumericalDegeneracy(format!(
            "orthogonality defect {orthogonality:.3e}"
        )));
    }
    if residual > config.residual_tol * a_norm {
        return Err(AssignError::NumericalDegeneracy(format!(
            "constraint residual {residual:.3e}"
        )));
    }

    let targets: Vec<Complex64> = spec.expand();
    let max_pole_error = match real_schur_eigvals(&ac) {
        Ok(ev) => match_eigenvalues(&targets, &ev, DEFAULT_ZERO_TOL).max_error(),
        Err(e) => {
            warn!("closed-loop eigenvalues unavailable: {e}");
            f64::INFINITY
        }
    };

    Ok(AssignmentResult {
        f,
        x,
        t,
        groups,
        blocks,
        complex_blocks,
        diagnostics: Diagnostics {
            orthogonality,
            residual,
            reconstruction,
            max_pole_error,
            steps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::PoleSpec;
    use nalgebra::dmatrix;

    #[test]
    fn controllability_examples() {
        let full = SystemPair::new(Mat::zeros(3, 3), Mat::identity(3, 3)).unwrap();
        assert_eq!(controllability_rank(&full, 1e-10).rank, 3);
        let stuck = SystemPair::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![1.0; 0.0]).unwrap();
        assert_eq!(
            check_controllability(&stuck, 1e-10).unwrap_err(),
            AssignError::Uncontrollable { rank: 1, n: 2 }
        );
        let chain = SystemPair::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0]).unwrap();
        assert!(check_controllability(&chain, 1e-10).unwrap().controllable());
    }

    #[test]
    fn identity_reconstruction_gives_zero_feedback() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let b = dmatrix![1.0; 1.0];
        let qr = qr_split(&b, None).unwrap();
        let f = recover_feedback(&a, &qr.q1, &qr.r, &Mat::identity(2, 2), &a).unwrap();
        assert!(f.norm() < 1e-14);
    }

    #[test]
    fn full_input_feedback_is_t() {
        let d = dmatrix![1.0, 2.0; 0.0, 3.0];
        let f = recover_feedback(
            &Mat::zeros(2, 2),
            &Mat::identity(2, 2),
            &Mat::identity(2, 2),
            &Mat::identity(2, 2),
            &d,
        )
        .unwrap();
        assert_eq!(f, d);
    }

    #[test]
    fn double_real_pole_full_input() {
        let sys = SystemPair::new(Mat::zeros(2, 2), Mat::identity(2, 2)).unwrap();
        let spec = PoleSpec::from_real(&[5.0, 5.0]).unwrap();
        let res = assign(&sys, &spec, &AssignConfig::default()).unwrap();
        assert!((&res.f - Mat::identity(2, 2) * 5.0).norm() < 1e-14);
    }

    #[test]
    fn single_input_double_pole_matches_ackermann() {
        let sys = SystemPair::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0]).unwrap();
        let spec = PoleSpec::from_real(&[1.0, 1.0]).unwrap();
        let res = assign(&sys, &spec, &AssignConfig::default()).unwrap();
        assert!((&res.f - dmatrix![-1.0, 2.0]).norm() < 1e-10, "{}", res.f);
        assert_eq!(res.groups[0].sizes, vec![1, 1]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sys = SystemPair::new(Mat::zeros(2, 2), Mat::identity(2, 2)).unwrap();
        let spec = PoleSpec::from_real(&[1.0]).unwrap();
        assert!(matches!(
            assign(&sys, &spec, &AssignConfig::default()),
            Err(AssignError::DimensionMismatch(_))
        ));
        assert!(SystemPair::new(Mat::zeros(2, 3), Mat::identity(2, 2)).is_err());
    }
}
