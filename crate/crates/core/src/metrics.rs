//! Robustness and accuracy measures of a closed-loop matrix: departure
//! from normality, eigenvector conditioning, pole accuracy and geometric
//! multiplicity.

use std::fmt;

use num_complex::Complex64;
use ordered_float::OrderedFloat;
use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::accumulator::ComplexBlockParams;
use crate::linalg::{eigen_decomposition, real_schur_eigvals, svd, to_complex, CMat, Mat, EPS};
use crate::poles::{Pole, PoleSpec};

/// Poles with modulus at or below this use absolute error.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Default relative rank tolerance for geometric multiplicities.
pub const DEFAULT_GMULT_TOL: f64 = 1e-8;

/// `√(‖A_c‖_F² − Σ|λ|²)`, clamped at zero.
pub fn departure_from_normality(ac: &Mat, poles: &[Complex64]) -> f64 {
    let sum: f64 = poles.iter().map(|z| z.norm_sqr()).sum();
    (ac.norm_squared() - sum).max(0.0).sqrt()
}

/// [`departure_from_normality`] against the expanded pole specification.
pub fn departure_for_spec(ac: &Mat, spec: &PoleSpec) -> f64 {
    departure_from_normality(ac, &spec.expand())
}

fn complex_schur_t(ac: &Mat) -> Option<CMat> {
    let n = ac.nrows();
    let cm = to_complex(ac);
    // The iteration stalls at a deflation threshold of ε on many
    // nonnormal inputs; dropped subdiagonals of 64ε·|h| are far below any
    // departure worth reporting.
    let schur = [64.0, 1024.0]
        .iter()
        .find_map(|k| nalgebra::Schur::try_new(cm.clone(), k * EPS, 1000 * n.max(1)))?;
    let (_, t) = schur.unpack();
    t.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then_some(t)
}

fn strict_upper_sq(t: &CMat) -> f64 {
    let mut sum = 0.0;
    for j in 0..t.ncols() {
        for i in 0..j {
            sum += t[(i, j)].norm_sqr();
        }
    }
    sum
}

/// Henrici departure `‖N‖_F` from a complex Schur form `A_c = Q(D + N)Qᴴ`,
/// i.e. measured against the computed eigenvalues. A rounding
/// perturbation `E` moves it by `O(‖E‖)`. `None` when the Schur iteration
/// does not converge.
pub fn schur_departure(ac: &Mat) -> Option<f64> {
    complex_schur_t(ac).map(|t| strict_upper_sq(&t).sqrt())
}

/// [`departure_from_normality`] evaluated through a Schur form:
/// `‖A_c‖² − Σ|λ|² = ‖N‖² + (Σ|t_ii|² − Σ|λ|²)`.
///
/// The diagonal mismatch is dropped when it is within the rounding level
/// `64·n·ε·‖A_c‖²`, so normal matrices report departures at rounding
/// level instead of `√ε·‖A_c‖`; above that level it is kept, so clusters
/// that the eigensolver splits are still measured against `poles`.
pub fn departure(ac: &Mat, poles: &[Complex64]) -> f64 {
    let Some(t) = complex_schur_t(ac) else {
        return departure_from_normality(ac, poles);
    };
    let n = ac.nrows();
    let diag: f64 = (0..n).map(|i| t[(i, i)].norm_sqr()).sum();
    let target: f64 = poles.iter().map(|z| z.norm_sqr()).sum();
    let mismatch = diag - target;
    let floor = 64.0 * n as f64 * EPS * ac.norm_squared();
    let mismatch = if mismatch.abs() <= floor {
        0.0
    } else {
        mismatch
    };
    (strict_upper_sq(&t) + mismatch).max(0.0).sqrt()
}

/// `√(‖N‖_F² + Σ(δ − 1/δ)²β²)` where `N` is `T` with its 1×1 and 2×2
/// diagonal blocks removed.
pub fn departure_from_blocks(t: &Mat, complex_blocks: &[ComplexBlockParams]) -> f64 {
    let mut n = t.clone();
    for i in 0..n.nrows() {
        n[(i, i)] = 0.0;
    }
    let mut penalty = 0.0;
    for cb in complex_blocks {
        let s = cb.start;
        n[(s, s + 1)] = 0.0;
        n[(s + 1, s)] = 0.0;
        penalty += cb.delta_penalty();
    }
    (n.norm_squared() + penalty).sqrt()
}

/// Error of a computed eigenvalue against a target: relative, or absolute
/// when the target is within `zero_tol` of zero.
pub fn pole_error(target: Complex64, computed: Complex64, zero_tol: f64) -> f64 {
    let abs = (target - computed).norm();
    if target.norm() <= zero_tol {
        abs
    } else {
        abs / target.norm()
    }
}

/// Pairing of targets with computed eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMatching {
    /// `assignment[i]` is the computed index matched to target `i`.
    pub assignment: Vec<usize>,
    /// Error of each target under the matching.
    pub errors: Vec<f64>,
}

impl EigenMatching {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Perfect matching that first minimizes the largest error and then the
/// total error among matchings attaining it.
pub fn match_eigenvalues(
    targets: &[Complex64],
    computed: &[Complex64],
    zero_tol: f64,
) -> EigenMatching {
    assert_eq!(targets.len(), computed.len(), "matching needs equal counts");
    let n = targets.len();
    if n == 0 {
        return EigenMatching {
            assignment: Vec::new(),
            errors: Vec::new(),
        };
    }
    let cost: Vec<Vec<f64>> = targets
        .iter()
        .map(|&t| {
            computed
                .iter()
                .map(|&c| pole_error(t, c, zero_tol))
                .collect()
        })
        .collect();

    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let feasible = |limit: f64| {
        let w = Matrix::from_fn(n, n, |(i, j)| if cost[i][j] <= limit { 0i64 } else { 1 });
        kuhn_munkres_min(&w).0 == 0
    };
    // Smallest level admitting a perfect matching.
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let limit = levels[lo];

    let forbidden = 1e300 / n as f64;
    let w = Matrix::from_fn(n, n, |(i, j)| {
        let c = cost[i][j];
        OrderedFloat(if c <= limit { c } else { forbidden })
    });
    let (_, assignment) = kuhn_munkres_min(&w);
    let errors = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .collect();
    EigenMatching { assignment, errors }
}

/// Slack on `log₁₀` so errors a few ulps above a power of ten keep its
/// exponent.
const PRECS_SLACK: f64 = 1e-6;

/// Decimal exponent of the worst pole error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precs {
    /// Every pole was reproduced exactly.
    Exact,
    Exponent(i32),
}

impl Precs {
    pub fn from_error(max_error: f64) -> Precs {
        if max_error == 0.0 {
            Precs::Exact
        } else {
            Precs::Exponent((max_error.log10() - PRECS_SLACK).ceil() as i32)
        }
    }

    /// Numeric value with `Exact` mapped to `−∞`.
    pub fn as_f64(self) -> f64 {
        match self {
            Precs::Exact => f64::NEG_INFINITY,
            Precs::Exponent(e) => e as f64,
        }
    }
}

impl fmt::Display for Precs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precs::Exact => write!(f, "exact"),
            Precs::Exponent(e) => write!(f, "{e}"),
        }
    }
}

impl Serialize for Precs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Precs::Exact => s.serialize_str("exact"),
            Precs::Exponent(e) => s.serialize_i32(*e),
        }
    }
}

impl<'de> Deserialize<'de> for Precs {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(e) => Ok(Precs::Exponent(e)),
            Raw::Text(t) if t == "exact" => Ok(Precs::Exact),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "unexpected precs value {t:?}"
            ))),
        }
    }
}

/// Pole accuracy of a computed spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecsReport {
    pub precs: Precs,
    pub matching: EigenMatching,
}

/// Matches the eigenvalues of `ac` to the expanded targets and reports the
/// worst error exponent. Returns `None` if the eigenvalue iteration fails.
pub fn precs(targets: &[Complex64], ac: &Mat, zero_tol: f64) -> Option<PrecsReport> {
    let computed = real_schur_eigvals(ac).ok()?;
    Some(precs_from_eigenvalues(targets, &computed, zero_tol))
}

pub fn precs_from_eigenvalues(
    targets: &[Complex64],
    computed: &[Complex64],
    zero_tol: f64,
) -> PrecsReport {
    let matching = match_eigenvalues(targets, computed, zero_tol);
    PrecsReport {
        precs: Precs::from_error(matching.max_error()),
        matching,
    }
}

/// `n − rank(A_c − λI)` with rank tolerance `tol·σ₁`.
pub fn geometric_multiplicity(ac: &Mat, lambda: Complex64, tol: f64) -> usize {
    let n = ac.nrows();
    if n == 0 {
        return 0;
    }
    let rank = if lambda.im == 0.0 {
        let shifted = ac - Mat::identity(n, n) * lambda.re;
        svd(&shifted, Some(tol)).numerical_rank
    } else {
        let shifted = to_complex(ac) - CMat::identity(n, n) * lambda;
        svd(&shifted, Some(tol)).numerical_rank
    };
    n - rank
}

/// Frobenius condition number of the unit-column eigenvector matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigvecCondition {
    pub value: f64,
    /// Set when `κ·ε` exceeds [`DEFECTIVE_LEVEL`] (numerically defective).
    pub non_diagonalizable: bool,
}

/// Eigenvector solvers perturb exactly repeated eigenvalues by a few ulps,
/// so an exact Jordan block reports `κ` near `1/(cε)` with small `c`.
pub const DEFECTIVE_LEVEL: f64 = 0.1;

/// `‖X‖_F·‖X⁻¹‖_F` for unit-norm eigenvector columns `X`; infinite when
/// `X` is singular.
pub fn eigvec_condition(ac: &Mat) -> EigvecCondition {
    let n = ac.nrows();
    if n == 0 {
        return EigvecCondition {
            value: 1.0,
            non_diagonalizable: false,
        };
    }
    let value = match eigen_decomposition(ac) {
        Ok((_, x)) => match x.clone().try_inverse() {
            Some(inv) => x.norm() * inv.norm(),
            None => f64::INFINITY,
        },
        Err(_) => f64::INFINITY,
    };
    let value = if value.is_finite() {
        value
    } else {
        f64::INFINITY
    };
    EigvecCondition {
        value,
        non_diagonalizable: value * EPS > DEFECTIVE_LEVEL,
    }
}

/// Algebraic and geometric multiplicity of one pole group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMultiplicity {
    pub pole: Pole,
    pub algebraic: usize,
    pub geometric: usize,
}

/// Summary measures of a closed-loop matrix against its target poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub dep: f64,
    #[serde(with = "crate::io::lenient_f64")]
    pub kappa_f: f64,
    pub non_diagonalizable: bool,
    pub f_norm: f64,
    pub precs: Precs,
    #[serde(with = "crate::io::lenient_f64")]
    pub max_pole_error: f64,
    #[serde(with = "crate::io::lenient_f64::vec")]
    pub pole_errors: Vec<f64>,
    pub g_multi: Vec<GroupMultiplicity>,
    pub residual: f64,
}

/// Tolerances for [`robustness_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub zero_tol: f64,
    pub gmult_tol: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            zero_tol: DEFAULT_ZERO_TOL,
            gmult_tol: DEFAULT_GMULT_TOL,
        }
    }
}

/// All measures for the closed loop `A_c = A + BF`; `residual` is
/// `‖A_c − XTXᵀ‖_F` when a Schur pair is supplied.
pub fn robustness_report(
    a: &Mat,
    b: &Mat,
    f: &Mat,
    spec: &PoleSpec,
    schur: Option<(&Mat, &Mat)>,
    cfg: &MetricsConfig,
) -> RobustnessReport {
    let ac = a + b * f;
    let targets = spec.expand();
    let cond = eigvec_condition(&ac);
    let (precs_value, errors) = match precs(&targets, &ac, cfg.zero_tol) {
        Some(r) => (r.precs, r.matching.errors),
        None => (
            Precs::Exponent(i32::MAX),
            vec![f64::INFINITY; targets.len()],
        ),
    };
    let g_multi = spec
        .groups()
        .iter()
        .map(|g| GroupMultiplicity {
            pole: g.value,
            algebraic: g.multiplicity,
            geometric: geometric_multiplicity(&ac, g.value.to_complex(), cfg.gmult_tol),
        })
        .collect();
    let residual = schur.map_or(0.0, |(x, t)| (&ac - x * t * x.transpose()).norm());
    RobustnessReport {
        dep: departure(&ac, &targets),
        kappa_f: cond.value,
        non_diagonalizable: cond.non_diagonalizable,
        f_norm: f.norm(),
        precs: precs_value,
        max_pole_error: errors.iter().copied().fold(0.0, f64::max),
        pole_errors: errors,
        g_multi,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normal_matrix_has_no_departure() {
        let ac = dmatrix![2.0, 1.0; 1.0, 2.0];
        assert!(departure_from_normality(&ac, &[c(1.0, 0.0), c(3.0, 0.0)]) < 1e-12);
    }

    #[test]
    fn schur_departure_is_linear_in_rounding() {
        let q = dmatrix![0.6, -0.8; 0.8, 0.6];
        let ac = &q * dmatrix![3.0, 0.0; 0.0, -7.0] * q.transpose();
        assert!(schur_departure(&ac).unwrap() < 1e-14);
        let tri = dmatrix![1.0, 1.0; 0.0, 2.0];
        assert!((schur_departure(&tri).unwrap() - 1.0).abs() < 1e-14);
        let rot = dmatrix![1.0, 2.0; -0.5, 1.0];
        assert!((schur_departure(&rot).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn departure_keeps_target_mismatch() {
        // Eigenvalues 1 ± 1e-4 against a double target 1: the mismatch
        // 2e-8 is far above rounding and stays in.
        let ac = dmatrix![1.0, 1.0; 1e-8, 1.0];
        let one = c(1.0, 0.0);
        let literal = departure_from_normality(&ac, &[one, one]);
        assert!((departure(&ac, &[one, one]) - literal).abs() < 1e-12);
        assert!((schur_departure(&ac).unwrap() - literal).abs() > 1e-9);
    }

    #[test]
    fn triangular_departure() {
        let ac = dmatrix![1.0, 1.0; 0.0, 2.0];
        assert!((departure_from_normality(&ac, &[c(1.0, 0.0), c(2.0, 0.0)]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delta_block_both_forms() {
        let alpha = 0.3;
        let ac = dmatrix![alpha, 2.0; -0.5, alpha];
        let poles = [c(alpha, 1.0), c(alpha, -1.0)];
        let direct = departure_from_normality(&ac, &poles);
        let block = ComplexBlockParams {
            start: 0,
            alpha,
            beta: 1.0,
            delta: 2.0,
        };
        let from_t = departure_from_blocks(&ac, &[block]);
        assert!((direct - 1.5).abs() < 1e-14);
        assert!((from_t - 1.5).abs() < 1e-14);
        assert!((direct * direct - 2.25).abs() < 1e-13);
    }

    #[test]
    fn precs_definition() {
        let r = precs_from_eigenvalues(
            &[c(1.0, 0.0), c(2.0, 0.0)],
            &[c(2.0, 0.0), c(1.0 + 1e-11, 0.0)],
            1e-12,
        );
        assert_eq!(r.precs, Precs::Exponent(-11));
        assert_eq!(r.matching.assignment, vec![1, 0]);
    }

    #[test]
    fn precs_exact_sentinel() {
        let r = precs_from_eigenvalues(&[c(1.0, 0.0)], &[c(1.0, 0.0)], 1e-12);
        assert_eq!(r.precs, Precs::Exact);
        assert_eq!(r.precs.to_string(), "exact");
        assert_eq!(serde_json::to_string(&r.precs).unwrap(), "\"exact\"");
    }

    #[test]
    fn zero_pole_uses_absolute_error() {
        let r = precs_from_eigenvalues(
            &[c(0.0, 0.0), c(1.0, 0.0)],
            &[c(3.4e-17, 0.0), c(1.0, 0.0)],
            1e-12,
        );
        assert_eq!(r.matching.errors[0], 3.4e-17);
        assert_eq!(r.precs, Precs::Exponent(-16));
    }

    #[test]
    fn matching_prefers_small_errors() {
        let cost_targets = [c(1.0, 0.0), c(10.0, 0.0)];
        let computed = [c(1.0, 0.0), c(1.0, 0.0)];
        let m = match_eigenvalues(&cost_targets, &computed, 1e-12);
        assert!((m.max_error() - 0.9).abs() < 1e-15);
        let targets = [c(1.0, 0.0), c(2.0, 0.0)];
        let computed = [c(1.5, 0.0), c(1.0, 0.0)];
        let m = match_eigenvalues(&targets, &computed, 1e-12);
        assert_eq!(m.assignment, vec![1, 0]);
    }

    #[test]
    fn geometric_multiplicities() {
        assert_eq!(
            geometric_multiplicity(&(Mat::identity(3, 3) * 5.0), c(5.0, 0.0), 1e-8),
            3
        );
        assert_eq!(
            geometric_multiplicity(&dmatrix![1.0, 1.0; 0.0, 1.0], c(1.0, 0.0), 1e-8),
            1
        );
        let rot = dmatrix![0.0, 1.0, 0.0, 0.0; -1.0, 0.0, 0.0, 0.0; 0.0, 0.0, 0.0, 1.0; 0.0, 0.0, -1.0, 0.0];
        assert_eq!(geometric_multiplicity(&rot, c(0.0, 1.0), 1e-8), 2);
    }

    #[test]
    fn symmetric_condition_is_n() {
        let ac = dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 1.0; 0.0, 1.0, 4.0];
        let k = eigvec_condition(&ac);
        assert!((k.value - 3.0).abs() < 1e-10);
        assert!(!k.non_diagonalizable);
        let d = eigvec_condition(&dmatrix![1.0, 0.0; 0.0, 2.0]);
        assert!((d.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn near_defective_condition_growth() {
        let e = 1e-8;
        let k = eigvec_condition(&dmatrix![1.0, 1.0; e, 1.0]);
        let analytic = (1.0 + e) / e.sqrt();
        assert!(
            (k.value / analytic - 1.0).abs() < 1e-6,
            "{} vs {analytic}",
            k.value
        );
        let jordan = eigvec_condition(&dmatrix![1.0, 1.0; 0.0, 1.0]);
        assert!(jordan.non_diagonalizable, "{}", jordan.value);
        let scaled = eigvec_condition(&dmatrix![5.0, 3.0; 0.0, 5.0]);
        assert!(scaled.non_diagonalizable);
        assert!(jordan.value > 1e12);
    }
}
