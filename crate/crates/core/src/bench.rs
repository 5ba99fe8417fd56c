//! Randomized experiment harness: seeded generators for systems with a
//! repeated real or complex pole, and grid sweeps that average robustness
//! measures over trials.

use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{assign, controllability_rank, AssignConfig, SystemPair};
use crate::error::{AssignError, Result};
use crate::linalg::{svd, Mat};
use crate::metrics::{robustness_report, MetricsConfig, Precs};
use crate::poles::{build_pole_spec, PoleOptions, PoleSpec, RawPole};

/// Attempts per trial before giving up on drawing a usable system.
pub const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Real,
    Complex,
}

/// How the open-loop matrix is built from the target spectrum `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recipe {
    /// `A = Q_Y R_Y Q_Yᵀ − BF` with `R_Y` carrying `Λ` on its diagonal.
    #[default]
    Qr,
    /// `A = YΛY⁻¹ − BF` with dense `Y`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A sweep over every `(n, m, a_max)` in the cartesian grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub kind: BenchKind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub a_max: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub recipe: Recipe,
    pub parallel: bool,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub a_max: usize,
}

impl GridPoint {
    pub fn validate(&self, kind: BenchKind) -> Result<()> {
        let GridPoint { n, m, a_max } = *self;
        if m < 1 || m > n {
            return Err(AssignError::InvalidConfig(format!(
                "m = {m} outside 1..={n}"
            )));
        }
        match kind {
            BenchKind::Real if a_max < 1 || a_max + 1 > n => Err(AssignError::InvalidConfig(
                format!("real a_max = {a_max} outside 1..={}", n.saturating_sub(1)),
            )),
            BenchKind::Complex if a_max < 2 || 2 * a_max > n => Err(AssignError::InvalidConfig(
                format!("complex a_max = {a_max} outside 2..={}", n / 2),
            )),
            _ => Ok(()),
        }
    }

    /// Stream id of one trial; each coordinate gets 16 bits.
    fn stream(&self, trial: usize) -> u64 {
        ((self.n as u64 & 0xffff) << 48)
            | ((self.m as u64 & 0xffff) << 32)
            | ((self.a_max as u64 & 0xffff) << 16)
            | (trial as u64 & 0xffff)
    }
}

impl BenchConfig {
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in &self.m {
                for &a_max in &self.a_max {
                    out.push(GridPoint { n, m, a_max });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(AssignError::InvalidConfig("trials must be positive".into()));
        }
        if self.trials > 0xffff {
            return Err(AssignError::InvalidConfig(
                "at most 65535 trials per grid point".into(),
            ));
        }
        let grid = self.grid();
        if grid.is_empty() {
            return Err(AssignError::InvalidConfig("empty grid".into()));
        }
        grid.iter().try_for_each(|g| g.validate(self.kind))?;
        grid.iter().try_for_each(|g| check_recipe(self.recipe, g))
    }
}

/// A semi-simple repeated pole needs at least as many inputs as copies,
/// otherwise no draw is controllable.
fn check_recipe(recipe: Recipe, point: &GridPoint) -> Result<()> {
    if recipe == Recipe::Dense && point.a_max > point.m {
        return Err(AssignError::InvalidConfig(format!(
            "dense recipe needs a_max ≤ m (a_max = {}, m = {})",
            point.a_max, point.m
        )));
    }
    Ok(())
}

/// Standard normal draws by the Box–Muller transform.
#[derive(Debug, Clone)]
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalSource { rng, spare: None }
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = std::f64::consts::TAU * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Mat {
        // Row-major fill keeps the draw order independent of storage layout.
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.next();
            }
        }
        m
    }
}

/// A random test problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub system: SystemPair,
    pub poles: PoleSpec,
    /// Retries spent before this instance was accepted.
    pub retries: usize,
}

/// Spectrum as a quasi-triangular pattern: diagonal entries and the
/// `(α, β)` of each 2×2 block, in placement order.
enum Entry {
    Real(f64),
    Pair(f64, f64),
}

fn spectrum(kind: BenchKind, point: &GridPoint, src: &mut NormalSource) -> Vec<Entry> {
    let GridPoint { n, a_max, .. } = *point;
    match kind {
        BenchKind::Real => {
            let c = src.next();
            let mut out: Vec<Entry> = (0..a_max).map(|_| Entry::Real(c)).collect();
            out.extend((0..n - a_max).map(|_| Entry::Real(src.next())));
            out
        }
        BenchKind::Complex => {
            let alpha = src.next();
            let beta = src.next().abs();
            let mut out: Vec<Entry> = (0..a_max).map(|_| Entry::Pair(alpha, beta)).collect();
            out.extend((0..n - 2 * a_max).map(|_| Entry::Real(src.next())));
            out
        }
    }
}

fn spec_from(entries: &[Entry]) -> Result<PoleSpec> {
    let raw: Vec<RawPole> = entries
        .iter()
        .flat_map(|e| match *e {
            Entry::Real(x) => vec![RawPole::new(x, 0.0, 1)],
            Entry::Pair(a, b) => vec![RawPole::new(a, b, 1), RawPole::new(a, -b, 1)],
        })
        .collect();
    build_pole_spec(&raw, &PoleOptions::default())
}

/// Writes the spectrum into `r` as a quasi-triangular pattern.
fn imprint(r: &mut Mat, entries: &[Entry]) {
    let n = r.nrows();
    for i in 0..n {
        for j in 0..i {
            r[(i, j)] = 0.0;
        }
    }
    let mut k = 0;
    for e in entries {
        match *e {
            Entry::Real(x) => {
                r[(k, k)] = x;
                k += 1;
            }
            Entry::Pair(a, b) => {
                r[(k, k)] = a;
                r[(k + 1, k + 1)] = a;
                r[(k, k + 1)] = b;
                r[(k + 1, k)] = -b;
                k += 2;
            }
        }
    }
}

fn open_loop(recipe: Recipe, n: usize, entries: &[Entry], src: &mut NormalSource) -> Option<Mat> {
    let y = src.matrix(n, n);
    match recipe {
        Recipe::Qr => {
            let (q, mut r) = y.qr().unpack();
            imprint(&mut r, entries);
            Some(&q * r * q.transpose())
        }
        Recipe::Dense => {
            let mut lambda = Mat::zeros(n, n);
            imprint(&mut lambda, entries);
            // Only the block-diagonal part is kept.
            for i in 0..n {
                for j in i + 1..n {
                    let in_block = j == i + 1 && lambda[(j, i)] != 0.0;
                    if !in_block {
                        lambda[(i, j)] = 0.0;
                    }
                }
            }
            let inv = y.clone().try_inverse()?;
            Some(&y * lambda * inv)
        }
    }
}

fn generate(
    kind: BenchKind,
    point: &GridPoint,
    seed: u64,
    trial: usize,
    recipe: Recipe,
) -> Result<Instance> {
    point.validate(kind)?;
    check_recipe(recipe, point)?;
    let mut src = NormalSource::new(seed, point.stream(trial));
    let GridPoint { n, m, .. } = *point;
    for attempt in 0..MAX_RETRIES {
        let entries = spectrum(kind, point, &mut src);
        let Some(base) = open_loop(recipe, n, &entries, &mut src) else {
            log::debug!("trial {trial}: singular Y, retry {attempt}");
            continue;
        };
        let b = src.matrix(n, m);
        let f = src.matrix(m, n);
        if svd(&b, None).numerical_rank < m {
            log::debug!("trial {trial}: rank-deficient B, retry {attempt}");
            continue;
        }
        let system = SystemPair::new(base - &b * f, b)?;
        if !controllability_rank(&system, 1e-10).controllable() {
            log::debug!("trial {trial}: uncontrollable draw, retry {attempt}");
            continue;
        }
        return Ok(Instance {
            system,
            poles: spec_from(&entries)?,
            retries: attempt,
        });
    }
    Err(AssignError::GenerationFailure(MAX_RETRIES))
}

/// Random system with one real pole of multiplicity `a_max` and
/// `n − a_max` simple real poles.
pub fn gen_real_repeated(
    point: &GridPoint,
    seed: u64,
    trial: usize,
    recipe: Recipe,
) -> Result<Instance> {
    generate(BenchKind::Real, point, seed, trial, recipe)
}

/// Random system with one complex pair of multiplicity `a_max` and
/// `n − 2a_max` simple real poles.
pub fn gen_complex_repeated(
    point: &GridPoint,
    seed: u64,
    trial: usize,
    recipe: Recipe,
) -> Result<Instance> {
    generate(BenchKind::Complex, point, seed, trial, recipe)
}

/// Measures of one successful trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub dep: f64,
    pub f_norm: f64,
    pub kappa: f64,
    pub defective: bool,
    pub precs: Precs,
    /// Geometric multiplicity of the repeated pole.
    pub g_multi: usize,
}

/// Generates and solves one trial.
pub fn run_trial(
    kind: BenchKind,
    point: &GridPoint,
    seed: u64,
    trial: usize,
    recipe: Recipe,
) -> Result<TrialOutcome> {
    let inst = generate(kind, point, seed, trial, recipe)?;
    let res = assign(&inst.system, &inst.poles, &AssignConfig::default())?;
    let report = robustness_report(
        inst.system.a(),
        inst.system.b(),
        &res.f,
        &inst.poles,
        Some((&res.x, &res.t)),
        &MetricsConfig::default(),
    );
    let g_multi = report
        .g_multi
        .iter()
        .max_by_key(|g| g.algebraic)
        .map_or(0, |g| g.geometric);
    Ok(TrialOutcome {
        dep: report.dep,
        f_norm: report.f_norm,
        kappa: report.kappa_f,
        defective: report.non_diagonalizable,
        precs: report.precs,
        g_multi,
    })
}

/// Averages over the trials of one grid point. Means skip failed trials;
/// `kappa_mean` also skips trials flagged defective and `precs_mean` skips
/// exact ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub a_max: usize,
    pub trials: usize,
    pub dep_mean: f64,
    pub fnorm_mean: f64,
    pub kappa_mean: f64,
    pub defective_count: usize,
    pub precs_mean: f64,
    pub gmulti_mean: f64,
    pub failures: usize,
    /// Error messages of failed trials, in trial order.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn summarize(point: &GridPoint, trials: usize, outcomes: &[Result<TrialOutcome>]) -> BenchRow {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let notes = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().err().map(|e| format!("trial {i}: {e}")))
        .collect();
    BenchRow {
        n: point.n,
        m: point.m,
        a_max: point.a_max,
        trials,
        dep_mean: mean(ok.iter().map(|o| o.dep)),
        fnorm_mean: mean(ok.iter().map(|o| o.f_norm)),
        kappa_mean: mean(ok.iter().filter(|o| !o.defective).map(|o| o.kappa)),
        defective_count: ok.iter().filter(|o| o.defective).count(),
        precs_mean: mean(ok.iter().filter_map(|o| match o.precs {
            Precs::Exact => None,
            Precs::Exponent(e) => Some(e as f64),
        })),
        gmulti_mean: mean(ok.iter().map(|o| o.g_multi as f64)),
        failures: outcomes.len() - ok.len(),
        notes,
    }
}

/// Runs every trial of the grid; rows come back in grid order and do not
/// depend on `parallel`.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let grid = config.grid();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..config.trials).map(move |t| (g, t)))
        .collect();
    let run =
        |&(g, t): &(usize, usize)| run_trial(config.kind, &grid[g], config.seed, t, config.recipe);
    let outcomes: Vec<Result<TrialOutcome>> = if config.parallel {
        tasks.par_iter().map(run).collect()
    } else {
        tasks.iter().map(run).collect()
    };
    Ok(grid
        .iter()
        .zip(outcomes.chunks(config.trials))
        .map(|(p, chunk)| summarize(p, config.trials, chunk))
        .collect())
}

pub const CSV_HEADER: &str = "n,m,a_max,trials,dep_mean,fnorm_mean,kappa_mean,defective_count,precs_mean,gmulti_mean,failures";

/// Fixed 17-significant-digit rendering.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            r.a_max,
            r.trials,
            format_float(r.dep_mean),
            format_float(r.fnorm_mean),
            format_float(r.kappa_mean),
            r.defective_count,
            format_float(r.precs_mean),
            format_float(r.gmulti_mean),
            r.failures
        );
    }
    out
}

/// JSON array of rows; non-finite means become `null`.
pub fn to_json(rows: &[BenchRow]) -> String {
    let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
    text.push('\n');
    text
}
