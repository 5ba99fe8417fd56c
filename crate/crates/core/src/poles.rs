//! Target spectrum: validation, conjugate closure and grouping of equal
//! poles into assignment order.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AssignError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub re: f64,
    pub im: f64,
}

impl Pole {
    pub fn new(re: f64, im: f64) -> Self {
        Pole { re, im }
    }

    pub fn real(re: f64) -> Self {
        Pole { re, im: 0.0 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(self) -> bool {
        self.im == 0.0
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0.0 {
            write!(f, "{}", self.re)
        } else if self.im > 0.0 {
            write!(f, "{}+{}i", self.re, self.im)
        } else {
            write!(f, "{}-{}i", self.re, -self.im)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleKind {
    Real,
    ComplexPair,
}

/// A distinct pole with its algebraic multiplicity. Complex pairs store the
/// member with positive imaginary part and count `λ` and `λ̄` jointly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleGroup {
    pub value: Pole,
    pub multiplicity: usize,
    pub kind: PoleKind,
}

impl PoleGroup {
    /// Number of state dimensions the group occupies.
    pub fn real_dimension(&self) -> usize {
        match self.kind {
            PoleKind::Real => self.multiplicity,
            PoleKind::ComplexPair => 2 * self.multiplicity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoleOrder {
    /// By real part, then `|im|`, then multiplicity (descending).
    #[default]
    Ascending,
    /// Keep the order of first appearance.
    #[serde(alias = "given")]
    AsGiven,
}

/// One raw entry of a pole list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPole {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
}

impl RawPole {
    pub fn new(re: f64, im: f64, mult: usize) -> Self {
        RawPole { re, im, mult }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleOptions {
    /// Entries with `|im| ≤ imag_tol` are treated as real.
    pub imag_tol: f64,
    pub order: PoleOrder,
    /// Each non-real entry implicitly carries its conjugate.
    pub conjugate_pairs: bool,
}

impl Default for PoleOptions {
    fn default() -> Self {
        PoleOptions {
            imag_tol: 0.0,
            order: PoleOrder::Ascending,
            conjugate_pairs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSpec {
    groups: Vec<PoleGroup>,
    total_real_dimension: usize,
}

impl PoleSpec {
    pub fn groups(&self) -> &[PoleGroup] {
        &self.groups
    }

    pub fn total_real_dimension(&self) -> usize {
        self.total_real_dimension
    }

    /// The full multiset of poles, conjugates included.
    pub fn expand(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.total_real_dimension);
        for g in &self.groups {
            let z = g.value.to_complex();
            for _ in 0..g.multiplicity {
                out.push(z);
                if g.kind == PoleKind::ComplexPair {
                    out.push(z.conj());
                }
            }
        }
        out
    }

    /// Raw entries with explicit conjugates, suitable for rebuilding.
    pub fn to_raw(&self) -> Vec<RawPole> {
        let mut out = Vec::new();
        for g in &self.groups {
            out.push(RawPole::new(g.value.re, g.value.im, g.multiplicity));
            if g.kind == PoleKind::ComplexPair {
                out.push(RawPole::new(g.value.re, -g.value.im, g.multiplicity));
            }
        }
        out
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        let raw: Vec<RawPole> = values.iter().map(|&v| RawPole::new(v, 0.0, 1)).collect();
        build_pole_spec(&raw, &PoleOptions::default())
    }
}

fn sort_key(g: &PoleGroup) -> (f64, f64, std::cmp::Reverse<usize>) {
    (
        g.value.re,
        g.value.im.abs(),
        std::cmp::Reverse(g.multiplicity),
    )
}

/// Validates and groups a raw pole list.
pub fn build_pole_spec(raw: &[RawPole], opts: &PoleOptions) -> Result<PoleSpec> {
    if raw.is_empty() {
        return Err(AssignError::InvalidPole("empty pole list".into()));
    }
    // (canonical pole, count of +im members, count of −im members)
    let mut groups: Vec<(Pole, usize, usize)> = Vec::new();
    let mut last_key: Option<usize> = None;

    for entry in raw {
        if !entry.re.is_finite() || !entry.im.is_finite() {
            return Err(AssignError::InvalidPole(format!(
                "non-finite pole ({}, {})",
                entry.re, entry.im
            )));
        }
        if entry.mult == 0 {
            return Err(AssignError::InvalidPole(format!(
                "pole ({}, {}) has zero multiplicity",
                entry.re, entry.im
            )));
        }
        let im = if entry.im.abs() <= opts.imag_tol {
            0.0
        } else {
            entry.im
        };
        let canon = Pole::new(entry.re, im.abs());
        let idx = match groups.iter().position(|(p, _, _)| *p == canon) {
            Some(i) => {
                if opts.order == PoleOrder::AsGiven && last_key != Some(i) {
                    return Err(AssignError::DuplicateSplitGroup(canon.to_string()));
                }
                i
            }
            None => {
                groups.push((canon, 0, 0));
                groups.len() - 1
            }
        };
        last_key = Some(idx);
        let g = &mut groups[idx];
        if im == 0.0 {
            g.1 += entry.mult;
        } else if opts.conjugate_pairs {
            g.1 += entry.mult;
            g.2 += entry.mult;
        } else if im > 0.0 {
            g.1 += entry.mult;
        } else {
            g.2 += entry.mult;
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (pole, pos, neg) in groups {
        if pole.is_real() {
            out.push(PoleGroup {
                value: pole,
                multiplicity: pos,
                kind: PoleKind::Real,
            });
        } else {
            if pos != neg {
                return Err(AssignError::NotConjugateClosed(format!(
                    "{pole} appears {pos} times but its conjugate {neg} times"
                )));
            }
            out.push(PoleGroup {
                value: pole,
                multiplicity: pos,
                kind: PoleKind::ComplexPair,
            });
        }
    }
    if opts.order == PoleOrder::Ascending {
        out.sort_by(|a, b| {
            let (ka, kb) = (sort_key(a), sort_key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
        });
    }
    let total_real_dimension = out.iter().map(PoleGroup::real_dimension).sum();
    Ok(PoleSpec {
        groups: out,
        total_real_dimension,
    })
}

/// On-disk pole list: either a bare array of entries or an object carrying
/// the entries and the `conjugate_pairs` convention flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoleFile {
    List(Vec<RawPole>),
    Tagged {
        #[serde(default)]
        conjugate_pairs: bool,
        poles: Vec<RawPole>,
    },
}

impl PoleFile {
    pub fn into_spec(self, imag_tol: f64, order: PoleOrder) -> Result<PoleSpec> {
        let (raw, conjugate_pairs) = match self {
            PoleFile::List(raw) => (raw, false),
            PoleFile::Tagged {
                conjugate_pairs,
                poles,
            } => (poles, conjugate_pairs),
        };
        build_pole_spec(
            &raw,
            &PoleOptions {
                imag_tol,
                order,
                conjugate_pairs,
            },
        )
    }
}
