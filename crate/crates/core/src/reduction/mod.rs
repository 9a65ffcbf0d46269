//! The reduction map `θ` between ℓp-like products at finite truncation.
//!
//! An instance is a list of levels `(X_n, T_n)` with `T_n` into `ℓq^{m_n}`,
//! thresholds `ε_n`, `η_n` and constants `p, q, A, C, D`. A point of the
//! product is a choice of one point per level.

pub mod bounds;
pub mod clauses;
pub mod dense;
pub mod pairing;
pub mod partition;
pub mod simulate;
pub mod synthetic;
pub mod tail;
pub mod theta;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, EmbeddingFile, Level};
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, MetricFile};

pub use bounds::{verify_reduction_bounds, BoundReport, Inequality, Relation};
pub use clauses::{check_clauses, ClauseReport, ClauseViolation, Constants};
pub use dense::{dense_nets, dense_radius, dense_snap, DenseSnap};
pub use pairing::{pair, unpair};
pub use partition::{partition_indices, IndexPartition, Part};
pub use simulate::{simulate, ModelReport, SampleReport, SimulateOptions, SimulationReport};
pub use synthetic::{comb_instance, exact_power_instance, random_exact_power_instance};
pub use tail::{classify_tail, Convergence, TailModel};
pub use theta::{build_theta, rearrangement, Rearrangement, Theta, ThetaEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionInstance {
    pub constants: Constants,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub levels: Vec<Level>,
}

impl ReductionInstance {
    pub fn new(constants: Constants, eps: Vec<f64>, eta: Vec<f64>, levels: Vec<Level>) -> Result<Self> {
        constants.validate()?;
        clauses::check_thresholds(&eps, &eta, levels.len())?;
        if levels.is_empty() {
            return Err(Error::InvalidArgument("an instance needs at least one level".into()));
        }
        for (i, l) in levels.iter().enumerate() {
            if l.map.q() != constants.q {
                return Err(Error::InvalidArgument(format!(
                    "level {i} maps into ℓ{} but q = {}",
                    l.map.q(),
                    constants.q
                )));
            }
            if l.space.is_empty() {
                return Err(Error::InvalidArgument(format!("level {i} has no points")));
            }
        }
        Ok(ReductionInstance {
            constants,
            eps,
            eta,
            levels,
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Clauses 2 to 4 on every pair of every level.
    pub fn clause_report(&self) -> ClauseReport {
        check_clauses(&self.levels, &self.eps, &self.eta, &self.constants)
            .expect("validated at construction")
    }

    /// Checks that `x` picks one valid point per level.
    pub fn check_choice(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.levels.len() {
            return Err(Error::Shape(format!(
                "a choice needs {} points, got {}",
                self.levels.len(),
                x.len()
            )));
        }
        for (n, (&u, l)) in x.iter().zip(&self.levels).enumerate() {
            if u >= l.space.len() {
                return Err(Error::InvalidArgument(format!(
                    "point {u} out of range at level {n} ({} points)",
                    l.space.len()
                )));
            }
        }
        Ok(())
    }

    /// Resolves per-level labels to point indices.
    pub fn choice_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        if labels.len() != self.levels.len() {
            return Err(Error::Shape(format!(
                "a choice needs {} labels, got {}",
                self.levels.len(),
                labels.len()
            )));
        }
        labels
            .iter()
            .zip(&self.levels)
            .map(|(l, level)| level.space.index_of(l.as_ref()))
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<PairList>)> {
        let path = path.as_ref();
        let file: InstanceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let pairs = file.pairs.clone();
        Ok((Self::from_file(file, &base)?, pairs))
    }

    pub fn from_file(file: InstanceFile, base: &Path) -> Result<Self> {
        let levels = file
            .levels
            .into_iter()
            .map(|l| {
                let space = FiniteMetricSpace::from_file(l.metric.resolve(base)?)?;
                let map = Embedding::from_file(l.embedding.resolve(base)?, &space)?;
                Level::new(space, map)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.constants, file.eps, file.eta, levels)
    }

    /// Self-contained file form with every level inline.
    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            constants: self.constants,
            eps: self.eps.clone(),
            eta: self.eta.clone(),
            levels: self
                .levels
                .iter()
                .map(|l| LevelFile {
                    metric: Source::Inline(l.space.to_file()),
                    embedding: Source::Inline(
                        l.map.to_file(&l.space).expect("level map matches its space"),
                    ),
                })
                .collect(),
            pairs: None,
        }
    }
}

/// A file given inline or as a path relative to the instance file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: for<'de> Deserialize<'de>> Source<T> {
    fn resolve(self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(t) => Ok(t),
            Source::Path(p) => {
                let full = if p.is_absolute() { p } else { base.join(p) };
                Ok(serde_json::from_str(&std::fs::read_to_string(full)?)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelFile {
    pub metric: Source<MetricFile>,
    pub embedding: Source<EmbeddingFile>,
}

/// Point choices `x` and `y` given as one label per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairList {
    pub x: Vec<Vec<String>>,
    pub y: Vec<Vec<String>>,
}

/// On-disk instance: `{"p", "q", "A", "C", "D", "eps", "eta", "levels",
/// "pairs"?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub constants: Constants,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub levels: Vec<LevelFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairList>,
}
