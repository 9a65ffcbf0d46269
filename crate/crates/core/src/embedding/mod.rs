//! Maps from finite metric spaces into `ℓq^m` and their distortion.
//!
//! Image distances are always `‖T(u) - T(v)‖_q`. The ambient sequence space
//! is truncated to `m` coordinates with the base point at the origin.

mod distortion;
mod l2;
mod oracle;
mod search;
mod snap;
mod ultra;

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use distortion::{cfh_verify, holder_distortion, DistortionCertificate, PairCheck, PairRatio};
pub use l2::{embed_l2_exact, L2Outcome};
pub use oracle::{oracle_embed, OracleResult};
pub use search::{embed_search, SearchOptions, SearchResult};
pub use snap::{
    minimal_k, net_snap, net_snap_greedy, round_to_dense, transfer_dense, DerivedConstants,
    FactorTwoCertificate, NetSnapResult, SnapMap, SnapParams,
};
pub use ultra::exact_power_map;

use crate::error::{Error, Result};
use crate::metric::{lq_norm_unchecked, FiniteMetricSpace};

/// Coordinates in `ℓq^dim` for each point of a source space, by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    q: f64,
    dim: usize,
    coords: Vec<Vec<f64>>,
}

/// On-disk form: `{"q": ..., "coords": {label: [numbers]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub q: f64,
    pub coords: IndexMap<String, Vec<f64>>,
}

impl Embedding {
    pub fn new(q: f64, coords: Vec<Vec<f64>>) -> Result<Self> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target exponent q must be a finite real >= 1, got {q}"
            )));
        }
        let dim = coords.first().map_or(0, Vec::len);
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Shape(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Shape(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(Embedding { q, dim, coords })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn image_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.coords[i], &self.coords[j]);
        lq_norm_unchecked(a.iter().zip(b).map(|(x, y)| (x - y).abs()), self.q)
    }

    /// The map `u ↦ self(pick(u))` on `n` points.
    pub fn compose(&self, pick: impl Fn(usize) -> usize, n: usize) -> Embedding {
        Embedding {
            q: self.q,
            dim: self.dim,
            coords: (0..n).map(|u| self.coords[pick(u)].clone()).collect(),
        }
    }

    pub(crate) fn check_source(&self, m: &FiniteMetricSpace) -> Result<()> {
        if self.len() != m.len() {
            return Err(Error::Shape(format!(
                "embedding has {} points but the space has {}",
                self.len(),
                m.len()
            )));
        }
        Ok(())
    }

    pub fn to_file(&self, source: &FiniteMetricSpace) -> Result<EmbeddingFile> {
        self.check_source(source)?;
        Ok(EmbeddingFile {
            q: self.q,
            coords: source
                .labels()
                .iter()
                .cloned()
                .zip(self.coords.iter().cloned())
                .collect(),
        })
    }

    /// Aligns a file's coordinates with `source`'s point order.
    pub fn from_file(file: EmbeddingFile, source: &FiniteMetricSpace) -> Result<Self> {
        if file.coords.len() != source.len() {
            return Err(Error::Shape(format!(
                "embedding lists {} points but the space has {}",
                file.coords.len(),
                source.len()
            )));
        }
        let coords = source
            .labels()
            .iter()
            .map(|l| {
                file.coords
                    .get(l)
                    .cloned()
                    .ok_or_else(|| Error::UnknownLabel(l.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Embedding::new(file.q, coords)
    }

    pub fn load(path: impl AsRef<Path>, source: &FiniteMetricSpace) -> Result<Self> {
        let file: EmbeddingFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(file, source)
    }
}

/// A space together with a map into `ℓq^m`: one level `(X_n, T_n)` of a
/// reduction family.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub space: FiniteMetricSpace,
    pub map: Embedding,
}

impl Level {
    pub fn new(space: FiniteMetricSpace, map: Embedding) -> Result<Self> {
        map.check_source(&space)?;
        Ok(Level { space, map })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_distance_uses_q_norm() {
        let t = Embedding::new(2.0, vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t.image_distance(0, 1), 5.0);
        let t = Embedding::new(1.0, vec![vec![0.0, 0.0], vec![3.0, -4.0]]).unwrap();
        assert_eq!(t.image_distance(0, 1), 7.0);
    }

    #[test]
    fn rejects_ragged_or_bad_q() {
        assert!(Embedding::new(2.0, vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(Embedding::new(0.5, vec![vec![0.0]]).is_err());
        assert!(Embedding::new(f64::INFINITY, vec![vec![0.0]]).is_err());
    }

    #[test]
    fn file_round_trip_follows_labels() {
        let m = FiniteMetricSpace::line(&[0.0, 2.0]).unwrap();
        let text = r#"{"q": 2, "coords": {"2": [5.0], "0": [1.0]}}"#;
        let t = Embedding::from_file(serde_json::from_str(text).unwrap(), &m).unwrap();
        assert_eq!(t.point(0), &[1.0]);
        assert_eq!(t.point(1), &[5.0]);
        let f = t.to_file(&m).unwrap();
        assert_eq!(f.coords.keys().collect::<Vec<_>>(), vec!["0", "2"]);

        let missing = r#"{"q": 2, "coords": {"9": [5.0], "0": [1.0]}}"#;
        assert!(matches!(
            Embedding::from_file(serde_json::from_str(missing).unwrap(), &m),
            Err(Error::UnknownLabel(_))
        ));
    }
}
