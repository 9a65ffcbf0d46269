//! Finite (pseudo-)metric spaces stored as dense distance matrices.
//!
//! Distances are checked exactly: a space whose stored values violate the
//! triangle inequality by one ulp is reported as violating it. Generators in
//! [`crate::generate`] emit matrices that are already exact.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled finite point set with a dense, row-major distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    d: Vec<f64>,
    pseudo: bool,
}

/// On-disk form of a metric: `{"labels": [...], "d": [[...]...], "pseudo": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricFile {
    pub labels: Vec<String>,
    pub d: Vec<Vec<f64>>,
    #[serde(default)]
    pub pseudo: bool,
}

impl FiniteMetricSpace {
    /// Builds a space from square rows. Only the shape and finiteness are
    /// checked here; metric axioms are reported by [`validate_metric`].
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>, pseudo: bool) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n {
            return Err(Error::Shape(format!(
                "{} labels but {} distance rows",
                n,
                rows.len()
            )));
        }
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            d.extend(row);
        }
        Self::from_flat(labels, d, pseudo)
    }

    /// Builds a space from a row-major `n*n` buffer.
    pub fn from_flat(labels: Vec<String>, d: Vec<f64>, pseudo: bool) -> Result<Self> {
        let n = labels.len();
        if d.len() != n * n {
            return Err(Error::Shape(format!(
                "distance buffer has {} entries, expected {}",
                d.len(),
                n * n
            )));
        }
        if let Some(pos) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite distance at ({}, {})",
                pos / n,
                pos % n
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Shape(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels, d, pseudo })
    }

    /// Points `0..n` labeled by their index.
    pub fn unlabeled(n: usize, d: Vec<f64>, pseudo: bool) -> Result<Self> {
        Self::from_flat((0..n).map(|i| i.to_string()).collect(), d, pseudo)
    }

    /// A subset of the real line with `d(x, y) = |x - y|`. Labels are the
    /// coordinates as printed by `{}`.
    pub fn line(points: &[f64]) -> Result<Self> {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        let labels = points.iter().map(|x| format!("{x}")).collect();
        Self::from_flat(labels, d, false)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_pseudo(&self) -> bool {
        self.pseudo
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.d[i * n..(i + 1) * n]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.d
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct points, ignoring zeros.
    /// `None` when no such pair exists.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.dist(i, j);
                if v > 0.0 && best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
        best
    }

    /// The subspace on `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!(
                "point index {bad} out of range for a {n}-point space"
            )));
        }
        let k = indices.len();
        let mut d = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                d.push(self.dist(i, j));
            }
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Self::from_flat(labels, d, self.pseudo)
    }

    /// Resolves labels to point indices.
    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn to_file(&self) -> MetricFile {
        MetricFile {
            labels: self.labels.clone(),
            d: self.rows(),
            pseudo: self.pseudo,
        }
    }

    pub fn from_file(file: MetricFile) -> Result<Self> {
        Self::new(file.labels, file.d, file.pseudo)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Result of an exhaustive scan of the metric axioms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub points: usize,
    pub symmetric: bool,
    pub nonneg: bool,
    pub zero_diagonal: bool,
    /// Triples `(i, j, k)` with `i < k` and `d[i][k] > d[i][j] + d[j][k]`.
    pub triangle_violations: Vec<[usize; 3]>,
    /// Off-diagonal pairs `(i, j)`, `i < j`, at distance exactly zero.
    pub zero_pairs: Vec<[usize; 2]>,
    pub pseudo: bool,
}

impl MetricReport {
    /// Symmetric, non-negative, zero diagonal and triangle inequality.
    pub fn is_pseudometric(&self) -> bool {
        self.symmetric && self.nonneg && self.zero_diagonal && self.triangle_violations.is_empty()
    }

    /// A pseudo-metric that is also a metric unless the space is flagged
    /// as pseudo.
    pub fn is_clean(&self) -> bool {
        self.is_pseudometric() && (self.pseudo || self.zero_pairs.is_empty())
    }
}

/// Checks every pair and triple of `m`.
pub fn validate_metric(m: &FiniteMetricSpace) -> MetricReport {
    let n = m.len();
    let mut symmetric = true;
    let mut nonneg = true;
    let mut zero_diagonal = true;
    let mut zero_pairs = Vec::new();
    for i in 0..n {
        if m.dist(i, i) != 0.0 {
            zero_diagonal = false;
        }
        for j in 0..n {
            let v = m.dist(i, j);
            if v < 0.0 {
                nonneg = false;
            }
            if v != m.dist(j, i) {
                symmetric = false;
            }
            if i < j && v == 0.0 {
                zero_pairs.push([i, j]);
            }
        }
    }
    let triangle_violations: Vec<[usize; 3]> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for k in (i + 1)..n {
                let direct = m.dist(i, k);
                for j in 0..n {
                    if j != i && j != k && direct > m.dist(i, j) + m.dist(j, k) {
                        out.push([i, j, k]);
                    }
                }
            }
            out
        })
        .collect();
    MetricReport {
        points: n,
        symmetric,
        nonneg,
        zero_diagonal,
        triangle_violations,
        zero_pairs,
        pseudo: m.is_pseudo(),
    }
}

fn require_pseudometric(m: &FiniteMetricSpace) -> Result<MetricReport> {
    let report = validate_metric(m);
    if !report.is_pseudometric() {
        let why = if !report.symmetric {
            "matrix is not symmetric".to_string()
        } else if !report.nonneg {
            "negative distance".to_string()
        } else if !report.zero_diagonal {
            "non-zero diagonal".to_string()
        } else {
            let [i, j, k] = report.triangle_violations[0];
            format!(
                "triangle inequality fails for ({}, {}, {})",
                m.label(i),
                m.label(j),
                m.label(k)
            )
        };
        return Err(Error::InvalidMetric(why));
    }
    Ok(report)
}

/// Fails unless `m` satisfies every axiom, including positivity off the
/// diagonal.
pub fn require_metric(m: &FiniteMetricSpace) -> Result<()> {
    let report = require_pseudometric(m)?;
    if let Some([i, j]) = report.zero_pairs.first() {
        return Err(Error::InvalidMetric(format!(
            "points {} and {} are at distance 0; quotient first",
            m.label(*i),
            m.label(*j)
        )));
    }
    Ok(())
}

/// A metric quotient together with the class of every original point.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub space: FiniteMetricSpace,
    /// `class_of[i]` is the index in `space` of the class containing `i`.
    pub class_of: Vec<usize>,
    /// Original index of each class representative.
    pub representatives: Vec<usize>,
}

/// Identifies points at distance exactly zero. Each class is represented by
/// its lowest-index member.
pub fn quotient_with_classes(m: &FiniteMetricSpace) -> Result<Quotient> {
    require_pseudometric(m)?;
    let n = m.len();
    let mut representatives = Vec::new();
    let mut class_of = vec![0; n];
    for i in 0..n {
        match representatives.iter().position(|&r| m.dist(r, i) == 0.0) {
            Some(c) => class_of[i] = c,
            None => {
                class_of[i] = representatives.len();
                representatives.push(i);
            }
        }
    }
    let mut space = m.restrict(&representatives)?;
    space.pseudo = false;
    Ok(Quotient {
        space,
        class_of,
        representatives,
    })
}

pub fn quotient_pseudometric(m: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    quotient_with_classes(m).map(|q| q.space)
}

/// The snowflake `d ↦ d^alpha` for `alpha ∈ (0, 1]`.
pub fn snowflake(m: &FiniteMetricSpace, alpha: f64) -> Result<FiniteMetricSpace> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "snowflake exponent must lie in (0, 1], got {alpha}"
        )));
    }
    require_pseudometric(m)?;
    if alpha == 1.0 {
        return Ok(m.clone());
    }
    let d = m.d.iter().map(|v| v.powf(alpha)).collect();
    FiniteMetricSpace::from_flat(m.labels.clone(), d, m.pseudo)
}

fn check_terms(values: &[f64], exponent: f64, what: &str) -> Result<()> {
    if !(exponent >= 1.0) || !exponent.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{what} exponent must be a finite real >= 1, got {exponent}"
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} needs finite non-negative values, got {v}"
        )));
    }
    Ok(())
}

/// `(Σ v^q)^(1/q)`; zero for an empty list.
pub fn lq_combine(values: &[f64], q: f64) -> Result<f64> {
    check_terms(values, q, "lq_combine")?;
    Ok(lq_norm_unchecked(values.iter().copied(), q))
}

/// ℓq norm of non-negative terms, scaled by the largest term so that a
/// single non-zero term comes back unchanged.
pub(crate) fn lq_norm_unchecked(values: impl Iterator<Item = f64> + Clone, q: f64) -> f64 {
    let top = values.clone().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return values.sum();
    }
    let s: f64 = values.map(|v| (v / top).powf(q)).sum();
    top * s.powf(1.0 / q)
}

/// `Σ v^p`; zero for an empty list.
pub fn power_sum(values: &[f64], p: f64) -> Result<f64> {
    check_terms(values, p, "power_sum")?;
    Ok(values.iter().map(|v| v.powf(p)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: Vec<Vec<f64>>) -> FiniteMetricSpace {
        let labels = ["a", "b", "c", "d", "e"][..rows.len()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        FiniteMetricSpace::new(labels, rows, false).unwrap()
    }

    #[test]
    fn shape_errors() {
        let err = FiniteMetricSpace::new(vec!["a".into()], vec![vec![0.0, 1.0]], false);
        assert!(matches!(err, Err(Error::Shape(_))));
        let err = FiniteMetricSpace::new(vec!["a".into(), "b".into()], vec![vec![0.0]], false);
        assert!(matches!(err, Err(Error::Shape(_))));
        let err = FiniteMetricSpace::new(
            vec!["a".into(), "a".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            false,
        );
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn one_point_is_clean() {
        let m = space(vec![vec![0.0]]);
        let r = validate_metric(&m);
        assert!(r.is_clean());
        assert!(r.triangle_violations.is_empty() && r.zero_pairs.is_empty());
    }

    #[test]
    fn line_is_clean() {
        let m = FiniteMetricSpace::line(&[0.0, 0.5, 1.0]).unwrap();
        let r = validate_metric(&m);
        assert!(r.is_clean());
        assert!(r.zero_pairs.is_empty());
        assert_eq!(m.labels(), &["0", "0.5", "1"]);
    }

    #[test]
    fn triangle_violation_is_reported_once() {
        let m = space(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ]);
        let r = validate_metric(&m);
        assert_eq!(r.triangle_violations, vec![[0, 1, 2]]);
        assert!(!r.is_clean());
    }

    #[test]
    fn asymmetry_and_negatives() {
        let m = space(vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(!validate_metric(&m).symmetric);
        let m = space(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(!validate_metric(&m).nonneg);
    }

    #[test]
    fn quotient_identity_on_metrics() {
        let m = FiniteMetricSpace::line(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(quotient_pseudometric(&m).unwrap(), m);
    }

    #[test]
    fn quotient_collapses_zero_pairs() {
        let m = FiniteMetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            true,
        )
        .unwrap();
        assert_eq!(quotient_pseudometric(&m).unwrap().len(), 1);

        let m = FiniteMetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 0.0, 2.0],
                vec![0.0, 0.0, 2.0],
                vec![2.0, 2.0, 0.0],
            ],
            true,
        )
        .unwrap();
        let q = quotient_with_classes(&m).unwrap();
        assert_eq!(q.space.labels(), &["a", "c"]);
        assert_eq!(q.space.dist(0, 1), 2.0);
        assert_eq!(q.class_of, vec![0, 0, 1]);
        assert!(!q.space.is_pseudo());
        assert!(validate_metric(&q.space).is_clean());
    }

    #[test]
    fn snowflake_examples() {
        let m = FiniteMetricSpace::line(&[0.0, 4.0]).unwrap();
        assert_eq!(snowflake(&m, 0.5).unwrap().dist(0, 1), 2.0);

        let m = FiniteMetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(snowflake(&m, 1.0).unwrap(), m);
        let s = snowflake(&m, 0.5).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.dist(1, 2), 1.0);
        assert_eq!(s.dist(0, 2), 2f64.sqrt());
        assert!(validate_metric(&s).is_clean());
    }

    #[test]
    fn snowflake_rejects_bad_exponents() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0]).unwrap();
        for a in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(snowflake(&m, a), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn lq_and_power_sums() {
        assert_eq!(lq_combine(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        for q in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(lq_combine(&[0.37], q).unwrap(), 0.37);
        }
        assert_eq!(lq_combine(&[1.0; 4], 1.0).unwrap(), 4.0);
        assert_eq!(lq_combine(&[], 3.0).unwrap(), 0.0);
        assert!(lq_combine(&[-1.0], 2.0).is_err());
        assert!(lq_combine(&[1.0], 0.5).is_err());

        assert_eq!(power_sum(&[2.0, 2.0], 2.0).unwrap(), 8.0);
        assert_eq!(power_sum(&[], 1.7).unwrap(), 0.0);
        assert!((power_sum(&[0.1, 3.0, 1.0], 1.0).unwrap() - 4.1).abs() < 1e-15);
        assert!(power_sum(&[-0.1], 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"labels": ["x", "y"], "d": [[0, 2], [2, 0]]}"#;
        let m = FiniteMetricSpace::from_json_str(text).unwrap();
        assert!(!m.is_pseudo());
        assert_eq!(m.dist(0, 1), 2.0);
        let back = serde_json::to_string(&m.to_file()).unwrap();
        assert_eq!(FiniteMetricSpace::from_json_str(&back).unwrap(), m);
        assert!(FiniteMetricSpace::from_json_str(r#"{"labels": ["x"], "d": [[0, 1]]}"#).is_err());
    }
}
