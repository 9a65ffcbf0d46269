//! Per-level checks of the small-scale, far-pair and sandwich clauses.
//!
//! For each level `(X_n, T_n)` with thresholds `ε_n`, `η_n`:
//!
//! * clause 2: `d < ε_n ⇒ δ < η_n`
//! * clause 3: `d >= C ⇒ δ >= D`
//! * clause 4: `ε_n <= d < C ⇒ A⁻¹ d^{p/q} <= δ <= A d^{p/q}`
//!
//! where `δ = ‖T_n(u) - T_n(v)‖_q`. Strict inequalities are checked exactly.
//! Non-strict ones allow a relative slack of [`NONSTRICT_RELATIVE_TOL`] so
//! that maps which are exact in real arithmetic are not rejected for
//! rounding in the last place.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::Level;
use crate::error::{Error, Result};

pub const NONSTRICT_RELATIVE_TOL: f64 = 1e-12;

/// The constants `p, q, A, C, D` shared by every level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite real >= 1, got {v}"
                )));
            }
        }
        for (name, v) in [("A", self.a), ("C", self.c), ("D", self.d)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        self.p / self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClauseViolation {
    pub level: usize,
    pub clause: u8,
    pub u: usize,
    pub v: usize,
    pub source: f64,
    pub image: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClauseReport {
    pub levels: usize,
    pub pairs_checked: usize,
    pub violations: Vec<ClauseViolation>,
}

impl ClauseReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn check_thresholds(eps: &[f64], eta: &[f64], levels: usize) -> Result<()> {
    if eps.len() != levels || eta.len() != levels {
        return Err(Error::Shape(format!(
            "{levels} levels but {} eps and {} eta values",
            eps.len(),
            eta.len()
        )));
    }
    for (name, list) in [("eps", eps), ("eta", eta)] {
        if let Some(x) = list.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} values must be non-negative and finite, got {x}"
            )));
        }
    }
    Ok(())
}

/// Checks clauses 2 to 4 on every pair of one level.
pub fn check_level(
    index: usize,
    level: &Level,
    eps: f64,
    eta: f64,
    k: &Constants,
) -> (Vec<ClauseViolation>, usize) {
    let (m, t) = (&level.space, &level.map);
    let n = m.len();
    let exponent = k.exponent();
    let slack_hi = 1.0 + NONSTRICT_RELATIVE_TOL;
    let slack_lo = 1.0 - NONSTRICT_RELATIVE_TOL;
    let mut out = Vec::new();
    let mut checked = 0;
    // Coincident points are always closer than a positive eps.
    if n > 0 && eps > 0.0 && !(0.0 < eta) {
        out.push(ClauseViolation {
            level: index,
            clause: 2,
            u: 0,
            v: 0,
            source: 0.0,
            image: 0.0,
        });
    }
    for u in 0..n {
        for v in (u + 1)..n {
            checked += 1;
            let d = m.dist(u, v);
            let image = t.image_distance(u, v);
            let broken = if d < eps {
                (!(image < eta)).then_some(2)
            } else if d >= k.c {
                (image < k.d * slack_lo).then_some(3)
            } else {
                let target = d.powf(exponent);
                let ok = if target == 0.0 {
                    image == 0.0
                } else {
                    image / target <= k.a * slack_hi && target / image <= k.a * slack_hi
                };
                (!ok).then_some(4)
            };
            if let Some(clause) = broken {
                out.push(ClauseViolation {
                    level: index,
                    clause,
                    u,
                    v,
                    source: d,
                    image,
                });
            }
        }
    }
    (out, checked)
}

/// Checks clauses 2 to 4 on every level. Levels are scanned in parallel and
/// violations reported in level order.
pub fn check_clauses(
    levels: &[Level],
    eps: &[f64],
    eta: &[f64],
    k: &Constants,
) -> Result<ClauseReport> {
    k.validate()?;
    check_thresholds(eps, eta, levels.len())?;
    for (i, l) in levels.iter().enumerate() {
        if l.map.q() != k.q {
            return Err(Error::InvalidArgument(format!(
                "level {i} maps into ℓ{} but q = {}",
                l.map.q(),
                k.q
            )));
        }
    }
    let parts: Vec<_> = levels
        .par_iter()
        .enumerate()
        .map(|(i, l)| check_level(i, l, eps[i], eta[i], k))
        .collect();
    let mut report = ClauseReport {
        levels: levels.len(),
        ..Default::default()
    };
    for (v, c) in parts {
        report.violations.extend(v);
        report.pairs_checked += c;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;
    use crate::metric::FiniteMetricSpace;

    fn identity_level(xs: &[f64]) -> Level {
        let m = FiniteMetricSpace::line(xs).unwrap();
        let t = Embedding::new(1.0, xs.iter().map(|&x| vec![x]).collect()).unwrap();
        Level::new(m, t).unwrap()
    }

    fn unit(p: f64, q: f64) -> Constants {
        Constants {
            p,
            q,
            a: 1.0,
            c: 2.0,
            d: 2.0,
        }
    }

    #[test]
    fn isometry_passes() {
        let l = identity_level(&[0.0, 0.05, 1.0, 3.0]);
        let r = check_clauses(&[l], &[0.1], &[0.1], &unit(1.0, 1.0)).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert_eq!(r.pairs_checked, 6);
    }

    #[test]
    fn each_clause_can_fail() {
        let l = identity_level(&[0.0, 0.05, 1.0, 3.0]);
        // eta too small for the pair at 0.05.
        let r = check_clauses(std::slice::from_ref(&l), &[0.1], &[0.05], &unit(1.0, 1.0)).unwrap();
        assert_eq!(r.violations.iter().map(|v| v.clause).collect::<Vec<_>>(), vec![2]);
        // The far pair at distance exactly C maps below D = 2.5.
        let mut k = unit(1.0, 1.0);
        k.d = 2.5;
        let r = check_clauses(std::slice::from_ref(&l), &[0.1], &[0.1], &k).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].clause, r.violations[0].u, r.violations[0].v), (3, 2, 3));
        // Exponent 2 breaks the sandwich at d = 0.95 but not at d = 1.
        let r = check_clauses(&[l], &[0.1], &[0.1], &unit(2.0, 1.0)).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].clause, r.violations[0].u, r.violations[0].v), (4, 1, 2));
    }

    #[test]
    fn positive_eps_needs_positive_eta() {
        let l = identity_level(&[0.0, 1.0]);
        let r = check_clauses(&[l], &[0.1], &[0.0], &unit(1.0, 1.0)).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].u, r.violations[0].v), (0, 0));
    }

    #[test]
    fn rejects_mismatched_lists() {
        let l = identity_level(&[0.0, 1.0]);
        assert!(check_clauses(std::slice::from_ref(&l), &[0.1, 0.1], &[0.1], &unit(1.0, 1.0)).is_err());
        assert!(check_clauses(&[l], &[0.1], &[0.1], &unit(1.0, 2.0)).is_err());
    }
}
