//! Distance sequences with closed-form convergence behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence `n ↦ d_n`, indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// `d_n = values[n]`, then 0.
    FiniteSupport { values: Vec<f64> },
    /// `d_n = c (n+1)^{-s}`.
    Power { c: f64, s: f64 },
    /// `d_n = c r^n`.
    Geometric { c: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Convergent,
    Divergent,
}

impl TailModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TailModel::FiniteSupport { values } => {
                values.iter().all(|v| *v >= 0.0 && v.is_finite())
            }
            TailModel::Power { c, s } => *c > 0.0 && *s > 0.0 && c.is_finite() && s.is_finite(),
            TailModel::Geometric { c, r } => *c > 0.0 && c.is_finite() && *r > 0.0 && *r < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid tail model {self:?}")))
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        match self {
            TailModel::FiniteSupport { values } => values.get(n).copied().unwrap_or(0.0),
            TailModel::Power { c, s } => c * ((n + 1) as f64).powf(-s),
            TailModel::Geometric { c, r } => c * r.powi(n as i32),
        }
    }

    /// The model of `n ↦ d_n^α`.
    pub fn pushforward(&self, alpha: f64) -> TailModel {
        match self {
            TailModel::FiniteSupport { values } => TailModel::FiniteSupport {
                values: values.iter().map(|v| v.powf(alpha)).collect(),
            },
            TailModel::Power { c, s } => TailModel::Power {
                c: c.powf(alpha),
                s: s * alpha,
            },
            TailModel::Geometric { c, r } => TailModel::Geometric {
                c: c.powf(alpha),
                r: r.powf(alpha),
            },
        }
    }
}

/// Whether `Σ_n d_n^p` converges.
pub fn classify_tail(model: &TailModel, p: f64) -> Result<Convergence> {
    model.validate()?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p must be a finite real >= 1, got {p}"
        )));
    }
    Ok(match model {
        TailModel::FiniteSupport { .. } | TailModel::Geometric { .. } => Convergence::Convergent,
        TailModel::Power { s, .. } if s * p > 1.0 => Convergence::Convergent,
        TailModel::Power { .. } => Convergence::Divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        let c = |m: TailModel, p| classify_tail(&m, p).unwrap();
        assert_eq!(c(TailModel::Power { c: 1.0, s: 0.6 }, 2.0), Convergence::Convergent);
        assert_eq!(c(TailModel::Power { c: 1.0, s: 0.5 }, 2.0), Convergence::Divergent);
        assert_eq!(
            c(TailModel::FiniteSupport { values: vec![5.0, 7.0] }, 1.0),
            Convergence::Convergent
        );
        assert_eq!(c(TailModel::Geometric { c: 3.0, r: 0.9 }, 1.0), Convergence::Convergent);
    }

    #[test]
    fn pushforward_preserves_the_exponent_product() {
        let m = TailModel::Power { c: 2.0, s: 0.4 };
        let TailModel::Power { s, .. } = m.pushforward(2.5) else {
            unreachable!()
        };
        assert_eq!(s, 1.0);
        assert_eq!(
            classify_tail(&m, 2.5).unwrap(),
            classify_tail(&m.pushforward(2.5), 1.0).unwrap()
        );
    }

    #[test]
    fn values_and_json() {
        let m: TailModel = serde_json::from_str(r#"{"kind": "geometric", "c": 2, "r": 0.5}"#).unwrap();
        assert_eq!(m.value(3), 0.25);
        let f = TailModel::FiniteSupport { values: vec![1.0] };
        assert_eq!((f.value(0), f.value(5)), (1.0, 0.0));
        assert!(TailModel::Geometric { c: 1.0, r: 1.0 }.validate().is_err());
        assert!(TailModel::Power { c: 0.0, s: 1.0 }.validate().is_err());
    }
}
