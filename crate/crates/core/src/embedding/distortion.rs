use serde::Serialize;

use super::Embedding;
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRatio {
    pub u: usize,
    pub v: usize,
    pub ratio: f64,
}

/// A pair whose image distance broke a clause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCheck {
    pub u: usize,
    pub v: usize,
    pub source: f64,
    pub image: f64,
}

/// Measured Hölder distortion of a map, optionally split at scale `c`.
///
/// `a` is the least constant with `a⁻¹ d^α <= d' <= a d^α` on every pair
/// below `c` (every pair when `c` is absent). When bounds were supplied,
/// `clause1_violations` lists pairs with `d >= c` and `d' < d_bound`, and
/// `clause2_violations` lists pairs below `c` outside the `a_bound` sandwich.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionCertificate {
    pub alpha: f64,
    pub a: f64,
    pub c: Option<f64>,
    /// Smallest image distance among pairs with `d >= c`.
    pub d: Option<f64>,
    pub a_bound: Option<f64>,
    pub d_bound: Option<f64>,
    pub worst_upper_pair: Option<PairRatio>,
    pub worst_lower_pair: Option<PairRatio>,
    pub clause1_violations: Vec<PairCheck>,
    pub clause2_violations: Vec<PairCheck>,
    pub pairs_checked: usize,
}

impl DistortionCertificate {
    pub fn passed(&self) -> bool {
        self.clause1_violations.is_empty() && self.clause2_violations.is_empty()
    }
}

fn check_inputs(m: &FiniteMetricSpace, t: &Embedding, alpha: f64) -> Result<()> {
    t.check_source(m)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Hölder exponent must be positive, got {alpha}"
        )));
    }
    let n = m.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if !(m.dist(i, j) > 0.0) {
                return Err(Error::InvalidMetric(format!(
                    "points {} and {} are at distance {}; quotient first",
                    m.label(i),
                    m.label(j),
                    m.dist(i, j)
                )));
            }
        }
    }
    Ok(())
}

/// Shared scan. Ratios are compared directly, never re-multiplied, so a
/// certificate verified against its own measured `a` passes exactly.
pub(crate) fn certify(
    m: &FiniteMetricSpace,
    t: &Embedding,
    alpha: f64,
    c: Option<f64>,
    bounds: Option<(f64, f64)>,
) -> DistortionCertificate {
    let n = m.len();
    let mut cert = DistortionCertificate {
        alpha,
        a: 1.0,
        c,
        d: None,
        a_bound: bounds.map(|b| b.0),
        d_bound: bounds.map(|b| b.1),
        worst_upper_pair: None,
        worst_lower_pair: None,
        clause1_violations: Vec::new(),
        clause2_violations: Vec::new(),
        pairs_checked: 0,
    };
    for u in 0..n {
        for v in (u + 1)..n {
            let d = m.dist(u, v);
            let image = t.image_distance(u, v);
            cert.pairs_checked += 1;
            if c.is_some_and(|c| d >= c) {
                cert.d = Some(cert.d.map_or(image, |m: f64| m.min(image)));
                if let Some((_, d_bound)) = bounds {
                    if image < d_bound {
                        cert.clause1_violations.push(PairCheck { u, v, source: d, image });
                    }
                }
                continue;
            }
            let target = d.powf(alpha);
            let upper = image / target;
            let lower = target / image;
            if cert.worst_upper_pair.is_none_or(|w| upper > w.ratio) {
                cert.worst_upper_pair = Some(PairRatio { u, v, ratio: upper });
            }
            if cert.worst_lower_pair.is_none_or(|w| lower > w.ratio) {
                cert.worst_lower_pair = Some(PairRatio { u, v, ratio: lower });
            }
            cert.a = cert.a.max(upper).max(lower);
            if let Some((a_bound, _)) = bounds {
                if upper > a_bound || lower > a_bound {
                    cert.clause2_violations.push(PairCheck { u, v, source: d, image });
                }
            }
        }
    }
    cert
}

/// Least `A` with `A⁻¹ d(u,v)^α <= d'(Tu, Tv) <= A d(u,v)^α` over all pairs.
pub fn holder_distortion(
    m: &FiniteMetricSpace,
    t: &Embedding,
    alpha: f64,
) -> Result<DistortionCertificate> {
    check_inputs(m, t, alpha)?;
    if m.len() < 2 {
        return Err(Error::InvalidArgument(
            "distortion needs at least two points".into(),
        ));
    }
    let n = m.len();
    for u in 0..n {
        for v in (u + 1)..n {
            if t.image_distance(u, v) == 0.0 {
                return Err(Error::Degenerate { u, v });
            }
        }
    }
    Ok(certify(m, t, alpha, None, None))
}

/// Checks the two-clause split at scale `c`: pairs with `d >= c` must map
/// at least `d_bound` apart; pairs below `c` must satisfy the Hölder
/// sandwich with constant `a_bound`. Violations are data, not errors.
pub fn cfh_verify(
    m: &FiniteMetricSpace,
    t: &Embedding,
    alpha: f64,
    c: f64,
    a_bound: f64,
    d_bound: f64,
) -> Result<DistortionCertificate> {
    check_inputs(m, t, alpha)?;
    for (name, v) in [("C", c), ("A", a_bound), ("D", d_bound)] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(certify(m, t, alpha, Some(c), Some((a_bound, d_bound))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::line(xs).unwrap()
    }

    #[test]
    fn two_point_snowflake_is_exact() {
        let m = line(&[0.0, 4.0]);
        let t = Embedding::new(2.0, vec![vec![0.0], vec![2.0]]).unwrap();
        let cert = holder_distortion(&m, &t, 0.5).unwrap();
        assert_eq!(cert.a, 1.0);
    }

    #[test]
    fn identity_is_an_isometry() {
        let xs = [0.0, 0.3, 1.1, 2.5];
        let m = line(&xs);
        let t = Embedding::new(1.0, xs.iter().map(|&x| vec![x]).collect()).unwrap();
        assert_eq!(holder_distortion(&m, &t, 1.0).unwrap().a, 1.0);
    }

    #[test]
    fn collapsed_map_is_degenerate() {
        let m = line(&[0.0, 1.0, 2.0]);
        let t = Embedding::new(2.0, vec![vec![1.0]; 3]).unwrap();
        assert!(matches!(
            holder_distortion(&m, &t, 1.0),
            Err(Error::Degenerate { u: 0, v: 1 })
        ));
    }

    #[test]
    fn worst_pairs_are_recorded() {
        let m = line(&[0.0, 1.0, 2.0]);
        let t = Embedding::new(2.0, vec![vec![0.0], vec![2.0], vec![2.5]]).unwrap();
        let cert = holder_distortion(&m, &t, 1.0).unwrap();
        assert_eq!(cert.a, 2.0);
        let up = cert.worst_upper_pair.unwrap();
        assert_eq!((up.u, up.v, up.ratio), (0, 1, 2.0));
        let lo = cert.worst_lower_pair.unwrap();
        assert_eq!((lo.u, lo.v, lo.ratio), (1, 2, 2.0));
    }

    #[test]
    fn cfh_clause_one_is_vacuous_above_diameter() {
        let m = line(&[0.0, 1.0, 3.0]);
        let t = Embedding::new(2.0, vec![vec![0.0], vec![1.2], vec![2.9]]).unwrap();
        let cert = cfh_verify(&m, &t, 1.0, 10.0, 2.0, 1.0).unwrap();
        assert!(cert.clause1_violations.is_empty());
        assert!(cert.d.is_none());
        assert!(cert.passed());
    }

    #[test]
    fn cfh_flags_collapsed_far_pair() {
        // The far pair (0, 10) lands 0.5 apart, below D = 1.
        let m = line(&[0.0, 0.5, 10.0]);
        let t = Embedding::new(2.0, vec![vec![0.0], vec![0.5], vec![0.5]]).unwrap();
        let cert = cfh_verify(&m, &t, 1.0, 5.0, 1.5, 1.0).unwrap();
        assert_eq!(cert.clause1_violations.len(), 2);
        let far = cert.clause1_violations[0];
        assert_eq!((far.u, far.v, far.source, far.image), (0, 2, 10.0, 0.5));
        assert!(cert.clause2_violations.is_empty());
        assert!(!cert.passed());
    }

    #[test]
    fn certificate_round_trips_through_verify() {
        let m = line(&[0.0, 0.7, 1.9, 3.2]);
        let t = Embedding::new(
            2.0,
            vec![vec![0.1, 0.0], vec![0.5, 0.6], vec![1.3, 0.2], vec![1.7, 1.1]],
        )
        .unwrap();
        let alpha = 0.5;
        let cert = holder_distortion(&m, &t, alpha).unwrap();
        let again = cfh_verify(&m, &t, alpha, m.diameter() * 2.0, cert.a, 1.0).unwrap();
        assert!(again.passed());
        assert_eq!(again.a, cert.a);
        let tighter = cfh_verify(&m, &t, alpha, m.diameter() * 2.0, cert.a * 0.999, 1.0).unwrap();
        assert!(!tighter.passed());
    }
}
