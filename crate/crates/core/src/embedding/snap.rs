//! Nearest-point transfer maps and net snapping of block-map families.

use serde::{Deserialize, Serialize};

use super::{Level, PairCheck};
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::nets::{greedy_net, net_violations, Net};
use crate::reduction::clauses::{check_clauses, ClauseReport, Constants};

/// Checks `½ d(u,v) < d(R u, R v) < 2 d(u,v)` on every pair of a query set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorTwoCertificate {
    pub pairs_checked: usize,
    /// Extremes of `d(R u, R v) / d(u, v)` over the checked pairs.
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub violations: Vec<PairCheck>,
}

impl FactorTwoCertificate {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A nearest-point map from a query set into a pool, both given as point
/// indices of one ambient space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapMap {
    pub radius: f64,
    /// Query points, in the order given.
    pub points: Vec<usize>,
    /// The pool point chosen for each query point.
    pub image: Vec<usize>,
    pub displacement: Vec<f64>,
    pub certificate: FactorTwoCertificate,
}

fn check_indices(ambient: &FiniteMetricSpace, name: &str, set: &[usize]) -> Result<()> {
    if let Some(&i) = set.iter().find(|&&i| i >= ambient.len()) {
        return Err(Error::InvalidArgument(format!(
            "{name} point index {i} out of range for a {}-point space",
            ambient.len()
        )));
    }
    Ok(())
}

/// Smallest distance between distinct query points; `None` below two points.
fn min_gap(ambient: &FiniteMetricSpace, f: &[usize]) -> Result<Option<f64>> {
    let mut gap: Option<f64> = None;
    for (a, &u) in f.iter().enumerate() {
        for &v in &f[a + 1..] {
            let d = ambient.dist(u, v);
            if !(d > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "query points {} and {} coincide",
                    ambient.label(u),
                    ambient.label(v)
                )));
            }
            gap = Some(gap.map_or(d, |g| g.min(d)));
        }
    }
    Ok(gap)
}

fn factor_two(ambient: &FiniteMetricSpace, f: &[usize], image: &[usize]) -> FactorTwoCertificate {
    let mut cert = FactorTwoCertificate {
        pairs_checked: 0,
        min_ratio: None,
        max_ratio: None,
        violations: Vec::new(),
    };
    for a in 0..f.len() {
        for b in (a + 1)..f.len() {
            let d = ambient.dist(f[a], f[b]);
            let d2 = ambient.dist(image[a], image[b]);
            cert.pairs_checked += 1;
            let r = d2 / d;
            cert.min_ratio = Some(cert.min_ratio.map_or(r, |x| x.min(r)));
            cert.max_ratio = Some(cert.max_ratio.map_or(r, |x| x.max(r)));
            if !(0.5 * d < d2 && d2 < 2.0 * d) {
                cert.violations.push(PairCheck {
                    u: f[a],
                    v: f[b],
                    source: d,
                    image: d2,
                });
            }
        }
    }
    cert
}

/// Maps each query point to its nearest pool point (lowest index on ties),
/// failing if that point is not strictly within `radius`.
fn snap_within(
    ambient: &FiniteMetricSpace,
    f: &[usize],
    pool: &[usize],
    radius: f64,
) -> Result<SnapMap> {
    let mut image = Vec::with_capacity(f.len());
    let mut displacement = Vec::with_capacity(f.len());
    for &u in f {
        let best = pool
            .iter()
            .map(|&s| (ambient.dist(u, s), s))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        match best {
            Some((d, s)) if d < radius => {
                image.push(s);
                displacement.push(d);
            }
            other => {
                return Err(Error::NoPoolPoint {
                    point: u,
                    radius,
                    nearest: other.map_or(f64::INFINITY, |b| b.0),
                })
            }
        }
    }
    let certificate = factor_two(ambient, f, &image);
    Ok(SnapMap {
        radius,
        points: f.to_vec(),
        image,
        displacement,
        certificate,
    })
}

/// Moves each point of `f` to its nearest pool point, which must lie
/// strictly within `γ/4`, `γ` being the least distance inside `f`.
pub fn transfer_dense(
    ambient: &FiniteMetricSpace,
    f: &[usize],
    pool: &[usize],
) -> Result<SnapMap> {
    check_indices(ambient, "query", f)?;
    check_indices(ambient, "pool", pool)?;
    let radius = min_gap(ambient, f)?.map_or(f64::INFINITY, |g| g / 4.0);
    snap_within(ambient, f, pool, radius)
}

/// Whether `k` satisfies `1/k <= d(u,v)` on distinct query points and, when
/// `c` is given, `d(u,v) <= c - 1/k` on pairs with `d(u,v) < c`.
fn k_admissible(ambient: &FiniteMetricSpace, f: &[usize], k: u64, c: Option<f64>) -> Option<String> {
    let step = 1.0 / k as f64;
    for (a, &u) in f.iter().enumerate() {
        for &v in &f[a + 1..] {
            let d = ambient.dist(u, v);
            if step > d {
                return Some(format!(
                    "1/k = {step} exceeds d({}, {}) = {d}",
                    ambient.label(u),
                    ambient.label(v)
                ));
            }
            if let Some(c) = c {
                if d < c && d > c - step {
                    return Some(format!(
                        "d({}, {}) = {d} is within 1/k = {step} of C = {c}",
                        ambient.label(u),
                        ambient.label(v)
                    ));
                }
            }
        }
    }
    None
}

/// The least `k >= 1` accepted by [`round_to_dense`] for this query set.
pub fn minimal_k(ambient: &FiniteMetricSpace, f: &[usize], c: Option<f64>) -> Result<u64> {
    check_indices(ambient, "query", f)?;
    let mut bound = min_gap(ambient, f)?.map_or(1.0, |g| 1.0 / g);
    if let Some(c) = c {
        for (a, &u) in f.iter().enumerate() {
            for &v in &f[a + 1..] {
                let d = ambient.dist(u, v);
                if d < c {
                    bound = bound.max(1.0 / (c - d));
                }
            }
        }
    }
    if !(bound < u64::MAX as f64) {
        return Err(Error::InvalidArgument("no finite k satisfies the conditions".into()));
    }
    // Admissibility is upward closed in k; the float bound is only a start.
    let mut k = (bound.floor() as u64).max(1);
    while k_admissible(ambient, f, k, c).is_some() {
        k += 1;
    }
    while k > 1 && k_admissible(ambient, f, k - 1, c).is_none() {
        k -= 1;
    }
    Ok(k)
}

/// Moves each point of `f` to its nearest pool point, which must lie
/// strictly within `1/(4k)`.
pub fn round_to_dense(
    ambient: &FiniteMetricSpace,
    f: &[usize],
    pool: &[usize],
    k: u64,
    c: Option<f64>,
) -> Result<SnapMap> {
    check_indices(ambient, "query", f)?;
    check_indices(ambient, "pool", pool)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if c.is_some_and(|c| !(c > 0.0)) {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    min_gap(ambient, f)?;
    if let Some(why) = k_admissible(ambient, f, k, c) {
        return Err(Error::InvalidArgument(format!("k = {k} is not admissible: {why}")));
    }
    snap_within(ambient, f, pool, 1.0 / (4.0 * k as f64))
}

/// Inputs to net snapping: the family's constants and per-level `ε_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapParams {
    #[serde(flatten)]
    pub constants: Constants,
    pub eps: Vec<f64>,
}

/// `ε′ = 3ε`, `η′ = A (5ε)^{p/q}`, `A′ = 3^{p/q} A`, `C′ = C - 2 sup ε`,
/// `D′ = min(D, A⁻¹ (C/5)^{p/q})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    #[serde(flatten)]
    pub constants: Constants,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
}

impl DerivedConstants {
    pub fn from_params(params: &SnapParams) -> Self {
        let k = &params.constants;
        let e = k.exponent();
        let sup = params.eps.iter().copied().fold(0.0, f64::max);
        DerivedConstants {
            constants: Constants {
                p: k.p,
                q: k.q,
                a: 3f64.powf(e) * k.a,
                c: k.c - 2.0 * sup,
                d: k.d.min((k.c / 5.0).powf(e) / k.a),
            },
            eps: params.eps.iter().map(|&x| 3.0 * x).collect(),
            eta: params.eps.iter().map(|&x| k.a * (5.0 * x).powf(e)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetSnapResult {
    #[serde(skip)]
    pub levels: Vec<Level>,
    pub derived: DerivedConstants,
    pub verification: ClauseReport,
}

fn check_net(index: usize, level: &Level, net: &Net, eps: f64) -> Result<()> {
    let m = &level.space;
    if net.assignment.len() != m.len() || net.members.iter().any(|&s| s >= m.len()) {
        return Err(Error::Shape(format!(
            "net at level {index} does not match its {}-point space",
            m.len()
        )));
    }
    if eps == 0.0 {
        if let Some(u) = (0..m.len()).find(|&u| net.snap(u) != u) {
            return Err(Error::InvalidArgument(format!(
                "level {index} has eps = 0 but its net moves point {u}"
            )));
        }
        return Ok(());
    }
    if net.eps != eps {
        return Err(Error::InvalidArgument(format!(
            "net at level {index} has radius {} but eps is {eps}",
            net.eps
        )));
    }
    let v = net_violations(m, net);
    if let Some(&point) = v.covering.first() {
        return Err(Error::Uncovered {
            level: index,
            point,
            radius: eps,
        });
    }
    if !v.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "net at level {index} is not an eps-net: {v:?}"
        )));
    }
    Ok(())
}

/// Replaces each `T_n` by `T_n ∘ s_n`, where `s_n` sends a point to its net
/// member, and re-checks clauses 2 to 4 with the derived constants.
pub fn net_snap(levels: &[Level], nets: &[Net], params: &SnapParams) -> Result<NetSnapResult> {
    let k = &params.constants;
    k.validate()?;
    if nets.len() != levels.len() || params.eps.len() != levels.len() {
        return Err(Error::Shape(format!(
            "{} levels, {} nets and {} eps values",
            levels.len(),
            nets.len(),
            params.eps.len()
        )));
    }
    if let Some(x) = params.eps.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eps values must be non-negative and finite, got {x}"
        )));
    }
    let sup = params.eps.iter().copied().fold(0.0, f64::max);
    if !(5.0 * sup < k.c) {
        return Err(Error::InvalidArgument(format!(
            "need 5 sup eps < C, got sup eps = {sup} and C = {}",
            k.c
        )));
    }
    for (i, ((l, net), &eps)) in levels.iter().zip(nets).zip(&params.eps).enumerate() {
        check_net(i, l, net, eps)?;
    }
    let snapped: Vec<Level> = levels
        .iter()
        .zip(nets)
        .map(|(l, net)| Level {
            space: l.space.clone(),
            map: l.map.compose(|u| net.snap(u), l.space.len()),
        })
        .collect();
    let derived = DerivedConstants::from_params(params);
    let verification = check_clauses(&snapped, &derived.eps, &derived.eta, &derived.constants)?;
    Ok(NetSnapResult {
        levels: snapped,
        derived,
        verification,
    })
}

/// [`net_snap`] with greedy nets in label order (identity nets where
/// `ε_n = 0`).
pub fn net_snap_greedy(levels: &[Level], params: &SnapParams) -> Result<NetSnapResult> {
    if params.eps.len() != levels.len() {
        return Err(Error::Shape(format!(
            "{} levels but {} eps values",
            levels.len(),
            params.eps.len()
        )));
    }
    let nets = levels
        .iter()
        .zip(&params.eps)
        .map(|(l, &eps)| {
            if eps == 0.0 {
                Ok(Net::identity(l.space.len()))
            } else {
                greedy_net(&l.space, eps, None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    net_snap(levels, &nets, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{exact_power_map, Embedding};
    use crate::generate::random_ultrametric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::line(xs).unwrap()
    }

    #[test]
    fn transfer_with_pool_containing_f_is_identity() {
        let m = line(&[0.0, 0.4, 1.0, 1.7]);
        let r = transfer_dense(&m, &[0, 2, 3], &[3, 2, 1, 0]).unwrap();
        assert_eq!(r.image, vec![0, 2, 3]);
        assert_eq!(r.displacement, vec![0.0; 3]);
        assert_eq!((r.certificate.min_ratio, r.certificate.max_ratio), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn transfer_moves_to_nearby_pool() {
        let m = line(&[0.0, 1.0, 0.1, 0.9]);
        let r = transfer_dense(&m, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(r.image, vec![2, 3]);
        assert_eq!(r.radius, 0.25);
        assert!((m.dist(2, 3) - 0.8).abs() < 1e-15);
        assert!(r.certificate.holds());
    }

    #[test]
    fn transfer_rejects_far_pool() {
        let m = line(&[0.0, 1.0, 0.3, 0.8]);
        match transfer_dense(&m, &[0, 1], &[2, 3]) {
            Err(Error::NoPoolPoint { point, radius, .. }) => assert_eq!((point, radius), (0, 0.25)),
            other => panic!("expected a missing pool point, got {other:?}"),
        }
    }

    #[test]
    fn transfer_breaks_ties_by_lowest_index() {
        let m = line(&[0.0, 4.0, 0.5, -0.5]);
        let r = transfer_dense(&m, &[0, 1], &[2, 3, 1]).unwrap();
        assert_eq!(r.image, vec![2, 1]);
    }

    #[test]
    fn rounding_examples() {
        let m = line(&[0.0, 1.0, 0.1, 0.95, 0.2, 0.8, 0.3, 0.7]);
        assert_eq!(round_to_dense(&m, &[0, 1], &[0, 1], 1, None).unwrap().image, vec![0, 1]);
        let r = round_to_dense(&m, &[0, 1], &[2, 3], 1, None).unwrap();
        assert_eq!(r.image, vec![2, 3]);
        assert!(r.certificate.holds());
        // 0.2 and 0.8 are still strictly inside the radius 1/4.
        assert_eq!(round_to_dense(&m, &[0, 1], &[4, 5], 1, None).unwrap().image, vec![4, 5]);
        assert!(matches!(
            round_to_dense(&m, &[0, 1], &[6, 7], 1, None),
            Err(Error::NoPoolPoint { point: 0, .. })
        ));
    }

    #[test]
    fn rounding_rejects_bad_k() {
        let m = line(&[0.0, 0.5, 0.1]);
        assert!(round_to_dense(&m, &[0, 1], &[2], 0, None).is_err());
        // 1/k = 1 exceeds the gap 0.5.
        assert!(matches!(
            round_to_dense(&m, &[0, 1], &[0, 1], 1, None),
            Err(Error::InvalidArgument(_))
        ));
        // With C = 0.6 the pair at 0.5 needs 1/k <= 0.1.
        assert!(round_to_dense(&m, &[0, 1], &[0, 1], 5, Some(0.6)).is_err());
        assert!(round_to_dense(&m, &[0, 1], &[0, 1], 20, Some(0.6)).is_ok());
    }

    #[test]
    fn minimal_k_is_admissible_and_least() {
        let m = line(&[0.0, 0.5, 1.3, 2.0]);
        for c in [None, Some(1.0), Some(2.5)] {
            let k = minimal_k(&m, &[0, 1, 2, 3], c).unwrap();
            assert!(k_admissible(&m, &[0, 1, 2, 3], k, c).is_none());
            if k > 1 {
                assert!(k_admissible(&m, &[0, 1, 2, 3], k - 1, c).is_some());
            }
        }
        assert_eq!(minimal_k(&m, &[0, 1, 2, 3], None).unwrap(), 2);
        assert_eq!(minimal_k(&m, &[2], None).unwrap(), 1);
    }

    fn params(p: f64, q: f64, a: f64, c: f64, d: f64, eps: Vec<f64>) -> SnapParams {
        SnapParams {
            constants: Constants { p, q, a, c, d },
            eps,
        }
    }

    #[test]
    fn derived_constants_by_substitution() {
        let k = DerivedConstants::from_params(&params(2.0, 2.0, 2.0, 1.0, 0.5, vec![0.01]));
        assert_eq!(k.eps, vec![0.03]);
        assert_eq!(k.eta, vec![0.1]);
        assert_eq!(k.constants.a, 6.0);
        assert_eq!(k.constants.c, 0.98);
        assert_eq!(k.constants.d, 0.1);
        let k = DerivedConstants::from_params(&params(1.0, 1.0, 2.0, 1.0, 0.05, vec![0.01]));
        assert_eq!(k.constants.d, 0.05);
    }

    #[test]
    fn zero_eps_keeps_the_map() {
        let m = line(&[0.0, 1.0, 3.0]);
        let t = Embedding::new(1.0, vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let l = Level::new(m, t.clone()).unwrap();
        let r = net_snap_greedy(&[l], &params(1.0, 1.0, 1.0, 2.0, 2.0, vec![0.0])).unwrap();
        assert_eq!(r.levels[0].map, t);
        assert_eq!(r.derived.eps, vec![0.0]);
        assert_eq!(r.derived.eta, vec![0.0]);
        assert_eq!(r.derived.constants.c, 2.0);
        assert_eq!(r.derived.constants.a, 3.0);
        assert!(r.verification.passed());
    }

    #[test]
    fn rejects_large_eps() {
        let m = line(&[0.0, 1.0]);
        let t = Embedding::new(1.0, vec![vec![0.0], vec![1.0]]).unwrap();
        let l = Level::new(m, t).unwrap();
        assert!(net_snap_greedy(&[l], &params(1.0, 1.0, 1.0, 1.0, 1.0, vec![0.2])).is_err());
    }

    #[test]
    fn snapped_exact_power_families_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let (p, q) = ([1.0, 1.5, 2.0][rng.random_range(0..3)], [1.0, 1.5, 2.0][rng.random_range(0..3)]);
            let c = 1.0;
            let levels: Vec<Level> = (0..3)
                .map(|_| {
                    let m = random_ultrametric(12, 2.0, &mut rng);
                    let t = exact_power_map(&m, p / q, q).unwrap();
                    Level::new(m, t).unwrap()
                })
                .collect();
            let eps: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..0.19)).collect();
            let r = net_snap_greedy(&levels, &params(p, q, 1.0, c, c.powf(p / q), eps)).unwrap();
            assert!(r.verification.passed(), "{:?}", r.verification.violations);
        }
    }
}
