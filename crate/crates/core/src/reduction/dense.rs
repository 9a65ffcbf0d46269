//! Snapping product points onto per-level nets of radius `2^-n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::nets::{greedy_net, Net};

/// The covering radius used at level `n`.
pub fn dense_radius(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Greedy nets of radius `2^-n` in label order, one per level.
pub fn dense_nets(spaces: &[FiniteMetricSpace]) -> Result<Vec<Net>> {
    spaces
        .iter()
        .enumerate()
        .map(|(n, m)| greedy_net(m, dense_radius(n), None))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseSnap {
    pub snapped: Vec<usize>,
    pub displacement: Vec<f64>,
    /// `Σ_n d_n(x(n), ϑ(x)(n))^p`.
    pub displacement_sum: f64,
    /// `Σ_n 2^{-np}` over the same levels; the displacement sum is below it.
    pub bound: f64,
}

/// `ϑ(x)(n)` is the first member of `nets[n]`, in member order, strictly
/// within `2^-n` of `x(n)`.
pub fn dense_snap(
    spaces: &[FiniteMetricSpace],
    nets: &[Net],
    x: &[usize],
    p: f64,
) -> Result<DenseSnap> {
    if nets.len() != spaces.len() || x.len() != spaces.len() {
        return Err(Error::Shape(format!(
            "{} levels, {} nets and {} points",
            spaces.len(),
            nets.len(),
            x.len()
        )));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p must be a finite real >= 1, got {p}"
        )));
    }
    let mut out = DenseSnap {
        snapped: Vec::with_capacity(x.len()),
        displacement: Vec::with_capacity(x.len()),
        displacement_sum: 0.0,
        bound: 0.0,
    };
    for (n, ((m, net), &u)) in spaces.iter().zip(nets).zip(x).enumerate() {
        if u >= m.len() || net.members.iter().any(|&s| s >= m.len()) {
            return Err(Error::InvalidArgument(format!(
                "point or net member out of range at level {n}"
            )));
        }
        let radius = dense_radius(n);
        let s = net
            .members
            .iter()
            .copied()
            .find(|&s| m.dist(u, s) < radius)
            .ok_or(Error::Uncovered {
                level: n,
                point: u,
                radius,
            })?;
        let d = m.dist(u, s);
        out.snapped.push(s);
        out.displacement.push(d);
        out.displacement_sum += d.powf(p);
        out.bound += radius.powf(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_repaired_metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn members_stay_put() {
        let spaces: Vec<_> = (0..4)
            .map(|_| FiniteMetricSpace::line(&[0.0, 0.3, 0.9, 2.0]).unwrap())
            .collect();
        let nets = dense_nets(&spaces).unwrap();
        let x: Vec<usize> = nets.iter().map(|n| *n.members.last().unwrap()).collect();
        assert_eq!(dense_snap(&spaces, &nets, &x, 1.0).unwrap().snapped, x);
    }

    #[test]
    fn displacement_is_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spaces: Vec<_> = (0..10).map(|_| random_repaired_metric(15, &mut rng)).collect();
        let nets = dense_nets(&spaces).unwrap();
        for p in [1.0, 2.0] {
            let x: Vec<usize> = spaces.iter().map(|m| rng.random_range(0..m.len())).collect();
            let r = dense_snap(&spaces, &nets, &x, p).unwrap();
            assert!(r.displacement_sum < r.bound);
            for (n, d) in r.displacement.iter().enumerate() {
                assert!(*d < dense_radius(n));
            }
        }
    }

    #[test]
    fn pointwise_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let spaces: Vec<_> = (0..6).map(|_| random_repaired_metric(8, &mut rng)).collect();
        let nets = dense_nets(&spaces).unwrap();
        let x = vec![0, 1, 2, 3, 4, 5];
        let y = vec![7, 6, 5, 3, 4, 5];
        let (sx, sy) = (
            dense_snap(&spaces, &nets, &x, 1.0).unwrap(),
            dense_snap(&spaces, &nets, &y, 1.0).unwrap(),
        );
        assert_eq!(sx.snapped[3..], sy.snapped[3..]);
    }

    #[test]
    fn uncovered_point_is_reported() {
        let m = FiniteMetricSpace::line(&[0.0, 5.0]).unwrap();
        let net = Net {
            eps: 1.0,
            members: vec![0],
            assignment: vec![0, 0],
        };
        assert!(matches!(
            dense_snap(&[m], &[net], &[1], 1.0),
            Err(Error::Uncovered { level: 0, point: 1, .. })
        ));
    }
}
