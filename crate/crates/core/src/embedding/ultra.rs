//! Exact power maps of ultrametrics into `ℓq`.
//!
//! An ultrametric is a rooted tree of balls. Give every ball `S` of height
//! `H(S)` the value `c(S) = H(S)^{αq} / 2` (leaves get 0) and every tree edge
//! from parent `P` to child `S` its own coordinate, of size
//! `(c(P) - c(S))^{1/q}`. A point carries the edge coordinates along its root
//! path. Two points then differ exactly on the edges between them and their
//! lowest common ball `L`, and the q-th powers telescope to
//! `2 c(L) = d(u,v)^{αq}`.

use super::Embedding;
use crate::error::{Error, Result};
use crate::metric::{require_metric, FiniteMetricSpace};

fn check_ultrametric(m: &FiniteMetricSpace) -> Result<()> {
    let n = m.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m.dist(i, k) > m.dist(i, j).max(m.dist(j, k)) {
                    return Err(Error::InvalidMetric(format!(
                        "not an ultrametric: d({a},{c}) > max(d({a},{b}), d({b},{c}))",
                        a = m.label(i),
                        b = m.label(j),
                        c = m.label(k)
                    )));
                }
            }
        }
    }
    Ok(())
}

struct Builder<'a> {
    m: &'a FiniteMetricSpace,
    exponent: f64,
    q: f64,
    /// (members, edge length) for every non-root ball, in DFS order.
    edges: Vec<(Vec<usize>, f64)>,
}

impl Builder<'_> {
    fn height(&self, ball: &[usize]) -> f64 {
        let a = ball[0];
        ball.iter().map(|&b| self.m.dist(a, b)).fold(0.0, f64::max)
    }

    fn value(&self, height: f64) -> f64 {
        if height == 0.0 {
            0.0
        } else {
            0.5 * height.powf(self.exponent)
        }
    }

    fn split(&mut self, ball: &[usize]) {
        let h = self.height(ball);
        if h == 0.0 {
            return;
        }
        let parent = self.value(h);
        let mut taken = vec![false; ball.len()];
        for start in 0..ball.len() {
            if taken[start] {
                continue;
            }
            let a = ball[start];
            let mut child = Vec::new();
            for (k, &b) in ball.iter().enumerate() {
                if !taken[k] && self.m.dist(a, b) < h {
                    taken[k] = true;
                    child.push(b);
                }
            }
            let gap = parent - self.value(self.height(&child));
            self.edges.push((child.clone(), gap.powf(1.0 / self.q)));
            self.split(&child);
        }
    }
}

/// A map `T` into `ℓq^m` with `‖T(u) - T(v)‖_q = d(u,v)^α` for every pair of
/// an ultrametric space, one coordinate per non-root ball.
pub fn exact_power_map(m: &FiniteMetricSpace, alpha: f64, q: f64) -> Result<Embedding> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "exponent must be positive, got {alpha}"
        )));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target exponent q must be a finite real >= 1, got {q}"
        )));
    }
    require_metric(m)?;
    check_ultrametric(m)?;
    let n = m.len();
    let mut b = Builder {
        m,
        exponent: alpha * q,
        q,
        edges: Vec::new(),
    };
    if n > 0 {
        b.split(&(0..n).collect::<Vec<_>>());
    }
    let mut coords = vec![vec![0.0; b.edges.len()]; n];
    for (e, (members, w)) in b.edges.iter().enumerate() {
        for &u in members {
            coords[u][e] = *w;
        }
    }
    Embedding::new(q, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{comb_ultrametric, random_ultrametric};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_exact(m: &FiniteMetricSpace, t: &Embedding, alpha: f64) {
        for u in 0..m.len() {
            for v in 0..m.len() {
                let want = m.dist(u, v).powf(alpha);
                let got = t.image_distance(u, v);
                assert!(
                    (got - want).abs() <= 1e-13 * want.max(1e-300),
                    "pair ({u},{v}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn comb_is_reproduced_exactly() {
        let m = comb_ultrametric(&[1.0, 0.5, 0.25, 0.125]);
        for (alpha, q) in [(1.0, 1.0), (0.5, 2.0), (2.0, 1.0), (1.5, 1.5)] {
            let t = exact_power_map(&m, alpha, q).unwrap();
            assert_exact(&m, &t, alpha);
        }
    }

    #[test]
    fn random_ultrametrics_are_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_ultrametric(9, 3.0, &mut rng);
            let t = exact_power_map(&m, 0.75, 2.0).unwrap();
            assert_exact(&m, &t, 0.75);
        }
    }

    #[test]
    fn rejects_non_ultrametric() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            exact_power_map(&m, 1.0, 2.0),
            Err(Error::InvalidMetric(_))
        ));
    }
}
