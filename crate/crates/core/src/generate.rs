//! Seeded generators for test and simulation instances.

use rand::Rng;

use crate::metric::FiniteMetricSpace;

/// Granularity of generated edge weights. Weights are multiples of
/// `1/WEIGHT_STEPS` in `[1/WEIGHT_STEPS, 1]`, so shortest-path sums are exact
/// in `f64` and the repaired matrix satisfies the triangle inequality exactly.
pub const WEIGHT_STEPS: u32 = 1024;

/// A random metric on `n` points: random symmetric weights repaired by
/// all-pairs shortest paths.
pub fn random_repaired_metric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = rng.random_range(1..=WEIGHT_STEPS) as f64 / WEIGHT_STEPS as f64;
            d[i * n + j] = w;
            d[j * n + i] = w;
        }
    }
    shortest_path_repair(n, &mut d);
    FiniteMetricSpace::unlabeled(n, d, false).expect("generated matrix is square and finite")
}

/// Floyd-Warshall in place on a row-major `n*n` matrix.
pub fn shortest_path_repair(n: usize, d: &mut [f64]) {
    for k in 0..n {
        for i in 0..n {
            let ik = d[i * n + k];
            for j in 0..n {
                let via = ik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
}

/// Two groups of `per_side` points. Within a group points sit on a line with
/// spacing `spacing`; the groups are `gap` apart.
pub fn two_clusters(per_side: usize, spacing: f64, gap: f64) -> FiniteMetricSpace {
    let mut xs: Vec<f64> = (0..per_side).map(|i| i as f64 * spacing).collect();
    let offset = (per_side.saturating_sub(1)) as f64 * spacing + gap;
    xs.extend((0..per_side).map(|i| offset + i as f64 * spacing));
    FiniteMetricSpace::line(&xs).expect("finite coordinates")
}

/// A random ultrametric on `n` points with root height `top`. Built by
/// recursive random splits; every child's height is the parent's times a
/// factor drawn from `[0.2, 0.9]`.
pub fn random_ultrametric<R: Rng + ?Sized>(n: usize, top: f64, rng: &mut R) -> FiniteMetricSpace {
    let mut d = vec![0.0; n * n];
    let points: Vec<usize> = (0..n).collect();
    split(&points, top, n, &mut d, rng);
    FiniteMetricSpace::unlabeled(n, d, false).expect("generated matrix is square and finite")
}

fn split<R: Rng + ?Sized>(points: &[usize], height: f64, n: usize, d: &mut [f64], rng: &mut R) {
    if points.len() < 2 {
        return;
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &p in points {
        if rng.random_bool(0.5) {
            left.push(p);
        } else {
            right.push(p);
        }
    }
    if left.is_empty() {
        left.push(right.pop().expect("at least two points"));
    } else if right.is_empty() {
        right.push(left.pop().expect("at least two points"));
    }
    for &a in &left {
        for &b in &right {
            d[a * n + b] = height;
            d[b * n + a] = height;
        }
    }
    for side in [&left, &right] {
        let h = height * rng.random_range(0.2..0.9);
        split(side, h, n, d, rng);
    }
}

/// The comb ultrametric on `heights.len() + 1` points: `d(i, j) =
/// heights[min(i, j)]` for `i != j`. `heights` must be strictly decreasing
/// and positive.
pub fn comb_ultrametric(heights: &[f64]) -> FiniteMetricSpace {
    let n = heights.len() + 1;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i * n + j] = heights[i.min(j)];
            }
        }
    }
    FiniteMetricSpace::unlabeled(n, d, false).expect("generated matrix is square and finite")
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::metric::validate_metric;

    #[test]
    fn repaired_metrics_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..12 {
            let m = random_repaired_metric(n, &mut rng);
            assert!(validate_metric(&m).is_clean(), "n={n}");
        }
    }

    #[test]
    fn ultrametrics_satisfy_strong_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..10 {
            let m = random_ultrametric(n, 1.0, &mut rng);
            assert!(validate_metric(&m).is_clean());
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert!(m.dist(i, k) <= m.dist(i, j).max(m.dist(j, k)));
                    }
                }
            }
        }
        let comb = comb_ultrametric(&[1.0, 0.5, 0.25]);
        assert_eq!(comb.len(), 4);
        assert_eq!(comb.dist(3, 1), 0.5);
        assert!(validate_metric(&comb).is_clean());
    }
}
