//! Exhaustive grid oracle for tiny instances.
//!
//! One point is pinned at the origin. The second point is restricted by the
//! symmetries of the target norm: onto the non-negative first axis for
//! `q = 2` or `dim = 1` (rotations and reflections), into the sector
//! `x1 >= x2 >= 0` otherwise (coordinate reflections and swaps). The third
//! point ranges over the whole grid box, halved by a reflection when the
//! second point lies on an axis.
//!
//! Grid coordinates are `s * k / K` with `K = round(1 / grid_step)` and
//! `s = d(p0, p1)^α`, so the grid is relative to the first target distance
//! and always contains it. Candidates for the second point are visited in
//! order of their own pair term, which lets the scan stop once no candidate
//! can beat the incumbent. The minimum found is exact over the grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{require_metric, FiniteMetricSpace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Best distortion on the grid; an upper bound on the true optimum.
    pub a: f64,
    pub coords: Vec<Vec<f64>>,
    pub grid_step: f64,
    pub evaluated: u64,
}

fn qnorm(v: &[f64], q: f64) -> f64 {
    let mut nonzero = v.iter().filter(|x| **x != 0.0);
    if let (Some(x), None) = (nonzero.next(), nonzero.next()) {
        return x.abs();
    }
    if q == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

fn term(image: f64, log_target: f64) -> f64 {
    if image == 0.0 {
        f64::INFINITY
    } else {
        (image.ln() - log_target).abs()
    }
}

pub fn oracle_embed(
    m: &FiniteMetricSpace,
    alpha: f64,
    q: f64,
    dim: usize,
    grid_step: f64,
) -> Result<OracleResult> {
    let n = m.len();
    if !(2..=3).contains(&n) || !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "oracle handles 2 or 3 points in dimension 1 or 2, got {n} points in dimension {dim}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid step must lie in (0, 1], got {grid_step}"
        )));
    }
    if !(alpha > 0.0) || !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need alpha > 0 and finite q >= 1, got alpha={alpha}, q={q}"
        )));
    }
    require_metric(m)?;

    let per_unit = (1.0 / grid_step).round().max(1.0) as i64;
    let scale = m.dist(0, 1).powf(alpha);
    let coord = |k: i64| scale * (k as f64 / per_unit as f64);
    let radius = 2.0 * m.diameter().powf(alpha);
    let kmax = (radius / scale * per_unit as f64).ceil() as i64;
    let log_t = |i: usize, j: usize| m.dist(i, j).powf(alpha).ln();
    let t01 = log_t(0, 1);
    let (t02, t12) = if n == 3 { (log_t(0, 2), log_t(1, 2)) } else { (0.0, 0.0) };

    let on_axis = dim == 1 || q == 2.0;
    let mut firsts: Vec<(f64, [i64; 2])> = Vec::new();
    for a in 1..=kmax {
        if on_axis {
            let p = [coord(a), 0.0];
            firsts.push((term(qnorm(&p[..dim], q), t01), [a, 0]));
        } else {
            for b in 0..=a {
                let p = [coord(a), coord(b)];
                firsts.push((term(qnorm(&p, q), t01), [a, b]));
            }
        }
    }
    firsts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut best = f64::INFINITY;
    let mut best_coords = vec![vec![0.0; dim]; n];
    let mut evaluated = 0u64;
    let mut diff = [0.0; 2];
    for &(first_term, [a, b]) in &firsts {
        if first_term >= best {
            break;
        }
        let p1 = [coord(a), coord(b)];
        if n == 2 {
            evaluated += 1;
            best = first_term;
            best_coords[1].copy_from_slice(&p1[..dim]);
            continue;
        }
        // With p1 on the first axis, reflecting across it fixes p0 and p1.
        let low2 = if dim == 2 && b == 0 { 0 } else { -kmax };
        let second_range = if dim == 2 { low2..=kmax } else { 0..=0 };
        for k1 in -kmax..=kmax {
            for k2 in second_range.clone() {
                evaluated += 1;
                let p2 = [coord(k1), coord(k2)];
                let r02 = term(qnorm(&p2[..dim], q), t02);
                if r02.max(first_term) >= best {
                    continue;
                }
                diff[0] = p2[0] - p1[0];
                diff[1] = p2[1] - p1[1];
                let r12 = term(qnorm(&diff[..dim], q), t12);
                let obj = first_term.max(r02).max(r12);
                if obj < best {
                    best = obj;
                    best_coords[1].copy_from_slice(&p1[..dim]);
                    best_coords[2].copy_from_slice(&p2[..dim]);
                }
            }
        }
    }
    Ok(OracleResult {
        a: best.exp(),
        coords: best_coords,
        grid_step,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> FiniteMetricSpace {
        FiniteMetricSpace::unlabeled(3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0], false)
            .unwrap()
    }

    #[test]
    fn two_points_at_any_resolution() {
        let m = FiniteMetricSpace::line(&[0.0, 2.9]).unwrap();
        for step in [0.5, 0.1, 0.01] {
            for alpha in [0.5, 1.0] {
                assert_eq!(oracle_embed(&m, alpha, 2.0, 1, step).unwrap().a, 1.0);
            }
        }
    }

    #[test]
    fn equilateral_in_the_plane() {
        let r = oracle_embed(&equilateral(), 1.0, 2.0, 2, 0.01).unwrap();
        assert!(r.a <= 1.02, "A* = {}", r.a);
    }

    #[test]
    fn equilateral_on_the_line() {
        // Gaps s, s and 2s are best balanced at s = 1/√2, giving A = √2.
        let r = oracle_embed(&equilateral(), 1.0, 2.0, 1, 0.01).unwrap();
        let sqrt2 = 2f64.sqrt();
        assert!(r.a >= sqrt2 - 1e-12 && r.a <= sqrt2 * 1.01, "A* = {}", r.a);
    }

    #[test]
    fn non_euclidean_q_uses_sector_grid() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        let r = oracle_embed(&m, 1.0, 1.0, 2, 0.05).unwrap();
        assert!(r.a <= 1.0 + 1e-9, "collinear points embed in ℓ1 isometrically: {}", r.a);
    }

    #[test]
    fn rejects_large_instances() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(oracle_embed(&m, 1.0, 2.0, 2, 0.1).is_err());
        assert!(oracle_embed(&equilateral(), 1.0, 2.0, 3, 0.1).is_err());
    }
}
