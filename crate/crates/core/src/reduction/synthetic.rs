//! Instances whose block maps realize `δ_q = d^{p/q}` exactly.
//!
//! Levels are ultrametrics mapped by [`exact_power_map`], so `A = 1`,
//! `D = C^{p/q}` and `η_n = 2 ε_n^{p/q}` satisfy every clause.

use rand::Rng;

use super::clauses::Constants;
use super::ReductionInstance;
use crate::embedding::{exact_power_map, Level};
use crate::error::Result;
use crate::generate::{comb_ultrametric, random_ultrametric};
use crate::metric::FiniteMetricSpace;

pub fn exact_power_instance(
    spaces: Vec<FiniteMetricSpace>,
    p: f64,
    q: f64,
    c: f64,
    eps: Vec<f64>,
) -> Result<ReductionInstance> {
    let alpha = p / q;
    let constants = Constants {
        p,
        q,
        a: 1.0,
        c,
        d: c.powf(alpha),
    };
    constants.validate()?;
    let eta = eps.iter().map(|&e| 2.0 * e.powf(alpha)).collect();
    let levels = spaces
        .into_iter()
        .map(|m| {
            let t = exact_power_map(&m, alpha, q)?;
            Level::new(m, t)
        })
        .collect::<Result<Vec<_>>>()?;
    ReductionInstance::new(constants, eps, eta, levels)
}

/// `levels` random ultrametrics of root height 2 on `points` points, with
/// `C = 1` and `ε_n` drawn from `[0, 0.19)`.
pub fn random_exact_power_instance<R: Rng + ?Sized>(
    levels: usize,
    points: usize,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Result<ReductionInstance> {
    let spaces = (0..levels).map(|_| random_ultrametric(points, 2.0, rng)).collect();
    let eps = (0..levels).map(|_| rng.random_range(0.0..0.19)).collect();
    exact_power_instance(spaces, p, q, 1.0, eps)
}

/// One level: the comb ultrametric with heights `top · 2^-k`, `k < depth`,
/// and `ε_0 = 0`. Every distance `top · 2^-k` is realized, which suits
/// simulation of slowly decaying sequences.
pub fn comb_instance(p: f64, q: f64, depth: usize, top: f64, c: f64) -> Result<ReductionInstance> {
    let heights: Vec<f64> = (0..depth).map(|k| top * 0.5f64.powi(k as i32)).collect();
    exact_power_instance(vec![comb_ultrametric(&heights)], p, q, c, vec![0.0])
}
