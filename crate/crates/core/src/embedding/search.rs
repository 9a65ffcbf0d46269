//! Multi-restart search for low-distortion Hölder embeddings.
//!
//! The objective is the worst log-ratio `|ln d'(Tu,Tv) - α ln d(u,v)|` over
//! pairs below `C` (all pairs when `C` is absent), plus a hinge
//! `max(0, α ln C - ln d'(Tu,Tv))` for pairs at distance `>= C`. Its
//! exponential is the distortion `A` of the returned map. Descent runs on the
//! log-sum-exp smoothing of the max with an annealed temperature, keeping the
//! best iterate seen under the exact objective.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::distortion::{certify, DistortionCertificate};
use super::Embedding;
use crate::error::{Error, Result};
use crate::metric::{require_metric, FiniteMetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub alpha: f64,
    pub q: f64,
    pub dim: usize,
    pub c: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl SearchOptions {
    pub fn new(alpha: f64, q: f64, dim: usize) -> Self {
        SearchOptions {
            alpha,
            q,
            dim,
            c: None,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    #[serde(skip)]
    pub embedding: Embedding,
    pub certificate: DistortionCertificate,
    /// Exact objective of the returned map; `exp(objective)` bounds `A`.
    pub objective: f64,
    /// Index of the restart that produced the map.
    pub restart: usize,
    pub restart_objectives: Vec<f64>,
    /// Set when every restart ended with coincident images.
    pub degenerate: bool,
}

/// Temperatures for the smoothed max, from coarse to fine.
const TEMPERATURES: [f64; 12] = [
    0.5, 0.25, 0.12, 0.06, 0.03, 0.015, 0.008, 0.004, 0.002, 0.001, 5e-4, 2e-4,
];
const ITERS_PER_TEMPERATURE: usize = 150;
const ARMIJO: f64 = 1e-4;
const MAX_REDRAWS: usize = 10;

#[derive(Clone, Copy)]
enum Term {
    /// Pair below `C`: target `α ln d`.
    Holder(f64),
    /// Pair at or above `C`: floor `α ln C`.
    Hinge(f64),
}

struct Problem {
    n: usize,
    dim: usize,
    q: f64,
    pairs: Vec<(usize, usize, Term)>,
}

impl Problem {
    fn new(m: &FiniteMetricSpace, opts: &SearchOptions) -> Self {
        let n = m.len();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = m.dist(i, j);
                let term = match opts.c {
                    Some(c) if d >= c => Term::Hinge(opts.alpha * c.ln()),
                    _ => Term::Holder(opts.alpha * d.ln()),
                };
                pairs.push((i, j, term));
            }
        }
        Problem {
            n,
            dim: opts.dim,
            q: opts.q,
            pairs,
        }
    }

    fn log_dist(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let (a, b) = (&x[i * self.dim..(i + 1) * self.dim], &x[j * self.dim..(j + 1) * self.dim]);
        let s: f64 = a.iter().zip(b).map(|(p, r)| (p - r).abs().powf(self.q)).sum();
        s.ln() / self.q
    }

    /// Exact max-objective; `+inf` when two images coincide.
    fn objective(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for &(i, j, term) in &self.pairs {
            let l = self.log_dist(x, i, j);
            if l == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            let v = match term {
                Term::Holder(t) => (l - t).abs(),
                Term::Hinge(floor) => (floor - l).max(0.0),
            };
            worst = worst.max(v);
        }
        worst.max(0.0)
    }

    fn smoothed_values(&self, x: &[f64], out: &mut Vec<f64>) -> bool {
        out.clear();
        for &(i, j, term) in &self.pairs {
            let l = self.log_dist(x, i, j);
            if l == f64::NEG_INFINITY {
                return false;
            }
            match term {
                Term::Holder(t) => {
                    out.push(l - t);
                    out.push(t - l);
                }
                Term::Hinge(floor) => out.push(floor - l),
            }
        }
        true
    }

    /// Log-sum-exp at temperature `tau`, with its gradient when `grad` is
    /// given.
    fn smoothed(&self, x: &[f64], tau: f64, buf: &mut Vec<f64>, grad: Option<&mut [f64]>) -> f64 {
        if !self.smoothed_values(x, buf) {
            return f64::INFINITY;
        }
        let top = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in buf.iter_mut() {
            *v = ((*v - top) / tau).exp();
            total += *v;
        }
        let value = top + tau * total.ln();
        let Some(grad) = grad else {
            return value;
        };
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut k = 0;
        for &(i, j, term) in &self.pairs {
            // d(value)/d(ln δ_ij)
            let coef = match term {
                Term::Holder(_) => {
                    let c = (buf[k] - buf[k + 1]) / total;
                    k += 2;
                    c
                }
                Term::Hinge(_) => {
                    let c = -buf[k] / total;
                    k += 1;
                    c
                }
            };
            if coef == 0.0 {
                continue;
            }
            let (oi, oj) = (i * self.dim, j * self.dim);
            let mut norm_q = 0.0;
            for c in 0..self.dim {
                norm_q += (x[oi + c] - x[oj + c]).abs().powf(self.q);
            }
            for c in 0..self.dim {
                let delta = x[oi + c] - x[oj + c];
                // ∂ ln δ / ∂x_ic = sign(Δ)|Δ|^(q-1) / δ^q
                let g = coef * delta.signum() * delta.abs().powf(self.q - 1.0) / norm_q;
                if delta != 0.0 {
                    grad[oi + c] += g;
                    grad[oj + c] -= g;
                }
            }
        }
        value
    }
}

fn random_ball<R: Rng>(rng: &mut R, n: usize, dim: usize, radius: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        x.extend(dir.iter().map(|v| v / norm * r));
    }
    x
}

struct RestartOutcome {
    x: Vec<f64>,
    objective: f64,
}

fn run_restart(problem: &Problem, seed: u64, radius: f64) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_ball(&mut rng, problem.n, problem.dim, radius);
    let mut redraws = 0;
    while !problem.objective(&x).is_finite() && redraws < MAX_REDRAWS {
        x = random_ball(&mut rng, problem.n, problem.dim, radius);
        redraws += 1;
    }
    let mut best = RestartOutcome {
        objective: problem.objective(&x),
        x: x.clone(),
    };
    if !best.objective.is_finite() {
        return best;
    }

    let mut buf = Vec::new();
    let mut grad = vec![0.0; x.len()];
    let mut trial = vec![0.0; x.len()];
    let mut step = radius * radius;
    for &tau in &TEMPERATURES {
        let mut f = problem.smoothed(&x, tau, &mut buf, Some(&mut grad));
        for _ in 0..ITERS_PER_TEMPERATURE {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 == 0.0 || !g2.is_finite() {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                    *t = xi - step * gi;
                }
                let ft = problem.smoothed(&trial, tau, &mut buf, None);
                if ft <= f - ARMIJO * step * g2 {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            std::mem::swap(&mut x, &mut trial);
            f = problem.smoothed(&x, tau, &mut buf, Some(&mut grad));
            let exact = problem.objective(&x);
            if exact < best.objective {
                best.objective = exact;
                best.x.copy_from_slice(&x);
            }
            step *= 2.0;
        }
        // Restart the next temperature from the best exact iterate.
        x.copy_from_slice(&best.x);
    }
    best
}

/// Searches for a map into `ℓq^dim` minimising the worst log-distortion.
/// Deterministic for a fixed seed.
pub fn embed_search(m: &FiniteMetricSpace, opts: &SearchOptions) -> Result<SearchResult> {
    if opts.dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    if !(opts.alpha > 0.0) || !opts.alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {}",
            opts.alpha
        )));
    }
    if !(opts.q >= 1.0) || !opts.q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "q must be a finite real >= 1, got {}",
            opts.q
        )));
    }
    if let Some(c) = opts.c {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
        }
    }
    if m.len() < 2 {
        return Err(Error::InvalidArgument(
            "embedding search needs at least two points".into(),
        ));
    }
    require_metric(m)?;
    let restarts = opts.restarts.max(1);
    let problem = Problem::new(m, opts);

    let (x, objective, restart, restart_objectives) = if m.len() == 2 {
        // One pair: put the images ±d^α/2 on the first axis.
        let half = m.dist(0, 1).powf(opts.alpha) / 2.0;
        let mut x = vec![0.0; 2 * opts.dim];
        x[0] = -half;
        x[opts.dim] = half;
        let obj = problem.objective(&x);
        (x, obj, 0, vec![obj])
    } else {
        let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
        let seeds: Vec<u64> = (0..restarts).map(|_| seeder.next_u64()).collect();
        let radius = m.diameter().powf(opts.alpha);
        let outcomes: Vec<RestartOutcome> = seeds
            .par_iter()
            .map(|&s| run_restart(&problem, s, radius))
            .collect();
        let objectives: Vec<f64> = outcomes.iter().map(|o| o.objective).collect();
        let mut pick = 0;
        for (k, o) in outcomes.iter().enumerate() {
            // NaN never wins; ties go to the lower restart index.
            if o.objective < outcomes[pick].objective || outcomes[pick].objective.is_nan() {
                pick = k;
            }
        }
        let best = outcomes.into_iter().nth(pick).expect("at least one restart");
        (best.x, best.objective, pick, objectives)
    };

    let coords = x.chunks(opts.dim).map(<[f64]>::to_vec).collect();
    let embedding = Embedding::new(opts.q, coords)?;
    let certificate = certify(m, &embedding, opts.alpha, opts.c, None);
    Ok(SearchResult {
        embedding,
        certificate,
        degenerate: !objective.is_finite(),
        objective,
        restart,
        restart_objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::holder_distortion;

    fn equilateral(n: usize) -> FiniteMetricSpace {
        let mut d = vec![1.0; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        FiniteMetricSpace::unlabeled(n, d, false).unwrap()
    }

    #[test]
    fn two_points_are_exact_for_any_alpha() {
        let m = FiniteMetricSpace::line(&[0.0, 3.7]).unwrap();
        for alpha in [0.3, 0.5, 1.0, 1.4] {
            let r = embed_search(&m, &SearchOptions::new(alpha, 1.5, 1)).unwrap();
            assert_eq!(r.certificate.a, 1.0, "alpha={alpha}");
        }
    }

    #[test]
    fn equilateral_triangle_in_the_plane() {
        let m = equilateral(3);
        let mut opts = SearchOptions::new(1.0, 2.0, 2);
        opts.seed = 11;
        let r = embed_search(&m, &opts).unwrap();
        assert!(r.certificate.a < 1.0 + 1e-4, "A = {}", r.certificate.a);
        let again = holder_distortion(&m, &r.embedding, 1.0).unwrap();
        assert_eq!(again.a, r.certificate.a);
    }

    #[test]
    fn certificate_matches_best_restart() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 1.5, 4.0]).unwrap();
        let mut opts = SearchOptions::new(0.5, 2.0, 2);
        opts.restarts = 4;
        opts.seed = 5;
        let r = embed_search(&m, &opts).unwrap();
        let best = r.restart_objectives.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(r.objective, best);
        assert!((r.certificate.a.ln() - r.objective).abs() < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = equilateral(4);
        let mut opts = SearchOptions::new(1.0, 1.0, 2);
        opts.seed = 99;
        opts.restarts = 3;
        let a = embed_search(&m, &opts).unwrap();
        let b = embed_search(&m, &opts).unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert_eq!(a.restart_objectives, b.restart_objectives);
    }

    #[test]
    fn hinge_keeps_far_pairs_apart() {
        let m = FiniteMetricSpace::line(&[0.0, 0.5, 1.0, 5.0, 5.5]).unwrap();
        let mut opts = SearchOptions::new(1.0, 2.0, 2);
        opts.c = Some(2.0);
        opts.seed = 3;
        let r = embed_search(&m, &opts).unwrap();
        assert_eq!(r.certificate.c, Some(2.0));
        assert!(r.certificate.d.unwrap() >= 2.0 * (-r.objective).exp() - 1e-12);
    }

    #[test]
    fn argument_checks() {
        let m = equilateral(3);
        assert!(embed_search(&m, &SearchOptions::new(1.0, 2.0, 0)).is_err());
        assert!(embed_search(&m, &SearchOptions::new(0.0, 2.0, 1)).is_err());
        assert!(embed_search(&m, &SearchOptions::new(1.0, 0.5, 1)).is_err());
        assert!(embed_search(&equilateral(1), &SearchOptions::new(1.0, 2.0, 1)).is_err());
    }
}
