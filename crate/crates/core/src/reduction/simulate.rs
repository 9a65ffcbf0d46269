//! Sampling product pairs that follow a tail model and comparing the
//! source and image classifications.
//!
//! For a model `n ↦ d_n` and a prefix of length `N`, each sample picks, at
//! every level `n < N`, the realizable distance of `X_n` nearest to `d_n`
//! and a uniformly random ordered pair of points at that distance. Levels
//! past the instance repeat its last level with `ε = η = 0`.
//!
//! A sample is flagged when some level realizes a distance outside
//! `[d_n/τ, τ d_n]`, or realizes 0 for a positive target. Unflagged samples
//! whose partial sums pass every inequality get the image class of the
//! pushed-forward model `n ↦ d_n^{p/q}` under exponent `q`; flagged or
//! failing samples get no image class and count as disagreements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::evaluate;
use super::clauses::NONSTRICT_RELATIVE_TOL;
use super::partition::IndexPartition;
use super::tail::{classify_tail, Convergence, TailModel};
use super::theta::{level_power_sum, rearrangement_of, theta_of, Rearrangement};
use super::ReductionInstance;
use crate::embedding::Level;
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

pub const DEFAULT_TAU: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateOptions {
    pub prefix: usize,
    pub samples: usize,
    pub seed: u64,
    /// Largest accepted factor between a realized and a target distance.
    pub tau: f64,
}

impl SimulateOptions {
    pub fn new(prefix: usize, samples: usize, seed: u64) -> Self {
        SimulateOptions {
            prefix,
            samples,
            seed,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub prefix: usize,
    /// `A^{-q} Σ d_n^p` over `I3 ∩ [0, prefix)`.
    pub lower_bound: f64,
    /// `Σ δ_n^q` over `I3 ∩ [0, prefix)`.
    pub image_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub sample: usize,
    pub flagged: bool,
    /// Largest `max(r/t, t/r)` between realized `r` and target `t > 0`.
    pub worst_deviation: f64,
    pub partition: IndexPartition,
    pub bounds_passed: bool,
    pub failed_inequalities: Vec<&'static str>,
    pub rearrangement: Rearrangement,
    pub image_class: Option<Convergence>,
    pub agree: bool,
    /// Growth of the middle-part sums; present for divergent models.
    pub checkpoints: Vec<Checkpoint>,
    pub checkpoints_increasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: TailModel,
    pub source_class: Convergence,
    pub image_model: TailModel,
    pub samples: usize,
    pub flagged: usize,
    pub bound_pass_rate: f64,
    pub agreement_rate: f64,
    /// For divergent models: whether every sample's checkpoint sums grow
    /// strictly with the prefix.
    pub divergence_monotone: Option<bool>,
    pub sample_reports: Vec<SampleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub prefix: usize,
    pub samples: usize,
    pub seed: u64,
    pub tau: f64,
    pub levels_provided: usize,
    /// Levels filled by repeating the last one with `ε = η = 0`.
    pub repeated_levels: usize,
    pub models: Vec<ModelReport>,
}

/// Distinct distances of a space with the ordered pairs realizing each.
struct DistanceIndex {
    values: Vec<f64>,
    pairs: Vec<Vec<(usize, usize)>>,
}

impl DistanceIndex {
    fn new(m: &FiniteMetricSpace) -> Self {
        let n = m.len();
        let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                all.push((m.dist(u, v), u, v));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut values: Vec<f64> = Vec::new();
        let mut pairs: Vec<Vec<(usize, usize)>> = Vec::new();
        for (d, u, v) in all {
            if values.last() != Some(&d) {
                values.push(d);
                pairs.push(Vec::new());
            }
            pairs.last_mut().expect("pushed above").push((u, v));
        }
        DistanceIndex { values, pairs }
    }

    /// Index of the value nearest `target`, the smaller one on ties.
    fn nearest(&self, target: f64) -> usize {
        let i = self.values.partition_point(|&v| v < target);
        if i == 0 {
            return 0;
        }
        if i == self.values.len() {
            return i - 1;
        }
        if target - self.values[i - 1] <= self.values[i] - target {
            i - 1
        } else {
            i
        }
    }
}

fn checkpoint_lengths(prefix: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [prefix / 8, prefix / 4, prefix / 2, prefix]
        .into_iter()
        .filter(|&l| l > 0)
        .collect();
    out.dedup();
    out
}

struct Context<'a> {
    inst: &'a ReductionInstance,
    indexes: Vec<DistanceIndex>,
    eps: Vec<f64>,
    eta: Vec<f64>,
    opts: SimulateOptions,
}

impl Context<'_> {
    fn level(&self, n: usize) -> &Level {
        &self.inst.levels[n.min(self.inst.levels.len() - 1)]
    }

    fn index(&self, n: usize) -> &DistanceIndex {
        &self.indexes[n.min(self.indexes.len() - 1)]
    }

    fn sample(
        &self,
        model: &TailModel,
        image_model_class: Convergence,
        source_class: Convergence,
        stream: u64,
        sample: usize,
    ) -> Result<SampleReport> {
        let k = &self.inst.constants;
        let prefix = self.opts.prefix;
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(stream);
        let (mut x, mut y) = (Vec::with_capacity(prefix), Vec::with_capacity(prefix));
        let mut flagged = false;
        let mut worst_deviation: f64 = 1.0;
        for n in 0..prefix {
            let target = model.value(n);
            let idx = self.index(n);
            let which = idx.nearest(target);
            let realized = idx.values[which];
            let pairs = &idx.pairs[which];
            let (u, v) = pairs[rng.random_range(0..pairs.len())];
            x.push(u);
            y.push(v);
            if target > 0.0 {
                let dev = if realized == 0.0 {
                    f64::INFINITY
                } else {
                    (realized / target).max(target / realized)
                };
                worst_deviation = worst_deviation.max(dev);
                if dev > self.opts.tau {
                    flagged = true;
                }
            }
        }
        let dvals: Vec<f64> = (0..prefix).map(|n| self.level(n).space.dist(x[n], y[n])).collect();
        let deltas: Vec<f64> = (0..prefix)
            .map(|n| self.level(n).map.image_distance(x[n], y[n]))
            .collect();
        let (partition, inequalities) = evaluate(&dvals, &deltas, &self.eps, &self.eta, k)?;
        let maps = |n: usize| &self.level(n).map;
        let tx = theta_of(k.q, maps, &x)?;
        let ty = theta_of(k.q, maps, &y)?;
        let rearrangement =
            rearrangement_of(tx.distance_power(&ty), level_power_sum(k.q, maps, &x, &y));
        let failed_inequalities: Vec<&'static str> =
            inequalities.iter().filter(|i| !i.pass).map(|i| i.name).collect();
        let bounds_passed =
            failed_inequalities.is_empty() && rearrangement.relative_error <= NONSTRICT_RELATIVE_TOL;
        let image_class = (bounds_passed && !flagged).then_some(image_model_class);

        let (mut checkpoints, mut checkpoints_increasing) = (Vec::new(), None);
        if source_class == Convergence::Divergent {
            let aq = k.a.powf(k.q);
            for len in checkpoint_lengths(prefix) {
                let mid = partition.i3.indices.iter().take_while(|&&n| n < len);
                let (s, t) = mid.fold((0.0, 0.0), |(s, t), &n| {
                    (s + dvals[n].powf(k.p), t + deltas[n].powf(k.q))
                });
                checkpoints.push(Checkpoint {
                    prefix: len,
                    lower_bound: s / aq,
                    image_sum: t,
                });
            }
            checkpoints_increasing = Some(
                checkpoints
                    .windows(2)
                    .all(|w| w[1].lower_bound > w[0].lower_bound && w[1].image_sum >= w[1].lower_bound * (1.0 - NONSTRICT_RELATIVE_TOL)),
            );
        }
        Ok(SampleReport {
            sample,
            flagged,
            worst_deviation,
            partition,
            bounds_passed,
            failed_inequalities,
            rearrangement,
            image_class,
            agree: image_class == Some(source_class),
            checkpoints,
            checkpoints_increasing,
        })
    }
}

/// Runs `opts.samples` samples per model. Samples draw from independent
/// streams of one seeded generator, so the report does not depend on
/// scheduling.
pub fn simulate(
    inst: &ReductionInstance,
    models: &[TailModel],
    opts: &SimulateOptions,
) -> Result<SimulationReport> {
    if opts.prefix == 0 || opts.samples == 0 {
        return Err(Error::InvalidArgument(
            "prefix and samples must be positive".into(),
        ));
    }
    if !(opts.tau >= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must be >= 1, got {}", opts.tau)));
    }
    let k = &inst.constants;
    let provided = inst.levels.len();
    let pad = |v: &[f64]| -> Vec<f64> {
        (0..opts.prefix).map(|n| v.get(n).copied().unwrap_or(0.0)).collect()
    };
    let ctx = Context {
        inst,
        indexes: inst.levels.iter().map(|l| DistanceIndex::new(&l.space)).collect(),
        eps: pad(&inst.eps),
        eta: pad(&inst.eta),
        opts: *opts,
    };
    let mut reports = Vec::with_capacity(models.len());
    for (mi, model) in models.iter().enumerate() {
        let source_class = classify_tail(model, k.p)?;
        let image_model = model.pushforward(k.exponent());
        let image_model_class = classify_tail(&image_model, k.q)?;
        let sample_reports = (0..opts.samples)
            .into_par_iter()
            .map(|s| {
                let stream = ((mi as u64) << 32) | s as u64;
                ctx.sample(model, image_model_class, source_class, stream, s)
            })
            .collect::<Result<Vec<_>>>()?;
        let count = |f: &dyn Fn(&SampleReport) -> bool| sample_reports.iter().filter(|r| f(r)).count();
        let total = opts.samples as f64;
        reports.push(ModelReport {
            model: model.clone(),
            source_class,
            image_model,
            samples: opts.samples,
            flagged: count(&|r| r.flagged),
            bound_pass_rate: count(&|r| r.bounds_passed) as f64 / total,
            agreement_rate: count(&|r| r.agree) as f64 / total,
            divergence_monotone: (source_class == Convergence::Divergent)
                .then(|| sample_reports.iter().all(|r| r.checkpoints_increasing == Some(true))),
            sample_reports,
        });
    }
    Ok(SimulationReport {
        prefix: opts.prefix,
        samples: opts.samples,
        seed: opts.seed,
        tau: opts.tau,
        levels_provided: provided,
        repeated_levels: opts.prefix.saturating_sub(provided),
        models: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::synthetic::comb_instance;

    fn models() -> Vec<TailModel> {
        vec![
            TailModel::FiniteSupport { values: vec![5.0, 7.0, 0.3] },
            TailModel::Power { c: 1.0, s: 0.4 },
            TailModel::Power { c: 1.0, s: 0.75 },
            TailModel::Geometric { c: 2.0, r: 0.8 },
        ]
    }

    #[test]
    fn nearest_distance_value() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 3.0]).unwrap();
        let idx = DistanceIndex::new(&m);
        assert_eq!(idx.values, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(idx.pairs[0].len(), 3);
        assert_eq!(idx.values[idx.nearest(1.5)], 1.0);
        assert_eq!(idx.values[idx.nearest(1.6)], 2.0);
        assert_eq!(idx.values[idx.nearest(9.0)], 3.0);
        assert_eq!(idx.values[idx.nearest(0.0)], 0.0);
    }

    #[test]
    fn exact_power_comb_agrees() {
        let inst = comb_instance(2.0, 1.0, 70, 8.0, 6.0).unwrap();
        let r = simulate(&inst, &models(), &SimulateOptions::new(64, 20, 4)).unwrap();
        assert_eq!(r.repeated_levels, 63);
        for m in &r.models {
            assert_eq!(m.flagged, 0, "{:?}", m.model);
            assert_eq!(m.agreement_rate, 1.0, "{:?}", m.model);
        }
        let div: Vec<_> = r.models.iter().filter(|m| m.source_class == Convergence::Divergent).collect();
        assert_eq!(div.len(), 1);
        assert_eq!(div[0].divergence_monotone, Some(true));
    }

    #[test]
    fn reports_are_reproducible() {
        let inst = comb_instance(1.5, 1.0, 40, 8.0, 6.0).unwrap();
        let opts = SimulateOptions::new(32, 8, 99);
        let a = serde_json::to_string(&simulate(&inst, &models(), &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate(&inst, &models(), &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unrealizable_targets_are_flagged() {
        let inst = comb_instance(1.0, 1.0, 3, 1.0, 2.0).unwrap();
        let r = simulate(
            &inst,
            &[TailModel::Power { c: 1.0, s: 1.5 }],
            &SimulateOptions::new(16, 4, 0),
        )
        .unwrap();
        assert_eq!(r.models[0].flagged, 4);
        assert_eq!(r.models[0].agreement_rate, 0.0);
    }
}
