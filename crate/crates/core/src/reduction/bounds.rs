//! The six partial-sum inequalities behind the reduction, for one pair of
//! product points.

use serde::Serialize;

use super::clauses::{Constants, NONSTRICT_RELATIVE_TOL};
use super::partition::{partition_indices, IndexPartition};
use super::theta::{rearrangement, Rearrangement};
use super::ReductionInstance;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = ">=")]
    GreaterEq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub name: &'static str,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Signed margin, positive when the inequality holds with room.
    pub slack: f64,
}

impl Inequality {
    /// Strict inequalities over an empty part hold vacuously; non-strict
    /// ones allow a relative slack of [`NONSTRICT_RELATIVE_TOL`].
    fn new(name: &'static str, relation: Relation, lhs: f64, rhs: f64, empty: bool) -> Self {
        let slack = match relation {
            Relation::Less | Relation::LessEq => rhs - lhs,
            Relation::GreaterEq => lhs - rhs,
        };
        let pass = match relation {
            Relation::Less => empty || lhs < rhs,
            _ => slack >= -NONSTRICT_RELATIVE_TOL * lhs.abs().max(rhs.abs()),
        };
        Inequality {
            name,
            relation,
            lhs,
            rhs,
            pass,
            slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub partition: IndexPartition,
    pub inequalities: Vec<Inequality>,
    pub rearrangement: Rearrangement,
    pub passed: bool,
}

/// Partition and inequalities from per-level source distances `d_n` and
/// image distances `δ_n`.
pub(crate) fn evaluate(
    dvals: &[f64],
    deltas: &[f64],
    eps: &[f64],
    eta: &[f64],
    k: &Constants,
) -> Result<(IndexPartition, Vec<Inequality>)> {
    let (p, q) = (k.p, k.q);
    let part = partition_indices(dvals, eps, k.c, p, Some((deltas, q)))?;
    let eps_sum: f64 = part.i1.indices.iter().map(|&n| eps[n].powf(p)).sum();
    let eta_sum: f64 = part.i1.indices.iter().map(|&n| eta[n].powf(q)).sum();
    let image = |s: &super::partition::Part| s.image_sum.expect("image sums requested");
    let i1_empty = part.i1.indices.is_empty();
    let far = part.i2.indices.len() as f64;
    let (aq, s3, t3) = (k.a.powf(q), part.i3.source_sum, image(&part.i3));
    let ineqs = vec![
        Inequality::new("i1_source", Relation::Less, part.i1.source_sum, eps_sum, i1_empty),
        Inequality::new("i1_image", Relation::Less, image(&part.i1), eta_sum, i1_empty),
        Inequality::new("i2_source", Relation::GreaterEq, part.i2.source_sum, k.c.powf(p) * far, false),
        Inequality::new("i2_image", Relation::GreaterEq, image(&part.i2), k.d.powf(q) * far, false),
        Inequality::new("i3_lower", Relation::LessEq, s3 / aq, t3, false),
        Inequality::new("i3_upper", Relation::LessEq, t3, aq * s3, false),
    ];
    Ok((part, ineqs))
}

/// Evaluates the six inequalities for the product points `x` and `y`
/// (one point index per level) and the rearrangement identity.
pub fn verify_reduction_bounds(
    inst: &ReductionInstance,
    x: &[usize],
    y: &[usize],
) -> Result<BoundReport> {
    inst.check_choice(x)?;
    inst.check_choice(y)?;
    let dvals: Vec<f64> = inst
        .levels
        .iter()
        .enumerate()
        .map(|(n, l)| l.space.dist(x[n], y[n]))
        .collect();
    let deltas: Vec<f64> = inst
        .levels
        .iter()
        .enumerate()
        .map(|(n, l)| l.map.image_distance(x[n], y[n]))
        .collect();
    let (partition, inequalities) = evaluate(&dvals, &deltas, &inst.eps, &inst.eta, &inst.constants)?;
    let rearrangement = rearrangement(inst, x, y)?;
    let passed = inequalities.iter().all(|i| i.pass)
        && rearrangement.relative_error <= NONSTRICT_RELATIVE_TOL;
    Ok(BoundReport {
        partition,
        inequalities,
        rearrangement,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Embedding, Level};
    use crate::metric::FiniteMetricSpace;
    use crate::reduction::synthetic::random_exact_power_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn isometric_instance() -> ReductionInstance {
        let xs = [0.0, 0.05, 1.0, 4.0];
        let m = FiniteMetricSpace::line(&xs).unwrap();
        let t = Embedding::new(1.0, xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let k = Constants {
            p: 1.0,
            q: 1.0,
            a: 1.0,
            c: 2.0,
            d: 2.0,
        };
        ReductionInstance::new(k, vec![0.1; 3], vec![0.1; 3], vec![Level::new(m, t).unwrap(); 3])
            .unwrap()
    }

    #[test]
    fn isometry_is_tight() {
        let inst = isometric_instance();
        let r = verify_reduction_bounds(&inst, &[0, 0, 0], &[1, 2, 3]).unwrap();
        assert!(r.passed, "{:?}", r.inequalities);
        assert_eq!(r.partition.i1.indices, vec![0]);
        assert_eq!(r.partition.i2.indices, vec![2]);
        assert_eq!(r.partition.i3.indices, vec![1]);
        let lower = &r.inequalities[4];
        assert_eq!((lower.lhs, lower.rhs), (1.0, 1.0));
    }

    #[test]
    fn equal_points_pass_trivially() {
        let inst = isometric_instance();
        let r = verify_reduction_bounds(&inst, &[2, 1, 3], &[2, 1, 3]).unwrap();
        assert!(r.passed);
        assert_eq!(r.partition.i1.indices, vec![0, 1, 2]);
        assert_eq!(r.partition.i1.source_sum, 0.0);
    }

    #[test]
    fn broken_hypothesis_shows_up() {
        let mut inst = isometric_instance();
        inst.constants.d = 5.0;
        let r = verify_reduction_bounds(&inst, &[0, 0, 0], &[1, 2, 3]).unwrap();
        let failed: Vec<_> = r.inequalities.iter().filter(|i| !i.pass).map(|i| i.name).collect();
        assert_eq!(failed, vec!["i2_image"]);
    }

    #[test]
    fn exact_power_instances_never_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let p = [1.0, 1.5, 2.0][rng.random_range(0..3)];
            let q = [1.0, 1.5, 2.0][rng.random_range(0..3)];
            let inst = random_exact_power_instance(4, 7, p, q, &mut rng).unwrap();
            assert!(inst.clause_report().passed());
            for _ in 0..5 {
                let x: Vec<usize> = inst.levels.iter().map(|l| rng.random_range(0..l.space.len())).collect();
                let y: Vec<usize> = inst.levels.iter().map(|l| rng.random_range(0..l.space.len())).collect();
                let r = verify_reduction_bounds(&inst, &x, &y).unwrap();
                assert!(r.passed, "{:?}", r.inequalities);
            }
        }
    }
}
