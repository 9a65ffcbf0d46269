//! Greedy ε-nets, ε-chains on threshold graphs, and chain-point sets.
//!
//! The threshold graph at scale `eps` joins two points iff their distance is
//! strictly below `eps`. All searches visit neighbours in index order, so
//! every witness returned here is deterministic.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

/// An ε-separated, ε-covering subset of a space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Net {
    pub eps: f64,
    /// Member point indices in admission order.
    pub members: Vec<usize>,
    /// For every point, the position in `members` of the first member
    /// strictly within `eps` of it.
    pub assignment: Vec<usize>,
}

impl Net {
    /// The net in which every point is its own member. Used for `eps = 0`,
    /// where no covering radius is available.
    pub fn identity(n: usize) -> Self {
        Net {
            eps: 0.0,
            members: (0..n).collect(),
            assignment: (0..n).collect(),
        }
    }

    /// The member point assigned to `u`.
    pub fn snap(&self, u: usize) -> usize {
        self.members[self.assignment[u]]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Violations of the separation, covering and first-member rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NetViolations {
    pub separation: Vec<[usize; 2]>,
    pub covering: Vec<usize>,
    pub assignment: Vec<usize>,
}

impl NetViolations {
    pub fn is_empty(&self) -> bool {
        self.separation.is_empty() && self.covering.is_empty() && self.assignment.is_empty()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eps must be a positive finite real, got {eps}"
        )));
    }
    Ok(())
}

fn check_point(m: &FiniteMetricSpace, u: usize) -> Result<()> {
    if u >= m.len() {
        return Err(Error::InvalidArgument(format!(
            "point index {u} out of range for a {}-point space",
            m.len()
        )));
    }
    Ok(())
}

/// Scans points in `order` (label order when `None`) and admits a point iff
/// it is at distance `>= eps` from every admitted point.
pub fn greedy_net(m: &FiniteMetricSpace, eps: f64, order: Option<&[usize]>) -> Result<Net> {
    check_eps(eps)?;
    let n = m.len();
    let natural: Vec<usize>;
    let order = match order {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n || o.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidArgument(
                    "net order must be a permutation of the points".into(),
                ));
            }
            o
        }
        None => {
            natural = (0..n).collect();
            &natural
        }
    };
    let mut members: Vec<usize> = Vec::new();
    for &u in order {
        if members.iter().all(|&s| m.dist(u, s) >= eps) {
            members.push(u);
        }
    }
    let assignment = (0..n)
        .map(|u| {
            members
                .iter()
                .position(|&s| m.dist(u, s) < eps)
                .expect("a rejected point is within eps of an earlier member")
        })
        .collect();
    Ok(Net {
        eps,
        members,
        assignment,
    })
}

/// Exhaustively re-checks a net against `m`.
pub fn net_violations(m: &FiniteMetricSpace, net: &Net) -> NetViolations {
    let mut v = NetViolations::default();
    for (a, &r) in net.members.iter().enumerate() {
        for &s in &net.members[a + 1..] {
            if !(m.dist(r, s) >= net.eps) {
                v.separation.push([r, s]);
            }
        }
    }
    for u in 0..m.len() {
        let Some(&slot) = net.assignment.get(u) else {
            v.covering.push(u);
            continue;
        };
        if slot >= net.members.len() || !(m.dist(u, net.members[slot]) < net.eps) {
            v.covering.push(u);
            continue;
        }
        if net.members[..slot].iter().any(|&s| m.dist(u, s) < net.eps) {
            v.assignment.push(u);
        }
    }
    v
}

/// A sequence `r_0 = u, ..., r_N = v` with consecutive distances below `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub eps: f64,
    pub points: Vec<usize>,
    pub steps: usize,
}

/// Breadth-first search tree of the threshold graph rooted at `source`.
struct BfsTree {
    parent: Vec<Option<usize>>,
    depth: Vec<Option<usize>>,
}

impl BfsTree {
    fn grow(m: &FiniteMetricSpace, eps: f64, source: usize) -> Self {
        let n = m.len();
        let mut parent = vec![None; n];
        let mut depth = vec![None; n];
        depth[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(a) = queue.pop_front() {
            let da = depth[a].expect("queued points have a depth");
            for b in 0..n {
                if depth[b].is_none() && m.dist(a, b) < eps {
                    depth[b] = Some(da + 1);
                    parent[b] = Some(a);
                    queue.push_back(b);
                }
            }
        }
        BfsTree { parent, depth }
    }

    fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        self.depth[target]?;
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// A minimal-step chain from `u` to `v`, or `None` when they lie in
/// different components of the threshold graph.
pub fn chain_witness(m: &FiniteMetricSpace, eps: f64, u: usize, v: usize) -> Result<Option<Chain>> {
    check_eps(eps)?;
    check_point(m, u)?;
    check_point(m, v)?;
    let tree = BfsTree::grow(m, eps, u);
    Ok(tree.path_to(v).map(|points| Chain {
        eps,
        steps: points.len() - 1,
        points,
    }))
}

/// Outcome of a sampled link(C) check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainNumber {
    pub eps: f64,
    pub c: f64,
    /// Largest minimal chain length over pairs at distance below `c`.
    pub n: usize,
    /// A pair attaining `n`, if any pair of distinct points qualifies.
    pub worst_pair: Option<[usize; 2]>,
    /// Ordered pairs of distinct points examined.
    pub pairs_checked: usize,
    /// Always true: the result only covers the given finite sample.
    pub sampled: bool,
}

/// Maximum, over pairs with `d(u, v) < c`, of the minimal number of
/// `eps`-steps joining them. Fails with [`Error::LinkBroken`] naming the
/// first unreachable pair.
pub fn chain_number(m: &FiniteMetricSpace, eps: f64, c: f64) -> Result<ChainNumber> {
    check_eps(eps)?;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    let n = m.len();
    // Per source: (longest chain, pair attaining it, pairs checked), or the
    // first unreachable pair.
    type PerSource = std::result::Result<(usize, Option<[usize; 2]>, usize), [usize; 2]>;
    let per_source: Vec<PerSource> = (0..n)
        .into_par_iter()
        .map(|u| {
            let tree = BfsTree::grow(m, eps, u);
            let mut best = 0;
            let mut worst = None;
            let mut checked = 0;
            for v in 0..n {
                if v == u || !(m.dist(u, v) < c) {
                    continue;
                }
                checked += 1;
                match tree.depth[v] {
                    None => return Err([u, v]),
                    Some(k) if k > best => {
                        best = k;
                        worst = Some([u, v]);
                    }
                    Some(_) => {}
                }
            }
            Ok((best, worst, checked))
        })
        .collect();
    let mut out = ChainNumber {
        eps,
        c,
        n: 0,
        worst_pair: None,
        pairs_checked: 0,
        sampled: true,
    };
    for r in per_source {
        let (best, worst, checked) = r.map_err(|[u, v]| Error::LinkBroken { u, v, eps })?;
        out.pairs_checked += checked;
        if best > out.n {
            out.n = best;
            out.worst_pair = worst;
        }
    }
    Ok(out)
}

/// Chain-point sets `Z_0, ..., Z_last` for nested subsets `F_0 ⊆ F_1 ⊆ ...`
/// of `ambient`: `Z_n` collects every point of a chain witness at scale
/// `2^-l`, `l <= n`, between points of `F_n` at distance below `c`.
pub fn build_z(ambient: &FiniteMetricSpace, f_sets: &[Vec<usize>], c: f64) -> Result<Vec<Vec<usize>>> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    for f in f_sets {
        for &u in f {
            check_point(ambient, u)?;
        }
    }
    for (k, pair) in f_sets.windows(2).enumerate() {
        let prev: BTreeSet<usize> = pair[0].iter().copied().collect();
        let next: BTreeSet<usize> = pair[1].iter().copied().collect();
        if !prev.is_subset(&next) {
            return Err(Error::InvalidArgument(format!(
                "F_{k} is not contained in F_{}",
                k + 1
            )));
        }
    }
    let mut trees: HashMap<(u32, usize), BfsTree> = HashMap::new();
    let mut out = Vec::with_capacity(f_sets.len());
    for (level, f) in f_sets.iter().enumerate() {
        let mut z: BTreeSet<usize> = f.iter().copied().collect();
        for l in 0..=level as u32 {
            let eps = (-(l as f64)).exp2();
            for &u in f {
                let tree = trees
                    .entry((l, u))
                    .or_insert_with(|| BfsTree::grow(ambient, eps, u));
                for &v in f {
                    if u == v || !(ambient.dist(u, v) < c) {
                        continue;
                    }
                    let path = tree
                        .path_to(v)
                        .ok_or(Error::ChainMissing { u, v, level: l })?;
                    z.extend(path);
                }
            }
        }
        out.push(z.into_iter().collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::two_clusters;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::line(xs).unwrap()
    }

    #[test]
    fn net_on_short_line() {
        let m = line(&[0.0, 0.5, 1.0]);
        let net = greedy_net(&m, 0.6, None).unwrap();
        assert_eq!(net.members, vec![0, 2]);
        assert_eq!(net.snap(1), 0);
        assert!(net_violations(&m, &net).is_empty());
    }

    #[test]
    fn net_extremes() {
        let m = line(&[0.0, 0.3, 0.7, 1.0]);
        let net = greedy_net(&m, 5.0, None).unwrap();
        assert_eq!(net.members, vec![0]);
        let net = greedy_net(&m, 0.1, None).unwrap();
        assert_eq!(net.members, vec![0, 1, 2, 3]);
        let net = greedy_net(&m, 0.5, Some(&[3, 2, 1, 0])).unwrap();
        assert_eq!(net.members, vec![3, 1]);
        assert!(net_violations(&m, &net).is_empty());
    }

    #[test]
    fn net_rejects_bad_input() {
        let m = line(&[0.0, 1.0]);
        assert!(greedy_net(&m, 0.0, None).is_err());
        assert!(greedy_net(&m, 1.0, Some(&[0, 0])).is_err());
        assert!(greedy_net(&m, 1.0, Some(&[0])).is_err());
    }

    #[test]
    fn violations_catch_broken_nets() {
        let m = line(&[0.0, 0.5, 1.0]);
        let bad = Net {
            eps: 0.6,
            members: vec![0, 1],
            assignment: vec![0, 1, 1],
        };
        let v = net_violations(&m, &bad);
        assert_eq!(v.separation, vec![[0, 1]]);
        let bad = Net {
            eps: 0.6,
            members: vec![0, 2],
            assignment: vec![0, 1, 1],
        };
        assert_eq!(net_violations(&m, &bad).assignment, vec![1]);
    }

    #[test]
    fn chain_on_quarter_grid() {
        let m = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let ch = chain_witness(&m, 0.3, 0, 4).unwrap().unwrap();
        assert_eq!(ch.points, vec![0, 1, 2, 3, 4]);
        assert_eq!(ch.steps, 4);
        let same = chain_witness(&m, 0.3, 2, 2).unwrap().unwrap();
        assert_eq!((same.points, same.steps), (vec![2], 0));
        assert!(chain_witness(&line(&[0.0, 1.0]), 0.5, 0, 1).unwrap().is_none());
    }

    #[test]
    fn chain_number_examples() {
        let m = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let r = chain_number(&m, 0.3, 1.1).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.worst_pair, Some([0, 4]));
        assert!(r.sampled);

        let r = chain_number(&m, 0.3, 0.25).unwrap();
        assert_eq!(r.n, 0);
        assert_eq!(r.pairs_checked, 0);

        let two = two_clusters(3, 0.5, 10.0);
        match chain_number(&two, 1.0, 20.0) {
            Err(Error::LinkBroken { u, v, .. }) => assert!(u < 3 && v >= 3),
            other => panic!("expected a broken link, got {other:?}"),
        }
    }

    #[test]
    fn build_z_examples() {
        let m = line(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        let z = build_z(&m, &[vec![0]], 1.0).unwrap();
        assert_eq!(z, vec![vec![0]]);

        let far = line(&[0.0, 3.0]);
        let z = build_z(&far, &[vec![0], vec![0, 1]], 1.0).unwrap();
        assert_eq!(z[1], vec![0, 1]);

        let z = build_z(&m, &[vec![0], vec![0, 5]], 1.0).unwrap();
        assert_eq!(z[0], vec![0]);
        assert!(z[1].len() > 2, "scale 1/2 needs an intermediate point: {:?}", z[1]);
        assert!(z[1].contains(&0) && z[1].contains(&5));
    }

    #[test]
    fn build_z_reports_missing_chain_and_bad_nesting() {
        let m = line(&[0.0, 0.9]);
        match build_z(&m, &[vec![0, 1], vec![0, 1]], 1.0) {
            Err(Error::ChainMissing { level, .. }) => assert_eq!(level, 1),
            other => panic!("expected a missing chain, got {other:?}"),
        }
        assert!(matches!(
            build_z(&m, &[vec![0, 1], vec![1]], 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
