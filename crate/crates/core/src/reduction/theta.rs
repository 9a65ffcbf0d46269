//! The flattening `θ(x)(⟨n, m⟩) = T_n(x(n))(m)`.

use serde::Serialize;

use super::pairing::pair;
use super::ReductionInstance;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::metric::lq_norm_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEntry {
    pub k: u64,
    pub n: u64,
    pub m: u64,
    pub value: f64,
}

/// Sparse flat sequence: only indices `⟨n, m⟩` with `n` a level and `m` a
/// coordinate of `T_n` are present, sorted by `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theta {
    pub q: f64,
    pub entries: Vec<ThetaEntry>,
}

impl Theta {
    /// `Σ_k |θ(x)(k) - θ(y)(k)|^q`. Both sequences must come from the same
    /// levels.
    pub fn distance_power(&self, other: &Theta) -> f64 {
        debug_assert_eq!(self.entries.len(), other.entries.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a.value - b.value).abs().powf(self.q))
            .sum()
    }
}

/// Flattens per-level images, `maps(n)` being the map of level `n`.
pub(crate) fn theta_of<'a>(
    q: f64,
    maps: impl Fn(usize) -> &'a Embedding,
    x: &[usize],
) -> Result<Theta> {
    let mut entries = Vec::new();
    for (n, &u) in x.iter().enumerate() {
        let t = maps(n);
        if u >= t.len() {
            return Err(Error::InvalidArgument(format!(
                "point {u} out of range at level {n}"
            )));
        }
        for (m, &value) in t.point(u).iter().enumerate() {
            let k = pair(n as u64, m as u64).ok_or_else(|| {
                Error::InvalidArgument(format!("pairing index for ({n}, {m}) overflows"))
            })?;
            entries.push(ThetaEntry {
                k,
                n: n as u64,
                m: m as u64,
                value,
            });
        }
    }
    entries.sort_by_key(|e| e.k);
    Ok(Theta { q, entries })
}

pub fn build_theta(inst: &ReductionInstance, x: &[usize]) -> Result<Theta> {
    inst.check_choice(x)?;
    theta_of(inst.constants.q, |n| &inst.levels[n].map, x)
}

/// Both sides of `Σ_k δ(θx(k), θy(k))^q = Σ_n δ_q(T_n x(n), T_n y(n))^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rearrangement {
    pub flat_sum: f64,
    pub level_sum: f64,
    pub relative_error: f64,
}

pub(crate) fn rearrangement_of(flat_sum: f64, level_sum: f64) -> Rearrangement {
    let scale = flat_sum.abs().max(level_sum.abs());
    let relative_error = if scale == 0.0 {
        0.0
    } else {
        (flat_sum - level_sum).abs() / scale
    };
    Rearrangement {
        flat_sum,
        level_sum,
        relative_error,
    }
}

pub(crate) fn level_power_sum<'a>(
    q: f64,
    maps: impl Fn(usize) -> &'a Embedding,
    x: &[usize],
    y: &[usize],
) -> f64 {
    (0..x.len())
        .map(|n| {
            let (t, u, v) = (maps(n), x[n], y[n]);
            lq_norm_unchecked(
                t.point(u).iter().zip(t.point(v)).map(|(a, b)| (a - b).abs()),
                q,
            )
            .powf(q)
        })
        .sum()
}

pub fn rearrangement(inst: &ReductionInstance, x: &[usize], y: &[usize]) -> Result<Rearrangement> {
    let (tx, ty) = (build_theta(inst, x)?, build_theta(inst, y)?);
    let q = inst.constants.q;
    let level_sum = level_power_sum(q, |n| &inst.levels[n].map, x, y);
    Ok(rearrangement_of(tx.distance_power(&ty), level_sum))
}
