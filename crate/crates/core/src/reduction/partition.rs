//! The split of level indices into small, far and middle distances.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Part {
    pub indices: Vec<usize>,
    /// `Σ d_n^p` over the part.
    pub source_sum: f64,
    /// `Σ δ_n^q` over the part, when image distances were given.
    pub image_sum: Option<f64>,
}

/// `I1 = {d_n < ε_n}`, `I2 = {d_n >= C}`, `I3 = {ε_n <= d_n < C}`.
///
/// The predicates are tested in that order, so when `ε_n > C` an index with
/// `d_n` between them lands in `I1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IndexPartition {
    pub i1: Part,
    pub i2: Part,
    pub i3: Part,
}

impl IndexPartition {
    pub fn parts(&self) -> [&Part; 3] {
        [&self.i1, &self.i2, &self.i3]
    }
}

/// Partitions level indices and attaches per-part power sums. `image` is
/// an optional list of image distances `δ_n` with its exponent `q`.
pub fn partition_indices(
    dvals: &[f64],
    eps: &[f64],
    c: f64,
    p: f64,
    image: Option<(&[f64], f64)>,
) -> Result<IndexPartition> {
    if eps.len() != dvals.len() || image.is_some_and(|(d, _)| d.len() != dvals.len()) {
        return Err(Error::Shape(format!(
            "{} distances, {} eps values and {} image distances",
            dvals.len(),
            eps.len(),
            image.map_or(0, |(d, _)| d.len())
        )));
    }
    let mut out = IndexPartition::default();
    if image.is_some() {
        for part in [&mut out.i1, &mut out.i2, &mut out.i3] {
            part.image_sum = Some(0.0);
        }
    }
    for (n, (&d, &e)) in dvals.iter().zip(eps).enumerate() {
        let part = if d < e {
            &mut out.i1
        } else if d >= c {
            &mut out.i2
        } else {
            &mut out.i3
        };
        part.indices.push(n);
        part.source_sum += d.powf(p);
        if let (Some(sum), Some((deltas, q))) = (part.image_sum.as_mut(), image) {
            *sum += deltas[n].powf(q);
        }
    }
    Ok(out)
}
