//! Exact isometric embedding into Euclidean space by double centering.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::Embedding;
use crate::error::Result;
use crate::metric::FiniteMetricSpace;

/// Eigenvalues within this fraction of the largest magnitude count as zero.
pub const EIGEN_RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum L2Outcome {
    Embedded {
        #[serde(skip)]
        embedding: Embedding,
        dim: usize,
        /// Spectrum of the centered Gram matrix, descending.
        eigenvalues: Vec<f64>,
    },
    NotEmbeddable {
        /// The most negative eigenvalue: a witness that no isometric
        /// Euclidean embedding exists.
        most_negative_eigenvalue: f64,
        eigenvalues: Vec<f64>,
    },
}

/// Embeds `m` isometrically into `ℓ2^rank` iff `-½ J D² J` is positive
/// semidefinite, where `J` is the centering projection.
pub fn embed_l2_exact(m: &FiniteMetricSpace) -> Result<L2Outcome> {
    let n = m.len();
    if n == 0 {
        return Ok(L2Outcome::Embedded {
            embedding: Embedding::new(2.0, Vec::new())?,
            dim: 0,
            eigenvalues: Vec::new(),
        });
    }
    let sq = DMatrix::from_fn(n, n, |i, j| m.dist(i, j) * m.dist(i, j));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eig = SymmetricEigen::new(gram);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let scale = eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = EIGEN_RELATIVE_TOL * scale;
    let lowest = *eigenvalues.last().expect("n >= 1");
    if lowest < -tol {
        return Ok(L2Outcome::NotEmbeddable {
            most_negative_eigenvalue: lowest,
            eigenvalues,
        });
    }
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| eig.eigenvalues[k] > tol)
        .collect();
    let coords = (0..n)
        .map(|i| {
            kept.iter()
                .map(|&k| eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt())
                .collect()
        })
        .collect();
    Ok(L2Outcome::Embedded {
        embedding: Embedding::new(2.0, coords)?,
        dim: kept.len(),
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::holder_distortion;

    #[test]
    fn triangles_embed_in_the_plane() {
        let m = FiniteMetricSpace::unlabeled(
            3,
            vec![0.0, 3.0, 4.0, 3.0, 0.0, 5.0, 4.0, 5.0, 0.0],
            false,
        )
        .unwrap();
        let L2Outcome::Embedded { embedding, dim, .. } = embed_l2_exact(&m).unwrap() else {
            panic!("3-4-5 triangle is Euclidean");
        };
        assert_eq!(dim, 2);
        assert!(holder_distortion(&m, &embedding, 1.0).unwrap().a <= 1.0 + 1e-9);
    }

    #[test]
    fn collinear_points_have_rank_one() {
        let m = FiniteMetricSpace::line(&[0.0, 1.0, 3.0]).unwrap();
        let L2Outcome::Embedded { dim, .. } = embed_l2_exact(&m).unwrap() else {
            panic!("a line is Euclidean");
        };
        assert_eq!(dim, 1);
    }

    #[test]
    fn star_is_not_euclidean() {
        // Centre 0 at distance 1 from three leaves, leaves pairwise 2 apart.
        let mut d = vec![2.0; 16];
        for i in 0..4 {
            d[i * 4 + i] = 0.0;
        }
        for leaf in 1..4 {
            d[leaf] = 1.0;
            d[leaf * 4] = 1.0;
        }
        let m = FiniteMetricSpace::unlabeled(4, d, false).unwrap();
        match embed_l2_exact(&m).unwrap() {
            L2Outcome::NotEmbeddable {
                most_negative_eigenvalue,
                ..
            } => assert!(most_negative_eigenvalue < 0.0),
            L2Outcome::Embedded { .. } => panic!("K_1,3 does not embed isometrically"),
        }
    }

    #[test]
    fn single_point_has_dimension_zero() {
        let m = FiniteMetricSpace::unlabeled(1, vec![0.0], false).unwrap();
        let L2Outcome::Embedded { dim, embedding, .. } = embed_l2_exact(&m).unwrap() else {
            panic!("a point is Euclidean");
        };
        assert_eq!((dim, embedding.dim()), (0, 0));
    }
}
