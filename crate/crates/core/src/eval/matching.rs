//! Greedy matching of estimated factors to ground-truth factors by total
//! variation distance between sequence distributions; used to score
//! recovery on simulated corpora.

use crate::model::ModelParams;
use crate::{Error, Result};

/// A factor correspondence: `permutation[est] = truth`, with the total
/// variation distance for each estimated factor's matched pair.
#[derive(Debug, Clone)]
pub struct Matching {
    pub permutation: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Matching {
    pub fn total_cost(&self) -> f64 {
        self.distances.iter().sum()
    }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Pair up factors greedily: repeatedly take the globally closest
/// (estimated, truth) pair by TV distance over the sequence distributions,
/// without replacement. Ties break on the lower index pair.
pub fn match_factors(estimated: &ModelParams, truth: &ModelParams) -> Result<Matching> {
    let k = estimated.phi.rows();
    if truth.phi.rows() != k || truth.phi.cols() != estimated.phi.cols() {
        return Err(Error::Argument(format!(
            "shape mismatch: estimated {}x{}, truth {}x{}",
            estimated.phi.rows(),
            estimated.phi.cols(),
            truth.phi.rows(),
            truth.phi.cols()
        )));
    }
    let mut dist = vec![0.0; k * k];
    for e in 0..k {
        for t in 0..k {
            dist[e * k + t] = total_variation(estimated.phi.row(e), truth.phi.row(t));
        }
    }

    let mut permutation = vec![usize::MAX; k];
    let mut distances = vec![0.0; k];
    let mut est_taken = vec![false; k];
    let mut truth_taken = vec![false; k];
    for _ in 0..k {
        let mut best: Option<(usize, usize)> = None;
        for e in 0..k {
            if est_taken[e] {
                continue;
            }
            for t in 0..k {
                if truth_taken[t] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((be, bt)) => dist[e * k + t] < dist[be * k + bt],
                };
                if better {
                    best = Some((e, t));
                }
            }
        }
        let (e, t) = best.expect("unmatched factor remains");
        est_taken[e] = true;
        truth_taken[t] = true;
        permutation[e] = t;
        distances[e] = dist[e * k + t];
    }
    Ok(Matching {
        permutation,
        distances,
    })
}
