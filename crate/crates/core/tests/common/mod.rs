#![allow(dead_code)] // not every test binary uses every helper

//! Shared fixtures and independent oracles for the integration tests.
//!
//! The joint-probability oracle here deliberately avoids the library's
//! log-gamma route: it expands every Dirichlet-normalizer ratio into rising
//! factorials and sums plain logarithms, so it can certify the library's
//! values independently.

use routemix::corpus::{Corpus, TimeBinScheme, Unit, Vocabularies};
use routemix::model::{corpus_from_units, ModelConfig};

/// Corpus over synthetic ids: first-order sequences with private location
/// pairs, and trajectories given as (object, [(sequence, bin)]) streams.
pub fn toy_corpus(
    num_seqs: usize,
    num_objs: usize,
    total_bins: u32,
    trajs: &[(u32, &[(u32, u32)])],
) -> Corpus {
    let mut vocab = Vocabularies::new(1).unwrap();
    for s in 0..num_seqs {
        let a = vocab.locations.encode(&format!("p{s}"));
        let b = vocab.locations.encode(&format!("q{s}"));
        vocab.sequences.encode(&[a, b]);
    }
    for o in 0..num_objs {
        vocab.objects.encode(&format!("obj{o}"));
    }
    let scheme = TimeBinScheme::with_total_bins(total_bins).unwrap();
    let units = trajs
        .iter()
        .map(|&(obj, list)| {
            let units = list
                .iter()
                .map(|&(seq, bin)| Unit { seq, obj, bin })
                .collect();
            (obj, units)
        })
        .collect();
    corpus_from_units(vocab, scheme, units)
}

/// The tiny two-trajectory fixture: M = 2 with 3 units each, K = 2, S = 3,
/// O = 2, B = 2. Priors are smoothed for fast mixing.
pub fn tiny_fixture() -> (Corpus, ModelConfig) {
    let corpus = toy_corpus(
        3,
        2,
        2,
        &[
            (0, &[(0, 0), (1, 1), (0, 0)][..]),
            (1, &[(2, 1), (1, 0), (2, 1)][..]),
        ],
    );
    let mut cfg = ModelConfig::new(2).with_symmetric_alpha(1.0);
    cfg.order = 1;
    cfg.beta = 0.5;
    cfg.eta = 0.5;
    cfg.gamma = 0.5;
    (corpus, cfg)
}

/// Sum of logs of the rising factorial `x (x+1) ... (x+n-1)`.
fn log_rising(x: f64, n: u32) -> f64 {
    (0..n).map(|j| (x + j as f64).ln()).sum()
}

/// Independent evaluation of the collapsed joint log-probability for a full
/// assignment vector, by direct counting and rising-factorial expansion.
pub fn oracle_log_joint(corpus: &Corpus, cfg: &ModelConfig, z: &[Vec<u32>]) -> f64 {
    let k = cfg.k;
    let s_dim = corpus.num_sequences();
    let o_dim = corpus.num_objects();
    let b_dim = corpus.num_bins();

    let mut n_ks = vec![vec![0u32; s_dim]; k];
    let mut n_ko = vec![vec![0u32; o_dim]; k];
    let mut n_kt = vec![vec![0u32; b_dim]; k];
    let mut n_mk = vec![vec![0u32; k]; corpus.num_trajectories()];
    for (m, traj) in corpus.trajectories.iter().enumerate() {
        for (i, u) in traj.units.iter().enumerate() {
            let zz = z[m][i] as usize;
            n_ks[zz][u.seq as usize] += 1;
            n_ko[zz][u.obj as usize] += 1;
            n_kt[zz][u.bin as usize] += 1;
            n_mk[m][zz] += 1;
        }
    }

    let sym_block = |rows: &[Vec<u32>], prior: f64, dim: usize| -> f64 {
        rows.iter()
            .map(|row| {
                let total: u32 = row.iter().sum();
                row.iter().map(|&n| log_rising(prior, n)).sum::<f64>()
                    - log_rising(dim as f64 * prior, total)
            })
            .sum()
    };

    let mut total = sym_block(&n_ks, cfg.beta, s_dim);
    if cfg.components.object {
        total += sym_block(&n_ko, cfg.eta, o_dim);
    }
    if cfg.components.time {
        total += sym_block(&n_kt, cfg.gamma, b_dim);
    }
    let alpha_sum: f64 = cfg.alpha.iter().sum();
    for row in &n_mk {
        let t_m: u32 = row.iter().sum();
        total += row
            .iter()
            .zip(&cfg.alpha)
            .map(|(&n, &a)| log_rising(a, n))
            .sum::<f64>()
            - log_rising(alpha_sum, t_m);
    }
    total
}

/// Every assignment vector for a corpus with `total` units under K factors,
/// materialized as nested per-trajectory vectors.
pub fn enumerate_assignments(corpus: &Corpus, k: usize) -> Vec<Vec<Vec<u32>>> {
    let sizes: Vec<usize> = corpus.trajectories.iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let count = k.pow(total as u32);
    let mut out = Vec::with_capacity(count);
    for code in 0..count {
        let mut rem = code;
        let mut z: Vec<Vec<u32>> = Vec::with_capacity(sizes.len());
        for &len in &sizes {
            let mut row = Vec::with_capacity(len);
            for _ in 0..len {
                row.push((rem % k) as u32);
                rem /= k;
            }
            z.push(row);
        }
        out.push(z);
    }
    out
}

/// Exact posterior over all assignment vectors, normalized from the oracle
/// joint.
pub fn oracle_posterior(corpus: &Corpus, cfg: &ModelConfig) -> Vec<f64> {
    let all = enumerate_assignments(corpus, cfg.k);
    let logs: Vec<f64> = all
        .iter()
        .map(|z| oracle_log_joint(corpus, cfg, z))
        .collect();
    normalize_logs(&logs)
}

pub fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / sum).collect()
}

/// Index of an assignment vector in the `enumerate_assignments` order.
pub fn assignment_code(z: &[Vec<u32>], k: usize) -> usize {
    let mut code = 0usize;
    let mut base = 1usize;
    for row in z {
        for &v in row {
            code += v as usize * base;
            base *= k;
        }
    }
    code
}
