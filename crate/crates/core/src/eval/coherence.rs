//! Latent factor coherence via pairwise pointwise mutual information over
//! each factor's most probable sequences, plus factor inspection.

use crate::corpus::{Corpus, TimeBinScheme, Vocabularies, UNKNOWN_SEQ};
use crate::model::ModelParams;
use crate::{Error, Result};

/// Coherence of one factor: its top-q sequences by probability and the mean
/// pairwise PMI over all q(q-1)/2 distinct pairs.
#[derive(Debug, Clone)]
pub struct FactorCoherence {
    pub factor: usize,
    pub top: Vec<(u32, f64)>,
    pub pmi: f64,
    /// Number of distinct pairs averaged, q(q-1)/2.
    pub pairs: usize,
}

#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub q: usize,
    pub epsilon: f64,
    pub factors: Vec<FactorCoherence>,
    /// Mean of the per-factor PMI scores.
    pub average_pmi: f64,
}

/// Indices of the `q` largest entries, ties broken by index ascending.
pub fn top_q_indices(row: &[f64], q: usize) -> Vec<(u32, f64)> {
    let mut idx: Vec<u32> = (0..row.len() as u32).collect();
    idx.sort_by(|&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(q);
    idx.into_iter().map(|i| (i, row[i as usize])).collect()
}

/// Trajectory-level occurrence lists per sequence: sorted trajectory indices
/// containing each sequence at least once.
fn build_postings(corpus: &Corpus) -> Vec<Vec<u32>> {
    let mut postings = vec![Vec::new(); corpus.num_sequences()];
    for traj in &corpus.trajectories {
        let mut seen: Vec<u32> = traj
            .units
            .iter()
            .map(|u| u.seq)
            .filter(|&s| s != UNKNOWN_SEQ)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        for s in seen {
            postings[s as usize].push(traj.index);
        }
    }
    postings
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Pairwise PMI coherence of every factor against a reference corpus.
///
/// A sequence's probability is the fraction of reference trajectories
/// containing it; the joint count is smoothed by `epsilon` (as is the
/// marginal of a sequence absent from the reference, so scores stay finite).
/// `epsilon = 0` gives the unsmoothed statistic, which is minus infinity on
/// pairs that never co-occur.
pub fn pmi_coherence(
    params: &ModelParams,
    corpus: &Corpus,
    q: usize,
    epsilon: f64,
) -> Result<CoherenceReport> {
    if q < 2 {
        return Err(Error::Argument(format!("q must be >= 2, got {q}")));
    }
    if epsilon < 0.0 {
        return Err(Error::Argument("epsilon must be >= 0".into()));
    }
    let m = corpus.num_trajectories() as f64;
    if corpus.num_trajectories() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let postings = build_postings(corpus);
    let marginal = |s: u32| -> f64 {
        let df = postings[s as usize].len() as f64;
        if df > 0.0 {
            df / m
        } else {
            epsilon / (m + epsilon)
        }
    };

    let mut factors = Vec::with_capacity(params.k());
    for k in 0..params.k() {
        let top = top_q_indices(params.phi.row(k), q);
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..top.len() {
            for j in i + 1..top.len() {
                let (si, sj) = (top[i].0, top[j].0);
                let joint =
                    intersection_size(&postings[si as usize], &postings[sj as usize]) as f64;
                let p_joint = (joint + epsilon) / (m + epsilon);
                sum += (p_joint / (marginal(si) * marginal(sj))).ln();
                pairs += 1;
            }
        }
        factors.push(FactorCoherence {
            factor: k,
            top,
            pmi: sum / pairs as f64,
            pairs,
        });
    }
    let average_pmi = factors.iter().map(|f| f.pmi).sum::<f64>() / factors.len() as f64;
    Ok(CoherenceReport {
        q,
        epsilon,
        factors,
        average_pmi,
    })
}

/// Ranked views of one factor: its top-q sequences, objects, and time bins.
#[derive(Debug, Clone)]
pub struct FactorInspection {
    pub factor: usize,
    pub sequences: Vec<(u32, f64)>,
    pub objects: Vec<(u32, f64)>,
    pub bins: Vec<(u32, f64)>,
}

pub fn inspect_factor(
    params: &ModelParams,
    factor: usize,
    q: usize,
) -> Result<FactorInspection> {
    if factor >= params.k() {
        return Err(Error::Argument(format!(
            "factor {factor} out of range (k = {})",
            params.k()
        )));
    }
    Ok(FactorInspection {
        factor,
        sequences: top_q_indices(params.phi.row(factor), q),
        objects: top_q_indices(params.psi.row(factor), q),
        bins: top_q_indices(params.phi_time.row(factor), q),
    })
}

/// Display form of a time bin: the 1-based index followed by its hour range
/// and day type, e.g. `5 [8:00-10:00@weekday]`.
pub fn bin_display(scheme: TimeBinScheme, bin: u32) -> String {
    format!("{} [{}]", bin + 1, scheme.label(bin))
}

/// Display form of a sequence: its locations joined by `>`.
pub fn sequence_display(vocab: &Vocabularies, seq: u32) -> String {
    vocab.decode_sequence(seq).join(">")
}
