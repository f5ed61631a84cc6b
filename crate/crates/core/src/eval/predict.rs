//! Next-location prediction: fold in a prefix to get its factor mixture,
//! score every vocabulary sequence sharing the r-location context, and rank
//! candidate locations. Average precision scores ranked instances.

use std::collections::HashMap;

use crate::corpus::{Unit, Vocabularies, UNKNOWN_OBJ};
use crate::model::{ModelConfig, ModelParams};
use crate::sampler::{fold_in, FoldInGlobals};
use crate::{Error, Result};

/// How a location's score aggregates over its candidate sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

impl Aggregation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "sum" => Ok(Aggregation::Sum),
            other => Err(Error::Config(format!(
                "unknown aggregation {other:?} (expected max or sum)"
            ))),
        }
    }
}

/// A ranked list of candidate next locations with non-increasing scores.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub entries: Vec<(u32, f64)>,
    /// Set when the context matched no vocabulary sequence and the ranking
    /// fell back to corpus-frequency order.
    pub frequency_fallback: bool,
}

impl Ranking {
    /// 1-based rank of `location` within the first `topn` entries.
    pub fn rank_of(&self, location: u32, topn: usize) -> Option<usize> {
        self.entries
            .iter()
            .take(topn)
            .position(|&(loc, _)| loc == location)
            .map(|p| p + 1)
    }
}

/// One scored test case: the predicted ranking and the actual next location.
#[derive(Debug, Clone)]
pub struct PredictionInstance {
    pub ranking: Ranking,
    pub truth: u32,
}

/// Mean reciprocal rank of the true next location over instances, with
/// rankings truncated to `topn`; misses contribute 0.
pub fn average_precision(instances: &[PredictionInstance], topn: usize) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Argument("no prediction instances".into()));
    }
    let sum: f64 = instances
        .iter()
        .map(|inst| match inst.ranking.rank_of(inst.truth, topn) {
            Some(rank) => 1.0 / rank as f64,
            None => 0.0,
        })
        .sum();
    Ok(sum / instances.len() as f64)
}

/// Training frequency of each location as a unit's final location; the
/// popularity baseline and the fallback ranking both use it.
pub fn location_frequency(
    trajectories: &[crate::corpus::TrajectoryUnits],
    vocab: &Vocabularies,
) -> Vec<u64> {
    let mut freq = vec![0u64; vocab.num_locations()];
    let order = vocab.order;
    for traj in trajectories {
        for u in &traj.units {
            if u.seq != crate::corpus::UNKNOWN_SEQ {
                let last = vocab.sequences.key(u.seq)[order];
                freq[last as usize] += 1;
            }
        }
    }
    freq
}

/// Rank all locations by frequency (descending, ties by id), truncated.
pub fn frequency_ranking(loc_freq: &[u64], topn: usize) -> Ranking {
    let mut idx: Vec<u32> = (0..loc_freq.len() as u32).collect();
    idx.sort_by(|&a, &b| {
        loc_freq[b as usize]
            .cmp(&loc_freq[a as usize])
            .then(a.cmp(&b))
    });
    idx.truncate(topn);
    Ranking {
        entries: idx
            .into_iter()
            .map(|i| (i, loc_freq[i as usize] as f64))
            .collect(),
        frequency_fallback: true,
    }
}

/// Scores candidate next locations for prefixes against a fitted model.
///
/// The candidate set for a context is every vocabulary sequence whose first
/// r locations equal it; the candidate's final location collects the score.
pub struct Predictor<'a> {
    params: &'a ModelParams,
    globals: FoldInGlobals<'a>,
    vocab: &'a Vocabularies,
    cfg: &'a ModelConfig,
    candidates: HashMap<&'a [u32], Vec<u32>>,
    loc_freq: Vec<u64>,
    pub aggregation: Aggregation,
    pub fold_in_iterations: usize,
}

impl<'a> Predictor<'a> {
    pub fn new(
        params: &'a ModelParams,
        globals: FoldInGlobals<'a>,
        vocab: &'a Vocabularies,
        cfg: &'a ModelConfig,
        loc_freq: Vec<u64>,
    ) -> Self {
        let order = vocab.order;
        let mut candidates: HashMap<&[u32], Vec<u32>> = HashMap::new();
        for (id, key) in vocab.sequences.keys().enumerate() {
            candidates.entry(&key[..order]).or_default().push(id as u32);
        }
        Predictor {
            params,
            globals,
            vocab,
            cfg,
            candidates,
            loc_freq,
            aggregation: Aggregation::Max,
            fold_in_iterations: 20,
        }
    }

    /// Fold in the prefix units, then rank continuations of `context` (the
    /// last r observed locations) for the given object and query time bin.
    pub fn predict(
        &self,
        prefix_units: &[Unit],
        context: &[u32],
        object: Option<u32>,
        bin: u32,
        topn: usize,
        seed: u64,
    ) -> Result<Ranking> {
        let theta = fold_in(
            prefix_units,
            self.globals,
            self.cfg,
            self.fold_in_iterations,
            seed,
        )
        .theta;
        self.score_candidates(&theta, context, object, bin, topn)
    }

    /// Rank continuations under an explicit factor mixture: each candidate
    /// sequence scores the theta-weighted product of its factor-specific
    /// probabilities, and locations aggregate over their sequences.
    pub fn score_candidates(
        &self,
        theta: &[f64],
        context: &[u32],
        object: Option<u32>,
        bin: u32,
        topn: usize,
    ) -> Result<Ranking> {
        let order = self.vocab.order;
        if context.len() != order {
            return Err(Error::Argument(format!(
                "context must supply the last {order} locations, got {}",
                context.len()
            )));
        }
        let Some(seqs) = self.candidates.get(context) else {
            return Ok(frequency_ranking(&self.loc_freq, topn));
        };

        let k = self.cfg.k;
        let mut by_location: HashMap<u32, f64> = HashMap::new();
        for &s in seqs {
            let mut score = 0.0;
            for ki in 0..k {
                let mut w = theta[ki] * self.params.phi.at(ki, s as usize);
                if self.cfg.components.object {
                    if let Some(o) = object.filter(|&o| o != UNKNOWN_OBJ) {
                        w *= self.params.psi.at(ki, o as usize);
                    }
                }
                if self.cfg.components.time {
                    w *= self.params.phi_time.at(ki, bin as usize);
                }
                score += w;
            }
            let last = self.vocab.sequences.key(s)[order];
            let slot = by_location.entry(last).or_insert(0.0);
            match self.aggregation {
                Aggregation::Max => {
                    if score > *slot {
                        *slot = score;
                    }
                }
                Aggregation::Sum => *slot += score,
            }
        }
        let mut entries: Vec<(u32, f64)> = by_location.into_iter().collect();
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        entries.truncate(topn);
        Ok(Ranking {
            entries,
            frequency_fallback: false,
        })
    }
}
