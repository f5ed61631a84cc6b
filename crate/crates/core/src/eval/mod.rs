//! Evaluation: factor coherence, factor inspection, next-location
//! prediction, average precision, factor matching, and seeded k-fold
//! cross-validation.

mod coherence;
mod matching;
mod predict;

pub use coherence::{
    bin_display, inspect_factor, pmi_coherence, sequence_display, top_q_indices,
    CoherenceReport, FactorCoherence, FactorInspection,
};
pub use matching::{match_factors, total_variation, Matching};
pub use predict::{
    average_precision, frequency_ranking, location_frequency, Aggregation, PredictionInstance,
    Predictor, Ranking,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::model::ModelConfig;
use crate::sampler::{train, FoldInGlobals};
use crate::{Error, Result};

/// Settings for cross-validated evaluation.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub folds: usize,
    pub iterations: usize,
    pub fold_in_iterations: usize,
    pub average_last: usize,
    /// Cutoffs at which average precision is reported.
    pub topns: Vec<usize>,
    pub q: usize,
    pub epsilon: f64,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        EvalConfig {
            folds: 10,
            iterations: 100,
            fold_in_iterations: 20,
            average_last: 1,
            topns: vec![1, 5],
            q: 10,
            epsilon: 1.0,
            aggregation: Aggregation::Max,
            seed,
        }
    }
}

/// Scores of one fold: model and popularity-baseline average precision at
/// each cutoff, plus training-corpus coherence.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub instances: usize,
    pub ap: Vec<f64>,
    pub baseline_ap: Vec<f64>,
    pub pmi: f64,
}

#[derive(Debug, Clone)]
pub struct FoldStats {
    pub ap: Vec<f64>,
    pub baseline_ap: Vec<f64>,
    pub pmi: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub topns: Vec<usize>,
    pub folds: Vec<FoldResult>,
}

impl EvalReport {
    /// Mean and sample standard deviation over folds, column-wise.
    pub fn summary(&self) -> (FoldStats, FoldStats) {
        let n = self.folds.len() as f64;
        let cols = self.topns.len();
        let mean = |get: &dyn Fn(&FoldResult) -> f64| -> f64 {
            self.folds.iter().map(get).sum::<f64>() / n
        };
        let std = |get: &dyn Fn(&FoldResult) -> f64, mu: f64| -> f64 {
            if self.folds.len() < 2 {
                return 0.0;
            }
            let ss: f64 = self.folds.iter().map(|f| (get(f) - mu).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        };
        let mut mean_stats = FoldStats {
            ap: Vec::with_capacity(cols),
            baseline_ap: Vec::with_capacity(cols),
            pmi: 0.0,
        };
        let mut std_stats = mean_stats.clone();
        for c in 0..cols {
            let mu = mean(&|f: &FoldResult| f.ap[c]);
            mean_stats.ap.push(mu);
            std_stats.ap.push(std(&|f: &FoldResult| f.ap[c], mu));
            let mu = mean(&|f: &FoldResult| f.baseline_ap[c]);
            mean_stats.baseline_ap.push(mu);
            std_stats
                .baseline_ap
                .push(std(&|f: &FoldResult| f.baseline_ap[c], mu));
        }
        let mu = mean(&|f: &FoldResult| f.pmi);
        mean_stats.pmi = mu;
        std_stats.pmi = std(&|f: &FoldResult| f.pmi, mu);
        (mean_stats, std_stats)
    }
}

/// Deterministic fold assignment: a seeded shuffle of trajectory indices
/// dealt round-robin into folds.
pub fn fold_assignment(num_trajectories: usize, folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..num_trajectories).collect();
    order.shuffle(rng);
    let mut assignment = vec![0usize; num_trajectories];
    for (pos, &traj) in order.iter().enumerate() {
        assignment[traj] = pos % folds;
    }
    assignment
}

/// Build the prediction instance of one held-out trajectory: the prefix is
/// everything but the final location (so all units except the last), the
/// context is the last unit's first r locations, and the target its final
/// location. The query bin is the last prefix unit's bin; a prefix with no
/// units borrows the lone unit's bin, the only temporal signal available.
fn instance_parts(
    traj: &crate::corpus::TrajectoryUnits,
    corpus: &Corpus,
) -> (Vec<crate::corpus::Unit>, Vec<u32>, u32, u32) {
    let t = traj.len();
    let order = corpus.vocab.order;
    let last_key = corpus.vocab.sequences.key(traj.units[t - 1].seq);
    let context = last_key[..order].to_vec();
    let truth = last_key[order];
    let prefix: Vec<crate::corpus::Unit> = traj.units[..t - 1].to_vec();
    let bin = if t >= 2 {
        traj.units[t - 2].bin
    } else {
        traj.units[0].bin
    };
    (prefix, context, truth, bin)
}

/// Seeded k-fold cross-validation: per fold, train on the remaining
/// trajectories, predict each held-out trajectory's final location, and
/// report average precision (model and popularity baseline) plus
/// training-corpus PMI coherence.
pub fn evaluate(corpus: &Corpus, model_cfg: &ModelConfig, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.folds < 2 {
        return Err(Error::Argument(format!(
            "cross-validation needs at least 2 folds, got {}",
            cfg.folds
        )));
    }
    if corpus.num_trajectories() < cfg.folds {
        return Err(Error::Argument(format!(
            "{} trajectories cannot fill {} folds",
            corpus.num_trajectories(),
            cfg.folds
        )));
    }
    if model_cfg.order != corpus.vocab.order {
        return Err(Error::Config(format!(
            "model order {} does not match corpus order {}",
            model_cfg.order, corpus.vocab.order
        )));
    }
    if cfg.topns.is_empty() {
        return Err(Error::Argument("no top-n cutoffs requested".into()));
    }
    let max_topn = *cfg.topns.iter().max().unwrap();

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let assignment = fold_assignment(corpus.num_trajectories(), cfg.folds, &mut master);
    let fold_seeds: Vec<(u64, u64)> = (0..cfg.folds)
        .map(|_| (master.random(), master.random()))
        .collect();

    let mut folds = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let train_idx: Vec<usize> = (0..corpus.num_trajectories())
            .filter(|&m| assignment[m] != fold)
            .collect();
        let test_idx: Vec<usize> = (0..corpus.num_trajectories())
            .filter(|&m| assignment[m] == fold)
            .collect();
        let train_corpus = corpus.subset(&train_idx);

        let (train_seed, instance_seed_base) = fold_seeds[fold];
        let (params, sampler) = train(
            &train_corpus,
            model_cfg,
            cfg.iterations,
            cfg.average_last,
            train_seed,
        )?;
        let counts = sampler.into_counts();

        let loc_freq = location_frequency(&train_corpus.trajectories, &corpus.vocab);
        let mut predictor = Predictor::new(
            &params,
            FoldInGlobals::Counts(&counts),
            &corpus.vocab,
            model_cfg,
            loc_freq.clone(),
        );
        predictor.aggregation = cfg.aggregation;
        predictor.fold_in_iterations = cfg.fold_in_iterations;

        let mut instance_rng = ChaCha8Rng::seed_from_u64(instance_seed_base);
        let mut instances = Vec::with_capacity(test_idx.len());
        let mut baseline_instances = Vec::with_capacity(test_idx.len());
        for &m in &test_idx {
            let traj = &corpus.trajectories[m];
            let (prefix, context, truth, bin) = instance_parts(traj, corpus);
            let seed: u64 = instance_rng.random();
            let ranking = predictor.predict(
                &prefix,
                &context,
                Some(traj.object),
                bin,
                max_topn,
                seed,
            )?;
            instances.push(PredictionInstance { ranking, truth });
            baseline_instances.push(PredictionInstance {
                ranking: frequency_ranking(&loc_freq, max_topn),
                truth,
            });
        }

        let ap: Vec<f64> = cfg
            .topns
            .iter()
            .map(|&n| average_precision(&instances, n))
            .collect::<Result<_>>()?;
        let baseline_ap: Vec<f64> = cfg
            .topns
            .iter()
            .map(|&n| average_precision(&baseline_instances, n))
            .collect::<Result<_>>()?;
        let pmi = pmi_coherence(&params, &train_corpus, cfg.q, cfg.epsilon)?.average_pmi;

        folds.push(FoldResult {
            fold,
            instances: instances.len(),
            ap,
            baseline_ap,
            pmi,
        });
    }

    Ok(EvalReport {
        topns: cfg.topns.clone(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;

    fn small_sim_corpus(seed: u64) -> Corpus {
        let mut mc = ModelConfig::new(3);
        mc.alpha = vec![0.4; 3];
        simulate(&mc, 24, 4, 4, 40, 6, 3, seed).unwrap().corpus
    }

    fn quick_cfg(seed: u64) -> EvalConfig {
        let mut cfg = EvalConfig::new(seed);
        cfg.folds = 2;
        cfg.iterations = 15;
        cfg.fold_in_iterations = 5;
        cfg.q = 5;
        cfg
    }

    #[test]
    fn single_fold_rejected() {
        let corpus = small_sim_corpus(1);
        let mc = ModelConfig::new(3);
        let mut cfg = quick_cfg(5);
        cfg.folds = 1;
        assert!(evaluate(&corpus, &mc, &cfg).is_err());
    }

    #[test]
    fn more_folds_than_trajectories_rejected() {
        let corpus = small_sim_corpus(1);
        let mc = ModelConfig::new(3);
        let mut cfg = quick_cfg(5);
        cfg.folds = corpus.num_trajectories() + 1;
        assert!(evaluate(&corpus, &mc, &cfg).is_err());
    }

    #[test]
    fn identical_seeds_reproduce_reports() {
        let corpus = small_sim_corpus(2);
        let mc = ModelConfig::new(3);
        let cfg = quick_cfg(42);
        let a = evaluate(&corpus, &mc, &cfg).unwrap();
        let b = evaluate(&corpus, &mc, &cfg).unwrap();
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            assert_eq!(fa.ap, fb.ap);
            assert_eq!(fa.baseline_ap, fb.baseline_ap);
            assert_eq!(fa.pmi, fb.pmi);
            assert_eq!(fa.instances, fb.instances);
        }
    }

    #[test]
    fn fold_assignment_is_balanced_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = fold_assignment(25, 5, &mut rng);
        for fold in 0..5 {
            assert_eq!(a.iter().filter(|&&f| f == fold).count(), 5);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = fold_assignment(25, 5, &mut rng);
        assert_eq!(a, b);
    }

    #[test]
    fn summary_reports_mean_and_sample_stddev() {
        let report = EvalReport {
            topns: vec![1],
            folds: vec![
                FoldResult {
                    fold: 0,
                    instances: 10,
                    ap: vec![0.4],
                    baseline_ap: vec![0.1],
                    pmi: 1.0,
                },
                FoldResult {
                    fold: 1,
                    instances: 10,
                    ap: vec![0.6],
                    baseline_ap: vec![0.3],
                    pmi: 3.0,
                },
            ],
        };
        let (mean, std) = report.summary();
        assert!((mean.ap[0] - 0.5).abs() < 1e-12);
        assert!((std.ap[0] - (2.0f64 * 0.01).sqrt()).abs() < 1e-12);
        assert!((mean.pmi - 2.0).abs() < 1e-12);
        assert!((std.pmi - 2.0f64.sqrt()).abs() < 1e-12);
    }
}
