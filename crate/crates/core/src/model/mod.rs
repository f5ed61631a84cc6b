//! Model state: configuration, Gibbs count tables, estimated parameters, the
//! collapsed joint probability, and a generative simulator.

mod file;
mod simulate;

pub use file::{read_params, write_params, PersistMode, SavedModel};
pub use simulate::{simulate, SimCorpus};

use libm::lgamma;

use crate::corpus::{Corpus, TrajectoryUnits, Unit};
use crate::{Error, Result};

/// Which factor-specific distributions take part in the model. The sequence
/// component is always present; object and time can be toggled to form the
/// ablated sub-models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub object: bool,
    pub time: bool,
}

impl Components {
    pub fn full() -> Self {
        Components {
            object: true,
            time: true,
        }
    }

    pub fn sequence_only() -> Self {
        Components {
            object: false,
            time: false,
        }
    }

    /// Parse a `seq[,obj][,time]` list.
    pub fn parse(s: &str) -> Result<Self> {
        let mut c = Components::sequence_only();
        let mut saw_seq = false;
        for part in s.split(',') {
            match part.trim() {
                "seq" | "sequence" => saw_seq = true,
                "obj" | "object" => c.object = true,
                "time" => c.time = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown component {other:?} (expected seq, obj, time)"
                    )))
                }
            }
        }
        if !saw_seq {
            return Err(Error::Config(
                "the sequence component is always required; list it as `seq`".into(),
            ));
        }
        Ok(c)
    }
}

impl std::fmt::Display for Components {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "seq")?;
        if self.object {
            write!(f, ",obj")?;
        }
        if self.time {
            write!(f, ",time")?;
        }
        Ok(())
    }
}

/// Model configuration: the number of latent factors, the sequence order the
/// corpus was built with, the Dirichlet priors, and the active components.
///
/// `alpha` holds one entry per factor; `beta`, `eta`, and `gamma` are
/// symmetric per-dimension prior weights over sequences, objects, and bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub k: usize,
    pub order: usize,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub components: Components,
}

impl ModelConfig {
    /// Defaults: `alpha = 50 / K` per factor and 0.01 for the rest.
    pub fn new(k: usize) -> Self {
        ModelConfig {
            k,
            order: 2,
            alpha: vec![50.0 / k as f64; k],
            beta: 0.01,
            eta: 0.01,
            gamma: 0.01,
            components: Components::full(),
        }
    }

    pub fn with_symmetric_alpha(mut self, alpha: f64) -> Self {
        self.alpha = vec![alpha; self.k];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.alpha.len() != self.k {
            return Err(Error::Config(format!(
                "alpha has {} entries, expected k = {}",
                self.alpha.len(),
                self.k
            )));
        }
        let positive =
            self.alpha.iter().all(|&a| a > 0.0) && self.beta > 0.0 && self.eta > 0.0 && self.gamma > 0.0;
        if !positive {
            return Err(Error::Config("all prior entries must be > 0".into()));
        }
        if self.order < 1 {
            return Err(Error::Config("order must be >= 1".into()));
        }
        Ok(())
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Row-major dense matrix of probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// The estimated row-stochastic distributions: `theta` (trajectories over
/// factors), `phi` (factors over sequences), `psi` (factors over objects),
/// and `phi_time` (factors over time bins).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Mat,
    pub phi: Mat,
    pub psi: Mat,
    pub phi_time: Mat,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        self.phi.rows()
    }
}

/// The mutable state of collapsed Gibbs inference: per-unit factor
/// assignments plus the four count matrices and their maintained sums.
///
/// The factor-indexed tables are stored dimension-major (`n_ks` is S x K in
/// memory, etc.) so that resampling one unit reads its K sequence, object,
/// and bin counts from contiguous slices. Memory is K integers per sequence,
/// which for second-order corpora is the dominant allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTables {
    k: usize,
    num_seqs: usize,
    num_objs: usize,
    num_bins: usize,
    /// M x K: units of trajectory m assigned to factor k.
    n_mk: Vec<u32>,
    /// S x K in memory: units with sequence s assigned to factor k.
    n_ks: Vec<u32>,
    /// O x K in memory.
    n_ko: Vec<u32>,
    /// B x K in memory.
    n_kt: Vec<u32>,
    /// Units per trajectory (row sums of `n_mk`); fixed by the corpus.
    units_per_traj: Vec<u32>,
    /// Units per factor (row sums of `n_ks`/`n_ko`/`n_kt`).
    factor_totals: Vec<u32>,
    /// Per-unit factor assignments, parallel to the corpus trajectories.
    z: Vec<Vec<u32>>,
}

impl CountTables {
    /// Empty tables shaped for `corpus`, with all assignments unset.
    /// Callers populate them through [`CountTables::add`].
    pub fn new(corpus: &Corpus, k: usize) -> Self {
        let m = corpus.num_trajectories();
        CountTables {
            k,
            num_seqs: corpus.num_sequences(),
            num_objs: corpus.num_objects(),
            num_bins: corpus.num_bins(),
            n_mk: vec![0; m * k],
            n_ks: vec![0; k * corpus.num_sequences()],
            n_ko: vec![0; k * corpus.num_objects()],
            n_kt: vec![0; k * corpus.num_bins()],
            units_per_traj: corpus.trajectories.iter().map(|t| t.len() as u32).collect(),
            factor_totals: vec![0; k],
            z: corpus.trajectories.iter().map(|t| vec![0; t.len()]).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_trajectories(&self) -> usize {
        self.units_per_traj.len()
    }

    pub fn num_sequences(&self) -> usize {
        self.num_seqs
    }

    pub fn num_objects(&self) -> usize {
        self.num_objs
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    #[inline]
    pub fn n_mk(&self, m: usize, k: usize) -> u32 {
        self.n_mk[m * self.k + k]
    }

    #[inline]
    pub fn n_ks(&self, k: usize, s: usize) -> u32 {
        self.n_ks[s * self.k + k]
    }

    #[inline]
    pub fn n_ko(&self, k: usize, o: usize) -> u32 {
        self.n_ko[o * self.k + k]
    }

    #[inline]
    pub fn n_kt(&self, k: usize, t: usize) -> u32 {
        self.n_kt[t * self.k + k]
    }

    /// The K counts of sequence `s` across factors, contiguous.
    #[inline]
    pub(crate) fn seq_factors(&self, s: usize) -> &[u32] {
        &self.n_ks[s * self.k..(s + 1) * self.k]
    }

    #[inline]
    pub(crate) fn obj_factors(&self, o: usize) -> &[u32] {
        &self.n_ko[o * self.k..(o + 1) * self.k]
    }

    #[inline]
    pub(crate) fn bin_factors(&self, t: usize) -> &[u32] {
        &self.n_kt[t * self.k..(t + 1) * self.k]
    }

    #[inline]
    pub(crate) fn traj_factors(&self, m: usize) -> &[u32] {
        &self.n_mk[m * self.k..(m + 1) * self.k]
    }

    #[inline]
    pub(crate) fn factor_totals_slice(&self) -> &[u32] {
        &self.factor_totals
    }

    /// Units currently assigned to factor k.
    #[inline]
    pub fn factor_total(&self, k: usize) -> u32 {
        self.factor_totals[k]
    }

    pub fn units_per_traj(&self, m: usize) -> u32 {
        self.units_per_traj[m]
    }

    pub fn assignment(&self, m: usize, i: usize) -> u32 {
        self.z[m][i]
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn grand_total(&self) -> u64 {
        self.factor_totals.iter().map(|&n| n as u64).sum()
    }

    /// Count unit `i` of trajectory `m` under factor `k` and record the
    /// assignment.
    #[inline]
    pub fn add(&mut self, m: usize, i: usize, unit: Unit, k: u32) {
        let kk = k as usize;
        self.z[m][i] = k;
        self.n_mk[m * self.k + kk] += 1;
        self.n_ks[unit.seq as usize * self.k + kk] += 1;
        self.n_ko[unit.obj as usize * self.k + kk] += 1;
        self.n_kt[unit.bin as usize * self.k + kk] += 1;
        self.factor_totals[kk] += 1;
    }

    /// Remove unit `i` of trajectory `m` from its current factor's counts,
    /// returning that factor. The tables are then in the "-i" state required
    /// by the Gibbs conditional.
    #[inline]
    pub fn remove(&mut self, m: usize, i: usize, unit: Unit) -> u32 {
        let k = self.z[m][i];
        let kk = k as usize;
        self.n_mk[m * self.k + kk] -= 1;
        self.n_ks[unit.seq as usize * self.k + kk] -= 1;
        self.n_ko[unit.obj as usize * self.k + kk] -= 1;
        self.n_kt[unit.bin as usize * self.k + kk] -= 1;
        self.factor_totals[kk] -= 1;
        k
    }

    /// Verify every structural invariant by recounting from the assignments:
    /// per-trajectory row sums equal unit counts, the three factor-indexed
    /// tables agree with the recount and with each other, and all grand
    /// totals are equal.
    pub fn check_invariants(&self, corpus: &Corpus) -> std::result::Result<(), String> {
        if corpus.num_trajectories() != self.num_trajectories() {
            return Err("trajectory count mismatch".into());
        }
        let mut n_mk = vec![0u32; self.n_mk.len()];
        let mut n_ks = vec![0u32; self.n_ks.len()];
        let mut n_ko = vec![0u32; self.n_ko.len()];
        let mut n_kt = vec![0u32; self.n_kt.len()];
        let mut totals = vec![0u32; self.k];
        for (m, traj) in corpus.trajectories.iter().enumerate() {
            if traj.len() != self.z[m].len() {
                return Err(format!("trajectory {m}: assignment length mismatch"));
            }
            for (i, u) in traj.units.iter().enumerate() {
                let k = self.z[m][i] as usize;
                if k >= self.k {
                    return Err(format!("trajectory {m} unit {i}: factor {k} out of range"));
                }
                n_mk[m * self.k + k] += 1;
                n_ks[u.seq as usize * self.k + k] += 1;
                n_ko[u.obj as usize * self.k + k] += 1;
                n_kt[u.bin as usize * self.k + k] += 1;
                totals[k] += 1;
            }
        }
        if n_mk != self.n_mk {
            return Err("n_mk does not match assignments".into());
        }
        if n_ks != self.n_ks {
            return Err("n_ks does not match assignments".into());
        }
        if n_ko != self.n_ko {
            return Err("n_ko does not match assignments".into());
        }
        if n_kt != self.n_kt {
            return Err("n_kt does not match assignments".into());
        }
        if totals != self.factor_totals {
            return Err("factor totals do not match assignments".into());
        }
        for m in 0..self.num_trajectories() {
            let row: u32 = (0..self.k).map(|k| self.n_mk(m, k)).sum();
            if row != self.units_per_traj[m] {
                return Err(format!(
                    "trajectory {m}: row sum {row} != unit count {}",
                    self.units_per_traj[m]
                ));
            }
        }
        for k in 0..self.k {
            let s: u32 = (0..self.num_seqs).map(|s| self.n_ks(k, s)).sum();
            let o: u32 = (0..self.num_objs).map(|o| self.n_ko(k, o)).sum();
            let t: u32 = (0..self.num_bins).map(|t| self.n_kt(k, t)).sum();
            if s != o || o != t || t != self.factor_totals[k] {
                return Err(format!("factor {k}: row sums disagree ({s}, {o}, {t})"));
            }
        }
        let grand: u64 = self.units_per_traj.iter().map(|&n| n as u64).sum();
        if grand != self.grand_total() {
            return Err("grand totals disagree".into());
        }
        Ok(())
    }
}

/// Posterior-mean estimates of the four distributions given the counts
/// (Dirichlet-multinomial conjugacy).
pub fn estimate_params(counts: &CountTables, cfg: &ModelConfig) -> ModelParams {
    let k = cfg.k;
    let m = counts.num_trajectories();
    let (s, o, b) = (counts.num_seqs, counts.num_objs, counts.num_bins);

    let mut theta = Mat::zeros(m, k);
    let alpha_sum = cfg.alpha_sum();
    for mi in 0..m {
        let denom = counts.units_per_traj[mi] as f64 + alpha_sum;
        let row = theta.row_mut(mi);
        for ki in 0..k {
            row[ki] = (counts.n_mk(mi, ki) as f64 + cfg.alpha[ki]) / denom;
        }
    }

    let fill = |table: &dyn Fn(usize, usize) -> u32, dim: usize, prior: f64| -> Mat {
        let mut mat = Mat::zeros(k, dim);
        for ki in 0..k {
            let denom = counts.factor_totals[ki] as f64 + prior * dim as f64;
            let row = mat.row_mut(ki);
            for d in 0..dim {
                row[d] = (table(ki, d) as f64 + prior) / denom;
            }
        }
        mat
    };

    ModelParams {
        theta,
        phi: fill(&|ki, d| counts.n_ks(ki, d), s, cfg.beta),
        psi: fill(&|ki, d| counts.n_ko(ki, d), o, cfg.eta),
        phi_time: fill(&|ki, d| counts.n_kt(ki, d), b, cfg.gamma),
    }
}

/// Sum over factors of the log Dirichlet-normalizer ratios for one
/// dimension-major table under a symmetric prior. Zero-count terms cancel
/// against the prior normalizer exactly and are skipped.
fn log_delta_ratios(table: &[u32], dim: usize, k: usize, totals: &[u32], prior: f64) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let log_gamma_prior = lgamma(prior);
    let mut acc = vec![0.0; k];
    for row in table.chunks_exact(k).take(dim) {
        for (a, &n) in acc.iter_mut().zip(row) {
            if n > 0 {
                *a += lgamma(n as f64 + prior) - log_gamma_prior;
            }
        }
    }
    let prior_sum = dim as f64 * prior;
    let log_gamma_prior_sum = lgamma(prior_sum);
    acc.iter()
        .zip(totals)
        .map(|(a, &n_k)| a + log_gamma_prior_sum - lgamma(n_k as f64 + prior_sum))
        .sum()
}

/// The collapsed joint log-probability of the assignments and observations:
/// one Dirichlet-normalizer ratio per factor for each active component, plus
/// one per trajectory for the factor mixture. An empty corpus scores 0.
pub fn log_joint(counts: &CountTables, cfg: &ModelConfig) -> f64 {
    let k = cfg.k;
    let totals = &counts.factor_totals;
    let mut total = log_delta_ratios(&counts.n_ks, counts.num_seqs, k, totals, cfg.beta);
    if cfg.components.object {
        total += log_delta_ratios(&counts.n_ko, counts.num_objs, k, totals, cfg.eta);
    }
    if cfg.components.time {
        total += log_delta_ratios(&counts.n_kt, counts.num_bins, k, totals, cfg.gamma);
    }

    let alpha_sum = cfg.alpha_sum();
    let log_delta_alpha: f64 =
        cfg.alpha.iter().map(|&a| lgamma(a)).sum::<f64>() - lgamma(alpha_sum);
    for m in 0..counts.num_trajectories() {
        let mut acc = 0.0;
        for ki in 0..k {
            let n = counts.n_mk(m, ki);
            if n > 0 {
                acc += lgamma(n as f64 + cfg.alpha[ki]);
            } else {
                acc += lgamma(cfg.alpha[ki]);
            }
        }
        acc -= lgamma(counts.units_per_traj[m] as f64 + alpha_sum);
        total += acc - log_delta_alpha;
    }
    total
}

/// Populate count tables for a corpus from given per-unit assignments.
pub fn counts_from_assignments(
    corpus: &Corpus,
    k: usize,
    assignments: &[Vec<u32>],
) -> CountTables {
    assert_eq!(assignments.len(), corpus.num_trajectories());
    let mut counts = CountTables::new(corpus, k);
    for (m, traj) in corpus.trajectories.iter().enumerate() {
        assert_eq!(assignments[m].len(), traj.len());
        for (i, &unit) in traj.units.iter().enumerate() {
            counts.add(m, i, unit, assignments[m][i]);
        }
    }
    counts
}

/// Build a corpus directly from unit streams; used by the simulator and by
/// tests that construct corpora by hand.
pub fn corpus_from_units(
    vocab: crate::corpus::Vocabularies,
    scheme: crate::corpus::TimeBinScheme,
    units: Vec<(u32, Vec<Unit>)>,
) -> Corpus {
    let trajectories = units
        .into_iter()
        .enumerate()
        .map(|(index, (object, units))| TrajectoryUnits {
            index: index as u32,
            object,
            units,
        })
        .collect();
    Corpus {
        vocab,
        scheme,
        tz_offset_secs: 0,
        trajectories,
    }
}
