//! Online semi-supervised multi-label classification over label-tagged
//! micro-clusters.
//!
//! A small labeled warmup is partitioned per label into micro-clusters
//! by a seeded collapsed-Gibbs Dirichlet-multinomial partitioner; from
//! then on every document is classified by its k nearest clusters
//! (probability-scored), with the predicted label count adapted to the
//! neighborhood's score distribution and ties broken by first-order
//! label co-occurrence. Updates are prequential: wrongly predicted
//! labels penalize the shared terms of their nearest cluster, then the
//! document enters one cluster per (true or predicted) label. Clusters
//! decay, merge within their label, shed stale terms, and each label
//! keeps a minimum cluster count.

use std::collections::BTreeMap;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{ClusterFeature, ClusterId, CoocMode, LabelId, ModelState, ParamBlock, TermId};
use crate::corpus::{Document, LabelSet, Vocabulary};
use crate::osdm::{semantic_sum, MaintEvent};
use crate::osgm;

const GIBBS_SWEEPS: usize = 30;
const GIBBS_PRIOR: f64 = 0.1;
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OsmtcError {
    #[error("warmup has no labeled documents")]
    EmptyWarmup,
    #[error("label {0} has fewer than {1} warmup documents")]
    LabelTooSparse(String, usize),
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot encoding: {0}")]
    Encoding(#[from] serde_json::Error),
    #[error("snapshot version {0} is not supported")]
    Version(u32),
}

/// First-order label dependency: `lc[i][j]` is the conditional
/// co-occurrence weight of label j given label i over the warmup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelCooc {
    labels: Vec<LabelId>,
    index: BTreeMap<LabelId, usize>,
    weights: Vec<Vec<f64>>,
}

impl LabelCooc {
    fn from_warmup(labels: &[LabelId], warmup: &[Document]) -> Self {
        let index: BTreeMap<LabelId, usize> =
            labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let n = labels.len();
        let mut single = vec![0u64; n];
        let mut joint = vec![vec![0u64; n]; n];
        for doc in warmup {
            let present: Vec<usize> =
                doc.labels.iter().filter_map(|l| index.get(l).copied()).collect();
            for &i in &present {
                single[i] += 1;
                for &j in &present {
                    joint[i][j] += 1;
                }
            }
        }
        let weights = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if single[i] == 0 {
                            0.0
                        } else {
                            joint[i][j] as f64 / single[i] as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Self { labels: labels.to_vec(), index, weights }
    }

    pub fn weight(&self, given: LabelId, other: LabelId) -> f64 {
        match (self.index.get(&given), self.index.get(&other)) {
            (Some(&i), Some(&j)) => self.weights[i][j],
            _ => 0.0,
        }
    }
}

/// Per-label evidence inside the prediction neighborhood.
#[derive(Debug, Clone, Serialize)]
pub struct LabelEvidence {
    pub label: LabelId,
    pub clusters: usize,
    /// Sum of normalized neighborhood probabilities.
    pub score_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub doc_id: String,
    /// Predicted labels, best first; never empty.
    pub labels: Vec<LabelId>,
    pub evidence: Vec<LabelEvidence>,
    pub l_count: usize,
    /// The k nearest clusters with their log-scores, best first.
    pub neighborhood: Vec<(ClusterId, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OsmtcModel {
    pub state: ModelState,
    pub labels: Vec<LabelId>,
    pub label_cooc: LabelCooc,
    /// Active clusters per label.
    pub registry: BTreeMap<LabelId, std::collections::BTreeSet<ClusterId>>,
}

impl OsmtcModel {
    /// Builds the model from a labeled warmup: each label's share of the
    /// warmup is split into `min_clusters_per_label` topic partitions,
    /// every partition becomes a labeled cluster, and the label
    /// co-occurrence matrix is computed over the whole warmup.
    pub fn init(warmup: &[Document], params: ParamBlock, seed: u64) -> Result<Self, OsmtcError> {
        let mut labels: Vec<LabelId> = warmup
            .iter()
            .flat_map(|d| d.labels.iter().copied())
            .collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.is_empty() {
            return Err(OsmtcError::EmptyWarmup);
        }

        let z_min = params.min_clusters_per_label.max(1);
        let per_label = (warmup.len() / labels.len()).max(1);
        let mut state = ModelState::new(params, CoocMode::Full, true);
        let mut registry: BTreeMap<LabelId, std::collections::BTreeSet<ClusterId>> =
            BTreeMap::new();
        let mut rng = StdRng::seed_from_u64(seed);

        for &label in &labels {
            let share: Vec<&Document> = warmup
                .iter()
                .filter(|d| d.labels.contains(&label))
                .take(per_label)
                .collect();
            if share.len() < z_min {
                return Err(OsmtcError::LabelTooSparse(format!("{}", label.0), z_min));
            }
            let assignment = gibbs_partition(&share, z_min, &mut rng);
            for part in 0..z_min {
                let members: Vec<&&Document> =
                    share.iter().zip(&assignment).filter(|(_, &a)| a == part).map(|(d, _)| d).collect();
                debug_assert!(!members.is_empty());
                let (id, _) = state.create_cluster(members[0], Some(label));
                for doc in members.iter().skip(1) {
                    state.add_document(id, doc);
                }
                registry.entry(label).or_default().insert(id);
            }
        }

        let label_cooc = LabelCooc::from_warmup(&labels, warmup);
        Ok(Self { state, labels, label_cooc, registry })
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    /// One prequential step: maintenance, prediction, then the model
    /// update (which sees the truth only when `truth` is given).
    pub fn step(
        &mut self,
        doc: &Document,
        truth: Option<&std::collections::BTreeSet<LabelId>>,
    ) -> (Prediction, Vec<MaintEvent>) {
        self.state.tick += 1;
        let events = self.maintain();
        let prediction = self.predict(doc);
        self.update(doc, &prediction, truth);
        (prediction, events)
    }

    /// Scores every vocabulary-intersecting cluster and predicts via the
    /// k nearest: the candidate labels are those backed by the most
    /// neighborhood clusters, ties re-ranked by label co-occurrence, and
    /// the prediction size follows the count of above-mean neighbors.
    pub fn predict(&self, doc: &Document) -> Prediction {
        let mut scored: Vec<(ClusterId, f64)> = Vec::new();
        if !doc.is_empty() {
            for (&id, z) in &self.state.clusters {
                if z.shares_vocab_with(doc) {
                    scored.push((id, score_existing(doc, z, &self.state)));
                }
            }
        }
        if scored.is_empty() {
            return self.fallback_prediction(doc);
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(self.state.params.neighbor_count);

        let log_scores: Vec<f64> = scored.iter().map(|&(_, s)| s).collect();
        let l_count = count_above_mean(&log_scores);

        let top = log_scores[0];
        let mut evidence: BTreeMap<LabelId, LabelEvidence> = BTreeMap::new();
        for &(id, s) in &scored {
            let label = self.state.clusters[&id].label.expect("clusters are labeled");
            let e = evidence.entry(label).or_insert(LabelEvidence {
                label,
                clusters: 0,
                score_sum: 0.0,
            });
            e.clusters += 1;
            e.score_sum += (s - top).exp();
        }

        let max_clusters = evidence.values().map(|e| e.clusters).max().unwrap();
        let mut candidates: Vec<LabelId> = evidence
            .values()
            .filter(|e| e.clusters == max_clusters)
            .map(|e| e.label)
            .collect();

        if candidates.len() > 1 {
            // re-rank tied labels by co-occurrence with the neighborhood
            let mut ranked: Vec<(LabelId, f64, f64)> = candidates
                .iter()
                .map(|&l| {
                    let lc: f64 = scored
                        .iter()
                        .map(|&(id, _)| {
                            let zl = self.state.clusters[&id].label.unwrap();
                            self.label_cooc.weight(l, zl)
                        })
                        .sum();
                    (l, lc, evidence[&l].score_sum)
                })
                .collect();
            ranked.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then(b.2.partial_cmp(&a.2).unwrap())
                    .then(a.0.cmp(&b.0))
            });
            let keep = l_count.clamp(1, ranked.len());
            candidates = ranked.into_iter().take(keep).map(|(l, _, _)| l).collect();
        }

        Prediction {
            doc_id: doc.id.clone(),
            labels: candidates,
            evidence: evidence.into_values().collect(),
            l_count,
            neighborhood: scored,
        }
    }

    /// No cluster intersects the document: predict the globally most
    /// frequent label (by active document mass).
    fn fallback_prediction(&self, doc: &Document) -> Prediction {
        let mut best: Option<(LabelId, u64)> = None;
        for (&label, ids) in &self.registry {
            let mass: u64 = ids.iter().map(|id| self.state.clusters[id].doc_count).sum();
            if best.map_or(true, |(_, m)| mass > m) {
                best = Some((label, mass));
            }
        }
        let label = best.map(|(l, _)| l).unwrap_or(self.labels[0]);
        Prediction {
            doc_id: doc.id.clone(),
            labels: vec![label],
            evidence: Vec::new(),
            l_count: 1,
            neighborhood: Vec::new(),
        }
    }

    /// Prequential update. With ground truth: wrongly predicted labels
    /// have the shared terms of their nearest cluster scaled down by the
    /// penalty, and the document then enters the nearest cluster of each
    /// true label (or a fresh labeled cluster when the new-cluster score
    /// wins). Unlabeled documents update under their predicted labels.
    pub fn update(
        &mut self,
        doc: &Document,
        prediction: &Prediction,
        truth: Option<&std::collections::BTreeSet<LabelId>>,
    ) {
        let mut targets: Vec<LabelId> = prediction.labels.clone();
        if let Some(truth) = truth {
            let known: Vec<LabelId> = truth
                .iter()
                .copied()
                .filter(|l| self.registry.contains_key(l))
                .collect();
            if !known.is_empty() {
                let penalty = self.state.params.penalty_percent;
                for &wrong in prediction.labels.iter().filter(|l| !known.contains(l)) {
                    if let Some(&(id, _)) = prediction
                        .neighborhood
                        .iter()
                        .find(|(id, _)| self.state.clusters[id].label == Some(wrong))
                    {
                        self.apply_penalty(id, doc, penalty);
                    }
                }
                targets = known;
            }
        }

        if doc.is_empty() {
            // degenerate input: join each target label's largest cluster
            for &label in &targets {
                let best = self.registry[&label]
                    .iter()
                    .max_by_key(|id| (self.state.clusters[id].doc_count, std::cmp::Reverse(id.0)))
                    .copied();
                if let Some(id) = best {
                    self.state.add_document(id, doc);
                }
            }
            return;
        }

        let max_prob = prediction.neighborhood.first().map(|&(_, s)| s);
        let new_score = osgm::score_new(doc, &self.state);
        for &label in &targets {
            let nearest = prediction
                .neighborhood
                .iter()
                .find(|(id, _)| self.state.clusters[id].label == Some(label))
                .map(|&(id, _)| id);
            match (nearest, max_prob) {
                (Some(id), Some(best)) if best > new_score => {
                    self.state.add_document(id, doc);
                }
                _ => {
                    let (id, _) = self.state.create_cluster(doc, Some(label));
                    self.registry.entry(label).or_default().insert(id);
                }
            }
        }
    }

    /// Scales the shared terms of the cluster down by the penalty
    /// percentage; terms that reach zero are dropped outright.
    fn apply_penalty(&mut self, cluster: ClusterId, doc: &Document, percent: f64) {
        let factor = (1.0 - percent / 100.0).clamp(0.0, 1.0);
        let mut emptied: Vec<TermId> = Vec::new();
        {
            let z = self.state.clusters.get_mut(&cluster).expect("cluster exists");
            for &(w, _) in &doc.term_counts {
                let Some(count) = z.term_counts.get_mut(&w) else { continue };
                let old = *count;
                let new = old * factor;
                if new <= 1e-12 {
                    z.term_counts.remove(&w);
                    z.token_total -= old;
                    emptied.push(w);
                } else {
                    *count = new;
                    z.token_total -= old - new;
                }
            }
            for &w in &emptied {
                z.cooc_remove_term(w);
                if let Some(arrivals) = z.arrivals.as_mut() {
                    arrivals.remove(&w);
                }
            }
            #[cfg(debug_assertions)]
            z.assert_conservation();
        }
        for w in emptied {
            self.state.drop_vocab_membership_pub(w);
        }
        self.state.validate();
    }

    /// Decay sweep with same-label merging under the per-label floor,
    /// then term-subspace pruning on every cluster.
    pub fn maintain(&mut self) -> Vec<MaintEvent> {
        let mut events = Vec::new();
        self.state.decay_all();
        let threshold = self.state.params.decay_threshold;
        let z_min = self.state.params.min_clusters_per_label;
        let candidates: Vec<(ClusterId, LabelId)> = self
            .state
            .clusters
            .values()
            .filter(|z| z.weight < threshold)
            .map(|z| (z.id, z.label.expect("clusters are labeled")))
            .collect();
        let candidate_ids: Vec<ClusterId> = candidates.iter().map(|&(id, _)| id).collect();

        for (old_id, label) in candidates {
            // the floor may have been reached by an earlier merge/delete
            if self.registry[&label].len() <= z_min {
                continue;
            }
            let old = &self.state.clusters[&old_id];
            let mut best: Option<(ClusterId, f64)> = None;
            for &cand_id in &self.registry[&label] {
                if cand_id == old_id || candidate_ids.contains(&cand_id) {
                    continue;
                }
                let cand = &self.state.clusters[&cand_id];
                if !cluster_shares_vocab(old, cand) {
                    continue;
                }
                let s = score_cluster_pair(old, cand, &self.state);
                if best.map_or(true, |(_, b)| s > b) {
                    best = Some((cand_id, s));
                }
            }
            let vbar = self.state.mean_cluster_vocab(
                |z| !candidate_ids.contains(&z.id),
                self.state.clusters[&old_id].vocab_size(),
            );
            let new_score = score_cluster_new(&self.state.clusters[&old_id], &self.state, vbar);
            let tick = self.state.tick;
            match best {
                Some((target, s)) if s >= new_score => {
                    self.state.merge_clusters(old_id, target);
                    self.registry.get_mut(&label).unwrap().remove(&old_id);
                    events.push(MaintEvent::MergedInto {
                        tick,
                        old_cluster: old_id.0,
                        target_cluster: target.0,
                    });
                }
                _ => {
                    self.state.delete_cluster(old_id);
                    self.registry.get_mut(&label).unwrap().remove(&old_id);
                    events.push(MaintEvent::Deleted { tick, old_cluster: old_id.0 });
                }
            }
        }

        let ids: Vec<ClusterId> = self.state.clusters.keys().copied().collect();
        for id in ids {
            self.state.prune_cluster_terms(id);
        }
        events
    }

    /// Serializes the model with its vocabularies for warm restarts.
    pub fn save_snapshot(
        &self,
        path: &Path,
        vocab: &Vocabulary,
        labels: &LabelSet,
    ) -> Result<(), OsmtcError> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            model: serde_json::to_value(self)?,
            vocab: vocab.clone(),
            label_names: labels.clone(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &snap)?;
        Ok(())
    }

    pub fn load_snapshot(path: &Path) -> Result<(Self, Vocabulary, LabelSet), OsmtcError> {
        let file = std::fs::File::open(path)?;
        let snap: Snapshot = serde_json::from_reader(std::io::BufReader::new(file))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(OsmtcError::Version(snap.version));
        }
        let model: OsmtcModel = serde_json::from_value(snap.model)?;
        let mut vocab = snap.vocab;
        let mut labels = snap.label_names;
        vocab.rebuild_index();
        labels.rebuild_index();
        Ok((model, vocab, labels))
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    model: serde_json::Value,
    vocab: Vocabulary,
    label_names: LabelSet,
}

/// Count of scores strictly above the neighborhood mean, computed on the
/// (shift-normalized) probability scale.
pub(crate) fn count_above_mean(log_scores: &[f64]) -> usize {
    if log_scores.is_empty() {
        return 0;
    }
    let top = log_scores[0];
    let probs: Vec<f64> = log_scores.iter().map(|&s| (s - top).exp()).collect();
    let mean = probs.iter().sum::<f64>() / probs.len() as f64;
    probs.iter().filter(|&&p| p > mean).count()
}

/// Log-score of a document against a labeled cluster.
///
/// The per-term product runs over the shared vocabulary only and its log
/// is scaled by the non-overlap ratio `|V_d \ V_z| / |V_d|` (floored at
/// `1/|V_d|` so fully covered documents keep their evidence); the
/// denominator normalizes by the union vocabulary, and the co-occurrence
/// factor sums the shared pairs. Offsets run from 1 (`+ j`, `+ i`).
pub fn score_existing(doc: &Document, z: &ClusterFeature, state: &ModelState) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let union_vocab = z.union_vocab(doc) as f64;
    let distinct = doc.distinct_terms();
    let outside = doc
        .term_counts
        .iter()
        .filter(|&&(t, _)| !z.contains(t))
        .count();
    let ratio = (outside.max(1)) as f64 / distinct.max(1) as f64;

    let mut log = (z.doc_count as f64).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    let mut shared_log = 0.0;
    for &(w, count) in &doc.term_counts {
        if !z.contains(w) {
            continue;
        }
        let base = z.count_of(w) * state.icf(w);
        for j in 1..=count {
            shared_log += (base + p.beta + j as f64).ln();
        }
    }
    log += ratio * shared_log;
    for i in 1..=doc.token_total() {
        log -= (z.token_total + p.beta * union_vocab + i as f64).ln();
    }
    log + semantic_sum(doc, z, state.cooc_mode).ln_1p()
}

fn cluster_shares_vocab(a: &ClusterFeature, b: &ClusterFeature) -> bool {
    let (small, large) = if a.vocab_size() <= b.vocab_size() { (a, b) } else { (b, a) };
    small.term_counts.keys().any(|t| large.contains(*t))
}

/// The decayed cluster plays the document role in the merge comparison.
fn score_cluster_pair(old: &ClusterFeature, target: &ClusterFeature, state: &ModelState) -> f64 {
    let p = &state.params;
    let d_total = state.active_docs as f64;
    let denom_prior = (d_total - 1.0 + p.alpha * d_total).max(f64::MIN_POSITIVE);
    let union: usize = target.vocab_size()
        + old.term_counts.keys().filter(|t| !target.contains(**t)).count();
    let distinct = old.vocab_size();
    let outside = old.term_counts.keys().filter(|t| !target.contains(**t)).count();
    let ratio = (outside.max(1)) as f64 / distinct.max(1) as f64;

    let mut log = (target.doc_count as f64).ln() - denom_prior.ln();
    let mut shared_log = 0.0;
    let mut pseudo_len = 0u64;
    for (&w, &count) in &old.term_counts {
        let c = count.round() as u32;
        if c == 0 {
            continue;
        }
        pseudo_len += c as u64;
        if !target.contains(w) {
            continue;
        }
        let base = target.count_of(w) * state.icf(w);
        for j in 1..=c {
            shared_log += (base + p.beta + j as f64).ln();
        }
    }
    log += ratio * shared_log;
    for i in 1..=pseudo_len {
        log -= (target.token_total + p.beta * union as f64 + i as f64).ln();
    }
    let shared: f64 = old
        .cooc
        .iter()
        .filter_map(|(&(i, j), _)| target.cooc.value(i, j))
        .sum();
    log + shared.ln_1p()
}

fn score_cluster_new(old: &ClusterFeature, state: &ModelState, vbar: f64) -> f64 {
    let p = &state.params;
    let d_total = state.active_docs as f64;
    let denom_prior = (d_total - 1.0 + p.alpha * d_total).max(f64::MIN_POSITIVE);
    let mut log = (p.alpha * d_total).ln() - denom_prior.ln();
    let mut pseudo_len = 0u64;
    for &count in old.term_counts.values() {
        let c = count.round() as u32;
        pseudo_len += c as u64;
        for j in 1..=c {
            log += (p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=pseudo_len {
        log -= (vbar * p.beta + (i - 1) as f64).ln();
    }
    log
}

/// Collapsed-Gibbs Dirichlet-multinomial partitioner with fixed k,
/// symmetric priors, and a fixed sweep count; empty partitions are
/// backfilled from the largest so every partition yields a cluster.
fn gibbs_partition(docs: &[&Document], k: usize, rng: &mut StdRng) -> Vec<usize> {
    let n = docs.len();
    if k <= 1 {
        return vec![0; n];
    }
    let vocab: std::collections::BTreeSet<TermId> = docs
        .iter()
        .flat_map(|d| d.term_counts.iter().map(|&(t, _)| t))
        .collect();
    let v = vocab.len().max(1) as f64;

    let mut assign: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut m = vec![0u64; k];
    let mut tokens = vec![0f64; k];
    let mut counts: Vec<BTreeMap<TermId, f64>> = vec![BTreeMap::new(); k];
    for (i, doc) in docs.iter().enumerate() {
        let z = assign[i];
        m[z] += 1;
        tokens[z] += doc.token_total() as f64;
        for &(t, c) in &doc.term_counts {
            *counts[z].entry(t).or_insert(0.0) += c as f64;
        }
    }

    for _ in 0..GIBBS_SWEEPS {
        for (i, doc) in docs.iter().enumerate() {
            let z_old = assign[i];
            m[z_old] -= 1;
            tokens[z_old] -= doc.token_total() as f64;
            for &(t, c) in &doc.term_counts {
                let slot = counts[z_old].get_mut(&t).unwrap();
                *slot -= c as f64;
                if *slot <= 0.0 {
                    counts[z_old].remove(&t);
                }
            }

            let mut logs = Vec::with_capacity(k);
            for z in 0..k {
                let mut lp = (m[z] as f64 + GIBBS_PRIOR).ln();
                for &(t, c) in &doc.term_counts {
                    let base = counts[z].get(&t).copied().unwrap_or(0.0);
                    for j in 0..c {
                        lp += (base + GIBBS_PRIOR + j as f64).ln();
                    }
                }
                for i2 in 0..doc.token_total() {
                    lp -= (tokens[z] + GIBBS_PRIOR * v + i2 as f64).ln();
                }
                logs.push(lp);
            }
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut x = rng.random::<f64>() * total;
            let mut z_new = k - 1;
            for (z, w) in weights.iter().enumerate() {
                if x < *w {
                    z_new = z;
                    break;
                }
                x -= w;
            }

            assign[i] = z_new;
            m[z_new] += 1;
            tokens[z_new] += doc.token_total() as f64;
            for &(t, c) in &doc.term_counts {
                *counts[z_new].entry(t).or_insert(0.0) += c as f64;
            }
        }
    }

    // every partition must become a cluster
    for empty in 0..k {
        if m[empty] > 0 {
            continue;
        }
        let (donor, _) = m.iter().enumerate().max_by_key(|&(_, &c)| c).unwrap();
        let moved = assign.iter().position(|&z| z == donor).unwrap();
        assign[moved] = empty;
        m[donor] -= 1;
        m[empty] += 1;
    }
    assign
}
