//! Online semantic-enhanced Dirichlet model: each arriving document
//! either joins the active cluster with the highest posterior score or
//! opens a new one, with the split governed by a Chinese-restaurant
//! prior. Cluster/document affinity combines per-term evidence weighted
//! by inverse cluster frequency with a term co-occurrence factor, and
//! idle clusters decay away.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cf::{doc_pairs, ClusterFeature, ClusterId, CoocMode, ModelState, ParamBlock};
use crate::corpus::Document;

/// Cluster lifecycle and maintenance events, shared by all models.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum MaintEvent {
    Deleted { tick: u64, old_cluster: u64 },
    MergedInto { tick: u64, old_cluster: u64, target_cluster: u64 },
    Inference {
        tick: u64,
        resampled: usize,
        moved: usize,
        clusters_before: usize,
        clusters_after: usize,
    },
}

/// What one processed document did to the model.
#[derive(Debug, Clone)]
pub struct ProcessSummary {
    pub cluster: ClusterId,
    pub created: bool,
    /// Winning log-score minus the best alternative; `None` when there
    /// was no alternative (cold start).
    pub margin: Option<f64>,
    pub events: Vec<MaintEvent>,
}

#[derive(Debug)]
pub struct OsdmModel {
    pub state: ModelState,
    /// Document id -> assigned cluster, for every processed document.
    pub assignments: BTreeMap<String, ClusterId>,
}

impl OsdmModel {
    pub fn new(params: ParamBlock) -> Self {
        Self {
            state: ModelState::new(params, CoocMode::Full, false),
            assignments: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(ParamBlock::osdm_defaults())
    }

    /// Processes one document: advance the clock, drop decayed clusters,
    /// score existing versus new, commit the winner.
    pub fn process(&mut self, doc: &Document) -> ProcessSummary {
        self.state.tick += 1;
        let events = sweep_decayed(&mut self.state);

        let mut best: Option<(ClusterId, f64)> = None;
        for (&id, z) in &self.state.clusters {
            let s = if doc.is_empty() {
                prior_only(z, &self.state)
            } else {
                score_existing(doc, z, &self.state)
            };
            // strict > keeps the lowest (oldest) id on ties
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((id, s));
            }
        }

        // Empty documents never open a cluster while one exists.
        let allow_new = !doc.is_empty() || best.is_none();
        let new_score = allow_new.then(|| score_new(doc, &self.state));

        let (cluster, created, margin) = match (best, new_score) {
            (Some((_, s)), Some(n)) if s < n => {
                let (fresh, _) = self.state.create_cluster(doc, None);
                (fresh, true, Some(n - s))
            }
            (Some((id, s)), n) => {
                self.state.add_document(id, doc);
                (id, false, n.map(|n| s - n))
            }
            (None, _) => {
                let (fresh, _) = self.state.create_cluster(doc, None);
                (fresh, true, None)
            }
        };

        self.assignments.insert(doc.id.clone(), cluster);
        ProcessSummary { cluster, created, margin, events }
    }
}

/// Commits this tick's decay and deletes clusters whose weight fell
/// below the threshold.
pub(crate) fn sweep_decayed(state: &mut ModelState) -> Vec<MaintEvent> {
    state.decay_all();
    let stale: Vec<ClusterId> = state
        .clusters
        .values()
        .filter(|z| z.weight < state.params.decay_threshold)
        .map(|z| z.id)
        .collect();
    let tick = state.tick;
    stale
        .into_iter()
        .map(|id| {
            state.delete_cluster(id);
            MaintEvent::Deleted { tick, old_cluster: id.0 }
        })
        .collect()
}

/// Log-score of the document choosing an existing cluster.
///
/// Combines the cluster-popularity prior `m_z / (D - 1 + alpha D)` (D
/// counting the incoming document), per-term evidence
/// `prod_w prod_j (n_z^w ICF_w + beta + j - 1)` over
/// `prod_i (n_z + V beta + i - 1)` with V the active vocabulary size,
/// and the shared co-occurrence weight `1 + sum cw`.
pub fn score_existing(doc: &Document, z: &ClusterFeature, state: &ModelState) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let vocab = state.scoring_vocab_size(doc) as f64;

    let mut log = (z.doc_count as f64).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    for &(w, count) in &doc.term_counts {
        let base = z.count_of(w) * state.icf(w);
        for j in 1..=count {
            log += (base + p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=doc.token_total() {
        log -= (z.token_total + vocab * p.beta + (i - 1) as f64).ln();
    }
    log + semantic_sum(doc, z, state.cooc_mode).ln_1p()
}

/// Log-score of the document opening a new cluster (the CRP split times
/// the empty-cluster term evidence).
pub fn score_new(doc: &Document, state: &ModelState) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let vocab = state.scoring_vocab_size(doc) as f64;

    let mut log = (p.alpha * d_total).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    for &(_, count) in &doc.term_counts {
        for j in 1..=count {
            log += (p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=doc.token_total() {
        log -= (vocab * p.beta + (i - 1) as f64).ln();
    }
    log
}

fn prior_only(z: &ClusterFeature, state: &ModelState) -> f64 {
    let d_total = (state.active_docs + 1) as f64;
    (z.doc_count as f64).ln() - (d_total - 1.0 + state.params.alpha * d_total).ln()
}

/// Sum of the cluster's co-occurrence values over the document's
/// directed pairs.
pub(crate) fn semantic_sum(doc: &Document, z: &ClusterFeature, mode: CoocMode) -> f64 {
    doc_pairs(doc, mode)
        .into_iter()
        .filter_map(|(i, j)| z.cooc.value(i, j))
        .sum()
}
