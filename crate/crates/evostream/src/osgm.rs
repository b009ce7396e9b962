//! Online semantic-enhanced graphical model: the scoring of [`crate::osdm`]
//! refined with union-vocabulary normalization, plus evolving
//! term-subspace tracking (triangular-time pruning every tick) and
//! merging of decayed clusters into active ones. The `ES` variant drops
//! the inverse-cluster-frequency smoothing.

use std::collections::BTreeMap;

use crate::cf::{ClusterFeature, ClusterId, CoocMode, ModelState, ParamBlock};
use crate::corpus::Document;
use crate::osdm::{semantic_sum, MaintEvent, ProcessSummary};

/// Whether per-term evidence is smoothed by inverse cluster frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcfVariant {
    WithIcf,
    /// The `ES` variant: the ICF factor is replaced by 1.
    Es,
}

impl IcfVariant {
    fn weight(&self, state: &ModelState, term: crate::cf::TermId) -> f64 {
        match self {
            IcfVariant::WithIcf => state.icf(term),
            IcfVariant::Es => 1.0,
        }
    }
}

#[derive(Debug)]
pub struct OsgmModel {
    pub state: ModelState,
    pub variant: IcfVariant,
    pub assignments: BTreeMap<String, ClusterId>,
    /// Absorbed cluster -> absorbing cluster, so logged assignments can
    /// be resolved after merges.
    pub merge_redirects: BTreeMap<ClusterId, ClusterId>,
}

impl OsgmModel {
    pub fn new(params: ParamBlock, variant: IcfVariant) -> Self {
        Self {
            state: ModelState::new(params, CoocMode::Full, true),
            variant,
            assignments: BTreeMap::new(),
            merge_redirects: BTreeMap::new(),
        }
    }

    /// Resolves a (possibly merged-away) cluster id to its live home.
    pub fn canonical(&self, mut id: ClusterId) -> ClusterId {
        while let Some(&next) = self.merge_redirects.get(&id) {
            id = next;
        }
        id
    }

    pub fn with_defaults() -> Self {
        Self::new(ParamBlock::osgm_defaults(), IcfVariant::WithIcf)
    }

    pub fn es_with_defaults() -> Self {
        Self::new(ParamBlock::osgm_es_defaults(), IcfVariant::Es)
    }

    /// One document: advance the clock, refresh active clusters
    /// (decay, merge), prune every cluster's term subspace, then score
    /// and assign.
    pub fn process(&mut self, doc: &Document) -> ProcessSummary {
        self.state.tick += 1;
        let events = update_active(&mut self.state, self.variant);
        for event in &events {
            if let MaintEvent::MergedInto { old_cluster, target_cluster, .. } = event {
                self.merge_redirects
                    .insert(ClusterId(*old_cluster), ClusterId(*target_cluster));
            }
        }
        let ids: Vec<ClusterId> = self.state.clusters.keys().copied().collect();
        for id in ids {
            self.state.prune_cluster_terms(id);
        }

        let (cluster, created, margin) = assign(doc, &mut self.state, self.variant);
        self.assignments.insert(doc.id.clone(), cluster);
        ProcessSummary { cluster, created, margin, events }
    }
}

/// Scores eligible clusters (vocabulary overlap required), compares the
/// best against the new-cluster score, and commits the winner. Shared
/// with the episodic model's sampling step.
pub(crate) fn assign(
    doc: &Document,
    state: &mut ModelState,
    variant: IcfVariant,
) -> (ClusterId, bool, Option<f64>) {
    let mut best: Option<(ClusterId, f64)> = None;
    if doc.is_empty() {
        // degenerate input: pick by prior alone, never create
        for (&id, z) in &state.clusters {
            let d_total = (state.active_docs + 1) as f64;
            let s = (z.doc_count as f64).ln() - (d_total - 1.0 + state.params.alpha * d_total).ln();
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((id, s));
            }
        }
        if let Some((id, _)) = best {
            state.add_document(id, doc);
            return (id, false, None);
        }
        let (fresh, _) = state.create_cluster(doc, None);
        return (fresh, true, None);
    }

    for (&id, z) in &state.clusters {
        if !z.shares_vocab_with(doc) {
            continue; // treated as -inf
        }
        let s = score_existing(doc, z, state, variant);
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    let new_score = score_new(doc, state);
    match best {
        Some((_, s)) if s < new_score => {
            let (fresh, _) = state.create_cluster(doc, None);
            (fresh, true, Some(new_score - s))
        }
        Some((id, s)) => {
            state.add_document(id, doc);
            (id, false, Some(s - new_score))
        }
        None => {
            let (fresh, _) = state.create_cluster(doc, None);
            (fresh, true, None)
        }
    }
}

/// Log-score against an existing cluster; the denominator normalizes by
/// the union vocabulary of cluster and document rather than the global
/// vocabulary.
pub fn score_existing(
    doc: &Document,
    z: &ClusterFeature,
    state: &ModelState,
    variant: IcfVariant,
) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let union_vocab = z.union_vocab(doc) as f64;

    let mut log = (z.doc_count as f64).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    for &(w, count) in &doc.term_counts {
        let base = z.count_of(w) * variant.weight(state, w);
        for j in 1..=count {
            log += (base + p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=doc.token_total() {
        log -= (z.token_total + p.beta * union_vocab + (i - 1) as f64).ln();
    }
    log + semantic_sum(doc, z, state.cooc_mode).ln_1p()
}

/// New-cluster log-score; the denominator uses the mean vocabulary size
/// of the active clusters sharing a term with the document (the
/// document's own vocabulary size when none do).
pub fn score_new(doc: &Document, state: &ModelState) -> f64 {
    let vbar = state.mean_cluster_vocab(|z| z.shares_vocab_with(doc), doc.distinct_terms());
    score_new_with_vbar(doc, state, vbar)
}

pub(crate) fn score_new_with_vbar(doc: &Document, state: &ModelState, vbar: f64) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let mut log = (p.alpha * d_total).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    for &(_, count) in &doc.term_counts {
        for j in 1..=count {
            log += (p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=doc.token_total() {
        log -= (vbar * p.beta + (i - 1) as f64).ln();
    }
    log
}

/// Decay sweep with merging: clusters whose weight dropped below the
/// threshold are scored (as pseudo-documents) against every active
/// cluster sharing vocabulary; each is merged into its best match when
/// that beats its own new-cluster score, deleted otherwise.
pub fn update_active(state: &mut ModelState, variant: IcfVariant) -> Vec<MaintEvent> {
    state.decay_all();
    let threshold = state.params.decay_threshold;
    let old_ids: Vec<ClusterId> = state
        .clusters
        .values()
        .filter(|z| z.weight < threshold)
        .map(|z| z.id)
        .collect();
    if old_ids.is_empty() {
        return Vec::new();
    }

    let mut events = Vec::new();
    let tick = state.tick;
    for old_id in &old_ids {
        let old = &state.clusters[old_id];
        let mut best: Option<(ClusterId, f64)> = None;
        for (&cand_id, cand) in &state.clusters {
            if old_ids.contains(&cand_id) {
                continue;
            }
            if !shares_vocab(old, cand) {
                continue;
            }
            let s = score_cluster_pair(old, cand, state, variant);
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((cand_id, s));
            }
        }
        let vbar = state.mean_cluster_vocab(
            |z| !old_ids.contains(&z.id),
            state.clusters[old_id].vocab_size(),
        );
        let new_score = score_cluster_new(&state.clusters[old_id], state, vbar);

        match best {
            Some((target, s)) if s >= new_score => {
                state.merge_clusters(*old_id, target);
                events.push(MaintEvent::MergedInto {
                    tick,
                    old_cluster: old_id.0,
                    target_cluster: target.0,
                });
            }
            _ => {
                state.delete_cluster(*old_id);
                events.push(MaintEvent::Deleted { tick, old_cluster: old_id.0 });
            }
        }
    }
    events
}

fn shares_vocab(a: &ClusterFeature, b: &ClusterFeature) -> bool {
    // iterate the smaller vocabulary
    let (small, large) = if a.vocab_size() <= b.vocab_size() { (a, b) } else { (b, a) };
    small.term_counts.keys().any(|t| large.contains(*t))
}

/// The old cluster plays the document role: its term counts are the
/// document counts, its co-occurrence keys the document pairs.
fn score_cluster_pair(
    old: &ClusterFeature,
    target: &ClusterFeature,
    state: &ModelState,
    variant: IcfVariant,
) -> f64 {
    let p = &state.params;
    let d_total = state.active_docs as f64;
    let denom_prior = (d_total - 1.0 + p.alpha * d_total).max(f64::MIN_POSITIVE);

    let union: usize = target.vocab_size()
        + old
            .term_counts
            .keys()
            .filter(|t| !target.contains(**t))
            .count();

    let mut log = (target.doc_count as f64).ln() - denom_prior.ln();
    let mut pseudo_len = 0u64;
    for (&w, &count) in &old.term_counts {
        let c = count.round() as u32;
        if c == 0 {
            continue;
        }
        pseudo_len += c as u64;
        let base = target.count_of(w) * variant.weight(state, w);
        for j in 1..=c {
            log += (base + p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=pseudo_len {
        log -= (target.token_total + p.beta * union as f64 + (i - 1) as f64).ln();
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
