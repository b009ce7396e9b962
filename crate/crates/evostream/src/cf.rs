//! Evolving micro-cluster machinery shared by all models: cluster
//! feature sets, co-occurrence accumulation, decay weighting, inverse
//! cluster frequency, and triangular-time term pruning.
//!
//! A cluster feature is an additive summary of its documents. Adding and
//! removing a document are exact inverses on the counts and the
//! co-occurrence matrix; co-occurrence cells therefore accumulate exact
//! fractions rather than floats, so a remove restores the prior state
//! bit-for-bit and reports stay identical across runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelId(pub u32);

#[derive(Debug, Error)]
pub enum CfError {
    #[error("document {0} is not contained in the cluster")]
    DocumentNotInCluster(String),
}

/// How a document's co-occurrence pairs are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoocMode {
    /// Every distinct term pairs with every other.
    Full,
    /// Terms pair only within the given token distance, order-preserving.
    /// A window of 0 produces no pairs.
    Window(usize),
}

/// An exact sum of small fractions `num/den`, stored as reduced parts
/// grouped by denominator. Integer bookkeeping makes add/sub exact
/// inverses and evaluation order-stable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioSum {
    parts: Vec<(u32, u64)>, // (denominator, numerator sum), sorted by denominator
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl RatioSum {
    pub fn add_fraction(&mut self, num: u32, den: u32) {
        debug_assert!(den > 0 && num <= den);
        let g = gcd(num.max(1), den);
        let (num, den) = (num / g, den / g);
        match self.parts.binary_search_by_key(&den, |&(d, _)| d) {
            Ok(i) => self.parts[i].1 += num as u64,
            Err(i) => self.parts.insert(i, (den, num as u64)),
        }
    }

    /// Exact inverse of [`RatioSum::add_fraction`]. Returns true when
    /// the sum is empty afterwards.
    pub fn sub_fraction(&mut self, num: u32, den: u32) -> bool {
        let g = gcd(num.max(1), den);
        let (num, den) = (num / g, den / g);
        let i = self
            .parts
            .binary_search_by_key(&den, |&(d, _)| d)
            .expect("removing a fraction that was never added");
        assert!(self.parts[i].1 >= num as u64, "co-occurrence underflow");
        self.parts[i].1 -= num as u64;
        if self.parts[i].1 == 0 {
            self.parts.remove(i);
        }
        self.parts.is_empty()
    }

    pub fn merge_from(&mut self, other: &RatioSum) {
        for &(den, num) in &other.parts {
            match self.parts.binary_search_by_key(&den, |&(d, _)| d) {
                Ok(i) => self.parts[i].1 += num,
                Err(i) => self.parts.insert(i, (den, num)),
            }
        }
    }

    /// Current value as a float, evaluated in a fixed order.
    pub fn value(&self) -> f64 {
        self.parts.iter().map(|&(d, n)| n as f64 / d as f64).sum()
    }
}

/// Sparse term-to-term co-occurrence scores. Both directions of a pair
/// are stored; there are no diagonal entries. For any single document's
/// contribution, `cw(i,j) + cw(j,i) = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoocMatrix {
    // serialized as a pair list: JSON maps cannot key on tuples
    #[serde(with = "cooc_entries_serde")]
    entries: BTreeMap<(TermId, TermId), RatioSum>,
}

mod cooc_entries_serde {
    use super::{RatioSum, TermId};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(TermId, TermId), RatioSum>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(&(TermId, TermId), &RatioSum)> = map.iter().collect();
        pairs.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<(TermId, TermId), RatioSum>, D::Error> {
        let pairs: Vec<((TermId, TermId), RatioSum)> = Vec::deserialize(de)?;
        Ok(pairs.into_iter().collect())
    }
}

impl CoocMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, i: TermId, j: TermId) -> Option<f64> {
        self.entries.get(&(i, j)).map(RatioSum::value)
    }

    pub fn contains(&self, i: TermId, j: TermId) -> bool {
        self.entries.contains_key(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(TermId, TermId), &RatioSum)> {
        self.entries.iter()
    }

    /// Directed out-neighbors of a term.
    pub fn neighbors_of(&self, term: TermId) -> impl Iterator<Item = TermId> + '_ {
        self.entries
            .range((term, TermId(0))..=(term, TermId(u32::MAX)))
            .map(|(&(_, j), _)| j)
    }

    fn add(&mut self, key: (TermId, TermId), num: u32, den: u32) -> bool {
        match self.entries.entry(key) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().add_fraction(num, den);
                false
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(RatioSum::default()).add_fraction(num, den);
                true
            }
        }
    }

    fn sub(&mut self, key: (TermId, TermId), num: u32, den: u32) -> bool {
        let rs = self
            .entries
            .get_mut(&key)
            .expect("removing a co-occurrence pair that is absent");
        if rs.sub_fraction(num, den) {
            self.entries.remove(&key);
            true
        } else {
            false
        }
    }

    fn remove_term(&mut self, term: TermId) -> Vec<(TermId, TermId)> {
        // Both directions of every pair coexist, so the out-edge scan
        // finds every neighbor.
        let neighbors: Vec<TermId> = self.neighbors_of(term).collect();
        let mut removed = Vec::with_capacity(neighbors.len() * 2);
        for j in neighbors {
            self.entries.remove(&(term, j));
            self.entries.remove(&(j, term));
            removed.push((term, j));
            removed.push((j, term));
        }
        removed
    }
}

/// Directed co-occurring pairs of a document, sorted and deduplicated.
pub fn doc_pairs(doc: &Document, mode: CoocMode) -> Vec<(TermId, TermId)> {
    let mut pairs: Vec<(TermId, TermId)> = Vec::new();
    match mode {
        CoocMode::Full => {
            for (a, &(i, _)) in doc.term_counts.iter().enumerate() {
                for &(j, _) in doc.term_counts.iter().skip(a + 1) {
                    pairs.push((i, j));
                    pairs.push((j, i));
                }
            }
        }
        CoocMode::Window(delta) => {
            let toks = &doc.tokens;
            for (p, &i) in toks.iter().enumerate() {
                for &j in toks.iter().skip(p + 1).take(delta) {
                    if i != j {
                        pairs.push((i, j));
                        pairs.push((j, i));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Per-document co-occurrence matrix: entry `(i,j)` holds the frequency
/// ratio `N_d^i / (N_d^i + N_d^j)`.
pub fn doc_cooc(doc: &Document, mode: CoocMode) -> CoocMatrix {
    let mut m = CoocMatrix::new();
    for (i, j) in doc_pairs(doc, mode) {
        let (ci, cj) = (doc.count_of(i), doc.count_of(j));
        m.add((i, j), ci, ci + cj);
    }
    m
}

/// Evolving summary of one cluster's documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeature {
    pub id: ClusterId,
    /// Number of documents added (m_z).
    pub doc_count: u64,
    /// Term frequencies; float-valued because the classifier's penalty
    /// step scales counts.
    pub term_counts: BTreeMap<TermId, f64>,
    /// Total word count; always equals the sum of `term_counts`.
    pub token_total: f64,
    pub cooc: CoocMatrix,
    /// Decay weight in (0, 1], reset to 1 on update.
    pub weight: f64,
    /// Model tick of the last update.
    pub last_update: u64,
    /// Cluster-local arrival ticks per term, kept only by models that
    /// prune term subspaces.
    pub arrivals: Option<BTreeMap<TermId, Vec<u64>>>,
    pub label: Option<LabelId>,
}

impl ClusterFeature {
    pub fn new(id: ClusterId, tick: u64, track_arrivals: bool, label: Option<LabelId>) -> Self {
        Self {
            id,
            doc_count: 0,
            term_counts: BTreeMap::new(),
            token_total: 0.0,
            cooc: CoocMatrix::new(),
            weight: 1.0,
            last_update: tick,
            arrivals: track_arrivals.then(BTreeMap::new),
            label,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.term_counts.len()
    }

    pub fn count_of(&self, term: TermId) -> f64 {
        self.term_counts.get(&term).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, term: TermId) -> bool {
        self.term_counts.contains_key(&term)
    }

    pub fn shares_vocab_with(&self, doc: &Document) -> bool {
        doc.term_counts.iter().any(|&(t, _)| self.contains(t))
    }

    /// Union vocabulary size of cluster and document.
    pub fn union_vocab(&self, doc: &Document) -> usize {
        self.vocab_size()
            + doc
                .term_counts
                .iter()
                .filter(|&&(t, _)| !self.contains(t))
                .count()
    }

    /// Debug snapshot with the top-N terms by count; not a stable format.
    pub fn snapshot_json(&self, top_n: usize) -> serde_json::Value {
        let mut terms: Vec<(&TermId, &f64)> = self.term_counts.iter().collect();
        terms.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap().then(a.0.cmp(b.0)));
        serde_json::json!({
            "id": self.id.0,
            "docs": self.doc_count,
            "tokens": self.token_total,
            "vocab": self.vocab_size(),
            "cooc_entries": self.cooc.len(),
            "weight": self.weight,
            "last_update": self.last_update,
            "label": self.label.map(|l| l.0),
            "top_terms": terms
                .into_iter()
                .take(top_n)
                .map(|(t, c)| serde_json::json!({"term": t.0, "count": c}))
                .collect::<Vec<_>>(),
        })
    }

    /// Drops every co-occurrence entry touching the term.
    pub(crate) fn cooc_remove_term(&mut self, term: TermId) -> Vec<(TermId, TermId)> {
        self.cooc.remove_term(term)
    }

    #[cfg(debug_assertions)]
    pub(crate) fn assert_conservation(&self) {
        let sum: f64 = self.term_counts.values().sum();
        debug_assert!(
            (sum - self.token_total).abs() < 1e-6 * (1.0 + sum.abs()),
            "token_total {} drifted from term sum {}",
            self.token_total,
            sum
        );
    }
}

/// Structural changes from adding a document; used by models that keep
/// model-wide term statistics.
#[derive(Debug, Default)]
pub struct AddOutcome {
    /// Terms that entered the cluster vocabulary.
    pub new_terms: Vec<TermId>,
    /// Directed co-occurrence entries created.
    pub new_pairs: Vec<(TermId, TermId)>,
}

#[derive(Debug, Default)]
pub struct RemoveOutcome {
    /// Terms whose count reached zero and were dropped.
    pub gone_terms: Vec<TermId>,
    /// Directed co-occurrence entries that emptied out.
    pub gone_pairs: Vec<(TermId, TermId)>,
}

/// Adds a document to a cluster: counts accumulate, the document's
/// co-occurrence ratios are added entrywise, arrival ticks are appended
/// at the new cluster-local timestamp (= document count), the weight
/// resets to 1 and `last_update` moves to `tick`.
pub fn cf_add(z: &mut ClusterFeature, doc: &Document, tick: u64, mode: CoocMode) -> AddOutcome {
    debug_assert!(tick >= z.last_update);
    let mut out = AddOutcome::default();
    z.doc_count += 1;
    let local_tick = z.doc_count;

    for &(t, c) in &doc.term_counts {
        let slot = z.term_counts.entry(t).or_insert(0.0);
        if *slot == 0.0 {
            out.new_terms.push(t);
        }
        *slot += c as f64;
        z.token_total += c as f64;
        if let Some(arrivals) = z.arrivals.as_mut() {
            arrivals.entry(t).or_default().push(local_tick);
        }
    }

    for (i, j) in doc_pairs(doc, mode) {
        let (ci, cj) = (doc.count_of(i), doc.count_of(j));
        if z.cooc.add((i, j), ci, ci + cj) {
            out.new_pairs.push((i, j));
        }
    }

    z.weight = 1.0;
    z.last_update = tick;
    #[cfg(debug_assertions)]
    z.assert_conservation();
    out
}

/// Removes a previously added document: the exact inverse of [`cf_add`]
/// on the document count, term counts, token total, and co-occurrence.
/// Arrival ticks and the decay state are left as they are.
pub fn cf_remove(
    z: &mut ClusterFeature,
    doc: &Document,
    mode: CoocMode,
) -> Result<RemoveOutcome, CfError> {
    if z.doc_count == 0 {
        return Err(CfError::DocumentNotInCluster(doc.id.clone()));
    }
    for &(t, c) in &doc.term_counts {
        if z.count_of(t) < c as f64 {
            return Err(CfError::DocumentNotInCluster(doc.id.clone()));
        }
    }

    let mut out = RemoveOutcome::default();
    z.doc_count -= 1;
    for &(t, c) in &doc.term_counts {
        let slot = z.term_counts.get_mut(&t).unwrap();
        *slot -= c as f64;
        z.token_total -= c as f64;
        if *slot == 0.0 {
            z.term_counts.remove(&t);
            out.gone_terms.push(t);
        }
    }
    for (i, j) in doc_pairs(doc, mode) {
        let (ci, cj) = (doc.count_of(i), doc.count_of(j));
        if z.cooc.sub((i, j), ci, ci + cj) {
            out.gone_pairs.push((i, j));
        }
    }
    #[cfg(debug_assertions)]
    z.assert_conservation();
    Ok(out)
}

/// Triangular number (T^2 + T) / 2.
pub fn triangular(t: u64) -> f64 {
    (t as f64 * t as f64 + t as f64) / 2.0
}

/// Decayed weight `l_z * 2^(-lambda * (tick - last_update))`; pure, the
/// caller decides whether to commit it.
pub fn decay_weight(z: &ClusterFeature, tick: u64, lambda: f64) -> f64 {
    debug_assert!(tick >= z.last_update);
    z.weight * (2f64).powf(-lambda * (tick - z.last_update) as f64)
}

#[derive(Debug, Default)]
pub struct PruneOutcome {
    pub removed_terms: Vec<TermId>,
    pub removed_pairs: Vec<(TermId, TermId)>,
}

/// Drops terms whose recency falls below the threshold.
///
/// The cluster age is the triangular span `Δf(m_z) − Δf(1) + 1` and a
/// term's recency is `100 · Σ(arrival ticks) / age`; pruned terms leave
/// the counts, the co-occurrence matrix, and the arrival log. Never
/// touches the document count.
pub fn prune_terms(z: &mut ClusterFeature, recency_threshold: f64) -> PruneOutcome {
    let mut out = PruneOutcome::default();
    let Some(arrivals) = z.arrivals.as_ref() else {
        return out;
    };
    if z.doc_count == 0 {
        return out;
    }
    let age = triangular(z.doc_count) - triangular(1) + 1.0;
    let mut stale: Vec<TermId> = Vec::new();
    for (&t, ticks) in arrivals.iter() {
        let sum: u64 = ticks.iter().sum();
        let recency = sum as f64 * 100.0 / age;
        if recency < recency_threshold {
            stale.push(t);
        }
    }
    for t in stale {
        if let Some(count) = z.term_counts.remove(&t) {
            z.token_total -= count;
        }
        out.removed_pairs.extend(z.cooc.remove_term(t));
        z.arrivals.as_mut().unwrap().remove(&t);
        out.removed_terms.push(t);
    }
    #[cfg(debug_assertions)]
    z.assert_conservation();
    out
}

/// Hyper-parameters shared across the models; each model constructor
/// picks its own published defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamBlock {
    /// Concentration parameter (alpha).
    pub alpha: f64,
    /// Pseudo term weight (beta).
    pub beta: f64,
    /// Exponential decay factor (lambda).
    pub decay: f64,
    /// Term recency threshold in percent.
    pub recency_threshold: f64,
    /// Co-occurrence window size.
    pub window: usize,
    /// Episodic buffer capacity.
    pub buffer_capacity: usize,
    /// Episodic inference interval in ticks; `u64::MAX` disables it.
    pub inference_interval: u64,
    /// Documents re-sampled per inference episode.
    pub resample_count: usize,
    /// Neighbor count for k-nearest-cluster prediction.
    pub neighbor_count: usize,
    /// Per-label cluster floor.
    pub min_clusters_per_label: usize,
    /// Labeled warmup size.
    pub warmup_docs: usize,
    /// Weight below which a cluster counts as decayed away.
    pub decay_threshold: f64,
    /// Wrong-label penalty in percent.
    pub penalty_percent: f64,
}

impl ParamBlock {
    pub fn osdm_defaults() -> Self {
        Self {
            alpha: 2e-3,
            beta: 4e-5,
            decay: 6e-6,
            ..Self::base()
        }
    }

    pub fn osgm_defaults() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.004,
            decay: 1e-6,
            recency_threshold: 10.0,
            ..Self::base()
        }
    }

    pub fn osgm_es_defaults() -> Self {
        Self {
            alpha: 0.09,
            beta: 0.006,
            ..Self::osgm_defaults()
        }
    }

    pub fn eindm_defaults() -> Self {
        Self {
            alpha: 0.04,
            beta: 5e-4,
            decay: 6e-6,
            window: 1,
            buffer_capacity: 500,
            inference_interval: 60,
            resample_count: 30,
            ..Self::base()
        }
    }

    pub fn osmtc_defaults() -> Self {
        Self {
            alpha: 0.03,
            beta: 0.003,
            decay: 1e-5,
            recency_threshold: 5.0,
            penalty_percent: 5.0,
            neighbor_count: 15,
            min_clusters_per_label: 3,
            warmup_docs: 600,
            ..Self::base()
        }
    }

    fn base() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.01,
            decay: 1e-6,
            recency_threshold: 0.0,
            window: 1,
            buffer_capacity: 500,
            inference_interval: u64::MAX,
            resample_count: 30,
            neighbor_count: 15,
            min_clusters_per_label: 3,
            warmup_docs: 600,
            decay_threshold: 1e-6,
            penalty_percent: 5.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.decay < 0.0 {
            return Err("alpha, beta and decay must be non-negative".into());
        }
        if !(0.0..=100.0).contains(&self.recency_threshold)
            || !(0.0..=100.0).contains(&self.penalty_percent)
        {
            return Err("percent thresholds must lie in [0, 100]".into());
        }
        if self.buffer_capacity < self.resample_count {
            return Err("buffer capacity must be at least the resample count".into());
        }
        Ok(())
    }
}

/// Model-wide cluster set plus shared bookkeeping: the model clock, the
/// active document count, and the membership count of every active term
/// (how many clusters contain it — the ICF denominator and the active
/// vocabulary V).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelState {
    pub clusters: BTreeMap<ClusterId, ClusterFeature>,
    pub tick: u64,
    /// Active documents D; equals the sum of cluster document counts.
    pub active_docs: u64,
    pub active_vocab: BTreeMap<TermId, u32>,
    pub params: ParamBlock,
    pub cooc_mode: CoocMode,
    track_arrivals: bool,
    next_id: u64,
    #[serde(skip)]
    #[cfg_attr(not(debug_assertions), allow(dead_code))]
    validate_counter: std::cell::Cell<u32>,
}

#[derive(Debug, Default)]
pub struct MergeOutcome {
    /// Terms the absorbed cluster contributed that were new to the target.
    pub new_terms_in_target: Vec<TermId>,
    pub new_pairs_in_target: Vec<(TermId, TermId)>,
}

impl ModelState {
    pub fn new(params: ParamBlock, cooc_mode: CoocMode, track_arrivals: bool) -> Self {
        Self {
            clusters: BTreeMap::new(),
            tick: 0,
            active_docs: 0,
            active_vocab: BTreeMap::new(),
            params,
            cooc_mode,
            track_arrivals,
            next_id: 0,
            validate_counter: std::cell::Cell::new(0),
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.active_vocab.len()
    }

    pub fn cooc_entries(&self) -> usize {
        self.clusters.values().map(|z| z.cooc.len()).sum()
    }

    /// Active vocabulary size including the incoming document's unseen
    /// terms; the V of the scoring denominators.
    pub fn scoring_vocab_size(&self, doc: &Document) -> usize {
        self.active_vocab.len()
            + doc
                .term_counts
                .iter()
                .filter(|&&(t, _)| !self.active_vocab.contains_key(&t))
                .count()
    }

    /// Inverse cluster frequency `ln(|Z| / max(1, clusters containing w))`.
    pub fn icf(&self, term: TermId) -> f64 {
        let k = self.n_clusters().max(1) as f64;
        let containing = self.active_vocab.get(&term).copied().unwrap_or(0).max(1) as f64;
        (k / containing).ln()
    }

    pub fn effective_weight(&self, z: &ClusterFeature) -> f64 {
        decay_weight(z, self.tick, self.params.decay)
    }

    /// Commits one maintenance tick of decay to every cluster: each
    /// stored weight is multiplied by the factor for its current idle
    /// gap. Re-applying the gap factor every tick compounds to
    /// `2^(-lambda * (k^2+k)/2)` over k idle ticks — the triangular-time
    /// fading that lets idle clusters expire within a stream's lifetime.
    pub fn decay_all(&mut self) {
        let lambda = self.params.decay;
        let tick = self.tick;
        for z in self.clusters.values_mut() {
            let gap = tick.saturating_sub(z.last_update);
            if gap > 0 {
                z.weight *= (2f64).powf(-lambda * gap as f64);
            }
        }
    }

    /// Mean vocabulary size over the clusters accepted by `filter`,
    /// falling back to `fallback` when none qualify.
    pub fn mean_cluster_vocab<F: Fn(&ClusterFeature) -> bool>(
        &self,
        filter: F,
        fallback: usize,
    ) -> f64 {
        let mut n = 0usize;
        let mut sum = 0usize;
        for z in self.clusters.values() {
            if filter(z) {
                n += 1;
                sum += z.vocab_size();
            }
        }
        if n == 0 {
            fallback.max(1) as f64
        } else {
            sum as f64 / n as f64
        }
    }

    pub fn next_cluster_id(&mut self) -> ClusterId {
        let id = ClusterId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Creates a fresh cluster containing the document.
    pub fn create_cluster(&mut self, doc: &Document, label: Option<LabelId>) -> (ClusterId, AddOutcome) {
        let id = self.next_cluster_id();
        let mut z = ClusterFeature::new(id, self.tick, self.track_arrivals, label);
        let outcome = cf_add(&mut z, doc, self.tick, self.cooc_mode);
        for t in &outcome.new_terms {
            *self.active_vocab.entry(*t).or_insert(0) += 1;
        }
        self.clusters.insert(id, z);
        self.active_docs += 1;
        self.validate();
        (id, outcome)
    }

    /// Adds the document to an existing cluster.
    pub fn add_document(&mut self, cluster: ClusterId, doc: &Document) -> AddOutcome {
        let tick = self.tick;
        let mode = self.cooc_mode;
        let z = self.clusters.get_mut(&cluster).expect("cluster exists");
        let outcome = cf_add(z, doc, tick, mode);
        for t in &outcome.new_terms {
            *self.active_vocab.entry(*t).or_insert(0) += 1;
        }
        self.active_docs += 1;
        self.validate();
        outcome
    }

    /// Removes a document previously added to the cluster.
    pub fn remove_document(
        &mut self,
        cluster: ClusterId,
        doc: &Document,
    ) -> Result<RemoveOutcome, CfError> {
        let mode = self.cooc_mode;
        let z = self
            .clusters
            .get_mut(&cluster)
            .ok_or_else(|| CfError::DocumentNotInCluster(doc.id.clone()))?;
        let outcome = cf_remove(z, doc, mode)?;
        for t in &outcome.gone_terms {
            self.drop_vocab_membership(*t);
        }
        self.active_docs -= 1;
        self.validate();
        Ok(outcome)
    }

    /// Deletes a cluster outright; its documents leave the active count.
    pub fn delete_cluster(&mut self, id: ClusterId) -> ClusterFeature {
        let z = self.clusters.remove(&id).expect("cluster exists");
        for &t in z.term_counts.keys() {
            self.drop_vocab_membership(t);
        }
        self.active_docs -= z.doc_count;
        self.validate();
        z
    }

    /// Merges `old` into `target` via the additive property: counts and
    /// co-occurrence sum entrywise and the absorbed arrival ticks are
    /// shifted by the target's prior document count.
    pub fn merge_clusters(&mut self, old_id: ClusterId, target_id: ClusterId) -> MergeOutcome {
        let old = self.clusters.remove(&old_id).expect("old cluster exists");
        let target = self.clusters.get_mut(&target_id).expect("target exists");
        if let (Some(a), Some(b)) = (old.label, target.label) {
            assert_eq!(a, b, "merging must not cross labels");
        }
        let mut out = MergeOutcome::default();
        let shift = target.doc_count;

        for (&t, &c) in &old.term_counts {
            let slot = target.term_counts.entry(t).or_insert(0.0);
            if *slot == 0.0 {
                out.new_terms_in_target.push(t);
            }
            *slot += c;
        }
        target.token_total += old.token_total;
        target.doc_count += old.doc_count;

        for (&key, rs) in old.cooc.iter() {
            match target.cooc.entries.entry(key) {
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    e.get_mut().merge_from(rs);
                }
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(rs.clone());
                    out.new_pairs_in_target.push(key);
                }
            }
        }

        if let (Some(dst), Some(src)) = (target.arrivals.as_mut(), old.arrivals.as_ref()) {
            for (&t, ticks) in src {
                let entry = dst.entry(t).or_default();
                entry.extend(ticks.iter().map(|&tk| tk + shift));
            }
        }

        // Membership bookkeeping: the old cluster's membership vanishes;
        // terms new to the target carry their membership across.
        for &t in old.term_counts.keys() {
            if !out.new_terms_in_target.contains(&t) {
                self.drop_vocab_membership(t);
            }
        }
        self.validate();
        out
    }

    /// Prunes one cluster's stale terms and keeps the vocabulary
    /// membership counts in step.
    pub fn prune_cluster_terms(&mut self, id: ClusterId) -> PruneOutcome {
        let threshold = self.params.recency_threshold;
        let z = self.clusters.get_mut(&id).expect("cluster exists");
        let outcome = prune_terms(z, threshold);
        for t in &outcome.removed_terms {
            self.drop_vocab_membership(*t);
        }
        self.validate();
        outcome
    }

    pub(crate) fn drop_vocab_membership_pub(&mut self, t: TermId) {
        self.drop_vocab_membership(t);
    }

    fn drop_vocab_membership(&mut self, t: TermId) {
        match self.active_vocab.get_mut(&t) {
            Some(n) if *n > 1 => *n -= 1,
            Some(_) => {
                self.active_vocab.remove(&t);
            }
            None => debug_assert!(false, "vocabulary membership underflow"),
        }
    }

    /// Debug-build consistency check: D equals the sum of cluster sizes
    /// and the membership counts match a brute-force recount. The full
    /// recount is costly, so it is sampled.
    #[inline]
    pub fn validate(&self) {
        #[cfg(debug_assertions)]
        {
            let doc_sum: u64 = self.clusters.values().map(|z| z.doc_count).sum();
            debug_assert_eq!(doc_sum, self.active_docs, "active document count drifted");
            let n = self.validate_counter.get().wrapping_add(1);
            self.validate_counter.set(n);
            if n % 97 == 0 {
                let mut recount: BTreeMap<TermId, u32> = BTreeMap::new();
                for z in self.clusters.values() {
                    for &t in z.term_counts.keys() {
                        *recount.entry(t).or_insert(0) += 1;
                    }
                }
                debug_assert_eq!(recount, self.active_vocab, "active vocabulary drifted");
            }
        }
    }
}
