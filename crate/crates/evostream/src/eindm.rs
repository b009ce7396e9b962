//! Episodic-inference nonparametric Dirichlet model: window-based
//! co-occurrence keeps the semantic space small, a tanh-bounded word
//! specificity weights narrow terms up, and every `inference_interval`
//! ticks a random handful of recently buffered documents is pulled out
//! of its clusters and re-sampled, consolidating fragments.

use std::collections::{BTreeMap, VecDeque};

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::cf::{ClusterFeature, ClusterId, CoocMode, ModelState, ParamBlock, TermId};
use crate::corpus::Document;
use crate::osdm::{semantic_sum, MaintEvent, ProcessSummary};
use crate::osgm::{self, IcfVariant};

/// Model-wide per-term statistics backing the specificity weight: the
/// number of unique co-occurrence neighbors a term has across all active
/// clusters, and its total frequency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecificityStats {
    pub neighbors: BTreeMap<TermId, u64>,
    pub freq: BTreeMap<TermId, f64>,
}

impl SpecificityStats {
    fn bump_freq(&mut self, t: TermId, delta: f64) {
        let slot = self.freq.entry(t).or_insert(0.0);
        *slot += delta;
        if *slot <= 0.0 {
            self.freq.remove(&t);
        }
    }

    fn bump_neighbors(&mut self, t: TermId, delta: i64) {
        let slot = self.neighbors.entry(t).or_insert(0);
        if delta >= 0 {
            *slot += delta as u64;
        } else {
            *slot = slot.saturating_sub((-delta) as u64);
        }
        if *slot == 0 {
            self.neighbors.remove(&t);
        }
    }

    /// Brute-force recount over the whole model.
    pub fn recount(state: &ModelState) -> Self {
        let mut stats = Self::default();
        for z in state.clusters.values() {
            for (&t, &c) in &z.term_counts {
                stats.bump_freq(t, c);
            }
            for (&(i, _), _) in z.cooc.iter() {
                stats.bump_neighbors(i, 1);
            }
        }
        stats
    }
}

/// The tanh-bounded specificity of a term: with `r` the ratio of unique
/// neighbors to total frequency, `S = 1 + tanh(r (r - (2 delta + 1))) + delta`,
/// always inside `(delta, delta + 2)`. An unseen term scores the neutral
/// `1 + delta`.
pub fn word_specificity(term: TermId, stats: &SpecificityStats, window: usize) -> f64 {
    let freq = stats.freq.get(&term).copied().unwrap_or(0.0);
    if freq <= 0.0 {
        return 1.0 + window as f64;
    }
    let neighbors = stats.neighbors.get(&term).copied().unwrap_or(0) as f64;
    let r = neighbors / freq;
    let g = r * (r - (2.0 * window as f64 + 1.0));
    1.0 + g.tanh() + window as f64
}

#[derive(Debug, Clone)]
struct BufferEntry {
    doc: Document,
    cluster: ClusterId,
}

#[derive(Debug)]
pub struct EindmModel {
    pub state: ModelState,
    pub stats: SpecificityStats,
    pub assignments: BTreeMap<String, ClusterId>,
    pub merge_redirects: BTreeMap<ClusterId, ClusterId>,
    buffer: VecDeque<BufferEntry>,
    rng: StdRng,
    ticks_since_check: u32,
}

impl EindmModel {
    pub fn new(params: ParamBlock, seed: u64) -> Self {
        let window = params.window;
        Self {
            state: ModelState::new(params, CoocMode::Window(window), false),
            stats: SpecificityStats::default(),
            assignments: BTreeMap::new(),
            merge_redirects: BTreeMap::new(),
            buffer: VecDeque::new(),
            rng: StdRng::seed_from_u64(seed),
            ticks_since_check: 0,
        }
    }

    /// Resolves a (possibly merged-away) cluster id to its live home.
    pub fn canonical(&self, mut id: ClusterId) -> ClusterId {
        while let Some(&next) = self.merge_redirects.get(&id) {
            id = next;
        }
        id
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(ParamBlock::eindm_defaults(), seed)
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn buffered_ids(&self) -> impl Iterator<Item = &str> {
        self.buffer.iter().map(|e| e.doc.id.as_str())
    }

    /// One document: advance the clock, rotate the FIFO buffer, sample
    /// an assignment, refresh active clusters, and run the episodic
    /// inference pass when the interval elapses.
    pub fn process(&mut self, doc: &Document) -> ProcessSummary {
        self.state.tick += 1;
        if self.buffer.len() == self.state.params.buffer_capacity {
            self.buffer.pop_front();
        }

        let (cluster, created, margin) = self.sample_document(doc);
        self.assignments.insert(doc.id.clone(), cluster);
        self.buffer.push_back(BufferEntry { doc: doc.clone(), cluster });

        let mut events = self.update_active();
        let interval = self.state.params.inference_interval;
        if interval != u64::MAX && interval > 0 && self.state.tick % interval == 0 {
            events.extend(self.episodic_infer());
        }

        self.debug_check_stats();
        ProcessSummary { cluster, created, margin, events }
    }

    /// Scores the document against eligible clusters and either joins
    /// the argmax or opens a new cluster, keeping the specificity
    /// statistics in step.
    fn sample_document(&mut self, doc: &Document) -> (ClusterId, bool, Option<f64>) {
        let mut best: Option<(ClusterId, f64)> = None;
        if doc.is_empty() {
            for (&id, z) in &self.state.clusters {
                let d_total = (self.state.active_docs + 1) as f64;
                let s = (z.doc_count as f64).ln()
                    - (d_total - 1.0 + self.state.params.alpha * d_total).ln();
                if best.map_or(true, |(_, b)| s > b) {
                    best = Some((id, s));
                }
            }
            if let Some((id, _)) = best {
                let out = self.state.add_document(id, doc);
                self.apply_add(doc, &out);
                return (id, false, None);
            }
            let (fresh, out) = self.state.create_cluster(doc, None);
            self.apply_add(doc, &out);
            return (fresh, true, None);
        }

        for (&id, z) in &self.state.clusters {
            if !z.shares_vocab_with(doc) {
                continue;
            }
            let s = score_existing(doc, z, &self.state, &self.stats);
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((id, s));
            }
        }
        let new_score = score_new(doc, &self.state);
        match best {
            Some((_, s)) if s < new_score => {
                let (fresh, out) = self.state.create_cluster(doc, None);
                self.apply_add(doc, &out);
                (fresh, true, Some(new_score - s))
            }
            Some((id, s)) => {
                let out = self.state.add_document(id, doc);
                self.apply_add(doc, &out);
                (id, false, Some(s - new_score))
            }
            None => {
                let (fresh, out) = self.state.create_cluster(doc, None);
                self.apply_add(doc, &out);
                (fresh, true, None)
            }
        }
    }

    /// Decay sweep reusing the merge machinery; merged buffer entries
    /// follow their documents into the target cluster, deleted clusters
    /// leave their entries dangling (skipped at inference time).
    fn update_active(&mut self) -> Vec<MaintEvent> {
        let events = osgm::update_active(&mut self.state, IcfVariant::WithIcf);
        if events.is_empty() {
            return events;
        }
        for event in &events {
            if let MaintEvent::MergedInto { old_cluster, target_cluster, .. } = event {
                self.merge_redirects
                    .insert(ClusterId(*old_cluster), ClusterId(*target_cluster));
                for entry in self.buffer.iter_mut() {
                    if entry.cluster.0 == *old_cluster {
                        entry.cluster = ClusterId(*target_cluster);
                    }
                }
            }
        }
        // merging and deletion restructure co-occurrence wholesale
        self.stats = SpecificityStats::recount(&self.state);
        events
    }

    /// Draws `resample_count` buffered documents without replacement,
    /// removes each from its cluster (skipping documents whose cluster
    /// has since disappeared), and re-samples its assignment.
    pub fn episodic_infer(&mut self) -> Vec<MaintEvent> {
        let n = self.state.params.resample_count.min(self.buffer.len());
        if n == 0 {
            return Vec::new();
        }
        let clusters_before = self.state.n_clusters();
        let mut picked: Vec<usize> =
            rand::seq::index::sample(&mut self.rng, self.buffer.len(), n).into_vec();
        picked.sort_unstable();

        let mut moved = 0usize;
        for idx in picked {
            let (doc, old_cluster) = {
                let e = &self.buffer[idx];
                (e.doc.clone(), e.cluster)
            };
            if self.state.clusters.contains_key(&old_cluster) {
                let out = self
                    .state
                    .remove_document(old_cluster, &doc)
                    .expect("buffered document must be removable from its cluster");
                self.apply_remove(&doc, &out);
                if self.state.clusters[&old_cluster].doc_count == 0 {
                    self.state.delete_cluster(old_cluster);
                }
            }
            let (new_cluster, _, _) = self.sample_document(&doc);
            if new_cluster != old_cluster {
                moved += 1;
            }
            self.buffer[idx].cluster = new_cluster;
            self.assignments.insert(doc.id.clone(), new_cluster);
        }
        vec![MaintEvent::Inference {
            tick: self.state.tick,
            resampled: n,
            moved,
            clusters_before,
            clusters_after: self.state.n_clusters(),
        }]
    }

    fn apply_add(&mut self, doc: &Document, out: &crate::cf::AddOutcome) {
        for &(t, c) in &doc.term_counts {
            self.stats.bump_freq(t, c as f64);
        }
        for &(i, _) in &out.new_pairs {
            self.stats.bump_neighbors(i, 1);
        }
    }

    fn apply_remove(&mut self, doc: &Document, out: &crate::cf::RemoveOutcome) {
        for &(t, c) in &doc.term_counts {
            self.stats.bump_freq(t, -(c as f64));
        }
        for &(i, _) in &out.gone_pairs {
            self.stats.bump_neighbors(i, -1);
        }
    }

    fn debug_check_stats(&mut self) {
        self.ticks_since_check += 1;
        if self.ticks_since_check >= 64 {
            self.ticks_since_check = 0;
            debug_assert_eq!(self.stats, SpecificityStats::recount(&self.state));
        }
    }
}

/// Log-score against an existing cluster: the union-vocabulary form with
/// per-term evidence `n_z^w * ICF_w * S_w` and the window co-occurrence
/// shared with the cluster as the semantic factor.
pub fn score_existing(
    doc: &Document,
    z: &ClusterFeature,
    state: &ModelState,
    stats: &SpecificityStats,
) -> f64 {
    let p = &state.params;
    let d_total = (state.active_docs + 1) as f64;
    let union_vocab = z.union_vocab(doc) as f64;

    let mut log = (z.doc_count as f64).ln() - (d_total - 1.0 + p.alpha * d_total).ln();
    for &(w, count) in &doc.term_counts {
        let base = z.count_of(w) * state.icf(w) * word_specificity(w, stats, p.window);
        for j in 1..=count {
            log += (base + p.beta + (j - 1) as f64).ln();
        }
    }
    for i in 1..=doc.token_total() {
        log -= (z.token_total + p.beta * union_vocab + (i - 1) as f64).ln();
    }
    log + semantic_sum(doc, z, state.cooc_mode).ln_1p()
}

/// New-cluster score; identical contract to the graphical model's.
pub fn score_new(doc: &Document, state: &ModelState) -> f64 {
    osgm::score_new(doc, state)
}
