//! Evaluation metrics and the prequential (test-then-train) harness.
//!
//! Clustering quality is scored from a class-by-cluster contingency
//! table (purity, homogeneity, completeness, V-measure, NMI with
//! natural-log entropies); multi-label prediction from per-document
//! tallies (Hamming loss, example-based accuracy, and both readings of
//! micro-average recall). Accumulators are single-writer and mergeable.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cf::{ClusterId, LabelId};
use crate::corpus::Document;
use crate::eindm::EindmModel;
use crate::osdm::{MaintEvent, OsdmModel, ProcessSummary};
use crate::osgm::OsgmModel;
use crate::osmtc::{OsmtcModel, Prediction};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty contingency table")]
    EmptyTable,
    #[error("label space size must be positive")]
    EmptyLabelSpace,
    #[error("document {0}: empty prediction set")]
    EmptyPrediction(String),
}

/// Sparse class-by-cluster counts with marginals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContingencyTable {
    cells: BTreeMap<(u32, ClusterId), u64>,
    class_totals: BTreeMap<u32, u64>,
    cluster_totals: BTreeMap<ClusterId, u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, class: u32, cluster: ClusterId) {
        *self.cells.entry((class, cluster)).or_insert(0) += 1;
        *self.class_totals.entry(class).or_insert(0) += 1;
        *self.cluster_totals.entry(cluster).or_insert(0) += 1;
        self.total += 1;
    }

    /// Associative merge for parallel sweep aggregation.
    pub fn merge(&mut self, other: &ContingencyTable) {
        for (&k, &v) in &other.cells {
            *self.cells.entry(k).or_insert(0) += v;
        }
        for (&k, &v) in &other.class_totals {
            *self.class_totals.entry(k).or_insert(0) += v;
        }
        for (&k, &v) in &other.cluster_totals {
            *self.cluster_totals.entry(k).or_insert(0) += v;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Builds a table from parallel class/cluster slices (test helper
    /// and offline recomputation path).
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, ClusterId)>) -> Self {
        let mut t = Self::new();
        for (c, z) in pairs {
            t.add(c, z);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringScores {
    pub purity: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub nmi: f64,
}

/// All five clustering metrics from one table.
///
/// Entropies use natural logs; homogeneity and completeness use the
/// ratio form `1 - H(C|Z)/H(C)` with the convention that a zero-entropy
/// reference side scores 1, and NMI normalizes mutual information by the
/// geometric entropy mean with 0/0 mapping to 0.
pub fn clustering_metrics(t: &ContingencyTable) -> Result<ClusteringScores, EvalError> {
    if t.total == 0 {
        return Err(EvalError::EmptyTable);
    }
    let n = t.total as f64;

    let purity: f64 = {
        let mut best: BTreeMap<ClusterId, u64> = BTreeMap::new();
        for (&(_, z), &count) in &t.cells {
            let slot = best.entry(z).or_insert(0);
            *slot = (*slot).max(count);
        }
        best.values().map(|&c| c as f64).sum::<f64>() / n
    };

    let h_class = entropy(t.class_totals.values(), n);
    let h_cluster = entropy(t.cluster_totals.values(), n);

    // conditional entropies from the joint cells
    let mut h_class_given_cluster = 0.0;
    let mut h_cluster_given_class = 0.0;
    let mut mutual_information = 0.0;
    for (&(c, z), &count) in &t.cells {
        let joint = count as f64 / n;
        let p_class = t.class_totals[&c] as f64 / n;
        let p_cluster = t.cluster_totals[&z] as f64 / n;
        h_class_given_cluster -= joint * (joint / p_cluster).ln();
        h_cluster_given_class -= joint * (joint / p_class).ln();
        mutual_information += joint * (joint / (p_class * p_cluster)).ln();
    }

    let homogeneity = if h_class == 0.0 { 1.0 } else { 1.0 - h_class_given_cluster / h_class };
    let completeness = if h_cluster == 0.0 { 1.0 } else { 1.0 - h_cluster_given_class / h_cluster };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    let denom = (h_class * h_cluster).sqrt();
    // a perfect partition has both conditional entropies exactly zero;
    // report exactly 1 rather than MI/denom rounding noise
    let nmi = if denom == 0.0 {
        0.0
    } else if h_class_given_cluster == 0.0 && h_cluster_given_class == 0.0 {
        1.0
    } else {
        mutual_information / denom
    };

    Ok(ClusteringScores { purity, homogeneity, completeness, v_measure, nmi })
}

fn entropy<'a>(counts: impl Iterator<Item = &'a u64>, n: f64) -> f64 {
    counts
        .map(|&c| {
            let p = c as f64 / n;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// Per-document accumulators for multi-label prediction quality.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelTally {
    label_space: usize,
    docs: u64,
    sym_diff: u64,
    intersection: u64,
    union: u64,
    predicted: u64,
    truth: u64,
    jaccard_sum: f64,
    per_doc_precision_sum: f64,
}

impl MultiLabelTally {
    pub fn new(label_space: usize) -> Result<Self, EvalError> {
        if label_space == 0 {
            return Err(EvalError::EmptyLabelSpace);
        }
        Ok(Self {
            label_space,
            docs: 0,
            sym_diff: 0,
            intersection: 0,
            union: 0,
            predicted: 0,
            truth: 0,
            jaccard_sum: 0.0,
            per_doc_precision_sum: 0.0,
        })
    }

    pub fn docs(&self) -> u64 {
        self.docs
    }

    pub fn add_row(
        &mut self,
        doc_id: &str,
        truth: &BTreeSet<LabelId>,
        predicted: &[LabelId],
    ) -> Result<f64, EvalError> {
        if predicted.is_empty() {
            return Err(EvalError::EmptyPrediction(doc_id.to_string()));
        }
        let pred: BTreeSet<LabelId> = predicted.iter().copied().collect();
        let inter = truth.intersection(&pred).count() as u64;
        let union = truth.union(&pred).count() as u64;
        let sym = union - inter;
        self.docs += 1;
        self.sym_diff += sym;
        self.intersection += inter;
        self.union += union;
        self.predicted += pred.len() as u64;
        self.truth += truth.len() as u64;
        if union > 0 {
            self.jaccard_sum += inter as f64 / union as f64;
        } else {
            self.jaccard_sum += 1.0; // both sides empty
        }
        self.per_doc_precision_sum += inter as f64 / pred.len() as f64;
        Ok(sym as f64 / self.label_space as f64)
    }

    pub fn merge(&mut self, other: &MultiLabelTally) {
        assert_eq!(self.label_space, other.label_space);
        self.docs += other.docs;
        self.sym_diff += other.sym_diff;
        self.intersection += other.intersection;
        self.union += other.union;
        self.predicted += other.predicted;
        self.truth += other.truth;
        self.jaccard_sum += other.jaccard_sum;
        self.per_doc_precision_sum += other.per_doc_precision_sum;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiLabelScores {
    pub hamming_loss: f64,
    pub example_accuracy: f64,
    /// Standard micro recall: total intersection over total truth.
    pub micro_recall: f64,
    /// Per-document intersection over prediction size, averaged — the
    /// precision-like reading of the recall formula.
    pub micro_recall_doc_normalized: f64,
}

pub fn multilabel_metrics(t: &MultiLabelTally) -> Result<MultiLabelScores, EvalError> {
    if t.docs == 0 {
        return Err(EvalError::EmptyTable);
    }
    Ok(MultiLabelScores {
        hamming_loss: t.sym_diff as f64 / (t.docs * t.label_space as u64) as f64,
        example_accuracy: t.jaccard_sum / t.docs as f64,
        micro_recall: if t.truth == 0 { 0.0 } else { t.intersection as f64 / t.truth as f64 },
        micro_recall_doc_normalized: t.per_doc_precision_sum / t.docs as f64,
    })
}

// ---------------------------------------------------------------------
// prequential harness

/// One stream element ready for a model run.
#[derive(Debug, Clone)]
pub struct StreamDoc {
    pub doc: Document,
    /// Ground-truth class for clustering metrics (synthetic topic, or
    /// the first label of a labeled corpus).
    pub truth_class: Option<u32>,
    pub truth_labels: BTreeSet<LabelId>,
    pub reveal: bool,
}

/// Any of the clustering models behind one prequential interface.
pub trait OnlineClustering {
    fn process_document(&mut self, doc: &Document) -> ProcessSummary;
    fn n_clusters(&self) -> usize;
    fn vocab_size(&self) -> usize;
    fn cooc_entries(&self) -> usize;
    fn assignments(&self) -> &BTreeMap<String, ClusterId>;
    /// Follows merge redirects so absorbed clusters resolve to their
    /// absorbing cluster in the final metrics.
    fn canonical_cluster(&self, id: ClusterId) -> ClusterId {
        id
    }
}

impl OnlineClustering for OsdmModel {
    fn process_document(&mut self, doc: &Document) -> ProcessSummary {
        self.process(doc)
    }
    fn n_clusters(&self) -> usize {
        self.state.n_clusters()
    }
    fn vocab_size(&self) -> usize {
        self.state.vocab_size()
    }
    fn cooc_entries(&self) -> usize {
        self.state.cooc_entries()
    }
    fn assignments(&self) -> &BTreeMap<String, ClusterId> {
        &self.assignments
    }
}

impl OnlineClustering for OsgmModel {
    fn process_document(&mut self, doc: &Document) -> ProcessSummary {
        self.process(doc)
    }
    fn n_clusters(&self) -> usize {
        self.state.n_clusters()
    }
    fn vocab_size(&self) -> usize {
        self.state.vocab_size()
    }
    fn cooc_entries(&self) -> usize {
        self.state.cooc_entries()
    }
    fn assignments(&self) -> &BTreeMap<String, ClusterId> {
        &self.assignments
    }
    fn canonical_cluster(&self, id: ClusterId) -> ClusterId {
        self.canonical(id)
    }
}

impl OnlineClustering for EindmModel {
    fn process_document(&mut self, doc: &Document) -> ProcessSummary {
        self.process(doc)
    }
    fn n_clusters(&self) -> usize {
        self.state.n_clusters()
    }
    fn vocab_size(&self) -> usize {
        self.state.vocab_size()
    }
    fn cooc_entries(&self) -> usize {
        self.state.cooc_entries()
    }
    fn assignments(&self) -> &BTreeMap<String, ClusterId> {
        &self.assignments
    }
    fn canonical_cluster(&self, id: ClusterId) -> ClusterId {
        self.canonical(id)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub at_doc: u64,
    #[serde(flatten)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerfBlock {
    pub docs_per_sec: f64,
    pub total_ms: u64,
    pub peak_clusters: usize,
    pub peak_vocab: usize,
    pub peak_cooc_entries: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub final_metrics: BTreeMap<String, f64>,
    pub series: Vec<SeriesPoint>,
    pub perf: PerfBlock,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut columns: BTreeSet<&str> = self.final_metrics.keys().map(|s| s.as_str()).collect();
        for p in &self.series {
            columns.extend(p.metrics.keys().map(|s| s.as_str()));
        }
        let columns: Vec<&str> = columns.into_iter().collect();
        let mut out = String::from("at_doc");
        for c in &columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        let mut write_row = |at: String, metrics: &BTreeMap<String, f64>| {
            out.push_str(&at);
            for c in &columns {
                out.push(',');
                if let Some(v) = metrics.get(*c) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        };
        for p in &self.series {
            write_row(p.at_doc.to_string(), &p.metrics);
        }
        write_row("final".into(), &self.final_metrics);
        out
    }
}

/// Per-document output row of a clustering run.
#[derive(Debug, Clone, Serialize)]
pub struct AssignmentRow {
    pub doc_id: String,
    pub cluster_id: u64,
    pub is_new: bool,
    pub n_active_clusters: usize,
    pub score_margin: Option<f64>,
}

/// Per-document output row of a classification run.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionRow {
    pub doc_id: String,
    pub predicted: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<u32>>,
    pub l_count: usize,
    pub n_clusters: usize,
    pub hamming_contrib: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub at_doc: u64,
    #[serde(flatten)]
    pub event: MaintEvent,
}

pub struct ClusteringRun {
    pub report: Report,
    pub rows: Vec<AssignmentRow>,
    pub events: Vec<EventRow>,
    /// Final contingency table over the (possibly re-sampled) log.
    pub final_table: ContingencyTable,
}

/// Runs a clustering model over a finite stream, accumulating arrival
/// assignments into a contingency table, reporting metrics every
/// `window` documents and at the end, and sampling the model footprint.
/// Final metrics are recomputed from the model's assignment log so that
/// episodic re-assignments are reflected.
pub fn prequential_clustering(
    model: &mut dyn OnlineClustering,
    stream: &[StreamDoc],
    window: u64,
) -> ClusteringRun {
    let window = window.max(1);
    let start = Instant::now();
    let mut table = ContingencyTable::new();
    let mut rows = Vec::with_capacity(stream.len());
    let mut events = Vec::new();
    let mut series = Vec::new();
    let mut peak_clusters = 0usize;
    let mut peak_vocab = 0usize;
    let mut peak_cooc = 0usize;
    let mut seen = 0u64;

    for item in stream {
        let summary = model.process_document(&item.doc);
        seen += 1;
        if let Some(class) = item.truth_class {
            table.add(class, summary.cluster);
        }
        rows.push(AssignmentRow {
            doc_id: item.doc.id.clone(),
            cluster_id: summary.cluster.0,
            is_new: summary.created,
            n_active_clusters: model.n_clusters(),
            score_margin: summary.margin,
        });
        for event in summary.events {
            events.push(EventRow { at_doc: seen, event });
        }
        peak_clusters = peak_clusters.max(model.n_clusters());
        peak_vocab = peak_vocab.max(model.vocab_size());
        peak_cooc = peak_cooc.max(model.cooc_entries());
        if seen % window == 0 {
            if let Ok(scores) = clustering_metrics(&table) {
                series.push(SeriesPoint { at_doc: seen, metrics: clustering_map(&scores) });
            }
        }
    }

    // final metrics over the authoritative assignment log, with merged
    // clusters resolved to their absorbing cluster
    let final_table = ContingencyTable::from_pairs(stream.iter().filter_map(|item| {
        let class = item.truth_class?;
        let cluster = model.assignments().get(&item.doc.id)?;
        Some((class, model.canonical_cluster(*cluster)))
    }));
    let final_metrics = clustering_metrics(&final_table)
        .map(|s| clustering_map(&s))
        .unwrap_or_default();

    let elapsed = start.elapsed();
    let report = Report {
        final_metrics,
        series,
        perf: PerfBlock {
            docs_per_sec: if elapsed.as_secs_f64() > 0.0 {
                seen as f64 / elapsed.as_secs_f64()
            } else {
                0.0
            },
            total_ms: elapsed.as_millis() as u64,
            peak_clusters,
            peak_vocab,
            peak_cooc_entries: peak_cooc,
        },
    };
    ClusteringRun { report, rows, events, final_table }
}

fn clustering_map(s: &ClusteringScores) -> BTreeMap<String, f64> {
    [
        ("purity", s.purity),
        ("homogeneity", s.homogeneity),
        ("completeness", s.completeness),
        ("v_measure", s.v_measure),
        ("nmi", s.nmi),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn multilabel_map(s: &MultiLabelScores) -> BTreeMap<String, f64> {
    [
        ("hamming_loss", s.hamming_loss),
        ("example_accuracy", s.example_accuracy),
        ("micro_recall", s.micro_recall),
        ("micro_recall_doc_normalized", s.micro_recall_doc_normalized),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub struct ClassificationRun {
    pub report: Report,
    pub rows: Vec<PredictionRow>,
    pub events: Vec<EventRow>,
    pub tally: MultiLabelTally,
}

/// Prequential run of the classifier over the post-warmup stream:
/// predict first, tally against the ground truth, then update (the model
/// sees the labels only of revealed documents).
pub fn prequential_classification(
    model: &mut OsmtcModel,
    stream: &[StreamDoc],
    label_space: usize,
    window: u64,
) -> Result<ClassificationRun, EvalError> {
    let window = window.max(1);
    let start = Instant::now();
    let mut tally = MultiLabelTally::new(label_space)?;
    let mut rows = Vec::with_capacity(stream.len());
    let mut events = Vec::new();
    let mut series = Vec::new();
    let mut peaks = (0usize, 0usize, 0usize);
    let mut seen = 0u64;

    for item in stream {
        let truth = (item.reveal && !item.truth_labels.is_empty()).then_some(&item.truth_labels);
        let (pred, maint): (Prediction, Vec<MaintEvent>) = model.step(&item.doc, truth);
        seen += 1;
        let hamming_contrib = if item.truth_labels.is_empty() {
            0.0
        } else {
            tally.add_row(&item.doc.id, &item.truth_labels, &pred.labels)?
        };
        rows.push(PredictionRow {
            doc_id: item.doc.id.clone(),
            predicted: pred.labels.iter().map(|l| l.0).collect(),
            truth: (!item.truth_labels.is_empty())
                .then(|| item.truth_labels.iter().map(|l| l.0).collect()),
            l_count: pred.l_count,
            n_clusters: model.state.n_clusters(),
            hamming_contrib,
        });
        for event in maint {
            events.push(EventRow { at_doc: seen, event });
        }
        peaks.0 = peaks.0.max(model.state.n_clusters());
        peaks.1 = peaks.1.max(model.state.vocab_size());
        peaks.2 = peaks.2.max(model.state.cooc_entries());
        if seen % window == 0 && tally.docs() > 0 {
            if let Ok(scores) = multilabel_metrics(&tally) {
                series.push(SeriesPoint { at_doc: seen, metrics: multilabel_map(&scores) });
            }
        }
    }

    let final_metrics = multilabel_metrics(&tally)
        .map(|s| multilabel_map(&s))
        .unwrap_or_default();
    let elapsed = start.elapsed();
    let report = Report {
        final_metrics,
        series,
        perf: PerfBlock {
            docs_per_sec: if elapsed.as_secs_f64() > 0.0 {
                seen as f64 / elapsed.as_secs_f64()
            } else {
                0.0
            },
            total_ms: elapsed.as_millis() as u64,
            peak_clusters: peaks.0,
            peak_vocab: peaks.1,
            peak_cooc_entries: peaks.2,
        },
    };
    Ok(ClassificationRun { report, rows, events, tally })
}
