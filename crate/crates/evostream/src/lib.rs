//! Online mining of text streams with evolving micro-clusters.
//!
//! The crate processes documents one at a time under bounded memory and
//! keeps a set of additive cluster summaries that decay, merge, shed
//! stale terms, and spawn new clusters as topics appear. Four models are
//! provided on top of the shared machinery:
//!
//! - [`osdm`] — nonparametric clustering with term co-occurrence
//!   weighting and decay-based cluster removal,
//! - [`osgm`] — adds evolving term-subspace pruning and cluster merging
//!   (plus an `ES` variant without inverse-cluster-frequency smoothing),
//! - [`eindm`] — window-based co-occurrence, word specificity, and a
//!   buffered episodic re-sampling step that consolidates fragments,
//! - [`osmtc`] — semi-supervised multi-label classification over
//!   label-tagged micro-clusters with k-nearest-cluster prediction.
//!
//! [`corpus`] covers preprocessing, JSONL stream I/O, and ground-truthed
//! synthetic stream generation; [`eval`] holds the clustering and
//! multi-label metrics plus the prequential (test-then-train) harness.
//!
//! Every capability has a runnable demo under `examples/`; the thin
//! `evostream` binary wraps the same entry points as `generate`, `run`,
//! `sweep`, and `bench` subcommands.

pub mod cf;
pub mod cli;
pub mod corpus;
pub mod eindm;
pub mod eval;
pub mod osdm;
pub mod osgm;
pub mod osmtc;

pub use cf::{ClusterFeature, ClusterId, CoocMatrix, CoocMode, LabelId, ModelState, ParamBlock, TermId};
pub use corpus::{Document, LabelSet, PreprocessConfig, RawRecord, Vocabulary};
