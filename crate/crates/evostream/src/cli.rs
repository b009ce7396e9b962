//! Command-line orchestration: run a model over a stream, generate
//! synthetic data, sweep parameters, and benchmark throughput. The
//! `evostream` binary is a thin wrapper over these entry points; every
//! run writes `assignments.jsonl`, `events.jsonl`, `report.json`, and
//! `report.csv` under its output directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::cf::ParamBlock;
use crate::corpus::{
    generate_synthetic, preprocess, read_stream, write_stream, LabelSet, ParsePolicy,
    PreprocessConfig, RawRecord, SynthSpec, Vocabulary,
};
use crate::eindm::EindmModel;
use crate::eval::{
    prequential_classification, prequential_clustering, OnlineClustering, Report, StreamDoc,
};
use crate::osdm::OsdmModel;
use crate::osgm::OsgmModel;
use crate::osmtc::OsmtcModel;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("model: {0}")]
    Model(String),
}

impl CliError {
    /// Process exit code: 2 for config errors, 3 for I/O, 4 for model
    /// invariant breaches.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Model(_) => 4,
        }
    }

    fn io(e: impl std::fmt::Display, path: &Path) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Osdm,
    Osgm,
    OsgmEs,
    Eindm,
    Osmtc,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "osdm" => Ok(Self::Osdm),
            "osgm" => Ok(Self::Osgm),
            "osgm-es" | "osgm_es" => Ok(Self::OsgmEs),
            "eindm" => Ok(Self::Eindm),
            "osmtc" => Ok(Self::Osmtc),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

impl ModelKind {
    pub fn default_params(&self) -> ParamBlock {
        match self {
            ModelKind::Osdm => ParamBlock::osdm_defaults(),
            ModelKind::Osgm => ParamBlock::osgm_defaults(),
            ModelKind::OsgmEs => ParamBlock::osgm_es_defaults(),
            ModelKind::Eindm => ParamBlock::eindm_defaults(),
            ModelKind::Osmtc => ParamBlock::osmtc_defaults(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Osdm => "osdm",
            ModelKind::Osgm => "osgm",
            ModelKind::OsgmEs => "osgm-es",
            ModelKind::Eindm => "eindm",
            ModelKind::Osmtc => "osmtc",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub input: PathBuf,
    pub out: PathBuf,
    pub params: ParamBlock,
    /// Metric reporting window W.
    pub window: u64,
    pub seed: u64,
    /// When set, overrides the stream's reveal flags to an exact labeled
    /// fraction (classifier runs).
    pub labeled_ratio: Option<f64>,
    pub stem: bool,
    pub stopword_file: Option<PathBuf>,
    pub skip_bad_lines: bool,
}

impl RunConfig {
    pub fn new(model: ModelKind, input: PathBuf, out: PathBuf) -> Self {
        Self {
            model,
            input,
            out,
            params: model.default_params(),
            window: 1000,
            seed: default_seed(),
            labeled_ratio: None,
            stem: false,
            stopword_file: None,
            skip_bad_lines: false,
        }
    }

    /// Applies `key=value` parameter overrides (flags win over files).
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{key}={value}: {e}"));
        macro_rules! set_f64 {
            ($field:ident) => {{
                self.params.$field = value.parse::<f64>().map_err(|e| bad(&e))?;
            }};
        }
        macro_rules! set_usize {
            ($field:ident) => {{
                self.params.$field = value.parse::<usize>().map_err(|e| bad(&e))?;
            }};
        }
        match key {
            "alpha" => set_f64!(alpha),
            "beta" => set_f64!(beta),
            "decay" | "lambda" => set_f64!(decay),
            "recency_threshold" | "gamma" => set_f64!(recency_threshold),
            "penalty_percent" => set_f64!(penalty_percent),
            "decay_threshold" => set_f64!(decay_threshold),
            "window_size" | "delta" => set_usize!(window),
            "buffer_capacity" | "psi" => set_usize!(buffer_capacity),
            "resample_count" | "eta" => set_usize!(resample_count),
            "neighbor_count" | "k" => set_usize!(neighbor_count),
            "min_clusters_per_label" | "z_min" => set_usize!(min_clusters_per_label),
            "warmup_docs" | "d_init" => set_usize!(warmup_docs),
            "inference_interval" | "rho" => {
                self.params.inference_interval = if value == "inf" || value == "off" {
                    u64::MAX
                } else {
                    value.parse::<u64>().map_err(|e| bad(&e))?
                };
            }
            "report_window" => self.window = value.parse::<u64>().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse::<u64>().map_err(|e| bad(&e))?,
            "labeled_ratio" => {
                self.labeled_ratio = Some(value.parse::<f64>().map_err(|e| bad(&e))?)
            }
            other => return Err(CliError::Config(format!("unknown parameter '{other}'"))),
        }
        Ok(())
    }

    /// Merges a TOML config file; only keys present in the file change.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<(), CliError> {
        #[derive(Deserialize)]
        struct FileConfig {
            #[serde(default)]
            params: std::collections::BTreeMap<String, toml::Value>,
            window: Option<u64>,
            seed: Option<u64>,
            labeled_ratio: Option<f64>,
            stem: Option<bool>,
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::io(e, path))?;
        let file: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (k, v) in &file.params {
            let as_str = match v {
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            self.apply_override(k, &as_str)?;
        }
        if let Some(w) = file.window {
            self.window = w;
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if let Some(r) = file.labeled_ratio {
            self.labeled_ratio = Some(r);
        }
        if let Some(s) = file.stem {
            self.stem = s;
        }
        Ok(())
    }
}

/// Seed fallback from `EVOSTREAM_SEED`, defaulting to 42.
pub fn default_seed() -> u64 {
    std::env::var("EVOSTREAM_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(42)
}

/// Reads, preprocesses and interns a whole stream file.
pub fn load_stream(
    cfg: &RunConfig,
) -> Result<(Vec<StreamDoc>, Vocabulary, LabelSet), CliError> {
    let mut preprocess_cfg = PreprocessConfig::default();
    preprocess_cfg.stem = cfg.stem;
    if let Some(path) = &cfg.stopword_file {
        preprocess_cfg.stopwords =
            crate::corpus::load_stopwords(path).map_err(|e| CliError::io(e, path))?;
    }

    let reader = read_stream(&cfg.input)
        .map_err(|e| CliError::io(e, &cfg.input))?
        .with_policy(if cfg.skip_bad_lines {
            ParsePolicy::SkipWithWarning
        } else {
            ParsePolicy::Abort
        });

    let mut vocab = Vocabulary::new();
    let mut labels = LabelSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.enumerate() {
        let rec: RawRecord = rec.map_err(|e| CliError::Io(format!("{}: {e}", cfg.input.display())))?;
        let doc = preprocess(&rec, &preprocess_cfg, &mut vocab, &mut labels, i as u64);
        let truth_labels: BTreeSet<_> = doc.labels.clone();
        let truth_class = rec
            .topic
            .or_else(|| truth_labels.iter().next().map(|l| l.0));
        out.push(StreamDoc {
            doc,
            truth_class,
            truth_labels,
            reveal: rec.reveal,
        });
    }

    if let Some(ratio) = cfg.labeled_ratio {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(CliError::Config(format!("labeled_ratio {ratio} outside [0,1]")));
        }
        // evenly spaced deterministic reveal pattern
        for (i, item) in out.iter_mut().enumerate() {
            let before = ((i as f64) * ratio).floor();
            let after = ((i as f64 + 1.0) * ratio).floor();
            item.reveal = after > before;
        }
    }
    Ok((out, vocab, labels))
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub report: Report,
    pub out_dir: PathBuf,
}

/// `generate`: expand a TOML synthesis spec into a JSONL stream.
pub fn cmd_generate(spec_path: &Path, out_path: &Path) -> Result<usize, CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::io(e, spec_path))?;
    let spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let stream = generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    write_stream(out_path, &stream).map_err(|e| CliError::io(e, out_path))?;
    Ok(stream.len())
}

/// `run`: one prequential pass of the configured model over the stream.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    cfg.params
        .validate()
        .map_err(CliError::Config)?;
    let (stream, _vocab, labels) = load_stream(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(e, &cfg.out))?;

    let (report, rows_json, events_json) = match cfg.model {
        ModelKind::Osmtc => run_classifier(cfg, &stream, &labels)?,
        _ => run_clustering(cfg, &stream)?,
    };

    write_text(&cfg.out.join("assignments.jsonl"), &rows_json)?;
    write_text(&cfg.out.join("events.jsonl"), &events_json)?;
    let report_json = serde_json::json!({
        "final": report.final_metrics,
        "series": report.series,
        "perf": report.perf,
    });
    write_text(
        &cfg.out.join("report.json"),
        &serde_json::to_string_pretty(&report_json).expect("report serializes"),
    )?;
    write_text(&cfg.out.join("report.csv"), &report.to_csv())?;
    Ok(RunArtifacts { report, out_dir: cfg.out.clone() })
}

fn run_clustering(
    cfg: &RunConfig,
    stream: &[StreamDoc],
) -> Result<(Report, String, String), CliError> {
    let mut model: Box<dyn OnlineClustering> = match cfg.model {
        ModelKind::Osdm => Box::new(OsdmModel::new(cfg.params.clone())),
        ModelKind::Osgm => Box::new(OsgmModel::new(cfg.params.clone(), crate::osgm::IcfVariant::WithIcf)),
        ModelKind::OsgmEs => Box::new(OsgmModel::new(cfg.params.clone(), crate::osgm::IcfVariant::Es)),
        ModelKind::Eindm => Box::new(EindmModel::new(cfg.params.clone(), cfg.seed)),
        ModelKind::Osmtc => unreachable!("classifier handled separately"),
    };
    let run = prequential_clustering(model.as_mut(), stream, cfg.window);
    let rows = jsonl(&run.rows);
    let events = jsonl(&run.events);
    Ok((run.report, rows, events))
}

fn run_classifier(
    cfg: &RunConfig,
    stream: &[StreamDoc],
    labels: &LabelSet,
) -> Result<(Report, String, String), CliError> {
    let warmup_target = cfg.params.warmup_docs;
    let mut warmup = Vec::new();
    let mut rest_start = stream.len();
    for (i, item) in stream.iter().enumerate() {
        if warmup.len() >= warmup_target {
            rest_start = i;
            break;
        }
        if item.reveal && !item.truth_labels.is_empty() {
            warmup.push(item.doc.clone());
        }
    }
    if warmup.len() < warmup_target {
        return Err(CliError::Model(format!(
            "stream provides only {} labeled warmup documents of the {warmup_target} required",
            warmup.len()
        )));
    }
    let mut model = OsmtcModel::init(&warmup, cfg.params.clone(), cfg.seed)
        .map_err(|e| CliError::Model(e.to_string()))?;
    let label_space = labels.len().max(model.n_labels());
    let run = prequential_classification(&mut model, &stream[rest_start..], label_space, cfg.window)
        .map_err(|e| CliError::Model(e.to_string()))?;
    Ok((run.report, jsonl(&run.rows), jsonl(&run.events)))
}

fn jsonl<T: serde::Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(e, path))
}

/// Parses a sweep grid like `alpha=1e-3,1e-2;beta=0.01,0.02` into the
/// Cartesian product of overrides.
pub fn parse_grid(grid: &str) -> Result<Vec<Vec<(String, String)>>, CliError> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for axis in grid.split(';').filter(|s| !s.trim().is_empty()) {
        let (key, values) = axis
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("grid axis '{axis}' lacks '='")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.is_empty() {
            return Err(CliError::Config(format!("grid axis '{key}' has no values")));
        }
        axes.push((key.trim().to_string(), values));
    }
    if axes.is_empty() {
        return Err(CliError::Config("empty grid".into()));
    }
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in &values {
                let mut c = combo.clone();
                c.push((key.clone(), v.clone()));
                next.push(c);
            }
        }
        combos = next;
    }
    Ok(combos)
}

/// One sweep row: the applied overrides, final metrics, and runtime.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub overrides: Vec<(String, String)>,
    pub metrics: Option<std::collections::BTreeMap<String, f64>>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

/// `sweep`: runs the Cartesian product of the grid; rows are independent
/// (failures are recorded, the sweep continues) and execute in parallel.
pub fn cmd_sweep(base: &RunConfig, grid: &str) -> Result<(Vec<SweepRow>, PathBuf), CliError> {
    let combos = parse_grid(grid)?;
    // configs validated up front so config errors abort before any run
    let mut configs = Vec::with_capacity(combos.len());
    for combo in &combos {
        let mut cfg = base.clone();
        for (k, v) in combo {
            cfg.apply_override(k, v)?;
        }
        cfg.out = base.out.join(sweep_dir_name(combo));
        configs.push(cfg);
    }

    let rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(&combos)
            .map(|(cfg, combo)| {
                scope.spawn(move || {
                    let started = std::time::Instant::now();
                    match cmd_run(cfg) {
                        Ok(artifacts) => SweepRow {
                            overrides: combo.clone(),
                            metrics: Some(artifacts.report.final_metrics),
                            runtime_ms: started.elapsed().as_millis() as u64,
                            error: None,
                        },
                        Err(e) => SweepRow {
                            overrides: combo.clone(),
                            metrics: None,
                            runtime_ms: started.elapsed().as_millis() as u64,
                            error: Some(e.to_string()),
                        },
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker")).collect()
    });

    fs::create_dir_all(&base.out).map_err(|e| CliError::io(e, &base.out))?;
    let csv_path = base.out.join("sweep.csv");
    write_text(&csv_path, &sweep_csv(&rows))?;
    Ok((rows, csv_path))
}

fn sweep_dir_name(combo: &[(String, String)]) -> String {
    let mut name = String::from("run");
    for (k, v) in combo {
        let _ = write!(name, "_{k}-{v}");
    }
    name.replace(['/', '\\'], "_")
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut params: BTreeSet<&str> = BTreeSet::new();
    let mut metrics: BTreeSet<&str> = BTreeSet::new();
    for row in rows {
        params.extend(row.overrides.iter().map(|(k, _)| k.as_str()));
        if let Some(m) = &row.metrics {
            metrics.extend(m.keys().map(|k| k.as_str()));
        }
    }
    let mut out = String::new();
    for p in &params {
        out.push_str(p);
        out.push(',');
    }
    for m in &metrics {
        out.push_str(m);
        out.push(',');
    }
    out.push_str("runtime_ms,status\n");
    for row in rows {
        for p in &params {
            if let Some((_, v)) = row.overrides.iter().find(|(k, _)| k == p) {
                out.push_str(v);
            }
            out.push(',');
        }
        for m in &metrics {
            if let Some(v) = row.metrics.as_ref().and_then(|map| map.get(*m)) {
                let _ = write!(out, "{v}");
            }
            out.push(',');
        }
        let _ = write!(out, "{}", row.runtime_ms);
        out.push(',');
        out.push_str(row.error.as_deref().unwrap_or("ok"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub size: usize,
    pub total_ms: u64,
    pub docs_per_sec: f64,
    pub peak_clusters: usize,
    pub peak_cooc_entries: usize,
}

/// `bench`: runs the model over stream prefixes of the given sizes and
/// reports throughput and footprint per size.
pub fn cmd_bench(base: &RunConfig, sizes: &[usize]) -> Result<Vec<BenchRow>, CliError> {
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    let (stream, _vocab, labels) = load_stream(base)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let prefix = &stream[..size.min(stream.len())];
        if prefix.is_empty() {
            continue;
        }
        let started = std::time::Instant::now();
        let (peak_clusters, peak_cooc, n) = match base.model {
            ModelKind::Osmtc => {
                let mut cfg = base.clone();
                cfg.window = u64::MAX; // no mid-run metric cost
                let (report, _, _) = run_classifier(&cfg, prefix, &labels)?;
                (report.perf.peak_clusters, report.perf.peak_cooc_entries, prefix.len())
            }
            _ => {
                let mut cfg = base.clone();
                cfg.window = u64::MAX;
                let (report, _, _) = run_clustering(&cfg, prefix)?;
                (report.perf.peak_clusters, report.perf.peak_cooc_entries, prefix.len())
            }
        };
        let elapsed = started.elapsed();
        rows.push(BenchRow {
            size: n,
            total_ms: elapsed.as_millis() as u64,
            docs_per_sec: if elapsed.as_secs_f64() > 0.0 {
                n as f64 / elapsed.as_secs_f64()
            } else {
                0.0
            },
            peak_clusters,
            peak_cooc_entries: peak_cooc,
        });
    }
    Ok(rows)
}
