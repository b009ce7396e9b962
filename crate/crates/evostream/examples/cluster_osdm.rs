//! Clusters a synthetic no-drift stream with the base online Dirichlet
//! model and prints the quality metrics against the generator's ground
//! truth.
//!
//! ```bash
//! cargo run --release --example cluster_osdm
//! ```

use evostream::cf::ParamBlock;
use evostream::corpus::{generate_synthetic, preprocess, LabelMode, PreprocessConfig, SynthSpec};
use evostream::corpus::{LabelSet, Vocabulary};
use evostream::eval::{prequential_clustering, StreamDoc};
use evostream::osdm::OsdmModel;

fn main() {
    let spec = SynthSpec {
        n_topics: 10,
        vocab_size: 2000,
        core_terms_per_topic: 50,
        docs_per_topic: 500,
        mean_doc_len: 8.0,
        drift_points: vec![],
        label_mode: LabelMode::Single,
        seed: 17,
    };
    let records = generate_synthetic(&spec).expect("valid spec");
    println!("generated {} documents over {} topics", records.len(), spec.n_topics);

    let cfg = PreprocessConfig::default();
    let mut vocab = Vocabulary::new();
    let mut labels = LabelSet::new();
    let stream: Vec<StreamDoc> = records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let doc = preprocess(rec, &cfg, &mut vocab, &mut labels, i as u64);
            StreamDoc {
                truth_class: rec.topic,
                truth_labels: doc.labels.clone(),
                reveal: rec.reveal,
                doc,
            }
        })
        .collect();

    let mut model = OsdmModel::new(ParamBlock::osdm_defaults());
    let run = prequential_clustering(&mut model, &stream, 1000);

    println!("active clusters at end: {}", model.state.n_clusters());
    for (name, value) in &run.report.final_metrics {
        println!("{name}: {value:.4}");
    }
    println!(
        "{:.0} docs/sec, {} ms total, peak co-occurrence entries {}",
        run.report.perf.docs_per_sec, run.report.perf.total_ms, run.report.perf.peak_cooc_entries
    );

    // debug snapshot of the heaviest cluster
    if let Some(z) = model.state.clusters.values().max_by_key(|z| z.doc_count) {
        println!("largest cluster: {}", z.snapshot_json(5));
    }
}
