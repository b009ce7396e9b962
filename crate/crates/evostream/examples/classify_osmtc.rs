//! Semi-supervised multi-label classification over a synthetic stream:
//! 15 labels with a ring-shaped co-occurrence structure, two labels per
//! document, 20% of labels revealed. The classifier warms up on the
//! first 600 revealed documents and then runs prequentially; the
//! constant "top-2 most frequent labels" baseline is shown next to it.
//!
//! ```bash
//! cargo run --release --example classify_osmtc
//! ```

use std::collections::BTreeSet;

use evostream::cf::{LabelId, ParamBlock};
use evostream::corpus::{
    generate_synthetic, preprocess, LabelMode, LabelSet, PreprocessConfig, SynthSpec, Vocabulary,
};
use evostream::eval::{prequential_classification, multilabel_metrics, MultiLabelTally, StreamDoc};
use evostream::osmtc::OsmtcModel;

fn ring_cooccurrence(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else if j == (i + 1) % n || i == (j + 1) % n {
                        0.6
                    } else if j == (i + 2) % n || i == (j + 2) % n {
                        0.25
                    } else {
                        0.03
                    }
                })
                .collect()
        })
        .collect()
}

fn main() {
    let n_labels = 15usize;
    let spec = SynthSpec {
        n_topics: n_labels,
        vocab_size: 400,
        core_terms_per_topic: 5,
        docs_per_topic: 667,
        mean_doc_len: 8.0,
        drift_points: vec![],
        label_mode: LabelMode::Multi {
            cardinality: 2.0,
            cooccurrence: ring_cooccurrence(n_labels),
            reveal_fraction: 0.2,
        },
        seed: 41,
    };
    let records = generate_synthetic(&spec).expect("valid spec");
    let records = &records[..10_000];

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

    // warm up on the first 600 revealed documents
    let params = ParamBlock::osmtc_defaults();
    let mut warmup = Vec::new();
    let mut rest_start = stream.len();
    for (i, item) in stream.iter().enumerate() {
        if warmup.len() >= params.warmup_docs {
            rest_start = i;
            break;
        }
        if item.reveal && !item.truth_labels.is_empty() {
            warmup.push(item.doc.clone());
        }
    }
    println!(
        "warmup: {} labeled documents collected from the first {rest_start} of {}",
        warmup.len(),
        stream.len()
    );
    let mut model = OsmtcModel::init(&warmup, params, 13).expect("warmup covers every label");
    let label_space = model.n_labels();
    let rest = &stream[rest_start..];
    let run = prequential_classification(&mut model, rest, label_space, 1000)
        .expect("prequential run");

    println!("evaluated {} documents:", run.tally.docs());
    for (name, value) in &run.report.final_metrics {
        println!("  {name}: {value:.4}");
    }

    // constant top-2-most-frequent-labels baseline on the same documents
    let mut freq: std::collections::BTreeMap<LabelId, usize> = Default::default();
    for item in rest {
        for &l in &item.truth_labels {
            *freq.entry(l).or_default() += 1;
        }
    }
    let mut by_freq: Vec<(usize, LabelId)> = freq.iter().map(|(&l, &n)| (n, l)).collect();
    by_freq.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let top2: Vec<LabelId> = by_freq.iter().take(2).map(|&(_, l)| l).collect();
    let mut baseline = MultiLabelTally::new(label_space).expect("label space");
    for item in rest {
        if !item.truth_labels.is_empty() {
            baseline.add_row(&item.doc.id, &item.truth_labels, &top2).unwrap();
        }
    }
    let base = multilabel_metrics(&baseline).unwrap();
    println!("top-2 baseline:");
    println!("  hamming_loss: {:.4}", base.hamming_loss);
    println!("  example_accuracy: {:.4}", base.example_accuracy);

    let truths: BTreeSet<usize> = rest.iter().map(|s| s.truth_labels.len()).collect();
    println!("truth label-set sizes seen: {truths:?}");
    println!("final active clusters: {}", model.state.n_clusters());
}
