//! Saves a trained classifier to a versioned snapshot and restores it
//! for a warm restart; the restored model predicts identically.
//!
//! ```bash
//! cargo run --example snapshot_restore
//! ```

use evostream::cf::ParamBlock;
use evostream::corpus::{preprocess, LabelSet, PreprocessConfig, RawRecord, Vocabulary};
use evostream::osmtc::OsmtcModel;

fn record(text: &str, labels: &[&str], id: &str) -> RawRecord {
    RawRecord {
        id: id.into(),
        text: text.into(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
        reveal: true,
        topic: None,
    }
}

fn main() {
    let cfg = PreprocessConfig::default();
    let mut vocab = Vocabulary::new();
    let mut labels = LabelSet::new();
    let mut warmup = Vec::new();
    for i in 0..6 {
        let rec = record("goal striker keeper penalty", &["sport"], &format!("s{i}"));
        warmup.push(preprocess(&rec, &cfg, &mut vocab, &mut labels, i));
    }
    for i in 0..6 {
        let rec = record("ballot senate vote coalition", &["politics"], &format!("p{i}"));
        warmup.push(preprocess(&rec, &cfg, &mut vocab, &mut labels, 6 + i));
    }

    let mut params = ParamBlock::osmtc_defaults();
    params.min_clusters_per_label = 2;
    let model = OsmtcModel::init(&warmup, params, 7).expect("warmup covers both labels");

    let path = std::env::temp_dir().join(format!("evostream-snapshot-{}.json", std::process::id()));
    model.save_snapshot(&path, &vocab, &labels).unwrap();
    println!(
        "saved {} clusters over {} labels to {}",
        model.state.n_clusters(),
        model.n_labels(),
        path.display()
    );

    let (restored, mut vocab2, mut labels2) = OsmtcModel::load_snapshot(&path).unwrap();
    let probe_rec = record("penalty goal", &[], "probe");
    let probe_a = preprocess(&probe_rec, &cfg, &mut vocab, &mut labels, 100);
    let probe_b = preprocess(&probe_rec, &cfg, &mut vocab2, &mut labels2, 100);
    let before = model.predict(&probe_a);
    let after = restored.predict(&probe_b);
    let name = |l| labels.name(l).unwrap();
    println!(
        "prediction before {:?}, after restore {:?}",
        before.labels.iter().map(|&l| name(l)).collect::<Vec<_>>(),
        after.labels.iter().map(|&l| name(l)).collect::<Vec<_>>(),
    );
    assert_eq!(before.labels, after.labels);
    std::fs::remove_file(path).ok();
}
