//! Generates a ground-truthed synthetic stream from a TOML spec — the
//! same path the `evostream generate` subcommand takes — then reads it
//! back and prints a few stream statistics.
//!
//! ```bash
//! cargo run --example generate_stream
//! ```

use std::collections::BTreeMap;

use evostream::cli::cmd_generate;
use evostream::corpus::read_stream;

fn main() {
    let dir = std::env::temp_dir().join(format!("evostream-generate-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec_path = dir.join("spec.toml");
    std::fs::write(
        &spec_path,
        r#"n_topics = 8
vocab_size = 600
core_terms_per_topic = 6
docs_per_topic = 125
mean_doc_len = 7.0
seed = 5

# one topic swaps half its core terms measured at stream position 400
[[drift_points]]
topic = 2
position = 400
fraction = 0.5

[label_mode]
mode = "single"
"#,
    )
    .unwrap();

    let out = dir.join("stream.jsonl");
    let n = cmd_generate(&spec_path, &out).expect("generation succeeds");
    println!("wrote {n} documents to {}", out.display());

    let mut per_topic: BTreeMap<u32, usize> = BTreeMap::new();
    let mut tokens = 0usize;
    for rec in read_stream(&out).unwrap() {
        let rec = rec.unwrap();
        *per_topic.entry(rec.topic.unwrap()).or_default() += 1;
        tokens += rec.text.split(' ').count();
    }
    println!("documents per topic: {per_topic:?}");
    println!("mean document length: {:.2}", tokens as f64 / n as f64);
    std::fs::remove_dir_all(dir).ok();
}
