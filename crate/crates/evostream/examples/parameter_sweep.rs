//! Runs a small concentration-parameter grid over a synthetic stream —
//! the `evostream sweep` path — and prints the resulting table.
//!
//! ```bash
//! cargo run --release --example parameter_sweep
//! ```

use evostream::cli::{cmd_generate, cmd_sweep, ModelKind, RunConfig};

fn main() {
    let dir = std::env::temp_dir().join(format!("evostream-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("spec.toml");
    std::fs::write(
        &spec,
        r#"n_topics = 8
vocab_size = 800
core_terms_per_topic = 20
docs_per_topic = 150
mean_doc_len = 8.0
seed = 31

[label_mode]
mode = "single"
"#,
    )
    .unwrap();
    let stream = dir.join("stream.jsonl");
    cmd_generate(&spec, &stream).unwrap();

    let mut base = RunConfig::new(ModelKind::Osdm, stream, dir.join("runs"));
    base.window = u64::MAX;
    let (rows, csv) = cmd_sweep(&base, "alpha=9e-3,9e-2,9e-1;beta=4e-5,4e-4").unwrap();
    println!("{} runs, table at {}", rows.len(), csv.display());
    println!("alpha      beta     nmi     homogeneity  runtime");
    for row in &rows {
        let value = |k: &str| {
            row.overrides
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.clone())
                .unwrap_or_default()
        };
        match &row.metrics {
            Some(m) => println!(
                "{:<10} {:<8} {:.4}  {:.4}       {} ms",
                value("alpha"),
                value("beta"),
                m["nmi"],
                m["homogeneity"],
                row.runtime_ms
            ),
            None => println!(
                "{:<10} {:<8} failed: {}",
                value("alpha"),
                value("beta"),
                row.error.as_deref().unwrap_or("?")
            ),
        }
    }
    std::fs::remove_dir_all(dir).ok();
}
