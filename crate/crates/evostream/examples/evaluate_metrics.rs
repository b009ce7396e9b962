//! The evaluation metrics on their own: clustering quality from a
//! class-by-cluster contingency table, and multi-label prediction
//! quality from per-document tallies.
//!
//! ```bash
//! cargo run --example evaluate_metrics
//! ```

use std::collections::BTreeSet;

use evostream::cf::{ClusterId, LabelId};
use evostream::eval::{clustering_metrics, multilabel_metrics, ContingencyTable, MultiLabelTally};

fn main() {
    // an 80%-pure two-cluster split of two classes
    let mut table = ContingencyTable::new();
    for (class, cluster, count) in [(0u32, 0u64, 8), (0, 1, 2), (1, 0, 1), (1, 1, 9)] {
        for _ in 0..count {
            table.add(class, ClusterId(cluster));
        }
    }
    let scores = clustering_metrics(&table).unwrap();
    println!("clustering over {} documents:", table.total());
    println!("  purity       {:.4}", scores.purity);
    println!("  homogeneity  {:.4}", scores.homogeneity);
    println!("  completeness {:.4}", scores.completeness);
    println!("  v-measure    {:.4}", scores.v_measure);
    println!("  nmi          {:.4}", scores.nmi);

    // three multi-label predictions over a 4-label space
    let mut tally = MultiLabelTally::new(4).unwrap();
    let rows: [(&str, &[u32], &[u32]); 3] = [
        ("d1", &[0, 2], &[0, 2]),    // exact
        ("d2", &[1], &[1, 3]),       // one spurious label
        ("d3", &[2, 3], &[0]),       // fully wrong
    ];
    for (id, truth, predicted) in rows {
        let truth: BTreeSet<LabelId> = truth.iter().map(|&l| LabelId(l)).collect();
        let predicted: Vec<LabelId> = predicted.iter().map(|&l| LabelId(l)).collect();
        let contribution = tally.add_row(id, &truth, &predicted).unwrap();
        println!("{id}: hamming contribution {contribution:.4}");
    }
    let ml = multilabel_metrics(&tally).unwrap();
    println!("multi-label over {} documents:", tally.docs());
    println!("  hamming loss        {:.4}", ml.hamming_loss);
    println!("  example accuracy    {:.4}", ml.example_accuracy);
    println!("  micro recall        {:.4}", ml.micro_recall);
    println!("  micro recall (doc-normalized variant) {:.4}", ml.micro_recall_doc_normalized);
}
