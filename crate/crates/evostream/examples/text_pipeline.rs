//! The preprocessing pipeline on its own: tokenizing, stopword removal,
//! optional suffix stemming, vocabulary interning, and TF-IDF weights.
//!
//! ```bash
//! cargo run --example text_pipeline
//! ```

use evostream::corpus::{
    preprocess, stem, tf_idf, LabelSet, PreprocessConfig, RawRecord, Vocabulary,
};

fn main() {
    let record = RawRecord {
        id: "t1".into(),
        text: "A regular intake of an Apple can improve your health and muscle stamina.".into(),
        labels: vec!["health".into()],
        reveal: true,
        topic: None,
    };

    let mut vocab = Vocabulary::new();
    let mut labels = LabelSet::new();

    let plain = preprocess(&record, &PreprocessConfig::default(), &mut vocab, &mut labels, 0);
    let tokens: Vec<&str> = plain.tokens.iter().map(|&t| vocab.term(t).unwrap()).collect();
    println!("tokens: {tokens:?}");

    let mut stemming = PreprocessConfig::default();
    stemming.stem = true;
    let mut vocab2 = Vocabulary::new();
    let stemmed = preprocess(&record, &stemming, &mut vocab2, &mut labels, 0);
    let tokens: Vec<&str> = stemmed.tokens.iter().map(|&t| vocab2.term(t).unwrap()).collect();
    println!("stemmed: {tokens:?}");
    for word in ["running", "stories", "explosive", "improvements"] {
        println!("stem({word}) = {}", stem(word));
    }

    // TF-IDF of each distinct token against a hypothetical corpus of
    // 1000 documents where the term occurs in 40
    for &(t, _) in &plain.term_counts {
        let weight = tf_idf(t, &plain, 1000, 40).unwrap();
        println!("tf-idf({}) = {weight:.3}", vocab.term(t).unwrap());
    }
    println!(
        "vocabulary holds {} terms, document carries label {:?}",
        vocab.len(),
        plain.labels
    );
}
