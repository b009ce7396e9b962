//! Ground-truthed synthetic stream generation.
//!
//! Each topic owns a dedicated block of core terms plus a shared
//! background pool; documents draw roughly 70% core / 30% background
//! tokens with lengths around `mean_doc_len`. Drift points replace a
//! fraction of a topic's core terms with fresh ones at a given stream
//! position, so the emitted ground truth stays exact. Single-label
//! streams get the sixteen-chunk shuffle; multi-label streams draw label
//! sets from a label co-occurrence matrix and mix the labels' term
//! distributions. Generation is deterministic under the seed.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stream::RawRecord;

/// Fraction of tokens drawn from the topic's core terms.
const CORE_DRAW: f64 = 0.7;
const SHUFFLE_CHUNKS: usize = 16;
/// Zipf exponent for the within-core term draw: every topic gets a few
/// high-frequency anchor terms and a long tail, like real text.
const CORE_ZIPF_EXPONENT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("inconsistent spec: {0}")]
    Inconsistent(String),
}

/// One scheduled term-distribution change: at stream `position`, `topic`
/// replaces `fraction` of its core terms with fresh ones.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriftPoint {
    pub topic: usize,
    pub position: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LabelMode {
    /// One label per document (the topic); applies the sixteen-chunk
    /// shuffle so topics appear and disappear over the stream.
    Single,
    /// Label sets drawn around `cardinality` labels per document using a
    /// topic-by-topic co-occurrence matrix (empty means uniform);
    /// `reveal_fraction` of documents carry visible labels.
    Multi {
        cardinality: f64,
        #[serde(default)]
        cooccurrence: Vec<Vec<f64>>,
        #[serde(default = "default_reveal")]
        reveal_fraction: f64,
    },
}

fn default_reveal() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_topics: usize,
    pub vocab_size: usize,
    pub core_terms_per_topic: usize,
    pub docs_per_topic: usize,
    pub mean_doc_len: f64,
    #[serde(default)]
    pub drift_points: Vec<DriftPoint>,
    pub label_mode: LabelMode,
    pub seed: u64,
}

impl SynthSpec {
    pub fn stream_len(&self) -> usize {
        self.n_topics * self.docs_per_topic
    }

    fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Inconsistent(msg));
        if self.n_topics == 0 || self.docs_per_topic == 0 || self.core_terms_per_topic == 0 {
            return fail("topics, docs_per_topic and core_terms_per_topic must be positive".into());
        }
        if self.mean_doc_len < 1.0 {
            return fail("mean_doc_len must be at least 1".into());
        }
        let total = self.stream_len();
        let mut fresh_needed = 0usize;
        for dp in &self.drift_points {
            if !(0.0..=1.0).contains(&dp.fraction) {
                return fail(format!("drift fraction {} outside [0,1]", dp.fraction));
            }
            if dp.topic >= self.n_topics {
                return fail(format!("drift topic {} out of range", dp.topic));
            }
            if dp.position >= total {
                return fail(format!(
                    "drift position {} beyond stream length {total}",
                    dp.position
                ));
            }
            fresh_needed += replaced_count(self.core_terms_per_topic, dp.fraction);
        }
        let reserved = self.n_topics * self.core_terms_per_topic + fresh_needed;
        if reserved + 1 > self.vocab_size {
            return fail(format!(
                "core terms ({}) plus drift replacements ({fresh_needed}) exceed vocab {} \
                 (no background terms left)",
                self.n_topics * self.core_terms_per_topic,
                self.vocab_size
            ));
        }
        if let LabelMode::Multi { cardinality, cooccurrence, reveal_fraction } = &self.label_mode {
            if *cardinality < 1.0 {
                return fail("label cardinality must be at least 1".into());
            }
            if !(0.0..=1.0).contains(reveal_fraction) {
                return fail("reveal_fraction outside [0,1]".into());
            }
            if !cooccurrence.is_empty()
                && (cooccurrence.len() != self.n_topics
                    || cooccurrence.iter().any(|row| row.len() != self.n_topics))
            {
                return fail("label co-occurrence matrix must be n_topics x n_topics".into());
            }
        }
        Ok(())
    }
}

fn replaced_count(core: usize, fraction: f64) -> usize {
    ((core as f64) * fraction).round() as usize
}

/// Generates the full stream with embedded ground truth: every record
/// carries its true `topic` and, in multi-label mode, its label set.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<RawRecord>, SynthError> {
    spec.validate()?;
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let total = spec.stream_len();
    let core = spec.core_terms_per_topic;

    // Vocabulary layout: per-topic core blocks, then background, then
    // the fresh reserve consumed by drift replacements.
    let mut core_sets: Vec<Vec<usize>> = (0..spec.n_topics)
        .map(|t| (t * core..(t + 1) * core).collect())
        .collect();
    let fresh_total: usize = spec
        .drift_points
        .iter()
        .map(|dp| replaced_count(core, dp.fraction))
        .sum();
    let background_start = spec.n_topics * core;
    let background: Vec<usize> = (background_start..spec.vocab_size - fresh_total).collect();
    let mut fresh_cursor = spec.vocab_size - fresh_total;

    // Arrival schedule: primary topic per final stream position.
    let mut schedule: Vec<usize> = (0..spec.n_topics)
        .flat_map(|t| std::iter::repeat(t).take(spec.docs_per_topic))
        .collect();
    let multi = matches!(spec.label_mode, LabelMode::Multi { .. });
    if multi {
        schedule.shuffle(&mut rng);
    } else {
        shuffle_in_chunks(&mut schedule, SHUFFLE_CHUNKS, &mut rng);
    }

    // Drifts fire as the final stream position passes them.
    let mut drifts = spec.drift_points.clone();
    drifts.sort_by_key(|dp| (dp.position, dp.topic));
    let mut next_drift = 0usize;

    let core_cdf = zipf_cdf(core, CORE_ZIPF_EXPONENT);

    let mut out = Vec::with_capacity(total);
    for pos in 0..total {
        while next_drift < drifts.len() && drifts[next_drift].position <= pos {
            let dp = drifts[next_drift];
            next_drift += 1;
            let k = replaced_count(core, dp.fraction);
            let set = &mut core_sets[dp.topic];
            let mut slots: Vec<usize> = (0..set.len()).collect();
            slots.shuffle(&mut rng);
            for &slot in slots.iter().take(k) {
                set[slot] = fresh_cursor;
                fresh_cursor += 1;
            }
        }

        let topic = schedule[pos];
        let (labels, reveal) = match &spec.label_mode {
            LabelMode::Single => (vec![topic], false),
            LabelMode::Multi { cardinality, cooccurrence, reveal_fraction } => {
                let set = draw_label_set(topic, *cardinality, cooccurrence, spec.n_topics, &mut rng);
                let reveal = rng.random::<f64>() < *reveal_fraction;
                (set, reveal)
            }
        };

        let len = poisson(&mut rng, spec.mean_doc_len).max(1);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let term = if rng.random::<f64>() < CORE_DRAW {
                let label = labels[rng.random_range(0..labels.len())];
                core_sets[label][zipf_rank(&core_cdf, rng.random::<f64>())]
            } else {
                background[rng.random_range(0..background.len())]
            };
            words.push(format!("w{term:05}"));
        }

        out.push(RawRecord {
            id: format!("d{pos:06}"),
            text: words.join(" "),
            labels: if multi {
                labels.iter().map(|&l| format!("L{l:02}")).collect()
            } else {
                Vec::new()
            },
            reveal,
            topic: Some(topic as u32),
        });
    }
    Ok(out)
}

/// Splits into `n` near-equal contiguous chunks and shuffles the chunk
/// order, preserving the document multiset.
fn shuffle_in_chunks(schedule: &mut Vec<usize>, n: usize, rng: &mut StdRng) {
    let total = schedule.len();
    if total == 0 {
        return;
    }
    let base = total / n;
    let rem = total % n;
    let mut chunks: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < rem);
        chunks.push(schedule[start..start + len].to_vec());
        start += len;
    }
    chunks.shuffle(rng);
    *schedule = chunks.concat();
}

fn draw_label_set(
    primary: usize,
    cardinality: f64,
    cooc: &[Vec<f64>],
    n_topics: usize,
    rng: &mut StdRng,
) -> Vec<usize> {
    let base = cardinality.floor() as usize;
    let frac = cardinality - base as f64;
    let mut target = base + usize::from(rng.random::<f64>() < frac);
    target = target.clamp(1, n_topics);

    let mut labels = vec![primary];
    while labels.len() < target {
        let weights: Vec<f64> = (0..n_topics)
            .map(|j| {
                if labels.contains(&j) {
                    0.0
                } else if cooc.is_empty() {
                    1.0
                } else {
                    cooc[primary][j].max(0.0)
                }
            })
            .collect();
        let sum: f64 = weights.iter().sum();
        let pick = if sum <= 0.0 {
            // co-occurrence row exhausted: fall back to uniform
            let open: Vec<usize> = (0..n_topics).filter(|j| !labels.contains(j)).collect();
            open[rng.random_range(0..open.len())]
        } else {
            let mut x = rng.random::<f64>() * sum;
            let mut chosen = n_topics - 1;
            for (j, w) in weights.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                if x < *w {
                    chosen = j;
                    break;
                }
                x -= w;
            }
            chosen
        };
        if !labels.contains(&pick) {
            labels.push(pick);
        }
    }
    labels
}

fn zipf_cdf(n: usize, exponent: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for rank in 1..=n {
        acc += 1.0 / (rank as f64).powf(exponent);
        cdf.push(acc);
    }
    let total = acc;
    for v in &mut cdf {
        *v /= total;
    }
    cdf
}

fn zipf_rank(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

/// Knuth's product-of-uniforms Poisson sampler; fine for small means.
fn poisson(rng: &mut StdRng, mean: f64) -> usize {
    let limit = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
        if k > 10_000 {
            return k; // mean pathologically large
        }
    }
}
