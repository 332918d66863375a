//! Word-overlap metrics (ROUGE-N, ROUGE-L, sentence BLEU, bag-of-words P/R/F1)
//! and the LSS-BLEU faithfulness score.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_subsequence, lcs_length, TokenSequence};

/// A named metric value: either a precision/recall/F1 triple or a single scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricResult {
    pub name: &'static str,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub scalar: Option<f64>,
}

impl MetricResult {
    pub fn prf(name: &'static str, precision: f64, recall: f64) -> Self {
        MetricResult {
            name,
            precision: Some(precision),
            recall: Some(recall),
            f1: Some(harmonic_mean(precision, recall)),
            scalar: None,
        }
    }

    pub fn scalar(name: &'static str, value: f64) -> Self {
        MetricResult {
            name,
            precision: None,
            recall: None,
            f1: None,
            scalar: Some(value),
        }
    }

    /// The headline value: F1 for triples, the scalar otherwise.
    pub fn value(&self) -> f64 {
        self.f1.or(self.scalar).unwrap_or(0.0)
    }
}

fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped overlap between the n-gram bags of `hyp` and `reference`, plus
/// the n-gram totals of each side.
fn clipped_overlap(hyp: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let overlap = hyp_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let hyp_total = hyp.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    (overlap, hyp_total, ref_total)
}

/// ROUGE-N with clipped n-gram counts.
///
/// When neither side is long enough to contain an n-gram the comparison is
/// degenerate; two identical non-empty sequences then score 1, anything else 0.
///
/// # Panics
/// If `n == 0`.
pub fn rouge_n(hypothesis: &TokenSequence, reference: &TokenSequence, n: usize) -> MetricResult {
    assert!(n >= 1, "ROUGE-N order must be at least 1");
    let name = match n {
        1 => "rouge1",
        2 => "rouge2",
        3 => "rouge3",
        4 => "rouge4",
        _ => "rougeN",
    };
    let (overlap, hyp_total, ref_total) =
        clipped_overlap(hypothesis.tokens(), reference.tokens(), n);
    if hyp_total == 0 && ref_total == 0 {
        let same = !hypothesis.is_empty() && hypothesis == reference;
        let v = if same { 1.0 } else { 0.0 };
        return MetricResult::prf(name, v, v);
    }
    MetricResult::prf(name, ratio(overlap, hyp_total), ratio(overlap, ref_total))
}

/// ROUGE-L: LCS length over each side's length.
pub fn rouge_l(hypothesis: &TokenSequence, reference: &TokenSequence) -> MetricResult {
    let l = lcs_length(hypothesis, reference);
    MetricResult::prf(
        "rougeL",
        ratio(l, hypothesis.len()),
        ratio(l, reference.len()),
    )
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("BLEU max_n must be between 1 and 4, got {0}")]
pub struct InvalidMaxN(pub usize);

/// Sentence-BLEU settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuConfig {
    max_n: usize,
    /// Add-one smoothing for orders n >= 2 whose clipped match count is zero.
    pub smoothing: bool,
    pub brevity_penalty: bool,
}

impl BleuConfig {
    pub fn new(max_n: usize) -> Result<Self, InvalidMaxN> {
        if !(1..=4).contains(&max_n) {
            return Err(InvalidMaxN(max_n));
        }
        Ok(BleuConfig {
            max_n,
            ..BleuConfig::default()
        })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            smoothing: true,
            brevity_penalty: true,
        }
    }
}

/// Single-reference sentence BLEU.
///
/// Geometric mean of modified precisions for n = 1..min(max_n, |hypothesis|),
/// times the brevity penalty `exp(1 - |ref|/|hyp|)` when the hypothesis is shorter.
pub fn bleu(
    hypothesis: &TokenSequence,
    reference: &TokenSequence,
    config: BleuConfig,
) -> MetricResult {
    let hyp_len = hypothesis.len();
    if hyp_len == 0 {
        return MetricResult::scalar("bleu", 0.0);
    }
    let orders = config.max_n.min(hyp_len);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let (matched, total, _) = clipped_overlap(hypothesis.tokens(), reference.tokens(), n);
        let p = if matched > 0 {
            matched as f64 / total as f64
        } else if n >= 2 && config.smoothing {
            1.0 / (total as f64 + 1.0)
        } else {
            return MetricResult::scalar("bleu", 0.0);
        };
        log_sum += p.ln();
    }
    let geo = (log_sum / orders as f64).exp();
    let ref_len = reference.len();
    let bp = if config.brevity_penalty && hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    MetricResult::scalar("bleu", (geo * bp).clamp(0.0, 1.0))
}

/// Bag-of-words precision/recall/F1 using multiset intersection.
pub fn word_prf(prediction: &TokenSequence, gold: &TokenSequence) -> MetricResult {
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *gold_counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut common = 0;
    for t in prediction {
        if let Some(c) = gold_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    MetricResult::prf(
        "word",
        ratio(common, prediction.len()),
        ratio(common, gold.len()),
    )
}

/// Faithfulness on a 0 (no support) to 1 (complete support) scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaithfulnessScore(f64);

impl FaithfulnessScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// LSS-BLEU: BLEU with the LSS as hypothesis and the claim as reference.
///
/// An LSS that is not a subsequence of the claim is still scored, with a warning.
pub fn lss_faithfulness(
    claim: &TokenSequence,
    lss: &TokenSequence,
    config: BleuConfig,
) -> FaithfulnessScore {
    if !is_subsequence(lss, claim) {
        log::warn!("LSS is not a subsequence of its claim; scoring anyway");
    }
    FaithfulnessScore(bleu(lss, claim, config).value())
}
