use std::fmt;

use serde::Serialize;

use super::AnnotatedExample;
use crate::text::{is_subsequence, tokenize, NormalizationPolicy};

pub const BUCKETS: usize = 12;

/// Distribution of |LSS| / |claim| over a dataset.
///
/// Bucket 0 holds r = 0 (empty LSS); buckets 1..=10 hold ((k-1)/10, k/10];
/// bucket 11 holds exact full support (equal length and LSS ⊆ claim). An
/// equal-length LSS that is not a subsequence falls in (0.9, 1.0].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioHistogram {
    pub counts: [usize; BUCKETS],
    /// Examples whose claim has no tokens.
    pub empty_claims: usize,
    /// Examples whose LSS is longer than the claim (r > 1).
    pub over_length: usize,
}

impl RatioHistogram {
    pub fn label(bucket: usize) -> String {
        match bucket {
            0 => "0".to_string(),
            11 => "1".to_string(),
            k => format!("({:.1},{:.1}]", (k - 1) as f64 / 10.0, k as f64 / 10.0),
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Bucket index for an LSS of `lss_len` tokens against a claim of `claim_len` tokens.
    pub fn bucket(lss_len: usize, claim_len: usize, supported: bool) -> Option<usize> {
        if claim_len == 0 || lss_len > claim_len {
            return None;
        }
        if lss_len == 0 {
            return Some(0);
        }
        if lss_len == claim_len && supported {
            return Some(BUCKETS - 1);
        }
        // ceil(10 * l / c), exact in integers
        Some((10 * lss_len).div_ceil(claim_len))
    }
}

impl fmt::Display for RatioHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(f, "{}\t{}", Self::label(i), c)?;
        }
        writeln!(f, "empty_claims\t{}", self.empty_claims)?;
        writeln!(f, "over_length\t{}", self.over_length)
    }
}

pub fn ratio_histogram(
    examples: &[AnnotatedExample],
    policy: NormalizationPolicy,
) -> RatioHistogram {
    let mut hist = RatioHistogram {
        counts: [0; BUCKETS],
        empty_claims: 0,
        over_length: 0,
    };
    for ex in examples {
        let claim = tokenize(&ex.claim, policy);
        let lss = tokenize(&ex.lss, policy);
        if claim.is_empty() {
            hist.empty_claims += 1;
            continue;
        }
        let supported = lss.len() == claim.len() && is_subsequence(&lss, &claim);
        match RatioHistogram::bucket(lss.len(), claim.len(), supported) {
            Some(b) => hist.counts[b] += 1,
            None => hist.over_length += 1,
        }
    }
    hist
}

/// How many fully-supported (LSS == claim) examples [`balance`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BalanceTarget {
    /// Keep as many as the mean count of the other non-empty buckets (rounded).
    #[default]
    MeanOfOtherBuckets,
    /// Keep at most this many.
    Keep(usize),
    /// Keep enough that they form this fraction of the balanced dataset.
    Proportion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub input: usize,
    pub removed: usize,
    pub kept_full_support: usize,
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input: {}", self.input)?;
        writeln!(f, "removed: {}", self.removed)?;
        writeln!(f, "kept_full_support: {}", self.kept_full_support)
    }
}

/// Drop examples whose normalized LSS equals the normalized claim until the
/// full-support bucket meets `target`. The earliest such examples are kept.
pub fn balance(
    examples: Vec<AnnotatedExample>,
    target: BalanceTarget,
    policy: NormalizationPolicy,
) -> (Vec<AnnotatedExample>, BalanceReport) {
    let input = examples.len();
    let full: Vec<bool> = examples
        .iter()
        .map(|ex| {
            let claim = tokenize(&ex.claim, policy);
            !claim.is_empty() && tokenize(&ex.lss, policy) == claim
        })
        .collect();
    let n_full = full.iter().filter(|&&f| f).count();

    let keep = match target {
        BalanceTarget::Keep(k) => k,
        BalanceTarget::Proportion(p) => {
            let others = (input - n_full) as f64;
            let p = p.clamp(0.0, 1.0);
            if p >= 1.0 {
                n_full
            } else {
                (p * others / (1.0 - p)).round() as usize
            }
        }
        BalanceTarget::MeanOfOtherBuckets => {
            let hist = ratio_histogram(&examples, policy);
            let others: Vec<usize> = hist.counts[..BUCKETS - 1]
                .iter()
                .copied()
                .filter(|&c| c > 0)
                .collect();
            if others.is_empty() {
                0
            } else {
                (others.iter().sum::<usize>() as f64 / others.len() as f64).round() as usize
            }
        }
    }
    .min(n_full);

    let mut seen = 0;
    let out: Vec<AnnotatedExample> = examples
        .into_iter()
        .zip(full)
        .filter(|(_, is_full)| {
            if !is_full {
                return true;
            }
            seen += 1;
            seen <= keep
        })
        .map(|(ex, _)| ex)
        .collect();
    let report = BalanceReport {
        input,
        removed: input - out.len(),
        kept_full_support: keep,
    };
    (out, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthFilterReport {
    pub input: usize,
    pub removed: usize,
    pub removed_fraction: f64,
    pub max_tokens: usize,
}

impl fmt::Display for LengthFilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input: {}", self.input)?;
        writeln!(f, "removed: {}", self.removed)?;
        writeln!(f, "removed_fraction: {}", self.removed_fraction)?;
        writeln!(f, "max_tokens: {}", self.max_tokens)
    }
}

/// Drop examples whose reference plus claim exceed `max_tokens` word tokens.
pub fn filter_by_length(
    examples: Vec<AnnotatedExample>,
    max_tokens: usize,
    policy: NormalizationPolicy,
) -> (Vec<AnnotatedExample>, LengthFilterReport) {
    let input = examples.len();
    let out: Vec<_> = examples
        .into_iter()
        .filter(|ex| within_length(&ex.reference, &ex.claim, max_tokens, policy))
        .collect();
    let removed = input - out.len();
    let report = LengthFilterReport {
        input,
        removed,
        removed_fraction: if input == 0 {
            0.0
        } else {
            removed as f64 / input as f64
        },
        max_tokens,
    };
    (out, report)
}

pub(crate) fn within_length(
    reference: &str,
    claim: &str,
    max_tokens: usize,
    policy: NormalizationPolicy,
) -> bool {
    tokenize(reference, policy).len() + tokenize(claim, policy).len() <= max_tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::example;

    fn p() -> NormalizationPolicy {
        NormalizationPolicy::default()
    }

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn histogram_edges() {
        let empty: Vec<_> = (0..4)
            .map(|i| example(&i.to_string(), "r", "a b c", ""))
            .collect();
        let h = ratio_histogram(&empty, p());
        assert_eq!(h.counts[0], 4);
        assert_eq!(h.total(), 4);

        let full: Vec<_> = (0..3)
            .map(|i| example(&i.to_string(), "r", "a b c", "a b c"))
            .collect();
        let h = ratio_histogram(&full, p());
        assert_eq!(h.counts[11], 3);

        // 3 of 10 tokens -> (0.2, 0.3]
        let h = ratio_histogram(&[example("x", "r", &words(10), &words(3))], p());
        assert_eq!(h.counts[3], 1);
        assert_eq!(RatioHistogram::label(3), "(0.2,0.3]");
    }

    #[test]
    fn histogram_side_counts() {
        let data = vec![
            example("a", "r", "", ""),
            example("b", "r", "x y", "x y z"),
            example("c", "r", "x y", "y x"),
        ];
        let h = ratio_histogram(&data, p());
        assert_eq!((h.empty_claims, h.over_length), (1, 1));
        // equal length but out of order: not full support
        assert_eq!(h.counts[10], 1);
        assert_eq!(h.total() + h.empty_claims + h.over_length, data.len());
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(RatioHistogram::bucket(1, 10, true), Some(1));
        assert_eq!(RatioHistogram::bucket(9, 10, true), Some(9));
        assert_eq!(RatioHistogram::bucket(1, 3, true), Some(4));
        assert_eq!(RatioHistogram::bucket(10, 11, true), Some(10));
    }

    #[test]
    fn balance_without_full_support_is_noop() {
        let data = vec![example("a", "r", "x y", "x"), example("b", "r", "x y", "")];
        let (out, report) = balance(data.clone(), BalanceTarget::default(), p());
        assert_eq!(out, data);
        assert_eq!(report.removed, 0);
    }

    #[test]
    fn balance_to_mean_of_other_buckets() {
        let claim = words(10);
        let mut data = vec![];
        for i in 0..6 {
            data.push(example(&format!("full{i}"), "r", &claim, &claim));
        }
        // four partial examples, one in each of four distinct buckets
        for (i, k) in [0usize, 2, 5, 8].iter().enumerate() {
            data.push(example(&format!("part{i}"), "r", &claim, &words(*k)));
        }
        let (out, report) = balance(data, BalanceTarget::default(), p());
        assert_eq!(report.removed, 5);
        assert_eq!(out.len(), 5);
        assert_eq!(ratio_histogram(&out, p()).counts[11], 1);
        assert_eq!(out[0].id, "full0");
    }

    #[test]
    fn balance_explicit_targets() {
        let claim = words(4);
        let mut data: Vec<_> = (0..4)
            .map(|i| example(&format!("f{i}"), "r", &claim, &claim))
            .collect();
        data.extend((0..4).map(|i| example(&format!("p{i}"), "r", &claim, "w0")));
        let (out, report) = balance(data.clone(), BalanceTarget::Keep(3), p());
        assert_eq!((out.len(), report.removed), (7, 1));
        // 50% of the result: keep 4 alongside 4 others
        let (_, report) = balance(data.clone(), BalanceTarget::Proportion(0.5), p());
        assert_eq!(report.removed, 0);
        let (_, report) = balance(data, BalanceTarget::Proportion(0.2), p());
        assert_eq!(report.kept_full_support, 1);
    }

    #[test]
    fn length_filter() {
        let short: Vec<_> = (0..10)
            .map(|i| example(&i.to_string(), "a b", "c", ""))
            .collect();
        let (out, r) = filter_by_length(short.clone(), 512, p());
        assert_eq!((out.len(), r.removed_fraction), (10, 0.0));

        let mut mixed = short;
        mixed[4].reference = words(600);
        let (out, r) = filter_by_length(mixed, 512, p());
        assert_eq!(out.len(), 9);
        assert!((r.removed_fraction - 0.1).abs() < 1e-12);
    }
}
