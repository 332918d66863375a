//! Correlation coefficients and inter-annotator agreement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{tokenize, NormalizationPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("paired vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("rating {value} outside the 1..={scale} scale")]
    OutOfScale { value: u32, scale: u32 },
    #[error("empty input")]
    EmptyInput,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson product-moment correlation.
///
/// A constant vector has no variance and yields `DegenerateInput`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput(
            "constant vector has zero variance",
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) -> ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Quadratic weighted kappa between two raters on a 1..=`scale` ordinal scale.
pub fn quadratic_weighted_kappa(a: &[u32], b: &[u32], scale: u32) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if scale < 2 {
        return Err(StatsError::DegenerateInput(
            "rating scale needs at least two levels",
        ));
    }
    let k = scale as usize;
    let mut observed = vec![0.0f64; k * k];
    let mut hist_a = vec![0.0f64; k];
    let mut hist_b = vec![0.0f64; k];
    for (&ra, &rb) in a.iter().zip(b) {
        for r in [ra, rb] {
            if r < 1 || r > scale {
                return Err(StatsError::OutOfScale { value: r, scale });
            }
        }
        let (i, j) = (ra as usize - 1, rb as usize - 1);
        observed[i * k + j] += 1.0;
        hist_a[i] += 1.0;
        hist_b[j] += 1.0;
    }
    let n = a.len() as f64;
    let denom_w = ((k - 1) * (k - 1)) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let d = i as f64 - j as f64;
            let w = d * d / denom_w;
            num += w * observed[i * k + j];
            den += w * hist_a[i] * hist_b[j] / n;
        }
    }
    if den == 0.0 {
        return Err(StatsError::DegenerateInput("expected disagreement is zero"));
    }
    Ok(1.0 - num / den)
}

/// Mean QWK over the three annotator pairs of triple-rated items.
pub fn mean_pairwise_qwk(ratings: &[[u32; 3]], scale: u32) -> Result<f64, StatsError> {
    let mut sum = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let a: Vec<u32> = ratings.iter().map(|r| r[i]).collect();
        let b: Vec<u32> = ratings.iter().map(|r| r[j]).collect();
        sum += quadratic_weighted_kappa(&a, &b, scale)?;
    }
    Ok(sum / 3.0)
}

/// How three annotations of one item relate after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementClass {
    AllSame,
    TwoSame,
    AllDifferent,
}

/// Classify three normalized annotations.
pub fn classify_triple(triple: [&str; 3], policy: NormalizationPolicy) -> AgreementClass {
    let [a, b, c] = triple.map(|s| tokenize(s, policy));
    match (a == b, b == c, a == c) {
        (true, true, _) => AgreementClass::AllSame,
        (false, false, false) => AgreementClass::AllDifferent,
        _ => AgreementClass::TwoSame,
    }
}

/// Percentages of triples in each agreement class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementTally {
    pub all_same: f64,
    pub two_same: f64,
    pub all_different: f64,
    pub count: usize,
}

pub fn agreement_tally<S: AsRef<str>>(
    triples: &[[S; 3]],
    policy: NormalizationPolicy,
) -> Result<AgreementTally, StatsError> {
    if triples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut counts = [0usize; 3];
    for t in triples {
        let class = classify_triple([t[0].as_ref(), t[1].as_ref(), t[2].as_ref()], policy);
        counts[class as usize] += 1;
    }
    let n = triples.len() as f64;
    let pct = |c: usize| 100.0 * c as f64 / n;
    Ok(AgreementTally {
        all_same: pct(counts[0]),
        two_same: pct(counts[1]),
        all_different: pct(counts[2]),
        count: triples.len(),
    })
}
