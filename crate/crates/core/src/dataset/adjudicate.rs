use serde::{Deserialize, Serialize};

use super::{AnnotatedExample, DatasetError, Split};
use crate::stats::AgreementClass;
use crate::text::{tokenize, NormalizationPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator_id: String,
    pub lss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lss_star: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
}

/// A reference/claim pair with its individual annotations, before consensus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAnnotationRecord {
    pub id: String,
    pub reference: String,
    pub claim: String,
    pub annotations: Vec<Annotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Consensus(AnnotatedExample),
    /// No two annotations agree; needs a human decision.
    Unresolved(RawAnnotationRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Adjudication {
    pub class: AgreementClass,
    pub outcome: Outcome,
}

/// Index of the first member of the first normalized-equal pair, if any.
fn majority<T: PartialEq>(values: &[T; 3]) -> Option<usize> {
    [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .find(|&(i, j)| values[i] == values[j])
        .map(|(i, _)| i)
}

fn median_rating(annotations: &[Annotation]) -> Option<u8> {
    let mut ratings: Vec<u8> = annotations.iter().filter_map(|a| a.rating).collect();
    if ratings.is_empty() {
        return None;
    }
    ratings.sort_unstable();
    // lower median for an even count keeps the value on the scale
    Some(ratings[(ratings.len() - 1) / 2])
}

/// Majority vote over three annotations of one record.
///
/// The LSS majority decides the outcome. LSS* takes its own majority when one
/// exists, otherwise the LSS* of the annotation that supplied the LSS. Text is
/// always copied verbatim from an input annotation.
pub fn adjudicate(
    record: &RawAnnotationRecord,
    policy: NormalizationPolicy,
) -> Result<Adjudication, DatasetError> {
    let anns: &[Annotation; 3] =
        record
            .annotations
            .as_slice()
            .try_into()
            .map_err(|_| DatasetError::Arity {
                id: record.id.clone(),
                got: record.annotations.len(),
            })?;

    let lss_tokens = anns.each_ref().map(|a| tokenize(&a.lss, policy));
    let class = crate::stats::classify_triple(anns.each_ref().map(|a| a.lss.as_str()), policy);
    let Some(winner) = majority(&lss_tokens) else {
        return Ok(Adjudication {
            class,
            outcome: Outcome::Unresolved(record.clone()),
        });
    };

    let star_tokens = anns
        .each_ref()
        .map(|a| a.lss_star.as_deref().map(|s| tokenize(s, policy)));
    let lss_star = match majority(&star_tokens) {
        Some(i) if anns[i].lss_star.is_some() => anns[i].lss_star.clone(),
        _ => anns[winner].lss_star.clone(),
    };

    Ok(Adjudication {
        class,
        outcome: Outcome::Consensus(AnnotatedExample {
            id: record.id.clone(),
            reference: record.reference.clone(),
            claim: record.claim.clone(),
            lss: anns[winner].lss.clone(),
            lss_star,
            rating: median_rating(anns),
            split: record.split.unwrap_or(Split::Test),
        }),
    })
}
