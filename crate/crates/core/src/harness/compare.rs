use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalOptions, HarnessError};
use crate::dataset::{read_jsonl, within_length};
use crate::generator::{generate, GenerationInput, GeneratorSpec};
use crate::metrics::lss_faithfulness;
use crate::text::tokenize;

/// A source document with one summary per model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub document: String,
    pub summaries: BTreeMap<String, String>,
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    read_jsonl(path).map_err(|e| HarnessError::Input(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl ScoreSummary {
    fn of(scores: &[f64]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Some(ScoreSummary {
            mean: super::mean(&sorted),
            min: sorted[0],
            median,
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub corpus: String,
    pub model: String,
    /// Entries carrying a summary from this model.
    pub size: usize,
    pub scored: usize,
    pub length_filtered: usize,
    pub failed: usize,
    /// LSS-BLEU over the scored entries; absent when none survived.
    pub summary: Option<ScoreSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFaithfulnessReport {
    pub generator: String,
    pub max_tokens: usize,
    pub rows: Vec<ModelRow>,
}

/// Replay/capture key for one (entry, model) pair.
pub fn pair_id(entry_id: &str, model: &str) -> String {
    format!("{entry_id}::{model}")
}

/// LSS-BLEU of each model's summaries against their source documents.
///
/// Pairs over `max_tokens` are dropped before generation; failed generations
/// are excluded from the statistics. Models are reported in name order.
pub fn compare_models(
    corpora: &[(String, Vec<CorpusEntry>)],
    generator: &GeneratorSpec,
    max_tokens: usize,
    options: &EvalOptions,
) -> Result<ModelFaithfulnessReport, HarnessError> {
    let policy = options.policy;
    let mut rows = Vec::new();
    for (corpus, entries) in corpora {
        let models: BTreeSet<&String> = entries.iter().flat_map(|e| e.summaries.keys()).collect();

        let mut ids = Vec::new();
        let mut kept: Vec<(&CorpusEntry, &String)> = Vec::new();
        let mut stats: BTreeMap<&String, (usize, usize)> = BTreeMap::new(); // (size, filtered)
        for entry in entries {
            for (model, summary) in &entry.summaries {
                let s = stats.entry(model).or_default();
                s.0 += 1;
                if within_length(&entry.document, summary, max_tokens, policy) {
                    ids.push(pair_id(&entry.id, model));
                    kept.push((entry, model));
                } else {
                    s.1 += 1;
                }
            }
        }
        let inputs: Vec<GenerationInput> = kept
            .iter()
            .zip(&ids)
            .map(|((entry, model), id)| GenerationInput {
                id,
                reference: &entry.document,
                claim: &entry.summaries[*model],
            })
            .collect();
        let results = generate(generator, &inputs, policy)?;

        let mut scores: BTreeMap<&String, Vec<f64>> = BTreeMap::new();
        let mut failures: BTreeMap<&String, usize> = BTreeMap::new();
        for (((_, model), input), result) in kept.iter().zip(&inputs).zip(&results) {
            if result.failed() {
                *failures.entry(model).or_default() += 1;
                continue;
            }
            let claim = tokenize(input.claim, policy);
            let score = lss_faithfulness(&claim, &result.repaired_lss, options.bleu).value();
            scores.entry(model).or_default().push(score);
        }

        for model in models {
            let (size, length_filtered) = stats[model];
            let model_scores = scores.get(model).map(Vec::as_slice).unwrap_or(&[]);
            rows.push(ModelRow {
                corpus: corpus.clone(),
                model: model.clone(),
                size,
                scored: model_scores.len(),
                length_filtered,
                failed: failures.get(model).copied().unwrap_or(0),
                summary: ScoreSummary::of(model_scores),
            });
        }
    }
    Ok(ModelFaithfulnessReport {
        generator: generator.kind().to_owned(),
        max_tokens,
        rows,
    })
}
