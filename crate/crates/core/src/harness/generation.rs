use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean, EvalOptions, HarnessError};
use crate::dataset::{AnnotatedExample, Split};
use crate::generator::{generate, GenerationInput, GeneratorSpec};
use crate::metrics::{bleu, rouge_l, rouge_n, word_prf, BleuConfig};
use crate::text::{tokenize, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputVariant {
    /// The model text as returned, tokenized.
    Raw,
    /// Projected onto the claim.
    Repaired,
}

impl OutputVariant {
    pub fn label(self) -> &'static str {
        match self {
            OutputVariant::Raw => "raw",
            OutputVariant::Repaired => "repaired",
        }
    }
}

/// Predicted LSS scored against the gold LSS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub bleu: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl QualityScores {
    pub const NAMES: [&'static str; 7] = [
        "ROUGE-1",
        "ROUGE-2",
        "ROUGE-L",
        "BLEU",
        "Precision",
        "Recall",
        "F1",
    ];

    fn uniform(v: f64) -> Self {
        QualityScores {
            rouge1: v,
            rouge2: v,
            rouge_l: v,
            bleu: v,
            precision: v,
            recall: v,
            f1: v,
        }
    }

    /// Both empty counts as agreement on "not supported" (all 1); exactly one
    /// empty scores 0.
    pub fn compute(
        prediction: &TokenSequence,
        gold: &TokenSequence,
        bleu_config: BleuConfig,
    ) -> Self {
        match (prediction.is_empty(), gold.is_empty()) {
            (true, true) => return Self::uniform(1.0),
            (true, false) | (false, true) => return Self::uniform(0.0),
            _ => {}
        }
        let word = word_prf(prediction, gold);
        QualityScores {
            rouge1: rouge_n(prediction, gold, 1).value(),
            rouge2: rouge_n(prediction, gold, 2).value(),
            rouge_l: rouge_l(prediction, gold).value(),
            bleu: bleu(prediction, gold, bleu_config).value(),
            precision: word.precision.unwrap_or(0.0),
            recall: word.recall.unwrap_or(0.0),
            f1: word.value(),
        }
    }

    pub fn values(&self) -> [f64; 7] {
        [
            self.rouge1,
            self.rouge2,
            self.rouge_l,
            self.bleu,
            self.precision,
            self.recall,
            self.f1,
        ]
    }

    fn average(all: &[QualityScores]) -> Self {
        let col = |f: fn(&QualityScores) -> f64| mean(&all.iter().map(f).collect::<Vec<_>>());
        QualityScores {
            rouge1: col(|s| s.rouge1),
            rouge2: col(|s| s.rouge2),
            rouge_l: col(|s| s.rouge_l),
            bleu: col(|s| s.bleu),
            precision: col(|s| s.precision),
            recall: col(|s| s.recall),
            f1: col(|s| s.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub system: String,
    pub variant: OutputVariant,
    pub n: usize,
    /// Examples whose generation failed; scored as empty output.
    pub failed: usize,
    /// Examples whose raw output was not already a subsequence of the claim.
    pub repaired: usize,
    pub scores: QualityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationQualityReport {
    pub split: Option<Split>,
    pub rows: Vec<SystemRow>,
}

/// Generate an LSS per gold example with each system and average the overlap
/// with the gold LSS, for raw and repaired outputs.
pub fn eval_generation(
    gold: &[AnnotatedExample],
    systems: &[(String, GeneratorSpec)],
    split: Option<Split>,
    options: &EvalOptions,
) -> Result<GenerationQualityReport, HarnessError> {
    let examples: Vec<&AnnotatedExample> = gold
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .collect();
    if examples.is_empty() {
        return Err(HarnessError::Input(match split {
            Some(s) => format!("no examples in the {s} split"),
            None => "no examples".into(),
        }));
    }
    let policy = options.policy;
    let gold_lss: Vec<TokenSequence> = examples.iter().map(|e| tokenize(&e.lss, policy)).collect();
    let inputs: Vec<GenerationInput> = examples.iter().map(|e| GenerationInput::from(*e)).collect();
    let pool = options.pool()?;

    let mut rows = Vec::with_capacity(systems.len() * 2);
    for (name, spec) in systems {
        let results = generate(spec, &inputs, policy)?;
        let failed = results.iter().filter(|r| r.failed()).count();
        let repaired = results.iter().filter(|r| r.was_repaired).count();
        for variant in [OutputVariant::Raw, OutputVariant::Repaired] {
            let per_example: Vec<QualityScores> = pool.install(|| {
                results
                    .par_iter()
                    .zip(gold_lss.par_iter())
                    .map(|(r, g)| {
                        let pred = match variant {
                            OutputVariant::Raw => tokenize(&r.raw_output, policy),
                            OutputVariant::Repaired => r.repaired_lss.clone(),
                        };
                        QualityScores::compute(&pred, g, options.bleu)
                    })
                    .collect()
            });
            rows.push(SystemRow {
                system: name.clone(),
                variant,
                n: per_example.len(),
                failed,
                repaired,
                scores: QualityScores::average(&per_example),
            });
        }
    }
    Ok(GenerationQualityReport { split, rows })
}
