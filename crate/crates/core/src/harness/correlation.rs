use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scorer::{MetricColumn, ScorerPair};
use super::{EvalOptions, EvalSetting, HarnessError, LssSource, SettingColumn};
use crate::dataset::AnnotatedExample;
use crate::generator::{generate, GenerationInput, GeneratorSpec};
use crate::stats::{pearson, spearman, StatsError};
use crate::text::{tokenize, TokenSequence};

pub struct CorrelationInputs<'a> {
    pub examples: &'a [AnnotatedExample],
    pub generator: &'a GeneratorSpec,
    /// Produces LSS* for the generated LSS*-Claim column; that column reports
    /// an error cell when absent.
    pub lss_star_generator: Option<&'a GeneratorSpec>,
    pub metrics: &'a [MetricColumn],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Cell {
    fn unavailable(reason: &str) -> Self {
        Cell {
            n: 0,
            pearson: None,
            spearman: None,
            error: Some(reason.to_owned()),
        }
    }

    fn from_scores(scores: &[f64], ratings: &[f64]) -> Self {
        let describe = |e: StatsError| e.to_string();
        let p = pearson(scores, ratings).map_err(describe);
        let s = spearman(scores, ratings).map_err(describe);
        let error = p.as_ref().err().or(s.as_ref().err()).cloned();
        Cell {
            n: scores.len(),
            pearson: p.ok(),
            spearman: s.ok(),
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    /// Parallel to [`CorrelationReport::columns`].
    pub cells: Vec<Cell>,
}

/// Correlation of every metric with human ratings, per scoring setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub generator: String,
    pub rated: usize,
    pub unrated_skipped: usize,
    pub generation_failures: usize,
    pub columns: Vec<SettingColumn>,
    pub rows: Vec<MetricRow>,
}

/// The texts one setting compares, for the examples it covers.
struct PairSet {
    /// Indices into the rated examples.
    members: Vec<usize>,
    hyp: Vec<TokenSequence>,
    reference: Vec<TokenSequence>,
    hyp_text: Vec<String>,
    ref_text: Vec<String>,
}

impl PairSet {
    fn new() -> Self {
        PairSet {
            members: vec![],
            hyp: vec![],
            reference: vec![],
            hyp_text: vec![],
            ref_text: vec![],
        }
    }

    fn push(
        &mut self,
        idx: usize,
        hyp: TokenSequence,
        hyp_text: String,
        reference: TokenSequence,
        ref_text: &str,
    ) {
        self.members.push(idx);
        self.hyp.push(hyp);
        self.hyp_text.push(hyp_text);
        self.reference.push(reference);
        self.ref_text.push(ref_text.to_owned());
    }
}

/// Score each metric under each setting and correlate against the ratings.
///
/// Examples without a rating are skipped. A cell that cannot be computed
/// (constant column, missing LSS*) carries an error instead of failing the report.
pub fn eval_correlation(
    inputs: &CorrelationInputs<'_>,
    options: &EvalOptions,
) -> Result<CorrelationReport, HarnessError> {
    let policy = options.policy;
    let rated: Vec<&AnnotatedExample> = inputs
        .examples
        .iter()
        .filter(|e| e.rating.is_some())
        .collect();
    if rated.len() < 2 {
        return Err(HarnessError::Input(format!(
            "need at least 2 rated examples, found {}",
            rated.len()
        )));
    }
    let ratings: Vec<f64> = rated.iter().map(|e| f64::from(e.rating.unwrap())).collect();

    let gen_inputs: Vec<GenerationInput> =
        rated.iter().map(|e| GenerationInput::from(*e)).collect();
    let generated = generate(inputs.generator, &gen_inputs, policy)?;
    let mut generation_failures = generated.iter().filter(|r| r.failed()).count();
    let generated_star = match inputs.lss_star_generator {
        Some(spec) => {
            let out = generate(spec, &gen_inputs, policy)?;
            generation_failures += out.iter().filter(|r| r.failed()).count();
            Some(out)
        }
        None => None,
    };

    let claims: Vec<TokenSequence> = rated.iter().map(|e| tokenize(&e.claim, policy)).collect();
    let mut sets: Vec<Option<PairSet>> = Vec::with_capacity(SettingColumn::ALL.len());
    for column in SettingColumn::ALL {
        let mut set = PairSet::new();
        for (i, ex) in rated.iter().enumerate() {
            let claim = claims[i].clone();
            match (column.setting, column.source) {
                (EvalSetting::ReferenceClaim, _) => set.push(
                    i,
                    claim,
                    ex.claim.clone(),
                    tokenize(&ex.reference, policy),
                    &ex.reference,
                ),
                (EvalSetting::LssClaim, Some(LssSource::HumanGold)) => set.push(
                    i,
                    tokenize(&ex.lss, policy),
                    ex.lss.clone(),
                    claim,
                    &ex.claim,
                ),
                (EvalSetting::LssClaim, _) => {
                    let lss = generated[i].repaired_lss.clone();
                    let text = lss.join();
                    set.push(i, lss, text, claim, &ex.claim)
                }
                (EvalSetting::LssStarClaim, Some(LssSource::HumanGold)) => {
                    if let Some(star) = &ex.lss_star {
                        set.push(i, tokenize(star, policy), star.clone(), claim, &ex.claim)
                    }
                }
                (EvalSetting::LssStarClaim, _) => {
                    // LSS* may add filler words, so the raw output is scored unrepaired
                    if let Some(out) = &generated_star {
                        let r = &out[i];
                        let star = if r.failed() {
                            TokenSequence::empty()
                        } else {
                            tokenize(&r.raw_output, policy)
                        };
                        let text = star.join();
                        set.push(i, star, text, claim, &ex.claim)
                    }
                }
            }
        }
        let available = match (column.setting, column.source) {
            (EvalSetting::LssStarClaim, Some(LssSource::Generated)) => generated_star.is_some(),
            _ => true,
        };
        sets.push(available.then_some(set));
    }

    let pool = options.pool()?;
    let mut rows = Vec::with_capacity(inputs.metrics.len());
    for metric in inputs.metrics {
        let mut cells = Vec::with_capacity(sets.len());
        for set in &sets {
            let Some(set) = set else {
                cells.push(Cell::unavailable("no LSS* generator configured"));
                continue;
            };
            if set.members.len() < 2 {
                let mut cell = Cell::unavailable("fewer than 2 examples in this setting");
                cell.n = set.members.len();
                cells.push(cell);
                continue;
            }
            let scores = score_set(metric, set, rated.as_slice(), options, &pool)?;
            let r: Vec<f64> = set.members.iter().map(|&i| ratings[i]).collect();
            cells.push(Cell::from_scores(&scores, &r));
        }
        rows.push(MetricRow {
            metric: metric.name().to_owned(),
            cells,
        });
    }

    Ok(CorrelationReport {
        generator: inputs.generator.kind().to_owned(),
        rated: rated.len(),
        unrated_skipped: inputs.examples.len() - rated.len(),
        generation_failures,
        columns: SettingColumn::ALL.to_vec(),
        rows,
    })
}

fn score_set(
    metric: &MetricColumn,
    set: &PairSet,
    rated: &[&AnnotatedExample],
    options: &EvalOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<f64>, HarnessError> {
    match metric {
        MetricColumn::Builtin(m) => Ok(pool.install(|| {
            set.hyp
                .par_iter()
                .zip(set.reference.par_iter())
                .map(|(h, r)| m.score(h, r, options.bleu))
                .collect()
        })),
        MetricColumn::External(scorer) => {
            let pairs: Vec<ScorerPair> = set
                .members
                .iter()
                .enumerate()
                .map(|(k, &i)| ScorerPair {
                    id: rated[i].id.clone(),
                    text_a: set.hyp_text[k].clone(),
                    text_b: set.ref_text[k].clone(),
                })
                .collect();
            Ok(scorer.score(&pairs)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{example, Split};
    use crate::harness::scorer::{BuiltinMetric, ExternalScorer, ScorerError};
    use std::sync::Arc;

    fn rated(id: &str, claim: &str, lss: &str, rating: u8) -> AnnotatedExample {
        let mut e = example(id, "some unrelated reference text", claim, lss);
        e.rating = Some(rating);
        e.split = Split::Test;
        e
    }

    fn builtins() -> Vec<MetricColumn> {
        BuiltinMetric::ALL
            .into_iter()
            .map(MetricColumn::Builtin)
            .collect()
    }

    fn dataset() -> Vec<AnnotatedExample> {
        vec![
            rated("a", "w1 w2 w3 w4", "", 1),
            rated("b", "w1 w2 w3 w4", "w1", 2),
            rated("c", "w1 w2 w3 w4", "w1 w2", 3),
            rated("d", "w1 w2 w3 w4", "w1 w2 w3", 4),
            rated("e", "w1 w2 w3 w4", "w1 w2 w3 w4", 5),
        ]
    }

    #[test]
    fn identity_generator_gives_constant_column() {
        let data = dataset();
        let metrics = builtins();
        let inputs = CorrelationInputs {
            examples: &data,
            generator: &GeneratorSpec::Identity,
            lss_star_generator: None,
            metrics: &metrics,
        };
        let report = eval_correlation(&inputs, &EvalOptions::default()).unwrap();
        assert_eq!(report.columns.len(), 5);
        let rouge_l = &report.rows[2];
        assert_eq!(rouge_l.metric, "ROUGE-L");
        // human LSS coverage rises with the rating
        let human = &rouge_l.cells[1];
        assert_eq!(human.n, 5);
        assert!(human.pearson.unwrap() > 0.9);
        assert!((human.spearman.unwrap() - 1.0).abs() < 1e-12);
        // identity LSS scores 1 everywhere: degenerate
        assert!(rouge_l.cells[2]
            .error
            .as_deref()
            .unwrap()
            .contains("degenerate"));
        // no LSS* anywhere
        assert_eq!(rouge_l.cells[3].n, 0);
        assert!(rouge_l.cells[4].error.is_some());
    }

    #[test]
    fn unrated_examples_skipped() {
        let mut data = dataset();
        data[0].rating = None;
        let metrics = builtins();
        let inputs = CorrelationInputs {
            examples: &data,
            generator: &GeneratorSpec::Empty,
            lss_star_generator: None,
            metrics: &metrics,
        };
        let report = eval_correlation(&inputs, &EvalOptions::default()).unwrap();
        assert_eq!((report.rated, report.unrated_skipped), (4, 1));
        assert!(report.rows.iter().all(|r| r.cells[0].n == 4));
    }

    #[test]
    fn too_few_rated() {
        let data = vec![rated("a", "x", "x", 3)];
        let metrics = builtins();
        let inputs = CorrelationInputs {
            examples: &data,
            generator: &GeneratorSpec::Empty,
            lss_star_generator: None,
            metrics: &metrics,
        };
        assert!(matches!(
            eval_correlation(&inputs, &EvalOptions::default()),
            Err(HarnessError::Input(_))
        ));
    }

    struct Half;
    impl ExternalScorer for Half {
        fn name(&self) -> &str {
            "half"
        }
        fn score(&self, pairs: &[ScorerPair]) -> Result<Vec<f64>, ScorerError> {
            Ok(vec![0.5; pairs.len()])
        }
    }

    #[test]
    fn constant_external_scorer_is_degenerate_per_cell() {
        let data = dataset();
        let metrics = vec![MetricColumn::External(Arc::new(Half))];
        let inputs = CorrelationInputs {
            examples: &data,
            generator: &GeneratorSpec::Extractive,
            lss_star_generator: Some(&GeneratorSpec::Identity),
            metrics: &metrics,
        };
        let report = eval_correlation(&inputs, &EvalOptions::default()).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.metric, "half");
        for (i, cell) in row.cells.iter().enumerate() {
            if i == 3 {
                continue; // no human LSS* in this dataset
            }
            assert!(
                cell.error.as_deref().unwrap().contains("degenerate"),
                "{i}: {cell:?}"
            );
            assert_eq!(cell.n, 5);
        }
    }
}
