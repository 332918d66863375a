//! Experiment pipelines: generation quality against gold LSS, metric/human
//! correlation under the three scoring settings, and cross-model faithfulness.

mod compare;
mod correlation;
mod generation;
mod report;
mod scorer;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::GeneratorError;
use crate::metrics::BleuConfig;
use crate::text::NormalizationPolicy;

pub use compare::{
    compare_models, load_corpus, CorpusEntry, ModelFaithfulnessReport, ModelRow, ScoreSummary,
};
pub use correlation::{eval_correlation, Cell, CorrelationInputs, CorrelationReport, MetricRow};
pub use generation::{
    eval_generation, GenerationQualityReport, OutputVariant, QualityScores, SystemRow,
};
pub use report::{emit_report, Report, ReportFormat};
pub use scorer::{
    BuiltinMetric, ExternalScorer, MetricColumn, ScorerError, ScorerPair, ScorerRegistry,
    SubprocessScorer,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Which pair of texts a metric is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalSetting {
    /// metric(claim, reference): the traditional setup.
    ReferenceClaim,
    /// metric(LSS, claim).
    LssClaim,
    /// metric(LSS*, claim).
    LssStarClaim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LssSource {
    HumanGold,
    Generated,
}

/// A report column: a setting plus, for the LSS settings, where the LSS came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SettingColumn {
    pub setting: EvalSetting,
    pub source: Option<LssSource>,
}

impl SettingColumn {
    pub const ALL: [SettingColumn; 5] = [
        SettingColumn {
            setting: EvalSetting::ReferenceClaim,
            source: None,
        },
        SettingColumn {
            setting: EvalSetting::LssClaim,
            source: Some(LssSource::HumanGold),
        },
        SettingColumn {
            setting: EvalSetting::LssClaim,
            source: Some(LssSource::Generated),
        },
        SettingColumn {
            setting: EvalSetting::LssStarClaim,
            source: Some(LssSource::HumanGold),
        },
        SettingColumn {
            setting: EvalSetting::LssStarClaim,
            source: Some(LssSource::Generated),
        },
    ];

    pub fn setting_label(&self) -> &'static str {
        match self.setting {
            EvalSetting::ReferenceClaim => "Reference-Claim",
            EvalSetting::LssClaim => "LSS-Claim",
            EvalSetting::LssStarClaim => "LSS*-Claim",
        }
    }

    pub fn source_label(&self) -> &'static str {
        match self.source {
            None => "-",
            Some(LssSource::HumanGold) => "Human",
            Some(LssSource::Generated) => "Generated",
        }
    }

    pub(crate) fn parse(setting: &str, source: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.setting_label() == setting && c.source_label() == source)
    }
}

impl fmt::Display for SettingColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            None => f.write_str(self.setting_label()),
            Some(_) => write!(f, "{} {}", self.setting_label(), self.source_label()),
        }
    }
}

/// Knobs shared by every pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub policy: NormalizationPolicy,
    pub bleu: BleuConfig,
    /// Worker threads for per-example scoring; 0 means one per core.
    pub jobs: usize,
}

impl EvalOptions {
    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, HarnessError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
