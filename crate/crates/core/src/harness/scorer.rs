//! Metric columns for the correlation experiment: the built-in overlap
//! metrics plus out-of-process scorers speaking a line-delimited JSON protocol.
//!
//! Protocol: one `{"id", "text_a", "text_b"}` object per line on stdin, one
//! `{"id", "score"}` per line on stdout, scores in [0, 1], same count and
//! order. `text_a` is the side being judged (claim or LSS), `text_b` the side
//! it is judged against (reference or claim).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{bleu, rouge_l, rouge_n, word_prf, BleuConfig};
use crate::text::TokenSequence;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer {0:?} is already registered")]
    Duplicate(String),
    #[error("unknown scorer {0:?}")]
    Unknown(String),
    #[error("scorer {name:?} protocol error: {message}")]
    Protocol { name: String, message: String },
}

fn protocol(name: &str, message: impl Into<String>) -> ScorerError {
    ScorerError::Protocol {
        name: name.to_owned(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuiltinMetric {
    Rouge1,
    Rouge2,
    RougeL,
    Bleu,
    WordF1,
}

impl BuiltinMetric {
    pub const ALL: [BuiltinMetric; 5] = [
        BuiltinMetric::Rouge1,
        BuiltinMetric::Rouge2,
        BuiltinMetric::RougeL,
        BuiltinMetric::Bleu,
        BuiltinMetric::WordF1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinMetric::Rouge1 => "ROUGE-1",
            BuiltinMetric::Rouge2 => "ROUGE-2",
            BuiltinMetric::RougeL => "ROUGE-L",
            BuiltinMetric::Bleu => "BLEU",
            BuiltinMetric::WordF1 => "Word-F1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase() == lower || m.short_name() == lower)
    }

    fn short_name(self) -> &'static str {
        match self {
            BuiltinMetric::Rouge1 => "rouge1",
            BuiltinMetric::Rouge2 => "rouge2",
            BuiltinMetric::RougeL => "rougel",
            BuiltinMetric::Bleu => "bleu",
            BuiltinMetric::WordF1 => "word-f1",
        }
    }

    /// ROUGE as F-measure, BLEU as its scalar, word overlap as F1.
    pub fn score(
        self,
        hypothesis: &TokenSequence,
        reference: &TokenSequence,
        bleu_config: BleuConfig,
    ) -> f64 {
        match self {
            BuiltinMetric::Rouge1 => rouge_n(hypothesis, reference, 1).value(),
            BuiltinMetric::Rouge2 => rouge_n(hypothesis, reference, 2).value(),
            BuiltinMetric::RougeL => rouge_l(hypothesis, reference).value(),
            BuiltinMetric::Bleu => bleu(hypothesis, reference, bleu_config).value(),
            BuiltinMetric::WordF1 => word_prf(hypothesis, reference).value(),
        }
    }
}

impl fmt::Display for BuiltinMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerPair {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
}

#[derive(Debug, Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
}

/// Scores text pairs; must return exactly one value in [0, 1] per pair.
pub trait ExternalScorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, pairs: &[ScorerPair]) -> Result<Vec<f64>, ScorerError>;
}

/// An external scorer run as a child process per batch.
#[derive(Debug, Clone)]
pub struct SubprocessScorer {
    name: String,
    program: String,
    args: Vec<String>,
}

impl SubprocessScorer {
    pub fn new(name: impl Into<String>, program: impl Into<String>, args: Vec<String>) -> Self {
        SubprocessScorer {
            name: name.into(),
            program: program.into(),
            args,
        }
    }

    /// Split a command line on whitespace: program followed by arguments.
    pub fn from_command_line(name: impl Into<String>, command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(Self::new(name, program, parts.collect()))
    }
}

impl ExternalScorer for SubprocessScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, pairs: &[ScorerPair]) -> Result<Vec<f64>, ScorerError> {
        let name = self.name.as_str();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| protocol(name, format!("cannot start {:?}: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut input = Vec::new();
        for p in pairs {
            serde_json::to_writer(&mut input, p).expect("pair serializes");
            input.push(b'\n');
        }
        // feed stdin from another thread so a chatty child cannot deadlock us
        let writer = std::thread::spawn(move || stdin.write_all(&input));

        let stdout = child.stdout.take().expect("piped stdout");
        let mut lines = Vec::with_capacity(pairs.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| protocol(name, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScoreLine = serde_json::from_str(&line)
                .map_err(|e| protocol(name, format!("bad output line {line:?}: {e}")))?;
            lines.push(parsed);
        }
        let status = child.wait().map_err(|e| protocol(name, e.to_string()))?;
        let write_result = writer.join().expect("stdin writer thread");
        if !status.success() {
            return Err(protocol(name, format!("exited with {status}")));
        }
        write_result.map_err(|e| protocol(name, format!("writing input: {e}")))?;
        check_scores(name, pairs, lines)
    }
}

fn check_scores(
    name: &str,
    pairs: &[ScorerPair],
    lines: Vec<ScoreLine>,
) -> Result<Vec<f64>, ScorerError> {
    if lines.len() != pairs.len() {
        return Err(protocol(
            name,
            format!("expected {} scores, got {}", pairs.len(), lines.len()),
        ));
    }
    pairs
        .iter()
        .zip(lines)
        .map(|(p, l)| {
            if l.id != p.id {
                return Err(protocol(
                    name,
                    format!("expected id {:?}, got {:?}", p.id, l.id),
                ));
            }
            if !(0.0..=1.0).contains(&l.score) {
                return Err(protocol(
                    name,
                    format!("score {} for {:?} outside [0, 1]", l.score, l.id),
                ));
            }
            Ok(l.score)
        })
        .collect()
}

/// One metric row of a correlation report.
#[derive(Clone)]
pub enum MetricColumn {
    Builtin(BuiltinMetric),
    External(Arc<dyn ExternalScorer>),
}

impl MetricColumn {
    pub fn name(&self) -> &str {
        match self {
            MetricColumn::Builtin(m) => m.name(),
            MetricColumn::External(s) => s.name(),
        }
    }
}

impl fmt::Debug for MetricColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricColumn({})", self.name())
    }
}

/// Named external scorers, resolvable alongside the built-in metrics.
#[derive(Default, Clone)]
pub struct ScorerRegistry {
    external: BTreeMap<String, Arc<dyn ExternalScorer>>,
    order: Vec<String>,
}

impl ScorerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Names must not collide with each other or with a built-in metric.
    pub fn register(
        &mut self,
        scorer: Arc<dyn ExternalScorer>,
    ) -> Result<MetricColumn, ScorerError> {
        let name = scorer.name().to_owned();
        if self.external.contains_key(&name) || BuiltinMetric::from_name(&name).is_some() {
            return Err(ScorerError::Duplicate(name));
        }
        self.order.push(name.clone());
        self.external.insert(name, scorer.clone());
        Ok(MetricColumn::External(scorer))
    }

    pub fn get(&self, name: &str) -> Result<MetricColumn, ScorerError> {
        if let Some(m) = BuiltinMetric::from_name(name) {
            return Ok(MetricColumn::Builtin(m));
        }
        self.external
            .get(name)
            .cloned()
            .map(MetricColumn::External)
            .ok_or_else(|| ScorerError::Unknown(name.to_owned()))
    }

    /// Built-in metrics in declaration order, then external scorers in registration order.
    pub fn all(&self) -> Vec<MetricColumn> {
        BuiltinMetric::ALL
            .into_iter()
            .map(MetricColumn::Builtin)
            .chain(
                self.order
                    .iter()
                    .map(|n| MetricColumn::External(self.external[n].clone())),
            )
            .collect()
    }
}
