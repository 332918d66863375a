//! LSS producers. Whatever a strategy emits is projected back onto the claim,
//! so every result is a valid subsequence of it.

mod prompt;
mod remote;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{read_jsonl, write_jsonl, AnnotatedExample, DatasetError};
use crate::text::{lcs, tokenize, NormalizationPolicy, TokenSequence};

pub use prompt::{PromptTemplate, TemplateError};
pub use remote::{RemoteSettings, DEFAULT_TOKEN_ENV};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator: {0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("replay file has duplicate id {0:?}")]
    DuplicateReplayId(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Which strategy produces the LSS.
#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    /// LCS of claim and reference: the lexical lower bound.
    Extractive,
    Remote(RemoteSettings),
    /// Previously captured outputs, looked up by example id.
    Replay {
        path: PathBuf,
    },
    /// The claim itself (everything supported).
    Identity,
    /// Nothing supported.
    Empty,
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Extractive => "extractive",
            GeneratorSpec::Remote(_) => "remote",
            GeneratorSpec::Replay { .. } => "replay",
            GeneratorSpec::Identity => "identity",
            GeneratorSpec::Empty => "empty",
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        match self {
            GeneratorSpec::Remote(s) if s.endpoint.trim().is_empty() => Err(
                GeneratorError::Invalid("remote generator needs an endpoint".into()),
            ),
            GeneratorSpec::Remote(s) if s.max_in_flight == 0 => Err(GeneratorError::Invalid(
                "max in-flight requests must be positive".into(),
            )),
            GeneratorSpec::Replay { path } if !path.is_file() => Err(GeneratorError::Invalid(
                format!("replay file {} does not exist", path.display()),
            )),
            _ => Ok(()),
        }
    }
}

/// One (reference, claim) pair to produce an LSS for.
#[derive(Debug, Clone, Copy)]
pub struct GenerationInput<'a> {
    pub id: &'a str,
    pub reference: &'a str,
    pub claim: &'a str,
}

impl<'a> From<&'a AnnotatedExample> for GenerationInput<'a> {
    fn from(ex: &'a AnnotatedExample) -> Self {
        GenerationInput {
            id: &ex.id,
            reference: &ex.reference,
            claim: &ex.claim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub id: String,
    pub raw_output: String,
    /// Always a subsequence of the tokenized claim.
    pub repaired_lss: TokenSequence,
    pub was_repaired: bool,
    pub latency_ms: u64,
    /// Per-example failure (remote error, missing replay id); the LSS is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GenerationResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    fn from_output(
        id: &str,
        raw_output: String,
        claim: &TokenSequence,
        latency: Duration,
        policy: NormalizationPolicy,
    ) -> Self {
        let raw_tokens = tokenize(&raw_output, policy);
        let repaired_lss = lcs(&raw_tokens, claim);
        GenerationResult {
            id: id.to_owned(),
            was_repaired: repaired_lss != raw_tokens,
            raw_output,
            repaired_lss,
            latency_ms: latency.as_millis() as u64,
            error: None,
        }
    }

    fn failure(id: &str, error: String) -> Self {
        GenerationResult {
            id: id.to_owned(),
            raw_output: String::new(),
            repaired_lss: TokenSequence::empty(),
            was_repaired: false,
            latency_ms: 0,
            error: Some(error),
        }
    }
}

/// Longest subsequence of the claim whose tokens appear, in order, in the reference.
pub fn extractive_lss(reference: &TokenSequence, claim: &TokenSequence) -> TokenSequence {
    lcs(claim, reference)
}

/// Map arbitrary model output onto the longest subsequence of the claim it agrees with.
pub fn project_to_subsequence(
    raw_output: &str,
    claim: &TokenSequence,
    policy: NormalizationPolicy,
) -> TokenSequence {
    lcs(&tokenize(raw_output, policy), claim)
}

/// A captured model output, one per line in a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub id: String,
    pub raw_output: String,
    #[serde(default)]
    pub latency_ms: u64,
}

pub fn load_replay(path: &Path) -> Result<HashMap<String, ReplayRecord>, GeneratorError> {
    let records: Vec<ReplayRecord> = read_jsonl(path)?;
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map.contains_key(&r.id) {
            return Err(GeneratorError::DuplicateReplayId(r.id));
        }
        map.insert(r.id.clone(), r);
    }
    Ok(map)
}

/// Produce one result per input, in input order.
///
/// Per-example failures are recorded in [`GenerationResult::error`] and do not
/// abort the batch. A remote batch is captured to `capture` when configured.
pub fn generate(
    spec: &GeneratorSpec,
    inputs: &[GenerationInput<'_>],
    policy: NormalizationPolicy,
) -> Result<Vec<GenerationResult>, GeneratorError> {
    spec.validate()?;
    let claims: Vec<TokenSequence> = inputs.iter().map(|i| tokenize(i.claim, policy)).collect();
    let results = match spec {
        GeneratorSpec::Identity => inputs
            .iter()
            .zip(&claims)
            .map(|(i, c)| {
                GenerationResult::from_output(i.id, i.claim.to_owned(), c, Duration::ZERO, policy)
            })
            .collect(),
        GeneratorSpec::Empty => inputs
            .iter()
            .zip(&claims)
            .map(|(i, c)| {
                GenerationResult::from_output(i.id, String::new(), c, Duration::ZERO, policy)
            })
            .collect(),
        GeneratorSpec::Extractive => inputs
            .iter()
            .zip(&claims)
            .map(|(i, c)| {
                let lss = extractive_lss(&tokenize(i.reference, policy), c);
                GenerationResult::from_output(i.id, lss.join(), c, Duration::ZERO, policy)
            })
            .collect(),
        GeneratorSpec::Replay { path } => {
            let replay = load_replay(path)?;
            inputs
                .iter()
                .zip(&claims)
                .map(|(i, c)| match replay.get(i.id) {
                    Some(r) => GenerationResult::from_output(
                        i.id,
                        r.raw_output.clone(),
                        c,
                        Duration::from_millis(r.latency_ms),
                        policy,
                    ),
                    None => {
                        GenerationResult::failure(i.id, format!("missing replay id {:?}", i.id))
                    }
                })
                .collect()
        }
        GeneratorSpec::Remote(settings) => {
            let results = generate_remote(settings, inputs, &claims, policy)?;
            if let Some(capture) = &settings.capture {
                write_capture(capture, &results)?;
            }
            results
        }
    };
    Ok(results)
}

fn generate_remote(
    settings: &RemoteSettings,
    inputs: &[GenerationInput<'_>],
    claims: &[TokenSequence],
    policy: NormalizationPolicy,
) -> Result<Vec<GenerationResult>, GeneratorError> {
    let client = remote::RemoteClient::new(settings);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.max_in_flight)
        .build()
        .map_err(|e| GeneratorError::Pool(e.to_string()))?;
    let results = pool.install(|| {
        inputs
            .par_iter()
            .zip(claims.par_iter())
            .map(|(i, c)| match client.complete(i.reference, i.claim) {
                Ok((text, latency)) => {
                    GenerationResult::from_output(i.id, text, c, latency, policy)
                }
                Err(e) => GenerationResult::failure(i.id, format!("remote error: {e}")),
            })
            .collect::<Vec<_>>()
    });
    let failed = results.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        log::warn!("{failed} of {} remote requests failed", results.len());
    }
    Ok(results)
}

/// Write successful results as a replay file.
pub fn write_capture(path: &Path, results: &[GenerationResult]) -> Result<(), GeneratorError> {
    let records: Vec<ReplayRecord> = results
        .iter()
        .filter(|r| !r.failed())
        .map(|r| ReplayRecord {
            id: r.id.clone(),
            raw_output: r.raw_output.clone(),
            latency_ms: r.latency_ms,
        })
        .collect();
    write_jsonl(path, &records)?;
    Ok(())
}
