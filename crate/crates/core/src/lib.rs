//! Faithfulness evaluation through the longest supported subsequence (LSS) of
//! a claim: the words of the claim that its reference actually supports.
//!
//! Modules, bottom up:
//! - [`text`]: tokenization, subsequence test, LCS
//! - [`metrics`]: ROUGE-N/L, BLEU, word P/R/F1, LSS-BLEU
//! - [`stats`]: Pearson, Spearman, quadratic weighted kappa, agreement tallies
//! - [`dataset`]: JSONL records, cleaning, balancing, adjudication, histograms
//! - [`generator`]: LSS producers (extractive, remote, replay) with subsequence repair
//! - [`harness`]: the evaluation pipelines and report writers

pub mod dataset;
pub mod generator;
pub mod harness;
pub mod metrics;
pub mod stats;
pub mod text;

pub use metrics::{bleu, lss_faithfulness, rouge_l, rouge_n, word_prf, BleuConfig, MetricResult};
pub use text::{is_subsequence, lcs, lcs_length, tokenize, NormalizationPolicy, TokenSequence};
