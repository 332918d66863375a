//! Word tokenization and the subsequence / LCS machinery every metric builds on.

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

/// How raw text is normalized before tokens are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
    /// Detach leading/trailing punctuation into single-character tokens.
    pub strip_punctuation: bool,
}

impl NormalizationPolicy {
    /// No case folding, no punctuation handling: plain whitespace split.
    pub const RAW: NormalizationPolicy = NormalizationPolicy {
        lowercase: false,
        strip_punctuation: false,
    };
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidToken {
    Empty { index: usize },
    ContainsWhitespace { index: usize, token: String },
}

impl fmt::Display for InvalidToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidToken::Empty { index } => write!(f, "token {index} is empty"),
            InvalidToken::ContainsWhitespace { index, token } => {
                write!(f, "token {index} ({token:?}) contains whitespace")
            }
        }
    }
}

impl std::error::Error for InvalidToken {}

/// An ordered list of non-empty, whitespace-free word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn empty() -> Self {
        TokenSequence(Vec::new())
    }

    /// Whitespace split with no normalization. Handy for fixtures.
    pub fn split(text: &str) -> Self {
        TokenSequence(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl TryFrom<Vec<String>> for TokenSequence {
    type Error = InvalidToken;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        for (index, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(InvalidToken::Empty { index });
            }
            if token.chars().any(char::is_whitespace) {
                return Err(InvalidToken::ContainsWhitespace {
                    index,
                    token: token.clone(),
                });
            }
        }
        Ok(TokenSequence(tokens))
    }
}

impl From<TokenSequence> for Vec<String> {
    fn from(seq: TokenSequence) -> Self {
        seq.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Unicode general category P* (connector, dash, open, close, initial, final, other).
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Split `text` into word tokens under `policy`.
///
/// Splitting is on Unicode whitespace. With `strip_punctuation`, every
/// punctuation character at the start or end of a word becomes its own
/// token; punctuation inside a word (`18:30`, `co-founder`) is kept.
pub fn tokenize(text: &str, policy: NormalizationPolicy) -> TokenSequence {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = if policy.lowercase {
            std::borrow::Cow::Owned(word.to_lowercase())
        } else {
            std::borrow::Cow::Borrowed(word)
        };
        // Lowercasing never introduces whitespace, but keep the invariant airtight.
        for word in word.split_whitespace() {
            if policy.strip_punctuation {
                push_detached(word, &mut out);
            } else {
                out.push(word.to_owned());
            }
        }
    }
    TokenSequence(out)
}

fn push_detached(word: &str, out: &mut Vec<String>) {
    let start = word
        .char_indices()
        .find(|&(_, c)| !is_punctuation(c))
        .map(|(i, _)| i);
    let Some(start) = start else {
        out.extend(word.chars().map(String::from));
        return;
    };
    let end = word
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punctuation(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(word.len());

    out.extend(word[..start].chars().map(String::from));
    out.push(word[start..end].to_owned());
    out.extend(word[end..].chars().map(String::from));
}

/// True iff `candidate` is obtainable from `base` by deleting tokens.
pub fn is_subsequence(candidate: &TokenSequence, base: &TokenSequence) -> bool {
    let mut base = base.iter();
    candidate
        .iter()
        .all(|token| base.by_ref().any(|b| b == token))
}

/// Length of the longest common subsequence, in O(min(|a|,|b|)) memory.
pub fn lcs_length(a: &TokenSequence, b: &TokenSequence) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// One longest common subsequence of `a` and `b`.
///
/// Among equally long candidates the one whose matched positions in `a` are
/// lexicographically smallest is returned (leftmost-in-a).
pub fn lcs(a: &TokenSequence, b: &TokenSequence) -> TokenSequence {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return TokenSequence::empty();
    }
    // suffix[i][j] = LCS length of a[i..] and b[j..], row-major with width m+1
    let width = m + 1;
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if a.0[i] == b.0[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }

    let mut out = Vec::with_capacity(suffix[0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a.0[i] == b.0[j] {
            out.push(a.0[i].clone());
            i += 1;
            j += 1;
        } else if suffix[i * width + j + 1] == suffix[i * width + j] {
            // a[i] may still be matched further along b
            j += 1;
        } else {
            i += 1;
        }
    }
    TokenSequence(out)
}
