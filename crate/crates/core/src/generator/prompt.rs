use std::path::Path;

use thiserror::Error;

const REFERENCE_SLOT: &str = "<reference>";
const CLAIM_SLOT: &str = "<claim>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template must contain `{slot}` exactly once, found {count}")]
    Slot { slot: &'static str, count: usize },
    #[error("unknown built-in template {0:?}")]
    UnknownBuiltin(String),
    #[error("cannot read template {path}: {message}")]
    Read { path: String, message: String },
}

/// Prompt text with one `<reference>` and one `<claim>` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub const BUILTINS: [&'static str; 2] = ["t5", "instruct-lss"];

    pub fn new(text: impl Into<String>) -> Result<Self, TemplateError> {
        let text = text.into();
        for slot in [REFERENCE_SLOT, CLAIM_SLOT] {
            let count = text.matches(slot).count();
            if count != 1 {
                return Err(TemplateError::Slot { slot, count });
            }
        }
        Ok(PromptTemplate { text })
    }

    /// Plain-text template file; a single trailing newline is dropped.
    pub fn from_file(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::new(strip_final_newline(&text))
    }

    /// `t5`: the bare fine-tuning input layout. `instruct-lss`: instructions
    /// and four worked examples for instruction-following models.
    pub fn builtin(name: &str) -> Result<Self, TemplateError> {
        let raw = match name {
            "t5" => include_str!("../../templates/t5.txt"),
            "instruct-lss" => include_str!("../../templates/instruct_lss.txt"),
            other => return Err(TemplateError::UnknownBuiltin(other.to_string())),
        };
        Self::new(strip_final_newline(raw))
    }

    /// A built-in name or a path to a template file.
    pub fn resolve(name_or_path: &str) -> Result<Self, TemplateError> {
        if Self::BUILTINS.contains(&name_or_path) {
            Self::builtin(name_or_path)
        } else {
            Self::from_file(Path::new(name_or_path))
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Fill both slots in one pass, so slot markers inside the inserted
    /// reference or claim are left alone.
    pub fn render(&self, reference: &str, claim: &str) -> String {
        let r = self
            .text
            .find(REFERENCE_SLOT)
            .expect("checked at construction");
        let c = self.text.find(CLAIM_SLOT).expect("checked at construction");
        let (first, first_len, first_val, second, second_len, second_val) = if r < c {
            (
                r,
                REFERENCE_SLOT.len(),
                reference,
                c,
                CLAIM_SLOT.len(),
                claim,
            )
        } else {
            (
                c,
                CLAIM_SLOT.len(),
                claim,
                r,
                REFERENCE_SLOT.len(),
                reference,
            )
        };
        let mut out = String::with_capacity(self.text.len() + reference.len() + claim.len());
        out.push_str(&self.text[..first]);
        out.push_str(first_val);
        out.push_str(&self.text[first + first_len..second]);
        out.push_str(second_val);
        out.push_str(&self.text[second + second_len..]);
        out
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::builtin("t5").expect("built-in template is valid")
    }
}

fn strip_final_newline(s: &str) -> &str {
    s.strip_suffix('\n').unwrap_or(s)
}
