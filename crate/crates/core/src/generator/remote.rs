//! Minimal text-completion client: POST a JSON body holding the rendered
//! prompt plus pass-through parameters, read back a completion string.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde_json::{Map, Value};

use super::prompt::PromptTemplate;

pub const DEFAULT_TOKEN_ENV: &str = "LSS_EVAL_TOKEN";

#[derive(Debug, Clone)]
pub struct RemoteSettings {
    pub endpoint: String,
    /// Environment variable holding a bearer token; unset means no auth header.
    pub token_env: String,
    pub template: PromptTemplate,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
    /// Merged into the request body next to `prompt` (e.g. `num_beams`).
    pub parameters: Map<String, Value>,
    /// Where the batch is captured as a replay file.
    pub capture: Option<PathBuf>,
}

impl RemoteSettings {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteSettings {
            endpoint: endpoint.into(),
            token_env: DEFAULT_TOKEN_ENV.to_string(),
            template: PromptTemplate::default(),
            timeout: Duration::from_secs(60),
            max_in_flight: 4,
            retries: 2,
            backoff: Duration::from_millis(250),
            parameters: Map::new(),
            capture: None,
        }
    }
}

pub(crate) struct RemoteClient<'a> {
    settings: &'a RemoteSettings,
    agent: ureq::Agent,
    token: Option<String>,
}

impl<'a> RemoteClient<'a> {
    pub(crate) fn new(settings: &'a RemoteSettings) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .build()
            .into();
        let token = std::env::var(&settings.token_env)
            .ok()
            .filter(|t| !t.is_empty());
        RemoteClient {
            settings,
            agent,
            token,
        }
    }

    pub(crate) fn request_body(&self, prompt: &str) -> Value {
        let mut body = self.settings.parameters.clone();
        body.insert("prompt".into(), Value::String(prompt.to_owned()));
        Value::Object(body)
    }

    fn call_once(&self, body: &str) -> Result<String, String> {
        let mut req = self
            .agent
            .post(&self.settings.endpoint)
            .header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        parse_completion(&text)
    }

    /// Completion text and wall time of the successful attempt.
    pub(crate) fn complete(
        &self,
        reference: &str,
        claim: &str,
    ) -> Result<(String, Duration), String> {
        let prompt = self.settings.template.render(reference, claim);
        let body = self.request_body(&prompt).to_string();
        let mut delay = self.settings.backoff;
        let mut last_err = String::new();
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
            let started = Instant::now();
            match self.call_once(&body) {
                Ok(text) => return Ok((text, started.elapsed())),
                Err(e) => {
                    log::debug!("attempt {} failed: {e}", attempt + 1);
                    last_err = e;
                }
            }
        }
        Err(format!(
            "{} after {} attempt(s)",
            last_err,
            self.settings.retries + 1
        ))
    }
}

/// Accepts `{"completion": "..."}`, falling back to `{"text": "..."}`.
pub(crate) fn parse_completion(body: &str) -> Result<String, String> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| format!("invalid JSON response: {e}"))?;
    ["completion", "text"]
        .iter()
        .find_map(|k| value.get(*k).and_then(Value::as_str))
        .map(str::to_owned)
        .ok_or_else(|| "response has no `completion` string".to_string())
}
