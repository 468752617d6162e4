//! Model backends: a scripted map for offline runs and tests, and an
//! OpenAI-style chat-completions client for live runs.
//!
//! Every completion call carries a caller-chosen key naming the work item.
//! Inference keys are `{instance_id}` (whole-set) and
//! `{instance_id}::{document_id}` (per-document); synthesis keys are
//! `{set_id}::instructions`, `{set_id}::selections`, and
//! `{set_id}::one-step`. Scripted backends answer by key, which makes
//! fixtures independent of prompt wording.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, Serialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no scripted response for key \"{0}\"")]
    MissingKey(String),
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

impl BackendError {
    /// Whether retrying the same call could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(e) => e.is_timeout() || e.is_connect() || e.is_request(),
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A completion source: messages in, text out. Implementations must be
/// usable from worker threads.
pub trait Backend: Send + Sync {
    fn complete(&self, key: &str, messages: &[Message]) -> Result<String, BackendError>;
    fn name(&self) -> &str;
}

/// Calls the backend, retrying transient failures up to `retries` extra
/// attempts with linear backoff.
pub fn complete_with_retry(
    backend: &dyn Backend,
    retries: usize,
    key: &str,
    messages: &[Message],
) -> Result<String, BackendError> {
    let mut attempt = 0;
    loop {
        match backend.complete(key, messages) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_transient() && attempt < retries => {
                attempt += 1;
                log::warn!("{}: transient failure on {key} (attempt {attempt}): {e}", backend.name());
                std::thread::sleep(Duration::from_millis(200 * attempt as u64));
            }
            Err(e) => return Err(e),
        }
    }
}

/// Deterministic offline backend answering from a key→response map.
/// Records every key it is asked for, in call order.
pub struct ScriptedBackend {
    name: String,
    responses: BTreeMap<String, String>,
    calls: Mutex<Vec<String>>,
}

impl ScriptedBackend {
    pub fn new(name: impl Into<String>, responses: BTreeMap<String, String>) -> Self {
        ScriptedBackend {
            name: name.into(),
            responses,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_pairs(name: &str, pairs: &[(&str, &str)]) -> Self {
        Self::new(
            name,
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }

    /// Keys requested so far, in call order.
    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().expect("call log lock").clone()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, key: &str, _messages: &[Message]) -> Result<String, BackendError> {
        self.calls.lock().expect("call log lock").push(key.to_string());
        self.responses
            .get(key)
            .cloned()
            .ok_or_else(|| BackendError::MissingKey(key.to_string()))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// OpenAI-style `POST {base_url}/chat/completions` client.
#[derive(Debug)]
pub struct HttpChatBackend {
    name: String,
    client: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    max_new_tokens: usize,
}

impl HttpChatBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let api_key = if config.api_key_env.is_empty() {
            None
        } else {
            Some(
                std::env::var(&config.api_key_env)
                    .map_err(|_| BackendError::MissingApiKey(config.api_key_env.clone()))?,
            )
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()?;
        Ok(HttpChatBackend {
            name: config.model.clone(),
            client,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            model: config.model.clone(),
            api_key,
            temperature: config.temperature,
            max_new_tokens: config.max_new_tokens,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl Backend for HttpChatBackend {
    fn complete(&self, _key: &str, messages: &[Message]) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.base_url);
        let body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_new_tokens,
        });
        let mut request = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send()?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Http {
                status: status.as_u16(),
                body: response.text().unwrap_or_default(),
            });
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::MalformedResponse("empty choices".to_string()))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

fn default_api_key_env() -> String {
    "IGCS_API_KEY".to_string()
}

fn default_temperature() -> f64 {
    0.0
}

fn default_max_new_tokens() -> usize {
    2048
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_retries() -> usize {
    2
}

fn default_parallelism() -> usize {
    1
}

/// Backend settings, loadable from TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub base_url: String,
    /// Name of the environment variable holding the API key; empty disables
    /// the Authorization header.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Extra attempts after a transient failure.
    #[serde(default = "default_retries")]
    pub retries: usize,
    /// Worker threads for batched runs.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Whole-set prompts over this budget drop trailing documents.
    #[serde(default)]
    pub max_input_tokens: Option<usize>,
    /// Scripted responses, inline.
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    /// Scripted responses from a JSON object file, merged over `responses`.
    #[serde(default)]
    pub responses_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Scripted,
    HttpChat,
}

impl BackendConfig {
    pub fn scripted() -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            model: "scripted".to_string(),
            base_url: String::new(),
            api_key_env: String::new(),
            temperature: default_temperature(),
            max_new_tokens: default_max_new_tokens(),
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            parallelism: default_parallelism(),
            max_input_tokens: None,
            responses: BTreeMap::new(),
            responses_path: None,
        }
    }
}

/// Loads a backend config from a `.toml` or `.json` file.
pub fn load_backend_config(path: &Path) -> Result<BackendConfig, BackendError> {
    let text = std::fs::read_to_string(path).map_err(|e| BackendError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, path)
}

fn parse_config(text: &str, path: &Path) -> Result<BackendConfig, BackendError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let result = if is_json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    };
    result.map_err(|message| BackendError::Config {
        path: path.display().to_string(),
        message,
    })
}

/// Instantiates the backend described by a config. Scripted responses given
/// via `responses_path` override inline entries with the same key.
pub fn build_backend(config: &BackendConfig) -> Result<Box<dyn Backend>, BackendError> {
    match config.kind {
        BackendKind::Scripted => {
            let mut responses = config.responses.clone();
            if let Some(path) = &config.responses_path {
                let text = std::fs::read_to_string(path).map_err(|e| BackendError::Config {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                let extra: BTreeMap<String, String> =
                    serde_json::from_str(&text).map_err(|e| BackendError::Config {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                responses.extend(extra);
            }
            let name = if config.model.is_empty() {
                "scripted"
            } else {
                &config.model
            };
            Ok(Box::new(ScriptedBackend::new(name, responses)))
        }
        BackendKind::HttpChat => Ok(Box::new(HttpChatBackend::new(config)?)),
    }
}
