//! Batch client for image-to-LaTeX recognizers behind a chat-completion API.

mod cache;
mod extract;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::record::SampleLevel;

pub use cache::PredictionCache;
pub use extract::extract_latex;

/// Per-level instructions substituted into the prompt template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelPrompts {
    pub line: String,
    pub paragraph: String,
    pub page: String,
}

impl Default for LevelPrompts {
    fn default() -> Self {
        Self {
            line: "Transcribe the formula in this image to LaTeX.".into(),
            paragraph: "Transcribe this paragraph to Markdown, writing every formula in LaTeX.".into(),
            page: "Transcribe this full page to Markdown, writing every formula in LaTeX.".into(),
        }
    }
}

impl LevelPrompts {
    pub fn get(&self, level: SampleLevel) -> &str {
        match level {
            SampleLevel::Line => &self.line,
            SampleLevel::Paragraph => &self.paragraph,
            SampleLevel::Page => &self.page,
        }
    }
}

pub const INSTRUCTION_PLACEHOLDER: &str = "{instruction}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub endpoint_path: String,
    pub model_name: String,
    /// Environment variable holding the bearer token. No header is sent when unset.
    pub api_key_env: Option<String>,
    /// Prompt text; `{instruction}` is replaced by the level prompt.
    pub prompt_template: String,
    pub prompts: LevelPrompts,
    /// Total attempts per record, including the first.
    pub max_retries: u32,
    pub parallelism: usize,
    pub timeout_s: u64,
    /// Delay before the second attempt; doubles after each retry.
    pub backoff_ms: u64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            endpoint_path: "/v1/chat/completions".into(),
            model_name: String::new(),
            api_key_env: None,
            prompt_template: INSTRUCTION_PLACEHOLDER.into(),
            prompts: LevelPrompts::default(),
            max_retries: 3,
            parallelism: 4,
            timeout_s: 120,
            backoff_ms: 500,
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("base_url is empty")]
    EmptyBaseUrl,
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("max_retries must be at least 1")]
    ZeroAttempts,
    #[error("environment variable `{0}` is not set")]
    MissingApiKey(String),
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.base_url.trim().is_empty() {
            return Err(ConfigError::EmptyBaseUrl);
        }
        if self.parallelism == 0 {
            return Err(ConfigError::ZeroParallelism);
        }
        if self.max_retries == 0 {
            return Err(ConfigError::ZeroAttempts);
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), self.endpoint_path.trim_start_matches('/'))
    }

    pub fn prompt(&self, level: SampleLevel) -> String {
        self.prompt_template.replace(INSTRUCTION_PLACEHOLDER, self.prompts.get(level))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("endpoint returned {status}: {body_excerpt}")]
    Status { status: u16, body_excerpt: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cannot read image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("malformed response: {0}")]
    Response(String),
}

impl EndpointError {
    fn is_retryable(&self) -> bool {
        match self {
            EndpointError::Status { status, .. } => *status == 429 || *status >= 500,
            EndpointError::Transport(_) => true,
            _ => false,
        }
    }
}

/// One image to transcribe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub record_id: String,
    pub level: SampleLevel,
    pub gt_latex: String,
    pub image_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub record_id: String,
    pub level: SampleLevel,
    pub gt_latex: String,
    #[serde(default)]
    pub pred_latex: String,
    pub latency_ms: u64,
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

const EXCERPT_LEN: usize = 200;

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_LEN).collect()
}

pub fn image_mime(path: &Path) -> Option<&'static str> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    Some(match ext.as_str() {
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "webp" => "image/webp",
        "gif" => "image/gif",
        "bmp" => "image/bmp",
        "svg" => "image/svg+xml",
        _ => return None,
    })
}

/// Sends requests for one endpoint configuration.
pub struct Recognizer {
    cfg: EndpointConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl Recognizer {
    pub fn new(cfg: EndpointConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ConfigError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(cfg.timeout_s)).build();
        Ok(Self { cfg, agent, api_key })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn request_body(&self, image: &Path, level: SampleLevel) -> Result<Value, EndpointError> {
        let image_err = |message: String| EndpointError::Image { path: image.to_path_buf(), message };
        let mime = image_mime(image).ok_or_else(|| image_err("unsupported image format".into()))?;
        let bytes = std::fs::read(image).map_err(|e| image_err(e.to_string()))?;
        let data = base64::engine::general_purpose::STANDARD.encode(bytes);
        Ok(json!({
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
            "messages": [{
                "role": "user",
                "content": [
                    { "type": "text", "text": self.cfg.prompt(level) },
                    { "type": "image_url", "image_url": { "url": format!("data:{mime};base64,{data}") } },
                ],
            }],
        }))
    }

    fn send(&self, body: &Value) -> Result<String, EndpointError> {
        let mut req = self.agent.post(&self.cfg.url());
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match req.send_json(body) {
            Ok(resp) => resp,
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                return Err(EndpointError::Status { status, body_excerpt: excerpt(&body) });
            }
            Err(ureq::Error::Transport(t)) => return Err(EndpointError::Transport(t.to_string())),
        };
        let text = resp.into_string().map_err(|e| EndpointError::Transport(e.to_string()))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|_| EndpointError::Response(excerpt(&text)))?;
        message_text(&value).ok_or_else(|| EndpointError::Response(excerpt(&text)))
    }

    /// Transcribes one image. Failures are recorded in the result.
    pub fn recognize(&self, item: &EvalItem) -> EvalRecord {
        let start = Instant::now();
        let mut attempt = 0;
        let outcome = self.request_body(&item.image_path, item.level).and_then(|body| loop {
            attempt += 1;
            match self.send(&body) {
                Ok(text) => break Ok(text),
                Err(e) if e.is_retryable() && attempt < self.cfg.max_retries => {
                    let delay = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                    std::thread::sleep(Duration::from_millis(delay));
                }
                Err(e) => break Err(e),
            }
        });
        let (pred_latex, error) = match outcome {
            Ok(text) => (extract_latex(&text), None),
            Err(e) => (String::new(), Some(e.to_string())),
        };
        EvalRecord {
            record_id: item.record_id.clone(),
            level: item.level,
            gt_latex: item.gt_latex.clone(),
            pred_latex,
            latency_ms: start.elapsed().as_millis() as u64,
            attempt,
            error,
        }
    }

    /// Runs `items` with at most `parallelism` requests in flight. Results
    /// come back in input order.
    pub fn run_batch(&self, items: &[EvalItem]) -> Vec<EvalRecord> {
        self.run_with(items, |_| {})
    }

    /// Like [`run_batch`](Self::run_batch), but skips records whose cached
    /// prediction succeeded and appends every new result to the cache.
    pub fn run_batch_cached(
        &self,
        items: &[EvalItem],
        cache: &mut PredictionCache,
    ) -> Result<Vec<EvalRecord>, crate::jsonl::JsonlError> {
        let cached: Vec<Option<EvalRecord>> =
            items.iter().map(|it| cache.successful(&it.record_id).cloned()).collect();
        let pending: Vec<EvalItem> =
            items.iter().zip(&cached).filter(|(_, c)| c.is_none()).map(|(it, _)| it.clone()).collect();
        let sink = Mutex::new((cache, None));
        let fresh = self.run_with(&pending, |rec| {
            let mut guard = sink.lock().unwrap_or_else(|e| e.into_inner());
            if guard.1.is_none() {
                guard.1 = guard.0.append(rec).err();
            }
        });
        if let (_, Some(e)) = sink.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }
        let mut fresh = fresh.into_iter();
        Ok(cached
            .into_iter()
            .map(|c| c.unwrap_or_else(|| fresh.next().expect("one result per pending item")))
            .collect())
    }

    fn run_with(&self, items: &[EvalItem], on_done: impl Fn(&EvalRecord) + Sync) -> Vec<EvalRecord> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<EvalRecord>>> = items.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.cfg.parallelism.min(items.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(i) else { break };
                    let rec = self.recognize(item);
                    on_done(&rec);
                    *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(rec);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every slot filled"))
            .collect()
    }
}

/// Text of the first choice; array-of-parts content is concatenated.
fn message_text(v: &Value) -> Option<String> {
    let content = v.get("choices")?.get(0)?.get("message")?.get("content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => {
            Some(parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect())
        }
        _ => None,
    }
}

pub fn recognize(item: &EvalItem, cfg: &EndpointConfig) -> Result<EvalRecord, ConfigError> {
    Ok(Recognizer::new(cfg.clone())?.recognize(item))
}

pub fn run_batch(items: &[EvalItem], cfg: &EndpointConfig) -> Result<Vec<EvalRecord>, ConfigError> {
    Ok(Recognizer::new(cfg.clone())?.run_batch(items))
}
