//! Chat-completion transports: HTTP for real endpoints, a scripted mock for
//! offline runs and tests.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("endpoint configuration: {0}")]
    Config(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Failed { attempts: u32, message: String },
    #[error("malformed endpoint reply: {0}")]
    Reply(String),
    #[error("mock script: {0}")]
    Script(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn user(model: &str, temperature: f64, prompt: String) -> Self {
        ChatRequest {
            model: model.to_string(),
            messages: vec![Message {
                role: "user".into(),
                content: prompt,
            }],
            temperature,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    /// Wall time of the call, or the scripted time for the mock.
    pub elapsed: Duration,
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    /// Environment variable holding the bearer token. The token itself is
    /// never stored in configuration.
    pub api_key_env: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff: Duration,
}

impl EndpointConfig {
    pub fn new(url: &str, model: &str) -> Self {
        EndpointConfig {
            url: url.to_string(),
            model: model.to_string(),
            temperature: 0.0,
            api_key_env: "CHARSPACE_LLM_API_KEY".into(),
            timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(TransportError::Config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if !(self.url.starts_with("http://") || self.url.starts_with("https://")) {
            return Err(TransportError::Config(format!("`{}` is not an http(s) URL", self.url)));
        }
        if self.model.is_empty() {
            return Err(TransportError::Config("model name is empty".into()));
        }
        Ok(())
    }
}

pub struct HttpTransport {
    cfg: EndpointConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(cfg: EndpointConfig) -> Result<Self, TransportError> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!("{} is not set; sending requests without authorization", cfg.api_key_env);
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpTransport { cfg, agent, api_key })
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, String)> {
        let mut req = self.agent.post(&self.cfg.url);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| (true, e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err((false, format!("HTTP {status}: {text}")));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| (false, format!("reply is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| (false, "reply lacks choices[0].message.content".to_string()))
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(content) => {
                    return Ok(ChatResponse {
                        content,
                        elapsed: start.elapsed(),
                    })
                }
                Err((retry, message)) if retry && attempts <= self.cfg.max_retries => {
                    let wait = self.cfg.backoff * 2u32.pow(attempts - 1);
                    log::warn!("attempt {attempts} failed ({message}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
                Err((_, message)) => return Err(TransportError::Failed { attempts, message }),
            }
        }
    }
}

/// One line of a mock script. The first entry whose `match` occurs in the
/// prompt answers it; entries without `match` answer anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, rename = "match")]
    pub pattern: Option<String>,
    #[serde(default)]
    pub content: String,
    #[serde(default)]
    pub elapsed_ms: u64,
    /// Simulate a transport failure.
    #[serde(default)]
    pub fail: bool,
}

/// Replays a script without touching the network and records every call.
#[derive(Debug, Default)]
pub struct MockTransport {
    script: Vec<ScriptEntry>,
    calls: AtomicUsize,
    log: Mutex<Vec<ChatRequest>>,
}

impl MockTransport {
    pub fn new(script: Vec<ScriptEntry>) -> Self {
        MockTransport {
            script,
            ..Default::default()
        }
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, TransportError> {
        let mut script = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ScriptEntry =
                serde_json::from_str(line).map_err(|e| TransportError::Script(format!("line {}: {e}", i + 1)))?;
            script.push(e);
        }
        Ok(MockTransport::new(script))
    }

    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let text = std::fs::read_to_string(path).map_err(|e| TransportError::Script(format!("{}: {e}", path.display())))?;
        Self::parse_jsonl(&text)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap().push(request.clone());
        let prompt = request.prompt();
        let entry = self
            .script
            .iter()
            .find(|e| e.pattern.as_deref().is_none_or(|p| prompt.contains(p)))
            .ok_or_else(|| TransportError::Script("no entry matches the prompt".into()))?;
        if entry.fail {
            return Err(TransportError::Failed {
                attempts: 1,
                message: "scripted failure".into(),
            });
        }
        Ok(ChatResponse {
            content: entry.content.clone(),
            elapsed: Duration::from_millis(entry.elapsed_ms),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_and_url_validated() {
        let mut cfg = EndpointConfig::new("https://example.invalid/v1/chat/completions", "m");
        assert!(cfg.validate().is_ok());
        cfg.temperature = 2.5;
        assert!(cfg.validate().is_err());
        let cfg = EndpointConfig::new("ftp://x", "m");
        assert!(HttpTransport::new(cfg).is_err());
    }

    #[test]
    fn mock_picks_first_matching_entry() {
        let m = MockTransport::parse_jsonl(
            "{\"match\": \"Emma\", \"content\": \"one\", \"elapsed_ms\": 5}\n\n{\"content\": \"two\"}\n",
        )
        .unwrap();
        let r = m.complete(&ChatRequest::user("m", 0.0, "about Emma".into())).unwrap();
        assert_eq!((r.content.as_str(), r.elapsed), ("one", Duration::from_millis(5)));
        assert_eq!(m.complete(&ChatRequest::user("m", 0.0, "other".into())).unwrap().content, "two");
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn mock_reports_bad_lines_and_failures() {
        assert!(matches!(MockTransport::parse_jsonl("{oops"), Err(TransportError::Script(_))));
        let m = MockTransport::new(vec![ScriptEntry {
            pattern: None,
            content: String::new(),
            elapsed_ms: 0,
            fail: true,
        }]);
        assert!(matches!(m.complete(&ChatRequest::user("m", 0.0, "x".into())), Err(TransportError::Failed { .. })));
    }
}
