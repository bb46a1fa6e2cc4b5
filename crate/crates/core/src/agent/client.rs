use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AgentError, Result};
use crate::prompt::{Message, PromptBundle, Purpose};

/// Where agent calls go.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Endpoint {
    Url(String),
    Mock,
    Replay,
}

impl TryFrom<String> for Endpoint {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "mock" => Ok(Endpoint::Mock),
            "replay" => Ok(Endpoint::Replay),
            u if u.starts_with("http://") || u.starts_with("https://") => Ok(Endpoint::Url(s)),
            other => Err(format!("endpoint must be an http(s) url, \"mock\" or \"replay\", got {other:?}")),
        }
    }
}

impl From<Endpoint> for String {
    fn from(e: Endpoint) -> String {
        match e {
            Endpoint::Url(u) => u,
            Endpoint::Mock => "mock".into(),
            Endpoint::Replay => "replay".into(),
        }
    }
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn default_model() -> String {
    "gpt-4-turbo".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClientConfig {
    pub endpoint: Endpoint,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Append every exchange here; in replay mode, the recording to serve.
    #[serde(default)]
    pub transcript_path: Option<PathBuf>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

impl Default for ModelClientConfig {
    fn default() -> Self {
        Self {
            endpoint: Endpoint::Mock,
            model_id: default_model(),
            temperature: 0.0,
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            transcript_path: None,
            api_key_env: None,
        }
    }
}

impl ModelClientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(AgentError::Config(format!("temperature {} must be ≥ 0", self.temperature)));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// Carries a JSON POST. Separate from the chat model so tests can forbid
/// the network outright.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, body: &Value, headers: &[(String, String)], timeout: Duration) -> Result<Value>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, body: &Value, headers: &[(String, String)], timeout: Duration) -> Result<Value> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let resp = req.send().map_err(|e| AgentError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(AgentError::Transport(format!("HTTP {status}: {text}")));
        }
        resp.json().map_err(|e| AgentError::Transport(format!("response body: {e}")))
    }
}

/// Refuses every request; proves a run needs no network.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenyAllTransport;

impl Transport for DenyAllTransport {
    fn post_json(&self, url: &str, _: &Value, _: &[(String, String)], _: Duration) -> Result<Value> {
        Err(AgentError::Transport(format!("network access denied: {url}")))
    }
}

/// Request body of the chat-completion wire contract.
pub fn wire_request(model: &str, messages: &[Message], temperature: f64) -> Value {
    json!({
        "model": model,
        "messages": messages.iter().map(|m| json!({"role": m.role, "content": m.content})).collect::<Vec<_>>(),
        "temperature": temperature,
    })
}

/// Reply text from a chat-completion response body.
pub fn wire_reply(body: &Value) -> Result<String> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| AgentError::Transport(format!("response lacks choices[0].message.content: {body}")))
}

/// Produces one reply per bundle.
pub trait ChatModel: Send + Sync {
    fn complete(&self, bundle: &PromptBundle) -> Result<String>;
}

impl<M: ChatModel + ?Sized> ChatModel for Arc<M> {
    fn complete(&self, bundle: &PromptBundle) -> Result<String> {
        (**self).complete(bundle)
    }
}

pub struct HttpChat {
    pub url: String,
    pub model_id: String,
    pub temperature: f64,
    pub timeout: Duration,
    pub api_key: Option<String>,
    pub transport: Arc<dyn Transport>,
}

impl ChatModel for HttpChat {
    fn complete(&self, bundle: &PromptBundle) -> Result<String> {
        let body = wire_request(&self.model_id, &bundle.messages, self.temperature);
        let mut headers = Vec::new();
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let resp = self.transport.post_json(&self.url, &body, &headers, self.timeout)?;
        wire_reply(&resp)
    }
}

/// Replies from a fixed queue, in order.
pub struct ScriptedChat {
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedChat {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self { replies: Mutex::new(replies.into_iter().map(Into::into).collect()) }
    }
}

impl ChatModel for ScriptedChat {
    fn complete(&self, _: &PromptBundle) -> Result<String> {
        self.replies
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or_else(|| AgentError::Transport("mock script exhausted".into()))
    }
}

/// Replies computed from the bundle.
pub struct ResponderChat<F>(pub F);

impl<F> ChatModel for ResponderChat<F>
where
    F: Fn(&PromptBundle) -> String + Send + Sync,
{
    fn complete(&self, bundle: &PromptBundle) -> Result<String> {
        Ok((self.0)(bundle))
    }
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub bundle_hash: String,
    pub purpose: Purpose,
    pub messages: Vec<Message>,
    pub reply: String,
    pub timestamp: DateTime<Utc>,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>> {
    let file = File::open(path).map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AgentError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| AgentError::Io(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Serves recorded replies by bundle hash. A bundle recorded several times
/// replays its replies in order, then keeps repeating the last one.
pub struct ReplayChat {
    replies: HashMap<String, (Vec<String>, AtomicUsize)>,
}

impl ReplayChat {
    pub fn new(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut replies: HashMap<String, (Vec<String>, AtomicUsize)> = HashMap::new();
        for r in records {
            replies.entry(r.bundle_hash).or_default().0.push(r.reply);
        }
        Self { replies }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(Self::new(read_transcript(path)?))
    }
}

impl ChatModel for ReplayChat {
    fn complete(&self, bundle: &PromptBundle) -> Result<String> {
        let hash = bundle.hash();
        let (replies, next) = self.replies.get(&hash).ok_or(AgentError::ReplayMiss(hash))?;
        let i = next.fetch_add(1, Ordering::Relaxed).min(replies.len() - 1);
        Ok(replies[i].clone())
    }
}

/// Sends bundles to a chat model, retrying transport failures, appending
/// a transcript and counting calls per purpose. Shareable across threads.
pub struct AgentClient {
    model: Box<dyn ChatModel>,
    max_retries: u32,
    transcript: Option<Mutex<File>>,
    calls: Mutex<HashMap<Purpose, usize>>,
}

impl AgentClient {
    pub fn new(model: impl ChatModel + 'static, max_retries: u32) -> Self {
        Self { model: Box::new(model), max_retries, transcript: None, calls: Mutex::default() }
    }

    /// Client for a config; `transport` carries URL endpoints and `mock`
    /// supplies the model for the mock endpoint.
    pub fn from_config(
        config: &ModelClientConfig,
        transport: Arc<dyn Transport>,
        mock: Option<Box<dyn ChatModel>>,
    ) -> Result<Self> {
        config.validate()?;
        let model: Box<dyn ChatModel> = match &config.endpoint {
            Endpoint::Url(url) => {
                let api_key = match &config.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        AgentError::Config(format!("environment variable {var} is not set"))
                    })?),
                    None => None,
                };
                Box::new(HttpChat {
                    url: url.clone(),
                    model_id: config.model_id.clone(),
                    temperature: config.temperature,
                    timeout: config.timeout(),
                    api_key,
                    transport,
                })
            }
            Endpoint::Mock => mock.ok_or_else(|| AgentError::Config("mock endpoint without a mock model".into()))?,
            Endpoint::Replay => {
                let path = config
                    .transcript_path
                    .as_ref()
                    .ok_or_else(|| AgentError::Config("replay endpoint needs transcript_path".into()))?;
                Box::new(ReplayChat::from_path(path)?)
            }
        };
        let mut client = Self { model, max_retries: config.max_retries, transcript: None, calls: Mutex::default() };
        if config.endpoint != Endpoint::Replay {
            if let Some(path) = &config.transcript_path {
                client = client.with_transcript(path)?;
            }
        }
        Ok(client)
    }

    pub fn with_transcript(mut self, path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))?;
        self.transcript = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn max_retries(&self) -> u32 {
        self.max_retries
    }

    pub fn send(&self, bundle: &PromptBundle) -> Result<String> {
        *self.calls.lock().expect("counter lock").entry(bundle.purpose).or_default() += 1;
        let mut attempt = 0;
        let reply = loop {
            match self.model.complete(bundle) {
                Ok(r) => break r,
                Err(AgentError::Transport(e)) if attempt < self.max_retries => {
                    log::warn!("{} call failed (attempt {}): {e}", bundle.purpose.name(), attempt + 1);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if let Some(t) = &self.transcript {
            let record = TranscriptRecord {
                bundle_hash: bundle.hash(),
                purpose: bundle.purpose,
                messages: bundle.messages.clone(),
                reply: reply.clone(),
                timestamp: Utc::now(),
            };
            let line = serde_json::to_string(&record).expect("transcript record");
            let mut f = t.lock().expect("transcript lock");
            writeln!(f, "{line}").map_err(|e| AgentError::Io(e.to_string()))?;
        }
        Ok(reply)
    }

    pub fn calls(&self, purpose: Purpose) -> usize {
        self.calls.lock().expect("counter lock").get(&purpose).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.calls.lock().expect("counter lock").values().sum()
    }
}
