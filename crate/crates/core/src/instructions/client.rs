//! Remote embedding endpoint client backed by an append-only JSON-lines cache.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{InstructionError, EMBED_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer credential.
    pub credential_env: String,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub timeout_ms: u64,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>, credential_env: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            credential_env: credential_env.into(),
            max_retries: 3,
            initial_backoff_ms: 500,
            timeout_ms: 30_000,
        }
    }
}

/// One cache line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub text: String,
    pub model: String,
    pub dim: usize,
    pub vector: Vec<f64>,
}

/// Append-only embedding cache keyed by `(text, model)`.
///
/// Lines are appended with a single write under a process-wide lock;
/// a torn trailing line left by a crashed writer is skipped on load.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: PathBuf,
    entries: RwLock<HashMap<(String, String), Vec<f64>>>,
    writer: Mutex<()>,
}

impl EmbeddingCache {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, InstructionError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            for rec in read_records(&path)? {
                entries.insert((rec.text, rec.model), rec.vector);
            }
        }
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, text: &str, model: &str) -> Option<Vec<f64>> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(&(text.to_owned(), model.to_owned()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, text: &str, model: &str, vector: Vec<f64>) -> Result<(), InstructionError> {
        let _guard = self.writer.lock().expect("cache writer poisoned");
        if self.get(text, model).is_some() {
            return Ok(());
        }
        let rec = CacheRecord {
            text: text.to_owned(),
            model: model.to_owned(),
            dim: vector.len(),
            vector,
        };
        let mut line = serde_json::to_string(&rec)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert((rec.text, rec.model), rec.vector);
        Ok(())
    }
}

/// Reads every well-formed line of a cache file.
pub fn read_records(path: &Path) -> Result<Vec<CacheRecord>, InstructionError> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| serde_json::from_str::<CacheRecord>(l).ok())
        .collect())
}

pub fn write_records(path: &Path, records: &[CacheRecord]) -> Result<(), InstructionError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug)]
pub enum TransportError {
    /// Connection failures, timeouts, 429 and 5xx responses.
    Retryable(String),
    Fatal(String),
}

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<Value, TransportError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<Value, TransportError> {
        let mut resp = self
            .agent
            .post(url)
            .header("Authorization", format!("Bearer {bearer}"))
            .header("api-key", bearer)
            .send_json(body)
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(TransportError::Retryable(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(TransportError::Fatal(format!("HTTP {status}")));
        }
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| TransportError::Fatal(format!("invalid JSON response: {e}")))
    }
}

/// Pulls the single embedding vector out of a response. Accepts the
/// OpenAI-style `{"data":[{"embedding":[..]}]}` shape as well as a bare
/// `{"embedding":[..]}` or `{"vector":[..]}`.
pub fn extract_vector(resp: &Value) -> Option<Vec<f64>> {
    let arr = resp
        .pointer("/data/0/embedding")
        .or_else(|| resp.get("embedding"))
        .or_else(|| resp.get("vector"))?
        .as_array()?;
    arr.iter().map(Value::as_f64).collect()
}

pub struct EmbeddingClient<T: Transport = HttpTransport> {
    config: EndpointConfig,
    cache: EmbeddingCache,
    transport: T,
}

impl EmbeddingClient<HttpTransport> {
    pub fn new(config: EndpointConfig, cache: EmbeddingCache) -> Self {
        let transport = HttpTransport::new(Duration::from_millis(config.timeout_ms));
        Self::with_transport(config, cache, transport)
    }
}

impl<T: Transport> EmbeddingClient<T> {
    pub fn with_transport(config: EndpointConfig, cache: EmbeddingCache, transport: T) -> Self {
        Self {
            config,
            cache,
            transport,
        }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Returns the cached vector for `text` or fetches, validates and caches it.
    pub fn fetch_embedding(&self, text: &str) -> Result<Vec<f64>, InstructionError> {
        if let Some(v) = self.cache.get(text, &self.config.model) {
            return Ok(v);
        }
        let credential = std::env::var(&self.config.credential_env)
            .map_err(|_| InstructionError::MissingCredential(self.config.credential_env.clone()))?;
        let body = json!({ "input": text, "model": self.config.model });

        let mut backoff = self.config.initial_backoff_ms;
        let mut attempt = 0;
        let resp = loop {
            match self.transport.post_json(&self.config.url, &credential, &body) {
                Ok(v) => break v,
                Err(TransportError::Retryable(msg)) if attempt < self.config.max_retries => {
                    log_retry(attempt, &msg);
                    std::thread::sleep(Duration::from_millis(backoff));
                    backoff = backoff.saturating_mul(2);
                    attempt += 1;
                }
                Err(TransportError::Retryable(msg) | TransportError::Fatal(msg)) => {
                    return Err(InstructionError::Network(msg));
                }
            }
        };
        let vector = extract_vector(&resp)
            .ok_or_else(|| InstructionError::Network("response holds no embedding vector".into()))?;
        if vector.len() != EMBED_DIM {
            return Err(InstructionError::DimensionMismatch {
                expected: EMBED_DIM,
                found: vector.len(),
            });
        }
        self.cache.insert(text, &self.config.model, vector.clone())?;
        Ok(vector)
    }
}

fn log_retry(attempt: u32, msg: &str) {
    eprintln!("embedding request failed (attempt {}): {msg}; retrying", attempt + 1);
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use super::*;

    struct Scripted {
        calls: AtomicUsize,
        replies: Vec<fn() -> Result<Value, TransportError>>,
    }

    impl Transport for Arc<Scripted> {
        fn post_json(&self, _: &str, _: &str, body: &Value) -> Result<Value, TransportError> {
            assert!(body.get("input").is_some() && body.get("model").is_some());
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            (self.replies[i.min(self.replies.len() - 1)])()
        }
    }

    fn ok_vec() -> Result<Value, TransportError> {
        Ok(json!({ "data": [{ "embedding": vec![0.25f64; 1536] }] }))
    }

    fn short_vec() -> Result<Value, TransportError> {
        Ok(json!({ "embedding": vec![0.0f64; 512] }))
    }

    fn down() -> Result<Value, TransportError> {
        Err(TransportError::Retryable("connection refused".into()))
    }

    fn client(dir: &Path, env: &str, replies: Vec<fn() -> Result<Value, TransportError>>) -> (EmbeddingClient<Arc<Scripted>>, Arc<Scripted>) {
        let script = Arc::new(Scripted {
            calls: AtomicUsize::new(0),
            replies,
        });
        let mut cfg = EndpointConfig::new("http://unused", "test-model", env);
        cfg.initial_backoff_ms = 0;
        let cache = EmbeddingCache::open(dir.join("cache.jsonl")).unwrap();
        (EmbeddingClient::with_transport(cfg, cache, script.clone()), script)
    }

    #[test]
    fn fetch_then_cache_hit() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var("IGPRM_TEST_KEY_A", "secret");
        let (c, script) = client(dir.path(), "IGPRM_TEST_KEY_A", vec![ok_vec]);
        assert_eq!(c.fetch_embedding("hello").unwrap().len(), 1536);
        assert_eq!(c.fetch_embedding("hello").unwrap().len(), 1536);
        assert_eq!(script.calls.load(Ordering::SeqCst), 1);

        // a fresh client on the same file never touches the network
        let (c2, script2) = client(dir.path(), "IGPRM_TEST_KEY_UNSET_X", vec![down]);
        assert_eq!(c2.fetch_embedding("hello").unwrap(), vec![0.25; 1536]);
        assert_eq!(script2.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var("IGPRM_TEST_KEY_B", "secret");
        let (c, _) = client(dir.path(), "IGPRM_TEST_KEY_B", vec![short_vec]);
        assert!(matches!(
            c.fetch_embedding("x"),
            Err(InstructionError::DimensionMismatch { expected: 1536, found: 512 })
        ));
        assert!(c.cache().is_empty());
    }

    #[test]
    fn missing_credential_before_request() {
        let dir = tempfile::tempdir().unwrap();
        let (c, script) = client(dir.path(), "IGPRM_TEST_KEY_NEVER_SET", vec![ok_vec]);
        assert!(matches!(c.fetch_embedding("x"), Err(InstructionError::MissingCredential(_))));
        assert_eq!(script.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn retries_three_times_then_fails() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var("IGPRM_TEST_KEY_C", "secret");
        let (c, script) = client(dir.path(), "IGPRM_TEST_KEY_C", vec![down]);
        assert!(matches!(c.fetch_embedding("x"), Err(InstructionError::Network(_))));
        assert_eq!(script.calls.load(Ordering::SeqCst), 4);

        let (c, script) = client(dir.path(), "IGPRM_TEST_KEY_C", vec![down, down, ok_vec]);
        assert!(c.fetch_embedding("y").is_ok());
        assert_eq!(script.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn torn_trailing_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let rec = CacheRecord {
            text: "a".into(),
            model: "m".into(),
            dim: 2,
            vector: vec![1.0, 2.0],
        };
        let mut s = serde_json::to_string(&rec).unwrap();
        s.push_str("\n{\"text\":\"b\",\"mod");
        fs::write(&path, s).unwrap();
        let cache = EmbeddingCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get("a", "m"), Some(vec![1.0, 2.0]));
    }

    #[test]
    fn concurrent_inserts_keep_file_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(EmbeddingCache::open(dir.path().join("c.jsonl")).unwrap());
        std::thread::scope(|s| {
            for t in 0..4 {
                let cache = cache.clone();
                s.spawn(move || {
                    for i in 0..25 {
                        cache.insert(&format!("t{}", i % 10), "m", vec![t as f64; 8]).unwrap();
                    }
                });
            }
        });
        let recs = read_records(cache.path()).unwrap();
        let raw = fs::read_to_string(cache.path()).unwrap();
        assert_eq!(recs.len(), raw.lines().count());
        assert_eq!(EmbeddingCache::open(cache.path()).unwrap().len(), 10);
    }

    #[test]
    fn http_transport_against_local_server() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_owned();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: Value = serde_json::from_slice(&body).unwrap();
            let payload = json!({ "data": [{ "embedding": vec![0.5f64; 1536] }] }).to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                payload.len(),
                payload
            )
            .unwrap();
            (req, auth)
        });

        let dir = tempfile::tempdir().unwrap();
        std::env::set_var("IGPRM_TEST_KEY_HTTP", "tok123");
        let cfg = EndpointConfig::new(format!("http://{addr}/embed"), "m1", "IGPRM_TEST_KEY_HTTP");
        let cache = EmbeddingCache::open(dir.path().join("c.jsonl")).unwrap();
        let client = EmbeddingClient::new(cfg, cache);
        let v = client.fetch_embedding("go left").unwrap();
        assert_eq!(v, vec![0.5; 1536]);
        let (req, auth) = server.join().unwrap();
        assert_eq!(req, json!({ "input": "go left", "model": "m1" }));
        assert!(auth.ends_with("Bearer tok123"), "{auth}");
        let recs = read_records(&dir.path().join("c.jsonl")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].dim, 1536);
    }
}
