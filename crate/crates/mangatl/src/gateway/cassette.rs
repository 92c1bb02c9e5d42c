use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use mangatl_core::gateway::{sha256_hex, LlmRequest, LlmResponse};
use serde::{Deserialize, Serialize};

use super::{ChatBackend, GatewayError};

pub const CASSETTE_FORMAT: &str = "mangatl.cassette/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteMeta {
    /// Recording date, `YYYY-MM-DD`.
    pub recorded: String,
    pub model: String,
    pub backend: String,
}

/// Responses recorded for one request, replayed in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub prompt: String,
    /// SHA-256 of each attached image.
    pub images: Vec<String>,
    pub responses: Vec<LlmResponse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cassette {
    pub format: String,
    pub meta: CassetteMeta,
    /// Keyed by request digest.
    pub entries: BTreeMap<String, CassetteEntry>,
}

impl Cassette {
    pub fn new(meta: CassetteMeta) -> Self {
        Self {
            format: CASSETTE_FORMAT.into(),
            meta,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_json(src: &str) -> Result<Self, GatewayError> {
        let c: Cassette =
            serde_json::from_str(src).map_err(|e| GatewayError::Cassette(e.to_string()))?;
        if c.format != CASSETTE_FORMAT {
            return Err(GatewayError::Cassette(format!(
                "unsupported cassette format '{}'",
                c.format
            )));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cassette serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let src = fs::read_to_string(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        let fail = |e: std::io::Error| GatewayError::Cassette(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(fail)?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json()).map_err(fail)?;
        fs::rename(&tmp, path).map_err(fail)
    }

    pub fn record(&mut self, request: &LlmRequest, response: LlmResponse) {
        self.entries
            .entry(request.digest())
            .or_insert_with(|| CassetteEntry {
                prompt: request.prompt().to_owned(),
                images: request.images.iter().map(|i| i.digest()).collect(),
                responses: Vec::new(),
            })
            .responses
            .push(response);
    }

    /// Sum of `(input, output)` tokens over every recorded response.
    pub fn token_totals(&self) -> (u64, u64) {
        self.entries
            .values()
            .flat_map(|e| &e.responses)
            .fold((0, 0), |(i, o), r| {
                (i + r.input_tokens, o + r.output_tokens)
            })
    }
}

/// Answers requests from a cassette. Repeated requests walk through the
/// recorded responses in order and then keep returning the last one.
pub struct ReplayBackend {
    cassette: Cassette,
    digest: String,
    cursors: Mutex<HashMap<String, usize>>,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        let digest = sha256_hex(cassette.to_json().as_bytes());
        Self {
            cassette,
            digest,
            cursors: Mutex::new(HashMap::new()),
        }
    }

    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let bytes = fs::read(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        let src = String::from_utf8(bytes).map_err(|e| GatewayError::Cassette(e.to_string()))?;
        let cassette = Cassette::from_json(&src)?;
        Ok(Self {
            cassette,
            digest: sha256_hex(src.as_bytes()),
            cursors: Mutex::new(HashMap::new()),
        })
    }

    /// SHA-256 of the cassette file bytes.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }
}

impl ChatBackend for ReplayBackend {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        let key = request.digest();
        let entry = self
            .cassette
            .entries
            .get(&key)
            .filter(|e| !e.responses.is_empty())
            .ok_or_else(|| GatewayError::CassetteMiss(key.clone()))?;
        let mut cursors = self.cursors.lock().unwrap_or_else(|e| e.into_inner());
        let k = cursors.entry(key).or_insert(0);
        let response = entry.responses[(*k).min(entry.responses.len() - 1)].clone();
        *k += 1;
        Ok(response)
    }
}

/// Forwards to `inner` and appends every response to the cassette file.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    cassette: Mutex<Cassette>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    /// Appends to the cassette at `path` if it exists, else starts one.
    pub fn new(inner: B, path: &Path, meta: CassetteMeta) -> Result<Self, GatewayError> {
        let cassette = if path.exists() {
            Cassette::load(path)?
        } else {
            Cassette::new(meta)
        };
        Ok(Self {
            inner,
            path: path.to_path_buf(),
            cassette: Mutex::new(cassette),
        })
    }

    pub fn snapshot(&self) -> Cassette {
        self.cassette
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        let response = self.inner.send(request)?;
        let mut c = self.cassette.lock().unwrap_or_else(|e| e.into_inner());
        c.record(request, response.clone());
        c.save(&self.path)?;
        Ok(response)
    }
}

pub fn today() -> String {
    time::OffsetDateTime::now_utc().date().to_string()
}
