//! Backend-agnostic chat exchange types and the canonical request digest
//! used as cassette key.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Jpeg,
    Png,
}

impl ImageFormat {
    pub fn mime(&self) -> &'static str {
        match self {
            ImageFormat::Jpeg => "image/jpeg",
            ImageFormat::Png => "image/png",
        }
    }
}

/// Encoded image attached to a request.
#[derive(Clone, PartialEq, Eq)]
pub struct EncodedImage {
    pub bytes: Vec<u8>,
    pub format: ImageFormat,
    pub width: u32,
    pub height: u32,
    /// Limit the image was fitted to.
    pub max_side: u32,
}

impl core::fmt::Debug for EncodedImage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("EncodedImage")
            .field("format", &self.format)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("bytes", &self.bytes.len())
            .finish()
    }
}

impl EncodedImage {
    pub fn digest(&self) -> String {
        sha256_hex(&self.bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSettings {
    pub model: String,
    pub temperature: f64,
    pub max_output: u32,
}

impl Default for RequestSettings {
    fn default() -> Self {
        Self {
            model: String::from("gpt-4-turbo-2024-04-09"),
            temperature: 0.5,
            max_output: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<Message>,
    pub images: Vec<EncodedImage>,
    pub max_output: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidRequest {
    #[error("a request carries exactly one user message, found {0}")]
    UserMessages(usize),
    #[error("temperature must lie in [0, 2]")]
    Temperature,
}

/// Hashed form of a request: image bytes are replaced by their digests.
#[derive(Serialize)]
struct CanonicalRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_output: u32,
    messages: &'a [Message],
    images: Vec<CanonicalImage>,
}

#[derive(Serialize)]
struct CanonicalImage {
    format: ImageFormat,
    sha256: String,
}

impl LlmRequest {
    /// Single user message carrying `prompt`, with `images` attached.
    pub fn user(settings: &RequestSettings, prompt: String, images: Vec<EncodedImage>) -> Self {
        Self {
            model: settings.model.clone(),
            temperature: settings.temperature,
            messages: alloc::vec![Message {
                role: Role::User,
                text: prompt
            }],
            images,
            max_output: settings.max_output,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidRequest> {
        let users = self
            .messages
            .iter()
            .filter(|m| m.role == Role::User)
            .count();
        if users != 1 {
            return Err(InvalidRequest::UserMessages(users));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(InvalidRequest::Temperature);
        }
        Ok(())
    }

    /// Text of the user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .find(|m| m.role == Role::User)
            .map_or("", |m| m.text.as_str())
    }

    /// Deterministic JSON form: fixed key order, images as SHA-256 digests.
    pub fn canonical_json(&self) -> String {
        let canonical = CanonicalRequest {
            model: &self.model,
            temperature: self.temperature,
            max_output: self.max_output,
            messages: &self.messages,
            images: self
                .images
                .iter()
                .map(|i| CanonicalImage {
                    format: i.format,
                    sha256: i.digest(),
                })
                .collect(),
        };
        serde_json::to_string(&canonical).expect("canonical request serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
    pub backend_id: String,
}
