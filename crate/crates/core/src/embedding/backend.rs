//! Embedding backends: the lookup table and the HTTP client.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

/// An embedding endpoint: one raw vector per input text, constant
/// dimensionality.
pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
    fn model_id(&self) -> &str;
    fn dim(&self) -> usize;
}

#[derive(Debug, Deserialize)]
struct TableFile {
    model_id: String,
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

/// Deterministic lookup-table backend. Unknown texts are an error, so
/// fixtures stay honest about what they cover.
pub struct TableEmbeddingBackend {
    model_id: String,
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl TableEmbeddingBackend {
    pub fn new(model_id: impl Into<String>, dim: usize, vectors: HashMap<String, Vec<f32>>) -> Self {
        TableEmbeddingBackend {
            model_id: model_id.into(),
            dim,
            vectors,
        }
    }

    /// Load a `{model_id, dim, vectors: {text: [floats]}}` JSON file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: TableFile = serde_json::from_str(&data).map_err(|e| Error::RecordParse {
            line: 0,
            message: format!("embedding table {}: {e}", path.display()),
        })?;
        for (text, v) in &table.vectors {
            if v.len() != table.dim {
                return Err(Error::RecordParse {
                    line: 0,
                    message: format!(
                        "embedding table {}: entry '{text}' has {} values, expected {}",
                        path.display(),
                        v.len(),
                        table.dim
                    ),
                });
            }
        }
        Ok(TableEmbeddingBackend {
            model_id: table.model_id,
            dim: table.dim,
            vectors: table.vectors,
        })
    }
}

impl EmbeddingBackend for TableEmbeddingBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(t)
                    .cloned()
                    .ok_or_else(|| Error::Backend(format!("no table vector for '{t}'")))
            })
            .collect()
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Client for an embeddings endpoint speaking the common
/// `{model, input}` / `data[i].embedding` shape.
pub struct HttpEmbeddingBackend {
    http: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
    /// Retrieval-model prefix (e.g. "query: " for the E5 family), prepended
    /// to every input before the request. Cache keys stay prefix-free.
    prefix: String,
    dim: usize,
}

impl HttpEmbeddingBackend {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        prefix: impl Into<String>,
        dim: usize,
    ) -> Self {
        HttpEmbeddingBackend {
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("building http client"),
            url: url.into(),
            model: model.into(),
            api_key,
            prefix: prefix.into(),
            dim,
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

impl EmbeddingBackend for HttpEmbeddingBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let input: Vec<String> = texts.iter().map(|t| format!("{}{t}", self.prefix)).collect();
        let body = json!({ "model": self.model, "input": input });
        let mut request = self.http.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response: EmbeddingsResponse = request
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Backend(format!("embeddings endpoint: {e}")))?
            .json()
            .map_err(|e| Error::Backend(format!("embeddings endpoint returned bad JSON: {e}")))?;
        if response.data.len() != texts.len() {
            return Err(Error::Backend(format!(
                "embeddings endpoint returned {} vectors for {} inputs",
                response.data.len(),
                texts.len()
            )));
        }
        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        for (pos, datum) in response.data.into_iter().enumerate() {
            let slot = datum.index.unwrap_or(pos);
            if slot >= out.len() || out[slot].is_some() {
                return Err(Error::Backend(format!(
                    "embeddings endpoint returned bad index {slot}"
                )));
            }
            out[slot] = Some(datum.embedding);
        }
        Ok(out.into_iter().map(|v| v.expect("slot filled")).collect())
    }

    fn model_id(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }
}
