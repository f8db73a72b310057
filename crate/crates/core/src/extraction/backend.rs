//! Chat-completion backends: the deterministic mock and the HTTP client.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// A chat-completion endpoint that turns a rendered prompt into raw
/// response text.
pub trait ExtractionBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
    fn model_id(&self) -> &str;
}

/// One substring rule of the mock backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub emit: Vec<String>,
}

/// Deterministic rule-table backend: every rule whose `contains` string
/// occurs in the prompt (case-insensitively) contributes its items, one per
/// line; no match yields the NONE sentinel.
pub struct MockChatBackend {
    rules: Vec<MockRule>,
}

impl MockChatBackend {
    pub fn new(rules: Vec<MockRule>) -> Self {
        MockChatBackend { rules }
    }

    /// Load rules from a JSON file holding a list of `{contains, emit}`
    /// objects.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: Vec<MockRule> = serde_json::from_str(&data).map_err(|e| Error::RecordParse {
            line: 0,
            message: format!("mock rule file {}: {e}", path.display()),
        })?;
        Ok(MockChatBackend { rules })
    }
}

impl ExtractionBackend for MockChatBackend {
    fn complete(&self, prompt: &str) -> Result<String> {
        let haystack = prompt.to_lowercase();
        let mut lines = Vec::new();
        for rule in &self.rules {
            if haystack.contains(&rule.contains.to_lowercase()) {
                lines.extend(rule.emit.iter().cloned());
            }
        }
        if lines.is_empty() {
            Ok("NONE".to_string())
        } else {
            Ok(lines.join("\n"))
        }
    }

    fn model_id(&self) -> &str {
        "mock"
    }
}

/// Client for a chat-completions endpoint speaking the common
/// `{model, messages, temperature}` / `choices[0].message.content` shape.
/// Decoding is pinned to temperature 0.
pub struct HttpChatBackend {
    http: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpChatBackend {
    pub fn new(url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpChatBackend {
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("building http client"),
            url: url.into(),
            model: model.into(),
            api_key,
        }
    }
}

impl ExtractionBackend for HttpChatBackend {
    fn complete(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let mut request = self.http.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response: serde_json::Value = request
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Backend(format!("chat endpoint: {e}")))?
            .json()
            .map_err(|e| Error::Backend(format!("chat endpoint returned non-JSON: {e}")))?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| {
                Error::Backend("chat response missing choices[0].message.content".into())
            })
    }

    fn model_id(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_matches_case_insensitively() {
        let backend = MockChatBackend::new(vec![MockRule {
            contains: "Support Vector".into(),
            emit: vec!["SVM".into()],
        }]);
        assert_eq!(backend.complete("a SUPPORT VECTOR machine").unwrap(), "SVM");
        assert_eq!(backend.complete("nothing relevant").unwrap(), "NONE");
    }

    #[test]
    fn mock_concatenates_all_matching_rules() {
        let backend = MockChatBackend::new(vec![
            MockRule {
                contains: "a".into(),
                emit: vec!["one".into()],
            },
            MockRule {
                contains: "b".into(),
                emit: vec!["two".into(), "three".into()],
            },
        ]);
        assert_eq!(backend.complete("ab").unwrap(), "one\ntwo\nthree");
    }
}
