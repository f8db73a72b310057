//! arXiv Atom API client with pagination, politeness delay, and retries.

use std::time::Duration;

use chrono::Utc;
use serde::Deserialize;

use super::{Paper, PaperSource};
use crate::error::{Error, Result};

/// Default public endpoint.
pub const DEFAULT_API_URL: &str = "http://export.arxiv.org/api/query";

/// Spacing between successive page requests, per the API's usage terms.
pub const DEFAULT_PAGE_DELAY: Duration = Duration::from_secs(3);

const MAX_RETRIES: u32 = 3;

/// Client for the arXiv Atom feed endpoint.
pub struct ArxivClient {
    http: reqwest::blocking::Client,
    api_url: String,
    page_delay: Duration,
    retry_base_delay: Duration,
}

impl ArxivClient {
    pub fn new() -> Self {
        Self::with_endpoint(DEFAULT_API_URL)
    }

    /// Point the client at a different endpoint (tests use a local stub).
    pub fn with_endpoint(api_url: impl Into<String>) -> Self {
        ArxivClient {
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("building http client"),
            api_url: api_url.into(),
            page_delay: DEFAULT_PAGE_DELAY,
            retry_base_delay: Duration::from_millis(500),
        }
    }

    /// Override the inter-page delay. The default honors the API's 3-second
    /// politeness rule; tests dial it down.
    pub fn page_delay(mut self, delay: Duration) -> Self {
        self.page_delay = delay;
        self
    }

    /// Override the base delay of the exponential retry backoff.
    pub fn retry_base_delay(mut self, delay: Duration) -> Self {
        self.retry_base_delay = delay;
        self
    }

    /// Fetch up to `max_results` papers matching `query`, paging through the
    /// feed `page_size` entries at a time until the feed is exhausted or the
    /// cap is reached. Transient failures are retried with exponential
    /// backoff; duplicate ids within one run are dropped.
    pub fn fetch_papers(
        &self,
        query: &str,
        max_results: usize,
        page_size: usize,
    ) -> Result<Vec<Paper>> {
        if max_results == 0 || page_size == 0 {
            return Err(Error::InvalidArgument(
                "max_results and page_size must be positive".into(),
            ));
        }
        if page_size > max_results {
            return Err(Error::InvalidArgument(format!(
                "page_size {page_size} exceeds max_results {max_results}"
            )));
        }
        let mut papers: Vec<Paper> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut start = 0usize;
        loop {
            let want = (max_results - papers.len()).min(page_size);
            if want == 0 {
                break;
            }
            if start > 0 {
                std::thread::sleep(self.page_delay);
            }
            let body = self.get_page(query, start, want)?;
            let entries = parse_feed(&body)?;
            let got = entries.len();
            for entry in entries {
                if seen.insert(entry.id.clone()) && papers.len() < max_results {
                    papers.push(Paper {
                        id: entry.id,
                        title: entry.title,
                        abstract_text: entry.summary,
                        sections: Vec::new(),
                        source: PaperSource::ArxivApi,
                        fetched_at: Utc::now(),
                    });
                }
            }
            if got < want || papers.len() >= max_results {
                break;
            }
            start += got;
        }
        Ok(papers)
    }

    fn get_page(&self, query: &str, start: usize, max_results: usize) -> Result<String> {
        let mut attempt = 0u32;
        loop {
            let result = self
                .http
                .get(&self.api_url)
                .query(&[
                    ("search_query", query),
                    ("start", &start.to_string()),
                    ("max_results", &max_results.to_string()),
                ])
                .send()
                .and_then(|resp| resp.error_for_status())
                .and_then(|resp| resp.text());
            match result {
                Ok(text) => return Ok(text),
                Err(e) if attempt < MAX_RETRIES => {
                    attempt += 1;
                    let backoff = self.retry_base_delay * 2u32.pow(attempt - 1);
                    log::warn!("arxiv request failed (attempt {attempt}): {e}; retrying");
                    std::thread::sleep(backoff);
                }
                Err(e) => {
                    return Err(Error::Network(format!(
                        "arxiv endpoint failed after {MAX_RETRIES} retries: {e}"
                    )))
                }
            }
        }
    }
}

impl Default for ArxivClient {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Deserialize)]
struct Feed {
    #[serde(rename = "entry", default)]
    entries: Vec<RawEntry>,
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    id: Option<String>,
    title: Option<String>,
    summary: Option<String>,
}

struct FeedEntry {
    id: String,
    title: String,
    summary: String,
}

/// Parse an Atom feed body, validating each entry; a missing field fails
/// with the entry's index.
fn parse_feed(xml: &str) -> Result<Vec<FeedEntry>> {
    let feed: Feed = quick_xml::de::from_str(xml).map_err(|e| Error::FeedParse {
        index: 0,
        message: format!("malformed feed: {e}"),
    })?;
    feed.entries
        .into_iter()
        .enumerate()
        .map(|(index, raw)| {
            let field = |value: Option<String>, name: &str| {
                value
                    .map(|v| collapse_ws(&v))
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| Error::FeedParse {
                        index,
                        message: format!("missing or empty <{name}>"),
                    })
            };
            let id_url = field(raw.id, "id")?;
            let id = id_url
                .rsplit_once("/abs/")
                .map(|(_, tail)| tail.to_string())
                .unwrap_or(id_url);
            Ok(FeedEntry {
                id,
                title: field(raw.title, "title")?,
                summary: field(raw.summary, "summary")?,
            })
        })
        .collect()
}

/// Feed text fields wrap across lines with indentation; collapse them.
fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
