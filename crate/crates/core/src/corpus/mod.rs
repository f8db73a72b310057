//! Paper acquisition and sectioning.
//!
//! Papers come from the arXiv Atom API ([`arxiv::ArxivClient`]) or from a
//! directory of plain-text/LaTeX files ([`ingest_local`]). Raw text is split
//! into labeled [`Section`]s so later extraction stages can target the parts
//! of a paper where a given kind of information actually lives.

mod local;
mod segment;

pub mod arxiv;

pub use local::ingest_local;
pub use segment::segment_sections;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::Category;

/// Where a paper came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PaperSource {
    ArxivApi,
    LocalFile,
}

/// Coarse section role, assigned from the heading by a fixed keyword rule
/// table (see [`classify_heading`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    Introduction,
    Methods,
    Results,
    Data,
    Experiments,
    Conclusion,
    Other,
}

/// One labeled span of paper text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub heading: String,
    pub body: String,
}

/// One ingested document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paper {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub sections: Vec<Section>,
    pub source: PaperSource,
    pub fetched_at: DateTime<Utc>,
}

/// Classify a heading into a [`SectionKind`] by case-insensitive substring
/// rules, applied in a fixed order. Headings matching no rule are `Other`.
pub fn classify_heading(heading: &str) -> SectionKind {
    let h = heading.to_lowercase();
    if h.contains("introduction") {
        SectionKind::Introduction
    } else if h.contains("data") {
        SectionKind::Data
    } else if h.contains("experiment") {
        SectionKind::Experiments
    } else if h.contains("method") || h.contains("approach") || h.contains("model") {
        SectionKind::Methods
    } else if h.contains("result") {
        SectionKind::Results
    } else if h.contains("conclusion") {
        SectionKind::Conclusion
    } else {
        SectionKind::Other
    }
}

/// Build an arXiv `search_query` expression: an optional category restriction
/// AND-ed with one quoted `all:` term per keyword.
///
/// `(["Machine Learning", "Dataset"], Some("q-fin"))` becomes
/// `cat:q-fin* AND all:"Machine Learning" AND all:"Dataset"`.
pub fn build_query(keywords: &[String], category_filter: Option<&str>) -> Result<String> {
    if keywords.is_empty() {
        return Err(Error::InvalidArgument(
            "build_query requires at least one keyword".into(),
        ));
    }
    let mut parts = Vec::with_capacity(keywords.len() + 1);
    if let Some(cat) = category_filter {
        let cat = cat.trim();
        if cat.is_empty() {
            return Err(Error::InvalidArgument(
                "category filter must not be blank".into(),
            ));
        }
        if cat.ends_with('*') {
            parts.push(format!("cat:{cat}"));
        } else {
            parts.push(format!("cat:{cat}*"));
        }
    }
    for kw in keywords {
        let kw = kw.trim();
        if kw.is_empty() {
            return Err(Error::InvalidArgument(
                "keywords must be non-empty after trimming".into(),
            ));
        }
        // Already-quoted phrases are preserved rather than double-quoted.
        let phrase = kw
            .strip_prefix('"')
            .and_then(|rest| rest.strip_suffix('"'))
            .unwrap_or(kw);
        parts.push(format!("all:\"{phrase}\""));
    }
    Ok(parts.join(" AND "))
}

/// The section kinds an extraction category targets.
pub fn target_kinds(category: Category) -> &'static [SectionKind] {
    match category {
        Category::Objective => &[SectionKind::Introduction],
        Category::Method => &[SectionKind::Methods, SectionKind::Results],
        Category::Dataset => &[SectionKind::Data, SectionKind::Experiments],
    }
}

/// Pick the sections to run extraction over for `category`.
///
/// Falls back to all sections when none of the targeted kinds are present,
/// and to a synthetic `Other` section wrapping the abstract when the paper
/// has no sections at all. A paper with neither sections nor an abstract is
/// an error.
pub fn select_sections(paper: &Paper, category: Category) -> Result<Vec<Section>> {
    let kinds = target_kinds(category);
    let targeted: Vec<Section> = paper
        .sections
        .iter()
        .filter(|s| kinds.contains(&s.kind))
        .cloned()
        .collect();
    if !targeted.is_empty() {
        return Ok(targeted);
    }
    if !paper.sections.is_empty() {
        return Ok(paper.sections.clone());
    }
    if !paper.abstract_text.trim().is_empty() {
        return Ok(vec![Section {
            kind: SectionKind::Other,
            heading: "abstract".into(),
            body: paper.abstract_text.clone(),
        }]);
    }
    Err(Error::EmptyPaper(paper.id.clone()))
}
