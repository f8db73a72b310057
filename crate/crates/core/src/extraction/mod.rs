//! Prompted mention extraction.
//!
//! For each paper and category, the targeted sections are rendered into a
//! prompt, sent to an [`ExtractionBackend`], and the line-per-item response
//! is parsed into [`Mention`]s. The deterministic [`MockChatBackend`] makes
//! the whole stage reproducible without inference hardware.

mod backend;

pub use backend::{ExtractionBackend, HttpChatBackend, MockChatBackend, MockRule};

use serde::{Deserialize, Serialize};

use crate::corpus::{select_sections, Paper, SectionKind};
use crate::error::{Error, Result};

/// Default cap on section characters inserted into a prompt.
pub const DEFAULT_PROMPT_BUDGET: usize = 12_000;

/// How many times a failed backend call is retried before giving up.
pub(crate) const BACKEND_RETRIES: u32 = 3;

/// The three extraction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Objective,
    Method,
    Dataset,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Objective, Category::Method, Category::Dataset];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Objective => "Objective",
            Category::Method => "Method",
            Category::Dataset => "Dataset",
        }
    }

    /// Short slug used in cluster identifiers.
    pub fn slug(&self) -> &'static str {
        match self {
            Category::Objective => "obj",
            Category::Method => "met",
            Category::Dataset => "dat",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The pieces of an extraction prompt for one category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub category: Category,
    pub instruction: String,
    pub question: String,
    pub format_rule: String,
}

impl PromptTemplate {
    /// The built-in template for a category.
    pub fn builtin(category: Category) -> Self {
        let (instruction, question) = match category {
            Category::Objective => (
                "You are reading an excerpt from a research paper. \
                 Identify the research objectives the authors state.",
                "What is the purpose of this study?",
            ),
            Category::Method => (
                "You are reading an excerpt from a research paper. \
                 Identify the machine learning models or methods the authors use.",
                "Which models are used in this study?",
            ),
            Category::Dataset => (
                "You are reading an excerpt from a research paper. \
                 Identify the datasets the authors use.",
                "Which datasets are used?",
            ),
        };
        PromptTemplate {
            category,
            instruction: instruction.to_string(),
            question: question.to_string(),
            format_rule: "Answer with one item per line and nothing else. \
                          If there are none, answer NONE."
                .to_string(),
        }
    }
}

/// One extracted surface expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub paper_id: String,
    pub category: Category,
    pub surface: String,
    pub normalized: String,
    pub section_kind: SectionKind,
}

/// Canonical form of a surface: lowercased, parenthetical spans removed,
/// internal whitespace collapsed, trimmed.
pub fn normalize(surface: &str) -> String {
    let mut depth = 0usize;
    let mut kept = String::with_capacity(surface.len());
    for c in surface.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => kept.push(c),
            _ => {}
        }
    }
    kept.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render a prompt: instruction, question, format rule, then the section
/// text truncated to `char_budget` characters, joined by a blank line.
pub fn render_prompt(template: &PromptTemplate, section_text: &str, char_budget: usize) -> String {
    let truncated: String = section_text.chars().take(char_budget).collect();
    format!(
        "{}\n\n{}\n\n{}\n\n{}",
        template.instruction, template.question, template.format_rule, truncated
    )
}

/// Parse a line-per-item response: strip bullet markers and surrounding
/// quotes, drop blanks, honor the NONE sentinel, and deduplicate
/// case-insensitively keeping the first casing.
pub fn parse_response(raw: &str) -> Vec<String> {
    let mut items: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for line in raw.lines() {
        let item = clean_item(line);
        if item.is_empty() {
            continue;
        }
        if seen.insert(item.to_lowercase()) {
            items.push(item);
        }
    }
    if items.len() == 1 && items[0].eq_ignore_ascii_case("none") {
        return Vec::new();
    }
    items
}

fn clean_item(line: &str) -> String {
    let mut s = line.trim();
    // Bullet markers: "-", "*", "•", and "1."/"1)"-style numbering.
    if let Some(rest) = s.strip_prefix(['-', '*', '•']) {
        s = rest.trim_start();
    } else {
        let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let after = &s[digits..];
            if let Some(rest) = after.strip_prefix(['.', ')']) {
                s = rest.trim_start();
            }
        }
    }
    let s = s.trim();
    for quote in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(quote) && s.ends_with(quote) {
            return s[1..s.len() - 1].trim().to_string();
        }
    }
    s.to_string()
}

/// Extract mentions of `category` from `paper`.
///
/// Each targeted section is rendered, completed, and parsed; surfaces are
/// deduplicated per paper on (category, normalized). A section whose backend
/// call still fails after retries is skipped with a warning; the paper fails
/// only when every section does.
pub fn extract_mentions(
    paper: &Paper,
    category: Category,
    backend: &dyn ExtractionBackend,
    char_budget: usize,
) -> Result<Vec<Mention>> {
    let template = PromptTemplate::builtin(category);
    let sections = select_sections(paper, category)?;
    let mut mentions: Vec<Mention> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut failures = 0usize;
    let mut last_error = String::new();
    for section in &sections {
        let prompt = render_prompt(&template, &section.body, char_budget);
        let response = match complete_with_retries(backend, &prompt) {
            Ok(r) => r,
            Err(e) => {
                log::warn!(
                    "extraction failed for paper '{}' section '{}': {e}",
                    paper.id,
                    section.heading
                );
                failures += 1;
                last_error = e.to_string();
                continue;
            }
        };
        for surface in parse_response(&response) {
            let normalized = normalize(&surface);
            if surface.trim().is_empty() || normalized.is_empty() {
                continue;
            }
            if seen.insert(normalized.clone()) {
                mentions.push(Mention {
                    paper_id: paper.id.clone(),
                    category,
                    surface: surface.trim().to_string(),
                    normalized,
                    section_kind: section.kind,
                });
            }
        }
    }
    if failures == sections.len() && !sections.is_empty() {
        return Err(Error::Extraction {
            paper_id: paper.id.clone(),
            message: format!("all {} section(s) failed: {last_error}", sections.len()),
        });
    }
    Ok(mentions)
}

fn complete_with_retries(backend: &dyn ExtractionBackend, prompt: &str) -> Result<String> {
    let mut attempt = 0u32;
    loop {
        match backend.complete(prompt) {
            Ok(r) => return Ok(r),
            Err(e) if attempt < BACKEND_RETRIES => {
                attempt += 1;
                log::debug!("backend attempt {attempt} failed: {e}");
            }
            Err(e) => return Err(e),
        }
    }
}

/// Extract all categories over a corpus, fanning papers out across up to
/// `concurrency` worker threads. The merged result is sorted by
/// (paper_id, category, normalized) so it does not depend on completion
/// order.
pub fn extract_corpus(
    papers: &[Paper],
    backend: &dyn ExtractionBackend,
    char_budget: usize,
    concurrency: usize,
) -> Result<Vec<Mention>> {
    if concurrency == 0 {
        return Err(Error::InvalidArgument("concurrency must be >= 1".into()));
    }
    let workers = concurrency.min(papers.len()).max(1);
    let mut per_paper: Vec<Result<Vec<Mention>>> = Vec::with_capacity(papers.len());
    if workers <= 1 {
        for paper in papers {
            per_paper.push(extract_paper(paper, backend, char_budget));
        }
    } else {
        let results: Vec<std::sync::Mutex<Option<Result<Vec<Mention>>>>> =
            papers.iter().map(|_| std::sync::Mutex::new(None)).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= papers.len() {
                        break;
                    }
                    let out = extract_paper(&papers[i], backend, char_budget);
                    *results[i].lock().unwrap() = Some(out);
                });
            }
        });
        for slot in results {
            per_paper.push(slot.into_inner().unwrap().expect("worker filled slot"));
        }
    }
    let mut mentions = Vec::new();
    for result in per_paper {
        mentions.extend(result?);
    }
    mentions.sort_by(|a, b| {
        (&a.paper_id, a.category, &a.normalized).cmp(&(&b.paper_id, b.category, &b.normalized))
    });
    Ok(mentions)
}

fn extract_paper(
    paper: &Paper,
    backend: &dyn ExtractionBackend,
    char_budget: usize,
) -> Result<Vec<Mention>> {
    let mut out = Vec::new();
    for category in Category::ALL {
        out.extend(extract_mentions(paper, category, backend, char_budget)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PaperSource, Section};
    use chrono::{DateTime, Utc};

    fn paper(id: &str, sections: Vec<Section>) -> Paper {
        Paper {
            id: id.into(),
            title: "t".into(),
            abstract_text: String::new(),
            sections,
            source: PaperSource::LocalFile,
            fetched_at: DateTime::<Utc>::MIN_UTC,
        }
    }

    fn sec(kind: SectionKind, body: &str) -> Section {
        Section {
            kind,
            heading: format!("{kind:?}"),
            body: body.into(),
        }
    }

    #[test]
    fn prompt_contains_parts_in_order() {
        let t = PromptTemplate::builtin(Category::Dataset);
        let p = render_prompt(&t, "We use SP500 prices.", DEFAULT_PROMPT_BUDGET);
        let q = p.find("Which datasets are used?").unwrap();
        let i = p.find(&t.instruction).unwrap();
        let f = p.find(&t.format_rule).unwrap();
        let s = p.find("We use SP500 prices.").unwrap();
        assert!(i < q && q < f && f < s);
    }

    #[test]
    fn objective_prompt_quotes_the_question() {
        let t = PromptTemplate::builtin(Category::Objective);
        let p = render_prompt(&t, "x", DEFAULT_PROMPT_BUDGET);
        assert!(p.contains("the purpose of this study"));
    }

    #[test]
    fn prompt_truncates_to_budget() {
        let t = PromptTemplate::builtin(Category::Method);
        let long: String = "a".repeat(20_000);
        let p = render_prompt(&t, &long, 12_000);
        let tail = p.rsplit("\n\n").next().unwrap();
        assert_eq!(tail.chars().count(), 12_000);
    }

    #[test]
    fn parse_strips_bullets() {
        assert_eq!(
            parse_response("- SVM\n- Support Vector Machine\n"),
            vec!["SVM", "Support Vector Machine"]
        );
    }

    #[test]
    fn parse_none_sentinel() {
        assert!(parse_response("NONE").is_empty());
        assert!(parse_response("none\n").is_empty());
        assert!(parse_response("").is_empty());
    }

    #[test]
    fn parse_dedups_case_insensitively() {
        assert_eq!(
            parse_response("1. SP500\n2. sp500\n3. Stocktwits"),
            vec!["SP500", "Stocktwits"]
        );
    }

    #[test]
    fn parse_strips_quotes_and_numbering() {
        assert_eq!(parse_response("1) \"S&P 500\"\n2) 'LSTM'"), vec!["S&P 500", "LSTM"]);
    }

    #[test]
    fn normalize_removes_parentheticals() {
        assert_eq!(normalize("S&P 500 (SP500)"), "s&p 500");
        assert_eq!(normalize("  Support  Vector\tMachine "), "support vector machine");
        assert_eq!(normalize("A (b (c) d) E"), "a e");
    }

    #[test]
    fn mock_backend_yields_one_mention() {
        let backend = MockChatBackend::new(vec![MockRule {
            contains: "support vector".into(),
            emit: vec!["SVM".into()],
        }]);
        let p = paper(
            "p1",
            vec![sec(SectionKind::Methods, "we train a support vector machine")],
        );
        let got = extract_mentions(&p, Category::Method, &backend, DEFAULT_PROMPT_BUDGET).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].surface, "SVM");
        assert_eq!(got[0].normalized, "svm");
        assert_eq!(got[0].section_kind, SectionKind::Methods);
    }

    #[test]
    fn duplicate_across_sections_dedups_per_paper() {
        let backend = MockChatBackend::new(vec![MockRule {
            contains: "stock prices".into(),
            emit: vec!["predict stock prices".into()],
        }]);
        let p = paper(
            "p1",
            vec![
                sec(SectionKind::Introduction, "we predict stock prices"),
                sec(SectionKind::Introduction, "stock prices matter"),
            ],
        );
        let got =
            extract_mentions(&p, Category::Objective, &backend, DEFAULT_PROMPT_BUDGET).unwrap();
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn surfaces_normalizing_to_empty_are_dropped() {
        let backend = MockChatBackend::new(vec![MockRule {
            contains: "weird".into(),
            emit: vec!["(only parens)".into(), "Real Item".into()],
        }]);
        let p = paper("p1", vec![sec(SectionKind::Methods, "weird text")]);
        let got = extract_mentions(&p, Category::Method, &backend, DEFAULT_PROMPT_BUDGET).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].surface, "Real Item");
    }

    struct FailingBackend;
    impl ExtractionBackend for FailingBackend {
        fn complete(&self, _prompt: &str) -> Result<String> {
            Err(Error::Backend("boom".into()))
        }
        fn model_id(&self) -> &str {
            "failing"
        }
    }

    #[test]
    fn all_sections_failing_is_a_paper_error() {
        let p = paper("p1", vec![sec(SectionKind::Methods, "text")]);
        let err = extract_mentions(&p, Category::Method, &FailingBackend, 100).unwrap_err();
        assert!(matches!(err, Error::Extraction { .. }));
    }

    #[test]
    fn parallel_extraction_is_deterministic() {
        let backend = MockChatBackend::new(vec![
            MockRule {
                contains: "alpha".into(),
                emit: vec!["A1".into(), "A2".into()],
            },
            MockRule {
                contains: "beta".into(),
                emit: vec!["B1".into()],
            },
        ]);
        let papers: Vec<Paper> = (0..12)
            .map(|i| {
                let body = if i % 2 == 0 { "alpha here" } else { "beta here" };
                paper(&format!("p{i:02}"), vec![sec(SectionKind::Methods, body)])
            })
            .collect();
        let one = extract_corpus(&papers, &backend, 1000, 1).unwrap();
        let four = extract_corpus(&papers, &backend, 1000, 4).unwrap();
        assert_eq!(one, four);
        assert!(!one.is_empty());
    }
}
