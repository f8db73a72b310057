//! Raw-text sectioning.

use std::sync::OnceLock;

use regex::Regex;

use super::{classify_heading, Section, SectionKind};

fn latex_section_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\\section\*?\{([^}]*)\}").unwrap())
}

fn numbered_heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // "3. Experimental Setup", "2.1 Data", "4 Results"
    RE.get_or_init(|| Regex::new(r"^\s*\d+(\.\d+)*\.?\s+(\S.*)$").unwrap())
}

/// Split raw paper text into sections.
///
/// LaTeX documents are split at every `\section{...}` command. Texts without
/// LaTeX sectioning are split at lines that look like headings: numbered
/// headings ("3. Experimental Setup") or short title-case lines ("Related
/// Work"). Anything before the first heading becomes an `Other` section
/// headed "preamble". Sections whose body is empty after trimming are
/// dropped.
pub fn segment_sections(raw: &str) -> Vec<Section> {
    if raw.trim().is_empty() {
        return Vec::new();
    }
    let boundaries = latex_boundaries(raw);
    let boundaries = if boundaries.is_empty() {
        plain_boundaries(raw)
    } else {
        boundaries
    };
    assemble(raw, &boundaries)
}

/// A heading occurrence: heading text plus the byte span of the heading
/// marker in the raw input (body text runs between consecutive spans).
struct Boundary {
    heading: String,
    start: usize,
    end: usize,
}

fn latex_boundaries(raw: &str) -> Vec<Boundary> {
    latex_section_re()
        .captures_iter(raw)
        .map(|cap| {
            let whole = cap.get(0).unwrap();
            Boundary {
                heading: cap[1].trim().to_string(),
                start: whole.start(),
                end: whole.end(),
            }
        })
        .collect()
}

fn plain_boundaries(raw: &str) -> Vec<Boundary> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let trimmed_len = line.trim_end_matches(['\n', '\r']).len();
        let content = &line[..trimmed_len];
        if let Some(heading) = heading_text(content) {
            out.push(Boundary {
                heading,
                start: offset,
                end: offset + line.len(),
            });
        }
        offset += line.len();
    }
    out
}

/// Returns the heading text when a line looks like a section heading.
fn heading_text(line: &str) -> Option<String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.len() > 80 {
        return None;
    }
    if let Some(cap) = numbered_heading_re().captures(trimmed) {
        let title = cap.get(2).unwrap().as_str();
        if title.chars().next().is_some_and(|c| c.is_uppercase())
            && title.split_whitespace().count() <= 8
            && !trimmed.ends_with(['.', ',', ';', ':', '!', '?'])
        {
            return Some(trimmed.to_string());
        }
        return None;
    }
    if is_title_case(trimmed) {
        return Some(trimmed.to_string());
    }
    None
}

/// Short all-words-capitalized lines count as headings; connective words
/// ("of", "and", ...) are allowed lowercase, and the line must not end like
/// a sentence.
fn is_title_case(line: &str) -> bool {
    const CONNECTIVES: &[&str] = &[
        "a", "an", "and", "as", "at", "by", "for", "in", "of", "on", "or", "the", "to", "with",
    ];
    if line.ends_with(['.', ',', ';', ':', '!', '?']) {
        return false;
    }
    let words: Vec<&str> = line.split_whitespace().collect();
    if words.is_empty() || words.len() > 8 {
        return false;
    }
    // The first word must be capitalized; later words may be connectives.
    for (i, word) in words.iter().enumerate() {
        let first = word.chars().next().unwrap();
        if first.is_uppercase() {
            continue;
        }
        if i > 0 && CONNECTIVES.contains(&word.to_lowercase().as_str()) {
            continue;
        }
        return false;
    }
    true
}

fn assemble(raw: &str, boundaries: &[Boundary]) -> Vec<Section> {
    let mut sections = Vec::new();
    let preamble_end = boundaries.first().map_or(raw.len(), |b| b.start);
    let preamble = raw[..preamble_end].trim();
    if !preamble.is_empty() {
        sections.push(Section {
            kind: SectionKind::Other,
            heading: "preamble".into(),
            body: preamble.to_string(),
        });
    }
    for (i, b) in boundaries.iter().enumerate() {
        let body_end = boundaries.get(i + 1).map_or(raw.len(), |next| next.start);
        let body = raw[b.end..body_end].trim();
        if body.is_empty() {
            continue;
        }
        sections.push(Section {
            kind: classify_heading(&b.heading),
            heading: b.heading.clone(),
            body: body.to_string(),
        });
    }
    sections
}
