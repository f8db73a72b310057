//! Ingestion of a local directory of `.txt`/`.tex` files.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;

use super::{segment_sections, Paper, PaperSource};
use crate::error::{Error, Result};

fn title_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\\title\{([^}]*)\}").unwrap())
}

/// Ingest every readable `.txt` or `.tex` file under `path` (non-recursive),
/// one [`Paper`] per file, id = file stem. Unreadable files are skipped with
/// a warning; a directory yielding no papers is an error.
pub fn ingest_local(path: impl AsRef<Path>) -> Result<Vec<Paper>> {
    let dir = path.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<std::path::PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("txt") | Some("tex")
                )
        })
        .collect();
    files.sort();

    let mut papers = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for file in files {
        let contents = match std::fs::read_to_string(&file) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("skipping unreadable file {}: {e}", file.display());
                continue;
            }
        };
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        // Same stem with both extensions: fall back to the full file name.
        let id = if seen_ids.insert(stem.clone()) {
            stem.clone()
        } else {
            let full = file
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            log::warn!("duplicate paper id '{stem}', using '{full}' instead");
            seen_ids.insert(full.clone());
            full
        };
        let fetched_at = file_mtime(&file);
        let is_tex = file.extension().and_then(|e| e.to_str()) == Some("tex");
        let paper = if is_tex {
            parse_tex(&id, &stem, &contents, fetched_at)
        } else {
            Paper {
                id,
                title: stem,
                abstract_text: String::new(),
                sections: segment_sections(&contents),
                source: PaperSource::LocalFile,
                fetched_at,
            }
        };
        papers.push(paper);
    }
    if papers.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no .txt or .tex files found under {}",
            dir.display()
        )));
    }
    Ok(papers)
}

/// Local files carry their modification time as `fetched_at` so repeated
/// ingests of the same directory serialize identically.
fn file_mtime(path: &Path) -> DateTime<Utc> {
    std::fs::metadata(path)
        .and_then(|m| m.modified())
        .map(DateTime::<Utc>::from)
        .unwrap_or(DateTime::<Utc>::MIN_UTC)
}

fn parse_tex(id: &str, stem: &str, contents: &str, fetched_at: DateTime<Utc>) -> Paper {
    let stripped = strip_comments(contents);
    let title = title_re()
        .captures(&stripped)
        .map(|cap| cap[1].trim().to_string())
        .filter(|t| !t.is_empty())
        .unwrap_or_else(|| stem.to_string());
    let abstract_text = between(&stripped, r"\begin{abstract}", r"\end{abstract}")
        .map(|s| s.trim().to_string())
        .unwrap_or_default();
    // Macros are not expanded; only the preamble is cut away.
    let body = match between(&stripped, r"\begin{document}", r"\end{document}") {
        Some(doc) => doc.to_string(),
        None => match stripped.split_once(r"\begin{document}") {
            Some((_, rest)) => rest.to_string(),
            None => stripped,
        },
    };
    Paper {
        id: id.to_string(),
        title,
        abstract_text,
        sections: segment_sections(&body),
        source: PaperSource::LocalFile,
        fetched_at,
    }
}

/// Remove `%` line comments, keeping escaped `\%`.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let mut cut = line.len();
        let bytes = line.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'%' && (i == 0 || bytes[i - 1] != b'\\') {
                cut = i;
                break;
            }
        }
        out.push_str(&line[..cut]);
        if cut < line.len() && line.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(&text[start..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SectionKind;

    #[test]
    fn one_paper_per_txt_file() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a", "b", "c"] {
            std::fs::write(dir.path().join(format!("{name}.txt")), "some text").unwrap();
        }
        std::fs::write(dir.path().join("ignored.pdf"), "binary").unwrap();
        let papers = ingest_local(dir.path()).unwrap();
        assert_eq!(papers.len(), 3);
        let ids: Vec<&str> = papers.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(papers.iter().all(|p| p.source == PaperSource::LocalFile));
    }

    #[test]
    fn tex_comments_and_sections() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("x.tex"),
            "% comment\n\\section{Data}body",
        )
        .unwrap();
        let papers = ingest_local(dir.path()).unwrap();
        assert_eq!(papers.len(), 1);
        let data: Vec<_> = papers[0]
            .sections
            .iter()
            .filter(|s| s.kind == SectionKind::Data)
            .collect();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].body, "body");
    }

    #[test]
    fn tex_preamble_title_and_abstract() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("y.tex"),
            concat!(
                "\\documentclass{article}\n",
                "\\title{A Study}\n",
                "\\begin{document}\n",
                "\\begin{abstract}We study things.\\end{abstract}\n",
                "\\section{Introduction}\nhello\n",
                "\\end{document}\n"
            ),
        )
        .unwrap();
        let papers = ingest_local(dir.path()).unwrap();
        let p = &papers[0];
        assert_eq!(p.title, "A Study");
        assert_eq!(p.abstract_text, "We study things.");
        assert!(p
            .sections
            .iter()
            .any(|s| s.kind == SectionKind::Introduction && s.body == "hello"));
        // The preamble before \begin{document} is gone.
        assert!(!p.sections.iter().any(|s| s.body.contains("documentclass")));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_local(dir.path()).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus(_)));
    }

    #[test]
    fn duplicate_stems_get_distinct_ids() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.tex"), "\\section{Data}body").unwrap();
        std::fs::write(dir.path().join("a.txt"), "plain").unwrap();
        let papers = ingest_local(dir.path()).unwrap();
        let mut ids: Vec<&str> = papers.iter().map(|p| p.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 2);
    }

    #[test]
    fn escaped_percent_survives_comment_stripping() {
        assert_eq!(strip_comments("gain of 5\\% here"), "gain of 5\\% here");
        assert_eq!(strip_comments("kept % dropped\nnext"), "kept \nnext");
    }
}
