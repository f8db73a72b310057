//! Line-oriented JSON persistence for pipeline artifacts.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Write one JSON record per line.
pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read JSON records, one per line. Blank lines are skipped; a malformed
/// line fails with its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::RecordParse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::RecordParse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Read a JSONL file from disk.
pub fn read_jsonl_file<T: DeserializeOwned>(path: impl AsRef<std::path::Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let items = vec![serde_json::json!({"a": 1}), serde_json::json!({"a": 2})];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &items).unwrap();
        let back: Vec<serde_json::Value> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, items);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let data = b"{\"a\": 1}\nnot json\n";
        let err = read_jsonl::<serde_json::Value, _>(&data[..]).unwrap_err();
        match err {
            Error::RecordParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }
}
