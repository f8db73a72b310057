//! Append-only binary vector cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header:  u32 model_id_len | model_id bytes | u32 dim
//! record:  u32 surface_len  | surface bytes  | dim x f32
//! ```
//!
//! Vectors are stored already unit-normalized, so cache hits are
//! bit-identical to the vectors first computed.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::EmbeddingVector;
use crate::error::{Error, Result};

pub struct VectorCache {
    model_id: String,
    dim: Option<usize>,
    entries: HashMap<String, EmbeddingVector>,
    /// Insertion order, kept so a rewrite reproduces the file byte for byte.
    order: Vec<String>,
    path: Option<PathBuf>,
    file: Option<File>,
    header_written: bool,
}

impl VectorCache {
    /// A cache with no backing file.
    pub fn in_memory(model_id: impl Into<String>) -> Self {
        VectorCache {
            model_id: model_id.into(),
            dim: None,
            entries: HashMap::new(),
            order: Vec::new(),
            path: None,
            file: None,
            header_written: false,
        }
    }

    /// Open (or create) a file-backed cache. An existing file written for a
    /// different model is discarded with a warning and overwritten on the
    /// next insert.
    pub fn open(path: impl AsRef<Path>, model_id: impl Into<String>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let model_id = model_id.into();
        let mut cache = VectorCache {
            model_id,
            dim: None,
            entries: HashMap::new(),
            order: Vec::new(),
            path: Some(path.clone()),
            file: None,
            header_written: false,
        };
        if path.exists() {
            match cache.load(&path) {
                Ok(true) => cache.header_written = true,
                Ok(false) => {
                    log::warn!(
                        "cache {} belongs to another model; it will be rebuilt",
                        path.display()
                    );
                }
                Err(e) => {
                    log::warn!("unreadable cache {} ({e}); it will be rebuilt", path.display());
                    cache.entries.clear();
                    cache.order.clear();
                    cache.dim = None;
                }
            }
        }
        Ok(cache)
    }

    /// Returns whether the file matched this cache's model id.
    fn load(&mut self, path: &Path) -> Result<bool> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let Some(id_len) = read_u32_opt(&mut r)? else {
            return Ok(true); // empty file: nothing cached yet
        };
        let mut id_bytes = vec![0u8; id_len as usize];
        r.read_exact(&mut id_bytes).map_err(|e| Error::io(path, e))?;
        let file_model = String::from_utf8_lossy(&id_bytes).to_string();
        let dim = read_u32(&mut r, path)? as usize;
        if file_model != self.model_id {
            return Ok(false);
        }
        self.dim = Some(dim);
        loop {
            let Some(surface_len) = read_u32_opt(&mut r)? else {
                break;
            };
            let mut surface_bytes = vec![0u8; surface_len as usize];
            if r.read_exact(&mut surface_bytes).is_err() {
                log::warn!("cache {} has a truncated record; ignoring tail", path.display());
                break;
            }
            let mut values = vec![0f32; dim];
            let mut buf = vec![0u8; dim * 4];
            if r.read_exact(&mut buf).is_err() {
                log::warn!("cache {} has a truncated record; ignoring tail", path.display());
                break;
            }
            for (i, chunk) in buf.chunks_exact(4).enumerate() {
                values[i] = f32::from_le_bytes(chunk.try_into().unwrap());
            }
            let surface = String::from_utf8_lossy(&surface_bytes).to_string();
            if !self.entries.contains_key(&surface) {
                self.order.push(surface.clone());
            }
            self.entries
                .insert(surface, EmbeddingVector::from_unit_values(values));
        }
        Ok(true)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&EmbeddingVector> {
        self.entries.get(surface)
    }

    /// Surfaces in first-inserted order.
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(|s| s.as_str())
    }

    /// Insert a vector, appending it to the backing file when present.
    pub fn insert(&mut self, surface: String, vector: EmbeddingVector) -> Result<()> {
        match self.dim {
            Some(dim) if dim != vector.dim() => {
                return Err(Error::InvalidArgument(format!(
                    "cache dim {dim} but vector has dim {}",
                    vector.dim()
                )));
            }
            None => self.dim = Some(vector.dim()),
            _ => {}
        }
        if self.path.is_some() {
            self.append_record(&surface, &vector)?;
        }
        if !self.entries.contains_key(&surface) {
            self.order.push(surface.clone());
        }
        self.entries.insert(surface, vector);
        Ok(())
    }

    fn append_record(&mut self, surface: &str, vector: &EmbeddingVector) -> Result<()> {
        let path = self.path.clone().expect("file-backed cache");
        if self.file.is_none() {
            let file = if self.header_written {
                OpenOptions::new()
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?
            } else {
                // New or foreign file: write a fresh header.
                let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                let dim = self.dim.expect("dim set before first write");
                write_header(&mut file, &self.model_id, dim).map_err(|e| Error::io(&path, e))?;
                self.header_written = true;
                // Re-emit anything already held in memory (model switch).
                let order = self.order.clone();
                for s in &order {
                    let v = self.entries[s].clone();
                    write_record(&mut file, s, &v).map_err(|e| Error::io(&path, e))?;
                }
                file
            };
            self.file = Some(file);
        }
        let file = self.file.as_mut().expect("file opened above");
        write_record(file, surface, vector).map_err(|e| Error::io(&path, e))?;
        file.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn write_header(w: &mut impl Write, model_id: &str, dim: usize) -> std::io::Result<()> {
    w.write_all(&(model_id.len() as u32).to_le_bytes())?;
    w.write_all(model_id.as_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    Ok(())
}

fn write_record(w: &mut impl Write, surface: &str, vector: &EmbeddingVector) -> std::io::Result<()> {
    w.write_all(&(surface.len() as u32).to_le_bytes())?;
    w.write_all(surface.as_bytes())?;
    for &v in vector.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

/// Like [`read_u32`] but yields `None` on clean EOF.
fn read_u32_opt(r: &mut impl Read) -> Result<Option<u32>> {
    let mut buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Ok(None), // truncated length: treat as EOF
            Ok(n) => filled += n,
            Err(e) => {
                return Err(Error::Io {
                    path: "<cache>".into(),
                    source: e,
                })
            }
        }
    }
    Ok(Some(u32::from_le_bytes(buf)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.cache");
        let v = EmbeddingVector::unit(&[3.0, 4.0]).unwrap();
        {
            let mut cache = VectorCache::open(&path, "m1").unwrap();
            cache.insert("svm".into(), v.clone()).unwrap();
        }
        let cache = VectorCache::open(&path, "m1").unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get("svm").unwrap().values(), v.values());
        assert_eq!(cache.dim(), Some(2));
    }

    #[test]
    fn foreign_model_file_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.cache");
        {
            let mut cache = VectorCache::open(&path, "m1").unwrap();
            cache
                .insert("a".into(), EmbeddingVector::unit(&[1.0, 0.0]).unwrap())
                .unwrap();
        }
        {
            let mut cache = VectorCache::open(&path, "m2").unwrap();
            assert!(cache.is_empty());
            cache
                .insert("b".into(), EmbeddingVector::unit(&[0.0, 1.0]).unwrap())
                .unwrap();
        }
        let cache = VectorCache::open(&path, "m2").unwrap();
        assert!(cache.get("a").is_none());
        assert!(cache.get("b").is_some());
    }

    #[test]
    fn appending_preserves_existing_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.cache");
        {
            let mut cache = VectorCache::open(&path, "m").unwrap();
            cache
                .insert("a".into(), EmbeddingVector::unit(&[1.0, 0.0]).unwrap())
                .unwrap();
        }
        {
            let mut cache = VectorCache::open(&path, "m").unwrap();
            cache
                .insert("b".into(), EmbeddingVector::unit(&[0.0, 2.0]).unwrap())
                .unwrap();
        }
        let cache = VectorCache::open(&path, "m").unwrap();
        assert_eq!(cache.len(), 2);
        let order: Vec<&str> = cache.surfaces().collect();
        assert_eq!(order, ["a", "b"]);
    }

    #[test]
    fn unicode_surfaces_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.cache");
        {
            let mut cache = VectorCache::open(&path, "m").unwrap();
            cache
                .insert("日経225".into(), EmbeddingVector::unit(&[1.0]).unwrap())
                .unwrap();
        }
        let cache = VectorCache::open(&path, "m").unwrap();
        assert!(cache.get("日経225").is_some());
    }
}
