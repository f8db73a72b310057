//! Mention embedding with a persistent vector cache.

mod backend;
mod cache;

pub use backend::{EmbeddingBackend, HttpEmbeddingBackend, TableEmbeddingBackend};
pub use cache::VectorCache;

use crate::error::{Error, Result};

/// Default number of surfaces sent to the backend per request.
pub const DEFAULT_BATCH_SIZE: usize = 64;

const BACKEND_RETRIES: u32 = 3;

/// A unit-norm embedding. Vectors are normalized on creation; a zero or
/// non-finite raw vector is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Normalize a raw vector to unit Euclidean norm. Returns `None` for
    /// zero-norm or non-finite input.
    pub fn unit(raw: &[f32]) -> Option<Self> {
        let norm = raw.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let values = raw.iter().map(|&v| (f64::from(v) / norm) as f32).collect();
        Some(EmbeddingVector { values })
    }

    /// Wrap values that are already unit-norm (cache reads), preserving them
    /// bit for bit.
    pub(crate) fn from_unit_values(values: Vec<f32>) -> Self {
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The vector as f64 coordinates, for clustering geometry.
    pub fn coords(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Cosine similarity of two unit vectors: their dot product, clamped to
/// [-1, 1] against floating-point drift.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    let dot: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Embed `surfaces`, one unit vector per surface in input order.
///
/// The cache is consulted per surface; misses are deduplicated, batched to
/// the backend, normalized, and written back. Backend failures are retried
/// up to 3 times per batch before failing with the batch's surfaces.
pub fn embed_mentions(
    surfaces: &[String],
    backend: &dyn EmbeddingBackend,
    cache: &mut VectorCache,
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>> {
    if surfaces.is_empty() {
        return Err(Error::InvalidArgument("no surfaces to embed".into()));
    }
    if surfaces.iter().any(|s| s.trim().is_empty()) {
        return Err(Error::InvalidArgument("blank surface in embed input".into()));
    }
    let batch_size = batch_size.max(1);

    let mut misses: Vec<String> = Vec::new();
    let mut miss_set = std::collections::HashSet::new();
    for surface in surfaces {
        if cache.get(surface).is_none() && miss_set.insert(surface.clone()) {
            misses.push(surface.clone());
        }
    }
    for batch in misses.chunks(batch_size) {
        let raw = embed_with_retries(backend, batch)?;
        if raw.len() != batch.len() {
            return Err(Error::Backend(format!(
                "embedding backend returned {} vectors for {} inputs",
                raw.len(),
                batch.len()
            )));
        }
        for (surface, vector) in batch.iter().zip(raw) {
            let unit = EmbeddingVector::unit(&vector)
                .ok_or_else(|| Error::DegenerateEmbedding(surface.clone()))?;
            cache.insert(surface.clone(), unit)?;
        }
    }
    Ok(surfaces
        .iter()
        .map(|s| cache.get(s).expect("surface cached above").clone())
        .collect())
}

fn embed_with_retries(backend: &dyn EmbeddingBackend, batch: &[String]) -> Result<Vec<Vec<f32>>> {
    let mut attempt = 0u32;
    loop {
        match backend.embed(batch) {
            Ok(v) => return Ok(v),
            Err(e) if attempt < BACKEND_RETRIES => {
                attempt += 1;
                log::debug!("embedding attempt {attempt} failed: {e}");
            }
            Err(e) => {
                return Err(Error::Embedding {
                    surfaces: batch.to_vec(),
                    message: format!("failed after {BACKEND_RETRIES} retries: {e}"),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Backend that hands back fixed raw vectors and counts calls.
    struct CountingBackend {
        raw: Vec<f32>,
        calls: std::sync::atomic::AtomicUsize,
    }

    impl CountingBackend {
        fn new(raw: Vec<f32>) -> Self {
            CountingBackend {
                raw,
                calls: std::sync::atomic::AtomicUsize::new(0),
            }
        }
        fn calls(&self) -> usize {
            self.calls.load(std::sync::atomic::Ordering::SeqCst)
        }
    }

    impl EmbeddingBackend for CountingBackend {
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
            self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(texts.iter().map(|_| self.raw.clone()).collect())
        }
        fn model_id(&self) -> &str {
            "counting"
        }
        fn dim(&self) -> usize {
            self.raw.len()
        }
    }

    #[test]
    fn normalization_arithmetic() {
        let backend = CountingBackend::new(vec![3.0, 4.0]);
        let mut cache = VectorCache::in_memory("counting");
        let got = embed_mentions(&["SVM".into()], &backend, &mut cache, 64).unwrap();
        assert_eq!(got.len(), 1);
        let v = got[0].values();
        assert!((v[0] - 0.6).abs() < 1e-6);
        assert!((v[1] - 0.8).abs() < 1e-6);
    }

    #[test]
    fn repeated_surface_hits_backend_once() {
        let backend = CountingBackend::new(vec![1.0, 0.0]);
        let mut cache = VectorCache::in_memory("counting");
        let got = embed_mentions(
            &["SVM".into(), "SVM".into()],
            &backend,
            &mut cache,
            64,
        )
        .unwrap();
        assert_eq!(got[0], got[1]);
        assert_eq!(backend.calls(), 1);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let backend = CountingBackend::new(vec![0.0, 0.0]);
        let mut cache = VectorCache::in_memory("counting");
        let err = embed_mentions(&["bad".into()], &backend, &mut cache, 64).unwrap_err();
        assert!(matches!(err, Error::DegenerateEmbedding(s) if s == "bad"));
    }

    #[test]
    fn cosine_identity_orthogonality_and_hand_value() {
        let v = EmbeddingVector::unit(&[0.6, 0.8]).unwrap();
        let same = cosine_similarity(&v, &v).unwrap();
        assert!((same - 1.0).abs() < 1e-12);
        let e0 = EmbeddingVector::unit(&[1.0, 0.0]).unwrap();
        let e1 = EmbeddingVector::unit(&[0.0, 1.0]).unwrap();
        assert_eq!(cosine_similarity(&e0, &e1).unwrap(), 0.0);
        let got = cosine_similarity(&v, &e0).unwrap();
        assert!((got - 0.6).abs() < 1e-7);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        let a = EmbeddingVector::unit(&[1.0]).unwrap();
        let b = EmbeddingVector::unit(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            cosine_similarity(&a, &b).unwrap_err(),
            Error::InvalidArgument(_)
        ));
    }

    struct FlakyBackend {
        failures_left: std::sync::atomic::AtomicUsize,
    }
    impl EmbeddingBackend for FlakyBackend {
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
            let left = self
                .failures_left
                .fetch_update(
                    std::sync::atomic::Ordering::SeqCst,
                    std::sync::atomic::Ordering::SeqCst,
                    |n| Some(n.saturating_sub(1)),
                )
                .unwrap();
            if left > 0 {
                Err(Error::Backend("transient".into()))
            } else {
                Ok(texts.iter().map(|_| vec![1.0f32, 0.0]).collect())
            }
        }
        fn model_id(&self) -> &str {
            "flaky"
        }
        fn dim(&self) -> usize {
            2
        }
    }

    #[test]
    fn transient_failures_are_retried() {
        let backend = FlakyBackend {
            failures_left: std::sync::atomic::AtomicUsize::new(2),
        };
        let mut cache = VectorCache::in_memory("flaky");
        assert!(embed_mentions(&["x".into()], &backend, &mut cache, 64).is_ok());
    }

    #[test]
    fn persistent_failure_lists_surfaces() {
        let backend = FlakyBackend {
            failures_left: std::sync::atomic::AtomicUsize::new(100),
        };
        let mut cache = VectorCache::in_memory("flaky");
        let err =
            embed_mentions(&["a".into(), "b".into()], &backend, &mut cache, 64).unwrap_err();
        match err {
            Error::Embedding { surfaces, .. } => assert_eq!(surfaces, vec!["a", "b"]),
            other => panic!("unexpected error: {other}"),
        }
    }
}
