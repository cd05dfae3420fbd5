//! Embedding vectors and exhaustive nearest-neighbor search.
//!
//! Vectors are stored as `f32`; every distance is accumulated in `f64` so
//! filter behavior does not depend on platform float rounding.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A fixed-dimension place descriptor. Never empty, never NaN/Inf.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    /// Build from `f64` components, rounding to storage precision.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl Deref for EmbeddingVector {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

/// Euclidean distance, accumulated in double precision.
///
/// Summation runs in index order over squared differences, so swapping the
/// arguments gives a bit-identical result.
pub fn l2_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(l2_unchecked(a, b))
}

#[inline]
pub(crate) fn l2_unchecked(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Orders `(index, distance)` pairs by distance, then by lower index.
pub(crate) fn by_distance_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Immutable, ordered collection of equal-dimension embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: Vec<EmbeddingVector>,
}

impl EmbeddingStore {
    /// An empty store of the given dimension.
    pub fn with_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            dim,
            vectors: Vec::new(),
        })
    }

    /// Dimension is taken from the first vector; fails on an empty list.
    pub fn from_vectors(vectors: Vec<EmbeddingVector>) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::EmptyStore)?.dim();
        let mut store = Self::with_dim(dim)?;
        for v in vectors {
            store.push(v)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, v: EmbeddingVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
            });
        }
        self.vectors.push(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&EmbeddingVector> {
        self.vectors.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EmbeddingVector> {
        self.vectors.iter()
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    fn check_query(&self, query: &EmbeddingVector) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyStore);
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        Ok(())
    }

    /// Distance from `query` to every stored vector, in store order.
    pub fn distance_profile(&self, query: &EmbeddingVector) -> Result<Vec<f64>> {
        self.check_query(query)?;
        Ok(self.vectors.iter().map(|v| l2_unchecked(query, v)).collect())
    }

    /// Distances restricted to `indices`, returned in the order given.
    pub fn distances_to(&self, query: &EmbeddingVector, indices: &[usize]) -> Result<Vec<f64>> {
        self.check_query(query)?;
        indices
            .iter()
            .map(|&i| {
                self.vectors
                    .get(i)
                    .map(|v| l2_unchecked(query, v))
                    .ok_or(Error::NodeOutOfRange {
                        index: i,
                        last: self.len() - 1,
                    })
            })
            .collect()
    }

    /// The `k` nearest stored vectors as `(index, distance)`, ascending by
    /// distance with ties resolved toward the lower index.
    pub fn nn_search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<(usize, f64)>> {
        self.check_query(query)?;
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange {
                k,
                count: self.len(),
            });
        }
        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, l2_unchecked(query, v)))
            .collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_distance_then_index);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_distance_then_index);
        Ok(scored)
    }
}

impl<'a> IntoIterator for &'a EmbeddingStore {
    type Item = &'a EmbeddingVector;
    type IntoIter = std::slice::Iter<'a, EmbeddingVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.vectors.iter()
    }
}

/// Convenience free-function form of [`EmbeddingStore::nn_search`].
pub fn nn_search(
    query: &EmbeddingVector,
    store: &EmbeddingStore,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    store.nn_search(query, k)
}

/// Convenience free-function form of [`EmbeddingStore::distance_profile`].
pub fn distance_profile(query: &EmbeddingVector, store: &EmbeddingStore) -> Result<Vec<f64>> {
    store.distance_profile(query)
}
