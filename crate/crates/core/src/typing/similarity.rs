use std::collections::{BTreeMap, BTreeSet};

use super::{Prediction, TypingError};
use crate::embeddings::{dot, VectorLookup};
use crate::graph::{ClassHierarchy, Iri};

/// Mean of the vectors of `members` that have one. Returns the vector and
/// the number of members skipped for lacking a vector.
pub fn class_vector<'a, L: VectorLookup + ?Sized>(
    class: &Iri,
    members: impl IntoIterator<Item = &'a Iri>,
    vectors: &L,
) -> Result<(Vec<f64>, usize), TypingError> {
    let mut sum = vec![0.0; vectors.dimension()];
    let mut found = 0usize;
    let mut skipped = 0usize;
    for m in members {
        match vectors.get(m.as_str()) {
            Some(v) => {
                for (s, x) in sum.iter_mut().zip(v.iter()) {
                    *s += x;
                }
                found += 1;
            }
            None => skipped += 1,
        }
    }
    if found == 0 {
        return Err(TypingError::NoMemberVectors(class.clone()));
    }
    let n = found as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok((sum, skipped))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassVectors {
    pub vectors: BTreeMap<Iri, Vec<f64>>,
    /// Classes none of whose members had a vector.
    pub unresolved: Vec<Iri>,
    pub skipped_members: usize,
}

/// Class vectors for every class among `(entity, class)` pairs.
pub fn class_vectors<L: VectorLookup + ?Sized>(examples: &[(Iri, Iri)], vectors: &L) -> ClassVectors {
    let mut members: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
    for (entity, class) in examples {
        members.entry(class).or_default().push(entity);
    }
    let mut out = ClassVectors::default();
    for (class, entities) in members {
        match class_vector(class, entities, vectors) {
            Ok((v, skipped)) => {
                out.skipped_members += skipped;
                out.vectors.insert(class.clone(), v);
            }
            Err(_) => out.unresolved.push(class.clone()),
        }
    }
    out
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

/// Ranks `candidates` by cosine similarity between the entity vector and
/// each class vector.
pub fn similarity_rank<L: VectorLookup + ?Sized>(
    entity: &Iri,
    candidates: &BTreeSet<Iri>,
    class_vectors: &BTreeMap<Iri, Vec<f64>>,
    vectors: &L,
) -> Result<Prediction, TypingError> {
    if candidates.is_empty() {
        return Err(TypingError::NoCandidates(entity.clone()));
    }
    let v = vectors.vector_of(entity.as_str())?;
    if dot(&v, &v) == 0.0 {
        return Err(TypingError::ZeroNorm(entity.to_string()));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for class in candidates {
        let cv = class_vectors
            .get(class)
            .ok_or_else(|| TypingError::MissingClassVector(class.clone()))?;
        if cv.len() != v.len() {
            return Err(TypingError::DimensionMismatch {
                expected: v.len(),
                found: cv.len(),
            });
        }
        let s = cosine_similarity(&v, cv).ok_or_else(|| TypingError::ZeroNorm(class.to_string()))?;
        scores.push((class.clone(), s));
    }
    Ok(Prediction::new(entity.clone(), scores))
}

/// Subclasses of the coarse ancestor of `coarse_type`: the pool that
/// similarity ranking refines into. The coarse ancestor itself is included
/// only when `include_coarse` is set.
pub fn fine_grained_candidates(
    coarse_type: &Iri,
    hierarchy: &ClassHierarchy,
    include_coarse: bool,
) -> Result<BTreeSet<Iri>, TypingError> {
    let coarse = hierarchy.coarse_ancestor(coarse_type)?;
    Ok(hierarchy.descendants(coarse, include_coarse)?)
}
