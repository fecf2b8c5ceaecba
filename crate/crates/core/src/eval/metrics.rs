use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::EvalError;
use crate::graph::{ClassHierarchy, Iri, KnowledgeGraph};
use crate::typing::Prediction;

fn hits(predictions: &[Prediction], gold: &BTreeMap<Iri, Iri>, k: usize) -> Result<f64, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let mut hit = 0usize;
    for p in predictions {
        let g = gold
            .get(&p.entity)
            .ok_or_else(|| EvalError::MissingGold(p.entity.clone()))?;
        if p.top_k(k).iter().any(|s| &s.class == g) {
            hit += 1;
        }
    }
    Ok(hit as f64 / predictions.len() as f64)
}

/// Fraction of predictions whose top-ranked class is the gold class.
pub fn accuracy(predictions: &[Prediction], gold: &BTreeMap<Iri, Iri>) -> Result<f64, EvalError> {
    hits(predictions, gold, 1)
}

/// Fraction of predictions with the gold class among the first `k`.
pub fn hits_at_k(predictions: &[Prediction], gold: &BTreeMap<Iri, Iri>, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidRequest("k must be at least 1".into()));
    }
    hits(predictions, gold, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Accuracy,
    HitsAt(usize),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Accuracy => f.write_str("accuracy"),
            Metric::HitsAt(k) => write!(f, "hits@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "accuracy" || lower == "acc" {
            return Ok(Metric::Accuracy);
        }
        match lower.strip_prefix("hits@").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(Metric::HitsAt(k)),
            _ => Err(EvalError::UnknownMetric(s.to_string())),
        }
    }
}

/// Scores `predictions` against every entity in `gold`. Gold entities with
/// no prediction count as misses.
pub fn evaluate(
    predictions: &[Prediction],
    gold: &BTreeMap<Iri, Iri>,
    metrics: &[Metric],
) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut by_entity: BTreeMap<&Iri, &Prediction> = BTreeMap::new();
    for p in predictions {
        if !gold.contains_key(&p.entity) {
            return Err(EvalError::MissingGold(p.entity.clone()));
        }
        by_entity.entry(&p.entity).or_insert(p);
    }
    let full: Vec<Prediction> = gold
        .keys()
        .map(|e| match by_entity.get(e) {
            Some(p) => (*p).clone(),
            None => Prediction::empty(e.clone()),
        })
        .collect();
    let mut out = BTreeMap::new();
    for m in metrics {
        let value = match m {
            Metric::Accuracy => accuracy(&full, gold)?,
            Metric::HitsAt(k) => hits_at_k(&full, gold, *k)?,
        };
        out.insert(m.to_string(), value);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarseStats {
    /// Entities typed with the class or any of its descendants.
    pub total: usize,
    /// Entities typed with the class and with none of its descendants.
    pub coarse_only: usize,
    /// `coarse_only / total` as a percentage; zero when `total` is zero.
    pub percentage: f64,
}

pub fn coarse_grained_stats(
    kg: &KnowledgeGraph,
    hierarchy: &ClassHierarchy,
    class: &Iri,
) -> Result<CoarseStats, EvalError> {
    let below = hierarchy.descendants(class, false)?;
    let mut total = 0;
    let mut coarse_only = 0;
    for types in kg.type_assertions().values() {
        let direct = types.contains(class);
        let refined = types.iter().any(|t| below.contains(t));
        if direct || refined {
            total += 1;
        }
        if direct && !refined {
            coarse_only += 1;
        }
    }
    let percentage = if total == 0 {
        0.0
    } else {
        100.0 * coarse_only as f64 / total as f64
    };
    Ok(CoarseStats {
        total,
        coarse_only,
        percentage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverlapReport {
    pub our_entities: usize,
    pub intersection: usize,
    pub matching_types: usize,
}

impl OverlapReport {
    pub fn intersection_percentage(&self) -> f64 {
        percent(self.intersection, self.our_entities)
    }

    pub fn matching_percentage(&self) -> f64 {
        percent(self.matching_types, self.intersection)
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Counts how many dataset entities an external prediction file covers and
/// how many of those it types with the gold class. An entity with several
/// external types matches when any of them is the gold class.
pub fn external_overlap(examples: &[(Iri, Iri)], external: &BTreeMap<Iri, BTreeSet<Iri>>) -> OverlapReport {
    let ours: BTreeMap<&Iri, &Iri> = examples.iter().map(|(e, c)| (e, c)).collect();
    let mut intersection = 0;
    let mut matching_types = 0;
    for (entity, gold) in &ours {
        if let Some(types) = external.get(*entity) {
            intersection += 1;
            if types.contains(*gold) {
                matching_types += 1;
            }
        }
    }
    let report = OverlapReport {
        our_entities: ours.len(),
        intersection,
        matching_types,
    };
    assert!(report.matching_types <= report.intersection && report.intersection <= report.our_entities);
    report
}
