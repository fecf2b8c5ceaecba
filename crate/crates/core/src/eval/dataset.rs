use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::graph::{ClassHierarchy, Iri, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    /// `(entity, gold class)`, grouped by class in IRI order.
    pub examples: Vec<(Iri, Iri)>,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub classes: BTreeSet<Iri>,
    pub entities_per_class: usize,
    /// How many of the requested classes could not be filled.
    pub shortfall: usize,
}

impl LabeledDataset {
    /// A dataset with every example unassigned to either split.
    pub fn from_examples(examples: Vec<(Iri, Iri)>) -> Self {
        let classes: BTreeSet<Iri> = examples.iter().map(|(_, c)| c.clone()).collect();
        let mut sizes: BTreeMap<&Iri, usize> = BTreeMap::new();
        for (_, c) in &examples {
            *sizes.entry(c).or_default() += 1;
        }
        let entities_per_class = sizes.values().copied().max().unwrap_or(0);
        LabeledDataset {
            examples,
            train_ids: Vec::new(),
            test_ids: Vec::new(),
            classes,
            entities_per_class,
            shortfall: 0,
        }
    }

    /// Rebuilds a split dataset from its two halves.
    pub fn from_splits(train: Vec<(Iri, Iri)>, test: Vec<(Iri, Iri)>) -> Self {
        let n_train = train.len();
        let n_test = test.len();
        let mut ds = Self::from_examples(train.into_iter().chain(test).collect());
        ds.train_ids = (0..n_train).collect();
        ds.test_ids = (n_train..n_train + n_test).collect();
        ds
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn train(&self) -> Vec<(Iri, Iri)> {
        self.train_ids.iter().map(|&i| self.examples[i].clone()).collect()
    }

    pub fn test(&self) -> Vec<(Iri, Iri)> {
        self.test_ids.iter().map(|&i| self.examples[i].clone()).collect()
    }

    pub fn gold(&self) -> BTreeMap<Iri, Iri> {
        self.examples.iter().cloned().collect()
    }
}

/// The most specific of `types`: the non-root class with the longest parent
/// chain, ties broken by smallest IRI. Types unknown to the hierarchy are
/// ignored.
pub fn gold_label<'a>(types: impl IntoIterator<Item = &'a Iri>, hierarchy: &ClassHierarchy) -> Option<Iri> {
    let mut best: Option<(&Iri, usize)> = None;
    let mut sorted: Vec<&Iri> = types.into_iter().collect();
    sorted.sort();
    for t in sorted {
        if hierarchy.is_root(t) {
            continue;
        }
        let Ok(depth) = hierarchy.depth(t) else {
            continue;
        };
        if best.map_or(true, |(_, d)| depth > d) {
            best = Some((t, depth));
        }
    }
    best.map(|(t, _)| t.clone())
}

/// Samples `entities_per_class` entities from each of the `num_classes`
/// largest gold classes that have at least that many members. Class size
/// ties are broken by IRI.
pub fn build_dataset(
    kg: &KnowledgeGraph,
    hierarchy: &ClassHierarchy,
    num_classes: usize,
    entities_per_class: usize,
    seed: u64,
) -> Result<LabeledDataset, EvalError> {
    if entities_per_class == 0 || num_classes == 0 {
        return Err(EvalError::InvalidRequest(
            "class and entity counts must be at least 1".into(),
        ));
    }
    let mut members: BTreeMap<Iri, Vec<Iri>> = BTreeMap::new();
    for (entity, types) in kg.type_assertions() {
        if let Some(gold) = gold_label(types, hierarchy) {
            members.entry(gold).or_default().push(entity.clone());
        }
    }
    let mut qualifying: Vec<(Iri, Vec<Iri>)> = members
        .into_iter()
        .filter(|(_, m)| m.len() >= entities_per_class)
        .collect();
    qualifying.sort_by(|(a, ma), (b, mb)| mb.len().cmp(&ma.len()).then_with(|| a.cmp(b)));
    qualifying.truncate(num_classes);
    if qualifying.len() < 2 {
        return Err(EvalError::TooFewClasses {
            needed: entities_per_class,
            found: qualifying.len(),
        });
    }
    let shortfall = num_classes - qualifying.len();
    if shortfall > 0 {
        log::warn!(
            "only {} of {num_classes} requested classes have {entities_per_class} entities",
            qualifying.len()
        );
    }
    qualifying.sort_by(|(a, _), (b, _)| a.cmp(b));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(qualifying.len() * entities_per_class);
    let mut classes = BTreeSet::new();
    for (class, mut entities) in qualifying {
        entities.shuffle(&mut rng);
        entities.truncate(entities_per_class);
        entities.sort();
        examples.extend(entities.into_iter().map(|e| (e, class.clone())));
        classes.insert(class);
    }
    Ok(LabeledDataset {
        examples,
        train_ids: Vec::new(),
        test_ids: Vec::new(),
        classes,
        entities_per_class,
        shortfall,
    })
}

/// Stratified split: within each class, after a seeded shuffle,
/// `floor(train_fraction * size)` examples go to training and the rest to
/// test.
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<LabeledDataset, EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidRequest(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut by_class: BTreeMap<&Iri, Vec<usize>> = BTreeMap::new();
    for (i, (_, class)) in dataset.examples.iter().enumerate() {
        by_class.entry(class).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids = Vec::new();
    let mut test_ids = Vec::new();
    for (class, mut ids) in by_class {
        if ids.len() < 2 {
            return Err(EvalError::ClassTooSmall {
                class: class.clone(),
                size: ids.len(),
            });
        }
        ids.shuffle(&mut rng);
        let n_train = (train_fraction * ids.len() as f64).floor() as usize;
        train_ids.extend_from_slice(&ids[..n_train]);
        test_ids.extend_from_slice(&ids[n_train..]);
    }
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(LabeledDataset {
        train_ids,
        test_ids,
        ..dataset.clone()
    })
}
