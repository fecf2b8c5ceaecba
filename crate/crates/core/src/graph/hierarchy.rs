use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::kg::KnowledgeGraph;
use super::term::{Iri, DBO_AGENT, OWL_THING};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("subclass cycle: {}", format_cycle(.0))]
    Cycle(Vec<Iri>),
    #[error("unknown class {0}")]
    UnknownClass(Iri),
    #[error("{0} is a root class and has no coarse ancestor")]
    RootClass(Iri),
}

fn format_cycle(members: &[Iri]) -> String {
    members
        .iter()
        .map(Iri::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

pub fn owl_thing() -> Iri {
    Iri::new(OWL_THING).expect("constant IRI")
}

/// `{owl:Thing, dbo:Agent}`.
pub fn default_roots() -> BTreeSet<Iri> {
    [OWL_THING, DBO_AGENT]
        .into_iter()
        .map(|s| Iri::new(s).expect("constant IRI"))
        .collect()
}

/// Single-parent class tree with a set of traversal stops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassHierarchy {
    parent: BTreeMap<Iri, Iri>,
    children: BTreeMap<Iri, BTreeSet<Iri>>,
    roots: BTreeSet<Iri>,
    classes: BTreeSet<Iri>,
}

impl ClassHierarchy {
    /// Builds the hierarchy from the graph's subclass edges.
    ///
    /// `owl:Thing` is always a root. A class declared under several parents
    /// keeps the first one in file order; classes without a parent hang
    /// under `owl:Thing`.
    pub fn build(kg: &KnowledgeGraph, roots: &BTreeSet<Iri>) -> Result<Self, HierarchyError> {
        Self::from_edges(kg.subclass_edges(), kg.classes(), roots)
    }

    pub fn from_edges(
        edges: &[(Iri, Iri)],
        classes: impl IntoIterator<Item = Iri>,
        roots: &BTreeSet<Iri>,
    ) -> Result<Self, HierarchyError> {
        let thing = owl_thing();
        let mut roots = roots.clone();
        roots.insert(thing.clone());

        let mut all: BTreeSet<Iri> = classes.into_iter().collect();
        all.extend(roots.iter().cloned());
        for (child, p) in edges {
            all.insert(child.clone());
            all.insert(p.clone());
        }

        let edges: Vec<&(Iri, Iri)> = edges
            .iter()
            .filter(|(child, parent)| {
                if child == parent {
                    log::debug!("ignoring reflexive subclass edge on {}", child.as_str());
                }
                child != parent
            })
            .collect();
        if let Some(cycle) = find_cycle(&edges) {
            return Err(HierarchyError::Cycle(cycle));
        }

        let mut parent: BTreeMap<Iri, Iri> = BTreeMap::new();
        for (child, p) in &edges {
            match parent.get(child) {
                None => {
                    parent.insert(child.clone(), p.clone());
                }
                Some(kept) if kept != p => log::info!(
                    "{} has several parents; keeping {}, ignoring {}",
                    child.as_str(),
                    kept.as_str(),
                    p.as_str()
                ),
                Some(_) => {}
            }
        }
        for class in &all {
            if !roots.contains(class) && !parent.contains_key(class) {
                parent.insert(class.clone(), thing.clone());
            }
        }

        // Orphan attachment could close a loop if owl:Thing itself was declared
        // under another class.
        for start in parent.keys() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent.get(cur) {
                steps += 1;
                if p == start || steps > parent.len() {
                    let mut cycle = vec![start.clone()];
                    let mut c = parent.get(start).unwrap();
                    while c != start && cycle.len() <= parent.len() {
                        cycle.push(c.clone());
                        c = parent.get(c).unwrap();
                    }
                    return Err(HierarchyError::Cycle(cycle));
                }
                cur = p;
            }
        }

        let mut children: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
        for (child, p) in &parent {
            children.entry(p.clone()).or_default().insert(child.clone());
        }
        Ok(ClassHierarchy {
            parent,
            children,
            roots,
            classes: all,
        })
    }

    pub fn contains(&self, class: &Iri) -> bool {
        self.classes.contains(class)
    }

    pub fn classes(&self) -> &BTreeSet<Iri> {
        &self.classes
    }

    pub fn roots(&self) -> &BTreeSet<Iri> {
        &self.roots
    }

    pub fn is_root(&self, class: &Iri) -> bool {
        self.roots.contains(class)
    }

    pub fn parent(&self, class: &Iri) -> Option<&Iri> {
        self.parent.get(class)
    }

    pub fn children(&self, class: &Iri) -> impl Iterator<Item = &Iri> {
        self.children.get(class).into_iter().flatten()
    }

    fn check(&self, class: &Iri) -> Result<(), HierarchyError> {
        if self.contains(class) {
            Ok(())
        } else {
            Err(HierarchyError::UnknownClass(class.clone()))
        }
    }

    /// Number of parent links between `class` and the top of its chain.
    pub fn depth(&self, class: &Iri) -> Result<usize, HierarchyError> {
        self.check(class)?;
        let mut depth = 0;
        let mut cur = class;
        while let Some(p) = self.parent.get(cur) {
            depth += 1;
            cur = p;
        }
        Ok(depth)
    }

    /// The highest ancestor of `class` that sits directly below a root.
    pub fn coarse_ancestor(&self, class: &Iri) -> Result<&Iri, HierarchyError> {
        self.check(class)?;
        if self.is_root(class) {
            return Err(HierarchyError::RootClass(class.clone()));
        }
        let mut cur = self.classes.get(class).expect("checked above");
        while let Some(p) = self.parent.get(cur) {
            if self.is_root(p) {
                break;
            }
            cur = p;
        }
        Ok(cur)
    }

    pub fn descendants(
        &self,
        class: &Iri,
        include_self: bool,
    ) -> Result<BTreeSet<Iri>, HierarchyError> {
        self.check(class)?;
        let mut out = BTreeSet::new();
        if include_self {
            out.insert(class.clone());
        }
        let mut stack: Vec<&Iri> = self.children(class).collect();
        while let Some(c) = stack.pop() {
            if out.insert(c.clone()) {
                stack.extend(self.children(c));
            }
        }
        Ok(out)
    }

    /// True when iterating `parent` from `class` reaches `ancestor`.
    pub fn is_descendant_of(&self, class: &Iri, ancestor: &Iri) -> bool {
        let mut cur = class;
        while let Some(p) = self.parent.get(cur) {
            if p == ancestor {
                return true;
            }
            cur = p;
        }
        false
    }
}

fn find_cycle(edges: &[&(Iri, Iri)]) -> Option<Vec<Iri>> {
    let mut adjacency: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
    for (child, parent) in edges {
        adjacency.entry(child).or_default().push(parent);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: HashMap<&Iri, Mark> = HashMap::new();
    for &start in adjacency.keys() {
        if marks.contains_key(start) {
            continue;
        }
        // Iterative DFS; `path` mirrors the active stack.
        let mut path: Vec<&Iri> = vec![start];
        let mut cursors: Vec<usize> = vec![0];
        marks.insert(start, Mark::Active);
        while let Some(&node) = path.last() {
            let next = adjacency
                .get(node)
                .and_then(|succ| succ.get(*cursors.last().unwrap()))
                .copied();
            *cursors.last_mut().unwrap() += 1;
            match next {
                Some(n) => match marks.get(n) {
                    Some(Mark::Active) => {
                        let pos = path.iter().position(|&p| p == n).unwrap();
                        return Some(path[pos..].iter().map(|&i| i.clone()).collect());
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(n, Mark::Active);
                        path.push(n);
                        cursors.push(0);
                    }
                },
                None => {
                    marks.insert(node, Mark::Done);
                    path.pop();
                    cursors.pop();
                }
            }
        }
    }
    None
}
