//! Enumeration of cycle-free inter-item paths and their canonical types.
//!
//! Traversal runs over the undirected view of the graph; each step keeps
//! the orientation of the stored triple. A path may start and end at items
//! but never passes through one.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Direction, EntityId, KnowledgeGraph, RelId};

/// A path-length bound: a positive integer or unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cutoff {
    Bounded(usize),
    Unbounded,
}

impl Cutoff {
    pub fn bounded(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("length bound must be positive".into()));
        }
        Ok(Cutoff::Bounded(n))
    }

    pub fn allows(self, len: usize) -> bool {
        match self {
            Cutoff::Bounded(n) => len <= n,
            Cutoff::Unbounded => true,
        }
    }

    pub fn as_option(self) -> Option<usize> {
        match self {
            Cutoff::Bounded(n) => Some(n),
            Cutoff::Unbounded => None,
        }
    }
}

impl Ord for Cutoff {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cutoff::Bounded(a), Cutoff::Bounded(b)) => a.cmp(b),
            (Cutoff::Bounded(_), Cutoff::Unbounded) => Ordering::Less,
            (Cutoff::Unbounded, Cutoff::Bounded(_)) => Ordering::Greater,
            (Cutoff::Unbounded, Cutoff::Unbounded) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Cutoff {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Bounded(n) => write!(f, "{n}"),
            Cutoff::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "infinity" | "∞" | "unbounded" => Ok(Cutoff::Unbounded),
            other => {
                let n: usize = other.parse().map_err(|_| {
                    Error::InvalidArgument(format!("`{s}` is neither a positive integer nor `inf`"))
                })?;
                Cutoff::bounded(n)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepDirection {
    /// Traversed from the triple's source to its target.
    Forward,
    Backward,
}

impl StepDirection {
    fn flip(self) -> Self {
        match self {
            StepDirection::Forward => StepDirection::Backward,
            StepDirection::Backward => StepDirection::Forward,
        }
    }

    fn marker(self) -> char {
        match self {
            StepDirection::Forward => '>',
            StepDirection::Backward => '<',
        }
    }
}

impl From<Direction> for StepDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Out => StepDirection::Forward,
            Direction::In => StepDirection::Backward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathStep {
    pub rel: RelId,
    pub direction: StepDirection,
}

/// Alternating entity/edge sequence; `steps[i]` joins `entities[i]` and
/// `entities[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    entities: Vec<EntityId>,
    steps: Vec<PathStep>,
}

impl Path {
    pub fn new(entities: Vec<EntityId>, steps: Vec<PathStep>) -> Self {
        debug_assert_eq!(entities.len(), steps.len() + 1);
        Path { entities, steps }
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn source(&self) -> EntityId {
        self.entities[0]
    }

    pub fn target(&self) -> EntityId {
        *self.entities.last().expect("paths have at least two entities")
    }

    pub fn reversed(&self) -> Path {
        let mut entities = self.entities.clone();
        entities.reverse();
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| PathStep {
                rel: s.rel,
                direction: s.direction.flip(),
            })
            .collect();
        Path { entities, steps }
    }

    /// Checks every structural invariant of a path against `graph`.
    pub fn is_valid_in(&self, graph: &KnowledgeGraph) -> bool {
        if self.entities.len() < 2 || self.entities.len() != self.steps.len() + 1 {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        if !self.entities.iter().all(|e| seen.insert(*e)) {
            return false;
        }
        let interior = &self.entities[1..self.entities.len() - 1];
        if interior.iter().any(|&e| graph.is_item(e)) {
            return false;
        }
        self.steps.iter().enumerate().all(|(i, step)| {
            let (a, b) = (self.entities[i], self.entities[i + 1]);
            let triple = match step.direction {
                StepDirection::Forward => (a, step.rel, b),
                StepDirection::Backward => (b, step.rel, a),
            };
            graph.triples().binary_search(&triple).is_ok()
        })
    }
}

/// Canonical path-type key such as `artist>wrote>song<wrote<artist`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathType(String);

impl PathType {
    pub fn from_key(key: impl Into<String>) -> Self {
        PathType(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of edges encoded in the key.
    pub fn len(&self) -> usize {
        key_len(&self.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for PathType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Number of edges in a path-type key (each edge contributes two markers).
pub(crate) fn key_len(key: &str) -> usize {
    key.bytes().filter(|&b| b == b'<' || b == b'>').count() / 2
}

fn directional_key(graph: &KnowledgeGraph, entities: &[EntityId], steps: &[PathStep]) -> String {
    let mut key = String::new();
    key.push_str(graph.etype_name(graph.etype_of(entities[0])));
    for (step, &next) in steps.iter().zip(&entities[1..]) {
        let m = step.direction.marker();
        key.push(m);
        key.push_str(graph.relation_name(step.rel));
        key.push(m);
        key.push_str(graph.etype_name(graph.etype_of(next)));
    }
    key
}

/// Compares two keys with the forward marker ordered before the backward one.
fn canonical_cmp(a: &str, b: &str) -> Ordering {
    let weight = |c: u8| match c {
        b'>' => b'<',
        b'<' => b'>',
        other => other,
    };
    a.bytes().map(weight).cmp(b.bytes().map(weight))
}

/// Returns the canonical type key of a path and whether the canonical
/// orientation is the reversed one.
pub(crate) fn canonical_type(
    graph: &KnowledgeGraph,
    entities: &[EntityId],
    steps: &[PathStep],
) -> (String, bool) {
    let forward = directional_key(graph, entities, steps);
    let rev_entities: Vec<EntityId> = entities.iter().rev().copied().collect();
    let rev_steps: Vec<PathStep> = steps
        .iter()
        .rev()
        .map(|s| PathStep {
            rel: s.rel,
            direction: s.direction.flip(),
        })
        .collect();
    let backward = directional_key(graph, &rev_entities, &rev_steps);
    if canonical_cmp(&backward, &forward) == Ordering::Less {
        (backward, true)
    } else {
        (forward, false)
    }
}

pub fn path_type(graph: &KnowledgeGraph, path: &Path) -> PathType {
    PathType(canonical_type(graph, &path.entities, &path.steps).0)
}

/// Whether the canonical orientation of `path` runs target→source.
pub fn canonical_is_reversed(graph: &KnowledgeGraph, path: &Path) -> bool {
    canonical_type(graph, &path.entities, &path.steps).1
}

/// Memoizes canonical keys by the orientation-specific token sequence of a
/// path, so the hot enumeration loop builds each key string only once.
pub(crate) struct TypeKeyCache<'g> {
    graph: &'g KnowledgeGraph,
    ids: HashMap<Vec<u32>, usize>,
    keys: Vec<String>,
    scratch: Vec<u32>,
}

impl<'g> TypeKeyCache<'g> {
    pub(crate) fn new(graph: &'g KnowledgeGraph) -> Self {
        TypeKeyCache {
            graph,
            ids: HashMap::new(),
            keys: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Local id of the canonical key of the path.
    pub(crate) fn type_id(&mut self, entities: &[EntityId], steps: &[PathStep]) -> usize {
        self.scratch.clear();
        self.scratch.push(self.graph.etype_of(entities[0]));
        for (step, &next) in steps.iter().zip(&entities[1..]) {
            let dir = match step.direction {
                StepDirection::Forward => 0,
                StepDirection::Backward => 1,
            };
            self.scratch.push(step.rel.index() as u32 * 2 + dir);
            self.scratch.push(self.graph.etype_of(next));
        }
        if let Some(&id) = self.ids.get(&self.scratch) {
            return id;
        }
        let key = canonical_type(self.graph, entities, steps).0;
        let id = self.keys.len();
        self.keys.push(key);
        self.ids.insert(self.scratch.clone(), id);
        id
    }

    pub(crate) fn key(&self, id: usize) -> &str {
        &self.keys[id]
    }
}

/// Depth-first walk from `seed` reporting every cycle-free path that ends
/// at another item and respects `max_len`. Items other than the seed are
/// terminal: the walk reports them and never expands through them.
///
/// The callback receives `(target, entities, steps)` for each path.
pub fn walk_item_paths<F>(graph: &KnowledgeGraph, seed: EntityId, max_len: Cutoff, mut visit: F)
where
    F: FnMut(EntityId, &[EntityId], &[PathStep]),
{
    let limit = max_len.as_option().unwrap_or(usize::MAX);
    let mut on_path = vec![false; graph.entity_count()];
    let mut entities = vec![seed];
    let mut steps: Vec<PathStep> = Vec::new();
    // Per depth: next adjacency index to try from entities[depth].
    let mut cursor: Vec<usize> = vec![0];
    on_path[seed.index()] = true;

    while let Some(pos) = cursor.last_mut() {
        let here = *entities.last().expect("stack non-empty");
        let adj = graph.adjacent(here);
        if *pos >= adj.len() || steps.len() >= limit {
            cursor.pop();
            if let Some(e) = entities.pop() {
                on_path[e.index()] = false;
            }
            steps.pop();
            continue;
        }
        let nb = adj[*pos];
        *pos += 1;
        if on_path[nb.entity.index()] {
            continue;
        }
        let step = PathStep {
            rel: nb.rel,
            direction: nb.direction.into(),
        };
        if graph.is_item(nb.entity) {
            entities.push(nb.entity);
            steps.push(step);
            visit(nb.entity, &entities, &steps);
            entities.pop();
            steps.pop();
            continue;
        }
        on_path[nb.entity.index()] = true;
        entities.push(nb.entity);
        steps.push(step);
        cursor.push(0);
    }
}

/// All cycle-free paths from `i1` to `i2` with no interior items and at most
/// `max_len` edges, ordered by entity-id sequence then step sequence.
pub fn enumerate_paths(
    graph: &KnowledgeGraph,
    i1: &str,
    i2: &str,
    max_len: Cutoff,
) -> Result<Vec<Path>> {
    let a = graph.item(i1)?;
    let b = graph.item(i2)?;
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "paths need two distinct items, got `{i1}` twice"
        )));
    }
    Ok(paths_between(graph, a, b, max_len))
}

/// Same as [`enumerate_paths`] for already-resolved, distinct items.
pub fn paths_between(graph: &KnowledgeGraph, a: EntityId, b: EntityId, max_len: Cutoff) -> Vec<Path> {
    let mut out = Vec::new();
    walk_item_paths(graph, a, max_len, |target, entities, steps| {
        if target == b {
            out.push(Path::new(entities.to_vec(), steps.to_vec()));
        }
    });
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_graph, toy_graph_with};
    use crate::graph::Triple;

    fn ids(g: &KnowledgeGraph, p: &Path) -> Vec<String> {
        p.entities().iter().map(|&e| g.entity(e).id.clone()).collect()
    }

    #[test]
    fn toy_paths_unbounded() {
        let (g, _) = toy_graph();
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Unbounded).unwrap();
        let seqs: Vec<Vec<String>> = paths.iter().map(|p| ids(&g, p)).collect();
        assert_eq!(
            seqs,
            vec![
                vec!["A".to_string(), "B".into()],
                vec!["A".to_string(), "S".into(), "B".into()],
                vec!["A".to_string(), "g".into(), "B".into()],
            ]
        );
        assert!(paths.iter().all(|p| p.is_valid_in(&g)));
    }

    #[test]
    fn toy_paths_bounded() {
        let (g, _) = toy_graph();
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Bounded(1)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(path_type(&g, &paths[0]).as_str(), "artist>married_to>artist");
    }

    #[test]
    fn disconnected_and_invalid_pairs() {
        let (g, _) = toy_graph_with(
            &[("D", "artist", "Loner")],
            &[],
            &["D"],
        );
        assert!(enumerate_paths(&g, "A", "D", Cutoff::Unbounded).unwrap().is_empty());
        assert!(enumerate_paths(&g, "A", "A", Cutoff::Unbounded).is_err());
        assert!(matches!(
            enumerate_paths(&g, "A", "S", Cutoff::Unbounded),
            Err(Error::NotAnItem(_))
        ));
        assert!(matches!(
            enumerate_paths(&g, "A", "zz", Cutoff::Unbounded),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn path_type_keys() {
        let (g, _) = toy_graph();
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Unbounded).unwrap();
        let keys: Vec<String> = paths.iter().map(|p| path_type(&g, p).0).collect();
        assert_eq!(
            keys,
            vec![
                "artist>married_to>artist",
                "artist>wrote>song<wrote<artist",
                "artist>genre>genre_node<genre<artist",
            ]
        );
        for p in &paths {
            assert_eq!(path_type(&g, p), path_type(&g, &p.reversed()));
        }
        let back = enumerate_paths(&g, "B", "A", Cutoff::Unbounded).unwrap();
        assert_eq!(path_type(&g, &back[0]).as_str(), "artist>married_to>artist");
        assert!(canonical_is_reversed(&g, &back[0]));
        assert!(!canonical_is_reversed(&g, &paths[0]));
        assert_eq!(paths[1].len(), 2);
        assert_eq!(path_type(&g, &paths[1]).len(), 2);
    }

    #[test]
    fn parallel_edges_give_distinct_paths() {
        let (g, _) = toy_graph_with(&[], &[Triple::new("A", "produced", "B")], &[]);
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Bounded(1)).unwrap();
        assert_eq!(paths.len(), 2);
    }

    #[test]
    fn cutoff_parsing_and_order() {
        assert_eq!("inf".parse::<Cutoff>().unwrap(), Cutoff::Unbounded);
        assert_eq!("3".parse::<Cutoff>().unwrap(), Cutoff::Bounded(3));
        assert!("0".parse::<Cutoff>().is_err());
        assert!("x".parse::<Cutoff>().is_err());
        assert!(Cutoff::Bounded(40) < Cutoff::Unbounded);
        assert_eq!(Cutoff::Unbounded.to_string(), "inf");
    }
}
