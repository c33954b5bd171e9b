//! Immutable typed knowledge graph with a distinguished item subset.
//!
//! Entities are re-indexed after loading so that [`EntityId`] order equals
//! lexicographic order of the external identifiers, and relation labels are
//! interned the same way. Every ordering the rest of the crate derives from
//! ids is therefore identical to ordering by the original strings.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tsv::read_records;

/// Dense handle of an entity inside one [`KnowledgeGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense handle of an edge label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(u32);

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Orientation of an adjacency entry relative to the entity that owns it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// The owning entity is the triple's target.
    In,
    /// The owning entity is the triple's source.
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Neighbor {
    pub rel: RelId,
    pub direction: Direction,
    pub entity: EntityId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub etype: String,
    pub value: String,
}

impl Entity {
    pub fn new(id: impl Into<String>, etype: impl Into<String>, value: impl Into<String>) -> Self {
        Entity {
            id: id.into(),
            etype: etype.into(),
            value: value.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub source: String,
    pub rtype: String,
    pub target: String,
}

impl Triple {
    pub fn new(source: impl Into<String>, rtype: impl Into<String>, target: impl Into<String>) -> Self {
        Triple {
            source: source.into(),
            rtype: rtype.into(),
            target: target.into(),
        }
    }
}

/// Owned, order-normalized description of a graph; the on-disk cache payload.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphParts {
    pub entities: Vec<Entity>,
    pub triples: Vec<Triple>,
    pub items: Vec<String>,
}

/// Counts reported after a load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub entities: usize,
    pub triples: usize,
    pub items: usize,
    pub duplicate_triples: usize,
}

impl std::fmt::Display for LoadStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "entities={} triples={} items={}",
            self.entities, self.triples, self.items
        )
    }
}

const CACHE_FORMAT: &str = "pathsim-graph/1";

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    parts: GraphParts,
}

/// Incrementally validates records; entities must be added before the
/// triples and items that reference them.
#[derive(Default)]
pub struct GraphBuilder {
    entities: Vec<Entity>,
    lookup: HashMap<String, u32>,
    relations: HashMap<String, u32>,
    relation_names: Vec<String>,
    triples: HashSet<(u32, u32, u32)>,
    items: HashSet<u32>,
    duplicate_triples: usize,
}

fn check_label(source_name: &str, line: usize, what: &str, label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(Error::malformed(source_name, line, format!("empty {what}")));
    }
    if label.contains('<') || label.contains('>') {
        return Err(Error::malformed(
            source_name,
            line,
            format!("{what} `{label}` may not contain `<` or `>`"),
        ));
    }
    Ok(())
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, entity: Entity, source_name: &str, line: usize) -> Result<()> {
        if entity.id.is_empty() {
            return Err(Error::malformed(source_name, line, "empty entity id"));
        }
        check_label(source_name, line, "entity type", &entity.etype)?;
        if entity.value.is_empty() {
            return Err(Error::malformed(source_name, line, "empty entity value"));
        }
        if self.lookup.contains_key(&entity.id) {
            return Err(Error::DuplicateEntity {
                source_name: source_name.to_string(),
                line,
                id: entity.id,
            });
        }
        let idx = self.entities.len() as u32;
        self.lookup.insert(entity.id.clone(), idx);
        self.entities.push(entity);
        Ok(())
    }

    fn resolve(&self, id: &str, source_name: &str, line: usize) -> Result<u32> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEntityAt {
                source_name: source_name.to_string(),
                line,
                id: id.to_string(),
            })
    }

    pub fn add_triple(&mut self, triple: &Triple, source_name: &str, line: usize) -> Result<()> {
        check_label(source_name, line, "edge type", &triple.rtype)?;
        let s = self.resolve(&triple.source, source_name, line)?;
        let t = self.resolve(&triple.target, source_name, line)?;
        if s == t {
            return Err(Error::SelfLoop {
                source_name: source_name.to_string(),
                line,
                id: triple.source.clone(),
            });
        }
        let rel = match self.relations.get(&triple.rtype) {
            Some(&r) => r,
            None => {
                let r = self.relation_names.len() as u32;
                self.relations.insert(triple.rtype.clone(), r);
                self.relation_names.push(triple.rtype.clone());
                r
            }
        };
        if !self.triples.insert((s, rel, t)) {
            self.duplicate_triples += 1;
        }
        Ok(())
    }

    pub fn add_item(&mut self, id: &str, source_name: &str, line: usize) -> Result<()> {
        let idx = self.lookup.get(id).copied().ok_or_else(|| {
            Error::malformed(source_name, line, format!("item id `{id}` not in entity set"))
        })?;
        self.items.insert(idx);
        Ok(())
    }

    pub fn finish(self) -> (KnowledgeGraph, LoadStats) {
        let n = self.entities.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| self.entities[a as usize].id.cmp(&self.entities[b as usize].id));
        let mut remap = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }

        let mut rel_order: Vec<u32> = (0..self.relation_names.len() as u32).collect();
        rel_order.sort_by(|&a, &b| {
            self.relation_names[a as usize].cmp(&self.relation_names[b as usize])
        });
        let mut rel_remap = vec![0u32; rel_order.len()];
        for (new, &old) in rel_order.iter().enumerate() {
            rel_remap[old as usize] = new as u32;
        }
        let relations: Vec<String> = rel_order
            .iter()
            .map(|&old| self.relation_names[old as usize].clone())
            .collect();

        let mut entities = self.entities;
        let mut slots: Vec<Option<Entity>> = entities.drain(..).map(Some).collect();
        let entities: Vec<Entity> = order
            .iter()
            .map(|&old| slots[old as usize].take().expect("each entity moved once"))
            .collect();

        let mut etypes: Vec<String> = entities.iter().map(|e| e.etype.clone()).collect();
        etypes.sort();
        etypes.dedup();
        let entity_etype: Vec<u32> = entities
            .iter()
            .map(|e| etypes.binary_search(&e.etype).expect("etype interned") as u32)
            .collect();

        let mut triples: Vec<(EntityId, RelId, EntityId)> = self
            .triples
            .iter()
            .map(|&(s, r, t)| {
                (
                    EntityId(remap[s as usize]),
                    RelId(rel_remap[r as usize]),
                    EntityId(remap[t as usize]),
                )
            })
            .collect();
        triples.sort();

        let mut adjacency: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        for &(s, r, t) in &triples {
            adjacency[s.index()].push(Neighbor {
                rel: r,
                direction: Direction::Out,
                entity: t,
            });
            adjacency[t.index()].push(Neighbor {
                rel: r,
                direction: Direction::In,
                entity: s,
            });
        }
        for list in &mut adjacency {
            list.sort();
        }

        let mut items: Vec<EntityId> = self
            .items
            .iter()
            .map(|&i| EntityId(remap[i as usize]))
            .collect();
        items.sort();
        let mut item_flags = vec![false; n];
        for &i in &items {
            item_flags[i.index()] = true;
        }

        let lookup = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), EntityId(i as u32)))
            .collect();

        let stats = LoadStats {
            entities: n,
            triples: triples.len(),
            items: items.len(),
            duplicate_triples: self.duplicate_triples,
        };
        if stats.duplicate_triples > 0 {
            log::warn!("dropped {} duplicate triples", stats.duplicate_triples);
        }
        let graph = KnowledgeGraph {
            entities,
            lookup,
            etypes,
            entity_etype,
            relations,
            triples,
            items,
            item_flags,
            adjacency,
        };
        (graph, stats)
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    lookup: HashMap<String, EntityId>,
    etypes: Vec<String>,
    entity_etype: Vec<u32>,
    relations: Vec<String>,
    triples: Vec<(EntityId, RelId, EntityId)>,
    items: Vec<EntityId>,
    item_flags: Vec<bool>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl KnowledgeGraph {
    /// Parses the three TSV sources (entities, triples, items).
    pub fn load<E: BufRead, T: BufRead, I: BufRead>(
        entities: E,
        triples: T,
        items: I,
    ) -> Result<(Self, LoadStats)> {
        Self::load_named(
            (entities, "entities"),
            (triples, "triples"),
            (items, "items"),
        )
    }

    fn load_named<E: BufRead, T: BufRead, I: BufRead>(
        entities: (E, &str),
        triples: (T, &str),
        items: (I, &str),
    ) -> Result<(Self, LoadStats)> {
        let mut builder = GraphBuilder::new();
        let (reader, name) = entities;
        for rec in read_records(reader, name)? {
            let f = rec.expect_fields(name, 3)?;
            builder.add_entity(Entity::new(&f[0], &f[1], &f[2]), name, rec.line)?;
        }
        let (reader, name) = triples;
        for rec in read_records(reader, name)? {
            let f = rec.expect_fields(name, 3)?;
            builder.add_triple(&Triple::new(&f[0], &f[1], &f[2]), name, rec.line)?;
        }
        let (reader, name) = items;
        for rec in read_records(reader, name)? {
            let f = rec.expect_fields(name, 1)?;
            builder.add_item(&f[0], name, rec.line)?;
        }
        Ok(builder.finish())
    }

    pub fn load_files(
        entities: &FsPath,
        triples: &FsPath,
        items: &FsPath,
    ) -> Result<(Self, LoadStats)> {
        let open = |p: &FsPath| -> Result<BufReader<File>> {
            File::open(p).map(BufReader::new).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
            })
        };
        let (e, t, i) = (open(entities)?, open(triples)?, open(items)?);
        let (en, tn, inn) = (
            entities.display().to_string(),
            triples.display().to_string(),
            items.display().to_string(),
        );
        Self::load_named((e, &en), (t, &tn), (i, &inn))
    }

    pub fn from_parts(parts: &GraphParts) -> Result<(Self, LoadStats)> {
        let mut builder = GraphBuilder::new();
        for (i, e) in parts.entities.iter().enumerate() {
            builder.add_entity(e.clone(), "entities", i + 1)?;
        }
        for (i, t) in parts.triples.iter().enumerate() {
            builder.add_triple(t, "triples", i + 1)?;
        }
        for (i, id) in parts.items.iter().enumerate() {
            builder.add_item(id, "items", i + 1)?;
        }
        Ok(builder.finish())
    }

    pub fn to_parts(&self) -> GraphParts {
        GraphParts {
            entities: self.entities.clone(),
            triples: self
                .triples
                .iter()
                .map(|&(s, r, t)| {
                    Triple::new(
                        &self.entities[s.index()].id,
                        &self.relations[r.index()],
                        &self.entities[t.index()].id,
                    )
                })
                .collect(),
            items: self.items.iter().map(|&i| self.entities[i.index()].id.clone()).collect(),
        }
    }

    /// Serializes the graph into the binary cache format.
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let file = CacheFile {
            format: CACHE_FORMAT.to_string(),
            parts: self.to_parts(),
        };
        let mut out = Vec::new();
        ciborium::into_writer(&file, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<(Self, LoadStats)> {
        let file: CacheFile =
            ciborium::from_reader(bytes).map_err(|e| Error::Cache(format!("graph cache: {e}")))?;
        if file.format != CACHE_FORMAT {
            return Err(Error::Cache(format!(
                "graph cache has format `{}`, expected `{CACHE_FORMAT}`",
                file.format
            )));
        }
        Self::from_parts(&file.parts)
    }

    /// SHA-256 of the canonical cache encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_cache_bytes()))
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.index()]
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn resolve(&self, id: &str) -> Option<EntityId> {
        self.lookup.get(id).copied()
    }

    pub fn entity_id(&self, id: &str) -> Result<EntityId> {
        self.resolve(id).ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    /// Resolves `id` and checks that it is an item.
    pub fn item(&self, id: &str) -> Result<EntityId> {
        let e = self.entity_id(id)?;
        if !self.is_item(e) {
            return Err(Error::NotAnItem(id.to_string()));
        }
        Ok(e)
    }

    pub fn items(&self) -> &[EntityId] {
        &self.items
    }

    pub fn is_item(&self, id: EntityId) -> bool {
        self.item_flags[id.index()]
    }

    /// Position of `id` within [`items`](Self::items), if it is an item.
    pub fn item_position(&self, id: EntityId) -> Option<usize> {
        self.items.binary_search(&id).ok()
    }

    pub fn etype_of(&self, id: EntityId) -> u32 {
        self.entity_etype[id.index()]
    }

    pub fn etype_name(&self, etype: u32) -> &str {
        &self.etypes[etype as usize]
    }

    pub fn etype_names(&self) -> &[String] {
        &self.etypes
    }

    pub fn relation_name(&self, rel: RelId) -> &str {
        &self.relations[rel.index()]
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations
            .binary_search_by(|r| r.as_str().cmp(name))
            .ok()
            .map(|i| RelId(i as u32))
    }

    pub fn triples(&self) -> &[(EntityId, RelId, EntityId)] {
        &self.triples
    }

    /// Adjacency entries sorted by (relation, direction, neighbor).
    pub fn adjacent(&self, id: EntityId) -> &[Neighbor] {
        &self.adjacency[id.index()]
    }

    pub fn degree(&self, id: EntityId) -> usize {
        self.adjacency[id.index()].len()
    }

    /// Number of in-going plus out-going edges of `id`.
    pub fn edgeset(&self, id: &str) -> Result<usize> {
        Ok(self.degree(self.entity_id(id)?))
    }

    /// Incident triples of `id` as (edge type, direction, neighbor id).
    pub fn neighbors(&self, id: &str) -> Result<Vec<(&str, Direction, &str)>> {
        let e = self.entity_id(id)?;
        Ok(self
            .adjacent(e)
            .iter()
            .map(|n| {
                (
                    self.relation_name(n.rel),
                    n.direction,
                    self.entity(n.entity).id.as_str(),
                )
            })
            .collect())
    }
}
