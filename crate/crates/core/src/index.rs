//! Precomputed statistics behind the rarity and unpopularity heuristics.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::paths::{key_len, Cutoff, PathType, TypeKeyCache, walk_item_paths};
use crate::tsv::read_records;

/// Number of inter-item paths per canonical path type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeFrequencyIndex {
    freq: BTreeMap<String, u64>,
    max_freq: u64,
    max_len: Cutoff,
}

impl TypeFrequencyIndex {
    pub fn from_counts(freq: BTreeMap<String, u64>, max_len: Cutoff) -> Self {
        let max_freq = freq.values().copied().max().unwrap_or(0);
        TypeFrequencyIndex {
            freq,
            max_freq,
            max_len,
        }
    }

    pub fn freq(&self, key: &str) -> Option<u64> {
        self.freq.get(key).copied()
    }

    pub fn freq_of(&self, t: &PathType) -> Option<u64> {
        self.freq(t.as_str())
    }

    /// Largest count; 0 when no inter-item path exists.
    pub fn max_freq(&self) -> u64 {
        self.max_freq
    }

    pub fn max_len(&self) -> Cutoff {
        self.max_len
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.freq
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    /// The index a build with the smaller bound `n` would have produced:
    /// counts of types with at most `n` edges, max recomputed.
    pub fn restrict(&self, n: Cutoff) -> Result<Self> {
        if n > self.max_len {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict an index built with max_len={} to {n}",
                self.max_len
            )));
        }
        let freq = self
            .freq
            .iter()
            .filter(|(k, _)| n.allows(key_len(k)))
            .map(|(k, &v)| (k.clone(), v))
            .collect();
        Ok(Self::from_counts(freq, n))
    }

    /// Largest count among types with at most `n` edges.
    pub fn max_freq_within(&self, n: Cutoff) -> u64 {
        self.freq
            .iter()
            .filter(|(k, _)| n.allows(key_len(k)))
            .map(|(_, &v)| v)
            .max()
            .unwrap_or(0)
    }
}

/// Counts every inter-item path once per unordered item pair.
pub fn build_type_frequency_index(graph: &KnowledgeGraph, max_len: Cutoff) -> Result<TypeFrequencyIndex> {
    let items = graph.items();
    if items.len() < 2 {
        return Err(Error::InvalidData(format!(
            "a type-frequency index needs at least 2 items, graph has {}",
            items.len()
        )));
    }
    let partials: Vec<HashMap<String, u64>> = items
        .par_iter()
        .map(|&seed| {
            let mut typer = TypeKeyCache::new(graph);
            let mut local: HashMap<usize, u64> = HashMap::new();
            walk_item_paths(graph, seed, max_len, |target, entities, steps| {
                if target > seed {
                    *local.entry(typer.type_id(entities, steps)).or_default() += 1;
                }
            });
            local
                .into_iter()
                .map(|(id, n)| (typer.key(id).to_string(), n))
                .collect()
        })
        .collect();
    let mut freq = BTreeMap::new();
    for part in partials {
        for (k, n) in part {
            *freq.entry(k).or_insert(0) += n;
        }
    }
    Ok(TypeFrequencyIndex::from_counts(freq, max_len))
}

/// Per-entity centrality: degree over the median degree of same-type
/// entities, capped at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityIndex {
    medians: BTreeMap<String, usize>,
    values: Vec<f64>,
}

/// Upper median of a non-empty list: element `floor(n/2) + 1` (1-based) of
/// the sorted values.
pub fn upper_median(values: &mut [usize]) -> usize {
    assert!(!values.is_empty(), "median of an empty list");
    values.sort_unstable();
    values[values.len() / 2]
}

fn centrality_value(degree: usize, median: usize) -> f64 {
    if median == 0 {
        return 1.0;
    }
    (degree as f64 / median as f64).min(1.0)
}

impl CentralityIndex {
    fn from_medians(graph: &KnowledgeGraph, medians: BTreeMap<String, usize>) -> Result<Self> {
        let by_type: Vec<usize> = graph
            .etype_names()
            .iter()
            .map(|t| {
                medians.get(t).copied().ok_or_else(|| {
                    Error::Cache(format!("no median recorded for entity type `{t}`"))
                })
            })
            .collect::<Result<_>>()?;
        let values = graph
            .entity_ids()
            .map(|e| centrality_value(graph.degree(e), by_type[graph.etype_of(e) as usize]))
            .collect();
        Ok(CentralityIndex { medians, values })
    }

    pub fn centrality(&self, e: EntityId) -> f64 {
        self.values[e.index()]
    }

    pub fn centrality_of(&self, graph: &KnowledgeGraph, id: &str) -> Result<f64> {
        Ok(self.centrality(graph.entity_id(id)?))
    }

    pub fn median(&self, etype: &str) -> Option<usize> {
        self.medians.get(etype).copied()
    }

    pub fn medians(&self) -> &BTreeMap<String, usize> {
        &self.medians
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn build_centrality_index(graph: &KnowledgeGraph) -> CentralityIndex {
    let mut degrees: Vec<Vec<usize>> = vec![Vec::new(); graph.etype_names().len()];
    for e in graph.entity_ids() {
        degrees[graph.etype_of(e) as usize].push(graph.degree(e));
    }
    let medians = graph
        .etype_names()
        .iter()
        .zip(degrees.iter_mut())
        .map(|(t, d)| (t.clone(), upper_median(d)))
        .collect();
    CentralityIndex::from_medians(graph, medians).expect("every type has a median")
}

/// Both indices, tied to the graph they were built from.
#[derive(Clone, Debug)]
pub struct Indices {
    pub types: TypeFrequencyIndex,
    pub centrality: CentralityIndex,
    pub graph_hash: String,
}

const INDEX_HEADER: &str = "# pathsim-index v1";

impl Indices {
    pub fn build(graph: &KnowledgeGraph, max_len: Cutoff) -> Result<Self> {
        Ok(Indices {
            types: build_type_frequency_index(graph, max_len)?,
            centrality: build_centrality_index(graph),
            graph_hash: graph.content_hash(),
        })
    }

    pub fn max_len(&self) -> Cutoff {
        self.types.max_len()
    }

    /// Whether this cache is valid for `graph` at bound `max_len`.
    pub fn matches(&self, graph_hash: &str, max_len: Cutoff) -> bool {
        self.graph_hash == graph_hash && self.types.max_len() == max_len
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{INDEX_HEADER}")?;
        writeln!(out, "graph_sha256\t{}", self.graph_hash)?;
        writeln!(out, "max_len\t{}", self.types.max_len())?;
        for (k, n) in self.types.counts() {
            writeln!(out, "type\t{k}\t{n}")?;
        }
        for (t, m) in self.centrality.medians() {
            writeln!(out, "median\t{t}\t{m}")?;
        }
        Ok(())
    }

    /// Reads a cache written by [`write_tsv`](Self::write_tsv). Centrality
    /// values are recomputed from `graph` and the stored medians.
    pub fn read_tsv<R: BufRead>(graph: &KnowledgeGraph, reader: R, source_name: &str) -> Result<Self> {
        let mut hash = None;
        let mut max_len = None;
        let mut freq = BTreeMap::new();
        let mut medians = BTreeMap::new();
        for rec in read_records(reader, source_name)? {
            let f = &rec.fields;
            let bad = |msg: &str| Error::malformed(source_name, rec.line, msg.to_string());
            match f[0].as_str() {
                "graph_sha256" if f.len() == 2 => hash = Some(f[1].clone()),
                "max_len" if f.len() == 2 => max_len = Some(f[1].parse::<Cutoff>()?),
                "type" if f.len() == 3 => {
                    let n: u64 = f[2].parse().map_err(|_| bad("bad type count"))?;
                    freq.insert(f[1].clone(), n);
                }
                "median" if f.len() == 3 => {
                    let m: usize = f[2].parse().map_err(|_| bad("bad median"))?;
                    medians.insert(f[1].clone(), m);
                }
                _ => return Err(bad("unrecognized index record")),
            }
        }
        let graph_hash = hash.ok_or_else(|| Error::Cache("index lacks graph_sha256".into()))?;
        let max_len = max_len.ok_or_else(|| Error::Cache("index lacks max_len".into()))?;
        Ok(Indices {
            types: TypeFrequencyIndex::from_counts(freq, max_len),
            centrality: CentralityIndex::from_medians(graph, medians)?,
            graph_hash,
        })
    }
}
