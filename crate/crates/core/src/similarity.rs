//! Item-item similarity measures: interestingness-weighted path similarity
//! (IPSim), path counting, LDSD and a seeded random baseline.
//!
//! Two routes compute IPSim. [`ipsim`] enumerates the paths of one pair and
//! sums their interestingness directly; it is the reference. [`Scorer`]
//! answers batch queries from [`PathStatsCache`], which walks the graph
//! once per seed item and keeps, per target and per path length, the path
//! count, the summed type frequency and the summed unpopularity. Because
//! interestingness is linear in the heuristics, every `(weights, n)`
//! configuration can then be scored without touching the graph again.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Direction, EntityId, KnowledgeGraph, Neighbor, RelId};
use crate::index::Indices;
use crate::interest::{interestingness, Weights};
use crate::paths::{paths_between, walk_item_paths, Cutoff, TypeKeyCache};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureConfig {
    IpSim { weights: Weights, n: Cutoff },
    Count,
    Ldsd,
    Rnd { seed: u64 },
}

impl MeasureConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureConfig::IpSim { .. } => "ipsim",
            MeasureConfig::Count => "count",
            MeasureConfig::Ldsd => "ldsd",
            MeasureConfig::Rnd { .. } => "rnd",
        }
    }
}

impl fmt::Display for MeasureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureConfig::IpSim { weights, n } => write!(f, "ipsim(w={weights}, n={n})"),
            MeasureConfig::Rnd { seed } => write!(f, "rnd(seed={seed})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Aggregates over the paths of one length between one ordered pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LengthStats {
    pub paths: u64,
    /// Sum over paths of the frequency of their type.
    pub freq_sum: u64,
    pub unpopularity_sum: f64,
}

/// Per-length path aggregates for one ordered pair; index 0 is length 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairStats {
    by_len: Vec<LengthStats>,
}

impl PairStats {
    fn record(&mut self, len: usize, freq: u64, unpopularity: f64) {
        if self.by_len.len() < len {
            self.by_len.resize(len, LengthStats::default());
        }
        let s = &mut self.by_len[len - 1];
        s.paths += 1;
        s.freq_sum += freq;
        s.unpopularity_sum += unpopularity;
    }

    pub fn by_length(&self) -> &[LengthStats] {
        &self.by_len
    }

    pub fn path_count(&self) -> u64 {
        self.by_len.iter().map(|s| s.paths).sum()
    }

    pub fn path_count_within(&self, n: Cutoff) -> u64 {
        self.by_len
            .iter()
            .enumerate()
            .filter(|(i, _)| n.allows(i + 1))
            .map(|(_, s)| s.paths)
            .sum()
    }

    /// IPSim from the aggregates; `max_freq` is the largest type frequency
    /// among types with at most `n` edges.
    pub fn ipsim(&self, weights: &Weights, n: Cutoff, max_freq: u64) -> f64 {
        let mut total = 0.0;
        for (i, s) in self.by_len.iter().enumerate() {
            let len = i + 1;
            if !n.allows(len) {
                break;
            }
            if s.paths == 0 {
                continue;
            }
            let paths = s.paths as f64;
            let rarity_sum = if max_freq == 0 {
                paths
            } else {
                paths - s.freq_sum as f64 / max_freq as f64
            };
            total += weights.rarity * rarity_sum
                + weights.unpopularity * s.unpopularity_sum
                + weights.shortness * paths / len as f64;
        }
        total
    }
}

type StatsRow = Vec<(EntityId, PairStats)>;

/// Lazily computed, thread-safe per-seed path statistics.
pub struct PathStatsCache<'a> {
    graph: &'a KnowledgeGraph,
    indices: &'a Indices,
    rows: Vec<OnceLock<StatsRow>>,
}

impl<'a> PathStatsCache<'a> {
    pub fn new(graph: &'a KnowledgeGraph, indices: &'a Indices) -> Self {
        PathStatsCache {
            graph,
            indices,
            rows: (0..graph.items().len()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.graph
    }

    pub fn indices(&self) -> &'a Indices {
        self.indices
    }

    /// Targets reachable from `seed`, sorted by id, with their statistics.
    ///
    /// Panics if `seed` is not an item of the graph.
    pub fn row(&self, seed: EntityId) -> &[(EntityId, PairStats)] {
        let pos = self
            .graph
            .item_position(seed)
            .unwrap_or_else(|| panic!("`{}` is not an item", self.graph.entity(seed).id));
        self.rows[pos].get_or_init(|| self.compute_row(seed))
    }

    pub fn pair(&self, a: EntityId, b: EntityId) -> Option<&PairStats> {
        let row = self.row(a);
        row.binary_search_by_key(&b, |(t, _)| *t).ok().map(|i| &row[i].1)
    }

    fn compute_row(&self, seed: EntityId) -> StatsRow {
        let graph = self.graph;
        let types = &self.indices.types;
        let centrality = &self.indices.centrality;
        let mut typer = TypeKeyCache::new(graph);
        let mut freq_by_type: Vec<Option<u64>> = Vec::new();
        let mut acc: HashMap<EntityId, PairStats> = HashMap::new();
        walk_item_paths(graph, seed, types.max_len(), |target, entities, steps| {
            let tid = typer.type_id(entities, steps);
            if freq_by_type.len() <= tid {
                freq_by_type.resize(tid + 1, None);
            }
            let freq = *freq_by_type[tid].get_or_insert_with(|| {
                let f = types.freq(typer.key(tid));
                debug_assert!(f.is_some(), "type {} missing from index", typer.key(tid));
                f.unwrap_or(0)
            });
            let min_centrality = entities
                .iter()
                .map(|&e| centrality.centrality(e))
                .fold(f64::INFINITY, f64::min);
            acc.entry(target)
                .or_default()
                .record(steps.len(), freq, 1.0 - min_centrality);
        });
        let mut row: StatsRow = acc.into_iter().collect();
        row.sort_by_key(|(t, _)| *t);
        row
    }
}

/// A configured measure answering queries over one graph.
pub struct Scorer<'a> {
    cache: &'a PathStatsCache<'a>,
    config: MeasureConfig,
    max_freq: u64,
}

impl<'a> Scorer<'a> {
    pub fn new(cache: &'a PathStatsCache<'a>, config: MeasureConfig) -> Result<Self> {
        let max_freq = match config {
            MeasureConfig::IpSim { n, .. } => {
                let built = cache.indices.types.max_len();
                if n > built {
                    return Err(Error::InvalidArgument(format!(
                        "n={n} exceeds the index max_len={built}"
                    )));
                }
                cache.indices.types.max_freq_within(n)
            }
            MeasureConfig::Count if cache.indices.types.max_len() != Cutoff::Unbounded => {
                return Err(Error::InvalidArgument(format!(
                    "count needs an index built with unbounded max_len, not {}",
                    cache.indices.types.max_len()
                )));
            }
            _ => 0,
        };
        Ok(Scorer {
            cache,
            config,
            max_freq,
        })
    }

    pub fn config(&self) -> &MeasureConfig {
        &self.config
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.cache.graph
    }

    /// Similarity of the ordered pair `(a, b)` of distinct items.
    pub fn score(&self, a: EntityId, b: EntityId) -> f64 {
        match self.config {
            MeasureConfig::IpSim { weights, n } => self
                .cache
                .pair(a, b)
                .map_or(0.0, |s| s.ipsim(&weights, n, self.max_freq)),
            MeasureConfig::Count => self.cache.pair(a, b).map_or(0.0, |s| s.path_count() as f64),
            MeasureConfig::Ldsd => ldsd_between(self.cache.graph, a, b),
            MeasureConfig::Rnd { seed } => {
                let g = self.cache.graph;
                random_pair_score(seed, &g.entity(a).id, &g.entity(b).id)
            }
        }
    }

    /// Scores of `seed` against each of `targets`, in order.
    pub fn score_targets(&self, seed: EntityId, targets: &[EntityId]) -> Vec<f64> {
        match self.config {
            MeasureConfig::IpSim { .. } | MeasureConfig::Count => {
                let row = self.cache.row(seed);
                targets
                    .iter()
                    .map(|t| match row.binary_search_by_key(t, |(id, _)| *id) {
                        Ok(i) => self.from_stats(&row[i].1),
                        Err(_) => 0.0,
                    })
                    .collect()
            }
            _ => targets.iter().map(|&t| self.score(seed, t)).collect(),
        }
    }

    fn from_stats(&self, stats: &PairStats) -> f64 {
        match self.config {
            MeasureConfig::IpSim { weights, n } => stats.ipsim(&weights, n, self.max_freq),
            MeasureConfig::Count => stats.path_count() as f64,
            _ => unreachable!("only path-statistics measures"),
        }
    }
}

/// Sorts by descending score, ties by ascending id.
pub fn rank_by_score<T: Ord>(scored: &mut [(T, f64)]) {
    scored.sort_by(|(ia, sa), (ib, sb)| sb.total_cmp(sa).then_with(|| ia.cmp(ib)));
}

/// The `k` highest-scoring candidates for `seed`.
pub fn topk_similar(
    scorer: &Scorer<'_>,
    seed: EntityId,
    k: usize,
    candidates: &[EntityId],
) -> Result<Vec<(EntityId, f64)>> {
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    if candidates.contains(&seed) {
        return Err(Error::InvalidArgument(format!(
            "seed `{}` is among the candidates",
            scorer.graph().entity(seed).id
        )));
    }
    let scores = scorer.score_targets(seed, candidates);
    let mut ranked: Vec<(EntityId, f64)> = candidates.iter().copied().zip(scores).collect();
    rank_by_score(&mut ranked);
    ranked.truncate(k);
    Ok(ranked)
}

fn distinct_items(graph: &KnowledgeGraph, i1: &str, i2: &str) -> Result<(EntityId, EntityId)> {
    let a = graph.item(i1)?;
    let b = graph.item(i2)?;
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "similarity needs two distinct items, got `{i1}` twice"
        )));
    }
    Ok((a, b))
}

/// Reference IPSim: enumerate the pair's paths of length at most `n` and
/// sum their interestingness.
pub fn ipsim(
    graph: &KnowledgeGraph,
    indices: &Indices,
    i1: &str,
    i2: &str,
    weights: &Weights,
    n: Cutoff,
) -> Result<f64> {
    let (a, b) = distinct_items(graph, i1, i2)?;
    let types = indices.types.restrict(n)?;
    paths_between(graph, a, b, n)
        .iter()
        .map(|p| interestingness(graph, p, weights, &types, &indices.centrality))
        .sum()
}

/// Number of paths between two items, with no length cutoff.
pub fn count_sim(graph: &KnowledgeGraph, i1: &str, i2: &str) -> Result<u64> {
    let (a, b) = distinct_items(graph, i1, i2)?;
    Ok(paths_between(graph, a, b, Cutoff::Unbounded).len() as u64)
}

fn rel_degree(adj: &[Neighbor], rel: RelId, direction: Direction) -> usize {
    let lo = adj.partition_point(|n| (n.rel, n.direction) < (rel, direction));
    let hi = adj.partition_point(|n| (n.rel, n.direction) <= (rel, direction));
    hi - lo
}

fn damped(count: usize) -> f64 {
    1.0 / (1.0 + (count as f64).ln())
}

/// The LDSD link mass `D` between two entities: direct links in both
/// orientations plus shared outgoing and shared incoming neighbors, each
/// relation damped by the log of how common it is at the endpoints.
pub fn ldsd_mass(graph: &KnowledgeGraph, a: EntityId, b: EntityId) -> f64 {
    let adj_a = graph.adjacent(a);
    let adj_b = graph.adjacent(b);
    let mut mass = 0.0;

    for nb in adj_a.iter().filter(|nb| nb.entity == b) {
        mass += match nb.direction {
            Direction::Out => damped(rel_degree(adj_a, nb.rel, Direction::Out)),
            Direction::In => damped(rel_degree(adj_b, nb.rel, Direction::Out)),
        };
    }

    // Relations (with direction) under which a and b share a neighbor;
    // adjacency lists are sorted, so a merge finds them.
    let mut shared: Vec<(RelId, Direction)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < adj_a.len() && j < adj_b.len() {
        match adj_a[i].cmp(&adj_b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let key = (adj_a[i].rel, adj_a[i].direction);
                if shared.last() != Some(&key) {
                    shared.push(key);
                }
                i += 1;
                j += 1;
            }
        }
    }
    for (rel, direction) in shared {
        let common = rel_degree(adj_a, rel, direction).max(rel_degree(adj_b, rel, direction));
        mass += damped(common);
    }
    mass
}

/// `1 - LDSD`, where `LDSD = 1 / (1 + D)`.
pub fn ldsd_between(graph: &KnowledgeGraph, a: EntityId, b: EntityId) -> f64 {
    let d = ldsd_mass(graph, a, b);
    d / (1.0 + d)
}

pub fn ldsd_sim(graph: &KnowledgeGraph, i1: &str, i2: &str) -> Result<f64> {
    let (a, b) = distinct_items(graph, i1, i2)?;
    Ok(ldsd_between(graph, a, b))
}

/// One uniform draw in `[0, 1)`.
pub fn rnd_sim<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Random stream owned by one ordered pair under a global seed, so scores
/// do not depend on evaluation order or thread count.
pub fn pair_stream(seed: u64, a: &str, b: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(a.as_bytes());
    h.update([0x1f]);
    h.update(b.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

pub fn random_pair_score(seed: u64, a: &str, b: &str) -> f64 {
    rnd_sim(&mut pair_stream(seed, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_graph, toy_graph_with, toy_with_second_song, toy_with_third_item};
    use crate::graph::Triple;

    fn setup(g: &KnowledgeGraph) -> Indices {
        Indices::build(g, Cutoff::Unbounded).unwrap()
    }

    #[test]
    fn toy_ipsim_reference() {
        let (g, _) = toy_graph();
        let idx = setup(&g);
        let w = Weights::shortness_only();
        assert!((ipsim(&g, &idx, "A", "B", &w, Cutoff::Unbounded).unwrap() - 2.0).abs() < 1e-12);
        assert!((ipsim(&g, &idx, "A", "B", &w, Cutoff::Bounded(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!(ipsim(&g, &idx, "A", "A", &w, Cutoff::Unbounded).is_err());
        assert!(ipsim(&g, &idx, "A", "S", &w, Cutoff::Unbounded).is_err());
    }

    #[test]
    fn toy_batch_route_matches_reference() {
        let (g, _) = toy_graph();
        let idx = setup(&g);
        let cache = PathStatsCache::new(&g, &idx);
        let a = g.item("A").unwrap();
        let b = g.item("B").unwrap();
        for n in [Cutoff::Bounded(1), Cutoff::Bounded(2), Cutoff::Unbounded] {
            let cfg = MeasureConfig::IpSim {
                weights: Weights::new(0.3, 0.1, 0.6).unwrap(),
                n,
            };
            let s = Scorer::new(&cache, cfg).unwrap();
            let reference = ipsim(&g, &idx, "A", "B", &Weights::new(0.3, 0.1, 0.6).unwrap(), n).unwrap();
            assert!((s.score(a, b) - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn count_measure() {
        let (g, _) = toy_graph();
        assert_eq!(count_sim(&g, "A", "B").unwrap(), 3);
        let (g2, _) = toy_with_second_song();
        assert_eq!(count_sim(&g2, "A", "B").unwrap(), 4);
        let (g3, _) = toy_graph_with(&[("D", "artist", "D")], &[], &["D"]);
        assert_eq!(count_sim(&g3, "A", "D").unwrap(), 0);

        let idx = setup(&g2);
        let cache = PathStatsCache::new(&g2, &idx);
        let s = Scorer::new(&cache, MeasureConfig::Count).unwrap();
        assert_eq!(s.score(g2.item("A").unwrap(), g2.item("B").unwrap()), 4.0);
    }

    #[test]
    fn ldsd_fixtures() {
        let (g, _) = toy_graph();
        assert!((ldsd_sim(&g, "A", "B").unwrap() - 0.75).abs() < 1e-12);
        assert!((ldsd_sim(&g, "B", "A").unwrap() - 0.75).abs() < 1e-12);

        // A second song written by A alone: wrote term becomes 1/(1+ln 2).
        let (g2, _) = toy_graph_with(
            &[("S3", "song", "Solo Song")],
            &[Triple::new("A", "wrote", "S3")],
            &[],
        );
        let d = 2.0 + 1.0 / (1.0 + 2f64.ln());
        let expected = d / (1.0 + d);
        assert!((ldsd_sim(&g2, "A", "B").unwrap() - expected).abs() < 1e-12);
        // D = 2 + 1/(1 + ln 2) ~= 2.5906, similarity ~= 0.7215.
        assert!((ldsd_sim(&g2, "A", "B").unwrap() - 0.7215).abs() < 1e-4);
        assert_eq!(ldsd_sim(&g2, "A", "B").unwrap(), ldsd_sim(&g2, "B", "A").unwrap());

        let (g3, _) = toy_graph_with(&[("D", "artist", "D")], &[], &["D"]);
        assert_eq!(ldsd_sim(&g3, "A", "D").unwrap(), 0.0);
    }

    #[test]
    fn random_baseline() {
        let a = random_pair_score(42, "A", "B");
        assert_eq!(a, random_pair_score(42, "A", "B"));
        assert_ne!(a, random_pair_score(43, "A", "B"));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut first = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(rnd_sim(&mut rng), rnd_sim(&mut first));

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws: Vec<f64> = (0..100_000).map(|_| rnd_sim(&mut rng)).collect();
        assert!(draws.iter().all(|d| (0.0..1.0).contains(d)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn topk_ranking() {
        let (g, _) = toy_with_third_item();
        let idx = setup(&g);
        let cache = PathStatsCache::new(&g, &idx);
        let cfg = MeasureConfig::IpSim {
            weights: Weights::shortness_only(),
            n: Cutoff::Unbounded,
        };
        let s = Scorer::new(&cache, cfg).unwrap();
        let a = g.item("A").unwrap();
        let (b, c) = (g.item("B").unwrap(), g.item("C").unwrap());
        let top = topk_similar(&s, a, 2, &[c, b]).unwrap();
        assert_eq!(top, vec![(b, 2.0), (c, 0.5)]);
        assert_eq!(topk_similar(&s, a, 5, &[c, b]).unwrap().len(), 2);
        assert!(topk_similar(&s, a, 0, &[b]).is_err());
        assert!(topk_similar(&s, a, 1, &[]).is_err());
        assert!(topk_similar(&s, a, 1, &[a, b]).is_err());
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let mut v = vec![("b", 1.0), ("a", 1.0), ("c", 2.0)];
        rank_by_score(&mut v);
        assert_eq!(v, vec![("c", 2.0), ("a", 1.0), ("b", 1.0)]);
    }

    #[test]
    fn n_beyond_index_bound_is_rejected() {
        let (g, _) = toy_graph();
        let idx = Indices::build(&g, Cutoff::Bounded(1)).unwrap();
        let cache = PathStatsCache::new(&g, &idx);
        let cfg = MeasureConfig::IpSim {
            weights: Weights::shortness_only(),
            n: Cutoff::Unbounded,
        };
        assert!(Scorer::new(&cache, cfg).is_err());
    }
}
