//! A generated benchmark with planted similarity structure.
//!
//! Thirty artist items fall into six clusters of five. Members of a cluster
//! share a band and a producer, two relations nothing else uses, so every
//! relevant pair is joined by two rare paths. Around them sits common noise:
//! tags, genres and countries assigned at random, with one "popular" artist
//! per cluster carrying many tags. Albums owned by a single artist pad the
//! graph to 200 entities without adding inter-item paths.

use std::fs;
use std::path::Path as FsPath;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::evaluation::GroundTruthDataset;
use crate::graph::{Entity, GraphParts, Triple};
use crate::recommender::{InteractionMatrix, Role};

pub const CLUSTERS: usize = 6;
pub const CLUSTER_SIZE: usize = 5;
pub const ITEMS: usize = CLUSTERS * CLUSTER_SIZE;
pub const ENTITIES: usize = 200;
const TAGS: usize = 20;
const GENRES: usize = 10;
const COUNTRIES: usize = 3;
const POPULAR_TAGS: usize = 12;
const PLAIN_TAGS: usize = 3;
const USERS: usize = 90;

pub struct Benchmark {
    pub parts: GraphParts,
    /// Ground truth for seeds with an even index.
    pub validation: GroundTruthDataset,
    /// Ground truth for seeds with an odd index.
    pub test: GroundTruthDataset,
    /// Raw play counts concentrated on each user's favourite cluster.
    pub interactions: InteractionMatrix,
}

pub fn item_id(i: usize) -> String {
    format!("a{i:02}")
}

pub fn cluster_of(i: usize) -> usize {
    i / CLUSTER_SIZE
}

fn relevant_to(i: usize) -> Vec<String> {
    let c = cluster_of(i);
    (c * CLUSTER_SIZE..(c + 1) * CLUSTER_SIZE)
        .filter(|&j| j != i)
        .map(item_id)
        .collect()
}

pub fn generate(seed: u64) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entities = Vec::with_capacity(ENTITIES);
    let mut triples = Vec::new();

    for i in 0..ITEMS {
        entities.push(Entity::new(item_id(i), "artist", format!("Artist {i}")));
    }
    for c in 0..CLUSTERS {
        let band = format!("band{c}");
        let producer = format!("prod{c}");
        entities.push(Entity::new(&band, "band", format!("Band {c}")));
        entities.push(Entity::new(&producer, "producer", format!("Producer {c}")));
        for i in c * CLUSTER_SIZE..(c + 1) * CLUSTER_SIZE {
            triples.push(Triple::new(item_id(i), "member_of", &band));
            triples.push(Triple::new(item_id(i), "produced_by", &producer));
        }
    }
    for t in 0..TAGS {
        entities.push(Entity::new(format!("tag{t:02}"), "tag", format!("tag {t}")));
    }
    for g in 0..GENRES {
        entities.push(Entity::new(format!("genre{g}"), "genre", format!("genre {g}")));
    }
    for c in 0..COUNTRIES {
        entities.push(Entity::new(format!("country{c}"), "country", format!("country {c}")));
    }
    for i in 0..ITEMS {
        let popular = i % CLUSTER_SIZE == cluster_of(i) % CLUSTER_SIZE;
        let n_tags = if popular { POPULAR_TAGS } else { PLAIN_TAGS };
        let mut tags = index::sample(&mut rng, TAGS, n_tags).into_vec();
        tags.sort_unstable();
        for t in tags {
            triples.push(Triple::new(item_id(i), "tagged", format!("tag{t:02}")));
        }
        let n_genres = rng.gen_range(1..=2);
        let mut genres = index::sample(&mut rng, GENRES, n_genres).into_vec();
        genres.sort_unstable();
        for g in genres {
            triples.push(Triple::new(item_id(i), "genre", format!("genre{g}")));
        }
        let country = rng.gen_range(0..COUNTRIES);
        triples.push(Triple::new(item_id(i), "based_in", format!("country{country}")));
    }
    let mut album = 0;
    while entities.len() < ENTITIES {
        let id = format!("album{album:03}");
        entities.push(Entity::new(&id, "album", format!("Album {album}")));
        triples.push(Triple::new(item_id(album % ITEMS), "released", &id));
        album += 1;
    }

    let mut validation = GroundTruthDataset::default();
    let mut test = GroundTruthDataset::default();
    for i in 0..ITEMS {
        let half = if i % 2 == 0 { &mut validation } else { &mut test };
        half.records.push((item_id(i), relevant_to(i)));
    }

    let interactions = generate_interactions(&mut rng);
    Benchmark {
        parts: GraphParts {
            entities,
            triples,
            items: (0..ITEMS).map(item_id).collect(),
        },
        validation,
        test,
        interactions,
    }
}

fn generate_interactions(rng: &mut ChaCha8Rng) -> InteractionMatrix {
    let mut m = InteractionMatrix::new(Role::RawCounts);
    let all: Vec<usize> = (0..ITEMS).collect();
    for u in 0..USERS {
        let user = format!("u{u:03}");
        let c = u % CLUSTERS;
        let mut own: Vec<usize> = (c * CLUSTER_SIZE..(c + 1) * CLUSTER_SIZE).collect();
        own.shuffle(rng);
        own.truncate(rng.gen_range(4..=5));
        let others: Vec<usize> = all
            .choose_multiple(rng, 3)
            .copied()
            .filter(|i| cluster_of(*i) != c)
            .collect();
        for i in own {
            let plays = rng.gen_range(20..200);
            m.insert(&user, &item_id(i), f64::from(plays)).expect("positive count");
        }
        for i in others {
            let plays = rng.gen_range(1..20);
            m.insert(&user, &item_id(i), f64::from(plays)).expect("positive count");
        }
    }
    m
}

const RANDOM_TYPES: [&str; 4] = ["artist", "song", "genre", "label"];
const RANDOM_RELATIONS: [&str; 4] = ["wrote", "genre", "member", "likes"];

/// A small random graph: at most `max_entities` entities, at most
/// `max_triples` triple draws (repeats collapse) and between `min_items`
/// and `max_items` artist items.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_entities: usize,
    max_triples: usize,
    min_items: usize,
    max_items: usize,
) -> GraphParts {
    let n_items = rng.gen_range(min_items..=max_items);
    let n = rng.gen_range(n_items.max(2)..=max_entities.max(n_items).max(2));
    let entities: Vec<Entity> = (0..n)
        .map(|i| {
            let etype = if i < n_items {
                "artist"
            } else {
                RANDOM_TYPES[rng.gen_range(0..RANDOM_TYPES.len())]
            };
            Entity::new(format!("e{i:02}"), etype, format!("value {i}"))
        })
        .collect();
    let n_triples = rng.gen_range(0..=max_triples);
    let mut triples = Vec::with_capacity(n_triples);
    for _ in 0..n_triples {
        let s = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n - 1);
        if t >= s {
            t += 1;
        }
        let r = RANDOM_RELATIONS[rng.gen_range(0..RANDOM_RELATIONS.len())];
        triples.push(Triple::new(format!("e{s:02}"), r, format!("e{t:02}")));
    }
    GraphParts {
        entities,
        triples,
        items: (0..n_items).map(|i| format!("e{i:02}")).collect(),
    }
}

impl Benchmark {
    /// Writes `entities.tsv`, `triples.tsv`, `items.txt`,
    /// `gt_validation.tsv`, `gt_test.tsv` and `interactions.tsv`.
    pub fn write_dir(&self, dir: &FsPath) -> Result<()> {
        fs::create_dir_all(dir)?;
        let entities: String = self
            .parts
            .entities
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.id, e.etype, e.value))
            .collect();
        let triples: String = self
            .parts
            .triples
            .iter()
            .map(|t| format!("{}\t{}\t{}\n", t.source, t.rtype, t.target))
            .collect();
        let items: String = self.parts.items.iter().map(|i| format!("{i}\n")).collect();
        fs::write(dir.join("entities.tsv"), entities)?;
        fs::write(dir.join("triples.tsv"), triples)?;
        fs::write(dir.join("items.txt"), items)?;
        fs::write(dir.join("gt_validation.tsv"), self.validation.to_tsv())?;
        fs::write(dir.join("gt_test.tsv"), self.test.to_tsv())?;
        let mut buf = Vec::new();
        self.interactions.write_tsv(&mut buf)?;
        fs::write(dir.join("interactions.tsv"), buf)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KnowledgeGraph;

    #[test]
    fn shape() {
        let b = generate(42);
        let (g, stats) = KnowledgeGraph::from_parts(&b.parts).unwrap();
        assert_eq!(stats.entities, ENTITIES);
        assert_eq!(stats.items, ITEMS);
        assert_eq!(stats.duplicate_triples, 0);
        assert_eq!(b.validation.records.len() + b.test.records.len(), ITEMS);
        assert_eq!(b.validation.universe().len(), ITEMS);
        assert_eq!(b.test.universe().len(), ITEMS);
        assert_eq!(g.edgeset("band0").unwrap(), CLUSTER_SIZE);
        assert!(b.interactions.user_count() == USERS);
    }

    #[test]
    fn random_graph_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = random_graph(&mut rng, 12, 25, 2, 4);
            assert!(p.entities.len() <= 12 && p.triples.len() <= 25);
            assert!((2..=4).contains(&p.items.len()));
            let (_, stats) = KnowledgeGraph::from_parts(&p).unwrap();
            assert_eq!(stats.triples + stats.duplicate_triples, p.triples.len());
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(7);
        let b = generate(7);
        assert_eq!(a.parts, b.parts);
        assert_eq!(a.interactions, b.interactions);
        assert_ne!(generate(8).parts, a.parts);
    }
}
