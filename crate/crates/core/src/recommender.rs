//! User-item interactions, rating conversion, holdout splits and the
//! similarity-driven item-kNN recommender.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path as FsPath;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::paths::Cutoff;
use crate::similarity::{rank_by_score, Scorer};
use crate::tsv::{fmt_score, read_records};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    RawCounts,
    Ratings,
    Binary,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::RawCounts => "raw-counts",
            Role::Ratings => "ratings",
            Role::Binary => "binary",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-counts" | "counts" => Ok(Role::RawCounts),
            "ratings" => Ok(Role::Ratings),
            "binary" => Ok(Role::Binary),
            _ => Err(Error::InvalidArgument(format!(
                "unknown interaction role `{s}` (raw-counts, ratings, binary)"
            ))),
        }
    }
}

/// Sparse user-item matrix with strictly positive entries.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    role: Role,
    rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl InteractionMatrix {
    pub fn new(role: Role) -> Self {
        InteractionMatrix {
            role,
            rows: BTreeMap::new(),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    fn check_value(&self, value: f64) -> std::result::Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("interaction value must be positive, got {value}"));
        }
        match self.role {
            Role::Ratings if !(value.fract() == 0.0 && (1.0..=5.0).contains(&value)) => {
                Err(format!("rating must be an integer in 1..=5, got {value}"))
            }
            Role::Binary if value != 1.0 => Err(format!("binary value must be 1, got {value}")),
            _ => Ok(()),
        }
    }

    /// Inserts or replaces one entry.
    pub fn insert(&mut self, user: &str, item: &str, value: f64) -> Result<()> {
        self.check_value(value).map_err(Error::InvalidData)?;
        self.rows
            .entry(user.to_string())
            .or_default()
            .insert(item.to_string(), value);
        Ok(())
    }

    /// Reads `user<TAB>item<TAB>value` records; a repeated pair is an error.
    pub fn read_tsv<R: BufRead>(reader: R, source_name: &str, role: Role) -> Result<Self> {
        let mut m = InteractionMatrix::new(role);
        for rec in read_records(reader, source_name)? {
            let f = rec.expect_fields(source_name, 3)?;
            let value: f64 = f[2].parse().map_err(|_| {
                Error::malformed(source_name, rec.line, format!("bad value `{}`", f[2]))
            })?;
            m.check_value(value)
                .map_err(|msg| Error::malformed(source_name, rec.line, msg))?;
            let row = m.rows.entry(f[0].clone()).or_default();
            if row.insert(f[1].clone(), value).is_some() {
                return Err(Error::malformed(
                    source_name,
                    rec.line,
                    format!("repeated interaction ({}, {})", f[0], f[1]),
                ));
            }
        }
        Ok(m)
    }

    pub fn read_file(path: &FsPath, role: Role) -> Result<Self> {
        let file = fs::File::open(path)
            .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
        Self::read_tsv(BufReader::new(file), &path.display().to_string(), role)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (user, row) in &self.rows {
            for (item, value) in row {
                writeln!(out, "{user}\t{item}\t{value}")?;
            }
        }
        Ok(())
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn profile(&self, user: &str) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(user)
    }

    pub fn get(&self, user: &str, item: &str) -> Option<f64> {
        self.rows.get(user)?.get(item).copied()
    }

    pub fn user_count(&self) -> usize {
        self.rows.len()
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.rows.iter().flat_map(|(u, row)| {
            row.iter()
                .map(move |(i, v)| (u.as_str(), i.as_str(), *v))
        })
    }

    /// Drops users with fewer than `min_items` entries, then items with
    /// fewer than `min_users` remaining users.
    pub fn filter_min_counts(&self, min_items: usize, min_users: usize) -> Self {
        let users: BTreeMap<_, _> = self
            .rows
            .iter()
            .filter(|(_, row)| row.len() >= min_items)
            .collect();
        let mut per_item: BTreeMap<&str, usize> = BTreeMap::new();
        for row in users.values() {
            for item in row.keys() {
                *per_item.entry(item).or_default() += 1;
            }
        }
        let keep = |item: &str| per_item.get(item).is_some_and(|&c| c >= min_users);
        self.retain_rows(users.into_iter(), keep)
    }

    /// Keeps only entries whose item is an item of `graph`.
    pub fn restrict_to_items(&self, graph: &KnowledgeGraph) -> Self {
        let keep = |item: &str| graph.resolve(item).is_some_and(|e| graph.is_item(e));
        self.retain_rows(self.rows.iter(), keep)
    }

    fn retain_rows<'a>(
        &self,
        rows: impl Iterator<Item = (&'a String, &'a BTreeMap<String, f64>)>,
        keep: impl Fn(&str) -> bool,
    ) -> Self {
        let mut out = InteractionMatrix::new(self.role);
        for (user, row) in rows {
            let kept: BTreeMap<String, f64> = row
                .iter()
                .filter(|(item, _)| keep(item))
                .map(|(i, v)| (i.clone(), *v))
                .collect();
            if !kept.is_empty() {
                out.rows.insert(user.clone(), kept);
            }
        }
        out
    }

    /// Per-user percentile binning of raw counts into 1..=5 ratings. Tied
    /// counts share the highest percentile of their group.
    pub fn counts_to_ratings(&self) -> Result<Self> {
        if self.role != Role::RawCounts {
            return Err(Error::InvalidArgument(format!(
                "rating conversion needs raw counts, matrix holds {}",
                self.role
            )));
        }
        let mut out = InteractionMatrix::new(Role::Ratings);
        for (user, row) in &self.rows {
            let counts: Vec<f64> = row.values().copied().collect();
            let rated = row
                .iter()
                .map(|(item, &c)| (item.clone(), percentile_rating(percentile_of(c, &counts))))
                .collect();
            out.rows.insert(user.clone(), rated);
        }
        Ok(out)
    }

    /// All entries set to 1.
    pub fn to_binary(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|(u, row)| (u.clone(), row.keys().map(|i| (i.clone(), 1.0)).collect()))
            .collect();
        InteractionMatrix {
            role: Role::Binary,
            rows,
        }
    }
}

/// Percentile rank in `[0, 100]` of `value` within `all`, counting ties at
/// the top of their group.
pub fn percentile_of(value: f64, all: &[f64]) -> f64 {
    let n = all.len();
    if n <= 1 {
        return 100.0;
    }
    let rank = all.iter().filter(|&&c| c <= value).count();
    100.0 * (rank - 1) as f64 / (n - 1) as f64
}

pub fn percentile_rating(percentile: f64) -> f64 {
    match percentile {
        p if p >= 80.0 => 5.0,
        p if p >= 60.0 => 4.0,
        p if p >= 40.0 => 3.0,
        p if p >= 20.0 => 2.0,
        _ => 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Validation,
    Test,
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "validation" => Ok(Phase::Validation),
            "test" => Ok(Phase::Test),
            _ => Err(Error::InvalidArgument(format!(
                "unknown phase `{s}` (validation, test)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitBundle {
    pub train: InteractionMatrix,
    pub validation: InteractionMatrix,
    pub test: InteractionMatrix,
    pub seed: u64,
    pub fraction: f64,
    pub min_rating: Option<f64>,
}

const SPLIT_FILES: [&str; 3] = ["train.tsv", "validation.tsv", "test.tsv"];

impl SplitBundle {
    pub fn phase(&self, phase: Phase) -> &InteractionMatrix {
        match phase {
            Phase::Validation => &self.validation,
            Phase::Test => &self.test,
        }
    }

    pub fn write_dir(&self, dir: &FsPath) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, m) in SPLIT_FILES.iter().zip([&self.train, &self.validation, &self.test]) {
            let mut buf = Vec::new();
            m.write_tsv(&mut buf)?;
            fs::write(dir.join(name), buf)?;
        }
        let min_rating = self.min_rating.map_or("none".to_string(), |r| r.to_string());
        let manifest = format!(
            "role\t{}\nseed\t{}\nfraction\t{}\nmin_rating\t{}\n",
            self.train.role, self.seed, self.fraction, min_rating
        );
        fs::write(dir.join("split_manifest.tsv"), manifest)?;
        Ok(())
    }

    pub fn read_dir(dir: &FsPath) -> Result<Self> {
        let manifest_path = dir.join("split_manifest.tsv");
        let name = manifest_path.display().to_string();
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::InvalidData(format!("{name}: {e}")))?;
        let mut fields = BTreeMap::new();
        for rec in read_records(text.as_bytes(), &name)? {
            let f = rec.expect_fields(&name, 2)?;
            fields.insert(f[0].clone(), f[1].clone());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| Error::InvalidData(format!("{name}: missing `{k}`")))
        };
        let bad = |k: &str| Error::InvalidData(format!("{name}: bad `{k}`"));
        let role: Role = get("role")?.parse()?;
        let seed: u64 = get("seed")?.parse().map_err(|_| bad("seed"))?;
        let fraction: f64 = get("fraction")?.parse().map_err(|_| bad("fraction"))?;
        let min_rating = match get("min_rating")?.as_str() {
            "none" => None,
            v => Some(v.parse().map_err(|_| bad("min_rating"))?),
        };
        let [train, validation, test] =
            SPLIT_FILES.map(|f| InteractionMatrix::read_file(&dir.join(f), role));
        Ok(SplitBundle {
            train: train?,
            validation: validation?,
            test: test?,
            seed,
            fraction,
            min_rating,
        })
    }
}

/// Number held out of a profile of `n`: `fraction * n`, halves rounded up.
pub fn holdout_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 0.5 + 1e-9).floor() as usize
}

fn user_stream(seed: u64, user: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"split");
    h.update(seed.to_le_bytes());
    h.update(user.as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Per user, holds out a random `fraction` of the profile and deals it
/// alternately to validation and test (validation first). With
/// `min_rating`, held-out entries below it are dropped.
pub fn split_holdout(
    m: &InteractionMatrix,
    fraction: f64,
    min_rating: Option<f64>,
    seed: u64,
) -> Result<SplitBundle> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if m.role == Role::RawCounts {
        return Err(Error::InvalidArgument(
            "split a ratings or binary matrix, not raw counts".into(),
        ));
    }
    let mut train = InteractionMatrix::new(m.role);
    let mut validation = InteractionMatrix::new(m.role);
    let mut test = InteractionMatrix::new(m.role);
    for (user, row) in &m.rows {
        let mut entries: Vec<(&String, f64)> = row.iter().map(|(i, v)| (i, *v)).collect();
        entries.shuffle(&mut user_stream(seed, user));
        let h = holdout_size(entries.len(), fraction);
        for (pos, (item, value)) in entries.into_iter().enumerate() {
            let target = if pos >= h {
                &mut train
            } else {
                if min_rating.is_some_and(|t| value < t) {
                    continue;
                }
                if pos % 2 == 0 {
                    &mut validation
                } else {
                    &mut test
                }
            };
            target
                .rows
                .entry(user.clone())
                .or_default()
                .insert(item.clone(), value);
        }
    }
    Ok(SplitBundle {
        train,
        validation,
        test,
        seed,
        fraction,
        min_rating,
    })
}

/// Dense item-item similarities over all items of a graph; `sim[i][j]` is
/// the measure applied to the ordered pair `(i, j)`.
pub struct SimilarityMatrix {
    items: Vec<EntityId>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn compute(scorer: &Scorer<'_>) -> Self {
        let items = scorer.graph().items().to_vec();
        let n = items.len();
        let rows: Vec<Vec<f64>> = items
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                let mut targets = items.clone();
                targets.remove(i);
                let mut row = scorer.score_targets(seed, &targets);
                row.insert(i, 0.0);
                row
            })
            .collect();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            values.extend(row);
        }
        SimilarityMatrix { items, values }
    }

    pub fn items(&self) -> &[EntityId] {
        &self.items
    }

    /// Similarity by item positions.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.items.len() + j]
    }
}

/// `Σ r·sim` over the `k` neighbours with the highest similarity, ties by
/// ascending id. Neighbours are `(id, rating, sim)`.
pub fn knn_score<T: Ord + Copy>(neighbours: &[(T, f64, f64)], k: Cutoff) -> f64 {
    let mut ranked = neighbours.to_vec();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    if let Some(k) = k.as_option() {
        ranked.truncate(k);
    }
    ranked.iter().map(|&(_, r, s)| r * s).sum()
}

/// Item-kNN recommender over a training matrix and precomputed similarities.
pub struct Recommender<'a> {
    graph: &'a KnowledgeGraph,
    sims: &'a SimilarityMatrix,
    train: &'a InteractionMatrix,
}

impl<'a> Recommender<'a> {
    pub fn new(
        graph: &'a KnowledgeGraph,
        sims: &'a SimilarityMatrix,
        train: &'a InteractionMatrix,
    ) -> Self {
        Recommender { graph, sims, train }
    }

    /// The user's training profile as `(item position, rating)`.
    fn profile(&self, user: &str) -> Result<Vec<(usize, f64)>> {
        let row = self
            .train
            .profile(user)
            .ok_or_else(|| Error::UnknownEntity(format!("user `{user}`")))?;
        row.iter()
            .map(|(item, &r)| {
                let e = self.graph.item(item)?;
                let pos = self.graph.item_position(e).expect("item has a position");
                Ok((pos, r))
            })
            .collect()
    }

    fn score_position(&self, profile: &[(usize, f64)], i: usize, k: Cutoff) -> f64 {
        if profile.iter().any(|&(j, _)| j == i) {
            return 0.0;
        }
        let neighbours: Vec<(usize, f64, f64)> = profile
            .iter()
            .map(|&(j, r)| (j, r, self.sims.at(i, j)))
            .collect();
        knn_score(&neighbours, k)
    }

    pub fn predict_score(&self, user: &str, item: &str, k: Cutoff) -> Result<f64> {
        let profile = self.profile(user)?;
        let e = self.graph.item(item)?;
        let i = self.graph.item_position(e).expect("item has a position");
        Ok(self.score_position(&profile, i, k))
    }

    /// Top `n` non-profile items by descending score, ties by ascending id.
    pub fn recommend(&self, user: &str, n: usize, k: Cutoff) -> Result<Vec<(String, f64)>> {
        let profile = self.profile(user)?;
        let in_profile: BTreeSet<usize> = profile.iter().map(|&(j, _)| j).collect();
        let mut scored: Vec<(EntityId, f64)> = self
            .sims
            .items()
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_profile.contains(i))
            .map(|(i, &e)| (e, self.score_position(&profile, i, k)))
            .collect();
        rank_by_score(&mut scored);
        scored.truncate(n);
        Ok(scored
            .into_iter()
            .map(|(e, s)| (self.graph.entity(e).id.clone(), s))
            .collect())
    }
}

/// `item<TAB>score` lines.
pub fn format_ranking(ranking: &[(String, f64)]) -> String {
    ranking
        .iter()
        .map(|(id, s)| format!("{id}\t{}\n", fmt_score(*s)))
        .collect()
}
