//! Ranking metrics and the two evaluation protocols: ranking dataset items
//! against a ground truth, and ranking held-out interactions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::paths::Cutoff;
use crate::recommender::{Phase, Recommender, SplitBundle};
use crate::similarity::{rank_by_score, Scorer};
use crate::tsv::{fmt_score, read_records};

/// `|top-N ∩ relevant| / N`.
pub fn precision_at_n<T: Eq + std::hash::Hash>(ranking: &[T], relevant: &HashSet<T>, n: usize) -> f64 {
    assert!(n >= 1, "cutoff must be at least 1");
    let hits = ranking.iter().take(n).filter(|x| relevant.contains(x)).count();
    hits as f64 / n as f64
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Binary-gain nDCG@N, normalized by the ideal DCG of
/// `min(|relevant|, N)` hits.
pub fn ndcg_at_n<T: Eq + std::hash::Hash>(ranking: &[T], relevant: &HashSet<T>, n: usize) -> f64 {
    assert!(n >= 1, "cutoff must be at least 1");
    if relevant.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranking
        .iter()
        .take(n)
        .enumerate()
        .filter(|(_, x)| relevant.contains(x))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let ideal: f64 = (1..=relevant.len().min(n)).map(discount).sum();
    dcg / ideal
}

/// `(seed, relevant items)` records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruthDataset {
    pub records: Vec<(String, Vec<String>)>,
}

impl GroundTruthDataset {
    /// Parses `seed<TAB>id,id,...` records.
    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = BTreeSet::new();
        for rec in read_records(reader, source_name)? {
            let f = rec.expect_fields(source_name, 2)?;
            let seed = f[0].clone();
            let relevant: Vec<String> = f[1]
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            if relevant.contains(&seed) {
                return Err(Error::malformed(
                    source_name,
                    rec.line,
                    format!("seed `{seed}` listed as its own relevant item"),
                ));
            }
            if !seen.insert(seed.clone()) {
                return Err(Error::malformed(
                    source_name,
                    rec.line,
                    format!("seed `{seed}` appears twice"),
                ));
            }
            records.push((seed, relevant));
        }
        Ok(GroundTruthDataset { records })
    }

    pub fn to_tsv(&self) -> String {
        self.records
            .iter()
            .map(|(s, r)| format!("{s}\t{}\n", r.join(",")))
            .collect()
    }

    /// Every id named in the dataset, as seed or as relevant item.
    pub fn universe(&self) -> BTreeSet<&str> {
        let mut all = BTreeSet::new();
        for (s, rel) in &self.records {
            all.insert(s.as_str());
            all.extend(rel.iter().map(String::as_str));
        }
        all
    }
}

/// Per-query Precision@N and nDCG@N at each cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    /// Name of the query column, `seed` or `user`.
    pub key: String,
    pub cutoffs: Vec<usize>,
    /// `(query, precision per cutoff, ndcg per cutoff)`.
    pub rows: Vec<(String, Vec<f64>, Vec<f64>)>,
    pub skipped: usize,
}

impl MetricReport {
    fn metric_names(&self) -> Vec<String> {
        let pr = self.cutoffs.iter().map(|n| format!("pr@{n}"));
        let ndcg = self.cutoffs.iter().map(|n| format!("ndcg@{n}"));
        pr.chain(ndcg).collect()
    }

    pub fn query_count(&self) -> usize {
        self.rows.len()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.key.clone();
        for name in self.metric_names() {
            out.push('\t');
            out.push_str(&name);
        }
        out.push('\n');
        for (q, pr, ndcg) in &self.rows {
            out.push_str(q);
            for v in pr.iter().chain(ndcg) {
                out.push('\t');
                out.push_str(&fmt_score(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_tsv().as_bytes())?;
        Ok(())
    }

    pub fn from_tsv<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::malformed(source_name, 1, "empty report"))?;
        let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        let bad_header = || Error::malformed(source_name, 1, format!("bad header `{header}`"));
        if cols.len() < 3 || (cols.len() - 1) % 2 != 0 {
            return Err(bad_header());
        }
        let half = (cols.len() - 1) / 2;
        let mut cutoffs = Vec::with_capacity(half);
        for (i, c) in cols[1..=half].iter().enumerate() {
            let n: usize = c
                .strip_prefix("pr@")
                .and_then(|n| n.parse().ok())
                .ok_or_else(bad_header)?;
            if cols[1 + half + i] != format!("ndcg@{n}") {
                return Err(bad_header());
            }
            cutoffs.push(n);
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != cols.len() {
                return Err(Error::malformed(
                    source_name,
                    i + 2,
                    format!("expected {} fields, found {}", cols.len(), f.len()),
                ));
            }
            let vals = f[1..]
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::malformed(source_name, i + 2, format!("bad value `{v}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push((f[0].to_string(), vals[..half].to_vec(), vals[half..].to_vec()));
        }
        Ok(MetricReport {
            key: cols[0].to_string(),
            cutoffs,
            rows,
            skipped: 0,
        })
    }

    /// Per-query values of a metric such as `ndcg@10`, in row order.
    pub fn column(&self, metric: &str) -> Result<Vec<f64>> {
        let unknown = || {
            Error::InvalidArgument(format!(
                "metric `{metric}` not in report (have {})",
                self.metric_names().join(", ")
            ))
        };
        let (name, n) = metric.split_once('@').ok_or_else(unknown)?;
        let n: usize = n.parse().map_err(|_| unknown())?;
        let pos = self.cutoffs.iter().position(|&c| c == n).ok_or_else(unknown)?;
        match name {
            "pr" => Ok(self.rows.iter().map(|r| r.1[pos]).collect()),
            "ndcg" => Ok(self.rows.iter().map(|r| r.2[pos]).collect()),
            _ => Err(unknown()),
        }
    }

    pub fn mean(&self, metric: &str) -> Result<f64> {
        let col = self.column(metric)?;
        if col.is_empty() {
            return Ok(0.0);
        }
        Ok(col.iter().sum::<f64>() / col.len() as f64)
    }

    /// Aligned table of means: one row per metric, one column per cutoff.
    pub fn summary(&self, label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {label}: {} queries, {} skipped", self.rows.len(), self.skipped);
        let _ = write!(out, "# {:<8}", "metric");
        for n in &self.cutoffs {
            let _ = write!(out, " {:>10}", format!("@{n}"));
        }
        out.push('\n');
        for (name, metric) in [("Pr", "pr"), ("nDCG", "ndcg")] {
            let _ = write!(out, "# {name:<8}");
            for n in &self.cutoffs {
                let m = self.mean(&format!("{metric}@{n}")).unwrap_or(0.0);
                let _ = write!(out, " {:>10}", format!("{m:.4}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_cutoffs(cutoffs: &[usize]) -> Result<()> {
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::InvalidArgument(
            "cutoffs must be a non-empty list of positive integers".into(),
        ));
    }
    Ok(())
}

fn metrics_for<T: Eq + std::hash::Hash>(
    ranking: &[T],
    relevant: &HashSet<T>,
    cutoffs: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let pr = cutoffs.iter().map(|&n| precision_at_n(ranking, relevant, n)).collect();
    let ndcg = cutoffs.iter().map(|&n| ndcg_at_n(ranking, relevant, n)).collect();
    (pr, ndcg)
}

fn resolve_item(graph: &KnowledgeGraph, id: &str) -> Option<EntityId> {
    graph.resolve(id).filter(|&e| graph.is_item(e))
}

/// Ranks every other dataset item for each seed and scores the ranking
/// against the seed's relevant set. Queries naming an id that is not an
/// item of the graph are skipped.
pub fn evaluate_ground_truth(
    scorer: &Scorer<'_>,
    dataset: &GroundTruthDataset,
    cutoffs: &[usize],
) -> Result<MetricReport> {
    check_cutoffs(cutoffs)?;
    let graph = scorer.graph();
    let universe: Vec<EntityId> = dataset
        .universe()
        .into_iter()
        .filter_map(|id| resolve_item(graph, id))
        .collect();

    let mut queries = Vec::new();
    let mut skipped = 0;
    for (seed, relevant) in &dataset.records {
        let resolved: Option<Vec<EntityId>> = std::iter::once(seed)
            .chain(relevant)
            .map(|id| resolve_item(graph, id))
            .collect();
        match resolved {
            Some(ids) => queries.push((seed.clone(), ids[0], ids[1..].iter().copied().collect::<HashSet<_>>())),
            None => {
                warn!("skipping query `{seed}`: it names an id that is not an item of the graph");
                skipped += 1;
            }
        }
    }

    let rows = queries
        .par_iter()
        .map(|(name, seed, relevant)| {
            let candidates: Vec<EntityId> = universe.iter().copied().filter(|c| c != seed).collect();
            let scores = scorer.score_targets(*seed, &candidates);
            let mut ranked: Vec<(EntityId, f64)> = candidates.into_iter().zip(scores).collect();
            rank_by_score(&mut ranked);
            let ranking: Vec<EntityId> = ranked.into_iter().map(|(e, _)| e).collect();
            let (pr, ndcg) = metrics_for(&ranking, relevant, cutoffs);
            (name.clone(), pr, ndcg)
        })
        .collect();
    if skipped > 0 {
        warn!("{skipped} ground-truth queries skipped");
    }
    Ok(MetricReport {
        key: "seed".into(),
        cutoffs: cutoffs.to_vec(),
        rows,
        skipped,
    })
}

/// Recommends for every user with held-out items in `phase` and scores the
/// list against those items.
pub fn evaluate_recommender(
    recommender: &Recommender<'_>,
    bundle: &SplitBundle,
    k: Cutoff,
    cutoffs: &[usize],
    phase: Phase,
) -> Result<MetricReport> {
    check_cutoffs(cutoffs)?;
    let held = bundle.phase(phase);
    if held.is_empty() {
        return Err(Error::InvalidData("no held-out interactions in this phase".into()));
    }
    let depth = *cutoffs.iter().max().expect("non-empty");
    let users: Vec<(&str, &BTreeMap<String, f64>)> = held
        .users()
        .map(|u| (u, held.profile(u).expect("listed user")))
        .collect();
    let results: Vec<Option<(String, Vec<f64>, Vec<f64>)>> = users
        .par_iter()
        .map(|&(user, items)| {
            if bundle.train.profile(user).is_none() {
                return Ok(None);
            }
            let ranking: Vec<String> = recommender
                .recommend(user, depth, k)?
                .into_iter()
                .map(|(id, _)| id)
                .collect();
            let relevant: HashSet<String> = items.keys().cloned().collect();
            let (pr, ndcg) = metrics_for(&ranking, &relevant, cutoffs);
            Ok(Some((user.to_string(), pr, ndcg)))
        })
        .collect::<Result<_>>()?;
    let skipped = results.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        warn!("{skipped} users without training interactions skipped");
    }
    Ok(MetricReport {
        key: "user".into(),
        cutoffs: cutoffs.to_vec(),
        rows: results.into_iter().flatten().collect(),
        skipped,
    })
}
