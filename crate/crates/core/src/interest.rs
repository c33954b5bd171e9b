//! Path interestingness: rarity, unpopularity and shortness, combined
//! convexly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::index::{CentralityIndex, TypeFrequencyIndex};
use crate::paths::{path_type, Path};

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Rarity, unpopularity and shortness weights; non-negative, summing to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub rarity: f64,
    pub unpopularity: f64,
    pub shortness: f64,
}

impl Weights {
    pub fn new(rarity: f64, unpopularity: f64, shortness: f64) -> Result<Self> {
        let parts = [rarity, unpopularity, shortness];
        let in_range = parts.iter().all(|w| w.is_finite() && (0.0..=1.0).contains(w));
        let sum: f64 = parts.iter().sum();
        if !in_range || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidWeights(rarity, unpopularity, shortness));
        }
        Ok(Weights {
            rarity,
            unpopularity,
            shortness,
        })
    }

    /// Weights given in integer tenths, e.g. `(3, 1, 6)` for 0.3/0.1/0.6.
    pub fn from_tenths(rarity: u8, unpopularity: u8, shortness: u8) -> Result<Self> {
        if u32::from(rarity) + u32::from(unpopularity) + u32::from(shortness) != 10 {
            return Err(Error::InvalidWeights(
                f64::from(rarity) / 10.0,
                f64::from(unpopularity) / 10.0,
                f64::from(shortness) / 10.0,
            ));
        }
        Self::new(
            f64::from(rarity) / 10.0,
            f64::from(unpopularity) / 10.0,
            f64::from(shortness) / 10.0,
        )
    }

    pub fn shortness_only() -> Self {
        Weights {
            rarity: 0.0,
            unpopularity: 0.0,
            shortness: 1.0,
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.rarity, self.unpopularity, self.shortness)
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// Parses `w1,w2,w3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad weight `{p}` in `{s}`")))
            })
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [a, b, c] => Weights::new(*a, *b, *c),
            _ => Err(Error::InvalidArgument(format!(
                "expected three comma-separated weights, got `{s}`"
            ))),
        }
    }
}

/// The three heuristic values of one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Heuristics {
    pub rarity: f64,
    pub unpopularity: f64,
    pub shortness: f64,
}

impl Heuristics {
    pub fn combine(&self, w: &Weights) -> f64 {
        let v = w.rarity * self.rarity + w.unpopularity * self.unpopularity + w.shortness * self.shortness;
        v.clamp(0.0, 1.0)
    }
}

/// `1 - f/max_f`; a path drawn from an empty population is maximally rare.
pub fn rarity_from_counts(freq: u64, max_freq: u64) -> f64 {
    if max_freq == 0 {
        return 1.0;
    }
    1.0 - freq as f64 / max_freq as f64
}

pub fn rarity(graph: &KnowledgeGraph, path: &Path, types: &TypeFrequencyIndex) -> Result<f64> {
    if types.is_empty() {
        return Ok(1.0);
    }
    let t = path_type(graph, path);
    let f = types
        .freq_of(&t)
        .ok_or_else(|| Error::UnknownPathType(t.to_string()))?;
    Ok(rarity_from_counts(f, types.max_freq()))
}

/// One minus the smallest centrality among all entities on the path,
/// endpoints included.
pub fn unpopularity(path: &Path, centrality: &CentralityIndex) -> Result<f64> {
    let mut min = f64::INFINITY;
    for e in path.entities() {
        if e.index() >= centrality.len() {
            return Err(Error::UnknownEntity(format!("#{}", e.index())));
        }
        min = min.min(centrality.centrality(*e));
    }
    Ok(1.0 - min)
}

pub fn shortness(path: &Path) -> f64 {
    1.0 / path.len() as f64
}

pub fn heuristics(
    graph: &KnowledgeGraph,
    path: &Path,
    types: &TypeFrequencyIndex,
    centrality: &CentralityIndex,
) -> Result<Heuristics> {
    Ok(Heuristics {
        rarity: rarity(graph, path, types)?,
        unpopularity: unpopularity(path, centrality)?,
        shortness: shortness(path),
    })
}

pub fn interestingness(
    graph: &KnowledgeGraph,
    path: &Path,
    weights: &Weights,
    types: &TypeFrequencyIndex,
    centrality: &CentralityIndex,
) -> Result<f64> {
    Ok(heuristics(graph, path, types, centrality)?.combine(weights))
}
