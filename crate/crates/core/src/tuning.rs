//! Exhaustive grid search over IPSim weights, the length cutoff `n` and the
//! recommender neighbourhood size `k`, maximizing validation nDCG@10.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{evaluate_ground_truth, evaluate_recommender, GroundTruthDataset};
use crate::interest::Weights;
use crate::paths::Cutoff;
use crate::recommender::{Phase, Recommender, SimilarityMatrix, SplitBundle};
use crate::similarity::{MeasureConfig, PathStatsCache, Scorer};
use crate::tsv::fmt_score;

pub const OBJECTIVE: &str = "ndcg@10";
const OBJECTIVE_CUTOFF: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    GroundTruth,
    Recommender,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::GroundTruth => "gt",
            Protocol::Recommender => "rec",
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gt" => Ok(Protocol::GroundTruth),
            "rec" => Ok(Protocol::Recommender),
            _ => Err(Error::InvalidArgument(format!("unknown protocol `{s}` (gt, rec)"))),
        }
    }
}

/// Which measure the search tunes. Only IPSim has weights and `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    IpSim,
    Count,
    Ldsd,
    Rnd { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub weights: Vec<Weights>,
    pub ns: Vec<Cutoff>,
    pub ks: Vec<Cutoff>,
}

impl Grid {
    /// All weight triples in tenths, `n` in {1, 2, 3, inf} and `k` in
    /// {1, 3, 5, 7, 10, 20, 40, inf}.
    pub fn default_grid() -> Self {
        let mut weights = Vec::with_capacity(66);
        for a in 0..=10u8 {
            for b in 0..=(10 - a) {
                weights.push(Weights::from_tenths(a, b, 10 - a - b).expect("tenths sum to one"));
            }
        }
        let ns = vec![
            Cutoff::Bounded(1),
            Cutoff::Bounded(2),
            Cutoff::Bounded(3),
            Cutoff::Unbounded,
        ];
        let ks = [1, 3, 5, 7, 10, 20, 40]
            .into_iter()
            .map(Cutoff::Bounded)
            .chain([Cutoff::Unbounded])
            .collect();
        Grid { weights, ns, ks }
    }

    /// The largest `n` in the grid.
    pub fn max_n(&self) -> Option<Cutoff> {
        self.ns.iter().copied().max()
    }

    fn configurations(&self, protocol: Protocol, family: Family) -> Vec<Configuration> {
        let measures: Vec<MeasureConfig> = match family {
            Family::IpSim => self
                .weights
                .iter()
                .flat_map(|&weights| self.ns.iter().map(move |&n| MeasureConfig::IpSim { weights, n }))
                .collect(),
            Family::Count => vec![MeasureConfig::Count],
            Family::Ldsd => vec![MeasureConfig::Ldsd],
            Family::Rnd { seed } => vec![MeasureConfig::Rnd { seed }],
        };
        match protocol {
            Protocol::GroundTruth => measures
                .into_iter()
                .map(|measure| Configuration { measure, k: None })
                .collect(),
            Protocol::Recommender => measures
                .into_iter()
                .flat_map(|measure| {
                    self.ks.iter().map(move |&k| Configuration {
                        measure,
                        k: Some(k),
                    })
                })
                .collect(),
        }
    }
}

/// One grid point: a measure and, for the recommender protocol, a `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Configuration {
    pub measure: MeasureConfig,
    pub k: Option<Cutoff>,
}

impl Configuration {
    fn weights_and_n(&self) -> Option<(Weights, Cutoff)> {
        match self.measure {
            MeasureConfig::IpSim { weights, n } => Some((weights, n)),
            _ => None,
        }
    }

    /// Lexicographic order on `(w1, w2, w3, n, k)`.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        let w = |c: &Self| c.weights_and_n().map(|(w, _)| [w.rarity, w.unpopularity, w.shortness]);
        let n = |c: &Self| c.weights_and_n().map(|(_, n)| n);
        let (wa, wb) = (w(self), w(other));
        let weights = match (wa, wb) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(&b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal),
            (a, b) => a.is_some().cmp(&b.is_some()),
        };
        weights
            .then_with(|| n(self).cmp(&n(other)))
            .then_with(|| self.k.cmp(&other.k))
    }

    fn columns(&self) -> [String; 6] {
        let dash = || "-".to_string();
        let (w1, w2, w3, n) = match self.weights_and_n() {
            Some((w, n)) => (
                w.rarity.to_string(),
                w.unpopularity.to_string(),
                w.shortness.to_string(),
                n.to_string(),
            ),
            None => (dash(), dash(), dash(), dash()),
        };
        let k = self.k.map_or_else(dash, |k| k.to_string());
        [self.measure.name().to_string(), w1, w2, w3, n, k]
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [measure, w1, w2, w3, n, k] = self.columns();
        write!(f, "measure={measure} w={w1},{w2},{w3} n={n} k={k}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningResult {
    pub protocol: Protocol,
    pub best: Configuration,
    pub best_objective: f64,
    /// Every configuration with its objective, in key order.
    pub table: Vec<(Configuration, f64)>,
}

impl TuningResult {
    fn from_table(protocol: Protocol, mut table: Vec<(Configuration, f64)>) -> Result<Self> {
        table.sort_by(|a, b| a.0.cmp_key(&b.0));
        let (best, best_objective) = table
            .iter()
            .copied()
            .reduce(|acc, x| if x.1 > acc.1 { x } else { acc })
            .ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
        Ok(TuningResult {
            protocol,
            best,
            best_objective,
            table,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("measure\tw1\tw2\tw3\tn\tk\t{OBJECTIVE}\n");
        for (cfg, v) in &self.table {
            out.push_str(&cfg.columns().join("\t"));
            out.push('\t');
            out.push_str(&fmt_score(*v));
            out.push('\n');
        }
        out
    }
}

fn check_grid(grid: &Grid, family: Family, protocol: Protocol) -> Result<()> {
    let empty = match (family, protocol) {
        (Family::IpSim, _) if grid.weights.is_empty() || grid.ns.is_empty() => true,
        (_, Protocol::Recommender) => grid.ks.is_empty(),
        _ => false,
    };
    if empty {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    Ok(())
}

/// Tunes IPSim weights and `n` for ranking the dataset's items.
pub fn grid_search_ground_truth(
    cache: &PathStatsCache<'_>,
    grid: &Grid,
    validation: &GroundTruthDataset,
) -> Result<TuningResult> {
    check_grid(grid, Family::IpSim, Protocol::GroundTruth)?;
    if validation.records.is_empty() {
        return Err(Error::InvalidData("validation dataset is empty".into()));
    }
    let configs = grid.configurations(Protocol::GroundTruth, Family::IpSim);
    let table = configs
        .par_iter()
        .map(|cfg| {
            let scorer = Scorer::new(cache, cfg.measure)?;
            let report = evaluate_ground_truth(&scorer, validation, &[OBJECTIVE_CUTOFF])?;
            Ok((*cfg, report.mean(OBJECTIVE)?))
        })
        .collect::<Result<Vec<_>>>()?;
    TuningResult::from_table(Protocol::GroundTruth, table)
}

/// Tunes `k` (and, for IPSim, weights and `n`) of the item-kNN recommender
/// on the bundle's validation split.
pub fn grid_search_recommender(
    cache: &PathStatsCache<'_>,
    family: Family,
    grid: &Grid,
    bundle: &SplitBundle,
) -> Result<TuningResult> {
    check_grid(grid, family, Protocol::Recommender)?;
    if bundle.validation.is_empty() {
        return Err(Error::InvalidData("validation split is empty".into()));
    }
    let graph = cache.graph();
    let configs = grid.configurations(Protocol::Recommender, family);
    let mut measures: Vec<MeasureConfig> = Vec::new();
    for c in &configs {
        if !measures.contains(&c.measure) {
            measures.push(c.measure);
        }
    }
    let table: Vec<(Configuration, f64)> = measures
        .par_iter()
        .map(|&measure| {
            let scorer = Scorer::new(cache, measure)?;
            let sims = SimilarityMatrix::compute(&scorer);
            let rec = Recommender::new(graph, &sims, &bundle.train);
            grid.ks
                .iter()
                .map(|&k| {
                    let report =
                        evaluate_recommender(&rec, bundle, k, &[OBJECTIVE_CUTOFF], Phase::Validation)?;
                    Ok((Configuration { measure, k: Some(k) }, report.mean(OBJECTIVE)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    TuningResult::from_table(Protocol::Recommender, table)
}
