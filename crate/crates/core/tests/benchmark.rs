use pathsim::evaluation::{evaluate_ground_truth, evaluate_recommender, GroundTruthDataset};
use pathsim::index::Indices;
use pathsim::recommender::{split_holdout, Phase, Recommender, SimilarityMatrix};
use pathsim::similarity::{MeasureConfig, PathStatsCache, Scorer};
use pathsim::synthetic::{generate, Benchmark};
use pathsim::tuning::{grid_search_ground_truth, grid_search_recommender, Family, Grid, OBJECTIVE};
use pathsim::{Cutoff, KnowledgeGraph, Weights};

fn load(b: &Benchmark) -> (KnowledgeGraph, Indices) {
    let (g, _) = KnowledgeGraph::from_parts(&b.parts).unwrap();
    let idx = Indices::build(&g, Cutoff::Unbounded).unwrap();
    (g, idx)
}

fn mean_pr5(cache: &PathStatsCache<'_>, cfg: MeasureConfig, gt: &GroundTruthDataset) -> f64 {
    let scorer = Scorer::new(cache, cfg).unwrap();
    evaluate_ground_truth(&scorer, gt, &[5]).unwrap().mean("pr@5").unwrap()
}

#[test]
fn planted_structure_orders_measures() {
    for seed in [42u64, 1, 2] {
        let b = generate(seed);
        let (g, idx) = load(&b);
        let cache = PathStatsCache::new(&g, &idx);
        let tuned = grid_search_ground_truth(&cache, &Grid::default_grid(), &b.validation).unwrap();
        let ip = mean_pr5(&cache, tuned.best.measure, &b.test);
        let count = mean_pr5(&cache, MeasureConfig::Count, &b.test);
        let rnd = mean_pr5(&cache, MeasureConfig::Rnd { seed }, &b.test);
        assert!(ip > count && count > rnd, "seed {seed}: {ip} {count} {rnd}");
    }
}

fn ipsim_grid(weights: &[(u8, u8, u8)]) -> Grid {
    Grid {
        weights: weights
            .iter()
            .map(|&(a, b, c)| Weights::from_tenths(a, b, c).unwrap())
            .collect(),
        ns: vec![Cutoff::Unbounded],
        ks: vec![Cutoff::Unbounded],
    }
}

#[test]
fn rarity_dominant_fixture_picks_rarity() {
    // Relevance is planted purely through rare relations, so the pure rarity
    // weighting is the only one that separates it from tag noise.
    let b = generate(42);
    let (g, idx) = load(&b);
    let cache = PathStatsCache::new(&g, &idx);
    let grid = ipsim_grid(&[(0, 0, 10), (0, 10, 0), (10, 0, 0)]);
    let r = grid_search_ground_truth(&cache, &grid, &b.validation).unwrap();
    let expected = Weights::from_tenths(10, 0, 0).unwrap();
    assert!(matches!(r.best.measure, MeasureConfig::IpSim { weights, .. } if weights == expected));

    // Re-evaluating the winner reproduces its objective.
    let scorer = Scorer::new(&cache, r.best.measure).unwrap();
    let again = evaluate_ground_truth(&scorer, &b.validation, &[10]).unwrap().mean(OBJECTIVE).unwrap();
    assert_eq!(again, r.best_objective);

    // Grid order does not matter.
    let reversed = ipsim_grid(&[(10, 0, 0), (0, 10, 0), (0, 0, 10)]);
    let r2 = grid_search_ground_truth(&cache, &reversed, &b.validation).unwrap();
    assert_eq!(r2.to_tsv(), r.to_tsv());
}

#[test]
fn single_point_grid() {
    let b = generate(3);
    let (g, idx) = load(&b);
    let cache = PathStatsCache::new(&g, &idx);
    let grid = ipsim_grid(&[(3, 1, 6)]);
    let r = grid_search_ground_truth(&cache, &grid, &b.validation).unwrap();
    assert_eq!(r.table.len(), 1);
    assert_eq!(r.best, r.table[0].0);
}

#[test]
fn recommender_tuning_on_planted_interactions() {
    let b = generate(42);
    let (g, idx) = load(&b);
    let cache = PathStatsCache::new(&g, &idx);
    let ratings = b.interactions.counts_to_ratings().unwrap();
    let bundle = split_holdout(&ratings, 0.4, None, 42).unwrap();
    let grid = Grid {
        ks: vec![Cutoff::Bounded(1), Cutoff::Bounded(5), Cutoff::Unbounded],
        ..Grid::default_grid()
    };
    let count = grid_search_recommender(&cache, Family::Count, &grid, &bundle).unwrap();
    assert_eq!(count.table.len(), 3);
    let rnd = grid_search_recommender(&cache, Family::Rnd { seed: 42 }, &grid, &bundle).unwrap();
    assert!(count.best_objective > rnd.best_objective);

    let scorer = Scorer::new(&cache, count.best.measure).unwrap();
    let sims = SimilarityMatrix::compute(&scorer);
    let rec = Recommender::new(&g, &sims, &bundle.train);
    let k = count.best.k.unwrap();
    let report = evaluate_recommender(&rec, &bundle, k, &[10], Phase::Validation).unwrap();
    assert_eq!(report.mean(OBJECTIVE).unwrap(), count.best_objective);
}
