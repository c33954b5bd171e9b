//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line.
//! Run with `cargo test -p pathsim-cli --test acceptance -- --nocapture`
//! to see the lines for passing criteria too.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathsim::evaluation::{ndcg_at_n, precision_at_n, GroundTruthDataset, MetricReport};
use pathsim::fixtures::{
    couple_graph, toy_graph, toy_with_second_song, toy_with_third_item, COUPLE_TEMPLATES, TOY_TEMPLATES,
};
use pathsim::interest::{heuristics, interestingness};
use pathsim::paths::{path_type, StepDirection};
use pathsim::similarity::{count_sim, ipsim, ldsd_sim};
use pathsim::stats::{wilcoxon_signed_rank, Method};
use pathsim::synthetic::{generate, random_graph};
use pathsim::{
    enumerate_paths, explain, Cutoff, GraphParts, Indices, KnowledgeGraph, MeasureConfig, Templates, Weights,
};

const SUITE_SIZE: u64 = 500;

fn report(criterion: u32, pass: bool, detail: impl AsRef<str>) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion:>2}: {status} {}", detail.as_ref());
    assert!(pass, "criterion {criterion} failed: {}", detail.as_ref());
}

struct Case {
    parts: GraphParts,
    graph: KnowledgeGraph,
    indices: Indices,
}

fn suite() -> Vec<Case> {
    (0..SUITE_SIZE)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let parts = random_graph(&mut rng, 12, 25, 2, 4);
            let (graph, _) = KnowledgeGraph::from_parts(&parts).unwrap();
            let indices = Indices::build(&graph, Cutoff::Unbounded).unwrap();
            Case { parts, graph, indices }
        })
        .collect()
}

fn item_pairs(parts: &GraphParts) -> Vec<(&str, &str)> {
    let items = &parts.items;
    let mut out = Vec::new();
    for a in items {
        for b in items {
            if a != b {
                out.push((a.as_str(), b.as_str()));
            }
        }
    }
    out
}

/// `(entity ids, (relation, traversed forward))` of one path.
type Walk = (Vec<String>, Vec<(String, bool)>);

/// All simple paths from `from`, by exhaustive extension over the raw triples.
fn all_simple_paths(parts: &GraphParts, from: &str) -> Vec<Walk> {
    let edges: BTreeSet<(&str, &str, &str)> = parts
        .triples
        .iter()
        .map(|t| (t.source.as_str(), t.rtype.as_str(), t.target.as_str()))
        .collect();
    let mut done = Vec::new();
    let mut frontier: Vec<Walk> = vec![(vec![from.to_string()], Vec::new())];
    while let Some((nodes, steps)) = frontier.pop() {
        let last = nodes.last().unwrap().clone();
        for &(s, r, t) in &edges {
            for (here, there, forward) in [(s, t, true), (t, s, false)] {
                if here == last && !nodes.iter().any(|n| n == there) {
                    let mut n2 = nodes.clone();
                    n2.push(there.to_string());
                    let mut s2 = steps.clone();
                    s2.push((r.to_string(), forward));
                    frontier.push((n2.clone(), s2.clone()));
                    done.push((n2, s2));
                }
            }
        }
    }
    done
}

fn oracle_paths(parts: &GraphParts, a: &str, b: &str) -> BTreeSet<Walk> {
    let items: HashSet<&str> = parts.items.iter().map(String::as_str).collect();
    all_simple_paths(parts, a)
        .into_iter()
        .filter(|(nodes, _)| nodes.last().map(String::as_str) == Some(b))
        .filter(|(nodes, _)| nodes[1..nodes.len() - 1].iter().all(|n| !items.contains(n.as_str())))
        .collect()
}

fn library_paths(g: &KnowledgeGraph, a: &str, b: &str) -> BTreeSet<Walk> {
    enumerate_paths(g, a, b, Cutoff::Unbounded)
        .unwrap()
        .iter()
        .map(|p| {
            let nodes = p.entities().iter().map(|&e| g.entity(e).id.clone()).collect();
            let steps = p
                .steps()
                .iter()
                .map(|s| (g.relation_name(s.rel).to_string(), s.direction == StepDirection::Forward))
                .collect();
            (nodes, steps)
        })
        .collect()
}

fn random_weights(rng: &mut impl Rng) -> Weights {
    let a = rng.gen_range(0..=10u8);
    let b = rng.gen_range(0..=10 - a);
    Weights::from_tenths(a, b, 10 - a - b).unwrap()
}

#[test]
fn criterion_01_path_enumeration_oracle() {
    let start = Instant::now();
    let cases = suite();
    let mut pairs = 0usize;
    let mut paths = 0usize;
    let mut mismatches = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        for (a, b) in item_pairs(&c.parts) {
            let expected = oracle_paths(&c.parts, a, b);
            let got = library_paths(&c.graph, a, b);
            pairs += 1;
            paths += got.len();
            if expected != got {
                mismatches.push(format!("graph {i} {a}-{b}"));
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        mismatches.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} graphs, {pairs} ordered pairs, {paths} paths, {} mismatches, {:.1}s",
            cases.len(),
            mismatches.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_interestingness_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shortness_only = Weights::new(0.0, 0.0, 1.0).unwrap();
    let mut checked = 0usize;
    let mut out_of_range = 0usize;
    let mut worst_shortness_gap = 0.0f64;
    for c in suite() {
        for (a, b) in item_pairs(&c.parts) {
            for p in enumerate_paths(&c.graph, a, b, Cutoff::Unbounded).unwrap() {
                let h = heuristics(&c.graph, &p, &c.indices.types, &c.indices.centrality).unwrap();
                let w = random_weights(&mut rng);
                let i = interestingness(&c.graph, &p, &w, &c.indices.types, &c.indices.centrality).unwrap();
                let in_range = |x: f64| (0.0..=1.0).contains(&x);
                if ![h.rarity, h.unpopularity, h.shortness, i].into_iter().all(in_range) {
                    out_of_range += 1;
                }
                let s =
                    interestingness(&c.graph, &p, &shortness_only, &c.indices.types, &c.indices.centrality).unwrap();
                worst_shortness_gap = worst_shortness_gap.max((s - 1.0 / p.len() as f64).abs());
                checked += 1;
            }
        }
    }
    report(
        2,
        checked > 0 && out_of_range == 0 && worst_shortness_gap <= 1e-12,
        format!("{checked} paths, {out_of_range} out of [0,1], max |i - shortness| = {worst_shortness_gap:e}"),
    );
}

#[test]
fn criterion_03_toy_closed_form() {
    let (g, _) = toy_graph();
    let idx = Indices::build(&g, Cutoff::Unbounded).unwrap();
    let w = Weights::new(0.0, 0.0, 1.0).unwrap();
    let full = ipsim(&g, &idx, "A", "B", &w, Cutoff::Unbounded).unwrap();
    let one = ipsim(&g, &idx, "A", "B", &w, Cutoff::Bounded(1)).unwrap();
    let count = count_sim(&g, "A", "B").unwrap();
    report(
        3,
        (full - 2.0).abs() <= 1e-9 && (one - 1.0).abs() <= 1e-9 && count == 3,
        format!("ipsim(n=inf)={full} ipsim(n=1)={one} count={count}"),
    );
}

#[test]
fn criterion_04_symmetry_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ns = [1, 2, 3, 4, 6].map(Cutoff::Bounded);
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for (i, c) in suite().iter().enumerate() {
        let w = random_weights(&mut rng);
        for (a, b) in item_pairs(&c.parts) {
            let mut prev = 0.0;
            for n in ns.iter().copied().chain([Cutoff::Unbounded]) {
                let ab = ipsim(&c.graph, &c.indices, a, b, &w, n).unwrap();
                let ba = ipsim(&c.graph, &c.indices, b, a, &w, n).unwrap();
                if (ab - ba).abs() > 1e-9 {
                    failures.push(format!("graph {i} {a}-{b} asymmetric at n={n}"));
                }
                if ab + 1e-12 < prev {
                    failures.push(format!("graph {i} {a}-{b} decreases at n={n}"));
                }
                prev = ab;
            }
            let count = count_sim(&c.graph, a, b).unwrap() as f64;
            if prev > count + 1e-9 {
                failures.push(format!("graph {i} {a}-{b} ipsim {prev} > count {count}"));
            }
            checked += 1;
        }
    }
    report(
        4,
        failures.is_empty(),
        format!("{checked} ordered pairs, {} violations {:?}", failures.len(), failures.first()),
    );
}

#[test]
fn criterion_05_ldsd() {
    let (g, _) = toy_graph();
    let toy = ldsd_sim(&g, "A", "B").unwrap();
    let mut asymmetric = 0usize;
    let mut checked = 0usize;
    for c in suite() {
        for (a, b) in item_pairs(&c.parts) {
            let ab = ldsd_sim(&c.graph, a, b).unwrap();
            let ba = ldsd_sim(&c.graph, b, a).unwrap();
            if (ab - ba).abs() > 1e-12 || !(0.0..1.0).contains(&ab) {
                asymmetric += 1;
            }
            checked += 1;
        }
    }
    report(
        5,
        (toy - 0.75).abs() <= 1e-9 && asymmetric == 0,
        format!("toy ldsd={toy}, {checked} ordered pairs, {asymmetric} asymmetric or out of range"),
    );
}

#[test]
fn criterion_06_metric_fixtures() {
    let relevant: HashSet<&str> = ["r1", "r2"].into_iter().collect();
    let ranking = ["r1", "x", "r2"];
    let ndcg = ndcg_at_n(&ranking, &relevant, 3);
    // DCG = 1 + 1/log2(4), IDCG = 1 + 1/log2(3).
    let oracle = (1.0 + 0.5) / (1.0 + 1.0 / 3f64.log2());
    let pr = precision_at_n(&ranking, &relevant, 3);
    let perfect = ["r1", "r2", "x"];
    let perfect_ndcg = ndcg_at_n(&perfect, &relevant, 3);
    let perfect_pr = precision_at_n(&["r1", "r2"], &relevant, 2);
    report(
        6,
        (ndcg - 0.91973).abs() <= 1e-4
            && (ndcg - oracle).abs() <= 1e-12
            && pr == 2.0 / 3.0
            && perfect_ndcg == 1.0
            && perfect_pr == 1.0,
        format!("ndcg@3={ndcg:.6} pr@3={pr:.6} perfect ndcg={perfect_ndcg} perfect pr={perfect_pr}"),
    );
}

#[test]
fn criterion_07_wilcoxon() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
    // All 8 sign patterns equally likely; W = 0 occurs once per tail.
    let oracle = 2.0 / 8.0;
    let same = wilcoxon_signed_rank(&[0.3, 0.5, 0.9], &[0.3, 0.5, 0.9]).unwrap();
    report(
        7,
        (r.p_value - 0.25).abs() <= 1e-12
            && (r.p_value - oracle).abs() <= 1e-12
            && r.method == Method::Exact
            && same.p_value == 1.0
            && same.degenerate(),
        format!(
            "p([1,2,3])={} ({}), identical p={} ({})",
            r.p_value,
            r.method.as_str(),
            same.p_value,
            same.method.as_str()
        ),
    );
}

#[test]
fn criterion_08_explanations() {
    let weights = Weights::new(0.3, 0.1, 0.6).unwrap();
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut check = |g: &KnowledgeGraph, templates: &Templates, items: &[String], n: Cutoff| {
        let idx = Indices::build(g, Cutoff::Unbounded).unwrap();
        let cfg = MeasureConfig::IpSim { weights, n };
        for a in items {
            for b in items {
                if a == b {
                    continue;
                }
                let ex = explain(g, &idx, a, b, &cfg, templates).unwrap();
                let total: f64 = ex.iter().map(|e| e.score).sum();
                let reference = ipsim(g, &idx, a, b, &weights, n).unwrap();
                worst = worst.max((total - reference).abs());
                pairs += 1;
            }
        }
    };

    let toy = Templates::from_str(TOY_TEMPLATES).unwrap();
    let couple = Templates::from_str(COUPLE_TEMPLATES).unwrap();
    let none = Templates::from_str("").unwrap();
    for (g, _) in [toy_graph(), toy_with_second_song(), toy_with_third_item()] {
        let items = g.items().iter().map(|&e| g.entity(e).id.clone()).collect::<Vec<_>>();
        check(&g, &toy, &items, Cutoff::Unbounded);
        check(&g, &toy, &items, Cutoff::Bounded(1));
    }
    let (cg, _) = couple_graph();
    let t1_items = cg.items().iter().map(|&e| cg.entity(e).id.clone()).collect::<Vec<_>>();
    check(&cg, &couple, &t1_items, Cutoff::Unbounded);
    let bench = generate(42);
    let (bg, _) = KnowledgeGraph::from_parts(&bench.parts).unwrap();
    check(&bg, &none, &bench.parts.items[..8], Cutoff::Bounded(3));
    for c in suite().into_iter().take(50) {
        check(&c.graph, &none, &c.parts.items, Cutoff::Unbounded);
    }

    let idx = Indices::build(&cg, Cutoff::Unbounded).unwrap();
    let cfg = MeasureConfig::IpSim { weights, n: Cutoff::Unbounded };
    let rows = explain(&cg, &idx, "tammy", "george", &cfg, &couple).unwrap();
    let relations: Vec<String> = rows
        .iter()
        .map(|e| {
            let key = path_type(&cg, &e.path).to_string();
            key.split('>').nth(1).unwrap_or_default().to_string()
        })
        .collect();
    let expected = ["married_to", "parent_of", "wrote", "genre", "based_in", "artist_type"];
    report(
        8,
        worst <= 1e-9 && relations == expected && rows.iter().all(|e| !e.fallback),
        format!("{pairs} pairs, max |sum - ipsim| = {worst:e}, order {relations:?}"),
    );
}

fn pathsim(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_pathsim")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "pathsim {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &FsPath) -> &str {
    p.to_str().unwrap()
}

/// Writes the synthetic benchmark and ingests it, splitting the interactions.
fn prepare_benchmark(dir: &FsPath, seed: u64) -> PathBuf {
    let data = dir.join("data");
    generate(seed).write_dir(&data).unwrap();
    let graph = dir.join("graph.bin");
    pathsim(&[
        "ingest",
        "--entities",
        s(&data.join("entities.tsv")),
        "--triples",
        s(&data.join("triples.tsv")),
        "--items",
        s(&data.join("items.txt")),
        "--interactions",
        s(&data.join("interactions.tsv")),
        "--split-out",
        s(&dir.join("split")),
        "--out",
        s(&graph),
    ]);
    graph
}

fn read_report(path: &FsPath) -> MetricReport {
    let text = fs::read_to_string(path).unwrap();
    MetricReport::from_tsv(text.as_bytes(), &path.display().to_string()).unwrap()
}

#[test]
fn criterion_09_synthetic_benchmark() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let graph = prepare_benchmark(dir, 42);
    let data = dir.join("data");
    let test_gt = data.join("gt_test.tsv");

    let tuned = pathsim(&[
        "tune", "--graph", s(&graph), "--protocol", "gt", "--dataset",
        s(&data.join("gt_validation.tsv")), "--out", s(&dir.join("tune.tsv")),
    ]);
    let best = tuned.lines().find(|l| l.starts_with("best\t")).unwrap();
    let field = |name: &str| {
        best.split(|c: char| c == '\t' || c == ' ')
            .find_map(|t| t.strip_prefix(name))
            .unwrap()
            .to_string()
    };
    let (w, n) = (field("w="), field("n="));

    let eval = |label: &str, extra: &[&str]| {
        let out = dir.join(format!("{label}.tsv"));
        let mut args = vec!["eval-gt", "--graph", s(&graph), "--dataset", s(&test_gt), "--out", s(&out)];
        args.extend_from_slice(extra);
        pathsim(&args);
        read_report(&out).column("pr@5").unwrap()
    };
    let ip = eval("ipsim", &["--measure", "ipsim", "--w", &w, "--n", &n]);
    let count = eval("count", &["--measure", "count"]);
    let rnd = eval("rnd", &["--measure", "rnd"]);

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m_ip, m_count, m_rnd) = (mean(&ip), mean(&count), mean(&rnd));
    let sd = (rnd.iter().map(|x| (x - m_rnd).powi(2)).sum::<f64>() / (rnd.len() - 1) as f64).sqrt();
    let se = sd / (rnd.len() as f64).sqrt();

    let dataset = GroundTruthDataset::parse(fs::read(&test_gt).unwrap().as_slice(), "gt_test.tsv").unwrap();
    let candidates = dataset.universe().len() - 1;
    let baseline = mean(
        &dataset
            .records
            .iter()
            .map(|(_, rel)| rel.len() as f64 / candidates as f64)
            .collect::<Vec<_>>(),
    );
    let elapsed = start.elapsed();
    report(
        9,
        m_ip > m_count
            && m_count > m_rnd
            && (m_rnd - baseline).abs() <= 3.0 * se
            && elapsed < Duration::from_secs(300),
        format!(
            "pr@5 ipsim(w={w} n={n})={m_ip:.4} count={m_count:.4} rnd={m_rnd:.4} \
             baseline={baseline:.4} se={se:.4} queries={} {:.1}s",
            rnd.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_10_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let graph = prepare_benchmark(dir, 7);
    let data = dir.join("data");
    let split = dir.join("split");
    let (g, gt, sp) = (
        s(&graph).to_string(),
        s(&data.join("gt_test.tsv")).to_string(),
        s(&split).to_string(),
    );
    let gt_val = s(&data.join("gt_validation.tsv")).to_string();

    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("eval-gt", vec!["eval-gt", "--graph", &g, "--dataset", &gt]),
        ("eval-gt-rnd", vec!["eval-gt", "--graph", &g, "--dataset", &gt, "--measure", "rnd"]),
        ("eval-rec", vec!["eval-rec", "--graph", &g, "--split", &sp, "--k", "10"]),
        ("tune-gt", vec!["tune", "--graph", &g, "--protocol", "gt", "--dataset", &gt_val]),
        ("tune-rec", vec!["tune", "--graph", &g, "--protocol", "rec", "--split", &sp, "--measure", "count"]),
    ];
    let mut outputs: BTreeMap<&str, Vec<Vec<u8>>> = BTreeMap::new();
    for threads in ["1", "4", "4", "1"] {
        for (label, args) in &commands {
            let out = dir.join(format!("{label}-{threads}.tsv"));
            let mut full = args.clone();
            full.extend_from_slice(&["--threads", threads, "--seed", "42", "--out", s(&out)]);
            pathsim(&full);
            outputs.entry(label).or_default().push(fs::read(&out).unwrap());
        }
    }
    let differing: Vec<&str> = outputs
        .iter()
        .filter(|(_, runs)| runs.windows(2).any(|w| w[0] != w[1]))
        .map(|(label, _)| *label)
        .collect();
    let sizes: Vec<String> = outputs.iter().map(|(l, r)| format!("{l}={}B", r[0].len())).collect();
    report(
        10,
        differing.is_empty() && outputs.values().all(|r| !r[0].is_empty()),
        format!("4 runs each at --threads 1/4, reports {sizes:?}, differing {differing:?}"),
    );
}
