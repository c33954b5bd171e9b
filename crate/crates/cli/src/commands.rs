use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use pathsim::evaluation::{evaluate_ground_truth, evaluate_recommender, GroundTruthDataset, MetricReport};
use pathsim::explain::{explain, Templates};
use pathsim::recommender::{
    split_holdout, InteractionMatrix, Recommender, Role, SimilarityMatrix, SplitBundle,
};
use pathsim::similarity::{count_sim, ipsim, ldsd_sim, random_pair_score, topk_similar, PathStatsCache, Scorer};
use pathsim::stats::wilcoxon_signed_rank;
use pathsim::tsv::{fmt_score, read_records};
use pathsim::tuning::{grid_search_ground_truth, grid_search_recommender, Family, Grid, Protocol};
use pathsim::{Cutoff, Indices, KnowledgeGraph, MeasureConfig};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{data_err, emit, read_bytes, read_text, Manifest};

fn load_graph(path: &Path, manifest: &mut Manifest) -> CliResult<KnowledgeGraph> {
    manifest.input(path);
    let bytes = read_bytes(path)?;
    let (graph, stats) = KnowledgeGraph::from_cache_bytes(&bytes).map_err(|e| data_err(path, e))?;
    info!("loaded {}: {stats}", path.display());
    Ok(graph)
}

/// Reads the index named by `--index` when it matches the graph, else
/// builds one.
fn load_indices(graph: &KnowledgeGraph, args: &GraphArgs, manifest: &mut Manifest) -> CliResult<Indices> {
    let hash = graph.content_hash();
    if let Some(path) = &args.index {
        manifest.input(path);
        let text = read_text(path)?;
        let recorded = text
            .lines()
            .find_map(|l| l.strip_prefix("graph_sha256\t"))
            .map(str::trim);
        if recorded.is_some_and(|h| h != hash) {
            warn!("{} is stale for this graph or max_len, rebuilding", path.display());
            return build_indices(graph, args);
        }
        let cached = Indices::read_tsv(graph, text.as_bytes(), &path.display().to_string())
            .map_err(|e| data_err(path, e))?;
        let wanted = args.max_len.unwrap_or(cached.max_len());
        if cached.matches(&hash, wanted) {
            return Ok(cached);
        }
        warn!("{} is stale for this graph or max_len, rebuilding", path.display());
    }
    build_indices(graph, args)
}

fn build_indices(graph: &KnowledgeGraph, args: &GraphArgs) -> CliResult<Indices> {
    let max_len = args.max_len.unwrap_or(Cutoff::Unbounded);
    info!("building index (max_len={max_len})");
    Ok(Indices::build(graph, max_len)?)
}

fn read_id_list(path: &Path) -> CliResult<Vec<String>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    let recs = read_records(text.as_bytes(), &name).map_err(|e| data_err(path, e))?;
    recs.iter()
        .map(|r| Ok(r.expect_fields(&name, 1)?[0].clone()))
        .collect()
}

pub fn ingest(a: &IngestArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("ingest", seed);
    for p in [&a.entities, &a.triples, &a.items] {
        manifest.input(p);
    }
    let (graph, stats) = KnowledgeGraph::load_files(&a.entities, &a.triples, &a.items)?;
    manifest.write_output(&a.out, &graph.to_cache_bytes())?;
    println!("{stats}");

    let (Some(path), Some(dir)) = (&a.interactions, &a.split_out) else {
        return Ok(());
    };
    manifest.input(path);
    let raw = InteractionMatrix::read_file(path, a.role)?;
    let filtered = raw
        .filter_min_counts(a.min_user_items, a.min_item_users)
        .restrict_to_items(&graph);
    let convert = a.convert.unwrap_or(if a.role == Role::RawCounts {
        Convert::Ratings
    } else {
        Convert::None
    });
    let prepared = match convert {
        Convert::None => filtered,
        Convert::Ratings => filtered.counts_to_ratings()?,
        Convert::Binary => filtered.to_binary(),
    };
    let bundle = split_holdout(&prepared, a.holdout, a.min_rating, seed)?;
    bundle.write_dir(dir).map_err(|e| data_err(dir, e))?;
    let files: Vec<(std::path::PathBuf, Vec<u8>)> = ["train.tsv", "validation.tsv", "test.tsv", "split_manifest.tsv"]
        .iter()
        .map(|f| {
            let p = dir.join(f);
            read_bytes(&p).map(|b| (p, b))
        })
        .collect::<CliResult<_>>()?;
    let outputs: Vec<(&Path, &[u8])> = files.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect();
    manifest.write_outputs(&dir.join("split"), &outputs)?;
    println!(
        "users={} train={} validation={} test={}",
        prepared.user_count(),
        bundle.train.len(),
        bundle.validation.len(),
        bundle.test.len()
    );
    Ok(())
}

pub fn index(a: &IndexArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("index", seed);
    let graph = load_graph(&a.graph, &mut manifest)?;
    let indices = Indices::build(&graph, a.max_len)?;
    let mut buf = Vec::new();
    indices.write_tsv(&mut buf)?;
    manifest.write_output(&a.out, &buf)?;
    println!(
        "types={} max_freq={} max_len={}",
        indices.types.counts().len(),
        indices.types.max_freq(),
        indices.max_len()
    );
    Ok(())
}

pub fn sim(a: &SimArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("sim", seed);
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let (i1, i2) = (a.seed_item.as_str(), a.target_item.as_str());
    let score = match a.measure.config(seed) {
        MeasureConfig::IpSim { weights, n } => {
            let indices = load_indices(&graph, &a.graph, &mut manifest)?;
            ipsim(&graph, &indices, i1, i2, &weights, n)?
        }
        MeasureConfig::Count => count_sim(&graph, i1, i2)? as f64,
        MeasureConfig::Ldsd => ldsd_sim(&graph, i1, i2)?,
        MeasureConfig::Rnd { seed } => {
            graph.item(i1)?;
            graph.item(i2)?;
            random_pair_score(seed, i1, i2)
        }
    };
    println!("{}", fmt_score(score));
    Ok(())
}

pub fn topk(a: &TopkArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("topk", seed);
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let indices = load_indices(&graph, &a.graph, &mut manifest)?;
    let cache = PathStatsCache::new(&graph, &indices);
    let scorer = Scorer::new(&cache, a.measure.config(seed))?;
    let seed_item = graph.item(&a.seed_item)?;
    let candidates = match &a.candidates {
        Some(path) => {
            manifest.input(path);
            read_id_list(path)?
                .iter()
                .map(|id| graph.item(id))
                .collect::<pathsim::Result<Vec<_>>>()?
        }
        None => graph.items().iter().copied().filter(|&i| i != seed_item).collect(),
    };
    let ranked = topk_similar(&scorer, seed_item, a.k, &candidates)?;
    let text: String = ranked
        .iter()
        .map(|(e, s)| format!("{}\t{}\n", graph.entity(*e).id, fmt_score(*s)))
        .collect();
    emit(&manifest, a.out.as_deref(), &text)
}

pub fn explain_cmd(a: &ExplainArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("explain", seed);
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let indices = load_indices(&graph, &a.graph, &mut manifest)?;
    manifest.input(&a.templates);
    let text = read_text(&a.templates)?;
    let templates = Templates::parse(text.as_bytes(), &a.templates.display().to_string())
        .map_err(|e| data_err(&a.templates, e))?;
    let cfg = a.measure.config(seed);
    let explanations = explain(&graph, &indices, &a.seed_item, &a.target_item, &cfg, &templates)?;
    let out: String = explanations
        .iter()
        .map(|e| format!("{}\t{}\n", fmt_score(e.score), e.text))
        .collect();
    emit(&manifest, a.out.as_deref(), &out)
}

fn read_dataset(path: &Path, manifest: &mut Manifest) -> CliResult<GroundTruthDataset> {
    manifest.input(path);
    let text = read_text(path)?;
    GroundTruthDataset::parse(text.as_bytes(), &path.display().to_string()).map_err(|e| data_err(path, e))
}

fn read_split(dir: &Path, manifest: &mut Manifest) -> CliResult<SplitBundle> {
    for f in ["train.tsv", "validation.tsv", "test.tsv", "split_manifest.tsv"] {
        manifest.input(&dir.join(f));
    }
    SplitBundle::read_dir(dir).map_err(|e| data_err(dir, e))
}

fn emit_report(manifest: &Manifest, out: Option<&Path>, report: &MetricReport, label: &str) -> CliResult<()> {
    let summary = report.summary(label);
    match out {
        Some(path) => {
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".summary.txt");
            let summary_path = path.with_file_name(name);
            let tsv = report.to_tsv();
            manifest.write_outputs(
                path,
                &[(path, tsv.as_bytes()), (&summary_path, summary.as_bytes())],
            )?;
            print!("{summary}");
            Ok(())
        }
        None => {
            eprint!("{summary}");
            emit(manifest, None, &report.to_tsv())
        }
    }
}

pub fn eval_gt(a: &EvalGtArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("eval-gt", seed);
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let indices = load_indices(&graph, &a.graph, &mut manifest)?;
    let dataset = read_dataset(&a.dataset, &mut manifest)?;
    let cache = PathStatsCache::new(&graph, &indices);
    let cfg = a.measure.config(seed);
    let scorer = Scorer::new(&cache, cfg)?;
    info!("evaluating {cfg} on {} queries", dataset.records.len());
    let report = evaluate_ground_truth(&scorer, &dataset, &a.cutoffs)?;
    emit_report(&manifest, a.out.as_deref(), &report, &cfg.to_string())
}

pub fn eval_rec(a: &EvalRecArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("eval-rec", seed);
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let indices = load_indices(&graph, &a.graph, &mut manifest)?;
    let bundle = read_split(&a.split, &mut manifest)?;
    let cache = PathStatsCache::new(&graph, &indices);
    let cfg = a.measure.config(seed);
    let scorer = Scorer::new(&cache, cfg)?;
    info!("computing item-item similarities for {cfg}");
    let sims = SimilarityMatrix::compute(&scorer);
    let rec = Recommender::new(&graph, &sims, &bundle.train);
    let report = evaluate_recommender(&rec, &bundle, a.k, &a.cutoffs, a.phase)?;
    emit_report(&manifest, a.out.as_deref(), &report, &format!("{cfg} k={}", a.k))
}

pub fn tune(a: &TuneArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("tune", seed);
    if a.grid != "default" {
        return Err(CliError::Usage(format!("unknown grid `{}` (only `default`)", a.grid)));
    }
    let family = match a.measure {
        MeasureKind::Ipsim => Family::IpSim,
        MeasureKind::Count => Family::Count,
        MeasureKind::Ldsd => Family::Ldsd,
        MeasureKind::Rnd => Family::Rnd { seed },
    };
    let graph = load_graph(&a.graph.graph, &mut manifest)?;
    let indices = load_indices(&graph, &a.graph, &mut manifest)?;
    let mut grid = Grid::default_grid();
    let built = indices.max_len();
    if grid.ns.iter().any(|&n| n > built) {
        warn!("dropping grid values of n above the index max_len={built}");
        grid.ns.retain(|&n| n <= built);
    }
    let cache = PathStatsCache::new(&graph, &indices);
    let result = match a.protocol {
        Protocol::GroundTruth => {
            if family != Family::IpSim {
                return Err(CliError::Usage(
                    "the gt protocol tunes ipsim only; other measures have no parameters there".into(),
                ));
            }
            let path = a
                .dataset
                .as_ref()
                .ok_or_else(|| CliError::Usage("--protocol gt needs --dataset".into()))?;
            let dataset = read_dataset(path, &mut manifest)?;
            grid_search_ground_truth(&cache, &grid, &dataset)?
        }
        Protocol::Recommender => {
            let dir = a
                .split
                .as_ref()
                .ok_or_else(|| CliError::Usage("--protocol rec needs --split".into()))?;
            let bundle = read_split(dir, &mut manifest)?;
            grid_search_recommender(&cache, family, &grid, &bundle)?
        }
    };
    println!("best\t{}\t{}", result.best, fmt_score(result.best_objective));
    match &a.out {
        Some(path) => manifest.write_output(path, result.to_tsv().as_bytes()),
        None => emit(&manifest, None, &result.to_tsv()),
    }
}

pub fn significance(a: &SignificanceArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("significance", seed);
    let read = |path: &Path, manifest: &mut Manifest| -> CliResult<MetricReport> {
        manifest.input(path);
        let text = read_text(path)?;
        MetricReport::from_tsv(text.as_bytes(), &path.display().to_string()).map_err(|e| data_err(path, e))
    };
    let ra = read(&a.a, &mut manifest)?;
    let rb = read(&a.b, &mut manifest)?;
    let col_a = ra.column(&a.metric)?;
    let col_b = rb.column(&a.metric)?;
    let by_query: BTreeMap<&str, f64> = rb.rows.iter().map(|r| r.0.as_str()).zip(col_b).collect();
    if by_query.len() != ra.rows.len() {
        return Err(CliError::Data("the two reports cover different queries".into()));
    }
    let mut xs = Vec::with_capacity(col_a.len());
    let mut ys = Vec::with_capacity(col_a.len());
    for (row, x) in ra.rows.iter().zip(col_a) {
        let y = by_query
            .get(row.0.as_str())
            .ok_or_else(|| CliError::Data(format!("query `{}` missing from {}", row.0, a.b.display())))?;
        xs.push(x);
        ys.push(*y);
    }
    let r = wilcoxon_signed_rank(&xs, &ys)?;
    println!("metric\tqueries\tnonzero\tw\tp\tmethod");
    println!(
        "{}\t{}\t{}\t{}\t{:.6e}\t{}",
        a.metric,
        xs.len(),
        r.n,
        r.statistic,
        r.p_value,
        r.method.as_str()
    );
    Ok(())
}
