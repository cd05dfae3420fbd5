use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use toponav::eval::{
    emit_report, recall_curve, runtime_scaling_bench_with_threshold, write_records_jsonl,
    RecallReport, RetrievalDataset, RetrievalMethod,
};
use toponav::format::EmbeddingFile;
use toponav::localization::LocalizerConfig;
use toponav::map::{build_map, load_map, route_samples, save_map};
use toponav::sim::{run_batch, BatchSpec, PolicyConfig, RouteWorld, Scenario, StartSpec};
use toponav::subgoal::{PairwiseScorerStub, ScaledL2};

use crate::config::{RecallMethodKind, RunConfig};

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn map_build(cfg: &RunConfig) -> Result<()> {
    let input = cfg.map.input.as_deref().context("map build needs --input")?;
    let file = EmbeddingFile::load(input)?;
    let map = build_map(route_samples(file), cfg.map.stride)?;
    create_out(&cfg.out)?;
    save_map(&map, &cfg.out)?;
    println!(
        "map: {} nodes, dim {} -> {}",
        map.len(),
        map.dim(),
        cfg.out.display()
    );
    Ok(())
}

fn scenario(cfg: &RunConfig) -> Scenario {
    let mut world = cfg.sim.world.clone();
    if cfg.sim.bursty && world.bursty_regions.is_empty() {
        let mid = (world.node_count() - 1) / 2;
        world.bursty_regions = vec![(mid.saturating_sub(5), (mid + 4).min(world.node_count() - 1))];
    }
    let policy = match &cfg.sim.policy {
        Some(p) => p.clone(),
        None if cfg.sim.kidnapped || cfg.sim.bursty => PolicyConfig::moderate_noise(),
        None => PolicyConfig::default(),
    };
    let mut name = Vec::new();
    if cfg.sim.kidnapped {
        name.push("kidnapped");
    }
    if cfg.sim.bursty {
        name.push("bursty");
    }
    Scenario {
        name: if name.is_empty() {
            Scenario::nominal().name
        } else {
            name.join("+")
        },
        world,
        policy,
        start: if cfg.sim.kidnapped {
            StartSpec::Kidnapped
        } else {
            StartSpec::RouteStart
        },
    }
}

pub fn sim_run(cfg: &RunConfig) -> Result<()> {
    let scenario = scenario(cfg);
    let fixed_world = match &cfg.sim.map {
        Some(dir) => Some(RouteWorld::from_map(
            &load_map(dir)?,
            scenario.world.node_spacing,
        )?),
        None => None,
    };
    let spec = BatchSpec {
        scenarios: vec![scenario],
        localizers: cfg
            .selectors()
            .into_iter()
            .map(|selector| LocalizerConfig {
                selector,
                ..cfg.localizer.clone()
            })
            .collect(),
        seeds: (0..cfg.sim.episodes as u64).map(|i| cfg.seed + i).collect(),
        fixed_world,
    };
    let mut result = run_batch(&spec)?;
    let hash = cfg.hash();
    for r in &mut result.records {
        r.config_hash = Some(hash.clone());
    }

    create_out(&cfg.out)?;
    write_records_jsonl(&result.records, &cfg.out.join("episodes.jsonl"))?;
    let summary = cfg.out.join(format!("summary.{}", cfg.format.extension()));
    emit_report(result.summary.as_slice(), &summary, cfg.format)?;
    for row in &result.summary {
        println!(
            "{:<7} {:<16} episodes {:>4}  success rate {:.3}",
            row.selector, row.scenario, row.episodes, row.success_rate
        );
    }
    Ok(())
}

pub fn eval_recall(cfg: &RunConfig) -> Result<()> {
    let queries = cfg.recall.queries.as_deref().context("eval recall needs --queries")?;
    let database = cfg.recall.database.as_deref().context("eval recall needs --database")?;
    let ds = RetrievalDataset::from_files(
        EmbeddingFile::load(queries)?,
        EmbeddingFile::load(database)?,
        cfg.recall.radius,
    )?;
    let (name, recall) = match cfg.recall.method {
        RecallMethodKind::EmbeddingNn => (
            "embedding_nn",
            recall_curve(&ds, &cfg.recall.n, &RetrievalMethod::<ScaledL2>::EmbeddingNn)?,
        ),
        RecallMethodKind::PairwiseStub => {
            let stub = PairwiseScorerStub {
                per_pair_flops: cfg.recall.pair_flops,
                ..PairwiseScorerStub::default()
            };
            (
                "pairwise_stub",
                recall_curve(&ds, &cfg.recall.n, &RetrievalMethod::PairwiseStub(stub))?,
            )
        }
    };
    let report = RecallReport {
        method: name.to_string(),
        positive_radius: cfg.recall.radius,
        queries: ds.queries.len(),
        database: ds.database.len(),
        n: cfg.recall.n.clone(),
        recall,
        config_hash: Some(cfg.hash()),
    };
    create_out(&cfg.out)?;
    emit_report(
        &report,
        &cfg.out.join(format!("recall.{}", cfg.format.extension())),
        cfg.format,
    )?;
    for (n, r) in report.n.iter().zip(&report.recall) {
        println!("recall@{n} = {r:.4}");
    }
    Ok(())
}

pub fn bench_runtime(cfg: &RunConfig) -> Result<()> {
    let b = &cfg.bench;
    let mut report = runtime_scaling_bench_with_threshold(
        &b.counts,
        b.dim,
        b.flops,
        b.reps,
        cfg.pairwise_threshold,
    )?;
    report.config_hash = Some(cfg.hash());
    create_out(&cfg.out)?;
    emit_report(
        &report,
        &cfg.out.join(format!("bench.{}", cfg.format.extension())),
        cfg.format,
    )?;
    for t in [&report.embedding, &report.pairwise] {
        println!(
            "{:<14} median ns {:?}  slope {:.1} ns/candidate  R^2 {:.4}  max/min {:.2}",
            t.method, t.median_ns, t.slope_ns_per_candidate, t.r_squared, t.max_min_ratio
        );
    }
    println!("pair evaluations {:?}", report.pair_evaluations);
    Ok(())
}
