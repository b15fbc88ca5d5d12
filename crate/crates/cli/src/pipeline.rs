//! The `pipeline` subcommand: every stage in order, driven by a run config.

use std::path::Path;

use logsentinel_core::dataset;
use logsentinel_core::harness::{self, AutomlConfig, HarnessConfig, ReportFormat};
use logsentinel_core::log_ingest::{self, IngestOptions};
use logsentinel_core::models::ModelSpec;
use logsentinel_core::projections::{self, EmbeddingKind, TsneConfig};
use logsentinel_core::stats::{self, SelectionConfig};

use crate::config::RunConfig;
use crate::{embed, emit, records_jsonl, report_json, synth_text, write_file, CliError, PipelineArgs, StageExt};

fn apply_overrides(cfg: &mut RunConfig, a: &PipelineArgs) {
    if let Some(d) = &a.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.budget {
        cfg.budget_seconds = v;
    }
    if let Some(v) = a.max_candidates {
        cfg.max_candidates = v;
    }
    cfg.yates |= a.yates;
    cfg.strict_ingest |= a.strict_ingest;
    cfg.stratify |= a.stratify;
}

fn kind_name(kind: EmbeddingKind) -> &'static str {
    match kind {
        EmbeddingKind::Lda => "lda",
        EmbeddingKind::Pca => "pca",
        EmbeddingKind::Tsne => "tsne",
    }
}

pub(crate) fn run(a: PipelineArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&a.config)?;
    apply_overrides(&mut cfg, &a);
    cfg.validate()?;
    let base = a.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out)
        .map_err(|e| logsentinel_core::Error::io(&out, e))
        .stage("pipeline")?;

    let queries = dataset::load_queries(&cfg.queries).stage("build")?;
    let opts = IngestOptions {
        strict: cfg.strict_ingest,
        ..IngestOptions::default()
    };
    let (records, st) = match &cfg.log {
        Some(log) => log_ingest::ingest_file(log, &opts).stage("ingest")?,
        None => {
            let text = synth_text(&queries, cfg.synth_seed);
            write_file(&out.join("logs.jsonl"), &text, "synth")?;
            log_ingest::ingest_lines(text.lines(), &opts).stage("ingest")?
        }
    };
    write_file(&out.join("records.jsonl"), &records_jsonl(&records)?, "ingest")?;
    log::info!("ingest: {} query records of {} lines", st.query_lines, st.total_lines);

    let (ds, join, _) = dataset::build_dataset(&records, &queries).stage("build")?;
    log::info!("build: {} rows joined", join.matched);
    dataset::write_csv(&ds, &out.join("dataset.csv")).stage("build")?;

    let sel_cfg = SelectionConfig {
        alpha: cfg.alpha,
        yates: cfg.yates,
        mwu_mode: cfg.mwu_mode,
    };
    let (selection, reduced) = stats::select_features(&ds, &sel_cfg).stage("select")?;
    write_file(
        &out.join("selection.md"),
        &stats::selection_markdown(&selection),
        "select",
    )?;
    dataset::write_csv(&reduced, &out.join("selected.csv")).stage("select")?;

    let tsne = TsneConfig {
        perplexity: cfg.tsne.perplexity,
        iterations: cfg.tsne.iterations,
        seed: cfg.tsne.seed,
        ..TsneConfig::default()
    };
    for &kind in &cfg.projections {
        let name = kind_name(kind);
        let e = embed(&reduced, kind, &tsne).stage("project")?;
        write_file(&out.join(format!("projection_{name}.csv")), &e.to_csv(), "project")?;
        if cfg.svg {
            projections::write_scatter_svg(&e, &out.join(format!("projection_{name}.svg")), cfg.tsne.seed)
                .stage("project")?;
        }
    }

    let specs: Vec<ModelSpec> = cfg.families.iter().map(|&f| ModelSpec::default_for(f)).collect();
    let hcfg = HarnessConfig {
        seeds: cfg.seeds.seeds(),
        k: cfg.k,
        ratios: cfg.ratios,
        stratified: cfg.stratify,
    };
    let mut r = harness::run_seeds(&specs, &reduced, &hcfg).stage("evaluate")?;
    if cfg.budget_seconds > 0.0 {
        let acfg = AutomlConfig {
            budget_seconds: cfg.budget_seconds,
            max_candidates: cfg.max_candidates,
            k: cfg.k,
            seed: cfg.search_seed,
        };
        r.automl = Some(harness::automl_search(&reduced, &acfg).stage("automl")?);
    }
    r.config = cfg.echo(&base);
    let table = harness::report(&r, ReportFormat::Markdown);
    write_file(&out.join("evaluation.md"), &table, "report")?;
    write_file(&out.join("evaluation.json"), &report_json(&r, "report")?, "report")?;
    emit(None, &table, "report")
}
