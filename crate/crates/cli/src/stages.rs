use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crowdsense_core::detect::{read_specials_csv, write_specials_csv, SpecialDaySet};
use crowdsense_core::entropy::{read_traces_csv, write_traces_csv};
use crowdsense_core::ingest::{
    infer_period, load_posts, local_date_minute, write_posts_csv, write_posts_jsonl, FieldMap,
    LoadedPosts, Period, PostFormat,
};
use crowdsense_core::pipeline::{self as pl, PipelineConfig, PipelineError, Result};
use crowdsense_core::study::{self, OptionsConfig};
use crowdsense_core::symbolize::{read_sequences_csv, write_sequences_csv, CellId, Symbolized};
use crowdsense_core::synthgen::{self, Scenario};

/// Writes the summary JSON beside `out`, the resolved config into the
/// output directory, and one line to stderr.
fn finish(
    stage: &str,
    out: &Path,
    cfg: Option<&PipelineConfig>,
    line: String,
    details: Value,
) -> Result<()> {
    let mut summary = json!({ "stage": stage, "output": out.display().to_string() });
    if let (Value::Object(s), Value::Object(d)) = (&mut summary, details) {
        s.extend(d);
    }
    if let Some(cfg) = cfg {
        summary["config"] = serde_json::to_value(cfg)?;
        let dir = out
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        pl::write_json(&dir.join("config.json"), cfg)?;
    }
    pl::write_json(&pl::summary_path(out), &summary)?;
    eprintln!("{stage}: {line}");
    Ok(())
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found", path.display()),
        )))
    }
}

pub enum ScenarioSource {
    Preset(String),
    File(PathBuf),
}

pub fn load_scenario(source: &ScenarioSource, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = match source {
        ScenarioSource::Preset(name) => match name.as_str() {
            "nyc-like" => Scenario::nyc_like(seed.unwrap_or(42)),
            "new-york-calendar" => Scenario::new_york_calendar(seed.unwrap_or(42)),
            other => return Err(PipelineError::Config(format!("unknown preset {other:?}"))),
        },
        ScenarioSource::File(path) => {
            require(path)?;
            pl::read_json(path)?
        }
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    Ok(sc)
}

pub fn synth(scenario: &Scenario, out: &Path, labels: &Path) -> Result<()> {
    let (stream, specials) = synthgen::generate(scenario)?;
    let w = pl::create(out)?;
    let n = match PostFormat::from_path(out) {
        PostFormat::Csv => write_posts_csv(w, stream)?,
        PostFormat::Jsonl => write_posts_jsonl(w, stream)?,
    };
    let mut lw = pl::create(labels)?;
    write_specials_csv(&mut lw, &specials)?;
    lw.flush()?;
    let dir = out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    pl::write_json(&dir.join("scenario.json"), scenario)?;
    finish(
        "synth",
        out,
        None,
        format!(
            "{n} posts over {} days, {} labelled days",
            scenario.days,
            specials.len()
        ),
        json!({
            "posts": n,
            "days": scenario.days,
            "start_date": scenario.start_date,
            "end_date": scenario.end_date(),
            "special_days": specials.len(),
            "labels": labels.display().to_string(),
        }),
    )
}

fn load(input: &Path, fields: &FieldMap) -> Result<LoadedPosts> {
    require(input)?;
    Ok(load_posts(input, PostFormat::from_path(input), fields)?)
}

fn period_for(loaded: &LoadedPosts, cfg: &PipelineConfig) -> Result<Period> {
    match cfg.period {
        Some(p) => Ok(p),
        None => infer_period(&loaded.posts, &cfg.region, cfg.utc_offset_min)
            .ok_or_else(|| PipelineError::Degenerate("no posts inside the region".into())),
    }
}

pub fn ingest(input: &Path, out: &Path, fields: &FieldMap, cfg: &PipelineConfig) -> Result<()> {
    let loaded = load(input, fields)?;
    let period = period_for(&loaded, cfg)?;
    let stats = loaded.stats;
    let total = loaded.posts.len();
    let kept: Vec<_> = loaded
        .posts
        .into_iter()
        .filter(|p| {
            cfg.region.contains(p.loc)
                && period.contains(local_date_minute(p.ts, cfg.utc_offset_min).0)
        })
        .collect();
    let n = kept.len();
    write_posts_csv(pl::create(out)?, kept)?;
    finish(
        "ingest",
        out,
        Some(cfg),
        format!(
            "{n} of {total} parsed posts kept ({} rows skipped)",
            stats.skipped
        ),
        json!({
            "load": stats,
            "parsed": total,
            "retained": n,
            "dropped": total - n,
            "period": period,
        }),
    )
}

pub fn represent(input: &Path, out: &Path, fields: &FieldMap, cfg: &PipelineConfig) -> Result<()> {
    let loaded = load(input, fields)?;
    let period = period_for(&loaded, cfg)?;
    let load_stats = loaded.stats;
    let buckets = pl::bucket_posts(loaded.posts, period, cfg)?;
    let bucket_stats = buckets.stats;
    let (reps, stats) = pl::represent(&buckets, &period, cfg);
    drop(buckets);
    if stats.ok == 0 {
        return Err(PipelineError::Degenerate(
            "no slot produced representatives".into(),
        ));
    }
    let mut w = pl::create(out)?;
    pl::write_reps_csv(&mut w, &reps)?;
    w.flush()?;
    finish(
        "represent",
        out,
        Some(cfg),
        format!(
            "{} slots over {} days: {} ok, {} empty, {} degenerate",
            stats.slots,
            period.num_days(),
            stats.ok,
            stats.empty,
            stats.degenerate
        ),
        json!({ "load": load_stats, "buckets": bucket_stats, "slots": stats, "period": period }),
    )
}

fn missing_symbols(s: &Symbolized) -> usize {
    s.sequences
        .iter()
        .flat_map(|q| &q.entries)
        .filter(|e| e.cell == CellId::MISSING)
        .count()
}

pub fn symbolize(input: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    require(input)?;
    let (reps, period) = pl::read_reps_csv(pl::open(input)?, cfg.slot_minutes)?;
    let sym = pl::symbolize(&reps, &period, cfg)?;
    let mut w = pl::create(out)?;
    write_sequences_csv(&mut w, &sym.sequences)?;
    w.flush()?;
    let missing = missing_symbols(&sym);
    finish(
        "symbolize",
        out,
        Some(cfg),
        format!(
            "{} streams, {} clamped representatives, {missing} missing symbols",
            sym.sequences.len(),
            sym.clamped
        ),
        json!({
            "streams": sym.sequences.len(),
            "symbols": sym.sequences.iter().map(|s| s.entries.len()).sum::<usize>(),
            "clamped": sym.clamped,
            "missing": missing,
            "alphabet_size": cfg.grid()?.alphabet_size(),
            "period": period,
        }),
    )
}

pub fn entropy(input: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    require(input)?;
    let sequences = read_sequences_csv(pl::open(input)?)?;
    if sequences.is_empty() {
        return Err(PipelineError::Degenerate("no symbol streams".into()));
    }
    let sym = Symbolized {
        sequences,
        clamped: 0,
    };
    let traces = pl::entropy_traces(&sym, cfg);
    let mut w = pl::create(out)?;
    write_traces_csv(&mut w, &traces)?;
    w.flush()?;
    let max = traces
        .iter()
        .flat_map(|t| &t.values)
        .map(|v| v.bits)
        .fold(0.0f64, f64::max);
    finish(
        "entropy",
        out,
        Some(cfg),
        format!(
            "{} traces with {} estimator, peak {max:.3} bits",
            traces.len(),
            cfg.estimator
        ),
        json!({ "traces": traces.len(), "estimator": cfg.estimator, "window_weeks": cfg.window_weeks, "max_bits": max }),
    )
}

fn read_labels(path: &Path) -> Result<SpecialDaySet> {
    require(path)?;
    Ok(read_specials_csv(pl::open(path)?)?)
}

pub fn detect(input: &Path, out: &Path, labels: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    require(input)?;
    let traces = read_traces_csv(pl::open(input)?, cfg.entropy_config())?;
    let (_, ranking) = pl::detect_days(&traces, cfg)?;
    let specials = labels.map(read_labels).transpose()?;
    pl::write_ranking_json(out, &ranking, specials.as_ref())?;
    let top: Vec<Value> = ranking
        .days
        .iter()
        .take(5)
        .map(|d| json!({ "date": d.date, "score": d.score }))
        .collect();
    finish(
        "detect",
        out,
        Some(cfg),
        format!(
            "{} days ranked, top {} ({:.3} bits)",
            ranking.len(),
            ranking.days[0].date,
            ranking.days[0].score
        ),
        json!({ "days_ranked": ranking.len(), "method": cfg.score_method, "warmup_days": cfg.warmup_days, "top": top }),
    )
}

pub fn evaluate(ranking: &Path, labels: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    require(ranking)?;
    let ranking = pl::read_ranking_json(ranking)?;
    let specials = read_labels(labels)?;
    let eval = pl::evaluate_ranking(&ranking, &specials)?;
    let mut w = pl::create(out)?;
    eval.curves.write_csv(&mut w)?;
    w.flush()?;
    let c = &eval.curves;
    let at = |f: f64| c.at_fraction(f).copied().unwrap_or(c.points[0]);
    finish(
        "evaluate",
        out,
        Some(cfg),
        format!(
            "{} of {} labelled days scored; detection {:.2} at 10%, {:.2} at 20% of days",
            c.special_days,
            specials.len(),
            at(0.1).detection_rate,
            at(0.2).detection_rate
        ),
        json!({
            "days_ranked": c.total_days,
            "special_days": c.special_days,
            "unscored_labels": eval.unscored,
            "detection_at_10": at(0.1).detection_rate,
            "detection_at_20": at(0.2).detection_rate,
            "fpr_at_20": at(0.2).false_positive_rate,
        }),
    )
}

pub fn sweep(
    input: &Path,
    labels: &Path,
    out_dir: &Path,
    fields: &FieldMap,
    cfg: &PipelineConfig,
) -> Result<()> {
    let loaded = load(input, fields)?;
    let period = period_for(&loaded, cfg)?;
    let specials = read_labels(labels)?;
    std::fs::create_dir_all(out_dir)?;
    let rows = study::sweep(&loaded.posts, period, &specials, cfg, Some(out_dir))?;
    let table = out_dir.join("sweep.csv");
    let mut w = pl::create(&table)?;
    study::write_sweep_csv(&mut w, &rows)?;
    w.flush()?;

    let opt_cfg = OptionsConfig {
        k: cfg.k.max(2),
        dbscan: cfg.dbscan,
        seed: cfg.seed,
        ..OptionsConfig::default()
    };
    let study_cfg = PipelineConfig {
        slot_minutes: 30,
        ..cfg.clone()
    };
    let buckets = pl::bucket_posts(loaded.posts, period, &study_cfg)?;
    let options = study::compare_options(&buckets, &opt_cfg);
    let mut w = pl::create(&out_dir.join("options.csv"))?;
    study::write_options_csv(&mut w, &options)?;
    w.flush()?;

    let best = rows
        .iter()
        .max_by(|a, b| a.detection_at_20.total_cmp(&b.detection_at_20))
        .expect("sweep has rows");
    finish(
        "sweep",
        &table,
        Some(cfg),
        format!(
            "{} combinations; best detection at 20%: {:.2} ({} min, L={}, W={}, {}); DBSCAN-only lowest on {:.0}% of slots",
            rows.len(),
            best.detection_at_20,
            best.slot_minutes,
            best.cells_per_side,
            best.window_weeks,
            best.estimator,
            options.dbscan_lowest_fraction * 100.0
        ),
        json!({
            "combinations": rows.len(),
            "options": {
                "weekday": opt_cfg.weekday,
                "slot_minutes": 30,
                "slots_compared": options.slots.len(),
                "dbscan_lowest_fraction": options.dbscan_lowest_fraction,
                "hybrid_deterministic": options.hybrid_deterministic,
                "kmeans_varies": options.kmeans_varies,
            },
        }),
    )
}

pub struct AllPaths {
    pub posts: PathBuf,
    pub labels: Option<PathBuf>,
}

/// Every stage in order through files in `out_dir`.
pub fn all(
    source: AllPaths,
    out_dir: &Path,
    fields: &FieldMap,
    cfg: &PipelineConfig,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    pl::write_json(&out_dir.join("config.json"), cfg)?;
    let reps = out_dir.join("representatives.csv");
    let symbols = out_dir.join("symbols.csv");
    let traces = out_dir.join("traces.csv");
    let ranking = out_dir.join("ranking.json");
    represent(&source.posts, &reps, fields, cfg)?;
    symbolize(&reps, &symbols, cfg)?;
    entropy(&symbols, &traces, cfg)?;
    detect(&traces, &ranking, source.labels.as_deref(), cfg)?;
    if let Some(labels) = &source.labels {
        evaluate(&ranking, labels, &out_dir.join("curves.csv"), cfg)?;
    }
    Ok(())
}
