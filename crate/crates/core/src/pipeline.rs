//! Stage wiring, configuration and stage file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{select_representatives, ClusterError, DbscanParams, RepresentativeSet};
use crate::detect::{
    self, AnomalyRanking, DayScore, DetectError, EvalCurves, ScoreMethod, SpecialDaySet,
};
use crate::entropy::{trace_sequence, EntropyConfig, EntropyTrace, Estimator};
use crate::geo::{GeoPoint, Region};
use crate::ingest::{
    bucket, csv_err, slot_key_for, slots_per_day, validate_slot_minutes, BucketConfig, BucketStats,
    Buckets, IngestError, Period, DEFAULT_UTC_OFFSET_MIN,
};
use crate::symbolize::{build_sequences, GridSpec, SlotReps, SymbolMode, Symbolized};
use crate::synthgen::SynthError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl PipelineError {
    pub fn category(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Io(_) => "io",
            PipelineError::Format(_) => "format",
            PipelineError::Degenerate(_) => "degenerate-data",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Io(_) => 3,
            PipelineError::Format(_) => 4,
            PipelineError::Degenerate(_) => 5,
        }
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(e) => PipelineError::Io(e),
            IngestError::Format(m) => PipelineError::Format(m),
            IngestError::Config(m) => PipelineError::Config(m),
        }
    }
}

impl From<DetectError> for PipelineError {
    fn from(e: DetectError) -> Self {
        PipelineError::Degenerate(e.to_string())
    }
}

impl From<ClusterError> for PipelineError {
    fn from(e: ClusterError) -> Self {
        PipelineError::Degenerate(e.to_string())
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub region: Region,
    pub utc_offset_min: i32,
    /// Restricts the analysis to these dates; inferred from the data when absent.
    pub period: Option<Period>,
    pub slot_minutes: u32,
    pub k: usize,
    pub cells_per_side: u32,
    pub dbscan: DbscanParams,
    pub symbol_mode: SymbolMode,
    pub estimator: Estimator,
    /// `None` is the cumulative trace.
    pub window_weeks: Option<u32>,
    pub score_method: ScoreMethod,
    pub warmup_days: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            region: Region::default(),
            utc_offset_min: DEFAULT_UTC_OFFSET_MIN,
            period: None,
            slot_minutes: 15,
            k: 2,
            cells_per_side: 7,
            dbscan: DbscanParams::default(),
            symbol_mode: SymbolMode::PerRepresentative,
            estimator: Estimator::Shannon,
            window_weeks: Some(4),
            score_method: ScoreMethod::Endpoints,
            warmup_days: 28,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        self.region
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        validate_slot_minutes(self.slot_minutes)?;
        if !(1..=3).contains(&self.k) {
            return bad("k must be 1, 2 or 3");
        }
        self.grid()?;
        if !(self.dbscan.eps_m.is_finite() && self.dbscan.eps_m > 0.0)
            || self.dbscan.min_points == 0
        {
            return bad("DBSCAN needs eps_m > 0 and min_points >= 1");
        }
        if self.window_weeks == Some(0) {
            return bad("window_weeks must be at least 1");
        }
        if self.utc_offset_min.abs() > 18 * 60 {
            return bad("utc offset out of range");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.region, self.cells_per_side).map_err(PipelineError::Config)
    }

    pub fn entropy_config(&self) -> EntropyConfig {
        EntropyConfig {
            estimator: self.estimator,
            window_weeks: self.window_weeks,
            slot_minutes: self.slot_minutes,
            cells_per_side: self.cells_per_side,
        }
    }

    /// Number of symbol streams per weekday.
    pub fn streams(&self) -> usize {
        match self.symbol_mode {
            SymbolMode::PerRepresentative => self.k,
            SymbolMode::Joint => 1,
        }
    }
}

// Stage computations.

pub fn bucket_posts(
    posts: impl IntoIterator<Item = crate::ingest::PostRecord>,
    period: Period,
    cfg: &PipelineConfig,
) -> Result<Buckets> {
    Ok(bucket(
        posts,
        &BucketConfig {
            region: cfg.region,
            period,
            slot_minutes: cfg.slot_minutes,
            utc_offset_min: cfg.utc_offset_min,
        },
    )?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentStats {
    pub slots: usize,
    pub ok: usize,
    pub empty: usize,
    pub degenerate: usize,
}

/// Representatives for every slot of every date in the period.
pub fn represent(
    buckets: &Buckets,
    period: &Period,
    cfg: &PipelineConfig,
) -> (SlotReps, RepresentStats) {
    let per_day = slots_per_day(cfg.slot_minutes);
    let mut out = SlotReps::new();
    let mut stats = RepresentStats::default();
    for date in period.days() {
        for slot in 0..per_day {
            stats.slots += 1;
            let rep = match buckets.slots.get(&(date, slot)) {
                None => {
                    stats.empty += 1;
                    None
                }
                Some(b) => match select_representatives(b, cfg.k, &cfg.dbscan) {
                    Ok(r) => {
                        stats.ok += 1;
                        Some(r)
                    }
                    Err(ClusterError::EmptySlot) => {
                        stats.empty += 1;
                        None
                    }
                    Err(_) => {
                        stats.degenerate += 1;
                        None
                    }
                },
            };
            out.insert((date, slot), rep);
        }
    }
    (out, stats)
}

pub fn symbolize(reps: &SlotReps, period: &Period, cfg: &PipelineConfig) -> Result<Symbolized> {
    Ok(build_sequences(
        reps,
        period,
        slots_per_day(cfg.slot_minutes),
        cfg.k,
        &cfg.grid()?,
        cfg.symbol_mode,
    ))
}

pub fn entropy_traces(symbolized: &Symbolized, cfg: &PipelineConfig) -> Vec<EntropyTrace> {
    let ec = cfg.entropy_config();
    symbolized
        .sequences
        .iter()
        .map(|s| trace_sequence(s, &ec))
        .collect()
}

pub fn detect_days(
    traces: &[EntropyTrace],
    cfg: &PipelineConfig,
) -> Result<(Vec<DayScore>, AnomalyRanking)> {
    let scores = detect::score_days(traces, cfg.score_method, cfg.warmup_days)?;
    let ranking = detect::rank(&scores)?;
    Ok((scores, ranking))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub curves: EvalCurves,
    /// Labelled days that fell outside the ranked dates.
    pub unscored: Vec<NaiveDate>,
}

/// Evaluates against the labels that fall on ranked dates.
pub fn evaluate_ranking(ranking: &AnomalyRanking, specials: &SpecialDaySet) -> Result<Evaluation> {
    let ranked: BTreeSet<NaiveDate> = ranking.dates().into_iter().collect();
    let (kept, unscored) = specials.restrict_to(&ranked);
    if kept.is_empty() {
        return Err(PipelineError::Degenerate(
            "no labelled day falls on a ranked date".into(),
        ));
    }
    Ok(Evaluation {
        curves: detect::evaluate(ranking, &kept)?,
        unscored,
    })
}

/// Everything from bucketed posts to a ranking, kept in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub period: Period,
    pub represent: RepresentStats,
    pub symbolized: Symbolized,
    pub traces: Vec<EntropyTrace>,
    pub scores: Vec<DayScore>,
    pub ranking: AnomalyRanking,
}

pub fn run_from_reps(
    reps: &SlotReps,
    period: Period,
    stats: RepresentStats,
    cfg: &PipelineConfig,
) -> Result<RunOutput> {
    let symbolized = symbolize(reps, &period, cfg)?;
    let traces = entropy_traces(&symbolized, cfg);
    let (scores, ranking) = detect_days(&traces, cfg)?;
    Ok(RunOutput {
        period,
        represent: stats,
        symbolized,
        traces,
        scores,
        ranking,
    })
}

pub fn run_in_memory(
    posts: impl IntoIterator<Item = crate::ingest::PostRecord>,
    period: Period,
    cfg: &PipelineConfig,
) -> Result<RunOutput> {
    cfg.validate()?;
    let buckets = bucket_posts(posts, period, cfg)?;
    let (reps, stats) = represent(&buckets, &period, cfg);
    run_from_reps(&reps, period, stats, cfg)
}

// File formats.

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// Path of the summary written next to a stage output.
pub fn summary_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    s.into()
}

/// Path of the resolved configuration written next to a stage output.
pub fn config_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    s.into()
}

#[derive(Debug, Serialize, Deserialize)]
struct RepRow {
    date: NaiveDate,
    slot_index: u32,
    status: String,
    rep_index: Option<u32>,
    lat: Option<f64>,
    lon: Option<f64>,
    support: Option<usize>,
}

/// One row per representative of a usable slot, and one `missing` row per
/// slot without representatives, so the period can be recovered.
pub fn write_reps_csv<W: Write>(writer: W, reps: &SlotReps) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (&(date, slot_index), set) in reps {
        match set {
            Some(set) => {
                for (i, (p, n)) in set.reps.iter().zip(&set.support).enumerate() {
                    w.serialize(RepRow {
                        date,
                        slot_index,
                        status: "ok".into(),
                        rep_index: Some(i as u32),
                        lat: Some(p.lat),
                        lon: Some(p.lon),
                        support: Some(*n),
                    })
                    .map_err(csv_err)?;
                }
            }
            None => w
                .serialize(RepRow {
                    date,
                    slot_index,
                    status: "missing".into(),
                    rep_index: None,
                    lat: None,
                    lon: None,
                    support: None,
                })
                .map_err(csv_err)?,
        }
    }
    w.flush()?;
    Ok(())
}

type RepEntry = (u32, GeoPoint, usize);

/// Reads representatives back along with the covered period.
pub fn read_reps_csv<R: Read>(reader: R, slot_minutes: u32) -> Result<(SlotReps, Period)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut grouped: BTreeMap<(NaiveDate, u32), Vec<RepEntry>> = BTreeMap::new();
    let mut missing: BTreeSet<(NaiveDate, u32)> = BTreeSet::new();
    for row in rdr.deserialize::<RepRow>() {
        let row: RepRow = row.map_err(csv_err)?;
        let key = (row.date, row.slot_index);
        match (
            row.status.as_str(),
            row.rep_index,
            row.lat,
            row.lon,
            row.support,
        ) {
            ("ok", Some(i), Some(lat), Some(lon), Some(n)) => {
                let p =
                    GeoPoint::new(lat, lon).map_err(|e| PipelineError::Format(e.to_string()))?;
                grouped.entry(key).or_default().push((i, p, n));
            }
            ("missing", ..) => {
                missing.insert(key);
            }
            _ => {
                return Err(PipelineError::Format(format!(
                    "malformed representative row for {} slot {}",
                    row.date, row.slot_index
                )))
            }
        }
    }
    let per_day = slots_per_day(slot_minutes);
    let dates = grouped.keys().chain(&missing).map(|k| k.0);
    let (Some(start), Some(end)) = (dates.clone().min(), dates.max()) else {
        return Err(PipelineError::Degenerate("no representatives".into()));
    };
    let period = Period::new(start, end)?;
    let mut out = SlotReps::new();
    for key in &missing {
        out.insert(*key, None);
    }
    for ((date, slot), mut rows) in grouped {
        if slot >= per_day {
            return Err(PipelineError::Format(format!(
                "slot {slot} out of range for {slot_minutes}-minute slots"
            )));
        }
        rows.sort_by_key(|r| r.0);
        out.insert(
            (date, slot),
            Some(RepresentativeSet {
                date,
                key: slot_key_for(date, slot * slot_minutes, slot_minutes),
                reps: rows.iter().map(|r| r.1).collect(),
                support: rows.iter().map(|r| r.2).collect(),
            }),
        );
    }
    Ok((out, period))
}

pub fn write_ranking_json(
    path: &Path,
    ranking: &AnomalyRanking,
    specials: Option<&SpecialDaySet>,
) -> Result<()> {
    write_json(path, &ranking.to_json(specials))
}

pub fn read_ranking_json(path: &Path) -> Result<AnomalyRanking> {
    let v: serde_json::Value = read_json(path)?;
    AnomalyRanking::from_json(&v).map_err(PipelineError::Format)
}

pub fn bucket_stats_json(stats: &BucketStats) -> serde_json::Value {
    serde_json::to_value(stats).expect("plain struct")
}
