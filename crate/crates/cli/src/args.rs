use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::Args;

use crowdsense_core::detect::ScoreMethod;
use crowdsense_core::entropy::Estimator;
use crowdsense_core::geo::GeoPoint;
use crowdsense_core::ingest::Period;
use crowdsense_core::pipeline::{self, PipelineConfig, PipelineError};
use crowdsense_core::symbolize::SymbolMode;

/// Pipeline parameters. Each flag overrides the base configuration, which
/// is `--config` if given, else a `config.json` beside the input, else the
/// built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Base configuration file (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Region centre as "lat,lon"
    #[arg(long, global = true, value_parser = parse_center, allow_hyphen_values = true)]
    pub region_center: Option<GeoPoint>,
    /// Region radius in km
    #[arg(long, global = true)]
    pub radius_km: Option<f64>,
    /// Side of the symbolization square in km
    #[arg(long, global = true)]
    pub side_km: Option<f64>,
    /// Local time offset from UTC in minutes
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub utc_offset_min: Option<i32>,
    /// Analysis period as "YYYY-MM-DD:YYYY-MM-DD"
    #[arg(long, global = true, value_parser = parse_period)]
    pub period: Option<Period>,
    /// Slot length in minutes
    #[arg(long, global = true)]
    pub slot_min: Option<u32>,
    /// Representatives per slot (1-3)
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Grid cells per side
    #[arg(long, global = true)]
    pub grid: Option<u32>,
    /// DBSCAN neighbourhood radius in metres
    #[arg(long, global = true)]
    pub eps_m: Option<f64>,
    /// DBSCAN core-point threshold
    #[arg(long, global = true)]
    pub min_points: Option<usize>,
    /// shannon, hartley or grassberger
    #[arg(long, global = true)]
    pub estimator: Option<Estimator>,
    /// Entropy window in weeks, or "cumulative"
    #[arg(long, global = true, value_parser = parse_window)]
    pub window_weeks: Option<WindowArg>,
    /// endpoints or consecutive
    #[arg(long, global = true)]
    pub score_method: Option<ScoreMethod>,
    /// Days excluded from scoring at the start of the period
    #[arg(long, global = true)]
    pub warmup_days: Option<usize>,
    /// per-representative or joint
    #[arg(long, global = true, value_parser = parse_symbol_mode)]
    pub symbol_mode: Option<SymbolMode>,
    /// Seed for synthetic data and randomized study options
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowArg(pub Option<u32>);

fn parse_center(s: &str) -> Result<GeoPoint, String> {
    let (lat, lon) = s.split_once(',').ok_or("expected \"lat,lon\"")?;
    let lat: f64 = lat.trim().parse().map_err(|e| format!("latitude: {e}"))?;
    let lon: f64 = lon.trim().parse().map_err(|e| format!("longitude: {e}"))?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

fn parse_period(s: &str) -> Result<Period, String> {
    let (a, b) = s.split_once(':').ok_or("expected \"start:end\"")?;
    let a: NaiveDate = a.parse().map_err(|e| format!("start date: {e}"))?;
    let b: NaiveDate = b.parse().map_err(|e| format!("end date: {e}"))?;
    Period::new(a, b).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<WindowArg, String> {
    match s {
        "cumulative" | "none" => Ok(WindowArg(None)),
        n => n
            .parse::<u32>()
            .map(|w| WindowArg(Some(w)))
            .map_err(|_| format!("expected a number of weeks or \"cumulative\", got {n:?}")),
    }
}

fn parse_symbol_mode(s: &str) -> Result<SymbolMode, String> {
    match s {
        "per-representative" => Ok(SymbolMode::PerRepresentative),
        "joint" => Ok(SymbolMode::Joint),
        other => Err(format!("unknown symbol mode {other:?}")),
    }
}

impl ConfigArgs {
    /// Base configuration with the flags applied, validated.
    pub fn resolve(&self, input: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
        let beside = input
            .and_then(Path::parent)
            .map(|d| d.join("config.json"))
            .filter(|p| p.is_file());
        let mut cfg: PipelineConfig = match self.config.as_deref().or(beside.as_deref()) {
            Some(path) => pipeline::read_json(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(c) = self.region_center {
            cfg.region.center = c;
        }
        if let Some(r) = self.radius_km {
            cfg.region.radius_m = r * 1000.0;
        }
        if let Some(s) = self.side_km {
            cfg.region.side_m = s * 1000.0;
        }
        if let Some(o) = self.utc_offset_min {
            cfg.utc_offset_min = o;
        }
        if self.period.is_some() {
            cfg.period = self.period;
        }
        if let Some(v) = self.slot_min {
            cfg.slot_minutes = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.grid {
            cfg.cells_per_side = v;
        }
        if let Some(v) = self.eps_m {
            cfg.dbscan.eps_m = v;
        }
        if let Some(v) = self.min_points {
            cfg.dbscan.min_points = v;
        }
        if let Some(v) = self.estimator {
            cfg.estimator = v;
        }
        if let Some(WindowArg(w)) = self.window_weeks {
            cfg.window_weeks = w;
        }
        if let Some(v) = self.score_method {
            cfg.score_method = v;
        }
        if let Some(v) = self.warmup_days {
            cfg.warmup_days = v;
        }
        if let Some(v) = self.symbol_mode {
            cfg.symbol_mode = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
