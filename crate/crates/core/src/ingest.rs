//! Post loading (CSV / JSONL), region and period filtering, and bucketing
//! into (date, time-slot) groups under a fixed UTC offset.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoPoint, Region};

pub const MINUTES_PER_DAY: u32 = 1440;

/// New York standard time.
pub const DEFAULT_UTC_OFFSET_MIN: i32 = -300;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// One geo-located post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    /// UTC epoch seconds.
    pub ts: i64,
    pub loc: GeoPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl PostRecord {
    pub fn new(ts: i64, loc: GeoPoint) -> Self {
        PostRecord { ts, loc, id: None }
    }

    fn sort_key(&self) -> (i64, u64, u64, Option<&str>) {
        (
            self.ts,
            self.loc.lat.to_bits(),
            self.loc.lon.to_bits(),
            self.id.as_deref(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostFormat {
    Csv,
    Jsonl,
}

impl PostFormat {
    /// Guess from the file extension; anything that is not `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => PostFormat::Jsonl,
            _ => PostFormat::Csv,
        }
    }
}

/// Column (CSV) or key (JSONL) names for the post fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    pub timestamp: String,
    pub lat: String,
    pub lon: String,
    pub id: Option<String>,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            timestamp: "timestamp".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            id: Some("id".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadStats {
    pub rows: usize,
    pub parsed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedPosts {
    pub posts: Vec<PostRecord>,
    pub stats: LoadStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TsKind {
    Epoch,
    Iso,
}

/// Detects the timestamp representation from the first value that parses
/// and then holds every later row to it.
#[derive(Debug, Default)]
struct TimestampParser {
    kind: Option<TsKind>,
}

impl TimestampParser {
    fn parse(&mut self, raw: &str) -> Option<i64> {
        let raw = raw.trim();
        match self.kind {
            Some(TsKind::Epoch) => parse_epoch(raw),
            Some(TsKind::Iso) => parse_iso(raw),
            None => {
                if let Some(v) = parse_epoch(raw) {
                    self.kind = Some(TsKind::Epoch);
                    Some(v)
                } else if let Some(v) = parse_iso(raw) {
                    self.kind = Some(TsKind::Iso);
                    Some(v)
                } else {
                    None
                }
            }
        }
    }
}

fn parse_epoch(raw: &str) -> Option<i64> {
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v);
    }
    // Fractional epoch seconds are truncated to whole seconds.
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && raw.contains('.') => Some(v.floor() as i64),
        _ => None,
    }
}

/// ISO-8601 with offset, or naive date-time interpreted as UTC.
fn parse_iso(raw: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

fn build_post(
    ts_parser: &mut TimestampParser,
    ts: Option<&str>,
    lat: Option<&str>,
    lon: Option<&str>,
    id: Option<String>,
) -> Option<PostRecord> {
    let ts = ts_parser.parse(ts?)?;
    let lat: f64 = lat?.trim().parse().ok()?;
    let lon: f64 = lon?.trim().parse().ok()?;
    let loc = GeoPoint::new(lat, lon).ok()?;
    Some(PostRecord { ts, loc, id })
}

fn finish(posts: Vec<PostRecord>, stats: LoadStats) -> Result<LoadedPosts, IngestError> {
    if stats.rows > 0 && stats.skipped * 2 > stats.rows {
        return Err(IngestError::Format(format!(
            "{} of {} rows malformed; check the field map",
            stats.skipped, stats.rows
        )));
    }
    Ok(LoadedPosts { posts, stats })
}

/// Parses posts from any reader. Malformed rows are skipped and counted;
/// more than half malformed is a [`IngestError::Format`].
pub fn read_posts<R: Read>(
    reader: R,
    format: PostFormat,
    fields: &FieldMap,
) -> Result<LoadedPosts, IngestError> {
    match format {
        PostFormat::Csv => read_csv(reader, fields),
        PostFormat::Jsonl => read_jsonl(reader, fields),
    }
}

pub fn load_posts(
    path: &Path,
    format: PostFormat,
    fields: &FieldMap,
) -> Result<LoadedPosts, IngestError> {
    let file = File::open(path)?;
    read_posts(BufReader::new(file), format, fields)
}

fn read_csv<R: Read>(reader: R, fields: &FieldMap) -> Result<LoadedPosts, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Format(format!("missing CSV header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (ts_col, lat_col, lon_col) =
        match (col(&fields.timestamp), col(&fields.lat), col(&fields.lon)) {
            (Some(t), Some(a), Some(o)) => (t, a, o),
            _ => {
                return Err(IngestError::Format(format!(
                    "CSV header {:?} lacks one of {:?}/{:?}/{:?}",
                    headers, fields.timestamp, fields.lat, fields.lon
                )))
            }
        };
    let id_col = fields.id.as_deref().and_then(col);

    let mut ts_parser = TimestampParser::default();
    let mut stats = LoadStats::default();
    let mut posts = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => {
                return Err(match e.into_kind() {
                    csv::ErrorKind::Io(io) => IngestError::Io(io),
                    other => IngestError::Format(format!("{other:?}")),
                })
            }
            Err(_) => {
                stats.rows += 1;
                stats.skipped += 1;
                continue;
            }
        }
        stats.rows += 1;
        let id = id_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_owned);
        match build_post(
            &mut ts_parser,
            record.get(ts_col),
            record.get(lat_col),
            record.get(lon_col),
            id,
        ) {
            Some(p) => {
                stats.parsed += 1;
                posts.push(p);
            }
            None => stats.skipped += 1,
        }
    }
    finish(posts, stats)
}

fn json_field_str(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn read_jsonl<R: Read>(reader: R, fields: &FieldMap) -> Result<LoadedPosts, IngestError> {
    let mut ts_parser = TimestampParser::default();
    let mut stats = LoadStats::default();
    let mut posts = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.rows += 1;
        let obj: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => {
                stats.skipped += 1;
                continue;
            }
        };
        let get = |k: &str| obj.get(k).and_then(json_field_str);
        let id = fields.id.as_deref().and_then(get);
        let (ts, lat, lon) = (get(&fields.timestamp), get(&fields.lat), get(&fields.lon));
        match build_post(
            &mut ts_parser,
            ts.as_deref(),
            lat.as_deref(),
            lon.as_deref(),
            id,
        ) {
            Some(p) => {
                stats.parsed += 1;
                posts.push(p);
            }
            None => stats.skipped += 1,
        }
    }
    finish(posts, stats)
}

/// Writes posts as CSV with epoch-second timestamps (`timestamp,lat,lon,id`).
pub fn write_posts_csv<W: Write>(
    writer: W,
    posts: impl IntoIterator<Item = PostRecord>,
) -> Result<usize, IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "lat", "lon", "id"])
        .map_err(csv_err)?;
    let mut n = 0;
    for p in posts {
        w.write_record([
            p.ts.to_string(),
            p.loc.lat.to_string(),
            p.loc.lon.to_string(),
            p.id.unwrap_or_default(),
        ])
        .map_err(csv_err)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Writes posts as JSONL objects with the default field names.
pub fn write_posts_jsonl<W: Write>(
    mut writer: W,
    posts: impl IntoIterator<Item = PostRecord>,
) -> Result<usize, IngestError> {
    let mut n = 0;
    for p in posts {
        let mut obj = serde_json::Map::new();
        obj.insert("timestamp".into(), p.ts.into());
        obj.insert("lat".into(), p.loc.lat.into());
        obj.insert("lon".into(), p.loc.lon.into());
        if let Some(id) = p.id {
            obj.insert("id".into(), id.into());
        }
        serde_json::to_writer(&mut writer, &obj).map_err(|e| IngestError::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
        n += 1;
    }
    writer.flush()?;
    Ok(n)
}

pub(crate) fn csv_err(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Format(format!("{other:?}")),
    }
}

/// Fixed-width slicing of the local day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotKey {
    /// Monday = 0.
    pub weekday: u8,
    pub slot_index: u32,
    pub slot_minutes: u32,
}

impl SlotKey {
    pub fn start_minute(&self) -> u32 {
        self.slot_index * self.slot_minutes
    }
}

pub fn validate_slot_minutes(slot_minutes: u32) -> Result<(), IngestError> {
    if slot_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(slot_minutes) {
        return Err(IngestError::Config(format!(
            "slot_minutes={slot_minutes} does not divide 1440"
        )));
    }
    Ok(())
}

pub fn slots_per_day(slot_minutes: u32) -> u32 {
    MINUTES_PER_DAY / slot_minutes
}

pub fn weekday_index(date: NaiveDate) -> u8 {
    date.weekday().num_days_from_monday() as u8
}

/// Local calendar date and minute-of-day for a UTC timestamp.
pub fn local_date_minute(ts: i64, utc_offset_min: i32) -> (NaiveDate, u32) {
    let local = ts + i64::from(utc_offset_min) * 60;
    let days = local.div_euclid(86_400);
    let secs = local.rem_euclid(86_400);
    let date = NaiveDate::from_num_days_from_ce_opt(719_163 + days as i32)
        .expect("timestamp within chrono range");
    (date, (secs / 60) as u32)
}

/// UTC epoch seconds of a local date + minute-of-day.
pub fn local_to_utc(date: NaiveDate, minute: u32, utc_offset_min: i32) -> i64 {
    let days = i64::from(date.num_days_from_ce() - 719_163);
    days * 86_400 + i64::from(minute) * 60 - i64::from(utc_offset_min) * 60
}

pub fn slot_key_for(date: NaiveDate, minute_of_day: u32, slot_minutes: u32) -> SlotKey {
    SlotKey {
        weekday: weekday_index(date),
        slot_index: minute_of_day / slot_minutes,
        slot_minutes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotBucket {
    pub key: SlotKey,
    pub date: NaiveDate,
    pub posts: Vec<PostRecord>,
}

impl SlotBucket {
    pub fn locations(&self) -> Vec<GeoPoint> {
        self.posts.iter().map(|p| p.loc).collect()
    }
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::Config(format!(
                "period start {start} after end {end}"
            )));
        }
        Ok(Period { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }

    pub fn num_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketConfig {
    pub region: Region,
    pub period: Period,
    pub slot_minutes: u32,
    pub utc_offset_min: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BucketStats {
    pub total: usize,
    pub retained: usize,
    pub dropped_region: usize,
    pub dropped_period: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Buckets {
    pub slots: BTreeMap<(NaiveDate, u32), SlotBucket>,
    pub stats: BucketStats,
}

/// Groups posts into (local date, slot) buckets. Posts outside the region
/// disc or the period are dropped and counted. Bucket contents are sorted,
/// so the result does not depend on input order.
pub fn bucket(
    posts: impl IntoIterator<Item = PostRecord>,
    cfg: &BucketConfig,
) -> Result<Buckets, IngestError> {
    validate_slot_minutes(cfg.slot_minutes)?;
    Period::new(cfg.period.start, cfg.period.end)?;
    let mut out = Buckets::default();
    for post in posts {
        out.stats.total += 1;
        if !cfg.region.contains(post.loc) {
            out.stats.dropped_region += 1;
            continue;
        }
        let (date, minute) = local_date_minute(post.ts, cfg.utc_offset_min);
        if !cfg.period.contains(date) {
            out.stats.dropped_period += 1;
            continue;
        }
        let key = slot_key_for(date, minute, cfg.slot_minutes);
        out.slots
            .entry((date, key.slot_index))
            .or_insert_with(|| SlotBucket {
                key,
                date,
                posts: Vec::new(),
            })
            .posts
            .push(post);
        out.stats.retained += 1;
    }
    for b in out.slots.values_mut() {
        b.posts.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }
    Ok(out)
}

/// Smallest period covering the in-region posts, in local dates.
pub fn infer_period<'a>(
    posts: impl IntoIterator<Item = &'a PostRecord>,
    region: &Region,
    utc_offset_min: i32,
) -> Option<Period> {
    let mut range: Option<(NaiveDate, NaiveDate)> = None;
    for p in posts {
        if !region.contains(p.loc) {
            continue;
        }
        let (d, _) = local_date_minute(p.ts, utc_offset_min);
        range = Some(match range {
            None => (d, d),
            Some((a, b)) => (a.min(d), b.max(d)),
        });
    }
    range.map(|(start, end)| Period { start, end })
}
