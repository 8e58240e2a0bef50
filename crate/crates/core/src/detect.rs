//! Day scoring from entropy traces, ranking, and detection-curve
//! evaluation against labelled special days.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::EntropyTrace;
use crate::ingest::{csv_err, IngestError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("traces span {span} days; need more than the {warmup}-day warm-up")]
    TooShort { span: usize, warmup: usize },
    #[error("nothing to rank")]
    Empty,
    #[error("special days outside the scored range: {0:?}")]
    LabelMismatch(Vec<NaiveDate>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    /// |H(last slot of d) - H(first slot of d)|
    #[default]
    Endpoints,
    /// |H(end of d) - H(end of the previous same-weekday day)|
    Consecutive,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::Endpoints => "endpoints",
            ScoreMethod::Consecutive => "consecutive",
        })
    }
}

impl FromStr for ScoreMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "endpoints" => Ok(ScoreMethod::Endpoints),
            "consecutive" => Ok(ScoreMethod::Consecutive),
            other => Err(format!("unknown score method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayScore {
    pub date: NaiveDate,
    pub score: f64,
    pub method: ScoreMethod,
    pub weekday: u8,
    /// Representative streams that scored this date.
    pub streams: Vec<u32>,
}

/// Per-date anomaly scores, the maximum over representative streams.
/// Dates inside the first `warmup_days` of the traced span are left out.
pub fn score_days(
    traces: &[EntropyTrace],
    method: ScoreMethod,
    warmup_days: usize,
) -> Result<Vec<DayScore>, DetectError> {
    let first = traces
        .iter()
        .flat_map(|t| t.values.first())
        .map(|v| v.date)
        .min();
    let last = traces
        .iter()
        .flat_map(|t| t.values.last())
        .map(|v| v.date)
        .max();
    let (Some(first), Some(last)) = (first, last) else {
        return Err(DetectError::TooShort {
            span: 0,
            warmup: warmup_days,
        });
    };
    let span = (last - first).num_days() as usize + 1;
    if span < warmup_days + 1 {
        return Err(DetectError::TooShort {
            span,
            warmup: warmup_days,
        });
    }
    let cutoff = first + Days::new(warmup_days as u64);

    let mut per_date: BTreeMap<NaiveDate, DayScore> = BTreeMap::new();
    for trace in traces {
        // (first H, last H) of each date, in trace order.
        let mut days: Vec<(NaiveDate, f64, f64)> = Vec::new();
        for v in &trace.values {
            match days.last_mut() {
                Some(d) if d.0 == v.date => d.2 = v.bits,
                _ => days.push((v.date, v.bits, v.bits)),
            }
        }
        for (idx, &(date, start, end)) in days.iter().enumerate() {
            let score = match method {
                ScoreMethod::Endpoints => (end - start).abs(),
                ScoreMethod::Consecutive => match idx.checked_sub(1) {
                    Some(p) => (end - days[p].2).abs(),
                    None => continue,
                },
            };
            if date < cutoff {
                continue;
            }
            let entry = per_date.entry(date).or_insert_with(|| DayScore {
                date,
                score: 0.0,
                method,
                weekday: trace.weekday,
                streams: Vec::new(),
            });
            entry.score = entry.score.max(score);
            entry.streams.push(trace.rep_index);
        }
    }
    let mut out: Vec<DayScore> = per_date.into_values().collect();
    for d in &mut out {
        d.streams.sort_unstable();
        d.streams.dedup();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDay {
    pub rank: usize,
    pub date: NaiveDate,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnomalyRanking {
    pub days: Vec<RankedDay>,
}

impl AnomalyRanking {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days.iter().map(|d| d.date).collect()
    }

    /// JSON rows `{date, score, rank, is_special}`.
    pub fn to_json(&self, specials: Option<&SpecialDaySet>) -> serde_json::Value {
        let set: BTreeSet<NaiveDate> = specials.map(|s| s.dates()).unwrap_or_default();
        serde_json::Value::Array(
            self.days
                .iter()
                .map(|d| {
                    serde_json::json!({
                        "date": d.date.to_string(),
                        "score": d.score,
                        "rank": d.rank,
                        "is_special": set.contains(&d.date),
                    })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Row {
            date: NaiveDate,
            score: f64,
            rank: usize,
        }
        let rows: Vec<Row> = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        let mut days: Vec<RankedDay> = rows
            .into_iter()
            .map(|r| RankedDay {
                rank: r.rank,
                date: r.date,
                score: r.score,
            })
            .collect();
        days.sort_by_key(|d| d.rank);
        Ok(AnomalyRanking { days })
    }
}

/// Descending score, earlier date first on ties. Ranks start at 1.
pub fn rank(scores: &[DayScore]) -> Result<AnomalyRanking, DetectError> {
    if scores.is_empty() {
        return Err(DetectError::Empty);
    }
    let mut order: Vec<(NaiveDate, f64)> = scores.iter().map(|s| (s.date, s.score)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(AnomalyRanking {
        days: order
            .into_iter()
            .enumerate()
            .map(|(i, (date, score))| RankedDay {
                rank: i + 1,
                date,
                score,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialDay {
    pub date: NaiveDate,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpecialDaySet {
    pub days: Vec<SpecialDay>,
}

impl SpecialDaySet {
    pub fn new(mut days: Vec<SpecialDay>) -> Self {
        days.sort_by(|a, b| a.date.cmp(&b.date).then(a.label.cmp(&b.label)));
        days.dedup_by_key(|d| d.date);
        SpecialDaySet { days }
    }

    pub fn dates(&self) -> BTreeSet<NaiveDate> {
        self.days.iter().map(|d| d.date).collect()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Splits into the days present in `dates` and the ones that are not.
    pub fn restrict_to(&self, dates: &BTreeSet<NaiveDate>) -> (SpecialDaySet, Vec<NaiveDate>) {
        let (kept, dropped): (Vec<_>, Vec<_>) = self
            .days
            .iter()
            .cloned()
            .partition(|d| dates.contains(&d.date));
        (
            SpecialDaySet { days: kept },
            dropped.into_iter().map(|d| d.date).collect(),
        )
    }

    /// Table-1 special days of the original New York collection, with the
    /// four storm days listed separately.
    pub fn new_york_2015() -> Self {
        let d = |y, m, dd| NaiveDate::from_ymd_opt(y, m, dd).expect("valid date");
        let mut days = vec![
            SpecialDay {
                date: d(2015, 9, 7),
                label: "Labor Day".into(),
            },
            SpecialDay {
                date: d(2015, 10, 12),
                label: "Columbus Day".into(),
            },
            SpecialDay {
                date: d(2015, 10, 31),
                label: "Halloween".into(),
            },
            SpecialDay {
                date: d(2015, 11, 11),
                label: "Veterans Day".into(),
            },
            SpecialDay {
                date: d(2015, 11, 26),
                label: "Thanksgiving Day".into(),
            },
            SpecialDay {
                date: d(2015, 12, 24),
                label: "Christmas' Eve".into(),
            },
            SpecialDay {
                date: d(2015, 12, 25),
                label: "Christmas".into(),
            },
            SpecialDay {
                date: d(2015, 12, 31),
                label: "New Year's Eve".into(),
            },
            SpecialDay {
                date: d(2016, 1, 1),
                label: "New Year".into(),
            },
        ];
        for day in 21..=24 {
            days.push(SpecialDay {
                date: d(2016, 1, day),
                label: "Jonas' Storm".into(),
            });
        }
        SpecialDaySet::new(days)
    }
}

pub fn write_specials_csv<W: Write>(
    writer: W,
    specials: &SpecialDaySet,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "label"]).map_err(csv_err)?;
    for d in &specials.days {
        w.write_record([d.date.to_string(), d.label.clone()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_specials_csv<R: Read>(reader: R) -> Result<SpecialDaySet, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut days = Vec::new();
    for row in rdr.deserialize::<SpecialDay>() {
        days.push(row.map_err(csv_err)?);
    }
    Ok(SpecialDaySet::new(days))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction_processed: f64,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalCurves {
    pub total_days: usize,
    pub special_days: usize,
    pub points: Vec<CurvePoint>,
}

impl EvalCurves {
    /// Curve point after processing the first `m` ranked days.
    pub fn at(&self, m: usize) -> Option<&CurvePoint> {
        m.checked_sub(1).and_then(|i| self.points.get(i))
    }

    /// Point at the largest prefix not exceeding `fraction` of the days.
    pub fn at_fraction(&self, fraction: f64) -> Option<&CurvePoint> {
        let m = (fraction * self.total_days as f64 + 1e-9).floor() as usize;
        self.at(m.max(1))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "fraction_processed",
            "detection_rate",
            "false_positive_rate",
        ])
        .map_err(csv_err)?;
        for p in &self.points {
            w.write_record([
                p.fraction_processed.to_string(),
                p.detection_rate.to_string(),
                p.false_positive_rate.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Detection and false-positive curves over every ranking prefix `m`:
/// detection = |top-m ∩ specials| / |specials|,
/// false positives = |top-m \ specials| / m.
pub fn evaluate(
    ranking: &AnomalyRanking,
    specials: &SpecialDaySet,
) -> Result<EvalCurves, DetectError> {
    if ranking.is_empty() {
        return Err(DetectError::Empty);
    }
    let ranked: BTreeSet<NaiveDate> = ranking.dates().into_iter().collect();
    let special = specials.dates();
    let offenders: Vec<NaiveDate> = special
        .iter()
        .filter(|d| !ranked.contains(d))
        .copied()
        .collect();
    if special.is_empty() || !offenders.is_empty() {
        return Err(DetectError::LabelMismatch(offenders));
    }
    let total = ranking.len();
    let mut hits = 0usize;
    let points = ranking
        .days
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let m = i + 1;
            hits += usize::from(special.contains(&d.date));
            CurvePoint {
                fraction_processed: m as f64 / total as f64,
                detection_rate: hits as f64 / special.len() as f64,
                false_positive_rate: (m - hits) as f64 / m as f64,
            }
        })
        .collect();
    Ok(EvalCurves {
        total_days: total,
        special_days: special.len(),
        points,
    })
}
