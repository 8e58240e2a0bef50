//! Seeded synthetic post streams with planted anomaly days.
//!
//! Posts come from a mixture of Gaussian hotspots plus a uniform
//! background over the region disc. Every 15-minute tick draws a Poisson
//! count per source. Randomness comes from ChaCha8 seeded with
//! `Scenario::seed`. The draw order is fixed: days in order, ticks in
//! order, hotspots in declaration order and then the background. Each
//! post consumes one second offset followed by its two coordinates. This
//! makes a trace reproducible on any platform.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{SpecialDay, SpecialDaySet};
use crate::geo::{GeoPoint, Region};
use crate::ingest::{local_to_utc, weekday_index, PostRecord, DEFAULT_UTC_OFFSET_MIN};

pub const TICK_MINUTES: u32 = 15;
const TICKS_PER_DAY: u32 = 24 * 60 / TICK_MINUTES;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid scenario: {0}")]
pub struct SynthError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: GeoPoint,
    pub spread_m: f64,
    /// Relative share of the hotspot posts.
    pub weight: f64,
    /// Relative intensity for each local hour.
    #[serde(default = "flat_hours")]
    pub hourly: Vec<f64>,
    /// Relative intensity for each weekday, Monday first.
    #[serde(default = "flat_week")]
    pub weekday: Vec<f64>,
}

fn flat_hours() -> Vec<f64> {
    vec![1.0; 24]
}

fn flat_week() -> Vec<f64> {
    vec![1.0; 7]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Intensity multiplied by `magnitude` (> 1).
    CrowdSurge,
    /// Intensity multiplied by `magnitude` (< 1).
    CrowdAbsence,
    /// Hotspot centre moved `magnitude` metres along `bearing_deg`.
    HotspotShift,
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyKind::CrowdSurge => "crowd_surge",
            AnomalyKind::CrowdAbsence => "crowd_absence",
            AnomalyKind::HotspotShift => "hotspot_shift",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub date: NaiveDate,
    pub kind: AnomalyKind,
    pub magnitude: f64,
    /// Affected local minutes `[start_minute, end_minute)`.
    #[serde(default)]
    pub start_minute: u32,
    #[serde(default = "end_of_day")]
    pub end_minute: u32,
    /// Target hotspot; `None` means every hotspot, and the background too
    /// for intensity changes.
    #[serde(default)]
    pub hotspot: Option<usize>,
    #[serde(default)]
    pub bearing_deg: f64,
    #[serde(default)]
    pub label: Option<String>,
}

fn end_of_day() -> u32 {
    24 * 60
}

impl Anomaly {
    fn covers(&self, date: NaiveDate, minute: u32) -> bool {
        self.date == date && minute >= self.start_minute && minute < self.end_minute
    }

    fn targets(&self, hotspot: Option<usize>) -> bool {
        match (self.hotspot, hotspot) {
            (None, _) => true,
            (Some(a), Some(b)) => a == b,
            (Some(_), None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub days: u32,
    /// Mean posts per day over a full week.
    pub posts_per_day: f64,
    #[serde(default = "default_offset")]
    pub utc_offset_min: i32,
    #[serde(default)]
    pub region: Region,
    /// Share of posts scattered uniformly over the region disc.
    #[serde(default)]
    pub background_fraction: f64,
    #[serde(default = "flat_hours")]
    pub background_hourly: Vec<f64>,
    pub hotspots: Vec<Hotspot>,
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
}

fn default_offset() -> i32 {
    DEFAULT_UTC_OFFSET_MIN
}

impl Scenario {
    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Days::new(u64::from(self.days.saturating_sub(1)))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError(m));
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        if !(self.posts_per_day.is_finite() && self.posts_per_day >= 0.0) {
            return bad("posts_per_day must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.background_fraction) {
            return bad("background_fraction must lie in [0, 1]".into());
        }
        self.region
            .validate()
            .map_err(|e| SynthError(e.to_string()))?;
        if self.background_hourly.len() != 24 || self.background_hourly.iter().any(|&v| !(v >= 0.0))
        {
            return bad("background_hourly needs 24 non-negative values".into());
        }
        if self.hotspots.is_empty() && self.background_fraction < 1.0 {
            return bad("at least one hotspot is required".into());
        }
        for (i, h) in self.hotspots.iter().enumerate() {
            if !h.center.is_valid() || !(h.spread_m > 0.0) || !(h.weight >= 0.0) {
                return bad(format!(
                    "hotspot {i} has an invalid centre, spread or weight"
                ));
            }
            if h.hourly.len() != 24 || h.weekday.len() != 7 {
                return bad(format!("hotspot {i} needs 24 hourly and 7 weekday values"));
            }
            if h.hourly.iter().chain(&h.weekday).any(|&v| !(v >= 0.0)) {
                return bad(format!("hotspot {i} has a negative intensity"));
            }
        }
        if self.hotspot_norm() <= 0.0 && self.background_fraction < 1.0 {
            return bad("hotspot intensities are all zero".into());
        }
        let end = self.end_date();
        for a in &self.anomalies {
            if a.date < self.start_date || a.date > end {
                return bad(format!("anomaly date {} outside the period", a.date));
            }
            if !(a.magnitude.is_finite() && a.magnitude >= 0.0) {
                return bad(format!("anomaly on {} has a negative magnitude", a.date));
            }
            if a.start_minute >= a.end_minute || a.end_minute > 24 * 60 {
                return bad(format!("anomaly on {} has an empty minute range", a.date));
            }
            if a.hotspot.is_some_and(|h| h >= self.hotspots.len()) {
                return bad(format!("anomaly on {} targets a missing hotspot", a.date));
            }
        }
        Ok(())
    }

    /// Weekly mean of the summed daily hotspot intensity.
    fn hotspot_norm(&self) -> f64 {
        (0..7)
            .map(|w| {
                self.hotspots
                    .iter()
                    .map(|h| h.weight * h.weekday[w] * mean(&h.hourly))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 7.0
    }

    pub fn special_days(&self) -> SpecialDaySet {
        SpecialDaySet::new(
            self.anomalies
                .iter()
                .map(|a| SpecialDay {
                    date: a.date,
                    label: a.label.clone().unwrap_or_else(|| a.kind.to_string()),
                })
                .collect(),
        )
    }

    /// Expected posts in one tick before anomalies: one rate per hotspot,
    /// then the background.
    fn base_rates(&self, weekday: u8, hour: usize) -> Vec<f64> {
        let per_tick = self.posts_per_day / f64::from(TICKS_PER_DAY);
        let norm = self.hotspot_norm();
        let mut rates: Vec<f64> = self
            .hotspots
            .iter()
            .map(|h| {
                if norm <= 0.0 {
                    0.0
                } else {
                    per_tick
                        * (1.0 - self.background_fraction)
                        * h.weight
                        * h.weekday[weekday as usize]
                        * h.hourly[hour]
                        / norm
                }
            })
            .collect();
        let bg_mean = mean(&self.background_hourly);
        rates.push(if bg_mean > 0.0 {
            per_tick * self.background_fraction * self.background_hourly[hour] / bg_mean
        } else {
            0.0
        });
        rates
    }

    /// Expected post count for one local date, anomalies included.
    pub fn expected_posts(&self, date: NaiveDate) -> f64 {
        (0..TICKS_PER_DAY)
            .map(|t| self.tick_plan(date, t).iter().map(|s| s.rate).sum::<f64>())
            .sum()
    }

    fn tick_plan(&self, date: NaiveDate, tick: u32) -> Vec<Source> {
        let minute = tick * TICK_MINUTES;
        let hour = (minute / 60) as usize;
        let rates = self.base_rates(weekday_index(date), hour);
        let active: Vec<&Anomaly> = self
            .anomalies
            .iter()
            .filter(|a| a.covers(date, minute))
            .collect();
        rates
            .into_iter()
            .enumerate()
            .map(|(i, mut rate)| {
                let hotspot = (i < self.hotspots.len()).then_some(i);
                let (mut east, mut north) = match hotspot {
                    Some(h) => self.region.to_local(self.hotspots[h].center),
                    None => (0.0, 0.0),
                };
                for a in active.iter().filter(|a| a.targets(hotspot)) {
                    match a.kind {
                        AnomalyKind::CrowdSurge | AnomalyKind::CrowdAbsence => rate *= a.magnitude,
                        AnomalyKind::HotspotShift if hotspot.is_some() => {
                            let b = a.bearing_deg.to_radians();
                            east += a.magnitude * b.sin();
                            north += a.magnitude * b.cos();
                        }
                        AnomalyKind::HotspotShift => {}
                    }
                }
                Source {
                    rate,
                    east,
                    north,
                    spread: hotspot.map(|h| self.hotspots[h].spread_m),
                }
            })
            .collect()
    }

    /// Four hotspots around Times Square, two of them dominant, over 26
    /// weeks from Monday 2015-08-24 with eight planted anomaly days after
    /// the first four weeks.
    pub fn nyc_like(seed: u64) -> Scenario {
        let start = date(2015, 8, 24);
        let at = |offset: u64| start + Days::new(offset);
        let anomalies = vec![
            shift(at(38), 1, 1500.0, 90.0, 10 * 60, 22 * 60, "parade re-route"),
            surge(at(52), 2, 12.0, 17 * 60, 23 * 60, "stadium concert"),
            absence(at(66), None, 0.1, 0, 24 * 60, "snowstorm"),
            surge(at(81), 3, 12.0, 8 * 60, 20 * 60, "street fair"),
            shift(at(95), 0, 1500.0, 180.0, 9 * 60, 21 * 60, "square closure"),
            absence(at(110), Some(0), 0.05, 6 * 60, 24 * 60, "transit strike"),
            surge(at(131), 2, 12.0, 10 * 60, 22 * 60, "holiday market"),
            absence(at(159), None, 0.06, 0, 24 * 60, "blizzard"),
        ];
        Scenario {
            seed,
            start_date: start,
            days: 26 * 7,
            posts_per_day: 22_800.0,
            utc_offset_min: DEFAULT_UTC_OFFSET_MIN,
            region: Region::default(),
            background_fraction: 0.3,
            background_hourly: city_hours(),
            hotspots: nyc_hotspots(),
            anomalies,
        }
    }

    /// A 190-day calendar from 2015-08-23 that replays the New York
    /// holiday list, each holiday planted as a modest anomaly.
    pub fn new_york_calendar(seed: u64) -> Scenario {
        let mut anomalies = vec![
            absence(date(2015, 9, 7), Some(0), 0.6, 9 * 60, 20 * 60, "Labor Day"),
            surge(date(2015, 10, 12), 3, 4.0, 10 * 60, 15 * 60, "Columbus Day"),
            surge(date(2015, 10, 31), 1, 2.5, 18 * 60, 24 * 60, "Halloween"),
            surge(date(2015, 11, 11), 3, 3.0, 10 * 60, 14 * 60, "Veterans Day"),
            surge(
                date(2015, 11, 26),
                2,
                5.0,
                8 * 60,
                13 * 60,
                "Thanksgiving Day",
            ),
            absence(
                date(2015, 12, 24),
                None,
                0.6,
                14 * 60,
                24 * 60,
                "Christmas' Eve",
            ),
            absence(date(2015, 12, 25), None, 0.5, 0, 24 * 60, "Christmas"),
            surge(
                date(2015, 12, 31),
                0,
                3.0,
                18 * 60,
                24 * 60,
                "New Year's Eve",
            ),
            absence(date(2016, 1, 1), None, 0.5, 0, 12 * 60, "New Year"),
        ];
        for day in 21..=24 {
            anomalies.push(absence(
                date(2016, 1, day),
                None,
                0.3,
                0,
                24 * 60,
                "Jonas' Storm",
            ));
        }
        Scenario {
            start_date: date(2015, 8, 23),
            days: 190,
            anomalies,
            ..Scenario::nyc_like(seed)
        }
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn surge(
    d: NaiveDate,
    hotspot: usize,
    magnitude: f64,
    start: u32,
    end: u32,
    label: &str,
) -> Anomaly {
    Anomaly {
        date: d,
        kind: AnomalyKind::CrowdSurge,
        magnitude,
        start_minute: start,
        end_minute: end,
        hotspot: Some(hotspot),
        bearing_deg: 0.0,
        label: Some(label.into()),
    }
}

fn absence(
    d: NaiveDate,
    hotspot: Option<usize>,
    magnitude: f64,
    start: u32,
    end: u32,
    label: &str,
) -> Anomaly {
    Anomaly {
        kind: AnomalyKind::CrowdAbsence,
        hotspot,
        ..surge(d, 0, magnitude, start, end, label)
    }
}

fn shift(
    d: NaiveDate,
    hotspot: usize,
    metres: f64,
    bearing: f64,
    start: u32,
    end: u32,
    label: &str,
) -> Anomaly {
    Anomaly {
        kind: AnomalyKind::HotspotShift,
        bearing_deg: bearing,
        ..surge(d, hotspot, metres, start, end, label)
    }
}

/// Quiet nights, busy afternoons and evenings.
fn city_hours() -> Vec<f64> {
    vec![
        0.45, 0.35, 0.3, 0.25, 0.25, 0.3, 0.45, 0.7, 0.9, 1.0, 1.1, 1.2, //
        1.3, 1.3, 1.3, 1.3, 1.35, 1.4, 1.5, 1.5, 1.4, 1.2, 0.9, 0.65,
    ]
}

fn nyc_hotspots() -> Vec<Hotspot> {
    let region = Region::default();
    let cell = region.side_m / 7.0;
    let at = |e: f64, n: f64| region.from_local(e * cell, n * cell);
    let hours = city_hours();
    let weekend_heavy = vec![1.0, 1.0, 1.0, 1.0, 1.05, 1.15, 1.1];
    vec![
        Hotspot {
            center: at(0.0, 0.0),
            spread_m: 140.0,
            weight: 0.42,
            hourly: hours.clone(),
            weekday: flat_week(),
        },
        Hotspot {
            center: at(-2.0, 2.0),
            spread_m: 140.0,
            weight: 0.27,
            hourly: hours.clone(),
            weekday: weekend_heavy,
        },
        Hotspot {
            center: at(2.0, -2.0),
            spread_m: 160.0,
            weight: 0.05,
            hourly: hours.clone(),
            weekday: flat_week(),
        },
        Hotspot {
            center: at(-2.0, -2.0),
            spread_m: 160.0,
            weight: 0.05,
            hourly: hours,
            weekday: flat_week(),
        },
    ]
}

#[derive(Debug, Clone, Copy)]
struct Source {
    rate: f64,
    east: f64,
    north: f64,
    /// `None` for the uniform background.
    spread: Option<f64>,
}

/// Lazily generated posts in tick order, ascending time within a tick.
pub struct PostStream {
    scenario: Scenario,
    rng: ChaCha8Rng,
    day: u32,
    tick: u32,
    pending: VecDeque<PostRecord>,
}

impl PostStream {
    fn fill_tick(&mut self) {
        let s = &self.scenario;
        let date = s.start_date + Days::new(u64::from(self.day));
        let minute = self.tick * TICK_MINUTES;
        let base_ts = local_to_utc(date, minute, s.utc_offset_min);
        let mut posts = Vec::new();
        for src in s.tick_plan(date, self.tick) {
            let n = if src.rate > 0.0 {
                Poisson::new(src.rate)
                    .expect("positive rate")
                    .sample(&mut self.rng) as u64
            } else {
                0
            };
            for _ in 0..n {
                let ts = base_ts + self.rng.random_range(0..i64::from(TICK_MINUTES) * 60);
                let (east, north) = match src.spread {
                    Some(sd) => {
                        let g = Normal::new(0.0, sd).expect("finite spread");
                        (
                            src.east + g.sample(&mut self.rng),
                            src.north + g.sample(&mut self.rng),
                        )
                    }
                    None => {
                        let r = s.region.radius_m * self.rng.random::<f64>().sqrt();
                        let theta = 2.0 * PI * self.rng.random::<f64>();
                        (r * theta.cos(), r * theta.sin())
                    }
                };
                let p = s.region.from_local(east, north);
                posts.push(PostRecord {
                    ts,
                    loc: GeoPoint {
                        lat: round6(p.lat),
                        lon: round6(p.lon),
                    },
                    id: None,
                });
            }
        }
        posts.sort_by_key(|p| p.ts);
        self.pending.extend(posts);
        self.tick += 1;
        if self.tick == TICKS_PER_DAY {
            self.tick = 0;
            self.day += 1;
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl Iterator for PostStream {
    type Item = PostRecord;

    fn next(&mut self) -> Option<PostRecord> {
        while self.pending.is_empty() {
            if self.day >= self.scenario.days {
                return None;
            }
            self.fill_tick();
        }
        self.pending.pop_front()
    }
}

/// Validates the scenario and returns the post stream with its labels.
pub fn generate(scenario: &Scenario) -> Result<(PostStream, SpecialDaySet), SynthError> {
    scenario.validate()?;
    let stream = PostStream {
        scenario: scenario.clone(),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        day: 0,
        tick: 0,
        pending: VecDeque::new(),
    };
    Ok((stream, scenario.special_days()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{dbscan, top_clusters, DbscanParams};
    use crate::geo::haversine_distance;
    use crate::ingest::local_date_minute;
    use std::collections::BTreeMap;

    fn small(seed: u64) -> Scenario {
        Scenario {
            days: 21,
            posts_per_day: 2_000.0,
            anomalies: Vec::new(),
            ..Scenario::nyc_like(seed)
        }
    }

    fn daily_counts(s: &Scenario) -> BTreeMap<NaiveDate, usize> {
        let (stream, _) = generate(s).unwrap();
        let mut out = BTreeMap::new();
        for p in stream {
            *out.entry(local_date_minute(p.ts, s.utc_offset_min).0)
                .or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn no_anomalies_no_labels() {
        let (_, labels) = generate(&small(1)).unwrap();
        assert!(labels.is_empty());
        assert_eq!(Scenario::nyc_like(1).special_days().len(), 8);
        assert_eq!(Scenario::new_york_calendar(1).special_days().len(), 13);
    }

    #[test]
    fn same_seed_same_trace() {
        let a: Vec<PostRecord> = generate(&small(5)).unwrap().0.collect();
        let b: Vec<PostRecord> = generate(&small(5)).unwrap().0.collect();
        let c: Vec<PostRecord> = generate(&small(6)).unwrap().0.take(100).collect();
        assert_eq!(a, b);
        assert_ne!(a[..100], c[..]);
    }

    #[test]
    fn stream_is_time_ordered_and_on_the_calendar() {
        let s = small(2);
        let posts: Vec<PostRecord> = generate(&s).unwrap().0.collect();
        assert!(posts.windows(2).all(|w| w[0].ts <= w[1].ts));
        let first = local_date_minute(posts[0].ts, s.utc_offset_min).0;
        let last = local_date_minute(posts.last().unwrap().ts, s.utc_offset_min).0;
        assert_eq!((first, last), (s.start_date, s.end_date()));
        assert!(posts
            .iter()
            .all(|p| s.region.contains(p.loc)
                || haversine_distance(p.loc, s.region.center) < 5_100.0));
    }

    #[test]
    fn full_calendar_total_matches_the_target() {
        let s = Scenario {
            anomalies: Vec::new(),
            ..Scenario::new_york_calendar(3)
        };
        let n = generate(&s).unwrap().0.count() as f64;
        let target = 22_800.0 * 190.0;
        assert!((n - target).abs() / target < 0.02, "n={n}");
    }

    #[test]
    fn absence_scales_the_day() {
        let mut s = small(4);
        let d = s.start_date + Days::new(14);
        s.anomalies.push(absence(d, None, 0.1, 0, 24 * 60, "quiet"));
        let counts = daily_counts(&s);
        let normal = (counts[&(d - Days::new(7))] + counts[&(d - Days::new(14))]) as f64 / 2.0;
        let ratio = counts[&d] as f64 / normal;
        assert!((ratio - 0.1).abs() < 0.02, "ratio={ratio}");
    }

    #[test]
    fn same_weekday_counts_are_stable() {
        let s = Scenario {
            days: 10 * 7,
            posts_per_day: 5_000.0,
            anomalies: Vec::new(),
            ..Scenario::nyc_like(9)
        };
        let counts = daily_counts(&s);
        for wd in 0..7u8 {
            let v: Vec<f64> = counts
                .iter()
                .filter(|(d, _)| weekday_index(**d) == wd)
                .map(|(_, &c)| c as f64)
                .collect();
            let m = mean(&v);
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
            assert!(sd / m < 0.10, "weekday {wd}: cv={}", sd / m);
        }
    }

    #[test]
    fn shift_moves_the_dominant_cluster() {
        let region = Region::default();
        let centre = region.from_local(0.0, 0.0);
        let spread = 100.0;
        let d = date(2016, 3, 1);
        let s = Scenario {
            seed: 11,
            start_date: d,
            days: 1,
            posts_per_day: 96.0 * 300.0,
            utc_offset_min: 0,
            region,
            background_fraction: 0.0,
            background_hourly: flat_hours(),
            hotspots: vec![Hotspot {
                center: centre,
                spread_m: spread,
                weight: 1.0,
                hourly: flat_hours(),
                weekday: flat_week(),
            }],
            anomalies: vec![shift(d, 0, 800.0, 45.0, 60, 75, "moved")],
        };
        let slot: Vec<GeoPoint> = generate(&s)
            .unwrap()
            .0
            .filter(|p| local_date_minute(p.ts, 0).1 / 15 == 4)
            .map(|p| p.loc)
            .collect();
        let db = dbscan(&slot, &DbscanParams::default()).unwrap();
        let top = top_clusters(&db, 1)[0];
        let n = db.clusters[top].len() as f64;
        let expected = region.from_local(
            800.0 * 45f64.to_radians().sin(),
            800.0 * 45f64.to_radians().cos(),
        );
        let err = haversine_distance(db.centroids[top], expected);
        assert!(err < 3.0 * spread / n.sqrt(), "err={err} n={n}");
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = small(1);
        s.anomalies
            .push(absence(date(2030, 1, 1), None, 0.5, 0, 60, "late"));
        assert!(generate(&s).is_err());
        let mut s = small(1);
        s.hotspots[0].weight = -1.0;
        assert!(s.validate().is_err());
        let s: Scenario = serde_json::from_str(
            r#"{"seed":1,"start_date":"2015-08-24","days":7,"posts_per_day":100,
                "hotspots":[{"center":{"lat":40.75,"lon":-73.98},"spread_m":100,"weight":1}]}"#,
        )
        .unwrap();
        assert!(s.validate().is_ok());
        assert!(s.special_days().is_empty());
    }
}
