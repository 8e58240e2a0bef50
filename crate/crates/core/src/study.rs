//! Evaluation harnesses: the representative-selection comparison and the
//! parameter sweep over slot length, grid size, window and estimator.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    dbscan, hybrid_clustering, kmeans, silhouette_with, top_clusters, Clustering, DbscanParams,
    DistanceMatrix, KmeansParams,
};
use crate::detect::SpecialDaySet;
use crate::entropy::Estimator;
use crate::geo::GeoPoint;
use crate::ingest::{csv_err, weekday_index, Buckets, Period, PostRecord};
use crate::pipeline::{self, PipelineConfig, PipelineError};

/// K-means from `k` distinct points drawn with `rng`.
pub fn random_kmeans(points: &[GeoPoint], k: usize, rng: &mut ChaCha8Rng) -> Option<Clustering> {
    if points.len() < k {
        return None;
    }
    let seeds: Vec<GeoPoint> = sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i])
        .collect();
    kmeans(points, &seeds, &KmeansParams::default())
        .ok()
        .map(|r| r.clustering)
}

/// Partition induced by the `k` most populated DBSCAN clusters. Every
/// other point (noise and the smaller clusters) is pooled into one extra
/// group, so that all three options are scored over the same points.
pub fn dbscan_partition(
    points: &[GeoPoint],
    k: usize,
    params: &DbscanParams,
) -> Option<Clustering> {
    let db = dbscan(points, params).ok()?;
    if db.n_clusters() < k {
        return None;
    }
    let top = top_clusters(&db, k);
    let mut relabel = vec![k; db.n_clusters()];
    for (new, &old) in top.iter().enumerate() {
        relabel[old] = new;
    }
    let labels: Vec<Option<usize>> = db
        .labels
        .iter()
        .map(|l| Some(l.map_or(k, |c| relabel[c])))
        .collect();
    let groups = if labels.contains(&Some(k)) { k + 1 } else { k };
    Some(Clustering::from_labels(points, labels, groups))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionsConfig {
    /// Monday = 0.
    pub weekday: u8,
    pub k: usize,
    pub dbscan: DbscanParams,
    /// Seeded repetitions of the random and hybrid options.
    pub runs: usize,
    pub seed: u64,
    /// Use at most this many dates of the chosen weekday.
    pub max_dates: Option<usize>,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig {
            weekday: 5,
            k: 2,
            dbscan: DbscanParams::default(),
            runs: 5,
            seed: 42,
            max_dates: Some(8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotComparison {
    pub slot_index: u32,
    /// Dates where every option produced a partition.
    pub dates: usize,
    /// Mean silhouette per seeded K-means run.
    pub kmeans_runs: Vec<f64>,
    pub kmeans_mean: f64,
    pub dbscan: f64,
    /// Mean silhouette per hybrid re-run.
    pub hybrid_runs: Vec<f64>,
    pub hybrid: f64,
}

impl SlotComparison {
    pub fn dbscan_lowest(&self) -> bool {
        self.dbscan < self.kmeans_mean && self.dbscan < self.hybrid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsStudy {
    pub config: OptionsConfig,
    pub slot_minutes: u32,
    pub slots: Vec<SlotComparison>,
    /// Share of compared slots where DBSCAN alone scores below both others.
    pub dbscan_lowest_fraction: f64,
    /// Every hybrid re-run reproduced the same labels.
    pub hybrid_deterministic: bool,
    /// Some seeded K-means runs disagreed on labels.
    pub kmeans_varies: bool,
}

/// Silhouette comparison of the three options over every slot index of
/// the chosen weekday, averaged over its dates.
pub fn compare_options(buckets: &Buckets, cfg: &OptionsConfig) -> OptionsStudy {
    let mut dates: Vec<NaiveDate> = buckets
        .slots
        .keys()
        .map(|k| k.0)
        .filter(|d| weekday_index(*d) == cfg.weekday)
        .collect();
    dates.dedup();
    if let Some(m) = cfg.max_dates {
        dates.truncate(m);
    }
    let runs = cfg.runs.max(1);
    let mut rngs: Vec<ChaCha8Rng> = (0..runs as u64)
        .map(|r| ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r)))
        .collect();
    let mut hybrid_deterministic = true;
    let mut kmeans_varies = false;
    // slot -> accumulated (kmeans per run, dbscan, hybrid per run, count)
    let mut acc: BTreeMap<u32, (Vec<f64>, f64, Vec<f64>, usize)> = BTreeMap::new();

    for (&(date, slot), b) in &buckets.slots {
        if !dates.contains(&date) {
            continue;
        }
        let points = b.locations();
        let Some(db) = dbscan_partition(&points, cfg.k, &cfg.dbscan) else {
            continue;
        };
        let matrix = DistanceMatrix::new(&points);
        let score = |c: &Clustering| {
            silhouette_with(c, |i, j| matrix.get(i, j))
                .ok()
                .map(|s| s.mean)
        };

        let mut km_scores = Vec::with_capacity(runs);
        let mut km_labels: Vec<Vec<Option<usize>>> = Vec::with_capacity(runs);
        for rng in rngs.iter_mut() {
            let c = random_kmeans(&points, cfg.k, rng);
            km_scores.push(c.as_ref().and_then(&score));
            km_labels.push(c.map(|c| c.labels).unwrap_or_default());
        }
        let mut hy_scores = Vec::with_capacity(runs);
        let mut hy_labels: Vec<Vec<Option<usize>>> = Vec::with_capacity(runs);
        for _ in 0..runs {
            let c = hybrid_clustering(&points, cfg.k, &cfg.dbscan, &KmeansParams::default())
                .ok()
                .map(|r| r.clustering);
            hy_scores.push(c.as_ref().and_then(&score));
            hy_labels.push(c.map(|c| c.labels).unwrap_or_default());
        }
        if hy_labels.windows(2).any(|w| w[0] != w[1]) || hy_scores.windows(2).any(|w| w[0] != w[1])
        {
            hybrid_deterministic = false;
        }
        if km_labels.windows(2).any(|w| w[0] != w[1]) {
            kmeans_varies = true;
        }
        let (Some(d), Some(km), Some(hy)) = (
            score(&db),
            km_scores.iter().copied().collect::<Option<Vec<f64>>>(),
            hy_scores.iter().copied().collect::<Option<Vec<f64>>>(),
        ) else {
            continue;
        };
        let e = acc
            .entry(slot)
            .or_insert_with(|| (vec![0.0; runs], 0.0, vec![0.0; runs], 0));
        for r in 0..runs {
            e.0[r] += km[r];
            e.2[r] += hy[r];
        }
        e.1 += d;
        e.3 += 1;
    }

    let slots: Vec<SlotComparison> = acc
        .into_iter()
        .map(|(slot_index, (km, d, hy, n))| {
            let n = n as f64;
            let kmeans_runs: Vec<f64> = km.iter().map(|v| v / n).collect();
            let hybrid_runs: Vec<f64> = hy.iter().map(|v| v / n).collect();
            SlotComparison {
                slot_index,
                dates: n as usize,
                kmeans_mean: kmeans_runs.iter().sum::<f64>() / runs as f64,
                kmeans_runs,
                dbscan: d / n,
                hybrid: hybrid_runs[0],
                hybrid_runs,
            }
        })
        .collect();
    let lowest = slots.iter().filter(|s| s.dbscan_lowest()).count();
    OptionsStudy {
        config: *cfg,
        slot_minutes: buckets
            .slots
            .values()
            .next()
            .map_or(0, |b| b.key.slot_minutes),
        dbscan_lowest_fraction: if slots.is_empty() {
            0.0
        } else {
            lowest as f64 / slots.len() as f64
        },
        slots,
        hybrid_deterministic,
        kmeans_varies,
    }
}

pub fn write_options_csv<W: Write>(writer: W, study: &OptionsStudy) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "slot_index",
        "dates",
        "kmeans_mean",
        "kmeans_min",
        "kmeans_max",
        "dbscan",
        "hybrid",
    ])
    .map_err(csv_err)?;
    for s in &study.slots {
        let min = s.kmeans_runs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = s
            .kmeans_runs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        w.write_record([
            s.slot_index.to_string(),
            s.dates.to_string(),
            s.kmeans_mean.to_string(),
            min.to_string(),
            max.to_string(),
            s.dbscan.to_string(),
            s.hybrid.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_SLOT_MINUTES: [u32; 2] = [15, 30];
pub const SWEEP_GRIDS: [u32; 2] = [5, 7];
pub const SWEEP_WINDOWS: [u32; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub slot_minutes: u32,
    pub cells_per_side: u32,
    pub window_weeks: u32,
    pub estimator: Estimator,
    pub days_ranked: usize,
    pub specials_scored: usize,
    pub detection_at_10: f64,
    pub detection_at_20: f64,
    pub fpr_at_20: f64,
    /// Mean detection rate over all prefixes.
    pub detection_area: f64,
    pub curves_file: String,
}

pub fn curves_file_name(slot_minutes: u32, cells: u32, window: u32, est: Estimator) -> String {
    format!(
        "curves_s{slot_minutes}_L{cells}_W{window}_{}.csv",
        est.name()
    )
}

/// Runs every combination of the sweep axes over shared posts. The
/// expensive representative stage runs once per slot length. When
/// `out_dir` is given, each combination's curves go to their own CSV.
pub fn sweep(
    posts: &[PostRecord],
    period: Period,
    specials: &SpecialDaySet,
    base: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut rows = Vec::new();
    for slot_minutes in SWEEP_SLOT_MINUTES {
        let cfg = PipelineConfig {
            slot_minutes,
            ..base.clone()
        };
        cfg.validate()?;
        let buckets = pipeline::bucket_posts(posts.iter().cloned(), period, &cfg)?;
        let (reps, stats) = pipeline::represent(&buckets, &period, &cfg);
        drop(buckets);
        for cells_per_side in SWEEP_GRIDS {
            for window in SWEEP_WINDOWS {
                for estimator in Estimator::ALL {
                    let cfg = PipelineConfig {
                        cells_per_side,
                        window_weeks: Some(window),
                        estimator,
                        ..cfg.clone()
                    };
                    let run = pipeline::run_from_reps(&reps, period, stats, &cfg)?;
                    let eval = pipeline::evaluate_ranking(&run.ranking, specials)?;
                    let curves = &eval.curves;
                    let name = curves_file_name(slot_minutes, cells_per_side, window, estimator);
                    if let Some(dir) = out_dir {
                        let mut w = pipeline::create(&dir.join(&name))?;
                        curves.write_csv(&mut w)?;
                        w.flush()?;
                    }
                    let at = |f: f64| curves.at_fraction(f).copied().unwrap_or(curves.points[0]);
                    rows.push(SweepRow {
                        slot_minutes,
                        cells_per_side,
                        window_weeks: window,
                        estimator,
                        days_ranked: curves.total_days,
                        specials_scored: curves.special_days,
                        detection_at_10: at(0.1).detection_rate,
                        detection_at_20: at(0.2).detection_rate,
                        fpr_at_20: at(0.2).false_positive_rate,
                        detection_area: curves.points.iter().map(|p| p.detection_rate).sum::<f64>()
                            / curves.points.len() as f64,
                        curves_file: name,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
