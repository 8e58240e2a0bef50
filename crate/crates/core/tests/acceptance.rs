//! Acceptance criteria, one PASS/FAIL line each. Every criterion runs even
//! when an earlier one fails; the test fails if any of them did.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdsense_core::clustering::reference::{dbscan_naive, silhouette_naive};
use crowdsense_core::clustering::{dbscan, silhouette, DbscanParams};
use crowdsense_core::detect::SpecialDaySet;
use crowdsense_core::entropy::grassberger::lambdas;
use crowdsense_core::entropy::window::WindowedShannon;
use crowdsense_core::entropy::{self, trace_cumulative, trace_windowed, Estimator};
use crowdsense_core::geo::{haversine_distance, GeoPoint, Region};
use crowdsense_core::ingest::{
    load_posts, write_posts_csv, FieldMap, Period, PostFormat, PostRecord,
};
use crowdsense_core::pipeline::{self, PipelineConfig};
use crowdsense_core::study::{compare_options, OptionsConfig};
use crowdsense_core::synthgen::{generate, Scenario};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// Brute-force oracles, written from the definitions.

fn shannon_bf(seq: &[u32]) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    let n = seq.len() as f64;
    let mut h = 0.0;
    for run in sorted.chunk_by(|a, b| a == b) {
        let p = run.len() as f64 / n;
        h -= p * p.log2();
    }
    h
}

fn hartley_bf(seq: &[u32]) -> f64 {
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        0.0
    } else {
        (sorted.len() as f64).log2()
    }
}

fn occurs_in(needle: &[u32], hay: &[u32]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// `Λ` for positions `2..=N` by direct substring search.
fn lambdas_bf(seq: &[u32]) -> Vec<usize> {
    let n = seq.len();
    (1..n)
        .map(|p| {
            let prefix = &seq[..p];
            (1..=n - p)
                .find(|&l| !occurs_in(&seq[p..p + l], prefix))
                .unwrap_or(n - p + 1)
        })
        .collect()
}

fn grassberger_bf(seq: &[u32]) -> f64 {
    let n = seq.len();
    let sum: f64 = lambdas_bf(seq)
        .iter()
        .enumerate()
        .map(|(k, &l)| l as f64 / ((k + 2) as f64).log2())
        .sum();
    n as f64 / sum
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut worst_gr = 0.0f64;
    let mut lambda_mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=1000usize);
        let alphabet = rng.random_range(2..=50u32);
        let seq: Vec<u32> = (0..n).map(|_| rng.random_range(0..alphabet)).collect();
        let window = rng.random_range(1..=n);

        worst = worst.max((entropy::shannon(&seq).unwrap() - shannon_bf(&seq)).abs());
        worst = worst.max((entropy::hartley(&seq).unwrap() - hartley_bf(&seq)).abs());
        for (est, bf) in [
            (Estimator::Shannon, shannon_bf as fn(&[u32]) -> f64),
            (Estimator::Hartley, hartley_bf),
        ] {
            let windowed = trace_windowed(&seq, window, est);
            let cumulative = trace_cumulative(&seq, est);
            for t in 0..n {
                let lo = (t + 1).saturating_sub(window);
                worst = worst.max((windowed[t] - bf(&seq[lo..=t])).abs());
                worst = worst.max((cumulative[t] - bf(&seq[..=t])).abs());
            }
        }
        if n >= 2 {
            if lambdas(&seq) != lambdas_bf(&seq) {
                lambda_mismatches += 1;
            }
            worst_gr =
                worst_gr.max((entropy::grassberger(&seq).unwrap() - grassberger_bf(&seq)).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && lambda_mismatches == 0 && worst_gr <= 1e-12 && elapsed < Duration::from_secs(30),
        format!(
            "1000 sequences: max |dH| {worst:.2e} bits, {lambda_mismatches} match-length mismatches, \
             max |dH_R| {worst_gr:.2e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn offset(base: GeoPoint, east_m: f64, north_m: f64) -> GeoPoint {
    let lat = base.lat + north_m / 111_320.0;
    let lon = base.lon + east_m / (111_320.0 * base.lat.to_radians().cos());
    GeoPoint::new(lat, lon).unwrap()
}

fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

fn instance(kind: usize, rng: &mut ChaCha8Rng) -> Vec<GeoPoint> {
    let base = GeoPoint::new(40.758, -73.9855).unwrap();
    let n = rng.random_range(1..=500usize);
    match kind {
        // Gaussian-ish blobs
        0 => {
            let blobs: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=5))
                .map(|_| {
                    (
                        rng.random_range(-2000.0..2000.0),
                        rng.random_range(-2000.0..2000.0),
                        rng.random_range(30.0..300.0),
                    )
                })
                .collect();
            (0..n)
                .map(|_| {
                    let (x, y, s) = blobs[rng.random_range(0..blobs.len())];
                    let dx: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * s;
                    let dy: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * s;
                    offset(base, x + dx, y + dy)
                })
                .collect()
        }
        // Sparse uniform scatter
        1 => (0..n)
            .map(|_| {
                offset(
                    base,
                    rng.random_range(-5000.0..5000.0),
                    rng.random_range(-5000.0..5000.0),
                )
            })
            .collect(),
        // All coincident
        2 => vec![base; n],
        // All isolated: 1 km lattice
        3 => (0..n)
            .map(|i| offset(base, (i % 25) as f64 * 1000.0, (i / 25) as f64 * 1000.0))
            .collect(),
        // Snapped to a coarse lattice, so many exact duplicates and distance ties
        _ => (0..n)
            .map(|_| {
                offset(
                    base,
                    rng.random_range(-8..8) as f64 * 100.0,
                    rng.random_range(-8..8) as f64 * 100.0,
                )
            })
            .collect(),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut label_mismatches = 0;
    let mut sil_mismatches = 0;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let points = instance(i % 5, &mut rng);
        let params =
            DbscanParams::new(rng.random_range(50.0..400.0), rng.random_range(1..=15)).unwrap();
        let fast = dbscan(&points, &params).unwrap();
        let naive = dbscan_naive(&points, &params);
        if canonical(&fast.labels) != canonical(&naive) {
            label_mismatches += 1;
            continue;
        }
        match (
            silhouette(&points, &fast),
            silhouette_naive(&points, &naive),
        ) {
            (Ok(s), Some(r)) => worst = worst.max((s.mean - r).abs()),
            (Err(_), None) => {}
            _ => sil_mismatches += 1,
        }
    }
    let elapsed = start.elapsed();
    outcome(
        label_mismatches == 0 && sil_mismatches == 0 && worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "200 instances: {label_mismatches} label mismatches, {sil_mismatches} silhouette definedness \
             mismatches, max |ds| {worst:.2e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn scenario_posts(sc: &Scenario) -> (Vec<PostRecord>, SpecialDaySet, Period) {
    let (stream, specials) = generate(sc).unwrap();
    let period = Period::new(sc.start_date, sc.end_date()).unwrap();
    (stream.collect(), specials, period)
}

fn default_config(sc: &Scenario) -> PipelineConfig {
    PipelineConfig {
        region: sc.region,
        utc_offset_min: sc.utc_offset_min,
        ..PipelineConfig::default()
    }
}

fn criterion_3(posts: &[PostRecord], period: Period, base: &PipelineConfig) -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig {
        slot_minutes: 30,
        ..base.clone()
    };
    let buckets = pipeline::bucket_posts(posts.iter().cloned(), period, &cfg).unwrap();
    let study = compare_options(&buckets, &OptionsConfig::default());
    outcome(
        study.dbscan_lowest_fraction >= 0.8 && study.hybrid_deterministic && study.kmeans_varies,
        format!(
            "DBSCAN-only lowest on {:.1}% of {} slots, hybrid deterministic: {}, seeded k-means varies: {}, {:.1} s",
            study.dbscan_lowest_fraction * 100.0,
            study.slots.len(),
            study.hybrid_deterministic,
            study.kmeans_varies,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let slots = 96;
    let w = 4 * slots;
    let switch = 8 * slots;
    let weeks = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seq: Vec<u32> = (0..weeks * slots)
        .map(|t| {
            if t < switch {
                rng.random_range(0..6)
            } else {
                rng.random_range(10..49)
            }
        })
        .collect();
    let windowed = trace_windowed(&seq, w, Estimator::Shannon);
    let cumulative = trace_cumulative(&seq, Estimator::Shannon);
    let mut worst = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for t in switch + w - 1..seq.len() {
        let batch = shannon_bf(&seq[t + 1 - w..=t]);
        worst = worst.max((windowed[t] - batch).abs());
        min_gap = min_gap.min((cumulative[t] - batch).abs());
    }
    outcome(
        worst <= 1e-10 && min_gap > 0.05,
        format!("windowed vs batch max |dH| {worst:.2e} bits; cumulative gap at least {min_gap:.3} bits"),
    )
}

fn criterion_5(
    posts: &[PostRecord],
    specials: &SpecialDaySet,
    period: Period,
    cfg: &PipelineConfig,
) -> Outcome {
    let start = Instant::now();
    let run = pipeline::run_in_memory(posts.iter().cloned(), period, cfg).unwrap();
    let eval = pipeline::evaluate_ranking(&run.ranking, specials).unwrap();
    let elapsed = start.elapsed();
    let curves = &eval.curves;
    let cut = curves.at_fraction(0.2).unwrap();
    let m = (curves.total_days as f64 * 0.2).floor() as usize;
    let found = (cut.detection_rate * curves.special_days as f64).round() as usize;
    outcome(
        found >= 6 && cut.false_positive_rate <= 0.6 && elapsed < Duration::from_secs(120),
        format!(
            "{found} of {} planted days in the top {m} of {} ranked days, false-positive rate {:.3} at that cut, {:.1} s",
            curves.special_days,
            curves.total_days,
            cut.false_positive_rate,
            elapsed.as_secs_f64()
        ),
    )
}

fn uniform_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<GeoPoint> {
    // About ten neighbours per 200 m disc at every n.
    let side = (n as f64 / 80e-6).sqrt();
    let base = GeoPoint::new(40.7, -74.0).unwrap();
    (0..n)
        .map(|_| {
            offset(
                base,
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
            )
        })
        .collect()
}

/// Quadratic DBSCAN without a distance matrix, as a timing baseline at
/// sizes where the matrix would not fit in memory.
fn dbscan_all_pairs(points: &[GeoPoint], params: &DbscanParams) -> Vec<Option<usize>> {
    let n = points.len();
    let mut neigh: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            if haversine_distance(points[i], points[j]) <= params.eps_m {
                neigh[i].push(j);
                neigh[j].push(i);
            }
        }
    }
    let core: Vec<bool> = neigh.iter().map(|v| v.len() >= params.min_points).collect();
    let mut labels = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || labels[s].is_some() {
            continue;
        }
        labels[s] = Some(next);
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            for &q in &neigh[p] {
                if labels[q].is_none() {
                    labels[q] = Some(next);
                    if core[q] {
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    labels
}

fn best_of<T>(runs: usize, mut f: impl FnMut() -> T) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_6a() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let small = uniform_points(20_000, &mut rng);
    let large = uniform_points(40_000, &mut rng);
    let params = DbscanParams::default();
    let fast_small = best_of(3, || dbscan(&small, &params).unwrap());
    let fast_large = best_of(3, || dbscan(&large, &params).unwrap());
    let naive_small = best_of(1, || dbscan_all_pairs(&small, &params));
    let naive_large = best_of(1, || dbscan_all_pairs(&large, &params));
    let fast_ratio = fast_large.as_secs_f64() / fast_small.as_secs_f64();
    let naive_ratio = naive_large.as_secs_f64() / naive_small.as_secs_f64();
    let elapsed = start.elapsed();
    outcome(
        fast_ratio < 3.0 && naive_ratio >= 3.5 && elapsed < Duration::from_secs(300),
        format!(
            "indexed {:.3} s -> {:.3} s ({fast_ratio:.2}x), all-pairs {:.1} s -> {:.1} s ({naive_ratio:.2}x), {:.0} s",
            fast_small.as_secs_f64(),
            fast_large.as_secs_f64(),
            naive_small.as_secs_f64(),
            naive_large.as_secs_f64(),
            elapsed.as_secs_f64()
        ),
    )
}

fn per_symbol_update(capacity: usize, symbols: &[u32]) -> f64 {
    let mut acc = WindowedShannon::new(capacity);
    for &s in symbols.iter().cycle().take(capacity) {
        acc.push(s);
    }
    let t = best_of(3, || {
        let mut sum = 0.0;
        for &s in symbols {
            sum += acc.push(s);
        }
        sum
    });
    t.as_secs_f64() / symbols.len() as f64
}

fn criterion_6b() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let symbols: Vec<u32> = (0..2_000_000).map(|_| rng.random_range(0..49)).collect();
    let short = per_symbol_update(1_000, &symbols);
    let long = per_symbol_update(100_000, &symbols);
    let ratio = long / short;
    let elapsed = start.elapsed();
    outcome(
        ratio <= 3.0 && elapsed < Duration::from_secs(300),
        format!(
            "{:.1} ns per symbol at 10^3, {:.1} ns at 10^5 ({ratio:.2}x), {:.1} s",
            short * 1e9,
            long * 1e9,
            elapsed.as_secs_f64()
        ),
    )
}

/// Generates posts to CSV, reads them back, runs every stage and writes
/// the ranking and curve files into `dir`.
fn full_run(sc: &Scenario, dir: &Path) {
    let posts_path = dir.join("posts.csv");
    let (stream, specials) = generate(sc).unwrap();
    write_posts_csv(pipeline::create(&posts_path).unwrap(), stream).unwrap();
    let loaded = load_posts(&posts_path, PostFormat::Csv, &FieldMap::default()).unwrap();
    fs::remove_file(&posts_path).unwrap();
    let cfg = default_config(sc);
    let period = Period::new(sc.start_date, sc.end_date()).unwrap();
    let run = pipeline::run_in_memory(loaded.posts, period, &cfg).unwrap();
    pipeline::write_ranking_json(&dir.join("ranking.json"), &run.ranking, Some(&specials)).unwrap();
    let eval = pipeline::evaluate_ranking(&run.ranking, &specials).unwrap();
    let mut w = pipeline::create(&dir.join("curves.csv")).unwrap();
    eval.curves.write_csv(&mut w).unwrap();
    std::io::Write::flush(&mut w).unwrap();
}

fn criterion_7(sc: &Scenario) -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_run(sc, a.path());
    full_run(sc, b.path());
    let mut differing = Vec::new();
    for f in ["ranking.json", "curves.csv"] {
        if fs::read(a.path().join(f)).unwrap() != fs::read(b.path().join(f)).unwrap() {
            differing.push(f);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "two seeded runs, differing files: {:?}, {:.1} s",
            differing,
            start.elapsed().as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let scenario = Scenario::nyc_like(42);
    let cfg = default_config(&scenario);
    assert_eq!(cfg.region, Region::default());

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name, o: Outcome| {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name, o));
    };
    report("1 (estimator oracles)", criterion_1());
    report("2 (clustering oracles)", criterion_2());
    {
        let (posts, specials, period) = scenario_posts(&scenario);
        report(
            "3 (representative options)",
            criterion_3(&posts, period, &cfg),
        );
        report("4 (windowed regime switch)", criterion_4());
        report(
            "5 (synthetic detection)",
            criterion_5(&posts, &specials, period, &cfg),
        );
    }
    report("6a (DBSCAN scaling)", criterion_6a());
    report("6b (windowed update cost)", criterion_6b());
    report("7 (determinism)", criterion_7(&scenario));

    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
