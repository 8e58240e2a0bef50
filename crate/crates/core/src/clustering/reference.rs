//! Quadratic reference implementations used as test oracles.
//!
//! These build a full distance matrix and follow the textbook algorithms
//! literally; they are slow on purpose and share nothing with the indexed
//! code paths except the distance function.

use crate::geo::{haversine_distance, GeoPoint};

use super::DbscanParams;

fn distance_matrix(points: &[GeoPoint]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| haversine_distance(*a, *b)).collect())
        .collect()
}

/// Textbook DBSCAN over an all-pairs matrix: scan points in index order,
/// grow each new cluster by breadth-first expansion through core points,
/// then attach border points to the nearest core point.
pub fn dbscan_naive(points: &[GeoPoint], params: &DbscanParams) -> Vec<Option<usize>> {
    let n = points.len();
    let dist = distance_matrix(points);
    let is_core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i][j] <= params.eps_m).count() >= params.min_points)
        .collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if !is_core[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for q in 0..n {
                if is_core[q] && labels[q].is_none() && dist[p][q] <= params.eps_m {
                    labels[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    let core_labels = labels.clone();
    for i in 0..n {
        if is_core[i] {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if !is_core[j] || dist[i][j] > params.eps_m {
                continue;
            }
            let cand = (dist[i][j], core_labels[j].unwrap());
            best = Some(match best {
                None => cand,
                Some(b) => {
                    if cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1) {
                        cand
                    } else {
                        b
                    }
                }
            });
        }
        labels[i] = best.map(|b| b.1);
    }
    labels
}

/// Mean silhouette straight from the definition. `None` when fewer than
/// two clusters are populated.
pub fn silhouette_naive(points: &[GeoPoint], labels: &[Option<usize>]) -> Option<f64> {
    let dist = distance_matrix(points);
    let ids: std::collections::BTreeSet<usize> = labels.iter().flatten().copied().collect();
    if ids.len() < 2 {
        return None;
    }
    let mut values = Vec::new();
    for i in 0..points.len() {
        let Some(ci) = labels[i] else { continue };
        let mean_to = |c: usize, skip_self: bool| {
            let others: Vec<f64> = (0..points.len())
                .filter(|&j| labels[j] == Some(c) && !(skip_self && j == i))
                .map(|j| dist[i][j])
                .collect();
            if others.is_empty() {
                0.0
            } else {
                others.iter().sum::<f64>() / others.len() as f64
            }
        };
        let a = mean_to(ci, true);
        let b = ids
            .iter()
            .filter(|&&c| c != ci)
            .map(|&c| mean_to(c, false))
            .fold(f64::INFINITY, f64::min);
        let s = if a < b {
            1.0 - a / b
        } else if a == b {
            0.0
        } else {
            b / a - 1.0
        };
        values.push(s);
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}
