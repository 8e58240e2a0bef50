//! Density and partition clustering under the haversine metric.
//!
//! [`dbscan`] answers neighbourhood queries through a lat/lon bucket grid
//! sized so that any pair within `eps_m` lies in adjacent cells. Border
//! points attach to their nearest core point, which makes the result
//! independent of input order. [`kmeans`] runs Lloyd iterations with
//! geographic-midpoint centre updates, and [`select_representatives`]
//! chains the two: DBSCAN picks the seeds, K-means refines them.

pub mod reference;

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{geographic_midpoint, haversine_distance, GeoPoint, EARTH_RADIUS_M};
use crate::ingest::{SlotBucket, SlotKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("slot has no posts")]
    EmptySlot,
    #[error("DBSCAN found {found} clusters, {wanted} needed")]
    DegenerateSlot { found: usize, wanted: usize },
    #[error("silhouette undefined: {0}")]
    Undefined(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps_m: f64,
    pub min_points: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams {
            eps_m: 200.0,
            min_points: 10,
        }
    }
}

impl DbscanParams {
    pub fn new(eps_m: f64, min_points: usize) -> Result<Self, ClusterError> {
        let p = DbscanParams { eps_m, min_points };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.eps_m.is_finite() && self.eps_m > 0.0) {
            return Err(ClusterError::InvalidParams(format!("eps_m={}", self.eps_m)));
        }
        if self.min_points < 1 {
            return Err(ClusterError::InvalidParams(
                "min_points must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Cluster assignment. `labels[i]` is `None` for noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<Option<usize>>,
    pub clusters: Vec<Vec<usize>>,
    pub centroids: Vec<GeoPoint>,
}

impl Clustering {
    /// Builds clusters and midpoint centroids from a label vector whose
    /// cluster ids are dense in `0..n_clusters`.
    pub fn from_labels(points: &[GeoPoint], labels: Vec<Option<usize>>, n_clusters: usize) -> Self {
        let mut clusters = vec![Vec::new(); n_clusters];
        for (i, l) in labels.iter().enumerate() {
            if let Some(c) = l {
                clusters[*c].push(i);
            }
        }
        let centroids = clusters
            .iter()
            .map(|m| {
                let pts: Vec<GeoPoint> = m.iter().map(|&i| points[i]).collect();
                geographic_midpoint(&pts, None).unwrap_or(GeoPoint { lat: 0.0, lon: 0.0 })
            })
            .collect();
        Clustering {
            labels,
            clusters,
            centroids,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Labels as integers with -1 for noise, for export.
    pub fn label_ids(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(-1, |c| c as i64))
            .collect()
    }
}

/// Uniform lat/lon bucket grid for eps-neighbourhood queries.
struct GridIndex {
    cell_lat: f64,
    cell_lon: f64,
    ncols: i64,
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl GridIndex {
    fn build(points: &[GeoPoint], eps_m: f64) -> Self {
        let slack = 1.0 + 1e-9;
        let eps_rad = eps_m / EARTH_RADIUS_M;
        let cell_lat = (eps_rad.to_degrees() * slack).min(180.0);
        // hav(dlon) <= hav(eps/R) / (cos lat1 cos lat2) bounds the longitude
        // gap of any pair within eps.
        let max_abs_lat = points.iter().fold(0.0f64, |m, p| m.max(p.lat.abs()));
        let c = max_abs_lat.to_radians().cos();
        let arg = (eps_rad / 2.0).sin() / c;
        let (cell_lon, ncols) = if c <= 1e-12 || arg >= 1.0 {
            (360.0, 1)
        } else {
            let w = (2.0 * arg.asin()).to_degrees() * slack;
            let n = (360.0 / w).ceil() as i64;
            if n < 3 {
                (360.0, 1)
            } else {
                (w, n)
            }
        };
        let mut idx = GridIndex {
            cell_lat,
            cell_lon,
            ncols,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = idx.cell_of(*p);
            idx.cells.entry(key).or_default().push(i as u32);
        }
        idx
    }

    fn cell_of(&self, p: GeoPoint) -> (i64, i64) {
        let row = ((p.lat + 90.0) / self.cell_lat).floor() as i64;
        let col = (((p.lon + 180.0) / self.cell_lon).floor() as i64).clamp(0, self.ncols - 1);
        (row, col)
    }

    /// Appends every index within `eps_m` of `points[i]` (itself included).
    fn neighbors(&self, points: &[GeoPoint], i: usize, eps_m: f64, out: &mut Vec<u32>) {
        let p = points[i];
        let (row, col) = self.cell_of(p);
        let cols: &[i64] = &if self.ncols == 1 {
            [0, 0, 0]
        } else {
            [
                (col - 1).rem_euclid(self.ncols),
                col,
                (col + 1).rem_euclid(self.ncols),
            ]
        };
        let cols = if self.ncols == 1 { &cols[..1] } else { cols };
        for r in row - 1..=row + 1 {
            for &c in cols {
                if let Some(members) = self.cells.get(&(r, c)) {
                    for &j in members {
                        if haversine_distance(p, points[j as usize]) <= eps_m {
                            out.push(j);
                        }
                    }
                }
            }
        }
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins, so roots are always component minima.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// DBSCAN with a grid index.
///
/// A point is core when at least `min_points` points (itself included) lie
/// within `eps_m`. Clusters are the connected components of core points;
/// cluster ids follow the smallest core index of each component. A non-core
/// point joins the cluster of its nearest core neighbour, ties going to the
/// lower cluster id; points with no core neighbour are noise.
pub fn dbscan(points: &[GeoPoint], params: &DbscanParams) -> Result<Clustering, ClusterError> {
    params.validate()?;
    if points.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let n = points.len();
    let index = GridIndex::build(points, params.eps_m);

    // CSR neighbour lists.
    let mut offsets = Vec::with_capacity(n + 1);
    let mut adj: Vec<u32> = Vec::new();
    offsets.push(0usize);
    for i in 0..n {
        index.neighbors(points, i, params.eps_m, &mut adj);
        offsets.push(adj.len());
    }
    let nbrs = |i: usize| &adj[offsets[i]..offsets[i + 1]];
    let core: Vec<bool> = (0..n).map(|i| nbrs(i).len() >= params.min_points).collect();

    let mut dsu = DisjointSet::new(n);
    for i in (0..n).filter(|&i| core[i]) {
        for &j in nbrs(i) {
            if core[j as usize] {
                dsu.union(i as u32, j);
            }
        }
    }

    // Roots are component minima; scanning in index order numbers clusters
    // by their smallest core member.
    let mut cluster_of_root: HashMap<u32, usize> = HashMap::new();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for i in (0..n).filter(|&i| core[i]) {
        let root = dsu.find(i as u32);
        let next = cluster_of_root.len();
        let id = *cluster_of_root.entry(root).or_insert(next);
        labels[i] = Some(id);
    }
    let n_clusters = cluster_of_root.len();

    for i in (0..n).filter(|&i| !core[i]) {
        let mut best: Option<(f64, usize)> = None;
        for &j in nbrs(i) {
            let j = j as usize;
            if !core[j] {
                continue;
            }
            let d = haversine_distance(points[i], points[j]);
            let id = labels[j].expect("core points are labelled");
            best = match best {
                Some((bd, bid)) if bd < d || (bd == d && bid <= id) => Some((bd, bid)),
                _ => Some((d, id)),
            };
        }
        labels[i] = best.map(|(_, id)| id);
    }

    Ok(Clustering::from_labels(points, labels, n_clusters))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub max_iter: usize,
    pub tol_m: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            max_iter: 100,
            tol_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub clustering: Clustering,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared haversine distances to the assigned centre, after
    /// each iteration's centre update.
    pub objective: Vec<f64>,
}

/// Sum over points of squared haversine distance to their cluster centre.
pub fn within_cluster_objective(
    points: &[GeoPoint],
    labels: &[usize],
    centers: &[GeoPoint],
) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let d = haversine_distance(*p, centers[l]);
            d * d
        })
        .sum()
}

fn nearest_center(p: GeoPoint, centers: &[GeoPoint]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, &center) in centers.iter().enumerate() {
        let d = haversine_distance(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's K-means with fixed initial centres.
///
/// Each iteration assigns points to the nearest centre (ties to the lower
/// index) and moves every centre to the geographic midpoint of its members.
/// An emptied centre is reseeded at the point farthest from its nearest
/// centre. Stops once no centre moves `tol_m` or more.
pub fn kmeans(
    points: &[GeoPoint],
    initial_centers: &[GeoPoint],
    params: &KmeansParams,
) -> Result<KmeansResult, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    if initial_centers.is_empty() {
        return Err(ClusterError::InvalidParams("K must be >= 1".into()));
    }
    if params.max_iter == 0 || !(params.tol_m >= 0.0) {
        return Err(ClusterError::InvalidParams(format!("{params:?}")));
    }
    let k = initial_centers.len();
    let mut centers = initial_centers.to_vec();
    let mut assign = vec![0usize; points.len()];
    let mut nearest_d = vec![0.0f64; points.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let mut sizes = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest_center(*p, &centers);
            assign[i] = c;
            nearest_d[i] = d;
            sizes[c] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            // Farthest point among those whose cluster can spare one.
            let donor = (0..points.len()).filter(|&i| sizes[assign[i]] > 1).fold(
                None::<usize>,
                |best, i| match best {
                    Some(b) if nearest_d[b] >= nearest_d[i] => Some(b),
                    _ => Some(i),
                },
            );
            if let Some(i) = donor {
                sizes[assign[i]] -= 1;
                assign[i] = empty;
                nearest_d[i] = 0.0;
                sizes[empty] += 1;
            }
        }

        let mut members: Vec<Vec<GeoPoint>> = vec![Vec::new(); k];
        for (i, &c) in assign.iter().enumerate() {
            members[c].push(points[i]);
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if let Ok(m) = geographic_midpoint(&members[c], None) {
                shift = shift.max(haversine_distance(centers[c], m));
                centers[c] = m;
            }
        }
        objective.push(within_cluster_objective(points, &assign, &centers));
        if shift < params.tol_m {
            converged = true;
            break;
        }
    }

    let labels = assign.iter().map(|&c| Some(c)).collect::<Vec<_>>();
    let mut clustering = Clustering::from_labels(points, labels, k);
    // More centres than points leaves some clusters empty; keep their last position.
    for (c, members) in clustering.clusters.iter().enumerate() {
        if members.is_empty() {
            clustering.centroids[c] = centers[c];
        }
    }
    Ok(KmeansResult {
        clustering,
        iterations,
        converged,
        objective,
    })
}

/// The k points summarising one time slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub date: NaiveDate,
    pub key: SlotKey,
    pub reps: Vec<GeoPoint>,
    pub support: Vec<usize>,
}

/// Sorts (point, support) pairs: support descending, then (lat, lon).
pub fn canonical_order(reps: &mut [(GeoPoint, usize)]) {
    reps.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.lex_cmp(&b.0)));
}

fn check_k(k: usize) -> Result<(), ClusterError> {
    if !(1..=3).contains(&k) {
        return Err(ClusterError::InvalidParams(format!(
            "k={k}, expected 1..=3"
        )));
    }
    Ok(())
}

/// Centroids of the `k` most populated clusters, largest first
/// (ties to the lower cluster id).
pub fn top_clusters(clustering: &Clustering, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..clustering.n_clusters()).collect();
    order.sort_by(|&a, &b| {
        clustering.clusters[b]
            .len()
            .cmp(&clustering.clusters[a].len())
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Hybrid representative selection over raw points.
///
/// `k == 1` is the plain geographic midpoint. Otherwise DBSCAN's `k` most
/// populated clusters seed a K-means pass over every point, and the final
/// centres are returned in canonical order with their member counts.
/// DBSCAN's `k` most populated clusters seed K-means over all points.
pub fn hybrid_clustering(
    points: &[GeoPoint],
    k: usize,
    dbscan_params: &DbscanParams,
    kmeans_params: &KmeansParams,
) -> Result<KmeansResult, ClusterError> {
    let db = dbscan(points, dbscan_params)?;
    if db.n_clusters() < k {
        return Err(ClusterError::DegenerateSlot {
            found: db.n_clusters(),
            wanted: k,
        });
    }
    let seeds: Vec<GeoPoint> = top_clusters(&db, k)
        .into_iter()
        .map(|c| db.centroids[c])
        .collect();
    kmeans(points, &seeds, kmeans_params)
}

pub fn hybrid_representatives(
    points: &[GeoPoint],
    k: usize,
    dbscan_params: &DbscanParams,
    kmeans_params: &KmeansParams,
) -> Result<Vec<(GeoPoint, usize)>, ClusterError> {
    check_k(k)?;
    if points.is_empty() {
        return Err(ClusterError::EmptySlot);
    }
    if k == 1 {
        let m = geographic_midpoint(points, None).map_err(|_| ClusterError::EmptySlot)?;
        return Ok(vec![(m, points.len())]);
    }
    let km = hybrid_clustering(points, k, dbscan_params, kmeans_params)?;
    let mut reps: Vec<(GeoPoint, usize)> = km
        .clustering
        .centroids
        .iter()
        .zip(&km.clustering.clusters)
        .map(|(c, m)| (*c, m.len()))
        .collect();
    canonical_order(&mut reps);
    Ok(reps)
}

pub fn select_representatives(
    bucket: &SlotBucket,
    k: usize,
    dbscan_params: &DbscanParams,
) -> Result<RepresentativeSet, ClusterError> {
    let points = bucket.locations();
    let reps = hybrid_representatives(&points, k, dbscan_params, &KmeansParams::default())?;
    Ok(RepresentativeSet {
        date: bucket.date,
        key: bucket.key,
        reps: reps.iter().map(|r| r.0).collect(),
        support: reps.iter().map(|r| r.1).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    /// `None` for noise points.
    pub per_point: Vec<Option<f64>>,
    pub mean: f64,
}

/// Piecewise silhouette value from the mean intra-cluster distance `a`
/// and the lowest mean distance to another cluster `b`.
pub fn silhouette_value(a: f64, b: f64) -> f64 {
    if a < b {
        1.0 - a / b
    } else if a > b {
        b / a - 1.0
    } else {
        0.0
    }
}

/// Silhouette over non-noise points; singleton clusters get `a = 0`.
/// Requires at least two non-empty clusters.
pub fn silhouette(
    points: &[GeoPoint],
    clustering: &Clustering,
) -> Result<Silhouette, ClusterError> {
    if points.len() != clustering.labels.len() {
        return Err(ClusterError::InvalidParams(
            "labels do not match points".into(),
        ));
    }
    silhouette_with(clustering, |i, j| haversine_distance(points[i], points[j]))
}

/// Silhouette from an arbitrary symmetric distance between point indices.
pub fn silhouette_with(
    clustering: &Clustering,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<Silhouette, ClusterError> {
    let sizes: Vec<usize> = clustering.clusters.iter().map(Vec::len).collect();
    let populated = sizes.iter().filter(|&&s| s > 0).count();
    if populated < 2 {
        return Err(ClusterError::Undefined(format!(
            "{populated} non-empty clusters"
        )));
    }
    let nc = sizes.len();
    let members: Vec<(usize, usize)> = clustering
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|c| (i, c)))
        .collect();
    // sums[m * nc + c] = total distance from member m to cluster c.
    let mut sums = vec![0.0f64; members.len() * nc];
    for x in 0..members.len() {
        let (i, ci) = members[x];
        for y in (x + 1)..members.len() {
            let (j, cj) = members[y];
            let d = dist(i, j);
            sums[x * nc + cj] += d;
            sums[y * nc + ci] += d;
        }
    }
    let mut per_point = vec![None; clustering.labels.len()];
    let mut total = 0.0;
    for (x, &(i, ci)) in members.iter().enumerate() {
        let row = &sums[x * nc..(x + 1) * nc];
        let a = if sizes[ci] > 1 {
            row[ci] / (sizes[ci] - 1) as f64
        } else {
            0.0
        };
        let b = (0..nc)
            .filter(|&c| c != ci && sizes[c] > 0)
            .map(|c| row[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let s = silhouette_value(a, b);
        per_point[i] = Some(s);
        total += s;
    }
    Ok(Silhouette {
        per_point,
        mean: total / members.len() as f64,
    })
}

/// Condensed pairwise haversine distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(points: &[GeoPoint]) -> Self {
        let n = points.len();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                upper.push(haversine_distance(points[i], points[j]));
            }
        }
        DistanceMatrix { n, upper }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.upper[i * (2 * self.n - i - 1) / 2 + (j - i - 1)]
    }
}
