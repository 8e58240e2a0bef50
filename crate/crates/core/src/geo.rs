//! Spherical-earth primitives: haversine distance, geographic midpoint and
//! the local east/north frame used by the analysis grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius in meters. Sphere model throughout.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("weights are degenerate (zero sum, negative, or mismatched length)")]
    DegenerateWeights,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

/// A location on the sphere, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        let p = GeoPoint { lat, lon };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(GeoError::InvalidCoordinate { lat, lon })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }

    /// Unit vector in earth-centred cartesian coordinates.
    pub fn to_unit_vector(self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    fn from_vector(v: [f64; 3]) -> Self {
        let hyp = v[0].hypot(v[1]);
        GeoPoint {
            lat: v[2].atan2(hyp).to_degrees(),
            lon: v[1].atan2(v[0]).to_degrees(),
        }
    }

    /// Lexicographic (lat, lon) ordering, used for canonical tie-breaks.
    pub fn lex_cmp(&self, other: &GeoPoint) -> std::cmp::Ordering {
        self.lat
            .total_cmp(&other.lat)
            .then(self.lon.total_cmp(&other.lon))
    }
}

/// Great-circle distance in meters.
///
/// Symmetric bit-for-bit: every term is either squared or a commutative
/// product, so swapping the arguments yields the same float.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let s_lat = (dlat / 2.0).sin();
    let s_lon = (dlon / 2.0).sin();
    let h = s_lat * s_lat + (lat1.cos() * lat2.cos()) * (s_lon * s_lon);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Weighted geographic midpoint: mean of unit vectors, renormalised.
pub fn geographic_midpoint(
    points: &[GeoPoint],
    weights: Option<&[f64]>,
) -> Result<GeoPoint, GeoError> {
    if points.is_empty() {
        return Err(GeoError::EmptyInput);
    }
    let mut acc = [0.0f64; 3];
    match weights {
        None => {
            for p in points {
                let v = p.to_unit_vector();
                acc[0] += v[0];
                acc[1] += v[1];
                acc[2] += v[2];
            }
        }
        Some(w) => {
            if w.len() != points.len() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(GeoError::DegenerateWeights);
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(GeoError::DegenerateWeights);
            }
            for (p, &wi) in points.iter().zip(w) {
                let v = p.to_unit_vector();
                acc[0] += wi * v[0];
                acc[1] += wi * v[1];
                acc[2] += wi * v[2];
            }
        }
    }
    let norm = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
    // Antipodal mass cancels out; there is no meaningful midpoint.
    if norm < 1e-12 {
        return Err(GeoError::DegenerateWeights);
    }
    Ok(GeoPoint::from_vector(acc))
}

/// Analysis area: a circular harvest region plus the square that the
/// symbol grid tiles, both centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: GeoPoint,
    pub radius_m: f64,
    pub side_m: f64,
}

/// Times Square, the default centre.
pub const TIMES_SQUARE: GeoPoint = GeoPoint {
    lat: 40.756667,
    lon: -73.986389,
};

impl Default for Region {
    fn default() -> Self {
        Region {
            center: TIMES_SQUARE,
            radius_m: 5_000.0,
            side_m: 5_000.0,
        }
    }
}

impl Region {
    pub fn new(center: GeoPoint, radius_m: f64, side_m: f64) -> Result<Self, GeoError> {
        let r = Region {
            center,
            radius_m,
            side_m,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.center.is_valid() {
            return Err(GeoError::InvalidCoordinate {
                lat: self.center.lat,
                lon: self.center.lon,
            });
        }
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(GeoError::InvalidRegion(format!(
                "radius_m={}",
                self.radius_m
            )));
        }
        if !(self.side_m.is_finite() && self.side_m > 0.0) {
            return Err(GeoError::InvalidRegion(format!("side_m={}", self.side_m)));
        }
        Ok(())
    }

    /// Inclusive disc test: distance <= radius.
    pub fn contains(&self, p: GeoPoint) -> bool {
        haversine_distance(self.center, p) <= self.radius_m
    }

    /// Equirectangular projection about the centre: (east_m, north_m).
    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        let mut dlon = p.lon - self.center.lon;
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon < -180.0 {
            dlon += 360.0;
        }
        let east = EARTH_RADIUS_M * dlon.to_radians() * self.center.lat.to_radians().cos();
        let north = EARTH_RADIUS_M * (p.lat - self.center.lat).to_radians();
        (east, north)
    }

    /// Inverse of [`Region::to_local`].
    pub fn from_local(&self, east_m: f64, north_m: f64) -> GeoPoint {
        let lat = self.center.lat + (north_m / EARTH_RADIUS_M).to_degrees();
        let mut lon = self.center.lon
            + (east_m / (EARTH_RADIUS_M * self.center.lat.to_radians().cos())).to_degrees();
        if lon > 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        GeoPoint {
            lat: lat.clamp(-90.0, 90.0),
            lon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    /// Independent midpoint oracle: explicit component sums, no shared helpers.
    fn midpoint_oracle(points: &[(f64, f64)]) -> (f64, f64) {
        let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
        for &(lat, lon) in points {
            let (la, lo) = (
                lat * std::f64::consts::PI / 180.0,
                lon * std::f64::consts::PI / 180.0,
            );
            x += la.cos() * lo.cos();
            y += la.cos() * lo.sin();
            z += la.sin();
        }
        let n = points.len() as f64;
        let (x, y, z) = (x / n, y / n, z / n);
        let lon = y.atan2(x);
        let lat = z.atan2((x * x + y * y).sqrt());
        (
            lat * 180.0 / std::f64::consts::PI,
            lon * 180.0 / std::f64::consts::PI,
        )
    }

    #[test]
    fn haversine_known_values() {
        let ts = p(40.756667, -73.986389);
        assert_eq!(haversine_distance(ts, ts), 0.0);
        let north = p(40.766667, -73.986389);
        let expected = std::f64::consts::PI / 180.0 * 0.01 * EARTH_RADIUS_M;
        assert!((haversine_distance(ts, north) - expected).abs() < 1e-3);
        assert!((haversine_distance(ts, north) - 1111.9).abs() < 0.05);
        let anti = haversine_distance(p(0.0, 0.0), p(0.0, 180.0));
        assert!((anti - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1e-6);
        assert!((anti - 20_015_087.0).abs() < 1.0);
    }

    #[test]
    fn midpoint_examples() {
        let q = p(40.1234, -73.9);
        let m = geographic_midpoint(&[q], None).unwrap();
        assert!((m.lat - q.lat).abs() < 1e-12 && (m.lon - q.lon).abs() < 1e-12);

        let m = geographic_midpoint(&[p(0.0, 10.0), p(0.0, 20.0)], None).unwrap();
        assert!(m.lat.abs() < 1e-12 && (m.lon - 15.0).abs() < 1e-12);

        let pts = [(40.0, -74.0), (41.0, -73.0), (40.5, -73.5)];
        let (olat, olon) = midpoint_oracle(&pts);
        let gp: Vec<_> = pts.iter().map(|&(a, b)| p(a, b)).collect();
        let m = geographic_midpoint(&gp, None).unwrap();
        assert!((m.lat - olat).abs() < 1e-12 && (m.lon - olon).abs() < 1e-12);
        // Frozen oracle output for the three-point case.
        assert!((m.lat - 40.500718237).abs() < 1e-8, "{m:?}");
        assert!((m.lon - (-73.502484483)).abs() < 1e-8, "{m:?}");
    }

    #[test]
    fn midpoint_errors() {
        assert_eq!(geographic_midpoint(&[], None), Err(GeoError::EmptyInput));
        let pts = [p(1.0, 1.0), p(2.0, 2.0)];
        assert_eq!(
            geographic_midpoint(&pts, Some(&[0.0, 0.0])),
            Err(GeoError::DegenerateWeights)
        );
        assert_eq!(
            geographic_midpoint(&pts, Some(&[1.0])),
            Err(GeoError::DegenerateWeights)
        );
        let m = geographic_midpoint(&pts, Some(&[1.0, 0.0])).unwrap();
        assert!((m.lat - 1.0).abs() < 1e-12 && (m.lon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn local_frame_round_trip() {
        let r = Region::default();
        let q = r.from_local(1234.0, -987.0);
        let (e, n) = r.to_local(q);
        assert!((e - 1234.0).abs() < 1e-6 && (n + 987.0).abs() < 1e-6);
        // Equirectangular error against haversine stays well under 0.1% at 5 km.
        let d = haversine_distance(r.center, r.from_local(2500.0, 2500.0));
        let flat = (2.0f64).sqrt() * 2500.0;
        assert!((d - flat).abs() / flat < 1e-3);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(lat, lon)| GeoPoint { lat, lon })
    }

    proptest! {
        #[test]
        fn haversine_is_symmetric(a in arb_point(), b in arb_point()) {
            prop_assert_eq!(haversine_distance(a, b), haversine_distance(b, a));
        }

        #[test]
        fn haversine_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ac = haversine_distance(a, c);
            let ab = haversine_distance(a, b);
            let bc = haversine_distance(b, c);
            prop_assert!(ac <= ab + bc + 1e-6);
        }

        #[test]
        fn midpoint_of_copies(a in arb_point(), n in 1usize..20) {
            prop_assume!(a.lat.abs() < 89.9);
            let pts = vec![a; n];
            let m = geographic_midpoint(&pts, None).unwrap();
            prop_assert!((m.lat - a.lat).abs() < 1e-9);
            let dlon = (m.lon - a.lon).abs();
            prop_assert!(dlon < 1e-9 || (dlon - 360.0).abs() < 1e-9);
        }

        #[test]
        fn midpoint_permutation_invariant(
            pts in prop::collection::vec((40.0f64..41.0, -74.5f64..-73.5), 2..30),
            rot in 0usize..30,
        ) {
            let gp: Vec<GeoPoint> = pts.iter().map(|&(a, b)| GeoPoint { lat: a, lon: b }).collect();
            let mut shuffled = gp.clone();
            shuffled.reverse();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            let m1 = geographic_midpoint(&gp, None).unwrap();
            let m2 = geographic_midpoint(&shuffled, None).unwrap();
            prop_assert!((m1.lat - m2.lat).abs() < 1e-9 && (m1.lon - m2.lon).abs() < 1e-9);
        }
    }
}
