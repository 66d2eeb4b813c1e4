//! Points, metrics, observation windows and the boundary-secant queries
//! used by the triad moment theory.
//!
//! Two coordinate modes share one [`Point`] type: planar `(x, y)` with
//! Euclidean distances, and spherical `(lon, lat)` in degrees with
//! great-circle distances. Angles at a vertex in spherical mode are measured
//! between the great-circle bearings leaving that vertex (a local
//! tangent-plane approximation, adequate for the small thresholds used
//! here); this is documented behaviour, not an exact spherical excess
//! calculation.

mod grid_field;
mod neighbors;

pub use grid_field::{standardise_across_replications, GridField};
pub use neighbors::NeighborGrid;

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// A 2-D location: `(x, y)` in planar mode, `(lon, lat)` degrees in
/// spherical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector on the sphere for a `(lon, lat)` point in degrees.
    pub fn unit_vec(&self) -> [f64; 3] {
        let lon = self.x.to_radians();
        let lat = self.y.to_radians();
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    /// Normalise longitude to [-180, 180) and clamp rounding noise on latitude.
    pub fn normalised_lonlat(&self) -> Point {
        let mut lon = (self.x + 180.0).rem_euclid(360.0) - 180.0;
        if lon >= 180.0 {
            lon -= 360.0;
        }
        Point::new(lon, self.y.clamp(-90.0, 90.0))
    }
}

/// Distance metric: planar Euclidean or great-circle on a sphere of the
/// given radius. With `radius = 180/π` great-circle distances come out in
/// degrees of arc, which matches edge caps quoted in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    GreatCircle { radius: f64 },
}

/// Sphere radius for which great-circle distances are reported in degrees.
pub const DEGREE_RADIUS: f64 = 180.0 / PI;

impl Metric {
    pub fn is_spherical(&self) -> bool {
        matches!(self, Metric::GreatCircle { .. })
    }

    /// Distance between two points. Total on finite inputs; callers that
    /// ingest untrusted data validate coordinates first (see `try_distance`).
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        match *self {
            Metric::Euclidean => (a.x - b.x).hypot(a.y - b.y),
            Metric::GreatCircle { radius } => radius * central_angle(a, b),
        }
    }

    /// Validating variant: rejects non-finite coordinates.
    pub fn try_distance(&self, a: Point, b: Point) -> Result<f64> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("non-finite coordinates"));
        }
        if let Metric::GreatCircle { radius } = *self {
            if !(radius > 0.0) {
                return Err(Error::invalid("sphere radius must be positive"));
            }
        }
        Ok(self.distance(a, b))
    }

    /// Interior angle at `at` formed by the segments/arcs towards `from` and
    /// `to`, in (0, π]. Errors if either segment has zero length.
    pub fn angle_at(&self, at: Point, from: Point, to: Point) -> Result<f64> {
        match self {
            Metric::Euclidean => {
                let ax = from.x - at.x;
                let ay = from.y - at.y;
                let bx = to.x - at.x;
                let by = to.y - at.y;
                if (ax == 0.0 && ay == 0.0) || (bx == 0.0 && by == 0.0) {
                    return Err(Error::DegenerateTriangle(0, 0));
                }
                Ok((ax * by - ay * bx).abs().atan2(ax * bx + ay * by))
            }
            Metric::GreatCircle { .. } => {
                let p = at.unit_vec();
                let ta = tangent_towards(p, from.unit_vec())
                    .ok_or(Error::DegenerateTriangle(0, 0))?;
                let tb =
                    tangent_towards(p, to.unit_vec()).ok_or(Error::DegenerateTriangle(0, 0))?;
                let cross = [
                    ta[1] * tb[2] - ta[2] * tb[1],
                    ta[2] * tb[0] - ta[0] * tb[2],
                    ta[0] * tb[1] - ta[1] * tb[0],
                ];
                let cross_norm =
                    (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                let dot = ta[0] * tb[0] + ta[1] * tb[1] + ta[2] * tb[2];
                Ok(cross_norm.atan2(dot))
            }
        }
    }
}

fn central_angle(a: Point, b: Point) -> f64 {
    let lat1 = a.y.to_radians();
    let lat2 = b.y.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.x - a.x).to_radians();
    let s = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * s.sqrt().min(1.0).asin()
}

/// Unit tangent at `p` (unit vector) pointing along the great circle towards
/// `q`. `None` when the points coincide or are antipodal.
fn tangent_towards(p: [f64; 3], q: [f64; 3]) -> Option<[f64; 3]> {
    let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let t = [q[0] - dot * p[0], q[1] - dot * p[1], q[2] - dot * p[2]];
    let norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    if norm < 1e-15 {
        return None;
    }
    Some([t[0] / norm, t[1] / norm, t[2] / norm])
}

/// Bounded observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// Axis-aligned rectangle `[0, width] × [0, height]`.
    Rect { width: f64, height: f64 },
    /// Closed disc (membership uses `<= radius`).
    Disc { center: Point, radius: f64 },
    /// Latitude band on the sphere, degrees; longitude wraps when `cyclic`.
    LatLonBand {
        lat_min: f64,
        lat_max: f64,
        cyclic: bool,
    },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Rect { width, height } => {
                if !(width > 0.0 && height > 0.0) {
                    return Err(Error::invalid("rectangle sides must be positive"));
                }
            }
            Region::Disc { center, radius } => {
                if !center.is_finite() || !(radius > 0.0) {
                    return Err(Error::invalid("disc needs finite center and positive radius"));
                }
            }
            Region::LatLonBand { lat_min, lat_max, .. } => {
                if !(lat_min < lat_max) || lat_min < -90.0 || lat_max > 90.0 {
                    return Err(Error::invalid("latitude band needs -90 <= latMin < latMax <= 90"));
                }
            }
        }
        Ok(())
    }

    /// Window area. The latitude band uses the exact spherical band area
    /// `2πR²(sin latMax − sin latMin)` and therefore needs a great-circle
    /// metric.
    pub fn area(&self, metric: &Metric) -> Result<f64> {
        match *self {
            Region::Rect { width, height } => Ok(width * height),
            Region::Disc { radius, .. } => Ok(PI * radius * radius),
            Region::LatLonBand { lat_min, lat_max, .. } => match *metric {
                Metric::GreatCircle { radius } => {
                    Ok(TAU * radius * radius
                        * (lat_max.to_radians().sin() - lat_min.to_radians().sin()))
                }
                Metric::Euclidean => Err(Error::Unsupported(
                    "LatLonBand area requires a great-circle metric".into(),
                )),
            },
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Rect { width, height } => {
                p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height
            }
            Region::Disc { center, radius } => {
                (p.x - center.x).hypot(p.y - center.y) <= radius
            }
            Region::LatLonBand { lat_min, lat_max, cyclic } => {
                let ok_lat = p.y >= lat_min && p.y <= lat_max;
                ok_lat && (cyclic || (p.x >= -180.0 && p.x < 180.0))
            }
        }
    }

    /// Uniform draw: uniform on the window in planar mode, uniform on the
    /// sphere surface for the latitude band (density ∝ cos latitude).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match *self {
            Region::Rect { width, height } => Point::new(
                rng.random_range(0.0..width),
                rng.random_range(0.0..height),
            ),
            Region::Disc { center, radius } => {
                let r = radius * rng.random_range(0.0f64..1.0).sqrt();
                let th = rng.random_range(0.0..TAU);
                Point::new(center.x + r * th.cos(), center.y + r * th.sin())
            }
            Region::LatLonBand { lat_min, lat_max, .. } => {
                let z_lo = lat_min.to_radians().sin();
                let z_hi = lat_max.to_radians().sin();
                let z = rng.random_range(z_lo..z_hi);
                let lon = rng.random_range(-180.0..180.0);
                Point::new(lon, z.asin().to_degrees())
            }
        }
    }

    /// Length of the ray from `p` (inside the region) along planar unit
    /// vector `dir` to the region boundary. Planar regions only; secants on
    /// the latitude band go through [`secant_lengths`].
    pub fn boundary_secant(&self, p: Point, dir: (f64, f64)) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideRegion(p.x, p.y));
        }
        match *self {
            Region::Rect { width, height } => {
                let mut t = f64::INFINITY;
                for (pos, d, hi) in [(p.x, dir.0, width), (p.y, dir.1, height)] {
                    if d > 1e-300 {
                        t = t.min((hi - pos) / d);
                    } else if d < -1e-300 {
                        t = t.min(-pos / d);
                    }
                }
                Ok(t)
            }
            Region::Disc { center, radius } => {
                let px = p.x - center.x;
                let py = p.y - center.y;
                let b = px * dir.0 + py * dir.1;
                let c = px * px + py * py - radius * radius;
                Ok(-b + (b * b - c).max(0.0).sqrt())
            }
            Region::LatLonBand { .. } => Err(Error::Unsupported(
                "planar secant query on a latitude band; use secant_lengths".into(),
            )),
        }
    }

    /// Arc length from `p` along the great circle with unit tangent `w`
    /// (3-vector at `p`) until the band boundary, on a sphere of radius
    /// `sphere_radius`. Infinite when the great circle never leaves the band.
    fn band_secant(&self, p3: [f64; 3], w: [f64; 3], sphere_radius: f64) -> Result<f64> {
        let Region::LatLonBand { lat_min, lat_max, cyclic } = *self else {
            return Err(Error::Unsupported("band_secant on a planar region".into()));
        };
        let mut best = f64::INFINITY;
        for bound in [lat_min, lat_max] {
            let c = bound.to_radians().sin();
            let a = p3[2];
            let b = w[2];
            let rh = a.hypot(b);
            if rh < c.abs() {
                continue;
            }
            let phi = b.atan2(a);
            let d = (c / rh).clamp(-1.0, 1.0).acos();
            for s in [phi - d, phi + d] {
                let s = s.rem_euclid(TAU);
                if s > 1e-12 {
                    best = best.min(s);
                }
            }
        }
        if !cyclic {
            // lon = ±180 meridian: y = 0 with x <= 0.
            let s0 = (-p3[1]).atan2(w[1]);
            for k in 0..2 {
                let s = (s0 + k as f64 * PI).rem_euclid(TAU);
                if s > 1e-12 {
                    let x = p3[0] * s.cos() + w[0] * s.sin();
                    if x <= 0.0 {
                        best = best.min(s);
                    }
                }
            }
        }
        Ok(best * sphere_radius)
    }
}

/// Chord length `t = |PQ|` and the two boundary-secant lengths: `u` beyond
/// `p` (away from `q`) and `v` beyond `q` (away from `p`).
pub fn secant_lengths(region: &Region, metric: &Metric, p: Point, q: Point) -> Result<(f64, f64, f64)> {
    match metric {
        Metric::Euclidean => {
            let dx = p.x - q.x;
            let dy = p.y - q.y;
            let t = dx.hypot(dy);
            if t == 0.0 {
                return Err(Error::invalid("coincident pair has no secant direction"));
            }
            let e = (dx / t, dy / t); // direction q -> p, extended beyond p
            let u = region.boundary_secant(p, e)?;
            let v = region.boundary_secant(q, (-e.0, -e.1))?;
            Ok((t, u, v))
        }
        Metric::GreatCircle { radius } => {
            let pv = p.unit_vec();
            let qv = q.unit_vec();
            let t = metric.distance(p, q);
            let toward_q = tangent_towards(pv, qv)
                .ok_or_else(|| Error::invalid("coincident or antipodal pair"))?;
            let toward_p = tangent_towards(qv, pv)
                .ok_or_else(|| Error::invalid("coincident or antipodal pair"))?;
            let u = region.band_secant(pv, neg(toward_q), *radius)?;
            let v = region.band_secant(qv, neg(toward_p), *radius)?;
            Ok((t, u, v))
        }
    }
}

fn neg(v: [f64; 3]) -> [f64; 3] {
    [-v[0], -v[1], -v[2]]
}

/// Triangle on three points.
#[derive(Debug, Clone, Copy)]
pub struct Triangle(pub [Point; 3]);

impl Triangle {
    /// Interior angles at the three vertices.
    pub fn angles(&self, metric: &Metric) -> Result<[f64; 3]> {
        let [a, b, c] = self.0;
        for (i, j, p, q) in [(0usize, 1usize, a, b), (0, 2, a, c), (1, 2, b, c)] {
            if metric.distance(p, q) == 0.0 {
                return Err(Error::DegenerateTriangle(i, j));
            }
        }
        Ok([
            metric.angle_at(a, b, c)?,
            metric.angle_at(b, a, c)?,
            metric.angle_at(c, a, b)?,
        ])
    }

    /// Largest interior angle and its vertex index; ties break to the lowest
    /// index. Collinear (degenerate) triangles report π at the middle vertex.
    pub fn largest_angle(&self, metric: &Metric) -> Result<(f64, usize)> {
        let angles = self.angles(metric)?;
        let mut best = 0;
        for i in 1..3 {
            if angles[i] > angles[best] {
                best = i;
            }
        }
        Ok((angles[best], best))
    }
}
