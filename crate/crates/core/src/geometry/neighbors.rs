//! Fixed-radius neighbour queries over a uniform bucket grid.
//!
//! Planar points hash into square cells of side `radius`; spherical points
//! hash their unit 3-vectors into cubic cells of the chord length subtending
//! `radius`, so a 3×3(×3) neighbourhood always covers the query ball (chord
//! length is monotone in arc length). With an infinite radius the index
//! degenerates to all-pairs.

use crate::geometry::{Metric, Point};
use std::collections::HashMap;

pub struct NeighborGrid {
    mode: Mode,
    n: usize,
}

enum Mode {
    All,
    Planar {
        cell: f64,
        map: HashMap<(i64, i64), Vec<u32>>,
        coords: Vec<(f64, f64)>,
    },
    Sphere {
        cell: f64,
        map: HashMap<(i64, i64, i64), Vec<u32>>,
        coords: Vec<[f64; 3]>,
    },
}

impl NeighborGrid {
    /// Build an index answering "all points within `radius` of point i".
    pub fn build(points: &[Point], metric: &Metric, radius: f64) -> Self {
        let n = points.len();
        if !radius.is_finite() || n == 0 {
            return NeighborGrid { mode: Mode::All, n };
        }
        match metric {
            Metric::Euclidean => {
                let coords: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
                let cell = radius;
                let mut map: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
                for (i, &(x, y)) in coords.iter().enumerate() {
                    map.entry(planar_key(x, y, cell)).or_default().push(i as u32);
                }
                NeighborGrid { mode: Mode::Planar { cell, map, coords }, n }
            }
            Metric::GreatCircle { radius: sphere_r } => {
                let coords: Vec<[f64; 3]> = points.iter().map(|p| p.unit_vec()).collect();
                // chord on the unit sphere subtending an arc of `radius`
                let arc = (radius / sphere_r).min(std::f64::consts::PI);
                let cell = 2.0 * (arc / 2.0).sin();
                if cell <= 0.0 {
                    return NeighborGrid { mode: Mode::All, n };
                }
                let mut map: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
                for (i, c) in coords.iter().enumerate() {
                    map.entry(sphere_key(c, cell)).or_default().push(i as u32);
                }
                NeighborGrid { mode: Mode::Sphere { cell, map, coords }, n }
            }
        }
    }

    /// Candidate indices for neighbours of point `i` (cell-level filter; the
    /// caller applies the exact distance test). Never contains `i` itself.
    /// Candidates are produced in ascending index order.
    pub fn candidates(&self, i: usize, out: &mut Vec<u32>) {
        out.clear();
        match &self.mode {
            Mode::All => out.extend((0..self.n as u32).filter(|&j| j != i as u32)),
            Mode::Planar { cell, map, coords } => {
                let (x, y) = coords[i];
                let (kx, ky) = planar_key(x, y, *cell);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(v) = map.get(&(kx + dx, ky + dy)) {
                            out.extend(v.iter().copied().filter(|&j| j != i as u32));
                        }
                    }
                }
                out.sort_unstable();
            }
            Mode::Sphere { cell, map, coords } => {
                let c = coords[i];
                let k = sphere_key(&c, *cell);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(v) = map.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                                out.extend(v.iter().copied().filter(|&j| j != i as u32));
                            }
                        }
                    }
                }
                out.sort_unstable();
            }
        }
    }
}

fn planar_key(x: f64, y: f64, cell: f64) -> (i64, i64) {
    ((x / cell).floor() as i64, (y / cell).floor() as i64)
}

fn sphere_key(c: &[f64; 3], cell: f64) -> (i64, i64, i64) {
    (
        (c[0] / cell).floor() as i64,
        (c[1] / cell).floor() as i64,
        (c[2] / cell).floor() as i64,
    )
}
