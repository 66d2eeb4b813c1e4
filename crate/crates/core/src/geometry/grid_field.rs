//! Gridded scalar fields on a lat/lon raster: local-minimum extraction and
//! point-wise standardisation across replications.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Row-major 2-D field. Rows follow `lats`, columns follow `lons`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub lats: Vec<f64>,
    pub lons: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>, lats: Vec<f64>, lons: Vec<f64>) -> Result<Self> {
        let (n_rows, n_cols) = (lats.len(), lons.len());
        if values.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "field has {} values but axes imply {}x{}",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(GridField { values, n_rows, n_cols, lats, lons })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    /// Keep only rows whose latitude lies in `[lat_min, lat_max]` (closed).
    pub fn restrict_lat_band(&self, lat_min: f64, lat_max: f64) -> Result<GridField> {
        let rows: Vec<usize> = (0..self.n_rows)
            .filter(|&r| self.lats[r] >= lat_min && self.lats[r] <= lat_max)
            .collect();
        if rows.is_empty() {
            return Err(Error::invalid("latitude band excludes every grid row"));
        }
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in &rows {
            values.extend_from_slice(&self.values[r * self.n_cols..(r + 1) * self.n_cols]);
        }
        GridField::new(values, rows.iter().map(|&r| self.lats[r]).collect(), self.lons.clone())
    }

    /// Grid-cell centers strictly lower than all 8 neighbours. Longitude
    /// wraps when `cyclic`; cells without a full neighbourhood (edge rows,
    /// and edge columns in the non-cyclic case) are never minima.
    pub fn local_minima(&self, cyclic_longitude: bool) -> Result<Vec<Point>> {
        if self.n_rows < 3 || self.n_cols < 3 {
            return Err(Error::invalid("grid must be at least 3x3"));
        }
        if self.values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("grid contains NaN cells"));
        }
        let mut out = Vec::new();
        for r in 1..self.n_rows - 1 {
            let cols: Box<dyn Iterator<Item = usize>> = if cyclic_longitude {
                Box::new(0..self.n_cols)
            } else {
                Box::new(1..self.n_cols - 1)
            };
            for c in cols {
                let v = self.at(r, c);
                let mut is_min = true;
                'nb: for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let rr = (r as i64 + dr) as usize;
                        let cc = (c as i64 + dc).rem_euclid(self.n_cols as i64) as usize;
                        if self.at(rr, cc) <= v {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    out.push(Point::new(self.lons[c], self.lats[r]));
                }
            }
        }
        Ok(out)
    }
}

/// Standardise each cell across replications: subtract the across-field mean
/// and divide by the sample SD (n−1 denominator). Zero-variance cells are set
/// to 0 and reported as flagged `(row, col)` pairs.
pub fn standardise_across_replications(
    fields: &[GridField],
) -> Result<(Vec<GridField>, Vec<(usize, usize)>)> {
    if fields.len() < 2 {
        return Err(Error::invalid("standardisation needs at least 2 replications"));
    }
    let (n_rows, n_cols) = (fields[0].n_rows, fields[0].n_cols);
    for f in fields {
        if f.n_rows != n_rows || f.n_cols != n_cols {
            return Err(Error::invalid("replication grids have inconsistent shapes"));
        }
    }
    let m = fields.len() as f64;
    let mut out: Vec<GridField> = fields.to_vec();
    let mut flagged = Vec::new();
    for r in 0..n_rows {
        for c in 0..n_cols {
            let idx = r * n_cols + c;
            let mean = fields.iter().map(|f| f.values[idx]).sum::<f64>() / m;
            let ss = fields.iter().map(|f| (f.values[idx] - mean).powi(2)).sum::<f64>();
            let sd = (ss / (m - 1.0)).sqrt();
            if sd > 0.0 {
                for (f, o) in fields.iter().zip(out.iter_mut()) {
                    o.values[idx] = (f.values[idx] - mean) / sd;
                }
            } else {
                flagged.push((r, c));
                for o in out.iter_mut() {
                    o.values[idx] = 0.0;
                }
            }
        }
    }
    Ok((out, flagged))
}
