//! Space and time discretization.
//!
//! Space is a regular lattice of square cells addressed row-major from the
//! lower-left corner. Time is a sequence of equal-length windows starting at
//! a configurable hour of day.

use serde::{Deserialize, Serialize};

use crate::error::{DscError, Result};

/// Index of a grid cell, `0 <= id < n_grids`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridIndex(pub usize);

/// Index of a time window, `0 <= id < n_windows`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeIndex(pub usize);

/// How raw coordinates are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordSystem {
    /// Planar kilometres.
    #[default]
    Planar,
    /// WGS84 longitude/latitude in degrees, mapped to a local equirectangular frame.
    Wgs84,
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower-left corner, in the units of `coords`.
    pub origin: (f64, f64),
    pub cell_size_km: f64,
    pub cols: usize,
    pub rows: usize,
    #[serde(default)]
    pub coords: CoordSystem,
}

impl GridSpec {
    pub fn planar(cols: usize, rows: usize, cell_size_km: f64) -> Self {
        GridSpec { origin: (0.0, 0.0), cell_size_km, cols, rows, coords: CoordSystem::Planar }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(DscError::InvalidScenario("grid must have positive dimensions".into()));
        }
        if !(self.cell_size_km > 0.0) {
            return Err(DscError::InvalidScenario("cell_size_km must be positive".into()));
        }
        Ok(())
    }

    pub fn n_grids(&self) -> usize {
        self.cols * self.rows
    }

    /// Converts a raw coordinate into the local kilometre frame anchored at the origin.
    pub fn to_local_km(&self, x: f64, y: f64) -> (f64, f64) {
        match self.coords {
            CoordSystem::Planar => (x - self.origin.0, y - self.origin.1),
            CoordSystem::Wgs84 => {
                let lat0 = self.origin.1.to_radians();
                let dx = (x - self.origin.0).to_radians() * EARTH_RADIUS_KM * lat0.cos();
                let dy = (y - self.origin.1).to_radians() * EARTH_RADIUS_KM;
                (dx, dy)
            }
        }
    }

    /// Cell containing a local-km point, or `None` outside the lattice.
    pub fn cell_of_local(&self, x: f64, y: f64) -> Option<GridIndex> {
        if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
            return None;
        }
        let col = (x / self.cell_size_km).floor() as usize;
        let row = (y / self.cell_size_km).floor() as usize;
        if col >= self.cols || row >= self.rows {
            return None;
        }
        Some(self.index(col, row))
    }

    /// Cell containing a raw coordinate (bounding-box lookup).
    pub fn cell_of(&self, x: f64, y: f64) -> Option<GridIndex> {
        let (lx, ly) = self.to_local_km(x, y);
        self.cell_of_local(lx, ly)
    }

    pub fn index(&self, col: usize, row: usize) -> GridIndex {
        GridIndex(row * self.cols + col)
    }

    pub fn col_row(&self, g: GridIndex) -> (usize, usize) {
        (g.0 % self.cols, g.0 / self.cols)
    }

    /// Cell centroid in local km.
    pub fn centroid(&self, g: GridIndex) -> (f64, f64) {
        let (c, r) = self.col_row(g);
        ((c as f64 + 0.5) * self.cell_size_km, (r as f64 + 0.5) * self.cell_size_km)
    }

    pub fn centroid_distance_km(&self, a: GridIndex, b: GridIndex) -> f64 {
        let (ax, ay) = self.centroid(a);
        let (bx, by) = self.centroid(b);
        (ax - bx).hypot(ay - by)
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(&self, a: GridIndex, b: GridIndex) -> usize {
        let (ac, ar) = self.col_row(a);
        let (bc, br) = self.col_row(b);
        ac.abs_diff(bc).max(ar.abs_diff(br))
    }

    /// 8-neighbourhood of a cell, in increasing index order.
    pub fn neighbours(&self, g: GridIndex) -> Vec<GridIndex> {
        let (c, r) = self.col_row(g);
        let mut out = Vec::with_capacity(8);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let nc = c as i64 + dc;
                let nr = r as i64 + dr;
                if nc >= 0 && nr >= 0 && (nc as usize) < self.cols && (nr as usize) < self.rows {
                    out.push(self.index(nc as usize, nr as usize));
                }
            }
        }
        out
    }
}

/// The discretized time horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub n_windows: usize,
    pub window_hours: f64,
    /// Hour of day at which window 0 starts.
    pub start_hour: f64,
}

impl Horizon {
    pub fn new(n_windows: usize, window_hours: f64, start_hour: f64) -> Self {
        Horizon { n_windows, window_hours, start_hour }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_windows == 0 {
            return Err(DscError::InvalidScenario("horizon must have at least one window".into()));
        }
        if !(self.window_hours > 0.0) {
            return Err(DscError::InvalidScenario("window_hours must be positive".into()));
        }
        Ok(())
    }

    /// Hour of day (mod 24) at which window `t` starts.
    pub fn window_start_hour(&self, t: TimeIndex) -> f64 {
        (self.start_hour + t.0 as f64 * self.window_hours).rem_euclid(24.0)
    }

    /// Window containing an hour of day, honouring horizons that wrap past midnight.
    pub fn window_of_hour(&self, hour: f64) -> Option<TimeIndex> {
        let offset = (hour - self.start_hour).rem_euclid(24.0);
        let t = (offset / self.window_hours).floor() as usize;
        (t < self.n_windows).then_some(TimeIndex(t))
    }

    /// Windows whose start hour lies in `[from, to)`.
    pub fn windows_between(&self, from: f64, to: f64) -> Vec<TimeIndex> {
        (0..self.n_windows)
            .map(TimeIndex)
            .filter(|&t| {
                let h = self.window_start_hour(t);
                h >= from - 1e-9 && h < to - 1e-9
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_and_centroid() {
        let spec = GridSpec::planar(4, 3, 1.0);
        assert_eq!(spec.cell_of(0.5, 0.5), Some(GridIndex(0)));
        assert_eq!(spec.cell_of(3.9, 2.1), Some(GridIndex(11)));
        assert_eq!(spec.cell_of(4.0, 0.0), None);
        assert_eq!(spec.cell_of(-0.1, 0.0), None);
        assert_eq!(spec.centroid(GridIndex(5)), (1.5, 1.5));
    }

    #[test]
    fn neighbours_corner_and_centre() {
        let spec = GridSpec::planar(3, 3, 1.0);
        assert_eq!(spec.neighbours(GridIndex(0)).len(), 3);
        assert_eq!(spec.neighbours(GridIndex(4)).len(), 8);
        assert_eq!(spec.chebyshev(GridIndex(0), GridIndex(8)), 2);
    }

    #[test]
    fn wgs84_local_frame() {
        let spec =
            GridSpec { origin: (104.0, 30.0), cell_size_km: 1.0, cols: 10, rows: 10, coords: CoordSystem::Wgs84 };
        // one hundredth of a degree of latitude is about 1.11 km
        let (_, y) = spec.to_local_km(104.0, 30.01);
        assert!((y - 1.112).abs() < 0.01);
        assert_eq!(spec.cell_of(104.0001, 30.01), Some(GridIndex(10)));
    }

    #[test]
    fn horizon_windows() {
        let day = Horizon::new(24, 1.0, 0.0);
        assert_eq!(day.window_of_hour(8.5), Some(TimeIndex(8)));
        assert_eq!(day.windows_between(8.0, 20.0).len(), 12);
        let evening = Horizon::new(12, 1.0, 8.0);
        assert_eq!(evening.window_of_hour(7.9), None);
        assert_eq!(evening.window_of_hour(19.5), Some(TimeIndex(11)));
        let wrap = Horizon::new(6, 1.0, 22.0);
        assert_eq!(wrap.window_of_hour(1.5), Some(TimeIndex(3)));
    }
}
