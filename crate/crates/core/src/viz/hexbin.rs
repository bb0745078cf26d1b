//! Weighted hexagonal binning with pointy-top axial coordinates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexCell {
    pub count: usize,
    pub weight_sum: f64,
}

impl HexCell {
    pub fn mean_score(&self) -> f64 {
        self.weight_sum / self.count as f64
    }
}

/// Score-weighted 2-D histogram over a hexagonal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HexbinGrid {
    pub cell_size: f64,
    /// Axial (q, r) coordinate -> accumulated cell.
    pub cells: BTreeMap<(i64, i64), HexCell>,
}

impl HexbinGrid {
    /// Assigns each `(x, y, score)` point to exactly one hexagon.
    pub fn build(points: &[(f64, f64, f64)], cell_size: f64) -> Result<HexbinGrid> {
        if cell_size <= 0.0 {
            return Err(Error::contract("hex cell size must be positive"));
        }
        let mut cells: BTreeMap<(i64, i64), HexCell> = BTreeMap::new();
        for &(x, y, score) in points {
            let key = axial_round(x / cell_size, y / cell_size);
            let cell = cells.entry(key).or_insert(HexCell {
                count: 0,
                weight_sum: 0.0,
            });
            cell.count += 1;
            cell.weight_sum += score;
        }
        Ok(HexbinGrid { cell_size, cells })
    }

    pub fn total_count(&self) -> usize {
        self.cells.values().map(|c| c.count).sum()
    }

    /// Center of a cell in data coordinates.
    pub fn cell_center(&self, q: i64, r: i64) -> (f64, f64) {
        let s = self.cell_size;
        let sqrt3 = 3.0f64.sqrt();
        (
            s * sqrt3 * (q as f64 + r as f64 / 2.0),
            s * 1.5 * r as f64,
        )
    }
}

/// Fractional axial coordinates of a pointy-top hex grid with unit size.
fn axial_fraction(x: f64, y: f64) -> (f64, f64) {
    let sqrt3 = 3.0f64.sqrt();
    let q = sqrt3 / 3.0 * x - y / 3.0;
    let r = 2.0 / 3.0 * y;
    (q, r)
}

/// Standard cube rounding of fractional axial coordinates.
fn axial_round(x: f64, y: f64) -> (i64, i64) {
    let (qf, rf) = axial_fraction(x, y);
    let sf = -qf - rf;
    let mut q = qf.round();
    let mut r = rf.round();
    let s = sf.round();
    let dq = (q - qf).abs();
    let dr = (r - rf).abs();
    let ds = (s - sf).abs();
    if dq > dr && dq > ds {
        q = -r - s;
    } else if dr > ds {
        r = -q - s;
    }
    (q as i64, r as i64)
}
