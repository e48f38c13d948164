//! Fracture segments, configurations and their rasterisation onto a grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CartesianGrid, FieldKind, ScalarField};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("segment {index}: length must be positive and finite, got {value}")]
    BadLength { index: usize, value: f64 },
    #[error("segment {index}: aperture must be positive and finite, got {value}")]
    BadAperture { index: usize, value: f64 },
    #[error("segment {index}: centre is not finite")]
    BadCenter { index: usize },
    #[error("domain side must be positive, got {0}")]
    BadSide(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
    /// Angle from the +x axis, radians.
    Oblique(f64),
}

impl Orientation {
    pub fn direction(&self) -> [f64; 2] {
        match *self {
            Orientation::Horizontal => [1.0, 0.0],
            Orientation::Vertical => [0.0, 1.0],
            Orientation::Oblique(a) => [a.cos(), a.sin()],
        }
    }

    pub fn is_axis_aligned(&self) -> bool {
        !matches!(self, Orientation::Oblique(_))
    }
}

/// A straight fracture: centreline of `length` through `center`, with a
/// transverse opening of `aperture`. All quantities in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractureSegment {
    pub orientation: Orientation,
    pub center: [f64; 2],
    pub length: f64,
    pub aperture: f64,
}

impl FractureSegment {
    pub fn horizontal(center: [f64; 2], length: f64, aperture: f64) -> Self {
        Self {
            orientation: Orientation::Horizontal,
            center,
            length,
            aperture,
        }
    }

    pub fn vertical(center: [f64; 2], length: f64, aperture: f64) -> Self {
        Self {
            orientation: Orientation::Vertical,
            center,
            length,
            aperture,
        }
    }

    pub fn endpoints(&self) -> ([f64; 2], [f64; 2]) {
        let d = self.orientation.direction();
        let h = 0.5 * self.length;
        (
            [self.center[0] - h * d[0], self.center[1] - h * d[1]],
            [self.center[0] + h * d[0], self.center[1] + h * d[1]],
        )
    }

    fn validate(&self, index: usize) -> Result<(), GeometryError> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(GeometryError::BadLength { index, value: self.length });
        }
        if !(self.aperture.is_finite() && self.aperture > 0.0) {
            return Err(GeometryError::BadAperture { index, value: self.aperture });
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(GeometryError::BadCenter { index });
        }
        Ok(())
    }

    /// Clips the centreline to `[0, side]^2` (Liang-Barsky). Returns `None` when
    /// nothing of positive length remains inside.
    pub fn clipped(&self, side: f64) -> Option<FractureSegment> {
        let (p0, p1) = self.endpoints();
        let d = [p1[0] - p0[0], p1[1] - p0[1]];
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for axis in 0..2 {
            for (p, q) in [(-d[axis], p0[axis]), (d[axis], side - p0[axis])] {
                if p == 0.0 {
                    if q < 0.0 {
                        return None;
                    }
                } else {
                    let r = q / p;
                    if p < 0.0 {
                        t0 = t0.max(r);
                    } else {
                        t1 = t1.min(r);
                    }
                }
            }
        }
        if t1 <= t0 {
            return None;
        }
        if t0 == 0.0 && t1 == 1.0 {
            return Some(*self);
        }
        let tc = 0.5 * (t0 + t1);
        Some(FractureSegment {
            center: [p0[0] + tc * d[0], p0[1] + tc * d[1]],
            length: (t1 - t0) * self.length,
            ..*self
        })
    }

    /// Whether a point lies in the fracture's footprint, with the footprint's
    /// transverse and longitudinal extents floored at `min_extent`.
    pub fn covers(&self, p: [f64; 2], min_extent: f64) -> bool {
        let half_len = 0.5 * self.length.max(min_extent);
        let half_ap = 0.5 * self.aperture.max(min_extent);
        match self.orientation {
            Orientation::Horizontal => {
                (p[0] - self.center[0]).abs() <= half_len && (p[1] - self.center[1]).abs() <= half_ap
            }
            Orientation::Vertical => {
                (p[1] - self.center[1]).abs() <= half_len && (p[0] - self.center[0]).abs() <= half_ap
            }
            Orientation::Oblique(_) => {
                let d = self.orientation.direction();
                let rx = p[0] - self.center[0];
                let ry = p[1] - self.center[1];
                let along = (rx * d[0] + ry * d[1]).clamp(-half_len, half_len);
                let qx = rx - along * d[0];
                let qy = ry - along * d[1];
                (qx * qx + qy * qy).sqrt() <= half_ap
            }
        }
    }
}

/// The initial fracture configuration shared by both simulators and the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractureConfig {
    pub side_length: f64,
    pub segments: Vec<FractureSegment>,
}

impl FractureConfig {
    pub fn new(side_length: f64, segments: Vec<FractureSegment>) -> Result<Self, GeometryError> {
        let c = Self { side_length, segments };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(side_length: f64) -> Self {
        Self {
            side_length,
            segments: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.side_length.is_finite() && self.side_length > 0.0) {
            return Err(GeometryError::BadSide(self.side_length));
        }
        for (k, s) in self.segments.iter().enumerate() {
            s.validate(k)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Debug)]
pub struct Raster {
    /// Binary cell field (0 intact, 1 fractured).
    pub field: ScalarField,
    /// Segments that had no extent left inside the domain after clipping.
    pub skipped: usize,
}

/// Marks every cell whose centre lies in some segment's footprint.
///
/// Segments are clipped to the domain first. The footprint's width and length
/// are floored at one cell so that every fracture inside the domain occupies at
/// least one cell on coarse grids. Axis-aligned segments use a rectangle test;
/// oblique ones use distance-to-centreline.
pub fn rasterize_config(config: &FractureConfig, grid: &CartesianGrid) -> Raster {
    let mut field = ScalarField::zeros(*grid, FieldKind::Cell);
    let mut skipped = 0;
    for seg in &config.segments {
        match seg.clipped(config.side_length) {
            Some(c) => {
                for (i, j) in segment_cells(&c, grid) {
                    field.values[grid.cell_index(i, j)] = 1.0;
                }
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} fracture segment(s) lie outside the domain and were skipped");
    }
    Raster { field, skipped }
}

/// Cells `(i, j)` covered by an already-clipped segment.
pub fn segment_cells(seg: &FractureSegment, grid: &CartesianGrid) -> Vec<(usize, usize)> {
    let min_extent = grid.cell_size();
    let (lo, hi) = footprint_bounds(seg, min_extent);
    let (i0, j0) = grid.cell_of(lo);
    let (i1, j1) = grid.cell_of(hi);
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            if seg.covers(grid.cell_center(i, j), min_extent) {
                out.push((i, j));
            }
        }
    }
    if out.is_empty() && !seg.orientation.is_axis_aligned() {
        out.push(grid.cell_of(seg.center));
    }
    out
}

fn footprint_bounds(seg: &FractureSegment, min_extent: f64) -> ([f64; 2], [f64; 2]) {
    let (p0, p1) = seg.endpoints();
    let half_len_pad = 0.5 * (seg.length.max(min_extent) - seg.length).max(0.0);
    let pad = 0.5 * seg.aperture.max(min_extent) + half_len_pad;
    (
        [p0[0].min(p1[0]) - pad, p0[1].min(p1[1]) - pad],
        [p0[0].max(p1[0]) + pad, p0[1].max(p1[1]) + pad],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> CartesianGrid {
        CartesianGrid::square(n, 1.0).unwrap()
    }

    #[test]
    fn full_width_segment_marks_one_row() {
        let g = grid(16);
        let h = g.hy();
        let row = 5;
        let cy = (row as f64 + 0.5) * h;
        let cfg = FractureConfig::new(1.0, vec![FractureSegment::horizontal([0.5, cy], 1.0, h)]).unwrap();
        let r = rasterize_config(&cfg, &g);
        for j in 0..16 {
            for i in 0..16 {
                let expect = if j == row { 1.0 } else { 0.0 };
                assert_eq!(r.field.values[g.cell_index(i, j)], expect, "cell {i},{j}");
            }
        }
    }

    #[test]
    fn empty_config_is_all_zero() {
        let g = grid(8);
        let r = rasterize_config(&FractureConfig::empty(1.0), &g);
        assert!(r.field.values.iter().all(|&v| v == 0.0));
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn outside_segment_is_skipped() {
        let g = grid(8);
        let cfg = FractureConfig::new(1.0, vec![FractureSegment::horizontal([0.5, 1.5], 0.3, 0.01)]).unwrap();
        let r = rasterize_config(&cfg, &g);
        assert_eq!(r.skipped, 1);
        assert!(r.field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clipping_keeps_inside_part() {
        let s = FractureSegment::horizontal([0.9, 0.5], 0.4, 0.01);
        let c = s.clipped(1.0).unwrap();
        assert!((c.length - 0.3).abs() < 1e-12);
        assert!((c.center[0] - 0.85).abs() < 1e-12);
        let (a, b) = c.endpoints();
        assert!(a[0] >= 0.0 && b[0] <= 1.0 + 1e-12);
    }

    #[test]
    fn oblique_clipping_stays_in_domain() {
        let s = FractureSegment {
            orientation: Orientation::Oblique(0.7),
            center: [0.05, 0.05],
            length: 0.5,
            aperture: 0.01,
        };
        let c = s.clipped(1.0).unwrap();
        let (a, b) = c.endpoints();
        for p in [a, b] {
            assert!(p[0] >= -1e-12 && p[0] <= 1.0 + 1e-12 && p[1] >= -1e-12 && p[1] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn invalid_segments_are_rejected() {
        let e = FractureConfig::new(1.0, vec![FractureSegment::horizontal([0.5, 0.5], 0.0, 0.01)]);
        assert_eq!(e, Err(GeometryError::BadLength { index: 0, value: 0.0 }));
        let e = FractureConfig::new(1.0, vec![FractureSegment::vertical([0.5, 0.5], 0.1, -1.0)]);
        assert_eq!(e, Err(GeometryError::BadAperture { index: 0, value: -1.0 }));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let cfg = FractureConfig::new(
            0.25,
            vec![
                FractureSegment::horizontal([0.1234567890123, 0.2], 0.0311, 0.000_713_2),
                FractureSegment {
                    orientation: Orientation::Oblique(1.234_567_890_123_456_7),
                    center: [0.01, 0.2],
                    length: 0.04,
                    aperture: 0.0049,
                },
            ],
        )
        .unwrap();
        let back = FractureConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        for (a, b) in back.segments.iter().zip(&cfg.segments) {
            assert_eq!(a.center[0].to_bits(), b.center[0].to_bits());
            assert_eq!(a.aperture.to_bits(), b.aperture.to_bits());
        }
    }
}
