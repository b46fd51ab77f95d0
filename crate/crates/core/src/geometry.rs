//! Coverage geometry: positions, resolution levels, coverage disks and the
//! raster area machinery behind the overlap ratio.
//!
//! Areas are measured on a regular raster laid over the field. A cell is
//! counted for a disk when the cell *center* lies inside the closed disk, so
//! every set identity (union, exclusive parts, multiply-covered parts) holds
//! exactly at the cell-count level.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coverage union has zero area")]
    ZeroUnion,
    #[error("invalid raster cell size {0}")]
    InvalidCell(f64),
    #[error("disk index {index} out of range for {len} disks")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("resolution set must be non-empty, strictly increasing and positive")]
    InvalidResolutions,
    #[error("resolution index {0} out of range")]
    InvalidLevel(usize),
}

/// A point on the surveillance field, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    libm::hypot(a.x - b.x, a.y - b.y)
}

/// Axis-aligned field `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Field {
    pub const fn square(size: f64) -> Self {
        Self {
            width: size,
            height: size,
        }
    }

    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.width, self.height)
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

/// One surveillance resolution: its index in the ordered set and its pixel
/// height (720, 1080, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResolutionLevel {
    pub index: usize,
    pub pixels: u32,
}

/// Radius of the disk covered at `pixels`, given the radius `r0` covered at
/// the lowest resolution `lowest_pixels`. Area shrinks as resolution grows.
pub fn coverage_radius(pixels: u32, lowest_pixels: u32, r0: f64) -> f64 {
    r0 * f64::from(lowest_pixels) / f64::from(pixels)
}

/// Ordered resolution levels plus the base radius at the lowest level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSet {
    pixels: Vec<u32>,
    base_radius: f64,
}

impl ResolutionSet {
    pub fn new(pixels: Vec<u32>, base_radius: f64) -> Result<Self, GeometryError> {
        let increasing = pixels.windows(2).all(|w| w[0] < w[1]);
        if pixels.is_empty() || !increasing || pixels[0] == 0 || !(base_radius > 0.0) {
            return Err(GeometryError::InvalidResolutions);
        }
        Ok(Self { pixels, base_radius })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn level(&self, index: usize) -> Result<ResolutionLevel, GeometryError> {
        self.pixels
            .get(index)
            .map(|&pixels| ResolutionLevel { index, pixels })
            .ok_or(GeometryError::InvalidLevel(index))
    }

    pub fn lowest(&self) -> ResolutionLevel {
        ResolutionLevel {
            index: 0,
            pixels: self.pixels[0],
        }
    }

    pub fn highest(&self) -> ResolutionLevel {
        let index = self.pixels.len() - 1;
        ResolutionLevel {
            index,
            pixels: self.pixels[index],
        }
    }

    /// Level one step up or down, clamped to the ends of the set.
    pub fn shift(&self, level: ResolutionLevel, up: bool) -> ResolutionLevel {
        let index = if up {
            (level.index + 1).min(self.pixels.len() - 1)
        } else {
            level.index.saturating_sub(1)
        };
        ResolutionLevel {
            index,
            pixels: self.pixels[index],
        }
    }

    pub fn radius(&self, level: ResolutionLevel) -> f64 {
        coverage_radius(level.pixels, self.pixels[0], self.base_radius)
    }

    /// Largest radius, reached at the lowest resolution.
    pub fn max_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn min_radius(&self) -> f64 {
        self.radius(self.highest())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageDisk {
    pub center: Position,
    pub radius: f64,
}

impl CoverageDisk {
    pub const fn new(center: Position, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: Position) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        dx * dx + dy * dy <= self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        core::f64::consts::PI * self.radius * self.radius
    }
}

/// Raster over a field. Cell `(i, j)` has its center at
/// `((i + 0.5) * cell, (j + 0.5) * cell)`; cells whose center falls outside
/// the field are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Raster {
    pub field: Field,
    pub cell: f64,
    columns: usize,
    rows: usize,
}

impl Raster {
    pub fn new(field: Field, cell: f64) -> Result<Self, GeometryError> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(GeometryError::InvalidCell(cell));
        }
        let count = |extent: f64| {
            let mut n = libm::ceil(extent / cell).max(0.0) as usize;
            while n > 0 && (n as f64 - 0.5) * cell > extent {
                n -= 1;
            }
            n
        };
        Ok(Self {
            field,
            cell,
            columns: count(field.width),
            rows: count(field.height),
        })
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }

    pub fn cell_center(&self, column: usize, row: usize) -> Position {
        Position::new(
            (column as f64 + 0.5) * self.cell,
            (row as f64 + 0.5) * self.cell,
        )
    }

    /// Inclusive column span of `disk` in `row`, if any cell center is inside.
    fn row_span(&self, disk: &CoverageDisk, row: usize) -> Option<(usize, usize)> {
        if self.columns == 0 {
            return None;
        }
        let y = (row as f64 + 0.5) * self.cell;
        let dy = y - disk.center.y;
        let r2 = disk.radius * disk.radius;
        if dy * dy > r2 {
            return None;
        }
        let half = libm::sqrt(r2 - dy * dy);
        let inside = |column: usize| {
            let dx = (column as f64 + 0.5) * self.cell - disk.center.x;
            dx * dx + dy * dy <= r2
        };
        let last = self.columns as i64 - 1;
        let lo_guess = libm::ceil((disk.center.x - half) / self.cell - 0.5) as i64;
        let hi_guess = libm::floor((disk.center.x + half) / self.cell - 0.5) as i64;
        let mut lo = lo_guess.clamp(0, last) as usize;
        let mut hi = hi_guess.clamp(0, last) as usize;
        // Snap the analytic guesses onto the exact cell-center predicate.
        while lo > 0 && inside(lo - 1) {
            lo -= 1;
        }
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        if lo > hi {
            return None;
        }
        while (hi as i64) < last && inside(hi + 1) {
            hi += 1;
        }
        while hi > lo && !inside(hi) {
            hi -= 1;
        }
        Some((lo, hi))
    }

    /// Count covered cells for a set of disks.
    pub fn coverage(&self, disks: &[CoverageDisk]) -> CoverageCounts {
        let mut counts = CoverageCounts {
            union_cells: 0,
            multi_cells: 0,
            exclusive_cells: vec![0; disks.len()],
            cell_area: self.cell_area(),
        };
        // (column, +1/-1, disk)
        let mut events: Vec<(usize, i32, usize)> = Vec::with_capacity(2 * disks.len());
        for row in 0..self.rows {
            events.clear();
            for (k, disk) in disks.iter().enumerate() {
                if let Some((lo, hi)) = self.row_span(disk, row) {
                    events.push((lo, 1, k));
                    events.push((hi + 1, -1, k));
                }
            }
            if events.is_empty() {
                continue;
            }
            events.sort_unstable_by_key(|&(column, delta, k)| (column, delta, k));
            let mut active = 0usize;
            // Sum of active disk indices; equals the lone index when active == 1.
            let mut index_sum = 0usize;
            let mut cursor = events[0].0;
            for &(column, delta, k) in events.iter() {
                let span = (column - cursor) as u64;
                if span > 0 {
                    match active {
                        0 => {}
                        1 => {
                            counts.union_cells += span;
                            counts.exclusive_cells[index_sum] += span;
                        }
                        _ => {
                            counts.union_cells += span;
                            counts.multi_cells += span;
                        }
                    }
                    cursor = column;
                }
                if delta > 0 {
                    active += 1;
                    index_sum += k;
                } else {
                    active -= 1;
                    index_sum -= k;
                }
            }
        }
        counts
    }
}

/// Cell counts produced by [`Raster::coverage`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCounts {
    /// Cells covered by at least one disk.
    pub union_cells: u64,
    /// Cells covered by two or more disks.
    pub multi_cells: u64,
    /// Per disk: cells covered by that disk and no other.
    pub exclusive_cells: Vec<u64>,
    pub cell_area: f64,
}

impl CoverageCounts {
    pub fn union_area(&self) -> f64 {
        self.union_cells as f64 * self.cell_area
    }

    pub fn exclusive_area(&self, index: usize) -> f64 {
        self.exclusive_cells[index] as f64 * self.cell_area
    }

    /// `1 - sum(exclusive) / union`.
    pub fn overlap_ratio(&self) -> Result<f64, GeometryError> {
        if self.union_cells == 0 {
            return Err(GeometryError::ZeroUnion);
        }
        let exclusive: u64 = self.exclusive_cells.iter().sum();
        Ok(1.0 - exclusive as f64 / self.union_cells as f64)
    }
}

/// Raster area of the union of `disks`, clipped to `field`.
pub fn union_area(disks: &[CoverageDisk], field: Field, cell: f64) -> Result<f64, GeometryError> {
    Ok(Raster::new(field, cell)?.coverage(disks).union_area())
}

/// Raster area of disk `index` minus every other disk.
pub fn exclusive_area(
    disks: &[CoverageDisk],
    index: usize,
    field: Field,
    cell: f64,
) -> Result<f64, GeometryError> {
    if index >= disks.len() {
        return Err(GeometryError::IndexOutOfRange {
            index,
            len: disks.len(),
        });
    }
    Ok(Raster::new(field, cell)?.coverage(disks).exclusive_area(index))
}

/// Overlap ratio of a disk set. Errors with [`GeometryError::ZeroUnion`]
/// when nothing is covered; callers treat that case as no overlap.
pub fn overlap_ratio(disks: &[CoverageDisk], field: Field, cell: f64) -> Result<f64, GeometryError> {
    Raster::new(field, cell)?.coverage(disks).overlap_ratio()
}
