use nalgebra::Vector2;

use crate::{Error, Result};

/// Square-cell elevation grid. Cell `(col, row)` holds the elevation at world position
/// `origin + resolution * (col, row)`; rows run toward +y.
#[derive(Clone, Debug)]
pub struct DemRaster {
    resolution: f64,
    origin: Vector2<f64>,
    width: usize,
    height: usize,
    cells: Vec<f32>,
    slope_bound: f64,
}

impl PartialEq for DemRaster {
    fn eq(&self, other: &Self) -> bool {
        self.resolution == other.resolution
            && self.origin == other.origin
            && self.width == other.width
            && self.height == other.height
            && self.cells == other.cells
    }
}

impl DemRaster {
    pub fn new(
        resolution: f64,
        origin: Vector2<f64>,
        width: usize,
        height: usize,
        cells: Vec<f32>,
    ) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::Config(format!("DEM resolution must be positive, got {resolution}")));
        }
        if width < 2 || height < 2 || cells.len() != width * height {
            return Err(Error::Config(format!(
                "DEM needs at least 2x2 cells and width*height values (got {width}x{height}, {} values)",
                cells.len()
            )));
        }
        if let Some(i) = cells.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite DEM elevation at cell index {i}")));
        }
        let slope_bound = slope_bound(resolution, width, height, &cells);
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            cells,
            slope_bound,
        })
    }

    /// Flat grid of constant elevation, mostly for tests.
    pub fn flat(resolution: f64, origin: Vector2<f64>, width: usize, height: usize, z: f32) -> Self {
        Self::new(resolution, origin, width, height, vec![z; width * height])
            .expect("flat DEM parameters are valid")
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vector2<f64> {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[f32] {
        &self.cells
    }

    pub fn cell(&self, col: usize, row: usize) -> f32 {
        self.cells[row * self.width + col]
    }

    /// Upper bound on the magnitude of the bilinear surface gradient anywhere on the grid.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    /// World extent as (min corner, max corner) of the sample lattice.
    pub fn bounds(&self) -> (Vector2<f64>, Vector2<f64>) {
        let max = self.origin
            + Vector2::new(
                (self.width - 1) as f64 * self.resolution,
                (self.height - 1) as f64 * self.resolution,
            );
        (self.origin, max)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lo, hi) = self.bounds();
        x >= lo.x && y >= lo.y && x <= hi.x && y <= hi.y
    }

    /// Bilinear elevation, `None` outside the grid.
    #[inline]
    pub fn elevation(&self, x: f64, y: f64) -> Option<f64> {
        let fx = (x - self.origin.x) / self.resolution;
        let fy = (y - self.origin.y) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if fx > max_x || fy > max_y {
            return None;
        }
        let i = (fx as usize).min(self.width - 2);
        let j = (fy as usize).min(self.height - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let k = j * self.width + i;
        let z00 = self.cells[k] as f64;
        let z10 = self.cells[k + 1] as f64;
        let z01 = self.cells[k + self.width] as f64;
        let z11 = self.cells[k + self.width + 1] as f64;
        let a = z00 + (z10 - z00) * tx;
        let b = z01 + (z11 - z01) * tx;
        Some(a + (b - a) * ty)
    }

    pub fn elevation_checked(&self, x: f64, y: f64) -> Result<f64> {
        self.elevation(x, y).ok_or(Error::OutOfBounds { x, y })
    }
}

fn slope_bound(resolution: f64, width: usize, height: usize, cells: &[f32]) -> f64 {
    let mut gx = 0.0f64;
    let mut gy = 0.0f64;
    for row in 0..height {
        let r = &cells[row * width..(row + 1) * width];
        for w in r.windows(2) {
            gx = gx.max((w[1] - w[0]).abs() as f64);
        }
        if row + 1 < height {
            let up = &cells[(row + 1) * width..(row + 2) * width];
            for (a, b) in r.iter().zip(up) {
                gy = gy.max((b - a).abs() as f64);
            }
        }
    }
    // |d/ds| <= |dz/dx| + |dz/dy| for any unit direction on a bilinear patch
    (gx + gy) / resolution
}
