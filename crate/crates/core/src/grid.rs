//! Occupancy frames.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Binary `height x width` occupancy matrix, row-major, 1 = occupied.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridFrame {
    height: usize,
    width: usize,
    cells: Vec<u8>,
}

impl GridFrame {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            cells: vec![0; height * width],
        }
    }

    /// Builds a frame from raw cells; every byte must be 0 or 1.
    pub fn from_cells(height: usize, width: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != height * width {
            return Err(Error::ShapeMismatch {
                op: "grid_frame",
                expected: vec![height, width],
                got: vec![cells.len()],
            });
        }
        if let Some(pos) = cells.iter().position(|&c| c > 1) {
            return Err(Error::Format {
                format: "grid",
                offset: pos as u64,
                reason: format!("cell value {} is not binary", cells[pos]),
            });
        }
        Ok(Self {
            height,
            width,
            cells,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col] == 1
    }

    pub fn set(&mut self, row: usize, col: usize, occupied: bool) {
        self.cells[row * self.width + col] = u8::from(occupied);
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| f64::from(c)).collect()
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.height, self.width], self.to_f64()).expect("positive extent")
    }
}

/// Per-cell occupancy probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbFrame {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ProbFrame {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch {
                op: "prob_frame",
                expected: vec![height, width],
                got: vec![values.len()],
            });
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn uniform(height: usize, width: usize, p: f64) -> Self {
        Self {
            height,
            width,
            values: vec![p; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// A circular object in continuous grid coordinates: `x` runs along columns,
/// `y` along rows, one unit per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Object {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

pub type ObjectSet = Vec<Object>;

/// Marks cell `(i, j)` occupied iff its centre `(j + 0.5, i + 0.5)` lies within
/// some object's radius.
pub fn rasterize_objects(objects: &[Object], height: usize, width: usize) -> GridFrame {
    let mut frame = GridFrame::empty(height, width);
    for obj in objects {
        let r = obj.radius.max(0.0);
        let row_lo = (obj.y - r - 0.5).floor().max(0.0) as usize;
        let row_hi = ((obj.y + r - 0.5).ceil().max(-1.0) + 1.0).min(height as f64) as usize;
        let col_lo = (obj.x - r - 0.5).floor().max(0.0) as usize;
        let col_hi = ((obj.x + r - 0.5).ceil().max(-1.0) + 1.0).min(width as f64) as usize;
        for i in row_lo..row_hi {
            for j in col_lo..col_hi {
                let (dx, dy) = (j as f64 + 0.5 - obj.x, i as f64 + 0.5 - obj.y);
                if dx * dx + dy * dy <= r * r {
                    frame.set(i, j, true);
                }
            }
        }
    }
    frame
}
