//! Dyadic outer content restricted to uniform-depth covers.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::covering::{count_cells, AxisBox, DEFAULT_CELL_CAP};

/// The half-open dyadic cube `Π [k_i 2^{-level}, (k_i+1) 2^{-level})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub corner: Vec<u64>,
}

impl DyadicCube {
    pub fn unit(d: usize) -> Self {
        DyadicCube { level: 0, corner: vec![0; d] }
    }

    pub fn new(level: u32, corner: Vec<u64>) -> Result<Self> {
        if level > 52 {
            return Err(invalid("dyadic level above 52 is below f64 resolution"));
        }
        if corner.is_empty() || corner.iter().any(|&k| k >= 1u64 << level) {
            return Err(invalid(format!("corner {corner:?} is outside the level-{level} grid")));
        }
        Ok(DyadicCube { level, corner })
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Euclidean diameter `√d · side`.
    pub fn diameter(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side()
    }

    fn as_box(&self) -> AxisBox {
        let s = self.side();
        AxisBox {
            lo: self.corner.iter().map(|&k| k as f64 * s).collect(),
            hi: self.corner.iter().map(|&k| (k + 1) as f64 * s).collect(),
        }
    }
}

/// A finite approximation of a set: points, open boxes, or both.
#[derive(Debug, Clone, Default)]
pub struct ContentSet {
    pub points: Vec<Vec<f64>>,
    pub boxes: Vec<AxisBox>,
}

impl ContentSet {
    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        ContentSet { points, boxes: Vec::new() }
    }

    pub fn from_boxes(boxes: Vec<AxisBox>) -> Self {
        ContentSet { points: Vec::new(), boxes }
    }

    fn all(&self) -> Vec<AxisBox> {
        let mut v = self.boxes.clone();
        v.extend(self.points.iter().map(|p| AxisBox::point(p)));
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub cube: DyadicCube,
    pub t: f64,
    /// Depth attaining the minimum.
    pub depth: u32,
    pub value: f64,
    /// `(depth, Σ |D_k|^t)` for every depth examined.
    pub per_depth: Vec<(u32, f64)>,
    /// `value / |cube|^t`.
    pub ratio: f64,
}

/// Minimum over depths `cube.level..=max_depth` of `N_ℓ · (√d 2^{-ℓ})^t`,
/// where `N_ℓ` counts the depth-`ℓ` sub-cubes of `cube` meeting the set.
pub fn outer_content_estimate(set: &ContentSet, cube: &DyadicCube, t: f64, max_depth: u32) -> Result<ContentEstimate> {
    let d = cube.dim();
    if !(t > 0.0 && t <= d as f64) {
        return Err(invalid(format!("t = {t} must lie in (0, {d}]")));
    }
    if max_depth < cube.level {
        return Err(invalid(format!("max depth {max_depth} is above the cube level {}", cube.level)));
    }
    if max_depth > 52 {
        return Err(invalid("max depth above 52 is below f64 resolution"));
    }
    let items = set.all();
    if let Some(b) = items.iter().find(|b| b.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
    }
    let window = cube.as_box();
    let mut per_depth = Vec::new();
    for depth in cube.level..=max_depth {
        let side = (-(depth as f64)).exp2();
        let n = count_cells(&items, side, Some(&window), DEFAULT_CELL_CAP)?;
        per_depth.push((depth, n as f64 * ((d as f64).sqrt() * side).powf(t)));
    }
    let (depth, value) =
        per_depth.iter().copied().fold((cube.level, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(ContentEstimate { cube: cube.clone(), t, depth, value, per_depth, ratio: value / cube.diameter().powf(t) })
}
