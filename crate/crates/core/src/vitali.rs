//! Greedy Vitali selection and the truncation windows `E_n = ⋃_{j=n}^{m_n} B_j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lab::LimsupFamily;
use crate::torus::{torus_distance, Ball, TorusPoint};

pub const EXPANSION_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSelection {
    /// Kept positions in the input list, or family indices when built from a
    /// family.
    pub kept_indices: Vec<usize>,
    pub expansion_factor: f64,
    /// Upper bound `min(1, 5^d Σ λ(B_k))` on the measure of the expanded union.
    pub coverage_measure: f64,
    /// `Σ λ(B_k)` over kept balls.
    pub disjoint_sum: f64,
    #[serde(skip)]
    pub kept: Vec<Ball>,
}

impl CoverSelection {
    /// True if `p` lies in some 5×-expanded kept ball (as a metric ball).
    pub fn expanded_contains(&self, p: &TorusPoint) -> bool {
        self.kept.iter().any(|b| torus_distance(b.center(), p).is_ok_and(|d| d < self.expansion_factor * b.radius()))
    }
}

/// Keeps balls largest-first (ties by position), each disjoint from all
/// balls kept before it.
///
/// Every discarded ball meets a kept ball of at least its radius and hence
/// lies in that ball's 5× (in fact 3×) enlargement, taken as a metric ball.
pub fn vitali_select(balls: &[Ball]) -> Result<CoverSelection> {
    let Some(first) = balls.first() else {
        return Err(invalid("Vitali selection needs at least one ball"));
    };
    let d = first.dim();
    if let Some(b) = balls.iter().find(|b| b.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].radius().total_cmp(&balls[a].radius()).then(a.cmp(&b)));
    let mut kept_idx: Vec<usize> = Vec::new();
    for i in order {
        if kept_idx.iter().all(|&k| balls[k].is_separated_from(&balls[i])) {
            kept_idx.push(i);
        }
    }
    let kept: Vec<Ball> = kept_idx.iter().map(|&i| balls[i].clone()).collect();
    let disjoint_sum: f64 = kept.iter().map(Ball::measure).sum();
    Ok(CoverSelection {
        kept_indices: kept_idx,
        expansion_factor: EXPANSION_FACTOR,
        coverage_measure: (EXPANSION_FACTOR.powi(d as i32) * disjoint_sum).min(1.0),
        disjoint_sum,
        kept,
    })
}

/// A bitset of `2^{g d}` cells; a cell is occupied when its center lies in
/// some rasterized ball.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    d: usize,
    resolution: u32,
    bits: Vec<u64>,
    occupied: u64,
}

impl OccupancyGrid {
    pub fn new(d: usize, resolution: u32) -> Result<Self> {
        let cells = 1u64.checked_shl(resolution * d as u32).filter(|_| resolution * (d as u32) < 40);
        let Some(cells) = cells else {
            return Err(Error::GridTooLarge { cells: u64::MAX, cap: 1 << 40 });
        };
        Ok(OccupancyGrid { d, resolution, bits: vec![0; cells.div_ceil(64) as usize], occupied: 0 })
    }

    /// Default resolution exponent: 12 for `d = 1`, 9 for `d = 2`, and
    /// smaller above.
    pub fn default_resolution(d: usize) -> u32 {
        match d {
            1 => 12,
            2 => 9,
            3 => 6,
            _ => (18 / d as u32).max(1),
        }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    fn side(&self) -> u64 {
        1 << self.resolution
    }

    pub fn total_cells(&self) -> u64 {
        self.side().pow(self.d as u32)
    }

    pub fn measure(&self) -> f64 {
        self.occupied as f64 / self.total_cells() as f64
    }

    fn set(&mut self, key: u64) {
        let (w, b) = ((key / 64) as usize, key % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.occupied += 1;
        }
    }

    pub fn insert_ball(&mut self, ball: &Ball) -> Result<()> {
        if ball.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: ball.dim() });
        }
        let n = self.side() as i64;
        let h = 1.0 / n as f64;
        let r = ball.radius();
        let c = ball.center().coords();
        // cell k has center (k + 1/2) h; candidate k with |center - c| < r
        let ranges: Vec<(i64, i64)> =
            c.iter().map(|&x| (((x - r) / h - 0.5).ceil() as i64, ((x + r) / h - 0.5).floor() as i64)).collect();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|(a, b)| a > b) {
            return Ok(());
        }
        loop {
            let mut dist2 = 0.0;
            let mut key = 0u64;
            let mut mul = 1u64;
            for i in 0..self.d {
                let off = (idx[i] as f64 + 0.5) * h - c[i];
                dist2 += off * off;
                key += idx[i].rem_euclid(n) as u64 * mul;
                mul *= n as u64;
            }
            if dist2 < r * r {
                self.set(key);
            }
            let mut axis = 0;
            loop {
                if axis == self.d {
                    return Ok(());
                }
                idx[axis] += 1;
                if idx[axis] <= ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationWindow {
    pub n: usize,
    /// First index scanned: `max(n, first admissible index)`.
    pub start: usize,
    pub m_n: usize,
    pub achieved_measure: f64,
    pub resolution: u32,
    pub max_j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationOptions {
    pub resolution: Option<u32>,
    pub max_j: usize,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        TruncationOptions { resolution: None, max_j: 1_000_000 }
    }
}

const SCAN_BATCH: usize = 256;

/// Smallest `m_n` with grid-estimated `λ(⋃_{j=n}^{m_n} B_j) > 1 - 1/n`.
pub fn find_truncation(family: &LimsupFamily, n: usize, opts: &TruncationOptions) -> Result<TruncationWindow> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let g = opts.resolution.unwrap_or_else(|| OccupancyGrid::default_resolution(family.d));
    let mut grid = OccupancyGrid::new(family.d, g)?;
    let target = 1.0 - 1.0 / n as f64;
    let start = n.max(family.first_index);
    let last = family.last_index().map_or(opts.max_j, |l| l.min(opts.max_j));
    let mut j = start;
    while j <= last {
        let hi = (j + SCAN_BATCH - 1).min(last);
        let balls: Vec<Ball> =
            (j..=hi).into_par_iter().map(|k| family.entry(k).map(|e| e.ball)).collect::<Result<_>>()?;
        for (k, b) in (j..=hi).zip(&balls) {
            grid.insert_ball(b)?;
            if grid.measure() > target {
                return Ok(TruncationWindow {
                    n,
                    start,
                    m_n: k,
                    achieved_measure: grid.measure(),
                    resolution: g,
                    max_j: opts.max_j,
                });
            }
        }
        j = hi + 1;
    }
    Err(Error::BudgetExceeded(format!(
        "union of B_{start}..B_{last} reached measure {:.4}, target {:.4} (grid 2^-{g})",
        grid.measure(),
        target
    )))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedUnion {
    pub window: TruncationWindow,
    /// Kept family indices (the set `K_n`).
    pub selection: CoverSelection,
    /// `λ(Ẽ_n)`, exactly the disjoint sum.
    pub measure: f64,
    /// `5^{-d}(1 - 1/n)`.
    pub lower_target: f64,
    pub holds: bool,
}

/// Applies [`vitali_select`] to the balls of the window and checks
/// `λ(Ẽ_n) > 5^{-d}(1 - 1/n)`.
pub fn build_selected_union(family: &LimsupFamily, window: &TruncationWindow) -> Result<SelectedUnion> {
    if window.m_n < window.start {
        return Err(invalid("truncation window is empty"));
    }
    let entries = family.entries(window.start, window.m_n)?;
    let balls: Vec<Ball> = entries.iter().map(|e| e.ball.clone()).collect();
    let mut selection = vitali_select(&balls)?;
    selection.kept_indices = selection.kept_indices.iter().map(|&i| entries[i].index).collect();
    let measure = selection.disjoint_sum;
    let lower_target = EXPANSION_FACTOR.powi(-(family.d as i32)) * (1.0 - 1.0 / window.n as f64);
    Ok(SelectedUnion {
        window: window.clone(),
        holds: measure > lower_target && measure < 1.0,
        selection,
        measure,
        lower_target,
    })
}
