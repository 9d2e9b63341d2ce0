//! Per-generation covering counts and intersection experiments.
//!
//! A finite union of open sets always has full box dimension, so each
//! generation of a family is counted at its own natural scale: the number of
//! grid cells of side `δ` (the generation's smallest set width) that meet the
//! generation's union. The slope of `ln N` against `ln(1/δ)` across
//! generations is the empirical dimension.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::fit_line;

use super::family::{FamilyKind, LimsupFamily};
use crate::bound::dimension_formula_d;

/// Default cap on stored cells per count.
pub const DEFAULT_CELL_CAP: u64 = 100_000_000;

/// An open axis-aligned box `(lo, hi)` inside `[0, 1]^d`, in unwrapped
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    /// Pushes the box `center ± half` onto `out`, split into pieces along the
    /// torus seams.
    pub fn push_wrapped(out: &mut Vec<AxisBox>, center: &[f64], half: &[f64]) {
        let segments: Vec<Vec<(f64, f64)>> = center
            .iter()
            .zip(half)
            .map(|(&c, &h)| {
                let c = crate::torus::wrap(c);
                if 2.0 * h >= 1.0 {
                    vec![(0.0, 1.0)]
                } else if c - h < 0.0 {
                    vec![(0.0, c + h), (c - h + 1.0, 1.0)]
                } else if c + h > 1.0 {
                    vec![(c - h, 1.0), (0.0, c + h - 1.0)]
                } else {
                    vec![(c - h, c + h)]
                }
            })
            .collect();
        let mut acc = vec![AxisBox { lo: vec![], hi: vec![] }];
        for segs in &segments {
            acc = acc
                .into_iter()
                .flat_map(|b| {
                    segs.iter().map(move |&(l, h)| {
                        let mut nb = b.clone();
                        nb.lo.push(l);
                        nb.hi.push(h);
                        nb
                    })
                })
                .collect();
        }
        out.extend(acc);
    }

    pub fn point(x: &[f64]) -> AxisBox {
        AxisBox { lo: x.to_vec(), hi: x.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(l, h)| l < h) {
            Some(AxisBox { lo, hi })
        } else {
            None
        }
    }

    fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

/// Inclusive range of cell indices `k` with `[kδ, (k+1)δ)` meeting `(lo, hi)`,
/// clipped to `0..n`. Degenerate boxes (`lo == hi`) are treated as points.
fn cell_range(lo: f64, hi: f64, delta: f64, n: u64) -> Option<(u64, u64)> {
    let first = (lo / delta).floor().max(0.0) as u64;
    let last = if hi > lo { ((hi / delta).ceil() as u64).saturating_sub(1) } else { (hi / delta).floor() as u64 };
    let last = last.min(n - 1);
    (first <= last).then_some((first, last))
}

/// Number of distinct cells of side `delta` meeting the union of `boxes`,
/// restricted to the cells inside `window` (the whole torus if `None`).
pub fn count_cells(boxes: &[AxisBox], delta: f64, window: Option<&AxisBox>, cap: u64) -> Result<u64> {
    let Some(first) = boxes.first() else {
        return Ok(0);
    };
    let d = first.dim();
    if !(delta > 0.0) {
        return Err(invalid("cell size must be positive"));
    }
    let n = (1.0 / delta).ceil() as u64;
    if (n as f64).powi(d as i32) >= 1.8e19 {
        return Err(Error::GridTooLarge { cells: u64::MAX, cap });
    }
    let mut keys: Vec<u64> = Vec::new();
    for b in boxes {
        let b = match window {
            Some(w) => match clip(b, w) {
                Some(c) => c,
                None => continue,
            },
            None => b.clone(),
        };
        let mut ranges = Vec::with_capacity(d);
        for i in 0..d {
            match cell_range(b.lo[i], b.hi[i], delta, n) {
                Some(r) => ranges.push(r),
                None => break,
            }
        }
        if ranges.len() < d {
            continue;
        }
        let size: u64 = ranges.iter().map(|(a, b)| b - a + 1).product();
        if keys.len() as u64 + size > cap {
            return Err(Error::GridTooLarge { cells: keys.len() as u64 + size, cap });
        }
        push_keys(&ranges, n, &mut keys);
    }
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len() as u64)
}

/// Clips an open box to a window; a degenerate (point) axis is kept when it
/// lies in the half-open window `[lo, hi)`.
fn clip(b: &AxisBox, w: &AxisBox) -> Option<AxisBox> {
    let mut out = AxisBox { lo: Vec::with_capacity(b.dim()), hi: Vec::with_capacity(b.dim()) };
    for i in 0..b.dim() {
        let (l, h) = (b.lo[i].max(w.lo[i]), b.hi[i].min(w.hi[i]));
        let keep = if b.lo[i] == b.hi[i] { b.lo[i] >= w.lo[i] && b.lo[i] < w.hi[i] } else { l < h };
        if !keep {
            return None;
        }
        out.lo.push(l);
        out.hi.push(h);
    }
    Some(out)
}

fn push_keys(ranges: &[(u64, u64)], n: u64, keys: &mut Vec<u64>) {
    fn rec(ranges: &[(u64, u64)], n: u64, axis: usize, base: u64, mul: u64, keys: &mut Vec<u64>) {
        if axis == ranges.len() {
            keys.push(base);
            return;
        }
        let (a, b) = ranges[axis];
        for k in a..=b {
            rec(ranges, n, axis + 1, base + k * mul, mul.wrapping_mul(n), keys);
        }
    }
    rec(ranges, n, 0, 0, 1, keys);
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringCountCurve {
    /// Generation starts (`Q` or `J`).
    pub starts: Vec<usize>,
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// Slope of `ln N` against `ln(1/δ)`, clamped to `[0, d]`.
    pub fitted_slope: f64,
    pub raw_slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

impl CoveringCountCurve {
    fn fit(d: usize, starts: Vec<usize>, scales: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        let xs: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
        let ys: Vec<f64> = counts.iter().map(|c| (*c as f64).ln()).collect();
        let fit = fit_line(&xs, &ys).ok_or_else(|| invalid("need at least two distinct scales to fit a slope"))?;
        let residuals = xs.iter().zip(&ys).map(|(x, y)| y - fit.intercept - fit.slope * x).collect();
        Ok(CoveringCountCurve {
            starts,
            scales,
            counts,
            fitted_slope: fit.slope.clamp(0.0, d as f64),
            raw_slope: fit.slope,
            intercept: fit.intercept,
            residuals,
        })
    }

    /// Two-column `delta,count` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,count\n");
        for (d, c) in self.scales.iter().zip(&self.counts) {
            s.push_str(&format!("{d:e},{c}\n"));
        }
        s
    }
}

fn check_starts(starts: &[usize]) -> Result<()> {
    if starts.len() < 2 {
        return Err(invalid("need at least two generations"));
    }
    if starts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("generation starts must increase (scales must decrease)"));
    }
    Ok(())
}

/// Covering counts of a family at the given generation starts.
pub fn covering_counts(family: &LimsupFamily, starts: &[usize], cap: u64) -> Result<CoveringCountCurve> {
    check_starts(starts)?;
    let mut scales = Vec::new();
    let mut counts = Vec::new();
    for &s in starts {
        let g = family.generation(s)?;
        let n = count_cells(&g.boxes, g.delta, None, cap)?;
        scales.push(g.delta);
        counts.push(n);
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("generation scales must decrease"));
    }
    CoveringCountCurve::fit(family.d, starts.to_vec(), scales, counts)
}

/// Generation starts `2^lo, 2^{lo+1}, …, 2^hi`.
pub fn dyadic_starts(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// Pairwise intersections of two box unions.
pub fn intersect_unions(a: &[AxisBox], b: &[AxisBox]) -> Vec<AxisBox> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<&AxisBox> = b.iter().collect();
    sorted.sort_by(|x, y| x.lo[0].total_cmp(&y.lo[0]));
    let max_w = sorted.iter().map(|x| x.width(0)).fold(0.0, f64::max);
    let los: Vec<f64> = sorted.iter().map(|x| x.lo[0]).collect();
    let mut out = Vec::new();
    for q in a {
        let from = los.partition_point(|&l| l < q.lo[0] - max_w);
        let to = los.partition_point(|&l| l < q.hi[0]);
        for cand in &sorted[from..to] {
            if let Some(x) = q.intersect(cand) {
                out.push(x);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub taus: Vec<Vec<f64>>,
    /// `D(τ)` of every family.
    pub targets: Vec<f64>,
    pub target_min: f64,
    pub individual: Vec<CoveringCountCurve>,
    pub min_individual_slope: f64,
    /// `None` when fewer than two generations had a nonempty intersection.
    pub intersection: Option<CoveringCountCurve>,
    pub empty_generations: Vec<usize>,
}

/// Intersects the per-generation unions of 2–4 Diophantine families on a
/// shared grid and fits the covering slope of the intersection.
pub fn intersection_experiment(families: &[LimsupFamily], starts: &[usize], cap: u64) -> Result<IntersectionReport> {
    if !(2..=4).contains(&families.len()) {
        return Err(invalid(format!("need 2 to 4 families, got {}", families.len())));
    }
    check_starts(starts)?;
    let d = families[0].d;
    let mut taus = Vec::new();
    for f in families {
        if f.d != d {
            return Err(Error::DimensionMismatch { expected: d, got: f.d });
        }
        match &f.kind {
            FamilyKind::Diophantine(df) => taus.push(df.tau.clone()),
            _ => return Err(invalid("intersection experiments take Diophantine families")),
        }
    }
    let targets: Vec<f64> = taus.iter().map(|t| dimension_formula_d(t)).collect::<Result<_>>()?;
    let target_min = targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let individual: Vec<CoveringCountCurve> =
        families.iter().map(|f| covering_counts(f, starts, cap)).collect::<Result<_>>()?;
    let min_individual_slope = individual.iter().map(|c| c.fitted_slope).fold(f64::INFINITY, f64::min);

    let mut kept = Vec::new();
    let (mut scales, mut counts, mut empty) = (Vec::new(), Vec::new(), Vec::new());
    for &s in starts {
        let gens = families.iter().map(|f| f.generation(s)).collect::<Result<Vec<_>>>()?;
        let delta = gens.iter().map(|g| g.delta).fold(f64::INFINITY, f64::min);
        let mut order: Vec<usize> = (0..gens.len()).collect();
        order.sort_by_key(|&i| gens[i].boxes.len());
        let mut current = gens[order[0]].boxes.clone();
        for &i in &order[1..] {
            current = intersect_unions(&current, &gens[i].boxes);
        }
        let n = count_cells(&current, delta, None, cap)?;
        if n == 0 {
            empty.push(s);
            continue;
        }
        kept.push(s);
        scales.push(delta);
        counts.push(n);
    }
    let intersection = if kept.len() >= 2 { Some(CoveringCountCurve::fit(d, kept, scales, counts)?) } else { None };
    Ok(IntersectionReport {
        taus,
        targets,
        target_min,
        individual,
        min_individual_slope,
        intersection,
        empty_generations: empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_boxes_split_on_the_seam() {
        let mut v = Vec::new();
        AxisBox::push_wrapped(&mut v, &[0.02, 0.5], &[0.05, 0.1]);
        assert_eq!(v.len(), 2);
        let total: f64 = v.iter().map(|b| b.width(0) * b.width(1)).sum();
        assert!((total - 0.1 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn counts_cells_of_a_union() {
        let boxes = vec![AxisBox { lo: vec![0.1], hi: vec![0.3] }, AxisBox { lo: vec![0.25], hi: vec![0.35] }];
        // cells of width 0.1: (0.1, 0.35) meets cells 1, 2, 3
        assert_eq!(count_cells(&boxes, 0.1, None, 100).unwrap(), 3);
        assert!(matches!(count_cells(&boxes, 0.001, None, 10), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn intersections_of_unions() {
        let a = vec![AxisBox { lo: vec![0.0, 0.0], hi: vec![0.5, 0.5] }];
        let b = vec![
            AxisBox { lo: vec![0.4, 0.4], hi: vec![0.6, 0.6] },
            AxisBox { lo: vec![0.7, 0.0], hi: vec![0.8, 1.0] },
        ];
        let x = intersect_unions(&a, &b);
        assert_eq!(x, vec![AxisBox { lo: vec![0.4, 0.4], hi: vec![0.5, 0.5] }]);
    }

    #[test]
    fn starts_must_increase() {
        assert!(check_starts(&[8, 4]).is_err());
        assert!(check_starts(&[8]).is_err());
        assert_eq!(dyadic_starts(2, 4), vec![4, 8, 16]);
    }
}
