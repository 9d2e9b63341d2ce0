//! Limsup families: indexed generators of `(B_j, U_j)` pairs with `r_j → 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use crate::torus::{Ball, BallSeqEntry, Shape, TorusPoint, MAX_BOUNDING_RADIUS};

use super::covering::AxisBox;

/// Radii below this keep the 5× Vitali expansion a valid ball.
pub const VITALI_RADIUS_CAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RadiusLaw {
    /// `r_j = scale · j^{-exponent}`
    Power { scale: f64, exponent: f64 },
    /// `r_j = initial · ratio^j`
    Geometric { initial: f64, ratio: f64 },
}

impl RadiusLaw {
    /// `r_j = scale · j^{-1/d}`, so `Σ λ(B_j)` diverges like the harmonic series.
    pub fn harmonic(d: usize, scale: f64) -> Self {
        RadiusLaw::Power { scale, exponent: 1.0 / d as f64 }
    }

    pub fn radius(&self, j: usize) -> f64 {
        match *self {
            RadiusLaw::Power { scale, exponent } => scale * (j as f64).powf(-exponent),
            RadiusLaw::Geometric { initial, ratio } => initial * ratio.powi(j as i32),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusLaw::Power { scale, exponent } => scale > 0.0 && exponent > 0.0,
            RadiusLaw::Geometric { initial, ratio } => initial > 0.0 && ratio > 0.0 && ratio < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("radius law {self:?} does not shrink to 0")))
        }
    }

    /// Smallest `j >= 1` with `r_j < cap`.
    fn first_below(&self, cap: f64) -> usize {
        let mut j = 1usize;
        while self.radius(j) >= cap {
            j = if j < 1 << 20 { j + 1 } else { j * 2 };
        }
        j
    }
}

/// The rational-approximation boxes of `W(τ)`.
///
/// Entry `j` enumerates `q = q_min..=q_max` and `p ∈ {0..q-1}^d`
/// lexicographically (no gcd filtering). `U_j` is the box of half-widths
/// `q^{-(1+τ_i)}` at `p/q`; `B_j` is the ball of radius
/// `ball_scale · q^{-(1+1/d)}` at the same center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineFamily {
    pub d: usize,
    pub tau: Vec<f64>,
    pub q_min: u64,
    pub q_max: u64,
    pub ball_scale: f64,
    #[serde(skip)]
    offsets: Vec<usize>,
}

impl DiophantineFamily {
    pub fn half_widths(&self, q: u64) -> Vec<f64> {
        self.tau.iter().map(|t| (q as f64).powf(-(1.0 + t))).collect()
    }

    pub fn ball_radius(&self, q: u64) -> f64 {
        self.ball_scale * (q as f64).powf(-(1.0 + 1.0 / self.d as f64))
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centers and half-widths of every box with denominator `q`, without
    /// the bounding-radius restriction that entries obey.
    pub fn generation_boxes(&self, q: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let hw = self.half_widths(q);
        let count = (q as usize).pow(self.d as u32);
        (0..count).map(|r| (self.center(q, r), hw.clone())).collect()
    }

    fn center(&self, q: u64, mut r: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for i in (0..self.d).rev() {
            c[i] = (r % q as usize) as f64 / q as f64;
            r /= q as usize;
        }
        c
    }

    fn locate(&self, j: usize) -> Option<(u64, usize)> {
        if j == 0 || j > self.len() {
            return None;
        }
        let k = self.offsets.partition_point(|&o| o < j) - 1;
        Some((self.q_min + k as u64, j - 1 - self.offsets[k]))
    }

    fn entry(&self, j: usize) -> Result<BallSeqEntry> {
        let (q, r) = self
            .locate(j)
            .ok_or_else(|| invalid(format!("diophantine entry {j} is out of range 1..={}", self.len())))?;
        let center = TorusPoint::new(self.center(q, r))?;
        let ball = Ball::new(center.clone(), self.ball_radius(q))?;
        let subset = Shape::axis_box(center, self.half_widths(q))?;
        BallSeqEntry::new(j, ball, subset)
    }
}

/// Builds the `W(τ)` family for denominators up to `q_max`.
///
/// Denominators whose enclosing ball would reach radius 1/4 are skipped; this
/// drops finitely many terms and leaves the limsup set unchanged.
pub fn generate_diophantine(d: usize, tau: &[f64], q_max: u64) -> Result<LimsupFamily> {
    generate_diophantine_scaled(d, tau, q_max, (d as f64).sqrt())
}

pub fn generate_diophantine_scaled(d: usize, tau: &[f64], q_max: u64, ball_scale: f64) -> Result<LimsupFamily> {
    if d == 0 || tau.len() != d {
        return Err(invalid(format!("need {d} exponents, got {}", tau.len())));
    }
    if tau.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("τ must be sorted ascending"));
    }
    let floor = 1.0 / d as f64;
    if let Some(t) = tau.iter().find(|t| **t < floor - 1e-12) {
        return Err(invalid(format!("τ_i = {t} is below 1/d = {floor}")));
    }
    if q_max < 2 {
        return Err(invalid("q_max must be at least 2"));
    }
    if !(ball_scale >= (d as f64).sqrt() - 1e-12) {
        return Err(invalid("ball scale below sqrt(d) does not contain the boxes"));
    }
    let mut fam = DiophantineFamily { d, tau: tau.to_vec(), q_min: 1, q_max, ball_scale, offsets: Vec::new() };
    while fam.ball_radius(fam.q_min) >= MAX_BOUNDING_RADIUS {
        fam.q_min += 1;
    }
    if fam.q_min > q_max {
        return Err(invalid(format!("q_max = {q_max} is below the first admissible q = {}", fam.q_min)));
    }
    let mut acc = 0usize;
    fam.offsets.push(0);
    for q in fam.q_min..=q_max {
        acc += (q as usize).pow(d as u32);
        fam.offsets.push(acc);
    }
    Ok(LimsupFamily { d, first_index: 1, kind: FamilyKind::Diophantine(fam) })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `U_j = B(x_j, r_j^{d/σ})` around uniformly random centers.
    ShrunkenBalls {
        sigma: f64,
        radius_law: RadiusLaw,
        seed: u64,
    },
    /// `U_j = B_j` around uniformly random centers.
    RandomBalls {
        radius_law: RadiusLaw,
        seed: u64,
    },
    /// Axis-aligned ellipsoids with semi-axes `coefficient · r_j^{α_i}`.
    Ellipsoids {
        exponents: Vec<f64>,
        coefficient: f64,
        radius_law: RadiusLaw,
        seed: u64,
    },
    /// Axis-aligned boxes with half-widths `coefficient · r_j^{α_i} / sqrt(d)`.
    Boxes {
        exponents: Vec<f64>,
        coefficient: f64,
        radius_law: RadiusLaw,
        seed: u64,
    },
    Diophantine(DiophantineFamily),
    Custom {
        entries: Vec<BallSeqEntry>,
    },
    /// Every ball radius doubled, subsets unchanged.
    Doubled {
        inner: Box<LimsupFamily>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct LimsupFamily {
    pub d: usize,
    pub first_index: usize,
    pub kind: FamilyKind,
}

fn check_exponents(d: usize, exponents: &[f64], coefficient: f64) -> Result<()> {
    if exponents.len() != d {
        return Err(invalid(format!("need {d} exponents, got {}", exponents.len())));
    }
    if exponents.iter().any(|a| !(*a >= 1.0)) {
        return Err(invalid("shape exponents must be at least 1 so that U_j ⊂ B_j"));
    }
    if !(coefficient > 0.0 && coefficient <= 1.0) {
        return Err(invalid("shape coefficient must lie in (0, 1]"));
    }
    Ok(())
}

impl LimsupFamily {
    fn random(d: usize, kind: FamilyKind, law: &RadiusLaw) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        law.validate()?;
        Ok(LimsupFamily { d, first_index: law.first_below(VITALI_RADIUS_CAP), kind })
    }

    pub fn shrunken_balls(d: usize, sigma: f64, radius_law: RadiusLaw, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= d as f64) {
            return Err(invalid(format!("σ = {sigma} must lie in (0, {d}]")));
        }
        Self::random(d, FamilyKind::ShrunkenBalls { sigma, radius_law, seed }, &radius_law)
    }

    pub fn random_balls(d: usize, radius_law: RadiusLaw, seed: u64) -> Result<Self> {
        Self::random(d, FamilyKind::RandomBalls { radius_law, seed }, &radius_law)
    }

    pub fn ellipsoids(
        d: usize,
        exponents: Vec<f64>,
        coefficient: f64,
        radius_law: RadiusLaw,
        seed: u64,
    ) -> Result<Self> {
        check_exponents(d, &exponents, coefficient)?;
        Self::random(d, FamilyKind::Ellipsoids { exponents, coefficient, radius_law, seed }, &radius_law)
    }

    pub fn boxes(d: usize, exponents: Vec<f64>, coefficient: f64, radius_law: RadiusLaw, seed: u64) -> Result<Self> {
        check_exponents(d, &exponents, coefficient)?;
        Self::random(d, FamilyKind::Boxes { exponents, coefficient, radius_law, seed }, &radius_law)
    }

    /// A finite family from explicit entries, re-indexed from 1.
    pub fn custom(entries: Vec<BallSeqEntry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(invalid("custom family needs at least one entry"));
        };
        let d = first.ball.dim();
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                if e.ball.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: e.ball.dim() });
                }
                Ok(BallSeqEntry { index: i + 1, ..e })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LimsupFamily { d, first_index: 1, kind: FamilyKind::Custom { entries } })
    }

    /// Starts the family at `first` instead of its default first index.
    pub fn starting_at(mut self, first: usize) -> Self {
        self.first_index = first.max(1);
        self
    }

    /// The same family with every `B(x_j, r_j)` replaced by `B(x_j, 2 r_j)`.
    pub fn with_doubled_radii(self) -> Self {
        LimsupFamily { d: self.d, first_index: self.first_index, kind: FamilyKind::Doubled { inner: Box::new(self) } }
    }

    pub fn last_index(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::Diophantine(f) => Some(f.len()),
            FamilyKind::Custom { entries } => Some(entries.len()),
            FamilyKind::Doubled { inner } => inner.last_index(),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match &self.kind {
            FamilyKind::ShrunkenBalls { .. } => "shrunken_balls",
            FamilyKind::RandomBalls { .. } => "random_balls",
            FamilyKind::Ellipsoids { .. } => "ellipsoids",
            FamilyKind::Boxes { .. } => "boxes",
            FamilyKind::Diophantine(_) => "diophantine",
            FamilyKind::Custom { .. } => "custom",
            FamilyKind::Doubled { .. } => "doubled",
        }
    }

    fn random_center(&self, seed: u64, j: usize) -> Result<TorusPoint> {
        let mut rng = Stream::new(seed).named("centers").child(j as u64).rng();
        TorusPoint::new((0..self.d).map(|_| rng.random::<f64>()).collect())
    }

    /// Radius of `B_j`, without building the entry.
    pub fn ball_radius(&self, j: usize) -> Result<f64> {
        Ok(match &self.kind {
            FamilyKind::ShrunkenBalls { radius_law, .. }
            | FamilyKind::RandomBalls { radius_law, .. }
            | FamilyKind::Ellipsoids { radius_law, .. }
            | FamilyKind::Boxes { radius_law, .. } => radius_law.radius(j),
            FamilyKind::Doubled { inner } => 2.0 * inner.ball_radius(j)?,
            _ => self.entry(j)?.ball.radius(),
        })
    }

    pub fn entry(&self, j: usize) -> Result<BallSeqEntry> {
        if j < self.first_index {
            return Err(invalid(format!("entry {j} precedes the first admissible index {}", self.first_index)));
        }
        match &self.kind {
            FamilyKind::ShrunkenBalls { sigma, radius_law, seed } => {
                let c = self.random_center(*seed, j)?;
                let r = radius_law.radius(j);
                let u = Shape::ball(c.clone(), r.powf(self.d as f64 / sigma))?;
                BallSeqEntry::new(j, Ball::new(c, r)?, u)
            }
            FamilyKind::RandomBalls { radius_law, seed } => {
                let c = self.random_center(*seed, j)?;
                let b = Ball::new(c, radius_law.radius(j))?;
                BallSeqEntry::new(j, b.clone(), Shape::Ball(b))
            }
            FamilyKind::Ellipsoids { exponents, coefficient, radius_law, seed } => {
                let c = self.random_center(*seed, j)?;
                let r = radius_law.radius(j);
                let axes = exponents.iter().map(|a| coefficient * r.powf(*a)).collect();
                BallSeqEntry::new(j, Ball::new(c.clone(), r)?, Shape::ellipsoid(c, axes)?)
            }
            FamilyKind::Boxes { exponents, coefficient, radius_law, seed } => {
                let c = self.random_center(*seed, j)?;
                let r = radius_law.radius(j);
                let k = coefficient / (self.d as f64).sqrt();
                let hw = exponents.iter().map(|a| k * r.powf(*a)).collect();
                BallSeqEntry::new(j, Ball::new(c.clone(), r)?, Shape::axis_box(c, hw)?)
            }
            FamilyKind::Diophantine(f) => f.entry(j),
            FamilyKind::Custom { entries } => {
                entries.get(j - 1).cloned().ok_or_else(|| invalid(format!("custom family has no entry {j}")))
            }
            FamilyKind::Doubled { inner } => {
                let e = inner.entry(j)?;
                BallSeqEntry::new(j, e.ball.scaled(2.0)?, e.subset)
            }
        }
    }

    /// All entries with index in `lo..=hi`, clipped to the family's range.
    pub fn entries(&self, lo: usize, hi: usize) -> Result<Vec<BallSeqEntry>> {
        let lo = lo.max(self.first_index);
        let hi = self.last_index().map_or(hi, |l| hi.min(l));
        (lo..=hi).map(|j| self.entry(j)).collect()
    }

    /// Checks that the radii shrink along `first..=upto` by sampling a few
    /// indices.
    pub fn check_shrinking(&self, upto: usize) -> Result<()> {
        let hi = self.last_index().map_or(upto, |l| upto.min(l));
        let lo = self.first_index;
        if hi <= lo {
            return Ok(());
        }
        let (a, b) = (self.ball_radius(lo)?, self.ball_radius(hi)?);
        if b < a {
            Ok(())
        } else {
            Err(invalid(format!("radii do not shrink: r_{lo} = {a}, r_{hi} = {b}")))
        }
    }

    /// The boxes of one generation with the generation's cell size.
    ///
    /// For Diophantine families the generation starting at `start` collects
    /// the denominators `q ∈ [start, 2 start)`; otherwise it is the index
    /// window `j ∈ [start, 2 start)` with each `U_j` replaced by its bounding
    /// box. The cell size is twice the smallest half-width at the start of
    /// the window.
    pub fn generation(&self, start: usize) -> Result<Generation> {
        if start == 0 {
            return Err(invalid("generation start must be positive"));
        }
        let mut boxes = Vec::new();
        match &self.kind {
            FamilyKind::Diophantine(f) => {
                let q0 = start as u64;
                let q1 = 2 * q0;
                if q1 - 1 > f.q_max {
                    return Err(invalid(format!(
                        "generation {start} needs denominators up to {}, but q_max = {}",
                        q1 - 1,
                        f.q_max
                    )));
                }
                for q in q0..q1 {
                    for (c, h) in f.generation_boxes(q) {
                        AxisBox::push_wrapped(&mut boxes, &c, &h);
                    }
                }
                let delta = 2.0 * f.half_widths(q0).into_iter().fold(f64::INFINITY, f64::min);
                Ok(Generation { start, delta, boxes })
            }
            _ => {
                let lo = start.max(self.first_index);
                let entries = self.entries(lo, 2 * start - 1)?;
                let Some(first) = entries.first() else {
                    return Err(invalid(format!("generation {start} has no entries")));
                };
                let delta = 2.0 * first.subset.half_extents().into_iter().fold(f64::INFINITY, f64::min);
                for e in &entries {
                    AxisBox::push_wrapped(&mut boxes, e.subset.center().coords(), &e.subset.half_extents());
                }
                Ok(Generation { start, delta, boxes })
            }
        }
    }
}

/// The union of one generation's sets, as boxes inside `[0, 1)^d`.
#[derive(Debug, Clone)]
pub struct Generation {
    pub start: usize,
    pub delta: f64,
    pub boxes: Vec<AxisBox>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diophantine_generation_q2() {
        let fam = generate_diophantine(1, &[1.0], 16).unwrap();
        let FamilyKind::Diophantine(f) = &fam.kind else { unreachable!() };
        let boxes = f.generation_boxes(2);
        assert_eq!(boxes.len(), 2);
        assert_eq!(boxes[0].0, vec![0.0]);
        assert_eq!(boxes[1].0, vec![0.5]);
        assert_eq!(boxes[0].1, vec![0.25]);
    }

    #[test]
    fn diophantine_generation_q3_in_the_plane() {
        let fam = generate_diophantine(2, &[1.0, 2.0], 8).unwrap();
        let FamilyKind::Diophantine(f) = &fam.kind else { unreachable!() };
        let boxes = f.generation_boxes(3);
        assert_eq!(boxes.len(), 9);
        let hw = &boxes[4].1;
        assert!((hw[0] - 1.0 / 9.0).abs() < 1e-15 && (hw[1] - 1.0 / 27.0).abs() < 1e-15);
        assert_eq!(boxes[5].0, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn diophantine_validation() {
        assert!(generate_diophantine(2, &[2.0, 1.0], 10).is_err());
        assert!(generate_diophantine(2, &[0.4, 1.0], 10).is_err());
        assert!(generate_diophantine(1, &[1.0], 1).is_err());
        assert!(generate_diophantine(1, &[1.0, 2.0], 10).is_err());
    }

    #[test]
    fn diophantine_entries_are_indexed_by_q_then_p() {
        let fam = generate_diophantine(1, &[3.0], 20).unwrap();
        let FamilyKind::Diophantine(f) = &fam.kind else { unreachable!() };
        // radius q^{-2} < 1/4 first at q = 3
        assert_eq!(f.q_min, 3);
        let e = fam.entry(1).unwrap();
        assert_eq!(e.subset.center().coords(), &[0.0]);
        let e = fam.entry(4).unwrap();
        assert!((e.ball.radius() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(fam.last_index(), Some((3..=20).sum::<usize>()));
        assert!(fam.entry(fam.last_index().unwrap() + 1).is_err());
    }

    #[test]
    fn random_family_starts_below_the_vitali_cap() {
        let fam = LimsupFamily::random_balls(1, RadiusLaw::harmonic(1, 0.5), 0).unwrap();
        assert_eq!(fam.first_index, 11);
        assert!(fam.entry(10).is_err());
        let e = fam.entry(11).unwrap();
        assert!((e.ball.radius() - 1.0 / 22.0).abs() < 1e-15);
        assert_eq!(fam.entry(11).unwrap().ball, e.ball);
    }

    #[test]
    fn shrunken_balls_have_the_right_radius() {
        let fam = LimsupFamily::shrunken_balls(1, 0.5, RadiusLaw::harmonic(1, 0.5), 3).unwrap();
        let e = fam.entry(20).unwrap();
        let r = 1.0 / 40.0;
        assert!((e.subset.bounding_radius() - r * r).abs() < 1e-15);
        assert!(e.subset_within_fraction(0.5));
    }

    #[test]
    fn doubled_family() {
        let fam = LimsupFamily::random_balls(2, RadiusLaw::harmonic(2, 0.1), 1).unwrap();
        let e = fam.entry(9).unwrap();
        let dbl = fam.with_doubled_radii();
        let e2 = dbl.entry(9).unwrap();
        assert!((e2.ball.radius() - 2.0 * e.ball.radius()).abs() < 1e-15);
        assert!(e2.subset_within_fraction(0.5));
        assert!(!e.subset_within_fraction(0.5));
    }
}
