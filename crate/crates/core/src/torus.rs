//! Points, the min-image metric and shape primitives on the torus
//! `T^d = R^d / Z^d`.
//!
//! Every shape is kept inside a bounding ball of radius below 1/4, so within a
//! shape (and between a shape and its own bounding ball) the torus metric is
//! the plain Euclidean metric of the local displacement coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::stats::Moments;

/// Largest bounding-ball radius accepted for any shape.
pub const MAX_BOUNDING_RADIUS: f64 = 0.25;

/// Rejection sampling gives up below this acceptance rate.
pub const MIN_REJECTION_EFFICIENCY: f64 = 1e-3;

const CONTAINMENT_SLACK: f64 = 1e-12;

/// Map a real number onto `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Representative of `dx mod 1` in `[-1/2, 1/2]`.
pub fn min_image(dx: f64) -> f64 {
    dx - dx.round()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Builds a point, reducing every coordinate mod 1.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidShape("point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape("non-finite coordinate".into()));
        }
        Ok(TorusPoint { coords: coords.into_iter().map(wrap).collect() })
    }

    pub fn origin(d: usize) -> Self {
        TorusPoint { coords: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn translate(&self, offset: &[f64]) -> TorusPoint {
        TorusPoint { coords: self.coords.iter().zip(offset).map(|(c, o)| wrap(c + o)).collect() }
    }

    /// Min-image displacement `other - self`.
    pub fn offset_to(&self, other: &TorusPoint) -> Vec<f64> {
        self.coords.iter().zip(&other.coords).map(|(a, b)| min_image(b - a)).collect()
    }
}

pub(crate) fn dist_sq_raw(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = min_image(x - y);
            d * d
        })
        .sum()
}

/// Min-image distance on the torus.
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(dist_sq_raw(&a.coords, &b.coords).sqrt())
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Surface area of the unit sphere in `R^d` (2 for `d = 1`).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uniform point of the unit ball written into `out`.
pub(crate) fn sample_unit_ball<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let d = out.len();
    if d <= 3 {
        loop {
            let mut r2 = 0.0;
            for x in out.iter_mut() {
                *x = 2.0 * rng.random::<f64>() - 1.0;
                r2 += *x * *x;
            }
            if r2 < 1.0 {
                return;
            }
        }
    }
    sample_direction(rng, out);
    let rad = rng.random::<f64>().powf(1.0 / d as f64);
    out.iter_mut().for_each(|x| *x *= rad);
}

/// Uniform unit vector written into `out`.
pub(crate) fn sample_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    match out.len() {
        1 => out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 },
        2 => {
            let a = 2.0 * PI * rng.random::<f64>();
            out[0] = a.cos();
            out[1] = a.sin();
        }
        _ => loop {
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let n = norm(out);
            if n > 1e-12 {
                out.iter_mut().for_each(|x| *x /= n);
                return;
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: TorusPoint,
    radius: f64,
}

impl Ball {
    pub fn new(center: TorusPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidShape(format!("ball radius {radius} must be positive")));
        }
        if radius >= MAX_BOUNDING_RADIUS {
            return Err(Error::InvalidShape(format!("ball radius {radius} must be below {MAX_BOUNDING_RADIUS}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &TorusPoint {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn measure(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn contains(&self, p: &TorusPoint) -> bool {
        dist_sq_raw(self.center.coords(), p.coords()) < self.radius * self.radius
    }

    /// Same center, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Ball> {
        Ball::new(self.center.clone(), self.radius * factor)
    }

    /// Open balls are disjoint iff the centers are at least `r1 + r2` apart.
    /// The check is strict so that selected balls never touch.
    pub fn is_separated_from(&self, other: &Ball) -> bool {
        let s = self.radius + other.radius;
        dist_sq_raw(self.center.coords(), other.center.coords()) > s * s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    center: TorusPoint,
    half_widths: Vec<f64>,
}

impl BoxShape {
    pub fn center(&self) -> &TorusPoint {
        &self.center
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }
}

/// Axis-aligned ellipsoid. `semi_axes[i]` is the semi-axis along coordinate `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidShape {
    center: TorusPoint,
    semi_axes: Vec<f64>,
}

impl EllipsoidShape {
    pub fn center(&self) -> &TorusPoint {
        &self.center
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }
}

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Shape given by a membership predicate on displacements from the center of
/// its bounding ball.
#[derive(Clone)]
pub struct IndicatorShape {
    bounding: Ball,
    membership: Membership,
    measure_hint: Option<f64>,
    mc_samples: usize,
    seed: u64,
    cached: Arc<OnceLock<MeasureEstimate>>,
}

impl fmt::Debug for IndicatorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndicatorShape")
            .field("bounding", &self.bounding)
            .field("measure_hint", &self.measure_hint)
            .field("mc_samples", &self.mc_samples)
            .finish()
    }
}

impl IndicatorShape {
    pub fn new(bounding: Ball, membership: Membership) -> Self {
        IndicatorShape {
            bounding,
            membership,
            measure_hint: None,
            mc_samples: 200_000,
            seed: 0,
            cached: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_measure_hint(mut self, hint: f64) -> Self {
        self.measure_hint = Some(hint);
        self.cached = Arc::new(OnceLock::new());
        self
    }

    /// Sample budget and seed of the hit-or-miss measure estimate.
    pub fn with_sampling(mut self, samples: usize, seed: u64) -> Self {
        self.mc_samples = samples.max(1);
        self.seed = seed;
        self.cached = Arc::new(OnceLock::new());
        self
    }

    pub fn bounding(&self) -> &Ball {
        &self.bounding
    }

    pub fn contains_offset(&self, offset: &[f64]) -> bool {
        norm(offset) < self.bounding.radius && (self.membership)(offset)
    }

    fn estimate(&self) -> MeasureEstimate {
        *self.cached.get_or_init(|| {
            if let Some(h) = self.measure_hint {
                return MeasureEstimate { value: h, std_error: 0.0 };
            }
            let d = self.bounding.dim();
            let r = self.bounding.radius;
            let mut rng = Stream::new(self.seed).named("indicator-measure").rng();
            let mut buf = vec![0.0; d];
            let mut m = Moments::default();
            for _ in 0..self.mc_samples {
                sample_unit_ball(&mut rng, &mut buf);
                buf.iter_mut().for_each(|x| *x *= r);
                m.push(if (self.membership)(&buf) { 1.0 } else { 0.0 });
            }
            let vol = self.bounding.measure();
            MeasureEstimate { value: m.mean() * vol, std_error: m.std_error() * vol }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: f64,
    /// False when `value` is only an upper bound.
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub enum Shape {
    Ball(Ball),
    Box(BoxShape),
    Ellipsoid(EllipsoidShape),
    Indicator(IndicatorShape),
}

fn check_lengths(what: &str, center: &TorusPoint, v: &[f64]) -> Result<()> {
    if v.len() != center.dim() {
        return Err(Error::DimensionMismatch { expected: center.dim(), got: v.len() });
    }
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidShape(format!("{what} must be positive and finite")));
    }
    Ok(())
}

impl Shape {
    pub fn ball(center: TorusPoint, radius: f64) -> Result<Shape> {
        Ok(Shape::Ball(Ball::new(center, radius)?))
    }

    pub fn axis_box(center: TorusPoint, half_widths: Vec<f64>) -> Result<Shape> {
        check_lengths("box half-widths", &center, &half_widths)?;
        let r = norm(&half_widths);
        if r >= MAX_BOUNDING_RADIUS {
            return Err(Error::InvalidShape(format!("box half-diagonal {r} must be below {MAX_BOUNDING_RADIUS}")));
        }
        Ok(Shape::Box(BoxShape { center, half_widths }))
    }

    pub fn ellipsoid(center: TorusPoint, semi_axes: Vec<f64>) -> Result<Shape> {
        check_lengths("ellipsoid semi-axes", &center, &semi_axes)?;
        let r = semi_axes.iter().cloned().fold(0.0, f64::max);
        if r >= MAX_BOUNDING_RADIUS {
            return Err(Error::InvalidShape(format!("ellipsoid semi-axis {r} must be below {MAX_BOUNDING_RADIUS}")));
        }
        Ok(Shape::Ellipsoid(EllipsoidShape { center, semi_axes }))
    }

    pub fn indicator(shape: IndicatorShape) -> Shape {
        Shape::Indicator(shape)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Ball(_) => "ball",
            Shape::Box(_) => "box",
            Shape::Ellipsoid(_) => "ellipsoid",
            Shape::Indicator(_) => "indicator",
        }
    }

    pub fn center(&self) -> &TorusPoint {
        match self {
            Shape::Ball(b) => &b.center,
            Shape::Box(b) => &b.center,
            Shape::Ellipsoid(e) => &e.center,
            Shape::Indicator(i) => &i.bounding.center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Ball(b) => b.radius,
            Shape::Box(b) => norm(&b.half_widths),
            Shape::Ellipsoid(e) => e.semi_axes.iter().cloned().fold(0.0, f64::max),
            Shape::Indicator(i) => i.bounding.radius,
        }
    }

    pub fn bounding_ball(&self) -> Ball {
        Ball { center: self.center().clone(), radius: self.bounding_radius() }
    }

    /// Half-extent of the axis-aligned bounding box, per coordinate.
    pub fn half_extents(&self) -> Vec<f64> {
        match self {
            Shape::Ball(b) => vec![b.radius; b.dim()],
            Shape::Box(b) => b.half_widths.clone(),
            Shape::Ellipsoid(e) => e.semi_axes.clone(),
            Shape::Indicator(i) => vec![i.bounding.radius; i.bounding.dim()],
        }
    }

    /// Principal half-lengths for the singular value function, if the shape
    /// has them.
    pub fn principal_half_lengths(&self) -> Option<Vec<f64>> {
        match self {
            Shape::Ball(b) => Some(vec![b.radius; b.dim()]),
            Shape::Box(b) => Some(b.half_widths.clone()),
            Shape::Ellipsoid(e) => Some(e.semi_axes.clone()),
            Shape::Indicator(_) => None,
        }
    }

    /// Lebesgue measure. Exact except for indicator shapes without a hint.
    pub fn measure(&self) -> MeasureEstimate {
        let exact = |value| MeasureEstimate { value, std_error: 0.0 };
        match self {
            Shape::Ball(b) => exact(b.measure()),
            Shape::Box(b) => exact(b.half_widths.iter().map(|h| 2.0 * h).product()),
            Shape::Ellipsoid(e) => exact(unit_ball_volume(e.semi_axes.len()) * e.semi_axes.iter().product::<f64>()),
            Shape::Indicator(i) => i.estimate(),
        }
    }

    /// Measure value, failing for indicator shapes that were never hit.
    pub fn volume(&self) -> Result<f64> {
        let m = self.measure();
        if m.value > 0.0 {
            Ok(m.value)
        } else {
            let samples = match self {
                Shape::Indicator(i) => i.mc_samples,
                _ => 0,
            };
            Err(Error::ZeroMeasure { samples })
        }
    }

    /// Natural log of the measure; avoids underflow for tiny closed-form shapes.
    pub fn log_volume(&self) -> Result<f64> {
        let d = self.dim() as i32;
        Ok(match self {
            Shape::Ball(b) => unit_ball_volume(d as usize).ln() + d as f64 * b.radius.ln(),
            Shape::Box(b) => b.half_widths.iter().map(|h| (2.0 * h).ln()).sum(),
            Shape::Ellipsoid(e) => unit_ball_volume(d as usize).ln() + e.semi_axes.iter().map(|a| a.ln()).sum::<f64>(),
            Shape::Indicator(_) => self.volume()?.ln(),
        })
    }

    pub fn diameter(&self) -> Diameter {
        match self {
            Shape::Ball(b) => Diameter { value: 2.0 * b.radius, exact: true },
            Shape::Box(b) => Diameter { value: 2.0 * norm(&b.half_widths), exact: true },
            Shape::Ellipsoid(e) => {
                Diameter { value: 2.0 * e.semi_axes.iter().cloned().fold(0.0, f64::max), exact: true }
            }
            Shape::Indicator(i) => Diameter { value: 2.0 * i.bounding.radius, exact: false },
        }
    }

    /// Membership of a displacement from `center()`.
    pub fn contains_offset(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball(b) => x.iter().map(|v| v * v).sum::<f64>() < b.radius * b.radius,
            Shape::Box(b) => x.iter().zip(&b.half_widths).all(|(v, h)| v.abs() < *h),
            Shape::Ellipsoid(e) => x.iter().zip(&e.semi_axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() < 1.0,
            Shape::Indicator(i) => i.contains_offset(x),
        }
    }

    pub fn contains(&self, p: &TorusPoint) -> bool {
        self.contains_offset(&self.center().offset_to(p))
    }

    /// `(center, half_length)` when the shape is an interval of the circle
    /// with a closed-form description.
    pub fn as_interval(&self) -> Option<(f64, f64)> {
        if self.dim() != 1 {
            return None;
        }
        match self {
            Shape::Ball(b) => Some((b.center.coords[0], b.radius)),
            Shape::Box(b) => Some((b.center.coords[0], b.half_widths[0])),
            Shape::Ellipsoid(e) => Some((e.center.coords[0], e.semi_axes[0])),
            Shape::Indicator(_) => None,
        }
    }

    /// Upper bound on the distance from `p` to points of the shape; exact for
    /// balls and boxes.
    pub fn max_distance_from(&self, p: &TorusPoint) -> f64 {
        let off = p.offset_to(self.center());
        match self {
            Shape::Box(b) => off.iter().zip(&b.half_widths).map(|(o, h)| (o.abs() + h).powi(2)).sum::<f64>().sqrt(),
            _ => norm(&off) + self.bounding_radius(),
        }
    }

    /// Prepares a uniform sampler, checking rejection efficiency for
    /// indicator shapes.
    pub fn sampler(&self) -> Result<ShapeSampler<'_>> {
        if let Shape::Indicator(i) = self {
            let eff = self.measure().value / i.bounding.measure();
            if eff < MIN_REJECTION_EFFICIENCY {
                return Err(Error::RejectionEfficiency { efficiency: eff });
            }
        }
        Ok(ShapeSampler { shape: self })
    }

    /// The shape with every linear size multiplied by `factor`, same center.
    pub fn scaled(&self, factor: f64) -> Result<Shape> {
        match self {
            Shape::Ball(b) => Shape::ball(b.center.clone(), b.radius * factor),
            Shape::Box(b) => Shape::axis_box(b.center.clone(), b.half_widths.iter().map(|h| h * factor).collect()),
            Shape::Ellipsoid(e) => Shape::ellipsoid(e.center.clone(), e.semi_axes.iter().map(|a| a * factor).collect()),
            Shape::Indicator(_) => Err(Error::InvalidShape("indicator shapes cannot be rescaled".into())),
        }
    }
}

impl Serialize for Shape {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Shape", 3)?;
        st.serialize_field("kind", self.kind())?;
        st.serialize_field("center", self.center())?;
        match self {
            Shape::Ball(b) => st.serialize_field("radius", &b.radius)?,
            Shape::Box(b) => st.serialize_field("half_widths", &b.half_widths)?,
            Shape::Ellipsoid(e) => st.serialize_field("semi_axes", &e.semi_axes)?,
            Shape::Indicator(i) => st.serialize_field("bounding_radius", &i.bounding.radius)?,
        }
        st.end()
    }
}

/// Draws uniform displacements from a shape's center.
#[derive(Debug, Clone, Copy)]
pub struct ShapeSampler<'a> {
    shape: &'a Shape,
}

impl ShapeSampler<'_> {
    pub fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.shape {
            Shape::Ball(b) => {
                sample_unit_ball(rng, out);
                out.iter_mut().for_each(|x| *x *= b.radius);
            }
            Shape::Box(b) => {
                for (x, h) in out.iter_mut().zip(&b.half_widths) {
                    *x = (2.0 * rng.random::<f64>() - 1.0) * h;
                }
            }
            Shape::Ellipsoid(e) => {
                sample_unit_ball(rng, out);
                out.iter_mut().zip(&e.semi_axes).for_each(|(x, a)| *x *= a);
            }
            Shape::Indicator(i) => loop {
                sample_unit_ball(rng, out);
                out.iter_mut().for_each(|x| *x *= i.bounding.radius);
                if (i.membership)(out) {
                    return;
                }
            },
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TorusPoint {
        let mut off = vec![0.0; self.shape.dim()];
        self.sample_offset(rng, &mut off);
        self.shape.center().translate(&off)
    }
}

/// One term of a limsup family: the ball `B(x_j, r_j)` and the open subset
/// `U_j` inside it.
#[derive(Debug, Clone, Serialize)]
pub struct BallSeqEntry {
    pub index: usize,
    pub ball: Ball,
    pub subset: Shape,
}

impl BallSeqEntry {
    /// Checks `subset ⊂ ball`: geometrically for closed-form shapes, with
    /// 10^3 samples for indicator shapes.
    pub fn new(index: usize, ball: Ball, subset: Shape) -> Result<Self> {
        if ball.dim() != subset.dim() {
            return Err(Error::DimensionMismatch { expected: ball.dim(), got: subset.dim() });
        }
        check_within(&subset, &ball, 1.0, index)?;
        Ok(BallSeqEntry { index, ball, subset })
    }

    /// True if `U_j ⊂ B(x_j, c r_j)`.
    pub fn subset_within_fraction(&self, c: f64) -> bool {
        check_within(&self.subset, &self.ball, c, self.index).is_ok()
    }
}

fn check_within(subset: &Shape, ball: &Ball, c: f64, index: usize) -> Result<()> {
    let limit = c * ball.radius * (1.0 + CONTAINMENT_SLACK);
    if subset.max_distance_from(ball.center()) <= limit {
        return Ok(());
    }
    if let Shape::Indicator(_) = subset {
        let sampler = subset.sampler()?;
        let mut rng = Stream::new(index as u64).named("containment").rng();
        let mut off = vec![0.0; subset.dim()];
        let shift = ball.center().offset_to(subset.center());
        for _ in 0..1000 {
            sampler.sample_offset(&mut rng, &mut off);
            let r2: f64 = off.iter().zip(&shift).map(|(o, s)| (o + s) * (o + s)).sum();
            if r2.sqrt() >= limit {
                return Err(Error::Containment(format!(
                    "entry {index}: sampled point of the subset lies outside the ball"
                )));
            }
        }
        return Ok(());
    }
    Err(Error::Containment(format!(
        "entry {index}: subset reaches distance {:.3e} from the ball center, limit {:.3e}",
        subset.max_distance_from(ball.center()),
        limit
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let d = torus_distance(&pt(&[0.1]), &pt(&[0.9])).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        assert_eq!(torus_distance(&pt(&[0.0, 0.0]), &pt(&[0.0, 0.0])).unwrap(), 0.0);
        // brute force over the 9 integer translates
        let (a, b) = ([0.1, 0.1], [0.9, 0.9]);
        let mut best = f64::INFINITY;
        for k1 in -1..=1 {
            for k2 in -1..=1 {
                let dx = b[0] + k1 as f64 - a[0];
                let dy = b[1] + k2 as f64 - a[1];
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        let d = torus_distance(&pt(&a), &pt(&b)).unwrap();
        assert!((d - best).abs() < 1e-12);
        assert!((d - 0.08f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_dimension_mismatch() {
        assert!(matches!(torus_distance(&pt(&[0.1]), &pt(&[0.1, 0.2])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn wrap_handles_negative_zero_edge() {
        assert_eq!(wrap(-1e-18), 0.0);
        assert!((wrap(-0.25) - 0.75).abs() < 1e-15);
        assert!((wrap(3.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measure_examples() {
        let b = Shape::ball(pt(&[0.5, 0.5]), 0.1).unwrap();
        assert!((b.measure().value - PI * 0.01).abs() < 1e-12);
        let bx = Shape::axis_box(pt(&[0.5, 0.5]), vec![0.1, 0.05]).unwrap();
        assert!((bx.measure().value - 0.02).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn indicator_measure_matches_closed_form() {
        let bounding = Ball::new(pt(&[0.3, 0.3]), 0.12).unwrap();
        let ind = IndicatorShape::new(bounding, Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] < 0.01))
            .with_sampling(400_000, 3);
        let m = Shape::indicator(ind).measure();
        let exact = PI * 0.01;
        assert!(m.std_error > 0.0);
        assert!((m.value - exact).abs() < 4.0 * m.std_error, "{m:?} vs {exact}");
    }

    #[test]
    fn indicator_with_hint_skips_sampling() {
        let bounding = Ball::new(pt(&[0.3]), 0.1).unwrap();
        let ind = IndicatorShape::new(bounding, Arc::new(|_: &[f64]| true)).with_measure_hint(0.2);
        let s = Shape::indicator(ind);
        assert_eq!(s.measure(), MeasureEstimate { value: 0.2, std_error: 0.0 });
        assert_eq!(s.diameter(), Diameter { value: 0.2, exact: false });
    }

    #[test]
    fn zero_measure_indicator_is_an_error() {
        let bounding = Ball::new(pt(&[0.3]), 0.1).unwrap();
        let ind = IndicatorShape::new(bounding, Arc::new(|_: &[f64]| false)).with_sampling(1000, 0);
        let s = Shape::indicator(ind);
        assert!(matches!(s.volume(), Err(Error::ZeroMeasure { samples: 1000 })));
        assert!(matches!(s.sampler(), Err(Error::RejectionEfficiency { .. })));
    }

    #[test]
    fn rejects_oversized_shapes() {
        assert!(Shape::ball(pt(&[0.0]), 0.25).is_err());
        assert!(Shape::axis_box(pt(&[0.0, 0.0]), vec![0.2, 0.2]).is_err());
        assert!(Shape::ellipsoid(pt(&[0.0, 0.0]), vec![0.1]).is_err());
        assert!(Shape::ball(pt(&[0.0]), -1.0).is_err());
    }

    #[test]
    fn diameters() {
        let e = Shape::ellipsoid(pt(&[0.0, 0.0]), vec![0.05, 0.1]).unwrap();
        assert_eq!(e.diameter(), Diameter { value: 0.2, exact: true });
        let bx = Shape::axis_box(pt(&[0.0, 0.0]), vec![0.03, 0.04]).unwrap();
        assert!((bx.diameter().value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_inside_shapes() {
        let mut rng = Stream::new(1).rng();
        let shapes = [
            Shape::ball(pt(&[0.95, 0.02]), 0.1).unwrap(),
            Shape::axis_box(pt(&[0.5, 0.5]), vec![0.1, 0.01]).unwrap(),
            Shape::ellipsoid(pt(&[0.01, 0.5]), vec![0.02, 0.2]).unwrap(),
        ];
        for s in &shapes {
            let sm = s.sampler().unwrap();
            for _ in 0..1000 {
                let p = sm.sample_point(&mut rng);
                assert!(s.contains(&p));
                assert!(s.bounding_ball().contains(&p) || s.kind() == "box");
            }
        }
    }

    #[test]
    fn entry_containment() {
        let ball = Ball::new(pt(&[0.5]), 0.1).unwrap();
        let inside = Shape::ball(pt(&[0.52]), 0.05).unwrap();
        let outside = Shape::ball(pt(&[0.58]), 0.05).unwrap();
        assert!(BallSeqEntry::new(1, ball.clone(), inside).is_ok());
        assert!(matches!(BallSeqEntry::new(1, ball, outside), Err(Error::Containment(_))));
    }

    #[test]
    fn ball_volume_ratio_is_exact() {
        for d in 1..=4 {
            let c = TorusPoint::origin(d);
            let a = Shape::ball(c.clone(), 0.05).unwrap().measure().value;
            let b = Shape::ball(c, 0.1).unwrap().measure().value;
            assert!((a / b - 0.5f64.powi(d as i32)).abs() < 1e-14);
        }
    }
}
