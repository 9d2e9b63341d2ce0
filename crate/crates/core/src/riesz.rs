//! Riesz energies `I_t(U)`, `J_t(U, V)`, truncated energies, energies of
//! weighted shape measures, the singular value function and the content
//! lower bound `λ(U)² / I_t(U)`.
//!
//! Intervals of the circle (`d = 1`, closed-form shapes) are handled exactly:
//! the difference `x - y` of two uniform points has a trapezoidal density, and
//! the kernel integrates in closed form against each linear piece. Everything
//! else is Monte Carlo with one of two samplers:
//!
//! * `Pairs`: independent uniform pairs, averaging `|x - y|^{-t}`. Unbiased,
//!   but the variance is infinite once `2t >= d`.
//! * `Radial`: a uniform first point, a direction, and a radius drawn with
//!   density proportional to `ρ^{d-1-t}`, which cancels the singularity. The
//!   estimator is a scaled hit indicator, so its variance is always finite.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{Stream, StreamRng};
use crate::stats::Moments;
use crate::torus::{min_image, sample_direction, unit_sphere_area, Shape, TorusPoint};

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    pub samples: u64,
    pub t: f64,
}

impl RieszEstimate {
    fn exact(value: f64, t: f64) -> Self {
        RieszEstimate { value, std_error: 0.0, method: Method::ClosedForm, samples: 0, t }
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Pairs,
    Radial,
    /// `Pairs` while `2t < d`, `Radial` beyond.
    Auto,
}

impl Sampler {
    fn resolve(self, t: f64, d: usize) -> Sampler {
        match self {
            Sampler::Auto if 2.0 * t < d as f64 => Sampler::Pairs,
            Sampler::Auto => Sampler::Radial,
            s => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyOptions {
    pub samples: usize,
    /// Budget for each off-diagonal term of a measure energy.
    pub cross_samples: usize,
    pub sampler: Sampler,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions { samples: 1_000_000, cross_samples: 20_000, sampler: Sampler::Auto }
    }
}

impl EnergyOptions {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }
}

fn check_t(t: f64, d: usize) -> Result<()> {
    if !(t > 0.0) {
        return Err(invalid(format!("t = {t} must be positive")));
    }
    if t >= d as f64 {
        return Err(invalid(format!("t = {t} must be below the dimension {d}")));
    }
    Ok(())
}

/// Runs `per_chunk` over fixed-size chunks with one child stream each and
/// merges the moments in chunk order.
fn chunked_moments<F>(n: usize, stream: Stream, per_chunk: F) -> Moments
where
    F: Fn(&mut StreamRng, usize) -> Moments + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n - c * CHUNK);
            per_chunk(&mut stream.child(c as u64).rng(), count)
        })
        .collect();
    let mut total = Moments::default();
    parts.iter().for_each(|m| total.merge(m));
    total
}

// ---------------------------------------------------------------------------
// Exact energies of circle intervals
// ---------------------------------------------------------------------------

/// `∫_a^b (α + β z) |z|^{-t} dz` for `[a, b]` not containing 0 in its interior.
fn linear_kernel_integral(alpha: f64, beta: f64, a: f64, b: f64, t: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        let p1 = |z: f64| z.powf(1.0 - t) / (1.0 - t);
        let p2 = |z: f64| z.powf(2.0 - t) / (2.0 - t);
        alpha * (p1(b) - p1(a)) + beta * (p2(b) - p2(a))
    } else {
        // z = -w on [-b, -a] with w >= 0
        linear_kernel_integral(alpha, -beta, -b, -a, t)
    }
}

/// Exact `∫_U ∫_V k(|x - y|)` on the circle for intervals `U = (c1 ± h1)`,
/// `V = (c2 ± h2)`, where `k(r) = r^{-t}` for `r < cutoff` and 0 beyond.
pub(crate) fn interval_pair_energy(u: (f64, f64), v: (f64, f64), t: f64, cutoff: f64) -> f64 {
    let (c1, h1) = u;
    let (c2, h2) = v;
    let delta = min_image(c1 - c2);
    let (lo, hi) = (h1.min(h2), h1.max(h2));
    let plateau = 2.0 * lo;
    // density of z = x - y: a trapezoid with knots at delta ± (h1 + h2) and delta ± (hi - lo)
    let k = [delta - (h1 + h2), delta - (hi - lo), delta + (hi - lo), delta + (h1 + h2)];
    // (start, end, value at start, value at end)
    let pieces = [(k[0], k[1], 0.0, plateau), (k[1], k[2], plateau, plateau), (k[2], k[3], plateau, 0.0)];
    let mut total = 0.0;
    for &(a, b, fa, fb) in &pieces {
        if b <= a {
            continue;
        }
        let beta = (fb - fa) / (b - a);
        let alpha = fa - beta * a;
        // shift pieces that leave [-1/2, 1/2] back onto the circle
        for shift in [-1.0, 0.0, 1.0] {
            let (sa, sb) = ((a + shift).max(-0.5), (b + shift).min(0.5));
            if sb <= sa {
                continue;
            }
            // f(z) = alpha + beta (z - shift)
            let al = alpha - beta * shift;
            let (ca, cb) = (sa.max(-cutoff), sb.min(cutoff));
            if cb <= ca {
                continue;
            }
            total += linear_kernel_integral(al, beta, ca.max(0.0), cb.max(0.0), t);
            total += linear_kernel_integral(al, beta, ca.min(0.0), cb.min(0.0), t);
        }
    }
    total
}

/// `ln I_t` of an interval of length `len`.
fn log_interval_energy(len: f64, t: f64) -> f64 {
    std::f64::consts::LN_2 + (2.0 - t) * len.ln() - ((1.0 - t) * (2.0 - t)).ln()
}

// ---------------------------------------------------------------------------
// Monte Carlo kernels
// ---------------------------------------------------------------------------

fn pair_self_moments(u: &Shape, t: f64, n: usize, stream: Stream, cutoff: f64) -> Result<Moments> {
    let sampler = u.sampler()?;
    let d = u.dim();
    let cut2 = cutoff * cutoff;
    Ok(chunked_moments(n, stream, |rng, count| {
        let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
        let mut m = Moments::default();
        for _ in 0..count {
            sampler.sample_offset(rng, &mut x);
            sampler.sample_offset(rng, &mut y);
            let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            m.push(if r2 < cut2 { r2.powf(-0.5 * t) } else { 0.0 });
        }
        m
    }))
}

/// Moments of the hit indicator of the radial sampler with radii in `[0, reach]`.
fn radial_self_moments(u: &Shape, t: f64, reach: f64, n: usize, stream: Stream) -> Result<Moments> {
    let sampler = u.sampler()?;
    let d = u.dim();
    let expo = 1.0 / (d as f64 - t);
    Ok(chunked_moments(n, stream, |rng, count| {
        let (mut x, mut dir) = (vec![0.0; d], vec![0.0; d]);
        let mut m = Moments::default();
        for _ in 0..count {
            sampler.sample_offset(rng, &mut x);
            sample_direction(rng, &mut dir);
            let rho = reach * rng.random::<f64>().powf(expo);
            x.iter_mut().zip(&dir).for_each(|(a, e)| *a += rho * e);
            m.push(if u.contains_offset(&x) { 1.0 } else { 0.0 });
        }
        m
    }))
}

fn radial_scale(d: usize, t: f64, reach: f64) -> f64 {
    unit_sphere_area(d) * reach.powf(d as f64 - t) / (d as f64 - t)
}

fn estimate_from(m: &Moments, factor: f64, t: f64) -> RieszEstimate {
    RieszEstimate {
        value: m.mean() * factor,
        std_error: m.std_error() * factor,
        method: Method::MonteCarlo,
        samples: m.n,
        t,
    }
}

fn self_energy_mc(u: &Shape, t: f64, cutoff: f64, opts: &EnergyOptions, stream: Stream) -> Result<RieszEstimate> {
    let lam = u.volume()?;
    let d = u.dim();
    match opts.sampler.resolve(t, d) {
        Sampler::Radial => {
            let reach = u.diameter().value.min(cutoff);
            let m = radial_self_moments(u, t, reach, opts.samples, stream)?;
            Ok(estimate_from(&m, lam * radial_scale(d, t, reach), t))
        }
        _ => {
            let m = pair_self_moments(u, t, opts.samples, stream, cutoff)?;
            Ok(estimate_from(&m, lam * lam, t))
        }
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// `I_t(U) = ∫_U ∫_U |x - y|^{-t} dx dy`.
pub fn energy_set(u: &Shape, t: f64, opts: &EnergyOptions, stream: Stream) -> Result<RieszEstimate> {
    check_t(t, u.dim())?;
    if let Some((_, h)) = u.as_interval() {
        return Ok(RieszEstimate::exact(log_interval_energy(2.0 * h, t).exp(), t));
    }
    self_energy_mc(u, t, f64::INFINITY, opts, stream)
}

/// Natural log of `I_t(U)` with its relative standard error. Closed-form
/// shapes never underflow here, however small.
pub fn log_energy_set(u: &Shape, t: f64, opts: &EnergyOptions, stream: Stream) -> Result<(f64, f64)> {
    check_t(t, u.dim())?;
    if let Some((_, h)) = u.as_interval() {
        return Ok((log_interval_energy(2.0 * h, t), 0.0));
    }
    let e = self_energy_mc(u, t, f64::INFINITY, opts, stream)?;
    if !(e.value > 0.0) {
        return Err(Error::BudgetExceeded(format!(
            "energy estimate is zero after {} samples; raise the sample budget",
            e.samples
        )));
    }
    Ok((e.value.ln(), e.relative_error()))
}

/// `J_t(U, V) = ∫_U ∫_V |x - y|^{-t} dx dy`.
pub fn energy_cross(u: &Shape, v: &Shape, t: f64, opts: &EnergyOptions, stream: Stream) -> Result<RieszEstimate> {
    cross_with_budget(u, v, t, opts.samples, opts, stream)
}

fn cross_with_budget(
    u: &Shape,
    v: &Shape,
    t: f64,
    samples: usize,
    opts: &EnergyOptions,
    stream: Stream,
) -> Result<RieszEstimate> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: v.dim() });
    }
    check_t(t, u.dim())?;
    if let (Some(a), Some(b)) = (u.as_interval(), v.as_interval()) {
        return Ok(RieszEstimate::exact(interval_pair_energy(a, b, t, f64::INFINITY), t));
    }
    if same_shape(u, v) {
        let o = EnergyOptions { samples, ..*opts };
        return self_energy_mc(u, t, f64::INFINITY, &o, stream);
    }
    let (su, sv) = (u.sampler()?, v.sampler()?);
    let (lu, lv) = (u.volume()?, v.volume()?);
    let d = u.dim();
    let shift = u.center().offset_to(v.center());
    let m = chunked_moments(samples, stream, |rng, count| {
        let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
        let mut m = Moments::default();
        for _ in 0..count {
            su.sample_offset(rng, &mut x);
            sv.sample_offset(rng, &mut y);
            let r2: f64 = (0..d)
                .map(|i| {
                    let z = min_image(shift[i] + y[i] - x[i]);
                    z * z
                })
                .sum();
            m.push(r2.powf(-0.5 * t));
        }
        m
    });
    Ok(estimate_from(&m, lu * lv, t))
}

fn same_shape(u: &Shape, v: &Shape) -> bool {
    match (u, v) {
        (Shape::Ball(a), Shape::Ball(b)) => a == b,
        (Shape::Box(a), Shape::Box(b)) => a == b,
        (Shape::Ellipsoid(a), Shape::Ellipsoid(b)) => a == b,
        (Shape::Indicator(a), Shape::Indicator(b)) => std::ptr::eq(a, b),
        _ => false,
    }
}

/// Energy of `U` restricted to the pairs with `|x - y|^{-s} > m`, i.e. pairs
/// closer than `m^{-1/s}`.
pub fn energy_truncated(
    u: &Shape,
    t: f64,
    s: f64,
    m: f64,
    opts: &EnergyOptions,
    stream: Stream,
) -> Result<RieszEstimate> {
    check_t(t, u.dim())?;
    check_t(s, u.dim())?;
    if s <= t {
        return Err(invalid(format!("need t < s, got t = {t}, s = {s}")));
    }
    if !(m > 0.0) {
        return Err(invalid(format!("truncation level m = {m} must be positive")));
    }
    let cutoff = m.powf(-1.0 / s);
    if let Some(iv) = u.as_interval() {
        return Ok(RieszEstimate::exact(interval_pair_energy(iv, iv, t, cutoff), t));
    }
    self_energy_mc(u, t, cutoff, opts, stream)
}

/// `I_t(λ)` of Lebesgue measure on the whole torus.
pub fn energy_lebesgue(d: usize, t: f64, opts: &EnergyOptions, stream: Stream) -> Result<RieszEstimate> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    check_t(t, d)?;
    if d == 1 {
        return Ok(RieszEstimate::exact(2.0 * 0.5f64.powf(1.0 - t) / (1.0 - t), t));
    }
    // x - y is uniform on the fundamental cube [-1/2, 1/2)^d
    match opts.sampler.resolve(t, d) {
        Sampler::Radial => {
            let reach = (d as f64).sqrt() / 2.0;
            let expo = 1.0 / (d as f64 - t);
            let m = chunked_moments(opts.samples, stream, |rng, count| {
                let mut dir = vec![0.0; d];
                let mut m = Moments::default();
                for _ in 0..count {
                    sample_direction(rng, &mut dir);
                    let rho = reach * rng.random::<f64>().powf(expo);
                    let hit = dir.iter().all(|e| (rho * e).abs() < 0.5);
                    m.push(if hit { 1.0 } else { 0.0 });
                }
                m
            });
            Ok(estimate_from(&m, radial_scale(d, t, reach), t))
        }
        _ => {
            let m = chunked_moments(opts.samples, stream, |rng, count| {
                let mut m = Moments::default();
                for _ in 0..count {
                    let r2: f64 = (0..d).map(|_| (rng.random::<f64>() - 0.5).powi(2)).sum();
                    m.push(r2.powf(-0.5 * t));
                }
                m
            });
            Ok(estimate_from(&m, 1.0, t))
        }
    }
}

// ---------------------------------------------------------------------------
// Weighted shape measures
// ---------------------------------------------------------------------------

/// A finite sum `Σ w_j · (uniform probability measure on U_j)`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedShapeMeasure {
    atoms: Vec<(Shape, f64)>,
    total_mass: f64,
}

impl WeightedShapeMeasure {
    pub fn new(atoms: Vec<(Shape, f64)>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(invalid("a measure needs at least one atom"));
        };
        let d = first.0.dim();
        for (s, w) in &atoms {
            if s.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("atom weight {w} must be positive")));
            }
            s.volume()?;
        }
        let total_mass = atoms.iter().map(|a| a.1).sum();
        Ok(WeightedShapeMeasure { atoms, total_mass })
    }

    pub fn atoms(&self) -> &[(Shape, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].0.dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Draws a point from the normalized measure.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TorusPoint> {
        let mut u = rng.random::<f64>() * self.total_mass;
        let mut pick = self.atoms.len() - 1;
        for (i, (_, w)) in self.atoms.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        Ok(self.atoms[pick].0.sampler()?.sample_point(rng))
    }
}

/// How off-diagonal terms of a measure energy are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffDiagonal {
    /// Estimate each `J_t(U_j, U_k)`.
    Estimate,
    /// Use `(1 - c)^{-t} |x_j - x_k|^{-t}` for the normalized pair, valid when
    /// every atom sits inside `B(x_j, c r_j)` of pairwise disjoint balls.
    SeparationBound { c: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureEnergy {
    pub total: RieszEstimate,
    pub diagonal: f64,
    pub off_diagonal: f64,
    pub diagonal_terms: Vec<f64>,
}

/// `I_t(μ)` for a weighted shape measure, decomposed into the terms with
/// `j = k` and `j ≠ k`.
pub fn energy_measure(
    mu: &WeightedShapeMeasure,
    t: f64,
    opts: &EnergyOptions,
    off: OffDiagonal,
    stream: Stream,
) -> Result<MeasureEnergy> {
    let d = mu.dim();
    check_t(t, d)?;
    let atoms = mu.atoms();
    let n = atoms.len();
    let vols: Vec<f64> = atoms.iter().map(|(s, _)| s.volume()).collect::<Result<_>>()?;
    let diag_est: Vec<RieszEstimate> = atoms
        .par_iter()
        .enumerate()
        .map(|(j, (s, _))| energy_set(s, t, opts, stream.named("diag").child(j as u64)))
        .collect::<Result<_>>()?;
    let mut var = 0.0;
    let mut all_exact = true;
    let mut samples = 0u64;
    let diagonal_terms: Vec<f64> = (0..n)
        .map(|j| {
            let f = atoms[j].1 * atoms[j].1 / (vols[j] * vols[j]);
            var += (diag_est[j].std_error * f).powi(2);
            all_exact &= diag_est[j].method == Method::ClosedForm;
            samples += diag_est[j].samples;
            diag_est[j].value * f
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let cross: Vec<RieszEstimate> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(j, k))| {
            let (a, b) = (&atoms[j].0, &atoms[k].0);
            match off {
                OffDiagonal::SeparationBound { c } => {
                    let dist = a.center().offset_to(b.center()).iter().map(|x| x * x).sum::<f64>().sqrt();
                    let v = (1.0 - c).powf(-t) * dist.powf(-t) * vols[j] * vols[k];
                    Ok(RieszEstimate::exact(v, t))
                }
                OffDiagonal::Estimate => {
                    cross_with_budget(a, b, t, opts.cross_samples, opts, stream.named("cross").child(p as u64))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut off_diagonal = 0.0;
    for (est, &(j, k)) in cross.iter().zip(&pairs) {
        let f = 2.0 * atoms[j].1 * atoms[k].1 / (vols[j] * vols[k]);
        off_diagonal += est.value * f;
        var += (est.std_error * f).powi(2);
        all_exact &= est.method == Method::ClosedForm;
        samples += est.samples;
    }
    let diagonal: f64 = diagonal_terms.iter().sum();
    let total = RieszEstimate {
        value: diagonal + off_diagonal,
        std_error: var.sqrt(),
        method: if all_exact { Method::ClosedForm } else { Method::MonteCarlo },
        samples,
        t,
    };
    Ok(MeasureEnergy { total, diagonal, off_diagonal, diagonal_terms })
}

// ---------------------------------------------------------------------------
// Singular value function and content bound
// ---------------------------------------------------------------------------

/// Principal half-lengths sorted so that `λ_1 >= ... >= λ_d > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValueProfile {
    semi_axes: Vec<f64>,
}

impl SingularValueProfile {
    pub fn new(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.is_empty() || semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("semi-axes must be positive and finite"));
        }
        if semi_axes.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("semi-axes must be in non-increasing order"));
        }
        Ok(SingularValueProfile { semi_axes })
    }

    /// Sorts the lengths before validating.
    pub fn from_unordered(mut semi_axes: Vec<f64>) -> Result<Self> {
        semi_axes.sort_by(|a, b| b.total_cmp(a));
        Self::new(semi_axes)
    }

    pub fn from_shape(u: &Shape) -> Result<Self> {
        let axes = u
            .principal_half_lengths()
            .ok_or_else(|| Error::MixedShapes("indicator shapes have no semi-axes".into()))?;
        Self::from_unordered(axes)
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn dim(&self) -> usize {
        self.semi_axes.len()
    }
}

/// `ln φ^s`, the log of `λ_1 ⋯ λ_m λ_{m+1}^{s-m}` with `m < s <= m + 1`.
pub fn log_singular_value_fn(p: &SingularValueProfile, s: f64) -> Result<f64> {
    let d = p.dim();
    if !(s > 0.0 && s <= d as f64) {
        return Err(invalid(format!("s = {s} must lie in (0, {d}]")));
    }
    let m = (s.ceil() as usize).saturating_sub(1);
    let head: f64 = p.semi_axes[..m].iter().map(|a| a.ln()).sum();
    Ok(head + (s - m as f64) * p.semi_axes[m].ln())
}

pub fn singular_value_fn(p: &SingularValueProfile, s: f64) -> Result<f64> {
    Ok(log_singular_value_fn(p, s)?.exp())
}

/// `λ(U)² / I_t(U)`, a lower bound for the `t`-dimensional Hausdorff content.
pub fn content_lower_bound(u: &Shape, t: f64, opts: &EnergyOptions, stream: Stream) -> Result<f64> {
    let e = energy_set(u, t, opts, stream)?;
    let lam = u.volume()?;
    Ok(lam * lam / e.value)
}
