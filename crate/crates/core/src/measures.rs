//! The measures `ν_n` and `μ_n` and checks of their density and energy
//! bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lab::{FamilyKind, LimsupFamily};
use crate::riesz::{energy_measure, EnergyOptions, OffDiagonal};
use crate::rng::Stream;
use crate::stats::{fit_line, LineFit};
use crate::torus::{min_image, Ball, BallSeqEntry, Shape, TorusPoint};
use crate::vitali::{build_selected_union, find_truncation, CoverSelection, SelectedUnion, TruncationOptions};

pub use crate::riesz::WeightedShapeMeasure;

/// Default separation constant `c` with `U_j ⊂ B(x_j, c r_j)`.
pub const DEFAULT_SEPARATION: f64 = 0.5;

fn kept_entries(selection: &CoverSelection, family: &LimsupFamily) -> Result<Vec<BallSeqEntry>> {
    if selection.kept_indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    selection.kept_indices.iter().map(|&j| family.entry(j)).collect()
}

fn normalized_weights(entries: &[BallSeqEntry]) -> Vec<f64> {
    let total: f64 = entries.iter().map(|e| e.ball.measure()).sum();
    entries.iter().map(|e| e.ball.measure() / total).collect()
}

/// `ν_n`: the kept balls with weights `λ(B_j) / λ(Ẽ_n)`.
pub fn build_nu(selection: &CoverSelection, family: &LimsupFamily) -> Result<WeightedShapeMeasure> {
    let entries = kept_entries(selection, family)?;
    let w = normalized_weights(&entries);
    WeightedShapeMeasure::new(entries.into_iter().zip(w).map(|(e, w)| (Shape::Ball(e.ball), w)).collect())
}

/// `μ_n`: the mass `ν_n(B_j)` spread uniformly over `U_j`.
pub fn build_mu(selection: &CoverSelection, family: &LimsupFamily) -> Result<WeightedShapeMeasure> {
    let entries = kept_entries(selection, family)?;
    let w = normalized_weights(&entries);
    for e in &entries {
        e.subset.volume()?;
    }
    WeightedShapeMeasure::new(entries.into_iter().zip(w).map(|(e, w)| (e.subset, w)).collect())
}

/// Everything built for one `n`: the window, the Vitali selection, `ν_n` and
/// `μ_n`.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub n: usize,
    pub union: SelectedUnion,
    pub entries: Vec<BallSeqEntry>,
    pub nu: WeightedShapeMeasure,
    pub mu: WeightedShapeMeasure,
    /// Largest `r_j` in the window.
    pub max_radius: f64,
    pub doubled_radii: bool,
}

pub fn build_stage(family: &LimsupFamily, n: usize, opts: &TruncationOptions) -> Result<Stage> {
    let window = find_truncation(family, n, opts)?;
    let union = build_selected_union(family, &window)?;
    let entries = kept_entries(&union.selection, family)?;
    let nu = build_nu(&union.selection, family)?;
    let mu = build_mu(&union.selection, family)?;
    let max_radius = (window.start..=window.m_n)
        .map(|j| family.ball_radius(j))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let doubled_radii = matches!(family.kind, FamilyKind::Doubled { .. });
    Ok(Stage { n, union, entries, nu, mu, max_radius, doubled_radii })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Smallest admissible probe radius.
    pub floor: f64,
    /// Monte Carlo samples per straddling atom.
    pub samples: usize,
}

impl ProbeOptions {
    /// Floor at 10× the largest radius in the window.
    pub fn for_stage(stage: &Stage) -> Self {
        ProbeOptions { floor: 10.0 * stage.max_radius, samples: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProbe {
    pub ball: Ball,
    /// `μ(ball) / λ(ball)`.
    pub ratio: f64,
    pub n: usize,
    pub std_error: f64,
}

/// Mass of one normalized atom inside `ball` with its standard error.
fn atom_fraction(shape: &Shape, ball: &Ball, samples: usize, stream: Stream) -> Result<(f64, f64)> {
    let r = ball.radius();
    if let Some((c, h)) = shape.as_interval() {
        let off = min_image(c - ball.center().coords()[0]);
        let overlap = ((off + h).min(r) - (off - h).max(-r)).max(0.0);
        return Ok((overlap / (2.0 * h), 0.0));
    }
    let off = ball.center().offset_to(shape.center());
    let dist = off.iter().map(|x| x * x).sum::<f64>().sqrt();
    let reach = shape.bounding_radius();
    if dist + reach <= r {
        return Ok((1.0, 0.0));
    }
    if dist >= r + reach {
        return Ok((0.0, 0.0));
    }
    let sampler = shape.sampler()?;
    let mut rng = stream.rng();
    let mut hits = 0usize;
    for _ in 0..samples {
        if ball.contains(&sampler.sample_point(&mut rng)) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// `μ(ball) / λ(ball)`: exact for interval atoms in `d = 1`, otherwise exact
/// for atoms fully inside or outside the ball and sampled for the rest.
pub fn density_probe(
    mu: &WeightedShapeMeasure,
    ball: &Ball,
    n: usize,
    opts: &ProbeOptions,
    stream: Stream,
) -> Result<DensityProbe> {
    if ball.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: ball.dim() });
    }
    if ball.radius() < opts.floor {
        return Err(invalid(format!("probe radius {} is below the floor {}", ball.radius(), opts.floor)));
    }
    let parts: Vec<(f64, f64)> = mu
        .atoms()
        .par_iter()
        .enumerate()
        .map(|(i, (s, w))| {
            let (f, se) = atom_fraction(s, ball, opts.samples, stream.child(i as u64))?;
            Ok((w * f, w * se))
        })
        .collect::<Result<_>>()?;
    let mass: f64 = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1 * p.1).sum();
    let lam = ball.measure();
    Ok(DensityProbe { ball: ball.clone(), ratio: mass / lam, n, std_error: var.sqrt() / lam })
}

/// `count` probes of radius `radius` at uniform random centers.
pub fn random_probes(
    mu: &WeightedShapeMeasure,
    n: usize,
    radius: f64,
    count: usize,
    opts: &ProbeOptions,
    stream: Stream,
) -> Result<Vec<DensityProbe>> {
    let d = mu.dim();
    (0..count)
        .map(|i| {
            let mut rng = stream.named("probe-centers").child(i as u64).rng();
            let c = TorusPoint::new((0..d).map(|_| rng.random::<f64>()).collect())?;
            density_probe(mu, &Ball::new(c, radius)?, n, opts, stream.named("probe-mass").child(i as u64))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub n: usize,
    pub t: f64,
    pub c: f64,
    /// Claimed bound on `sup_j I_t(U_j) λ(B_j) / λ(U_j)^2`.
    pub k_claim: f64,
    pub energy: f64,
    pub energy_std_error: f64,
    pub diagonal: f64,
    pub off_diagonal: f64,
    /// `Σ_j 4·5^{2d} I_t(U_j) (λ(B_j)/λ(U_j))^2`.
    pub diagonal_bound: f64,
    /// Every diagonal term sits below its own bound.
    pub diagonal_terms_ok: bool,
    /// Largest observed `I_t(U_j) λ(B_j) / λ(U_j)^2`.
    pub max_ratio: f64,
    pub ratio_within_claim: bool,
    /// `4·5^{2d} K Σ_j λ(B_j)`.
    pub diagonal_claim_bound: f64,
    /// `(1 - c)^{-t}`.
    pub separation_factor: f64,
    /// `Σ_{j≠k} (1-c)^{-t} |x_j - x_k|^{-t} w_j w_k`.
    pub separation_bound: f64,
    pub off_diagonal_ok: bool,
    /// `I_t(ν_n)`.
    pub nu_energy: f64,
    /// `off_diagonal / I_t(ν_n)`, the measured stand-in for `C_{t,d}`.
    pub off_diagonal_constant: f64,
    pub rhs: f64,
    pub holds: bool,
    pub doubled_radii: bool,
}

/// Evaluates `I_t(μ_n)` term by term against the bounds used in the
/// transference argument.
pub fn mu_energy_bound_report(
    stage: &Stage,
    t: f64,
    c: f64,
    k_claim: f64,
    opts: &EnergyOptions,
    stream: Stream,
) -> Result<EnergyBoundReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("separation constant c = {c} must lie in (0, 1)")));
    }
    let d = stage.mu.dim();
    for e in &stage.entries {
        if !e.subset_within_fraction(c) {
            return Err(Error::SeparationViolated { index: e.index, c });
        }
    }
    let mu_e = energy_measure(&stage.mu, t, opts, OffDiagonal::Estimate, stream.named("mu"))?;
    let nu_e = energy_measure(&stage.nu, t, opts, OffDiagonal::Estimate, stream.named("nu"))?;
    let weights: Vec<f64> = stage.mu.atoms().iter().map(|a| a.1).collect();
    let five = 5f64.powi(2 * d as i32);
    let mut diagonal_bound = 0.0;
    let mut diagonal_terms_ok = true;
    let mut max_ratio: f64 = 0.0;
    for (j, e) in stage.entries.iter().enumerate() {
        let (lb, lu) = (e.ball.measure(), e.subset.volume()?);
        // recover I_t(U_j) from the diagonal term so both sides share samples
        let i_u = mu_e.diagonal_terms[j] * lu * lu / (weights[j] * weights[j]);
        let bound = 4.0 * five * i_u * (lb / lu).powi(2);
        diagonal_bound += bound;
        diagonal_terms_ok &= mu_e.diagonal_terms[j] <= bound;
        max_ratio = max_ratio.max(i_u * lb / (lu * lu));
    }
    let ball_sum: f64 = stage.entries.iter().map(|e| e.ball.measure()).sum();
    let separation_factor = (1.0 - c).powf(-t);
    let mut separation_bound = 0.0;
    for j in 0..stage.entries.len() {
        for k in j + 1..stage.entries.len() {
            let off = stage.entries[j].ball.center().offset_to(stage.entries[k].ball.center());
            let dist = off.iter().map(|x| x * x).sum::<f64>().sqrt();
            separation_bound += 2.0 * separation_factor * dist.powf(-t) * weights[j] * weights[k];
        }
    }
    let slack = 3.0 * mu_e.total.std_error;
    let off_diagonal_ok = mu_e.off_diagonal <= separation_bound + slack;
    let rhs = diagonal_bound + separation_bound;
    Ok(EnergyBoundReport {
        n: stage.n,
        t,
        c,
        k_claim,
        energy: mu_e.total.value,
        energy_std_error: mu_e.total.std_error,
        diagonal: mu_e.diagonal,
        off_diagonal: mu_e.off_diagonal,
        diagonal_bound,
        diagonal_terms_ok,
        max_ratio,
        ratio_within_claim: max_ratio <= k_claim,
        diagonal_claim_bound: 4.0 * five * k_claim * ball_sum,
        separation_factor,
        separation_bound,
        off_diagonal_ok,
        nu_energy: nu_e.total.value,
        off_diagonal_constant: mu_e.off_diagonal / nu_e.total.value,
        rhs,
        holds: mu_e.total.value <= rhs + slack,
        doubled_radii: stage.doubled_radii,
    })
}

/// Regression of `I_t(μ_n)` against `n`.
pub fn energy_trend(ns: &[usize], energies: &[f64]) -> Option<LineFit> {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    fit_line(&xs, energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusPoint;

    fn entry(j: usize, c: f64, r: f64, ru: f64) -> BallSeqEntry {
        let p = TorusPoint::new(vec![c]).unwrap();
        BallSeqEntry::new(j, Ball::new(p.clone(), r).unwrap(), Shape::ball(p, ru).unwrap()).unwrap()
    }

    fn selection(idx: Vec<usize>) -> CoverSelection {
        CoverSelection {
            kept_indices: idx,
            expansion_factor: 5.0,
            coverage_measure: 0.0,
            disjoint_sum: 0.0,
            kept: vec![],
        }
    }

    #[test]
    fn weights_follow_ball_measure() {
        let fam = LimsupFamily::custom(vec![entry(1, 0.2, 0.1, 0.01), entry(2, 0.6, 0.05, 0.01)]).unwrap();
        let nu = build_nu(&selection(vec![1, 2]), &fam).unwrap();
        let w: Vec<f64> = nu.atoms().iter().map(|a| a.1).collect();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12 && (w[1] - 1.0 / 3.0).abs() < 1e-12);
        let mu = build_mu(&selection(vec![1, 2]), &fam).unwrap();
        assert_eq!(mu.atoms()[1].1, w[1]);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        assert!(matches!(build_nu(&selection(vec![]), &fam), Err(Error::EmptySelection)));
    }

    #[test]
    fn probe_containing_everything() {
        let fam = LimsupFamily::custom(vec![entry(1, 0.2, 0.02, 0.01), entry(2, 0.3, 0.02, 0.01)]).unwrap();
        let mu = build_mu(&selection(vec![1, 2]), &fam).unwrap();
        let probe = Ball::new(TorusPoint::new(vec![0.25]).unwrap(), 0.2).unwrap();
        let opts = ProbeOptions { floor: 0.0, samples: 100 };
        let p = density_probe(&mu, &probe, 2, &opts, Stream::new(0)).unwrap();
        assert!((p.ratio - 1.0 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn arc_overlap_wraps() {
        let s = Shape::ball(TorusPoint::new(vec![0.98]).unwrap(), 0.04).unwrap();
        let b = Ball::new(TorusPoint::new(vec![0.05]).unwrap(), 0.05).unwrap();
        // atom (0.94, 1.02), probe (0.0, 0.1): overlap 0.02 of 0.08
        let (f, _) = atom_fraction(&s, &b, 10, Stream::new(0)).unwrap();
        assert!((f - 0.25).abs() < 1e-12);
    }
}
