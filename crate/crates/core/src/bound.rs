//! The dimension lower bound
//! `s = sup { t : sup_j I_t(U_j) λ(B_j) / λ(U_j)^2 < ∞ }` on a finite window
//! of indices.
//!
//! "Bounded" is decided per `t` by regressing `ln R_j(t)` on `ln(1/r_j)`: a
//! slope at most `slope_tol` counts as bounded. A coarse grid in `t` is
//! smoothed, checked for monotonicity and refined by bisection.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lab::LimsupFamily;
use crate::riesz::{log_energy_set, log_singular_value_fn, EnergyOptions, SingularValueProfile};
use crate::rng::Stream;
use crate::stats::fit_line;
use crate::torus::{BallSeqEntry, Shape, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    EnergyRatio,
    SingularValue,
    SubsetSearch,
}

/// Which indices of the window enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum JSelection {
    All,
    /// About `count` log-spaced indices.
    LogSpaced {
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub j_max: usize,
    pub t_tol: f64,
    pub slope_tol: f64,
    pub grid_points: usize,
    pub selection: JSelection,
    pub energy: EnergyOptions,
    pub seed: u64,
    /// Also compute `s` on the half window `j <= j_max / 2`.
    pub half_window: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            j_max: 10_000,
            t_tol: 1e-3,
            slope_tol: 0.01,
            grid_points: 16,
            selection: JSelection::All,
            energy: EnergyOptions::default(),
            seed: 0,
            half_window: true,
        }
    }
}

impl BoundOptions {
    /// Defaults for Monte Carlo energies: 100 indices and 2·10^4 samples.
    pub fn monte_carlo() -> Self {
        BoundOptions { j_max: 100, energy: EnergyOptions::default().with_samples(20_000), ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_tol > 0.0) {
            return Err(invalid(format!("t_tol = {} must be positive", self.t_tol)));
        }
        if !(self.slope_tol >= 0.0) {
            return Err(invalid("slope_tol must be non-negative"));
        }
        if self.grid_points < 3 {
            return Err(invalid("need at least 3 coarse grid points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TPoint {
    pub t: f64,
    /// `max_j R_j(t)` over the window.
    pub sup_stat: f64,
    pub log_sup_stat: f64,
    /// Regression slope of `ln R_j` on `ln(1/r_j)`.
    pub slope: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `s` is only ever a finite-window estimate.
    pub label: String,
    pub slope_tol: f64,
    pub t_tol: f64,
    pub indices_used: usize,
    /// `s` recomputed on `j <= j_max / 2`.
    pub s_half_window: Option<f64>,
    pub samples_per_energy: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionReport {
    pub s: f64,
    pub t_grid: Vec<TPoint>,
    pub method: BoundMethod,
    pub j_range: (usize, usize),
    pub diagnostics: Diagnostics,
    /// Per-candidate results of a subset search.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winning_map: Option<String>,
}

impl DimensionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Two-column `t,sup_stat` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup_stat\n");
        for p in &self.t_grid {
            s.push_str(&format!("{},{:e}\n", p.t, p.sup_stat));
        }
        s
    }
}

fn select_indices(lo: usize, hi: usize, sel: JSelection) -> Vec<usize> {
    match sel {
        JSelection::All => (lo..=hi).collect(),
        JSelection::LogSpaced { count } => {
            let count = count.max(2);
            let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
            let mut v: Vec<usize> = (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
                .map(|j| j.clamp(lo, hi))
                .collect();
            v.dedup();
            v
        }
    }
}

type LogRatios<'a> = Box<dyn Fn(f64) -> Result<Vec<f64>> + Sync + 'a>;

/// Memoized `t ↦ (ln R_j(t))_j` over a fixed index list.
struct Evaluator<'a> {
    log_inv_r: Vec<f64>,
    ratios: LogRatios<'a>,
    memo: Mutex<HashMap<u64, Vec<f64>>>,
}

impl Evaluator<'_> {
    fn point(&self, t: f64, k: usize, slope_tol: f64) -> Result<TPoint> {
        let cached = self.memo.lock().expect("memo lock").get(&t.to_bits()).cloned();
        let ys = match cached {
            Some(v) => v,
            None => {
                let v = (self.ratios)(t)?;
                self.memo.lock().expect("memo lock").insert(t.to_bits(), v.clone());
                v
            }
        };
        let fit = fit_line(&self.log_inv_r[..k], &ys[..k])
            .ok_or_else(|| invalid("the index window needs at least two distinct radii"))?;
        let log_sup = ys[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(TPoint {
            t,
            sup_stat: log_sup.exp(),
            log_sup_stat: log_sup,
            slope: fit.slope,
            bounded: fit.slope <= slope_tol,
        })
    }

    /// Coarse grid, smoothing, monotonicity check and bisection on the first
    /// `k` indices.
    fn search(&self, k: usize, t_hi: f64, opts: &BoundOptions) -> Result<(f64, Vec<TPoint>)> {
        let g = opts.grid_points;
        let mut points: Vec<TPoint> =
            (1..=g).map(|i| self.point(t_hi * i as f64 / g as f64, k, opts.slope_tol)).collect::<Result<_>>()?;
        let raw: Vec<bool> = points.iter().map(|p| p.bounded).collect();
        let mut flags = raw.clone();
        for i in 1..g - 1 {
            flags[i] = [raw[i - 1], raw[i], raw[i + 1]].iter().filter(|b| **b).count() >= 2;
        }
        if let Some(i) = (1..g).find(|&i| flags[i] && !flags[i - 1]) {
            return Err(Error::NonMonotoneBound { t: points[i].t });
        }
        for (p, f) in points.iter_mut().zip(&flags) {
            p.bounded = *f;
        }
        let first_false = flags.iter().position(|f| !f);
        let s = match first_false {
            None => t_hi,
            Some(i) => {
                let mut lo = if i == 0 { 0.0 } else { points[i - 1].t };
                let mut hi = points[i].t;
                while hi - lo > opts.t_tol {
                    let mid = 0.5 * (lo + hi);
                    let p = self.point(mid, k, opts.slope_tol)?;
                    if p.bounded {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    points.push(p);
                }
                lo
            }
        };
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok((s, points))
    }
}

struct Window {
    js: Vec<usize>,
    entries: Vec<BallSeqEntry>,
    log_inv_r: Vec<f64>,
    j_range: (usize, usize),
}

fn window(family: &LimsupFamily, opts: &BoundOptions) -> Result<Window> {
    let lo = family.first_index;
    let hi = family.last_index().map_or(opts.j_max, |l| l.min(opts.j_max));
    if hi <= lo {
        return Err(invalid(format!("index window {lo}..={hi} is too short")));
    }
    let js = select_indices(lo, hi, opts.selection);
    let entries: Vec<BallSeqEntry> = js.par_iter().map(|&j| family.entry(j)).collect::<Result<_>>()?;
    let log_inv_r = entries.iter().map(|e| -e.ball.radius().ln()).collect();
    Ok(Window { js, entries, log_inv_r, j_range: (lo, hi) })
}

fn run(
    eval: &Evaluator,
    win: &Window,
    t_hi: f64,
    method: BoundMethod,
    opts: &BoundOptions,
    samples: Option<usize>,
) -> Result<DimensionReport> {
    let (s, t_grid) = eval.search(win.js.len(), t_hi, opts)?;
    let s_half_window = if opts.half_window {
        let half = win.js.partition_point(|&j| j <= win.j_range.1 / 2);
        if half >= 3 {
            Some(eval.search(half, t_hi, opts).map(|r| r.0).unwrap_or(f64::NAN))
        } else {
            None
        }
    } else {
        None
    };
    Ok(DimensionReport {
        s,
        t_grid,
        method,
        j_range: win.j_range,
        diagnostics: Diagnostics {
            label: "finite-window estimate".into(),
            slope_tol: opts.slope_tol,
            t_tol: opts.t_tol,
            indices_used: win.js.len(),
            s_half_window,
            samples_per_energy: samples,
        },
        candidates: Vec::new(),
        winning_map: None,
    })
}

fn energy_report(family: &LimsupFamily, map: &ShrinkMap, opts: &BoundOptions) -> Result<DimensionReport> {
    opts.validate()?;
    let mut win = window(family, opts)?;
    for e in &mut win.entries {
        e.subset = map.apply(e)?;
    }
    let d = family.d;
    let logs: Vec<(f64, f64)> =
        win.entries.iter().map(|e| Ok((e.ball.measure().ln(), e.subset.log_volume()?))).collect::<Result<_>>()?;
    let exact = win.entries.iter().all(|e| e.subset.as_interval().is_some());
    let stream = Stream::new(opts.seed).named("bound-energy");
    let entries = &win.entries;
    let js = &win.js;
    let energy = opts.energy;
    let eval = Evaluator {
        log_inv_r: win.log_inv_r.clone(),
        ratios: Box::new(move |t| {
            entries
                .par_iter()
                .zip(js)
                .zip(&logs)
                .map(|((e, &j), &(lb, lu))| {
                    let (li, _) = log_energy_set(&e.subset, t, &energy, stream.child(j as u64))?;
                    Ok(li + lb - 2.0 * lu)
                })
                .collect()
        }),
        memo: Mutex::new(HashMap::new()),
    };
    let t_hi = d as f64 - 0.5 * opts.t_tol;
    let samples = (!exact).then_some(opts.energy.samples);
    run(&eval, &win, t_hi, BoundMethod::EnergyRatio, opts, samples)
}

/// `s` from `R_j(t) = I_t(U_j) λ(B_j) / λ(U_j)^2`, with exact interval
/// energies in `d = 1` and Monte Carlo energies otherwise.
pub fn bound_energy_ratio(family: &LimsupFamily, opts: &BoundOptions) -> Result<DimensionReport> {
    energy_report(family, &ShrinkMap::Identity, opts)
}

/// `s` from `R_j(t) = λ(B_j) / φ^t(U_j)`, exact, for balls, boxes and
/// ellipsoids of a single kind.
pub fn bound_singular_value(family: &LimsupFamily, opts: &BoundOptions) -> Result<DimensionReport> {
    opts.validate()?;
    let win = window(family, opts)?;
    let kind = win.entries[0].subset.kind();
    for e in &win.entries {
        if matches!(e.subset, Shape::Indicator(_)) {
            return Err(Error::MixedShapes("indicator shapes have no semi-axes".into()));
        }
        if e.subset.kind() != kind {
            return Err(Error::MixedShapes(format!("found {} and {}", kind, e.subset.kind())));
        }
    }
    let profiles: Vec<(f64, SingularValueProfile)> = win
        .entries
        .iter()
        .map(|e| Ok((e.ball.measure().ln(), SingularValueProfile::from_shape(&e.subset)?)))
        .collect::<Result<_>>()?;
    let eval = Evaluator {
        log_inv_r: win.log_inv_r.clone(),
        ratios: Box::new(|t| profiles.iter().map(|(lb, p)| Ok(lb - log_singular_value_fn(p, t)?)).collect()),
        memo: Mutex::new(HashMap::new()),
    };
    run(&eval, &win, family.d as f64, BoundMethod::SingularValue, opts, None)
}

/// Maps `U_j` to an open subset `V_j ⊂ U_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum ShrinkMap {
    Identity,
    /// The ball of radius `min_i λ_i` at the center.
    InscribedBall,
    /// The centered box with half-widths `f_i · w_i`, where `w_i` are the
    /// half-widths of the largest centered box inside `U_j`.
    CentralSubBox {
        fractions: Vec<f64>,
    },
}

const SHRINK_CHECK_SAMPLES: usize = 256;

impl ShrinkMap {
    pub fn label(&self) -> String {
        match self {
            ShrinkMap::Identity => "identity".into(),
            ShrinkMap::InscribedBall => "inscribed_ball".into(),
            ShrinkMap::CentralSubBox { fractions } => format!("central_sub_box{fractions:?}"),
        }
    }

    pub fn apply(&self, e: &BallSeqEntry) -> Result<Shape> {
        let u = &e.subset;
        let center: TorusPoint = u.center().clone();
        let v = match self {
            ShrinkMap::Identity => return Ok(u.clone()),
            ShrinkMap::InscribedBall => {
                let axes =
                    u.principal_half_lengths().ok_or_else(|| invalid("inscribed balls need a shape with semi-axes"))?;
                Shape::ball(center, axes.iter().cloned().fold(f64::INFINITY, f64::min))?
            }
            ShrinkMap::CentralSubBox { fractions } => {
                if fractions.len() != u.dim() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                    return Err(invalid("sub-box fractions must be d numbers in (0, 1]"));
                }
                let full: Vec<f64> = match u {
                    Shape::Box(b) => b.half_widths().to_vec(),
                    Shape::Ball(_) | Shape::Ellipsoid(_) => {
                        let k = (u.dim() as f64).sqrt();
                        u.half_extents().iter().map(|a| a / k).collect()
                    }
                    Shape::Indicator(_) => return Err(invalid("sub-boxes need a closed-form shape")),
                };
                Shape::axis_box(center, full.iter().zip(fractions).map(|(w, f)| w * f).collect())?
            }
        };
        let sampler = v.sampler()?;
        let mut rng = Stream::new(e.index as u64).named("shrink-check").rng();
        for _ in 0..SHRINK_CHECK_SAMPLES {
            let p = sampler.sample_point(&mut rng);
            if !u.contains(&p) {
                return Err(Error::Containment(format!("{} of entry {} leaves U_j", self.label(), e.index)));
            }
        }
        Ok(v)
    }
}

/// The largest energy-ratio bound over the candidate maps; the identity is
/// always included.
pub fn bound_subset_search(family: &LimsupFamily, maps: &[ShrinkMap], opts: &BoundOptions) -> Result<DimensionReport> {
    let mut all = vec![ShrinkMap::Identity];
    all.extend(maps.iter().filter(|m| **m != ShrinkMap::Identity).cloned());
    let mut best: Option<(DimensionReport, String)> = None;
    let mut candidates = Vec::new();
    for m in &all {
        let r = energy_report(family, m, opts)?;
        candidates.push((m.label(), r.s));
        if best.as_ref().is_none_or(|(b, _)| r.s > b.s) {
            best = Some((r, m.label()));
        }
    }
    let (mut report, label) = best.expect("identity is always a candidate");
    report.method = BoundMethod::SubsetSearch;
    report.candidates = candidates;
    report.winning_map = Some(label);
    Ok(report)
}

/// `D(τ) = min_j (d + 1 + j τ_j - Σ_{i<=j} τ_i) / (1 + τ_j)` for
/// `1/d <= τ_1 <= ... <= τ_d`.
pub fn dimension_formula_d(tau: &[f64]) -> Result<f64> {
    let d = tau.len();
    if d == 0 {
        return Err(invalid("τ must have at least one entry"));
    }
    if tau.iter().any(|t| !(*t >= 1.0 / d as f64 - 1e-12)) {
        return Err(invalid(format!("every τ_i must be at least 1/{d}")));
    }
    if tau.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("τ must be sorted ascending"));
    }
    let mut prefix = 0.0;
    let mut best = f64::INFINITY;
    for (i, &t) in tau.iter().enumerate() {
        prefix += t;
        let j = (i + 1) as f64;
        best = best.min((d as f64 + 1.0 + j * t - prefix) / (1.0 + t));
    }
    Ok(best)
}

/// [`dimension_formula_d`] after sorting `τ`.
pub fn dimension_formula_d_sorted(tau: &[f64]) -> Result<f64> {
    let mut v = tau.to_vec();
    v.sort_by(f64::total_cmp);
    dimension_formula_d(&v)
}
