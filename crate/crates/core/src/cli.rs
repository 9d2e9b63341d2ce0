//! Command-line front end: a TOML config merged with flags, one command per
//! run, a JSON report on stdout and optionally in an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bound::{
    bound_energy_ratio, bound_singular_value, bound_subset_search, dimension_formula_d, BoundOptions, JSelection,
    ShrinkMap,
};
use crate::error::{Error, Result};
use crate::lab::{
    covering_counts, dyadic_starts, generate_diophantine, intersection_experiment, LimsupFamily, RadiusLaw,
    DEFAULT_CELL_CAP,
};
use crate::measures::{build_stage, energy_trend, mu_energy_bound_report, random_probes, ProbeOptions};
use crate::riesz::{content_lower_bound, energy_set, EnergyOptions};
use crate::rng::Stream;
use crate::torus::{Shape, TorusPoint};
use crate::vitali::{build_selected_union, find_truncation, TruncationOptions};

pub const OUT_ENV: &str = "RIESZ_LIMSUP_OUT";

const COMMANDS: [&str; 7] = ["energy", "bound", "vitali", "measures", "boxdim", "diophantine", "intersect"];

#[derive(Parser, Debug, Default)]
#[command(name = "riesz-limsup", version, about = "Riesz-energy dimension bounds for limsup sets on the torus")]
pub struct Cli {
    /// energy, bound, vitali, measures, boxdim, diophantine or intersect
    pub command: Option<String>,
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// shrunken-balls, random-balls, ellipsoids, boxes or diophantine
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated τ; repeat for each family of an intersection
    #[arg(long)]
    pub tau: Vec<String>,
    /// Comma-separated shape exponents for ellipsoid and box families
    #[arg(long)]
    pub exponents: Option<String>,
    #[arg(long)]
    pub coefficient: Option<f64>,
    /// Scale `a` in `r_j = a j^{-1/d}`
    #[arg(long)]
    pub radius_scale: Option<f64>,
    /// First index of the family
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub j_max: Option<usize>,
    /// Number of log-spaced indices used by the bound (all if absent)
    #[arg(long)]
    pub j_count: Option<usize>,
    #[arg(long)]
    pub t_tol: Option<f64>,
    #[arg(long)]
    pub slope_tol: Option<f64>,
    /// energy, singular-value or subset
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Comma-separated truncation levels
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub q_max: Option<u64>,
    /// Generations 2^gen_lo ..= 2^gen_hi for covering counts
    #[arg(long)]
    pub gen_lo: Option<u32>,
    #[arg(long)]
    pub gen_hi: Option<u32>,
    /// Grid resolution exponent for union measures
    #[arg(long)]
    pub resolution: Option<u32>,
    #[arg(long)]
    pub max_j: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Claimed bound on sup_j I_t(U_j) λ(B_j) / λ(U_j)^2
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub probe_radius: Option<f64>,
    /// ball, box or ellipsoid
    #[arg(long)]
    pub shape: Option<String>,
    /// Comma-separated shape center
    #[arg(long)]
    pub center: Option<String>,
    /// Comma-separated radius, half-widths or semi-axes
    #[arg(long)]
    pub size: Option<String>,
    /// Output directory for the JSON report and CSV
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Also write the curve as CSV
    #[arg(long)]
    pub csv: bool,
    /// Worker threads; defaults to the available cores
    #[arg(long)]
    pub workers: Option<usize>,
    /// Print only D(τ)
    #[arg(long)]
    pub formula_only: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub kind: Option<String>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub half_widths: Option<Vec<f64>>,
    pub semi_axes: Option<Vec<f64>>,
}

/// Every run parameter. After [`RunConfig::resolve`] all fields used by the
/// command are filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub family: Option<String>,
    pub d: Option<usize>,
    pub sigma: Option<f64>,
    pub tau: Option<Vec<f64>>,
    pub taus: Option<Vec<Vec<f64>>>,
    pub exponents: Option<Vec<f64>>,
    pub coefficient: Option<f64>,
    pub radius_scale: Option<f64>,
    pub start: Option<usize>,
    pub j_max: Option<usize>,
    pub j_count: Option<usize>,
    pub t_tol: Option<f64>,
    pub slope_tol: Option<f64>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub t: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub q_max: Option<u64>,
    pub gen_lo: Option<u32>,
    pub gen_hi: Option<u32>,
    pub resolution: Option<u32>,
    pub max_j: Option<usize>,
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub probes: Option<usize>,
    pub probe_radius: Option<f64>,
    pub shape: Option<ShapeSpec>,
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("--{key}: '{x}' is not a number"))))
        .collect()
}

/// Locates `key = …` in the config text for line-anchored messages.
struct Source {
    path: Option<PathBuf>,
    text: String,
}

impl Source {
    fn anchor(&self, key: &str) -> String {
        let Some(path) = &self.path else {
            return String::new();
        };
        let line = self.text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        match line {
            Some(i) => format!("{}:{}: ", path.display(), i + 1),
            None => format!("{}: ", path.display()),
        }
    }

    fn error(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}{key}: {msg}", self.anchor(key)))
    }
}

fn load(cli: &Cli) -> Result<(RunConfig, Source)> {
    let (mut cfg, src) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let cfg: RunConfig = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
            (cfg, Source { path: Some(path.clone()), text })
        }
        None => (RunConfig::default(), Source { path: None, text: String::new() }),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if cli.$f.is_some() { cfg.$f = cli.$f.clone(); } )* };
    }
    over!(command, family, d, sigma, coefficient, radius_scale, start, j_max, j_count, t_tol, slope_tol, method);
    over!(seed, samples, t, q_max, gen_lo, gen_hi, resolution, max_j, c, k, probes, probe_radius);
    if let Some(e) = &cli.exponents {
        cfg.exponents = Some(parse_list("exponents", e)?);
    }
    match cli.tau.len() {
        0 => {}
        1 => cfg.tau = Some(parse_list("tau", &cli.tau[0])?),
        _ => {
            cfg.taus = Some(cli.tau.iter().map(|s| parse_list("tau", s)).collect::<Result<_>>()?);
        }
    }
    if !cli.n.is_empty() {
        cfg.n = Some(cli.n.clone());
    }
    if cli.shape.is_some() || cli.center.is_some() || cli.size.is_some() {
        let mut spec = cfg.shape.take().unwrap_or_default();
        if cli.shape.is_some() {
            spec.kind = cli.shape.clone();
        }
        if let Some(c) = &cli.center {
            spec.center = Some(parse_list("center", c)?);
        }
        if let Some(s) = &cli.size {
            let v = parse_list("size", s)?;
            match spec.kind.as_deref() {
                Some("ball") => spec.radius = v.first().copied(),
                Some("box") => spec.half_widths = Some(v),
                _ => spec.semi_axes = Some(v),
            }
        }
        cfg.shape = Some(spec);
    }
    Ok((cfg, src))
}

impl RunConfig {
    fn require<T: Clone>(v: &Option<T>, key: &str, src: &Source) -> Result<T> {
        v.clone().ok_or_else(|| src.error(key, "is required for this command"))
    }

    /// Fills in defaults and checks the command's parameters.
    fn resolve(mut self, src: &Source) -> Result<RunConfig> {
        let Some(cmd) = self.command.clone() else {
            return Err(Error::Config(format!("{}no command given", src.anchor("command"))));
        };
        if !COMMANDS.contains(&cmd.as_str()) {
            return Err(src.error("command", format!("unknown command '{cmd}'")));
        }
        self.seed.get_or_insert(0);
        let center_dim = self.shape.as_ref().and_then(|s| s.center.as_ref()).map(Vec::len);
        let d = *self.d.get_or_insert(center_dim.unwrap_or(1));
        if d == 0 {
            return Err(src.error("d", "must be at least 1"));
        }
        let check_t = |t: f64, key: &str| -> Result<()> {
            if !(t > 0.0 && t < d as f64) {
                return Err(src.error(key, format!("{t} must lie in (0, {d})")));
            }
            Ok(())
        };
        if let Some(t_tol) = self.t_tol {
            if !(t_tol > 0.0) {
                return Err(src.error("t_tol", "must be positive"));
            }
        }
        match cmd.as_str() {
            "energy" => {
                check_t(*self.t.get_or_insert(0.5), "t")?;
                self.samples.get_or_insert(1_000_000);
                Self::require(&self.shape, "shape", src)?;
            }
            "bound" => {
                self.family.get_or_insert_with(|| "shrunken-balls".into());
                let m = self.method.get_or_insert_with(|| "energy".into()).clone();
                if !["energy", "singular-value", "subset"].contains(&m.as_str()) {
                    return Err(src.error("method", format!("unknown method '{m}'")));
                }
                self.t_tol.get_or_insert(1e-3);
                self.slope_tol.get_or_insert(0.01);
            }
            "vitali" => {
                self.family.get_or_insert_with(|| "random-balls".into());
                self.n.get_or_insert_with(|| vec![2]);
                self.max_j.get_or_insert(1_000_000);
            }
            "measures" => {
                self.family.get_or_insert_with(|| "shrunken-balls".into());
                self.n.get_or_insert_with(|| vec![2, 4, 8]);
                check_t(*self.t.get_or_insert(0.4), "t")?;
                let c = *self.c.get_or_insert(0.5);
                if !(c > 0.0 && c < 1.0) {
                    return Err(src.error("c", format!("{c} must lie in (0, 1)")));
                }
                self.k.get_or_insert(10.0);
                self.probes.get_or_insert(100);
                self.probe_radius.get_or_insert(0.1);
                self.max_j.get_or_insert(1_000_000);
                self.samples.get_or_insert(20_000);
            }
            "boxdim" => {
                self.family.get_or_insert_with(|| "diophantine".into());
                self.gen_lo.get_or_insert(2);
                let hi = *self.gen_hi.get_or_insert(if d == 1 { 10 } else { 5 });
                self.q_max.get_or_insert((1u64 << (hi + 1)) - 1);
            }
            "diophantine" => {
                Self::require(&self.tau, "tau", src)?;
                self.gen_lo.get_or_insert(2);
                self.gen_hi.get_or_insert(if d == 1 { 10 } else { 5 });
                let hi = self.gen_hi.expect("set above");
                self.q_max.get_or_insert((1u64 << (hi + 1)) - 1);
                self.t_tol.get_or_insert(1e-3);
                self.slope_tol.get_or_insert(0.01);
            }
            "intersect" => {
                let taus = Self::require(&self.taus, "taus", src)?;
                if !(2..=4).contains(&taus.len()) {
                    return Err(src.error("taus", "need 2 to 4 families"));
                }
                self.gen_lo.get_or_insert(2);
                self.gen_hi.get_or_insert(if d == 1 { 10 } else { 5 });
                let hi = self.gen_hi.expect("set above");
                self.q_max.get_or_insert((1u64 << (hi + 1)) - 1);
            }
            _ => unreachable!(),
        }
        if let Some(tau) = &self.tau {
            if tau.len() != d {
                return Err(src.error("tau", format!("has {} entries, expected d = {d}", tau.len())));
            }
        }
        if self.family.as_deref() == Some("diophantine") {
            Self::require(&self.tau, "tau", src)?;
            self.q_max.get_or_insert(1024);
        }
        if self.family.as_deref() == Some("shrunken-balls") {
            let sigma = *self.sigma.get_or_insert(0.5);
            if !(sigma > 0.0 && sigma <= d as f64) {
                return Err(src.error("sigma", format!("{sigma} must lie in (0, {d}]")));
            }
        }
        Ok(self)
    }

    fn family(&self, src: &Source) -> Result<LimsupFamily> {
        let d = self.d.unwrap_or(1);
        let seed = self.seed.unwrap_or(0);
        let law = RadiusLaw::harmonic(d, self.radius_scale.unwrap_or(0.5));
        let name = self.family.as_deref().unwrap_or("shrunken-balls");
        let fam = match name {
            "shrunken-balls" => LimsupFamily::shrunken_balls(d, self.sigma.unwrap_or(0.5), law, seed),
            "random-balls" => LimsupFamily::random_balls(d, law, seed),
            "ellipsoids" | "boxes" => {
                let exps = self.exponents.clone().unwrap_or_else(|| vec![1.0; d]);
                let coef = self.coefficient.unwrap_or(0.5);
                if name == "ellipsoids" {
                    LimsupFamily::ellipsoids(d, exps, coef, law, seed)
                } else {
                    LimsupFamily::boxes(d, exps, coef, law, seed)
                }
            }
            "diophantine" => generate_diophantine(d, self.tau.as_deref().unwrap_or(&[]), self.q_max.unwrap_or(1024)),
            other => return Err(src.error("family", format!("unknown family '{other}'"))),
        }
        .map_err(|e| match e {
            Error::InvalidParameter(m) => src.error("family", m),
            e => e,
        })?;
        Ok(match self.start {
            Some(s) if s >= fam.first_index => fam.starting_at(s),
            Some(s) => {
                return Err(src.error("start", format!("{s} is below the first admissible index {}", fam.first_index)))
            }
            None => fam,
        })
    }

    fn shape(&self, src: &Source) -> Result<Shape> {
        let spec = self.shape.clone().unwrap_or_default();
        let d = self.d.unwrap_or(1);
        let center =
            TorusPoint::new(spec.center.clone().unwrap_or_else(|| vec![0.5; d])).map_err(|e| src.error("center", e))?;
        if center.dim() != d {
            return Err(src.error("center", format!("has {} coordinates, expected d = {d}", center.dim())));
        }
        let r = match spec.kind.as_deref().unwrap_or("ball") {
            "ball" => Shape::ball(center, Self::require(&spec.radius, "radius", src)?),
            "box" => Shape::axis_box(center, Self::require(&spec.half_widths, "half_widths", src)?),
            "ellipsoid" => Shape::ellipsoid(center, Self::require(&spec.semi_axes, "semi_axes", src)?),
            other => return Err(src.error("kind", format!("unknown shape kind '{other}'"))),
        };
        r.map_err(|e| src.error("shape", e))
    }

    fn bound_options(&self) -> BoundOptions {
        let mut o = BoundOptions {
            t_tol: self.t_tol.unwrap_or(1e-3),
            slope_tol: self.slope_tol.unwrap_or(0.01),
            seed: self.seed.unwrap_or(0),
            ..Default::default()
        };
        if let Some(s) = self.samples {
            o.energy = o.energy.with_samples(s);
        }
        if let Some(j) = self.j_max {
            o.j_max = j;
        }
        if let Some(count) = self.j_count {
            o.selection = JSelection::LogSpaced { count };
        }
        o
    }
}

/// The outcome of a run: the JSON report and an optional CSV.
pub struct RunOutput {
    pub command: String,
    pub report: Value,
    pub csv: Option<String>,
    /// A bare value to print instead of the report.
    pub scalar: Option<f64>,
}

/// Parses, validates and runs one command.
pub fn run(cli: &Cli) -> Result<RunOutput> {
    let (cfg, src) = load(cli)?;
    let cfg = cfg.resolve(&src)?;
    let cmd = cfg.command.clone().expect("resolved");
    let seed = cfg.seed.unwrap_or(0);
    let stream = Stream::new(seed).named(&cmd);
    let mut csv = None;
    let mut scalar = None;
    let result: Value = match cmd.as_str() {
        "energy" => {
            let u = cfg.shape(&src)?;
            let t = cfg.t.expect("resolved");
            let opts = EnergyOptions::default().with_samples(cfg.samples.expect("resolved"));
            let est = energy_set(&u, t, &opts, stream.named("energy"))?;
            let content = content_lower_bound(&u, t, &opts, stream.named("energy"))?;
            json!({ "shape": u, "estimate": est, "content_lower_bound": content, "measure": u.volume()? })
        }
        "bound" => {
            let fam = cfg.family(&src)?;
            let opts = cfg.bound_options();
            let r = match cfg.method.as_deref() {
                Some("singular-value") => bound_singular_value(&fam, &opts)?,
                Some("subset") => bound_subset_search(
                    &fam,
                    &[ShrinkMap::InscribedBall, ShrinkMap::CentralSubBox { fractions: vec![0.5; fam.d] }],
                    &opts,
                )?,
                _ => bound_energy_ratio(&fam, &opts)?,
            };
            csv = Some(r.to_csv());
            serde_json::to_value(&r)?
        }
        "vitali" => {
            let fam = cfg.family(&src)?;
            let topts = TruncationOptions { resolution: cfg.resolution, max_j: cfg.max_j.expect("resolved") };
            let mut out = Vec::new();
            for &n in cfg.n.as_ref().expect("resolved") {
                let w = find_truncation(&fam, n, &topts)?;
                out.push(serde_json::to_value(build_selected_union(&fam, &w)?)?);
            }
            Value::Array(out)
        }
        "measures" => measures_command(&cfg, &src, stream)?,
        "boxdim" => {
            let fam = cfg.family(&src)?;
            let starts = generation_starts(&cfg, &fam)?;
            let curve = covering_counts(&fam, &starts, DEFAULT_CELL_CAP)?;
            csv = Some(curve.to_csv());
            serde_json::to_value(&curve)?
        }
        "diophantine" => {
            let d = cfg.d.expect("resolved");
            let tau = cfg.tau.clone().expect("resolved");
            let formula = dimension_formula_d(&tau).map_err(|e| src.error("tau", e))?;
            if cli.formula_only {
                scalar = Some(formula);
                json!({ "formula": formula })
            } else {
                let fam = generate_diophantine(d, &tau, cfg.q_max.expect("resolved"))?;
                let starts = generation_starts(&cfg, &fam)?;
                let curve = covering_counts(&fam, &starts, DEFAULT_CELL_CAP)?;
                let bound = bound_singular_value(&fam, &cfg.bound_options())?;
                csv = Some(curve.to_csv());
                json!({ "formula": formula, "covering": curve, "singular_value_bound": bound })
            }
        }
        "intersect" => {
            let d = cfg.d.expect("resolved");
            let q_max = cfg.q_max.expect("resolved");
            let fams = cfg
                .taus
                .as_ref()
                .expect("resolved")
                .iter()
                .map(|t| generate_diophantine(d, t, q_max).map_err(|e| src.error("taus", e)))
                .collect::<Result<Vec<_>>>()?;
            let starts = generation_starts(&cfg, &fams[0])?;
            let r = intersection_experiment(&fams, &starts, DEFAULT_CELL_CAP)?;
            if let Some(c) = &r.intersection {
                csv = Some(c.to_csv());
            }
            serde_json::to_value(&r)?
        }
        _ => unreachable!(),
    };
    let report = json!({ "command": cmd, "config": cfg, "result": result });
    Ok(RunOutput { command: cmd, report, csv, scalar })
}

fn generation_starts(cfg: &RunConfig, fam: &LimsupFamily) -> Result<Vec<usize>> {
    let (lo, hi) = (cfg.gen_lo.unwrap_or(2), cfg.gen_hi.unwrap_or(10));
    let mut starts = dyadic_starts(lo, hi);
    if let Some(q_max) = fam_q_max(fam) {
        starts.retain(|&s| 2 * s as u64 - 1 <= q_max);
    }
    Ok(starts)
}

fn fam_q_max(fam: &LimsupFamily) -> Option<u64> {
    match &fam.kind {
        crate::lab::FamilyKind::Diophantine(f) => Some(f.q_max),
        _ => None,
    }
}

fn measures_command(cfg: &RunConfig, src: &Source, stream: Stream) -> Result<Value> {
    let mut fam = cfg.family(src)?;
    let t = cfg.t.expect("resolved");
    let c = cfg.c.expect("resolved");
    let topts = TruncationOptions { resolution: cfg.resolution, max_j: cfg.max_j.expect("resolved") };
    let eopts = EnergyOptions { cross_samples: cfg.samples.expect("resolved"), ..Default::default() }
        .with_samples(cfg.samples.expect("resolved"));
    let mut per_n = Vec::new();
    let (mut ns, mut energies) = (Vec::new(), Vec::new());
    for &n in cfg.n.as_ref().expect("resolved") {
        let mut stage = build_stage(&fam, n, &topts)?;
        let report =
            match mu_energy_bound_report(&stage, t, c, cfg.k.expect("resolved"), &eopts, stream.child(n as u64)) {
                Err(Error::SeparationViolated { .. }) if !stage.doubled_radii => {
                    fam = fam.clone().with_doubled_radii();
                    stage = build_stage(&fam, n, &topts)?;
                    mu_energy_bound_report(&stage, t, c, cfg.k.expect("resolved"), &eopts, stream.child(n as u64))?
                }
                r => r?,
            };
        let popts = ProbeOptions::for_stage(&stage);
        let probes = random_probes(
            &stage.mu,
            n,
            cfg.probe_radius.expect("resolved"),
            cfg.probes.expect("resolved"),
            &popts,
            stream.named("probes").child(n as u64),
        )?;
        let ratios: Vec<f64> = probes.iter().map(|p| p.ratio).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ns.push(n);
        energies.push(report.energy);
        per_n.push(json!({
            "n": n,
            "window": stage.union.window,
            "kept": stage.entries.len(),
            "union_measure": stage.union.measure,
            "union_lower_target": stage.union.lower_target,
            "probe_floor": popts.floor,
            "probe_ratio_min": lo,
            "probe_ratio_max": hi,
            "energy": report,
        }));
    }
    let trend = energy_trend(&ns, &energies);
    Ok(json!({ "stages": per_n, "energy_trend": trend }))
}

/// Runs the CLI and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return 2;
        }
        // a second global build only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match run(&cli).and_then(|out| emit(&cli, out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}

fn emit(cli: &Cli, out: RunOutput) -> Result<()> {
    let text = serde_json::to_string_pretty(&out.report)? + "\n";
    match out.scalar {
        Some(v) => println!("{v}"),
        None => print!("{text}"),
    }
    if let Some(dir) = &cli.out {
        write_artifacts(dir, &out.command, &text, cli.csv.then_some(out.csv.as_deref()).flatten())?;
    }
    Ok(())
}

fn write_artifacts(dir: &Path, command: &str, json: &str, csv: Option<&str>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{command}.json")), json)?;
    if let Some(c) = csv {
        fs::write(dir.join(format!("{command}.csv")), c)?;
    }
    Ok(())
}
