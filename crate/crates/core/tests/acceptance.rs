//! One test per acceptance criterion. Each prints a PASS/FAIL line with its
//! measurements and fails on a missed target or runtime limit.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{ellipse_energy, interval_closed_form};
use rand::Rng;
use rayon::prelude::*;
use riesz_limsup::bound::{bound_energy_ratio, bound_singular_value, dimension_formula_d, BoundOptions, JSelection};
use riesz_limsup::cli::{run, Cli};
use riesz_limsup::lab::{
    covering_counts, dyadic_starts, generate_diophantine, intersection_experiment, LimsupFamily, RadiusLaw,
    DEFAULT_CELL_CAP,
};
use riesz_limsup::riesz::{energy_set, energy_truncated, EnergyOptions, Method, Sampler};
use riesz_limsup::torus::{torus_distance, Ball, Shape, TorusPoint};
use riesz_limsup::vitali::{vitali_select, EXPANSION_FACTOR};
use riesz_limsup::Stream;

/// Collects failures so the verdict line is printed before any panic.
struct Check {
    name: &'static str,
    limit: Duration,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(name: &'static str, limit_secs: u64) -> Self {
        Check { name, limit: Duration::from_secs(limit_secs), start: Instant::now(), failures: vec![], notes: vec![] }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if elapsed > self.limit {
            self.failures.push(format!("runtime {elapsed:.1?} exceeds {:?}", self.limit));
        }
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} {} ({elapsed:.1?})", self.name);
        for n in &self.notes {
            println!("    {n}");
        }
        for f in &self.failures {
            println!("    failed: {f}");
        }
        assert!(self.failures.is_empty(), "{} failed: {:?}", self.name, self.failures);
    }
}

fn pt(c: &[f64]) -> TorusPoint {
    TorusPoint::new(c.to_vec()).unwrap()
}

#[test]
fn criterion_01_energy_oracles() {
    let mut c = Check::new("criterion 1: energy oracle agreement", 120);
    let mut rng = Stream::new(101).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let l = rng.random_range(0.01..0.4);
        let t = rng.random_range(0.1..0.9);
        let u = Shape::ball(pt(&[rng.random()]), l / 2.0).unwrap();
        let e = energy_set(&u, t, &EnergyOptions::default(), Stream::new(0)).unwrap();
        let rel = (e.value / interval_closed_form(l, t) - 1.0).abs();
        worst = worst.max(rel);
        c.expect(rel <= 0.01, format!("L = {l:.4}, t = {t:.3}: relative error {rel:.2e}"));
    }
    c.note(format!("d=1: worst relative error {worst:.2e} over 20 intervals"));

    let opts = EnergyOptions::default().with_samples(1_000_000);
    assert_eq!(opts.sampler, Sampler::Auto);
    let mut worst_z: f64 = 0.0;
    for k in 0..10u64 {
        let a = rng.random_range(0.02..0.2);
        let b = if k < 3 { a } else { rng.random_range(0.01..a) };
        let t = rng.random_range(0.2..1.8);
        let u = Shape::ellipsoid(pt(&[rng.random(), rng.random()]), vec![a, b]).unwrap();
        let e = energy_set(&u, t, &opts, Stream::new(200 + k)).unwrap();
        let oracle = ellipse_energy(a, b, t);
        let z = (e.value - oracle).abs() / e.std_error;
        worst_z = worst_z.max(z);
        c.expect(e.method == Method::MonteCarlo, format!("shape {k}: expected the Monte Carlo path"));
        c.expect(z <= 3.0, format!("axes ({a:.3}, {b:.3}), t = {t:.2}: {} vs {oracle}, z = {z:.2}", e.value));
    }
    c.note(format!("d=2: worst |MC - quadrature| / SE = {worst_z:.2} over 10 ellipses"));
    c.finish();
}

fn covered(kept: &[Ball], p: &TorusPoint) -> bool {
    kept.iter().any(|k| torus_distance(k.center(), p).unwrap() < EXPANSION_FACTOR * k.radius())
}

#[test]
fn criterion_02_vitali_invariants() {
    let mut c = Check::new("criterion 2: Vitali invariants", 60);
    let runs: Vec<(usize, u64)> = [1, 2].iter().flat_map(|&d| (0..100).map(move |k| (d, k))).collect();
    let results: Vec<(usize, u64, Vec<String>, f64)> = runs
        .par_iter()
        .map(|&(d, k)| {
            let mut rng = Stream::new(1000 * d as u64 + k).rng();
            let rmax = if d == 1 { 5e-3 } else { 2e-2 };
            let balls: Vec<Ball> = (0..1000)
                .map(|_| {
                    let c: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                    Ball::new(pt(&c), rng.random_range(rmax / 10.0..rmax)).unwrap()
                })
                .collect();
            let sel = vitali_select(&balls).unwrap();
            let mut bad = Vec::new();
            for (i, a) in sel.kept.iter().enumerate() {
                for b in &sel.kept[i + 1..] {
                    if torus_distance(a.center(), b.center()).unwrap() <= a.radius() + b.radius() {
                        bad.push("kept balls overlap".to_string());
                    }
                }
            }
            for b in &balls {
                let shape = Shape::Ball(b.clone());
                let sampler = shape.sampler().unwrap();
                for _ in 0..20 {
                    let p = sampler.sample_point(&mut rng);
                    if !covered(&sel.kept, &p) {
                        bad.push(format!("point {p:?} not covered"));
                    }
                }
            }
            (d, k, bad, sel.disjoint_sum)
        })
        .collect();
    let mut max_sum: f64 = 0.0;
    for (d, k, bad, sum) in results {
        max_sum = max_sum.max(sum);
        c.expect(bad.is_empty(), format!("d = {d}, collection {k}: {bad:?}"));
        c.expect(sum < 1.0, format!("d = {d}, collection {k}: disjoint_sum {sum}"));
    }
    c.note(format!("200 collections of 1000 balls, largest disjoint_sum {max_sum:.3}"));
    c.finish();
}

#[test]
fn criterion_03_shrunken_ball_bound() {
    let mut c = Check::new("criterion 3: shrunken-ball bound", 60);
    let opts = BoundOptions { j_max: 10_000, ..Default::default() };
    for sigma in [0.25, 0.5, 0.75] {
        let fam = LimsupFamily::shrunken_balls(1, sigma, RadiusLaw::harmonic(1, 0.5), 0).unwrap();
        let r = bound_energy_ratio(&fam, &opts).unwrap();
        c.note(format!("σ = {sigma}: s = {:.4}", r.s));
        c.expect((r.s - sigma).abs() <= 0.02, format!("σ = {sigma}: s = {}", r.s));
    }
    c.finish();
}

#[test]
fn criterion_04_ellipsoid_routes_coincide() {
    let mut c = Check::new("criterion 4: ellipsoid consistency", 600);
    let opts = |seed| BoundOptions {
        j_max: 1_000_000,
        selection: JSelection::LogSpaced { count: 100 },
        energy: EnergyOptions::default().with_samples(20_000),
        seed,
        ..Default::default()
    };
    let mut rng = Stream::new(404).rng();
    let cases: Vec<(u64, f64, f64)> = (0..10)
        .map(|k| {
            let a1 = rng.random_range(1.0..1.6);
            (k, a1, a1 + rng.random_range(0.0..0.5))
        })
        .collect();
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(k, a1, a2)| {
            let fam = LimsupFamily::ellipsoids(2, vec![a1, a2], 1.0, RadiusLaw::harmonic(2, 0.3), k).unwrap();
            let o = opts(k);
            let e = bound_energy_ratio(&fam, &o).unwrap().s;
            let p = bound_singular_value(&fam, &o).unwrap().s;
            (a1, a2, e, p)
        })
        .collect();
    for (a1, a2, e, p) in results {
        c.note(format!("α = ({a1:.3}, {a2:.3}): s_energy = {e:.4}, s_φ = {p:.4}"));
        c.expect((e - p).abs() <= 0.05, format!("α = ({a1:.3}, {a2:.3}): |{e} - {p}| > 0.05"));
    }
    c.finish();
}

#[test]
fn criterion_05_diophantine() {
    let mut c = Check::new("criterion 5: Diophantine formula and empirics", 300);
    for (tau, want) in [(vec![3.0], 0.5), (vec![1.0, 2.0], 4.0 / 3.0), (vec![0.5, 0.5], 2.0)] {
        let got = dimension_formula_d(&tau).unwrap();
        c.expect(got == want, format!("D({tau:?}) = {got}, expected {want}"));
    }
    let fam = generate_diophantine(1, &[3.0], (1 << 11) - 1).unwrap();
    let curve = covering_counts(&fam, &dyadic_starts(2, 10), DEFAULT_CELL_CAP).unwrap();
    c.note(format!("covering slope {:.4} for Q = 4 ..= 1024", curve.fitted_slope));
    c.expect((0.4..=0.6).contains(&curve.fitted_slope), format!("covering slope {}", curve.fitted_slope));
    let s = bound_singular_value(&fam, &BoundOptions::default()).unwrap().s;
    c.note(format!("singular-value bound {s:.4}"));
    c.expect((s - 0.5).abs() <= 0.02, format!("singular-value bound {s}"));
    c.finish();
}

#[test]
fn criterion_06_measure_construction() {
    let mut c = Check::new("criterion 6: measure construction", 300);
    let cli = Cli {
        command: Some("measures".into()),
        family: Some("random-balls".into()),
        start: Some(100),
        n: vec![2, 4, 8],
        seed: Some(6),
        ..Default::default()
    };
    let v = run(&cli).unwrap().report;
    let (lo, hi) = (0.2 / 2.0, 2.0 * 5.0);
    for stage in v["result"]["stages"].as_array().unwrap() {
        let (n, min, max) = (
            stage["n"].as_u64().unwrap(),
            stage["probe_ratio_min"].as_f64().unwrap(),
            stage["probe_ratio_max"].as_f64().unwrap(),
        );
        let energy = stage["energy"]["energy"].as_f64().unwrap();
        c.note(format!("n = {n}: probe ratios in [{min:.3}, {max:.3}], I_0.4(μ_n) = {energy:.4}"));
        c.expect(min >= lo && max <= hi, format!("n = {n}: ratios [{min}, {max}] outside [{lo}, {hi}]"));
    }
    let trend = &v["result"]["energy_trend"];
    let (slope, p) = (trend["slope"].as_f64().unwrap(), trend["p_positive"].as_f64().unwrap());
    c.note(format!("energy trend slope {slope:.4}, p-value for positive slope {p:.3}"));
    c.expect(p >= 0.05, format!("energy grows with n: slope {slope}, p = {p}"));
    c.finish();
}

#[test]
fn criterion_07_truncated_energy_tail() {
    let mut c = Check::new("criterion 7: truncated-energy tail", 60);
    let opts = EnergyOptions::default().with_samples(1_000_000);
    for (d, t, s, h) in [(1usize, 0.4, 0.8, 0.1), (2, 0.8, 1.6, 0.1)] {
        let u = Shape::ball(pt(&vec![0.5; d]), h).unwrap();
        let mass = u.volume().unwrap();
        // the normalized uniform ball has μ(B(x, r)) <= (r / h)^s for s <= d
        let cst = h.powf(-s);
        let mut last = f64::INFINITY;
        for m in [10.0, 100.0, 1000.0] {
            let e = energy_truncated(&u, t, s, m, &opts, Stream::new(7)).unwrap();
            let v = e.value / (mass * mass);
            let envelope = cst * s / (s - t) * m.powf(t / s - 1.0);
            c.note(format!("d = {d}, m = {m}: {v:.5} (envelope {envelope:.5})"));
            c.expect(v < last, format!("d = {d}: not decreasing at m = {m}"));
            c.expect(v <= envelope, format!("d = {d}, m = {m}: {v} above {envelope}"));
            last = v;
        }
    }
    c.finish();
}

#[test]
fn criterion_08_intersection() {
    let mut c = Check::new("criterion 8: intersection experiment", 300);
    let q_max = (1 << 11) - 1;
    let fams: Vec<LimsupFamily> = [1.0, 3.0].iter().map(|t| generate_diophantine(1, &[*t], q_max).unwrap()).collect();
    let r = intersection_experiment(&fams, &dyadic_starts(2, 10), DEFAULT_CELL_CAP).unwrap();
    match &r.intersection {
        Some(curve) => {
            let slope = curve.fitted_slope;
            c.note(format!("intersection slope {slope:.4}, individual minimum {:.4}", r.min_individual_slope));
            c.expect((slope - 0.5).abs() <= 0.15, format!("slope {slope} not within 0.15 of 0.5"));
            c.expect(slope <= r.min_individual_slope + 0.05, format!("slope {slope} above the individual minimum"));
        }
        None => c.expect(false, "intersection empty at every generation"),
    }
    c.finish();
}

fn binary_output(args: &[&str]) -> Vec<u8> {
    let o =
        Command::new(env!("CARGO_BIN_EXE_riesz-limsup")).args(args).env_remove("RIESZ_LIMSUP_OUT").output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o.stdout
}

#[test]
fn criterion_09_determinism() {
    let mut c = Check::new("criterion 9: determinism", 300);
    let runs: [&[&str]; 5] = [
        &["bound", "--sigma", "0.25", "--j-max", "10000", "--seed", "9"],
        &["bound", "--sigma", "0.5", "--j-max", "10000", "--seed", "9"],
        &["bound", "--sigma", "0.75", "--j-max", "10000", "--seed", "9"],
        &["diophantine", "--d", "1", "--tau", "3", "--seed", "9"],
        &["diophantine", "--d", "2", "--tau", "1,2", "--seed", "9"],
    ];
    for args in runs {
        let (a, b) = (binary_output(args), binary_output(args));
        c.expect(!a.is_empty() && a == b, format!("{args:?}: reports differ"));
    }
    c.note(format!("{} commands run twice", runs.len()));
    c.finish();
}
