//! Independent numerical oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` with `panels` Gauss–Legendre panels of `nodes` points.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, nodes: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, w) in nodes {
            s += w * r * f(m + r * x);
        }
    }
    s
}

/// `∫_a^b f` after the graded substitution `x = a + (b - a) w^k`, which
/// smooths an algebraic singularity or kink at `a`.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    k: f64,
    panels: usize,
    nodes: &[(f64, f64)],
) -> f64 {
    integrate(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            k * (b - a) * w.powf(k - 1.0) * f(a + (b - a) * w.powf(k))
        },
        0.0,
        1.0,
        panels,
        nodes,
    )
}

/// [`integrate_graded`] with `k = 1/(1 - t)`, which removes a `|x - a|^{-t}`
/// singularity exactly.
pub fn integrate_singular_at_left<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    t: f64,
    panels: usize,
    nodes: &[(f64, f64)],
) -> f64 {
    integrate_graded(f, a, b, 1.0 / (1.0 - t).max(0.05), panels, nodes)
}

fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `∫_{a1}^{b1} ∫_{a2}^{b2} |x - y|^{-t}` on the circle by nested
/// quadrature, splitting the inner range at the kernel's singularity and
/// kinks.
pub fn circle_pair_integral(a1: f64, b1: f64, a2: f64, b2: f64, t: f64) -> f64 {
    let nodes = gauss_legendre(24);
    let inner = |x: f64| {
        let mut cuts = vec![a2, b2];
        for k in -2..=2 {
            for c in [x + k as f64, x + 0.5 + k as f64] {
                if c > a2 && c < b2 {
                    cuts.push(c);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut s = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let m = 0.5 * (lo + hi);
            // the singular point itself has measure zero
            let g = |y: f64| match circle_dist(x, y) {
                0.0 => 0.0,
                d => d.powf(-t),
            };
            let singular = |p: f64| circle_dist(x, p) < 1e-12;
            // at a singular end integrate in the offset itself, which avoids
            // cancellation in y - x
            let by_offset = |off: f64| match circle_dist(off, 0.0) {
                0.0 => 0.0,
                d => d.powf(-t),
            };
            s += if singular(lo) {
                integrate_singular_at_left(by_offset, 0.0, m - lo, t, 4, &nodes)
            } else {
                integrate(g, lo, m, 4, &nodes)
            };
            s += if singular(hi) {
                integrate_singular_at_left(by_offset, 0.0, hi - m, t, 4, &nodes)
            } else {
                integrate(g, m, hi, 4, &nodes)
            };
        }
        s
    };
    let m = 0.5 * (a1 + b1);
    // the inner integral behaves like (x - a1)^{1-t} at the ends
    integrate_graded(inner, a1, m, 4.0, 8, &nodes) + integrate_graded(|u| inner(b1 + a1 - u), a1, m, 4.0, 8, &nodes)
}

/// `I_t` of the ellipse with semi-axes `a`, `b` (a disk when equal) from its
/// covariogram in polar form.
pub fn ellipse_energy(a: f64, b: f64, t: f64) -> f64 {
    let nodes = gauss_legendre(32);
    let g1 = |rho: f64| 2.0 * (rho / 2.0).acos() - (rho / 2.0) * (4.0 - rho * rho).max(0.0).sqrt();
    let radial = integrate_singular_at_left(|r| g1(r) * r.powf(1.0 - t), 0.0, 2.0, (t - 1.0).max(0.0), 16, &nodes);
    let angular = integrate(
        |th: f64| (a * a * th.cos().powi(2) + b * b * th.sin().powi(2)).powf(-t / 2.0),
        0.0,
        2.0 * PI,
        16,
        &nodes,
    );
    a * a * b * b * radial * angular
}

/// `I_t` of the box with half-widths `a`, `b` from its covariogram
/// `(2a - |z_1|)(2b - |z_2|)` in polar form.
pub fn box_energy(a: f64, b: f64, t: f64) -> f64 {
    let nodes = gauss_legendre(32);
    let corner = (b / a).atan();
    let f = |th: f64| {
        let (c, s) = (th.cos().abs(), th.sin().abs());
        let r = if c * b > s * a { 2.0 * a / c } else { 2.0 * b / s };
        4.0 * a * b * r.powf(2.0 - t) / (2.0 - t) - (2.0 * a * s + 2.0 * b * c) * r.powf(3.0 - t) / (3.0 - t)
            + c * s * r.powf(4.0 - t) / (4.0 - t)
    };
    4.0 * (integrate(f, 0.0, corner, 16, &nodes) + integrate(f, corner, PI / 2.0, 16, &nodes))
}

/// Closed form `2 L^{2-t} / ((1 - t)(2 - t))` for an interval of length `L`.
pub fn interval_closed_form(l: f64, t: f64) -> f64 {
    2.0 * l.powf(2.0 - t) / ((1.0 - t) * (2.0 - t))
}
