//! Small statistics helpers: running moments and least-squares lines.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    /// One-sided p-value for the alternative `slope > 0`.
    pub p_positive: f64,
    pub points: usize,
}

/// Ordinary least squares of `ys` against `xs`.
///
/// Returns `None` when fewer than two points are given or the `xs` have no
/// spread.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        let dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    if sxx <= f64::EPSILON * nf * (mx.abs() + 1.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_std_error, p_positive) = if n > 2 {
        let rss: f64 = (0..n)
            .map(|i| {
                let r = ys[i] - intercept - slope * xs[i];
                r * r
            })
            .sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let p = if se > 0.0 {
            let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("valid degrees of freedom");
            1.0 - dist.cdf(slope / se)
        } else if slope > 0.0 {
            0.0
        } else {
            1.0
        };
        (se, p)
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(LineFit { slope, intercept, slope_std_error, p_positive, points: n })
}
