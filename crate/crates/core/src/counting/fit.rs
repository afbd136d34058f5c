//! Damped-cosine least squares: `value(r) ≈ A e^{-λ r} cos(r φ)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::SignalSeries;

const GRID: usize = 4096;
const MAX_ITER: usize = 500;
const CANDIDATES: usize = 3;

/// Fitted parameters of `A e^{-λ r} cos(r φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Frequency per iteration, folded into `[0, π]`.
    pub phi_hat: f64,
    pub amplitude: f64,
    /// `λ` in `e^{-λ r}`, per iteration.
    pub decay_rate: f64,
    pub residual_rms: f64,
}

impl FitResult {
    pub fn model(&self, r: f64) -> f64 {
        model(&[self.amplitude, self.decay_rate, self.phi_hat], r)
    }

    /// `value - model` at every point of `series`.
    pub fn residuals(&self, series: &SignalSeries) -> Vec<f64> {
        series.points.iter().map(|p| p.value - self.model(p.r as f64)).collect()
    }
}

fn model(p: &[f64; 3], r: f64) -> f64 {
    p[0] * (-p[1] * r).exp() * (r * p[2]).cos()
}

/// Maps any angle onto `[0, π]`; `cos(rφ)` is even and `2π`-periodic in `φ`
/// for integer `r`.
fn fold_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(2.0 * PI);
    if wrapped > PI {
        2.0 * PI - wrapped
    } else {
        wrapped
    }
}

fn sum_sq(xs: &[f64], ys: &[f64], p: &[f64; 3]) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (y - model(p, x)).powi(2)).sum()
}

/// Periodogram peaks on `[0, π]`, strongest first.
fn periodogram_peaks(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let power: Vec<f64> = (0..=GRID)
        .map(|j| {
            let w = PI * j as f64 / GRID as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (&x, &y) in xs.iter().zip(ys) {
                let (s, c) = (w * x).sin_cos();
                re += y * c;
                im -= y * s;
            }
            re * re + im * im
        })
        .collect();
    let mut peaks: Vec<usize> = (0..=GRID)
        .filter(|&j| {
            let left = if j == 0 { f64::NEG_INFINITY } else { power[j - 1] };
            let right = if j == GRID { f64::NEG_INFINITY } else { power[j + 1] };
            power[j] >= left && power[j] >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
    peaks
        .into_iter()
        .take(CANDIDATES)
        .map(|j| PI * j as f64 / GRID as f64)
        .collect()
}

/// Levenberg-Marquardt on `(A, λ, φ)` with `λ ≥ 0` and `φ` folded into `[0, π]`.
fn refine(xs: &[f64], ys: &[f64], phi0: f64) -> [f64; 3] {
    let c: Vec<f64> = xs.iter().map(|&x| (x * phi0).cos()).collect();
    let cc: f64 = c.iter().map(|v| v * v).sum();
    let a0 = if cc > 0.0 {
        c.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / cc
    } else {
        ys[0]
    };
    let mut p = [a0.abs().max(1e-6), 0.0, phi0];
    let mut cost = sum_sq(xs, ys, &p);
    let mut mu = 1e-3;

    for _ in 0..MAX_ITER {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for (&x, &y) in xs.iter().zip(ys) {
            let env = (-p[1] * x).exp();
            let (s, co) = (x * p[2]).sin_cos();
            let j = Vector3::new(env * co, -x * p[0] * env * co, -x * p[0] * env * s);
            let res = y - p[0] * env * co;
            jtj += j * j.transpose();
            jtr += j * res;
        }

        let mut improved = false;
        while mu < 1e12 {
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = [
                (p[0] + step[0]).max(1e-12),
                (p[1] + step[1]).max(0.0),
                fold_phase(p[2] + step[2]),
            ];
            let trial_cost = sum_sq(xs, ys, &trial);
            if trial_cost <= cost {
                let moved = (0..3).map(|i| (trial[i] - p[i]).abs()).fold(0.0, f64::max);
                p = trial;
                let gain = cost - trial_cost;
                cost = trial_cost;
                mu = (mu / 10.0).max(1e-15);
                improved = true;
                if moved < 1e-15 || gain <= 1e-30 {
                    return p;
                }
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Fits `value(r) ≈ A e^{-λ r} cos(r φ)` to a normalized series.
///
/// The frequency is seeded from the strongest periodogram peaks on `[0, π]`
/// and each seed is refined by damped Gauss-Newton; the lowest residual wins.
pub fn fit_damped_cosine(series: &SignalSeries) -> Result<FitResult> {
    let n = series.points.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let xs: Vec<f64> = series.points.iter().map(|p| p.r as f64).collect();
    let ys: Vec<f64> = series.points.iter().map(|p| p.value).collect();

    let first = ys[0];
    if ys.iter().all(|&y| (y - first).abs() <= 1e-12) {
        if (first - 1.0).abs() <= 1e-12 {
            return Ok(FitResult {
                phi_hat: 0.0,
                amplitude: first,
                decay_rate: 0.0,
                residual_rms: 0.0,
            });
        }
        return Err(Error::DegenerateSeries(first));
    }

    let best = periodogram_peaks(&xs, &ys)
        .into_iter()
        .map(|phi0| {
            let p = refine(&xs, &ys, phi0);
            (sum_sq(&xs, &ys, &p), p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("periodogram has at least one peak");

    Ok(FitResult {
        phi_hat: best.1[2],
        amplitude: best.1[0],
        decay_rate: best.1[1],
        residual_rms: (best.0 / n as f64).sqrt(),
    })
}
