//! The counting algorithm: sample `s(r)` from a backend, fit its frequency,
//! and turn the frequency into a match count.

mod fit;

pub use fit::{fit_damped_cosine, FitResult};

use rayon::prelude::*;

use crate::circuit::{counting_signals, BasisGate, OracleSpec};
use crate::error::{Error, Result};

/// Anything that can report the control-qubit signal after `r` controlled
/// iterations. Implementations must be pure functions of `(f, r)`.
pub trait SignalBackend: Sync {
    fn id(&self) -> String;

    fn signal(&self, f: &OracleSpec, r: usize) -> Result<f64>;

    /// Signals for every `r` in `0..=r_max`, in order.
    fn signals(&self, f: &OracleSpec, r_max: usize) -> Result<Vec<f64>> {
        (0..=r_max).into_par_iter().map(|r| self.signal(f, r)).collect()
    }
}

/// Exact gate-level simulation of the counting circuit.
#[derive(Debug, Clone, Copy)]
pub struct IdealBackend {
    pub basis: BasisGate,
}

impl Default for IdealBackend {
    fn default() -> Self {
        IdealBackend {
            basis: BasisGate::PseudoHadamard,
        }
    }
}

impl SignalBackend for IdealBackend {
    fn id(&self) -> String {
        "ideal".into()
    }

    fn signal(&self, f: &OracleSpec, r: usize) -> Result<f64> {
        Ok(*counting_signals(f, r, self.basis).last().expect("r_max + 1 values"))
    }

    fn signals(&self, f: &OracleSpec, r_max: usize) -> Result<Vec<f64>> {
        Ok(counting_signals(f, r_max, self.basis))
    }
}

/// Adapts a closure into a backend.
pub struct FnBackend<F> {
    label: String,
    func: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&OracleSpec, usize) -> Result<f64> + Sync,
{
    pub fn new(label: impl Into<String>, func: F) -> Self {
        FnBackend {
            label: label.into(),
            func,
        }
    }
}

impl<F> SignalBackend for FnBackend<F>
where
    F: Fn(&OracleSpec, usize) -> Result<f64> + Sync,
{
    fn id(&self) -> String {
        self.label.clone()
    }

    fn signal(&self, f: &OracleSpec, r: usize) -> Result<f64> {
        (self.func)(f, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub r: usize,
    /// Signal as reported by the backend.
    pub raw: f64,
    /// `raw / raw(r=0)`.
    pub value: f64,
}

/// A normalized signal series `s(0) = 1, s(1), ..., s(r_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    pub backend_id: String,
    pub oracle_id: String,
    pub points: Vec<SeriesPoint>,
}

impl SignalSeries {
    /// Series whose values are taken as already normalized, `r = 0, 1, ...`.
    pub fn from_values(backend_id: &str, oracle_id: &str, values: Vec<f64>) -> Self {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(r, v)| SeriesPoint { r, raw: v, value: v })
            .collect();
        SignalSeries {
            backend_id: backend_id.into(),
            oracle_id: oracle_id.into(),
            points,
        }
    }

    pub fn from_raw_points(backend_id: &str, oracle_id: &str, points: Vec<(usize, f64, f64)>) -> Self {
        SignalSeries {
            backend_id: backend_id.into(),
            oracle_id: oracle_id.into(),
            points: points
                .into_iter()
                .map(|(r, raw, value)| SeriesPoint { r, raw, value })
                .collect(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn r_max(&self) -> usize {
        self.points.last().map_or(0, |p| p.r)
    }
}

/// Samples `r = 0..=r_max` and normalizes by the `r = 0` reference.
pub fn acquire_series(backend: &dyn SignalBackend, f: &OracleSpec, r_max: usize) -> Result<SignalSeries> {
    if r_max < 2 {
        return Err(Error::OutOfRange {
            what: "r_max",
            detail: format!("{r_max} < 2"),
        });
    }
    let raw = backend.signals(f, r_max)?;
    let reference = raw[0];
    if reference.abs() < 1e-9 {
        return Err(Error::ZeroReference(reference));
    }
    let points = raw
        .iter()
        .enumerate()
        .map(|(r, &v)| SeriesPoint {
            r,
            raw: v,
            value: if r == 0 { 1.0 } else { v / reference },
        })
        .collect();
    Ok(SignalSeries {
        backend_id: backend.id(),
        oracle_id: f.label(),
        points,
    })
}

/// `k = N (1 - cos φ) / 2` and its nearest integer, ties rounded down.
pub fn phase_to_count(phi: f64, n_items: usize) -> Result<(f64, usize)> {
    if !(0.0..=std::f64::consts::PI).contains(&phi) {
        return Err(Error::PhaseOutOfRange(phi));
    }
    let k_real = n_items as f64 * (1.0 - phi.cos()) / 2.0;
    Ok((k_real, (round_half_down(k_real).max(0.0) as usize).min(n_items)))
}

fn round_half_down(x: f64) -> f64 {
    let floor = x.floor();
    if x - floor > 0.5 {
        floor + 1.0
    } else {
        floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountEstimate {
    pub k: usize,
    pub k_real: f64,
    pub fit: FitResult,
}

/// Acquire, fit and convert.
pub fn estimate_count(
    backend: &dyn SignalBackend,
    f: &OracleSpec,
    n_items: usize,
    r_max: usize,
) -> Result<CountEstimate> {
    if n_items != f.size() {
        return Err(Error::OutOfRange {
            what: "N",
            detail: format!("{n_items} does not match oracle size {}", f.size()),
        });
    }
    let series = acquire_series(backend, f, r_max)?;
    let fit = fit_damped_cosine(&series)?;
    let (k_real, k) = phase_to_count(fit.phi_hat, n_items)?;
    Ok(CountEstimate { k, k_real, fit })
}

/// Order-of-magnitude iteration budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationBudget {
    /// `√(k (N - k))`: applications of `G` to pin down `k` exactly.
    pub exact: f64,
    /// `(1/ε) √(N / (k + 1))`: applications for relative accuracy `ε`.
    pub relative: f64,
}

pub fn iteration_budget(n_items: usize, k: usize, epsilon: f64) -> Result<IterationBudget> {
    if n_items == 0 || k > n_items || epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::OutOfRange {
            what: "budget input",
            detail: format!("N={n_items}, k={k}, epsilon={epsilon}"),
        });
    }
    let (n, k) = (n_items as f64, k as f64);
    Ok(IterationBudget {
        exact: (k * (n - k)).sqrt(),
        relative: (n / (k + 1.0)).sqrt() / epsilon,
    })
}

/// `|k_est - k_true| ≤ ε k_true`; with `k_true = 0` only an exact zero passes.
pub fn accuracy_satisfied(k_true: usize, k_est: f64, epsilon: f64) -> bool {
    if k_true == 0 {
        return k_est == 0.0;
    }
    (k_est - k_true as f64).abs() <= epsilon * k_true as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstMatch {
    pub index: usize,
    pub counting_calls: usize,
}

/// Repetition budget used by [`first_match`] for each counting call.
pub fn default_r_max(n_items: usize) -> usize {
    (4.0 * (n_items as f64).sqrt()).ceil().max(16.0) as usize
}

/// Smallest `x` with `f(x) = 1`, by bisection on prefix counts.
///
/// One call counts the whole domain; each further call counts `f ∧ [x < mid]`
/// and halves the interval known to hold the first match, so at most
/// `log2(N) + 1` counting calls are made.
pub fn first_match(f: &OracleSpec, n_items: usize, backend: &dyn SignalBackend) -> Result<FirstMatch> {
    first_match_with(f, n_items, backend, default_r_max(n_items))
}

pub fn first_match_with(
    f: &OracleSpec,
    n_items: usize,
    backend: &dyn SignalBackend,
    r_max: usize,
) -> Result<FirstMatch> {
    if !n_items.is_power_of_two() || n_items != f.size() {
        return Err(Error::OutOfRange {
            what: "N",
            detail: format!("{n_items} must be a power of two equal to the oracle size {}", f.size()),
        });
    }
    let mut calls = 1;
    if estimate_count(backend, f, n_items, r_max)?.k == 0 {
        return Err(Error::NoMatch);
    }
    let (mut lo, mut hi) = (0, n_items);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        calls += 1;
        if estimate_count(backend, &f.restrict_prefix(mid), n_items, r_max)?.k > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(FirstMatch {
        index: lo,
        counting_calls: calls,
    })
}
