//! Concentration bounds for the balls-in-bins statistic
//! `Y = sum_j n_j^z` with `0 < z < 1`, exact binomial expectations, and
//! simulation of its upper tail.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agility::linear_fit;
use crate::rng;

pub const MAX_TRIALS: usize = 100_000;
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("n p = 0: the bound is undefined")]
    ZeroMass,
    #[error("no failures observed: below measurement floor")]
    AllZeroFailures,
    #[error("need at least 4 points with probability in (0, 1), got {0}")]
    TooFewPoints(usize),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// `exp(-(n EY^2 delta^2 / 2) / (VarY + EY^2 delta / 2))`.
pub fn bernstein_restated_tail(n: f64, ey: f64, var_y: f64, delta: f64) -> f64 {
    let e2 = ey * ey;
    (-(n * e2 * delta * delta / 2.0) / (var_y + e2 * delta / 2.0)).exp()
}

/// `x^z` with `0^z = 0`.
fn pow_z(k: f64, z: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        (z * k.ln()).exp()
    }
}

fn ln_binomial_pmf(n: u64, p: f64) -> impl Fn(u64) -> f64 {
    let ln_fact = {
        let mut v = vec![0.0f64; n as usize + 1];
        for k in 1..=n as usize {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        v
    };
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    move |k: u64| {
        let (k, n) = (k as usize, n as usize);
        ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * lp + (n - k) as f64 * lq
    }
}

/// `E[h(W)]` for `W ~ Bin(n, p)`.
pub fn binomial_expectation(n: u64, p: f64, h: impl Fn(u64) -> f64) -> f64 {
    if p <= 0.0 {
        return h(0);
    }
    if p >= 1.0 {
        return h(n);
    }
    let lpmf = ln_binomial_pmf(n, p);
    (0..=n).map(|k| lpmf(k).exp() * h(k)).sum()
}

/// Exact `E[(W+1)^z] - E[W^z]` for `W ~ Bin(n, p)`.
pub fn exact_binom_zeta_diff(n: u64, p: f64, z: f64) -> f64 {
    binomial_expectation(n, p, |k| pow_z(k as f64 + 1.0, z) - pow_z(k as f64, z))
}

/// `exp(-3 n p / 28) + 2 z (n p)^(z - 1)`.
pub fn diff_bound(n: u64, p: f64, z: f64) -> Result<f64, StatsError> {
    let np = n as f64 * p;
    if !(np > 0.0) {
        return Err(StatsError::ZeroMass);
    }
    Ok((-3.0 * np / 28.0).exp() + 2.0 * z * np.powf(z - 1.0))
}

/// Doob-martingale increment bounds `c_1..c_n` for the smallest bin mass
/// `p1`: `c_i = min(diff_bound(n - i, p1, z), 1)`.
pub fn martingale_diffs(p1: f64, n: u64, z: f64) -> Vec<f64> {
    (1..=n).map(|i| diff_bound(n - i, p1, z).map_or(1.0, |b| b.min(1.0))).collect()
}

/// `P[M_n - M_0 >= t] <= exp(-t^2 / (2 sum c_i^2))`.
pub fn azuma_tail(c: &[f64], t: f64) -> f64 {
    let v: f64 = c.iter().map(|x| x * x).sum();
    if t <= 0.0 {
        1.0
    } else {
        (-t * t / (2.0 * v)).exp()
    }
}

pub fn sum_p_zeta(p: &[f64], z: f64) -> f64 {
    p.iter().map(|&q| pow_z(q, z)).sum()
}

/// Exact `E[Y]`, the sum of per-bin binomial expectations.
pub fn expected_y(p: &[f64], n: u64, z: f64) -> f64 {
    p.iter().map(|&q| binomial_expectation(n, q, |k| pow_z(k as f64, z))).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinExperiment {
    pub p: Vec<f64>,
    pub n: u64,
    pub zeta_exp: f64,
    pub trials: usize,
    pub seed: u64,
}

impl BinExperiment {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.p.is_empty() || self.p.iter().any(|q| !(*q >= 0.0)) {
            return Err(StatsError::Invalid("probabilities must be nonnegative".into()));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(StatsError::Invalid(format!("probabilities sum to {total}")));
        }
        if !(self.zeta_exp > 0.0 && self.zeta_exp < 1.0) {
            return Err(StatsError::Invalid(format!("exponent {} not in (0, 1)", self.zeta_exp)));
        }
        if !(1000..=MAX_TRIALS).contains(&self.trials) {
            return Err(StatsError::Invalid(format!("trials {} outside [1000, {MAX_TRIALS}]", self.trials)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    AzumaSimple,
    ReduxGtHalf,
    ReduxHalf,
    ReduxLtHalf,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AzumaSimple => "azuma_simple",
            Self::ReduxGtHalf => "redux_gt_half",
            Self::ReduxHalf => "redux_half",
            Self::ReduxLtHalf => "redux_lt_half",
        }
    }
}

/// Bound on `P[Y >= 2 n^z sum_j p_j^z]`. The refined bounds apply for
/// `z < 2/3` once `n >= (280/3) ln(1/z) / p1`; otherwise every increment is
/// bounded by 1.
pub fn tail_bound(p: &[f64], n: u64, z: f64) -> (Regime, f64) {
    let sp = sum_p_zeta(p, z);
    let nf = n as f64;
    let p1 = p.iter().copied().filter(|&q| q > 0.0).fold(f64::INFINITY, f64::min);
    let threshold = 280.0 / 3.0 * (1.0 / z).ln() / p1;
    let half = (z - 0.5).abs() < 1e-12;
    let simple = (Regime::AzumaSimple, (-0.5 * nf.powf(2.0 * z - 1.0) * sp * sp).exp());
    if nf < threshold || z >= 2.0 / 3.0 {
        return simple;
    }
    if half {
        let den = 127.0 - (1.0 / p1).ln() + nf.ln();
        (Regime::ReduxHalf, (-(2.0 / 9.0) * p1 * nf * sp * sp / den).exp())
    } else if z > 0.5 {
        let den = 13.0 + 8.0 / (2.0 * z - 1.0) * nf.powf(2.0 * z - 1.0);
        (Regime::ReduxGtHalf, (-p1 * nf.powf(2.0 * z) * sp * sp / den).exp())
    } else {
        let l = 280.0 / 3.0 * (1.0 / z).ln();
        let den = 2.0 * l + 4.0 + 18.0 * z * z / (1.0 - 2.0 * z) * l.powf(2.0 * z - 1.0);
        (Regime::ReduxLtHalf, (-p1 * nf.powf(2.0 * z) * sp * sp / den).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// Observed exceedance frequency.
    pub empirical_prob: f64,
    /// `empirical_prob`, or the rule-of-three `3 / trials` when none occurred.
    pub empirical_upper: f64,
    pub exceedances: usize,
    pub trials: usize,
    pub theoretical_bound: f64,
    pub regime: Regime,
    pub mean_y: f64,
    pub std_y: f64,
    /// `n^z sum_j p_j^z`, an upper bound on `E[Y]`.
    pub mean_bound: f64,
}

impl TailReport {
    /// Observed frequency within three binomial standard deviations of the
    /// bound.
    pub fn within_bound(&self) -> bool {
        let b = self.theoretical_bound.min(1.0);
        self.empirical_prob <= b + 3.0 * (b * (1.0 - b) / self.trials as f64).sqrt()
    }

    /// Mean of `Y` within three standard errors of `n^z sum_j p_j^z`.
    pub fn mean_within_bound(&self) -> bool {
        self.mean_y <= self.mean_bound + 3.0 * self.std_y / (self.trials as f64).sqrt()
    }
}

/// Throws `n` balls into bins with masses `p` for each trial (trial `t`
/// uses substream `t` of the seed) and records `Y`.
pub fn simulate_y(p: &[f64], n: u64, z: f64, trials: usize, seed: u64) -> Result<Vec<f64>, StatsError> {
    let index = WeightedIndex::new(p).map_err(|e| StatsError::Invalid(e.to_string()))?;
    let m = p.len();
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(seed, t as u64);
            let mut counts = vec![0u64; m];
            for _ in 0..n {
                counts[index.sample(&mut r)] += 1;
            }
            counts.iter().map(|&k| pow_z(k as f64, z)).sum()
        })
        .collect())
}

pub fn balls_bins_experiment(exp: &BinExperiment) -> Result<TailReport, StatsError> {
    exp.validate()?;
    let z = exp.zeta_exp;
    let ys = simulate_y(&exp.p, exp.n, z, exp.trials, exp.seed)?;
    let mean_bound = (exp.n as f64).powf(z) * sum_p_zeta(&exp.p, z);
    let threshold = 2.0 * mean_bound;
    let exceedances = ys.iter().filter(|&&y| y >= threshold).count();
    let trials = exp.trials as f64;
    let empirical_prob = exceedances as f64 / trials;
    let empirical_upper = if exceedances == 0 { 3.0 / trials } else { empirical_prob };
    let mean_y = ys.iter().sum::<f64>() / trials;
    let std_y = (ys.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>() / (trials - 1.0)).sqrt();
    let (regime, theoretical_bound) = tail_bound(&exp.p, exp.n, z);
    Ok(TailReport { empirical_prob, empirical_upper, exceedances, trials: exp.trials, theoretical_bound, regime, mean_y, std_y, mean_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WvhpFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r2: f64,
    /// Whether the decay exponent is clearly positive.
    pub wvhp: bool,
}

/// Fits `prob = exp(-c2 n^c3)` (so `c1 = 1`) by least squares on
/// `ln(-ln prob)` against `ln n`. Points with probability outside `(0, 1)`
/// are dropped.
pub fn wvhp_fit(points: &[(f64, f64)]) -> Result<WvhpFit, StatsError> {
    if !points.is_empty() && points.iter().all(|&(_, q)| q == 0.0) {
        return Err(StatsError::AllZeroFailures);
    }
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(n, q)| n > 0.0 && q > 0.0 && q < 1.0).collect();
    if kept.len() < 4 {
        return Err(StatsError::TooFewPoints(kept.len()));
    }
    let x: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = kept.iter().map(|p| (-p.1.ln()).ln()).collect();
    let (a, c3, r2) = linear_fit(&x, &y);
    Ok(WvhpFit { c1: 1.0, c2: a.exp(), c3, r2, wvhp: c3 > 0.05 })
}
