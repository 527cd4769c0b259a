//! Statistical verdicts on replicate outputs.
//!
//! All functions are pure and sum in a fixed order, so a verdict depends only
//! on its inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::oracle::{intensity_mass, poisson_pmf};
use crate::region::BoxRegion;

/// Default minimum expected count per chi-square cell.
pub const MIN_EXPECTED_CELL: f64 = 5.0;
/// Two-sided coverage of the void-probability interval.
pub const VOID_COVERAGE: f64 = 0.997;
/// Replicates needed before the void-probability check applies.
pub const VOID_MIN_REPLICATES: usize = 100;
/// Points needed before the KS test applies.
pub const KS_MIN_POINTS: usize = 10;
/// Asymptotic 5% critical value of `√N · D`.
pub const KS_CRITICAL_5: f64 = 1.36;

/// Frequencies of non-negative integer outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn from_values(values: &[u64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "empirical distribution needs at least one value",
            ));
        }
        let mut counts = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_insert(0) += 1;
        }
        Ok(Self {
            counts,
            total: values.len() as u64,
        })
    }

    pub fn from_counts(counts: BTreeMap<u64, u64>) -> Result<Self> {
        let total = counts.values().sum();
        if total == 0 {
            return Err(Error::invalid(
                "empirical distribution needs at least one value",
            ));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.frequency(k) as f64 / self.total as f64
    }

    pub fn max_value(&self) -> u64 {
        *self
            .counts
            .keys()
            .next_back()
            .expect("non-empty by construction")
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.counts.iter().map(|(&k, &f)| k as f64 * f as f64).sum();
        sum / self.total as f64
    }
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub statistic: f64,
    /// Largest passing value of `statistic`, for threshold tests.
    pub threshold: Option<f64>,
    pub p_value: Option<f64>,
    /// Smallest passing `p_value`, for tests with a p-value.
    pub level: Option<f64>,
    /// Acceptance interval for a reference value, for interval tests.
    pub interval: Option<(f64, f64)>,
    /// The value the statistic is compared with, when there is one.
    pub reference: Option<f64>,
    pub pass: bool,
    /// `false` when the input was too small for the test; such verdicts never pass.
    pub applicable: bool,
    pub details: String,
}

impl TestVerdict {
    fn blank(statistic: f64, details: String) -> Self {
        Self {
            statistic,
            threshold: None,
            p_value: None,
            level: None,
            interval: None,
            reference: None,
            pass: false,
            applicable: true,
            details,
        }
    }

    /// Passes iff `statistic <= threshold`.
    pub fn at_most(statistic: f64, threshold: f64, details: impl Into<String>) -> Self {
        Self {
            threshold: Some(threshold),
            pass: statistic <= threshold,
            ..Self::blank(statistic, details.into())
        }
    }

    /// Passes iff `p_value >= level`.
    pub fn p_value_at_least(
        statistic: f64,
        p_value: f64,
        level: f64,
        details: impl Into<String>,
    ) -> Self {
        Self {
            p_value: Some(p_value),
            level: Some(level),
            pass: p_value >= level,
            ..Self::blank(statistic, details.into())
        }
    }

    /// Passes iff `lo <= reference <= hi`.
    pub fn reference_in(
        statistic: f64,
        reference: f64,
        (lo, hi): (f64, f64),
        details: impl Into<String>,
    ) -> Self {
        Self {
            interval: Some((lo, hi)),
            reference: Some(reference),
            pass: lo <= reference && reference <= hi,
            ..Self::blank(statistic, details.into())
        }
    }

    pub fn not_applicable(details: impl Into<String>) -> Self {
        Self {
            applicable: false,
            ..Self::blank(0.0, details.into())
        }
    }

    /// Passes iff `|estimate - reference| <= k · se`; the statistic is the z-score.
    pub fn within_errors(
        estimate: f64,
        reference: f64,
        se: f64,
        k: f64,
        details: impl Into<String>,
    ) -> Self {
        let diff = (estimate - reference).abs();
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            // Largest finite value, so the verdict stays valid JSON.
            f64::MAX
        };
        Self {
            threshold: Some(k),
            reference: Some(reference),
            pass: z <= k,
            ..Self::blank(z, details.into())
        }
    }
}

/// `P(Z > k)` for `Z ~ Poisson(mean)`.
fn poisson_upper_tail(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    gamma_lr(k as f64 + 1.0, mean)
}

/// Total-variation distance between the empirical law and `Poisson(mean)`.
pub fn tv_distance(emp: &EmpiricalDistribution, mean: f64) -> f64 {
    let max = emp.max_value();
    let body: f64 = (0..=max)
        .map(|k| (emp.pmf(k) - poisson_pmf(k, mean)).abs())
        .sum();
    (0.5 * (body + poisson_upper_tail(max, mean))).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit to `Poisson(mean)` at the given level.
///
/// Cells are built upward from 0 until each expected count reaches
/// `min_expected_cell`; the last cell collects the whole upper tail.
pub fn chi_square_poisson(
    emp: &EmpiricalDistribution,
    mean: f64,
    min_expected_cell: f64,
    level: f64,
) -> TestVerdict {
    let total = emp.total() as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut k = 0u64;
    loop {
        obs += emp.frequency(k) as f64;
        exp += total * poisson_pmf(k, mean);
        let tail_expected = total * poisson_upper_tail(k, mean);
        if tail_expected < min_expected_cell {
            // The remaining tail joins the open cell.
            obs += emp
                .counts()
                .range(k + 1..)
                .map(|(_, &f)| f as f64)
                .sum::<f64>();
            exp += tail_expected;
            match cells.last_mut() {
                Some(last) if exp < min_expected_cell => {
                    last.0 += obs;
                    last.1 += exp;
                }
                _ => cells.push((obs, exp)),
            }
            break;
        }
        if exp >= min_expected_cell {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
        k += 1;
    }
    if cells.len() < 2 {
        return TestVerdict::not_applicable(format!(
            "only {} cell(s) with expected count >= {min_expected_cell}",
            cells.len()
        ));
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1) as f64;
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    let p_value = 1.0 - dist.cdf(statistic);
    let mut details = format!("{} cells, df {}", cells.len(), cells.len() - 1);
    let _ = write!(
        details,
        ", critical value {:.4}",
        dist.inverse_cdf(1.0 - level)
    );
    TestVerdict::p_value_at_least(statistic, p_value, level, details)
}

/// Asymptotic Kolmogorov tail `P(sup|B| > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of pooled coordinates against `F(x) = x²`, at 5%.
pub fn ks_projected_marginal(points: &[f64]) -> TestVerdict {
    let n = points.len();
    if n < KS_MIN_POINTS {
        return TestVerdict::not_applicable(format!("{n} points, need at least {KS_MIN_POINTS}"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n_f = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x * x;
            (f - i as f64 / n_f).max((i + 1) as f64 / n_f - f)
        })
        .fold(0.0, f64::max);
    let threshold = KS_CRITICAL_5 / n_f.sqrt();
    let sqrt_n = n_f.sqrt();
    let p_value = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic);
    TestVerdict {
        p_value: Some(p_value),
        ..TestVerdict::at_most(
            statistic,
            threshold,
            format!("{n} points against F(x) = x^2"),
        )
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, total: u64, z: f64) -> (f64, f64) {
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Normal quantile for a two-sided interval of the given coverage.
pub fn two_sided_z(coverage: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - coverage) / 2.0)
}

/// Compares the frequency of empty boxes with `exp(-intensity mass)`.
pub fn void_probability_check(
    void_indicators: &[bool],
    region: &BoxRegion,
    m: usize,
    c: f64,
) -> Result<TestVerdict> {
    let target = (-intensity_mass(region, m, c)?).exp();
    let total = void_indicators.len();
    if total < VOID_MIN_REPLICATES {
        return Ok(TestVerdict::not_applicable(format!(
            "{total} replicates, need at least {VOID_MIN_REPLICATES}"
        )));
    }
    let voids = void_indicators.iter().filter(|&&v| v).count() as u64;
    let interval = wilson_interval(voids, total as u64, two_sided_z(VOID_COVERAGE));
    Ok(TestVerdict::reference_in(
        voids as f64 / total as f64,
        target,
        interval,
        format!("{voids} of {total} replicates void; target exp(-mass) = {target:.6}"),
    ))
}

/// Sample mean and variance with jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVarianceSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    /// `None` with fewer than three values.
    pub se_variance: Option<f64>,
    /// Standard error of `variance - mean`; `None` with fewer than three values.
    pub se_difference: Option<f64>,
}

/// Mean, unbiased variance and their delete-one jackknife standard errors.
pub fn mean_variance_summary(values: &[u64]) -> Result<MeanVarianceSummary> {
    let n = values.len();
    if n == 0 {
        return Err(Error::invalid("need at least one value"));
    }
    let n_f = n as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n_f;
    let centred: Vec<f64> = values.iter().map(|&v| v as f64 - mean).collect();
    let sum_sq: f64 = centred.iter().map(|y| y * y).sum();
    // A single value is reported with zero spread.
    let variance = if n == 1 { 0.0 } else { sum_sq / (n_f - 1.0) };
    let se_mean = (variance / n_f).sqrt();
    if n < 3 {
        return Ok(MeanVarianceSummary {
            count: n as u64,
            mean,
            variance,
            se_mean,
            se_variance: None,
            se_difference: None,
        });
    }
    // Leave-one-out estimates in closed form from the centred values.
    let loo_var = |y: f64| (sum_sq - y * y * n_f / (n_f - 1.0)) / (n_f - 2.0);
    let loo_mean = |y: f64| mean - y / (n_f - 1.0);
    let jackknife = |theta: &dyn Fn(f64) -> f64| {
        let estimates: Vec<f64> = centred.iter().map(|&y| theta(y)).collect();
        let centre = estimates.iter().sum::<f64>() / n_f;
        let spread: f64 = estimates.iter().map(|e| (e - centre) * (e - centre)).sum();
        ((n_f - 1.0) / n_f * spread).sqrt()
    };
    Ok(MeanVarianceSummary {
        count: n as u64,
        mean,
        variance,
        se_mean,
        se_variance: Some(jackknife(&loo_var)),
        se_difference: Some(jackknife(&|y| loo_var(y) - loo_mean(y))),
    })
}
