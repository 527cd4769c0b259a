//! Exact finite-n expectations, limit constants and critical dimensions.
//!
//! Exact moments use the representation `|X| = e^(-G)` with `G ~ Gamma(d, 1)`
//! for the coordinate product of a uniform point. The probability that a point
//! with product `x` dominates exactly `r` of the other `n - 1` points is
//! binomial, so
//!
//! ```text
//! E K^(r) = n C(n-1, r) E[ |X|^r (1 - |X|)^(n-1-r) ]
//!         = n C(n-1, r) (r+1)^(-d) E[ (1 - e^(-G/(r+1)))^(n-1-r) ]
//! ```
//!
//! after absorbing `e^(-rG)` into the Gamma density. The second form is
//! evaluated with [`gamma_expectation`]. An exact rational alternating sum is
//! provided as an independent check for small `n`.

#![allow(non_snake_case)]

use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{gamma_expectation, DEFAULT_TOLERANCE};
use crate::region::BoxRegion;

/// Largest `n` accepted by the exact alternating sum.
pub const ALTERNATING_SUM_MAX_N: u64 = 200;

/// Which critical dimension a run is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `d* = (2 / log 2) log n + c`, where `n - K` becomes Poisson.
    Star,
    /// `d** = e log n - (1/2) log log n + c`, where the `K^(r)` stay bounded.
    Starstar,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Self::Star),
            "starstar" => Ok(Self::Starstar),
            other => Err(Error::parse(other, "expected `star` or `starstar`")),
        }
    }
}

impl Regime {
    pub fn critical_dim(self, n: f64, c: f64) -> Result<f64> {
        match self {
            Self::Star => critical_dim_star(n, c),
            Self::Starstar => critical_dim_starstar(n, c),
        }
    }

    /// Integer dimension nearest the critical dimension; must be at least 1.
    pub fn resolve(self, n: f64, c: f64) -> Result<usize> {
        let d = self.critical_dim(n, c)?.round();
        if d.is_nan() || d < 1.0 {
            return Err(Error::Config(format!(
                "regime {self:?} with n = {n}, c = {c} resolves to d = {d} < 1"
            )));
        }
        Ok(d as usize)
    }
}

/// Offsets of an integer dimension from both critical dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOffset {
    pub n: f64,
    pub d: usize,
    pub c_star: f64,
    /// Undefined for `n < 3`.
    pub c_starstar: Option<f64>,
}

impl RegimeOffset {
    /// `c_star = d - 2 log2 n` solves `n^2 2^(-d) = 2^(-c)` for any `n > 0`,
    /// so it stays defined below the floor of the critical dimension.
    pub fn new(n: f64, d: usize) -> Result<Self> {
        if n.is_nan() || n <= 0.0 {
            return Err(Error::invalid(format!(
                "sample size must be positive, got {n}"
            )));
        }
        Ok(Self {
            n,
            d,
            c_star: d as f64 - 2.0 * n.log2(),
            c_starstar: critical_dim_starstar(n, 0.0)
                .ok()
                .map(|base| d as f64 - base),
        })
    }
}

/// `(2 / log 2) log n + c`. Defined for `n >= 2`.
pub fn critical_dim_star(n: f64, c: f64) -> Result<f64> {
    if n.is_nan() || n < 2.0 {
        return Err(Error::invalid(format!(
            "critical dimension needs n >= 2, got {n}"
        )));
    }
    Ok(2.0 * n.ln() / LN_2 + c)
}

/// `e log n - (1/2) log log n + c`. Defined for `n >= 3`.
pub fn critical_dim_starstar(n: f64, c: f64) -> Result<f64> {
    if n.is_nan() || n < 3.0 {
        return Err(Error::invalid(format!(
            "second critical dimension needs n >= 3, got {n}"
        )));
    }
    let ln = n.ln();
    Ok(E * ln - 0.5 * ln.ln() + c)
}

/// `∫_U |x| dx = ∏_k (b_k² - a_k²) / 2`.
pub fn box_product_integral(region: &BoxRegion) -> f64 {
    region
        .bounds()
        .iter()
        .map(|&(a, b)| (b - a) * (b + a) / 2.0)
        .product()
}

/// Mass `2^(m-c) ∫_U |x| dx` of the limiting intensity on the box.
pub fn intensity_mass(region: &BoxRegion, m: usize, c: f64) -> Result<f64> {
    check_box_dim(region, m)?;
    Ok((m as f64 - c).exp2() * box_product_integral(region))
}

fn check_box_dim(region: &BoxRegion, m: usize) -> Result<()> {
    if region.m() != m {
        return Err(Error::invalid(format!(
            "box has {} sides but m = {m}",
            region.m()
        )));
    }
    Ok(())
}

fn check_dims(d: usize, m: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if m > d {
        return Err(Error::invalid(format!("m = {m} exceeds d = {d}")));
    }
    Ok(())
}

/// `log C(n, k)` as a sum over the shorter side of the factorial ratio.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial needs k <= n");
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (k - i) as f64).ln()).sum()
}

/// Exact `E K^(r)` (`r = 0` gives `E K`) for `n` uniform points in `[0,1]^d`.
pub fn expected_K_r(n: u64, d: usize, r: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if n == 0 || r > n - 1 {
        return Err(Error::invalid(format!(
            "layer r = {r} needs 0 <= r <= n - 1 with n = {n}"
        )));
    }
    let m = (n - 1 - r) as f64;
    let scale = (r + 1) as f64;
    let log_prefactor = (n as f64).ln() + ln_binomial(n - 1, r) - d as f64 * scale.ln();
    if m == 0.0 {
        return Ok(log_prefactor.exp());
    }
    // The prefactor stays inside the integrand: it can overflow on its own
    // while the integrand underflows.
    gamma_expectation(d as f64, DEFAULT_TOLERANCE, |g| {
        (log_prefactor + m * (-(-g / scale).exp()).ln_1p()).exp()
    })
}

/// Exact `E(n - K)`, evaluated directly to avoid cancellation when `K ≈ n`.
pub fn expected_nonpareto(n: u64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if n <= 1 {
        return Ok(0.0);
    }
    let m = (n - 1) as f64;
    let integral = gamma_expectation(d as f64, DEFAULT_TOLERANCE, |g| {
        -(m * (-(-g).exp()).ln_1p()).exp_m1()
    })?;
    Ok(n as f64 * integral)
}

/// `E K^(r)` as an exact rational via
/// `n C(n-1,r) Σ_k (-1)^k C(n-1-r, k) (r+k+1)^(-d)`. Only for `n <= 200`.
pub fn alternating_sum_exact(n: u64, d: usize, r: u64) -> Result<BigRational> {
    if n > ALTERNATING_SUM_MAX_N {
        return Err(Error::invalid(format!(
            "alternating sum limited to n <= {ALTERNATING_SUM_MAX_N}, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if n == 0 || r > n - 1 {
        return Err(Error::invalid(format!(
            "layer r = {r} needs 0 <= r <= n - 1 with n = {n}"
        )));
    }
    let m = n - 1 - r;
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..=m {
        let base = BigInt::from(r + k + 1);
        let term = BigRational::new(binom.clone(), num_traits::pow(base, d));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        binom = binom * BigInt::from(m - k) / BigInt::from(k + 1);
    }
    let lead = BigInt::from(n) * binomial_big(n - 1, r);
    Ok(sum * BigRational::from_integer(lead))
}

/// [`alternating_sum_exact`] rounded to `f64`.
pub fn alternating_sum(n: u64, d: usize, r: u64) -> Result<f64> {
    let exact = alternating_sum_exact(n, d, r)?;
    exact
        .to_f64()
        .ok_or_else(|| Error::invalid("alternating sum not representable as f64"))
}

/// `E(n - K)` by the exact alternating sum.
pub fn alternating_sum_nonpareto(n: u64, d: usize) -> Result<f64> {
    let k = alternating_sum_exact(n, d, 0)?;
    (BigRational::from_integer(BigInt::from(n)) - k)
        .to_f64()
        .ok_or_else(|| Error::invalid("alternating sum not representable as f64"))
}

fn binomial_big(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact `E S(U) = n(n-1) 2^(m-d) ∫_U |x| dx`.
pub fn expected_S(n: u64, d: usize, region: &BoxRegion, m: usize) -> Result<f64> {
    check_dims(d, m)?;
    check_box_dim(region, m)?;
    let n = n as f64;
    Ok(n * (n - 1.0) * pair_probability(d, region, m))
}

/// `P(X_j ⪯ X_i, π X_i ∈ U) = 2^(m-d) ∫_U |x| dx`.
fn pair_probability(d: usize, region: &BoxRegion, m: usize) -> f64 {
    (m as f64 - d as f64).exp2() * box_product_integral(region)
}

/// `(log n)^(d-1) / (d-1)!`.
pub fn stirling_factor(n: f64, d: usize) -> Result<f64> {
    if n.is_nan() || n < 1.0 {
        return Err(Error::invalid(format!(
            "stirling factor needs n >= 1, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if d == 1 {
        return Ok(1.0);
    }
    let k = (d - 1) as f64;
    Ok((k * n.ln().ln() - ln_gamma(d as f64)).exp())
}

/// Limit of `E K^(r)` at `d = d** + c`: `e^(1/2-c) / √(2π) · Γ(r+1-e) / r!`.
pub fn limit_EKr(r: u64, c: f64) -> Result<f64> {
    if r <= 1 {
        return Err(Error::invalid(format!(
            "layer limit defined for r >= 2, got r = {r}"
        )));
    }
    let r_f = r as f64;
    let lead = (0.5 - c).exp() / (2.0 * std::f64::consts::PI).sqrt();
    Ok(lead * gamma(r_f + 1.0 - E) / gamma(r_f + 1.0))
}

/// Limit mean `2^(-c)` of `n - K` at `d = d* + c`.
pub fn limit_nonpareto_mean(c: f64) -> f64 {
    (-c).exp2()
}

/// Poisson probability `P(Z = k)`; a point mass at 0 when `mean == 0`.
pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k_f = k as f64;
    (k_f * mean.ln() - mean - ln_gamma(k_f + 1.0)).exp()
}

/// Terms of the total-variation bound between `S(U)` and a Poisson law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggBound {
    /// Sum over dependent pairs of products of marginal probabilities.
    pub b1: f64,
    /// Sum over dependent pairs of joint probabilities.
    pub b2: f64,
    /// Cost of a random sample size; zero for fixed `n`.
    pub mixing: f64,
    pub total: f64,
}

/// Bound on `d_TV(S(U), Poisson(E S(U)))` for `n` points.
pub fn agg_bound(n: u64, d: usize, region: &BoxRegion, m: usize) -> Result<AggBound> {
    check_dims(d, m)?;
    check_box_dim(region, m)?;
    if n == 0 {
        return Err(Error::invalid("bound needs n >= 1"));
    }
    let p = pair_probability(d, region, m);
    // Integer pair and triple counts keep n = 1 and n = 2 free of negative zeros.
    let pairs = (n * (n - 1)) as f64;
    let triples = pairs * n.saturating_sub(2) as f64;
    let b1 = pairs * (4.0 * n as f64 - 6.0).max(0.0) * p * p;
    let b2 = triples * joint_pair_mass(d);
    Ok(AggBound {
        b1,
        b2,
        mixing: 0.0,
        total: b1 + b2,
    })
}

/// `2 (3^(-d) + 6^(-d))`, the joint mass of the chains sharing one index.
fn joint_pair_mass(d: usize) -> f64 {
    let d = d as f64;
    2.0 * ((-d * 3f64.ln()).exp() + (-d * 6f64.ln()).exp())
}

/// Exact `E K^(r)` when the sample size is Poisson with mean `intensity`.
pub fn poissonized_expected_K_r(intensity: f64, d: usize, r: u64) -> Result<f64> {
    check_intensity(intensity)?;
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if intensity == 0.0 {
        return Ok(0.0);
    }
    let scale = (r + 1) as f64;
    let r_f = r as f64;
    let log_prefactor = (r_f + 1.0) * intensity.ln() - ln_gamma(r_f + 1.0) - d as f64 * scale.ln();
    gamma_expectation(d as f64, DEFAULT_TOLERANCE, |g| {
        (log_prefactor - intensity * (-g / scale).exp()).exp()
    })
}

/// Exact `E(N - K)` when `N` is Poisson with mean `intensity`.
pub fn poissonized_expected_nonpareto(intensity: f64, d: usize) -> Result<f64> {
    check_intensity(intensity)?;
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let integral = gamma_expectation(d as f64, DEFAULT_TOLERANCE, |g| {
        -(-intensity * (-g).exp()).exp_m1()
    })?;
    Ok(intensity * integral)
}

/// Exact `E S(U) = λ² 2^(m-d) ∫_U |x| dx` under a Poisson sample size.
pub fn poissonized_expected_S(
    intensity: f64,
    d: usize,
    region: &BoxRegion,
    m: usize,
) -> Result<f64> {
    check_intensity(intensity)?;
    check_dims(d, m)?;
    check_box_dim(region, m)?;
    Ok(intensity * intensity * pair_probability(d, region, m))
}

/// Bound on `d_TV(S(U), Poisson(λ² p))` under a Poisson sample size.
///
/// The fixed-`n` terms are averaged over `N`. The extra `mixing` term bounds
/// the distance between the mixed Poisson law with random mean `N(N-1)p` and
/// the Poisson law with mean `λ² p`, by `(1 - e^(-μ)) / μ · Var(N(N-1)p)`.
pub fn poissonized_agg_bound(
    intensity: f64,
    d: usize,
    region: &BoxRegion,
    m: usize,
) -> Result<AggBound> {
    check_intensity(intensity)?;
    check_dims(d, m)?;
    check_box_dim(region, m)?;
    let p = pair_probability(d, region, m);
    let l = intensity;
    let falling_var = 4.0 * l * l * l + 2.0 * l * l;
    let b1 = falling_var * p * p;
    let b2 = l * l * l * joint_pair_mass(d);
    let mu = l * l * p;
    let mixing = if mu > 0.0 {
        -(-mu).exp_m1() / mu * falling_var * p * p
    } else {
        0.0
    };
    Ok(AggBound {
        b1,
        b2,
        mixing,
        total: b1 + b2 + mixing,
    })
}

fn check_intensity(intensity: f64) -> Result<()> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::invalid(format!(
            "intensity must be finite and non-negative, got {intensity}"
        )));
    }
    Ok(())
}

/// Every oracle quantity for one `(n, d, box)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Sample size, or its mean when `poissonized`.
    pub n: f64,
    pub d: usize,
    pub m: usize,
    pub poissonized: bool,
    pub offset: RegimeOffset,
    pub exact_EK: f64,
    pub exact_E_nonpareto: f64,
    pub exact_EKr: BTreeMap<u64, f64>,
    pub expected_S: f64,
    /// `2^(-c_star)`.
    pub limit_mean: f64,
    /// Limits at `c_starstar` for `2 <= r <= r_max`.
    pub limit_EKr: BTreeMap<u64, f64>,
    pub stirling_factor: f64,
    pub agg_bound: AggBound,
}

impl OracleReport {
    /// Report for a fixed sample size `n >= 2`.
    pub fn fixed(n: u64, d: usize, r_max: u64, region: &BoxRegion) -> Result<Self> {
        let m = region.m();
        let nonpareto = expected_nonpareto(n, d)?;
        let exact_EKr = (1..=r_max.min(n - 1))
            .map(|r| Ok((r, expected_K_r(n, d, r)?)))
            .collect::<Result<_>>()?;
        Self::assemble(
            n as f64,
            d,
            m,
            r_max,
            false,
            expected_K_r(n, d, 0)?,
            nonpareto,
            exact_EKr,
            expected_S(n, d, region, m)?,
            agg_bound(n, d, region, m)?,
        )
    }

    /// Report for a Poisson sample size with mean `intensity >= 2`.
    pub fn poissonized(intensity: f64, d: usize, r_max: u64, region: &BoxRegion) -> Result<Self> {
        let m = region.m();
        let exact_EKr = (1..=r_max)
            .map(|r| Ok((r, poissonized_expected_K_r(intensity, d, r)?)))
            .collect::<Result<_>>()?;
        Self::assemble(
            intensity,
            d,
            m,
            r_max,
            true,
            poissonized_expected_K_r(intensity, d, 0)?,
            poissonized_expected_nonpareto(intensity, d)?,
            exact_EKr,
            poissonized_expected_S(intensity, d, region, m)?,
            poissonized_agg_bound(intensity, d, region, m)?,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        n: f64,
        d: usize,
        m: usize,
        r_max: u64,
        poissonized: bool,
        exact_EK: f64,
        exact_E_nonpareto: f64,
        exact_EKr: BTreeMap<u64, f64>,
        expected_S: f64,
        agg_bound: AggBound,
    ) -> Result<Self> {
        let offset = RegimeOffset::new(n, d)?;
        let limit_EKr = match offset.c_starstar {
            Some(c) => (2..=r_max)
                .map(|r| Ok((r, limit_EKr(r, c)?)))
                .collect::<Result<_>>()?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            n,
            d,
            m,
            poissonized,
            offset,
            exact_EK,
            exact_E_nonpareto,
            exact_EKr,
            expected_S,
            limit_mean: limit_nonpareto_mean(offset.c_star),
            limit_EKr,
            stirling_factor: stirling_factor(n, d)?,
            agg_bound,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn critical_dimensions() {
        assert_relative_eq!(critical_dim_star(2.0, 0.3).unwrap(), 2.3, epsilon = 1e-14);
        assert_relative_eq!(
            critical_dim_starstar(1e6, 0.0).unwrap(),
            36.2415553433604,
            max_relative = 1e-13
        );
        assert!(critical_dim_star(1.5, 0.0).is_err());
        assert!(critical_dim_starstar(2.0, 0.0).is_err());
        for n in [3.0, 10.0, 2000.0, 1e5, 1e9] {
            let d = critical_dim_star(n, 0.0).unwrap().round() as usize;
            let c = RegimeOffset::new(n, d).unwrap().c_star;
            assert!(c > -0.5 && c <= 0.5, "n = {n}: c = {c}");
        }
        assert!(RegimeOffset::new(2.0, 2).unwrap().c_starstar.is_none());
    }

    #[test]
    fn box_integrals() {
        assert_relative_eq!(box_product_integral(&BoxRegion::unit(3)), 0.125);
        let b: BoxRegion = "0:0.5,0:1".parse().unwrap();
        assert_relative_eq!(box_product_integral(&b), 0.0625);
        for m in 1..5 {
            assert_relative_eq!(
                intensity_mass(&BoxRegion::unit(m), m, 0.7).unwrap(),
                2f64.powf(-0.7)
            );
        }
        let half: BoxRegion = "0:0.5".parse().unwrap();
        assert_relative_eq!(
            intensity_mass(&half, 1, 0.2).unwrap(),
            2f64.powf(0.8) * 0.125
        );
        assert!(intensity_mass(&half, 2, 0.0).is_err());
    }

    #[test]
    fn small_closed_forms() {
        for d in 1..20 {
            let ek = expected_K_r(2, d, 0).unwrap();
            assert_relative_eq!(
                ek,
                2.0 * (1.0 - 2f64.powi(-(d as i32))),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(expected_K_r(2, 2, 1).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            expected_K_r(3, 2, 2).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(expected_nonpareto(2, 2).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            expected_nonpareto(3, 2).unwrap(),
            7.0 / 6.0,
            max_relative = 1e-12
        );
        assert_eq!(expected_nonpareto(1, 5).unwrap(), 0.0);
        assert!(expected_K_r(3, 2, 3).is_err());
    }

    #[test]
    fn one_dimension_is_a_total_order() {
        for n in [2u64, 7, 50, 1000] {
            assert_relative_eq!(
                expected_nonpareto(n, 1).unwrap(),
                (n - 1) as f64,
                max_relative = 1e-10
            );
            for r in [0, 1, n / 2, n - 1] {
                assert_relative_eq!(expected_K_r(n, 1, r).unwrap(), 1.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn exact_rationals() {
        let seven_sixths = BigRational::new(7.into(), 6.into());
        let np = BigRational::from_integer(3.into()) - alternating_sum_exact(3, 2, 0).unwrap();
        assert_eq!(np, seven_sixths);
        assert_eq!(
            alternating_sum_exact(3, 2, 2).unwrap(),
            BigRational::new(1.into(), 3.into())
        );
        assert!(alternating_sum(201, 2, 0).is_err());
    }

    #[test]
    fn frozen_reference_values() {
        // Independent high-precision integration of the exact formulas.
        let cases = [
            (expected_nonpareto(2000, 16), 37.5988843388602),
            (expected_nonpareto(2000, 20), 3.25307876674255),
            (expected_nonpareto(2000, 22), 0.875701345252891),
            (expected_nonpareto(2000, 28), 0.0147419905429227),
            (expected_K_r(2000, 20, 2), 0.244743089236906),
            (expected_K_r(10_000, 24, 2), 0.332513369254258),
            (expected_K_r(10_000, 24, 3), 0.077383120430939),
            (expected_K_r(1_000_000, 36, 2), 0.50974051873817),
            (expected_K_r(1_000_000, 36, 3), 0.108229255989544),
            (expected_K_r(100_000_000, 49, 2), 0.325336481513177),
            (expected_K_r(100_000_000, 49, 3), 0.0606855249519058),
            (expected_K_r(1_000_000, 36, 0), 999986.629841046),
        ];
        for (got, want) in cases {
            assert_relative_eq!(got.unwrap(), want, max_relative = 1e-8);
        }
    }

    #[test]
    fn expected_pair_counts() {
        let cube = BoxRegion::unit(1);
        assert_relative_eq!(
            expected_S(2000, 22, &cube, 1).unwrap(),
            3_998_000.0 / 4_194_304.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected_S(2, 1, &cube, 1).unwrap(), 1.0);
        assert_relative_eq!(expected_S(3, 2, &BoxRegion::unit(2), 2).unwrap(), 1.5);
        assert!(expected_S(3, 2, &BoxRegion::unit(3), 3).is_err());
    }

    #[test]
    fn stirling_and_limits() {
        for n in [2.0, 10.0, 1e9] {
            assert_eq!(stirling_factor(n, 1).unwrap(), 1.0);
        }
        for d in 1..10usize {
            let fact: f64 = (1..d).map(|k| k as f64).product();
            assert_relative_eq!(
                stirling_factor(E, d).unwrap(),
                1.0 / fact,
                max_relative = 1e-12
            );
        }
        assert_eq!(limit_nonpareto_mean(0.0), 1.0);
        assert_relative_eq!(gamma(3.0 - E), 3.19618269085505, max_relative = 1e-12);
        assert_relative_eq!(
            limit_EKr(2, 0.5).unwrap(),
            0.637546205634651,
            max_relative = 1e-12
        );
        assert!(limit_EKr(1, 0.0).is_err());
        assert_relative_eq!(poisson_pmf(0, 1.7), (-1.7f64).exp(), max_relative = 1e-15);
        let total: f64 = (0..60).map(|k| poisson_pmf(k, 4.2)).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn agg_bound_values() {
        for d in 1..8 {
            let b = agg_bound(2, d, &BoxRegion::unit(1), 1).unwrap();
            assert_eq!(b.b2, 0.0);
            assert_relative_eq!(b.total, 4.0 * 4f64.powi(-(d as i32)), max_relative = 1e-14);
        }
        let b = agg_bound(2000, 22, &BoxRegion::unit(1), 1).unwrap();
        assert_relative_eq!(b.b1, 1.81672e-3, max_relative = 1e-5);
        assert_relative_eq!(b.b2, 0.509097, max_relative = 1e-5);
        assert_relative_eq!(b.total, b.b1 + b.b2);
        let tiny: BoxRegion = "0:0.001".parse().unwrap();
        let t = agg_bound(2000, 22, &tiny, 1).unwrap();
        assert!(t.b1 < 1e-12);
        assert_eq!(t.b2, b.b2);
    }

    #[test]
    fn poissonized_matches_mixture() {
        // Averaging the fixed-n oracle over a Poisson(λ) size gives the poissonized one.
        let (lambda, d) = (6.0, 3);
        let mut mix_np = 0.0;
        let mut mix_k2 = 0.0;
        for n in 1..80u64 {
            let w = poisson_pmf(n, lambda);
            mix_np += w * expected_nonpareto(n, d).unwrap();
            if n >= 3 {
                mix_k2 += w * expected_K_r(n, d, 2).unwrap();
            }
        }
        assert_relative_eq!(
            poissonized_expected_nonpareto(lambda, d).unwrap(),
            mix_np,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            poissonized_expected_K_r(lambda, d, 2).unwrap(),
            mix_k2,
            max_relative = 1e-9
        );
        let cube = BoxRegion::unit(1);
        assert_relative_eq!(
            poissonized_expected_S(lambda, d, &cube, 1).unwrap(),
            lambda * lambda * 2f64.powi(-(d as i32)),
            max_relative = 1e-14
        );
        let b = poissonized_agg_bound(2000.0, 22, &cube, 1).unwrap();
        assert!(b.mixing > 0.0 && b.total > b.b1 + b.b2);
    }

    #[test]
    fn report_is_consistent() {
        let report = OracleReport::fixed(2000, 22, 3, &BoxRegion::unit(1)).unwrap();
        assert_relative_eq!(
            report.exact_EK + report.exact_E_nonpareto,
            2000.0,
            max_relative = 1e-14
        );
        assert_eq!(report.exact_EKr.len(), 3);
        assert_eq!(
            report.limit_EKr.keys().copied().collect::<Vec<_>>(),
            vec![2, 3]
        );
        assert!(OracleReport::fixed(2, 2, 3, &BoxRegion::unit(1))
            .unwrap()
            .limit_EKr
            .is_empty());
    }
}
