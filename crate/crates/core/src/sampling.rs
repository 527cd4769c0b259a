//! Deterministic uniform samples, the dimension-nested coupling and
//! poissonized sample sizes.
//!
//! Every replicate owns an independent stream keyed by
//! `(master_seed, replicate_index)`:
//!
//! * the 256-bit ChaCha8 key is four consecutive SplitMix64 outputs seeded
//!   with `master_seed`, each written little-endian;
//! * the ChaCha stream id is `replicate_index`;
//! * a unit variate is `(next_u64 >> 11) * 2^-53`, so it lies in `[0, 1)`.
//!
//! ChaCha is a counter-mode generator, so a replicate's draws do not depend
//! on any other replicate, on scheduling, or on the host's word order.
//!
//! Coordinates are drawn coordinate-major (all `n` values of coordinate 1,
//! then coordinate 2, ...) and stored row-major. With that order the first
//! `d` columns of a coupled pool are exactly `sample_uniform(n, d, stream)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::sample::{Provenance, SampleMatrix, SampleView};

/// Default cap on `n * d` for a single sample (2^27 coordinates, 1 GiB).
pub const DEFAULT_MAX_CELLS: usize = 1 << 27;

/// Intensities up to this value use sequential inversion; larger ones use PTRS.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Identifies the random stream of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl StreamSpec {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            replicate_index,
        }
    }

    pub fn stream(&self) -> UniformStream {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replicate_index);
        UniformStream { rng }
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            master_seed: self.master_seed,
            replicate_index: self.replicate_index,
        }
    }
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream of unit-interval variates for one replicate.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform variate on `[0, 1)` with 53 random mantissa bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn fill_coordinate_major(&mut self, n: usize, d: usize, coords: &mut [f64]) {
        for k in 0..d {
            for i in 0..n {
                coords[i * d + k] = self.next_unit();
            }
        }
    }
}

fn check_budget(n: usize, d: usize, max_cells: usize) -> Result<()> {
    match n.checked_mul(d) {
        Some(cells) if cells <= max_cells => Ok(()),
        _ => Err(Error::Resource(format!(
            "a {n}x{d} sample exceeds the budget of {max_cells} coordinates"
        ))),
    }
}

/// `n` independent uniform points in `[0,1]^d`.
pub fn sample_uniform(n: usize, d: usize, stream: StreamSpec) -> Result<SampleMatrix> {
    sample_uniform_with_budget(n, d, stream, DEFAULT_MAX_CELLS)
}

pub fn sample_uniform_with_budget(
    n: usize,
    d: usize,
    stream: StreamSpec,
    max_cells: usize,
) -> Result<SampleMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "sample size and dimension must be positive (got n={n}, d={d})"
        )));
    }
    check_budget(n, d, max_cells)?;
    let mut coords = vec![0.0; n * d];
    stream.stream().fill_coordinate_major(n, d, &mut coords);
    Ok(SampleMatrix::from_parts_unchecked(
        n,
        d,
        coords,
        Some(stream.provenance()),
    ))
}

/// One shared coordinate pool viewed in several nested dimensions.
#[derive(Debug, Clone)]
pub struct CoupledSample {
    n: usize,
    dims: Vec<usize>,
    pool: Vec<f64>,
    provenance: Provenance,
}

impl CoupledSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn max_dim(&self) -> usize {
        *self.dims.last().expect("dims are non-empty")
    }

    /// The sample in dimension `d`: the first `d` columns of the pool.
    pub fn view(&self, d: usize) -> Result<SampleView<'_>> {
        if d == 0 || d > self.max_dim() {
            return Err(Error::invalid(format!(
                "dimension {d} is outside the coupled range 1..={}",
                self.max_dim()
            )));
        }
        Ok(SampleView::new(&self.pool, self.n, d, self.max_dim()))
    }

    /// Owned copy of the sample in dimension `d`.
    pub fn sample(&self, d: usize) -> Result<SampleMatrix> {
        let coords = self.view(d)?.to_row_major();
        Ok(SampleMatrix::from_parts_unchecked(
            self.n,
            d,
            coords,
            Some(self.provenance),
        ))
    }
}

/// Draws one pool of `n x max(dims)` coordinates shared by every listed dimension.
pub fn coupled_samples(n: usize, dims: &[usize], stream: StreamSpec) -> Result<CoupledSample> {
    if dims.is_empty() {
        return Err(Error::invalid(
            "coupled sample needs at least one dimension",
        ));
    }
    if dims[0] == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    if let Some(w) = dims.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "dimensions must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let d_max = *dims.last().unwrap();
    check_budget(n, d_max, DEFAULT_MAX_CELLS)?;
    let mut pool = vec![0.0; n * d_max];
    stream.stream().fill_coordinate_major(n, d_max, &mut pool);
    Ok(CoupledSample {
        n,
        dims: dims.to_vec(),
        pool,
        provenance: stream.provenance(),
    })
}

/// Sample whose size is Poisson(`intensity`); the size is drawn first, then the points.
pub fn poissonized_sample(intensity: f64, d: usize, stream: StreamSpec) -> Result<SampleMatrix> {
    if !intensity.is_finite() || intensity <= 0.0 {
        return Err(Error::invalid(format!(
            "intensity must be positive and finite, got {intensity}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut rng = stream.stream();
    let n = poisson_variate(intensity, &mut rng) as usize;
    check_budget(n, d, DEFAULT_MAX_CELLS)?;
    let mut coords = vec![0.0; n * d];
    rng.fill_coordinate_major(n, d, &mut coords);
    Ok(SampleMatrix::from_parts_unchecked(
        n,
        d,
        coords,
        Some(stream.provenance()),
    ))
}

/// Poisson variate: sequential inversion for `mean <= 30`, otherwise
/// Hörmann's transformed rejection with squeeze (PTRS).
pub fn poisson_variate(mean: f64, rng: &mut UniformStream) -> u64 {
    debug_assert!(mean > 0.0);
    if mean <= POISSON_INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion(mean: f64, rng: &mut UniformStream) -> u64 {
    let u = rng.next_unit();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // The cap only guards against cdf rounding short of u near 1.
    while u >= cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn poisson_ptrs(mean: f64, rng: &mut UniformStream) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.next_unit() - 0.5;
        let v = rng.next_unit();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
