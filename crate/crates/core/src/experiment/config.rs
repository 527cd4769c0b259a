use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Regime;
use crate::region::{BoxRegion, ProjectionSpec};

/// Default cap on projected points kept per replicate.
pub const DEFAULT_ATOM_CAP: usize = 64;
/// Default largest layer index `r` reported.
pub const DEFAULT_R_MAX: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Oracle,
    Sweep,
    SteinChen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::parse(other, "expected `json` or `csv`")),
        }
    }
}

/// How the dimension is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DimensionSpec {
    Fixed {
        d: usize,
    },
    /// Nearest integer to a critical dimension with offset `c`.
    Critical {
        regime: Regime,
        c: f64,
    },
}

/// Everything that determines an experiment's results.
///
/// `workers`, `output` and `format` only affect how results are computed and
/// where they go, so they are left out of the serialized echo; this keeps
/// payloads byte-identical across worker counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Sample size, or the Poisson mean of the sample size when `poissonized`.
    pub n: u64,
    pub dimension: DimensionSpec,
    pub r_max: u64,
    pub reps: u64,
    pub master_seed: u64,
    pub proj: ProjectionSpec,
    #[serde(rename = "box")]
    pub region: BoxRegion,
    pub poissonized: bool,
    /// Projected points kept per replicate.
    pub atom_cap: usize,
    /// Inclusive dimension range for sweeps.
    pub d_range: Option<(usize, usize)>,
    /// Sweeps nest all dimensions in one sample per replicate.
    pub coupled: bool,
    #[serde(skip, default = "one")]
    pub workers: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub format: OutputFormat,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// A simulation of `reps` samples at fixed `n` and `d`, projecting onto
    /// the first coordinate with the full unit interval as box.
    pub fn new(mode: Mode, n: u64, d: usize, reps: u64, master_seed: u64) -> Self {
        Self {
            mode,
            n,
            dimension: DimensionSpec::Fixed { d },
            r_max: DEFAULT_R_MAX,
            reps,
            master_seed,
            proj: ProjectionSpec::leading(1).expect("one coordinate"),
            region: BoxRegion::unit(1),
            poissonized: false,
            atom_cap: DEFAULT_ATOM_CAP,
            d_range: None,
            coupled: false,
            workers: 1,
            output: None,
            format: OutputFormat::Json,
        }
    }

    /// The integer dimension of the run.
    pub fn resolved_d(&self) -> Result<usize> {
        match self.dimension {
            DimensionSpec::Fixed { d } => Ok(d),
            DimensionSpec::Critical { regime, c } => regime
                .resolve(self.n as f64, c)
                .map_err(|e| Error::Config(e.to_string())),
        }
    }

    /// Dimensions visited: the sweep range, or the single resolved dimension.
    pub fn dims(&self) -> Result<Vec<usize>> {
        match (self.mode, self.d_range) {
            (Mode::Sweep, Some((lo, hi))) => Ok((lo..=hi).collect()),
            (Mode::Sweep, None) => Err(Error::Config("sweep needs a dimension range".into())),
            _ => Ok(vec![self.resolved_d()?]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.reps == 0 && self.mode != Mode::Oracle {
            return fail("reps must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.region.m() != self.proj.m() {
            return fail(format!(
                "box has {} sides but the projection keeps {} coordinates",
                self.region.m(),
                self.proj.m()
            ));
        }
        if let Some((lo, hi)) = self.d_range {
            if lo < 2 || lo > hi {
                return fail(format!(
                    "dimension range {lo}:{hi} must satisfy 2 <= lo <= hi"
                ));
            }
        }
        if self.mode == Mode::Sweep && self.poissonized {
            return fail("sweeps use a fixed sample size".into());
        }
        let dims = self.dims()?;
        let d_min = *dims.iter().min().expect("at least one dimension");
        if d_min == 0 {
            return fail("dimension must be at least 1".into());
        }
        if self.proj.max_index() >= d_min {
            return fail(format!(
                "projection uses coordinate {} but d = {d_min}",
                self.proj.max_index() + 1
            ));
        }
        Ok(())
    }
}
