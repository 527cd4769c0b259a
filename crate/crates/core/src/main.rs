use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pareto_lab::experiment::output::{
    emit, emit_series, key_values_csv, records_to_csv, sweep_to_csv, to_json_string,
    verdicts_to_csv, PlotSeries,
};
use pareto_lab::experiment::{
    parse_box_spec, parse_proj_spec, run_oracle, run_simulation, run_stein_chen, run_sweep,
    DimensionSpec, ExperimentConfig, Mode, OutputFormat, DEFAULT_ATOM_CAP, DEFAULT_R_MAX,
};
use pareto_lab::oracle::{
    expected_K_r, expected_nonpareto, limit_EKr, limit_nonpareto_mean, Regime, RegimeOffset,
};
use pareto_lab::region::BoxRegion;
use pareto_lab::{Error, Result};

const ASSERT_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pareto-lab",
    version,
    about = "Pareto-minimal points of uniform samples in growing dimension"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicates and test them against the exact oracles.
    Simulate(RunArgs),
    /// Simulate a range of dimensions, optionally on nested samples.
    Sweep(RunArgs),
    /// Print every exact and limiting oracle value; no randomness.
    Oracle(RunArgs),
    /// Compare the law of S(U) with its Poisson approximation bound.
    SteinChen(RunArgs),
    /// Write (x, y) series over a dimension range for external plotting.
    Plotdata(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Sample size, or the mean sample size with --poissonized.
    #[arg(long)]
    n: u64,
    /// Dimension.
    #[arg(long, conflicts_with = "regime")]
    d: Option<usize>,
    /// Pick d as the nearest integer to a critical dimension: star or starstar.
    #[arg(long)]
    regime: Option<Regime>,
    /// Offset added to the critical dimension.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    /// Number of replicates.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Largest layer index r reported.
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    r_max: u64,
    /// One-based projected coordinates, e.g. "1,3,7".
    #[arg(long, default_value = "1")]
    proj: String,
    /// Box in the projected space, e.g. "0:0.5,0:1"; defaults to the unit cube.
    #[arg(long = "box")]
    region: Option<String>,
    /// Draw a Poisson(n) number of points per replicate.
    #[arg(long)]
    poissonized: bool,
    /// Output file (a directory for plotdata); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Exit with status 4 if any verdict fails.
    #[arg(long)]
    assert: bool,
    /// Inclusive dimension range "lo:hi" for sweep and plotdata.
    #[arg(long)]
    d_range: Option<String>,
    /// Nest all dimensions of a sweep in one sample per replicate.
    #[arg(long)]
    coupled: bool,
    /// Projected points kept per replicate.
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
    atom_cap: usize,
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| Error::parse(text, "expected `lo:hi`"))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(s, "not a dimension"))
    };
    Ok((parse(lo)?, parse(hi)?))
}

fn build_config(mode: Mode, args: &RunArgs) -> Result<ExperimentConfig> {
    let d_range = args.d_range.as_deref().map(parse_range).transpose()?;
    let dimension = match (args.d, args.regime, d_range) {
        (Some(d), _, _) => DimensionSpec::Fixed { d },
        (None, Some(regime), _) => DimensionSpec::Critical { regime, c: args.c },
        (None, None, Some((lo, _))) => DimensionSpec::Fixed { d: lo },
        (None, None, None) => return Err(Error::Config("give --d, --regime or --d-range".into())),
    };
    let proj = parse_proj_spec(&args.proj)?;
    let region = match &args.region {
        Some(text) => parse_box_spec(text)?,
        None => BoxRegion::unit(proj.m()),
    };
    let default_reps = if mode == Mode::Oracle { 0 } else { 1000 };
    let cfg = ExperimentConfig {
        mode,
        n: args.n,
        dimension,
        r_max: args.r_max,
        reps: args.reps.unwrap_or(default_reps),
        master_seed: args.seed,
        proj,
        region,
        poissonized: args.poissonized,
        atom_cap: args.atom_cap,
        d_range,
        coupled: args.coupled,
        workers: args.workers,
        output: args.out.clone(),
        format: args.format,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Sibling path `<stem>.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn report_verdicts<'a>(
    verdicts: impl IntoIterator<Item = (&'a String, &'a pareto_lab::diagnostics::TestVerdict)>,
) {
    for (name, v) in verdicts {
        let status = match (v.applicable, v.pass) {
            (false, _) => "N/A ",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        eprintln!(
            "[{status}] {name}: statistic {:.6} ({})",
            v.statistic, v.details
        );
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<bool> {
    let summary = run_simulation(cfg)?;
    report_verdicts(&summary.aggregates.verdicts);
    match cfg.format {
        OutputFormat::Json => emit(cfg.output.as_deref(), &to_json_string(&summary)?)?,
        OutputFormat::Csv => {
            emit(cfg.output.as_deref(), &records_to_csv(&summary.records)?)?;
            let verdicts = verdicts_to_csv(&summary.aggregates.verdicts)?;
            match cfg.output.as_deref() {
                Some(path) => emit(Some(&sibling(path, "verdicts.csv")), &verdicts)?,
                None => eprint!("{verdicts}"),
            }
        }
    }
    Ok(summary.all_pass())
}

fn sweep(cfg: &ExperimentConfig) -> Result<bool> {
    let summary = run_sweep(cfg)?;
    for row in &summary.rows {
        eprintln!(
            "d = {:>3}  c* = {:>7.3}  oracle {:>12.6}  empirical {:>12.6} +- {:.6}",
            row.d, row.c_star, row.oracle_mean, row.empirical.mean, row.empirical.se_mean
        );
    }
    if let Some(v) = summary.violations {
        eprintln!("coupling violations: {v}");
    }
    let text = match cfg.format {
        OutputFormat::Json => to_json_string(&summary)?,
        OutputFormat::Csv => sweep_to_csv(&summary)?,
    };
    emit(cfg.output.as_deref(), &text)?;
    Ok(summary.all_pass())
}

fn oracle(cfg: &ExperimentConfig) -> Result<bool> {
    let report = run_oracle(cfg)?;
    let text = match cfg.format {
        OutputFormat::Json => to_json_string(&report)?,
        OutputFormat::Csv => key_values_csv(&report)?,
    };
    emit(cfg.output.as_deref(), &text)?;
    Ok(true)
}

fn stein_chen(cfg: &ExperimentConfig) -> Result<bool> {
    let report = run_stein_chen(cfg)?;
    eprintln!(
        "E S(U) = {:.6}, bound {:.6}, empirical TV {:.6}",
        report.expected_S, report.agg_bound.total, report.tv
    );
    let text = match cfg.format {
        OutputFormat::Json => to_json_string(&report)?,
        OutputFormat::Csv => key_values_csv(&report)?,
    };
    emit(cfg.output.as_deref(), &text)?;
    Ok(report.verdict.pass)
}

fn plotdata(args: &RunArgs) -> Result<bool> {
    let (lo, hi) = match args.d_range.as_deref() {
        Some(text) => parse_range(text)?,
        None => {
            let d = Regime::Star.resolve(args.n as f64, 0.0)?;
            (d.saturating_sub(6).max(2), d + 6)
        }
    };
    if lo < 2 || lo > hi {
        return Err(Error::Config(format!(
            "dimension range {lo}:{hi} must satisfy 2 <= lo <= hi"
        )));
    }
    let n = args.n;
    let dims: Vec<usize> = (lo..=hi).collect();
    let series = |name: String, f: &dyn Fn(usize) -> Result<Option<f64>>| -> Result<PlotSeries> {
        let mut points = Vec::new();
        for &d in &dims {
            if let Some(y) = f(d)? {
                points.push((d as f64, y));
            }
        }
        Ok(PlotSeries { name, points })
    };
    let offset = |d: usize| RegimeOffset::new(n as f64, d);
    let mut out = vec![
        series("nonpareto_oracle".into(), &|d| {
            Ok(Some(expected_nonpareto(n, d)?))
        })?,
        series("nonpareto_limit".into(), &|d| {
            Ok(Some(limit_nonpareto_mean(offset(d)?.c_star)))
        })?,
    ];
    for r in 1..=args.r_max.min(n.saturating_sub(1)) {
        out.push(series(format!("layer_{r}_oracle"), &|d| {
            Ok(Some(expected_K_r(n, d, r)?))
        })?);
        if r >= 2 {
            out.push(series(format!("layer_{r}_limit"), &|d| {
                offset(d)?.c_starstar.map(|c| limit_EKr(r, c)).transpose()
            })?);
        }
    }
    if let Some(reps) = args.reps {
        let mut cfg = build_config(Mode::Sweep, args)?;
        cfg.d_range = Some((lo, hi));
        cfg.reps = reps;
        let summary = run_sweep(&cfg)?;
        out.push(PlotSeries {
            name: "nonpareto_empirical".into(),
            points: summary
                .rows
                .iter()
                .map(|r| (r.d as f64, r.empirical.mean))
                .collect(),
        });
    }
    emit_series(args.out.as_deref(), &out)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<(bool, bool)> {
    let (passed, assert) = match &cli.command {
        Command::Simulate(a) => (simulate(&build_config(Mode::Simulate, a)?)?, a.assert),
        Command::Sweep(a) => (sweep(&build_config(Mode::Sweep, a)?)?, a.assert),
        Command::Oracle(a) => (oracle(&build_config(Mode::Oracle, a)?)?, a.assert),
        Command::SteinChen(a) => (stein_chen(&build_config(Mode::SteinChen, a)?)?, a.assert),
        Command::Plotdata(a) => (plotdata(a)?, a.assert),
    };
    Ok((passed, assert))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((false, true)) => {
            eprintln!("assertion failed: at least one verdict did not pass");
            ExitCode::from(ASSERT_FAILED)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
