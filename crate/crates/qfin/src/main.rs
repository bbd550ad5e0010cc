//! Command-line front end for the price-dynamics pipeline. Every command
//! writes its artifacts plus a JSON manifest into the output directory
//! (--out-dir, else QFIN_OUT_DIR, else the current directory).

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use qfin_core::density::{build_density, DEFAULT_BINS, DEFAULT_FLOOR};
use qfin_core::inverse::extract_potential;
use qfin_core::scaling::{estimate_diffusion, estimate_hurst, rolling_diffusion};
use qfin_core::simulate::{fbm_path, gbm_path, nelson_sample, DriftField, PathEnsemble};
use qfin_core::solver::{
    ground_state, ground_state_from_profile, propagate_generalized, spectrum, DeltaSchedule,
    Mode, WaveState,
};
use qfin_core::{CoordinateSeries, ModelParams};

use qfin::market_data::{load_price_csv, resample_weekly, slice_by_date, PriceSeries};
use qfin::reports::{
    density_csv, diffusion_series_csv, eigen_csv, eigen_json, ensemble_csv,
    potential_csv, potential_json, price_series_csv, read_delta_schedule_csv,
    read_density_csv, read_potential_csv, read_wave_csv, resolve_out_dir, scaling_json,
    wave_state_csv, write_atomic, RunManifest,
};

#[derive(Parser)]
#[command(name = "qfin", version, about = "Price-path scaling analysis and wave-equation toolkit")]
struct Cli {
    /// Output directory for all artifacts (falls back to QFIN_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct DataArgs {
    /// Input price CSV with Date and Close (or Adj Close) columns.
    #[arg(long)]
    input: PathBuf,
    /// Price column to use; defaults to Adj Close, then Close.
    #[arg(long)]
    column: Option<String>,
    /// First date to keep (inclusive).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last date to keep (inclusive).
    #[arg(long)]
    end: Option<NaiveDate>,
    /// Keep daily sampling instead of resampling to weekly closes.
    #[arg(long)]
    daily: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw price CSV: validate, sort, slice, resample.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Scaling analysis: Hurst exponent, fractal dimension, diffusion.
    Scaling {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated return horizons, in sample steps.
        #[arg(long, default_value = "1,2,4,8,16")]
        lags: String,
        /// Rolling window length (samples) for the diffusion time course.
        #[arg(long)]
        window: Option<usize>,
        /// Rolling window advance (samples).
        #[arg(long, default_value_t = 1)]
        step: usize,
    },
    /// Occupancy histogram of the log-price coordinate.
    Density {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        range_lo: Option<f64>,
        #[arg(long)]
        range_hi: Option<f64>,
    },
    /// Extract the potential profile (with quantum potential and osmotic
    /// velocity) from the occupancy density.
    Potential {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        range_lo: Option<f64>,
        #[arg(long)]
        range_hi: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Diffusion coefficient; estimated from the data when omitted.
        #[arg(long)]
        diffusion: Option<f64>,
    },
    /// Lowest eigenpairs of the Hamiltonian built from a potential CSV.
    Solve {
        /// Potential CSV (x, phi_minus_E or phi column).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        diffusion: f64,
        /// How many eigenpairs, lowest first.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Propagate a wave state under a potential.
    Evolve {
        /// Potential CSV (x, phi_minus_E or phi column).
        #[arg(long)]
        potential: PathBuf,
        /// Initial state CSV (x, re_psi, im_psi); ground state when omitted.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        diffusion: f64,
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Use the varying-diffusion equation.
        #[arg(long)]
        generalized: bool,
        /// full | perturbative (generalized equation only).
        #[arg(long, default_value = "full")]
        mode: String,
        /// Diffusion fluctuation: constant:<v>, sinusoid:<amp>:<period>,
        /// or a CSV file of t,delta_D knots.
        #[arg(long)]
        delta_d: Option<String>,
    },
    /// Generate synthetic paths with known statistics.
    Simulate {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Density -> potential -> ground state -> density; reports the L-inf
    /// gap between the input amplitude and the recovered eigenvector.
    Roundtrip {
        /// Density CSV (x, P columns).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        diffusion: f64,
    },
    /// End-to-end pipeline: slice, weekly resample, scaling, density,
    /// potential — everything needed to reproduce the headline numbers.
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value = "1,2,4,8,16")]
        lags: String,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long)]
        diffusion: Option<f64>,
    },
}

#[derive(Subcommand)]
enum Generator {
    /// Geometric Brownian motion log-price paths (H = 1/2, D = sigma^2/2).
    Gbm {
        #[arg(long, default_value_t = 0.18)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Step size in years (default one week).
        #[arg(long, default_value_t = 1.0 / 52.0)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fractional Brownian motion with exact increment covariance.
    Fbm {
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        #[arg(long, default_value_t = 1024)]
        steps: usize,
        #[arg(long, default_value_t = 1.0 / 52.0)]
        dt: f64,
        /// Increment standard deviation per step.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Forward stochastic process whose equilibrium density is |psi|^2.
    Nelson {
        /// Wave state CSV (x, re_psi, im_psi) defining the drift field.
        #[arg(long)]
        initial: PathBuf,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        diffusion: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let out = resolve_out_dir(cli.out_dir.as_deref());
    if let Err(e) = run(cli.command, &out) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Load, slice, and optionally weekly-resample a price CSV.
fn load_data(args: &DataArgs) -> qfin::Result<PriceSeries> {
    let text = fs::read_to_string(&args.input)?;
    let mut series = load_price_csv(&text, args.column.as_deref(), &args.input.display().to_string())?;
    if args.start.is_some() || args.end.is_some() {
        let start = args.start.unwrap_or(NaiveDate::MIN);
        let end = args.end.unwrap_or(NaiveDate::MAX);
        series = slice_by_date(&series, start, end)?;
    }
    if !args.daily {
        series = resample_weekly(&series)?;
    }
    Ok(series)
}

fn data_manifest(m: &mut RunManifest, args: &DataArgs) -> qfin::Result<()> {
    m.input_file(&args.input)?;
    m.param("input", args.input.display().to_string());
    if let Some(c) = &args.column {
        m.param("column", c);
    }
    if let Some(d) = args.start {
        m.param("start", d.to_string());
    }
    if let Some(d) = args.end {
        m.param("end", d.to_string());
    }
    m.param("daily", args.daily);
    Ok(())
}

fn parse_lags(text: &str) -> qfin::Result<Vec<usize>> {
    let lags: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| qfin::Error::Parameter(format!("unparseable lag list '{text}'")))?;
    if lags.is_empty() {
        return Err(qfin::Error::Parameter("need at least one lag".into()));
    }
    Ok(lags)
}

fn parse_range(lo: Option<f64>, hi: Option<f64>) -> qfin::Result<Option<(f64, f64)>> {
    match (lo, hi) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => Err(qfin::Error::Parameter(
            "range-lo and range-hi must be given together".into(),
        )),
    }
}

fn parse_delta(spec: &str) -> qfin::Result<DeltaSchedule> {
    if let Some(v) = spec.strip_prefix("constant:") {
        let v = v
            .parse::<f64>()
            .map_err(|_| qfin::Error::Parameter(format!("bad constant schedule '{spec}'")))?;
        return Ok(DeltaSchedule::Constant(v));
    }
    if let Some(rest) = spec.strip_prefix("sinusoid:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 2 {
            let amplitude = parts[0].parse::<f64>();
            let period = parts[1].parse::<f64>();
            if let (Ok(amplitude), Ok(period)) = (amplitude, period) {
                return Ok(DeltaSchedule::Sinusoid { amplitude, period });
            }
        }
        return Err(qfin::Error::Parameter(format!(
            "bad sinusoid schedule '{spec}' (expected sinusoid:<amp>:<period>)"
        )));
    }
    let text = fs::read_to_string(spec)?;
    Ok(DeltaSchedule::Table(read_delta_schedule_csv(&text)?))
}

/// Read a wave-state CSV and check the grid is uniform.
fn load_wave(path: &Path, params: ModelParams) -> qfin::Result<WaveState> {
    let (x, psi) = read_wave_csv(&fs::read_to_string(path)?)?;
    let dx = x[1] - x[0];
    if !(dx > 0.0) {
        return Err(qfin::Error::Format("wave grid must be increasing".into()));
    }
    for w in x.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1.0) {
            return Err(qfin::Error::Format("wave grid must be uniform".into()));
        }
    }
    Ok(WaveState::new(x[0], dx, psi, params)?)
}

fn diffusion_or_estimate(
    flag: Option<f64>,
    series: &CoordinateSeries,
    manifest: &mut RunManifest,
) -> qfin::Result<f64> {
    let d = match flag {
        Some(d) => d,
        None => estimate_diffusion(series, 1)?,
    };
    manifest.param("diffusion", d);
    manifest.param("diffusion_estimated", flag.is_none());
    Ok(d)
}

fn finish(manifest: &mut RunManifest, out: &Path, files: &[(String, String)]) -> qfin::Result<()> {
    for (name, contents) in files {
        write_atomic(&out.join(name), contents.as_bytes())?;
        manifest.outputs.push(name.clone());
    }
    let path = manifest.write(out)?;
    println!("wrote {} files to {} ({})", files.len(), out.display(), path.display());
    Ok(())
}

fn run(command: Command, out: &Path) -> qfin::Result<()> {
    match command {
        Command::Ingest { data } => {
            let mut m = RunManifest::new("ingest");
            data_manifest(&mut m, &data)?;
            let series = load_data(&data)?;
            m.param("rows", series.len());
            m.param("rejected_rows", series.rejected);
            finish(&mut m, out, &[("ingest_series.csv".into(), price_series_csv(&series))])
        }
        Command::Scaling { data, lags, window, step } => {
            let mut m = RunManifest::new("scaling");
            data_manifest(&mut m, &data)?;
            let lags = parse_lags(&lags)?;
            m.param("lags", &lags);
            let series = load_data(&data)?;
            let coords = qfin::market_data::to_log_coordinates(&series)?;
            let report = estimate_hurst(&coords, &lags)?;
            let mut files = vec![("scaling_report.json".into(), scaling_json(&report))];
            if let Some(window) = window {
                m.param("window", window);
                m.param("step", step);
                let ds = rolling_diffusion(&coords, window, step)?;
                m.param("mean_diffusion", ds.mean);
                files.push(("scaling_diffusion.csv".into(), diffusion_series_csv(&ds)));
            }
            m.param("hurst", report.hurst);
            m.param("diffusion", report.diffusion);
            m.param("degenerate", report.degenerate);
            finish(&mut m, out, &files)
        }
        Command::Density { data, bins, range_lo, range_hi } => {
            let mut m = RunManifest::new("density");
            data_manifest(&mut m, &data)?;
            m.param("bins", bins);
            let range = parse_range(range_lo, range_hi)?;
            if let Some((lo, hi)) = range {
                m.param("range_lo", lo);
                m.param("range_hi", hi);
            }
            let series = load_data(&data)?;
            let coords = qfin::market_data::to_log_coordinates(&series)?;
            let grid = build_density(&coords, bins, range)?;
            m.param("samples", coords.len());
            m.param("sparse", grid.sparse);
            finish(&mut m, out, &[("density.csv".into(), density_csv(&grid))])
        }
        Command::Potential { data, bins, range_lo, range_hi, mass, diffusion } => {
            let mut m = RunManifest::new("potential");
            data_manifest(&mut m, &data)?;
            m.param("bins", bins);
            m.param("mass", mass);
            let range = parse_range(range_lo, range_hi)?;
            let series = load_data(&data)?;
            let coords = qfin::market_data::to_log_coordinates(&series)?;
            let d = diffusion_or_estimate(diffusion, &coords, &mut m)?;
            let grid = build_density(&coords, bins, range)?;
            let profile = extract_potential(&grid, ModelParams::new(mass, d)?)?;
            finish(&mut m, out, &[
                ("potential.csv".into(), potential_csv(&profile)),
                ("potential.json".into(), potential_json(&profile)),
                ("potential_density.csv".into(), density_csv(&grid)),
            ])
        }
        Command::Solve { input, mass, diffusion, count } => {
            let mut m = RunManifest::new("solve");
            m.input_file(&input)?;
            m.param("input", input.display().to_string());
            m.param("mass", mass);
            m.param("diffusion", diffusion);
            m.param("count", count);
            let (x, phi) = read_potential_csv(&fs::read_to_string(&input)?)?;
            let dx = x[1] - x[0];
            let params = ModelParams::new(mass, diffusion)?;
            let sols = spectrum(&phi, dx, params, count)?;
            let mut files = vec![("solve_eigen.json".into(), eigen_json(&sols))];
            for s in &sols {
                files.push((format!("solve_state_{}.csv", s.index), eigen_csv(&x, s)));
            }
            finish(&mut m, out, &files)
        }
        Command::Evolve {
            potential, initial, mass, diffusion, dt, steps, generalized, mode, delta_d,
        } => {
            let mut m = RunManifest::new("evolve");
            m.input_file(&potential)?;
            m.param("potential", potential.display().to_string());
            m.param("mass", mass);
            m.param("diffusion", diffusion);
            m.param("dt", dt);
            m.param("steps", steps);
            m.param("generalized", generalized);
            let params = ModelParams::new(mass, diffusion)?;
            let (x, phi) = read_potential_csv(&fs::read_to_string(&potential)?)?;
            let dx = x[1] - x[0];
            let state = match &initial {
                Some(path) => {
                    m.input_file(path)?;
                    m.param("initial", path.display().to_string());
                    load_wave(path, params)?
                }
                None => {
                    let g = ground_state(&phi, dx, params)?;
                    WaveState::from_eigenfunction(x[0], dx, &g.psi, params)?
                }
            };
            if state.len() != phi.len() {
                return Err(qfin::Error::Parameter(format!(
                    "initial state has {} points but the potential has {}",
                    state.len(),
                    phi.len()
                )));
            }
            let mode = match mode.as_str() {
                "full" => Mode::Full,
                "perturbative" => Mode::Perturbative,
                other => {
                    return Err(qfin::Error::Parameter(format!(
                        "mode must be full or perturbative, got '{other}'"
                    )))
                }
            };
            m.param("mode", if mode == Mode::Full { "full" } else { "perturbative" });
            let delta = match &delta_d {
                Some(spec) if generalized => {
                    m.param("delta_d", spec);
                    parse_delta(spec)?
                }
                Some(_) => {
                    return Err(qfin::Error::Parameter(
                        "--delta-d requires --generalized".into(),
                    ))
                }
                None => DeltaSchedule::Constant(0.0),
            };
            // step one at a time so the norm drift is observable
            let mut current = state;
            let mut norms = Vec::with_capacity(steps + 1);
            norms.push(current.norm());
            for _ in 0..steps {
                current = propagate_generalized(&current, &phi, diffusion, &delta, dt, 1, mode)?;
                norms.push(current.norm());
            }
            let report = serde_json::json!({
                "steps": steps,
                "dt": dt,
                "final_time": current.t,
                "final_norm": norms.last(),
                "norm_history": norms,
            })
            .to_string();
            finish(&mut m, out, &[
                ("evolve_final.csv".into(), wave_state_csv(&current)),
                ("evolve_report.json".into(), report),
            ])
        }
        Command::Simulate { generator } => {
            let (m_name, ensemble) = match &generator {
                Generator::Gbm { sigma, mu, steps, dt, paths, seed } => {
                    let mut m = RunManifest::new("simulate");
                    m.param("generator", "gbm");
                    m.param("sigma", sigma);
                    m.param("mu", mu);
                    m.param("steps", steps);
                    m.param("dt", dt);
                    m.param("paths", paths);
                    m.seed = Some(*seed);
                    let mut all = Vec::with_capacity(*paths);
                    let mut t = Vec::new();
                    for p in 0..*paths {
                        let series = gbm_path(*sigma, *mu, *steps, *dt, seed.wrapping_add(p as u64))?;
                        t = series.t().to_vec();
                        all.push(series.x().to_vec());
                    }
                    (m, PathEnsemble { t, paths: all, generator: "gbm".into(), seed: *seed })
                }
                Generator::Fbm { hurst, steps, dt, scale, paths, seed } => {
                    let mut m = RunManifest::new("simulate");
                    m.param("generator", "fbm");
                    m.param("hurst", hurst);
                    m.param("steps", steps);
                    m.param("dt", dt);
                    m.param("scale", scale);
                    m.param("paths", paths);
                    m.seed = Some(*seed);
                    let mut all = Vec::with_capacity(*paths);
                    let mut t = Vec::new();
                    for p in 0..*paths {
                        let series = fbm_path(*hurst, *steps, *dt, *scale, seed.wrapping_add(p as u64))?;
                        t = series.t().to_vec();
                        all.push(series.x().to_vec());
                    }
                    (m, PathEnsemble { t, paths: all, generator: "fbm".into(), seed: *seed })
                }
                Generator::Nelson { initial, paths, steps, dt, mass, diffusion, seed } => {
                    let mut m = RunManifest::new("simulate");
                    m.param("generator", "nelson");
                    m.input_file(initial)?;
                    m.param("initial", initial.display().to_string());
                    m.param("paths", paths);
                    m.param("steps", steps);
                    m.param("dt", dt);
                    m.param("mass", mass);
                    m.param("diffusion", diffusion);
                    m.seed = Some(*seed);
                    let params = ModelParams::new(*mass, *diffusion)?;
                    let state = load_wave(initial, params)?;
                    let drift = DriftField::from_wave(&state);
                    let ens = nelson_sample(&drift, params, *paths, *steps, *dt, *seed)?;
                    (m, ens)
                }
            };
            let mut m = m_name;
            let json = serde_json::json!({
                "generator": ensemble.generator,
                "seed": ensemble.seed,
                "paths": ensemble.paths.len(),
                "samples_per_path": ensemble.t.len(),
                "params": m.params,
            })
            .to_string();
            finish(&mut m, out, &[
                ("simulate_paths.csv".into(), ensemble_csv(&ensemble)),
                ("simulate_paths.json".into(), json),
            ])
        }
        Command::Roundtrip { input, mass, diffusion } => {
            let mut m = RunManifest::new("roundtrip");
            m.input_file(&input)?;
            m.param("input", input.display().to_string());
            m.param("mass", mass);
            m.param("diffusion", diffusion);
            let grid = read_density_csv(&fs::read_to_string(&input)?)?;
            let params = ModelParams::new(mass, diffusion)?;
            let profile = extract_potential(&grid, params)?;
            let sol = ground_state_from_profile(&profile)?;
            // reference amplitude: the (possibly floored) one the profile was
            // extracted from, unit-normalized like the eigenvector
            let floored = if grid.a.iter().all(|&a| a > 0.0) {
                grid.clone()
            } else {
                qfin_core::density::amplitude(&grid, DEFAULT_FLOOR)?
            };
            let norm = (floored.a.iter().map(|a| a * a).sum::<f64>() * floored.dx).sqrt();
            let sign = if sol.psi.iter().zip(&floored.a).map(|(p, a)| p * a).sum::<f64>() >= 0.0 {
                1.0
            } else {
                -1.0
            };
            let gap = sol
                .psi
                .iter()
                .zip(&floored.a)
                .map(|(p, a)| (sign * p - a / norm).abs())
                .fold(0.0f64, f64::max);
            m.param("gap", gap);
            m.param("ground_energy", sol.energy);
            m.param("anchoring_offset", profile.full_offset);
            println!("round-trip L-inf gap: {gap}");
            let report = serde_json::json!({
                "gap": gap,
                "ground_energy": sol.energy,
                "anchoring_offset": profile.full_offset,
                "residual": sol.residual,
            })
            .to_string();
            finish(&mut m, out, &[("roundtrip_report.json".into(), report)])
        }
        Command::Report { data, bins, lags, window, mass, diffusion } => {
            let mut m = RunManifest::new("report");
            data_manifest(&mut m, &data)?;
            m.param("bins", bins);
            m.param("mass", mass);
            let lags = parse_lags(&lags)?;
            m.param("lags", &lags);
            let series = load_data(&data)?;
            m.param("weeks", series.len());
            m.param("rejected_rows", series.rejected);
            let coords = qfin::market_data::to_log_coordinates(&series)?;
            let scaling = estimate_hurst(&coords, &lags)?;
            m.param("hurst", scaling.hurst);
            m.param("fractal_dimension", scaling.fractal_dimension);
            let d = diffusion_or_estimate(diffusion, &coords, &mut m)?;
            let grid = build_density(&coords, bins, None)?;
            let profile = extract_potential(&grid, ModelParams::new(mass, d)?)?;
            let mut files = vec![
                ("report_series.csv".into(), price_series_csv(&series)),
                ("report_scaling.json".into(), scaling_json(&scaling)),
                ("report_density.csv".into(), density_csv(&grid)),
                ("report_potential.csv".into(), potential_csv(&profile)),
                ("report_potential.json".into(), potential_json(&profile)),
            ];
            if let Some(window) = window {
                m.param("window", window);
                let ds = rolling_diffusion(&coords, window, 1)?;
                m.param("mean_diffusion", ds.mean);
                files.push(("report_diffusion.csv".into(), diffusion_series_csv(&ds)));
            }
            finish(&mut m, out, &files)
        }
    }
}
