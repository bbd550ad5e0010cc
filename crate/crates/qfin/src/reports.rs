//! File formats for the pipeline outputs: plot-ready CSV, JSON reports,
//! and the run manifest that travels with every output. All writes are
//! atomic (temp file + rename) and use plain '.' radix decimal formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qfin_core::inverse::PotentialProfile;
use qfin_core::scaling::{DiffusionSeries, ScalingReport};
use qfin_core::simulate::PathEnsemble;
use qfin_core::solver::{EigenSolution, WaveState};
use qfin_core::DensityGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::market_data::PriceSeries;

/// Provenance record accompanying every output file of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// All resolved parameters, exactly as the run used them.
    pub params: serde_json::Map<String, serde_json::Value>,
    /// SHA-256 digests of every input file.
    pub inputs: Vec<InputDigest>,
    /// Files this run produced (relative to the manifest's directory).
    pub outputs: Vec<String>,
    pub version: String,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: serde_json::Map::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            seed: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(value).expect("parameter serializes"),
        );
        self
    }

    pub fn input_file(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(hasher.finalize()),
        });
        Ok(self)
    }

    /// Write the manifest next to the outputs it describes.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        write_atomic(&path, serde_json::to_string_pretty(self).unwrap().as_bytes())?;
        Ok(path)
    }
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Output directory resolution: explicit flag, else `QFIN_OUT_DIR`, else
/// the current directory.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var("QFIN_OUT_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(".")
}

fn fmt(v: f64) -> String {
    // shortest round-trip decimal; Rust's f64 Display guarantees this
    format!("{v}")
}

pub fn price_series_csv(series: &PriceSeries) -> String {
    let mut out = String::from("date,price\n");
    for (d, p) in series.dates().iter().zip(series.prices()) {
        out.push_str(&format!("{d},{}\n", fmt(*p)));
    }
    out
}

pub fn density_csv(grid: &DensityGrid) -> String {
    let mut out = String::from("x,counts,P,A\n");
    for i in 0..grid.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(grid.x[i]),
            grid.counts[i],
            fmt(grid.p[i]),
            fmt(grid.a[i])
        ));
    }
    out
}

/// Read back a density CSV: either the `x,counts,P,A` layout written by
/// [`density_csv`] or any two-column `x,P` file.
pub fn read_density_csv(text: &str) -> Result<DensityGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| crate::error::Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let x_idx = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("x"))
        .ok_or_else(|| crate::error::Error::Format("no x column".into()))?;
    let p_idx = headers
        .iter()
        .position(|h| {
            let t = h.trim();
            t.eq_ignore_ascii_case("p") || t.eq_ignore_ascii_case("density")
        })
        .ok_or_else(|| crate::error::Error::Format("no P column".into()))?;
    let mut x = Vec::new();
    let mut p = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| crate::error::Error::Format(format!("bad row: {e}")))?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| crate::error::Error::Format("unparseable numeric field".into()))
        };
        x.push(parse(x_idx)?);
        p.push(parse(p_idx)?);
    }
    Ok(DensityGrid::from_density(x, p)?)
}

#[derive(Debug, Serialize)]
pub struct ScalingJson<'a> {
    pub lags: &'a [usize],
    pub hurst: f64,
    pub fractal_dimension: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub diffusion: f64,
    pub epsilon_tau: f64,
    pub degenerate: bool,
}

pub fn scaling_json(report: &ScalingReport) -> String {
    serde_json::to_string_pretty(&ScalingJson {
        lags: &report.lags,
        hurst: report.hurst,
        fractal_dimension: report.fractal_dimension,
        slope: report.slope,
        intercept: report.intercept,
        r_squared: report.r_squared,
        diffusion: report.diffusion,
        epsilon_tau: report.epsilon_tau,
        degenerate: report.degenerate,
    })
    .unwrap()
}

pub fn diffusion_series_csv(series: &DiffusionSeries) -> String {
    let mut out = String::from("t,diffusion,delta\n");
    for i in 0..series.t.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(series.t[i]),
            fmt(series.diffusion[i]),
            fmt(series.delta[i])
        ));
    }
    out
}

pub fn potential_csv(profile: &PotentialProfile) -> String {
    let mut out = String::from("x,phi_minus_E,phi_anchored,Q,U\n");
    for i in 0..profile.x.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(profile.x[i]),
            fmt(profile.phi_minus_e[i]),
            fmt(profile.phi_anchored[i]),
            fmt(profile.q[i]),
            fmt(profile.u[i])
        ));
    }
    out
}

pub fn potential_json(profile: &PotentialProfile) -> String {
    serde_json::json!({
        "mass": profile.provenance.mass,
        "diffusion": profile.provenance.diffusion,
        "dx": profile.provenance.dx,
        "floor_eps": profile.provenance.floor_eps,
        "full_offset": profile.full_offset,
        "x_full": profile.x_full,
        "phi_full": profile.phi_full,
    })
    .to_string()
}

/// Read a potential profile CSV back as `(x, phi)`; accepts the
/// `phi_minus_E` column written by [`potential_csv`] or a plain `phi`.
pub fn read_potential_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| crate::error::Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let x_idx = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("x"))
        .ok_or_else(|| crate::error::Error::Format("no x column".into()))?;
    let phi_idx = headers
        .iter()
        .position(|h| {
            let t = h.trim();
            t.eq_ignore_ascii_case("phi_minus_E")
                || t.eq_ignore_ascii_case("phi")
                || t.eq_ignore_ascii_case("phi_anchored")
        })
        .ok_or_else(|| crate::error::Error::Format("no phi column".into()))?;
    let mut x = Vec::new();
    let mut phi = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| crate::error::Error::Format(format!("bad row: {e}")))?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| crate::error::Error::Format("unparseable numeric field".into()))
        };
        x.push(parse(x_idx)?);
        phi.push(parse(phi_idx)?);
    }
    if x.len() < 2 {
        return Err(crate::error::Error::EmptyInput);
    }
    Ok((x, phi))
}

pub fn eigen_csv(x: &[f64], solution: &EigenSolution) -> String {
    let mut out = String::from("x,re_psi,im_psi,P\n");
    for (xi, psi) in x.iter().zip(&solution.psi) {
        out.push_str(&format!("{},{},0,{}\n", fmt(*xi), fmt(*psi), fmt(psi * psi)));
    }
    out
}

pub fn eigen_json(solutions: &[EigenSolution]) -> String {
    let entries: Vec<serde_json::Value> = solutions
        .iter()
        .map(|s| {
            serde_json::json!({
                "index": s.index,
                "energy": s.energy,
                "residual": s.residual,
            })
        })
        .collect();
    serde_json::to_string_pretty(&entries).unwrap()
}

pub fn wave_state_csv(state: &WaveState) -> String {
    let mut out = String::from("x,re_psi,im_psi,P\n");
    for (xi, c) in state.grid().iter().zip(&state.psi) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(*xi),
            fmt(c.re),
            fmt(c.im),
            fmt(c.norm_sqr())
        ));
    }
    out
}

/// Read a wave state CSV (`x,re_psi,im_psi,...`) back into its parts.
pub fn read_wave_csv(text: &str) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut x = Vec::new();
    let mut psi = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| crate::error::Error::Format(format!("bad row: {e}")))?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| crate::error::Error::Format("unparseable numeric field".into()))
        };
        x.push(parse(0)?);
        psi.push(Complex64::new(parse(1)?, parse(2)?));
    }
    if x.len() < 2 {
        return Err(crate::error::Error::EmptyInput);
    }
    Ok((x, psi))
}

pub fn ensemble_csv(ensemble: &PathEnsemble) -> String {
    let mut out = String::from("path,t,x\n");
    for (id, path) in ensemble.paths.iter().enumerate() {
        for (t, x) in ensemble.t.iter().zip(path) {
            out.push_str(&format!("{id},{},{}\n", fmt(*t), fmt(*x)));
        }
    }
    out
}

/// Two-column `t,delta_D` schedule file.
pub fn read_delta_schedule_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut knots = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| crate::error::Error::Format(format!("bad row: {e}")))?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| crate::error::Error::Format("unparseable numeric field".into()))
        };
        knots.push((parse(0)?, parse(1)?));
    }
    if knots.is_empty() {
        return Err(crate::error::Error::EmptyInput);
    }
    Ok(knots)
}
