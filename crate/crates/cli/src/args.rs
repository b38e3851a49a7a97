use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "delaunay4",
    version,
    about = "Emden–Fowler orbits, Floquet spectra and asymptotic fits"
)]
pub struct Cli {
    /// Worker threads (0 = automatic); DELAUNAY4_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Dimension-dependent constants.
    Constants(DimArgs),
    /// Periodic orbits over an a-grid.
    Orbits(OrbitsArgs),
    /// Floquet multipliers, exponents and indicial roots per (a, j).
    Spectrum(SpectrumArgs),
    /// Closed-form indicial roots of the limit operators.
    Indicial(IndicialArgs),
    /// Spectral band membership over a sigma-grid.
    Bands(BandsArgs),
    /// Pohozaev invariants over an a-grid and of the spherical profile.
    Pohozaev(OrbitsArgs),
    /// Samples a profile on a radial or cylinder grid.
    Profile(ProfileArgs),
    /// Recovers (a, T, x0) and decay rates from a sample file.
    Fit(FitArgs),
    /// Fixed battery of consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DimArgs {
    /// Dimension n ≥ 5.
    #[arg(long, default_value_t = 5)]
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Explicit a-values (comma separated; "0.6a0" means 0.6·a0); overrides the grid.
    #[arg(long = "a", value_delimiter = ',')]
    pub a: Vec<String>,
    #[arg(long, default_value = "0.3a0")]
    pub a_min: String,
    #[arg(long, default_value = "a0")]
    pub a_max: String,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = SpacingArg::Linear)]
    pub spacing: SpacingArg,
    /// Admit a < 0.05·a0 (periods and integration spans grow without bound).
    #[arg(long)]
    pub allow_near_spherical: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TolArgs {
    /// Integrator relative tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Largest accepted periodicity residual.
    #[arg(long, default_value_t = 1e-7)]
    pub residual_tol: f64,
    /// Radius of the multiplier cluster around 1.
    #[arg(long, default_value_t = 1e-4)]
    pub cluster_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitsArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Scalar,
    Orthogonal,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Mode indices (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub j: Vec<u32>,
    #[arg(long, value_enum, default_value_t = VariantArg::Scalar)]
    pub variant: VariantArg,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseArg {
    Spherical,
    Cylindrical,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndicialArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    #[arg(long = "case", value_enum, default_value_t = CaseArg::Both)]
    pub case: CaseArg,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub j: Vec<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BandsArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    /// Fowler parameter ("0.6a0" means 0.6·a0).
    #[arg(long = "a", default_value = "0.6a0")]
    pub a: String,
    #[arg(long, default_value_t = 0)]
    pub j: u32,
    #[arg(long, value_enum, default_value_t = VariantArg::Scalar)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 21)]
    pub sigma_count: usize,
    /// Band resolution on |mu|.
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Spherical,
    Fowler,
    Deformed,
    Pmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutArg {
    /// u along a ray, one row per radius.
    Radial,
    /// v(t, θ) in the long format read by `fit`.
    Cylinder,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Inner family of a p-map lift.
    #[arg(long, value_enum, default_value_t = KindArg::Fowler)]
    pub inner: KindArg,
    /// Radial table or cylinder samples; defaults to cylinder for fowler/deformed.
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    #[arg(long = "a", default_value = "0.6a0")]
    pub a: String,
    /// Phase T of the Fowler profile.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t_shift: f64,
    /// Deformation / center point (comma separated, n entries; default 0.1·e1 for deformed, 0 otherwise).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Direction Λ of a p-map lift (comma separated, normalized on input).
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r_max: f64,
    #[arg(long, default_value_t = 100)]
    pub r_count: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t_min: f64,
    #[arg(long, default_value_t = 24.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 2401)]
    pub t_count: usize,
    /// Number of directions on the great circle through x0.
    #[arg(long, default_value_t = 32)]
    pub thetas: usize,
    /// JSON sidecar for cylinder samples (default: <output>.grid.json).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub dim: DimArgs,
    /// Sample CSV with columns t, theta_index, value.
    #[arg(long)]
    pub input: PathBuf,
    /// θ-grid sidecar (default: <input>.grid.json).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Estimate the deformation vector x0 and the refined rate.
    #[arg(long)]
    pub estimate_x0: bool,
    /// Regression window "lo,hi"; overrides the sidecar.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Vec<f64>,
    /// Orbit-table points used to bracket the energy.
    #[arg(long, default_value_t = 19)]
    pub table_count: usize,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelftestArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 20240611)]
    pub seed: u64,
}
