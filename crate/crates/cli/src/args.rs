use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "dnls-lab",
    version,
    about = "Numerical experiments for the quintic NLS with a point interaction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GridArgs {
    /// Half width `L` of the grid `[-L, L]`.
    #[arg(long, default_value_t = 20.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 0.01)]
    pub spacing: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground state or fixed-mass minimizer with its conserved quantities.
    GroundState {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        /// Newton-polish the closed form into the discrete soliton.
        #[arg(long)]
        discrete: bool,
        /// Minimize the energy at this `‖u‖₂` instead (needs `mu > 0`).
        #[arg(long)]
        mass: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "out/ground-state")]
        out: PathBuf,
    },
    /// Residuals of the linearized identities, `β` routes and constrained gaps.
    LinopsVerify {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "out/linops")]
        out: PathBuf,
    },
    /// Solves the profile recursion and writes every block.
    ProfileBuild {
        #[arg(long = "K", default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        mu: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "out/profile")]
        out: PathBuf,
    },
    /// Weighted residual of the profile along the approximate law.
    ResidualScan {
        #[arg(long = "K", default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        mu: f64,
        /// Reuse coefficients written by `profile-build`.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
        s: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "out/residual_scan.csv")]
        out: PathBuf,
    },
    /// Samples the vector field of the blow-up law.
    PhasePortrait {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2")]
        lambda_range: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "-0.5,0.5",
            allow_negative_numbers = true
        )]
        b_range: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "41,41")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        band: f64,
        #[arg(long, default_value = "out/portrait.csv")]
        out: PathBuf,
    },
    /// Integrates the blow-up law, by default from the explicit solution.
    LawIntegrate {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 10.0)]
        s0: f64,
        #[arg(long, default_value_t = 1000.0)]
        s1: f64,
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b0: Option<f64>,
        /// Relative step `|ds|/s`.
        #[arg(long, default_value_t = dnls_core::blowup_law::STEP)]
        step: f64,
        /// Keep every n-th state.
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(long, default_value = "out/traj.csv")]
        out: PathBuf,
    },
    /// Runs the PDE from a JSON configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        #[arg(long)]
        dt0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long, default_value = "out/simulate")]
        out: PathBuf,
    },
    /// Decomposes stored snapshots and evaluates the modulation diagnostics.
    ModulationTrack {
        /// Directory with `index.csv` and field files, as written by `simulate`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = dnls_core::modulation::DEFAULT_A)]
        morawetz_a: f64,
        #[arg(long, default_value = "out/mod.csv")]
        out: PathBuf,
    },
    /// Backward run from the final data, tracked against the blow-up law.
    BlowupExperiment {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(
            long = "E0",
            alias = "e0",
            default_value_t = 0.0,
            allow_negative_numbers = true
        )]
        e0: f64,
        #[arg(long, default_value_t = 100.0)]
        s1: f64,
        #[arg(long = "K", default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = dnls_core::experiment::PROFILE_SPACING)]
        profile_spacing: f64,
        #[arg(long)]
        nodes_per_lambda: Option<f64>,
        #[arg(long)]
        domain_lambdas: Option<f64>,
        #[arg(long)]
        dt0: Option<f64>,
        #[arg(long)]
        record_every: Option<usize>,
        #[arg(long, default_value = "out/blowup")]
        out: PathBuf,
    },
    /// Collates manifests and optionally runs acceptance criteria.
    Report {
        /// Directories whose manifests are collated.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        /// Criteria to run, e.g. `1-11` or `1,2,5`.
        #[arg(long)]
        run: Option<String>,
        #[arg(long, default_value = "out/report")]
        out: PathBuf,
    },
}
