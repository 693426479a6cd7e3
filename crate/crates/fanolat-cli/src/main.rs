//! Command-line harness: spectral tables, bound-state reports, decay runs
//! and parameter sweeps, emitted as deterministic CSV/JSON.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fanolat::decay::{self, DecayLawConfig, ResidueFormula};
use fanolat::lattice::{self, Absorber, LatticeError, SimConfig};
use fanolat::model::{self, ModelParams};
use fanolat::spectral::{self, BandSide, BoundStateKind};
use fanolat::Complex64;
use output::{base_meta, fmt_float, Meta, OutputFormat, Table};
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<model::ModelError> for CliError {
    fn from(e: model::ModelError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<spectral::SpectralError> for CliError {
    fn from(e: spectral::SpectralError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::ConfigError(msg) => CliError::Config(msg),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<decay::DecayError> for CliError {
    fn from(e: decay::DecayError) -> Self {
        CliError::Domain(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "fanolat",
    version,
    about = "Spectral analysis and time-domain simulation of a discrete level side-coupled to a semi-infinite tight-binding chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Chain hopping rate (frequency units, > 0)
    #[arg(long, default_value_t = 1.0)]
    kappa0: f64,
    /// Defect coupling rate (> 0)
    #[arg(long = "kappa-a", default_value_t = 0.2)]
    kappa_a: f64,
    /// Attachment site index (>= 1)
    #[arg(long, default_value_t = 12)]
    n0: usize,
    /// Defect level frequency
    #[arg(long = "omega-a", default_value_t = 0.0, allow_negative_numbers = true)]
    omega_a: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.kappa0, self.kappa_a, self.n0, self.omega_a)?)
    }

    fn meta(&self, meta: &mut Meta) {
        meta.push(("kappa0".into(), fmt_float(self.kappa0)));
        meta.push(("kappa_a".into(), fmt_float(self.kappa_a)));
        meta.push(("n0".into(), self.n0.to_string()));
        meta.push(("omega_a".into(), fmt_float(self.omega_a)));
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output file format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

impl OutArgs {
    fn prepare(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out)?;
        Ok(())
    }

    fn path(&self, stem: &str) -> PathBuf {
        self.out
            .join(format!("{stem}.{}", OutputFormat::from(self.format).extension()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the spectral density and level shift over a frequency grid,
    /// one file per attachment-site index
    Spectral {
        #[command(flatten)]
        model: ModelArgs,
        /// Attachment-site indices to tabulate (overrides --n0)
        #[arg(long = "n0-list", value_delimiter = ',')]
        n0_list: Option<Vec<usize>>,
        /// Number of grid points across [-3 kappa0, 3 kappa0]
        #[arg(long, default_value_t = 601)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Report bound states below, above and inside the band
    BoundStates {
        #[command(flatten)]
        model: ModelArgs,
        /// Absolute tolerance for matching omega-a to a resonance frequency
        #[arg(long = "resonance-tol", default_value_t = 1e-9)]
        resonance_tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrate the chain in the time domain and emit the decay trace
    Decay {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Add analytic decay-law overlay columns and comparison metrics
        #[arg(long)]
        analytic: bool,
        /// Emit a site-amplitude grid (t rows, |c_n| columns) at this time stride
        #[arg(long = "site-grid")]
        site_grid: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run reduced decay simulations over a parameter grid and record the
    /// tail survival against the predicted pole weight
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Which parameter the grid varies
        #[arg(long, value_enum, default_value_t = SweepParam::OmegaA)]
        param: SweepParam,
        /// Explicit comma-separated grid values
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Uniform grid lo:hi:count (alternative to --values)
        #[arg(long = "sweep-grid")]
        sweep_grid: Option<String>,
        #[command(flatten)]
        sim: SimArgs,
        /// Number of sweep points integrated concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepParam {
    OmegaA,
    N0,
    KappaA,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Final time of the run
    #[arg(long = "t-max", default_value_t = 200.0)]
    t_max: f64,
    /// Local error tolerance of the step controller
    #[arg(long = "rk-tol", default_value_t = 1e-9)]
    rk_tol: f64,
    /// Number of chain sites, or "auto"
    #[arg(long = "lattice-size", default_value = "auto")]
    lattice_size: String,
    /// Absorbing tail: "auto", "off", or start:strength:power
    #[arg(long, default_value = "auto")]
    absorber: String,
    /// Spacing of recorded samples
    #[arg(long = "sample-dt", default_value_t = 0.1)]
    sample_dt: f64,
}

impl SimArgs {
    fn config(&self, params: &ModelParams, snapshot_stride: Option<f64>) -> Result<SimConfig, CliError> {
        let absorber_auto = match self.absorber.as_str() {
            "auto" => true,
            "off" => false,
            spec => {
                return self.explicit_config(params, parse_absorber(spec)?, snapshot_stride);
            }
        };
        let mut config = SimConfig::auto(params, self.t_max, absorber_auto);
        config.rk_tol = self.rk_tol;
        config.sample_dt = self.sample_dt;
        config.snapshot_stride = snapshot_stride;
        if self.lattice_size != "auto" {
            config.n_sites = self.parse_size()?;
            if absorber_auto {
                let start = config.n_sites - config.n_sites / 4;
                config.absorber = Some(Absorber { start, strength: params.kappa0(), power: 3 });
            }
        }
        Ok(config)
    }

    fn explicit_config(
        &self,
        params: &ModelParams,
        absorber: Absorber,
        snapshot_stride: Option<f64>,
    ) -> Result<SimConfig, CliError> {
        let n_sites = if self.lattice_size == "auto" {
            SimConfig::auto(params, self.t_max, true).n_sites
        } else {
            self.parse_size()?
        };
        Ok(SimConfig {
            n_sites,
            t_max: self.t_max,
            rk_tol: self.rk_tol,
            absorber: Some(absorber),
            sample_dt: self.sample_dt,
            snapshot_stride,
        })
    }

    fn parse_size(&self) -> Result<usize, CliError> {
        self.lattice_size
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("invalid --lattice-size '{}'", self.lattice_size)))
    }
}

fn parse_absorber(spec: &str) -> Result<Absorber, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "invalid --absorber '{spec}': expected auto, off, or start:strength:power"
        )));
    }
    let start = parts[0]
        .parse::<usize>()
        .map_err(|_| CliError::Config(format!("invalid absorber start '{}'", parts[0])))?;
    let strength = parts[1]
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("invalid absorber strength '{}'", parts[1])))?;
    let power = parts[2]
        .parse::<u32>()
        .map_err(|_| CliError::Config(format!("invalid absorber power '{}'", parts[2])))?;
    Ok(Absorber { start, strength, power })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Spectral { model, n0_list, grid, out } => cmd_spectral(model, n0_list, grid, out),
        Command::BoundStates { model, resonance_tol, out } => {
            cmd_bound_states(model, resonance_tol, out)
        }
        Command::Decay { model, sim, analytic, site_grid, out } => {
            cmd_decay(model, sim, analytic, site_grid, out)
        }
        Command::Sweep { model, param, values, sweep_grid, sim, jobs, out } => {
            cmd_sweep(model, param, values, sweep_grid, sim, jobs, out)
        }
    }
}

fn cmd_spectral(
    model: ModelArgs,
    n0_list: Option<Vec<usize>>,
    grid: usize,
    out: OutArgs,
) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Config(format!("--grid must be >= 2, got {grid}")));
    }
    out.prepare()?;
    let list = n0_list.unwrap_or_else(|| vec![model.n0]);
    if list.is_empty() {
        return Err(CliError::Config("--n0-list must not be empty".into()));
    }

    for &n0 in &list {
        let params = ModelParams::new(model.kappa0, model.kappa_a, n0, model.omega_a)?;
        let k0 = params.kappa0();
        let span = 3.0 * k0;
        let edge = params.band_high();

        let mut rows = Vec::with_capacity(grid);
        for j in 0..grid {
            let w = -span + 2.0 * span * j as f64 / (grid - 1) as f64;
            let g = if w.abs() <= edge { spectral::spectral_density(&params, w)? } else { 0.0 };
            let delta = if w.abs() == edge {
                spectral::level_shift_edge(
                    &params,
                    if w > 0.0 { BandSide::Upper } else { BandSide::Lower },
                )
            } else {
                spectral::level_shift(&params, w)?
            };
            rows.push(vec![w / k0, g / k0, delta / k0]);
        }

        let mut meta = base_meta("spectral");
        model.meta(&mut meta);
        if let Some((_, v)) = meta.iter_mut().find(|(k, _)| k == "n0") {
            *v = n0.to_string();
        }
        meta.push(("grid".into(), grid.to_string()));
        let table = Table {
            columns: vec![
                "omega_over_kappa0".into(),
                "g_over_kappa0".into(),
                "delta_over_kappa0".into(),
            ],
            rows,
            meta: &meta,
        };
        table.write(&out.path(&format!("spectral_n0_{n0}")), out.format.into())?;
    }
    println!("wrote {} spectral table(s) to {}", list.len(), out.out.display());
    Ok(())
}

fn cmd_bound_states(model: ModelArgs, resonance_tol: f64, out: OutArgs) -> Result<(), CliError> {
    let params = model.params()?;
    let window = model::outside_bound_state_window(&params);
    let outside = spectral::outside_bound_states(&params)?;

    let resonant =
        model::resonant_bic_index(&params, resonance_tol * params.kappa0()).map(|m| {
            let omega = model::bic_frequencies(&params)[m - 1];
            let w_sqrt = decay::pole_weight_for_mode(&params, m, ResidueFormula::SqrtBandFactor);
            let w_overlap =
                decay::pole_weight_for_mode(&params, m, ResidueFormula::EigenvectorOverlap);
            (m, omega, w_sqrt, w_overlap)
        });

    println!(
        "outside-bound-state window: ({}, {})  omega_a inside: {}",
        fmt_float(window.lower),
        fmt_float(window.upper),
        window.omega_a_inside
    );
    let mut outside_json = Vec::new();
    if outside.is_empty() {
        println!("outside states: none");
    }
    for s in &outside {
        let residual =
            (s.omega - params.omega_a() - spectral::level_shift(&params, s.omega)?).abs();
        let kind = match s.kind {
            BoundStateKind::BelowBand => "below_band",
            BoundStateKind::AboveBand => "above_band",
            BoundStateKind::InContinuum => "in_band",
        };
        println!("outside state: {kind} omega = {} residual = {:.3e}", fmt_float(s.omega), residual);
        outside_json.push(serde_json::json!({
            "kind": kind,
            "omega": fmt_float(s.omega),
            "residual": format!("{residual:.3e}"),
        }));
    }
    let in_band_json = match resonant {
        None => {
            println!("in-band state: none (omega_a off resonance)");
            serde_json::Value::Null
        }
        Some((m, omega, w_sqrt, w_overlap)) => {
            println!(
                "in-band state: omega = {} (m = {m}), weight = {} (sqrt band factor) / {} (eigenvector overlap)",
                fmt_float(omega),
                fmt_float(w_sqrt),
                fmt_float(w_overlap)
            );
            serde_json::json!({
                "omega": fmt_float(omega),
                "m": m,
                "weight_sqrt_band_factor": fmt_float(w_sqrt),
                "weight_eigenvector_overlap": fmt_float(w_overlap),
            })
        }
    };

    out.prepare()?;
    let mut meta = base_meta("bound-states");
    model.meta(&mut meta);
    meta.push(("resonance_tol".into(), fmt_float(resonance_tol)));
    let body = serde_json::json!({
        "window": {
            "lower": fmt_float(window.lower),
            "upper": fmt_float(window.upper),
            "omega_a_inside": window.omega_a_inside,
        },
        "outside_states": outside_json,
        "in_band_state": in_band_json,
    });
    output::write_report(&out.out.join("bound_states.json"), &meta, body)?;
    Ok(())
}

fn cmd_decay(
    model: ModelArgs,
    sim: SimArgs,
    analytic: bool,
    site_grid: Option<f64>,
    out: OutArgs,
) -> Result<(), CliError> {
    let params = model.params()?;
    let config = sim.config(&params, site_grid)?;
    let trace = lattice::integrate(&params, &config)?;

    let analytic_series: Option<Vec<Complex64>> = if analytic {
        let law = DecayLawConfig::default();
        let values: Result<Vec<Complex64>, decay::DecayError> = trace
            .times
            .par_iter()
            .map(|&t| decay::analytic_ca(&params, t, &law))
            .collect();
        Some(values?)
    } else {
        None
    };

    out.prepare()?;
    let mut meta = base_meta("decay");
    model.meta(&mut meta);
    meta.push(("t_max".into(), fmt_float(config.t_max)));
    meta.push(("rk_tol".into(), fmt_float(config.rk_tol)));
    meta.push(("n_sites".into(), config.n_sites.to_string()));
    meta.push((
        "absorber".into(),
        config
            .absorber
            .map(|a| format!("{}:{}:{}", a.start, a.strength, a.power))
            .unwrap_or_else(|| "off".into()),
    ));
    meta.push(("sample_dt".into(), fmt_float(config.sample_dt)));

    let mut columns = vec![
        "t".to_string(),
        "abs_ca".to_string(),
        "re_ca".to_string(),
        "im_ca".to_string(),
        "norm".to_string(),
    ];
    if analytic {
        columns.extend([
            "abs_ca_analytic".to_string(),
            "re_ca_analytic".to_string(),
            "im_ca_analytic".to_string(),
        ]);
    }
    let mut rows = Vec::with_capacity(trace.times.len());
    for (i, &t) in trace.times.iter().enumerate() {
        let c = trace.ca[i];
        let mut row = vec![t, c.norm(), c.re, c.im, trace.norm[i]];
        if let Some(series) = &analytic_series {
            let a = series[i];
            row.extend([a.norm(), a.re, a.im]);
        }
        rows.push(row);
    }
    Table { columns, rows, meta: &meta }.write(&out.path("decay"), out.format.into())?;

    if site_grid.is_some() {
        let n = config.n_sites;
        let mut columns = vec!["t".to_string()];
        columns.extend((1..=n).map(|i| format!("abs_c{i}")));
        let rows = trace
            .snapshots
            .iter()
            .map(|snap| {
                let mut row = Vec::with_capacity(n + 1);
                row.push(snap.t);
                row.extend_from_slice(&snap.site_abs);
                row
            })
            .collect();
        Table { columns, rows, meta: &meta }.write(&out.path("site_grid"), out.format.into())?;
    }

    // report: plateau over the final quarter, plus overlay metrics
    let tail = (0.75 * config.t_max, config.t_max);
    let mut body = serde_json::Map::new();
    let plateau_src: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(trace.ca.iter())
        .filter(|(t, _)| **t >= tail.0)
        .map(|(t, c)| (*t, c.norm()))
        .collect();
    if !plateau_src.is_empty() {
        let mean = plateau_src.iter().map(|(_, a)| a).sum::<f64>() / plateau_src.len() as f64;
        let min = plateau_src.iter().map(|(_, a)| *a).fold(f64::INFINITY, f64::min);
        let max = plateau_src.iter().map(|(_, a)| *a).fold(0.0f64, f64::max);
        body.insert(
            "plateau".into(),
            serde_json::json!({
                "window": [fmt_float(tail.0), fmt_float(tail.1)],
                "mean_abs_ca": fmt_float(mean),
                "min_abs_ca": fmt_float(min),
                "max_abs_ca": fmt_float(max),
            }),
        );
        println!("plateau |c_a| over [{}, {}]: mean {}", tail.0, tail.1, fmt_float(mean));
    }
    if let Some(series) = &analytic_series {
        let times = trace.times.clone();
        let series = series.clone();
        let cmp = decay::compare_traces(
            &trace,
            move |t| {
                let i = times.iter().position(|&x| (x - t).abs() < 1e-12).unwrap();
                series[i]
            },
            (0.0, config.t_max),
            tail,
        )?;
        body.insert(
            "analytic_comparison".into(),
            serde_json::json!({
                "max_abs_err": fmt_float(cmp.max_abs_err),
                "rms_abs_err": fmt_float(cmp.rms_abs_err),
                "compared_points": cmp.compared_points,
                "residue_formula": format!("{:?}", decay::resolved_residue_formula()),
            }),
        );
        println!(
            "analytic overlay: max err {} rms {} over {} points",
            fmt_float(cmp.max_abs_err),
            fmt_float(cmp.rms_abs_err),
            cmp.compared_points
        );
    }
    output::write_report(&out.out.join("decay_report.json"), &meta, body.into())?;
    Ok(())
}

fn parse_sweep_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!("invalid --sweep-grid '{spec}': expected lo:hi:count")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("invalid sweep lower bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("invalid sweep upper bound '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("invalid sweep count '{}'", parts[2])))?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|j| lo + (hi - lo) * j as f64 / (count - 1) as f64).collect())
}

fn cmd_sweep(
    model: ModelArgs,
    param: SweepParam,
    values: Option<Vec<f64>>,
    sweep_grid: Option<String>,
    sim: SimArgs,
    jobs: usize,
    out: OutArgs,
) -> Result<(), CliError> {
    let mut grid = match (values, sweep_grid) {
        (Some(v), None) => v,
        (None, Some(spec)) => parse_sweep_grid(&spec)?,
        (None, None) => return Err(CliError::Config("sweep needs --values or --sweep-grid".into())),
        (Some(_), Some(_)) => {
            return Err(CliError::Config("--values and --sweep-grid are mutually exclusive".into()))
        }
    };
    if grid.is_empty() {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    grid.sort_by(|a, b| a.total_cmp(b));

    let base = model.params()?;
    let make_params = |value: f64| -> Result<ModelParams, CliError> {
        match param {
            SweepParam::OmegaA => Ok(base.with_omega_a(value)),
            SweepParam::KappaA => {
                Ok(ModelParams::new(base.kappa0(), value, base.n0(), base.omega_a())?)
            }
            SweepParam::N0 => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(CliError::Config(format!("n0 sweep value {value} is not a positive integer")));
                }
                Ok(ModelParams::new(base.kappa0(), base.kappa_a(), value as usize, base.omega_a())?)
            }
        }
    };

    // validate configs up front so errors surface before spawning workers
    let runs: Vec<(f64, ModelParams, SimConfig)> = grid
        .iter()
        .map(|&v| {
            let p = make_params(v)?;
            let config = sim.config(&p, None)?;
            Ok((v, p, config))
        })
        .collect::<Result<_, CliError>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Result<Vec<Vec<f64>>, CliError> = pool.install(|| {
        runs.par_iter()
            .map(|(value, p, config)| {
                let trace = lattice::integrate(p, config)?;
                let tail_mean = trace.mean_abs_ca(0.75 * config.t_max, config.t_max);
                let final_abs = trace.ca.last().map(|c| c.norm()).unwrap_or(f64::NAN);
                let (m, w_sqrt, w_overlap) = match model::resonant_bic_index(
                    p,
                    fanolat::model::DEFAULT_RESONANCE_TOL * p.kappa0(),
                ) {
                    Some(m) => (
                        m as f64,
                        decay::pole_weight_for_mode(p, m, ResidueFormula::SqrtBandFactor),
                        decay::pole_weight_for_mode(p, m, ResidueFormula::EigenvectorOverlap),
                    ),
                    None => (0.0, 0.0, 0.0),
                };
                Ok(vec![*value, tail_mean, final_abs, m, w_sqrt, w_overlap])
            })
            .collect()
    });
    let rows = results?;

    out.prepare()?;
    let mut meta = base_meta("sweep");
    model.meta(&mut meta);
    meta.push(("param".into(), format!("{param:?}")));
    meta.push(("t_max".into(), fmt_float(sim.t_max)));
    meta.push(("points".into(), rows.len().to_string()));
    let table = Table {
        columns: vec![
            "value".into(),
            "tail_mean_abs_ca".into(),
            "final_abs_ca".into(),
            "resonant_m".into(),
            "weight_sqrt_band_factor".into(),
            "weight_eigenvector_overlap".into(),
        ],
        rows,
        meta: &meta,
    };
    table.write(&out.path("sweep"), out.format.into())?;
    println!("wrote sweep table ({} points) to {}", grid.len(), out.out.display());
    Ok(())
}
