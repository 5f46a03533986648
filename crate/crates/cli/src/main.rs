//! `upb`: parameter sweeps, dressed-state spectra and the check suite.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage error.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use upb_core::checks::{self, CheckConfig, Status};
use upb_core::model::ModelParams;
use upb_core::spectra;
use upb_core::sweep::{self, ContourScale, Method, Observable, Param, SweepOptions, SweepSpec, SweepTable};
use upb_core::Error;

use config::{Format, Range, RunConfig};

/// Drive strength above which the default truncation is raised.
const STRONG_DRIVE: f64 = 0.5;
const STRONG_DRIVE_N_CUT: usize = 8;

#[derive(Parser)]
#[command(name = "upb", version, about = "Photon blockade in a driven two-mode Jaynes-Cummings cavity with Kerr nonlinearity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate observables over a 1D or 2D parameter grid
    Sweep(SweepArgs),
    /// Dressed-state levels against g, chi or j
    Spectrum(SpectrumArgs),
    /// Run the oracle and invariant checks at a working point
    Check(CheckArgs),
}

/// Model parameters in units of κ; unset values come from --config, then defaults.
#[derive(Args, Default)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chi: Option<f64>,
    /// Drive amplitude Ω
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// CW-CCW mode coupling
    #[arg(long, allow_hyphen_values = true)]
    j: Option<f64>,
    /// Fock levels kept per mode
    #[arg(long)]
    n_cut: Option<usize>,
    /// TOML or JSON run configuration; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ModelArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            delta: self.delta,
            g: self.g,
            chi: self.chi,
            omega: self.omega,
            kappa: self.kappa,
            gamma: self.gamma,
            j: self.j,
            n_cut: self.n_cut,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Parameter on the first axis (delta, g, chi, omega, kappa, gamma, j)
    #[arg(long)]
    param: Option<Param>,
    /// First axis as start:stop:count, endpoints included
    #[arg(long, allow_hyphen_values = true)]
    range: Option<Range>,
    /// Optional second axis parameter
    #[arg(long)]
    param2: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    range2: Option<Range>,
    /// numeric, analytic or both
    #[arg(long)]
    method: Option<Method>,
    /// Comma-separated: g2_cw, g2_analytic, mean_n_cw, p1, p2, poisson_dev
    #[arg(long, value_delimiter = ',')]
    observables: Option<Vec<Observable>>,
    /// Also write contour lines of the first g2 column at this level (2D only)
    #[arg(long)]
    contour: Option<f64>,
    /// Output file; the table goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// g, chi or j
    #[arg(long)]
    vary: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    range: Option<Range>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// numeric, analytic or both
    #[arg(long)]
    method: Option<Method>,
    /// Seed of the randomized closed-form grid
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::Parameter(_)
            | Error::InvalidDimension(_)
            | Error::UnsupportedRegime(_)
            | Error::Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn load(model: &ModelArgs, flags: RunConfig) -> Result<RunConfig, Failure> {
    let flags = model.flags().merged(&flags);
    let file = match &model.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    Ok(file.merged(&flags))
}

fn missing(what: &str) -> Failure {
    Failure::Usage(format!("missing required {what}"))
}

/// Raise the truncation for strong drives unless it was set explicitly.
fn adjust_truncation(cfg: &RunConfig, base: &mut ModelParams, max_omega: f64) {
    if max_omega <= STRONG_DRIVE || base.n_cut >= STRONG_DRIVE_N_CUT {
        return;
    }
    if cfg.n_cut.is_some() {
        eprintln!("warning: Ω up to {max_omega} with n_cut = {} may under-resolve the photon distribution", base.n_cut);
    } else {
        eprintln!("warning: Ω up to {max_omega} > {STRONG_DRIVE}; raising n_cut from {} to {STRONG_DRIVE_N_CUT}", base.n_cut);
        base.n_cut = STRONG_DRIVE_N_CUT;
    }
}

fn emit(cfg: &RunConfig, body: &str) -> Result<Option<PathBuf>, Failure> {
    match cfg.output_path() {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Compute(format!("cannot create {}: {e}", dir.display())))?;
            }
            std::fs::write(&path, body).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", path.display())))?;
            Ok(Some(path))
        }
        None => {
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| Failure::Compute(e.to_string()))?;
            Ok(None)
        }
    }
}

fn provenance(cfg: &RunConfig) -> Vec<String> {
    vec![format!("config: {}", serde_json::to_string(cfg).expect("config serializes"))]
}

fn serialize(table: &SweepTable, cfg: &RunConfig) -> String {
    match cfg.output_format() {
        Format::Csv => table.to_csv(&provenance(cfg)),
        Format::Json => table.to_json(Some(cfg)),
    }
}

fn summarize(table: &SweepTable) -> Vec<String> {
    let mut lines = vec![format!(
        "{} points, {} failed, n_cut = {}",
        table.metadata.points, table.metadata.failed, table.metadata.n_cut
    )];
    let axes: Vec<&str> = table.spec.axes().iter().map(|a| a.param.name()).collect();
    for col in ["g2_cw", "g2_analytic"] {
        let Ok(Some((at, v))) = table.min_of(col) else { continue };
        let pos: Vec<String> = axes.iter().zip(&at).map(|(a, x)| format!("{a} = {x:.6}")).collect();
        lines.push(format!("min {col} = {v:.6e} at {}", pos.join(", ")));
        if !table.is_2d() {
            if let Ok(dips) = sweep::find_minima(table, col) {
                let d: Vec<String> = dips.iter().map(|m| format!("{:.4}", m.position)).collect();
                lines.push(format!("{col} dips at {} = [{}]", axes[0], d.join(", ")));
            }
        }
    }
    lines
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let flags = RunConfig {
        param: a.param,
        range: a.range,
        param2: a.param2,
        range2: a.range2,
        method: a.method,
        observables: a.observables,
        contour: a.contour,
        out: a.out,
        format: a.format,
        jobs: a.jobs,
        ..Default::default()
    };
    let cfg = load(&a.model, flags)?;
    let param = cfg.param.ok_or_else(|| missing("--param"))?;
    let range = cfg.range.ok_or_else(|| missing("--range"))?;
    let mut base = cfg.params();
    let axis1 = range.axis(param);
    let axis2 = match (cfg.param2, cfg.range2) {
        (Some(p), Some(r)) => Some(r.axis(p)),
        (None, None) => None,
        _ => return Err(Failure::Usage("--param2 and --range2 go together".into())),
    };
    let mut max_omega = base.omega_drv;
    for ax in std::iter::once(&axis1).chain(axis2.as_ref()) {
        if ax.param == Param::Omega {
            max_omega = ax.start.abs().max(ax.stop.abs());
        }
    }
    adjust_truncation(&cfg, &mut base, max_omega);

    let spec = SweepSpec {
        base,
        axis1,
        axis2,
        observables: cfg.observables.clone().unwrap_or_default(),
        method: cfg.method.unwrap_or_default(),
    };
    let opts = SweepOptions { jobs: cfg.jobs.unwrap_or(0), tolerances: cfg.tolerances() };
    let table = sweep::run_sweep_with(&spec, &opts)?;
    let written = emit(&cfg, &serialize(&table, &cfg))?;

    let mut summary = summarize(&table);
    if let Some(level) = cfg.contour {
        let col = ["g2_cw", "g2_analytic"].into_iter().find(|c| table.column_index(c).is_ok());
        let col = col.ok_or_else(|| Failure::Usage("--contour needs a g2 observable".into()))?;
        let lines = sweep::extract_contour(&table, col, level, ContourScale::Log10)?;
        let body = serde_json::to_string_pretty(&serde_json::json!({
            "observable": col,
            "level": level,
            "axes": table.spec.axes().iter().map(|a| a.param.name()).collect::<Vec<_>>(),
            "polylines": lines,
        }))
        .expect("contours serialize");
        let path = match &written {
            Some(p) => p.with_extension("contour.json"),
            None => PathBuf::from("contour.json"),
        };
        std::fs::write(&path, body).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", path.display())))?;
        summary.push(format!("{col} = {level} contour: {} polylines written to {}", lines.len(), path.display()));
    }
    if let Some(path) = written {
        summary.push(format!("wrote {}", path.display()));
    }
    for line in summary {
        // keep stdout clean when it carries the table
        if cfg.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<(), Failure> {
    let flags = RunConfig { vary: a.vary, range: a.range, out: a.out, format: a.format, ..Default::default() };
    let cfg = load(&a.model, flags)?;
    let vary = cfg.vary.ok_or_else(|| missing("--vary"))?;
    if !matches!(vary, Param::G | Param::Chi | Param::J) {
        return Err(Failure::Usage(format!("--vary takes g, chi or j, not {vary}")));
    }
    let range = cfg.range.ok_or_else(|| missing("--range"))?;
    let axis = range.axis(vary);
    axis.validate()?;
    let base = cfg.params();

    let mut columns = vec![vary.name().to_owned()];
    columns.extend((0..5).map(|k| format!("two_photon_{k}")));
    columns.extend((0..3).map(|k| format!("single_{k}")));
    columns.push("kerr_pair".into());
    let rows: Vec<Vec<f64>> = axis
        .values()
        .into_iter()
        .map(|v| {
            let mut p = base;
            vary.set(&mut p, v);
            let mut row = vec![v];
            row.extend(spectra::two_photon_eigenvalues(p.g, p.chi, 0.0).levels);
            row.extend(spectra::single_excitation_levels(p.g, p.j_coupling, 0.0).levels);
            row.push(2.0 * p.chi);
            row
        })
        .collect();

    let body = match cfg.output_format() {
        Format::Csv => {
            let mut s = columns.join(",") + "\n";
            for r in &rows {
                s += &r.iter().map(|&v| sweep::format_number(v)).collect::<Vec<_>>().join(",");
                s.push('\n');
            }
            s += "# two_photon_k relative to 2ω (J = 0), single_k relative to ω, kerr_pair = 2χ\n";
            for line in provenance(&cfg) {
                s += &format!("# {line}\n");
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "config": cfg,
            "columns": columns,
            "rows": rows,
        }))
        .expect("spectra serialize"),
    };
    if let Some(path) = emit(&cfg, &body)? {
        println!("{} rows written to {}", rows.len(), path.display());
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<bool, Failure> {
    let flags = RunConfig { method: a.method, seed: a.seed, ..Default::default() };
    let cfg = load(&a.model, flags)?;
    let check = CheckConfig {
        params: cfg.params(),
        method: cfg.method.unwrap_or(Method::Both),
        tolerances: cfg.tolerances(),
        seed: cfg.seed.unwrap_or(CheckConfig::default().seed),
    };
    let outcomes = checks::run_checks(&check)?;
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        let status = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("{status}  {:width$}  {}", o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| o.status == Status::Fail).map(|o| o.name).collect();
    if failed.is_empty() {
        println!("all checks passed");
        Ok(true)
    } else {
        println!("failed: {}", failed.join(", "));
        Ok(false)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Sweep(_) => "sweep",
        Command::Spectrum(_) => "spectrum",
        Command::Check(_) => "check",
    };
    let result = match cli.command {
        Command::Sweep(a) => cmd_sweep(a).map(|()| true),
        Command::Spectrum(a) => cmd_spectrum(a).map(|()| true),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            let sub = cmd.find_subcommand_mut(name).expect("known subcommand");
            let mut sub = sub.clone().bin_name(format!("upb {name}"));
            sub.error(clap::error::ErrorKind::ValueValidation, msg).print().ok();
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
