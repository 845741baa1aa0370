use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use expint_mhd::harness::{
    divb_series, make_reference, parse_config_text, parse_sweep, run, work_precision, ConfigMap, RunConfig, CSV_HEADER,
};
use expint_mhd::integrators::error_norm;
use expint_mhd::mhd::read_checkpoint;
use expint_mhd::Error;

/// Exponential-integrator MHD runs, references and work-precision sweeps.
#[derive(Parser, Debug)]
#[command(name = "xmhd", version)]
struct Cli {
    /// khi or recon
    #[arg(long)]
    problem: Option<String>,
    /// I..VI or custom
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    /// Final simulation time
    #[arg(long)]
    tf: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// exp-euler | ros-euler | exprb43 | exprb54s4 | epirk5p1 | rk43 | dopri54
    #[arg(long)]
    integrator: Option<String>,
    /// leja | krylov
    #[arg(long)]
    method: Option<String>,
    /// traditional | cost | combined
    #[arg(long)]
    controller: Option<String>,
    #[arg(long = "spectrum-interval")]
    spectrum_interval: Option<String>,
    /// Reference checkpoint for global errors
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// key=value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Work-precision sweep, e.g. "tol=1e-3,1e-4"
    #[arg(long)]
    sweep: Option<String>,
    /// Write a tol=1e-11 reference to --reference (or the output directory) and exit
    #[arg(long = "make-reference")]
    make_reference: bool,
    /// Print max |div B| every this much simulation time instead of a summary row
    #[arg(long = "divb-every")]
    divb_every: Option<f64>,
}

impl Cli {
    fn overrides(&self) -> ConfigMap {
        let mut map = ConfigMap::new();
        let pairs = [
            ("problem", &self.problem),
            ("case", &self.case),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("tf", &self.tf),
            ("tol", &self.tol),
            ("integrator", &self.integrator),
            ("method", &self.method),
            ("controller", &self.controller),
            ("spectrum-interval", &self.spectrum_interval),
            ("reference", &self.reference),
            ("output", &self.output),
            ("seed", &self.seed),
            ("sweep", &self.sweep),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        map
    }
}

fn execute(cli: &Cli) -> expint_mhd::Result<()> {
    let mut map = match &cli.config {
        Some(path) => parse_config_text(&std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?)?,
        None => ConfigMap::new(),
    };
    map.extend(cli.overrides());
    let cfg = RunConfig::from_map(&map)?;

    if cli.make_reference {
        let path = make_reference(&cfg)?;
        println!("{}", path.display());
        return Ok(());
    }
    if let Some(sweep) = map.get("sweep") {
        let tols = parse_sweep(sweep)?;
        let csv = work_precision(&cfg, &tols, &[cfg.scheme], &[cfg.method], &[cfg.controller])?;
        print!("{csv}");
        return Ok(());
    }
    if let Some(every) = cli.divb_every {
        print!("{}", divb_series(&cfg, every)?);
        return Ok(());
    }

    let report = run(&cfg)?;
    let global = match &cfg.reference {
        Some(p) => error_norm(&report.final_state.data, &read_checkpoint(p)?.state.data)?.to_string(),
        None => String::new(),
    };
    let s = &cfg.scenario;
    println!("{}", CSV_HEADER.join(","));
    println!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3},{},{},{},ok,{}",
        s.problem,
        s.case_id,
        cfg.scheme,
        cfg.method,
        cfg.controller,
        cfg.tol,
        s.nx,
        s.ny,
        s.t_final,
        report.accepted,
        report.rejected,
        report.rhs_evals,
        report.phi_iters,
        report.wall_seconds,
        global,
        report.max_divb,
        report.mass_drift,
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    );
    eprintln!("checksum {}", report.checksum);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Abort { .. } | Error::NonFinite { .. })) => {
            eprintln!("xmhd: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("xmhd: {e}");
            ExitCode::from(2)
        }
    }
}
