use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{run, run_observed, RunConfig, RunReport};
use crate::controllers::ControllerMode;
use crate::error::{Error, Result};
use crate::integrators::{error_norm, PhiMethod, SchemeId};
use crate::mhd::{max_abs_div_b, read_checkpoint, write_checkpoint};

pub const CSV_HEADER: [&str; 19] = [
    "scenario",
    "case",
    "scheme",
    "method",
    "controller",
    "tol",
    "nx",
    "ny",
    "t_final",
    "steps_accepted",
    "steps_rejected",
    "rhs_evals",
    "phi_iters",
    "wall_seconds",
    "global_error",
    "max_divb",
    "mass_drift",
    "status",
    "timestamp",
];

pub const REFERENCE_TOL: f64 = 1e-11;

/// Default reference location inside the output directory (or the working directory).
pub fn reference_path(config: &RunConfig) -> PathBuf {
    let s = &config.scenario;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("reference_{}_{}x{}_t{}.bin", s.name(), s.nx, s.ny, s.t_final))
}

/// Runs the scenario at tolerance 1e-11 with EXPRB43, Leja and the combined controller
/// and stores the final state. Returns where it was written.
pub fn make_reference(config: &RunConfig) -> Result<PathBuf> {
    let cfg = RunConfig {
        tol: REFERENCE_TOL,
        scheme: SchemeId::Exprb43,
        method: PhiMethod::Leja,
        controller: ControllerMode::Combined,
        ..config.clone()
    };
    let report = run(&cfg)?;
    let path = config.reference.clone().unwrap_or_else(|| reference_path(config));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_checkpoint(&path, report.t_final, &report.final_state)?;
    Ok(path)
}

fn write_rows(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn row(cfg: &RunConfig, outcome: &Result<RunReport>, reference: &[f64]) -> Vec<String> {
    let s = &cfg.scenario;
    let mut r = vec![
        s.problem.to_string(),
        s.case_id.to_string(),
        cfg.scheme.to_string(),
        cfg.method.to_string(),
        cfg.controller.to_string(),
        cfg.tol.to_string(),
        s.nx.to_string(),
        s.ny.to_string(),
        s.t_final.to_string(),
    ];
    match outcome {
        Ok(rep) => {
            let err = error_norm(&rep.final_state.data, reference).unwrap_or(f64::NAN);
            r.extend([
                rep.accepted.to_string(),
                rep.rejected.to_string(),
                rep.rhs_evals.to_string(),
                rep.phi_iters.to_string(),
                format!("{:.3}", rep.wall_seconds),
                err.to_string(),
                rep.max_divb.to_string(),
                rep.mass_drift.to_string(),
                "ok".into(),
            ]);
        }
        Err(_) => {
            r.extend(["", "", "", "", "", "", "", ""].map(String::from));
            r.push("failed".into());
        }
    }
    r.push(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    r
}

/// One CSV row per (tol, scheme, method, controller) cell, in that nesting order.
///
/// Cells run in parallel. A cell that aborts is recorded with status `failed`.
pub fn work_precision(
    base: &RunConfig,
    tols: &[f64],
    schemes: &[SchemeId],
    methods: &[PhiMethod],
    controllers: &[ControllerMode],
) -> Result<String> {
    let ref_path = base.reference.clone().ok_or_else(|| Error::MissingReference(PathBuf::from("<none>")))?;
    let reference = read_checkpoint(&ref_path)?;
    let (rs, s) = (&reference.state, &base.scenario);
    if (rs.nx, rs.ny) != (s.nx, s.ny) {
        return Err(Error::Config(format!(
            "reference grid {}x{} does not match {}x{}",
            rs.nx, rs.ny, s.nx, s.ny
        )));
    }
    let mut cells = Vec::new();
    for &tol in tols {
        for &scheme in schemes {
            for &method in methods {
                for &controller in controllers {
                    cells.push(RunConfig {
                        tol,
                        scheme,
                        method,
                        controller,
                        ..base.clone()
                    });
                }
            }
        }
    }
    let rows: Vec<Vec<String>> = cells.par_iter().map(|cfg| row(cfg, &run(cfg), &rs.data)).collect();
    let text = write_rows(&rows)?;
    if let Some(dir) = &base.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("work_precision.csv"), &text)?;
    }
    Ok(text)
}

/// Max |∇·B| sampled at t = 0, Δ, 2Δ, … up to the final time.
pub fn divb_series(config: &RunConfig, sample_interval: f64) -> Result<String> {
    if !(sample_interval > 0.0) {
        return Err(Error::Config("sample interval must be positive".into()));
    }
    let params = config.scenario.params;
    let mut text = String::from("t,max_divb\n");
    run_observed(config, Some(sample_interval), |t, u| {
        text.push_str(&format!("{t},{}\n", max_abs_div_b(u, &params)));
    })?;
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("divb.csv"), &text)?;
    }
    Ok(text)
}

/// Reads a reference state and checks it exists; used by the CLI before sweeping.
pub fn require_reference(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingReference(path.to_path_buf()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioSpec;

    fn base(dir: &Path, tf: f64) -> RunConfig {
        let spec = ScenarioSpec::by_name("khi-III").unwrap().with_grid(12, 6).with_t_final(tf);
        RunConfig {
            output_dir: Some(dir.to_path_buf()),
            tol: 1e-3,
            ..RunConfig::new(spec)
        }
    }

    fn strip_timestamps(csv: &str) -> Vec<String> {
        csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    }

    #[test]
    fn reference_at_time_zero_is_initial_state() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base(dir.path(), 0.0);
        let path = make_reference(&cfg).unwrap();
        let c = read_checkpoint(&path).unwrap();
        let (u0, _) = cfg.scenario.initial_state().unwrap();
        assert_eq!(c.state.data, u0.data);
        assert_eq!(error_norm(&c.state.data, &c.state.data).unwrap(), 0.0);
    }

    #[test]
    fn sweep_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path(), 0.005);
        assert!(matches!(
            work_precision(&cfg, &[1e-3], &[SchemeId::Exprb43], &[PhiMethod::Leja], &[ControllerMode::Combined]),
            Err(Error::MissingReference(_))
        ));
        cfg.reference = Some(make_reference(&cfg).unwrap());
        let empty = work_precision(&cfg, &[], &[SchemeId::Exprb43], &[PhiMethod::Leja], &[ControllerMode::Combined]).unwrap();
        assert_eq!(empty.trim_end(), CSV_HEADER.join(","));
        let csv = work_precision(
            &cfg,
            &[1e-3, 1e-3],
            &[SchemeId::Exprb43],
            &[PhiMethod::Leja],
            &[ControllerMode::Combined],
        )
        .unwrap();
        let rows = strip_timestamps(&csv);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].rsplit_once(',').unwrap().1, "ok");
        // wall_seconds is column 14; compare everything else
        let drop_wall = |r: &str| r.split(',').enumerate().filter(|(i, _)| *i != 13).map(|(_, c)| c.to_string()).collect::<Vec<_>>();
        assert_eq!(drop_wall(&rows[1]), drop_wall(&rows[2]));
    }

    #[test]
    fn failing_cell_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base(dir.path(), 0.01);
        cfg.reference = Some(make_reference(&cfg).unwrap());
        cfg.max_steps = 1;
        let csv = work_precision(&cfg, &[1e-3], &[SchemeId::Rk43], &[PhiMethod::Leja], &[ControllerMode::Traditional]).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",failed,"));
    }

    #[test]
    fn divb_series_length_and_start() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base(dir.path(), 0.01);
        let csv = divb_series(&cfg, 0.0025).unwrap();
        let lines: Vec<_> = csv.lines().skip(1).collect();
        assert_eq!(lines.len(), (0.01f64 / 0.0025).floor() as usize + 1);
        let (u0, p) = cfg.scenario.initial_state().unwrap();
        assert_eq!(lines[0], format!("0,{}", max_abs_div_b(&u0, &p)));
    }
}
