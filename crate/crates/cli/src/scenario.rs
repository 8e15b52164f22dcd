//! Running one scenario and writing its trajectory CSV.
//!
//! Header: `t,N0,N1,N2,g2_0,g2_1,g2_2,P_<m1>_<m2>_<m0>...,trace_err[,min_eig]`,
//! restricted to the column groups selected in the config. Numbers are
//! written as `{:.16e}` (17 significant digits); an undefined `g²` is an
//! empty field. Identical configs give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;
use twophoton::observables::{record, DEFAULT_G2_THRESHOLD};
use twophoton::{
    evolve_observed, make_fock_state, uniform_grid, vacuum, EvolveOptions, ObservableRecord,
};

use crate::config::{InitialState, ScenarioConfig};
use crate::error::{CliError, CliResult};

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn evolve_options(cfg: &ScenarioConfig) -> EvolveOptions {
    EvolveOptions {
        audit_positivity: cfg.audit_positivity,
        ..EvolveOptions::with_tolerance(cfg.tol)
    }
}

/// Integrates the scenario and returns one record per output time.
pub fn run_records(cfg: &ScenarioConfig) -> CliResult<Vec<ObservableRecord>> {
    cfg.validate()?;
    let basis = cfg.model.basis()?;
    let rho0 = match cfg.initial {
        InitialState::Vacuum => vacuum(basis),
        InitialState::Fock(occ) => make_fock_state(basis, occ)?,
    };
    let grid = uniform_grid(cfg.t_max, cfg.dt_out)?;
    let traj = evolve_observed(&rho0, &cfg.model, &grid, &evolve_options(cfg), |s| {
        record(s, &cfg.probabilities, DEFAULT_G2_THRESHOLD)
    })?;
    Ok(traj.records)
}

pub fn csv_header(cfg: &ScenarioConfig) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let o = cfg.outputs;
    if o.occupations {
        h.extend(["N0", "N1", "N2"].map(String::from));
    }
    if o.g2 {
        h.extend(["g2_0", "g2_1", "g2_2"].map(String::from));
    }
    if o.probabilities {
        h.extend(cfg.probabilities.iter().map(|occ| format!("P_{occ}")));
    }
    if o.audits {
        h.push("trace_err".into());
        if cfg.audit_positivity {
            h.push("min_eig".into());
        }
    }
    h
}

pub fn format_csv(cfg: &ScenarioConfig, records: &[ObservableRecord]) -> String {
    let mut out = csv_header(cfg).join(",");
    out.push('\n');
    let o = cfg.outputs;
    for r in records {
        let mut row = vec![format_number(r.t)];
        if o.occupations {
            row.extend(r.n.iter().map(|&x| format_number(x)));
        }
        if o.g2 {
            row.extend(
                r.g2.iter()
                    .map(|g| g.map(format_number).unwrap_or_default()),
            );
        }
        if o.probabilities {
            row.extend(r.probs.iter().map(|&p| format_number(p)));
        }
        if o.audits {
            row.push(format_number(r.trace_error));
            if cfg.audit_positivity {
                row.push(r.min_eigenvalue.map(format_number).unwrap_or_default());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Runs the scenario and returns the CSV text.
pub fn run_scenario(cfg: &ScenarioConfig) -> CliResult<String> {
    let records = run_records(cfg)?;
    Ok(format_csv(cfg, &records))
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
