//! Truncation convergence: the same scenario at several cutoffs.

use rayon::prelude::*;
use twophoton::ObservableRecord;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::scenario::{format_number, run_records};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_max: usize,
    /// Max over output times of `|N_i − N_i^ref|`.
    pub dev_n: [f64; 3],
    /// Max over output times of `|g²_i − g²_i^ref|`; infinite when one run
    /// defines `g²_i` and the other does not.
    pub dev_g2: [f64; 3],
}

impl ConvergenceRow {
    pub fn max_deviation(&self) -> f64 {
        self.dev_n
            .iter()
            .chain(&self.dev_g2)
            .fold(0.0, |m, &d| m.max(d))
    }
}

fn deviations(
    n_max: usize,
    run: &[ObservableRecord],
    reference: &[ObservableRecord],
) -> ConvergenceRow {
    let mut row = ConvergenceRow {
        n_max,
        dev_n: [0.0; 3],
        dev_g2: [0.0; 3],
    };
    for (a, b) in run.iter().zip(reference) {
        for i in 0..3 {
            row.dev_n[i] = row.dev_n[i].max((a.n[i] - b.n[i]).abs());
            let d = match (a.g2[i], b.g2[i]) {
                (Some(x), Some(y)) => (x - y).abs(),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            };
            row.dev_g2[i] = row.dev_g2[i].max(d);
        }
    }
    row
}

/// Runs `cfg` at every cutoff in parallel and compares each run with the
/// largest cutoff. Rows come back in the order of `cutoffs`.
pub fn convergence_sweep(
    cfg: &ScenarioConfig,
    cutoffs: &[usize],
) -> CliResult<Vec<ConvergenceRow>> {
    if cutoffs.len() < 2 {
        return Err(CliError::Input(
            "a convergence sweep needs at least two cutoffs".into(),
        ));
    }
    let reference = *cutoffs.iter().max().expect("non-empty");
    let runs: Vec<Vec<ObservableRecord>> = cutoffs
        .par_iter()
        .map(|&n_max| {
            let mut c = cfg.clone();
            c.model.n_max = n_max;
            run_records(&c)
        })
        .collect::<CliResult<_>>()?;
    let ref_idx = cutoffs
        .iter()
        .position(|&n| n == reference)
        .expect("present");
    Ok(cutoffs
        .iter()
        .zip(&runs)
        .map(|(&n, run)| deviations(n, run, &runs[ref_idx]))
        .collect())
}

pub fn format_convergence(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("n_max,dev_N0,dev_N1,dev_N2,dev_g2_0,dev_g2_1,dev_g2_2\n");
    for r in rows {
        let cols: Vec<String> = std::iter::once(r.n_max.to_string())
            .chain(r.dev_n.iter().chain(&r.dev_g2).map(|&d| format_number(d)))
            .collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}
