//! Fitting one column of a trajectory CSV.

use twophoton::{fit_series, FitOptions, FitResult};

use crate::error::{CliError, CliResult};
use crate::scenario::format_number;

#[derive(Debug, Clone, PartialEq)]
pub struct FitRequest {
    pub column: String,
    /// Base frequency `Ω`; with `free_omega` only the starting guess.
    pub omega: f64,
    pub free_omega: bool,
    /// Initial decay-rate scale, normally `γ`.
    pub gamma_scale: f64,
    /// Samples before this time are ignored.
    pub t_min: f64,
}

/// Reads `t` and the requested column; rows with an empty field are skipped.
pub fn read_series(csv_text: &str, column: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column `{name}` not found")))
    };
    let (ti, yi) = (find("t")?, find(column)?);
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let (a, b) = (rec.get(ti).unwrap_or(""), rec.get(yi).unwrap_or(""));
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::Input(format!("row {}: `{s}` is not a number", n + 2)))
        };
        t.push(parse(a)?);
        y.push(parse(b)?);
    }
    Ok((t, y))
}

pub fn fit_column(csv_text: &str, req: &FitRequest) -> CliResult<FitResult> {
    let (t, y) = read_series(csv_text, &req.column)?;
    let (t, y): (Vec<f64>, Vec<f64>) = t
        .into_iter()
        .zip(y)
        .filter(|(ti, _)| *ti >= req.t_min)
        .unzip();
    let opts = FitOptions {
        free_omega: req.free_omega,
        ..FitOptions::default()
    };
    let (_, fit) = fit_series(&t, &y, req.omega, req.gamma_scale, &opts).map_err(CliError::from)?;
    Ok(fit)
}

pub fn format_fit(fit: &FitResult) -> String {
    let values = [
        fit.b1,
        fit.alpha1,
        fit.phi1,
        fit.b2,
        fit.alpha2,
        fit.phi2,
        fit.omega_fit,
        fit.residual_rms,
    ];
    let mut row: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
    row.push(fit.dominant.to_string());
    format!(
        "b1,alpha1,phi1,b2,alpha2,phi2,omega_fit,residual_rms,dominant\n{}\n",
        row.join(",")
    )
}
