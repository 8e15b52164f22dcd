//! Closed-form values on a time grid.

use std::fmt;
use std::str::FromStr;

use twophoton::{
    closed_form_occupations, closed_form_probabilities, perturbative_occupation,
    two_photon_eigensystem, PumpScheme,
};

use crate::error::{CliError, CliResult};
use crate::scenario::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    /// Fock probabilities of the undriven two-photon start.
    Eq7,
    /// Occupations of the undriven two-photon start.
    Eq8,
    /// Weak-pump `N_1` for the mode-0 pump.
    Eq9,
    /// Weak-pump `N_0` for the pair pump.
    Eq10,
    /// Eigenpairs of the two-photon block; no time grid.
    Eigensystem,
}

impl FromStr for Formula {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "eq7" => Ok(Formula::Eq7),
            "eq8" => Ok(Formula::Eq8),
            "eq9" => Ok(Formula::Eq9),
            "eq10" => Ok(Formula::Eq10),
            "eigensystem" => Ok(Formula::Eigensystem),
            other => Err(CliError::Input(format!(
                "unknown formula `{other}`; expected eq7, eq8, eq9, eq10 or eigensystem"
            ))),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::Eq7 => "eq7",
            Formula::Eq8 => "eq8",
            Formula::Eq9 => "eq9",
            Formula::Eq10 => "eq10",
            Formula::Eigensystem => "eigensystem",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub u: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Pump amplitude for the weak-pump formulas.
    pub f: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            u: 1.0,
            gamma: 0.1,
            delta: 0.0,
            f: 0.01,
        }
    }
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = values
        .into_iter()
        .map(format_number)
        .collect::<Vec<_>>()
        .join(",");
    s.push('\n');
    s
}

pub fn oracle_eval(formula: Formula, p: &OracleParams, t_grid: &[f64]) -> CliResult<String> {
    let mut out = String::new();
    match formula {
        Formula::Eq7 => {
            out.push_str("t,P_0_0_2,P_1_1_0,P_0_0_1,P_1_0_0\n");
            for &t in t_grid {
                let c = closed_form_probabilities(t, p.u, p.gamma, p.delta)?;
                out.push_str(&row([t, c.p_20, c.p_11, c.p_10, c.p_1_single]));
            }
        }
        Formula::Eq8 => {
            out.push_str("t,N0,N1,N2\n");
            for &t in t_grid {
                let c = closed_form_occupations(t, p.u, p.gamma, p.delta)?;
                out.push_str(&row([t, c.n_0, c.n_1, c.n_1]));
            }
        }
        Formula::Eq9 => {
            out.push_str("t,N1,N2\n");
            for &t in t_grid {
                let n = perturbative_occupation(t, p.f, p.u, PumpScheme::Pump0)?;
                out.push_str(&row([t, n, n]));
            }
        }
        Formula::Eq10 => {
            out.push_str("t,N0\n");
            for &t in t_grid {
                out.push_str(&row([
                    t,
                    perturbative_occupation(t, p.f, p.u, PumpScheme::Pump12)?,
                ]));
            }
        }
        Formula::Eigensystem => {
            let e = two_photon_eigensystem(p.delta, p.u)?;
            out.push_str("branch,energy,amp_0_0_2,amp_1_1_0,omega\n");
            for (name, pair) in [("plus", e.plus), ("minus", e.minus)] {
                out.push_str(name);
                out.push(',');
                out.push_str(&row([pair.energy, pair.amp_20, pair.amp_11, e.omega]));
            }
        }
    }
    Ok(out)
}
