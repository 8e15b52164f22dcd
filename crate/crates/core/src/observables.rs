//! Occupations, zero-delay pair correlations and Fock probabilities.
//!
//! Every quantity here is diagonal in the Fock basis, so extraction only
//! reads the diagonal of the stored blocks.

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::evolve::Snapshot;
use crate::fock::{Mode, Occupations};

/// Below this occupation `g²` is reported as undefined.
pub const DEFAULT_G2_THRESHOLD: f64 = 1e-10;

const IMAG_CORRUPTION: f64 = 1e-8;

fn diagonal_moment(rho: &DensityMatrix, weight: impl Fn(Occupations) -> f64) -> Result<f64> {
    let basis = rho.basis();
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..basis.dim() {
        let w = weight(basis.occupations(i));
        if w != 0.0 {
            let d = rho.diag(i);
            re += w * d.re;
            im += w * d.im;
        }
    }
    if im.abs() > IMAG_CORRUPTION {
        return Err(Error::CorruptedState(format!(
            "diagonal expectation has imaginary part {im:e}"
        )));
    }
    Ok(re)
}

/// `N_i = Tr(a_i† a_i ρ)`.
pub fn occupation(rho: &DensityMatrix, mode: Mode) -> Result<f64> {
    diagonal_moment(rho, |occ| occ.get(mode) as f64)
}

/// `Tr((a_i†)² a_i² ρ) = Σ m(m−1) P(m)`.
pub fn pair_moment(rho: &DensityMatrix, mode: Mode) -> Result<f64> {
    diagonal_moment(rho, |occ| {
        let m = occ.get(mode) as f64;
        m * (m - 1.0)
    })
}

/// `g²_i(0) = Tr((a_i†)² a_i² ρ) / N_i²`, or `None` when `N_i < n_threshold`.
pub fn g2_zero_delay(rho: &DensityMatrix, mode: Mode, n_threshold: f64) -> Result<Option<f64>> {
    let n = occupation(rho, mode)?;
    if n < n_threshold {
        return Ok(None);
    }
    Ok(Some(pair_moment(rho, mode)? / (n * n)))
}

/// `⟨m1,m2,m0|ρ|m1,m2,m0⟩`.
pub fn fock_probability(rho: &DensityMatrix, occ: Occupations) -> Result<f64> {
    let i = rho.basis().index(occ)?;
    Ok(rho.diag(i).re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    /// Occupations indexed by [`Mode::index`].
    pub n: [f64; 3],
    pub g2: [Option<f64>; 3],
    pub probs: Vec<f64>,
    pub trace_error: f64,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: Option<f64>,
}

impl ObservableRecord {
    pub fn occupation(&self, mode: Mode) -> f64 {
        self.n[mode.index()]
    }

    pub fn g2(&self, mode: Mode) -> Option<f64> {
        self.g2[mode.index()]
    }
}

/// Extracts the standard record from an integrator snapshot.
pub fn record(
    snap: &Snapshot<'_>,
    probes: &[Occupations],
    n_threshold: f64,
) -> Result<ObservableRecord> {
    let mut n = [0.0; 3];
    let mut g2 = [None; 3];
    for mode in Mode::ALL {
        n[mode.index()] = occupation(snap.rho, mode)?;
        g2[mode.index()] = g2_zero_delay(snap.rho, mode, n_threshold)?;
    }
    let probs = probes
        .iter()
        .map(|&occ| fock_probability(snap.rho, occ))
        .collect::<Result<_>>()?;
    Ok(ObservableRecord {
        t: snap.t,
        n,
        g2,
        probs,
        trace_error: snap.trace_error,
        hermiticity_residual: snap.hermiticity_residual,
        min_eigenvalue: snap.min_eigenvalue,
    })
}
