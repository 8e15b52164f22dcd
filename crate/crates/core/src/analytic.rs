//! Closed-form results used as independent oracles for the integrator.
//!
//! The two-photon start `|0,0,2⟩` with no pump stays in the span of
//! `|0,0,2⟩`, `|1,1,0⟩` and the one-photon states, where the dynamics is
//! solvable exactly for any `γ` and `δ`. The weak continuous pump admits a
//! perturbative solution at `δ = 0`, `γ = 0`.

use crate::error::{Error, Result};
use crate::model::PumpScheme;

/// Two-photon Rabi frequency `Ω = √(δ² + 8u²)`.
pub fn rabi_frequency(delta: f64, u: f64) -> f64 {
    (delta * delta + 8.0 * u * u).sqrt()
}

/// `sin(Ωt)/Ω`, continuous through `Ω = 0`.
fn sin_over(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-6 {
        t * (1.0 - x * x / 6.0)
    } else {
        x.sin() / omega
    }
}

/// Projection of the Hamiltonian on `{|0,0,2⟩, |1,1,0⟩}` in the rotating frame.
pub fn projected_hamiltonian(delta: f64, u: f64) -> [[f64; 2]; 2] {
    let c = 2f64.sqrt() * u;
    [[0.0, c], [c, delta]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// Amplitude on `|0,0,2⟩`.
    pub amp_20: f64,
    /// Amplitude on `|1,1,0⟩`.
    pub amp_11: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonEigensystem {
    pub plus: EigenPair,
    pub minus: EigenPair,
    pub omega: f64,
}

/// Eigenpairs `ψ±` of the projected two-photon Hamiltonian, energies
/// `δ/2 ± Ω/2` measured from `|0,0,2⟩`.
pub fn two_photon_eigensystem(delta: f64, u: f64) -> Result<TwoPhotonEigensystem> {
    if !(u > 0.0) || !delta.is_finite() || !u.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eigensystem needs finite u > 0 and finite delta, got u = {u}, delta = {delta}"
        )));
    }
    let omega = rabi_frequency(delta, u);
    // Ω ∓ δ without cancellation: (Ω − δ)(Ω + δ) = 8u².
    let (om_minus, om_plus) = if delta >= 0.0 {
        (8.0 * u * u / (omega + delta), omega + delta)
    } else {
        (omega - delta, 8.0 * u * u / (omega - delta))
    };
    let norm = 2.0 * omega.sqrt();
    // (a0†)²|0⟩ = √2 |0,0,2⟩.
    let plus = EigenPair {
        energy: 0.5 * (delta + omega),
        amp_20: 2f64.sqrt() * om_minus.sqrt() / norm,
        amp_11: 4.0 * u / (norm * om_minus.sqrt()),
    };
    let minus = EigenPair {
        energy: 0.5 * (delta - omega),
        amp_20: -(2f64.sqrt()) * om_plus.sqrt() / norm,
        amp_11: 4.0 * u / (norm * om_plus.sqrt()),
    };
    Ok(TwoPhotonEigensystem { plus, minus, omega })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormProbabilities {
    /// `P(2_ω0)`
    pub p_20: f64,
    /// `P(1_ω1, 1_ω2)`
    pub p_11: f64,
    /// `P(1_ω0)`
    pub p_10: f64,
    /// `P(1_ω1) = P(1_ω2)`
    pub p_1_single: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Fock probabilities after starting in `|0,0,2⟩` with no pump.
pub fn closed_form_probabilities(
    t: f64,
    u: f64,
    gamma: f64,
    delta: f64,
) -> Result<ClosedFormProbabilities> {
    check_time(t)?;
    let omega = rabi_frequency(delta, u);
    let om2 = omega * omega;
    // u²/Ω²; the coupling-free limit has no |1,1,0⟩ admixture.
    let r = if omega > 0.0 { u * u / om2 } else { 0.0 };
    let decay = (-4.0 * gamma * t).exp();
    let (s, c) = (0.5 * omega * t).sin_cos();
    let p_20 = decay * (c * c + (1.0 - 8.0 * r) * s * s);
    let p_11 = decay * 8.0 * r * s * s;

    let (p_10, p_1_single) = if gamma == 0.0 {
        (0.0, 0.0)
    } else {
        let g2 = 4.0 * gamma * gamma;
        let grow = (2.0 * gamma * t).exp_m1();
        let osc = s * (omega * c + 2.0 * gamma * s);
        let p_10 = 2.0 * decay / (om2 + g2)
            * (grow * (om2 - 4.0 * u * u + g2) + 16.0 * gamma * u * u * r_over(omega, osc));
        let p_1 = 4.0 * decay * r / (om2 + g2) * (om2 * grow - 4.0 * gamma * osc);
        (p_10, p_1)
    };
    Ok(ClosedFormProbabilities {
        p_20,
        p_11,
        p_10,
        p_1_single,
    })
}

/// `x/Ω²` with `x = sin(Ωt/2)(Ω cos(Ωt/2) + 2γ sin(Ωt/2))`, zero in the
/// coupling-free limit where the prefactor `u²` vanishes as well.
fn r_over(omega: f64, x: f64) -> f64 {
    if omega > 0.0 {
        x / (omega * omega)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormOccupations {
    pub n_0: f64,
    /// `N_1 = N_2`.
    pub n_1: f64,
}

/// Mode occupations after starting in `|0,0,2⟩` with no pump.
pub fn closed_form_occupations(
    t: f64,
    u: f64,
    gamma: f64,
    delta: f64,
) -> Result<ClosedFormOccupations> {
    check_time(t)?;
    let omega = rabi_frequency(delta, u);
    let denom = 4.0 * gamma * gamma + omega * omega;
    if denom == 0.0 {
        return Ok(ClosedFormOccupations { n_0: 2.0, n_1: 0.0 });
    }
    let decay = (-4.0 * gamma * t).exp();
    let grow = (2.0 * gamma * t).exp();
    let osc = (omega * t).cos() + 2.0 * gamma * sin_over(omega, t);
    let uu = u * u;
    let n_0 = 2.0 * decay / denom * (grow * (denom - 4.0 * uu) + 4.0 * uu * osc);
    let n_1 = 4.0 * uu * decay / denom * (grow - osc);
    Ok(ClosedFormOccupations { n_0, n_1 })
}

/// Weak continuous resonant pump, `γ = 0`, `δ = 0`, valid for `ft ≪ 1`:
/// `N_1 = N_2` for [`PumpScheme::Pump0`], `N_0` for [`PumpScheme::Pump12`].
pub fn perturbative_occupation(t: f64, f: f64, u: f64, scheme: PumpScheme) -> Result<f64> {
    check_time(t)?;
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbative result needs u > 0, got {u}"
        )));
    }
    let prefactor = match scheme {
        PumpScheme::Pump0 => 1.0,
        PumpScheme::Pump12 => 4.0,
        PumpScheme::None => {
            return Err(Error::InvalidParameter(
                "perturbative result needs a pump".into(),
            ))
        }
    };
    // sin(Ωt/2)/(√2 u t) with Ω = 2√2 u.
    let x = 2f64.sqrt() * u * t;
    let bracket = if x < 1e-4 {
        x * x / 6.0 - x.powi(4) / 120.0
    } else {
        1.0 - x.sin() / x
    };
    Ok(prefactor * f.powi(4) * t * t / (u * u) * bracket * bracket)
}
