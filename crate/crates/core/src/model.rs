//! Model parameters, pulse envelopes and the rotating-frame Hamiltonian.
//!
//! All quantities are in units of the nonlinear coupling `u`: rates and
//! detunings in `u`, times in `1/u`. The frame rotates at the pump
//! frequencies, so only the detunings `Δ_i` and the mixing mismatch `δ`
//! appear. A nonzero `δ` is carried as a static `+δ/2` shift on modes 1
//! and 2, which puts `|1,1,0⟩` at energy `δ` above `|0,0,2⟩`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::{annihilation, number_operator, FockBasis, Mode, SparseOperator};
use crate::liouvillian::MasterEquation;

/// Which modes the coherent pump drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PumpScheme {
    None,
    /// Drive mode 0; pairs scatter into modes 1 and 2.
    Pump0,
    /// Drive modes 1 and 2 with equal amplitude.
    Pump12,
}

impl PumpScheme {
    pub fn pumped_modes(self) -> &'static [Mode] {
        match self {
            PumpScheme::None => &[],
            PumpScheme::Pump0 => &[Mode::Zero],
            PumpScheme::Pump12 => &[Mode::One, Mode::Two],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PumpScheme::None => "none",
            PumpScheme::Pump0 => "pump0",
            PumpScheme::Pump12 => "pump12",
        }
    }
}

impl fmt::Display for PumpScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PumpScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PumpScheme::None),
            "pump0" => Ok(PumpScheme::Pump0),
            "pump12" => Ok(PumpScheme::Pump12),
            other => Err(Error::InvalidParameter(format!(
                "unknown pump scheme `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseShape {
    /// Switched on at t = 0 and held.
    ConstantStep,
    /// Rectangular pulse on `[0, τ]`.
    Rect,
    /// `exp(−t²/τ²)`, peaked at switch-on.
    HalfGaussian,
    /// `exp(−4(t−τ)²/τ²)`, peaked at `t = τ`.
    CenteredGaussian,
}

impl PulseShape {
    pub fn name(self) -> &'static str {
        match self {
            PulseShape::ConstantStep => "constant_step",
            PulseShape::Rect => "rect",
            PulseShape::HalfGaussian => "half_gaussian",
            PulseShape::CenteredGaussian => "centered_gaussian",
        }
    }
}

impl fmt::Display for PulseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PulseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant_step" => Ok(PulseShape::ConstantStep),
            "rect" => Ok(PulseShape::Rect),
            "half_gaussian" => Ok(PulseShape::HalfGaussian),
            "centered_gaussian" => Ok(PulseShape::CenteredGaussian),
            other => Err(Error::InvalidParameter(format!(
                "unknown pulse shape `{other}`"
            ))),
        }
    }
}

/// Pump amplitude `f(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    pub f0: f64,
    pub tau: f64,
}

impl PulseEnvelope {
    pub fn constant(f0: f64) -> Self {
        Self {
            shape: PulseShape::ConstantStep,
            f0,
            tau: 1.0,
        }
    }

    pub fn off() -> Self {
        Self::constant(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0.is_finite() && self.f0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "f0 must be finite and >= 0, got {}",
                self.f0
            )));
        }
        if self.shape != PulseShape::ConstantStep && !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(match self.shape {
            PulseShape::Rect if t > self.tau => 0.0,
            _ => self.smooth_value(t),
        })
    }

    /// Times where `f(t)` jumps. The integrator stops on these so no step
    /// straddles a discontinuity.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            PulseShape::Rect => vec![self.tau],
            _ => Vec::new(),
        }
    }

    /// Value on the branch of a segment free of breakpoints; `mid` is any
    /// interior time of that segment and selects the branch.
    pub(crate) fn segment_value(&self, t: f64, mid: f64) -> f64 {
        match self.shape {
            PulseShape::Rect if mid > self.tau => 0.0,
            _ => self.smooth_value(t),
        }
    }

    fn smooth_value(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::ConstantStep | PulseShape::Rect => self.f0,
            PulseShape::HalfGaussian => self.f0 * (-(t * t) / (self.tau * self.tau)).exp(),
            PulseShape::CenteredGaussian => {
                let x = t - self.tau;
                self.f0 * (-4.0 * x * x / (self.tau * self.tau)).exp()
            }
        }
    }
}

/// Physical parameters of one simulation, in units of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub u: f64,
    pub gamma: f64,
    /// Four-wave-mixing mismatch `δ = ω1 + ω2 − 2ω0`.
    pub delta: f64,
    /// `Δ_i = ω_i − ω_pi`, indexed by [`Mode::index`].
    pub pump_detunings: [f64; 3],
    pub scheme: PumpScheme,
    pub envelope: PulseEnvelope,
    pub n_max: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            u: 1.0,
            gamma: 0.1,
            delta: 0.0,
            pump_detunings: [0.0; 3],
            scheme: PumpScheme::None,
            envelope: PulseEnvelope::off(),
            n_max: 10,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.u, self.gamma, self.delta]
            .iter()
            .chain(&self.pump_detunings)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite model parameter".into()));
        }
        if self.u < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "u must be >= 0, got {}",
                self.u
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.n_max == 0 {
            return Err(Error::CutoffTooSmall(0));
        }
        self.envelope.validate()
    }

    pub fn basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.n_max)
    }

    pub fn rabi_frequency(&self) -> f64 {
        crate::analytic::rabi_frequency(self.delta, self.u)
    }
}

/// Time-independent pieces of `H(t) = H_detune + H_nl + f(t)·Σ pump_ops`.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub detune: SparseOperator,
    pub nonlinear: SparseOperator,
    pub pump_ops: Vec<(Mode, SparseOperator)>,
}

impl HamiltonianParts {
    pub fn basis(&self) -> FockBasis {
        self.detune.basis()
    }

    /// `H_detune + H_nl`.
    pub fn static_part(&self) -> SparseOperator {
        self.detune
            .add(&self.nonlinear)
            .expect("parts share a basis")
    }

    /// `Σ_i (a_i + a_i†)` over pumped modes; zero when undriven.
    pub fn pump_sum(&self) -> SparseOperator {
        self.pump_ops
            .iter()
            .fold(SparseOperator::zero(self.basis()), |acc, (_, op)| {
                acc.add(op).expect("parts share a basis")
            })
    }

    pub fn at_amplitude(&self, f: f64) -> SparseOperator {
        self.static_part()
            .add(&self.pump_sum().scale(C64::new(f, 0.0)))
            .expect("parts share a basis")
    }
}

pub fn build_hamiltonian_parts(spec: &ModelSpec, basis: FockBasis) -> Result<HamiltonianParts> {
    spec.validate()?;
    if basis.n_max() != spec.n_max {
        return Err(Error::DimensionMismatch {
            expected: spec.basis()?.dim(),
            found: basis.dim(),
        });
    }

    let mut detune = SparseOperator::zero(basis);
    for mode in Mode::ALL {
        let mut shift = spec.pump_detunings[mode.index()];
        if mode != Mode::Zero {
            shift += 0.5 * spec.delta;
        }
        if shift != 0.0 {
            detune = detune.add(&number_operator(basis, mode).scale(C64::new(shift, 0.0)))?;
        }
    }

    let a0 = annihilation(basis, Mode::Zero);
    let a1 = annihilation(basis, Mode::One);
    let a2 = annihilation(basis, Mode::Two);
    // u a1† a2† a0² + h.c.
    let pair_creation = a1.adjoint().mul(&a2.adjoint())?.mul(&a0.mul(&a0)?)?;
    let forward = pair_creation.scale(C64::new(spec.u, 0.0));
    let nonlinear = forward.add(&forward.adjoint())?;

    let pump_ops = spec
        .scheme
        .pumped_modes()
        .iter()
        .map(|&mode| {
            let a = annihilation(basis, mode);
            let op = a.add(&a.adjoint()).expect("same basis");
            (mode, op)
        })
        .collect();

    Ok(HamiltonianParts {
        detune,
        nonlinear,
        pump_ops,
    })
}

/// `dρ/dt = −i[H(t), ρ] + γ Σ_i (2 a_i ρ a_i† − a_i†a_i ρ − ρ a_i†a_i)`.
///
/// Builds the block kernel for `rho`'s sector layout on every call; the
/// integrator keeps a prepared [`MasterEquation`] instead.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    t: f64,
    spec: &ModelSpec,
    parts: &HamiltonianParts,
) -> Result<DensityMatrix> {
    if rho.basis() != parts.basis() {
        return Err(Error::DimensionMismatch {
            expected: parts.basis().dim(),
            found: rho.dim(),
        });
    }
    let eq = MasterEquation::new(spec, parts, rho.layout_arc())?;
    let f = spec.envelope.value(t)?;
    let mut out = rho.zeros_like();
    eq.apply(f, rho.data(), out.data_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{total_number, Occupations};

    const E: f64 = std::f64::consts::E;

    #[test]
    fn envelope_values() {
        let rect = PulseEnvelope {
            shape: PulseShape::Rect,
            f0: 1.0,
            tau: 2.6,
        };
        assert_eq!(rect.value(3.0).unwrap(), 0.0);
        assert_eq!(rect.value(2.6).unwrap(), 1.0);
        assert_eq!(rect.value(0.0).unwrap(), 1.0);

        let gauss = PulseEnvelope {
            shape: PulseShape::CenteredGaussian,
            ..rect
        };
        assert_eq!(gauss.value(2.6).unwrap(), 1.0);

        let half = PulseEnvelope {
            shape: PulseShape::HalfGaussian,
            ..rect
        };
        assert!((half.value(2.6).unwrap() - 1.0 / E).abs() < 1e-15);
        assert!((half.value(2.6).unwrap() - 0.36788).abs() < 1e-5);

        assert_eq!(rect.value(-0.1), Err(Error::NegativeTime(-0.1)));
        assert_eq!(PulseEnvelope::constant(0.3).value(100.0).unwrap(), 0.3);
    }

    #[test]
    fn envelope_validation() {
        let bad = PulseEnvelope {
            shape: PulseShape::Rect,
            f0: 1.0,
            tau: 0.0,
        };
        assert!(bad.validate().is_err());
        let bad = PulseEnvelope {
            f0: -1.0,
            ..PulseEnvelope::off()
        };
        assert!(bad.validate().is_err());
        let ok = PulseEnvelope {
            tau: 0.0,
            ..PulseEnvelope::constant(1.0)
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn nonlinear_matrix_element() {
        let spec = ModelSpec {
            n_max: 3,
            ..Default::default()
        };
        let basis = spec.basis().unwrap();
        let parts = build_hamiltonian_parts(&spec, basis).unwrap();
        let pair = basis.index(Occupations::new(1, 1, 0)).unwrap();
        let doublet = basis.index(Occupations::new(0, 0, 2)).unwrap();
        let elem = parts.nonlinear.get(pair, doublet);
        assert!((elem - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(parts.nonlinear.get(doublet, pair), elem.conj());

        let vac = basis.index(Occupations::VACUUM).unwrap();
        assert!(parts.nonlinear.row(vac).next().is_none());
        assert!(parts.pump_ops.is_empty());
    }

    #[test]
    fn pump_operators_per_scheme() {
        let basis = FockBasis::new(2).unwrap();
        for (scheme, modes) in [
            (PumpScheme::Pump0, vec![Mode::Zero]),
            (PumpScheme::Pump12, vec![Mode::One, Mode::Two]),
        ] {
            let spec = ModelSpec {
                n_max: 2,
                scheme,
                envelope: PulseEnvelope::constant(1.0),
                ..Default::default()
            };
            let parts = build_hamiltonian_parts(&spec, basis).unwrap();
            let got: Vec<Mode> = parts.pump_ops.iter().map(|(m, _)| *m).collect();
            assert_eq!(got, modes);
        }
    }

    #[test]
    fn undriven_hamiltonian_conserves_photon_number_and_difference() {
        let spec = ModelSpec {
            n_max: 4,
            delta: 0.7,
            pump_detunings: [0.2, -0.3, 0.5],
            ..Default::default()
        };
        let basis = spec.basis().unwrap();
        let h = build_hamiltonian_parts(&spec, basis)
            .unwrap()
            .at_amplitude(0.0);
        let n = total_number(basis);
        assert_eq!(h.commutator(&n).unwrap().max_abs(), 0.0);
        let diff = number_operator(basis, Mode::One)
            .sub(&number_operator(basis, Mode::Two))
            .unwrap();
        assert_eq!(h.commutator(&diff).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn detuning_split_matches_pair_energy() {
        let spec = ModelSpec {
            n_max: 2,
            delta: 1.3,
            ..Default::default()
        };
        let basis = spec.basis().unwrap();
        let parts = build_hamiltonian_parts(&spec, basis).unwrap();
        let pair = basis.index(Occupations::new(1, 1, 0)).unwrap();
        let doublet = basis.index(Occupations::new(0, 0, 2)).unwrap();
        assert!((parts.detune.get(pair, pair).re - 1.3).abs() < 1e-15);
        assert_eq!(parts.detune.get(doublet, doublet).re, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let spec = ModelSpec {
            gamma: -0.1,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        let spec = ModelSpec {
            n_max: 3,
            ..Default::default()
        };
        let wrong = FockBasis::new(4).unwrap();
        assert!(build_hamiltonian_parts(&spec, wrong).is_err());
    }
}
