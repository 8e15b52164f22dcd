//! Time integration of the master equation.
//!
//! Dormand–Prince 5(4) with FSAL inside each segment and proportional step
//! control on the max-norm of the embedded error estimate. The integrator
//! lands exactly on every output time and on every pulse discontinuity, so
//! no step straddles a jump in `f(t)` and no interpolation is needed. After
//! each accepted step the state is replaced by its Hermitian part.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::density::{Charge, DensityMatrix, SectorLayout};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, Occupations};
use crate::liouvillian::{conserved_layout, MasterEquation};
use crate::model::{build_hamiltonian_parts, ModelSpec};

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Invariant violations beyond this multiple of the tolerance abort a run.
pub const ABORT_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub audit_positivity: bool,
    /// Store the state block diagonally over conserved charges. Off means
    /// one dense block.
    pub use_sectors: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self::with_tolerance(1e-9)
    }
}

impl EvolveOptions {
    pub fn with_tolerance(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            h_init: 1e-3,
            h_min: 1e-12,
            audit_positivity: false,
            use_sectors: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// State handed to observers at each output time.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub t: f64,
    pub rho: &'a DensityMatrix,
    /// Largest `‖ρ − ρ†‖_max` seen before the Hermiticity guard since the
    /// previous output.
    pub hermiticity_residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<R> {
    pub times: Vec<f64>,
    pub records: Vec<R>,
    pub stats: StepStats,
}

impl<R> Trajectory<R> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &R)> {
        self.times.iter().copied().zip(&self.records)
    }
}

/// Layout with every candidate charge; a Fock projector is diagonal in all
/// of them.
fn finest_layout(basis: FockBasis) -> Arc<SectorLayout> {
    Arc::new(SectorLayout::from_charges(basis, &Charge::CANDIDATES))
}

pub fn make_fock_state(basis: FockBasis, occ: Occupations) -> Result<DensityMatrix> {
    DensityMatrix::pure_fock(finest_layout(basis), occ)
}

pub fn vacuum(basis: FockBasis) -> DensityMatrix {
    make_fock_state(basis, Occupations::VACUUM).expect("vacuum is inside every basis")
}

/// Uniform grid `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && dt > 0.0 && t_max.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("t_max = {t_max}, dt = {dt}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(Error::InvalidGrid("empty output grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, starts at {t0}"
            )))
        }
        _ => {}
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Integrates `rho0` and keeps a full snapshot at every output time.
pub fn evolve(
    rho0: &DensityMatrix,
    spec: &ModelSpec,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory<DensityMatrix>> {
    evolve_observed(rho0, spec, t_grid, opts, |snap| Ok(snap.rho.clone()))
}

/// Integrates `rho0` and stores `observe(snapshot)` at every output time.
pub fn evolve_observed<R, F>(
    rho0: &DensityMatrix,
    spec: &ModelSpec,
    t_grid: &[f64],
    opts: &EvolveOptions,
    mut observe: F,
) -> Result<Trajectory<R>>
where
    F: FnMut(&Snapshot<'_>) -> Result<R>,
{
    spec.validate()?;
    validate_grid(t_grid)?;
    let basis = spec.basis()?;
    if rho0.basis() != basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho0.dim(),
        });
    }
    let herm = rho0.hermiticity_residual();
    if herm > HERMITICITY_TOL {
        return Err(Error::InvariantViolation {
            t: 0.0,
            what: "initial hermiticity residual",
            value: herm,
            limit: HERMITICITY_TOL,
        });
    }
    let tr0 = rho0.trace();
    if (tr0 - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvariantViolation {
            t: 0.0,
            what: "initial trace error",
            value: (tr0 - C64::new(1.0, 0.0)).norm(),
            limit: TRACE_TOL,
        });
    }

    let parts = build_hamiltonian_parts(spec, basis)?;
    let layout = if opts.use_sectors {
        Arc::new(conserved_layout(&parts, rho0))
    } else {
        Arc::new(SectorLayout::trivial(basis))
    };
    let rho = rho0.reblock(layout.clone())?;
    let eq = MasterEquation::new(spec, &parts, layout)?;

    let mut stops: Vec<(f64, bool)> = t_grid.iter().map(|&t| (t, true)).collect();
    let t_end = *t_grid.last().unwrap();
    for bp in spec.envelope.breakpoints() {
        if bp > 0.0 && bp < t_end && !t_grid.contains(&bp) {
            stops.push((bp, false));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut stepper = Stepper::new(&eq, rho, opts.clone());
    let mut times = Vec::with_capacity(t_grid.len());
    let mut records = Vec::with_capacity(t_grid.len());

    let mut emit = |stepper: &mut Stepper<'_>, t: f64| -> Result<()> {
        let trace_error = (stepper.rho.trace() - tr0).norm();
        check(t, "trace error", trace_error, TRACE_TOL)?;
        let hermiticity_residual = std::mem::take(&mut stepper.max_herm);
        check(
            t,
            "hermiticity residual",
            hermiticity_residual,
            HERMITICITY_TOL,
        )?;
        let min_eigenvalue = if opts.audit_positivity {
            let m = stepper.rho.min_eigenvalue();
            check(t, "negative eigenvalue", -m, POSITIVITY_TOL)?;
            Some(m)
        } else {
            None
        };
        let snap = Snapshot {
            t,
            rho: &stepper.rho,
            hermiticity_residual,
            trace_error,
            min_eigenvalue,
        };
        records.push(observe(&snap)?);
        times.push(t);
        Ok(())
    };

    emit(&mut stepper, 0.0)?;
    for w in stops.windows(2) {
        let (t0, _) = w[0];
        let (t1, is_output) = w[1];
        stepper.advance(t0, t1)?;
        if is_output {
            emit(&mut stepper, t1)?;
        }
    }

    Ok(Trajectory {
        times,
        records,
        stats: stepper.stats,
    })
}

fn check(t: f64, what: &'static str, value: f64, tol: f64) -> Result<()> {
    let limit = ABORT_FACTOR * tol;
    if value > limit || value.is_nan() {
        return Err(Error::InvariantViolation {
            t,
            what,
            value,
            limit,
        });
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    eq: &'a MasterEquation,
    rho: DensityMatrix,
    opts: EvolveOptions,
    h: f64,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    err_buf: Vec<C64>,
    stats: StepStats,
    max_herm: f64,
}

impl<'a> Stepper<'a> {
    fn new(eq: &'a MasterEquation, rho: DensityMatrix, opts: EvolveOptions) -> Self {
        let len = rho.data().len();
        let zero = || vec![C64::default(); len];
        Self {
            eq,
            h: opts.h_init,
            opts,
            rho,
            k: [zero(), zero(), zero(), zero(), zero(), zero(), zero()],
            y_stage: zero(),
            err_buf: zero(),
            stats: StepStats::default(),
            max_herm: 0.0,
        }
    }

    fn eval(&mut self, stage: usize, t: f64, mid: f64, from_stage: bool) {
        let f = self.eq.envelope().segment_value(t, mid);
        let y = if from_stage {
            &self.y_stage
        } else {
            self.rho.data()
        };
        let (_, rest) = self.k.split_at_mut(stage);
        self.eq.apply_hermitian(f, y, &mut rest[0]);
        self.stats.rhs_evals += 1;
    }

    /// Integrates from `t0` to exactly `t1`; no pulse breakpoint lies inside.
    fn advance(&mut self, t0: f64, t1: f64) -> Result<()> {
        let mid = 0.5 * (t0 + t1);
        let mut t = t0;
        self.eval(0, t, mid, false);
        while t < t1 {
            let remaining = t1 - t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h < self.opts.h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }

            for s in 1..7 {
                let weights: Vec<f64> = A[s][..s].iter().map(|a| a * h).collect();
                combine(&mut self.y_stage, self.rho.data(), &self.k[..s], &weights);
                self.eval(s, t + C[s] * h, mid, true);
            }

            // y_stage now holds the fifth-order solution (last row of A is b).
            let weights: Vec<f64> = E.iter().map(|e| e * h).collect();
            combine(&mut self.err_buf, &[], &self.k, &weights);
            let (rtol, atol) = (self.opts.rtol, self.opts.atol);
            let err = self
                .err_buf
                .iter()
                .zip(self.rho.data())
                .zip(&self.y_stage)
                .map(|((e, y0), y1)| {
                    let scale = atol + rtol * y0.norm_sqr().max(y1.norm_sqr()).sqrt();
                    e.norm_sqr() / (scale * scale)
                })
                .fold(0.0f64, f64::max)
                .sqrt();

            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                self.rho.data_mut().copy_from_slice(&self.y_stage);
                self.max_herm = self.max_herm.max(self.rho.symmetrize());
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step clipped to land on t1 says little about the natural size.
                if !last || h * grow > self.h {
                    self.h = h * grow;
                }
            } else {
                self.stats.rejected += 1;
                let shrink = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
                } else {
                    0.2
                };
                self.h = h * shrink;
            }
        }
        Ok(())
    }
}

const CHUNK: usize = 512;

/// `out = base + Σ_i w_i k_i` (an empty `base` counts as zero), evaluated in
/// cache-sized chunks.
fn combine(out: &mut [C64], base: &[C64], ks: &[Vec<C64>], weights: &[f64]) {
    for (ci, chunk) in out.chunks_mut(CHUNK).enumerate() {
        let lo = ci * CHUNK;
        let hi = lo + chunk.len();
        if base.is_empty() {
            chunk.iter_mut().for_each(|v| *v = C64::default());
        } else {
            chunk.copy_from_slice(&base[lo..hi]);
        }
        for (k, &w) in ks.iter().zip(weights) {
            if w != 0.0 {
                for (v, x) in chunk.iter_mut().zip(&k[lo..hi]) {
                    *v += x * w;
                }
            }
        }
    }
}
