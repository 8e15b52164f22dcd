//! Two-harmonic damped fits of occupation time series.
//!
//! A series is modelled as `F(t)·[1 + b1 e^{−α1 t} cos(Ωt/2 + φ1) + b2 e^{−α2 t} cos(Ωt + φ2)]`
//! with a smooth, non-oscillating `F`. [`detrend`] estimates `F` with a
//! centered moving average and returns the bracket minus one;
//! [`fit_two_harmonics`] fits the two damped cosines by Levenberg–Marquardt.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const MIN_POINTS: usize = 8;
const PHASE_GRID: [f64; 4] = [0.0, PI / 2.0, -PI / 2.0, PI];

#[derive(Debug, Clone, PartialEq)]
pub struct Detrended {
    /// Interior sample times (a half window away from both ends).
    pub t: Vec<f64>,
    pub series: Vec<f64>,
    pub trend: Vec<f64>,
    pub ratio: Vec<f64>,
}

/// Integral of the piecewise-linear interpolant of `(t, y)` over `[a, b]`,
/// with `t[0] ≤ a ≤ b ≤ t[n−1]`. `cum` holds the trapezoid integral up to each node.
fn integrate(t: &[f64], y: &[f64], cum: &[f64], a: f64, b: f64) -> f64 {
    let primitive = |x: f64| -> f64 {
        let i = match t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p => (p - 1).min(t.len() - 2),
        };
        let dt = t[i + 1] - t[i];
        let s = (x - t[i]).clamp(0.0, dt);
        let slope = (y[i + 1] - y[i]) / dt;
        cum[i] + y[i] * s + 0.5 * slope * s * s
    };
    primitive(b) - primitive(a)
}

fn cumulative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        cum.push(acc);
    }
    cum
}

fn check_series(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: y.len(),
        });
    }
    if t.len() < MIN_POINTS {
        return Err(Error::SeriesTooShort(format!(
            "{} samples, need at least {MIN_POINTS}",
            t.len()
        )));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "series contains non-finite values".into(),
        ));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "sample times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Splits `y` into a trend and an oscillating ratio.
///
/// The trend at `t_i` is the centered moving average, over a window of
/// length `period_hint`, of the linearly interpolated series. For positive
/// series the average is taken relative to the geometric moving average, so
/// exponential and constant envelopes are reproduced exactly. Only samples
/// whose full window lies inside the data are returned. The window should be
/// the longest period present, `4π/Ω` for the two-harmonic model.
pub fn detrend(t: &[f64], y: &[f64], period_hint: f64) -> Result<Detrended> {
    check_series(t, y)?;
    if !(period_hint > 0.0) || !period_hint.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "period_hint must be positive, got {period_hint}"
        )));
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    if t1 - t0 < 3.0 * period_hint {
        return Err(Error::SeriesTooShort(format!(
            "span {} is shorter than three periods of {period_hint}",
            t1 - t0
        )));
    }
    let half = 0.5 * period_hint;
    let slack = 1e-9 * period_hint;
    let interior: Vec<usize> = (0..t.len())
        .filter(|&i| t[i] - half >= t0 - slack && t[i] + half <= t1 + slack)
        .collect();
    if interior.len() < MIN_POINTS {
        return Err(Error::SeriesTooShort(format!(
            "only {} samples lie a half window from both ends",
            interior.len()
        )));
    }
    let window = |i: usize| ((t[i] - half).max(t0), (t[i] + half).min(t1));

    let positive = y.iter().all(|&v| v > 0.0);
    let geometric: Vec<f64> = if positive {
        let log_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let cum = cumulative(t, &log_y);
        (0..t.len())
            .map(|i| {
                let w = half.min(t[i] - t0).min(t1 - t[i]);
                if w <= 0.0 {
                    return y[i];
                }
                (integrate(t, &log_y, &cum, t[i] - w, t[i] + w) / (2.0 * w)).exp()
            })
            .collect()
    } else {
        vec![1.0; t.len()]
    };

    // Near the ends the reference uses the widest symmetric window that fits.
    let scaled: Vec<f64> = y.iter().zip(&geometric).map(|(v, g)| v / g).collect();
    let cum = cumulative(t, &scaled);

    let mut out = Detrended {
        t: Vec::with_capacity(interior.len()),
        series: Vec::with_capacity(interior.len()),
        trend: Vec::with_capacity(interior.len()),
        ratio: Vec::with_capacity(interior.len()),
    };
    for i in interior {
        let (a, b) = window(i);
        let trend = geometric[i] * integrate(t, &scaled, &cum, a, b) / (b - a);
        if !(trend > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "non-positive trend {trend:e} at t = {}",
                t[i]
            )));
        }
        out.t.push(t[i]);
        out.series.push(y[i]);
        out.trend.push(trend);
        out.ratio.push(y[i] / trend - 1.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    HalfOmega,
    Omega,
}

impl fmt::Display for Harmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Harmonic::HalfOmega => "half_omega",
            Harmonic::Omega => "omega",
        })
    }
}

impl FromStr for Harmonic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_omega" => Ok(Harmonic::HalfOmega),
            "omega" => Ok(Harmonic::Omega),
            other => Err(Error::InvalidParameter(format!(
                "unknown harmonic {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub b1: f64,
    pub alpha1: f64,
    pub phi1: f64,
    pub b2: f64,
    pub alpha2: f64,
    pub phi2: f64,
    pub omega_fit: f64,
    /// Sampled `F(t)` when the fit started from a raw series, empty otherwise.
    pub trend: Vec<f64>,
    pub residual_rms: f64,
    pub dominant: Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Fit `Ω` as a seventh parameter, seeded from the spectrum and the given value.
    pub free_omega: bool,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            free_omega: false,
            max_iter: 500,
        }
    }
}

/// Parameters in the order `b1, α1, φ1, b2, α2, φ2, Ω`.
type Params = [f64; 7];

fn model_and_gradient(p: &Params, t: f64, free_omega: bool, grad: Option<&mut [f64]>) -> f64 {
    let [b1, a1, f1, b2, a2, f2, w] = *p;
    let (e1, e2) = ((-a1 * t).exp(), (-a2 * t).exp());
    let (s1, c1) = (0.5 * w * t + f1).sin_cos();
    let (s2, c2) = (w * t + f2).sin_cos();
    if let Some(g) = grad {
        g[0] = e1 * c1;
        g[1] = -t * b1 * e1 * c1;
        g[2] = -b1 * e1 * s1;
        g[3] = e2 * c2;
        g[4] = -t * b2 * e2 * c2;
        g[5] = -b2 * e2 * s2;
        if free_omega {
            g[6] = -0.5 * t * b1 * e1 * s1 - t * b2 * e2 * s2;
        }
    }
    b1 * e1 * c1 + b2 * e2 * c2
}

fn sum_sq(p: &Params, t: &[f64], y: &[f64]) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = model_and_gradient(p, ti, false, None) - yi;
            r * r
        })
        .sum()
}

/// Box constraints: `Ω` inside its range and each decay rate between zero
/// and half its harmonic's angular frequency at the starting `Ω`, beyond
/// which it no longer oscillates.
#[derive(Clone, Copy)]
struct Bounds {
    omega: (f64, f64),
    alpha_max: (f64, f64),
}

impl Bounds {
    fn new(start_omega: f64, omega: (f64, f64)) -> Self {
        Self {
            omega,
            alpha_max: (0.25 * start_omega, 0.5 * start_omega),
        }
    }

    fn limits(&self) -> [(usize, f64, f64); 3] {
        [
            (1, 0.0, self.alpha_max.0),
            (4, 0.0, self.alpha_max.1),
            (6, self.omega.0, self.omega.1),
        ]
    }

    fn project(&self, p: &mut Params) {
        for (a, lo, hi) in self.limits() {
            p[a] = p[a].clamp(lo, hi);
        }
    }

    /// Parameters held at a bound by the descent direction `−jtr`.
    fn pinned(&self, p: &Params, jtr: &DVector<f64>, np: usize) -> Vec<usize> {
        self.limits()
            .into_iter()
            .filter(|&(a, lo, hi)| {
                a < np && ((p[a] <= lo && jtr[a] > 0.0) || (p[a] >= hi && jtr[a] < 0.0))
            })
            .map(|(a, _, _)| a)
            .collect()
    }
}

struct LmOutcome {
    params: Params,
    cost: f64,
    converged: bool,
}

fn levenberg_marquardt(
    start: Params,
    t: &[f64],
    y: &[f64],
    omega_range: Option<(f64, f64)>,
    max_iter: usize,
) -> LmOutcome {
    let free_omega = omega_range.is_some();
    let bounds = Bounds::new(start[6], omega_range.unwrap_or((start[6], start[6])));
    let np = if free_omega { 7 } else { 6 };
    let mut p = start;
    bounds.project(&mut p);
    let mut cost = sum_sq(&p, t, y);
    let mut lambda = 1e-3;
    let mut grad = [0.0; 7];

    for _ in 0..max_iter {
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for (&ti, &yi) in t.iter().zip(y) {
            let r = model_and_gradient(&p, ti, free_omega, Some(&mut grad)) - yi;
            for a in 0..np {
                jtr[a] += grad[a] * r;
                for b in a..np {
                    jtj[(a, b)] += grad[a] * grad[b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        for a in bounds.pinned(&p, &jtr, np) {
            jtj.row_mut(a).fill(0.0);
            jtj.column_mut(a).fill(0.0);
            jtj[(a, a)] = 1.0;
            jtr[a] = 0.0;
        }
        let gnorm = jtr.amax();
        if gnorm <= 1e-15 * (1.0 + cost) {
            return LmOutcome {
                params: p,
                cost,
                converged: true,
            };
        }

        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for a in 0..np {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&jtr));
            let mut trial = p;
            for a in 0..np {
                trial[a] += step[a];
            }
            bounds.project(&mut trial);
            let trial_cost = sum_sq(&trial, t, y);
            if trial_cost.is_finite() && trial_cost < cost {
                let small_step =
                    (0..np).all(|a| (trial[a] - p[a]).abs() <= 1e-12 * (1.0 + p[a].abs()));
                let small_gain = cost - trial_cost <= 1e-14 * cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if small_step || small_gain {
                    return LmOutcome {
                        params: p,
                        cost,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left at any damping: a (local) minimum.
            return LmOutcome {
                params: p,
                cost,
                converged: true,
            };
        }
    }
    LmOutcome {
        params: p,
        cost,
        converged: false,
    }
}

/// Linear least squares for both harmonics at fixed decay rates; returns
/// `(b1, φ1, b2, φ2)`.
fn linear_seed(t: &[f64], y: &[f64], omega: f64, a1: f64, a2: f64) -> Option<(f64, f64, f64, f64)> {
    let mut m = DMatrix::<f64>::zeros(t.len(), 4);
    for (i, &ti) in t.iter().enumerate() {
        let (e1, e2) = ((-a1 * ti).exp(), (-a2 * ti).exp());
        let (s1, c1) = (0.5 * omega * ti).sin_cos();
        let (s2, c2) = (omega * ti).sin_cos();
        m[(i, 0)] = e1 * c1;
        m[(i, 1)] = e1 * s1;
        m[(i, 2)] = e2 * c2;
        m[(i, 3)] = e2 * s2;
    }
    let rhs = DVector::from_column_slice(y);
    let sol = m.svd(true, true).solve(&rhs, 1e-12).ok()?;
    // b cos(x + φ) = b cos φ cos x − b sin φ sin x
    let polar = |c: f64, s: f64| (c.hypot(s), (-s).atan2(c));
    let (b1, p1) = polar(sol[0], sol[1]);
    let (b2, p2) = polar(sol[2], sol[3]);
    Some((b1, p1, b2, p2))
}

fn wrap_phase(x: f64) -> f64 {
    let w = x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn normalize(mut p: Params) -> Params {
    for (b, phi) in [(0, 2), (3, 5)] {
        if p[b] < 0.0 {
            p[b] = -p[b];
            p[phi] += PI;
        }
        p[phi] = wrap_phase(p[phi]);
    }
    p
}

fn harmonic_energy(b: f64, alpha: f64, t0: f64, t1: f64) -> f64 {
    let x = 2.0 * alpha;
    if x * (t1 - t0) < 1e-12 {
        b * b * (t1 - t0)
    } else {
        b * b * ((-x * t0).exp() - (-x * t1).exp()) / x
    }
}

fn starts(t: &[f64], y: &[f64], omega: f64, gamma_scale: f64) -> Vec<Params> {
    let g = if gamma_scale > 0.0 { gamma_scale } else { 0.1 };
    let mut out = Vec::new();
    let base = linear_seed(t, y, omega, g, g);
    for k in [1.0, 3.0, 8.0] {
        if let Some((b1, p1, b2, p2)) = linear_seed(t, y, omega, k * g, k * g) {
            out.push([b1, k * g, p1, b2, k * g, p2, omega]);
        }
    }
    let (b1, b2) = match base {
        Some((b1, _, b2, _)) => (b1, b2),
        None => {
            let amp = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (amp, amp)
        }
    };
    for &p1 in &PHASE_GRID {
        for &p2 in &PHASE_GRID {
            out.push([b1, g, p1, b2, g, p2, omega]);
        }
    }
    out
}

struct Candidate {
    params: Params,
    cost: f64,
    converged: bool,
}

fn best_fixed(t: &[f64], y: &[f64], omega: f64, gamma_scale: f64, opts: &FitOptions) -> Candidate {
    let mut best: Option<Candidate> = None;
    for start in starts(t, y, omega, gamma_scale) {
        let out = levenberg_marquardt(start, t, y, None, opts.max_iter);
        // Strict comparison keeps the lowest start index on ties.
        if best.as_ref().map_or(true, |b| out.cost < b.cost) {
            best = Some(Candidate {
                params: out.params,
                cost: out.cost,
                converged: out.converged,
            });
        }
    }
    best.expect("at least one start")
}

/// Angular frequency of the largest non-DC spectral peak, `None` for a
/// constant series. Samples are resampled onto a uniform grid.
pub fn spectral_peak(t: &[f64], y: &[f64]) -> Option<f64> {
    check_series(t, y).ok()?;
    let n = t.len();
    let span = t[n - 1] - t[0];
    let dt = span / (n - 1) as f64;
    let len = (4 * n).next_power_of_two();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut buf = vec![C64::default(); len];
    let mut j = 0;
    for (k, slot) in buf.iter_mut().take(n).enumerate() {
        let x = t[0] + k as f64 * dt;
        while j + 2 < n && t[j + 1] < x {
            j += 1;
        }
        let s = ((x - t[j]) / (t[j + 1] - t[j])).clamp(0.0, 1.0);
        *slot = C64::new(y[j] + s * (y[j + 1] - y[j]) - mean, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm_sqr()).collect();
    let k = (1..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b]))?;
    if mag[k] == 0.0 {
        return None;
    }
    let shift = if k + 1 < mag.len() {
        let (l, c, r) = (mag[k - 1].sqrt(), mag[k].sqrt(), mag[k + 1].sqrt());
        let denom = l - 2.0 * c + r;
        if denom != 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some(2.0 * PI * (k as f64 + shift) / (len as f64 * dt))
}

/// Fits `b1 e^{−α1 t}cos(Ωt/2 + φ1) + b2 e^{−α2 t}cos(Ωt + φ2)` to `ratio`.
///
/// `omega` is the base frequency. With [`FitOptions::free_omega`] it is only
/// a guess: a single cosine at `w` fits equally well as the `Ω/2` harmonic
/// of `2w` or the `Ω` harmonic of `w`, so `Ω` is searched within a factor
/// `√2` of the guess, and among fits of equal quality the one closest to it
/// is kept. `gamma_scale` sets the initial decay rates. Each decay rate is
/// capped at half its harmonic's frequency.
pub fn fit_two_harmonics(
    t: &[f64],
    ratio: &[f64],
    omega: f64,
    gamma_scale: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_series(t, ratio)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !(gamma_scale >= 0.0) || !gamma_scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma_scale must be non-negative, got {gamma_scale}"
        )));
    }
    let n = t.len() as f64;
    let (t0, t1) = (t[0], t[t.len() - 1]);
    if ratio.iter().all(|&v| v == 0.0) {
        return Ok(FitResult {
            b1: 0.0,
            alpha1: 0.0,
            phi1: 0.0,
            b2: 0.0,
            alpha2: 0.0,
            phi2: 0.0,
            omega_fit: omega,
            trend: Vec::new(),
            residual_rms: 0.0,
            dominant: Harmonic::HalfOmega,
        });
    }
    if ratio.iter().all(|&v| v == ratio[0]) {
        return Err(Error::DegenerateInput("constant non-zero ratio".into()));
    }

    let best = if opts.free_omega {
        let range = (omega / SQRT_2, omega * SQRT_2);
        let mut seeds = vec![omega];
        if let Some(w) = spectral_peak(t, ratio) {
            // The model cannot tell `w` from `2w`; search the octave around the guess.
            let mut w = w;
            while w < range.0 {
                w *= 2.0;
            }
            while w >= range.1 {
                w *= 0.5;
            }
            seeds.push(w);
        }
        let mut fits: Vec<Candidate> = Vec::new();
        for w in seeds {
            let fixed = best_fixed(t, ratio, w, gamma_scale, opts);
            let free = levenberg_marquardt(fixed.params, t, ratio, Some(range), opts.max_iter);
            fits.push(Candidate {
                params: free.params,
                cost: free.cost,
                converged: free.converged,
            });
        }
        let lowest = fits.iter().map(|c| c.cost).fold(f64::INFINITY, f64::min);
        let tied = |c: &Candidate| c.cost <= lowest * 1.01 + 1e-24 * n;
        fits.into_iter()
            .filter(tied)
            .min_by(|a, b| {
                (a.params[6] - omega)
                    .abs()
                    .total_cmp(&(b.params[6] - omega).abs())
            })
            .ok_or_else(|| Error::FitNotConverged { best_rms: f64::NAN })?
    } else {
        best_fixed(t, ratio, omega, gamma_scale, opts)
    };

    let residual_rms = (best.cost / n).sqrt();
    if !best.converged || !residual_rms.is_finite() {
        return Err(Error::FitNotConverged {
            best_rms: residual_rms,
        });
    }
    let p = normalize(best.params);
    let e1 = harmonic_energy(p[0], p[1], t0, t1);
    let e2 = harmonic_energy(p[3], p[4], t0, t1);
    Ok(FitResult {
        b1: p[0],
        alpha1: p[1],
        phi1: p[2],
        b2: p[3],
        alpha2: p[4],
        phi2: p[5],
        omega_fit: p[6],
        trend: Vec::new(),
        residual_rms,
        dominant: if e2 > e1 {
            Harmonic::Omega
        } else {
            Harmonic::HalfOmega
        },
    })
}

/// Detrends a raw occupation series with a `4π/Ω` window and fits the ratio.
///
/// A damped harmonic does not average to zero over one window: a fraction of
/// order `α/Ω` leaks into the trend, which biases fitted phases and decay
/// rates by the same relative order.
pub fn fit_series(
    t: &[f64],
    y: &[f64],
    omega: f64,
    gamma_scale: f64,
    opts: &FitOptions,
) -> Result<(Detrended, FitResult)> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let d = detrend(t, y, 4.0 * PI / omega)?;
    let mut fit = fit_two_harmonics(&d.t, &d.ratio, omega, gamma_scale, opts)?;
    fit.trend = d.trend.clone();
    Ok((d, fit))
}

impl FitResult {
    /// Value of the fitted two-harmonic model at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let p = [
            self.b1,
            self.alpha1,
            self.phi1,
            self.b2,
            self.alpha2,
            self.phi2,
            self.omega_fit,
        ];
        model_and_gradient(&p, t, false, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA: f64 = 2.0 * std::f64::consts::SQRT_2;

    fn grid(t_max: f64, dt: f64) -> Vec<f64> {
        let n = (t_max / dt).round() as usize;
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    fn synth(t: &[f64], p: Params) -> Vec<f64> {
        t.iter()
            .map(|&ti| model_and_gradient(&p, ti, false, None))
            .collect()
    }

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(0.3 - 4.0 * PI) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn exponential_and_constant_have_no_ratio() {
        let t = grid(20.0, 0.05);
        let y: Vec<f64> = t.iter().map(|&ti| 3.0 * (-0.2 * ti).exp()).collect();
        for hint in [1.0, 4.44, 6.0] {
            let d = detrend(&t, &y, hint).unwrap();
            assert!(d.ratio.iter().all(|r| r.abs() < 1e-3), "hint {hint}");
        }
        let c = vec![0.7; t.len()];
        let d = detrend(&t, &c, 4.44).unwrap();
        assert!(d.trend.iter().all(|v| (v - 0.7).abs() < 1e-14));
        assert!(d.ratio.iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn detrend_recovers_bracket() {
        let t = grid(30.0, 0.05);
        let f = |t: f64| 1.5 * (1.0 - (-0.5 * t).exp()) + 0.2;
        let bracket = |t: f64| 0.3 * (-0.3 * t).exp() * (0.5 * OMEGA * t + 1.0).cos();
        let y: Vec<f64> = t.iter().map(|&ti| f(ti) * (1.0 + bracket(ti))).collect();
        let d = detrend(&t, &y, 4.0 * PI / OMEGA).unwrap();
        let rms =
            (d.t.iter()
                .zip(&d.ratio)
                .map(|(&ti, r)| (r - bracket(ti)).powi(2))
                .sum::<f64>()
                / d.t.len() as f64)
                .sqrt();
        assert!(rms < 0.02, "rms {rms}");
    }

    #[test]
    fn detrend_rejects_bad_input() {
        let t = grid(5.0, 0.05);
        let y = vec![1.0; t.len()];
        assert!(matches!(
            detrend(&t, &y, 4.44),
            Err(Error::SeriesTooShort(_))
        ));
        assert!(detrend(&t, &y, 0.0).is_err());
        assert!(matches!(
            detrend(&t[..4], &y[..4], 0.1),
            Err(Error::SeriesTooShort(_))
        ));
        let mut bad = y.clone();
        bad[3] = f64::NAN;
        assert!(detrend(&t, &bad, 1.0).is_err());
        let neg: Vec<f64> = t.iter().map(|_| -1.0).collect();
        assert!(detrend(&t, &neg, 1.0).is_err());
    }

    #[test]
    fn recovers_half_omega_parameters() {
        let t = grid(20.0, 0.05);
        let y = synth(&t, [0.383, 0.3, 1.361, 0.0, 0.0, 0.0, OMEGA]);
        let fit = fit_two_harmonics(&t, &y, OMEGA, 0.1, &FitOptions::default()).unwrap();
        assert!((fit.b1 / 0.383 - 1.0).abs() < 0.01);
        assert!((fit.alpha1 / 0.3 - 1.0).abs() < 0.01);
        assert!((fit.phi1 / 1.361 - 1.0).abs() < 0.01);
        assert!(fit.b2 < 1e-6);
        assert_eq!(fit.dominant, Harmonic::HalfOmega);
    }

    #[test]
    fn recovers_omega_parameters() {
        let t = grid(20.0, 0.05);
        let y = synth(&t, [0.0, 0.0, 0.0, 3.023, 0.8, 1.137, OMEGA]);
        let fit = fit_two_harmonics(&t, &y, OMEGA, 0.1, &FitOptions::default()).unwrap();
        assert!((fit.b2 / 3.023 - 1.0).abs() < 0.01);
        assert!((fit.alpha2 / 0.8 - 1.0).abs() < 0.01);
        assert!((fit.phi2 / 1.137 - 1.0).abs() < 0.01);
        assert!(fit.b1 < 1e-6);
        assert_eq!(fit.dominant, Harmonic::Omega);
    }

    #[test]
    fn zero_and_flat_input() {
        let t = grid(10.0, 0.1);
        let fit =
            fit_two_harmonics(&t, &vec![0.0; t.len()], OMEGA, 0.1, &FitOptions::default()).unwrap();
        assert_eq!((fit.b1, fit.b2, fit.residual_rms), (0.0, 0.0, 0.0));
        assert!(matches!(
            fit_two_harmonics(&t, &vec![0.4; t.len()], OMEGA, 0.1, &FitOptions::default()),
            Err(Error::DegenerateInput(_))
        ));
        assert!(
            fit_two_harmonics(&t, &vec![0.0; t.len()], -1.0, 0.1, &FitOptions::default()).is_err()
        );
    }

    #[test]
    fn free_omega_finds_frequency() {
        let t = grid(20.0, 0.05);
        let y = synth(&t, [0.5, 0.1, 0.4, 0.2, 0.2, -1.0, 2.7]);
        let opts = FitOptions {
            free_omega: true,
            ..Default::default()
        };
        let fit = fit_two_harmonics(&t, &y, 3.0, 0.1, &opts).unwrap();
        assert!((fit.omega_fit - 2.7).abs() < 1e-6, "{}", fit.omega_fit);
        assert!((fit.b1 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn free_omega_stays_in_guess_octave() {
        let t = grid(20.0, 0.05);
        let y = synth(&t, [0.0, 0.0, 0.0, 0.6, 0.1, 0.3, 1.4]);
        let opts = FitOptions {
            free_omega: true,
            ..Default::default()
        };
        let fit = fit_two_harmonics(&t, &y, OMEGA, 0.1, &opts).unwrap();
        assert!((fit.omega_fit - 2.8).abs() < 1e-4, "{fit:?}");
        assert_eq!(fit.dominant, Harmonic::HalfOmega);
        let fit = fit_two_harmonics(&t, &y, 1.5, 0.1, &opts).unwrap();
        assert!((fit.omega_fit - 1.4).abs() < 1e-4, "{fit:?}");
        assert_eq!(fit.dominant, Harmonic::Omega);
    }

    #[test]
    fn decay_rates_are_capped() {
        let t = grid(20.0, 0.05);
        let y: Vec<f64> = t
            .iter()
            .map(|&ti| (-3.0 * ti).exp() + 0.1 * (OMEGA * ti).cos())
            .collect();
        let fit = fit_two_harmonics(&t, &y, OMEGA, 0.1, &FitOptions::default()).unwrap();
        assert!(fit.alpha1 <= 0.25 * OMEGA + 1e-12);
        assert!(fit.alpha2 <= 0.5 * OMEGA + 1e-12);
    }

    #[test]
    fn fit_series_end_to_end() {
        let t = grid(30.0, 0.05);
        let y: Vec<f64> = t
            .iter()
            .map(|&ti| {
                2.0 * (-0.05 * ti).exp()
                    * (1.0 + 0.4 * (-0.15 * ti).exp() * (0.5 * OMEGA * ti + 0.7).cos())
            })
            .collect();
        let (d, fit) = fit_series(&t, &y, OMEGA, 0.1, &FitOptions::default()).unwrap();
        assert_eq!(fit.trend.len(), d.t.len());
        assert_eq!(fit.dominant, Harmonic::HalfOmega);
        assert!((fit.b1 - 0.4).abs() < 0.02, "{fit:?}");
        assert!((fit.phi1 - 0.7).abs() < 0.25, "{fit:?}");
        assert!((fit.alpha1 - 0.15).abs() < 0.015, "{fit:?}");
    }
}
