//! Flat `key = value` scenario files and the compiled-in figure presets.
//!
//! ```text
//! # two photons in mode 0, no pump
//! scheme = none
//! gamma = 0.1
//! initial = fock 0 0 2
//! probabilities = 0:0:2, 1:1:0
//! ```
//!
//! Unknown keys, repeated keys and malformed values are errors that name the
//! line and the key. Keys that are absent take the defaults of
//! [`ScenarioConfig::default`].

use std::fmt::{self, Write as _};

use twophoton::{FockBasis, ModelSpec, Occupations, PulseEnvelope, PulseShape, PumpScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number, 0 for whole-file checks.
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (0, Some(k)) => write!(f, "`{k}`: {}", self.message),
            (0, None) => f.write_str(&self.message),
            (l, Some(k)) => write!(f, "line {l}, `{k}`: {}", self.message),
            (l, None) => write!(f, "line {l}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Vacuum,
    Fock(Occupations),
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Vacuum => f.write_str("vacuum"),
            InitialState::Fock(o) => write!(f, "fock {} {} {}", o.m1, o.m2, o.m0),
        }
    }
}

/// Column groups written to the trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub occupations: bool,
    pub g2: bool,
    pub probabilities: bool,
    /// `trace_err`, plus `min_eig` when positivity is audited.
    pub audits: bool,
}

impl Outputs {
    pub const ALL: Outputs = Outputs {
        occupations: true,
        g2: true,
        probabilities: true,
        audits: true,
    };

    fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.occupations {
            v.push("occupations");
        }
        if self.g2 {
            v.push("g2");
        }
        if self.probabilities {
            v.push("probabilities");
        }
        if self.audits {
            v.push("audits");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    pub initial: InitialState,
    pub t_max: f64,
    pub dt_out: f64,
    pub tol: f64,
    pub audit_positivity: bool,
    pub outputs: Outputs,
    /// Fock states whose probabilities are written as `P_m1_m2_m0` columns.
    pub probabilities: Vec<Occupations>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            initial: InitialState::Vacuum,
            t_max: 20.0,
            dt_out: 0.05,
            tol: 1e-9,
            audit_positivity: false,
            outputs: Outputs::ALL,
            probabilities: Vec::new(),
        }
    }
}

pub const KEYS: [&str; 16] = [
    "u",
    "gamma",
    "delta",
    "pump_detunings",
    "scheme",
    "envelope.shape",
    "envelope.f0",
    "envelope.tau",
    "n_max",
    "initial",
    "t_max",
    "dt_out",
    "tol",
    "audit_positivity",
    "outputs",
    "probabilities",
];

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("expected a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got `{v}`"));
    }
    Ok(x)
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_triple(v: &str, sep: char) -> Result<Occupations, String> {
    let parts: Vec<&str> = v
        .split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three occupations m1{sep}m2{sep}m0, got `{v}`"
        ));
    }
    let n = |s: &str| parse_usize(s);
    Ok(Occupations::new(n(parts[0])?, n(parts[1])?, n(parts[2])?))
}

fn parse_initial(v: &str) -> Result<InitialState, String> {
    if v == "vacuum" {
        return Ok(InitialState::Vacuum);
    }
    match v.strip_prefix("fock") {
        Some(rest) if rest.starts_with(char::is_whitespace) => {
            parse_triple(rest.trim(), ' ').map(InitialState::Fock)
        }
        _ => Err(format!("expected `vacuum` or `fock m1 m2 m0`, got `{v}`")),
    }
}

fn parse_outputs(v: &str) -> Result<Outputs, String> {
    let mut o = Outputs {
        occupations: false,
        g2: false,
        probabilities: false,
        audits: false,
    };
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let slot = match item {
            "occupations" => &mut o.occupations,
            "g2" => &mut o.g2,
            "probabilities" => &mut o.probabilities,
            "audits" => &mut o.audits,
            other => return Err(format!("unknown output group `{other}`")),
        };
        *slot = true;
    }
    Ok(o)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line,
                    key: None,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let err = |message: String| ConfigError {
                line,
                key: Some(key.to_string()),
                message,
            };
            let Some(&canonical) = KEYS.iter().find(|k| **k == key) else {
                return Err(err("unknown key".into()));
            };
            if seen.contains(&canonical) {
                return Err(err("key given twice".into()));
            }
            seen.push(canonical);
            let m = &mut cfg.model;
            match canonical {
                "u" => m.u = parse_f64(value).map_err(err)?,
                "gamma" => m.gamma = parse_f64(value).map_err(err)?,
                "delta" => m.delta = parse_f64(value).map_err(err)?,
                "pump_detunings" => {
                    let xs: Vec<f64> = value
                        .split(',')
                        .map(|s| parse_f64(s.trim()))
                        .collect::<Result<_, _>>()
                        .map_err(err)?;
                    m.pump_detunings = xs
                        .try_into()
                        .map_err(|_| err("expected three detunings Δ0, Δ1, Δ2".into()))?;
                }
                "scheme" => {
                    m.scheme = value
                        .parse::<PumpScheme>()
                        .map_err(|e| err(e.to_string()))?
                }
                "envelope.shape" => {
                    m.envelope.shape = value
                        .parse::<PulseShape>()
                        .map_err(|e| err(e.to_string()))?
                }
                "envelope.f0" => m.envelope.f0 = parse_f64(value).map_err(err)?,
                "envelope.tau" => m.envelope.tau = parse_f64(value).map_err(err)?,
                "n_max" => m.n_max = parse_usize(value).map_err(err)?,
                "initial" => cfg.initial = parse_initial(value).map_err(err)?,
                "t_max" => cfg.t_max = parse_f64(value).map_err(err)?,
                "dt_out" => cfg.dt_out = parse_f64(value).map_err(err)?,
                "tol" => cfg.tol = parse_f64(value).map_err(err)?,
                "audit_positivity" => cfg.audit_positivity = parse_bool(value).map_err(err)?,
                "outputs" => cfg.outputs = parse_outputs(value).map_err(err)?,
                "probabilities" => {
                    cfg.probabilities = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_triple(s, ':'))
                        .collect::<Result<_, _>>()
                        .map_err(err)?
                }
                _ => unreachable!("every key in KEYS is handled"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let whole = |key: &str, message: String| ConfigError {
            line: 0,
            key: Some(key.to_string()),
            message,
        };
        self.model
            .validate()
            .map_err(|e| whole("model", e.to_string()))?;
        if !(self.t_max > 0.0) {
            return Err(whole("t_max", format!("must be > 0, got {}", self.t_max)));
        }
        if !(self.dt_out > 0.0) || self.dt_out > self.t_max {
            return Err(whole(
                "dt_out",
                format!("must be in (0, t_max], got {}", self.dt_out),
            ));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(whole("tol", format!("must be in (0, 1), got {}", self.tol)));
        }
        let basis = FockBasis::new(self.model.n_max).map_err(|e| whole("n_max", e.to_string()))?;
        if let InitialState::Fock(o) = self.initial {
            if !basis.contains(o) {
                return Err(whole(
                    "initial",
                    format!("state {o} exceeds n_max = {}", self.model.n_max),
                ));
            }
        }
        if let Some(o) = self.probabilities.iter().find(|o| !basis.contains(**o)) {
            return Err(whole(
                "probabilities",
                format!("state {o} exceeds n_max = {}", self.model.n_max),
            ));
        }
        Ok(())
    }

    /// Serializes every key; [`ScenarioConfig::parse`] reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("u", format!("{:?}", m.u));
        put("gamma", format!("{:?}", m.gamma));
        put("delta", format!("{:?}", m.delta));
        put(
            "pump_detunings",
            m.pump_detunings
                .iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("scheme", m.scheme.to_string());
        put("envelope.shape", m.envelope.shape.to_string());
        put("envelope.f0", format!("{:?}", m.envelope.f0));
        put("envelope.tau", format!("{:?}", m.envelope.tau));
        put("n_max", m.n_max.to_string());
        put("initial", self.initial.to_string());
        put("t_max", format!("{:?}", self.t_max));
        put("dt_out", format!("{:?}", self.dt_out));
        put("tol", format!("{:?}", self.tol));
        put("audit_positivity", self.audit_positivity.to_string());
        put("outputs", self.outputs.names().join(", "));
        put(
            "probabilities",
            self.probabilities
                .iter()
                .map(|o| format!("{}:{}:{}", o.m1, o.m2, o.m0))
                .collect::<Vec<_>>()
                .join(", "),
        );
        s
    }
}

pub const PRESETS: [&str; 8] = [
    "fig2",
    "fig3_weak",
    "fig3_strong",
    "fig4",
    "fig5_rect",
    "fig5_halfgauss",
    "fig5_gauss",
    "fig6",
];

/// Pump amplitudes for the continuously driven presets; the paper does not
/// state them, so weak is `0.1u` and strong is `u`.
pub const WEAK_PUMP: f64 = 0.1;
pub const STRONG_PUMP: f64 = 1.0;

/// Pulse duration of the pulsed presets, the first `g²_1` minimum under
/// continuous pumping.
pub const PULSE_TAU: f64 = 2.6;

/// Physical parameters of the high-Q preset, in s⁻¹.
pub const HIGH_Q_U: f64 = 1.25e7;
pub const HIGH_Q_GAMMA: f64 = 2e5;
pub const HIGH_Q_F: f64 = 1.25e7;

fn pair_probes() -> Vec<Occupations> {
    vec![Occupations::new(0, 0, 2), Occupations::new(1, 1, 0)]
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig::default();
    let driven = |scheme: PumpScheme, envelope: PulseEnvelope, t_max: f64| ScenarioConfig {
        model: ModelSpec {
            scheme,
            envelope,
            ..ModelSpec::default()
        },
        t_max,
        probabilities: pair_probes(),
        ..base.clone()
    };
    let pulse = |shape: PulseShape| {
        driven(
            PumpScheme::Pump0,
            PulseEnvelope {
                shape,
                f0: STRONG_PUMP,
                tau: PULSE_TAU,
            },
            15.0,
        )
    };
    let cfg = match name {
        "fig2" => ScenarioConfig {
            initial: InitialState::Fock(Occupations::new(0, 0, 2)),
            probabilities: vec![
                Occupations::new(0, 0, 2),
                Occupations::new(1, 1, 0),
                Occupations::new(0, 0, 1),
                Occupations::new(1, 0, 0),
            ],
            ..base
        },
        "fig3_weak" => driven(PumpScheme::Pump12, PulseEnvelope::constant(WEAK_PUMP), 20.0),
        "fig3_strong" => driven(
            PumpScheme::Pump12,
            PulseEnvelope::constant(STRONG_PUMP),
            20.0,
        ),
        "fig4" => driven(
            PumpScheme::Pump0,
            PulseEnvelope::constant(STRONG_PUMP),
            15.0,
        ),
        "fig5_rect" => pulse(PulseShape::Rect),
        "fig5_halfgauss" => pulse(PulseShape::HalfGaussian),
        "fig5_gauss" => pulse(PulseShape::CenteredGaussian),
        "fig6" => {
            let mut c = driven(
                PumpScheme::Pump0,
                PulseEnvelope::constant(HIGH_Q_F / HIGH_Q_U),
                30.0,
            );
            c.model.u = HIGH_Q_U / HIGH_Q_U;
            c.model.gamma = HIGH_Q_GAMMA / HIGH_Q_U;
            c
        }
        _ => return None,
    };
    Some(cfg)
}
