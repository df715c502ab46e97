//! `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;
use qsd_core::trajectory::Method;
use qsd_core::{EomVariant, InitialState, ParameterSet};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("line {line}: `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("`{key}` = {value}: {reason}")]
    Domain { key: String, value: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    G,
    Gamma,
    BathStrength,
    OmegaS,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::G => "g",
            SweepParameter::Gamma => "gamma",
            SweepParameter::BathStrength => "Gamma",
            SweepParameter::OmegaS => "omega_s",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [Self::G, Self::Gamma, Self::BathStrength, Self::OmegaS].into_iter().find(|p| p.name() == s)
    }

    /// `p` with the swept parameter set to `value`.
    pub fn apply(&self, p: &ParameterSet, value: f64) -> ParameterSet {
        let mut q = p.clone();
        match self {
            SweepParameter::G => q.g = value,
            SweepParameter::Gamma => q.bath_rate = value,
            SweepParameter::BathStrength => q.bath_strength = value,
            SweepParameter::OmegaS => q = q.with_qubit_frequency(value),
        }
        q
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ParameterSet,
    pub method: Method,
    pub sweep: Option<Sweep>,
    pub output_path: Option<PathBuf>,
}

const REQUIRED: [&str; 12] = [
    "model.g",
    "model.kappa1",
    "model.kappa2",
    "model.omega_s",
    "bath.Gamma",
    "bath.gamma",
    "sim.t_max",
    "sim.dt",
    "sim.n_traj",
    "sim.seed",
    "sim.initial_state",
    "sim.method",
];

const OPTIONAL: [&str; 9] = [
    "model.omega_cavity",
    "model.omega_a",
    "model.omega_b",
    "sim.eom_variant",
    "oracle.fock_cutoff_cavity",
    "oracle.fock_cutoff_pseudomode",
    "sweep.parameter",
    "sweep.values",
    "output.path",
];

struct Entry {
    line: usize,
    value: String,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Malformed { line, text: raw.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        let well_formed = key.split_once('.').is_some_and(|(s, k)| !s.is_empty() && !k.is_empty() && !k.contains('.'))
            && !key.contains(char::is_whitespace)
            && !value.is_empty();
        if !well_formed {
            return Err(ConfigError::Malformed { line, text: raw.to_string() });
        }
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if let Some(first) = entries.get(key) {
            return Err(ConfigError::Duplicate { line, key: key.to_string(), first: first.line });
        }
        entries.insert(key.to_string(), Entry { line, value: value.to_string() });
    }

    let missing: Vec<String> = REQUIRED.iter().filter(|k| !entries.contains_key(**k)).map(|k| k.to_string()).collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }

    let bad = |key: &str, reason: String| ConfigError::BadValue { line: entries[key].line, key: key.to_string(), reason };
    let real = |key: &str| -> Result<f64, ConfigError> {
        let v: f64 = entries[key].value.parse().map_err(|_| bad(key, format!("`{}` is not a number", entries[key].value)))?;
        if !v.is_finite() {
            return Err(bad(key, "must be finite".into()));
        }
        Ok(v)
    };
    let count = |key: &str| -> Result<u64, ConfigError> {
        entries[key].value.parse().map_err(|_| bad(key, format!("`{}` is not a non-negative integer", entries[key].value)))
    };
    let opt_real = |key: &str, default: f64| -> Result<f64, ConfigError> {
        if entries.contains_key(key) {
            real(key)
        } else {
            Ok(default)
        }
    };

    let omega_s = real("model.omega_s")?;
    let defaults = ParameterSet::default();
    let params = ParameterSet {
        omega_s,
        omega_a: opt_real("model.omega_a", omega_s)?,
        omega_b: opt_real("model.omega_b", omega_s)?,
        omega_c: opt_real("model.omega_cavity", 1.0)?,
        g: real("model.g")?,
        kappa1: real("model.kappa1")?,
        kappa2: real("model.kappa2")?,
        bath_strength: real("bath.Gamma")?,
        bath_rate: real("bath.gamma")?,
        t_max: real("sim.t_max")?,
        dt: real("sim.dt")?,
        n_traj: count("sim.n_traj")? as usize,
        seed: count("sim.seed")?,
        initial_state: parse_initial_state(&entries["sim.initial_state"].value).map_err(|r| bad("sim.initial_state", r))?,
        eom_variant: match entries.get("sim.eom_variant") {
            None => EomVariant::AsPrinted,
            Some(e) => EomVariant::from_name(&e.value).ok_or_else(|| {
                bad("sim.eom_variant", format!("unknown variant `{}` (expected as_printed, symmetrized or corrected)", e.value))
            })?,
        },
        fock_cutoff_cavity: if entries.contains_key("oracle.fock_cutoff_cavity") {
            count("oracle.fock_cutoff_cavity")? as usize
        } else {
            defaults.fock_cutoff_cavity
        },
        fock_cutoff_pseudomode: if entries.contains_key("oracle.fock_cutoff_pseudomode") {
            count("oracle.fock_cutoff_pseudomode")? as usize
        } else {
            defaults.fock_cutoff_pseudomode
        },
    };
    let method = Method::from_name(&entries["sim.method"].value)
        .ok_or_else(|| bad("sim.method", format!("unknown method `{}` (expected qsd, oracle, closed or quadrature)", entries["sim.method"].value)))?;
    check_domain(&params)?;

    let sweep = match (entries.get("sweep.parameter"), entries.get("sweep.values")) {
        (None, None) => None,
        (Some(_), None) => return Err(ConfigError::Missing(vec!["sweep.values".into()])),
        (None, Some(_)) => return Err(ConfigError::Missing(vec!["sweep.parameter".into()])),
        (Some(pe), Some(ve)) => {
            let parameter = SweepParameter::from_name(&pe.value)
                .ok_or_else(|| bad("sweep.parameter", format!("`{}` is not one of g, gamma, Gamma, omega_s", pe.value)))?;
            let values = parse_list(&ve.value).map_err(|r| bad("sweep.values", r))?;
            if values.is_empty() {
                return Err(bad("sweep.values", "empty list".into()));
            }
            for &v in &values {
                check_domain(&parameter.apply(&params, v)).map_err(|e| match e {
                    ConfigError::Domain { reason, .. } => ConfigError::Domain {
                        key: "sweep.values".into(),
                        value: format_real(v),
                        reason: format!("invalid {}: {reason}", parameter.name()),
                    },
                    other => other,
                })?;
            }
            Some(Sweep { parameter, values })
        }
    };
    let output_path = entries.get("output.path").map(|e| PathBuf::from(&e.value));
    Ok(RunConfig { params, method, sweep, output_path })
}

fn config_key(name: &str) -> &'static str {
    match name {
        "omega_s" => "model.omega_s",
        "omega_a" => "model.omega_a",
        "omega_b" => "model.omega_b",
        "omega_c" => "model.omega_cavity",
        "g" => "model.g",
        "kappa1" => "model.kappa1",
        "kappa2" => "model.kappa2",
        "Gamma" => "bath.Gamma",
        "gamma" => "bath.gamma",
        "t_max" => "sim.t_max",
        "dt" => "sim.dt",
        "n_traj" => "sim.n_traj",
        _ => "sim.initial_state",
    }
}

fn check_domain(p: &ParameterSet) -> Result<(), ConfigError> {
    p.validate().map_err(|e| match e {
        qsd_core::error::ModelError::InvalidParameter { name, value, reason } => {
            ConfigError::Domain { key: config_key(name).into(), value: format_real(value), reason: reason.into() }
        }
        other => ConfigError::Domain { key: "sim.initial_state".into(), value: "custom".into(), reason: other.to_string() },
    })
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let inner = s.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(s);
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("`{t}` is not a finite number")),
        })
        .collect()
}

/// `a`, `bi`, `a+bi`, `a-bi`.
fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not part of an exponent or leading
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        return match split {
            Some(k) => {
                let re = body[..k].parse().ok()?;
                let im = match &body[k..] {
                    "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().ok()?,
                };
                Some(Complex64::new(re, im))
            }
            None => {
                let im = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().ok()?,
                };
                Some(Complex64::new(0.0, im))
            }
        };
    }
    s.parse().ok().map(|re| Complex64::new(re, 0.0))
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", format_real(z.re), format_real(-z.im))
    } else {
        format!("{}+{}i", format_real(z.re), format_real(z.im))
    }
}

fn parse_initial_state(s: &str) -> Result<InitialState, String> {
    match s {
        "bell_psi_plus" => return Ok(InitialState::BellPsiPlus),
        "bell_phi_plus" => return Ok(InitialState::BellPhiPlus),
        "ket_ee" => return Ok(InitialState::KetEE),
        "ket_gg" => return Ok(InitialState::KetGG),
        _ => {}
    }
    let inner = s
        .strip_prefix("custom(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("unknown initial state `{s}` (expected bell_psi_plus, bell_phi_plus, ket_ee, ket_gg or custom(a, b, c, d))"))?;
    let amps: Vec<Complex64> = inner.split(',').map(|t| parse_complex(t).ok_or_else(|| format!("`{}` is not a complex number", t.trim()))).collect::<Result<_, _>>()?;
    let amps: [Complex64; 4] = amps.try_into().map_err(|v: Vec<_>| format!("custom state needs 4 amplitudes, got {}", v.len()))?;
    Ok(InitialState::Custom(amps))
}

fn initial_state_text(s: &InitialState) -> String {
    match s {
        InitialState::Custom(a) => format!("custom({})", a.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(", ")),
        other => other.name().to_string(),
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

/// Physics and numerics of one run in a fixed key order. Hashed for provenance.
pub fn canonical_parameters(p: &ParameterSet, method: Method) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
    kv("model.omega_s", format_real(p.omega_s));
    kv("model.omega_a", format_real(p.omega_a));
    kv("model.omega_b", format_real(p.omega_b));
    kv("model.omega_cavity", format_real(p.omega_c));
    kv("model.g", format_real(p.g));
    kv("model.kappa1", format_real(p.kappa1));
    kv("model.kappa2", format_real(p.kappa2));
    kv("bath.Gamma", format_real(p.bath_strength));
    kv("bath.gamma", format_real(p.bath_rate));
    kv("sim.t_max", format_real(p.t_max));
    kv("sim.dt", format_real(p.dt));
    kv("sim.n_traj", p.n_traj.to_string());
    kv("sim.seed", p.seed.to_string());
    kv("sim.initial_state", initial_state_text(&p.initial_state));
    kv("sim.method", method.name().to_string());
    kv("sim.eom_variant", p.eom_variant.name().to_string());
    kv("oracle.fock_cutoff_cavity", p.fock_cutoff_cavity.to_string());
    kv("oracle.fock_cutoff_pseudomode", p.fock_cutoff_pseudomode.to_string());
    s
}

/// Complete configuration with every default made explicit; parses back to the same value.
pub fn dump_config(c: &RunConfig) -> String {
    let mut s = canonical_parameters(&c.params, c.method);
    if let Some(sw) = &c.sweep {
        writeln!(s, "sweep.parameter = {}", sw.parameter.name()).unwrap();
        writeln!(s, "sweep.values = {}", sw.values.iter().map(|v| format_real(*v)).collect::<Vec<_>>().join(", ")).unwrap();
    }
    if let Some(path) = &c.output_path {
        writeln!(s, "output.path = {}", path.display()).unwrap();
    }
    s
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parameter_hash(p: &ParameterSet, method: Method) -> String {
    sha256_hex(&canonical_parameters(p, method))
}

/// Key for cached coefficient fields: only what the field solve depends on.
pub fn coefficient_key(p: &ParameterSet) -> String {
    let text = format!(
        "{} {} {} {} {} {} {} {} {} {} {}",
        format_real(p.omega_a),
        format_real(p.omega_b),
        format_real(p.omega_c),
        format_real(p.g),
        format_real(p.kappa1),
        format_real(p.kappa2),
        format_real(p.bath_strength),
        format_real(p.bath_rate),
        format_real(p.t_max),
        format_real(p.dt),
        p.eom_variant.name()
    );
    sha256_hex(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model.g = 1\nmodel.kappa1 = 1\nmodel.kappa2 = 1\nmodel.omega_s = 2\nbath.Gamma = 1\nbath.gamma = 5\n\
        sim.t_max = 5\nsim.dt = 0.01\nsim.n_traj = 100\nsim.seed = 7\nsim.initial_state = bell_psi_plus\nsim.method = qsd\n";

    #[test]
    fn defaults_filled() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.params.omega_c, 1.0);
        assert_eq!(c.params.omega_a, 2.0);
        assert_eq!(c.params.omega_b, 2.0);
        assert_eq!(c.params.eom_variant, EomVariant::AsPrinted);
        assert_eq!((c.params.fock_cutoff_cavity, c.params.fock_cutoff_pseudomode), (2, 2));
        assert!(c.sweep.is_none());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}  # trailing\n", MINIMAL.replace("sim.seed = 7", "sim.seed = 7 # seed"));
        assert_eq!(parse_config(&text).unwrap().params.seed, 7);
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = format!("{MINIMAL}this is not a pair\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Malformed { line: 13, .. })));
        assert!(matches!(parse_config("g = 1\n"), Err(ConfigError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicate_and_unknown() {
        let dup = format!("{MINIMAL}model.g = 2\n");
        assert!(matches!(parse_config(&dup), Err(ConfigError::Duplicate { line: 13, first: 1, .. })));
        let unknown = format!("{MINIMAL}model.colour = red\n");
        assert!(matches!(parse_config(&unknown), Err(ConfigError::UnknownKey { line: 13, .. })));
    }

    #[test]
    fn empty_document_lists_every_required_key() {
        match parse_config("") {
            Err(ConfigError::Missing(keys)) => assert_eq!(keys, REQUIRED.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_gamma_names_the_key() {
        let err = parse_config(&MINIMAL.replace("bath.gamma = 5", "bath.gamma = -1")).unwrap_err();
        assert!(matches!(&err, ConfigError::Domain { key, .. } if key == "bath.gamma"), "{err}");
        assert!(err.to_string().contains("bath.gamma"));
    }

    #[test]
    fn sweep_block() {
        let c = parse_config(&format!("{MINIMAL}sweep.parameter = g\nsweep.values = 0.4, 1, 5\n")).unwrap();
        assert_eq!(c.sweep, Some(Sweep { parameter: SweepParameter::G, values: vec![0.4, 1.0, 5.0] }));
        let bad = parse_config(&format!("{MINIMAL}sweep.parameter = g\nsweep.values = 1, -2\n")).unwrap_err();
        assert!(matches!(bad, ConfigError::Domain { .. }));
        assert!(parse_config(&format!("{MINIMAL}sweep.parameter = kappa1\nsweep.values = 1\n")).is_err());
    }

    #[test]
    fn custom_state_round_trip() {
        let text = MINIMAL.replace("bell_psi_plus", "custom(0.6, 0, 0.8i, 0)");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.params.initial_state, InitialState::Custom([Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)]));
        assert_eq!(parse_config(&dump_config(&c)).unwrap(), c);
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5-2e-3i"), Some(Complex64::new(1.5, -2e-3)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("1e-2+i"), Some(Complex64::new(0.01, 1.0)));
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn hash_depends_on_parameters() {
        let c = parse_config(MINIMAL).unwrap();
        let h = parameter_hash(&c.params, c.method);
        assert_eq!(h.len(), 64);
        let other = ParameterSet { seed: 8, ..c.params.clone() };
        assert_ne!(h, parameter_hash(&other, c.method));
        assert_eq!(coefficient_key(&c.params), coefficient_key(&other));
    }
}
