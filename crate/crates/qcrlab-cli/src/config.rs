//! Device configuration: a human-editable key-value document with
//! explicit unit suffixes. Every dimensioned value must carry its unit;
//! dimensionless values must not. Unknown keys are rejected. The raw
//! `value unit` tokens are kept so a serialize/parse round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qcrlab::constants::angular;
use qcrlab::junction::JunctionParams;
use qcrlab::resonator::ResonatorParams;

use crate::CliError;

/// Physical dimension of a config value, fixing the accepted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Linear frequency; stored as rad/s.
    Frequency,
    /// Energy; stored as J.
    Energy,
    /// Resistance; stored as Ω.
    Resistance,
    /// Capacitance; stored as F.
    Capacitance,
    /// Temperature; stored as K.
    Temperature,
    /// Pure number.
    Dimensionless,
    /// Nonnegative integer.
    Count,
}

/// The config schema: key, dimension, canonical unit for serialization.
pub const SCHEMA: &[(&str, Dimension, &str)] = &[
    ("omega_r", Dimension::Frequency, "GHz"),
    ("omega_q", Dimension::Frequency, "GHz"),
    ("omega_ro", Dimension::Frequency, "GHz"),
    ("alpha", Dimension::Frequency, "MHz"),
    ("chi_r", Dimension::Frequency, "MHz"),
    ("chi_ro", Dimension::Frequency, "MHz"),
    ("g_r", Dimension::Frequency, "MHz"),
    ("g_ro", Dimension::Frequency, "MHz"),
    ("delta", Dimension::Energy, "ueV"),
    ("gamma_dr", Dimension::Frequency, "MHz"),
    ("gamma_0", Dimension::Frequency, "MHz"),
    ("gamma_dynes", Dimension::Dimensionless, ""),
    ("r_t", Dimension::Resistance, "kohm"),
    ("c_nis", Dimension::Capacitance, "fF"),
    ("z_0", Dimension::Resistance, "ohm"),
    ("omega_n_afm", Dimension::Frequency, "GHz"),
    ("omega_n_vfm", Dimension::Frequency, "GHz"),
    ("rho", Dimension::Dimensionless, ""),
    ("n_c", Dimension::Dimensionless, ""),
    ("t_qp", Dimension::Temperature, "mK"),
    ("n_max", Dimension::Count, ""),
];

/// Bundled default configuration reproducing the characterized device.
pub const DEFAULT_CONFIG: &str = include_str!("../data/default_device.conf");

/// Parsed device configuration. SI values derived from the raw entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    /// Raw `key -> (number, unit)` entries, kept for exact serialization.
    raw: BTreeMap<String, (f64, String)>,
    /// SI values per key (rad/s, J, Ω, F, K, or plain).
    si: BTreeMap<String, f64>,
}

fn unit_factor(dim: Dimension, unit: &str) -> Option<f64> {
    match dim {
        Dimension::Frequency => match unit {
            "Hz" => Some(1.0),
            "kHz" => Some(1e3),
            "MHz" => Some(1e6),
            "GHz" => Some(1e9),
            _ => None,
        },
        Dimension::Energy => match unit {
            "ueV" => Some(1e-6),
            "meV" => Some(1e-3),
            "eV" => Some(1.0),
            "J" => Some(f64::NAN), // sentinel: direct joules
            _ => None,
        },
        Dimension::Resistance => match unit {
            "ohm" => Some(1.0),
            "kohm" => Some(1e3),
            "Mohm" => Some(1e6),
            _ => None,
        },
        Dimension::Capacitance => match unit {
            "fF" => Some(1e-15),
            "pF" => Some(1e-12),
            "F" => Some(1.0),
            _ => None,
        },
        Dimension::Temperature => match unit {
            "mK" => Some(1e-3),
            "K" => Some(1.0),
            _ => None,
        },
        Dimension::Dimensionless | Dimension::Count => None,
    }
}

/// Convert `(value, unit)` to the SI representation for `dim`.
pub fn to_si(dim: Dimension, value: f64, unit: &str) -> Result<f64, String> {
    match dim {
        Dimension::Dimensionless | Dimension::Count => {
            if unit.is_empty() {
                Ok(value)
            } else {
                Err(format!("dimensionless value must not carry a unit, got '{unit}'"))
            }
        }
        Dimension::Frequency => match unit_factor(dim, unit) {
            Some(f) => Ok(angular(value * f)),
            None => Err(format!("expected a frequency unit (Hz/kHz/MHz/GHz), got '{unit}'")),
        },
        Dimension::Energy => match unit {
            "J" => Ok(value),
            _ => match unit_factor(dim, unit) {
                Some(f) => Ok(qcrlab::constants::ev_to_joules(value * f)),
                None => Err(format!("expected an energy unit (ueV/meV/eV/J), got '{unit}'")),
            },
        },
        _ => match unit_factor(dim, unit) {
            Some(f) => Ok(value * f),
            None => Err(format!("unit '{unit}' not valid here")),
        },
    }
}

impl DeviceConfig {
    /// Parse a configuration document, validating keys and units.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(':').ok_or_else(|| {
                CliError::Config(format!("line {}: expected 'key: value [unit]'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let mut parts = rest.split_whitespace();
            let number: f64 = parts
                .next()
                .ok_or_else(|| CliError::Config(format!("line {}: missing value", lineno + 1)))?
                .parse()
                .map_err(|_| {
                    CliError::Config(format!("line {}: value is not a number", lineno + 1))
                })?;
            let unit = parts.next().unwrap_or("").to_string();
            if let Some(extra) = parts.next() {
                return Err(CliError::Config(format!(
                    "line {}: unexpected trailing token '{extra}'",
                    lineno + 1
                )));
            }
            if raw.insert(key.clone(), (number, unit)).is_some() {
                return Err(CliError::Config(format!("duplicate key '{key}'")));
            }
        }
        Self::from_raw(raw)
    }

    fn from_raw(raw: BTreeMap<String, (f64, String)>) -> Result<Self, CliError> {
        for key in raw.keys() {
            if !SCHEMA.iter().any(|(k, _, _)| k == key) {
                return Err(CliError::Config(format!("unknown key '{key}'")));
            }
        }
        let mut si = BTreeMap::new();
        for (key, dim, _) in SCHEMA {
            let (value, unit) = raw
                .get(*key)
                .ok_or_else(|| CliError::Config(format!("missing key '{key}'")))?;
            let converted = to_si(*dim, *value, unit)
                .map_err(|e| CliError::Config(format!("key '{key}': {e}")))?;
            if *dim == Dimension::Count && (converted.fract() != 0.0 || converted < 0.0) {
                return Err(CliError::Config(format!(
                    "key '{key}': expected a nonnegative integer"
                )));
            }
            si.insert((*key).to_string(), converted);
        }
        let cfg = Self { raw, si };
        cfg.junction()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resonator()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Bundled Table-style defaults.
    pub fn default_device() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    /// SI value of a key (rad/s for frequencies, J, Ω, F, K, or plain).
    pub fn si(&self, key: &str) -> f64 {
        self.si[key]
    }

    /// Override a key with a `value unit` token (e.g. `248mK`, `3.2 GHz`).
    pub fn set(&mut self, key: &str, token: &str) -> Result<(), CliError> {
        let (_, dim, _) = SCHEMA
            .iter()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| CliError::Config(format!("unknown key '{key}'")))?;
        let (value, unit) = split_number_unit(token)?;
        let converted =
            to_si(*dim, value, &unit).map_err(|e| CliError::Config(format!("key '{key}': {e}")))?;
        self.raw.insert(key.to_string(), (value, unit));
        self.si.insert(key.to_string(), converted);
        self.junction()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.resonator()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Canonical serialization; parsing it back compares equal.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (key, _, _) in SCHEMA {
            let (value, unit) = &self.raw[*key];
            if unit.is_empty() {
                let _ = writeln!(out, "{key}: {value}");
            } else {
                let _ = writeln!(out, "{key}: {value} {unit}");
            }
        }
        out
    }

    /// FNV-1a hash of the canonical serialization.
    pub fn hash(&self) -> u64 {
        fnv1a(self.serialize().as_bytes())
    }

    pub fn junction(&self) -> JunctionParams {
        JunctionParams {
            delta: self.si("delta"),
            gamma_dynes: self.si("gamma_dynes"),
            r_t: self.si("r_t"),
            t_qp: self.si("t_qp"),
        }
    }

    pub fn resonator(&self) -> ResonatorParams {
        ResonatorParams {
            omega_r: self.si("omega_r"),
            gamma_dr: self.si("gamma_dr"),
            gamma_0: self.si("gamma_0"),
            rho: self.si("rho"),
            n_c: self.si("n_c"),
            n_max: self.si("n_max") as usize,
        }
    }

    /// Default peak model for spectroscopy: spacing 2χ_R per photon.
    pub fn peak_model(&self, linewidth_hz: f64, baseline: f64) -> qcrlab::spectroscopy::PeakModel {
        qcrlab::spectroscopy::PeakModel::uniform(
            2.0 * qcrlab::constants::linear(self.si("chi_r")),
            linewidth_hz,
            baseline,
        )
    }
}

/// Split `248mK`, `248 mK`, `1.96e-3` into number and unit.
pub fn split_number_unit(token: &str) -> Result<(f64, String), CliError> {
    let token = token.trim();
    let split = token
        .char_indices()
        .find(|(i, c)| {
            c.is_alphabetic()
                && !(*i > 0
                    && (*c == 'e' || *c == 'E')
                    && token[i + 1..]
                        .chars()
                        .next()
                        .map(|n| n.is_ascii_digit() || n == '-' || n == '+')
                        .unwrap_or(false))
        })
        .map(|(i, _)| i)
        .unwrap_or(token.len());
    let (num, unit) = token.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("'{token}' is not 'number [unit]'")))?;
    Ok((value, unit.trim().to_string()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_parses_to_expected_si() {
        let cfg = DeviceConfig::default_device();
        assert_relative_eq!(cfg.si("omega_r"), angular(4.671e9), max_relative = 1e-15);
        assert_relative_eq!(
            cfg.si("delta"),
            qcrlab::constants::ev_to_joules(203e-6),
            max_relative = 1e-15
        );
        assert_relative_eq!(cfg.si("r_t"), 29.4e3, max_relative = 1e-15);
        assert_relative_eq!(cfg.si("t_qp"), 0.060, max_relative = 1e-15);
        assert_relative_eq!(cfg.si("gamma_dynes"), 1.96e-3, max_relative = 1e-15);
        assert_eq!(cfg.si("n_max"), 9.0);
        assert_relative_eq!(cfg.si("rho"), 8.0e-3, max_relative = 1e-15);
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = DeviceConfig::default_device();
        let text = cfg.serialize();
        let back = DeviceConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{}bogus_key: 1.0\n", DEFAULT_CONFIG);
        assert!(DeviceConfig::parse(&text).is_err());
    }

    #[test]
    fn missing_unit_rejected() {
        let text = DEFAULT_CONFIG.replace("delta: 203 ueV", "delta: 203");
        match DeviceConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("delta")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unit_on_dimensionless_rejected() {
        let text = DEFAULT_CONFIG.replace("rho: 0.008", "rho: 0.008 mK");
        assert!(DeviceConfig::parse(&text).is_err());
    }

    #[test]
    fn wrong_unit_rejected() {
        let text = DEFAULT_CONFIG.replace("t_qp: 60 mK", "t_qp: 60 GHz");
        assert!(DeviceConfig::parse(&text).is_err());
    }

    #[test]
    fn overrides_accept_glued_units() {
        let mut cfg = DeviceConfig::default_device();
        cfg.set("t_qp", "248mK").unwrap();
        assert_relative_eq!(cfg.si("t_qp"), 0.248, max_relative = 1e-15);
        cfg.set("t_qp", "0.06 K").unwrap();
        assert_relative_eq!(cfg.si("t_qp"), 0.060, max_relative = 1e-15);
        assert!(cfg.set("t_qp", "60").is_err());
    }

    #[test]
    fn exponent_tokens_are_not_units() {
        let (v, u) = split_number_unit("1.96e-3").unwrap();
        assert_eq!(v, 1.96e-3);
        assert!(u.is_empty());
        let (v, u) = split_number_unit("3.2GHz").unwrap();
        assert_eq!(v, 3.2);
        assert_eq!(u, "GHz");
    }
}
