//! Config ingestion: JSON file, flag overlay, per-scenario defaults, and
//! validation. The resolved [`RunConfig`] is echoed verbatim into the output
//! directory so a run can always be reproduced from its artifacts.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stap_core::domain::UnitSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Expand,
    Split,
    QuarticCheck,
    Verify,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Expand => "expand",
            Scenario::Split => "split",
            Scenario::QuarticCheck => "quartic-check",
            Scenario::Verify => "verify",
        })
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum EmitKind {
    Phase,
    Potential,
    Observables,
}

/// Flags shared by every subcommand. Dimensional inputs are always SI; the
/// `--units` switch only selects the units of emitted artifacts.
#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; any flag given here overrides the file's key.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Protocol duration t_f in seconds.
    #[arg(long, value_name = "S")]
    pub t_f: Option<f64>,

    /// Initial trap frequency omega_0/2pi in hertz.
    #[arg(long, value_name = "HZ")]
    pub omega_0: Option<f64>,

    /// Target trap frequency omega_f/2pi in hertz (expand, quartic-check).
    #[arg(long, value_name = "HZ")]
    pub omega_f: Option<f64>,

    /// Final lobe displacement in meters; the split ends with wells at +-a.
    #[arg(long, value_name = "M")]
    pub a: Option<f64>,

    /// Particle mass in kilograms.
    #[arg(long, value_name = "KG")]
    pub mass: Option<f64>,

    /// Cubic coupling g in joule-meters; 0 is the linear Schroedinger limit.
    #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
    pub g: Option<f64>,

    /// Spatial samples across the window (a power of two).
    #[arg(long, value_name = "N")]
    pub grid_points: Option<usize>,

    /// Movie time steps; the movie carries N+1 knots.
    #[arg(long, value_name = "N")]
    pub time_steps: Option<usize>,

    /// Units of emitted values: "natural" (energies in hbar*omega_0, lengths
    /// in x0, times in 1/omega_0) or "si".
    #[arg(long, value_name = "UNITS", value_parser = ["natural", "si"])]
    pub units: Option<String>,

    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Artifacts to write, comma separated: phase, potential, observables.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub emit: Vec<EmitKind>,
}

/// Fully resolved run description. Scenario-irrelevant fields stay `None`
/// and are skipped in the echo, so parsing the echo back through
/// [`resolve`] reproduces this struct exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_0_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_f_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_f_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_si: Option<f64>,
    /// Quartic strength in natural units (hbar*omega_0 per x0^4).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_steps: Option<usize>,
    pub units: UnitSystem,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub emit: Vec<EmitKind>,
}

/// A problem with the invocation itself (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Partial config as read from a file; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
struct FileConfig {
    scenario: Option<Scenario>,
    mass_kg: Option<f64>,
    omega_0_hz: Option<f64>,
    omega_f_hz: Option<f64>,
    separation_m: Option<f64>,
    t_f_s: Option<f64>,
    g_si: Option<f64>,
    eta_0: Option<f64>,
    grid_points: Option<usize>,
    time_steps: Option<usize>,
    units: Option<UnitSystem>,
    out: Option<PathBuf>,
    emit: Option<Vec<EmitKind>>,
}

const ALLOWED_KEYS: &[&str] = &[
    "scenario",
    "mass-kg",
    "omega-0-hz",
    "omega-f-hz",
    "separation-m",
    "t-f-s",
    "g-si",
    "eta-0",
    "grid-points",
    "time-steps",
    "units",
    "out",
    "emit",
];

fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("config {}: not valid JSON: {e}", path.display())))?;
    let obj = value.as_object().ok_or_else(|| {
        ConfigError(format!(
            "config {}: expected a single JSON object",
            path.display()
        ))
    })?;
    let unknown: Vec<&str> = obj
        .keys()
        .map(String::as_str)
        .filter(|k| !ALLOWED_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(ConfigError(format!(
            "config {}: unknown keys: {}; allowed keys are: {}",
            path.display(),
            unknown.join(", "),
            ALLOWED_KEYS.join(", ")
        )));
    }
    serde_json::from_value(value)
        .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
}

fn require_positive(name: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Angular frequencies beyond this are almost certainly a units mix-up
/// (hertz given where radians per second were meant, or vice versa).
const SUSPICIOUS_OMEGA_RAD_S: f64 = 1e12;

fn warn_if_suspicious(name: &str, freq_hz: f64) {
    let omega = 2.0 * std::f64::consts::PI * freq_hz;
    if omega > SUSPICIOUS_OMEGA_RAD_S {
        eprintln!(
            "stap: warning: {name} = {freq_hz} Hz means omega = {omega:.3e} rad/s, \
             above {SUSPICIOUS_OMEGA_RAD_S:.0e} rad/s; check the value's units"
        );
    }
}

fn warn_ignored(scenario: Scenario, name: &str) {
    eprintln!("stap: warning: {name} has no effect on `{scenario}` and was ignored");
}

/// Merges file and flags (flags win), fills the scenario's defaults, and
/// validates. The `split` defaults are the reference demonstration
/// parameters: m = 1.44e-25 kg, omega/2pi = 125 Hz, a = 3 um, t_f = 80 ms.
pub fn resolve(scenario: Scenario, args: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };

    let mass_kg = args.mass.or(file.mass_kg);
    let omega_0_hz = args.omega_0.or(file.omega_0_hz);
    let omega_f_hz = args.omega_f.or(file.omega_f_hz);
    let separation_m = args.a.or(file.separation_m);
    let t_f_s = args.t_f.or(file.t_f_s);
    let g_si = args.g.or(file.g_si);
    let eta_0 = file.eta_0;
    let grid_points = args.grid_points.or(file.grid_points);
    let time_steps = args.time_steps.or(file.time_steps);
    let units = match args.units.as_deref() {
        Some("si") => UnitSystem::Si,
        Some(_) => UnitSystem::Natural,
        None => file.units.unwrap_or(UnitSystem::Natural),
    };
    let out = args
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("stap-out/{scenario}")));
    let mut emit = if args.emit.is_empty() {
        file.emit.unwrap_or_default()
    } else {
        args.emit.clone()
    };
    emit.sort();
    emit.dedup();

    if scenario == Scenario::Verify {
        // The battery is only meaningful at its pinned reference parameters.
        let overridden: Vec<&str> = [
            ("t-f", t_f_s.is_some()),
            ("omega-0", omega_0_hz.is_some()),
            ("omega-f", omega_f_hz.is_some()),
            ("a", separation_m.is_some()),
            ("mass", mass_kg.is_some()),
            ("g", g_si.is_some()),
            ("eta-0", eta_0.is_some()),
            ("grid-points", grid_points.is_some()),
            ("time-steps", time_steps.is_some()),
            ("emit", !emit.is_empty()),
        ]
        .iter()
        .filter(|(_, set)| *set)
        .map(|(name, _)| *name)
        .collect();
        if !overridden.is_empty() {
            return Err(ConfigError(format!(
                "`verify` runs the pinned reference battery and accepts only \
                 --units and --out; drop: {}. Run the individual scenarios to \
                 override physics or export movies",
                overridden.join(", ")
            )));
        }
        return Ok(RunConfig {
            scenario,
            mass_kg: None,
            omega_0_hz: None,
            omega_f_hz: None,
            separation_m: None,
            t_f_s: None,
            g_si: None,
            eta_0: None,
            grid_points: None,
            time_steps: None,
            units,
            out,
            emit,
        });
    }

    let mass_kg_v = require_positive("mass", mass_kg.unwrap_or(1.44e-25))?;
    let omega_0_hz_v = require_positive("omega-0", omega_0_hz.unwrap_or(125.0))?;
    warn_if_suspicious("omega-0", omega_0_hz_v);

    let cfg = match scenario {
        Scenario::Expand => {
            if separation_m.is_some() {
                warn_ignored(scenario, "a");
            }
            if eta_0.is_some() {
                warn_ignored(scenario, "eta-0");
            }
            let omega_f = require_positive("omega-f", omega_f_hz.unwrap_or(omega_0_hz_v / 10.0))?;
            warn_if_suspicious("omega-f", omega_f);
            // 5/omega_0: far below the final trap's adiabatic timescale.
            let t_f = require_positive(
                "t-f",
                t_f_s.unwrap_or(5.0 / (2.0 * std::f64::consts::PI * omega_0_hz_v)),
            )?;
            RunConfig {
                scenario,
                mass_kg: Some(mass_kg_v),
                omega_0_hz: Some(omega_0_hz_v),
                omega_f_hz: Some(omega_f),
                separation_m: None,
                t_f_s: Some(t_f),
                g_si: Some(g_si.unwrap_or(0.0)),
                eta_0: None,
                grid_points: Some(grid_points.unwrap_or(512)),
                time_steps: Some(time_steps.unwrap_or(1000)),
                units,
                out,
                emit,
            }
        }
        Scenario::Split => {
            if omega_f_hz.is_some() {
                warn_ignored(scenario, "omega-f");
            }
            if eta_0.is_some() {
                warn_ignored(scenario, "eta-0");
            }
            let a = require_positive("a", separation_m.unwrap_or(3e-6))?;
            let t_f = require_positive("t-f", t_f_s.unwrap_or(0.08))?;
            // Hurried drives need the finer default time grid.
            let steps = time_steps.unwrap_or(if t_f < 0.04 { 799 } else { 399 });
            RunConfig {
                scenario,
                mass_kg: Some(mass_kg_v),
                omega_0_hz: Some(omega_0_hz_v),
                omega_f_hz: None,
                separation_m: Some(a),
                t_f_s: Some(t_f),
                g_si: Some(g_si.unwrap_or(0.0)),
                eta_0: None,
                grid_points: Some(grid_points.unwrap_or(1024)),
                time_steps: Some(steps),
                units,
                out,
                emit,
            }
        }
        Scenario::QuarticCheck => {
            for (name, set) in [
                ("t-f", t_f_s.is_some()),
                ("a", separation_m.is_some()),
                ("g", g_si.is_some()),
                ("grid-points", grid_points.is_some()),
                ("time-steps", time_steps.is_some()),
            ] {
                if set {
                    warn_ignored(scenario, name);
                }
            }
            let omega_f = require_positive("omega-f", omega_f_hz.unwrap_or(omega_0_hz_v / 10.0))?;
            warn_if_suspicious("omega-f", omega_f);
            let eta = eta_0.unwrap_or(0.05);
            if !eta.is_finite() {
                return Err(ConfigError(format!("eta-0 must be finite, got {eta}")));
            }
            RunConfig {
                scenario,
                mass_kg: Some(mass_kg_v),
                omega_0_hz: Some(omega_0_hz_v),
                omega_f_hz: Some(omega_f),
                separation_m: None,
                t_f_s: None,
                g_si: None,
                eta_0: Some(eta),
                grid_points: None,
                time_steps: None,
                units,
                out,
                emit,
            }
        }
        Scenario::Verify => unreachable!("handled above"),
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_flags() -> CommonArgs {
        CommonArgs {
            config: None,
            t_f: None,
            omega_0: None,
            omega_f: None,
            a: None,
            mass: None,
            g: None,
            grid_points: None,
            time_steps: None,
            units: None,
            out: None,
            emit: Vec::new(),
        }
    }

    #[test]
    fn split_defaults_are_the_demonstration_parameters() {
        let cfg = resolve(Scenario::Split, &no_flags()).unwrap();
        assert_eq!(cfg.mass_kg, Some(1.44e-25));
        assert_eq!(cfg.omega_0_hz, Some(125.0));
        assert_eq!(cfg.separation_m, Some(3e-6));
        assert_eq!(cfg.t_f_s, Some(0.08));
        assert_eq!(cfg.grid_points, Some(1024));
        assert_eq!(cfg.time_steps, Some(399));
        assert_eq!(cfg.units, UnitSystem::Natural);
    }

    #[test]
    fn hurried_split_gets_the_finer_time_grid() {
        let args = CommonArgs {
            t_f: Some(0.01),
            ..no_flags()
        };
        let cfg = resolve(Scenario::Split, &args).unwrap();
        assert_eq!(cfg.time_steps, Some(799));
    }

    #[test]
    fn flags_override_the_file() {
        let dir = std::env::temp_dir().join("stap-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("override.json");
        std::fs::write(&path, r#"{"t-f-s": 0.08, "separation-m": 5e-6}"#).unwrap();
        let args = CommonArgs {
            config: Some(path),
            t_f: Some(0.01),
            ..no_flags()
        };
        let cfg = resolve(Scenario::Split, &args).unwrap();
        assert_eq!(cfg.t_f_s, Some(0.01));
        assert_eq!(cfg.separation_m, Some(5e-6));
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let dir = std::env::temp_dir().join("stap-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("unknown.json");
        std::fs::write(&path, r#"{"frobnicate": 1, "color": "red"}"#).unwrap();
        let args = CommonArgs {
            config: Some(path),
            ..no_flags()
        };
        let err = resolve(Scenario::Split, &args).unwrap_err();
        assert!(err.0.contains("frobnicate") && err.0.contains("color"), "{err}");
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        let args = CommonArgs {
            t_f: Some(-0.08),
            ..no_flags()
        };
        assert!(resolve(Scenario::Split, &args).is_err());
    }

    #[test]
    fn verify_rejects_physics_overrides() {
        let args = CommonArgs {
            mass: Some(1e-25),
            ..no_flags()
        };
        let err = resolve(Scenario::Verify, &args).unwrap_err();
        assert!(err.0.contains("mass"), "{err}");
    }
}
