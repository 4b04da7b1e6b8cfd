//! Scenario dispatch and the exit-code contract: 0 all gates pass, 1 gate
//! failure (report.json says which), 2 usage or config problem, 3 numerical
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use stap_core::domain::{PhysicalParams, UnitScales};
use stap_core::scenarios::expansion::ExpansionOutcome;
use stap_core::scenarios::splitting::SplittingOutcome;
use stap_core::scenarios::{
    run_expansion, run_quartic_check, run_splitting, run_splitting_pair, ExpansionConfig,
    QuarticConfig, QuarticOutcome, SplittingConfig,
};
use stap_core::Error as CoreError;

use crate::config::{EmitKind, RunConfig, Scenario};
use crate::emit::{self, UnitView};

/// One quality bar: `value cmp threshold`, e.g. `2.9e-13 < 1e-8`.
#[derive(Debug, Serialize)]
struct Gate {
    name: String,
    value: f64,
    threshold: f64,
    cmp: &'static str,
    pass: bool,
}

impl Gate {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold,
            cmp: "<",
            pass: value < threshold,
        }
    }

    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold,
            cmp: "<=",
            pass: value <= threshold,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold,
            cmp: ">=",
            pass: value >= threshold,
        }
    }

    fn count(name: impl Into<String>, got: usize, want: usize) -> Self {
        Gate {
            name: name.into(),
            value: got as f64,
            threshold: want as f64,
            cmp: "==",
            pass: got == want,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Gate {
            name: name.into(),
            value: ok as u8 as f64,
            threshold: 1.0,
            cmp: "==",
            pass: ok,
        }
    }
}

enum RunError {
    /// Bad invocation or config (exit 2).
    Usage(String),
    /// The computation itself failed (exit 3).
    Numerical(String),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidArgument(_)
            | CoreError::GridMismatch(_)
            | CoreError::GridTooSmall(_)
            | CoreError::MalformedMovie(_)
            | CoreError::Io(_) => RunError::Usage(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Usage(format!("i/o: {e}"))
    }
}

struct ScenarioOutcome {
    gates: Vec<Gate>,
    /// Top-level verdict for quartic-check: is the inverted target reachable?
    feasible: Option<bool>,
    details: serde_json::Value,
}

pub fn run(cfg: &RunConfig) -> ExitCode {
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("stap: cannot create {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }
    if let Err(e) = emit::write_config_echo(&cfg.out, cfg) {
        eprintln!("stap: cannot write config echo: {e}");
        return ExitCode::from(2);
    }

    let started = Instant::now();
    let result = match cfg.scenario {
        Scenario::Expand => run_expand(cfg),
        Scenario::Split => run_split(cfg),
        Scenario::QuarticCheck => run_quartic(cfg),
        Scenario::Verify => run_verify(),
    };
    match result {
        Ok(outcome) => finish(cfg, outcome, started),
        Err(RunError::Usage(m)) => {
            eprintln!("stap: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(m)) => {
            eprintln!("stap: numerical failure: {m}");
            let report = json!({
                "scenario": cfg.scenario.to_string(),
                "pass": false,
                "error": m,
            });
            let _ = emit::write_report(&cfg.out, &report);
            ExitCode::from(3)
        }
    }
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3e}")
    }
}

fn finish(cfg: &RunConfig, outcome: ScenarioOutcome, started: Instant) -> ExitCode {
    let pass = outcome.gates.iter().all(|g| g.pass);
    let failed = outcome.gates.iter().filter(|g| !g.pass).count();
    for g in &outcome.gates {
        println!(
            "{} {}: {} {} {}",
            if g.pass { "pass" } else { "FAIL" },
            g.name,
            fmt_value(g.value),
            g.cmp,
            fmt_value(g.threshold)
        );
    }

    let mut report = serde_json::Map::new();
    report.insert("scenario".into(), json!(cfg.scenario.to_string()));
    report.insert("pass".into(), json!(pass));
    if let Some(feasible) = outcome.feasible {
        report.insert("feasible".into(), json!(feasible));
    }
    report.insert("gates".into(), json!(outcome.gates));
    report.insert("details".into(), outcome.details);
    report.insert(
        "wall-seconds".into(),
        json!(started.elapsed().as_secs_f64()),
    );
    if let Err(e) = emit::write_report(&cfg.out, &serde_json::Value::Object(report)) {
        eprintln!("stap: cannot write report: {e}");
        return ExitCode::from(2);
    }

    let report_path = cfg.out.join("report.json");
    if pass {
        println!(
            "PASS: {} gate(s), artifacts in {}",
            outcome.gates.len(),
            cfg.out.display()
        );
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "stap: {failed} of {} gate(s) failed; see {}",
            outcome.gates.len(),
            report_path.display()
        );
        ExitCode::from(1)
    }
}

/// Natural coupling from g in J*m: divide by the energy and length scales.
fn natural_g(g_si: f64, scales: &UnitScales) -> f64 {
    g_si / (scales.e0_j * scales.x0_m)
}

fn expansion_gates(prefix: &str, out: &ExpansionOutcome<f64>) -> Vec<Gate> {
    let pops = out.superposition.populations_final;
    let pop_dev = (pops[0] - 0.5).abs().max((pops[1] - 0.5).abs());
    let drift = out
        .mode_run
        .invariant_drift
        .max(out.superposition.invariant_drift);
    let boundary = out
        .boundary_checks
        .iter()
        .map(|c| c.residual)
        .fold(0.0, f64::max);
    vec![
        Gate::below(
            format!("{prefix}phase-matches-closed-form"),
            out.theta_deviation,
            1e-9,
        ),
        Gate::below(format!("{prefix}route-equivalence"), out.route_gap, 1e-8),
        Gate::at_least(
            format!("{prefix}expansion-fidelity"),
            out.mode_run.final_fidelity,
            0.999,
        ),
        Gate::at_most(
            format!("{prefix}superposition-population-drift"),
            pop_dev,
            1e-3,
        ),
        Gate::below(format!("{prefix}invariant-drift"), drift, 1e-4),
        Gate::below(
            format!("{prefix}boundary-eigenstate-residual"),
            boundary,
            1e-6,
        ),
    ]
}

fn expansion_details(out: &ExpansionOutcome<f64>, natural: &ExpansionConfig<f64>) -> serde_json::Value {
    json!({
        "theta-deviation": out.theta_deviation,
        "route-gap": out.route_gap,
        "mode": {
            "n": out.mode_run.n,
            "final-fidelity": out.mode_run.final_fidelity,
            "invariant-drift": out.mode_run.invariant_drift,
            "max-edge-density": out.mode_run.series.max_edge_density,
        },
        "superposition": {
            "populations-final": out.superposition.populations_final,
            "final-fidelity": out.superposition.final_fidelity,
            "invariant-drift": out.superposition.invariant_drift,
        },
        "boundary-checks": out
            .boundary_checks
            .iter()
            .map(|c| {
                json!({
                    "mode": c.mode,
                    "at-end": c.at_end,
                    "energy": c.energy,
                    "residual": c.residual,
                })
            })
            .collect::<Vec<_>>(),
        "natural-units": {
            "omega-f": natural.omega_f,
            "t-f": natural.t_f,
            "half-width": natural.half_width,
            "grid-points": natural.n_points,
            "time-steps": natural.n_steps,
            "note": "boundary energies are in hbar*omega_0",
        },
    })
}

/// Window (natural units) in which the three-well stage must appear, when
/// the protocol is long enough for the question to apply.
fn three_well_window(t_f_s: f64, t0_s: f64) -> Option<(f64, f64)> {
    (t_f_s > 0.03).then(|| (0.03 / t0_s, t_f_s.min(0.05) / t0_s))
}

fn split_gates(
    prefix: &str,
    out: &SplittingOutcome<f64>,
    window: Option<(f64, f64)>,
) -> Vec<Gate> {
    let counts = &out.minima_counts;
    let boundary = out
        .boundary_checks
        .iter()
        .map(|c| c.residual)
        .fold(0.0, f64::max);
    let mut gates = vec![
        Gate::at_least(format!("{prefix}split-fidelity"), out.final_fidelity, 0.99),
        Gate::below(
            format!("{prefix}imaginary-part-certificate"),
            out.im_residual_max,
            1e-8,
        ),
        Gate::count(format!("{prefix}single-well-at-start"), counts[0], 1),
        Gate::count(
            format!("{prefix}double-well-at-end"),
            counts[counts.len() - 1],
            2,
        ),
        Gate::below(
            format!("{prefix}boundary-eigenstate-residual"),
            boundary,
            1e-6,
        ),
    ];
    if let Some((t_lo, t_hi)) = window {
        let time = out.movie.time();
        let three = (0..counts.len())
            .filter(|&k| {
                let t = time.time(k);
                t >= t_lo && t <= t_hi && counts[k] == 3
            })
            .count();
        gates.push(Gate::at_least(
            format!("{prefix}three-well-stage-in-window"),
            three as f64,
            1.0,
        ));
    }
    gates
}

fn split_details(out: &SplittingOutcome<f64>, natural: &SplittingConfig<f64>) -> serde_json::Value {
    json!({
        "final-fidelity": out.final_fidelity,
        "im-residual-max": out.im_residual_max,
        "max-abs-potential": out.max_abs_potential,
        "minima-counts": out.minima_counts,
        "max-edge-density": out.series.max_edge_density,
        "boundary-checks": out
            .boundary_checks
            .iter()
            .map(|c| json!({"at-end": c.at_end, "energy": c.energy, "residual": c.residual}))
            .collect::<Vec<_>>(),
        "natural-units": {
            "separation": natural.separation,
            "t-f": natural.t_f,
            "half-width": natural.half_width,
            "grid-points": natural.n_points,
            "time-steps": natural.n_steps,
            "note": "potentials are in hbar*omega; the end-flat drive pins the boundary energies to zero",
        },
    })
}

fn quartic_gates(prefix: &str, out: &QuarticOutcome<f64>, omega_ratio: f64) -> Vec<Gate> {
    let ratio_sq = omega_ratio * omega_ratio;
    let identity_dev = (out.inverted.rho_tf_fourth_power + ratio_sq).abs() / ratio_sq;
    vec![
        Gate::flag(
            format!("{prefix}inverted-target-rejected"),
            !out.inverted.feasible,
        ),
        Gate::below(
            format!("{prefix}required-fourth-power-identity"),
            identity_dev,
            1e-12,
        ),
        Gate::flag(
            format!("{prefix}confining-target-accepted"),
            out.confining.feasible,
        ),
    ]
}

fn run_expand(cfg: &RunConfig) -> Result<ScenarioOutcome, RunError> {
    let f0 = cfg.omega_0_hz.expect("resolved");
    let omega0_rad = 2.0 * std::f64::consts::PI * f0;
    let scales = UnitScales::new(cfg.mass_kg.expect("resolved"), omega0_rad)?;
    let view = UnitView {
        units: cfg.units,
        scales,
    };
    let natural = ExpansionConfig::<f64> {
        omega_0: 1.0,
        omega_f: cfg.omega_f_hz.expect("resolved") / f0,
        t_f: cfg.t_f_s.expect("resolved") * omega0_rad,
        mode: 0,
        half_width: 24.0,
        n_points: cfg.grid_points.expect("resolved"),
        n_steps: cfg.time_steps.expect("resolved"),
        substeps: 4,
        flatness: 2,
        potential_cap: 1e3,
        params: PhysicalParams::natural(natural_g(cfg.g_si.expect("resolved"), &scales)),
    };
    let out = run_expansion(&natural)?;

    if cfg.emit.contains(&EmitKind::Potential) {
        emit::write_potential(
            &cfg.out,
            &out.movie,
            &view,
            "the additive gauge follows E = -hbar*dphi/dt at the phase anchor; \
             at the boundaries this equals the carried mode's instantaneous \
             energy (n + 1/2)*hbar*omega(t)",
        )?;
    }
    if cfg.emit.contains(&EmitKind::Phase) {
        emit::write_phase(&cfg.out, &out.phase, &view)?;
    }
    if cfg.emit.contains(&EmitKind::Observables) {
        emit::write_observables(&cfg.out, &out.mode_run.series, &view)?;
    }

    Ok(ScenarioOutcome {
        gates: expansion_gates("", &out),
        feasible: None,
        details: expansion_details(&out, &natural),
    })
}

fn run_split(cfg: &RunConfig) -> Result<ScenarioOutcome, RunError> {
    let omega0_rad = 2.0 * std::f64::consts::PI * cfg.omega_0_hz.expect("resolved");
    let mass = cfg.mass_kg.expect("resolved");
    let scales = UnitScales::new(mass, omega0_rad)?;
    let view = UnitView {
        units: cfg.units,
        scales,
    };
    let a = cfg.separation_m.expect("resolved");
    let t_f_s = cfg.t_f_s.expect("resolved");
    // Window scales with the split: lobes at +-a need tails out to ~4a.
    let mut natural = SplittingConfig::from_si(
        mass,
        omega0_rad,
        a,
        4.0 * a,
        t_f_s,
        cfg.time_steps.expect("resolved"),
    )?;
    natural.n_points = cfg.grid_points.expect("resolved");
    natural.params = PhysicalParams::natural(natural_g(cfg.g_si.expect("resolved"), &scales));
    let out = run_splitting(&natural)?;

    if cfg.emit.contains(&EmitKind::Potential) {
        emit::write_potential(
            &cfg.out,
            &out.movie,
            &view,
            "the drive's end-flat ramps pin E = -hbar*dphi/dt to zero at both \
             boundaries; the potential is reported in that gauge",
        )?;
    }
    if cfg.emit.contains(&EmitKind::Phase) {
        emit::write_phase(&cfg.out, &out.phase, &view)?;
    }
    if cfg.emit.contains(&EmitKind::Observables) {
        emit::write_observables(&cfg.out, &out.series, &view)?;
    }

    Ok(ScenarioOutcome {
        gates: split_gates("", &out, three_well_window(t_f_s, scales.t0_s)),
        feasible: None,
        details: split_details(&out, &natural),
    })
}

fn run_quartic(cfg: &RunConfig) -> Result<ScenarioOutcome, RunError> {
    if !cfg.emit.is_empty() {
        eprintln!("stap: warning: quartic-check produces no field movies; --emit ignored");
    }
    let f0 = cfg.omega_0_hz.expect("resolved");
    let natural = QuarticConfig {
        omega_0: 1.0,
        omega_f: cfg.omega_f_hz.expect("resolved") / f0,
        eta_0: cfg.eta_0.expect("resolved"),
    };
    let out = run_quartic_check(&natural)?;
    let gates = quartic_gates("", &out, natural.omega_0 / natural.omega_f);
    let feasible = out.inverted.feasible;
    let details = serde_json::to_value(&out)
        .map_err(|e| RunError::Numerical(format!("serializing report: {e}")))?;
    Ok(ScenarioOutcome {
        gates,
        feasible: Some(feasible),
        details,
    })
}

/// The pinned reference battery: demonstration expansion, both splits, and
/// the quartic screen, gated exactly as the individual scenarios plus the
/// cross-run check that hurrying the split costs potential strength.
fn run_verify() -> Result<ScenarioOutcome, RunError> {
    let exp_cfg = ExpansionConfig::<f64>::reference();
    let exp = run_expansion(&exp_cfg)?;
    let slow_cfg = SplittingConfig::reference_slow();
    let fast_cfg = SplittingConfig::reference_fast();
    let (slow, fast) = run_splitting_pair(&slow_cfg, &fast_cfg)?;
    let quartic_cfg = QuarticConfig::<f64>::reference();
    let quartic = run_quartic_check(&quartic_cfg)?;

    let scales = UnitScales::new(1.44e-25, 2.0 * std::f64::consts::PI * 125.0)?;
    let mut gates = expansion_gates("expand/", &exp);
    gates.extend(split_gates(
        "split-80ms/",
        &slow,
        three_well_window(0.08, scales.t0_s),
    ));
    gates.extend(split_gates("split-10ms/", &fast, None));
    gates.push(Gate::at_least(
        "split-pair/hurried-drive-needs-more-potential",
        fast.max_abs_potential / slow.max_abs_potential,
        1.0,
    ));
    gates.extend(quartic_gates(
        "quartic/",
        &quartic,
        quartic_cfg.omega_0 / quartic_cfg.omega_f,
    ));

    let details = json!({
        "expansion": expansion_details(&exp, &exp_cfg),
        "split-80ms": split_details(&slow, &slow_cfg),
        "split-10ms": split_details(&fast, &fast_cfg),
        "quartic": serde_json::to_value(&quartic)
            .map_err(|e| RunError::Numerical(format!("serializing report: {e}")))?,
    });
    Ok(ScenarioOutcome {
        gates,
        feasible: None,
        details,
    })
}
