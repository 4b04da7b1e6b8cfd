//! Artifact writers: CSV field movies, observable traces, and meta files.
//!
//! Every number is printed with Rust's shortest round-trip formatting, and
//! every loop walks the stored arrays in a fixed order, so identical configs
//! produce bit-identical files regardless of thread count.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use stap_core::domain::{SpatialGrid, TimeGrid, UnitScales, UnitSystem};
use stap_core::phase_solver::PhaseField;
use stap_core::potential_builder::PotentialMovie;
use stap_core::propagator::ObservableSeries;

/// Scales natural-unit numbers into the requested output units.
#[derive(Debug, Clone, Copy)]
pub struct UnitView {
    pub units: UnitSystem,
    pub scales: UnitScales,
}

impl UnitView {
    fn factor(&self, si_scale: f64) -> f64 {
        match self.units {
            UnitSystem::Natural => 1.0,
            UnitSystem::Si => si_scale,
        }
    }

    pub fn time(&self, t: f64) -> f64 {
        t * self.factor(self.scales.t0_s)
    }

    pub fn length(&self, x: f64) -> f64 {
        x * self.factor(self.scales.x0_m)
    }

    pub fn energy(&self, e: f64) -> f64 {
        e * self.factor(self.scales.e0_j)
    }

    fn unit_names(&self) -> (&'static str, &'static str, &'static str) {
        match self.units {
            UnitSystem::Natural => ("1/omega_0", "x0 = sqrt(hbar/(m*omega_0))", "hbar*omega_0"),
            UnitSystem::Si => ("s", "m", "J"),
        }
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_meta(
    dir: &Path,
    kind: &str,
    body: serde_json::Value,
) -> io::Result<PathBuf> {
    let path = dir.join(format!("{kind}.meta.json"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &body)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn grid_meta(grid: &SpatialGrid<f64>, view: &UnitView) -> serde_json::Value {
    json!({
        "x-min": view.length(grid.x_min()),
        "x-max": view.length(grid.x_max()),
        "n-points": grid.len(),
        "dx": view.length(grid.dx()),
        "note": "x-max itself is not sampled; the window is periodic",
    })
}

fn time_meta(time: &TimeGrid<f64>, view: &UnitView) -> serde_json::Value {
    json!({
        "t-f": view.time(time.t_f()),
        "n-steps": time.n_steps(),
        "n-slices": time.n_slices(),
    })
}

fn scales_meta(view: &UnitView) -> serde_json::Value {
    json!({
        "x0-m": view.scales.x0_m,
        "t0-s": view.scales.t0_s,
        "e0-j": view.scales.e0_j,
    })
}

/// `potential.csv` + `potential.meta.json`: rows `t,x,value`, knot-major.
pub fn write_potential(
    dir: &Path,
    movie: &PotentialMovie<f64>,
    view: &UnitView,
    energy_zero: &str,
) -> io::Result<()> {
    let grid = movie.grid();
    let time = movie.time();
    let path = dir.join("potential.csv");
    let mut w = create(&path)?;
    writeln!(w, "t,x,value")?;
    for k in 0..movie.n_slices() {
        let t = view.time(time.time(k));
        for (i, &v) in movie.slice(k).iter().enumerate() {
            writeln!(w, "{},{},{}", t, view.length(grid.x(i)), view.energy(v))?;
        }
    }
    w.flush()?;

    let (t_unit, x_unit, e_unit) = view.unit_names();
    write_meta(
        dir,
        "potential",
        json!({
            "kind": "potential",
            "units": view.units,
            "columns": {"t": t_unit, "x": x_unit, "value": e_unit},
            "layout": "header `t,x,value`; rows ordered by time knot, then by x sample",
            "grid": grid_meta(grid, view),
            "time": time_meta(time, view),
            "scales": scales_meta(view),
            "energy-zero": energy_zero,
            "mask-fill": "outside the trusted density region the potential is \
                          continued with its nearest trusted value and capped",
        }),
    )?;
    Ok(())
}

/// `phase.csv` + `phase.meta.json`: the designed phase map φ(x,t) in radians.
pub fn write_phase(dir: &Path, phase: &PhaseField<f64>, view: &UnitView) -> io::Result<()> {
    let grid = phase.grid();
    let time = phase.time();
    let path = dir.join("phase.csv");
    let mut w = create(&path)?;
    writeln!(w, "t,x,value")?;
    for (k, slice) in phase.phi.iter().enumerate() {
        let t = view.time(time.time(k));
        for (i, &p) in slice.iter().enumerate() {
            writeln!(w, "{},{},{}", t, view.length(grid.x(i)), p)?;
        }
    }
    w.flush()?;

    let (t_unit, x_unit, _) = view.unit_names();
    write_meta(
        dir,
        "phase",
        json!({
            "kind": "phase",
            "units": view.units,
            "columns": {"t": t_unit, "x": x_unit, "value": "rad"},
            "layout": "header `t,x,value`; rows ordered by time knot, then by x sample",
            "grid": grid_meta(grid, view),
            "time": time_meta(time, view),
            "scales": scales_meta(view),
            "note": "the phase is integrated on the trusted density region and \
                     continued flat outside it",
        }),
    )?;
    Ok(())
}

/// `observables.csv` + `observables.meta.json`: per-step traces from the
/// verification propagation. Optional columns appear only when recorded.
pub fn write_observables(
    dir: &Path,
    series: &ObservableSeries<f64>,
    view: &UnitView,
) -> io::Result<()> {
    let path = dir.join("observables.csv");
    let mut w = create(&path)?;
    let mut header = String::from("t,norm,energy");
    if series.fidelity.is_some() {
        header.push_str(",fidelity");
    }
    if series.invariant.is_some() {
        header.push_str(",invariant");
    }
    writeln!(w, "{header}")?;
    for i in 0..series.times.len() {
        write!(
            w,
            "{},{},{}",
            view.time(series.times[i]),
            series.norm[i],
            view.energy(series.energy[i])
        )?;
        if let Some(fid) = &series.fidelity {
            write!(w, ",{}", fid[i])?;
        }
        if let Some(inv) = &series.invariant {
            write!(w, ",{}", inv[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let (t_unit, _, e_unit) = view.unit_names();
    write_meta(
        dir,
        "observables",
        json!({
            "kind": "observables",
            "units": view.units,
            "columns": {
                "t": t_unit,
                "norm": "dimensionless (target 1)",
                "energy": e_unit,
                "fidelity": "squared overlap with the designed state, dimensionless",
                "invariant": "scaling-frame invariant expectation, hbar*omega_0",
            },
            "scales": scales_meta(view),
            "max-edge-density": series.max_edge_density,
        }),
    )?;
    Ok(())
}

/// `config.json`: the resolved config echo; parsing it back reproduces the run.
pub fn write_config_echo(dir: &Path, config: &crate::config::RunConfig) -> io::Result<()> {
    let mut w = create(&dir.join("config.json"))?;
    serde_json::to_writer_pretty(&mut w, config)?;
    writeln!(w)?;
    w.flush()
}

/// `report.json`: gates, verdicts, and scenario details.
pub fn write_report(dir: &Path, report: &serde_json::Value) -> io::Result<()> {
    let mut w = create(&dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()
}
