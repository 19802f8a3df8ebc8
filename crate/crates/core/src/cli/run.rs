use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use super::config::{Mode, RunConfig};
use crate::birkhoff::{is_closed_geodesic, tighten, PsiConfig, TightenStatus};
use crate::curves::{latitude_circle, wiggly_loop, DiscreteClosedCurve};
use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::sweepout::{
    analyze_band, init_latitude_sweepout, sweep_rows_csv, tighten_sweepout_traced, ReferenceFamily, Sweepout,
    WidthEstimate,
};
use crate::verify::{checks_csv, run_suite, SuiteConfig};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const CHECKS_FILE: &str = "checks.csv";
pub const CURVE_FILE: &str = "curve.json";

/// Amplitude of the built-in torus loop.
pub const WIGGLE_AMPLITUDE: f64 = 0.1;
/// Height `cos(π/3)` of the built-in sphere curve, a latitude at polar angle π/3.
pub const LATITUDE_HEIGHT: f64 = 0.5;
pub const DEFAULT_TORUS_BREAKS: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub report: Value,
    pub passed: bool,
    /// Human-readable lines for the console.
    pub summary: Vec<String>,
}

struct ModeOutput {
    results: Vec<Value>,
    passed: bool,
    summary: Vec<String>,
    files: Vec<(&'static str, String)>,
}

/// Executes the configured mode and writes its artifacts under `cfg.out`.
///
/// An existing output directory is an error unless `force` is set.
pub fn run(cfg: &RunConfig, force: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    prepare_out_dir(&cfg.out, force)?;
    let start = Instant::now();
    let out = match cfg.mode {
        Mode::TightenCurve => run_tighten_curve(cfg)?,
        Mode::TightenSweepout => run_sweepout(cfg, false)?,
        Mode::MainThm => run_sweepout(cfg, true)?,
        Mode::Verify => run_verify(cfg)?,
    };
    for (name, text) in &out.files {
        fs::write(cfg.out.join(name), text)?;
    }
    let report = json!({
        "mode": cfg.mode.name(),
        "config": cfg,
        "results": out.results,
        "passed": out.passed,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(cfg.out.join(REPORT_FILE), text + "\n")?;
    Ok(RunOutcome {
        report,
        passed: out.passed,
        summary: out.summary,
    })
}

fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() && !force {
        return Err(Error::Io(format!(
            "output directory {} already exists; pass --force to overwrite",
            dir.display()
        )));
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

/// The curve file if one is configured, otherwise the built-in curve of the space.
pub fn initial_curve(cfg: &RunConfig) -> Result<DiscreteClosedCurve> {
    if let Some(path) = &cfg.curve {
        let text = fs::read_to_string(path)?;
        let c: DiscreteClosedCurve =
            serde_json::from_str(&text).map_err(|e| Error::InvalidCurve(format!("{}: {e}", path.display())))?;
        if *c.space() != cfg.space {
            return Err(Error::Config(format!(
                "curve in {} lives in a different space",
                path.display()
            )));
        }
        return Ok(c);
    }
    match cfg.space.kind() {
        SpaceKind::FlatTorus => wiggly_loop(&cfg.space, WIGGLE_AMPLITUDE, cfg.breaks.unwrap_or(DEFAULT_TORUS_BREAKS)),
        SpaceKind::Sphere => latitude_circle(&cfg.space, LATITUDE_HEIGHT, cfg.breaks.unwrap_or(2 * cfg.l * cfg.l)),
        k => Err(Error::Config(format!("no built-in curve on {}; set `curve`", k.name()))),
    }
}

fn run_tighten_curve(cfg: &RunConfig) -> Result<ModeOutput> {
    let psi_cfg = PsiConfig::for_space(&cfg.space, cfg.l)?;
    let curve = initial_curve(cfg)?;
    let (last, rep) = tighten(&curve, &psi_cfg, cfg.max_iters, cfg.tol)?;
    let initial_winding = curve.winding();
    let winding_preserved = rep.records.iter().all(|r| r.winding == initial_winding);
    let fin = rep.final_record().copied();
    let passed = rep.status == TightenStatus::Converged && winding_preserved;
    let mut summary = vec![format!(
        "status {:?} after {} iterations",
        rep.status,
        rep.records.len()
    )];
    if let Some(r) = fin {
        summary.push(format!(
            "final length {:.12} energy {:.12} residual {:.3e}",
            r.length, r.energy, r.residual
        ));
    }
    let result = json!({
        "status": rep.status,
        "iterations": rep.records.len(),
        "initial_length": curve.length(),
        "final": fin,
        "initial_winding": initial_winding,
        "winding_preserved": winding_preserved,
        "closed_geodesic": is_closed_geodesic(&last, &psi_cfg)?,
        "psi": psi_cfg,
    });
    let curve_json = serde_json::to_string_pretty(&last).map_err(|e| Error::Io(e.to_string()))? + "\n";
    Ok(ModeOutput {
        results: vec![result],
        passed,
        summary,
        files: vec![(TRACE_FILE, rep.to_csv()?), (CURVE_FILE, curve_json)],
    })
}

/// Latitude sweepout on the sphere; the built-in (or configured) loop on the torus.
pub fn initial_sweepout(cfg: &RunConfig) -> Result<Sweepout> {
    match cfg.space.kind() {
        SpaceKind::Sphere if cfg.curve.is_none() => init_latitude_sweepout(cfg.space.curvature(), cfg.l, cfg.n_slices),
        _ => Sweepout::single_loop(initial_curve(cfg)?),
    }
}

fn history_monotone(we: &WidthEstimate) -> bool {
    we.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
}

fn run_sweepout(cfg: &RunConfig, band: bool) -> Result<ModeOutput> {
    let psi_cfg = PsiConfig::for_space(&cfg.space, cfg.l)?;
    let sw = initial_sweepout(cfg)?;
    let (tight, we, rows) = tighten_sweepout_traced(&sw, &psi_cfg, cfg.sweeps)?;
    let continuity = tight.max_continuity_ratio(psi_cfg.samples)?;
    let continuity_ok = tight.kappa().is_none_or(|k| continuity <= k);
    let windings_kept = tight.windings() == sw.windings();
    let monotone = history_monotone(&we);
    let mut passed = continuity_ok && windings_kept && monotone && we.value > 0.0;
    let mut summary = vec![format!(
        "width {:.12} at slice {} after {} sweeps (initial {:.12})",
        we.value, we.argmax_index, cfg.sweeps, we.history[0]
    )];
    let mut result = json!({
        "width": we,
        "slices": tight.slices().len(),
        "continuity_ratio": continuity,
        "kappa": tight.kappa(),
        "continuity_ok": continuity_ok,
        "windings_preserved": windings_kept,
        "history_monotone": monotone,
    });
    if band {
        let reference = ReferenceFamily::for_space(&cfg.space)?;
        let report = analyze_band(&tight, we, &psi_cfg, &cfg.delta, reference)?;
        for r in &report.rows {
            summary.push(format!(
                "delta {:.4}·W: {} slices, max dist {:.3e}, max residual {:.3e}",
                r.delta_fraction,
                r.slices.len(),
                r.max_dist,
                r.max_residual
            ));
        }
        passed &= report.monotone;
        result["reference"] = to_value(&reference)?;
        result["band"] = to_value(&report)?;
    }
    Ok(ModeOutput {
        results: vec![result],
        passed,
        summary,
        files: vec![(TRACE_FILE, sweep_rows_csv(&rows)?)],
    })
}

fn run_verify(cfg: &RunConfig) -> Result<ModeOutput> {
    let suite = SuiteConfig::new(cfg.space, cfg.l, cfg.seed);
    let results = run_suite(&suite)?;
    let passed = results.iter().all(|r| r.passed);
    let summary = results
        .iter()
        .map(|r| {
            format!(
                "{:<18} {:>7} samples  worst margin {:+.3e}  {}",
                r.name,
                r.samples,
                r.worst_margin,
                if r.passed { "pass" } else { "FAIL" }
            )
        })
        .collect();
    Ok(ModeOutput {
        results: results.iter().map(to_value).collect::<Result<_>>()?,
        passed,
        summary,
        files: vec![(CHECKS_FILE, checks_csv(&results)?)],
    })
}
