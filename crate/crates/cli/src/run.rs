//! Command dispatch and artifact writing.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use fracperim::functionals::curvature::{default_pv_radius, fractional_mean_curvature, mean_rel_std};
use fracperim::functionals::second_variation::{angular_mode, finite_difference_oracle, translation_field};
use fracperim::functionals::{
    curvature_profile, isoperimetric_report, per_s_global, per_s_local, planar_contour_perimeter, s0_check, s1_check,
    second_variation_form, zeta_estimate, SweepPoint,
};
use fracperim::geometry::{boundary_mesh, ShapeExpr};
use fracperim::plateau::{assemble_graph_checked, solve_fixed_volume, solve_with_graph, PlateauProblem, PlateauSolution};
use fracperim::quadrature::SetArg;
use fracperim::KernelParams;

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

pub struct RunOptions {
    pub out: PathBuf,
    pub debug_checks: bool,
}

/// Tabular side output of a command.
enum Table {
    Sweep(Vec<SweepPoint>),
    Profile(Vec<[f64; 3]>, usize, Vec<f64>),
}

struct Outcome {
    result: Value,
    table: Option<Table>,
    occupancy: Option<fracperim::geometry::VoxelSet>,
}

impl Outcome {
    fn value<T: Serialize>(v: &T) -> Result<Self, CliError> {
        Ok(Outcome { result: to_value(v)?, table: None, occupancy: None })
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::io(format!("serializing the report: {e}")))
}

fn shape(c: &Option<ShapeExpr>) -> &ShapeExpr {
    c.as_ref().expect("resolved config")
}

/// Runs a resolved config and writes its artifacts under `opts.out`. Returns the report path.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(format!("creating `{}`: {e}", opts.out.display())))?;
    let out = match cfg.command {
        Command::Perimeter => perimeter(cfg)?,
        Command::PerimeterGlobal => perimeter_global(cfg)?,
        Command::Zeta => zeta(cfg)?,
        Command::S0Check | Command::S1Check => limit(cfg)?,
        Command::Curvature => curvature(cfg)?,
        Command::Isoperimetry => {
            let r = isoperimetric_report(SetArg::Shape(shape(&cfg.shape)), &cfg.kernel()?, &cfg.quadrature())?;
            Outcome::value(&r)?
        }
        Command::SecondVariation => second_variation(cfg)?,
        Command::Plateau | Command::PlateauVolume => plateau(cfg, opts.debug_checks)?,
    };

    let o = &cfg.outputs;
    if let (Some(t), Some(name)) = (&out.table, &o.csv) {
        write_table(&opts.out.join(name), t)?;
    }
    if let (Some(vs), Some(name)) = (&out.occupancy, &o.occupancy) {
        let path = opts.out.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(format!("creating `{}`: {e}", path.display())))?;
        vs.write_binary(BufWriter::new(f))?;
    }
    let report = json!({
        "command": cfg.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": to_value(cfg)?,
        "result": out.result,
        "timestamp": chrono::Utc::now().to_rfc3339(),
    });
    let path = opts.out.join(o.report.as_deref().unwrap_or("report.json"));
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("writing `{}`: {e}", path.display())))?;
    Ok(path)
}

fn write_table(path: &Path, t: &Table) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::io(format!("writing `{}`: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    match t {
        Table::Sweep(rows) => {
            w.write_record(["s", "value", "error_bound"]).map_err(io)?;
            for r in rows {
                w.write_record([r.s.to_string(), r.value.to_string(), r.error_bound.to_string()]).map_err(io)?;
            }
        }
        Table::Profile(points, n, values) => {
            let axes = ["x", "y", "z"];
            let mut head = vec!["point_index".to_string()];
            head.extend(axes[..*n].iter().map(|a| a.to_string()));
            head.push("H_s".into());
            w.write_record(&head).map_err(io)?;
            for (i, (p, h)) in points.iter().zip(values).enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(p[..*n].iter().map(|v| v.to_string()));
                row.push(h.to_string());
                w.write_record(&row).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))
}

fn kernels(cfg: &ExperimentConfig) -> Result<Vec<KernelParams>, CliError> {
    match &cfg.kernel.s_list {
        Some(list) => list.iter().map(|&s| KernelParams::new(cfg.n(), s).map_err(CliError::from)).collect(),
        None => Ok(vec![cfg.kernel()?]),
    }
}

fn perimeter(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (e, omega, q) = (shape(&cfg.shape), shape(&cfg.omega), cfg.quadrature());
    let reports = kernels(cfg)?
        .iter()
        .map(|k| per_s_local(SetArg::Shape(e), omega, k, &q))
        .collect::<fracperim::Result<Vec<_>>>()?;
    if cfg.kernel.s_list.is_none() {
        return Outcome::value(&reports[0]);
    }
    let rows = reports.iter().map(|r| SweepPoint { s: r.kernel.s, value: r.total, error_bound: r.error_bound }).collect();
    Ok(Outcome { result: json!({ "sweep": to_value(&reports)? }), table: Some(Table::Sweep(rows)), occupancy: None })
}

fn perimeter_global(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (e, q) = (shape(&cfg.shape), cfg.quadrature());
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for k in kernels(cfg)? {
        let v = per_s_global(SetArg::Shape(e), &k, &q)?;
        // planar smooth shapes also get the boundary-integral value
        let contour = if k.n == 2 { planar_contour_perimeter(e, &k).ok() } else { None };
        rows.push(SweepPoint { s: k.s, value: v.value, error_bound: v.error_bound });
        entries.push(json!({ "s": k.s, "value": v.value, "error_bound": v.error_bound, "contour": to_value(&contour)? }));
    }
    if cfg.kernel.s_list.is_none() {
        return Ok(Outcome { result: entries.remove(0), table: None, occupancy: None });
    }
    Ok(Outcome { result: json!({ "sweep": entries }), table: Some(Table::Sweep(rows)), occupancy: None })
}

fn zeta(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let e = shape(&cfg.shape);
    let z = zeta_estimate(e, cfg.kernel.s_list.as_deref().unwrap_or_default())?;
    let rows = z.samples.iter().map(|p| SweepPoint { s: p.s, value: p.value, error_bound: p.error_bound }).collect();
    let mut result = to_value(&z)?;
    result["aperture_fraction"] = to_value(&e.aperture_fraction())?;
    Ok(Outcome { result, table: Some(Table::Sweep(rows)), occupancy: None })
}

fn limit(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (e, omega, q) = (shape(&cfg.shape), shape(&cfg.omega), cfg.quadrature());
    let list = cfg.kernel.s_list.as_deref().unwrap_or_default();
    let c = if cfg.command == Command::S0Check { s0_check(e, omega, list, &q)? } else { s1_check(e, omega, list, &q)? };
    Ok(Outcome { result: to_value(&c)?, table: Some(Table::Sweep(c.samples.clone())), occupancy: None })
}

fn curvature(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (e, k, q) = (shape(&cfg.shape), cfg.kernel()?, cfg.quadrature());
    let c = &cfg.curvature;
    let delta = c.pv_radius.unwrap_or_else(|| default_pv_radius(e, k.n, &q));
    if let Some(pts) = &c.points {
        let vals = pts
            .iter()
            .map(|p| fractional_mean_curvature(e, p, &k, delta))
            .collect::<fracperim::Result<Vec<_>>>()?;
        let values: Vec<f64> = vals.iter().map(|v| v.value).collect();
        let (mean, rel_std) = mean_rel_std(&values);
        let points: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| {
                let mut a = [0.0; 3];
                a[..p.len()].copy_from_slice(p);
                a
            })
            .collect();
        let result = json!({ "points": to_value(&vals)?, "mean": mean, "rel_std": rel_std, "pv_radius": delta });
        return Ok(Outcome { result, table: Some(Table::Profile(points, k.n, values)), occupancy: None });
    }
    let mesh = boundary_mesh(e, c.mesh_resolution.unwrap_or(180))?;
    let p = curvature_profile(e, &mesh, &k, delta)?;
    let table = Table::Profile(p.mesh.points.clone(), k.n, p.values.clone());
    Ok(Outcome { result: to_value(&p)?, table: Some(table), occupancy: None })
}

fn second_variation(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (e, k) = (shape(&cfg.shape), cfg.kernel()?);
    let c = &cfg.second_variation;
    let mesh = boundary_mesh(e, c.mesh_resolution.unwrap_or(360))?;
    let form = second_variation_form(&mesh, &k)?;
    let unit_disk = matches!(e, ShapeExpr::Ball { center, radius } if k.n == 2 && *radius == 1.0 && center.iter().all(|v| *v == 0.0));
    let mut fields = Vec::new();
    let mut eval = |name: String, f: Vec<f64>, mode: Option<u32>| -> Result<(), CliError> {
        let q = form.q(&f)?;
        let oracle = match mode {
            Some(m) if c.oracle.unwrap_or(false) && unit_disk => Some(finite_difference_oracle(m, k.s)?),
            _ => None,
        };
        fields.push(json!({
            "field": name,
            "q": q,
            "jacobi_part": form.jacobi_part(&f)?,
            "weight_part": form.weight_part(&f)?,
            "norm2": form.norm2(&f),
            "oracle": to_value(&oracle)?,
            "oracle_relative_gap": oracle.map(|o| q / o.value - 1.0),
        }));
        Ok(())
    };
    eval("constant".into(), vec![1.0; mesh.len()], None)?;
    for axis in 0..k.n {
        eval(format!("translation_{axis}"), translation_field(&mesh, axis), None)?;
    }
    if k.n == 2 {
        for &m in c.modes.as_deref().unwrap_or_default() {
            eval(format!("cos_{m}phi"), angular_mode(&mesh, m), Some(m))?;
        }
    }
    let result = json!({
        "points": mesh.len(),
        "label": form.label,
        "beta": form.beta,
        "normalization": form.normalization,
        "skipped_pairs": form.skipped_pairs,
        "calibration": to_value(&form.calibration)?,
        "fields": fields,
    });
    Ok(Outcome { result, table: None, occupancy: None })
}

#[derive(Serialize)]
struct PlateauReport<'a> {
    free_cells: usize,
    kept_pairs: usize,
    dense_pair_count: usize,
    pair_cutoff: f64,
    energy: f64,
    energy_all_pairs: f64,
    /// Bound on the energy of pairs beyond the cutoff.
    dropped_pair_bound: f64,
    /// Quadrature error of the unary (datum) terms.
    unary_error: f64,
    volume: f64,
    volume_tolerance: f64,
    /// In cell layers.
    flatness: Option<f64>,
    flatness_tolerance: f64,
    max_trace_gap: f64,
    boundary_trace_gap: &'a [fracperim::plateau::TraceGap],
}

fn plateau_report(p: &PlateauProblem, s: &PlateauSolution) -> Result<Value, CliError> {
    to_value(&PlateauReport {
        free_cells: s.free_cells.len(),
        kept_pairs: s.kept_pairs,
        dense_pair_count: p.dense_pair_count(),
        pair_cutoff: p.cutoff(),
        energy: s.energy,
        energy_all_pairs: s.energy_all_pairs,
        dropped_pair_bound: s.dropped_pair_bound,
        unary_error: s.unary_error,
        volume: s.volume,
        volume_tolerance: 0.0,
        flatness: s.flatness,
        flatness_tolerance: 1.0,
        max_trace_gap: s.max_trace_gap,
        boundary_trace_gap: &s.boundary_trace_gap,
    })
}

fn plateau(cfg: &ExperimentConfig, debug_checks: bool) -> Result<Outcome, CliError> {
    let p = PlateauProblem {
        grid: cfg.grid.clone().expect("resolved config"),
        omega: shape(&cfg.omega).clone(),
        exterior_datum: shape(&cfg.exterior).clone(),
        kernel: cfg.kernel()?,
        pair_cutoff: cfg.plateau.pair_cutoff,
        quadrature: cfg.quadrature(),
    };
    p.validate()?;
    let checks = debug_checks.then(|| cfg.seed.unwrap_or(crate::config::DEFAULT_SEED));
    if cfg.command == Command::Plateau {
        let (sol, _) = solve_with_graph(&p, checks)?;
        let result = plateau_report(&p, &sol)?;
        return Ok(Outcome { result, table: None, occupancy: Some(sol.to_voxels(&p)?) });
    }
    if checks.is_some() {
        assemble_graph_checked(&p, checks)?;
    }
    let target = cfg.plateau.target_volume.expect("resolved config");
    let f = solve_fixed_volume(&p, target, cfg.plateau.mu_tol.unwrap_or(1e-9))?;
    let mut result = plateau_report(&p, &f.solution)?;
    result["target_volume"] = json!(f.target_volume);
    result["volume_gap"] = json!(f.volume_gap);
    result["volume_gap_tolerance"] = json!(fracperim::plateau::VOLUME_REL_TOL * f.target_volume);
    result["mu"] = json!(f.mu);
    result["mu_tolerance"] = json!(cfg.plateau.mu_tol);
    result["mu_path"] = to_value(&f.mu_path)?;
    Ok(Outcome { result, table: None, occupancy: Some(f.solution.to_voxels(&p)?) })
}
