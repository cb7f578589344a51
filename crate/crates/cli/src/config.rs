//! Experiment configuration and its command-specific validation.

use serde::{Deserialize, Serialize};

use fracperim::geometry::{GridSpec, ShapeExpr};
use fracperim::quadrature::QuadratureOptions;
use fracperim::KernelParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Perimeter,
    PerimeterGlobal,
    Zeta,
    S0Check,
    S1Check,
    Curvature,
    Isoperimetry,
    SecondVariation,
    Plateau,
    PlateauVolume,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Perimeter => "perimeter",
            Command::PerimeterGlobal => "perimeter-global",
            Command::Zeta => "zeta",
            Command::S0Check => "s0-check",
            Command::S1Check => "s1-check",
            Command::Curvature => "curvature",
            Command::Isoperimetry => "isoperimetry",
            Command::SecondVariation => "second-variation",
            Command::Plateau => "plateau",
            Command::PlateauVolume => "plateau-volume",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Ambient dimension; taken from the shapes when absent.
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub s_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Boundary mesh resolution (points on a circle, rings on a sphere).
    pub mesh_resolution: Option<usize>,
    pub pv_radius: Option<f64>,
    /// Explicit evaluation points; replaces the mesh when present.
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondVariationConfig {
    pub mesh_resolution: Option<usize>,
    /// Angular modes `cos(k phi)` evaluated besides the translations.
    pub modes: Option<Vec<u32>>,
    /// Compare each mode with the finite-difference oracle (unit disk only).
    pub oracle: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub pair_cutoff: Option<f64>,
    pub target_volume: Option<f64>,
    pub mu_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<String>,
    pub csv: Option<String>,
    pub occupancy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub shape: Option<ShapeExpr>,
    pub omega: Option<ShapeExpr>,
    pub exterior: Option<ShapeExpr>,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub grid: Option<GridSpec>,
    pub quadrature: Option<QuadratureOptions>,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub second_variation: SecondVariationConfig,
    #[serde(default)]
    pub plateau: PlateauConfig,
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

fn missing(field: &str, cmd: Command) -> CliError {
    CliError::validation(format!("missing field `{field}`: required by command `{}`", cmd.name()))
}

fn invalid(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("invalid `{field}`: {e}"))
}

fn check_shape(field: &str, e: &Option<ShapeExpr>, cmd: Command) -> Result<usize, CliError> {
    let e = e.as_ref().ok_or_else(|| missing(field, cmd))?;
    e.validate().map_err(|err| invalid(field, err))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    /// Checks the fields the command needs and fills in every default, so the
    /// returned config is the complete description of the run.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        use Command::*;
        let cmd = self.command;
        let needs_shape = !matches!(cmd, Plateau | PlateauVolume);
        let mut dims = Vec::new();
        if needs_shape {
            dims.push(("shape", check_shape("shape", &self.shape, cmd)?));
        }
        if matches!(cmd, Perimeter | S0Check | S1Check | Plateau | PlateauVolume) {
            dims.push(("omega", check_shape("omega", &self.omega, cmd)?));
        }
        if matches!(cmd, Plateau | PlateauVolume) {
            dims.push(("exterior", check_shape("exterior", &self.exterior, cmd)?));
            let g = self.grid.as_ref().ok_or_else(|| missing("grid", cmd))?;
            g.validate().map_err(|e| invalid("grid", e))?;
            dims.push(("grid", g.dim()));
        }
        let n = match self.kernel.n {
            Some(n) => n,
            None => dims[0].1,
        };
        if !(1..=3).contains(&n) {
            return Err(invalid("kernel.n", format!("must lie in 1..=3, got {n}")));
        }
        for (field, d) in &dims {
            if *d != n {
                return Err(invalid(field, format!("has dimension {d}, expected {n}")));
            }
        }
        self.kernel.n = Some(n);

        let sweep_default: Option<&[f64]> = match cmd {
            Zeta => Some(&[0.2, 0.1, 0.05, 0.025]),
            S0Check => Some(&[0.1, 0.05, 0.025]),
            S1Check => Some(&[0.8, 0.9, 0.95]),
            _ => None,
        };
        match sweep_default {
            Some(d) => {
                let list = self.kernel.s_list.get_or_insert_with(|| d.to_vec());
                if list.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
                    return Err(invalid("kernel.s_list", "values must lie in (0,1)"));
                }
                if self.kernel.s.is_some() {
                    return Err(invalid("kernel.s", format!("command `{}` sweeps `kernel.s_list`; remove `kernel.s`", cmd.name())));
                }
            }
            None => {
                let sweepable = matches!(cmd, Perimeter | PerimeterGlobal);
                match (&self.kernel.s, &self.kernel.s_list) {
                    (Some(s), None) => {
                        KernelParams::new(n, *s).map_err(|e| invalid("kernel.s", e))?;
                    }
                    (None, Some(list)) if sweepable => {
                        if list.is_empty() || list.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
                            return Err(invalid("kernel.s_list", "must be non-empty with values in (0,1)"));
                        }
                    }
                    (Some(_), Some(_)) => return Err(invalid("kernel", "give either `kernel.s` or `kernel.s_list`, not both")),
                    _ => return Err(missing("kernel.s", cmd)),
                }
            }
        }

        let q = self.quadrature.get_or_insert_with(|| QuadratureOptions::for_dim(n));
        q.validate().map_err(|e| CliError::validation(e.to_string()))?;

        match cmd {
            Curvature => {
                let c = &mut self.curvature;
                if let Some(pts) = &c.points {
                    if pts.is_empty() || pts.iter().any(|p| p.len() != n) {
                        return Err(invalid("curvature.points", format!("must be a non-empty list of {n}-vectors")));
                    }
                } else {
                    let r = *c.mesh_resolution.get_or_insert(if n == 3 { 12 } else { 180 });
                    if r == 0 {
                        return Err(invalid("curvature.mesh_resolution", "must be positive"));
                    }
                }
                if let Some(d) = c.pv_radius {
                    if !(d > 0.0) {
                        return Err(invalid("curvature.pv_radius", "must be positive"));
                    }
                }
            }
            SecondVariation => {
                if n < 2 {
                    return Err(invalid("kernel.n", "the second variation needs n >= 2"));
                }
                let c = &mut self.second_variation;
                let r = *c.mesh_resolution.get_or_insert(if n == 3 { 10 } else { 360 });
                if r == 0 {
                    return Err(invalid("second_variation.mesh_resolution", "must be positive"));
                }
                c.modes.get_or_insert_with(|| vec![2, 3]);
                c.oracle.get_or_insert(n == 2);
            }
            Plateau | PlateauVolume => {
                let p = &mut self.plateau;
                if let Some(c) = p.pair_cutoff {
                    if !(c > 0.0) {
                        return Err(invalid("plateau.pair_cutoff", "must be positive"));
                    }
                }
                if cmd == PlateauVolume {
                    let t = p.target_volume.ok_or_else(|| missing("plateau.target_volume", cmd))?;
                    if !(t >= 0.0) {
                        return Err(invalid("plateau.target_volume", "must be nonnegative"));
                    }
                    let tol = *p.mu_tol.get_or_insert(1e-9);
                    if !(tol > 0.0) {
                        return Err(invalid("plateau.mu_tol", "must be positive"));
                    }
                }
            }
            _ => {}
        }

        self.seed.get_or_insert(DEFAULT_SEED);
        let o = &mut self.outputs;
        o.report.get_or_insert_with(|| "report.json".into());
        if matches!(cmd, Zeta | S0Check | S1Check) || (matches!(cmd, Perimeter | PerimeterGlobal) && self.kernel.s_list.is_some()) {
            o.csv.get_or_insert_with(|| "sweep.csv".into());
        }
        if cmd == Curvature {
            o.csv.get_or_insert_with(|| "profile.csv".into());
        }
        if matches!(cmd, Plateau | PlateauVolume) {
            o.occupancy.get_or_insert_with(|| "occupancy.bin".into());
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.kernel.n.expect("resolved config")
    }

    pub fn kernel(&self) -> Result<KernelParams, CliError> {
        let s = self.kernel.s.ok_or_else(|| missing("kernel.s", self.command))?;
        KernelParams::new(self.n(), s).map_err(|e| invalid("kernel.s", e))
    }

    pub fn quadrature(&self) -> QuadratureOptions {
        self.quadrature.expect("resolved config")
    }
}
