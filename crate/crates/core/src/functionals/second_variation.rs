//! Calibrated second-variation quadratic form on boundary meshes.
//!
//! `Q(f) = scale * [ J(f) - beta * W(f) ]` with the Dirichlet-type part
//! `J(f) = 1/2 sum_{i != j} w_i w_j (f_i - f_j)^2 K_ij` and the weight part
//! `W(f) = sum_i w_i f_i^2 c2_i`, `c2_i = sum_{j != i} w_j |nu_i - nu_j|^2 K_ij`,
//! `K_ij = |x_i - x_j|^{-(n+s)}`.
//!
//! `beta` makes translations neutral on a unit-ball mesh with the same number
//! of points. In the plane `scale` is fitted to the second derivative of the
//! perimeter along `r = 1 + t cos(3 phi)` minus the same along `cos(phi)` (which
//! has the same first-order volume change); in 3D the continuum value
//! `2 s (1-s)` is used.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::radial_graph_perimeter;
use crate::error::{Error, Result};
use crate::geometry::shape::{dot, RadialMode};
use crate::geometry::{boundary_mesh, BoundaryMesh, ShapeExpr, P3};
use crate::kernel::KernelParams;
use crate::quadrature::InteractionEstimate;

/// Perturbation mode used to fix the overall scale in the plane.
pub const REFERENCE_MODE: u32 = 3;
/// Pairs closer than this fraction of the mesh spacing are treated as coincident.
const COINCIDENT: f64 = 1e-6;
const FD_STEPS: [f64; 2] = [0.02, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub beta: f64,
    /// Largest `|Q(nu . e_a)| / ||nu . e_a||^2` over the axes on the reference ball mesh.
    pub translation_residual: f64,
    pub scale: f64,
    /// "finite_difference" (planar) or "continuum" (3D).
    pub scale_source: String,
    pub reference_mode: Option<u32>,
    /// Finite-difference value of the reference perturbation and its error.
    pub reference_value: Option<f64>,
    pub reference_error: Option<f64>,
    pub reference_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondVariationForm {
    pub mesh: BoundaryMesh,
    pub kernel: KernelParams,
    /// `c2_i`.
    pub weights: Vec<f64>,
    pub normalization: f64,
    pub beta: f64,
    pub calibration: Calibration,
    /// Coincident point pairs excluded from the sums.
    pub skipped_pairs: usize,
    pub label: String,
}

fn kern(a: &P3, b: &P3, e: f64) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(&d, &d).powf(-0.5 * e)
}

/// Typical point spacing `(total weight / N)^{1/(n-1)}`.
fn spacing(mesh: &BoundaryMesh) -> f64 {
    (mesh.total_weight() / mesh.len() as f64).powf(1.0 / (mesh.dim as f64 - 1.0))
}

struct Sums {
    mesh: BoundaryMesh,
    e: f64,
    tiny: f64,
}

impl Sums {
    fn pair_ok(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (&self.mesh.points[i], &self.mesh.points[j]);
        let d2 = (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
        if i == j || d2 <= self.tiny * self.tiny {
            None
        } else {
            Some(kern(a, b, self.e))
        }
    }

    fn jacobi(&self, f: &[f64]) -> f64 {
        let w = &self.mesh.weights;
        let rows: Vec<f64> = (0..f.len())
            .into_par_iter()
            .map(|i| {
                (0..f.len())
                    .filter_map(|j| self.pair_ok(i, j).map(|k| w[j] * (f[i] - f[j]).powi(2) * k))
                    .sum::<f64>()
                    * w[i]
            })
            .collect();
        0.5 * crate::sum::compensated_sum(rows)
    }

    fn c2(&self) -> Vec<f64> {
        let m = &self.mesh;
        (0..m.len())
            .into_par_iter()
            .map(|i| {
                (0..m.len())
                    .filter_map(|j| {
                        self.pair_ok(i, j).map(|k| {
                            let d = [m.normals[i][0] - m.normals[j][0], m.normals[i][1] - m.normals[j][1], m.normals[i][2] - m.normals[j][2]];
                            m.weights[j] * dot(&d, &d) * k
                        })
                    })
                    .sum()
            })
            .collect()
    }

    fn weight_part(&self, c2: &[f64], f: &[f64]) -> f64 {
        crate::sum::compensated_sum((0..f.len()).map(|i| self.mesh.weights[i] * f[i] * f[i] * c2[i]))
    }
}

fn check_mesh(mesh: &BoundaryMesh, k: &KernelParams) -> Result<f64> {
    mesh.validate()?;
    if mesh.dim != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: mesh.dim });
    }
    if mesh.dim < 2 {
        return Err(Error::UnsupportedDimension(mesh.dim));
    }
    if mesh.len() < 4 {
        return Err(Error::InvalidMesh("too few points".into()));
    }
    // a closed surface has zero total vector area
    let total = mesh.total_weight();
    let mut flux = [0.0; 3];
    for (nv, w) in mesh.normals.iter().zip(&mesh.weights) {
        for c in 0..3 {
            flux[c] += w * nv[c];
        }
    }
    if dot(&flux, &flux).sqrt() > 1e-6 * total {
        return Err(Error::InvalidMesh("boundary is not closed (nonzero total vector area)".into()));
    }
    let h = spacing(mesh);
    let tiny = COINCIDENT * h;
    let mut skipped = 0;
    for i in 0..mesh.len() {
        for j in i + 1..mesh.len() {
            let (a, b) = (&mesh.points[i], &mesh.points[j]);
            let d2 = (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
            if d2 <= tiny * tiny {
                if dot(&mesh.normals[i], &mesh.normals[j]) < 0.5 {
                    return Err(Error::InvalidMesh(format!("self-intersection at points {i} and {j}")));
                }
                skipped += 1;
            }
        }
    }
    Ok(skipped as f64)
}

/// `nu . e_axis` at every mesh point.
pub fn translation_field(mesh: &BoundaryMesh, axis: usize) -> Vec<f64> {
    mesh.normals.iter().map(|nv| nv[axis]).collect()
}

/// `cos(k phi)` of the polar angle of every point about the origin.
pub fn angular_mode(mesh: &BoundaryMesh, k: u32) -> Vec<f64> {
    mesh.points.iter().map(|p| (k as f64 * p[1].atan2(p[0])).cos()).collect()
}

/// `d^2/dt^2 [Per_s(r < 1 + t cos(k phi)) - Per_s(r < 1 + t cos(phi))]` at `t = 0`
/// from central differences of the boundary-integral perimeter, extrapolated in `t^2`.
pub fn finite_difference_oracle(k_mode: u32, s: f64) -> Result<InteractionEstimate> {
    let p0 = radial_graph_perimeter(1.0, &[], s)?;
    let second = |k: u32, t: f64| -> Result<(f64, f64)> {
        let m = |a: f64| [RadialMode { k, amplitude: a, phase: 0.0 }];
        let pp = radial_graph_perimeter(1.0, &m(t), s)?;
        let pm = radial_graph_perimeter(1.0, &m(-t), s)?;
        let v = (pp.value - 2.0 * p0.value + pm.value) / (t * t);
        Ok((v, (pp.error_bound + 2.0 * p0.error_bound + pm.error_bound) / (t * t)))
    };
    let extrap = |k: u32| -> Result<(f64, f64)> {
        let (a, ea) = second(k, FD_STEPS[0])?;
        let (b, eb) = second(k, FD_STEPS[1])?;
        // D(t) = D(0) + c t^2
        let r = b + (b - a) / 3.0;
        Ok((r, (b - a).abs() / 3.0 + (4.0 * eb + ea) / 3.0))
    };
    let (vk, ek) = extrap(k_mode)?;
    let (v1, e1) = extrap(1)?;
    Ok(InteractionEstimate::new(vk - v1, ek + e1))
}

/// Reference unit-ball mesh with the point count closest to `points`.
fn reference_ball(n: usize, points: usize) -> Result<BoundaryMesh> {
    if n == 2 {
        return boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0], 1.0), points);
    }
    let ball = ShapeExpr::ball(&[0.0, 0.0, 0.0], 1.0);
    let mut best = boundary_mesh(&ball, 2)?;
    for res in 3.. {
        let m = boundary_mesh(&ball, res)?;
        if m.len().abs_diff(points) < best.len().abs_diff(points) {
            best = m;
        } else if m.len() > points {
            break;
        }
    }
    Ok(best)
}

/// Assembles and calibrates the form on `mesh`.
pub fn second_variation_form(mesh: &BoundaryMesh, k: &KernelParams) -> Result<SecondVariationForm> {
    let skipped = check_mesh(mesh, k)?;
    let e = k.exponent();
    let sums = |m: &BoundaryMesh| Sums { mesh: m.clone(), e, tiny: COINCIDENT * spacing(m) };

    let ball = sums(&reference_ball(k.n, mesh.len())?);
    let bc2 = ball.c2();
    // translations along every axis are neutral in the continuum; on a mesh
    // they are balanced jointly
    let fields: Vec<Vec<f64>> = (0..k.n).map(|a| translation_field(&ball.mesh, a)).collect();
    let beta = fields.iter().map(|t| ball.jacobi(t)).sum::<f64>() / fields.iter().map(|t| ball.weight_part(&bc2, t)).sum::<f64>();
    let bq = |f: &[f64]| ball.jacobi(f) - beta * ball.weight_part(&bc2, f);
    let bnorm = |f: &[f64]| crate::sum::compensated_sum((0..f.len()).map(|i| ball.mesh.weights[i] * f[i] * f[i]));

    let (scale, calib_extra) = if k.n == 2 {
        let oracle = finite_difference_oracle(REFERENCE_MODE, k.s)?;
        let q = bq(&angular_mode(&ball.mesh, REFERENCE_MODE));
        (oracle.value / q, Some(oracle))
    } else {
        (2.0 * k.normalization(), None)
    };
    let calibration = Calibration {
        beta,
        translation_residual: fields.iter().map(|t| (scale * bq(t)).abs() / bnorm(t)).fold(0.0, f64::max),
        scale,
        scale_source: if calib_extra.is_some() { "finite_difference" } else { "continuum" }.into(),
        reference_mode: calib_extra.map(|_| REFERENCE_MODE),
        reference_value: calib_extra.map(|o| o.value),
        reference_error: calib_extra.map(|o| o.error_bound),
        reference_points: ball.mesh.len(),
    };

    let own = sums(mesh);
    let weights = own.c2();
    Ok(SecondVariationForm {
        mesh: mesh.clone(),
        kernel: *k,
        weights,
        normalization: scale,
        beta,
        calibration,
        skipped_pairs: skipped as usize,
        label: "calibrated".into(),
    })
}

impl SecondVariationForm {
    fn sums(&self) -> Sums {
        Sums { mesh: self.mesh.clone(), e: self.kernel.exponent(), tiny: COINCIDENT * spacing(&self.mesh) }
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.mesh.len() {
            return Err(Error::DimensionMismatch { expected: self.mesh.len(), got: f.len() });
        }
        Ok(())
    }

    pub fn jacobi_part(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.sums().jacobi(f))
    }

    pub fn weight_part(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.sums().weight_part(&self.weights, f))
    }

    pub fn q(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        let s = self.sums();
        Ok(self.normalization * (s.jacobi(f) - self.beta * s.weight_part(&self.weights, f)))
    }

    /// `sum_i w_i f_i^2`.
    pub fn norm2(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mesh.weights).map(|(v, w)| w * v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize) -> BoundaryMesh {
        boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0], 1.0), n).unwrap()
    }

    #[test]
    fn constants_and_translations() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let m = disk(120);
        let form = second_variation_form(&m, &k).unwrap();
        let one = vec![1.0; m.len()];
        assert_eq!(form.jacobi_part(&one).unwrap(), 0.0);
        assert!(form.q(&one).unwrap() < 0.0);
        for axis in 0..2 {
            let t = translation_field(&m, axis);
            assert!(form.q(&t).unwrap().abs() <= 1e-3 * form.norm2(&t));
        }
        assert!(form.weights.iter().all(|c| *c >= 0.0));
        assert_eq!(form.label, "calibrated");
    }

    #[test]
    fn matches_the_finite_difference_oracle() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let m = disk(360);
        let form = second_variation_form(&m, &k).unwrap();
        let fd = finite_difference_oracle(2, 0.5).unwrap();
        let q = form.q(&angular_mode(&m, 2)).unwrap();
        assert!((q / fd.value - 1.0).abs() < 0.05, "{q} {fd:?}");
        // continuum limits: beta = 1/2, scale -> 2 s (1-s)
        assert!((form.beta - 0.5).abs() < 1e-12);
        assert!((form.normalization - 0.5).abs() < 0.1);
    }

    #[test]
    fn three_dimensional_ball() {
        let k = KernelParams::new(3, 0.5).unwrap();
        let m = boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0, 0.0], 1.0), 10).unwrap();
        let form = second_variation_form(&m, &k).unwrap();
        // sum_a (nu_a(x) - nu_a(y))^2 = |nu(x) - nu(y)|^2 forces beta = 1/2 on any sphere mesh
        assert!((form.beta - 0.5).abs() < 1e-12);
        let total: f64 = (0..3).map(|a| form.q(&translation_field(&m, a)).unwrap()).sum();
        assert!(total.abs() < 1e-9 * form.jacobi_part(&translation_field(&m, 0)).unwrap());
        // single axes see the anisotropy of the ring mesh
        assert!(form.calibration.translation_residual < 0.05);
        assert_eq!(form.calibration.scale_source, "continuum");
    }

    #[test]
    fn rejects_open_and_self_intersecting_meshes() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let mut m = disk(40);
        m.points.truncate(30);
        m.normals.truncate(30);
        m.weights.truncate(30);
        assert!(matches!(second_variation_form(&m, &k), Err(Error::InvalidMesh(_))));
        let mut m = disk(40);
        let extra = BoundaryMesh { dim: 2, points: vec![[1.0, 0.0, 0.0]; 2], normals: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], weights: vec![0.1; 2] };
        m.points.extend(extra.points);
        m.normals.extend(extra.normals);
        m.weights.extend(extra.weights);
        assert!(matches!(second_variation_form(&m, &k), Err(Error::InvalidMesh(_))));
    }
}
