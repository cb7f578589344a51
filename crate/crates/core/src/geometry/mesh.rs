//! Sampled boundaries with outward normals and quadrature weights.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::shape::{norm, p3, radial_radius, radial_radius_deriv, ShapeExpr, P3};
use crate::error::{Error, Result};
use crate::quadrature::rules::gauss_legendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMesh {
    pub dim: usize,
    pub points: Vec<P3>,
    pub normals: Vec<P3>,
    pub weights: Vec<f64>,
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::sum::compensated_sum(self.weights.iter().copied())
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.normals.len() || self.points.len() != self.weights.len() {
            return Err(Error::param("mesh", "points, normals and weights differ in length"));
        }
        for nv in &self.normals {
            if (norm(nv) - 1.0).abs() > 1e-12 {
                return Err(Error::param("mesh.normals", "normals must be unit vectors"));
            }
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::param("mesh.weights", "weights must be positive"));
        }
        Ok(())
    }

    fn map(mut self, f: impl Fn(P3) -> P3, g: impl Fn(P3) -> P3, wscale: f64) -> Self {
        for p in self.points.iter_mut() {
            *p = f(*p);
        }
        for nv in self.normals.iter_mut() {
            let v = g(*nv);
            let l = norm(&v);
            *nv = v.map(|c| c / l);
        }
        for w in self.weights.iter_mut() {
            *w *= wscale;
        }
        self
    }
}

/// Boundary samples of a shape; `resolution` controls the point count.
pub fn boundary_mesh(shape: &ShapeExpr, resolution: usize) -> Result<BoundaryMesh> {
    let n = shape.validate()?;
    if resolution == 0 {
        return Err(Error::param("resolution", "must be positive"));
    }
    build(shape, n, resolution)
}

fn build(shape: &ShapeExpr, n: usize, res: usize) -> Result<BoundaryMesh> {
    match shape {
        ShapeExpr::Ball { center, radius } => Ok(ball_mesh(n, &p3(center), *radius, res)),
        ShapeExpr::Box { lo, hi } => Ok(box_mesh(n, &p3(lo), &p3(hi), res)),
        ShapeExpr::RadialGraph { center, radius, modes } => {
            let c = p3(center);
            let mut m = BoundaryMesh { dim: 2, points: vec![], normals: vec![], weights: vec![] };
            let dphi = 2.0 * PI / res as f64;
            for k in 0..res {
                let phi = k as f64 * dphi;
                let r = radial_radius(*radius, modes, phi);
                let rp = radial_radius_deriv(*radius, modes, phi);
                let (s, co) = phi.sin_cos();
                let t = [rp * co - r * s, rp * s + r * co, 0.0];
                let speed = norm(&t);
                m.points.push([c[0] + r * co, c[1] + r * s, 0.0]);
                m.normals.push([t[1] / speed, -t[0] / speed, 0.0]);
                m.weights.push(speed * dphi);
            }
            Ok(m)
        }
        ShapeExpr::Translate { arg, offset } => {
            let o = p3(offset);
            Ok(build(arg, n, res)?.map(|p| [p[0] + o[0], p[1] + o[1], p[2] + o[2]], |v| v, 1.0))
        }
        ShapeExpr::Scale { arg, factor } => {
            let f = *factor;
            Ok(build(arg, n, res)?.map(|p| p.map(|c| c * f), |v| v, f.powi(n as i32 - 1)))
        }
        ShapeExpr::Rotate { arg, matrix } => {
            let rot = |v: P3| {
                let mut out = [0.0; 3];
                for i in 0..n {
                    for j in 0..n {
                        out[i] += matrix[i][j] * v[j];
                    }
                }
                out
            };
            Ok(build(arg, n, res)?.map(rot, rot, 1.0))
        }
        _ => Err(Error::Unsupported(
            "boundary meshes are available for balls, boxes, radial graphs and their rigid/scaled images".into(),
        )),
    }
}

fn ball_mesh(n: usize, c: &P3, r: f64, res: usize) -> BoundaryMesh {
    let mut m = BoundaryMesh { dim: n, points: vec![], normals: vec![], weights: vec![] };
    match n {
        1 => {
            for sgn in [-1.0, 1.0] {
                m.points.push([c[0] + sgn * r, 0.0, 0.0]);
                m.normals.push([sgn, 0.0, 0.0]);
                m.weights.push(1.0);
            }
        }
        2 => {
            let dphi = 2.0 * PI / res as f64;
            for k in 0..res {
                let (s, co) = (k as f64 * dphi).sin_cos();
                m.points.push([c[0] + r * co, c[1] + r * s, 0.0]);
                m.normals.push([co, s, 0.0]);
                m.weights.push(r * dphi);
            }
        }
        _ => {
            // Gauss-Legendre rings in z, ring sizes proportional to the ring radius
            let (zs, wz) = gauss_legendre(res);
            for (z, w) in zs.iter().zip(&wz) {
                let rho = (1.0 - z * z).sqrt();
                let nphi = ((2 * res) as f64 * rho).ceil().max(4.0) as usize;
                let dphi = 2.0 * PI / nphi as f64;
                for k in 0..nphi {
                    let (s, co) = ((k as f64 + 0.5) * dphi).sin_cos();
                    let nv = [rho * co, rho * s, *z];
                    m.points.push([c[0] + r * nv[0], c[1] + r * nv[1], c[2] + r * nv[2]]);
                    m.normals.push(nv);
                    m.weights.push(r * r * w * dphi);
                }
            }
        }
    }
    m
}

fn box_mesh(n: usize, lo: &P3, hi: &P3, res: usize) -> BoundaryMesh {
    let mut m = BoundaryMesh { dim: n, points: vec![], normals: vec![], weights: vec![] };
    if n == 1 {
        m.points.push([lo[0], 0.0, 0.0]);
        m.normals.push([-1.0, 0.0, 0.0]);
        m.weights.push(1.0);
        m.points.push([hi[0], 0.0, 0.0]);
        m.normals.push([1.0, 0.0, 0.0]);
        m.weights.push(1.0);
        return m;
    }
    let ext: Vec<f64> = (0..n).map(|i| hi[i] - lo[i]).collect();
    let longest = ext.iter().cloned().fold(0.0, f64::max);
    let per = |len: f64| ((len / longest) * res as f64).ceil().max(1.0) as usize;
    for axis in 0..n {
        for (side, val) in [(-1.0, lo[axis]), (1.0, hi[axis])] {
            let others: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
            let counts: Vec<usize> = others.iter().map(|&a| per(ext[a])).collect();
            let total: usize = counts.iter().product();
            for k in 0..total {
                let mut rest = k;
                let mut p = [0.0; 3];
                p[axis] = val;
                let mut w = 1.0;
                for (j, &a) in others.iter().enumerate() {
                    let i = rest % counts[j];
                    rest /= counts[j];
                    let step = ext[a] / counts[j] as f64;
                    p[a] = lo[a] + (i as f64 + 0.5) * step;
                    w *= step;
                }
                let mut nv = [0.0; 3];
                nv[axis] = side;
                m.points.push(p);
                m.normals.push(nv);
                m.weights.push(w);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shape::RadialMode;

    #[test]
    fn unit_circle_mesh() {
        let m = boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0], 1.0), 360).unwrap();
        assert_eq!(m.len(), 360);
        assert!((m.total_weight() - 2.0 * PI).abs() < 1e-3);
        m.validate().unwrap();
    }

    #[test]
    fn ball_normals_are_radial() {
        let r = 2.5;
        let m = boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0], r), 64).unwrap();
        for (p, nv) in m.points.iter().zip(&m.normals) {
            for i in 0..2 {
                assert!((p[i] / r - nv[i]).abs() < 1e-15);
            }
        }
        let s3 = boundary_mesh(&ShapeExpr::ball(&[0.0, 0.0, 0.0], 2.0), 12).unwrap();
        assert!((s3.total_weight() - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn box_mesh_perimeter() {
        let m = boundary_mesh(&ShapeExpr::cuboid(&[0.0, 0.0], &[1.0, 1.0]), 10).unwrap();
        assert!((m.total_weight() - 4.0).abs() < 1e-12);
        let m3 = boundary_mesh(&ShapeExpr::cuboid(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]), 6).unwrap();
        assert!((m3.total_weight() - 22.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_disk_arc_length() {
        let modes = vec![RadialMode { k: 2, amplitude: 0.1, phase: 0.0 }];
        let m = boundary_mesh(&ShapeExpr::radial_graph(&[0.0, 0.0], 1.0, modes), 256).unwrap();
        // composite Simpson oracle on the arc-length integrand
        let f = |phi: f64| {
            let r = 1.0 + 0.1 * (2.0 * phi).cos();
            let rp = -0.2 * (2.0 * phi).sin();
            (r * r + rp * rp).sqrt()
        };
        let k = 20000;
        let hstep = 2.0 * PI / k as f64;
        let mut acc = f(0.0) + f(2.0 * PI);
        for i in 1..k {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * hstep);
        }
        let oracle = acc * hstep / 3.0;
        assert!((m.total_weight() - oracle).abs() < 1e-4);
        for (p, nv) in m.points.iter().zip(&m.normals) {
            // outward: the normal points away from the center on a star-shaped curve
            assert!(p[0] * nv[0] + p[1] * nv[1] > 0.0);
        }
    }

    #[test]
    fn unsupported_shape() {
        assert!(boundary_mesh(&ShapeExpr::half_space(&[0.0, 1.0], 0.0), 10).is_err());
    }
}
