//! Analytic set algebra with exact point membership and exact ray/set intersection.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::unit_sphere_area;

pub type P3 = [f64; 3];

/// Disjoint, sorted open intervals along a ray parameter `rho >= 0`.
pub type Intervals = SmallVec<[(f64, f64); 4]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMode {
    pub k: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// A subset of `R^n` described by primitives and boolean/affine combinators.
///
/// Half-spaces are `{x : normal . x > offset}`. Cones have their apex at the
/// origin and consist of the points whose angle with `axis` is below
/// `half_angle`. Boundaries are excluded everywhere (strict inequalities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeExpr {
    Empty { dim: usize },
    Full { dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Cone { axis: Vec<f64>, half_angle: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Planar star-shaped set `|x - c| < radius (1 + sum a_k cos(k (phi - phase_k)))`.
    RadialGraph { center: Vec<f64>, radius: f64, modes: Vec<RadialMode> },
    Union { args: Vec<ShapeExpr> },
    Intersection { args: Vec<ShapeExpr> },
    Complement { arg: Box<ShapeExpr> },
    Translate { arg: Box<ShapeExpr>, offset: Vec<f64> },
    Scale { arg: Box<ShapeExpr>, factor: f64 },
    /// Axis-wise dilation: `x` belongs when `(x_i / factors_i)` belongs to `arg`.
    Stretch { arg: Box<ShapeExpr>, factors: Vec<f64> },
    /// Image of `arg` under the orthogonal matrix (row-major rows).
    Rotate { arg: Box<ShapeExpr>, matrix: Vec<Vec<f64>> },
}

#[inline]
pub(crate) fn p3(x: &[f64]) -> P3 {
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    p
}

#[inline]
pub(crate) fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: &P3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn unstretch(f: &[f64], x: &P3) -> P3 {
    let mut out = *x;
    for (i, v) in f.iter().enumerate() {
        out[i] /= v;
    }
    out
}

#[inline]
fn mat_t_vec(m: &[Vec<f64>], v: &P3) -> P3 {
    let mut out = [0.0; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, mij) in row.iter().enumerate() {
            out[j] += mij * v[i];
        }
    }
    out
}

#[inline]
fn mat_vec(m: &[Vec<f64>], v: &P3) -> P3 {
    let mut out = [0.0; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, mij) in row.iter().enumerate() {
            out[i] += mij * v[j];
        }
    }
    out
}

impl RadialMode {
    fn eval(&self, phi: f64) -> f64 {
        self.amplitude * (self.k as f64 * (phi - self.phase)).cos()
    }

    fn deriv(&self, phi: f64) -> f64 {
        -self.amplitude * self.k as f64 * (self.k as f64 * (phi - self.phase)).sin()
    }
}

/// Radius function of a [`ShapeExpr::RadialGraph`].
pub fn radial_radius(radius: f64, modes: &[RadialMode], phi: f64) -> f64 {
    radius * (1.0 + modes.iter().map(|m| m.eval(phi)).sum::<f64>())
}

/// Derivative of the radius function with respect to the polar angle.
pub fn radial_radius_deriv(radius: f64, modes: &[RadialMode], phi: f64) -> f64 {
    radius * modes.iter().map(|m| m.deriv(phi)).sum::<f64>()
}

fn radial_max(radius: f64, modes: &[RadialMode]) -> f64 {
    radius * (1.0 + modes.iter().map(|m| m.amplitude.abs()).sum::<f64>())
}

impl ShapeExpr {
    pub fn empty(dim: usize) -> Self {
        ShapeExpr::Empty { dim }
    }

    pub fn full(dim: usize) -> Self {
        ShapeExpr::Full { dim }
    }

    pub fn ball(center: &[f64], radius: f64) -> Self {
        ShapeExpr::Ball { center: center.to_vec(), radius }
    }

    /// `{x : normal . x > offset}`; the normal is normalized.
    pub fn half_space(normal: &[f64], offset: f64) -> Self {
        let l = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        ShapeExpr::HalfSpace { normal: normal.iter().map(|v| v / l).collect(), offset: offset / l }
    }

    pub fn cone(axis: &[f64], half_angle: f64) -> Self {
        let l = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        ShapeExpr::Cone { axis: axis.iter().map(|v| v / l).collect(), half_angle }
    }

    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Self {
        ShapeExpr::Box { lo: lo.to_vec(), hi: hi.to_vec() }
    }

    pub fn radial_graph(center: &[f64], radius: f64, modes: Vec<RadialMode>) -> Self {
        ShapeExpr::RadialGraph { center: center.to_vec(), radius, modes }
    }

    pub fn union(self, other: ShapeExpr) -> Self {
        ShapeExpr::Union { args: vec![self, other] }
    }

    pub fn intersect(self, other: ShapeExpr) -> Self {
        ShapeExpr::Intersection { args: vec![self, other] }
    }

    pub fn complement(self) -> Self {
        ShapeExpr::Complement { arg: Box::new(self) }
    }

    pub fn minus(self, other: ShapeExpr) -> Self {
        self.intersect(other.complement())
    }

    pub fn translate(self, offset: &[f64]) -> Self {
        ShapeExpr::Translate { arg: Box::new(self), offset: offset.to_vec() }
    }

    pub fn scale(self, factor: f64) -> Self {
        ShapeExpr::Scale { arg: Box::new(self), factor }
    }

    pub fn stretch(self, factors: &[f64]) -> Self {
        ShapeExpr::Stretch { arg: Box::new(self), factors: factors.to_vec() }
    }

    pub fn rotate(self, matrix: Vec<Vec<f64>>) -> Self {
        ShapeExpr::Rotate { arg: Box::new(self), matrix }
    }

    /// Counter-clockwise planar rotation.
    pub fn rotate_2d(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        self.rotate(vec![vec![c, -s], vec![s, c]])
    }

    /// Ambient dimension; `None` for an empty combinator.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ShapeExpr::Empty { dim } | ShapeExpr::Full { dim } => Some(*dim),
            ShapeExpr::Ball { center, .. } => Some(center.len()),
            ShapeExpr::HalfSpace { normal, .. } => Some(normal.len()),
            ShapeExpr::Cone { axis, .. } => Some(axis.len()),
            ShapeExpr::Box { lo, .. } => Some(lo.len()),
            ShapeExpr::RadialGraph { center, .. } => Some(center.len()),
            ShapeExpr::Union { args } | ShapeExpr::Intersection { args } => {
                args.first().and_then(|a| a.dim())
            }
            ShapeExpr::Complement { arg } | ShapeExpr::Scale { arg, .. } => arg.dim(),
            ShapeExpr::Translate { offset, .. } => Some(offset.len()),
            ShapeExpr::Stretch { factors, .. } => Some(factors.len()),
            ShapeExpr::Rotate { matrix, .. } => Some(matrix.len()),
        }
    }

    /// Checks dimensions and parameter ranges throughout the tree and returns the dimension.
    pub fn validate(&self) -> Result<usize> {
        let n = self.dim().ok_or_else(|| Error::param("shape", "combinator without arguments"))?;
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        self.validate_dim(n)?;
        Ok(n)
    }

    fn validate_dim(&self, n: usize) -> Result<()> {
        let check = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: n, got: len })
            }
        };
        let finite = |v: &[f64], name: &'static str| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::param(name, "non-finite coordinate"))
            }
        };
        match self {
            ShapeExpr::Empty { dim } | ShapeExpr::Full { dim } => check(*dim),
            ShapeExpr::Ball { center, radius } => {
                check(center.len())?;
                finite(center, "ball.center")?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("ball.radius", "must be positive"));
                }
                Ok(())
            }
            ShapeExpr::HalfSpace { normal, offset } => {
                check(normal.len())?;
                finite(normal, "half_space.normal")?;
                let l = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (l - 1.0).abs() > 1e-9 {
                    return Err(Error::param("half_space.normal", "must be a unit vector"));
                }
                if !offset.is_finite() {
                    return Err(Error::param("half_space.offset", "must be finite"));
                }
                Ok(())
            }
            ShapeExpr::Cone { axis, half_angle } => {
                check(axis.len())?;
                let l = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (l - 1.0).abs() > 1e-9 {
                    return Err(Error::param("cone.axis", "must be a unit vector"));
                }
                if !(*half_angle > 0.0 && *half_angle <= PI) {
                    return Err(Error::param("cone.half_angle", "must lie in (0, pi]"));
                }
                Ok(())
            }
            ShapeExpr::Box { lo, hi } => {
                check(lo.len())?;
                check(hi.len())?;
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::param("box", "requires lo < hi componentwise"));
                }
                Ok(())
            }
            ShapeExpr::RadialGraph { center, radius, modes } => {
                check(center.len())?;
                if n != 2 {
                    return Err(Error::Unsupported("radial graphs are planar".into()));
                }
                let amp: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
                if !(*radius > 0.0) || amp >= 1.0 {
                    return Err(Error::param(
                        "radial_graph",
                        "radius must be positive and total amplitude below 1",
                    ));
                }
                Ok(())
            }
            ShapeExpr::Union { args } | ShapeExpr::Intersection { args } => {
                if args.is_empty() {
                    return Err(Error::param("shape", "combinator without arguments"));
                }
                args.iter().try_for_each(|a| a.validate_dim(n))
            }
            ShapeExpr::Complement { arg } => arg.validate_dim(n),
            ShapeExpr::Translate { arg, offset } => {
                check(offset.len())?;
                finite(offset, "translate.offset")?;
                arg.validate_dim(n)
            }
            ShapeExpr::Scale { arg, factor } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::param("scale.factor", "must be positive"));
                }
                arg.validate_dim(n)
            }
            ShapeExpr::Stretch { arg, factors } => {
                check(factors.len())?;
                if factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                    return Err(Error::param("stretch.factors", "must be positive"));
                }
                arg.validate_dim(n)
            }
            ShapeExpr::Rotate { arg, matrix } => {
                check(matrix.len())?;
                for row in matrix {
                    check(row.len())?;
                }
                for i in 0..n {
                    for j in 0..n {
                        let g: f64 = (0..n).map(|k| matrix[k][i] * matrix[k][j]).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (g - want).abs() > 1e-9 {
                            return Err(Error::param("rotate.matrix", "must be orthogonal"));
                        }
                    }
                }
                arg.validate_dim(n)
            }
        }
    }

    /// Exact membership with the dimension checked against the point.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        let n = self.validate()?;
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        Ok(self.contains_p(&p3(x)))
    }

    /// Membership without validation; coordinates beyond the dimension must be zero.
    pub fn contains_p(&self, x: &P3) -> bool {
        match self {
            ShapeExpr::Empty { .. } => false,
            ShapeExpr::Full { .. } => true,
            ShapeExpr::Ball { center, radius } => {
                let d = sub(x, &p3(center));
                dot(&d, &d) < radius * radius
            }
            ShapeExpr::HalfSpace { normal, offset } => dot(&p3(normal), x) > *offset,
            ShapeExpr::Cone { axis, half_angle } => {
                let r = norm(x);
                r > 0.0 && dot(&p3(axis), x) > r * half_angle.cos()
            }
            ShapeExpr::Box { lo, hi } => {
                (0..lo.len()).all(|i| x[i] > lo[i] && x[i] < hi[i])
            }
            ShapeExpr::RadialGraph { center, radius, modes } => {
                let d = sub(x, &p3(center));
                let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                r < radial_radius(*radius, modes, d[1].atan2(d[0]))
            }
            ShapeExpr::Union { args } => args.iter().any(|a| a.contains_p(x)),
            ShapeExpr::Intersection { args } => args.iter().all(|a| a.contains_p(x)),
            ShapeExpr::Complement { arg } => !arg.contains_p(x),
            ShapeExpr::Translate { arg, offset } => arg.contains_p(&sub(x, &p3(offset))),
            ShapeExpr::Scale { arg, factor } => {
                arg.contains_p(&[x[0] / factor, x[1] / factor, x[2] / factor])
            }
            ShapeExpr::Stretch { arg, factors } => arg.contains_p(&unstretch(factors, x)),
            ShapeExpr::Rotate { arg, matrix } => arg.contains_p(&mat_t_vec(matrix, x)),
        }
    }

    /// Conservative axis-aligned bounds, `None` when the set may be unbounded.
    pub fn bounds(&self) -> Option<(P3, P3)> {
        match self {
            ShapeExpr::Empty { .. } => Some(([f64::INFINITY; 3], [f64::NEG_INFINITY; 3])),
            ShapeExpr::Full { .. } | ShapeExpr::HalfSpace { .. } | ShapeExpr::Cone { .. } => None,
            ShapeExpr::Complement { arg } => match arg.as_ref() {
                ShapeExpr::Full { .. } => Some(([f64::INFINITY; 3], [f64::NEG_INFINITY; 3])),
                _ => None,
            },
            ShapeExpr::Ball { center, radius } => {
                let c = p3(center);
                let n = center.len();
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for i in 0..n {
                    lo[i] = c[i] - radius;
                    hi[i] = c[i] + radius;
                }
                Some((lo, hi))
            }
            ShapeExpr::Box { lo, hi } => Some((p3(lo), p3(hi))),
            ShapeExpr::RadialGraph { center, radius, modes } => {
                let r = radial_max(*radius, modes);
                let c = p3(center);
                Some(([c[0] - r, c[1] - r, 0.0], [c[0] + r, c[1] + r, 0.0]))
            }
            ShapeExpr::Union { args } => {
                let mut acc = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
                let n = self.dim().unwrap_or(3);
                for a in args {
                    let (lo, hi) = a.bounds()?;
                    for i in 0..n {
                        acc.0[i] = acc.0[i].min(lo[i]);
                        acc.1[i] = acc.1[i].max(hi[i]);
                    }
                }
                Some(acc)
            }
            ShapeExpr::Intersection { args } => {
                let n = self.dim().unwrap_or(3);
                let mut acc: Option<(P3, P3)> = None;
                for a in args {
                    if let Some((lo, hi)) = a.bounds() {
                        acc = Some(match acc {
                            None => (lo, hi),
                            Some((alo, ahi)) => {
                                let mut l = alo;
                                let mut h = ahi;
                                for i in 0..n {
                                    l[i] = l[i].max(lo[i]);
                                    h[i] = h[i].min(hi[i]);
                                }
                                (l, h)
                            }
                        });
                    }
                }
                acc
            }
            ShapeExpr::Translate { arg, offset } => {
                let (lo, hi) = arg.bounds()?;
                let o = p3(offset);
                Some(([lo[0] + o[0], lo[1] + o[1], lo[2] + o[2]], [hi[0] + o[0], hi[1] + o[1], hi[2] + o[2]]))
            }
            ShapeExpr::Scale { arg, factor } => {
                let (lo, hi) = arg.bounds()?;
                Some((lo.map(|v| v * factor), hi.map(|v| v * factor)))
            }
            ShapeExpr::Stretch { arg, factors } => {
                let (mut lo, mut hi) = arg.bounds()?;
                for (i, f) in factors.iter().enumerate() {
                    lo[i] *= f;
                    hi[i] *= f;
                }
                Some((lo, hi))
            }
            ShapeExpr::Rotate { arg, matrix } => {
                let (lo, hi) = arg.bounds()?;
                let n = matrix.len();
                if (0..n).any(|i| lo[i] > hi[i]) {
                    return Some((lo, hi));
                }
                let mut out = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
                for corner in 0..(1usize << n) {
                    let mut c = [0.0; 3];
                    for i in 0..n {
                        c[i] = if corner >> i & 1 == 1 { hi[i] } else { lo[i] };
                    }
                    let r = mat_vec(matrix, &c);
                    for i in 0..n {
                        out.0[i] = out.0[i].min(r[i]);
                        out.1[i] = out.1[i].max(r[i]);
                    }
                }
                for i in n..3 {
                    out.0[i] = 0.0;
                    out.1[i] = 0.0;
                }
                Some(out)
            }
        }
    }

    /// Open intervals of `rho >= 0` with `p + rho d` inside the set (`|d| = 1`).
    pub fn ray_intervals(&self, p: &P3, d: &P3) -> Intervals {
        match self {
            ShapeExpr::Empty { .. } => Intervals::new(),
            ShapeExpr::Full { .. } => full_ray(),
            ShapeExpr::Ball { center, radius } => {
                let q = sub(p, &p3(center));
                let b = dot(&q, d);
                let c = dot(&q, &q) - radius * radius;
                let disc = b * b - c;
                let mut out = Intervals::new();
                if disc > 0.0 {
                    let sq = disc.sqrt();
                    // stable roots of rho^2 + 2 b rho + c = 0
                    let (r1, r2) = if b > 0.0 {
                        let t = -b - sq;
                        (t, c / t)
                    } else {
                        let t = -b + sq;
                        (c / t, t)
                    };
                    let (a, e) = (r1.min(r2).max(0.0), r1.max(r2));
                    if e > a {
                        out.push((a, e));
                    }
                }
                out
            }
            ShapeExpr::HalfSpace { normal, offset } => {
                let nv = p3(normal);
                let v0 = dot(&nv, p) - offset;
                let dn = dot(&nv, d);
                let mut out = Intervals::new();
                if dn == 0.0 {
                    if v0 > 0.0 {
                        out.push((0.0, f64::INFINITY));
                    }
                } else {
                    let t = -v0 / dn;
                    if dn > 0.0 {
                        out.push((t.max(0.0), f64::INFINITY));
                    } else if t > 0.0 {
                        out.push((0.0, t));
                    }
                }
                out
            }
            ShapeExpr::Cone { axis, half_angle } => cone_ray(&p3(axis), *half_angle, p, d),
            ShapeExpr::Box { lo, hi } => {
                let mut t0 = 0.0f64;
                let mut t1 = f64::INFINITY;
                for i in 0..lo.len() {
                    if d[i] == 0.0 {
                        if !(p[i] > lo[i] && p[i] < hi[i]) {
                            return Intervals::new();
                        }
                    } else {
                        let a = (lo[i] - p[i]) / d[i];
                        let b = (hi[i] - p[i]) / d[i];
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                }
                let mut out = Intervals::new();
                if t1 > t0 {
                    out.push((t0, t1));
                }
                out
            }
            ShapeExpr::RadialGraph { center, radius, modes } => {
                radial_ray(&p3(center), *radius, modes, p, d)
            }
            ShapeExpr::Union { args } => {
                let mut acc = Intervals::new();
                for a in args {
                    acc = interval_union(&acc, &a.ray_intervals(p, d));
                }
                acc
            }
            ShapeExpr::Intersection { args } => {
                let mut acc = full_ray();
                for a in args {
                    if acc.is_empty() {
                        break;
                    }
                    acc = interval_intersection(&acc, &a.ray_intervals(p, d));
                }
                acc
            }
            ShapeExpr::Complement { arg } => interval_complement(&arg.ray_intervals(p, d)),
            ShapeExpr::Translate { arg, offset } => arg.ray_intervals(&sub(p, &p3(offset)), d),
            ShapeExpr::Scale { arg, factor } => {
                let q = p.map(|v| v / factor);
                let mut iv = arg.ray_intervals(&q, d);
                for (a, b) in iv.iter_mut() {
                    *a *= factor;
                    *b *= factor;
                }
                iv
            }
            ShapeExpr::Stretch { arg, factors } => {
                // p + rho d maps to q + rho e with |e| = l; rescale to a unit direction
                let q = unstretch(factors, p);
                let e = unstretch(factors, d);
                let l = norm(&e);
                let mut iv = arg.ray_intervals(&q, &e.map(|v| v / l));
                for (a, b) in iv.iter_mut() {
                    *a /= l;
                    *b /= l;
                }
                iv
            }
            ShapeExpr::Rotate { arg, matrix } => {
                arg.ray_intervals(&mat_t_vec(matrix, p), &mat_t_vec(matrix, d))
            }
        }
    }

    /// `H^{n-1}(Sigma) / H^{n-1}(S^{n-1})` for a cone, half-space through the origin,
    /// the full space or the empty set. `None` for other shapes.
    pub fn aperture_fraction(&self) -> Option<f64> {
        match self {
            ShapeExpr::Empty { .. } => Some(0.0),
            ShapeExpr::Full { .. } => Some(1.0),
            ShapeExpr::HalfSpace { offset, .. } if *offset == 0.0 => Some(0.5),
            ShapeExpr::Cone { axis, half_angle } => Some(cap_fraction(axis.len(), *half_angle)),
            ShapeExpr::Complement { arg } => arg.aperture_fraction().map(|f| 1.0 - f),
            ShapeExpr::Scale { arg, .. } | ShapeExpr::Rotate { arg, .. } => arg.aperture_fraction(),
            _ => None,
        }
    }
}

/// Fraction of `S^{n-1}` covered by a spherical cap of the given half-angle.
pub fn cap_fraction(n: usize, half_angle: f64) -> f64 {
    match n {
        1 => {
            if half_angle > PI / 2.0 {
                1.0
            } else {
                0.5
            }
        }
        2 => half_angle / PI,
        3 => (1.0 - half_angle.cos()) / 2.0,
        _ => f64::NAN,
    }
}

/// Surface measure of a cap of the given half-angle on `S^{n-1}`.
pub fn cap_area(n: usize, half_angle: f64) -> f64 {
    cap_fraction(n, half_angle) * unit_sphere_area(n)
}

fn full_ray() -> Intervals {
    let mut v = Intervals::new();
    v.push((0.0, f64::INFINITY));
    v
}

pub fn interval_union(a: &Intervals, b: &Intervals) -> Intervals {
    let mut all: SmallVec<[(f64, f64); 8]> = a.iter().chain(b.iter()).copied().collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Intervals::new();
    for (s, e) in all {
        if let Some(last) = out.last_mut() {
            if s <= last.1 {
                last.1 = last.1.max(e);
                continue;
            }
        }
        out.push((s, e));
    }
    out
}

pub fn interval_intersection(a: &Intervals, b: &Intervals) -> Intervals {
    let mut out = Intervals::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let s = a[i].0.max(b[j].0);
        let e = a[i].1.min(b[j].1);
        if e > s {
            out.push((s, e));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub fn interval_complement(a: &Intervals) -> Intervals {
    let mut out = Intervals::new();
    let mut cur = 0.0;
    for &(s, e) in a {
        if s > cur {
            out.push((cur, s));
        }
        cur = e;
    }
    if cur < f64::INFINITY {
        out.push((cur, f64::INFINITY));
    }
    out
}

/// Clips intervals to `rho > lo`.
pub fn interval_clip_below(a: &Intervals, lo: f64) -> Intervals {
    a.iter()
        .filter(|iv| iv.1 > lo)
        .map(|&(s, e)| (s.max(lo), e))
        .collect()
}

fn cone_ray(axis: &P3, half_angle: f64, p: &P3, d: &P3) -> Intervals {
    let c = half_angle.cos();
    let inside = |x: &P3| {
        let r = norm(x);
        r > 0.0 && dot(axis, x) > r * c
    };
    // (a.x)^2 - c^2 |x|^2 = 0 along x = p + rho d
    let pa = dot(axis, p);
    let da = dot(axis, d);
    let qa = da * da - c * c;
    let qb = 2.0 * (pa * da - c * c * dot(p, d));
    let qc = pa * pa - c * c * dot(p, p);
    let mut cuts: SmallVec<[f64; 4]> = SmallVec::new();
    if qa.abs() > 1e-300 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let t = -0.5 * (qb + qb.signum() * sq);
            if t != 0.0 {
                cuts.push(t / qa);
                cuts.push(qc / t);
            } else {
                cuts.push(0.0);
            }
        }
    } else if qb != 0.0 {
        cuts.push(-qc / qb);
    }
    // the ray may also pass through the apex
    let tap = -dot(p, d);
    let closest = [p[0] + tap * d[0], p[1] + tap * d[1], p[2] + tap * d[2]];
    if norm(&closest) <= 1e-14 * (1.0 + norm(p)) {
        cuts.push(tap);
    }
    let mut pts: SmallVec<[f64; 6]> = cuts.into_iter().filter(|t| *t > 0.0 && t.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut bounds: SmallVec<[f64; 8]> = SmallVec::new();
    bounds.push(0.0);
    bounds.extend(pts);
    let mut out = Intervals::new();
    for k in 0..bounds.len() {
        let a = bounds[k];
        let is_last = k + 1 == bounds.len();
        let ins = if is_last {
            // membership far along the ray is that of the direction
            if da != c {
                da > c
            } else {
                let far = a.max(1.0) * 1e6;
                inside(&[p[0] + far * d[0], p[1] + far * d[1], p[2] + far * d[2]])
            }
        } else {
            let m = 0.5 * (a + bounds[k + 1]);
            inside(&[p[0] + m * d[0], p[1] + m * d[1], p[2] + m * d[2]])
        };
        if ins {
            let e = if is_last { f64::INFINITY } else { bounds[k + 1] };
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = e,
                _ => out.push((a, e)),
            }
        }
    }
    out
}

fn radial_ray(center: &P3, radius: f64, modes: &[RadialMode], p: &P3, d: &P3) -> Intervals {
    let q = sub(p, center);
    let rmax = radial_max(radius, modes);
    let f = |t: f64| {
        let x = q[0] + t * d[0];
        let y = q[1] + t * d[1];
        (x * x + y * y).sqrt() - radial_radius(radius, modes, y.atan2(x))
    };
    // the ray is outside beyond the disk of radius rmax
    let b = dot(&q, d);
    let c = dot(&q, &q) - rmax * rmax;
    let disc = b * b - c;
    let mut out = Intervals::new();
    if disc <= 0.0 {
        return out;
    }
    let t_hi = -b + disc.sqrt();
    if t_hi <= 0.0 {
        return out;
    }
    let t_lo = (-b - disc.sqrt()).max(0.0);
    let rmin = radius * (1.0 - modes.iter().map(|m| m.amplitude.abs()).sum::<f64>());
    let dmax = radius * modes.iter().map(|m| m.k as f64 * m.amplitude.abs()).sum::<f64>();
    let rho = |t: f64| norm(&[q[0] + t * d[0], q[1] + t * d[1], 0.0]);
    // distance from the center to the segment [a, b] of the ray
    let rho_min = |a: f64, bb: f64| rho((-b).clamp(a, bb));
    let min_width = 1e-15 * (1.0 + t_hi);
    let mut roots = Vec::new();
    // Lipschitz exclusion: |f'| <= 1 + dmax / rho on the segment
    let mut stack = vec![(t_lo, t_hi, f(t_lo), f(t_hi))];
    let mut segments = Vec::new();
    while let Some((a, bb, fa, fb)) = stack.pop() {
        if (fa < 0.0) != (fb < 0.0) {
            segments.push((a, bb, fa));
            continue;
        }
        if rho(a).max(rho(bb)) < rmin {
            continue;
        }
        let lip = 1.0 + dmax / rho_min(a, bb).max(1e-300);
        if fa.abs() + fb.abs() > lip * (bb - a) || bb - a < min_width {
            continue;
        }
        let m = 0.5 * (a + bb);
        let fm = f(m);
        stack.push((m, bb, fm, fb));
        stack.push((a, m, fa, fm));
    }
    for (mut a, mut bb, fa) in segments {
        let fa_neg = fa < 0.0;
        for _ in 0..60 {
            let m = 0.5 * (a + bb);
            if (f(m) < 0.0) == fa_neg {
                a = m;
            } else {
                bb = m;
            }
        }
        roots.push((0.5 * (a + bb), !fa_neg));
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut start = if f(t_lo) < 0.0 { Some(t_lo) } else { None };
    for (root, entering) in roots {
        if entering {
            start = Some(root);
        } else if let Some(s0) = start.take() {
            if root > s0 {
                out.push((s0, root));
            }
        }
    }
    out
}
