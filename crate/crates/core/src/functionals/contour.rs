//! s-perimeter of smooth planar star-shaped sets as a boundary double integral.
//!
//! For a C^1 closed curve `gamma` bounding `E` in the plane,
//! `Per_s(E) = (1-s)/s ∬ gamma'(a) . gamma'(b) |gamma(a) - gamma(b)|^{-s} da db`.
//! The outer integral is a periodic trapezoid rule, the inner one adaptive
//! with the weak singularity at the endpoints.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::shape::{radial_radius, radial_radius_deriv, RadialMode};
use crate::geometry::ShapeExpr;
use crate::kernel::KernelParams;
use crate::quadrature::rules::integrate_adaptive;
use crate::quadrature::InteractionEstimate;

const OUTER_NODES: usize = 256;

struct Curve<'a> {
    radius: f64,
    modes: &'a [RadialMode],
}

impl Curve<'_> {
    fn r(&self, phi: f64) -> f64 {
        radial_radius(self.radius, self.modes, phi)
    }

    fn tangent(&self, phi: f64) -> [f64; 2] {
        let r = self.r(phi);
        let rp = radial_radius_deriv(self.radius, self.modes, phi);
        let (sn, cs) = phi.sin_cos();
        [rp * cs - r * sn, rp * sn + r * cs]
    }
}

fn outer(c: &Curve, s: f64, nodes: usize) -> (f64, f64) {
    let dphi = 2.0 * PI / nodes as f64;
    // t = pi u^p removes the |t|^{-s} singularity; the far half of the
    // circle is taken as negative angles to keep short distances accurate
    let p = 1.0 / (1.0 - s);
    let mut val = 0.0;
    let mut err = 0.0;
    for j in 0..nodes {
        let a = j as f64 * dphi;
        let (ra, ta) = (c.r(a), c.tangent(a));
        let f = |t: f64| {
            let (rb, tb) = (c.r(a + t), c.tangent(a + t));
            let d = ((ra - rb).powi(2) + 4.0 * ra * rb * (0.5 * t).sin().powi(2)).sqrt();
            if d == 0.0 {
                return 0.0;
            }
            (ta[0] * tb[0] + ta[1] * tb[1]) * d.powf(-s)
        };
        let g = |u: f64| {
            let t = PI * u.powf(p);
            (f(t) + f(-t)) * PI * p * u.powf(p - 1.0)
        };
        let (v, e) = integrate_adaptive(g, 0.0, 1.0, 1e-14, 1e-13, 400);
        val += v;
        err += e;
    }
    let f = (1.0 - s) / s * dphi;
    (f * val, f * err)
}

/// `Per_s` of `{|x - c| < radius (1 + sum_k a_k cos(k (phi - phase_k)))}`.
pub fn radial_graph_perimeter(radius: f64, modes: &[RadialMode], s: f64) -> Result<InteractionEstimate> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("kernel.s", format!("must lie in (0,1), got {s}")));
    }
    if !(radius > 0.0) || modes.iter().map(|m| m.amplitude.abs()).sum::<f64>() >= 1.0 {
        return Err(Error::param("radius", "radial graph must stay star-shaped with positive radius"));
    }
    let c = Curve { radius, modes };
    let (fine, qerr) = outer(&c, s, OUTER_NODES);
    let (coarse, _) = outer(&c, s, OUTER_NODES / 2);
    Ok(InteractionEstimate::new(fine, qerr + (fine - coarse).abs()))
}

/// Boundary-integral perimeter for planar balls and radial graphs.
pub fn planar_contour_perimeter(e: &ShapeExpr, k: &KernelParams) -> Result<InteractionEstimate> {
    if e.validate()? != 2 || k.n != 2 {
        return Err(Error::Unsupported("contour perimeter is planar".into()));
    }
    match e {
        ShapeExpr::Ball { radius, .. } => radial_graph_perimeter(*radius, &[], k.s),
        ShapeExpr::RadialGraph { radius, modes, .. } => radial_graph_perimeter(*radius, modes, k.s),
        _ => Err(Error::Unsupported("contour perimeter needs a ball or a radial graph".into())),
    }
}
