//! Kernel exponent data for the interaction `s(1-s) |x-y|^{-(n+s)}`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in dimension `n` (n <= 3).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => f64::NAN,
    }
}

/// Surface measure of the unit sphere `S^{n-1}`, i.e. `n * omega_n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub n: usize,
    pub s: f64,
}

impl KernelParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::param("kernel.s", format!("must lie in (0,1), got {s}")));
        }
        Ok(Self { n, s })
    }

    /// The prefactor `s(1-s)`.
    #[inline]
    pub fn normalization(&self) -> f64 {
        self.s * (1.0 - self.s)
    }

    #[inline]
    pub fn omega_n(&self) -> f64 {
        unit_ball_volume(self.n)
    }

    /// Exponent `n + s` of the kernel.
    #[inline]
    pub fn exponent(&self) -> f64 {
        self.n as f64 + self.s
    }

    /// Raw kernel `|z|^{-(n+s)}` evaluated from a distance.
    #[inline]
    pub fn kernel(&self, r: f64) -> f64 {
        r.powf(-self.exponent())
    }

    /// Homogeneity degree `n - s` of interaction and perimeter under dilation.
    #[inline]
    pub fn scaling_degree(&self) -> f64 {
        self.n as f64 - self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let k = KernelParams::new(2, 0.5).unwrap();
        assert_eq!(k.normalization(), 0.25);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert_eq!(unit_sphere_area(3), 4.0 * PI);
        assert!(KernelParams::new(2, 1.0).is_err());
        assert!(KernelParams::new(4, 0.5).is_err());
        assert!(KernelParams::new(2, 0.0).is_err());
    }
}
