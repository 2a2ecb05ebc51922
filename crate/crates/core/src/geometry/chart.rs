use super::AmbientPoint;
use crate::error::{Error, Result};

/// Minimum angular distance from either pole for chart operations.
pub const CHART_MARGIN: f64 = 1e-3;

/// Spherical coordinates on S²: (sinθ cosφ, sinθ sinφ, cosθ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub theta: f64,
    pub phi: f64,
}

impl ChartPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let c = Self { theta, phi };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        if self.theta < CHART_MARGIN || self.theta > std::f64::consts::PI - CHART_MARGIN {
            return Err(Error::PoleProximity {
                theta: self.theta,
                margin: CHART_MARGIN,
            });
        }
        Ok(())
    }

    pub fn embed(&self) -> AmbientPoint {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        AmbientPoint::new(vec![st * cp, st * sp, ct])
    }

    pub fn from_ambient(q: &[f64]) -> Result<Self> {
        let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let theta = (q[2] / r).clamp(-1.0, 1.0).acos();
        let c = Self {
            theta,
            phi: q[1].atan2(q[0]),
        };
        c.check()?;
        Ok(c)
    }

    /// Coordinate frame (∂_θ w, ∂_φ w) in ℝ³.
    pub fn frame(&self) -> [[f64; 3]; 2] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [[ct * cp, ct * sp, -st], [-st * sp, st * cp, 0.0]]
    }

    /// Metric diagonal (g_θθ, g_φφ).
    pub fn metric(&self) -> [f64; 2] {
        let st = self.theta.sin();
        [1.0, st * st]
    }
}

/// Γ^i_{jk} for dθ² + sin²θ dφ², indexed `[i][j][k]` with 0 = θ, 1 = φ.
pub fn christoffel_s2(c: ChartPoint) -> Result<[[[f64; 2]; 2]; 2]> {
    c.check()?;
    let (st, ct) = c.theta.sin_cos();
    let mut g = [[[0.0; 2]; 2]; 2];
    g[0][1][1] = -st * ct;
    g[1][0][1] = ct / st;
    g[1][1][0] = ct / st;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equator_and_quarter_values() {
        let g = christoffel_s2(ChartPoint::new(PI / 2.0, 0.3).unwrap()).unwrap();
        assert!(g[0][1][1].abs() < 1e-15);
        let g = christoffel_s2(ChartPoint::new(PI / 4.0, 0.0).unwrap()).unwrap();
        assert!((g[1][0][1] - 1.0).abs() < 1e-14);
        assert_eq!(g[1][0][1], g[1][1][0]);
    }

    #[test]
    fn pole_is_rejected() {
        assert!(matches!(ChartPoint::new(1e-4, 0.0), Err(Error::PoleProximity { .. })));
        assert!(ChartPoint::new(PI - 5e-4, 0.0).is_err());
    }

    #[test]
    fn embed_round_trip() {
        let c = ChartPoint::new(1.1, -2.3).unwrap();
        let back = ChartPoint::from_ambient(&c.embed().coords).unwrap();
        assert!((back.theta - c.theta).abs() < 1e-14 && (back.phi - c.phi).abs() < 1e-14);
    }
}
