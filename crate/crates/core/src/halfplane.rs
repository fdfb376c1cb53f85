//! Potential theory in the lower half plane `y < 0`: Poisson extension,
//! the Dirichlet-to-Neumann map, the boundary-value form of Bernoulli's
//! condition, and the conformal boundary trace `ζ' = 1 + H w' + i w'`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Profile, WaveState};
use crate::linearized::BoundaryTrace;
use crate::steady::{ResidualForm, ResidualReport, Slopes};
use crate::transforms::{
    apply_real_symbol, conjugate_derivative_symbol, poisson_multiplier, second_derivative, Transforms,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneField {
    pub x_grid: Grid,
    pub y_levels: Vec<f64>,
    /// `values[level][node]`.
    pub values: Vec<Vec<f64>>,
}

impl HalfPlaneField {
    pub fn level(&self, i: usize) -> Profile {
        Profile::from_raw(self.x_grid, self.values[i].clone())
    }

    /// Max of the 5-point Laplacian over interior stencils. Needs at least three
    /// equally spaced levels; `None` otherwise.
    pub fn laplacian_defect(&self) -> Option<f64> {
        let ny = self.y_levels.len();
        if ny < 3 {
            return None;
        }
        let dy = self.y_levels[1] - self.y_levels[0];
        let uniform = self.y_levels.windows(2).all(|p| ((p[1] - p[0]) - dy).abs() <= 1e-12 * dy.abs().max(1.0));
        if !uniform {
            return None;
        }
        let n = self.x_grid.n();
        let h = self.x_grid.spacing();
        let periodic = self.x_grid.is_periodic();
        let mut worst: f64 = 0.0;
        for l in 1..ny - 1 {
            let (a, b, c) = (&self.values[l - 1], &self.values[l], &self.values[l + 1]);
            for i in 0..n {
                let (im, ip) = match (i, periodic) {
                    (0, true) => (n - 1, 1),
                    (_, true) if i == n - 1 => (i - 1, 0),
                    (0, false) => continue,
                    (_, false) if i == n - 1 => continue,
                    _ => (i - 1, i + 1),
                };
                let lap = (b[ip] - 2.0 * b[i] + b[im]) / (h * h) + (a[i] - 2.0 * b[i] + c[i]) / (dy * dy);
                worst = worst.max(lap.abs());
            }
        }
        Some(worst)
    }
}

/// Poisson integral of piecewise-linear line data at depth `y < 0`, with each
/// panel integrated exactly against the kernel `|y| / (π ((x-t)² + y²))`.
fn poisson_line_level(v: &Profile, y: f64) -> Vec<f64> {
    let g = v.grid();
    let n = g.n();
    let h = g.spacing();
    let x = g.nodes();
    let vals = v.values();
    let a = y.abs();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n - 1 {
                let (lo, hi) = (x[j] - x[i], x[j + 1] - x[i]);
                let slope = (vals[j + 1] - vals[j]) / h;
                let base = vals[j] - slope * lo;
                s += base * ((hi / a).atan() - (lo / a).atan()) / PI
                    + slope * a / (2.0 * PI) * ((hi * hi + a * a) / (lo * lo + a * a)).ln();
            }
            s
        })
        .collect()
}

/// Poisson extension to each depth in `y_levels` (all negative). Periodic data
/// use the multiplier `e^{|k| y}`; line data use direct product quadrature.
pub fn poisson_extend(v: &Profile, y_levels: &[f64], tf: &Transforms) -> Result<HalfPlaneField> {
    if let Some(y) = y_levels.iter().find(|y| !(**y < 0.0)) {
        return Err(Error::InvalidParameter(format!("level y = {y} is not below the boundary")));
    }
    tf.check_decay(v)?;
    let values = y_levels
        .iter()
        .map(
            |&y| {
                if v.grid().is_periodic() {
                    poisson_multiplier(v, y).into_values()
                } else {
                    poisson_line_level(v, y)
                }
            },
        )
        .collect();
    Ok(HalfPlaneField { x_grid: *v.grid(), y_levels: y_levels.to_vec(), values })
}

/// `∂V/∂y` on `y = 0`. Periodic: multiplier `|k|`. Line: the hypersingular
/// Poisson-kernel derivative `-(1/π) ∫_0^∞ (v(x+s) - 2v(x) + v(x-s)) / s² ds`,
/// evaluated by the trapezoid rule in `s` (the integrand is even and smooth,
/// so the rule is spectrally accurate), with `v = 0` off the grid.
pub fn dirichlet_to_neumann(v: &Profile, tf: &Transforms) -> Result<Profile> {
    let g = *v.grid();
    if g.is_periodic() {
        return Ok(apply_real_symbol(v, &conjugate_derivative_symbol(&g)));
    }
    tf.check_decay(v)?;
    let n = g.n();
    let h = g.spacing();
    let vals = v.values();
    let vpp = second_derivative(v);
    let zeta2 = PI * PI / 6.0;
    let out = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for m in 1..n {
                let mut pair = 0.0;
                if i + m < n {
                    pair += vals[i + m];
                }
                if m <= i {
                    pair += vals[i - m];
                }
                if pair != 0.0 {
                    s += pair / (m * m) as f64;
                }
            }
            let total = 0.5 * h * vpp.values()[i] + (s - 2.0 * zeta2 * vals[i]) / h;
            -total / PI
        })
        .collect();
    Ok(Profile::from_raw(g, out))
}

/// `1 / ((w')² + (1 + H w')²) + 2 μ w - 1`.
pub fn bvp_residual(state: &WaveState, tf: &Transforms) -> Result<ResidualReport> {
    let w = state.w();
    tf.check_decay(w)?;
    let d = Slopes::of(w, tf).modulus_sq();
    let nodes: Vec<usize> =
        d.values().iter().enumerate().filter(|(_, v)| **v <= f64::EPSILON).map(|(j, _)| j).collect();
    if !nodes.is_empty() {
        return Err(Error::SingularDenominator { nodes, min: d.min() });
    }
    let r = d.zip_map(w, |dv, wv| 1.0 / dv + 2.0 * state.mu * wv - 1.0);
    Ok(ResidualReport::new(r, ResidualForm::Bvp))
}

/// Trace of `ζ' = 1 + H w' + i w'` on the boundary.
pub fn conformal_trace(w: &Profile, tf: &Transforms) -> Result<BoundaryTrace> {
    tf.check_decay(w)?;
    Ok(BoundaryTrace::of_profile(w, tf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_extends_to_constant() {
        let v = Profile::constant(Grid::circle(32).unwrap(), 2.5);
        let f = poisson_extend(&v, &[-0.1, -1.0, -3.0], &Transforms::default()).unwrap();
        for row in &f.values {
            assert!(row.iter().all(|&u| (u - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn nonnegative_level_rejected() {
        let v = Profile::constant(Grid::circle(32).unwrap(), 1.0);
        assert!(poisson_extend(&v, &[-1.0, 0.0], &Transforms::default()).is_err());
        assert!(poisson_extend(&v, &[0.5], &Transforms::default()).is_err());
    }

    #[test]
    fn dtn_of_cosine_and_constant() {
        let g = Grid::circle(64).unwrap();
        let tf = Transforms::default();
        let d = dirichlet_to_neumann(&Profile::from_fn(g, f64::cos).unwrap(), &tf).unwrap();
        for (a, x) in d.values().iter().zip(g.nodes()) {
            assert!((a - x.cos()).abs() < 1e-13);
        }
        assert!(dirichlet_to_neumann(&Profile::constant(g, 3.0), &tf).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn bvp_at_zero() {
        let s = WaveState::new(Profile::zeros(Grid::circle(16).unwrap()), 2.0).unwrap();
        assert_eq!(bvp_residual(&s, &Transforms::default()).unwrap().sup_norm, 0.0);
    }

    #[test]
    fn trace_of_zero_is_one() {
        let t = conformal_trace(&Profile::zeros(Grid::circle(16).unwrap()), &Transforms::default()).unwrap();
        assert!(t.re.values().iter().all(|&v| v == 1.0));
        assert!(t.im.values().iter().all(|&v| v == 0.0));
    }
}
