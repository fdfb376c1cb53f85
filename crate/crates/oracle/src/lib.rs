//! Reference computations for the deepwave test suites.
//!
//! Nothing here touches the main crate or an FFT: every value is produced by
//! adaptive quadrature, closed forms, plain DFT sums, or small dense solves.

pub mod dense;
pub mod galerkin;
pub mod quad;

pub use quad::{dawson, dawson_quadrature, integrate, pv_hilbert};

/// `sup_x sup_{|x-t|<=1} <x>^rho |d(x) - d(t)| / |x-t|^alpha` over every node pair,
/// plus `sum_j sup <x>^rho |derivs[j]|`.
pub fn holder_dense(x: &[f64], derivs: &[Vec<f64>], alpha: f64, rho: f64) -> f64 {
    let weight = |t: f64| (1.0 + t * t).powf(rho / 2.0);
    let mut total = 0.0;
    for d in derivs {
        total += x.iter().zip(d).map(|(&t, &v)| weight(t) * v.abs()).fold(0.0, f64::max);
    }
    let top = derivs.last().expect("at least one derivative");
    let mut semi: f64 = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            let dist = (x[i] - x[j]).abs();
            if i != j && dist <= 1.0 + 1e-12 {
                semi = semi.max(weight(x[i]) * (top[i] - top[j]).abs() / dist.powf(alpha));
            }
        }
    }
    total + semi
}

/// Rayleigh quotient of `|D| - depth * sech^2` for the trial function
/// `exp(-x^2 / (2 s^2))`. The kinetic part of a Gaussian is exactly 1 and its
/// squared norm is `s sqrt(pi)`.
pub fn gaussian_rayleigh_sech2(depth: f64, s: f64) -> f64 {
    let potential = integrate(
        |x| {
            let c = x.cosh();
            (-x * x / (s * s)).exp() / (c * c)
        },
        -60.0,
        60.0,
        1e-13,
    );
    (1.0 - depth * potential) / (s * std::f64::consts::PI.sqrt())
}

/// Best Gaussian bound over a scan of widths.
pub fn best_gaussian_bound_sech2(depth: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    let mut s = 0.25;
    while s <= 8.0 {
        let q = gaussian_rayleigh_sech2(depth, s);
        if q < best.0 {
            best = (q, s);
        }
        s += 0.05;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_of_constant() {
        let x: Vec<f64> = (0..20).map(|j| j as f64 * 0.25).collect();
        let v = vec![vec![1.0; 20]];
        assert_eq!(holder_dense(&x, &v, 0.5, 0.0), 1.0);
    }

    #[test]
    fn sech_well_has_negative_bound() {
        let (q, _) = best_gaussian_bound_sech2(1.0);
        assert!(q < -0.15, "{q}");
    }
}
