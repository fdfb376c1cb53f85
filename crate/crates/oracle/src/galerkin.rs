//! Cosine-Galerkin truncation of the periodic equation on a 2π period.
//!
//! `w = Σ_{k=0}^{K} c_k cos(kx)`. With `H cos(kx) = sin(kx)` one has
//! `Hw' = Σ k c_k cos(kx)` and `H(ww') = |D|(w²/2)`, so the residual is
//! computed exactly from cosine products and then projected onto modes `0..=K`.

use crate::dense::{solve, Dense};

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let p = 0.5 * x * y;
            out[i + j] += p;
            out[i.abs_diff(j)] += p;
        }
    }
    out
}

/// Galerkin residual, mode by mode.
pub fn residual(c: &[f64], mu: f64) -> Vec<f64> {
    let hwp: Vec<f64> = c.iter().enumerate().map(|(k, &v)| k as f64 * v).collect();
    let w_hwp = product(c, &hwp);
    let ww = product(c, c);
    (0..c.len()).map(|k| hwp[k] - mu * (c[k] + w_hwp[k] + 0.5 * k as f64 * ww[k])).collect()
}

fn newton<R: Fn(&[f64]) -> Vec<f64>>(r: R, mut u: Vec<f64>) -> Option<Vec<f64>> {
    let m = u.len();
    for _ in 0..60 {
        let f = r(&u);
        let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm < 1e-14 {
            return Some(u);
        }
        let mut jac = Dense::zeros(m);
        for j in 0..m {
            let h = 1e-7 * (1.0 + u[j].abs());
            let mut up = u.clone();
            up[j] += h;
            let mut um = u.clone();
            um[j] -= h;
            let (fp, fm) = (r(&up), r(&um));
            for i in 0..m {
                jac.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
            }
        }
        let du = solve(jac, f.iter().map(|v| -v).collect());
        if du.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (x, d) in u.iter_mut().zip(du) {
            *x += d;
        }
    }
    let f = r(&u);
    (f.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-11).then_some(u)
}

/// Solve with the first harmonic pinned to `a`; returns `(mu, coefficients)`.
pub fn solve_at_amplitude(a: f64, modes: usize) -> Option<(f64, Vec<f64>)> {
    let assemble = |u: &[f64]| {
        let mut c = vec![0.0; modes + 1];
        c[0] = u[1];
        c[1] = a;
        c[2..].copy_from_slice(&u[2..]);
        (u[0], c)
    };
    let mut u0 = vec![0.0; modes + 1];
    u0[0] = 1.0;
    let u = newton(
        |u| {
            let (mu, c) = assemble(u);
            residual(&c, mu)
        },
        u0,
    )?;
    Some(assemble(&u))
}

/// Solve at fixed `mu` from the given starting coefficients.
pub fn solve_at_mu(mu: f64, start: Vec<f64>) -> Option<Vec<f64>> {
    newton(|c| residual(c, mu), start)
}

/// Nontrivial wave at `mu` found by a secant search on the pinned amplitude.
pub fn wave_at_mu(mu: f64, modes: usize) -> Option<(f64, Vec<f64>)> {
    let f = |a: f64| solve_at_amplitude(a, modes).map(|(m, _)| m - mu);
    let (mut a0, mut a1) = (0.05, 0.1);
    let (mut f0, mut f1) = (f(a0)?, f(a1)?);
    for _ in 0..60 {
        if f1.abs() < 1e-14 {
            break;
        }
        let a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = f(a1)?;
    }
    solve_at_amplitude(a1, modes).map(|(_, c)| (a1, c))
}

/// Least-squares `c` in `mu(a) = 1 + c a²` over the given amplitudes.
pub fn onset_coefficient(amplitudes: &[f64], modes: usize) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &a in amplitudes {
        let (mu, _) = solve_at_amplitude(a, modes)?;
        num += a * a * (mu - 1.0);
        den += a.powi(4);
    }
    Some(num / den)
}

/// Evaluate the cosine series at `x`.
pub fn evaluate(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().map(|(k, v)| v * (k as f64 * x).cos()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onset_law_is_one_minus_a_squared() {
        let c = onset_coefficient(&[0.01, 0.02, 0.03], 2).unwrap();
        assert!((c + 1.0).abs() < 0.01, "{c}");
    }

    #[test]
    fn mean_level_drops_by_half_a_squared() {
        let (_, c) = solve_at_amplitude(0.02, 4).unwrap();
        assert!((c[0] + 0.0002).abs() < 1e-6);
    }

    #[test]
    fn fixed_mu_wave() {
        let (a, c) = wave_at_mu(0.98, 4).unwrap();
        assert!(a > 0.1 && a < 0.2);
        assert!(residual(&c, 0.98).iter().all(|r| r.abs() < 1e-12));
    }
}
