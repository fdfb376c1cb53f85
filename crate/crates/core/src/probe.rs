//! Attempts to compute decaying solutions on the line, tail-decay fits, and
//! the weighted Hölder norm
//!
//! ```text
//! Σ_{j≤k} sup <x>^ρ |v^(j)|  +  sup_x sup_{|x-t|≤1} <x>^ρ |v^(k)(x) - v^(k)(t)| / |x-t|^α
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Profile, WaveState};
use crate::identities::{nonexistence_certificate, CertificateParams, CertificateReport};
use crate::krylov::{gmres, GmresOptions};
use crate::linearized::linearized_action;
use crate::steady::deep_residual;
use crate::transforms::{apply_real_symbol, conjugate_derivative_symbol, derivative, Transforms};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rho: f64,
    /// `[x_lo, x_hi]` in `|x|`, taken on both sides.
    pub window: [f64; 2],
    /// RMS of the log-log fit.
    pub fit_residual: f64,
    pub superalgebraic: bool,
    /// Number of points fitted.
    pub points: usize,
    /// Fitted on local maxima of `|v|` because `v` changes sign in the window.
    pub envelope: bool,
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rms = (pts.iter().map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / m).sqrt();
    (slope, icpt, rms)
}

/// Least-squares slope of `log|v|` against `log|x|` over the symmetric tail
/// window (default `[L/8, L/2]`). The window is clamped to keep clear of the
/// outermost 5% of nodes on each side.
pub fn decay_rate_fit(v: &Profile, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let g = v.grid();
    g.require_line()?;
    let l = g.half_width();
    let h = g.spacing();
    let (lo, hi) = window.unwrap_or((l / 8.0, l / 2.0));
    let lo = lo.max(h);
    let hi = hi.min(0.9 * l - h);
    if !(lo < hi) {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    let vals = v.values();
    let n = vals.len();
    let inside = |j: usize| {
        let a = g.node(j).abs();
        a >= lo && a <= hi
    };
    let left: Vec<usize> = (0..n).filter(|&j| g.node(j) < 0.0 && inside(j)).collect();
    let right: Vec<usize> = (0..n).filter(|&j| g.node(j) > 0.0 && inside(j)).collect();
    let changes_sign = |idx: &[usize]| idx.windows(2).any(|p| vals[p[0]] * vals[p[1]] <= 0.0);
    let envelope = changes_sign(&left) || changes_sign(&right);
    let chosen: Vec<usize> = left
        .iter()
        .chain(&right)
        .copied()
        .filter(|&j| {
            let a = vals[j].abs();
            if a == 0.0 {
                return false;
            }
            !envelope || (j > 0 && j + 1 < n && a >= vals[j - 1].abs() && a >= vals[j + 1].abs())
        })
        .collect();
    if chosen.len() < 8 {
        return Err(Error::Fit(format!("only {} usable points in the window", chosen.len())));
    }
    let mut pts: Vec<(f64, f64)> = chosen.iter().map(|&j| (g.node(j).abs().ln(), vals[j].abs().ln())).collect();
    let (slope, _, rms) = least_squares(&pts);

    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xmin, xmax) = (pts[0].0, pts[pts.len() - 1].0);
    let cut = xmax - (xmax - xmin) / 3.0;
    let outer: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= cut).collect();
    let local = if outer.len() >= 2 { least_squares(&outer).0 } else { slope };

    Ok(DecayFit {
        rho: -slope,
        window: [lo, hi],
        fit_residual: rms,
        superalgebraic: -local > 6.0,
        points: chosen.len(),
        envelope,
    })
}

fn holder_offsets(dmax: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=dmax.min(16)).collect();
    let mut d = 16.0f64;
    loop {
        d *= 1.25;
        let di = d.round() as usize;
        if di > dmax {
            break;
        }
        if Some(&di) != out.last() {
            out.push(di);
        }
    }
    if dmax > 16 && out.last() != Some(&dmax) {
        out.push(dmax);
    }
    out
}

/// Discrete weighted Hölder norm of order `k ∈ {0, 1}`. The seminorm runs over
/// node pairs within unit distance: every offset up to 16 nodes, then a
/// geometric subsample of offsets.
pub fn weighted_holder_norm(v: &Profile, k: usize, alpha: f64, rho: f64) -> Result<f64> {
    if k > 1 {
        return Err(Error::InvalidParameter(format!("order k = {k}, expected 0 or 1")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
    }
    let g = v.grid();
    let n = g.n();
    let h = g.spacing();
    let weights: Vec<f64> = g.nodes().iter().map(|x| (1.0 + x * x).powf(0.5 * rho)).collect();
    let mut derivs = vec![v.clone()];
    if k == 1 {
        derivs.push(derivative(v));
    }
    let mut total = 0.0;
    for d in &derivs {
        total += d.values().iter().zip(&weights).map(|(a, w)| w * a.abs()).fold(0.0, f64::max);
    }
    let top = derivs[k].values();
    let mut dmax = (1.0 / h + 1e-9).floor() as usize;
    if g.is_periodic() {
        dmax = dmax.min(n / 2);
    }
    let mut semi: f64 = 0.0;
    for d in holder_offsets(dmax) {
        let denom = (d as f64 * h).powf(alpha);
        for i in 0..n {
            let j = i + d;
            let j = if j < n {
                j
            } else if g.is_periodic() {
                j - n
            } else {
                break;
            };
            let q = (top[i] - top[j]).abs() / denom;
            semi = semi.max(weights[i].max(weights[j]) * q);
        }
    }
    Ok(total + semi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    CollapsedToZero,
    Diverged,
    Stagnated,
    /// Residual below the convergence tolerance while `sup|w|` stays above the
    /// collapse threshold.
    ConvergedNontrivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeOptions {
    /// Total iteration budget; exhausting it means stagnation.
    pub max_iter: usize,
    pub collapse_tol: f64,
    /// Divergence once `sup|w| > divergence_factor * sup|w0|`.
    pub divergence_factor: f64,
    /// Residual sup-norm at which iteration stops.
    pub converged_tol: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_cycles: usize,
    /// Shift `c` of the fallback map `w <- (c + H d/dx)^{-1} ((c + μ) w + μ N(w))`.
    pub fallback_shift: f64,
    pub certificate: CertificateParams,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            max_iter: 200,
            collapse_tol: 1e-8,
            divergence_factor: 1e3,
            converged_tol: 1e-11,
            gmres_tol: 1e-6,
            gmres_restart: 30,
            gmres_cycles: 2,
            fallback_shift: 1.0,
            certificate: CertificateParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub initial_label: String,
    pub mu: f64,
    pub outcome: ProbeOutcome,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub fallback_iterations: usize,
    pub final_sup_norm: f64,
    pub final_residual: f64,
    /// Absent when the final iterate has too few usable tail points.
    pub decay: Option<DecayFit>,
    pub certificate: CertificateReport,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

impl ProbeReport {
    /// A run that ended on a nontrivial profile with small residual and fast
    /// decay, i.e. a numerical counterexample candidate.
    pub fn is_decaying_solution(&self, residual_tol: f64, rho_min: f64) -> bool {
        self.outcome != ProbeOutcome::CollapsedToZero
            && self.final_sup_norm > 0.0
            && self.final_residual <= residual_tol
            && self.decay.as_ref().is_some_and(|d| d.rho >= rho_min)
    }
}

/// `N(w) = w H w' + H(w w')`, discretized exactly as in the residual.
fn nonlinearity(w: &Profile, tf: &Transforms) -> Profile {
    let wp = derivative(w);
    w.mul(&tf.h(&wp)).add(&tf.h(&w.mul(&wp)))
}

/// Damped Newton-GMRES on `F(w; μ) = 0` with a fixed-point fallback once the
/// line search fails. All outcomes are reported as data.
pub fn newton_probe_line(
    w0: &Profile,
    mu: f64,
    label: &str,
    tf: &Transforms,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let g = *w0.grid();
    g.require_line()?;
    tf.check_decay(w0)?;
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu = {mu}")));
    }
    let abs_k = conjugate_derivative_symbol(&g);
    let precond: Vec<f64> = abs_k.iter().map(|k| 1.0 / (k + 1.0 + mu.abs())).collect();
    let resolvent: Vec<f64> = abs_k.iter().map(|k| 1.0 / (k + opts.fallback_shift)).collect();
    let limit = opts.divergence_factor * w0.sup_norm();
    let gm = GmresOptions { rel_tol: opts.gmres_tol, restart: opts.gmres_restart, max_cycles: opts.gmres_cycles };

    let mut w = w0.clone();
    let mut newton_mode = true;
    let (mut newton_its, mut fallback_its) = (0, 0);
    let mut outcome = ProbeOutcome::Stagnated;
    let mut it = 0;
    loop {
        let f = deep_residual(&w, mu, tf);
        let r = f.sup_norm();
        let s = w.sup_norm();
        if !r.is_finite() || !s.is_finite() || s > limit {
            outcome = ProbeOutcome::Diverged;
            break;
        }
        if s <= opts.collapse_tol {
            outcome = ProbeOutcome::CollapsedToZero;
            break;
        }
        if r <= opts.converged_tol {
            outcome = ProbeOutcome::ConvergedNontrivial;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        it += 1;
        if newton_mode {
            newton_its += 1;
            let cdw = tf.cd(&w);
            let apply = |y: &[f64]| {
                let v = apply_real_symbol(&Profile::from_raw(g, y.to_vec()), &precond);
                linearized_action(&v, &w, &cdw, mu, tf).into_values()
            };
            let rhs: Vec<f64> = f.values().iter().map(|v| -v).collect();
            let (y, _) = gmres(apply, &rhs, gm);
            let dw = apply_real_symbol(&Profile::from_raw(g, y), &precond);
            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda >= 1e-4 {
                let trial = w.axpy(lambda, &dw);
                let rt = deep_residual(&trial, mu, tf).sup_norm();
                if rt.is_finite() && rt < (1.0 - 1e-4 * lambda) * r {
                    accepted = Some(trial);
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some(next) => w = next,
                None => newton_mode = false,
            }
        } else {
            fallback_its += 1;
            let rhs = w.scale(opts.fallback_shift + mu).axpy(mu, &nonlinearity(&w, tf));
            w = apply_real_symbol(&rhs, &resolvent);
        }
    }

    let final_residual = deep_residual(&w, mu, tf).sup_norm();
    let decay = decay_rate_fit(&w, None).ok();
    let state = WaveState { profile: w, mu };
    let certificate = nonexistence_certificate(&state, decay.as_ref(), tf, &opts.certificate)?;
    Ok(ProbeReport {
        initial_label: label.to_string(),
        mu,
        outcome,
        iterations: it,
        newton_iterations: newton_its,
        fallback_iterations: fallback_its,
        final_sup_norm: state.profile.sup_norm(),
        final_residual,
        decay,
        certificate,
        profile: Some(state.profile),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_has_zero_rate() {
        let v = Profile::constant(Grid::line(512, 100.0).unwrap(), 2.0);
        let f = decay_rate_fit(&v, None).unwrap();
        assert!(f.rho.abs() < 0.01 && !f.superalgebraic && !f.envelope);
    }

    #[test]
    fn exponential_is_superalgebraic() {
        let v = Profile::from_fn(Grid::line(2048, 100.0).unwrap(), |x| (-x.abs()).exp()).unwrap();
        assert!(decay_rate_fit(&v, None).unwrap().superalgebraic);
    }

    #[test]
    fn oscillating_tail_uses_envelope() {
        let v = Profile::from_fn(Grid::line(4096, 200.0).unwrap(), |x| (3.0 * x).cos() / (1.0 + x * x)).unwrap();
        let f = decay_rate_fit(&v, Some((50.0, 150.0))).unwrap();
        assert!(f.envelope);
        assert!((f.rho - 2.0).abs() < 0.1, "{f:?}");
    }

    #[test]
    fn too_few_points_is_an_error() {
        let v = Profile::from_fn(Grid::line(64, 10.0).unwrap(), |x| (20.0 * x).sin()).unwrap();
        assert!(decay_rate_fit(&v, Some((3.0, 4.0))).is_err());
    }

    #[test]
    fn holder_trivial_values() {
        let g = Grid::line(256, 20.0).unwrap();
        assert_eq!(weighted_holder_norm(&Profile::zeros(g), 1, 0.5, 2.0).unwrap(), 0.0);
        assert_eq!(weighted_holder_norm(&Profile::constant(g, 1.0), 0, 0.5, 0.0).unwrap(), 1.0);
        assert!(weighted_holder_norm(&Profile::zeros(g), 2, 0.5, 0.0).is_err());
        assert!(weighted_holder_norm(&Profile::zeros(g), 0, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_start_collapses_immediately() {
        let g = Grid::line(256, 20.0).unwrap();
        let r = newton_probe_line(&Profile::zeros(g), 1.0, "zero", &Transforms::default(), &ProbeOptions::default())
            .unwrap();
        assert_eq!(r.outcome, ProbeOutcome::CollapsedToZero);
        assert_eq!(r.iterations, 0);
        assert!(r.decay.is_none());
    }

    #[test]
    fn offsets_cover_small_distances() {
        assert_eq!(holder_offsets(5), vec![1, 2, 3, 4, 5]);
        let o = holder_offsets(100);
        assert_eq!(&o[..16], &(1..=16).collect::<Vec<_>>()[..]);
        assert_eq!(*o.last().unwrap(), 100);
        assert!(o.windows(2).all(|p| p[0] < p[1]));
    }
}
