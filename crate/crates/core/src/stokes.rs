//! Periodic control problem: the same equation with the periodic Hilbert
//! transform, where small Stokes waves bifurcate from `w = 0` at each
//! eigenvalue of `H d/dx`.
//!
//! Newton works in the subspace of even profiles. Unknowns are the samples
//! `w_0, ..., w_{n/2}` and the equations are the residual rows `0..=n/2`;
//! columns of the Jacobian are `L` applied to `e_j + e_{n-j}`. Restricting to
//! even profiles removes the translation null vector `w'`, which would
//! otherwise make the Jacobian singular at every nontrivial wave.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Profile, WaveState};
use crate::linearized::linearized_action;
use crate::steady::deep_residual;
use crate::transforms::{derivative, Transforms};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub mu: f64,
    /// Half crest-to-trough, `(w(0) - w(π))/2` on the 2π circle.
    pub amplitude: f64,
    pub profile: Profile,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Sup-norm residual tolerance.
    pub tol: f64,
    /// Step multiplier in `(0, 1]`; `None` takes full steps.
    pub damping: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 50, tol: 1e-11, damping: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveFailure {
    pub mu: f64,
    pub final_residual: f64,
    pub iterations: usize,
    /// Reported when the linear solve broke down.
    pub smallest_singular_value: Option<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveOutcome {
    Converged(BranchPoint),
    Failed(SolveFailure),
}

impl SolveOutcome {
    pub fn converged(self) -> Option<BranchPoint> {
        match self {
            SolveOutcome::Converged(p) => Some(p),
            SolveOutcome::Failed(_) => None,
        }
    }
}

/// `{m · 2π/period : m = 1, ..., n/2 - 1}`, the nonzero eigenvalues of the
/// discrete `H d/dx` (Nyquist excluded).
pub fn linear_bifurcation_points(grid: &Grid) -> Result<Vec<f64>> {
    grid.require_periodic()?;
    let base = 2.0 * std::f64::consts::PI / grid.length();
    Ok((1..grid.n() / 2).map(|m| m as f64 * base).collect())
}

/// `(w_0 - w_{n/2}) / 2`.
pub fn amplitude(w: &Profile) -> f64 {
    let v = w.values();
    0.5 * (v[0] - v[v.len() / 2])
}

fn even_size(g: &Grid) -> usize {
    g.n() / 2 + 1
}

fn expand(g: &Grid, u: &[f64]) -> Profile {
    let n = g.n();
    Profile::from_raw(*g, (0..n).map(|j| u[j.min(n - j)]).collect())
}

fn basis(g: &Grid, j: usize) -> Profile {
    let n = g.n();
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e[(n - j) % n] = 1.0;
    Profile::from_raw(*g, e)
}

fn even_jacobian(w: &Profile, mu: f64, tf: &Transforms) -> DMatrix<f64> {
    let g = *w.grid();
    let m = even_size(&g);
    let cdw = tf.cd(w);
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let col = linearized_action(&basis(&g, j), w, &cdw, mu, tf);
        for i in 0..m {
            jac[(i, j)] = col.values()[i];
        }
    }
    jac
}

/// `∂F/∂μ = -(w + w H w' + H(w w'))`.
fn mu_derivative(w: &Profile, tf: &Transforms) -> Profile {
    let wp = derivative(w);
    w.add(&w.mul(&tf.h(&wp))).add(&tf.h(&w.mul(&wp))).scale(-1.0)
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().min()
}

/// Extra scalar equation `c(w, μ) = 0` that is affine in `(a(w), μ)`.
#[derive(Clone, Copy, Debug)]
struct Constraint {
    /// Coefficient of `a(w)`.
    ca: f64,
    /// Coefficient of `μ`.
    cm: f64,
    rhs: f64,
}

impl Constraint {
    fn value(&self, w: &Profile, mu: f64) -> f64 {
        self.ca * amplitude(w) + self.cm * mu - self.rhs
    }
}

fn point(w: Profile, mu: f64, residual: f64, iters: usize) -> BranchPoint {
    BranchPoint {
        mu,
        amplitude: amplitude(&w),
        mean: w.mean(),
        residual_norm: residual,
        newton_iters: iters,
        profile: w,
    }
}

/// Newton on the even subspace, with `μ` either fixed or an extra unknown
/// pinned by `constraint`.
fn newton_even(
    w0: &Profile,
    mu0: f64,
    constraint: Option<Constraint>,
    opts: &NewtonOptions,
    tf: &Transforms,
) -> SolveOutcome {
    let g = *w0.grid();
    let m = even_size(&g);
    let mut w = w0.symmetrize();
    let mut mu = mu0;
    let step = opts.damping.unwrap_or(1.0);
    let mut it = 0;
    loop {
        let f = deep_residual(&w, mu, tf);
        let r = f.sup_norm();
        let c = constraint.map(|c| c.value(&w, mu)).unwrap_or(0.0);
        if !r.is_finite() {
            return SolveOutcome::Failed(SolveFailure {
                mu,
                final_residual: r,
                iterations: it,
                smallest_singular_value: None,
                reason: "residual is not finite".into(),
            });
        }
        if r <= opts.tol && c.abs() <= opts.tol {
            return SolveOutcome::Converged(point(w, mu, r, it));
        }
        if it == opts.max_iter {
            return SolveOutcome::Failed(SolveFailure {
                mu,
                final_residual: r.max(c.abs()),
                iterations: it,
                smallest_singular_value: None,
                reason: format!("no convergence in {it} iterations"),
            });
        }
        it += 1;
        let jw = even_jacobian(&w, mu, tf);
        let (jac, rhs) = match constraint {
            None => (jw, DVector::from_iterator(m, f.values()[..m].iter().map(|v| -v))),
            Some(cons) => {
                let fm = mu_derivative(&w, tf);
                let mut jac = DMatrix::zeros(m + 1, m + 1);
                jac.view_mut((0, 0), (m, m)).copy_from(&jw);
                for i in 0..m {
                    jac[(i, m)] = fm.values()[i];
                }
                jac[(m, 0)] = 0.5 * cons.ca;
                jac[(m, m - 1)] = -0.5 * cons.ca;
                jac[(m, m)] = cons.cm;
                let mut rhs = DVector::zeros(m + 1);
                for i in 0..m {
                    rhs[i] = -f.values()[i];
                }
                rhs[m] = -c;
                (jac, rhs)
            }
        };
        let lu = jac.clone().lu();
        let du = match lu.solve(&rhs) {
            Some(du) if du.iter().all(|v| v.is_finite()) => du,
            _ => {
                return SolveOutcome::Failed(SolveFailure {
                    mu,
                    final_residual: r,
                    iterations: it,
                    smallest_singular_value: Some(smallest_singular_value(&jac)),
                    reason: "singular Jacobian".into(),
                })
            }
        };
        let dw = expand(&g, &du.as_slice()[..m]);
        let dmu = if constraint.is_some() { du[m] } else { 0.0 };
        let trial = |t: f64| {
            let wt = w.axpy(t, &dw).symmetrize();
            let mt = mu + t * dmu;
            let ct = constraint.map(|c| c.value(&wt, mt)).unwrap_or(0.0);
            let merit = deep_residual(&wt, mt, tf).l2_norm().powi(2) + ct * ct;
            (wt, mt, merit)
        };
        let (mut wt, mut mt, mut merit) = trial(step);
        if opts.damping.is_none() {
            // halve the step until the residual drops
            let current = f.l2_norm().powi(2) + c * c;
            let mut t = 1.0;
            while !(merit < current) && t > 1.0 / 64.0 {
                t *= 0.5;
                (wt, mt, merit) = trial(t);
            }
        }
        w = wt;
        mu = mt;
    }
}

/// Newton iteration for `F(w; μ) = 0` on a periodic grid, from `w0`
/// (symmetrized first).
pub fn newton_solve_periodic(w0: &Profile, mu: f64, opts: &NewtonOptions, tf: &Transforms) -> Result<SolveOutcome> {
    w0.grid().require_periodic()?;
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu = {mu}")));
    }
    Ok(newton_even(w0, mu, None, opts, tf))
}

/// Solve with the amplitude pinned and `μ` free. Without a guess the start
/// is `a cos(2πx/period)` at `μ = mu_guess`.
pub fn solve_at_amplitude(
    grid: &Grid,
    target: f64,
    mu_guess: f64,
    w_guess: Option<&Profile>,
    opts: &NewtonOptions,
    tf: &Transforms,
) -> Result<SolveOutcome> {
    grid.require_periodic()?;
    let k = 2.0 * std::f64::consts::PI / grid.length();
    let w0 = match w_guess {
        Some(w) => {
            if w.grid() != grid {
                return Err(Error::GridMismatch);
            }
            w.clone()
        }
        None => Profile::from_fn(*grid, |x| target * (k * x).cos())?,
    };
    Ok(newton_even(&w0, mu_guess, Some(Constraint { ca: 1.0, cm: 0.0, rhs: target }), opts, tf))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Why the branch stopped short of the requested step count.
    pub diagnostic: Option<String>,
}

/// Steps taken in amplitude before switching to pseudo-arclength.
pub const AMPLITUDE_STEPS: usize = 5;
const MAX_RETRIES: usize = 8;

/// Continuation in the `(μ, a)` plane: amplitude-parametrized for the first
/// [`AMPLITUDE_STEPS`] steps, pseudo-arclength afterwards. A step whose chord
/// exceeds `step_size` is retried with a shorter step.
pub fn continue_branch(
    start: &BranchPoint,
    step_count: usize,
    step_size: f64,
    opts: &NewtonOptions,
    tf: &Transforms,
) -> Result<Branch> {
    let g = *start.profile.grid();
    g.require_periodic()?;
    if !(step_size > 0.0) {
        return Err(Error::InvalidParameter(format!("step_size = {step_size}")));
    }
    let sign = if start.amplitude < 0.0 { -1.0 } else { 1.0 };
    let k = 2.0 * std::f64::consts::PI / g.length();
    let mut points = vec![start.clone()];
    let mut ds = 0.95 * step_size;
    for step in 1..=step_count {
        let prev = points[points.len() - 1].clone();
        let before = (points.len() >= 2).then(|| points[points.len() - 2].clone());
        let mut accepted = None;
        let mut last_issue = String::new();
        for _ in 0..MAX_RETRIES {
            let arclength = before.as_ref().filter(|_| step > AMPLITUDE_STEPS);
            let outcome = if let Some(b) = arclength {
                let (dm, da) = (prev.mu - b.mu, prev.amplitude - b.amplitude);
                let chord = dm.hypot(da);
                let (tm, ta) = (dm / chord, da / chord);
                let ratio = ds / chord;
                let guess = prev.profile.axpy(ratio, &prev.profile.sub(&b.profile));
                let cons = Constraint { ca: ta, cm: tm, rhs: ta * prev.amplitude + tm * prev.mu + ds };
                newton_even(&guess, prev.mu + ds * tm, Some(cons), opts, tf)
            } else {
                let target = prev.amplitude + sign * ds;
                let guess = if prev.amplitude.abs() > 1e-12 {
                    prev.profile.scale(target / prev.amplitude)
                } else {
                    Profile::from_fn(g, |x| target * (k * x).cos())?
                };
                let mu_guess = match &before {
                    Some(b) if (prev.amplitude - b.amplitude).abs() > 0.0 => {
                        prev.mu + (prev.mu - b.mu) * (target - prev.amplitude) / (prev.amplitude - b.amplitude)
                    }
                    _ => prev.mu,
                };
                newton_even(&guess, mu_guess, Some(Constraint { ca: 1.0, cm: 0.0, rhs: target }), opts, tf)
            };
            match outcome {
                SolveOutcome::Converged(p) => {
                    let chord = (p.mu - prev.mu).hypot(p.amplitude - prev.amplitude);
                    if chord <= step_size {
                        accepted = Some(p);
                        break;
                    }
                    last_issue = format!("chord {chord:e} exceeds step size");
                    ds *= 0.9 * step_size / chord;
                }
                SolveOutcome::Failed(f) => {
                    last_issue = f.reason;
                    ds *= 0.5;
                }
            }
        }
        match accepted {
            Some(p) => points.push(p),
            None => {
                return Ok(Branch {
                    points,
                    diagnostic: Some(format!("step {step} failed after {MAX_RETRIES} attempts: {last_issue}")),
                })
            }
        }
    }
    Ok(Branch { points, diagnostic: None })
}

/// Least-squares `c` in `μ - mu0 = c a²` over branch points with
/// `a ∈ [a_lo, a_hi]`.
pub fn onset_coefficient(points: &[BranchPoint], mu0: f64, a_lo: f64, a_hi: f64) -> Option<f64> {
    let sel: Vec<&BranchPoint> =
        points.iter().filter(|p| p.amplitude.abs() >= a_lo && p.amplitude.abs() <= a_hi).collect();
    if sel.len() < 2 {
        return None;
    }
    let num: f64 = sel.iter().map(|p| p.amplitude.powi(2) * (p.mu - mu0)).sum();
    let den: f64 = sel.iter().map(|p| p.amplitude.powi(4)).sum();
    Some(num / den)
}

impl BranchPoint {
    pub fn state(&self) -> WaveState {
        WaveState { profile: self.profile.clone(), mu: self.mu }
    }
}
