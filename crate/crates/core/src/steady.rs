//! Residuals of the steady wave equation in its pseudodifferential and
//! Bernoulli forms, the injectivity margin, and the free surface
//! `Γ = {(x + Hw(x), w(x))}`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Profile, WaveState};
use crate::transforms::{derivative, Transforms};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    Pseudodifferential,
    Bernoulli,
    Bvp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: Profile,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub form: ResidualForm,
}

impl ResidualReport {
    pub fn new(residual: Profile, form: ResidualForm) -> Self {
        ResidualReport { l2_norm: residual.l2_norm(), sup_norm: residual.sup_norm(), residual, form }
    }
}

/// `w'` and `H w'`, the boundary data every trace formula is built from.
#[derive(Clone, Debug)]
pub(crate) struct Slopes {
    pub wp: Profile,
    pub hwp: Profile,
}

impl Slopes {
    pub fn of(w: &Profile, tf: &Transforms) -> Slopes {
        let wp = derivative(w);
        let hwp = tf.h(&wp);
        Slopes { wp, hwp }
    }

    /// `(1 + Hw')² + (w')²`, i.e. `|W*|²`.
    pub fn modulus_sq(&self) -> Profile {
        self.hwp.zip_map(&self.wp, |h, d| (1.0 + h) * (1.0 + h) + d * d)
    }
}

/// `F(w; μ) = H w' - μ (w + w H w' + H(w w'))` without precondition checks.
pub(crate) fn deep_residual(w: &Profile, mu: f64, tf: &Transforms) -> Profile {
    let wp = derivative(w);
    let hwp = tf.h(&wp);
    let h_wwp = tf.h(&w.mul(&wp));
    let n = w.len();
    let (wv, hv, hq) = (w.values(), hwp.values(), h_wwp.values());
    let values = (0..n).map(|j| hv[j] - mu * (wv[j] + wv[j] * hv[j] + hq[j])).collect();
    Profile::from_raw(*w.grid(), values)
}

/// Residual of `H w' = μ (w + w H w' + H(w w'))`.
pub fn residual_deep(state: &WaveState, tf: &Transforms) -> Result<ResidualReport> {
    tf.check_decay(state.w())?;
    let r = deep_residual(state.w(), state.mu, tf);
    r.check_finite()?;
    Ok(ResidualReport::new(r, ResidualForm::Pseudodifferential))
}

pub(crate) fn bernoulli_residual(w: &Profile, mu: f64, slopes: &Slopes) -> Profile {
    let d = slopes.modulus_sq();
    w.zip_map(&d, |wv, dv| (1.0 - 2.0 * mu * wv) * dv - 1.0)
}

/// `B = (1 - 2μw)((1 + Hw')² + (w')²) - 1`.
pub fn residual_bernoulli(state: &WaveState, tf: &Transforms) -> Result<ResidualReport> {
    tf.check_decay(state.w())?;
    let slopes = Slopes::of(state.w(), tf);
    let r = bernoulli_residual(state.w(), state.mu, &slopes);
    r.check_finite()?;
    Ok(ResidualReport::new(r, ResidualForm::Bernoulli))
}

/// `min_x (1 + H w'(x))`; positive means the surface has no self-intersections.
pub fn injectivity_margin(w: &Profile, tf: &Transforms) -> Result<f64> {
    tf.check_decay(w)?;
    Ok(margin_of(&Slopes::of(w, tf)))
}

pub(crate) fn margin_of(slopes: &Slopes) -> f64 {
    slopes.hwp.min() + 1.0
}

/// Ratio `‖B‖_sup / ‖F‖_sup`, reported only when the injectivity margin is at
/// least `delta`. This is the empirical constant of the `F -> B` direction of
/// the equivalence between the two forms.
pub fn equivalence_constant(state: &WaveState, tf: &Transforms, delta: f64) -> Result<Option<f64>> {
    tf.check_decay(state.w())?;
    let slopes = Slopes::of(state.w(), tf);
    if margin_of(&slopes) < delta {
        return Ok(None);
    }
    let f = deep_residual(state.w(), state.mu, tf).sup_norm();
    let b = bernoulli_residual(state.w(), state.mu, &slopes).sup_norm();
    Ok(Some(if f == 0.0 { 0.0 } else { b / f }))
}

/// The parametric surface `x -> (x + Hw(x) + α, w(x))` with the gauge `α = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCurve {
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
    pub shift: f64,
    /// Set iff the injectivity margin is positive.
    pub monotone: bool,
}

impl SurfaceCurve {
    pub fn is_strictly_increasing(&self) -> bool {
        self.abscissa.windows(2).all(|p| p[1] > p[0])
    }
}

pub fn surface_curve(w: &Profile, tf: &Transforms) -> Result<SurfaceCurve> {
    tf.check_decay(w)?;
    let hw = tf.h(w);
    let margin = margin_of(&Slopes::of(w, tf));
    let g = w.grid();
    Ok(SurfaceCurve {
        abscissa: hw.values().iter().enumerate().map(|(j, h)| g.node(j) + h).collect(),
        ordinate: w.values().to_vec(),
        shift: 0.0,
        monotone: margin > 0.0,
    })
}
