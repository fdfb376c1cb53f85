//! Spectral differentiation and the Hilbert transform
//! `H v(x) = (1/π) PV ∫ v(t) / (x - t) dt`, Fourier symbol `-i sgn(ξ)`.
//!
//! Periodic grids use the discrete symbol directly. The Nyquist entry of every
//! odd symbol (`ik`, `-i sgn k`) is set to zero; `|k|` is defined as the
//! composition `H ∘ d/dx`, so its Nyquist entry is zero as well.
//!
//! Line grids offer two routes:
//!
//! * [`LineMethod::Periodized`] treats `[-L, L)` as one period. Exact periodic
//!   algebra (`H² = -I`, product rules), but the periodic kernel differs from
//!   `1/(π(x - t))` by `O(1/L)`.
//! * [`LineMethod::PvQuadrature`] evaluates the principal-value integral of the
//!   truncated data with the alternating-point trapezoid rule
//!   `H v(x_i) ≈ (2h/π) Σ_{i-j odd} v_j / (x_i - x_j)`. The only truncation error
//!   is the data outside `[-L, L)`. The rule is a Toeplitz product, applied as a
//!   zero-padded FFT convolution. It is exactly skew-symmetric and satisfies
//!   `[x, H]_{ij} = 2h/π` on odd offsets, the discrete form of
//!   `x H v - H(x v) = (1/π) ∫ v`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LineMethod {
    Periodized,
    #[default]
    PvQuadrature,
}

/// Default relative endpoint threshold for the decay precondition.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-6;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static PLANS: RefCell<HashMap<usize, Arc<Plans>>> = RefCell::new(HashMap::new());
    static PV_KERNELS: RefCell<HashMap<usize, Arc<Vec<Complex64>>>> = RefCell::new(HashMap::new());
}

fn plans(len: usize) -> Arc<Plans> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(len)
            .or_insert_with(|| {
                PLANNER.with(|p| {
                    let mut p = p.borrow_mut();
                    Arc::new(Plans { forward: p.plan_fft_forward(len), inverse: p.plan_fft_inverse(len) })
                })
            })
            .clone()
    })
}

fn fft_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).forward.process(buf);
}

/// Unnormalized inverse transform.
fn ifft_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).inverse.process(buf);
}

/// Discrete Fourier coefficients `V_m = Σ_j v_j e^{-2πi jm/n}` in FFT order.
pub fn spectrum(v: &Profile) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = v.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}

/// Inverse of [`spectrum`], keeping the real part.
pub fn synthesize(grid: Grid, mut coeffs: Vec<Complex64>) -> Profile {
    assert_eq!(coeffs.len(), grid.n());
    ifft_in_place(&mut coeffs);
    let scale = 1.0 / grid.n() as f64;
    Profile::from_raw(grid, coeffs.iter().map(|c| c.re * scale).collect())
}

fn apply_symbol(v: &Profile, symbol: &[Complex64]) -> Profile {
    let mut s = spectrum(v);
    for (c, m) in s.iter_mut().zip(symbol) {
        *c *= m;
    }
    synthesize(*v.grid(), s)
}

pub(crate) fn apply_real_symbol(v: &Profile, symbol: &[f64]) -> Profile {
    let mut s = spectrum(v);
    for (c, m) in s.iter_mut().zip(symbol) {
        *c *= m;
    }
    synthesize(*v.grid(), s)
}

/// `i k`, zero at Nyquist.
pub fn derivative_symbol(grid: &Grid) -> Vec<Complex64> {
    (0..grid.n())
        .map(|j| if j == grid.nyquist() { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, grid.wavenumber(j)) })
        .collect()
}

/// `-i sgn(k)`, zero at `k = 0` and at Nyquist.
pub fn hilbert_symbol(grid: &Grid) -> Vec<Complex64> {
    (0..grid.n())
        .map(|j| {
            let m = grid.mode_index(j);
            if j == grid.nyquist() || m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -(m.signum() as f64))
            }
        })
        .collect()
}

/// `|k|`, zero at Nyquist.
pub fn conjugate_derivative_symbol(grid: &Grid) -> Vec<f64> {
    (0..grid.n()).map(|j| if j == grid.nyquist() { 0.0 } else { grid.wavenumber(j).abs() }).collect()
}

/// Spectral derivative. Exact for band-limited periodic data.
pub fn derivative(v: &Profile) -> Profile {
    apply_symbol(v, &derivative_symbol(v.grid()))
}

pub fn second_derivative(v: &Profile) -> Profile {
    derivative(&derivative(v))
}

/// Derivative of data whose periodic extension has a jump across the end of
/// a line grid (e.g. `arctan`). A linear ramp carrying the endpoint jump
/// `v(L) - v(-L)` is removed before the spectral derivative and its slope added
/// back; `v(L)` is extrapolated from the last three nodes.
pub fn derivative_detrended(v: &Profile) -> Result<Profile> {
    let g = *v.grid();
    g.require_line()?;
    let vals = v.values();
    let n = vals.len();
    let right = 3.0 * vals[n - 1] - 3.0 * vals[n - 2] + vals[n - 3];
    let jump = right - vals[0];
    let slope = jump / g.length();
    let ramp = v.map_with_x(|x, val| val - slope * x);
    Ok(derivative(&ramp).map(|d| d + slope))
}

/// Hilbert transform on a periodic grid.
pub fn hilbert_periodic(v: &Profile) -> Result<Profile> {
    v.grid().require_periodic()?;
    Ok(apply_symbol(v, &hilbert_symbol(v.grid())))
}

/// Hilbert transform on a line grid with the default decay threshold.
pub fn hilbert_line(v: &Profile, method: LineMethod) -> Result<Profile> {
    hilbert_line_with(v, method, DEFAULT_TAIL_THRESHOLD)
}

pub fn hilbert_line_with(v: &Profile, method: LineMethod, tail_threshold: f64) -> Result<Profile> {
    v.grid().require_line()?;
    v.check_decay(tail_threshold)?;
    Ok(match method {
        LineMethod::Periodized => apply_symbol(v, &hilbert_symbol(v.grid())),
        LineMethod::PvQuadrature => pv_quadrature(v),
    })
}

/// Spectrum of the zero-padded alternating-point kernel `2/(π d)`, `d` odd.
fn pv_kernel(n: usize) -> Arc<Vec<Complex64>> {
    PV_KERNELS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let len = 2 * n;
                let mut k = vec![Complex64::new(0.0, 0.0); len];
                for d in (1..n).step_by(2) {
                    let c = 2.0 / (PI * d as f64);
                    k[d] = Complex64::new(c, 0.0);
                    k[len - d] = Complex64::new(-c, 0.0);
                }
                fft_in_place(&mut k);
                Arc::new(k)
            })
            .clone()
    })
}

fn pv_quadrature(v: &Profile) -> Profile {
    let n = v.len();
    let kernel = pv_kernel(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (b, &x) in buf.iter_mut().zip(v.values()) {
        b.re = x;
    }
    fft_in_place(&mut buf);
    for (b, k) in buf.iter_mut().zip(kernel.iter()) {
        *b *= k;
    }
    ifft_in_place(&mut buf);
    let scale = 1.0 / (2 * n) as f64;
    Profile::from_raw(*v.grid(), buf[..n].iter().map(|c| c.re * scale).collect())
}

/// Transform settings shared by the higher-level modules: which line route
/// to use and how strictly to enforce the decay precondition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Transforms {
    pub line_method: LineMethod,
    /// Relative endpoint threshold; `f64::INFINITY` disables the check.
    pub tail_threshold: f64,
}

impl Default for Transforms {
    fn default() -> Self {
        Transforms { line_method: LineMethod::PvQuadrature, tail_threshold: DEFAULT_TAIL_THRESHOLD }
    }
}

impl Transforms {
    pub fn with_method(line_method: LineMethod) -> Self {
        Transforms { line_method, ..Transforms::default() }
    }

    pub fn with_tail_threshold(mut self, tail_threshold: f64) -> Self {
        self.tail_threshold = tail_threshold;
        self
    }

    pub fn check_decay(&self, v: &Profile) -> Result<()> {
        v.check_decay(self.tail_threshold)
    }

    /// Hilbert transform with the decay precondition enforced on line grids.
    pub fn hilbert(&self, v: &Profile) -> Result<Profile> {
        self.check_decay(v)?;
        Ok(self.h(v))
    }

    /// `H(v')` with the decay precondition enforced on `v'`.
    pub fn conjugate_derivative(&self, v: &Profile) -> Result<Profile> {
        if v.grid().is_periodic() {
            return Ok(apply_real_symbol(v, &conjugate_derivative_symbol(v.grid())));
        }
        let d = derivative(v);
        self.check_decay(&d)?;
        Ok(self.h(&d))
    }

    /// Hilbert transform without the decay check, for use inside solvers and
    /// operators whose inputs were validated upstream.
    pub(crate) fn h(&self, v: &Profile) -> Profile {
        if v.grid().is_periodic() {
            return apply_symbol(v, &hilbert_symbol(v.grid()));
        }
        match self.line_method {
            LineMethod::Periodized => apply_symbol(v, &hilbert_symbol(v.grid())),
            LineMethod::PvQuadrature => pv_quadrature(v),
        }
    }

    /// Unchecked `H(v')`.
    pub(crate) fn cd(&self, v: &Profile) -> Profile {
        if v.grid().is_periodic() || self.line_method == LineMethod::Periodized {
            apply_real_symbol(v, &conjugate_derivative_symbol(v.grid()))
        } else {
            pv_quadrature(&derivative(v))
        }
    }
}

/// Hilbert transform on either grid kind with default settings.
pub fn hilbert(v: &Profile) -> Result<Profile> {
    Transforms::default().hilbert(v)
}

/// `H(v')`: the multiplier `|k|` on periodic grids, `hilbert_line ∘ derivative`
/// on line grids.
pub fn conjugate_derivative(v: &Profile) -> Result<Profile> {
    Transforms::default().conjugate_derivative(v)
}

/// Multiplier `e^{|k| y}` (`y < 0`): the Poisson extension to depth `y` of
/// periodic data, or of line data under the periodized convention.
pub(crate) fn poisson_multiplier(v: &Profile, y: f64) -> Profile {
    let g = v.grid();
    let symbol: Vec<f64> =
        (0..g.n()).map(|j| if j == g.nyquist() { 0.0 } else { (g.wavenumber(j).abs() * y).exp() }).collect();
    apply_real_symbol(v, &symbol)
}

pub(crate) fn require_same(a: &Profile, b: &Profile) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> Grid {
        Grid::circle(n).unwrap()
    }

    #[test]
    fn hilbert_of_cosine_and_sine() {
        let g = circle(64);
        let c = Profile::from_fn(g, f64::cos).unwrap();
        let hc = hilbert_periodic(&c).unwrap();
        for (j, v) in hc.values().iter().enumerate() {
            assert!((v - g.node(j).sin()).abs() < 1e-13);
        }
        let s3 = Profile::from_fn(g, |x| (3.0 * x).sin()).unwrap();
        let hs = hilbert_periodic(&s3).unwrap();
        for (j, v) in hs.values().iter().enumerate() {
            assert!((v + (3.0 * g.node(j)).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn hilbert_kills_constants_and_nyquist() {
        let g = circle(16);
        assert!(hilbert_periodic(&Profile::constant(g, 1.0)).unwrap().sup_norm() < 1e-15);
        let nyq = Profile::from_fn(g, |x| (8.0 * x).cos()).unwrap();
        assert!(hilbert_periodic(&nyq).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn periodic_rejects_line_grid() {
        let g = Grid::line(16, 4.0).unwrap();
        let v = Profile::zeros(g);
        assert!(matches!(hilbert_periodic(&v), Err(Error::GridKind { .. })));
        assert!(matches!(
            hilbert_line(&Profile::zeros(circle(16)), LineMethod::PvQuadrature),
            Err(Error::GridKind { .. })
        ));
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let g = circle(32);
        let d = derivative(&Profile::from_fn(g, f64::sin).unwrap());
        for (j, v) in d.values().iter().enumerate() {
            assert!((v - g.node(j).cos()).abs() < 1e-13);
        }
        assert!(derivative(&Profile::constant(g, 2.5)).sup_norm() < 1e-14);
    }

    #[test]
    fn line_derivative_of_gaussian_moment() {
        let g = Grid::line(1 << 12, 20.0).unwrap();
        let v = Profile::from_fn(g, |x| x * (-x * x).exp()).unwrap();
        let d = derivative(&v);
        let err = g
            .nodes()
            .iter()
            .zip(d.values())
            .map(|(x, dv)| (dv - (1.0 - 2.0 * x * x) * (-x * x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "err = {err:e}");
    }

    #[test]
    fn conjugate_derivative_is_abs_k() {
        let g = circle(32);
        let v = Profile::from_fn(g, |x| (2.0 * x).cos()).unwrap();
        let cd = conjugate_derivative(&v).unwrap();
        for (j, c) in cd.values().iter().enumerate() {
            assert!((c - 2.0 * (2.0 * g.node(j)).cos()).abs() < 1e-13);
        }
        assert!(conjugate_derivative(&Profile::constant(g, 3.0)).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn line_conjugate_derivative_matches_composition() {
        let g = Grid::line(1 << 11, 12.0).unwrap();
        let v = Profile::from_fn(g, |x| (-x * x).exp()).unwrap();
        let cd = conjugate_derivative(&v).unwrap();
        let comp = hilbert_line(&derivative(&v), LineMethod::PvQuadrature).unwrap();
        assert!(cd.sub(&comp).sup_norm() <= 1e-10);
    }

    #[test]
    fn zero_maps_to_zero_on_line() {
        let g = Grid::line(64, 8.0).unwrap();
        for m in [LineMethod::Periodized, LineMethod::PvQuadrature] {
            assert_eq!(hilbert_line(&Profile::zeros(g), m).unwrap().sup_norm(), 0.0);
        }
    }

    #[test]
    fn pv_rule_matches_direct_sum() {
        let g = Grid::line(64, 6.0).unwrap();
        let v = Profile::from_fn(g, |x| (-(x - 0.3) * (x - 0.3)).exp() * (1.0 + 0.2 * x)).unwrap();
        let fast = pv_quadrature(&v);
        let h = g.spacing();
        for i in 0..64 {
            let mut s = 0.0;
            for j in 0..64 {
                if (i as i64 - j as i64).rem_euclid(2) == 1 {
                    s += 2.0 * h / PI * v.values()[j] / (g.node(i) - g.node(j));
                }
            }
            assert!((s - fast.values()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn detrended_derivative_of_arctan() {
        let g = Grid::line(1 << 12, 40.0).unwrap();
        let v = Profile::from_fn(g, f64::atan).unwrap();
        let d = derivative_detrended(&v).unwrap();
        for (x, dv) in g.nodes().iter().zip(d.values()) {
            assert!((dv - 1.0 / (1.0 + x * x)).abs() < 1e-6, "x = {x}");
        }
    }
}
