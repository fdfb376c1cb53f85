mod common;

use common::{band_limited, max_diff, rng};
use deepwave::steady::{equivalence_constant, injectivity_margin, residual_bernoulli, residual_deep, surface_curve};
use deepwave::stokes::{newton_solve_periodic, NewtonOptions};
use deepwave::{Grid, Profile, Transforms, WaveState};
use deepwave_oracle::pv_hilbert;
use proptest::prelude::*;

fn stokes_wave() -> WaveState {
    let g = Grid::circle(128).unwrap();
    // seed from the small-amplitude law a² ≈ 1 - μ
    let a = (1.0f64 - 0.98).sqrt();
    let w0 = Profile::from_fn(g, |x| a * x.cos()).unwrap();
    newton_solve_periodic(&w0, 0.98, &NewtonOptions::default(), &Transforms::default())
        .unwrap()
        .converged()
        .expect("stokes wave")
        .state()
}

#[test]
fn gaussian_residual_against_termwise_quadrature() {
    let (a, mu) = (0.1, 1.0);
    let g = Grid::line(1 << 12, 20.0).unwrap();
    let w = Profile::from_fn(g, |x| a * (-x * x).exp()).unwrap();
    let r = residual_deep(&WaveState::new(w, mu).unwrap(), &Transforms::default()).unwrap();
    let wf = |t: f64| a * (-t * t).exp();
    let wp = |t: f64| -2.0 * a * t * (-t * t).exp();
    let mut worst: f64 = 0.0;
    for j in (0..g.n()).step_by(41) {
        let x = g.node(j);
        let hwp = pv_hilbert(wp, x, 64.0);
        let hwwp = pv_hilbert(|t| wf(t) * wp(t), x, 64.0);
        let f = hwp - mu * (wf(x) + wf(x) * hwp + hwwp);
        worst = worst.max((f - r.residual.values()[j]).abs());
    }
    assert!(worst <= 1e-5, "{worst:e}");
}

#[test]
fn scaling_law_on_the_circle() {
    // w_λ(x) = w(λx)/λ, μ_λ = λμ  gives  F(w_λ; μ_λ)(x) = F(w; μ)(λx)
    let g = Grid::circle(128).unwrap();
    let mut r = rng(11);
    let tf = Transforms::default();
    let w = band_limited(g, 10, 0.0, &mut r).scale(0.05);
    let lam = 2usize;
    let wl = Profile::new(g, (0..g.n()).map(|j| w.values()[(lam * j) % g.n()] / lam as f64).collect()).unwrap();
    for mu in [-1.0, 0.5, 2.0] {
        let f = residual_deep(&WaveState::new(w.clone(), mu).unwrap(), &tf).unwrap().residual;
        let fl = residual_deep(&WaveState::new(wl.clone(), lam as f64 * mu).unwrap(), &tf).unwrap().residual;
        let want: Vec<f64> = (0..g.n()).map(|j| f.values()[(lam * j) % g.n()]).collect();
        assert!(max_diff(fl.values(), &want) <= 1e-13);
    }
}

#[test]
fn stokes_wave_solves_both_forms() {
    let s = stokes_wave();
    let tf = Transforms::default();
    assert!(residual_deep(&s, &tf).unwrap().sup_norm <= 1e-8);
    assert!(residual_bernoulli(&s, &tf).unwrap().sup_norm <= 1e-8);
    assert!(s.w().values().iter().all(|&w| 1.0 - 2.0 * s.mu * w > 0.0));
    assert!(injectivity_margin(s.w(), &tf).unwrap() > 0.0);
    let c = surface_curve(s.w(), &tf).unwrap();
    assert!(c.monotone && c.is_strictly_increasing());
}

#[test]
fn bernoulli_bounded_by_pseudodifferential_residual() {
    let s = stokes_wave();
    let g = *s.grid();
    let tf = Transforms::default();
    let mut constants = Vec::new();
    for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
        let w = s.w().axpy(eps, &Profile::from_fn(g, |x| (3.0 * x).cos() + 0.5 * (2.0 * x).sin()).unwrap());
        let c = equivalence_constant(&WaveState::new(w, s.mu).unwrap(), &tf, 0.5).unwrap().unwrap();
        constants.push(c);
    }
    // the constant is stable as the perturbation shrinks
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi < 10.0 && hi / lo < 1.5, "{constants:?}");
}

#[test]
fn equivalence_gate_skips_degenerate_profiles() {
    let g = Grid::circle(64).unwrap();
    let w = Profile::from_fn(g, |x| 1.5 * x.cos()).unwrap();
    assert!(equivalence_constant(&WaveState::new(w, 1.0).unwrap(), &Transforms::default(), 0.1).unwrap().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_scaling_equivariance(seed in any::<u64>(), mu in -2.0f64..2.0, lam in 2usize..4) {
        let g = Grid::circle(256).unwrap();
        let mut r = rng(seed);
        let tf = Transforms::default();
        let w = band_limited(g, 8, 0.0, &mut r).scale(0.1);
        let wl = Profile::new(g, (0..g.n()).map(|j| w.values()[(lam * j) % g.n()] / lam as f64).collect()).unwrap();
        let f = residual_deep(&WaveState::new(w, mu).unwrap(), &tf).unwrap().residual;
        let fl = residual_deep(&WaveState::new(wl, lam as f64 * mu).unwrap(), &tf).unwrap().residual;
        let want: Vec<f64> = (0..g.n()).map(|j| f.values()[(lam * j) % g.n()]).collect();
        prop_assert!(max_diff(fl.values(), &want) <= 1e-12);
    }

    #[test]
    fn prop_margin_gates_monotone_surface(seed in any::<u64>(), amp in 0.01f64..2.0) {
        let g = Grid::circle(128).unwrap();
        let mut r = rng(seed);
        let w = band_limited(g, 6, 0.0, &mut r).scale(amp / 6.0);
        let tf = Transforms::default();
        let c = surface_curve(&w, &tf).unwrap();
        prop_assert_eq!(c.monotone, injectivity_margin(&w, &tf).unwrap() > 0.0);
        if c.monotone {
            prop_assert!(c.is_strictly_increasing());
        }
    }
}
