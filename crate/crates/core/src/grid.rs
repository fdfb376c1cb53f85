//! Uniform grids on the circle and on a truncated line, and real profiles
//! sampled on them.
//!
//! Periodic grids place nodes at `x_j = j * period / n` for `j = 0..n`.
//! Line grids sample `[-L, L)` at `x_j = -L + j * 2L / n`, so the node set is
//! symmetric under `x -> -x` modulo the identification of `-L` with `L`; the
//! reflected partner of node `j` is node `(n - j) % n` on both kinds.
//!
//! Spectral indices follow the FFT layout: position `j` of a transform holds
//! the signed wavenumber index `j` for `j < n/2` and `j - n` otherwise, so the
//! Nyquist index is `-n/2`. The physical wavenumber is `2π m / length` where
//! `length` is the period (or `2L` on a line grid).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    Periodic { period: f64 },
    Line { half_width: f64 },
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::Periodic { .. } => f.write_str("periodic"),
            GridKind::Line { .. } => f.write_str("line"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    kind: GridKind,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(flatten)]
    kind: GridKind,
    n: usize,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(repr: GridRepr) -> Result<Self> {
        Grid::new(repr.kind, repr.n)
    }
}

impl From<Grid> for GridRepr {
    fn from(grid: Grid) -> Self {
        GridRepr { kind: grid.kind, n: grid.n }
    }
}

impl Grid {
    pub fn new(kind: GridKind, n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("node count must be a power of two and at least 8, got {n}")));
        }
        let length = match kind {
            GridKind::Periodic { period } => period,
            GridKind::Line { half_width } => 2.0 * half_width,
        };
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        Ok(Grid { kind, n })
    }

    pub fn periodic(n: usize, period: f64) -> Result<Self> {
        Grid::new(GridKind::Periodic { period }, n)
    }

    /// The standard `2π`-periodic grid.
    pub fn circle(n: usize) -> Result<Self> {
        Grid::periodic(n, 2.0 * PI)
    }

    pub fn line(n: usize, half_width: f64) -> Result<Self> {
        Grid::new(GridKind::Line { half_width }, n)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, GridKind::Periodic { .. })
    }

    pub fn is_line(&self) -> bool {
        matches!(self.kind, GridKind::Line { .. })
    }

    /// Period of the spectral basis: the period itself, or `2L` on a line.
    pub fn length(&self) -> f64 {
        match self.kind {
            GridKind::Periodic { period } => period,
            GridKind::Line { half_width } => 2.0 * half_width,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.length()
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn origin(&self) -> f64 {
        match self.kind {
            GridKind::Periodic { .. } => 0.0,
            GridKind::Line { half_width } => -half_width,
        }
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber index stored at FFT position `j`.
    pub fn mode_index(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Signed wavenumber indices in FFT order, covering `-n/2 ..= n/2 - 1`.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|j| self.mode_index(j)).collect()
    }

    /// Physical wavenumber at FFT position `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.length()
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Index of the node at `-x_j`.
    pub fn reflected(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// The line grid made of the central `n/2` nodes, i.e. `[-L/2, L/2)` with
    /// the same spacing, together with the offset of its first node.
    pub fn inner_half(&self) -> Result<(Grid, usize)> {
        match self.kind {
            GridKind::Line { half_width } => Ok((Grid::line(self.n / 2, 0.5 * half_width)?, self.n / 4)),
            found => Err(Error::GridKind { expected: "line", found }),
        }
    }

    pub fn require_line(&self) -> Result<()> {
        match self.kind {
            GridKind::Line { .. } => Ok(()),
            found => Err(Error::GridKind { expected: "line", found }),
        }
    }

    pub fn require_periodic(&self) -> Result<()> {
        match self.kind {
            GridKind::Periodic { .. } => Ok(()),
            found => Err(Error::GridKind { expected: "periodic", found }),
        }
    }
}

/// Real samples of a function, one per grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr")]
pub struct Profile {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRepr {
    grid: Grid,
    values: Vec<f64>,
}

impl TryFrom<ProfileRepr> for Profile {
    type Error = Error;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        Profile::new(repr.grid, repr.values)
    }
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Length { expected: grid.n(), found: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Profile { grid, values })
    }

    /// Builds a profile without the finiteness scan. Callers guarantee the
    /// length; non-finite values are caught by [`Profile::check_finite`].
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Profile { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Profile::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Profile { grid, values: vec![0.0; grid.n()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Profile { grid, values: vec![c; grid.n()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            Some((index, &value)) => Err(Error::NonFinite { index, value }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &Profile) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Applies `f(x_j, v_j)` at every node.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> Profile {
        let g = self.grid;
        Profile::from_raw(g, self.values.iter().enumerate().map(|(j, &v)| f(g.node(j), v)).collect())
    }

    /// Pointwise combination; the grids must agree (checked in debug builds).
    pub fn zip_map(&self, other: &Profile, f: impl Fn(f64, f64) -> f64) -> Profile {
        debug_assert_eq!(self.grid, other.grid);
        Profile::from_raw(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Profile) -> Profile {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Profile) -> Profile {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Profile) -> Profile {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Profile {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Profile) -> Profile {
        self.zip_map(other, |a, b| a + c * b)
    }

    /// Multiplies by the abscissa, `x v(x)`.
    pub fn times_x(&self) -> Profile {
        self.map_with_x(|x, v| x * v)
    }

    /// Trapezoid pairing `h Σ u_j v_j`, shared by every module.
    pub fn inner(&self, other: &Profile) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Trapezoid quadrature `h Σ v_j`.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `v(-x)` sampled on the same nodes.
    pub fn reflect(&self) -> Profile {
        let g = self.grid;
        Profile::from_raw(g, (0..g.n()).map(|j| self.values[g.reflected(j)]).collect())
    }

    /// Even part `(v(x) + v(-x)) / 2`.
    pub fn symmetrize(&self) -> Profile {
        self.zip_map(&self.reflect(), |a, b| 0.5 * (a + b))
    }

    /// Restriction to the central half of a line grid.
    pub fn inner_half(&self) -> Result<Profile> {
        let (half, offset) = self.grid.inner_half()?;
        Ok(Profile::from_raw(half, self.values[offset..offset + half.n()].to_vec()))
    }

    /// Relative endpoint check used as the decay precondition on line grids.
    pub fn check_decay(&self, relative_threshold: f64) -> Result<()> {
        if !self.grid.is_line() || !relative_threshold.is_finite() {
            return Ok(());
        }
        let allowed = relative_threshold * self.sup_norm();
        let left = self.values[0].abs();
        let right = self.values[self.values.len() - 1].abs();
        if left > allowed || right > allowed {
            return Err(Error::DecayViolation { left, right, allowed });
        }
        Ok(())
    }
}

/// A profile `w` paired with the dimensionless gravity parameter `μ = g/c²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub profile: Profile,
    pub mu: f64,
}

impl WaveState {
    pub fn new(profile: Profile, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        Ok(WaveState { profile, mu })
    }

    pub fn grid(&self) -> &Grid {
        self.profile.grid()
    }

    pub fn w(&self) -> &Profile {
        &self.profile
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_node_counts() {
        assert!(Grid::circle(6).is_err());
        assert!(Grid::circle(12).is_err());
        assert!(Grid::line(16, -1.0).is_err());
        assert!(Grid::line(16, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::circle(8).unwrap();
        assert_eq!(g.wavenumbers(), vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.wavenumber(3), 3.0);
        let l = Grid::line(8, PI).unwrap();
        assert_eq!(l.wavenumber(1), 1.0);
        assert_eq!(l.node(0), -PI);
    }

    #[test]
    fn reflection_pairs_nodes() {
        let g = Grid::line(16, 4.0).unwrap();
        for j in 1..16 {
            let r = g.reflected(j);
            assert!((g.node(j) + g.node(r)).abs() < 1e-12);
        }
        assert_eq!(g.reflected(0), 0);
    }

    #[test]
    fn profile_rejects_nan_and_wrong_length() {
        let g = Grid::circle(8).unwrap();
        assert!(matches!(Profile::new(g, vec![0.0; 7]), Err(Error::Length { .. })));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Profile::new(g, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn decay_check_names_endpoints() {
        let g = Grid::line(64, 5.0).unwrap();
        let slow = Profile::from_fn(g, |x| 1.0 / (1.0 + x * x)).unwrap();
        match slow.check_decay(1e-6) {
            Err(Error::DecayViolation { left, .. }) => assert!((left - 1.0 / 26.0).abs() < 1e-12),
            other => panic!("expected decay violation, got {other:?}"),
        }
        let fast = Profile::from_fn(g, |x| (-x * x).exp()).unwrap();
        assert!(fast.check_decay(1e-6).is_ok());
    }

    #[test]
    fn inner_half_restriction() {
        let g = Grid::line(32, 8.0).unwrap();
        let p = Profile::from_fn(g, |x| x).unwrap();
        let h = p.inner_half().unwrap();
        assert_eq!(h.grid().n(), 16);
        assert_eq!(h.values()[0], -4.0);
        assert_eq!(h.grid().node(0), -4.0);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let g = Grid::line(16, 3.7).unwrap();
        let p = Profile::from_fn(g, |x| (x * 1.234567).sin() / 3.0).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Profile = serde_json::from_str(&text).unwrap();
        for (a, b) in p.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.grid(), p.grid());
    }
}
