//! The linearized operator
//!
//! ```text
//! L v = H v' - μ (v + w H v' + v H w' + H((v w)'))
//! ```
//!
//! its conjugation by the Plotnikov transformation
//! `P v = (1 + H w') v + w' H v` into `H d/dx - G`, spectra of the
//! relativistic Schrödinger operator `H d/dx + μ - G`, and the explicit
//! solution of `H V' - μ V = g`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Profile, WaveState};
use crate::identities::IdentityReport;
use crate::steady::Slopes;
use crate::transforms::{apply_real_symbol, conjugate_derivative_symbol, derivative, require_same, Transforms};

/// Complex boundary samples, `re + i im`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub re: Profile,
    pub im: Profile,
}

impl BoundaryTrace {
    pub fn new(re: Profile, im: Profile) -> Result<Self> {
        require_same(&re, &im)?;
        Ok(BoundaryTrace { re, im })
    }

    pub fn grid(&self) -> &Grid {
        self.re.grid()
    }

    pub fn modulus_sq(&self) -> Profile {
        self.re.zip_map(&self.im, |a, b| a * a + b * b)
    }

    /// `W* = 1 + H w' + i w'`.
    pub fn of_profile(w: &Profile, tf: &Transforms) -> Self {
        let s = Slopes::of(w, tf);
        BoundaryTrace { re: s.hwp.map(|h| 1.0 + h), im: s.wp }
    }

    /// `(R v)* = H v + i v`.
    pub fn analytic(v: &Profile, tf: &Transforms) -> Self {
        BoundaryTrace { re: tf.h(v), im: v.clone() }
    }
}

/// `L v` given `H w'` precomputed; no checks.
pub(crate) fn linearized_action(v: &Profile, w: &Profile, cdw: &Profile, mu: f64, tf: &Transforms) -> Profile {
    let cdv = tf.cd(v);
    let cdvw = tf.cd(&v.mul(w));
    let (a, b, c, d, e) = (cdv.values(), v.values(), w.values(), cdw.values(), cdvw.values());
    let out = (0..v.len()).map(|j| a[j] - mu * (b[j] + c[j] * a[j] + b[j] * d[j] + e[j])).collect();
    Profile::from_raw(*v.grid(), out)
}

/// The linearization of `F(·; μ)` at `w`, applied to `v`.
pub fn apply_l(v: &Profile, state: &WaveState, tf: &Transforms) -> Result<Profile> {
    require_same(v, state.w())?;
    Ok(linearized_action(v, state.w(), &tf.cd(state.w()), state.mu, tf))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorLabel {
    /// The linearized operator `L`.
    L,
    /// `H d/dx - G`.
    Conjugated,
    /// `H d/dx + μ - G`.
    Schrodinger,
    /// `H d/dx` alone.
    ConjugateDerivative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperatorMatrix {
    pub grid: Grid,
    pub entries: DMatrix<f64>,
    pub label: OperatorLabel,
}

impl LinearOperatorMatrix {
    /// Column `j` is the image of the `j`-th unit sample vector.
    pub fn from_columns(grid: Grid, label: OperatorLabel, op: impl Fn(&Profile) -> Profile) -> Self {
        let n = grid.n();
        let mut entries = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = op(&Profile::from_raw(grid, e.clone()));
            entries.column_mut(j).copy_from_slice(col.values());
            e[j] = 0.0;
        }
        LinearOperatorMatrix { grid, entries, label }
    }

    pub fn apply(&self, v: &Profile) -> Result<Profile> {
        if *v.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let x = nalgebra::DVector::from_column_slice(v.values());
        Ok(Profile::from_raw(self.grid, (&self.entries * x).as_slice().to_vec()))
    }

    /// `max |M - Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.entries;
        (m - m.transpose()).amax()
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.entries.transpose().as_slice().to_vec()
    }
}

/// Dense `H d/dx` as the circulant of the `|k|` multiplier.
pub fn conjugate_derivative_matrix(grid: Grid) -> LinearOperatorMatrix {
    let n = grid.n();
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let col = apply_real_symbol(&Profile::from_raw(grid, e0), &conjugate_derivative_symbol(&grid));
    let c = col.values();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        // c is even up to rounding; average the pair so the matrix is exactly symmetric
        let d = (i + n - j) % n;
        0.5 * (c[d] + c[(n - d) % n])
    });
    LinearOperatorMatrix { grid, entries, label: OperatorLabel::ConjugateDerivative }
}

/// `L` assembled column by column from [`apply_l`].
pub fn linearized_matrix(state: &WaveState, tf: &Transforms) -> LinearOperatorMatrix {
    let w = state.w();
    let cdw = tf.cd(w);
    LinearOperatorMatrix::from_columns(*w.grid(), OperatorLabel::L, |v| linearized_action(v, w, &cdw, state.mu, tf))
}

/// `L = C - μ (I + diag(w) C + diag(C w) + C diag(w))` from the dense matrix `C`
/// of `v -> H v'` under the same transform settings.
pub fn linearized_matrix_algebraic(state: &WaveState, tf: &Transforms) -> LinearOperatorMatrix {
    let w = state.w();
    let g = *w.grid();
    let c = LinearOperatorMatrix::from_columns(g, OperatorLabel::ConjugateDerivative, |v| tf.cd(v)).entries;
    let n = g.n();
    let dw = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(w.values()));
    let dcw = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(tf.cd(w).values()));
    let inner = DMatrix::identity(n, n) + &dw * &c + dcw + &c * &dw;
    LinearOperatorMatrix { grid: g, entries: &c - inner * state.mu, label: OperatorLabel::L }
}

fn margin_nodes(one_plus_hwp: &Profile) -> Result<()> {
    let nodes: Vec<usize> =
        one_plus_hwp.values().iter().enumerate().filter(|(_, v)| **v <= 0.0).map(|(j, _)| j).collect();
    if nodes.is_empty() {
        Ok(())
    } else {
        Err(Error::SingularDenominator { nodes, min: one_plus_hwp.min() })
    }
}

/// `P v = (1 + H w') v + w' H v`.
pub fn plotnikov_forward(v: &Profile, w: &Profile, tf: &Transforms) -> Result<Profile> {
    require_same(v, w)?;
    let s = Slopes::of(w, tf);
    let hv = tf.h(v);
    let a = s.hwp.map(|h| 1.0 + h).mul(v);
    Ok(a.add(&s.wp.mul(&hv)))
}

/// `v = ((1 + H w') u - w' H u) / |W*|²`; requires `1 + H w' > 0` everywhere.
pub fn plotnikov_inverse(u: &Profile, w: &Profile, tf: &Transforms) -> Result<Profile> {
    require_same(u, w)?;
    let s = Slopes::of(w, tf);
    let re = s.hwp.map(|h| 1.0 + h);
    margin_nodes(&re)?;
    let hu = tf.h(u);
    let num = re.mul(u).sub(&s.wp.mul(&hu));
    Ok(num.zip_map(&s.modulus_sq(), |a, d| a / d))
}

/// `G = Im(W*' / W*) + μ |W*|² (1 + H w')`.
pub fn potential_g(state: &WaveState, tf: &Transforms) -> Result<Profile> {
    let w = state.w();
    let t = BoundaryTrace::of_profile(w, tf);
    margin_nodes(&t.re)?;
    let dre = derivative(&t.re);
    let dim = derivative(&t.im);
    let m = t.modulus_sq();
    let n = w.len();
    let (re, im, dr, di, mm) = (t.re.values(), t.im.values(), dre.values(), dim.values(), m.values());
    let g = (0..n).map(|j| (di[j] * re[j] - dr[j] * im[j]) / mm[j] + state.mu * mm[j] * re[j]).collect();
    Ok(Profile::from_raw(*w.grid(), g))
}

/// Both sides of `∫ L(P v) (P u) dx = ∫ (H v' - G v) u dx`.
pub fn conjugation_check(
    u: &Profile,
    v: &Profile,
    state: &WaveState,
    tf: &Transforms,
    tolerance: f64,
) -> Result<IdentityReport> {
    let w = state.w();
    require_same(u, w)?;
    require_same(v, w)?;
    tf.check_decay(w)?;
    tf.check_decay(u)?;
    tf.check_decay(v)?;
    let g = potential_g(state, tf)?;
    let pv = plotnikov_forward(v, w, tf)?;
    let pu = plotnikov_forward(u, w, tf)?;
    let lhs = apply_l(&pv, state, tf)?.inner(&pu);
    let rhs = tf.cd(v).sub(&g.mul(v)).inner(u);
    Ok(IdentityReport::new("conjugation", lhs, rhs, tolerance))
}

/// `H d/dx + μ - G` as a dense matrix (before symmetrization).
pub fn schrodinger_matrix(g: &Profile, mu: f64) -> LinearOperatorMatrix {
    let mut m = conjugate_derivative_matrix(*g.grid());
    for (j, gv) in g.values().iter().enumerate() {
        m.entries[(j, j)] += mu - gv;
    }
    m.label = OperatorLabel::Schrodinger;
    m
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `max |M - Mᵀ|` before symmetrization.
    pub asymmetry: f64,
    pub warning: Option<String>,
    /// Column `i` pairs with `eigenvalues[i]`.
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<f64>>,
    #[serde(skip)]
    pub grid: Option<Grid>,
}

impl Spectrum {
    pub fn eigenvector(&self, i: usize) -> Option<Profile> {
        let (m, g) = (self.eigenvectors.as_ref()?, self.grid?);
        (i < m.ncols()).then(|| Profile::from_raw(g, m.column(i).iter().copied().collect()))
    }
}

pub const ASYMMETRY_WARNING: f64 = 1e-8;

/// Sorted eigenvalues (and eigenvectors) of the symmetrized discretization of
/// `H d/dx + μ - G`.
pub fn schrodinger_spectrum(g: &Profile, mu: f64, tf: &Transforms) -> Result<Spectrum> {
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu = {mu}")));
    }
    if g.grid().is_line() {
        tf.check_decay(&g.map(|v| v - mu))?;
    }
    let m = schrodinger_matrix(g, mu);
    let asymmetry = m.asymmetry();
    let sym = (&m.entries + m.entries.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = order.len();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        // fix the sign so the largest component is positive
        let imax = col.iamax();
        let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        vecs.column_mut(dst).copy_from(&(col * s));
    }
    let warning = (asymmetry > ASYMMETRY_WARNING)
        .then(|| format!("discretization asymmetry {asymmetry:e} exceeds {ASYMMETRY_WARNING:e}"));
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        asymmetry,
        warning,
        eigenvectors: Some(vecs),
        grid: Some(*g.grid()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSolve {
    pub solution: Profile,
    /// Trapezoid mass of `|g|` over the outermost 5% of nodes on the right,
    /// an indicator of the part of `∫_x^∞` lost to truncation.
    pub dropped_tail: f64,
}

/// `V = (1/μ) H(S') + S` with `S(x) = ∫_x^∞ sin μ(x - t) g(t) dt`, which solves
/// `H V' - μ V = g`. `S = sin(μx) A - cos(μx) B` with `A`, `B` the cosine and
/// sine moments of `g` accumulated by trapezoid from the right end, and
/// `S' = μ (cos(μx) A + sin(μx) B)` exactly.
pub fn solve_linear_inhomogeneous(g: &Profile, mu: f64, tf: &Transforms) -> Result<LinearSolve> {
    let grid = *g.grid();
    grid.require_line()?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    tf.check_decay(g)?;
    let n = grid.n();
    let h = grid.spacing();
    let x = grid.nodes();
    let gv = g.values();
    let fc: Vec<f64> = (0..n).map(|j| (mu * x[j]).cos() * gv[j]).collect();
    let fs: Vec<f64> = (0..n).map(|j| (mu * x[j]).sin() * gv[j]).collect();
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for j in (0..n - 1).rev() {
        a[j] = a[j + 1] + 0.5 * h * (fc[j] + fc[j + 1]);
        b[j] = b[j + 1] + 0.5 * h * (fs[j] + fs[j + 1]);
    }
    let s: Vec<f64> = (0..n).map(|j| (mu * x[j]).sin() * a[j] - (mu * x[j]).cos() * b[j]).collect();
    let sp: Vec<f64> = (0..n).map(|j| mu * ((mu * x[j]).cos() * a[j] + (mu * x[j]).sin() * b[j])).collect();
    let hsp = tf.h(&Profile::from_raw(grid, sp));
    let v = (0..n).map(|j| hsp.values()[j] / mu + s[j]).collect();
    let tail_start = n - n / 20;
    let dropped_tail = h * gv[tail_start..].iter().map(|v| v.abs()).sum::<f64>();
    Ok(LinearSolve { solution: Profile::from_raw(grid, v), dropped_tail })
}

/// `H V' - μ V - g`.
pub fn linear_residual(v: &Profile, g: &Profile, mu: f64, tf: &Transforms) -> Result<Profile> {
    require_same(v, g)?;
    Ok(tf.cd(v).axpy(-mu, v).sub(g))
}
