//! Restarted GMRES for the matrix-free Newton steps of the solitary probe.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct GmresOptions {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_cycles: usize,
}

/// Approximate solution of `A x = b` from `x = 0`, plus the final relative
/// residual.
pub(crate) fn gmres(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], opts: GmresOptions) -> (Vec<f64>, f64) {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let mut rel = 1.0;
    for _ in 0..opts.max_cycles {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= opts.rel_tol {
            break;
        }
        let m = opts.restart;
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&basis[k]);
            for (i, q) in basis.iter().enumerate() {
                let hik = dot(&w, q);
                h[i][k] = hik;
                for (wj, qj) in w.iter_mut().zip(q) {
                    *wj -= hik * qj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= opts.rel_tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, q) in y.iter().zip(&basis) {
            for (xj, qj) in x.iter_mut().zip(q) {
                *xj += yi * qj;
            }
        }
        if rel <= opts.rel_tol {
            break;
        }
    }
    (x, rel)
}
