use std::f64::consts::PI;

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, a: vec![0.0; n * n] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }
}

/// Circulant matrix of `|d/dx|` on `n` equispaced nodes over one period of
/// `length`, built from the cosine sum with the Nyquist term left out.
pub fn abs_derivative_matrix(n: usize, length: f64) -> Dense {
    let half = n as i64 / 2;
    let col: Vec<f64> = (0..n)
        .map(|d| {
            let mut s = 0.0;
            for m in (1 - half)..half {
                let k = 2.0 * PI * m as f64 / length;
                s += k.abs() * (2.0 * PI * (m * d as i64) as f64 / n as f64).cos();
            }
            s / n as f64
        })
        .collect();
    let mut out = Dense::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, col[(i + n - j) % n]);
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut m: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = m.n;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m.at(i, c).abs().total_cmp(&m.at(j, c).abs())).unwrap();
        if p != c {
            for j in 0..n {
                m.a.swap(c * n + j, p * n + j);
            }
            b.swap(c, p);
        }
        let piv = m.at(c, c);
        for r in c + 1..n {
            let f = m.at(r, c) / piv;
            if f != 0.0 {
                for j in c..n {
                    m.a[r * n + j] -= f * m.a[c * n + j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| m.at(r, j) * x[j]).sum();
        x[r] = (b[r] - s) / m.at(r, r);
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(mut m: Dense) -> Vec<f64> {
    let n = m.n;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.at(i, j).powi(2))
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.at(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.at(k, p);
                    let akq = m.at(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.at(p, k);
                    let aqk = m.at(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m.at(i, i)).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
