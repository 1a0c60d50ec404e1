use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Relative off-diagonal tolerance on singular-value convergence.
const TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// Thin truncated SVD: `u` is rows x d, `v` is cols x d, `sigma` descending.
#[derive(Clone, Debug)]
pub struct Svd<S> {
    pub u: Mat<S>,
    pub v: Mat<S>,
    pub sigma: Vec<S>,
}

impl<S: Scalar> Svd<S> {
    /// U * diag(sigma) * V^T
    pub fn reconstruct(&self) -> Mat<S> {
        let (m, n, d) = (self.u.rows(), self.v.rows(), self.sigma.len());
        let mut out = Mat::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut acc = S::zero();
                for k in 0..d {
                    acc += self.u.get(i, k) * self.sigma[k] * self.v.get(j, k);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Top-`d` singular triplets of a dense matrix via one-sided Jacobi
/// rotations. Deterministic: fixed rotation order, no randomness, and the
/// sign of each left singular vector is fixed by making its
/// largest-magnitude entry nonnegative.
pub fn truncated_svd<S: Scalar>(a: &Mat<S>, d: usize) -> Result<Svd<S>> {
    let (m, n) = (a.rows(), a.cols());
    if d == 0 || d > m.min(n) {
        return Err(Error::Config(format!(
            "rank {d} out of range for a {m}x{n} matrix"
        )));
    }
    // One-sided Jacobi orthogonalizes columns; work on the transpose when
    // there are more columns than rows and swap the factors back at the end.
    let transposed = n > m;
    let (work_rows, work_cols) = if transposed { (n, m) } else { (m, n) };
    let mut cols: Vec<Vec<S>> = (0..work_cols)
        .map(|j| {
            (0..work_rows)
                .map(|i| if transposed { a.get(j, i) } else { a.get(i, j) })
                .collect()
        })
        .collect();
    let mut v: Vec<Vec<S>> = (0..work_cols)
        .map(|j| {
            let mut col = vec![S::zero(); work_cols];
            col[j] = S::one();
            col
        })
        .collect();

    let tol = S::from_f64(TOL);
    for _sweep in 0..MAX_SWEEPS {
        let mut max_off = S::zero();
        for p in 0..work_cols.saturating_sub(1) {
            for q in (p + 1)..work_cols {
                let (app, aqq, apq) = gram2(&cols[p], &cols[q]);
                if apq == S::zero() || app == S::zero() || aqq == S::zero() {
                    continue;
                }
                let denom = (app * aqq).sqrt();
                let off = apq.abs() / denom;
                if off > max_off {
                    max_off = off;
                }
                if off <= tol {
                    continue;
                }
                let tau = (aqq - app) / (S::from_f64(2.0) * apq);
                let t = tau.signum() / (tau.abs() + (S::one() + tau * tau).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if max_off <= tol {
            break;
        }
    }

    // Singular values are the column norms; order descending, index ascending on ties.
    let mut order: Vec<(usize, S)> = cols
        .iter()
        .enumerate()
        .map(|(j, col)| (j, crate::matrix::norm2(col)))
        .collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut u_thin = Mat::zeros(work_rows, d);
    let mut v_thin = Mat::zeros(work_cols, d);
    let mut sigma = Vec::with_capacity(d);
    for (k, &(j, norm)) in order.iter().take(d).enumerate() {
        sigma.push(norm);
        if norm > S::zero() {
            let inv = S::one() / norm;
            let mut u_col: Vec<S> = cols[j].iter().map(|&x| x * inv).collect();
            let mut v_col = v[j].clone();
            // sign convention: largest-magnitude entry of the left vector nonnegative
            let mut pivot = 0usize;
            for (i, x) in u_col.iter().enumerate() {
                if x.abs() > u_col[pivot].abs() {
                    pivot = i;
                }
            }
            if u_col[pivot] < S::zero() {
                for x in u_col.iter_mut() {
                    *x = -*x;
                }
                for x in v_col.iter_mut() {
                    *x = -*x;
                }
            }
            for i in 0..work_rows {
                u_thin.set(i, k, u_col[i]);
            }
            for i in 0..work_cols {
                v_thin.set(i, k, v_col[i]);
            }
        } else {
            // rank-deficient tail: keep the right vector, leave the left at zero
            for i in 0..work_cols {
                v_thin.set(i, k, v[j][i]);
            }
        }
    }

    if transposed {
        Ok(Svd { u: v_thin, v: u_thin, sigma })
    } else {
        Ok(Svd { u: u_thin, v: v_thin, sigma })
    }
}

fn gram2<S: Scalar>(x: &[S], y: &[S]) -> (S, S, S) {
    let mut xx = S::zero();
    let mut yy = S::zero();
    let mut xy = S::zero();
    for (a, b) in x.iter().zip(y) {
        xx += *a * *a;
        yy += *b * *b;
        xy += *a * *b;
    }
    (xx, yy, xy)
}

fn rotate_pair<S: Scalar>(cols: &mut [Vec<S>], p: usize, q: usize, c: S, s: S) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}
