use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Thin singular value decomposition `M = U diag(S) Vᵀ`.
///
/// For an `m × n` input, `U` is `m × p`, `S` has `p` entries and `V` is
/// `n × p` with `p = min(m, n)`. Singular values are non-increasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vector,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let p = self.s.dim();
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for j in 0..p {
                us.set(i, j, us.get(i, j) * self.s[j]);
            }
        }
        us.matmul(&self.v.transpose()).expect("svd factors are conformant")
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD for small dense matrices (`min(rows, cols) ≤ 64`).
pub fn svd_small(m: &Matrix) -> Result<Svd> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if m.rows().min(m.cols()) > 64 {
        return Err(Error::InvalidParameter(format!(
            "svd_small handles min(rows, cols) <= 64, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    Ok(svd_tall(m))
}

/// Hestenes rotations on the columns of a tall (`rows ≥ cols`) matrix.
fn svd_tall(m: &Matrix) -> Svd {
    let rows = m.rows();
    let n = m.cols();
    // column-major working copies
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).into_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| Vector::basis(n, j).into_vec()).collect();
    let scale = m.frobenius().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma.abs() < 1e-300 * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let tiny = order.first().map(|o| o.0).unwrap_or(0.0) * 1e-15 * n as f64;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        v_cols.push(v[j].clone());
        if sigma > tiny && sigma > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / sigma).collect());
        } else {
            u_cols.push(vec![0.0; rows]);
            deficient.push(k);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient);

    let mut u = Matrix::zeros(rows, n);
    let mut vm = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..rows {
            u.set(i, j, u_cols[j][i]);
        }
        for i in 0..n {
            vm.set(i, j, v_cols[j][i]);
        }
    }
    Svd { u, s: Vector::from_raw(s), v: vm }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the listed (zero) columns with unit vectors orthogonal to all the
/// others, using Gram–Schmidt on the standard basis.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let rows = cols[0].len();
    let mut candidate = 0;
    for &k in missing {
        while candidate < rows {
            let mut w = vec![0.0; rows];
            w[candidate] = 1.0;
            candidate += 1;
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if j == k || col.iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    let d: f64 = col.iter().zip(&w).map(|(a, b)| a * b).sum();
                    for (wi, ci) in w.iter_mut().zip(col) {
                        *wi -= d * ci;
                    }
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                cols[k] = w.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}
