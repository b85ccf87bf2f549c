//! Dense linear algebra for small n-by-n systems (n is the number of
//! conserved quantities, typically 1 or 2).
//!
//! Hand-rolled on purpose: partial-pivot elimination and a shifted QR
//! sweep are a few dozen lines and keep the crate dependency-free in its
//! hot path.

use crate::error::{Result, SolverError};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            a.extend_from_slice(r);
        }
        Mat { n, a }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate() {
                s += self.a[i * n + j] * xj;
            }
            *yi = s;
        }
        y
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let mut m = a.a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(SolverError::NoConvergence(format!(
                "singular matrix in linear solve (pivot {best:.3e})"
            )));
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            m[r * n + col] = 0.0;
            for j in col + 1..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Ok(x)
}

/// Determinant by elimination.
pub fn det(a: &Mat) -> f64 {
    let n = a.n;
    let mut m = a.a.clone();
    let mut sign = 1.0;
    let mut d = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let p = m[col * n + col];
        d *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
        }
    }
    sign * d
}

/// Real eigenvalues of a small matrix, sorted ascending.
///
/// n = 1 and n = 2 use closed forms; larger matrices go through a shifted
/// QR iteration. Strict hyperbolicity means the spectrum is real and
/// separated, which is exactly the easy case for plain QR.
pub fn eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    let n = a.n;
    match n {
        0 => Ok(vec![]),
        1 => Ok(vec![a.get(0, 0)]),
        2 => {
            let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
            let tr = p + s;
            let disc = (p - s) * (p - s) + 4.0 * q * r;
            if disc < 0.0 {
                return Err(SolverError::NonHyperbolic(format!(
                    "complex pair, discriminant {disc:.3e}"
                )));
            }
            let sq = disc.sqrt();
            Ok(vec![0.5 * (tr - sq), 0.5 * (tr + sq)])
        }
        _ => qr_eigenvalues(a),
    }
}

fn qr_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    let n = a.n;
    let mut m = a.clone();
    let mut vals = Vec::with_capacity(n);
    let mut hi = n;
    let mut iters = 0usize;
    let scale = m.a.iter().fold(1.0_f64, |s, x| s.max(x.abs()));
    while hi > 0 {
        if hi == 1 {
            vals.push(m.get(0, 0));
            break;
        }
        // deflate when the last sub-diagonal entry of the active block dies
        if m.get(hi - 1, hi - 2).abs() < 1e-14 * scale {
            vals.push(m.get(hi - 1, hi - 1));
            hi -= 1;
            continue;
        }
        iters += 1;
        if iters > 500 * n {
            return Err(SolverError::NonHyperbolic(
                "QR iteration did not converge (complex spectrum?)".into(),
            ));
        }
        let shift = wilkinson_shift(&m, hi);
        for i in 0..hi {
            let v = m.get(i, i) - shift;
            m.set(i, i, v);
        }
        let (q, r) = qr_decompose(&m, hi);
        // active block: RQ + shift, rest untouched
        let rq = mul_block(&r, &q, hi);
        for i in 0..hi {
            for j in 0..hi {
                m.set(i, j, rq.get(i, j) + if i == j { shift } else { 0.0 });
            }
        }
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

fn wilkinson_shift(m: &Mat, hi: usize) -> f64 {
    let a = m.get(hi - 2, hi - 2);
    let b = m.get(hi - 2, hi - 1);
    let c = m.get(hi - 1, hi - 2);
    let d = m.get(hi - 1, hi - 1);
    let tr = a + d;
    let disc = (a - d) * (a - d) + 4.0 * b * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let l1 = 0.5 * (tr - sq);
        let l2 = 0.5 * (tr + sq);
        if (l1 - d).abs() < (l2 - d).abs() {
            l1
        } else {
            l2
        }
    } else {
        d
    }
}

/// Gram-Schmidt QR of the leading `hi` block.
fn qr_decompose(m: &Mat, hi: usize) -> (Mat, Mat) {
    let mut q = Mat::zeros(hi);
    let mut r = Mat::zeros(hi);
    for j in 0..hi {
        let mut v: Vec<f64> = (0..hi).map(|i| m.get(i, j)).collect();
        for k in 0..j {
            let mut dot = 0.0;
            for i in 0..hi {
                dot += q.get(i, k) * m.get(i, j);
            }
            r.set(k, j, dot);
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= dot * q.get(i, k);
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r.set(j, j, nrm);
        let inv = if nrm > 1e-300 { 1.0 / nrm } else { 0.0 };
        for (i, vi) in v.iter().enumerate() {
            q.set(i, j, vi * inv);
        }
    }
    (q, r)
}

fn mul_block(a: &Mat, b: &Mat, hi: usize) -> Mat {
    let mut out = Mat::zeros(hi);
    for i in 0..hi {
        for k in 0..hi {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            for j in 0..hi {
                out.a[i * hi + j] += aik * b.get(k, j);
            }
        }
    }
    out
}

/// Eigenvector for a known simple eigenvalue, by inverse iteration.
pub fn eigenvector(a: &Mat, lambda: f64) -> Result<Vec<f64>> {
    let n = a.n;
    let scale = a.a.iter().fold(1.0_f64, |s, x| s.max(x.abs()));
    let mut shifted = a.clone();
    for i in 0..n {
        let v = shifted.get(i, i) - lambda - 1e-12 * scale;
        shifted.set(i, i, v);
    }
    let mut v = vec![1.0; n];
    for (k, vk) in v.iter_mut().enumerate() {
        *vk += 0.5 * (k as f64 + 1.0) / n as f64;
    }
    for _ in 0..4 {
        let w = solve(&shifted, &v)?;
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm < 1e-300 {
            return Err(SolverError::NoConvergence("inverse iteration collapsed".into()));
        }
        v = w.iter().map(|x| x / nrm).collect();
    }
    Ok(v)
}
