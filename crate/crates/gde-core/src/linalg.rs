//! Dense complex matrices, sized for state spaces of a few hundred levels at most.
//!
//! Everything here is row-major and unblocked. The eigensolver is a cyclic
//! Jacobi sweep so it carries no external dependency and its accumulated
//! rotations give an orthonormal eigenbasis to near machine precision, which
//! the rank-one detection and the evolution builders rely on.

use crate::error::{GdeError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

// Deserialization must not admit a shape/data mismatch.
impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            data: Vec<Complex64>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.rows.checked_mul(raw.cols) != Some(raw.data.len()) {
            return Err(serde::de::Error::custom(format!(
                "matrix shape {}x{} does not match {} entries",
                raw.rows,
                raw.cols,
                raw.data.len()
            )));
        }
        if !raw.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(CMatrix {
            rows: raw.rows,
            cols: raw.cols,
            data: raw.data,
        })
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// self += factor * other, no allocation.
    pub fn add_scaled_assign(&mut self, other: &CMatrix, factor: Complex64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += factor * s;
        }
    }

    pub fn scale(&self, factor: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += aik * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// diag(d) * self, O(n^2).
    pub fn scale_rows(&self, d: &[Complex64]) -> CMatrix {
        assert_eq!(self.rows, d.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            let f = d[i];
            for v in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *v *= f;
            }
        }
        out
    }

    /// self * diag(d), O(n^2).
    pub fn scale_cols(&self, d: &[Complex64]) -> CMatrix {
        assert_eq!(self.cols, d.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &f) in d.iter().enumerate() {
                out.data[i * self.cols + j] *= f;
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn herm_part(&self) -> CMatrix {
        assert!(self.is_square());
        self.add(&self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Solve self * X = rhs by LU with partial pivoting.
    pub fn lu_solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        assert!(self.is_square());
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut lu = self.data.clone();
        let mut x = rhs.data.clone();
        let scale = self.max_abs().max(1.0);

        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[col * n + col].norm();
            for r in col + 1..n {
                let mag = lu[r * n + col].norm();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            if best <= f64::EPSILON * scale * n as f64 {
                return Err(GdeError::SingularSolve(format!(
                    "pivot {best:.3e} in column {col} (matrix scale {scale:.3e})"
                )));
            }
            if pivot != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot * n + j);
                }
                for j in 0..m {
                    x.swap(col * m + j, pivot * m + j);
                }
            }
            let d = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / d;
                lu[r * n + col] = factor;
                for j in col + 1..n {
                    let sub = factor * lu[col * n + j];
                    lu[r * n + j] -= sub;
                }
                for j in 0..m {
                    let sub = factor * x[col * m + j];
                    x[r * m + j] -= sub;
                }
            }
        }
        for col in (0..n).rev() {
            let d = lu[col * n + col];
            for j in 0..m {
                x[col * m + j] /= d;
            }
            for r in 0..col {
                let factor = lu[r * n + col];
                for j in 0..m {
                    let sub = factor * x[col * m + j];
                    x[r * m + j] -= sub;
                }
            }
        }
        Ok(CMatrix {
            rows: n,
            cols: m,
            data: x,
        })
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.lu_solve(&CMatrix::identity(self.rows))
    }

    /// Eigendecomposition of the Hermitian part, cyclic Jacobi.
    /// Returns eigenvalues ascending and the matching orthonormal columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.herm_part();
        let mut v = CMatrix::identity(n);
        let norm = a.frobenius().max(f64::MIN_POSITIVE);
        let tol = 1e-14 * norm;

        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r <= 1e-300 {
                        continue;
                    }
                    let phase = apq / r;
                    let kappa = (a[(p, p)].re - a[(q, q)].re) / (2.0 * r);
                    let t = if kappa == 0.0 {
                        1.0
                    } else {
                        kappa.signum() / (kappa.abs() + (kappa * kappa + 1.0).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let cs = Complex64::new(c, 0.0);
                    let sp = s * phase;

                    // rows p, q of U'AU via U' from the left
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = cs * apk + sp * aqk;
                        a[(q, k)] = -sp.conj() * apk + cs * aqk;
                    }
                    // columns p, q via U from the right
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = cs * akp + sp.conj() * akq;
                        a[(k, q)] = -sp * akp + cs * akq;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = cs * vkp + sp.conj() * vkq;
                        v[(k, q)] = -sp * vkp + cs * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let evals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| evals[i].total_cmp(&evals[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
        let vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        (sorted, vecs)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// exp(-i H t) for Hermitian H.
pub fn hermitian_evolution(h: &CMatrix, t: f64) -> CMatrix {
    let (evals, v) = h.eigh();
    let phases: Vec<Complex64> = evals
        .iter()
        .map(|&e| (Complex64::new(0.0, -e * t)).exp())
        .collect();
    let d = CMatrix::diag(&phases);
    v.mul(&d).mul(&v.adjoint())
}

pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// |a><b| as a matrix.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = CMatrix::from_fn(3, 3, |i, j| {
            c(1.0 + (i * 3 + j) as f64, ((i + 1) * (j + 2)) as f64 * 0.3)
        });
        // make it comfortably nonsingular
        let a = a.add(&CMatrix::identity(3).scale(c(5.0, 0.0)));
        let inv = a.inverse().unwrap();
        let residual = a.mul(&inv).sub(&CMatrix::identity(3)).max_abs();
        assert!(residual < 1e-13, "residual {residual}");

        let rhs = CMatrix::from_fn(3, 2, |i, j| c(i as f64 - j as f64, 0.5 * j as f64));
        let x = a.lu_solve(&rhs).unwrap();
        let back = a.mul(&x).sub(&rhs).max_abs();
        assert!(back < 1e-13, "solve residual {back}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(4.0, 0.0);
        match a.inverse() {
            Err(GdeError::SingularSolve(_)) => {}
            other => panic!("expected singular solve, got {other:?}"),
        }
    }

    #[test]
    fn eigh_two_level_exact() {
        // [[1, 2-i], [2+i, -1]] has eigenvalues +-sqrt(6)
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, -1.0);
        a[(1, 0)] = c(2.0, 1.0);
        a[(1, 1)] = c(-1.0, 0.0);
        let (evals, v) = a.eigh();
        let s6 = 6.0_f64.sqrt();
        assert!((evals[0] + s6).abs() < 1e-14);
        assert!((evals[1] - s6).abs() < 1e-14);
        let unit = v.adjoint().mul(&v).sub(&CMatrix::identity(2)).max_abs();
        assert!(unit < 1e-14, "eigenvectors not orthonormal: {unit}");
    }

    #[test]
    fn eigh_reconstructs() {
        let h = CMatrix::from_fn(5, 5, |i, j| {
            let x = ((i * 7 + j * 3) % 11) as f64 * 0.1;
            let y = (i as f64 - j as f64) * 0.05;
            c(x, y)
        })
        .herm_part();
        let (evals, v) = h.eigh();
        let lam = CMatrix::diag(
            &evals
                .iter()
                .map(|&e| c(e, 0.0))
                .collect::<Vec<_>>(),
        );
        let back = v.mul(&lam).mul(&v.adjoint());
        let err = back.sub(&h).max_abs() / h.max_abs();
        assert!(err < 1e-13, "reconstruction error {err}");
        for w in evals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn evolution_is_unitary_and_diagonal_exact() {
        let h = CMatrix::diag(&[c(0.3, 0.0), c(-1.2, 0.0)]);
        let u = hermitian_evolution(&h, 2.5);
        let expect00 = c(0.0, -0.3 * 2.5).exp();
        assert!((u[(0, 0)] - expect00).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);

        let g = CMatrix::from_fn(4, 4, |i, j| c((i + j) as f64 * 0.2, (i as f64 - j as f64) * 0.1))
            .herm_part();
        let u = hermitian_evolution(&g, 1.7);
        let unit = u.adjoint().mul(&u).sub(&CMatrix::identity(4)).max_abs();
        assert!(unit < 1e-13, "not unitary: {unit}");
    }

    #[test]
    fn adjoint_product_rule() {
        let a = CMatrix::from_fn(3, 4, |i, j| c(i as f64 + 0.1, j as f64 - 0.2));
        let b = CMatrix::from_fn(4, 2, |i, j| c(j as f64 * 0.7, i as f64 * 0.4));
        let lhs = a.mul(&b).adjoint();
        let rhs = b.adjoint().mul(&a.adjoint());
        assert!(lhs.sub(&rhs).max_abs() < 1e-14);
    }

    #[test]
    fn matrix_json_rejects_shape_mismatch() {
        let good = serde_json::to_string(&CMatrix::identity(2)).unwrap();
        assert!(serde_json::from_str::<CMatrix>(&good).is_ok());
        let bad = r#"{"rows":2,"cols":2,"data":[[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<CMatrix>(bad).is_err());
    }
}
