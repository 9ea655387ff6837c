//! Minimal dense linear algebra for small networks.
//!
//! Row-major `f64` storage throughout. The largest matrix in this project is
//! 34x20, so there is no blocking, no BLAS, and no sparse format; plain loops
//! are fast enough and easy to audit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches, and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "matrix dims must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::dims("mul_vec", (self.rows, self.cols), (x.len(), 1)));
        }
        let mut out = vec![0.0; self.rows];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x.data.iter()) {
                acc += w * xv;
            }
            *slot = acc;
        }
        Ok(Vector { data: out })
    }

    /// In-place `self += scale * other`. Shapes must match.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    /// In-place `self = momentum * self + scale * other`.
    pub fn scale_add(&mut self, momentum: f64, other: &Matrix, scale: f64) {
        assert_eq!(self.shape(), other.shape(), "scale_add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = momentum * *a + scale * b;
        }
    }

    /// Rank-1 accumulation `self += u * v^T`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "add_outer row mismatch");
        assert_eq!(v.len(), self.cols, "add_outer col mismatch");
        for (r, &uv) in u.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (slot, &vv) in row.iter_mut().zip(v.iter()) {
                *slot += uv * vv;
            }
        }
    }
}

/// Standard matrix product; rejects incompatible shapes, reporting both.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::dims("matmul", a.shape(), b.shape()));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for r in 0..a.rows {
        for k in 0..a.cols {
            let av = a.get(r, k);
            if av == 0.0 {
                continue;
            }
            for c in 0..b.cols {
                out.data[r * b.cols + c] += av * b.get(k, c);
            }
        }
    }
    Ok(out)
}

impl Vector {
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(
                "vector entries must be finite".into(),
            ));
        }
        Ok(Vector { data })
    }

    pub fn zeros(len: usize) -> Self {
        Vector {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    /// In-place `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Vector, scale: f64) {
        assert_eq!(self.len(), other.len(), "add_scaled length mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    /// In-place `self = momentum * self + scale * other`.
    pub fn scale_add(&mut self, momentum: f64, other: &Vector, scale: f64) {
        assert_eq!(self.len(), other.len(), "scale_add length mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = momentum * *a + scale * b;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot length mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Numerically stable logistic function. Never overflows: for large negative
/// inputs it underflows smoothly to 0.0.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Elementwise logistic function.
pub fn sigmoid(x: &Vector) -> Vector {
    Vector {
        data: x.data.iter().map(|&v| sigmoid_scalar(v)).collect(),
    }
}

/// Derivative of the logistic function expressed through its output:
/// `s * (1 - s)`.
#[inline]
pub fn sigmoid_grad_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

/// Weight initialization: entries drawn uniformly from
/// `[-1/sqrt(cols), +1/sqrt(cols)]`, filled in row-major order. Biases are
/// initialized to zero elsewhere; this only produces weight matrices.
pub fn init_weights(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    assert!(rows >= 1 && cols >= 1, "init_weights dims must be >= 1");
    let bound = 1.0 / (cols as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-bound, bound))
        .collect();
    Matrix { rows, cols, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent triple-loop product used as the oracle for `matmul`.
    fn matmul_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for r in 0..a.rows() {
            for c in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(r, k) * b.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let m = Matrix::from_vec(3, 3, vec![2.0, -1.0, 0.5, 3.0, 4.0, -2.0, 0.0, 1.0, 7.0])
            .unwrap();
        let mut eye = Matrix::zeros(3, 3);
        for i in 0..3 {
            eye.set(i, i, 1.0);
        }
        assert_eq!(matmul(&eye, &m).unwrap(), m);
        assert_eq!(matmul(&m, &eye).unwrap(), m);
    }

    #[test]
    fn matmul_small_case() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[2.0, 4.0]);
        assert_eq!(matmul_oracle(&a, &b).data(), c.data());
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("4x2"), "{msg}");
    }

    #[test]
    fn matmul_agrees_with_oracle_on_integer_inputs() {
        let mut rng = SeededRng::new(11);
        for _ in 0..100 {
            let m = 1 + rng.index(6);
            let k = 1 + rng.index(6);
            let n = 1 + rng.index(6);
            let a = Matrix::from_vec(
                m,
                k,
                (0..m * k).map(|_| rng.index(21) as f64 - 10.0).collect(),
            )
            .unwrap();
            let b = Matrix::from_vec(
                k,
                n,
                (0..k * n).map(|_| rng.index(21) as f64 - 10.0).collect(),
            )
            .unwrap();
            assert_eq!(matmul(&a, &b).unwrap(), matmul_oracle(&a, &b));
        }
    }

    #[test]
    fn matmul_agrees_with_oracle_on_random_reals() {
        let mut rng = SeededRng::new(12);
        for _ in 0..100 {
            let m = 1 + rng.index(8);
            let k = 1 + rng.index(8);
            let n = 1 + rng.index(8);
            let a = Matrix::from_vec(m, k, (0..m * k).map(|_| rng.uniform(-5.0, 5.0)).collect())
                .unwrap();
            let b = Matrix::from_vec(k, n, (0..k * n).map(|_| rng.uniform(-5.0, 5.0)).collect())
                .unwrap();
            let got = matmul(&a, &b).unwrap();
            let want = matmul_oracle(&a, &b);
            for (g, w) in got.data().iter().zip(want.data().iter()) {
                let denom = w.abs().max(1.0);
                assert!((g - w).abs() / denom < 1e-12, "got {g}, want {w}");
            }
        }
    }

    #[test]
    fn sigmoid_symmetry_and_saturation() {
        let v = Vector::from_vec(vec![0.0]).unwrap();
        assert_eq!(sigmoid(&v).get(0), 0.5);

        let big = sigmoid(&Vector::from_vec(vec![-1000.0]).unwrap()).get(0);
        assert!(big.is_finite());
        assert!((0.0..=1e-300).contains(&big), "got {big}");

        let mut rng = SeededRng::new(5);
        for _ in 0..200 {
            let x = rng.uniform(-50.0, 50.0);
            let s = sigmoid_scalar(x) + sigmoid_scalar(-x);
            assert!((s - 1.0).abs() < 1e-15, "s(x)+s(-x)={s} at x={x}");
        }
    }

    #[test]
    fn sigmoid_is_monotone() {
        let mut rng = SeededRng::new(6);
        for _ in 0..500 {
            let x = rng.uniform(-100.0, 100.0);
            let y = rng.uniform(-100.0, 100.0);
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            assert!(sigmoid_scalar(lo) <= sigmoid_scalar(hi));
        }
    }

    #[test]
    fn init_weights_deterministic_and_bounded() {
        let a = init_weights(20, 34, &mut SeededRng::new(42));
        let b = init_weights(20, 34, &mut SeededRng::new(42));
        assert_eq!(a, b);

        let bound = 1.0 / (34f64).sqrt();
        assert!(a.data().iter().all(|v| v.abs() <= bound));

        let c = init_weights(20, 34, &mut SeededRng::new(43));
        assert_ne!(a, c);
    }

    #[test]
    fn finite_checks_reject_nan() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Vector::from_vec(vec![f64::INFINITY]).is_err());
    }
}
