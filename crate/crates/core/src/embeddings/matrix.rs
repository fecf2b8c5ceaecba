use std::sync::atomic::{AtomicU64, Ordering};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Read access to parameter rows, shared by the plain and the atomic store.
pub trait RowAccess {
    fn cols(&self) -> usize;
    fn read_row(&self, r: usize, out: &mut [f64]);

    fn dot_row(&self, r: usize, v: &[f64]) -> f64;

    /// `out += weight * row(r)`
    fn axpy_row(&self, r: usize, weight: f64, out: &mut [f64]);
}

impl RowAccess for Matrix {
    fn cols(&self) -> usize {
        self.cols
    }

    fn read_row(&self, r: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(r));
    }

    fn dot_row(&self, r: usize, v: &[f64]) -> f64 {
        dot(self.row(r), v)
    }

    fn axpy_row(&self, r: usize, weight: f64, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(self.row(r)) {
            *o += weight * x;
        }
    }
}

/// Parameter matrix that can be updated from several threads without
/// locking. Updates are load/add/store, so concurrent writers may lose
/// increments (Hogwild-style); with one writer it behaves like `Matrix`.
pub(crate) struct SharedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    pub fn from_matrix(m: &Matrix) -> Self {
        SharedMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
                .collect(),
        }
    }

    #[inline]
    fn cell(&self, r: usize, c: usize) -> &AtomicU64 {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        f64::from_bits(self.cell(r, c).load(Ordering::Relaxed))
    }

    #[inline]
    pub fn add(&self, r: usize, c: usize, delta: f64) {
        let cell = self.cell(r, c);
        let v = f64::from_bits(cell.load(Ordering::Relaxed)) + delta;
        cell.store(v.to_bits(), Ordering::Relaxed);
    }

    /// `row(r) += scale * delta`
    pub fn add_row(&self, r: usize, scale: f64, delta: &[f64]) {
        let base = r * self.cols;
        for (cell, d) in self.data[base..base + self.cols].iter().zip(delta) {
            let v = f64::from_bits(cell.load(Ordering::Relaxed)) + scale * d;
            cell.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

impl RowAccess for SharedMatrix {
    fn cols(&self) -> usize {
        self.cols
    }

    fn read_row(&self, r: usize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.get(r, c);
        }
    }

    fn dot_row(&self, r: usize, v: &[f64]) -> f64 {
        let base = r * self.cols;
        self.data[base..base + self.cols]
            .iter()
            .zip(v)
            .map(|(a, x)| f64::from_bits(a.load(Ordering::Relaxed)) * x)
            .sum()
    }

    fn axpy_row(&self, r: usize, weight: f64, out: &mut [f64]) {
        let base = r * self.cols;
        for (o, a) in out.iter_mut().zip(&self.data[base..base + self.cols]) {
            *o += weight * f64::from_bits(a.load(Ordering::Relaxed));
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_matrix_round_trip() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let s = SharedMatrix::from_matrix(&m);
        s.add_row(1, 2.0, &[1.0, -1.0]);
        s.add(0, 0, 0.5);
        assert_eq!(s.to_matrix().as_slice(), &[1.5, 2.0, 5.0, 2.0]);
        assert_eq!(s.dot_row(1, &[1.0, 1.0]), 7.0);
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
    }
}
