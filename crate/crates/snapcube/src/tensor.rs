//! Dense order-3 tensors and matrices with the mode-n products, unfoldings,
//! band shifting, and vectorization used throughout the toolkit.
//!
//! Storage order for [`Tensor3`] is band-major: band (mode-3) planes are
//! contiguous, each plane row-major over (row, col). The sensing model
//! integrates band by band, so this keeps its inner loops on contiguous
//! memory. Vectorization follows the same order.
//!
//! Unfoldings use the Kolda–Bader convention: the mode-n fibers become
//! columns, with the remaining indices ordered by ascending mode number
//! (lowest mode varying fastest).

use crate::error::{Error, Result};

/// Dense 3-D tensor of `f64` with extents `(rows, cols, bands)`.
///
/// Values are immutable through the public API; operations return new
/// tensors. Element `(m, n, l)` lives at `data[l*rows*cols + m*cols + n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    rows: usize,
    cols: usize,
    bands: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Builds a tensor from flat data in storage order.
    pub fn new(rows: usize, cols: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || bands == 0 {
            return Err(Error::argument(format!(
                "tensor extents must be positive, got {rows}x{cols}x{bands}"
            )));
        }
        if data.len() != rows * cols * bands {
            return Err(Error::shape(format!(
                "tensor data length {} does not match extents {rows}x{cols}x{bands} = {}",
                data.len(),
                rows * cols * bands
            )));
        }
        Ok(Self {
            rows,
            cols,
            bands,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, bands: usize) -> Self {
        Self::new(rows, cols, bands, vec![0.0; rows * cols * bands])
            .expect("positive extents required")
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(rows, cols, bands);
        for l in 0..bands {
            for m in 0..rows {
                for n in 0..cols {
                    let idx = t.index(m, n, l);
                    t.data[idx] = f(m, n, l);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.bands)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn index(&self, m: usize, n: usize, l: usize) -> usize {
        debug_assert!(m < self.rows && n < self.cols && l < self.bands);
        l * self.rows * self.cols + m * self.cols + n
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, l: usize) -> f64 {
        self.data[self.index(m, n, l)]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Contiguous slice of one band plane, row-major.
    pub fn band(&self, l: usize) -> &[f64] {
        let plane = self.rows * self.cols;
        &self.data[l * plane..(l + 1) * plane]
    }

    pub(crate) fn band_mut(&mut self, l: usize) -> &mut [f64] {
        let plane = self.rows * self.cols;
        &mut self.data[l * plane..(l + 1) * plane]
    }

    /// One band as a standalone matrix.
    pub fn band_matrix(&self, l: usize) -> Matrix {
        Matrix::new(self.rows, self.cols, self.band(l).to_vec()).expect("band extents are valid")
    }

    /// Extent along a 1-based mode.
    pub fn extent(&self, mode: usize) -> usize {
        match mode {
            1 => self.rows,
            2 => self.cols,
            3 => self.bands,
            _ => panic!("mode must be 1, 2, or 3"),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Same-shape tensor with `f` applied to every entry.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Tensor3 {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Tensor3 {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= alpha;
        }
        out
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::argument(format!(
                "matrix extents must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix data length {} does not match extents {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols]).expect("positive extents required")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "matrix product: left is {}x{}, right is {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Contracts the 1-based `mode` of `t` with `m`, replacing that extent by
/// `m.rows()`. Entry-wise this is the summation
/// `out[.., i, ..] = sum_k m[i, k] * t[.., k, ..]` along the chosen mode.
pub fn mode_product(t: &Tensor3, m: &Matrix, mode: usize) -> Result<Tensor3> {
    if !(1..=3).contains(&mode) {
        return Err(Error::argument(format!("mode must be 1, 2, or 3, got {mode}")));
    }
    let extent = t.extent(mode);
    if m.cols() != extent {
        return Err(Error::shape(format!(
            "mode-{mode} product: matrix has {} columns but tensor extent along mode {mode} is {extent}",
            m.cols()
        )));
    }
    let (rows, cols, bands) = t.dims();
    match mode {
        1 => {
            let mut out = Tensor3::zeros(m.rows(), cols, bands);
            for l in 0..bands {
                for i in 0..m.rows() {
                    for k in 0..rows {
                        let a = m.get(i, k);
                        if a == 0.0 {
                            continue;
                        }
                        let base_in = l * rows * cols + k * cols;
                        let base_out = l * m.rows() * cols + i * cols;
                        for n in 0..cols {
                            out.data[base_out + n] += a * t.data[base_in + n];
                        }
                    }
                }
            }
            Ok(out)
        }
        2 => {
            let mut out = Tensor3::zeros(rows, m.rows(), bands);
            for l in 0..bands {
                for r in 0..rows {
                    let src = &t.data[l * rows * cols + r * cols..l * rows * cols + (r + 1) * cols];
                    let dst_base = l * rows * m.rows() + r * m.rows();
                    for j in 0..m.rows() {
                        let mrow = m.row(j);
                        let mut acc = 0.0;
                        for (a, b) in mrow.iter().zip(src) {
                            acc += a * b;
                        }
                        out.data[dst_base + j] = acc;
                    }
                }
            }
            Ok(out)
        }
        _ => {
            let plane = rows * cols;
            let mut out = Tensor3::zeros(rows, cols, m.rows());
            for j in 0..m.rows() {
                for k in 0..bands {
                    let a = m.get(j, k);
                    if a == 0.0 {
                        continue;
                    }
                    let src = &t.data[k * plane..(k + 1) * plane];
                    let dst = &mut out.data[j * plane..(j + 1) * plane];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += a * s;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Mode-n unfolding. Mode-n fibers become columns; the remaining indices are
/// ordered by ascending mode number, lowest varying fastest.
pub fn unfold(t: &Tensor3, mode: usize) -> Matrix {
    let (rows, cols, bands) = t.dims();
    match mode {
        1 => {
            let mut out = Matrix::zeros(rows, cols * bands);
            for l in 0..bands {
                for m in 0..rows {
                    for n in 0..cols {
                        out.set(m, n + cols * l, t.get(m, n, l));
                    }
                }
            }
            out
        }
        2 => {
            let mut out = Matrix::zeros(cols, rows * bands);
            for l in 0..bands {
                for m in 0..rows {
                    for n in 0..cols {
                        out.set(n, m + rows * l, t.get(m, n, l));
                    }
                }
            }
            out
        }
        3 => {
            let mut out = Matrix::zeros(bands, rows * cols);
            for l in 0..bands {
                for m in 0..rows {
                    for n in 0..cols {
                        out.set(l, m + rows * n, t.get(m, n, l));
                    }
                }
            }
            out
        }
        _ => panic!("mode must be 1, 2, or 3"),
    }
}

/// Pads `x` to width `N + L - 1`, placing its columns at offset `ell`.
/// Models the band-dependent dispersion of the prism.
pub fn shift_slice(x: &Matrix, ell: usize, bands: usize) -> Result<Matrix> {
    if bands == 0 {
        return Err(Error::argument("band count must be positive".to_string()));
    }
    if ell >= bands {
        return Err(Error::argument(format!(
            "shift amount {ell} outside [0, {}]",
            bands - 1
        )));
    }
    let mut out = Matrix::zeros(x.rows(), x.cols() + bands - 1);
    for r in 0..x.rows() {
        let src = x.row(r);
        let dst = &mut out.row_mut(r)[ell..ell + src.len()];
        dst.copy_from_slice(src);
    }
    Ok(out)
}

/// Flattens a tensor in storage order.
pub fn vectorize(t: &Tensor3) -> Vec<f64> {
    t.data().to_vec()
}

/// Inverse of [`vectorize`] for the given extents.
pub fn devectorize(v: Vec<f64>, dims: (usize, usize, usize)) -> Result<Tensor3> {
    Tensor3::new(dims.0, dims.1, dims.2, v)
}
