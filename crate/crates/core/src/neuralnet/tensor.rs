//! Row-major f64 matrices and the three product kernels the LSTM needs.
//!
//! Kernel loop orders are chosen so the innermost loop always walks both
//! operands contiguously (axpy form), which LLVM can vectorize without
//! needing floating-point reassociation.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(&row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Transpose into a fresh matrix.
    pub fn transposed(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `out[b][j] += Σ_i a[b][i] · wt[i][j]` — i.e. `out += a · wt` with `wt`
/// already transposed to (inner × out-dim). Inner loop: axpy over `j`.
pub fn add_matmul_pret(out: &mut Mat, a: &Mat, wt: &Mat) {
    debug_assert_eq!(out.rows, a.rows);
    debug_assert_eq!(a.cols, wt.rows);
    debug_assert_eq!(out.cols, wt.cols);
    let cols = out.cols;
    for b in 0..a.rows {
        let arow = a.row(b);
        let orow = &mut out.data[b * cols..(b + 1) * cols];
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let wrow = &wt.data[i * cols..(i + 1) * cols];
            for j in 0..cols {
                orow[j] += av * wrow[j];
            }
        }
    }
}

/// `out[b][i] += Σ_j dz[b][j] · w[j][i]` — i.e. `out += dz · w` with `w`
/// stored (rows = j-dim, cols = i-dim). Inner loop: axpy over `i`.
pub fn add_matmul(out: &mut Mat, dz: &Mat, w: &Mat) {
    debug_assert_eq!(out.rows, dz.rows);
    debug_assert_eq!(dz.cols, w.rows);
    debug_assert_eq!(out.cols, w.cols);
    let cols = out.cols;
    for b in 0..dz.rows {
        let zrow = dz.row(b);
        let orow = &mut out.data[b * cols..(b + 1) * cols];
        for (j, &zv) in zrow.iter().enumerate() {
            if zv == 0.0 {
                continue;
            }
            let wrow = &w.data[j * cols..(j + 1) * cols];
            for i in 0..cols {
                orow[i] += zv * wrow[i];
            }
        }
    }
}

/// `out[j][i] += Σ_b a[b][j] · c[b][i]` — i.e. `out += aᵀ · c`, accumulating
/// a (j-dim × i-dim) gradient from two batch-major operands. Inner: axpy.
pub fn add_outer_acc(out: &mut Mat, a: &Mat, c: &Mat) {
    debug_assert_eq!(a.rows, c.rows);
    debug_assert_eq!(out.rows, a.cols);
    debug_assert_eq!(out.cols, c.cols);
    let cols = out.cols;
    for b in 0..a.rows {
        let arow = a.row(b);
        let crow = c.row(b);
        for (j, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out.data[j * cols..(j + 1) * cols];
            for i in 0..cols {
                orow[i] += av * crow[i];
            }
        }
    }
}
