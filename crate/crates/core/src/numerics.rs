//! Dense real-matrix primitives.
//!
//! Everything downstream (MPS site tensors, disentangler gates, simulator
//! kernels) is real-valued: target amplitudes are non-negative square roots of
//! probabilities and H/CNOT are real, so `f64` is enough.
//!
//! The SVD is delegated to `faer`; this module owns the ordering, sign and
//! truncation conventions on top of it, plus the deterministic orthonormal
//! completion used to turn tensor isometries into gates.

use faer::Mat;
use thiserror::Error;

/// Default tolerance for orthonormality checks.
pub const ORTHO_TOL: f64 = 1e-10;

/// Candidates whose residual norm falls below this are skipped during
/// Gram-Schmidt completion.
const COMPLETION_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix shape {rows}x{cols} is invalid: {reason}")]
    Shape {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },
    #[error("max_rank must be >= 1")]
    InvalidRank,
    #[error("input columns are not orthonormal (max deviation {max_deviation:.3e})")]
    NotOrthonormal { max_deviation: f64 },
    #[error("SVD failed to converge")]
    NoConvergence,
}

/// Dense real matrix over `faer::Mat<f64>`, with row-major accessors for
/// serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(Mat<f64>);

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Matrix(Mat::identity(n, n))
    }

    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::Shape {
                rows,
                cols,
                reason: "dimensions must be >= 1",
            });
        }
        if data.len() != rows * cols {
            return Err(NumericsError::Shape {
                rows,
                cols,
                reason: "data length does not match shape",
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[i * cols + j]))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Matrix(Mat::from_fn(rows, cols, f))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::Shape {
                rows: r,
                cols: c,
                reason: "ragged rows",
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(r, c, &flat)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose().to_owned())
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        Matrix(&self.0 * &other.0)
    }

    /// Elementwise sum. Panics on shape mismatch.
    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix(&self.0 + &other.0)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.0[(i, j)]).collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cols()).flat_map(move |j| (0..self.rows()).map(move |i| self.0[(i, j)]))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(f64::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Max-abs deviation of `selfᵀ·self` from the identity.
    pub fn column_orthonormality_defect(&self) -> f64 {
        max_identity_deviation(&self.transpose().matmul(self))
    }

    /// Max-abs deviation of `self·selfᵀ` from the identity.
    pub fn row_orthonormality_defect(&self) -> f64 {
        max_identity_deviation(&self.matmul(&self.transpose()))
    }

    /// Square and `QᵀQ = QQᵀ = I` within `tol`.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.rows() == self.cols()
            && self.column_orthonormality_defect() <= tol
            && self.row_orthonormality_defect() <= tol
    }

    /// Leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        Matrix(self.0.subcols(0, k).to_owned())
    }

    /// Leading `k` rows.
    pub fn leading_rows(&self, k: usize) -> Matrix {
        Matrix(self.0.subrows(0, k).to_owned())
    }
}

fn max_identity_deviation(gram: &Matrix) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram.get(i, j) - target).abs());
        }
    }
    dev
}

/// Thin SVD `m = u · diag(s) · vt`, possibly truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
    /// Sum of squared singular values dropped by truncation.
    pub discarded_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `rank` triplets, adding the squared tail to
    /// `discarded_weight`. `rank` is clamped to `[1, self.rank()]`.
    pub fn truncated(self, rank: usize) -> SvdResult {
        let keep = rank.clamp(1, self.s.len());
        if keep == self.s.len() {
            return self;
        }
        let tail: f64 = self.s[keep..].iter().map(|x| x * x).sum();
        SvdResult {
            u: self.u.leading_columns(keep),
            s: self.s[..keep].to_vec(),
            vt: self.vt.leading_rows(keep),
            discarded_weight: self.discarded_weight + tail,
        }
    }

    /// `u · diag(s) · vt`.
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.s.len(), |i, j| {
            self.u.get(i, j) * self.s[j]
        });
        us.matmul(&self.vt)
    }
}

/// Full thin SVD with singular values sorted descending (ties keep their
/// original index order) and each singular pair's sign fixed so the
/// largest-magnitude entry of its left vector is positive.
pub fn svd(m: &Matrix) -> Result<SvdResult, NumericsError> {
    if !m.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let d = m.0.thin_svd().map_err(|_| NumericsError::NoConvergence)?;
    let (u, v) = (d.U(), d.V());
    let raw_s: Vec<f64> = d.S().column_vector().iter().copied().collect();
    let k = raw_s.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw_s[b].total_cmp(&raw_s[a]).then(a.cmp(&b)));

    let mut u_sorted = Matrix::zeros(m.rows(), k);
    let mut vt_sorted = Matrix::zeros(k, m.cols());
    let mut s_sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..u.nrows() {
            if u[(i, src)].abs() > u[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..u.nrows() {
            u_sorted.set(i, dst, sign * u[(i, src)]);
        }
        for j in 0..v.nrows() {
            vt_sorted.set(dst, j, sign * v[(j, src)]);
        }
        s_sorted.push(raw_s[src].max(0.0));
    }

    Ok(SvdResult {
        u: u_sorted,
        s: s_sorted,
        vt: vt_sorted,
        discarded_weight: 0.0,
    })
}

/// SVD keeping at most `max_rank` singular triplets. The retained spectrum is
/// not renormalized.
pub fn truncated_svd(m: &Matrix, max_rank: usize) -> Result<SvdResult, NumericsError> {
    if max_rank == 0 {
        return Err(NumericsError::InvalidRank);
    }
    Ok(svd(m)?.truncated(max_rank))
}

/// Extends a `d×k` isometry to a `d×d` orthogonal matrix.
///
/// The first `k` columns are copied verbatim. The rest come from Gram-Schmidt
/// over the canonical basis `e_0, e_1, …` in index order (two projection
/// passes), skipping candidates whose residual norm is below `1e-8`.
pub fn complete_isometry(iso: &Matrix) -> Result<Matrix, NumericsError> {
    let d = iso.rows();
    let k = iso.cols();
    if k > d {
        return Err(NumericsError::Shape {
            rows: d,
            cols: k,
            reason: "isometry must have cols <= rows",
        });
    }
    if !iso.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let max_deviation = iso.column_orthonormality_defect();
    if max_deviation > ORTHO_TOL {
        return Err(NumericsError::NotOrthonormal { max_deviation });
    }

    let mut basis: Vec<Vec<f64>> = (0..k).map(|j| iso.column(j)).collect();
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut candidate = vec![0.0; d];
        candidate[e] = 1.0;
        for _pass in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&candidate).map(|(a, b)| a * b).sum();
                for (c, qi) in candidate.iter_mut().zip(q) {
                    *c -= proj * qi;
                }
            }
        }
        let norm = candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < COMPLETION_RESIDUAL_TOL {
            continue;
        }
        candidate.iter_mut().for_each(|x| *x /= norm);
        basis.push(candidate);
    }
    debug_assert_eq!(basis.len(), d);

    Ok(Matrix::from_fn(d, d, |i, j| {
        if j < k {
            iso.get(i, j)
        } else {
            basis[j][i]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn svd_of_identity() {
        let r = svd(&Matrix::identity(2)).unwrap();
        assert_eq!(r.s.len(), 2);
        assert!(close(r.s[0], 1.0, 1e-15) && close(r.s[1], 1.0, 1e-15));
        assert_eq!(r.discarded_weight, 0.0);
    }

    #[test]
    fn svd_of_singular_diagonal() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        let r = svd(&m).unwrap();
        assert!(close(r.s[0], 3.0, 1e-14));
        assert!(close(r.s[1], 0.0, 1e-14));
        assert_eq!(r.discarded_weight, 0.0);
        assert!(r.u.column_orthonormality_defect() < 1e-12);
        assert!(r.vt.row_orthonormality_defect() < 1e-12);
    }

    #[test]
    fn svd_sorts_and_fixes_signs() {
        let m = Matrix::from_row_slice(3, 2, &[0.0, -1.0, 5.0, 0.0, 0.0, 0.0]).unwrap();
        let r = svd(&m).unwrap();
        assert!(close(r.s[0], 5.0, 1e-14) && close(r.s[1], 1.0, 1e-14));
        for j in 0..r.rank() {
            let col = r.u.column(j);
            let pivot = col
                .iter()
                .copied()
                .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
        let rec = r.reconstruct();
        for i in 0..3 {
            for j in 0..2 {
                assert!(close(rec.get(i, j), m.get(i, j), 1e-14));
            }
        }
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = Matrix::from_fn(1, 2, |_, j| if j == 0 { 1.0 } else { f64::NAN });
        assert_eq!(svd(&m), Err(NumericsError::NonFinite));
        assert_eq!(
            Matrix::from_row_slice(1, 1, &[f64::INFINITY]),
            Err(NumericsError::NonFinite)
        );
    }

    #[test]
    fn truncation_of_diagonal() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        let r = truncated_svd(&m, 1).unwrap();
        assert_eq!(r.s.len(), 1);
        assert!(close(r.s[0], 2.0, 1e-14));
        assert!(close(r.discarded_weight, 1.0, 1e-14));
        assert_eq!(truncated_svd(&m, 0), Err(NumericsError::InvalidRank));
    }

    #[test]
    fn svd_of_rank_deficient_wide_matrix() {
        // rank 2, 4x8: the shape that follows a truncation in a TT-SVD sweep
        let a = Matrix::from_fn(4, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let b = Matrix::from_fn(2, 8, |i, j| ((i * 11 + j * 2) % 5) as f64 - 2.0);
        let m = a.matmul(&b);
        let r = svd(&m).unwrap();
        assert!(r.s[2] < 1e-12 * r.s[0]);
        let rec = r.reconstruct();
        for i in 0..4 {
            for j in 0..8 {
                assert!(close(rec.get(i, j), m.get(i, j), 1e-12));
            }
        }
        assert!(r.u.column_orthonormality_defect() < 1e-12);
    }

    #[test]
    fn truncation_of_rank_one() {
        let m = Matrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let r = truncated_svd(&m, 1).unwrap();
        assert!(r.discarded_weight <= 1e-20);
    }

    #[test]
    fn completion_of_canonical_vector() {
        let iso = Matrix::from_row_slice(2, 1, &[1.0, 0.0]).unwrap();
        assert_eq!(complete_isometry(&iso).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn completion_of_orthogonal_is_noop() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = Matrix::from_row_slice(2, 2, &[h, h, h, -h]).unwrap();
        assert_eq!(complete_isometry(&q).unwrap(), q);
    }

    #[test]
    fn completion_preserves_columns_bitwise() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let iso = Matrix::from_row_slice(4, 2, &[h, 0.0, 0.0, 0.6, 0.0, 0.8, h, 0.0]).unwrap();
        let q = complete_isometry(&iso).unwrap();
        assert!(q.is_orthogonal(1e-12));
        for i in 0..4 {
            for j in 0..2 {
                assert_eq!(q.get(i, j).to_bits(), iso.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn completion_rejects_non_orthonormal() {
        let iso = Matrix::from_row_slice(2, 1, &[1.0, 1.0]).unwrap();
        match complete_isometry(&iso) {
            Err(NumericsError::NotOrthonormal { max_deviation }) => {
                assert!(close(max_deviation, 1.0, 1e-12))
            }
            other => panic!("unexpected {other:?}"),
        }
        let wide = Matrix::zeros(1, 2);
        assert!(matches!(
            complete_isometry(&wide),
            Err(NumericsError::Shape { .. })
        ));
    }
}
