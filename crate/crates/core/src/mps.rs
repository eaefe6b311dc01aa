//! Matrix product states over qubits.
//!
//! Site `i` carries the physical index of qubit `i`; qubit 0 is the most
//! significant bit of a statevector index. Site tensors use the layout
//! `(left bond, physical, right bond)` stored row-major, so the same buffer
//! reads as a `(2·left) × right` matrix ("left matrix") or a
//! `left × (2·right)` matrix ("right matrix").
//!
//! Left-canonical form means every left matrix has orthonormal columns. For
//! the last site that single column is the (unit) norm of the state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{svd, Matrix, NumericsError, SvdResult, ORTHO_TOL};

/// Largest qubit count that may be contracted into a dense vector.
pub const DEFAULT_DENSE_LIMIT: usize = 24;

/// Singular values below this fraction of the largest are treated as zero.
const RELATIVE_SV_CUTOFF: f64 = 1e-12;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("statevector length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("statevector is not normalized (norm {0})")]
    Unnormalized(f64),
    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("bond dimension must be >= 1")]
    InvalidChi,
    #[error("operation requires a left-canonical MPS")]
    NotCanonical,
    #[error("gate is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),
    #[error("gate on qubit {qubit} does not fit a {n}-qubit chain")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("invalid tensor network: {0}")]
    Shape(String),
    #[error("mps document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Rank-3 site tensor `A[l, s, r]` with `s ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    left: usize,
    right: usize,
    data: Vec<f64>,
}

impl SiteTensor {
    pub fn new(left: usize, right: usize, data: Vec<f64>) -> Result<Self, MpsError> {
        if left == 0 || right == 0 || data.len() != left * 2 * right {
            return Err(MpsError::Shape(format!(
                "site tensor ({left}, 2, {right}) with {} entries",
                data.len()
            )));
        }
        Ok(SiteTensor { left, right, data })
    }

    pub fn left_dim(&self) -> usize {
        self.left
    }

    pub fn right_dim(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, l: usize, s: usize, r: usize) -> f64 {
        self.data[(l * 2 + s) * self.right + r]
    }

    pub fn set(&mut self, l: usize, s: usize, r: usize, value: f64) {
        self.data[(l * 2 + s) * self.right + r] = value;
    }

    /// `(2·left) × right`, rows indexed by `(l, s)`.
    pub fn left_matrix(&self) -> Matrix {
        Matrix::from_fn(2 * self.left, self.right, |i, j| {
            self.data[i * self.right + j]
        })
    }

    /// `left × (2·right)`, columns indexed by `(s, r)`.
    pub fn right_matrix(&self) -> Matrix {
        let w = 2 * self.right;
        Matrix::from_fn(self.left, w, |i, j| self.data[i * w + j])
    }

    fn from_left_matrix(m: &Matrix) -> Self {
        SiteTensor {
            left: m.rows() / 2,
            right: m.cols(),
            data: m.to_row_major(),
        }
    }

    fn from_right_matrix(m: &Matrix) -> Self {
        SiteTensor {
            left: m.rows(),
            right: m.cols() / 2,
            data: m.to_row_major(),
        }
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Canonical {
    Left,
    None,
}

/// Gate acting on adjacent sites of an MPS.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalGate {
    /// 2×2 gate on `qubit`.
    One { qubit: usize, matrix: Matrix },
    /// 4×4 gate on `(qubit, qubit + 1)`, basis index `2·b_qubit + b_{qubit+1}`.
    Two { qubit: usize, matrix: Matrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    tensors: Vec<SiteTensor>,
    canonical: Canonical,
}

impl Mps {
    /// Wraps raw site tensors, checking bond consistency. The canonical flag
    /// is detected at tolerance `1e-10`.
    pub fn from_tensors(tensors: Vec<SiteTensor>) -> Result<Self, MpsError> {
        if tensors.is_empty() {
            return Err(MpsError::Shape("no sites".into()));
        }
        if tensors[0].left != 1 || tensors[tensors.len() - 1].right != 1 {
            return Err(MpsError::Shape(
                "boundary bonds must have dimension 1".into(),
            ));
        }
        for (i, pair) in tensors.windows(2).enumerate() {
            if pair[0].right != pair[1].left {
                return Err(MpsError::Shape(format!(
                    "bond {i}: right dim {} != left dim {}",
                    pair[0].right, pair[1].left
                )));
            }
        }
        let mut mps = Mps {
            tensors,
            canonical: Canonical::None,
        };
        if mps.is_left_canonical(ORTHO_TOL) {
            mps.canonical = Canonical::Left;
        }
        Ok(mps)
    }

    /// Exact (up to round-off) left-canonical MPS of `v`, bond dims capped
    /// only by the Schmidt ranks.
    pub fn from_statevector(v: &[f64]) -> Result<Self, MpsError> {
        Ok(Self::from_statevector_truncated(v, usize::MAX)?.0)
    }

    /// TT-SVD: sweeps left to right keeping at most `chi_max` singular values
    /// per bond, then renormalizes once. Returns the accumulated discarded
    /// weight alongside the MPS.
    pub fn from_statevector_truncated(v: &[f64], chi_max: usize) -> Result<(Self, f64), MpsError> {
        if chi_max == 0 {
            return Err(MpsError::InvalidChi);
        }
        let n = qubit_count(v.len())?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(MpsError::Unnormalized(norm));
        }

        let mut tensors = Vec::with_capacity(n);
        let mut rest = v.to_vec();
        let mut left = 1;
        let mut discarded = 0.0;
        for _site in 0..n - 1 {
            let rows = 2 * left;
            let cols = rest.len() / rows;
            let m = Matrix::from_row_slice(rows, cols, &rest)?;
            let f = truncate_factor(svd(&m)?, chi_max);
            discarded += f.discarded_weight;
            tensors.push(SiteTensor::from_left_matrix(&f.u));
            rest = scaled_rows(&f.s, &f.vt).to_row_major();
            left = f.s.len();
        }
        let mut last = SiteTensor::new(left, 1, rest)?;
        normalize_site(&mut last);
        tensors.push(last);
        Ok((
            Mps {
                tensors,
                canonical: Canonical::Left,
            },
            discarded,
        ))
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    pub fn canonical(&self) -> Canonical {
        self.canonical
    }

    /// `n − 1` internal bond dimensions.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1]
            .iter()
            .map(|t| t.right)
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Every site's left matrix has orthonormal columns within `tol`.
    pub fn is_left_canonical(&self, tol: f64) -> bool {
        self.tensors
            .iter()
            .all(|t| t.left_matrix().column_orthonormality_defect() <= tol)
    }

    /// `⟨ψ|ψ⟩^{1/2}` via transfer matrices.
    pub fn norm(&self) -> f64 {
        let mut env = Matrix::identity(1);
        for t in &self.tensors {
            let mut next = Matrix::zeros(t.right, t.right);
            for s in 0..2 {
                let a = slice_physical(t, s);
                next = next.add(&a.transpose().matmul(&env).matmul(&a));
            }
            env = next;
        }
        env.get(0, 0).max(0.0).sqrt()
    }

    /// Amplitude `⟨b|ψ⟩` of the computational basis state with index `bits`.
    pub fn amplitude(&self, bits: usize) -> f64 {
        let n = self.n_sites();
        let mut row = Matrix::identity(1);
        for (i, t) in self.tensors.iter().enumerate() {
            let s = (bits >> (n - 1 - i)) & 1;
            row = row.matmul(&slice_physical(t, s));
        }
        row.get(0, 0)
    }

    pub fn to_statevector(&self) -> Result<Vec<f64>, MpsError> {
        self.to_statevector_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Full contraction, qubit 0 most significant.
    pub fn to_statevector_with_limit(&self, limit: usize) -> Result<Vec<f64>, MpsError> {
        let n = self.n_sites();
        if n > limit {
            return Err(MpsError::DenseLimit { n, limit });
        }
        // cur is (prefix basis) × (bond), row-major
        let mut cur = Matrix::identity(1);
        for t in &self.tensors {
            let prod = cur.matmul(&t.right_matrix());
            let rows = prod.rows() * 2;
            let data = prod.to_row_major();
            cur = Matrix::from_fn(rows, t.right, |i, j| data[i * t.right + j]);
        }
        Ok(cur.column(0))
    }

    /// Re-compresses to bond dimension `chi` with a truncating left-to-right
    /// sweep (after bringing the state to right-canonical form), renormalizes,
    /// and returns the accumulated discarded weight.
    pub fn truncate(&self, chi: usize) -> Result<(Mps, f64), MpsError> {
        if chi == 0 {
            return Err(MpsError::InvalidChi);
        }
        self.require_left_canonical()?;
        if chi >= self.max_bond_dim() {
            return Ok((self.clone(), 0.0));
        }
        let n = self.n_sites();
        let mut ts = self.tensors.clone();
        for c in (1..n).rev() {
            shift_center_left(&mut ts, c)?;
        }
        let mut discarded = 0.0;
        for c in 0..n - 1 {
            let f = truncate_factor(svd(&ts[c].left_matrix())?, chi);
            discarded += f.discarded_weight;
            ts[c] = SiteTensor::from_left_matrix(&f.u);
            let carry = scaled_rows(&f.s, &f.vt);
            ts[c + 1] = SiteTensor::from_right_matrix(&carry.matmul(&ts[c + 1].right_matrix()));
        }
        normalize_site(&mut ts[n - 1]);
        Ok((
            Mps {
                tensors: ts,
                canonical: Canonical::Left,
            },
            discarded,
        ))
    }

    /// Applies one 4×4 orthogonal gate to qubits `(qubit, qubit + 1)`.
    pub fn apply_two_qubit_gate(
        &self,
        gate: &Matrix,
        qubit: usize,
        chi_max: usize,
    ) -> Result<(Mps, f64), MpsError> {
        self.apply_gates(
            &[LocalGate::Two {
                qubit,
                matrix: gate.clone(),
            }],
            chi_max,
        )
    }

    /// Applies `gates` in order, moving the orthogonality center as needed and
    /// truncating each two-site split to `chi_max`. The result is
    /// left-canonical and normalized; the second value is the summed
    /// discarded weight.
    pub fn apply_gates(&self, gates: &[LocalGate], chi_max: usize) -> Result<(Mps, f64), MpsError> {
        if chi_max == 0 {
            return Err(MpsError::InvalidChi);
        }
        self.require_left_canonical()?;
        let n = self.n_sites();
        for gate in gates {
            validate_local_gate(gate, n)?;
        }

        let mut ts = self.tensors.clone();
        let mut center = n - 1;
        let mut discarded = 0.0;
        for gate in gates {
            match gate {
                LocalGate::One { qubit, matrix } => {
                    ts[*qubit] = apply_physical(&ts[*qubit], matrix);
                }
                LocalGate::Two { qubit, matrix } => {
                    let q = *qubit;
                    while center > q {
                        shift_center_left(&mut ts, center)?;
                        center -= 1;
                    }
                    while center < q {
                        shift_center_right(&mut ts, center)?;
                        center += 1;
                    }
                    let (a, b, w) = split_two_site(&ts[q], &ts[q + 1], matrix, chi_max)?;
                    ts[q] = a;
                    ts[q + 1] = b;
                    discarded += w;
                    center = q + 1;
                }
            }
        }
        while center < n - 1 {
            shift_center_right(&mut ts, center)?;
            center += 1;
        }
        normalize_site(&mut ts[n - 1]);
        Ok((
            Mps {
                tensors: ts,
                canonical: Canonical::Left,
            },
            discarded,
        ))
    }

    fn require_left_canonical(&self) -> Result<(), MpsError> {
        match self.canonical {
            Canonical::Left => Ok(()),
            Canonical::None => Err(MpsError::NotCanonical),
        }
    }

    pub fn to_document(&self) -> MpsDocument {
        MpsDocument {
            format_version: MPS_FORMAT_VERSION,
            n_sites: self.n_sites(),
            bond_dims: self.bond_dims(),
            canonical: self.canonical,
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorDocument {
                    shape: [t.left, 2, t.right],
                    data: t.data.clone(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &MpsDocument) -> Result<Self, MpsError> {
        if doc.format_version != MPS_FORMAT_VERSION {
            return Err(MpsError::Shape(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        let tensors = doc
            .tensors
            .iter()
            .map(|t| {
                if t.shape[1] != 2 {
                    return Err(MpsError::Shape("physical dimension must be 2".into()));
                }
                SiteTensor::new(t.shape[0], t.shape[2], t.data.clone())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Mps::from_tensors(tensors)
    }

    pub fn to_json(&self) -> Result<String, MpsError> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self, MpsError> {
        Mps::from_document(&serde_json::from_str(text)?)
    }
}

pub const MPS_FORMAT_VERSION: u32 = 1;

/// JSON form of an [`Mps`]: shapes plus row-major `(l, s, r)` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsDocument {
    pub format_version: u32,
    pub n_sites: usize,
    pub bond_dims: Vec<usize>,
    pub canonical: Canonical,
    pub tensors: Vec<TensorDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDocument {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

/// Flips `v` so its largest-magnitude entry (first on ties) is non-negative.
pub fn fix_global_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn qubit_count(len: usize) -> Result<usize, MpsError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(MpsError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Caps the rank at `chi` and drops numerically zero singular values.
fn truncate_factor(f: SvdResult, chi: usize) -> SvdResult {
    let smax = f.s.first().copied().unwrap_or(0.0);
    let numeric_rank =
        f.s.iter()
            .filter(|&&x| x > RELATIVE_SV_CUTOFF * smax)
            .count();
    let keep = chi.min(numeric_rank).max(1);
    f.truncated(keep)
}

fn scaled_rows(s: &[f64], vt: &Matrix) -> Matrix {
    Matrix::from_fn(vt.rows(), vt.cols(), |i, j| s[i] * vt.get(i, j))
}

fn slice_physical(t: &SiteTensor, s: usize) -> Matrix {
    Matrix::from_fn(t.left, t.right, |l, r| t.get(l, s, r))
}

fn normalize_site(t: &mut SiteTensor) {
    let norm = t.frobenius_norm();
    if norm > 0.0 {
        t.data.iter_mut().for_each(|x| *x /= norm);
    }
}

fn apply_physical(t: &SiteTensor, gate: &Matrix) -> SiteTensor {
    let mut out = t.clone();
    for l in 0..t.left {
        for r in 0..t.right {
            for s_out in 0..2 {
                let v = gate.get(s_out, 0) * t.get(l, 0, r) + gate.get(s_out, 1) * t.get(l, 1, r);
                out.set(l, s_out, r, v);
            }
        }
    }
    out
}

/// Makes site `c` left-orthonormal, pushing the remainder into `c + 1`.
fn shift_center_right(ts: &mut [SiteTensor], c: usize) -> Result<(), MpsError> {
    let f = truncate_factor(svd(&ts[c].left_matrix())?, usize::MAX);
    ts[c] = SiteTensor::from_left_matrix(&f.u);
    let carry = scaled_rows(&f.s, &f.vt);
    ts[c + 1] = SiteTensor::from_right_matrix(&carry.matmul(&ts[c + 1].right_matrix()));
    Ok(())
}

/// Makes site `c` right-orthonormal, pushing the remainder into `c − 1`.
fn shift_center_left(ts: &mut [SiteTensor], c: usize) -> Result<(), MpsError> {
    let f = truncate_factor(svd(&ts[c].right_matrix())?, usize::MAX);
    ts[c] = SiteTensor::from_right_matrix(&f.vt);
    let us = Matrix::from_fn(f.u.rows(), f.u.cols(), |i, j| f.u.get(i, j) * f.s[j]);
    ts[c - 1] = SiteTensor::from_left_matrix(&ts[c - 1].left_matrix().matmul(&us));
    Ok(())
}

/// Contracts `a·b`, applies `gate` to the two physical legs and splits the
/// result back with a truncated SVD. The singular values go right, so the
/// returned right tensor is the new orthogonality center.
fn split_two_site(
    a: &SiteTensor,
    b: &SiteTensor,
    gate: &Matrix,
    chi_max: usize,
) -> Result<(SiteTensor, SiteTensor, f64), MpsError> {
    let theta = a.left_matrix().matmul(&b.right_matrix());
    let (l, r) = (a.left, b.right);
    // theta rows (l, s1), cols (s2, r)
    let rotated = Matrix::from_fn(2 * l, 2 * r, |row, col| {
        let (li, t1) = (row / 2, row % 2);
        let (t2, ri) = (col / r, col % r);
        let out = 2 * t1 + t2;
        let mut acc = 0.0;
        for s1 in 0..2 {
            for s2 in 0..2 {
                let g = gate.get(out, 2 * s1 + s2);
                if g != 0.0 {
                    acc += g * theta.get(2 * li + s1, s2 * r + ri);
                }
            }
        }
        acc
    });
    let full = svd(&rotated)?;
    let total: f64 = full.s.iter().map(|x| x * x).sum();
    let f = truncate_factor(full, chi_max);
    let kept: f64 = f.s.iter().map(|x| x * x).sum();
    let scale = if kept > 0.0 { 1.0 / kept.sqrt() } else { 1.0 };
    let s: Vec<f64> = f.s.iter().map(|x| x * scale).collect();
    let weight = if total > 0.0 { 1.0 - kept / total } else { 0.0 };
    Ok((
        SiteTensor::from_left_matrix(&f.u),
        SiteTensor::from_right_matrix(&scaled_rows(&s, &f.vt)),
        weight.max(0.0),
    ))
}

fn validate_local_gate(gate: &LocalGate, n: usize) -> Result<(), MpsError> {
    let (qubit, matrix, dim, span) = match gate {
        LocalGate::One { qubit, matrix } => (*qubit, matrix, 2, 1),
        LocalGate::Two { qubit, matrix } => (*qubit, matrix, 4, 2),
    };
    if qubit + span > n {
        return Err(MpsError::QubitOutOfRange { qubit, n });
    }
    if matrix.rows() != dim || matrix.cols() != dim {
        return Err(MpsError::Shape(format!(
            "expected a {dim}x{dim} gate, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let defect = matrix
        .column_orthonormality_defect()
        .max(matrix.row_orthonormality_defect());
    if defect > ORTHO_TOL {
        return Err(MpsError::NotOrthogonal(defect));
    }
    Ok(())
}
