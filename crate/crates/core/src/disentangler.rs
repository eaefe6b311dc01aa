//! Matrix product disentanglers.
//!
//! A left-canonical MPS with bond dimension ≤ 2 is turned into a staircase of
//! gates that prepares it from `|0…0⟩`. In preparation order:
//!
//! 1. `first`, a 4×4 gate on qubits `(n−2, n−1)` whose `|00⟩` column is the
//!    last site tensor (the one carrying the norm);
//! 2. `middle[k]`, 4×4 gates on qubits `(n−3−k, n−2−k)`; for site `i` the
//!    columns with input `|0, a_i⟩` are the site tensor's left matrix;
//! 3. `last`, a 2×2 gate on qubit 0 equal to the first site's left matrix.
//!
//! Unconstrained columns come from [`complete_isometry`]. Bonds of dimension
//! 1 are zero-padded to 2 first so every two-qubit gate is 4×4.
//!
//! The disentangler `U` is the adjoint of this sequence, i.e. transposed
//! gates in reverse order, which sweeps from qubit 0 towards qubit `n−1`.
//! Higher bond dimensions are handled by stacking layers: truncate to χ = 2,
//! build a layer, disentangle the full state with it, repeat.

use thiserror::Error;

use crate::circuit::sim;
use crate::mps::{LocalGate, Mps, MpsError, SiteTensor, DEFAULT_DENSE_LIMIT};
use crate::numerics::{complete_isometry, Matrix, NumericsError, ORTHO_TOL};

/// Cap for the default working bond dimension.
pub const MAX_DEFAULT_CHI_WORK: usize = 256;

/// Residual below which `early_stop` ends a build.
const EARLY_STOP_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DisentanglerError {
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("layer extraction needs bond dims <= 2, found {0}")]
    BondTooLarge(usize),
    #[error("layer extraction needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("num_layers must be >= 1")]
    NoLayers,
    #[error("chi_work {chi_work} is below the input bond dimension {bond}")]
    ChiWorkTooSmall { chi_work: usize, bond: usize },
    #[error("stack acts on {stack} qubits but the state has {state}")]
    QubitMismatch { stack: usize, state: usize },
}

/// Where a gate acts: one qubit, or an adjacent pair `(q, q + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    One(usize),
    Two(usize),
}

/// One staircase layer, gates stored in preparation order.
#[derive(Debug, Clone, PartialEq)]
pub struct MpdLayer {
    n_qubits: usize,
    /// 4×4 on qubits `(n−2, n−1)`.
    pub first: Matrix,
    /// 4×4 gates; `middle[k]` acts on qubits `(n−3−k, n−2−k)`.
    pub middle: Vec<Matrix>,
    /// 2×2 on qubit 0.
    pub last: Matrix,
}

impl MpdLayer {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Gates that prepare the source state from `|0…0⟩`, in application
    /// order.
    pub fn prep_ops(&self) -> Vec<(Placement, &Matrix)> {
        let n = self.n_qubits;
        let mut ops = Vec::with_capacity(n);
        ops.push((Placement::Two(n - 2), &self.first));
        for (k, g) in self.middle.iter().enumerate() {
            ops.push((Placement::Two(n - 3 - k), g));
        }
        ops.push((Placement::One(0), &self.last));
        ops
    }

    /// Gates of the disentangler `U` (transposes, reverse order).
    pub fn disentangle_ops(&self) -> Vec<(Placement, Matrix)> {
        self.prep_ops()
            .into_iter()
            .rev()
            .map(|(p, g)| (p, g.transpose()))
            .collect()
    }

    fn disentangle_local_gates(&self) -> Vec<LocalGate> {
        self.disentangle_ops()
            .into_iter()
            .map(|(p, matrix)| match p {
                Placement::One(qubit) => LocalGate::One { qubit, matrix },
                Placement::Two(qubit) => LocalGate::Two { qubit, matrix },
            })
            .collect()
    }

    /// Applies `U` to a dense state in place.
    pub fn disentangle_dense(&self, state: &mut [f64]) {
        for (p, g) in self.disentangle_ops() {
            match p {
                Placement::One(q) => sim::apply_one(state, self.n_qubits, q, &g),
                Placement::Two(q) => sim::apply_two(state, self.n_qubits, q, q + 1, &g),
            }
        }
    }

    /// Applies `U†` (state preparation) to a dense state in place.
    pub fn prepare_dense(&self, state: &mut [f64]) {
        for (p, g) in self.prep_ops() {
            match p {
                Placement::One(q) => sim::apply_one(state, self.n_qubits, q, g),
                Placement::Two(q) => sim::apply_two(state, self.n_qubits, q, q + 1, g),
            }
        }
    }
}

/// Copies a site tensor into a `(2, 2, 2)` block, zero-padding missing bond
/// entries, and returns the constrained `4 × right` isometry.
fn padded_isometry(t: &SiteTensor) -> Matrix {
    Matrix::from_fn(4, t.right_dim(), |row, col| {
        let (l, s) = (row / 2, row % 2);
        if l < t.left_dim() {
            t.get(l, s, col)
        } else {
            0.0
        }
    })
}

/// Extracts the staircase that maps `m` to `|0…0⟩`.
pub fn build_layer(m: &Mps) -> Result<MpdLayer, DisentanglerError> {
    let n = m.n_sites();
    if n < 2 {
        return Err(DisentanglerError::TooFewQubits(n));
    }
    let bond = m.max_bond_dim();
    if bond > 2 {
        return Err(DisentanglerError::BondTooLarge(bond));
    }
    if !m.is_left_canonical(ORTHO_TOL) {
        return Err(MpsError::NotCanonical.into());
    }
    let ts = m.tensors();

    let first = complete_isometry(&padded_isometry(&ts[n - 1]))?;
    let middle = (1..n - 1)
        .rev()
        .map(|i| complete_isometry(&padded_isometry(&ts[i])))
        .collect::<Result<Vec<_>, _>>()?;
    let head = &ts[0];
    let last = complete_isometry(&Matrix::from_fn(2, head.right_dim(), |s, r| {
        head.get(0, s, r)
    }))?;

    Ok(MpdLayer {
        n_qubits: n,
        first,
        middle,
        last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackOptions {
    pub num_layers: usize,
    /// Bond cap while evolving the state between layers; `None` picks
    /// `min(2 · max bond, 256)`, never below the input's max bond.
    pub chi_work: Option<usize>,
    /// Stop before `num_layers` once the residual drops below `1e-12`.
    pub early_stop: bool,
}

impl StackOptions {
    pub fn layers(num_layers: usize) -> Self {
        StackOptions {
            num_layers,
            chi_work: None,
            early_stop: false,
        }
    }
}

pub fn default_chi_work(m: &Mps) -> usize {
    let bond = m.max_bond_dim();
    (2 * bond).min(MAX_DEFAULT_CHI_WORK).max(bond)
}

/// Layers in build order: layer 0 comes from the χ = 2 truncation of the
/// original state.
#[derive(Debug, Clone, PartialEq)]
pub struct DisentanglerStack {
    pub layers: Vec<MpdLayer>,
    pub n_qubits: usize,
    /// `1 − |⟨0…0| U_L ⋯ U_1 |ψ⟩|²`.
    pub residual_infidelity: f64,
    /// Residual after each layer, for monitoring convergence.
    pub residual_history: Vec<f64>,
    /// Discarded weight from the χ = 2 truncation of the input.
    pub truncation_error: f64,
    /// Discarded weight from evolving the state at `chi_work`.
    pub work_truncation_error: f64,
    pub chi_work: usize,
}

impl DisentanglerStack {
    pub fn empty(n_qubits: usize) -> Self {
        DisentanglerStack {
            layers: Vec::new(),
            n_qubits,
            residual_infidelity: 0.0,
            residual_history: Vec::new(),
            truncation_error: 0.0,
            work_truncation_error: 0.0,
            chi_work: 1,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Applies the layers' disentanglers in build order.
    pub fn disentangle_dense(&self, state: &mut [f64]) {
        for layer in &self.layers {
            layer.disentangle_dense(state);
        }
    }

    /// Prepares the approximated state: layer adjoints in reverse build order
    /// applied to `|0…0⟩`.
    pub fn prepare_dense(&self) -> Vec<f64> {
        let mut state = vec![0.0; 1 << self.n_qubits];
        state[0] = 1.0;
        for layer in self.layers.iter().rev() {
            layer.prepare_dense(&mut state);
        }
        state
    }
}

/// Iterated disentangling: truncate to χ = 2, extract a layer, apply it to
/// the working state at `chi_work`, repeat.
pub fn build_stack(m: &Mps, opts: StackOptions) -> Result<DisentanglerStack, DisentanglerError> {
    if opts.num_layers == 0 {
        return Err(DisentanglerError::NoLayers);
    }
    let chi_work = opts.chi_work.unwrap_or_else(|| default_chi_work(m));
    if chi_work < m.max_bond_dim() {
        return Err(DisentanglerError::ChiWorkTooSmall {
            chi_work,
            bond: m.max_bond_dim(),
        });
    }
    let n = m.n_sites();
    let mut state = m.clone();
    let mut layers = Vec::with_capacity(opts.num_layers);
    let mut history = Vec::with_capacity(opts.num_layers);
    let mut truncation_error = 0.0;
    let mut work_truncation_error = 0.0;

    for index in 0..opts.num_layers {
        let (approx, discarded) = state.truncate(2)?;
        if index == 0 {
            truncation_error = discarded;
        }
        let layer = build_layer(&approx)?;
        let (next, work) = state.apply_gates(&layer.disentangle_local_gates(), chi_work)?;
        work_truncation_error += work;
        state = next;
        layers.push(layer);
        let res = (1.0 - state.amplitude(0).powi(2)).clamp(0.0, 1.0);
        history.push(res);
        if opts.early_stop && res < EARLY_STOP_RESIDUAL {
            break;
        }
    }

    let mut stack = DisentanglerStack {
        layers,
        n_qubits: n,
        residual_infidelity: *history.last().unwrap_or(&0.0),
        residual_history: history,
        truncation_error,
        work_truncation_error,
        chi_work,
    };
    if n <= DEFAULT_DENSE_LIMIT {
        stack.residual_infidelity = residual(m, &stack)?;
    }
    Ok(stack)
}

/// `1 − |⟨0…0| U_stack |ψ⟩|²`, evaluated densely.
pub fn residual(m: &Mps, stack: &DisentanglerStack) -> Result<f64, DisentanglerError> {
    if m.n_sites() != stack.n_qubits {
        return Err(DisentanglerError::QubitMismatch {
            stack: stack.n_qubits,
            state: m.n_sites(),
        });
    }
    let mut v = m.to_statevector()?;
    stack.disentangle_dense(&mut v);
    Ok((1.0 - v[0] * v[0]).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(n: usize) -> Vec<f64> {
        let mut v = vec![0.0; 1 << n];
        v[0] = std::f64::consts::FRAC_1_SQRT_2;
        v[(1 << n) - 1] = std::f64::consts::FRAC_1_SQRT_2;
        v
    }

    #[test]
    fn product_state_layer_is_identity() {
        let mut v = vec![0.0; 16];
        v[0] = 1.0;
        let mps = Mps::from_statevector(&v).unwrap();
        let layer = build_layer(&mps).unwrap();
        assert_eq!(layer.first, Matrix::identity(4));
        assert!(layer.middle.iter().all(|g| *g == Matrix::identity(4)));
        assert_eq!(layer.last, Matrix::identity(2));
        let mut w = v.clone();
        layer.disentangle_dense(&mut w);
        assert_eq!(w, v);
    }

    #[test]
    fn ghz_layer_disentangles() {
        let v = ghz(3);
        let mps = Mps::from_statevector(&v).unwrap();
        let layer = build_layer(&mps).unwrap();
        let mut w = v.clone();
        layer.disentangle_dense(&mut w);
        assert!(1.0 - w[0] * w[0] <= 1e-10);

        let mut p = vec![0.0; 8];
        p[0] = 1.0;
        layer.prepare_dense(&mut p);
        for (a, b) in p.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constrained_columns_match_tensors() {
        let v = ghz(4);
        let mps = Mps::from_statevector(&v).unwrap();
        let layer = build_layer(&mps).unwrap();
        let ts = mps.tensors();
        let last_site = &ts[3];
        for row in 0..4 {
            let (l, s) = (row / 2, row % 2);
            assert_eq!(layer.first.get(row, 0), last_site.get(l, s, 0));
        }
        for s in 0..2 {
            for r in 0..2 {
                assert_eq!(layer.last.get(s, r), ts[0].get(0, s, r));
            }
        }
        // middle[0] comes from site 2
        for row in 0..4 {
            for col in 0..2 {
                assert_eq!(
                    layer.middle[0].get(row, col),
                    ts[2].get(row / 2, row % 2, col)
                );
            }
        }
    }

    #[test]
    fn rejects_large_bonds_and_bad_options() {
        let mut v: Vec<f64> = (0..32).map(|k| ((k * 7 % 11) as f64) - 5.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mps = Mps::from_statevector(&v).unwrap();
        assert!(mps.max_bond_dim() > 2);
        assert!(matches!(
            build_layer(&mps),
            Err(DisentanglerError::BondTooLarge(_))
        ));
        assert!(matches!(
            build_stack(&mps, StackOptions::layers(0)),
            Err(DisentanglerError::NoLayers)
        ));
        let opts = StackOptions {
            num_layers: 1,
            chi_work: Some(1),
            early_stop: false,
        };
        assert!(matches!(
            build_stack(&mps, opts),
            Err(DisentanglerError::ChiWorkTooSmall { .. })
        ));
    }

    #[test]
    fn single_layer_stack_on_bond_two_state() {
        let mps = Mps::from_statevector(&ghz(5)).unwrap();
        let stack = build_stack(&mps, StackOptions::layers(1)).unwrap();
        assert_eq!(stack.num_layers(), 1);
        assert!(stack.residual_infidelity <= 1e-10);
        assert!(stack.truncation_error <= 1e-20);
    }

    #[test]
    fn empty_stack_residual() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let mps = Mps::from_statevector(&v).unwrap();
        assert_eq!(residual(&mps, &DisentanglerStack::empty(3)).unwrap(), 0.0);
        assert!(matches!(
            residual(&mps, &DisentanglerStack::empty(4)),
            Err(DisentanglerError::QubitMismatch { .. })
        ));
    }

    #[test]
    fn early_stop_on_exact_state() {
        let mps = Mps::from_statevector(&ghz(4)).unwrap();
        let opts = StackOptions {
            num_layers: 5,
            chi_work: None,
            early_stop: true,
        };
        let stack = build_stack(&mps, opts).unwrap();
        assert_eq!(stack.num_layers(), 1);
    }
}
