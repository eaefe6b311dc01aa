//! Circuit IR, the reflection wrapper, dense simulation and gate accounting.
//!
//! Qubit 0 is the most significant bit of a basis index. In wrapped circuits
//! it is the reflection qubit.

mod export;
pub mod sim;

pub use export::{export_circuit, import_json, ExportFormat, CIRCUIT_FORMAT_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disentangler::{DisentanglerStack, Placement};
use crate::mps::{LocalGate, MpsError, DEFAULT_DENSE_LIMIT};
use crate::numerics::{Matrix, ORTHO_TOL};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit gate addresses qubit {0} twice")]
    RepeatedQubit(usize),
    #[error("embedded matrix is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),
    #[error("embedded matrix must be {expected}x{expected}, got {rows}x{cols}")]
    MatrixShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("reflection wrapper needs an inner circuit on >= 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("circuit document: {0}")]
    Document(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    Hadamard(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    Unitary1 {
        qubit: usize,
        matrix: Matrix,
    },
    /// Basis index of `matrix` is `2·b_{qubits[0]} + b_{qubits[1]}`.
    Unitary2 {
        qubits: [usize; 2],
        matrix: Matrix,
    },
}

impl GateOp {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::Hadamard(q) => vec![*q],
            GateOp::Cnot { control, target } => vec![*control, *target],
            GateOp::Unitary1 { qubit, .. } => vec![*qubit],
            GateOp::Unitary2 { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, GateOp::Cnot { .. } | GateOp::Unitary2 { .. })
    }

    fn shifted(&self, by: usize) -> GateOp {
        match self {
            GateOp::Hadamard(q) => GateOp::Hadamard(q + by),
            GateOp::Cnot { control, target } => GateOp::Cnot {
                control: control + by,
                target: target + by,
            },
            GateOp::Unitary1 { qubit, matrix } => GateOp::Unitary1 {
                qubit: qubit + by,
                matrix: matrix.clone(),
            },
            GateOp::Unitary2 { qubits, matrix } => GateOp::Unitary2 {
                qubits: [qubits[0] + by, qubits[1] + by],
                matrix: matrix.clone(),
            },
        }
    }

    fn validate(&self, n: usize) -> Result<(), CircuitError> {
        let qubits = self.qubits();
        if let Some(&qubit) = qubits.iter().find(|&&q| q >= n) {
            return Err(CircuitError::QubitOutOfRange { qubit, n });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::RepeatedQubit(qubits[0]));
        }
        match self {
            GateOp::Unitary1 { matrix, .. } => check_orthogonal(matrix, 2),
            GateOp::Unitary2 { matrix, .. } => check_orthogonal(matrix, 4),
            _ => Ok(()),
        }
    }
}

fn check_orthogonal(m: &Matrix, dim: usize) -> Result<(), CircuitError> {
    if m.rows() != dim || m.cols() != dim {
        return Err(CircuitError::MatrixShape {
            expected: dim,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let defect = m
        .column_orthonormality_defect()
        .max(m.row_orthonormality_defect());
    if defect > ORTHO_TOL {
        return Err(CircuitError::NotOrthogonal(defect));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn push(&mut self, op: GateOp) -> Result<(), CircuitError> {
        op.validate(self.n_qubits)?;
        self.gates.push(op);
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<(), CircuitError> {
        self.push(GateOp::Hadamard(q))
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<(), CircuitError> {
        self.push(GateOp::Cnot { control, target })
    }

    pub fn simulate(&self) -> Result<Vec<f64>, CircuitError> {
        self.simulate_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Applies the gates in order to `|0…0⟩`.
    pub fn simulate_with_limit(&self, limit: usize) -> Result<Vec<f64>, CircuitError> {
        let n = self.n_qubits;
        if n > limit {
            return Err(CircuitError::DenseLimit { n, limit });
        }
        for op in &self.gates {
            op.validate(n)?;
        }
        let mut state = vec![0.0; 1 << n];
        state[0] = 1.0;
        for op in &self.gates {
            match op {
                GateOp::Hadamard(q) => sim::apply_hadamard(&mut state, n, *q),
                GateOp::Cnot { control, target } => {
                    sim::apply_cnot(&mut state, n, *control, *target)
                }
                GateOp::Unitary1 { qubit, matrix } => sim::apply_one(&mut state, n, *qubit, matrix),
                GateOp::Unitary2 { qubits, matrix } => {
                    sim::apply_two(&mut state, n, qubits[0], qubits[1], matrix)
                }
            }
        }
        Ok(state)
    }

    /// Nearest-neighbour gate list for the MPS backend. Distant two-qubit
    /// gates are routed with SWAPs and swapped back afterwards.
    pub fn to_local_gates(&self) -> Vec<LocalGate> {
        let mut out = Vec::new();
        for op in &self.gates {
            match op {
                GateOp::Hadamard(q) => out.push(LocalGate::One {
                    qubit: *q,
                    matrix: hadamard_matrix(),
                }),
                GateOp::Unitary1 { qubit, matrix } => out.push(LocalGate::One {
                    qubit: *qubit,
                    matrix: matrix.clone(),
                }),
                GateOp::Cnot { control, target } => {
                    push_routed(&mut out, *control, *target, &cnot_matrix())
                }
                GateOp::Unitary2 { qubits, matrix } => {
                    push_routed(&mut out, qubits[0], qubits[1], matrix)
                }
            }
        }
        out
    }
}

pub fn hadamard_matrix() -> Matrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(2, 2, |i, j| if i == 1 && j == 1 { -h } else { h })
}

pub fn cnot_matrix() -> Matrix {
    Matrix::from_fn(4, 4, |i, j| {
        let target = match j {
            2 => 3,
            3 => 2,
            other => other,
        };
        if i == target {
            1.0
        } else {
            0.0
        }
    })
}

fn swap_matrix() -> Matrix {
    Matrix::from_fn(4, 4, |i, j| {
        let target = match j {
            1 => 2,
            2 => 1,
            other => other,
        };
        if i == target {
            1.0
        } else {
            0.0
        }
    })
}

/// Re-expresses a gate on `(b, a)` as one on `(a, b)`.
fn swap_operands(g: &Matrix) -> Matrix {
    let perm = |i: usize| ((i & 1) << 1) | (i >> 1);
    Matrix::from_fn(4, 4, |i, j| g.get(perm(i), perm(j)))
}

fn push_routed(out: &mut Vec<LocalGate>, qa: usize, qb: usize, g: &Matrix) {
    let (lo, hi, ordered) = if qa < qb {
        (qa, qb, g.clone())
    } else {
        (qb, qa, swap_operands(g))
    };
    // move `hi` down next to `lo`
    let swaps: Vec<usize> = (lo + 1..hi).rev().collect();
    for &q in &swaps {
        out.push(LocalGate::Two {
            qubit: q,
            matrix: swap_matrix(),
        });
    }
    out.push(LocalGate::Two {
        qubit: lo,
        matrix: ordered,
    });
    for &q in swaps.iter().rev() {
        out.push(LocalGate::Two {
            qubit: q,
            matrix: swap_matrix(),
        });
    }
}

/// Preparation circuit for `stack`: layer adjoints in reverse build order.
pub fn prep_circuit(stack: &DisentanglerStack) -> Circuit {
    let mut c = Circuit::new(stack.n_qubits);
    for layer in stack.layers.iter().rev() {
        for (placement, g) in layer.prep_ops() {
            let op = match placement {
                Placement::One(q) => GateOp::Unitary1 {
                    qubit: q,
                    matrix: g.clone(),
                },
                Placement::Two(q) => GateOp::Unitary2 {
                    qubits: [q, q + 1],
                    matrix: g.clone(),
                },
            };
            c.gates.push(op);
        }
    }
    c
}

/// Mirrors an `(n−1)`-qubit preparation into an `n`-qubit symmetric one:
/// the inner circuit on qubits `1…n−1`, then `H(0)` and a sequential CNOT
/// fan-out from qubit 0. An inner state `Σ a_x |x⟩` becomes
/// `(1/√2) Σ a_x (|x⟩ + |2^n − 1 − x⟩)`.
pub fn add_reflection_wrapper(inner: &Circuit) -> Result<Circuit, CircuitError> {
    if inner.n_qubits < 2 {
        return Err(CircuitError::TooFewQubits(inner.n_qubits));
    }
    let n = inner.n_qubits + 1;
    let mut c = Circuit::new(n);
    c.gates.extend(inner.gates.iter().map(|g| g.shifted(1)));
    c.h(0)?;
    for t in 1..n {
        c.cx(0, t)?;
    }
    Ok(c)
}

/// Parameters needed by the analytic depth formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackMeta {
    /// Total qubit count, reflection qubit included.
    pub n_qubits: usize,
    pub num_layers: usize,
    pub symmetry: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateStats {
    /// Two CNOTs per MPD two-qubit gate plus the fan-out.
    pub cnot_count_analytic: usize,
    /// `2((n−2) + (L−1))`, plus `n−1` with the reflection wrapper.
    pub cnot_depth_analytic: usize,
    /// Counted from the gate list.
    pub two_qubit_gate_count: usize,
    pub total_gate_count: usize,
    /// ASAP-scheduled depth of the two-qubit gates in the list.
    pub two_qubit_depth: usize,
    /// ASAP-scheduled CNOT depth with each MPD gate weighted as 2 CNOTs.
    pub cnot_depth_scheduled: usize,
}

/// Analytic depth/count formulas from `meta` plus tallies of `c`.
pub fn accounting(c: &Circuit, meta: StackMeta) -> GateStats {
    let n = meta.n_qubits;
    let layers = meta.num_layers;
    let fanout = if meta.symmetry {
        n.saturating_sub(1)
    } else {
        0
    };
    let (mpd_depth, mpd_gates) = if layers == 0 {
        (0, 0)
    } else {
        let chain = if meta.symmetry {
            n.saturating_sub(1)
        } else {
            n
        };
        (
            2 * (n.saturating_sub(2) + layers - 1),
            layers * chain.saturating_sub(1),
        )
    };

    let mut two_qubit_time = vec![0usize; c.n_qubits];
    let mut cnot_time = vec![0usize; c.n_qubits];
    for op in &c.gates {
        let weight = match op {
            GateOp::Cnot { .. } => 1,
            GateOp::Unitary2 { .. } => 2,
            _ => continue,
        };
        let qs = op.qubits();
        let t2 = qs.iter().map(|&q| two_qubit_time[q]).max().unwrap_or(0) + 1;
        let tc = qs.iter().map(|&q| cnot_time[q]).max().unwrap_or(0) + weight;
        for q in qs {
            two_qubit_time[q] = t2;
            cnot_time[q] = tc;
        }
    }

    GateStats {
        cnot_count_analytic: 2 * mpd_gates + fanout,
        cnot_depth_analytic: mpd_depth + fanout,
        two_qubit_gate_count: c.gates.iter().filter(|g| g.is_two_qubit()).count(),
        total_gate_count: c.gates.len(),
        two_qubit_depth: two_qubit_time.into_iter().max().unwrap_or(0),
        cnot_depth_scheduled: cnot_time.into_iter().max().unwrap_or(0),
    }
}
