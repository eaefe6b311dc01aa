//! Accuracy and entanglement figures for prepared states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::GateStats;

/// Lower clamp applied to `q_k` before taking logarithms.
pub const KL_FLOOR: f64 = 1e-300;

const SUM_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-9;

/// Largest qubit count accepted by the quadratic-cost direct evaluation.
pub const MEYER_WALLACH_DIRECT_MAX_QUBITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),
    #[error("state length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("{n} qubits is too many for the direct Meyer-Wallach formula (max {max})")]
    TooManyQubits { n: usize, max: usize },
}

fn check_probability(q: &[f64]) -> Result<(), MetricsError> {
    if let Some(x) = q.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(MetricsError::InvalidProbability(format!("entry {x}")));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(MetricsError::InvalidProbability(format!("sums to {sum}")));
    }
    Ok(())
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<(), MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    check_probability(p)?;
    check_probability(q)
}

/// `Σ p_k ln(p_k / q_k)` over `p_k > 0`, natural log, `q_k` clamped at
/// [`KL_FLOOR`].
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    check_pair(p, q)?;
    Ok(p.iter()
        .zip(q)
        .filter(|(pk, _)| **pk > 0.0)
        .map(|(pk, qk)| pk * (pk / qk.max(KL_FLOOR)).ln())
        .sum())
}

/// Bhattacharyya fidelity `(Σ √(p_k q_k))²`, clamped to `[0, 1]`.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    check_pair(p, q)?;
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((bc * bc).clamp(0.0, 1.0))
}

fn qubits_of_normalized(v: &[f64]) -> Result<usize, MetricsError> {
    if v.len() < 2 || !v.len().is_power_of_two() {
        return Err(MetricsError::NotPowerOfTwo(v.len()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(MetricsError::Unnormalized(norm));
    }
    Ok(v.len().trailing_zeros() as usize)
}

/// Splits `v` on qubit `j` (0 = most significant) into the components with
/// that bit 0 and 1, each with the bit deleted.
fn split_on_qubit(v: &[f64], n: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
    let bit = 1usize << (n - 1 - j);
    let low_mask = bit - 1;
    let half = v.len() / 2;
    let mut u0 = Vec::with_capacity(half);
    let mut u1 = Vec::with_capacity(half);
    for reduced in 0..half {
        let high = (reduced & !low_mask) << 1;
        let idx = high | (reduced & low_mask);
        u0.push(v[idx]);
        u1.push(v[idx | bit]);
    }
    (u0, u1)
}

/// Meyer-Wallach `Q = (4/n) Σ_j D(ι_j(0)ψ, ι_j(1)ψ)` with
/// `D(u, v) = Σ_{x<y} |u_x v_y − u_y v_x|²`, summed pair by pair.
pub fn meyer_wallach_direct(v: &[f64]) -> Result<f64, MetricsError> {
    let n = qubits_of_normalized(v)?;
    if n > MEYER_WALLACH_DIRECT_MAX_QUBITS {
        return Err(MetricsError::TooManyQubits {
            n,
            max: MEYER_WALLACH_DIRECT_MAX_QUBITS,
        });
    }
    let mut total = 0.0;
    for j in 0..n {
        let (u, w) = split_on_qubit(v, n, j);
        let mut d = 0.0;
        for x in 0..u.len() {
            for y in x + 1..u.len() {
                let m = u[x] * w[y] - u[y] * w[x];
                d += m * m;
            }
        }
        total += d;
    }
    Ok(4.0 * total / n as f64)
}

/// Same measure via single-qubit purities, `Q = 2(1 − (1/n) Σ_j Tr ρ_j²)`.
pub fn meyer_wallach_purity(v: &[f64]) -> Result<f64, MetricsError> {
    let n = qubits_of_normalized(v)?;
    let mut purity_sum = 0.0;
    for j in 0..n {
        let bit = 1usize << (n - 1 - j);
        let (mut r00, mut r11, mut r01) = (0.0, 0.0, 0.0);
        for (idx, a) in v.iter().enumerate() {
            if idx & bit == 0 {
                let b = v[idx | bit];
                r00 += a * a;
                r11 += b * b;
                r01 += a * b;
            }
        }
        purity_sum += r00 * r00 + r11 * r11 + 2.0 * r01 * r01;
    }
    Ok(2.0 * (1.0 - purity_sum / n as f64))
}

/// Figures of merit for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `KL(target ‖ prepared)`, natural log.
    pub kl_divergence: f64,
    pub classical_fidelity: f64,
    /// Meyer-Wallach Q of the prepared state.
    pub meyer_wallach_q: f64,
    /// Meyer-Wallach Q of the target amplitude state.
    pub target_meyer_wallach_q: f64,
    /// Discarded weight of the χ = 2 truncation feeding the first layer.
    pub truncation_error: f64,
    /// Discarded weight while evolving the state at the working bond dim.
    pub work_truncation_error: f64,
    pub residual_infidelity: f64,
    pub gate_stats: GateStats,
}
