//! Discretizing densities onto `2^n`-point grids.
//!
//! Index `k` of a distribution is the basis state `|k⟩` with qubit 0 as the
//! most significant bit, so the reflection pairing is `k ↔ 2^n − 1 − k`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("failed to read table {path}: {source}")]
    Table {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridConvention {
    /// `x_k = min + (k + 1/2)·(max − min)/2^n`
    #[default]
    Midpoint,
    /// `x_k = min + k·(max − min)/(2^n − 1)`
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n_qubits: usize,
    pub convention: GridConvention,
}

impl Grid {
    pub fn new(
        min: f64,
        max: f64,
        n_qubits: usize,
        convention: GridConvention,
    ) -> Result<Self, DistError> {
        let grid = Grid {
            min,
            max,
            n_qubits,
            convention,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            return Err(DistError::InvalidGrid(format!(
                "need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.n_qubits < 2 {
            return Err(DistError::InvalidGrid(format!(
                "n_qubits must be >= 2, got {}",
                self.n_qubits
            )));
        }
        if self.n_qubits > 30 {
            return Err(DistError::InvalidGrid(format!(
                "n_qubits {} is beyond dense storage",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn point(&self, k: usize) -> f64 {
        let width = self.max - self.min;
        match self.convention {
            GridConvention::Midpoint => self.min + (k as f64 + 0.5) * width / self.len() as f64,
            GridConvention::Endpoint => self.min + k as f64 * width / (self.len() - 1) as f64,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// The `(n−1)`-qubit grid carrying the first `2^{n−1}` points unchanged.
    ///
    /// Midpoint grids cover `[min, center]`. Endpoint grids end at the last
    /// left point, `x_{2^{n−1}−1}`, which is the only choice that keeps the
    /// points identical.
    pub fn left_half(&self) -> Result<Grid, DistError> {
        let max = match self.convention {
            GridConvention::Midpoint => self.center(),
            GridConvention::Endpoint => self.point(self.len() / 2 - 1),
        };
        Grid::new(self.min, max, self.n_qubits - 1, self.convention)
    }
}

/// Density family to discretize. Analytic densities need not be normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Normal {
        mean: f64,
        variance: f64,
    },
    Lorentzian {
        center: f64,
        gamma: f64,
    },
    /// Standard Student's t, centered at 0.
    StudentT {
        dof: f64,
    },
    /// CSV file with one non-negative weight per row.
    Table {
        path: PathBuf,
    },
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), DistError> {
        let bad = |msg: String| Err(DistError::InvalidSpec(msg));
        match *self {
            DistSpec::Normal { mean, variance } => {
                if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
                    return bad(format!(
                        "normal needs finite mean and variance > 0, got ({mean}, {variance})"
                    ));
                }
            }
            DistSpec::Lorentzian { center, gamma } => {
                if !center.is_finite() || !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!(
                        "lorentzian needs finite center and gamma > 0, got ({center}, {gamma})"
                    ));
                }
            }
            DistSpec::StudentT { dof } => {
                if !(dof > 0.0 && dof.is_finite()) {
                    return bad(format!("student_t needs dof > 0, got {dof}"));
                }
            }
            DistSpec::Table { .. } => {}
        }
        Ok(())
    }

    /// Center of an analytic density; `None` for tables.
    pub fn center(&self) -> Option<f64> {
        match *self {
            DistSpec::Normal { mean, .. } => Some(mean),
            DistSpec::Lorentzian { center, .. } => Some(center),
            DistSpec::StudentT { .. } => Some(0.0),
            DistSpec::Table { .. } => None,
        }
    }

    /// Symmetric about the grid center, decided from the spec kind alone.
    pub fn is_symmetric_on(&self, grid: &Grid) -> bool {
        self.center() == Some(grid.center())
    }

    /// Natural default interval: ±5σ, ±5γ, ±10 for Student's t, `[0, 1]` for
    /// tables.
    pub fn default_range(&self) -> (f64, f64) {
        match *self {
            DistSpec::Normal { mean, variance } => {
                let half = 5.0 * variance.sqrt();
                (mean - half, mean + half)
            }
            DistSpec::Lorentzian { center, gamma } => (center - 5.0 * gamma, center + 5.0 * gamma),
            DistSpec::StudentT { .. } => (-10.0, 10.0),
            DistSpec::Table { .. } => (0.0, 1.0),
        }
    }

    /// Unnormalized density at `x`.
    fn density(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, variance } => {
                let z = x - mean;
                (-z * z / (2.0 * variance)).exp()
            }
            DistSpec::Lorentzian { center, gamma } => {
                let z = (x - center) / gamma;
                1.0 / (1.0 + z * z)
            }
            DistSpec::StudentT { dof } => (1.0 + x * x / dof).powf(-0.5 * (dof + 1.0)),
            DistSpec::Table { .. } => unreachable!("tables are not evaluated pointwise"),
        }
    }
}

/// Normalized probability vector on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub grid: Grid,
    pub p: Vec<f64>,
    /// Whether `p_k = p_{2^n−1−k}` may be relied on.
    pub symmetric: bool,
}

impl TargetDistribution {
    /// Builds a distribution from raw non-negative weights (renormalized).
    /// Symmetric inputs are mirrored from their left half so the pairing is
    /// bit-exact.
    pub fn from_weights(grid: Grid, weights: Vec<f64>, symmetric: bool) -> Result<Self, DistError> {
        grid.validate()?;
        if weights.len() != grid.len() {
            return Err(DistError::InvalidSpec(format!(
                "expected {} weights for {} qubits, got {}",
                grid.len(),
                grid.n_qubits,
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(DistError::InvalidSpec(format!(
                "weights must be finite and non-negative, found {bad}"
            )));
        }
        let p = if symmetric {
            let half = grid.len() / 2;
            let mut left = normalize_to(&weights[..half], 0.5)?;
            let mirror: Vec<f64> = left.iter().rev().copied().collect();
            left.extend(mirror);
            left
        } else {
            normalize_to(&weights, 1.0)?
        };
        Ok(TargetDistribution { grid, p, symmetric })
    }

    pub fn n_qubits(&self) -> usize {
        self.grid.n_qubits
    }

    /// Marks the distribution as reflection symmetric and re-mirrors it from
    /// its left half.
    pub fn assume_symmetric(self) -> Result<Self, DistError> {
        TargetDistribution::from_weights(self.grid, self.p, true)
    }
}

/// Scales `w` so it sums to `total`, then sets the last entry to
/// `total − Σ rest` so the sequential sum is exact.
fn normalize_to(w: &[f64], total: f64) -> Result<Vec<f64>, DistError> {
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(DistError::Degenerate(format!("weights sum to {sum}")));
    }
    let mut p: Vec<f64> = w.iter().map(|x| x * total / sum).collect();
    let last = p.len() - 1;
    let rest: f64 = p[..last].iter().sum();
    p[last] = (total - rest).max(0.0);
    Ok(p)
}

/// Reads a table of weights: one value per row, optional `weight` header.
pub fn load_table(path: &Path) -> Result<Vec<f64>, DistError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| DistError::Table {
            path: path.to_path_buf(),
            source,
        })?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DistError::Table {
            path: path.to_path_buf(),
            source,
        })?;
        let field = record.get(0).unwrap_or("");
        if row == 0 && field.eq_ignore_ascii_case("weight") {
            continue;
        }
        if field.is_empty() {
            continue;
        }
        let value: f64 = field.parse().map_err(|_| {
            DistError::InvalidSpec(format!(
                "{}: row {} is not a number: {field:?}",
                path.display(),
                row + 1
            ))
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Discretizes `spec` on `grid`, with `p_k ∝ f(x_k)`.
///
/// Symmetric analytic densities are evaluated once per mirrored pair and
/// copied, so `p_k == p_{2^n−1−k}` holds bit for bit.
pub fn sample_pdf(spec: &DistSpec, grid: &Grid) -> Result<TargetDistribution, DistError> {
    spec.validate()?;
    grid.validate()?;
    if let DistSpec::Table { path } = spec {
        let weights = load_table(path)?;
        return TargetDistribution::from_weights(*grid, weights, false);
    }

    let symmetric = spec.is_symmetric_on(grid);
    let n = grid.len();
    let upto = if symmetric { n / 2 } else { n };
    let mut weights = vec![0.0; n];
    for (k, w) in weights.iter_mut().enumerate().take(upto) {
        let x = grid.point(k);
        let f = spec.density(x);
        if !f.is_finite() {
            return Err(DistError::InvalidSpec(format!(
                "density is not finite at x = {x}"
            )));
        }
        *w = f;
    }
    TargetDistribution::from_weights(*grid, weights, symmetric)
}

/// First `2^{n−1}` entries, renormalized, on the left-half grid.
pub fn left_half(t: &TargetDistribution) -> Result<TargetDistribution, DistError> {
    if t.n_qubits() < 3 {
        return Err(DistError::InvalidGrid(format!(
            "left_half needs n >= 3, got {}",
            t.n_qubits()
        )));
    }
    let half = t.p.len() / 2;
    let slice = &t.p[..half];
    let sum: f64 = slice.iter().sum();
    if sum <= 0.0 {
        return Err(DistError::Degenerate("left half has zero mass".into()));
    }
    let p = if t.symmetric {
        // left half already sums to exactly 1/2
        slice.iter().map(|x| 2.0 * x).collect()
    } else {
        normalize_to(slice, 1.0)?
    };
    Ok(TargetDistribution {
        grid: t.grid.left_half()?,
        p,
        symmetric: false,
    })
}

/// Reflection of a half distribution back onto `full_grid`:
/// `p_k = h_k / 2` for the left half and the mirror image on the right.
pub fn mirror(half: &TargetDistribution, full_grid: Grid) -> Result<TargetDistribution, DistError> {
    if full_grid.n_qubits != half.n_qubits() + 1 {
        return Err(DistError::InvalidGrid(format!(
            "mirror onto {} qubits from a {}-qubit half",
            full_grid.n_qubits,
            half.n_qubits()
        )));
    }
    let mut p: Vec<f64> = half.p.iter().map(|x| 0.5 * x).collect();
    let right: Vec<f64> = p.iter().rev().copied().collect();
    p.extend(right);
    Ok(TargetDistribution {
        grid: full_grid,
        p,
        symmetric: true,
    })
}

/// Amplitude encoding `a_k = √p_k`.
pub fn amplitudes(t: &TargetDistribution) -> Vec<f64> {
    t.p.iter().map(|x| x.sqrt()).collect()
}
