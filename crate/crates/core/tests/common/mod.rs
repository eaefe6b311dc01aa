#![allow(dead_code)]

use mpd_core::numerics::{svd, Matrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..1usize << n)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    normalize(&mut v);
    v
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random `d × d` orthogonal matrix from the polar factor of a random matrix.
pub fn random_orthogonal(rng: &mut impl Rng, d: usize) -> Matrix {
    let s = svd(&random_matrix(rng, d, d)).unwrap();
    s.u.matmul(&s.vt)
}

/// Random `rows × cols` isometry (orthonormal columns).
pub fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let q = random_orthogonal(rng, rows);
    Matrix::from_fn(rows, cols, |i, j| q.get(i, j))
}

/// Dense contraction of random site tensors with bonds `min(2, 2^i, 2^{n−i})`,
/// normalized. Its Schmidt ranks are at most 2 on every cut.
pub fn random_chi2_state(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let bond = |cut: usize| -> usize { (1usize << cut.min(n - cut)).min(2) };
    // partial[x][a]: amplitude of prefix x with open right bond a
    let mut partial: Vec<Vec<f64>> = vec![vec![1.0]];
    for site in 0..n {
        let (l, r) = (bond(site), bond(site + 1));
        let t: Vec<f64> = (0..l * 2 * r)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut next = Vec::with_capacity(partial.len() * 2);
        for prefix in &partial {
            for s in 0..2 {
                let mut row = vec![0.0; r];
                for (a, &pa) in prefix.iter().enumerate() {
                    for (b, out) in row.iter_mut().enumerate() {
                        *out += pa * t[(a * 2 + s) * r + b];
                    }
                }
                next.push(row);
            }
        }
        partial = next;
    }
    let mut v: Vec<f64> = partial.into_iter().map(|row| row[0]).collect();
    normalize(&mut v);
    v
}

/// Schmidt coefficients of `v` across the cut after the first `k` qubits,
/// from the eigenvalues of the reduced density matrix. Independent of the
/// crate's SVD; values below ~1e-7 are eigenvalue noise.
pub fn schmidt_values(v: &[f64], n: usize, k: usize) -> Vec<f64> {
    let rows = 1usize << k;
    let cols = 1usize << (n - k);
    let m = DMatrix::from_row_slice(rows, cols, v);
    let rho = if rows <= cols {
        &m * m.transpose()
    } else {
        m.transpose() * &m
    };
    let eig = SymmetricEigen::new(rho);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Schmidt ranks counting coefficients above `tol` relative to the largest.
/// Use `tol >= 1e-6`.
pub fn schmidt_ranks(v: &[f64], n: usize, tol: f64) -> Vec<usize> {
    (1..n)
        .map(|k| {
            let s = schmidt_values(v, n, k);
            s.iter().filter(|&&x| x > tol * s[0]).count()
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Distance up to a global sign.
pub fn sign_free_diff(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    if dot < 0.0 {
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        max_abs_diff(a, &neg)
    } else {
        max_abs_diff(a, b)
    }
}
