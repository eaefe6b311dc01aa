//! Dense statevector kernels. Qubit 0 is the most significant index bit.

use crate::numerics::Matrix;

#[inline]
fn mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

pub fn apply_one(state: &mut [f64], n: usize, q: usize, g: &Matrix) {
    let m = mask(n, q);
    let (g00, g01, g10, g11) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    for i in 0..state.len() {
        if i & m == 0 {
            let (a, b) = (state[i], state[i | m]);
            state[i] = g00 * a + g01 * b;
            state[i | m] = g10 * a + g11 * b;
        }
    }
}

/// Applies a 4×4 gate whose basis index is `2·b_qa + b_qb`.
pub fn apply_two(state: &mut [f64], n: usize, qa: usize, qb: usize, g: &Matrix) {
    let (ma, mb) = (mask(n, qa), mask(n, qb));
    let mut entries = [[0.0; 4]; 4];
    for (r, row) in entries.iter_mut().enumerate() {
        for (c, e) in row.iter_mut().enumerate() {
            *e = g.get(r, c);
        }
    }
    for i in 0..state.len() {
        if i & ma == 0 && i & mb == 0 {
            let idx = [i, i | mb, i | ma, i | ma | mb];
            let old = idx.map(|k| state[k]);
            for (r, &k) in idx.iter().enumerate() {
                state[k] = entries[r].iter().zip(&old).map(|(a, b)| a * b).sum();
            }
        }
    }
}

pub fn apply_hadamard(state: &mut [f64], n: usize, q: usize) {
    let m = mask(n, q);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..state.len() {
        if i & m == 0 {
            let (a, b) = (state[i], state[i | m]);
            state[i] = h * (a + b);
            state[i | m] = h * (a - b);
        }
    }
}

pub fn apply_cnot(state: &mut [f64], n: usize, control: usize, target: usize) {
    let (mc, mt) = (mask(n, control), mask(n, target));
    for i in 0..state.len() {
        if i & mc != 0 && i & mt == 0 {
            state.swap(i, i | mt);
        }
    }
}
