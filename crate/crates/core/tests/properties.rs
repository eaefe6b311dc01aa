mod common;

use mpd_core::circuit::{
    accounting, add_reflection_wrapper, prep_circuit, sim, Circuit, GateOp, StackMeta,
};
use mpd_core::disentangler::{build_layer, build_stack, StackOptions};
use mpd_core::dist::{amplitudes, left_half, mirror, sample_pdf, DistSpec, Grid, GridConvention};
use mpd_core::metrics::{
    classical_fidelity, kl_divergence, meyer_wallach_direct, meyer_wallach_purity,
};
use mpd_core::mps::Mps;
use mpd_core::numerics::{complete_isometry, svd, truncated_svd};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn probabilities(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

fn random_circuit(rng: &mut impl Rng, n: usize, len: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..len {
        let a = rng.random_range(0..n);
        let op = if n == 1 {
            GateOp::Unitary1 {
                qubit: a,
                matrix: random_orthogonal(rng, 2),
            }
        } else {
            let b = (a + rng.random_range(1..n)) % n;
            match rng.random_range(0..4) {
                0 => GateOp::Hadamard(a),
                1 => GateOp::Cnot {
                    control: a,
                    target: b,
                },
                2 => GateOp::Unitary1 {
                    qubit: a,
                    matrix: random_orthogonal(rng, 2),
                },
                _ => GateOp::Unitary2 {
                    qubits: [a, b],
                    matrix: random_orthogonal(rng, 4),
                },
            }
        };
        c.push(op).unwrap();
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12, rank in 1usize..6) {
        let mut rng = rng(seed);
        let k = rank.min(rows).min(cols);
        let m = random_matrix(&mut rng, rows, k).matmul(&random_matrix(&mut rng, k, cols));
        let s = svd(&m).unwrap();
        let scale = m.max_abs().max(1e-300);
        let err = max_abs_diff(&s.reconstruct().to_row_major(), &m.to_row_major());
        prop_assert!(err / scale <= 1e-10, "relative error {err:e}");
        prop_assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.u.column_orthonormality_defect() <= 1e-10);
        prop_assert!(s.vt.row_orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn truncation_conserves_weight(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..10, r in 1usize..10) {
        let mut rng = rng(seed);
        let m = random_matrix(&mut rng, rows, cols);
        let total: f64 = svd(&m).unwrap().s.iter().map(|x| x * x).sum();
        let t = truncated_svd(&m, r).unwrap();
        let kept: f64 = t.s.iter().map(|x| x * x).sum();
        prop_assert!((t.discarded_weight + kept - total).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn mps_round_trip(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = rng(seed);
        let v = random_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        prop_assert!(m.is_left_canonical(1e-10));
        let back = m.to_statevector().unwrap();
        prop_assert!(max_abs_diff(&v, &back) <= 1e-10);
    }

    #[test]
    fn mps_bonds_match_dense_schmidt_ranks(seed in any::<u64>(), n in 3usize..=9) {
        let mut rng = rng(seed);
        let v = random_chi2_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        prop_assert_eq!(m.bond_dims(), schmidt_ranks(&v, n, 1e-6));
    }

    #[test]
    fn truncation_error_monotone_in_chi(seed in any::<u64>(), n in 2usize..=10) {
        let mut rng = rng(seed);
        let v = random_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        let mut prev_sweep = f64::INFINITY;
        let mut prev_trunc = f64::INFINITY;
        for chi in 1..=m.max_bond_dim() {
            let (tm, sweep_err) = Mps::from_statevector_truncated(&v, chi).unwrap();
            prop_assert!(tm.is_left_canonical(1e-10));
            let (tr, trunc_err) = m.truncate(chi).unwrap();
            prop_assert!(tr.is_left_canonical(1e-10));
            prop_assert!(sweep_err <= prev_sweep + 1e-12, "chi {chi}: {sweep_err} > {prev_sweep}");
            prop_assert!(trunc_err <= prev_trunc + 1e-12, "chi {chi}: {trunc_err} > {prev_trunc}");
            prev_sweep = sweep_err;
            prev_trunc = trunc_err;
        }
        prop_assert!(prev_sweep <= 1e-20);
    }

    #[test]
    fn dense_and_mps_simulation_agree(seed in any::<u64>(), n in 1usize..=6, len in 0usize..30) {
        let mut rng = rng(seed);
        let c = random_circuit(&mut rng, n, len);
        let dense = c.simulate().unwrap();
        let norm: f64 = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        let mut zero = vec![0.0; 1 << n];
        zero[0] = 1.0;
        let (m, discarded) = Mps::from_statevector(&zero)
            .unwrap()
            .apply_gates(&c.to_local_gates(), usize::MAX)
            .unwrap();
        prop_assert!(discarded <= 1e-20);
        prop_assert!(m.is_left_canonical(1e-10));
        prop_assert!(max_abs_diff(&dense, &m.to_statevector().unwrap()) <= 1e-10);
    }

    #[test]
    fn chi2_layer_is_exact_and_orthogonal(seed in any::<u64>(), n in 3usize..=10) {
        let mut rng = rng(seed);
        let v = random_chi2_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        let layer = build_layer(&m).unwrap();
        for (_, g) in layer.prep_ops() {
            prop_assert!(g.is_orthogonal(1e-10));
        }
        let mut state = v.clone();
        layer.disentangle_dense(&mut state);
        prop_assert!(1.0 - state[0] * state[0] <= 1e-10);
    }

    #[test]
    fn layer_copies_tensor_columns_exactly(seed in any::<u64>(), n in 3usize..=8) {
        let mut rng = rng(seed);
        let v = random_chi2_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        let layer = build_layer(&m).unwrap();
        let ts = m.tensors();
        let check = |g: &mpd_core::Matrix, t: &mpd_core::mps::SiteTensor| {
            for a in 0..t.left_dim() {
                for s in 0..2 {
                    for r in 0..t.right_dim() {
                        assert_eq!(g.get(2 * a + s, r).to_bits(), t.get(a, s, r).to_bits());
                    }
                }
            }
        };
        check(&layer.first, &ts[n - 1]);
        for (k, g) in layer.middle.iter().enumerate() {
            check(g, &ts[n - 2 - k]);
        }
        for s in 0..2 {
            for r in 0..ts[0].right_dim() {
                prop_assert_eq!(layer.last.get(s, r).to_bits(), ts[0].get(0, s, r).to_bits());
            }
        }
    }

    #[test]
    fn preparation_matches_residual(seed in any::<u64>(), n in 3usize..=9, layers in 1usize..=4) {
        let mut rng = rng(seed);
        let v = random_state(&mut rng, n);
        let m = Mps::from_statevector(&v).unwrap();
        let stack = build_stack(&m, StackOptions::layers(layers)).unwrap();
        let prepared = stack.prepare_dense();
        let overlap: f64 = prepared.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!(((1.0 - overlap * overlap) - stack.residual_infidelity).abs() <= 1e-10);
        let circuit = prep_circuit(&stack).simulate().unwrap();
        prop_assert!(max_abs_diff(&circuit, &prepared) <= 1e-12);
    }

    #[test]
    fn reflection_wrapper_mirrors(seed in any::<u64>(), n in 3usize..=8, len in 0usize..20) {
        let mut rng = rng(seed);
        let inner = random_circuit(&mut rng, n - 1, len);
        let a = inner.simulate().unwrap();
        let out = add_reflection_wrapper(&inner).unwrap().simulate().unwrap();
        let size = 1usize << n;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..size / 2 {
            prop_assert!((out[k] - h * a[k]).abs() <= 1e-12);
        }
        for k in size / 2..size {
            prop_assert!((out[k] - out[size - 1 - k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetric_two_qubit_count(n in 3usize..=12) {
        let grid = Grid::new(-0.5, 0.5, n, GridConvention::Midpoint).unwrap();
        let spec = DistSpec::Normal { mean: 0.0, variance: 0.01 };
        let half = left_half(&sample_pdf(&spec, &grid).unwrap()).unwrap();
        let m = Mps::from_statevector(&amplitudes(&half)).unwrap();
        let stack = build_stack(&m, StackOptions::layers(1)).unwrap();
        let c = add_reflection_wrapper(&prep_circuit(&stack)).unwrap();
        let stats = accounting(&c, StackMeta { n_qubits: n, num_layers: 1, symmetry: true });
        // n − 1 inner qubits: (n − 3) middle gates + 1 first gate, then n − 1 CNOTs
        prop_assert_eq!(stats.two_qubit_gate_count, (n - 3) + 1 + (n - 1));
        prop_assert_eq!(stats.cnot_depth_analytic, 2 * (n - 2) + n - 1);
    }

    #[test]
    fn symmetric_sampling_is_bit_exact(
        half_width in 0.1f64..20.0,
        n in 2usize..=12,
        which in 0usize..3,
        scale in 0.05f64..3.0,
        endpoint in any::<bool>(),
    ) {
        let spec = match which {
            0 => DistSpec::Normal { mean: 0.0, variance: scale * scale },
            1 => DistSpec::Lorentzian { center: 0.0, gamma: scale },
            _ => DistSpec::StudentT { dof: 1.0 + scale },
        };
        let conv = if endpoint { GridConvention::Endpoint } else { GridConvention::Midpoint };
        let grid = Grid::new(-half_width, half_width, n, conv).unwrap();
        let t = sample_pdf(&spec, &grid).unwrap();
        prop_assert!(t.symmetric);
        let len = t.p.len();
        for k in 0..len {
            prop_assert_eq!(t.p[k].to_bits(), t.p[len - 1 - k].to_bits());
        }
        if n >= 3 {
            let back = mirror(&left_half(&t).unwrap(), grid).unwrap();
            prop_assert!(max_abs_diff(&back.p, &t.p) <= 1e-12);
        }
    }

    #[test]
    fn kl_and_fidelity_laws(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = rng(seed);
        let p = probabilities(&random_state(&mut rng, n));
        let q = probabilities(&random_state(&mut rng, n));
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
        let f = classical_fidelity(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - classical_fidelity(&q, &p).unwrap()).abs() <= 1e-15);
        prop_assert!((classical_fidelity(&p, &p).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn meyer_wallach_local_invariance(seed in any::<u64>(), n in 2usize..=10) {
        let mut rng = rng(seed);
        let mut v = random_state(&mut rng, n);
        let before = meyer_wallach_purity(&v).unwrap();
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&before));
        for _ in 0..3 {
            let q = rng.random_range(0..n);
            sim::apply_one(&mut v, n, q, &random_orthogonal(&mut rng, 2));
        }
        prop_assert!((meyer_wallach_purity(&v).unwrap() - before).abs() <= 1e-10);
    }
}

#[test]
fn completion_of_1000_random_isometries() {
    let mut rng = rng(7);
    for i in 0..1000 {
        let (d, k) = [(2, 1), (4, 1), (4, 2), (4, 3)][i % 4];
        let iso = random_isometry(&mut rng, d, k);
        let q = complete_isometry(&iso).unwrap();
        assert!(q.is_orthogonal(1e-10), "case {i}");
        for r in 0..d {
            for c in 0..k {
                assert_eq!(q.get(r, c).to_bits(), iso.get(r, c).to_bits());
            }
        }
    }
}

#[test]
fn meyer_wallach_forms_agree_on_200_states() {
    let mut rng = rng(11);
    for i in 0..200 {
        let n = 2 + i % 9;
        let v = random_state(&mut rng, n);
        let d = meyer_wallach_direct(&v).unwrap();
        let p = meyer_wallach_purity(&v).unwrap();
        assert!((d - p).abs() <= 1e-10, "n {n}: {d} vs {p}");
        assert!((-1e-10..=1.0 + 1e-10).contains(&d));
    }
}

#[test]
fn kl_nonnegative_on_200_states() {
    let mut rng = rng(13);
    for i in 0..200 {
        let n = 1 + i % 10;
        let p = probabilities(&random_state(&mut rng, n));
        let q = probabilities(&random_state(&mut rng, n));
        assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
    }
}
