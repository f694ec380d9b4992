use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use entgeo::backend::QuantumState;
use entgeo::experiment::{layer_sweep, stepwise_deltas, SweepSettings};
use entgeo::gates::{cnot, hadamard, kron, rx, ry, rz, rzz, Mat2, Mat4};
use entgeo::geometry::{geodesic_distance, geodesic_to_target, geometric_phase_fraction, overlap_with_target};
use entgeo::model::{ground_space, DEFAULT_DEGENERACY_TOL};
use entgeo::vqe::{cost, gradient_adjoint, gradient_param_shift};
use entgeo::{
    build, tfim_terms, AnsatzKind, Backend, Boundary, LogBase, MpsConfig, MpsState, Stage, StateVector, TfimParams, C64,
};

#[derive(Debug, Clone)]
enum Gate {
    One(u8, usize, f64),
    Two(u8, usize, usize, f64),
}

fn one_q(kind: u8, theta: f64) -> Mat2 {
    match kind % 4 {
        0 => rx(theta),
        1 => ry(theta),
        2 => rz(theta),
        _ => hadamard(),
    }
}

fn two_q(kind: u8, theta: f64) -> Mat4 {
    match kind % 3 {
        0 => rzz(theta),
        1 => cnot(),
        _ => kron(&ry(theta), &rx(0.5 * theta)),
    }
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0u8..4, 0..n, -PI..PI).prop_map(|(k, q, t)| Gate::One(k, q, t)),
        (0u8..3, 0..n, 1..n, -PI..PI).prop_map(move |(k, q, d, t)| Gate::Two(k, q, (q + d) % n, t)),
    ]
}

fn apply<S: QuantumState>(state: &mut S, gates: &[Gate]) {
    for g in gates {
        match *g {
            Gate::One(k, q, t) => state.apply_1q(&one_q(k, t), q).unwrap(),
            Gate::Two(k, a, b, t) => state.apply_2q(&two_q(k, t), a, b).unwrap(),
        }
    }
}

fn random_state(n: usize, gates: &[Gate]) -> StateVector {
    let mut s = StateVector::zero(n).unwrap();
    for q in 0..n {
        s.apply_1q(&hadamard(), q).unwrap();
    }
    apply(&mut s, gates);
    s
}

/// `−Σ λ ln λ` of the leading `k`-qubit block, via eigenvalues of `ψψ†`
/// with `ψ` reshaped to `2^k × 2^(N−k)`.
fn entropy_oracle(s: &StateVector, k: usize) -> f64 {
    let n = s.n_qubits();
    let (r, c) = (1 << k, 1 << (n - k));
    let m = DMatrix::from_fn(r, c, |i, j| s.amplitudes()[i * c + j]);
    let rho = &m * m.adjoint();
    rho.symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|&l| -l * l.ln())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(gates in prop::collection::vec(gate_strategy(5), 0..40)) {
        let s = random_state(5, &gates);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_gate_equals_two_single_gates(
        gates in prop::collection::vec(gate_strategy(4), 0..10),
        a in 0u8..4, b in 0u8..4, ta in -PI..PI, tb in -PI..PI, q in 0usize..4, d in 1usize..4,
    ) {
        let p = (q + d) % 4;
        let base = random_state(4, &gates);
        let mut joint = base.clone();
        joint.apply_2q(&kron(&one_q(a, ta), &one_q(b, tb)), q, p).unwrap();
        let mut split = base;
        split.apply_1q(&one_q(a, ta), q).unwrap();
        split.apply_1q(&one_q(b, tb), p).unwrap();
        for (x, y) in joint.amplitudes().iter().zip(split.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn complementary_blocks_have_equal_entropy(gates in prop::collection::vec(gate_strategy(6), 0..30), k in 1usize..6) {
        let s = random_state(6, &gates);
        let lead = s.block_entropy(k, LogBase::E).unwrap();
        let trail = s.reduced_density_trailing(6 - k).unwrap().von_neumann_entropy(LogBase::E).unwrap();
        prop_assert!((lead - trail).abs() < 1e-10);
        prop_assert!((lead - entropy_oracle(&s, k)).abs() < 1e-10);
        prop_assert!(lead <= (k.min(6 - k) as f64) * 2f64.ln() + 1e-12);
    }

    #[test]
    fn diagnostics_ignore_global_phase(gates in prop::collection::vec(gate_strategy(4), 0..20), phi in -PI..PI) {
        let gs = ground_space(&tfim_terms(&TfimParams::new(4, 1.0, 1.0, Boundary::Periodic).unwrap()).dense_matrix().unwrap(), DEFAULT_DEGENERACY_TOL).unwrap();
        let s = random_state(4, &gates);
        let mut t = s.clone();
        t.scale(C64::from_polar(1.0, phi));
        let r = StateVector::zero(4).unwrap();
        prop_assert!((s.block_entropy(2, LogBase::E).unwrap() - t.block_entropy(2, LogBase::E).unwrap()).abs() < 1e-12);
        prop_assert!((geodesic_to_target(&s, &gs).unwrap() - geodesic_to_target(&t, &gs).unwrap()).abs() < 1e-10);
        prop_assert!((geometric_phase_fraction(&r, &s).unwrap() - geometric_phase_fraction(&r, &t).unwrap()).abs() < 1e-12);
        prop_assert!(geodesic_distance(&s, &t).unwrap() == 0.0);
    }

    /// The projector overlap is the maximum over the target space: no random
    /// normalized combination beats it, and the projected state attains it.
    #[test]
    fn projector_overlap_is_the_maximum(gates in prop::collection::vec(gate_strategy(4), 0..20), coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2)) {
        let h = tfim_terms(&TfimParams::new(4, 1.0, 0.0, Boundary::Periodic).unwrap()).dense_matrix().unwrap();
        let gs = ground_space(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        prop_assert_eq!(gs.basis.len(), 2);
        let s = random_state(4, &gates);
        let best = overlap_with_target(&s, &gs).unwrap();
        let combo = |c: &[C64]| {
            let mut amps = vec![C64::new(0.0, 0.0); 16];
            for (ck, v) in c.iter().zip(&gs.basis) {
                for (a, b) in amps.iter_mut().zip(v.amplitudes()) {
                    *a += ck * b;
                }
            }
            StateVector::from_amplitudes(amps)
        };
        let c: Vec<C64> = coeffs.iter().map(|&(re, im)| C64::new(re, im)).collect();
        if let Ok(t) = combo(&c) {
            prop_assert!(t.inner(&s).unwrap().norm() <= best + 1e-12);
        }
        let proj: Vec<C64> = gs.basis.iter().map(|v| v.inner(&s).unwrap()).collect();
        if let Ok(t) = combo(&proj) {
            prop_assert!((t.inner(&s).unwrap().norm() - best).abs() < 1e-12);
        }
    }
}

#[test]
fn mps_tracks_dense_after_random_gates() {
    let cfg = MpsConfig {
        chi_max: 8,
        svd_cutoff: 1e-12,
    };
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..8 {
        let gates = prop::collection::vec(gate_strategy(6), 50)
            .new_tree(&mut runner)
            .unwrap()
            .current();
        let dense = random_state(6, &gates);
        let mut mps = MpsState::zero(6, cfg).unwrap();
        for q in 0..6 {
            mps.apply_1q(&hadamard(), q).unwrap();
        }
        apply(&mut mps, &gates);
        let fid = mps.to_statevector().unwrap().inner(&dense).unwrap().norm_sqr();
        assert!((1.0 - fid).abs() < 1e-10, "fidelity {fid}");
        for cut in 1..6 {
            let e = mps.block_entropy(cut, LogBase::E).unwrap();
            assert!((e - entropy_oracle(&dense, cut)).abs() < 1e-8);
        }
        assert!(mps.bond_dims().iter().all(|&d| d <= 8));
    }
}

#[test]
fn three_gradients_agree() {
    let terms = tfim_terms(&TfimParams::new(4, 1.0, 0.7, Boundary::Periodic).unwrap());
    for kind in [AnsatzKind::Hva, AnsatzKind::Hea] {
        let c = build(kind, 4, 2).unwrap();
        let params: Vec<f64> = (0..c.param_count).map(|i| (1.7 * i as f64 + 0.3).sin() * PI).collect();
        let adj = gradient_adjoint(&c, &params, &terms).unwrap();
        let shift = gradient_param_shift(&c, &params, &terms, &Backend::Statevector).unwrap();
        let mps = gradient_param_shift(&c, &params, &terms, &Backend::Mps(MpsConfig::lossless(4))).unwrap();
        let step = 1e-5;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += step;
            let up = cost(&c, &p, &terms, &Backend::Statevector).unwrap();
            p[i] -= 2.0 * step;
            let down = cost(&c, &p, &terms, &Backend::Statevector).unwrap();
            let fd = (up - down) / (2.0 * step);
            assert!((adj[i] - shift[i]).abs() < 1e-10, "{kind} slot {i}");
            assert!((adj[i] - mps[i]).abs() < 1e-9, "{kind} slot {i}");
            assert!((adj[i] - fd).abs() < 1e-6, "{kind} slot {i}");
        }
    }
}

#[test]
fn energy_respects_variational_bound() {
    let p = TfimParams::new(6, 1.0, 1.0, Boundary::Periodic).unwrap();
    let terms = tfim_terms(&p);
    let e0 = ground_space(&terms.dense_matrix().unwrap(), DEFAULT_DEGENERACY_TOL)
        .unwrap()
        .energy;
    for kind in [AnsatzKind::Hva, AnsatzKind::Hea] {
        let c = build(kind, 6, 3).unwrap();
        for seed in 0..20u64 {
            let params: Vec<f64> = (0..c.param_count)
                .map(|i| ((seed * 31 + i as u64) as f64 * 0.77).cos() * PI)
                .collect();
            assert!(cost(&c, &params, &terms, &Backend::Statevector).unwrap() >= e0 - 1e-10);
        }
    }
}

/// Every record of a sweep equals a from-scratch recomputation of the
/// prefix state with dense linear algebra.
#[test]
fn layer_sweep_matches_recomputation() {
    let p = TfimParams::new(6, 1.0, 1.0, Boundary::Periodic).unwrap();
    let terms = tfim_terms(&p);
    let h = terms.dense_matrix().unwrap();
    let gs = ground_space(&h, DEFAULT_DEGENERACY_TOL).unwrap();
    for kind in [AnsatzKind::Hva, AnsatzKind::Hea] {
        let c = build(kind, 6, 4).unwrap();
        let params: Vec<f64> = (0..c.param_count).map(|i| (0.9 * i as f64 + 0.1).sin() * 2.0).collect();
        let settings = SweepSettings::balanced(6, LogBase::E);
        let dense = layer_sweep(
            &c,
            &params,
            &gs,
            &terms,
            settings,
            StateVector::zero(6).unwrap(),
            0,
            Stage::Init,
        )
        .unwrap();
        let mps = layer_sweep(
            &c,
            &params,
            &gs,
            &terms,
            settings,
            MpsState::zero(6, MpsConfig::lossless(6)).unwrap(),
            0,
            Stage::Init,
        )
        .unwrap();
        assert_eq!(dense.len(), 5);
        let prep = c.run_prefix_on(StateVector::zero(6).unwrap(), &params, 0).unwrap();
        for (l, (rd, rm)) in dense.iter().zip(&mps).enumerate() {
            let psi = c.run_prefix_on(StateVector::zero(6).unwrap(), &params, l).unwrap();
            let v = DMatrix::from_column_slice(64, 1, psi.amplitudes());
            let energy = (v.adjoint() * &h * &v)[(0, 0)].re;
            let s_target: f64 = gs.basis.iter().map(|b| b.inner(&psi).unwrap().norm_sqr()).sum::<f64>().sqrt();
            let gd = 2.0 * s_target.min(1.0).acos();
            let gpf = 1.0 - prep.inner(&psi).unwrap().norm_sqr();
            let entropy = entropy_oracle(&psi, 3);
            for r in [rd, rm] {
                assert_eq!(r.layer, l);
                assert!((r.energy - energy).abs() < 1e-10);
                assert!((r.gd - gd).abs() < 1e-10);
                assert!((r.gpf - gpf).abs() < 1e-10);
                assert!((r.entropy_sa - entropy).abs() < 1e-8);
            }
            assert!((rd.entropy_sa - entropy).abs() < 1e-10);
        }
        let (deltas, diag) = stepwise_deltas(&dense);
        assert!(diag.is_empty());
        let sum: f64 = deltas.iter().map(|d| d.d_entropy).sum();
        assert!((sum - (dense[4].entropy_sa - dense[0].entropy_sa)).abs() < 1e-12);
        let sum: f64 = deltas.iter().map(|d| d.d_gd).sum();
        assert!((sum - (dense[4].gd - dense[0].gd)).abs() < 1e-12);
        let sum: f64 = deltas.iter().map(|d| d.d_gpf).sum();
        assert!((sum - (dense[4].gpf - dense[0].gpf)).abs() < 1e-12);
    }
}

#[test]
fn circuit_json_matches_golden() {
    let golden = include_str!("fixtures/hva_n4_l1.json");
    assert_eq!(
        build(AnsatzKind::Hva, 4, 1).unwrap().to_json().unwrap().trim_end(),
        golden.trim_end()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = entgeo::ExperimentConfig::new(AnsatzKind::Hea, 4, 3);
    cfg.trials = 12;
    cfg.adam.iterations = 10;
    cfg.backend = entgeo::BackendKind::Mps;
    let one = entgeo::experiment::run_experiment(&cfg, Some(1)).unwrap();
    let four = entgeo::experiment::run_experiment(&cfg, Some(4)).unwrap();
    assert_eq!(one.layers, four.layers);
    assert_eq!(one.training, four.training);
    assert_eq!(one.deltas, four.deltas);
}
