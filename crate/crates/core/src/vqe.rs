//! Energy cost, exact gradients and the Adam loop.

use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_matrix, Circuit, GateMatrix};
use crate::backend::{Backend, QuantumState, SimState};
use crate::error::{Error, Result};
use crate::gates::{adjoint2, adjoint4};
use crate::model::{Expectation, PauliTermList};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            iterations: 200,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.learning_rate > 0.0 && unit(self.beta1) && unit(self.beta2) && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Steps taken so far; the next step uses `t + 1`.
    pub t: u32,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], cfg: &AdamConfig) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for k in 0..params.len() {
        let g = grad[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Runs the whole circuit with an optional angle shift on op `shift.0`
/// (index into `circuit.ops()`).
fn execute<S: QuantumState>(circuit: &Circuit, params: &[f64], mut state: S, shift: Option<(usize, f64)>) -> Result<S> {
    circuit.check_params(params)?;
    for (k, op) in circuit.ops().enumerate() {
        let mut angle = op.angle(params);
        if let Some((idx, delta)) = shift {
            if idx == k {
                angle += delta;
            }
        }
        apply_matrix(&mut state, &op.matrix(angle), &op.qubits)?;
    }
    Ok(state)
}

fn energy_of(state: &SimState, terms: &PauliTermList) -> Result<f64> {
    let e = state.expectation(terms)?;
    if !e.is_finite() {
        return Err(Error::NonFinite("energy".into()));
    }
    Ok(e)
}

/// `⟨ψ(θ)|H|ψ(θ)⟩` for the full circuit.
pub fn cost(circuit: &Circuit, params: &[f64], terms: &PauliTermList, backend: &Backend) -> Result<f64> {
    let state = execute(circuit, params, backend.zero_state(circuit.n_qubits)?, None)?;
    energy_of(&state, terms)
}

/// Energy and its exact gradient from one forward and one reverse sweep
/// on the dense backend.
pub fn value_and_gradient(circuit: &Circuit, params: &[f64], terms: &PauliTermList) -> Result<(f64, Vec<f64>)> {
    let n = circuit.n_qubits;
    let mut psi = execute(circuit, params, StateVector::zero(n)?, None)?;
    let mut lambda = StateVector::from_raw(n, terms.apply(&psi)?);
    let e = psi.inner(&lambda)?.re;
    let mut grad = vec![0.0; circuit.param_count];
    let ops: Vec<_> = circuit.ops().collect();
    for op in ops.into_iter().rev() {
        if let (Some(slot), Some(gen)) = (op.slot, op.generator()) {
            // d/dθ of exp(-iθ/2 G) ψ is (-i/2) G ψ, so dE/dθ = Im⟨λ|Gψ⟩
            let mut mu = psi.clone();
            apply_matrix(&mut mu, &gen, &op.qubits)?;
            grad[slot] += lambda.inner(&mu)?.im;
        }
        let inverse = match op.matrix(op.angle(params)) {
            GateMatrix::One(g) => GateMatrix::One(adjoint2(&g)),
            GateMatrix::Two(g) => GateMatrix::Two(adjoint4(&g)),
        };
        apply_matrix(&mut psi, &inverse, &op.qubits)?;
        apply_matrix(&mut lambda, &inverse, &op.qubits)?;
    }
    if !e.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("energy or gradient".into()));
    }
    Ok((e, grad))
}

pub fn gradient_adjoint(circuit: &Circuit, params: &[f64], terms: &PauliTermList) -> Result<Vec<f64>> {
    Ok(value_and_gradient(circuit, params, terms)?.1)
}

/// Parameter-shift gradient.
///
/// Each occurrence of a slot is shifted by `±π/2` separately and the
/// contributions summed, which stays exact when several gates share one
/// angle (the HVA cost and mixer sub-layers).
pub fn gradient_param_shift(circuit: &Circuit, params: &[f64], terms: &PauliTermList, backend: &Backend) -> Result<Vec<f64>> {
    circuit.check_params(params)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut grad = vec![0.0; circuit.param_count];
    for (k, op) in circuit.ops().enumerate() {
        let Some(slot) = op.slot else { continue };
        if op.generator().is_none() {
            return Err(Error::Unsupported("parameter shift for this gate family"));
        }
        let plus = execute(circuit, params, backend.zero_state(circuit.n_qubits)?, Some((k, half_pi)))?;
        let minus = execute(circuit, params, backend.zero_state(circuit.n_qubits)?, Some((k, -half_pi)))?;
        grad[slot] += 0.5 * (energy_of(&plus, terms)? - energy_of(&minus, terms)?);
    }
    Ok(grad)
}

/// Gradient with the backend's exact method: adjoint on the dense
/// backend, parameter shift on MPS.
pub fn value_and_gradient_on(
    circuit: &Circuit,
    params: &[f64],
    terms: &PauliTermList,
    backend: &Backend,
) -> Result<(f64, Vec<f64>)> {
    match backend {
        Backend::Statevector => value_and_gradient(circuit, params, terms),
        Backend::Mps(_) => Ok((
            cost(circuit, params, terms, backend)?,
            gradient_param_shift(circuit, params, terms, backend)?,
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    /// Energy before the first step followed by the energy after each step.
    pub energy_per_iteration: Vec<f64>,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
}

/// Adam descent on the circuit energy for `cfg.iterations` steps.
pub fn optimize(
    circuit: &Circuit,
    init_params: &[f64],
    terms: &PauliTermList,
    cfg: &AdamConfig,
    backend: &Backend,
) -> Result<OptTrace> {
    cfg.validate()?;
    circuit.check_params(init_params)?;
    let mut params = init_params.to_vec();
    let mut adam = AdamState::new(params.len());
    let mut energies = Vec::with_capacity(cfg.iterations + 1);
    let (mut e, mut grad) = value_and_gradient_on(circuit, &params, terms, backend)?;
    energies.push(e);
    for _ in 0..cfg.iterations {
        adam_step(&mut adam, &mut params, &grad, cfg);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters".into()));
        }
        (e, grad) = value_and_gradient_on(circuit, &params, terms, backend)?;
        energies.push(e);
    }
    Ok(OptTrace {
        energy_per_iteration: energies,
        initial_params: init_params.to_vec(),
        final_params: params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_hea, build_hva, AnsatzKind, GateKind, GateOp};
    use crate::model::{tfim_terms, Boundary, TfimParams};

    fn single_rx() -> Circuit {
        Circuit {
            ansatz: AnsatzKind::Hea,
            n_qubits: 1,
            n_layers: 1,
            prep: vec![],
            layers: vec![vec![GateOp {
                kind: GateKind::RX,
                qubits: vec![0],
                slot: Some(0),
            }]],
            param_count: 1,
        }
    }

    fn z_obs() -> PauliTermList {
        let mut t = PauliTermList::new(1);
        t.push_label(1.0, "Z").unwrap();
        t
    }

    fn tfim(n: usize, j: f64, h: f64) -> PauliTermList {
        tfim_terms(&TfimParams::new(n, j, h, Boundary::Periodic).unwrap())
    }

    #[test]
    fn zero_hva_free_field() {
        let c = build_hva(5, 2).unwrap();
        let e = cost(&c, &[0.0; 4], &tfim(5, 0.0, 1.0), &Backend::Statevector).unwrap();
        assert!((e + 5.0).abs() < 1e-13);
    }

    #[test]
    fn zero_hea_classical() {
        let c = build_hea(4, 1).unwrap();
        let e = cost(&c, &[0.0; 12], &tfim(4, 1.0, 0.0), &Backend::Statevector).unwrap();
        assert!((e + 4.0).abs() < 1e-13);
    }

    #[test]
    fn empty_gradient() {
        let c = build_hva(3, 0).unwrap();
        let g = gradient_adjoint(&c, &[], &tfim(3, 1.0, 1.0)).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn rx_closed_form() {
        let c = single_rx();
        for &t in &[0.0, 0.4, 1.9, -2.5] {
            let g = gradient_param_shift(&c, &[t], &z_obs(), &Backend::Statevector).unwrap();
            assert!((g[0] + t.sin()).abs() < 1e-12);
            let a = gradient_adjoint(&c, &[t], &z_obs()).unwrap();
            assert!((a[0] + t.sin()).abs() < 1e-12);
            let e = cost(&c, &[t], &z_obs(), &Backend::Statevector).unwrap();
            assert!((e - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_direction_has_zero_gradient() {
        // RZ on |0> only changes a global phase
        let mut c = single_rx();
        c.layers[0][0].kind = GateKind::RZ;
        let g = gradient_param_shift(&c, &[0.8], &z_obs(), &Backend::Statevector).unwrap();
        assert!(g[0].abs() < 1e-15);
    }

    #[test]
    fn adam_fixed_values() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(1);
        let mut p = [0.0];
        adam_step(&mut st, &mut p, &[0.0], &cfg);
        assert_eq!(p[0], 0.0);

        let mut st = AdamState::new(1);
        let mut p = [0.0];
        adam_step(&mut st, &mut p, &[1.0], &cfg);
        assert!((p[0] + 0.4999999950).abs() < 1e-10);

        let mut st = AdamState::new(1);
        let mut p = [0.0];
        adam_step(&mut st, &mut p, &[-1.0], &cfg);
        assert!((p[0] - 0.4999999950).abs() < 1e-10);
    }

    #[test]
    fn zero_iterations() {
        let cfg = AdamConfig {
            iterations: 0,
            ..Default::default()
        };
        let tr = optimize(&single_rx(), &[0.3], &z_obs(), &cfg, &Backend::Statevector).unwrap();
        assert_eq!(tr.energy_per_iteration.len(), 1);
        assert_eq!(tr.final_params, vec![0.3]);
    }

    #[test]
    fn toy_converges() {
        let cfg = AdamConfig::default();
        let tr = optimize(&single_rx(), &[0.3], &z_obs(), &cfg, &Backend::Statevector).unwrap();
        assert_eq!(tr.energy_per_iteration.len(), 201);
        let last = *tr.energy_per_iteration.last().unwrap();
        assert!((last + 1.0).abs() < 1e-6, "final {last}");
    }

    #[test]
    fn optimize_is_deterministic() {
        let c = build_hea(3, 1).unwrap();
        let t = tfim(3, 1.0, 1.0);
        let init: Vec<f64> = (0..9).map(|k| 0.37 * k as f64).collect();
        let cfg = AdamConfig {
            iterations: 15,
            ..Default::default()
        };
        let a = optimize(&c, &init, &t, &cfg, &Backend::Statevector).unwrap();
        let b = optimize(&c, &init, &t, &cfg, &Backend::Statevector).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AdamConfig {
            beta1: 1.0,
            ..Default::default()
        };
        assert!(optimize(&single_rx(), &[0.3], &z_obs(), &cfg, &Backend::Statevector).is_err());
    }
}
