//! Fubini-Study geometry of pure states: geodesic distances, the geometric
//! phase fraction, distance to a ground space and discrete path length.
//!
//! All distances are in radians. Overlap magnitudes are clamped to `[0, 1]`
//! before `arccos` so round-off never produces NaN.

use serde::{Deserialize, Serialize};

use crate::backend::QuantumState;
use crate::error::{Error, Result};
use crate::model::GroundSpace;
use crate::state::StateVector;

/// Overlap magnitudes within this of 1 are treated as exactly 1.
pub const OVERLAP_CLAMP_TOL: f64 = 1e-12;

/// Geodesic distance `2·arccos(x)` for an overlap magnitude `x`.
pub fn geodesic_from_overlap(overlap_abs: f64) -> f64 {
    if overlap_abs >= 1.0 - OVERLAP_CLAMP_TOL {
        return 0.0;
    }
    2.0 * overlap_abs.clamp(0.0, 1.0).acos()
}

/// `S0 = 2·arccos|⟨a|b⟩|`, in `[0, π]`.
pub fn geodesic_distance<S: QuantumState>(a: &S, b: &S) -> Result<f64> {
    let ov = a.overlap(b)?.norm();
    Ok(geodesic_from_overlap(ov))
}

/// `sin²(S0/2)` for a given geodesic distance, in `[0, 1]`.
pub fn phase_fraction_from_distance(s0: f64) -> f64 {
    (s0 / 2.0).sin().powi(2).clamp(0.0, 1.0)
}

/// Geometric phase fraction of `current` relative to `initial`.
pub fn geometric_phase_fraction<S: QuantumState>(initial: &S, current: &S) -> Result<f64> {
    Ok(phase_fraction_from_distance(geodesic_distance(initial, current)?))
}

/// `s = sqrt(Σ_k |⟨v_k|ψ⟩|²) = max over normalized ψ_T in the space of |⟨ψ|ψ_T⟩|`.
pub fn overlap_with_target(state: &StateVector, gs: &GroundSpace) -> Result<f64> {
    let mut total = 0.0;
    for v in &gs.basis {
        total += v.inner(state)?.norm_sqr();
    }
    Ok(total.sqrt().clamp(0.0, 1.0))
}

/// Shortest geodesic distance from `state` to any state of the ground space.
pub fn geodesic_to_target(state: &StateVector, gs: &GroundSpace) -> Result<f64> {
    Ok(geodesic_from_overlap(overlap_with_target(state, gs)?))
}

/// `Σ_l S0(ψ_{l−1}, ψ_l)` along an ordered list of states.
pub fn discrete_path_length<S: QuantumState>(states: &[S]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::InvalidInput("path length needs at least 2 states".into()));
    }
    states
        .windows(2)
        .try_fold(0.0, |acc, w| Ok(acc + geodesic_distance(&w[0], &w[1])?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoSample {
    pub s0_from_initial: f64,
    pub gpf: f64,
    pub overlap_s: f64,
    pub gd_to_target: f64,
}

impl GeoSample {
    pub fn measure<S: QuantumState>(initial: &S, current: &S, gs: &GroundSpace) -> Result<Self> {
        let s0 = geodesic_distance(initial, current)?;
        let overlap_s = overlap_with_target(&current.to_dense()?, gs)?;
        Ok(Self {
            s0_from_initial: s0,
            gpf: phase_fraction_from_distance(s0),
            overlap_s,
            gd_to_target: geodesic_from_overlap(overlap_s),
        })
    }
}
