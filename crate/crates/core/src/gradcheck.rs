//! Finite-difference check of the BPTT weight gradient.
//!
//! With the input and error sequences held fixed, the delta recursion is the
//! exact gradient of the teacher-forced objective
//!
//! ```text
//! Φ(W) = Σ_{k=k0+1}^{kf} E(k) · y(k; W)
//! ```
//!
//! where `y(k)` is the output cell at step `k`. The oracle here evaluates Φ
//! with forward passes only and differentiates it by central differences, so
//! it shares no code with the backward pass.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::suppressor::{
    bptt_deltas_with, init_weights, rollout, suppressor_output, weight_gradient, CellKind, NetTopology, NetWeights,
    INPUT_CELLS,
};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Elements with smaller analytic magnitude are skipped by the relative check.
pub const GRAD_FLOOR: f64 = 1e-8;

/// A teacher-forced episode: inputs `u(k0..kf−1)` and errors `E(k0+1..kf)`.
#[derive(Debug, Clone)]
pub struct TeacherForced {
    pub inputs: Vec<[f64; INPUT_CELLS]>,
    pub errors: Vec<f64>,
}

impl TeacherForced {
    /// Uniform random inputs and errors in [−1, 1].
    pub fn random(steps: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let inputs = (0..steps)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let errors = (0..steps).map(|_| rng.gen_range(-1.0..1.0)).collect();
        TeacherForced { inputs, errors }
    }
}

/// Φ(W) evaluated by a plain forward pass.
pub fn objective(topo: &NetTopology, w: &NetWeights, episode: &TeacherForced) -> Result<f64> {
    if episode.inputs.len() != episode.errors.len() {
        return Err(Error::Length {
            what: "inputs vs errors",
            expected: episode.inputs.len(),
            actual: episode.errors.len(),
        });
    }
    let states = rollout(topo, w, &episode.inputs)?;
    Ok(states[1..]
        .iter()
        .zip(&episode.errors)
        .map(|(st, e)| e * suppressor_output(topo, st))
        .sum())
}

/// Central-difference gradient of Φ over every non-input weight.
pub fn finite_difference_gradient(
    topo: &NetTopology,
    w: &NetWeights,
    episode: &TeacherForced,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = topo.cells();
    let mut g = DMatrix::zeros(n, n);
    for j in INPUT_CELLS..n {
        for i in 0..n {
            let mut plus = w.clone();
            plus.set(j, i, w.get(j, i) + h);
            let mut minus = w.clone();
            minus.set(j, i, w.get(j, i) - h);
            g[(j, i)] = (objective(topo, &plus, episode)? - objective(topo, &minus, episode)?) / (2.0 * h);
        }
    }
    Ok(g)
}

/// Richardson extrapolation of two central differences, `(4·D(h/2) − D(h)) / 3`.
///
/// Fourth order in `h`, so a larger step keeps round-off in Φ small.
pub fn richardson_gradient(topo: &NetTopology, w: &NetWeights, episode: &TeacherForced, h: f64) -> Result<DMatrix<f64>> {
    let coarse = finite_difference_gradient(topo, w, episode, h)?;
    let fine = finite_difference_gradient(topo, w, episode, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// BPTT gradient of Φ.
pub fn analytic_gradient(topo: &NetTopology, w: &NetWeights, episode: &TeacherForced) -> Result<DMatrix<f64>> {
    analytic_gradient_with(topo, w, episode, |kind, x| topo.derivative(kind, x))
}

/// [`analytic_gradient`] with a caller-supplied activation derivative.
pub fn analytic_gradient_with<D>(
    topo: &NetTopology,
    w: &NetWeights,
    episode: &TeacherForced,
    derivative: D,
) -> Result<DMatrix<f64>>
where
    D: Fn(CellKind, f64) -> f64,
{
    let states = rollout(topo, w, &episode.inputs)?;
    let deltas = bptt_deltas_with(topo, w, &states, &episode.errors, derivative)?;
    weight_gradient(&deltas, &states)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest element-wise `|g − fd| / max(|g|, |fd|)` over checked elements.
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compare two gradients element-wise, skipping elements with `|g| <= floor`.
pub fn compare_gradients(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>, floor: f64) -> GradCheckReport {
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (g, fd) in analytic.iter().zip(numeric.iter()) {
        if g.abs() <= floor {
            report.skipped += 1;
            continue;
        }
        let rel = (g - fd).abs() / g.abs().max(fd.abs());
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    report
}

/// Random network and episode for a given seed, as used by the check command.
pub fn random_case(topo: &NetTopology, steps: usize, seed: u64, weight_scale: f64) -> Result<(NetWeights, TeacherForced)> {
    let w = init_weights(topo, weight_scale, seed)?;
    Ok((w, TeacherForced::random(steps, seed)))
}

/// Full check of [`analytic_gradient`] against the finite-difference oracle.
pub fn check(topo: &NetTopology, w: &NetWeights, episode: &TeacherForced) -> Result<GradCheckReport> {
    check_with(topo, w, episode, |kind, x| topo.derivative(kind, x))
}

/// [`check`] against a caller-supplied activation derivative.
pub fn check_with<D>(topo: &NetTopology, w: &NetWeights, episode: &TeacherForced, derivative: D) -> Result<GradCheckReport>
where
    D: Fn(CellKind, f64) -> f64,
{
    let analytic = analytic_gradient_with(topo, w, episode, derivative)?;
    let numeric = finite_difference_gradient(topo, w, episode, FD_STEP)?;
    Ok(compare_gradients(&analytic, &numeric, GRAD_FLOOR))
}
