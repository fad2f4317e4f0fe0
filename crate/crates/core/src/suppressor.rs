//! Fully recurrent suppressor network.
//!
//! Cell layout for `N = 4 + p` cells:
//!
//! ```text
//! index   0 1 2 | 3 .. 3+p-1 | 3+p
//! role    inputs |  hidden    | output
//! input   e ė v̇
//! ```
//!
//! Input cells copy the external signals. Every other cell sums the weighted
//! outputs of all cells from the previous step, `s_j(k+1) = Σ_i w_ji·x_i(k)`,
//! then applies a bipolar sigmoid (hidden) or a linear gain (output). Rows of
//! the weight matrix that belong to input cells are always zero.
//!
//! Training is per episode. The network inputs and the immune error
//! `E(k) = K_D·ė(k) + K_P·e(k)` are treated as fixed data within the episode;
//! `E(k)` is injected as the error of the output cell at every step and
//! propagated backwards through time.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::immune::Gains;

pub const INPUT_CELLS: usize = 3;

/// Sizes and activation constants of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetTopology {
    /// Number of hidden cells `p`.
    pub hidden: usize,
    /// Steepness `T` of the hidden bipolar sigmoid.
    pub steepness: f64,
    /// Linear gain `a` of the output cell.
    pub output_gain: f64,
}

/// Which block of the network a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Input,
    Hidden,
    Output,
}

impl NetTopology {
    pub fn new(hidden: usize, steepness: f64, output_gain: f64) -> Result<Self> {
        let t = NetTopology {
            hidden,
            steepness,
            output_gain,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::domain("p", "hidden cell count must be positive"));
        }
        if !(self.steepness.is_finite() && self.steepness > 0.0) {
            return Err(Error::domain("T", format!("must be > 0, got {}", self.steepness)));
        }
        if !(self.output_gain.is_finite() && self.output_gain > 0.0) {
            return Err(Error::domain("a", format!("must be > 0, got {}", self.output_gain)));
        }
        Ok(())
    }

    /// Total cell count `N = 4 + p`.
    pub fn cells(&self) -> usize {
        INPUT_CELLS + self.hidden + 1
    }

    pub fn output_index(&self) -> usize {
        INPUT_CELLS + self.hidden
    }

    pub fn kind(&self, j: usize) -> CellKind {
        if j < INPUT_CELLS {
            CellKind::Input
        } else if j < self.output_index() {
            CellKind::Hidden
        } else {
            CellKind::Output
        }
    }

    /// Bipolar sigmoid `(1 − e^{−T·s}) / (1 + e^{−T·s})`, which equals `tanh(T·s/2)`.
    #[inline]
    pub fn hidden_activation(&self, s: f64) -> f64 {
        (0.5 * self.steepness * s).tanh()
    }

    /// Activation derivative of cell `j`, expressed through its output `x`.
    #[inline]
    pub fn derivative(&self, kind: CellKind, x: f64) -> f64 {
        match kind {
            CellKind::Input => 0.0,
            CellKind::Hidden => 0.5 * self.steepness * (1.0 - x * x),
            CellKind::Output => self.output_gain,
        }
    }
}

impl Default for NetTopology {
    fn default() -> Self {
        NetTopology {
            hidden: 6,
            steepness: 1.0,
            output_gain: 0.5,
        }
    }
}

/// `N×N` weight matrix; `w[(j, i)]` connects cell `i` at step `k` to cell `j` at `k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetWeights {
    w: DMatrix<f64>,
}

impl NetWeights {
    pub fn zeros(topo: &NetTopology) -> Self {
        let n = topo.cells();
        NetWeights {
            w: DMatrix::zeros(n, n),
        }
    }

    /// Wrap a matrix; input rows must be zero.
    pub fn from_matrix(topo: &NetTopology, w: DMatrix<f64>) -> Result<Self> {
        let n = topo.cells();
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: if w.nrows() != n { w.nrows() } else { w.ncols() },
            });
        }
        if w.rows(0, INPUT_CELLS).iter().any(|&v| v != 0.0) {
            return Err(Error::domain("weights", "input-cell rows must be zero"));
        }
        Ok(NetWeights { w })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn cells(&self) -> usize {
        self.w.nrows()
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.w[(j, i)]
    }

    /// Set a weight. Writes into input rows are ignored.
    pub fn set(&mut self, j: usize, i: usize, value: f64) {
        if j >= INPUT_CELLS {
            self.w[(j, i)] = value;
        }
    }

    fn check(&self, topo: &NetTopology) -> Result<()> {
        if self.cells() != topo.cells() {
            return Err(Error::Dimension {
                expected: topo.cells(),
                actual: self.cells(),
            });
        }
        Ok(())
    }
}

/// Cell outputs `x` and net inputs `s` at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    pub x: DVector<f64>,
    pub s: DVector<f64>,
}

impl NetState {
    pub fn zeros(topo: &NetTopology) -> Self {
        let n = topo.cells();
        NetState {
            x: DVector::zeros(n),
            s: DVector::zeros(n),
        }
    }

    /// Copy of this state with the input cells replaced by `u`.
    pub fn with_inputs(&self, u: [f64; INPUT_CELLS]) -> Self {
        let mut out = self.clone();
        for (j, &v) in u.iter().enumerate() {
            out.x[j] = v;
            out.s[j] = v;
        }
        out
    }
}

/// Advance one step: input cells take `u`, the rest are driven by `prev`.
pub fn forward_step(
    topo: &NetTopology,
    w: &NetWeights,
    prev: &NetState,
    u: [f64; INPUT_CELLS],
) -> Result<NetState> {
    w.check(topo)?;
    if prev.x.len() != topo.cells() {
        return Err(Error::Dimension {
            expected: topo.cells(),
            actual: prev.x.len(),
        });
    }
    let mut s = &w.w * &prev.x;
    let mut x = DVector::zeros(topo.cells());
    for j in 0..topo.cells() {
        match topo.kind(j) {
            CellKind::Input => {
                s[j] = u[j];
                x[j] = u[j];
            }
            CellKind::Hidden => x[j] = topo.hidden_activation(s[j]),
            CellKind::Output => x[j] = topo.output_gain * s[j],
        }
    }
    Ok(NetState { x, s })
}

/// The suppressor voltage carried by the output cell.
pub fn suppressor_output(topo: &NetTopology, state: &NetState) -> f64 {
    state.x[topo.output_index()]
}

/// `E = K_D·ė + K_P·e`.
#[inline]
pub fn immune_error(e: f64, e_dot: f64, g: &Gains) -> f64 {
    g.kd * e_dot + g.kp * e
}

/// `J = ½·Σ E²`.
pub fn cost(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("error series"));
    }
    Ok(0.5 * errors.iter().map(|e| e * e).sum::<f64>())
}

/// Forward pass over a fixed input sequence.
///
/// Returns the states `x(k0) .. x(kf)`; `x(k0)` has zero hidden/output cells
/// and carries `inputs[0]`. The last state's input cells are zero.
pub fn rollout(topo: &NetTopology, w: &NetWeights, inputs: &[[f64; INPUT_CELLS]]) -> Result<Vec<NetState>> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    let mut current = NetState::zeros(topo);
    for u in inputs {
        let fed = current.with_inputs(*u);
        current = forward_step(topo, w, &fed, [0.0; INPUT_CELLS])?;
        states.push(fed);
    }
    states.push(current);
    Ok(states)
}

/// Backward delta recursion with the network's own activation derivatives.
///
/// `states` holds `x(k0) .. x(kf)` and `errors` holds `E(k0+1) .. E(kf)`.
/// The result holds `δ(k0+1) .. δ(kf)`.
pub fn bptt_deltas(
    topo: &NetTopology,
    w: &NetWeights,
    states: &[NetState],
    errors: &[f64],
) -> Result<Vec<DVector<f64>>> {
    bptt_deltas_with(topo, w, states, errors, |kind, x| topo.derivative(kind, x))
}

/// [`bptt_deltas`] with a caller-supplied activation derivative.
pub fn bptt_deltas_with<D>(
    topo: &NetTopology,
    w: &NetWeights,
    states: &[NetState],
    errors: &[f64],
    derivative: D,
) -> Result<Vec<DVector<f64>>>
where
    D: Fn(CellKind, f64) -> f64,
{
    w.check(topo)?;
    if errors.is_empty() {
        return Err(Error::Empty("error series"));
    }
    if states.len() != errors.len() + 1 {
        return Err(Error::Length {
            what: "state trajectory vs error series + 1",
            expected: errors.len() + 1,
            actual: states.len(),
        });
    }
    let n = topo.cells();
    let out = topo.output_index();
    let kinds: Vec<CellKind> = (0..n).map(|j| topo.kind(j)).collect();
    let diag = |state: &NetState| -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|j| derivative(kinds[j], state.x[j])))
    };

    let steps = errors.len();
    let mut deltas = vec![DVector::zeros(n); steps];

    // Terminal step: only the output cell carries error.
    let mut terminal = DVector::zeros(n);
    terminal[out] = derivative(CellKind::Output, states[steps].x[out]) * errors[steps - 1];
    deltas[steps - 1] = terminal;

    let wt = w.w.transpose();
    for idx in (0..steps - 1).rev() {
        // deltas[idx] is δ(k0+1+idx), evaluated at state x(k0+1+idx).
        let mut back = &wt * &deltas[idx + 1];
        back[out] += errors[idx];
        deltas[idx] = diag(&states[idx + 1]).component_mul(&back);
    }
    Ok(deltas)
}

/// `G_ji = Σ_k δ_j(k+1)·x_i(k)`.
pub fn weight_gradient(deltas: &[DVector<f64>], states: &[NetState]) -> Result<DMatrix<f64>> {
    let Some(first) = deltas.first() else {
        return Err(Error::Empty("delta sequence"));
    };
    if states.len() < deltas.len() {
        return Err(Error::Length {
            what: "state trajectory vs delta sequence",
            expected: deltas.len(),
            actual: states.len(),
        });
    }
    let n = first.len();
    let mut g = DMatrix::zeros(n, n);
    for (delta, state) in deltas.iter().zip(states) {
        if delta.len() != n || state.x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: delta.len().max(state.x.len()),
            });
        }
        g.ger(1.0, delta, &state.x, 1.0);
    }
    g.rows_mut(0, INPUT_CELLS.min(n)).fill(0.0);
    Ok(g)
}

/// `W' = W − eta·G`, keeping input rows at zero.
pub fn apply_update(w: &NetWeights, g: &DMatrix<f64>, eta: f64) -> Result<NetWeights> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::domain("eta", format!("learning rate must be >= 0, got {eta}")));
    }
    if g.shape() != w.w.shape() {
        return Err(Error::Dimension {
            expected: w.cells(),
            actual: g.nrows(),
        });
    }
    let mut next = &w.w - g * eta;
    next.rows_mut(0, INPUT_CELLS).fill(0.0);
    Ok(NetWeights { w: next })
}

/// Uniform weights in `[−scale, scale]` for non-input rows; deterministic in `seed`.
pub fn init_weights(topo: &NetTopology, scale: f64, seed: u64) -> Result<NetWeights> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::domain("init_scale", format!("must be >= 0, got {scale}")));
    }
    let mut w = NetWeights::zeros(topo);
    if scale == 0.0 {
        return Ok(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = topo.cells();
    for j in INPUT_CELLS..n {
        for i in 0..n {
            w.w[(j, i)] = rng.gen_range(-scale..=scale);
        }
    }
    Ok(w)
}

/// Per-channel gains applied to `(e, ė, v̇)` before they reach the input cells.
///
/// The raw signals differ by several orders of magnitude (`e` is of order
/// 1e-4 rad under good tracking while `v̇` is of order 10 V/s), and the
/// `v̇` channel closes a loop through the plant input with gain `w/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputScale {
    pub e: f64,
    pub e_dot: f64,
    pub v_dot: f64,
}

impl InputScale {
    pub const IDENTITY: InputScale = InputScale {
        e: 1.0,
        e_dot: 1.0,
        v_dot: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e_scale", self.e), ("e_dot_scale", self.e_dot), ("v_dot_scale", self.v_dot)] {
            if !v.is_finite() {
                return Err(Error::domain(name, "must be finite"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, e: f64, e_dot: f64, v_dot: f64) -> [f64; INPUT_CELLS] {
        [self.e * e, self.e_dot * e_dot, self.v_dot * v_dot]
    }
}

impl Default for InputScale {
    fn default() -> Self {
        InputScale {
            e: 1e3,
            e_dot: 1e2,
            v_dot: 1e-3,
        }
    }
}

/// Closed-loop view of a network: feeds one input vector per control step
/// and records the trajectory needed for BPTT.
#[derive(Debug, Clone)]
pub struct SuppressorRun<'a> {
    topo: &'a NetTopology,
    weights: &'a NetWeights,
    current: NetState,
    states: Vec<NetState>,
}

impl<'a> SuppressorRun<'a> {
    pub fn new(topo: &'a NetTopology, weights: &'a NetWeights) -> Result<Self> {
        weights.check(topo)?;
        Ok(SuppressorRun {
            topo,
            weights,
            current: NetState::zeros(topo),
            states: Vec::new(),
        })
    }

    /// Feed `u(k)` and return the output computed from `x(k)`.
    pub fn feed(&mut self, u: [f64; INPUT_CELLS]) -> Result<f64> {
        let fed = self.current.with_inputs(u);
        self.current = forward_step(self.topo, self.weights, &fed, [0.0; INPUT_CELLS])?;
        self.states.push(fed);
        Ok(suppressor_output(self.topo, &self.current))
    }

    /// Recorded states `x(k0) .. x(kf)`.
    pub fn finish(mut self) -> Vec<NetState> {
        self.states.push(self.current);
        self.states
    }
}

/// Write a checkpoint: header `N p T a`, then `N` rows of `N` weights.
pub fn write_checkpoint<W: Write>(topo: &NetTopology, w: &NetWeights, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {:?} {:?}",
        topo.cells(),
        topo.hidden,
        topo.steepness,
        topo.output_gain
    )?;
    for j in 0..w.cells() {
        let row: Vec<String> = (0..w.cells()).map(|i| format!("{:?}", w.w[(j, i)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<(NetTopology, NetWeights)> {
    let bad = |line: usize, reason: String| Error::Checkpoint { line, reason };
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });

    let (lno, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(bad(lno, format!("expected `N p T a`, got {header:?}")));
    }
    let n: usize = fields[0].parse().map_err(|e| bad(lno, format!("N: {e}")))?;
    let p: usize = fields[1].parse().map_err(|e| bad(lno, format!("p: {e}")))?;
    let t: f64 = fields[2].parse().map_err(|e| bad(lno, format!("T: {e}")))?;
    let a: f64 = fields[3].parse().map_err(|e| bad(lno, format!("a: {e}")))?;
    let topo = NetTopology::new(p, t, a).map_err(|e| bad(lno, e.to_string()))?;
    if topo.cells() != n {
        return Err(bad(lno, format!("N = {n} does not equal 4 + p = {}", topo.cells())));
    }

    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let (lno, row) = lines
            .next()
            .ok_or_else(|| bad(lno + j + 1, format!("missing weight row {j}")))?;
        let row = row?;
        let values: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| bad(lno, format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(bad(lno, format!("expected {n} values, got {}", values.len())));
        }
        for (i, v) in values.into_iter().enumerate() {
            m[(j, i)] = v;
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(bad(lno, "trailing data after weight rows".into()));
    }
    let w = NetWeights::from_matrix(&topo, m).map_err(|e| bad(1, e.to_string()))?;
    Ok((topo, w))
}
