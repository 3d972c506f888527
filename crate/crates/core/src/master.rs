//! Lindblad dynamics with two-photon absorption, and process-level
//! characterization of the resulting gate.
//!
//! The generator is
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})
//! ```
//!
//! acting on `vec(ρ)` (column-major) as a `d²×d²` superoperator. The problem
//! is autonomous and linear, so one classical RK4 step of size `h` is exactly
//! the matrix polynomial `S = Σ_{k≤4} (h𝓛)^k/k!`. Integration applies `S^n`,
//! formed by repeated squaring, between a fixed set of checkpoints. The
//! result is the same fixed-step RK4 trajectory, bit-reproducible, without
//! paying for millions of individual steps when absorption is strong.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::curve::{ExperimentCurve, PlotHints};
use crate::error::{Error, Result};
use crate::fock::{
    self, CMatrix, CVector, DensityMatrix, FockBasis, OperatorMatrix, C64, I, ONE, TRACE_TOL,
};
use crate::zeno::{self, CoupledModePair};

/// Stability requirement: `dt · max(‖H‖, γ‖L†L‖) ≤ STEP_FACTOR`.
pub const STEP_FACTOR: f64 = 0.01;
/// Default step as a fraction of the bound. RK4 is not positivity
/// preserving, and at the full bound its truncation error pushes the zero
/// eigenvalues of the absorbed state to about −1e-9; steps are almost free
/// because the step map is raised to a power by squaring.
pub const DEFAULT_STEP_FRACTION: f64 = 0.2;
/// Number of intermediate states checked for density-matrix invariants.
pub const CHECKPOINTS: usize = 10;
/// Largest max-element change tolerated when the step count is doubled.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Jump operator with a nonnegative rate.
#[derive(Clone, Debug)]
pub struct LindbladChannel {
    jump: OperatorMatrix,
    rate: f64,
}

impl LindbladChannel {
    pub fn new(jump: OperatorMatrix, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!(
                "channel rate must be nonnegative, got {rate}"
            )));
        }
        Ok(LindbladChannel { jump, rate })
    }

    pub fn jump(&self) -> &OperatorMatrix {
        &self.jump
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Hamiltonian, dissipators, duration and step size of one run.
#[derive(Clone, Debug)]
pub struct MasterEquationProblem {
    hamiltonian: OperatorMatrix,
    channels: Vec<LindbladChannel>,
    t_final: f64,
    steps: usize,
}

impl MasterEquationProblem {
    /// Builds a problem whose step does not exceed `dt`. The actual step is
    /// `t_final / ceil(t_final / dt)` so the run ends exactly at `t_final`.
    pub fn new(
        hamiltonian: OperatorMatrix,
        channels: Vec<LindbladChannel>,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        let dev = hamiltonian.hermitian_deviation();
        if dev > fock::OPERATOR_TOL {
            return Err(Error::invariant(
                "hamiltonian hermitian",
                format!("max |H - H†| = {dev:e}"),
            ));
        }
        for ch in &channels {
            if !ch.jump.basis().same_space(hamiltonian.basis()) {
                return Err(Error::BasisMismatch);
            }
        }
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::invalid(format!(
                "duration must be finite and nonnegative, got {t_final}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("step must be positive, got {dt}")));
        }
        let bound = stability_bound(&hamiltonian, &channels);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::invariant(
                "integration step bound",
                format!("dt = {dt:e} exceeds {STEP_FACTOR}/max(‖H‖, γ‖L†L‖) = {bound:e}"),
            ));
        }
        let steps = if t_final == 0.0 {
            0
        } else {
            (t_final / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
        };
        Ok(MasterEquationProblem {
            hamiltonian,
            channels,
            t_final,
            steps,
        })
    }

    /// Uses `DEFAULT_STEP_FRACTION` of the stability bound.
    pub fn with_max_step(
        hamiltonian: OperatorMatrix,
        channels: Vec<LindbladChannel>,
        t_final: f64,
    ) -> Result<Self> {
        let bound = stability_bound(&hamiltonian, &channels);
        let dt = if bound.is_finite() {
            bound * DEFAULT_STEP_FRACTION
        } else {
            t_final.max(1.0)
        };
        Self::new(hamiltonian, channels, t_final, dt)
    }

    /// Same problem with twice as many steps.
    pub fn refined(&self) -> Self {
        MasterEquationProblem {
            steps: self.steps * 2,
            ..self.clone()
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.hamiltonian.basis()
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[LindbladChannel] {
        &self.channels
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step actually taken.
    pub fn dt(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.t_final / self.steps as f64
        }
    }

    /// Superoperator `𝓛` acting on column-major `vec(ρ)`.
    pub fn liouvillian(&self) -> CMatrix {
        let d = self.basis().dim();
        let id = CMatrix::identity(d, d);
        // H_eff = H − (i/2) Σ γ L†L
        let mut heff = self.hamiltonian.matrix().clone();
        for ch in &self.channels {
            let l = ch.jump.matrix();
            heff -= (l.adjoint() * l) * (I * (0.5 * ch.rate));
        }
        let mut sup = id.kronecker(&heff) * (-I) + heff.conjugate().kronecker(&id) * I;
        for ch in &self.channels {
            let l = ch.jump.matrix();
            sup += l.conjugate().kronecker(l) * C64::from(ch.rate);
        }
        sup
    }

    /// One classical RK4 step of the linear system, as a matrix.
    pub fn rk4_step_map(&self) -> CMatrix {
        let n = self.basis().dim().pow(2);
        let hl = self.liouvillian() * C64::from(self.dt());
        let id = CMatrix::identity(n, n);
        // Horner form of I + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24
        let mut acc = &id + &hl * C64::from(0.25);
        acc = &id + &hl * acc * C64::from(1.0 / 3.0);
        acc = &id + &hl * acc * C64::from(0.5);
        &id + &hl * acc
    }

    /// Evolves any operator (not necessarily a state) over the full duration.
    pub fn propagate(&self, op: &CMatrix) -> Result<CMatrix> {
        let d = self.basis().dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.nrows(),
            });
        }
        let map = matrix_power(&self.rk4_step_map(), self.steps);
        Ok(unvec(&(map * vec(op)), d))
    }
}

/// `STEP_FACTOR / max(‖H‖, max_k γ_k‖L_k†L_k‖)`; infinite for trivial dynamics.
pub fn stability_bound(hamiltonian: &OperatorMatrix, channels: &[LindbladChannel]) -> f64 {
    let mut scale = hamiltonian.spectral_norm();
    for ch in channels {
        if ch.rate > 0.0 {
            let l = ch.jump.matrix();
            let ltl = l.adjoint() * l;
            let norm = fock::hermitian_eigenvalues(&ltl)
                .into_iter()
                .fold(0.0f64, |m, e| m.max(e.abs()));
            scale = scale.max(ch.rate * norm);
        }
    }
    if scale == 0.0 {
        f64::INFINITY
    } else {
        STEP_FACTOR / scale
    }
}

fn vec(m: &CMatrix) -> CVector {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

fn matrix_power(base: &CMatrix, mut exponent: usize) -> CMatrix {
    let n = base.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut square = base.clone();
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = &result * &square;
        }
        exponent >>= 1;
        if exponent > 0 {
            square = &square * &square;
        }
    }
    result
}

/// States recorded at evenly spaced step counts, including the final one.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("trajectory always holds the initial state")
    }
}

/// Integrates `rho0` to `t_final`.
pub fn integrate(problem: &MasterEquationProblem, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(integrate_checkpoints(problem, rho0, CHECKPOINTS)?
        .final_state()
        .clone())
}

/// Integrates `rho0`, validating and symmetrizing at `checkpoints` evenly
/// spaced points. The returned trajectory starts with `rho0`.
pub fn integrate_checkpoints(
    problem: &MasterEquationProblem,
    rho0: &DensityMatrix,
    checkpoints: usize,
) -> Result<Trajectory> {
    if !rho0.basis().same_space(problem.basis()) {
        return Err(Error::BasisMismatch);
    }
    fock::validate_density(rho0.matrix())?;
    let d = problem.basis().dim();
    let basis = problem.basis().clone();
    let mut trajectory = Trajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
    };
    let n = problem.steps;
    if n == 0 {
        return Ok(trajectory);
    }
    let segments = checkpoints.clamp(1, n);
    let short = n / segments;
    let long_count = n % segments;
    let step = problem.rk4_step_map();
    let short_map = matrix_power(&step, short);
    let long_map = if long_count > 0 {
        Some(&short_map * &step)
    } else {
        None
    };
    let trace0 = rho0.trace();

    let mut v = vec(rho0.matrix());
    let mut done = 0usize;
    for seg in 0..segments {
        let (map, len) = if seg < long_count {
            (long_map.as_ref().expect("long segments exist"), short + 1)
        } else {
            (&short_map, short)
        };
        v = map * v;
        done += len;
        let raw = unvec(&v, d);
        let dev = fock::hermitian_deviation(&raw);
        if dev > fock::OPERATOR_TOL {
            return Err(Error::invariant(
                "density matrix hermitian",
                format!("drift {dev:e} at step {done}"),
            ));
        }
        let rho = (&raw + raw.adjoint()) * C64::from(0.5);
        let trace = rho.trace();
        if (trace.re - trace0).abs() > TRACE_TOL {
            return Err(Error::invariant(
                "trace preservation",
                format!("Tr ρ moved from {trace0} to {} at step {done}", trace.re),
            ));
        }
        fock::validate_density(&rho)?;
        v = vec(&rho);
        trajectory
            .times
            .push(problem.t_final * done as f64 / n as f64);
        trajectory
            .states
            .push(DensityMatrix::from_trusted(basis.clone(), rho));
    }
    Ok(trajectory)
}

/// Largest max-element difference between the run at the problem's step and
/// at half that step.
pub fn half_step_difference(problem: &MasterEquationProblem, rho0: &DensityMatrix) -> Result<f64> {
    let coarse = integrate(problem, rho0)?;
    let fine = integrate(&problem.refined(), rho0)?;
    coarse.max_abs_diff(&fine)
}

// ---------------------------------------------------------------------------
// Process characterization
// ---------------------------------------------------------------------------

/// Choi matrix of a map restricted to a `dim`-state subspace:
/// `J = (1/dim) Σ_ij |i⟩⟨j| ⊗ P E(|i⟩⟨j|) P`, input factor first.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    dim: usize,
    choi: CMatrix,
}

impl ProcessMatrix {
    pub fn new(dim: usize, choi: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: choi.nrows(),
            });
        }
        let dev = fock::hermitian_deviation(&choi);
        if dev > 1e-9 {
            return Err(Error::invariant(
                "choi matrix hermitian",
                format!("max |J - J†| = {dev:e}"),
            ));
        }
        let min = fock::min_hermitian_eigenvalue(&choi);
        if min < -1e-9 {
            return Err(Error::invariant(
                "complete positivity",
                format!("Choi eigenvalue {min:e}"),
            ));
        }
        Ok(ProcessMatrix { dim, choi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Probability retained in the subspace, averaged over inputs.
    pub fn trace(&self) -> f64 {
        self.choi.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        fock::min_hermitian_eigenvalue(&self.choi)
    }

    /// Process fidelity `⟨Φ_U|J|Φ_U⟩` with `|Φ_U⟩ = Σ_i |i⟩⊗U|i⟩/√dim`.
    /// For a unitary map `M` it reduces to `|Tr(U†M)|²/dim²`.
    pub fn fidelity(&self, ideal: &CMatrix) -> Result<f64> {
        let d = self.dim;
        if ideal.nrows() != d || ideal.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ideal.nrows(),
            });
        }
        let phi = CVector::from_fn(d * d, |row, _| {
            ideal[(row % d, row / d)] / C64::from((d as f64).sqrt())
        });
        Ok(phi.dotc(&(&self.choi * &phi)).re)
    }

    /// Coherent part of the map relative to subspace state 0:
    /// `M_ki = ⟨k|E(|i⟩⟨0|)|0⟩`. When state 0 is left invariant (the vacuum
    /// here) this is the amplitude map carried by the no-jump branch.
    pub fn coherent_map(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |k, i| self.choi[(i * d + k, 0)] * C64::from(d as f64))
    }
}

/// Tomography of `problem` on the basis states `subspace`, by propagating
/// every `|i⟩⟨j|` through the map.
pub fn process_tomography(
    problem: &MasterEquationProblem,
    subspace: &[usize],
) -> Result<ProcessMatrix> {
    let d = problem.basis().dim();
    if subspace.is_empty() || subspace.iter().any(|&i| i >= d) {
        return Err(Error::invalid(
            "subspace indices must be nonempty and inside the basis",
        ));
    }
    let k = subspace.len();
    let map = matrix_power(&problem.rk4_step_map(), problem.steps);
    let mut inputs = CMatrix::zeros(d * d, k * k);
    for (a, &i) in subspace.iter().enumerate() {
        for (b, &j) in subspace.iter().enumerate() {
            // |i⟩⟨j| sits at vec index i + j·d
            inputs[(i + j * d, a * k + b)] = ONE;
        }
    }
    let outputs = map * inputs;
    let mut choi = CMatrix::zeros(k * k, k * k);
    for a in 0..k {
        for b in 0..k {
            let col = outputs.column(a * k + b);
            for (c, &kk) in subspace.iter().enumerate() {
                for (e, &ll) in subspace.iter().enumerate() {
                    choi[(a * k + c, b * k + e)] = col[kk + ll * d] / C64::from(k as f64);
                }
            }
        }
    }
    // rounding leaves ~1e-16 anti-Hermitian noise
    let choi = (&choi + choi.adjoint()) * C64::from(0.5);
    ProcessMatrix::new(k, choi)
}

/// Tomography of the coupled pair over its gate time with extra channels.
pub fn process_for_pair(
    pair: &CoupledModePair,
    channels: Vec<LindbladChannel>,
) -> Result<ProcessMatrix> {
    let problem =
        MasterEquationProblem::with_max_step(pair.hamiltonian(), channels, pair.total_time())?;
    process_tomography(&problem, &pair.subspace_indices())
}

// ---------------------------------------------------------------------------
// Two-photon absorption gate
// ---------------------------------------------------------------------------

/// Single-photon scattering alongside two-photon absorption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SinglePhotonLoss {
    None,
    /// Fixed rate `γ₁`.
    Fixed(f64),
    /// `γ₁ = r · γ₂`.
    Proportional(f64),
}

impl SinglePhotonLoss {
    pub fn rate(self, gamma2: f64) -> f64 {
        match self {
            SinglePhotonLoss::None => 0.0,
            SinglePhotonLoss::Fixed(g) => g,
            SinglePhotonLoss::Proportional(r) => r * gamma2,
        }
    }
}

/// Per-core channels: `a²`, `b²` at `gamma2` and `a`, `b` at `gamma1`.
/// Zero-rate channels are omitted.
pub fn absorption_channels(
    basis: &Arc<FockBasis>,
    gamma2: f64,
    gamma1: f64,
) -> Result<Vec<LindbladChannel>> {
    if !(gamma2 >= 0.0) || !(gamma1 >= 0.0) {
        return Err(Error::invalid(format!(
            "absorption rates must be nonnegative (γ₂ = {gamma2}, γ₁ = {gamma1})"
        )));
    }
    let mut channels = Vec::new();
    for mode in 0..basis.num_modes() {
        let a = fock::annihilation(basis, mode)?;
        if gamma2 > 0.0 {
            channels.push(LindbladChannel::new(a.compose(&a)?, gamma2)?);
        }
        if gamma1 > 0.0 {
            channels.push(LindbladChannel::new(a, gamma1)?);
        }
    }
    Ok(channels)
}

/// The coupled pair with two-photon absorption in both cores, over its gate
/// time, at the largest allowed step.
pub fn absorption_problem(
    pair: &CoupledModePair,
    gamma2: f64,
    gamma1: f64,
) -> Result<MasterEquationProblem> {
    let channels = absorption_channels(pair.basis(), gamma2, gamma1)?;
    MasterEquationProblem::with_max_step(pair.hamiltonian(), channels, pair.total_time())
}

/// Performance of the absorption gate at one parameter point.
#[derive(Clone, Debug)]
pub struct GatePoint {
    /// `1 − ⟨1,1|ρ(T)|1,1⟩` for input `|1,1⟩`.
    pub event_failure: f64,
    /// `1 −` process fidelity against SWAP′.
    pub gate_error: f64,
    pub process: ProcessMatrix,
}

/// Evaluates a two-mode absorption problem: the `|1,1⟩` run (with its
/// half-step convergence check) and full tomography on the qubit subspace.
pub fn evaluate_gate(pair: &CoupledModePair, problem: &MasterEquationProblem) -> Result<GatePoint> {
    let rho0 = DensityMatrix::from_pure(&pair.state([1, 1]));
    let rho = integrate(problem, &rho0)?;
    let fine = integrate(&problem.refined(), &rho0)?;
    let diff = rho.max_abs_diff(&fine)?;
    if diff > CONVERGENCE_TOL {
        return Err(Error::invariant(
            "half-step convergence",
            format!(
                "max element change {diff:e} when halving dt = {:e}",
                problem.dt()
            ),
        ));
    }
    let event_failure = 1.0 - rho.population(&[1, 1])?;
    let process = process_tomography(problem, &pair.subspace_indices())?;
    let gate_error = 1.0 - process.fidelity(&zeno::swap_prime_ideal())?;
    Ok(GatePoint {
        event_failure,
        gate_error,
        process,
    })
}

pub const GAMMA_COLUMNS: [&str; 3] = ["gamma2_over_kappa", "event_failure", "gate_error"];

/// Failure and gate error versus two-photon absorption rate (absolute
/// `γ₂` values; rows report `γ₂/κ`).
pub fn error_vs_gamma(
    pair: &CoupledModePair,
    gamma2_values: &[f64],
    loss: SinglePhotonLoss,
) -> Result<ExperimentCurve> {
    if let Some(bad) = gamma2_values
        .iter()
        .find(|g| !(**g >= 0.0) || !g.is_finite())
    {
        return Err(Error::invalid(format!(
            "two-photon rate must be nonnegative, got {bad}"
        )));
    }
    let rows: Vec<Result<Vec<f64>>> = gamma2_values
        .par_iter()
        .map(|&g2| {
            let problem = absorption_problem(pair, g2, loss.rate(g2))?;
            let point = evaluate_gate(pair, &problem)?;
            Ok(vec![
                g2 / pair.kappa(),
                point.event_failure,
                point.gate_error,
            ])
        })
        .collect();
    let mut curve = ExperimentCurve::new("zeno-tpa", GAMMA_COLUMNS);
    for row in rows {
        curve.push_row(row?)?;
    }
    curve.set_metadata("kappa", format!("{}", pair.kappa()));
    curve.set_metadata("kappa_t", format!("{}", pair.transfer_angle()));
    curve.set_plot(gamma_plot());
    Ok(curve)
}

pub(crate) fn gamma_plot() -> PlotHints {
    PlotHints {
        x_column: "gamma2_over_kappa".into(),
        y_columns: vec!["gate_error".into(), "event_failure".into()],
        x_log: true,
        y_log: true,
        x_label: "two-photon absorption rate γ₂/κ".into(),
        y_label: "error probability".into(),
    }
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi >= lo) || n == 0 {
        return Err(Error::invalid(format!(
            "bad log grid {lo}..{hi} with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect())
}
