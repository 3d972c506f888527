//! Coupled two-mode gate under repeated projective "two photons in one core?"
//! measurements, and the SWAP′ target it approaches.
//!
//! The gate evolves two evanescently coupled modes `a`, `b` under
//! `H = κ(a†b + b†a)` for a time `T` with `κT = π/2`, which moves a single
//! photon completely across with amplitude `−i`. Interleaving `N` measurements
//! that project out `|2,0⟩` and `|0,2⟩` freezes the `|1,1⟩` component in place
//! (with survival probability `cos^{2N}(π/N)`) instead of letting it pick up
//! the `−1` of the plain coupler.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;

use crate::curve::{ExperimentCurve, PlotHints};
use crate::error::{Error, Result};
use crate::fock::{self, CMatrix, FockBasis, OperatorMatrix, StateVector, C64, ONE, ZERO};

/// Occupations spanning the two-rail qubit subspace, in the order used by
/// every 4×4 gate matrix here: `|0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩`.
pub const QUBIT_SUBSPACE: [[u32; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

/// Two coupled modes (fiber cores or ring resonators) with coupling rate
/// `kappa` and gate duration `total_time`.
#[derive(Clone, Debug)]
pub struct CoupledModePair {
    kappa: f64,
    total_time: f64,
    basis: Arc<FockBasis>,
}

impl CoupledModePair {
    /// Full-transfer device, `κT = π/2`.
    pub fn new(kappa: f64) -> Result<Self> {
        Self::with_transfer_angle(kappa, FRAC_PI_2)
    }

    /// Device with an arbitrary transfer angle `κT`.
    pub fn with_transfer_angle(kappa: f64, kappa_t: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!(
                "coupling rate must be positive, got {kappa}"
            )));
        }
        if !(kappa_t >= 0.0) || !kappa_t.is_finite() {
            return Err(Error::invalid(format!(
                "transfer angle must be nonnegative, got {kappa_t}"
            )));
        }
        Ok(CoupledModePair {
            kappa,
            total_time: kappa_t / kappa,
            basis: FockBasis::enumerate(2, 2)?,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// `κT`.
    pub fn transfer_angle(&self) -> f64 {
        self.kappa * self.total_time
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn hamiltonian(&self) -> OperatorMatrix {
        fock::mode_coupling(&self.basis, 0, 1, self.kappa).expect("two distinct modes")
    }

    pub fn state(&self, occupation: [u32; 2]) -> StateVector {
        StateVector::basis_state(self.basis.clone(), &occupation)
            .expect("occupation within two photons")
    }

    /// Indices of [`QUBIT_SUBSPACE`] in this pair's basis.
    pub fn subspace_indices(&self) -> [usize; 4] {
        QUBIT_SUBSPACE.map(|occ| {
            self.basis
                .index_of(&occ)
                .expect("qubit states are in the basis")
        })
    }
}

/// `N` equally spaced no-bunching measurements.
#[derive(Clone, Debug)]
pub struct ZenoSchedule {
    n_measurements: usize,
    projector: OperatorMatrix,
}

impl ZenoSchedule {
    pub fn new(pair: &CoupledModePair, n_measurements: usize) -> Result<Self> {
        if n_measurements == 0 {
            return Err(Error::invalid("at least one measurement is required"));
        }
        Ok(ZenoSchedule {
            n_measurements,
            projector: no_bunching_projector(pair.basis()),
        })
    }

    pub fn n_measurements(&self) -> usize {
        self.n_measurements
    }

    pub fn projector(&self) -> &OperatorMatrix {
        &self.projector
    }
}

/// Complement of `span{|2,0⟩, |0,2⟩}`.
pub fn no_bunching_projector(basis: &Arc<FockBasis>) -> OperatorMatrix {
    OperatorMatrix::projector_onto(basis.clone(), |occ| !occ.iter().any(|&n| n >= 2))
}

/// The SWAP′ gate on [`QUBIT_SUBSPACE`]: single photons hop across with
/// amplitude `−i`, vacuum and `|1,1⟩` are left alone.
pub fn swap_prime_ideal() -> CMatrix {
    let mi = C64::new(0.0, -1.0);
    CMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, ZERO, mi, ZERO, //
            ZERO, mi, ZERO, ZERO, //
            ZERO, ZERO, ZERO, ONE,
        ],
    )
}

/// `1 − |Tr(U_ideal† M)|²/16` for a (possibly trace-decreasing) 4×4 map `M`
/// on [`QUBIT_SUBSPACE`].
pub fn swap_prime_distance(actual: &CMatrix) -> Result<f64> {
    if actual.nrows() != 4 || actual.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: actual.nrows().max(actual.ncols()),
        });
    }
    let overlap = (swap_prime_ideal().adjoint() * actual).trace();
    Ok(1.0 - overlap.norm_sqr() / 16.0)
}

/// Restriction of a two-mode operator to [`QUBIT_SUBSPACE`].
pub fn subspace_block(pair: &CoupledModePair, op: &OperatorMatrix) -> CMatrix {
    let idx = pair.subspace_indices();
    CMatrix::from_fn(4, 4, |r, c| op.matrix()[(idx[r], idx[c])])
}

#[derive(Clone, Debug)]
pub struct ZenoOutcome {
    /// Product of the `N` no-bunching probabilities.
    pub survival: f64,
    /// Renormalized state after the last measurement (zero if nothing survived).
    pub state: StateVector,
}

/// Alternates `T/N` of coupled evolution with the no-bunching projection,
/// `N` times.
pub fn zeno_run(
    pair: &CoupledModePair,
    schedule: &ZenoSchedule,
    input: &StateVector,
) -> Result<ZenoOutcome> {
    if !input.basis().same_space(pair.basis()) {
        return Err(Error::BasisMismatch);
    }
    let n = schedule.n_measurements;
    let step = fock::propagator(&pair.hamiltonian(), pair.total_time / n as f64)?;
    let mut state = input.clone();
    let mut survival = 1.0;
    for _ in 0..n {
        let evolved = step.apply(&state)?;
        let (p, collapsed) = fock::project(&evolved, &schedule.projector)?;
        survival *= p;
        state = collapsed;
        if survival == 0.0 {
            break;
        }
    }
    Ok(ZenoOutcome { survival, state })
}

/// Gate error of one `|1,1⟩` run: `1 − survival · max(Re⟨1,1|ψ⟩, 0)²`.
///
/// The overlap keeps its sign: the vacuum component of a logical input is
/// untouched by the coupler, so a `−|1,1⟩` output is a wrong controlled phase,
/// not a harmless global phase.
pub fn two_photon_gate_error(outcome: &ZenoOutcome) -> f64 {
    let overlap = outcome
        .state
        .amplitude(&[1, 1])
        .map(|a| a.re)
        .unwrap_or(0.0)
        .max(0.0);
    1.0 - outcome.survival * overlap * overlap
}

/// Gate error versus the number of measurements for input `|1,1⟩`.
///
/// Columns: `n`, `gate_error`, `same_path_failure` (= 1 − survival) and
/// `degenerate` (1 for `N ≤ 2`, where the survival formula is singular).
pub fn error_vs_n(pair: &CoupledModePair, n_values: &[usize]) -> Result<ExperimentCurve> {
    if n_values.is_empty() {
        return Err(Error::invalid("no measurement counts requested"));
    }
    if let Some(bad) = n_values.iter().find(|&&n| n == 0) {
        return Err(Error::invalid(format!(
            "measurement count {bad} must be at least 1"
        )));
    }
    let input = pair.state([1, 1]);
    let rows: Vec<Result<Vec<f64>>> = n_values
        .par_iter()
        .map(|&n| {
            let schedule = ZenoSchedule::new(pair, n)?;
            let outcome = zeno_run(pair, &schedule, &input)?;
            let degenerate = if n <= 2 { 1.0 } else { 0.0 };
            Ok(vec![
                n as f64,
                two_photon_gate_error(&outcome),
                1.0 - outcome.survival,
                degenerate,
            ])
        })
        .collect();
    let mut curve = ExperimentCurve::new(
        "zeno-n",
        ["n", "gate_error", "same_path_failure", "degenerate"],
    );
    for row in rows {
        curve.push_row(row?)?;
    }
    curve.set_metadata("kappa", format!("{}", pair.kappa()));
    curve.set_metadata("kappa_t", format!("{}", pair.transfer_angle()));
    curve.set_plot(PlotHints {
        x_column: "n".into(),
        y_columns: vec!["gate_error".into()],
        x_log: true,
        y_log: true,
        x_label: "number of measurements N".into(),
        y_label: "error probability".into(),
    });
    Ok(curve)
}
