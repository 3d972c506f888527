//! Polarization-encoded linear optics: circuits over spatial paths, each
//! carrying an H and a V mode, with photon-counting post-selection.
//!
//! Mode `2p` is H on path `p`, mode `2p + 1` is V on path `p`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fock::{
    self, CMatrix, CVector, FockBasis, OperatorMatrix, StateVector, C64, I, ONE, ZERO,
};

pub const H: usize = 0;
pub const V: usize = 1;

/// Reflection phase picked up by a V photon crossing a polarizing beam splitter.
pub const PBS_REFLECTION_PHASE: C64 = I;

pub fn mode_index(path: usize, polarization: usize) -> usize {
    2 * path + polarization
}

/// Single-qubit Pauli correction on one path's polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Z,
    /// `σ_z σ_x` (X applied first).
    ZX,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::ZX];

    pub fn matrix(self) -> CMatrix {
        let (a, b, c, d) = match self {
            Pauli::I => (ONE, ZERO, ZERO, ONE),
            Pauli::X => (ZERO, ONE, ONE, ZERO),
            Pauli::Z => (ONE, ZERO, ZERO, -ONE),
            Pauli::ZX => (ZERO, ONE, -ONE, ZERO),
        };
        CMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitElement {
    /// H transmits, V swaps between the two paths.
    PolarizingBeamSplitter {
        path_a: usize,
        path_b: usize,
    },
    /// `H → cos θ H + sin θ V`, `V → −sin θ H + cos θ V`.
    Rotation {
        path: usize,
        theta: f64,
    },
    PhaseShift {
        path: usize,
        polarization: usize,
        phi: f64,
    },
    Pauli {
        path: usize,
        op: Pauli,
    },
}

impl CircuitElement {
    fn paths(&self) -> Vec<usize> {
        match *self {
            CircuitElement::PolarizingBeamSplitter { path_a, path_b } => vec![path_a, path_b],
            CircuitElement::Rotation { path, .. }
            | CircuitElement::PhaseShift { path, .. }
            | CircuitElement::Pauli { path, .. } => vec![path],
        }
    }

    /// Single-particle matrix over `2 · num_paths` modes.
    pub fn mode_matrix(&self, num_paths: usize) -> Result<CMatrix> {
        let paths = self.paths();
        if let Some(&p) = paths.iter().find(|&&p| p >= num_paths) {
            return Err(Error::invalid(format!(
                "path {p} outside a {num_paths}-path circuit"
            )));
        }
        let m = 2 * num_paths;
        let mut u = CMatrix::identity(m, m);
        match *self {
            CircuitElement::PolarizingBeamSplitter { path_a, path_b } => {
                if path_a == path_b {
                    return Err(Error::invalid("beam splitter needs two distinct paths"));
                }
                let (va, vb) = (mode_index(path_a, V), mode_index(path_b, V));
                u[(va, va)] = ZERO;
                u[(vb, vb)] = ZERO;
                u[(vb, va)] = PBS_REFLECTION_PHASE;
                u[(va, vb)] = PBS_REFLECTION_PHASE;
            }
            CircuitElement::Rotation { path, theta } => {
                if !theta.is_finite() {
                    return Err(Error::invalid("rotation angle must be finite"));
                }
                let (h, v) = (mode_index(path, H), mode_index(path, V));
                let (s, c) = theta.sin_cos();
                u[(h, h)] = C64::from(c);
                u[(v, h)] = C64::from(s);
                u[(h, v)] = C64::from(-s);
                u[(v, v)] = C64::from(c);
            }
            CircuitElement::PhaseShift {
                path,
                polarization,
                phi,
            } => {
                if polarization > V || !phi.is_finite() {
                    return Err(Error::invalid(
                        "phase shift needs polarization 0/1 and a finite phase",
                    ));
                }
                let k = mode_index(path, polarization);
                u[(k, k)] = C64::from_polar(1.0, phi);
            }
            CircuitElement::Pauli { path, op } => {
                let base = mode_index(path, H);
                u.view_mut((base, base), (2, 2)).copy_from(&op.matrix());
            }
        }
        Ok(u)
    }
}

/// Ordered list of linear-optical elements on polarized paths.
#[derive(Debug)]
pub struct PolarizedCircuit {
    num_paths: usize,
    basis: Arc<FockBasis>,
    elements: Vec<CircuitElement>,
    compiled: OnceLock<OperatorMatrix>,
}

impl Clone for PolarizedCircuit {
    fn clone(&self) -> Self {
        PolarizedCircuit {
            num_paths: self.num_paths,
            basis: self.basis.clone(),
            elements: self.elements.clone(),
            compiled: OnceLock::new(),
        }
    }
}

impl PolarizedCircuit {
    /// Empty circuit on `num_paths` paths holding at most `max_photons`.
    pub fn new(num_paths: usize, max_photons: usize) -> Result<Self> {
        if num_paths == 0 {
            return Err(Error::invalid("circuit needs at least one path"));
        }
        Ok(PolarizedCircuit {
            num_paths,
            basis: FockBasis::enumerate(2 * num_paths, max_photons)?,
            elements: Vec::new(),
            compiled: OnceLock::new(),
        })
    }

    pub fn push(&mut self, element: CircuitElement) -> Result<&mut Self> {
        element.mode_matrix(self.num_paths)?;
        self.elements.push(element);
        self.compiled = OnceLock::new();
        Ok(self)
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    /// Product of the element mode matrices, last element leftmost.
    pub fn mode_unitary(&self) -> CMatrix {
        let m = 2 * self.num_paths;
        self.elements
            .iter()
            .fold(CMatrix::identity(m, m), |acc, e| {
                e.mode_matrix(self.num_paths).expect("validated on push") * acc
            })
    }

    /// Fock-space unitary of the whole circuit. Lifting is a group
    /// homomorphism, so the mode matrices are multiplied first and lifted
    /// once; the result is cached.
    pub fn unitary(&self) -> &OperatorMatrix {
        self.compiled.get_or_init(|| {
            fock::lift_mode_unitary(&self.basis, &self.mode_unitary())
                .expect("product of unitary elements")
        })
    }

    pub fn apply(&self, input: &StateVector) -> Result<StateVector> {
        self.unitary().apply(input)
    }
}

/// Fock-space unitary of a lone beam splitter between two paths.
pub fn pbs_unitary(basis: &Arc<FockBasis>, path_a: usize, path_b: usize) -> Result<OperatorMatrix> {
    if !basis.num_modes().is_multiple_of(2) {
        return Err(Error::invalid("polarized basis needs an even mode count"));
    }
    let u = CircuitElement::PolarizingBeamSplitter { path_a, path_b }
        .mode_matrix(basis.num_modes() / 2)?;
    fock::lift_mode_unitary(basis, &u)
}

/// Photon counts on the measured modes (H then V per measured path) and the
/// Pauli corrections applied when they are observed.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceptedPattern {
    pub counts: Vec<u32>,
    pub corrections: Vec<(usize, Pauli)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelectionRule {
    pub measured_paths: Vec<usize>,
    pub accepted: Vec<AcceptedPattern>,
}

impl PostSelectionRule {
    fn validate(&self, num_paths: usize) -> Result<()> {
        for (k, &p) in self.measured_paths.iter().enumerate() {
            if p >= num_paths {
                return Err(Error::invalid(format!(
                    "measured path {p} outside a {num_paths}-path circuit"
                )));
            }
            if self.measured_paths[..k].contains(&p) {
                return Err(Error::invalid(format!("path {p} measured twice")));
            }
        }
        for (k, pat) in self.accepted.iter().enumerate() {
            if pat.counts.len() != 2 * self.measured_paths.len() {
                return Err(Error::invalid(format!(
                    "pattern has {} counts, rule measures {} modes",
                    pat.counts.len(),
                    2 * self.measured_paths.len()
                )));
            }
            if self.accepted[..k].iter().any(|q| q.counts == pat.counts) {
                return Err(Error::invalid("accepted patterns must be distinct"));
            }
            for &(path, _) in &pat.corrections {
                if path >= num_paths || self.measured_paths.contains(&path) {
                    return Err(Error::invalid(format!(
                        "correction on path {path} which is not a surviving path"
                    )));
                }
            }
        }
        Ok(())
    }

    fn measured_modes(&self) -> Vec<usize> {
        self.measured_paths
            .iter()
            .flat_map(|&p| [mode_index(p, H), mode_index(p, V)])
            .collect()
    }
}

/// One accepted outcome: its probability and the corrected, renormalized
/// conditional state (zero vector if the outcome never occurs).
#[derive(Clone, Debug)]
pub struct PostSelectedOutcome {
    pub counts: Vec<u32>,
    pub probability: f64,
    pub state: StateVector,
}

pub fn run_postselected(
    circuit: &PolarizedCircuit,
    input: &StateVector,
    rule: &PostSelectionRule,
) -> Result<Vec<PostSelectedOutcome>> {
    if !input.basis().same_space(circuit.basis()) {
        return Err(Error::BasisMismatch);
    }
    if !input.is_normalized() {
        return Err(Error::invalid(format!(
            "input state must be normalized (norm {})",
            input.norm()
        )));
    }
    rule.validate(circuit.num_paths())?;
    let output = circuit.apply(input)?;
    let modes = rule.measured_modes();
    let basis = circuit.basis();
    rule.accepted
        .iter()
        .map(|pat| {
            // the projector is diagonal in the Fock basis, so mask directly
            let mut kept = output.amplitudes().clone();
            for (idx, amp) in kept.iter_mut().enumerate() {
                let occ = basis.occupation(idx);
                if !modes.iter().zip(&pat.counts).all(|(&m, &n)| occ[m] == n) {
                    *amp = ZERO;
                }
            }
            let probability = kept.norm_squared().min(1.0);
            let state = if probability < fock::NEGLIGIBLE_PROBABILITY {
                StateVector::zero(basis.clone())
            } else {
                let normalized = &kept / C64::from(probability.sqrt());
                let mut corrected = normalized;
                for &(path, op) in &pat.corrections {
                    corrected = apply_pauli(basis, &corrected, path, op)?;
                }
                StateVector::new(basis.clone(), corrected)?
            };
            Ok(PostSelectedOutcome {
                counts: pat.counts.clone(),
                probability: if probability < fock::NEGLIGIBLE_PROBABILITY {
                    0.0
                } else {
                    probability
                },
                state,
            })
        })
        .collect()
}

/// Applies a Pauli on one path's polarization. Paulis only swap the H and V
/// occupations and flip signs, so this is a signed permutation of amplitudes.
pub fn apply_pauli(
    basis: &FockBasis,
    amplitudes: &CVector,
    path: usize,
    op: Pauli,
) -> Result<CVector> {
    if mode_index(path, V) >= basis.num_modes() || amplitudes.len() != basis.dim() {
        return Err(Error::invalid(format!("path {path} outside the basis")));
    }
    let (h, v) = (mode_index(path, H), mode_index(path, V));
    let mut out = CVector::zeros(amplitudes.len());
    let mut occ = vec![0u32; basis.num_modes()];
    for (idx, &amp) in amplitudes.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        occ.copy_from_slice(basis.occupation(idx));
        let (nh, nv) = (occ[h], occ[v]);
        let odd = match op {
            Pauli::I => false,
            Pauli::X => false,
            Pauli::Z => nv % 2 == 1,
            // a_H† → −a_V†, a_V† → a_H†
            Pauli::ZX => nh % 2 == 1,
        };
        if matches!(op, Pauli::X | Pauli::ZX) {
            occ[h] = nv;
            occ[v] = nh;
        }
        let target = basis.index_of(&occ).expect("same total photon number");
        out[target] += if odd { -amp } else { amp };
    }
    Ok(out)
}

/// Probability of every photon-count-per-path pattern with nonzero weight,
/// in basis order of first appearance.
pub fn path_count_distribution(
    circuit: &PolarizedCircuit,
    input: &StateVector,
) -> Result<Vec<(Vec<u32>, f64)>> {
    let output = circuit.apply(input)?;
    let mut patterns: Vec<(Vec<u32>, f64)> = Vec::new();
    for (idx, amp) in output.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p < fock::NEGLIGIBLE_PROBABILITY {
            continue;
        }
        let occ = circuit.basis().occupation(idx);
        let counts: Vec<u32> = occ.chunks(2).map(|c| c[0] + c[1]).collect();
        match patterns.iter_mut().find(|(c, _)| *c == counts) {
            Some(entry) => entry.1 += p,
            None => patterns.push((counts, p)),
        }
    }
    Ok(patterns)
}

/// Qubit carried by one photon on one path: H is logical 0, V logical 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogicalQubitEncoding {
    pub path: usize,
}

impl LogicalQubitEncoding {
    pub fn modes(&self) -> [usize; 2] {
        [mode_index(self.path, H), mode_index(self.path, V)]
    }

    /// Number of photons on the path in a basis occupation.
    pub fn photons(&self, occupation: &[u32]) -> u32 {
        occupation[mode_index(self.path, H)] + occupation[mode_index(self.path, V)]
    }
}

// ---------------------------------------------------------------------------
// Two-beam-splitter CNOT with an entangled ancilla pair
// ---------------------------------------------------------------------------

pub const CONTROL_PATH: usize = 0;
pub const ANCILLA1_PATH: usize = 1;
pub const ANCILLA2_PATH: usize = 2;
pub const TARGET_PATH: usize = 3;
pub const CNOT_PATHS: usize = 4;
pub const CNOT_PHOTONS: usize = 4;

/// Feed-forward table: detector polarizations `(D1, D2)` (0 = H, 1 = V after
/// the 45° analyzers) → corrections on control and target. Re-derived by
/// exhaustive search in the tests.
pub const CNOT_CORRECTIONS: [((usize, usize), Pauli, Pauli); 4] = [
    ((H, H), Pauli::I, Pauli::I),
    ((H, V), Pauli::I, Pauli::X),
    ((V, H), Pauli::Z, Pauli::I),
    ((V, V), Pauli::Z, Pauli::X),
];

const QUARTER_TURN: f64 = std::f64::consts::FRAC_PI_4;

/// The gate circuit. Control and ancilla 1 meet at a beam splitter in the
/// H/V basis; target and ancilla 2 meet at one in the ±45° basis. Ancilla
/// paths then lead to detectors behind 45° analyzers.
pub fn cnot_circuit() -> Result<PolarizedCircuit> {
    let mut c = PolarizedCircuit::new(CNOT_PATHS, CNOT_PHOTONS)?;
    c.push(CircuitElement::Rotation {
        path: TARGET_PATH,
        theta: QUARTER_TURN,
    })?
    .push(CircuitElement::Rotation {
        path: ANCILLA2_PATH,
        theta: QUARTER_TURN,
    })?
    .push(CircuitElement::PolarizingBeamSplitter {
        path_a: CONTROL_PATH,
        path_b: ANCILLA1_PATH,
    })?
    .push(CircuitElement::PolarizingBeamSplitter {
        path_a: ANCILLA2_PATH,
        path_b: TARGET_PATH,
    })?
    .push(CircuitElement::Rotation {
        path: TARGET_PATH,
        theta: -QUARTER_TURN,
    })?
    .push(CircuitElement::Rotation {
        path: ANCILLA1_PATH,
        theta: QUARTER_TURN,
    })?
    .push(CircuitElement::Rotation {
        path: ANCILLA2_PATH,
        theta: QUARTER_TURN,
    })?;
    Ok(c)
}

/// Detector counts `[D1_H, D1_V, D2_H, D2_V]` for one photon in each detector.
pub fn detector_counts(d1: usize, d2: usize) -> Vec<u32> {
    let mut counts = vec![0; 4];
    counts[d1] = 1;
    counts[2 + d2] = 1;
    counts
}

pub fn cnot_rule() -> PostSelectionRule {
    PostSelectionRule {
        measured_paths: vec![ANCILLA1_PATH, ANCILLA2_PATH],
        accepted: CNOT_CORRECTIONS
            .iter()
            .map(|&((d1, d2), pc, pt)| AcceptedPattern {
                counts: detector_counts(d1, d2),
                corrections: vec![(CONTROL_PATH, pc), (TARGET_PATH, pt)],
            })
            .collect(),
    }
}

/// The four-photon input: control and target qubits (logical amplitudes in
/// `|00⟩, |01⟩, |10⟩, |11⟩` order, control first) with the ancilla pair in
/// `(|HH⟩ + |VV⟩)/√2`.
pub fn cnot_input(basis: &Arc<FockBasis>, logical: &[C64; 4]) -> Result<StateVector> {
    let norm: f64 = logical.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "two-qubit input must be normalized, norm is {norm}"
        )));
    }
    let mut amplitudes = CVector::zeros(basis.dim());
    let mut occ = vec![0u32; basis.num_modes()];
    let ancilla = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    for (k, &amp) in logical.iter().enumerate() {
        for pol in [H, V] {
            occ.iter_mut().for_each(|n| *n = 0);
            occ[mode_index(CONTROL_PATH, k >> 1)] = 1;
            occ[mode_index(TARGET_PATH, k & 1)] = 1;
            occ[mode_index(ANCILLA1_PATH, pol)] = 1;
            occ[mode_index(ANCILLA2_PATH, pol)] = 1;
            amplitudes[basis.require_index(&occ)?] += amp * ancilla;
        }
    }
    StateVector::new(basis.clone(), amplitudes)
}

/// Logical two-qubit amplitudes carried by `state` given detector `counts`,
/// read off the basis states with one photon on control and target.
pub fn logical_amplitudes(state: &StateVector, counts: &[u32]) -> [C64; 4] {
    let basis = state.basis();
    let mut occ = vec![0u32; basis.num_modes()];
    let mut out = [ZERO; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        occ.iter_mut().for_each(|n| *n = 0);
        occ[mode_index(CONTROL_PATH, k >> 1)] = 1;
        occ[mode_index(TARGET_PATH, k & 1)] = 1;
        occ[mode_index(ANCILLA1_PATH, H)..=mode_index(ANCILLA2_PATH, V)].copy_from_slice(counts);
        *slot = basis
            .index_of(&occ)
            .map(|i| state.amplitudes()[i])
            .unwrap_or(ZERO);
    }
    out
}

/// Ideal CNOT (control first) on logical amplitudes.
pub fn ideal_cnot(logical: &[C64; 4]) -> [C64; 4] {
    [logical[0], logical[1], logical[3], logical[2]]
}

/// `|⟨a|b⟩|²` for normalized two-qubit vectors.
pub fn logical_fidelity(a: &[C64; 4], b: &[C64; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

#[derive(Clone, Debug)]
pub struct CnotResult {
    pub success_probability: f64,
    /// Conditional logical output of every accepted pattern that occurs.
    pub outputs: Vec<(Vec<u32>, f64, [C64; 4])>,
}

impl CnotResult {
    /// Logical output of the most likely accepted pattern.
    pub fn output(&self) -> [C64; 4] {
        self.outputs
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|o| o.2)
            .unwrap_or([ZERO; 4])
    }

    /// Smallest fidelity to `expected` across the accepted patterns.
    pub fn min_fidelity(&self, expected: &[C64; 4]) -> f64 {
        self.outputs
            .iter()
            .map(|o| logical_fidelity(&o.2, expected))
            .fold(f64::INFINITY, f64::min)
    }
}

fn shared_cnot_circuit() -> &'static PolarizedCircuit {
    static CIRCUIT: OnceLock<PolarizedCircuit> = OnceLock::new();
    CIRCUIT.get_or_init(|| {
        let c = cnot_circuit().expect("fixed circuit is valid");
        c.unitary();
        c
    })
}

/// Runs the gate on an arbitrary (possibly entangled) two-qubit input.
pub fn cnot_logical(logical: &[C64; 4]) -> Result<CnotResult> {
    let circuit = shared_cnot_circuit();
    let input = cnot_input(circuit.basis(), logical)?;
    let outcomes = run_postselected(circuit, &input, &cnot_rule())?;
    let success_probability = outcomes.iter().map(|o| o.probability).sum();
    let outputs = outcomes
        .into_iter()
        .filter(|o| o.probability > 0.0)
        .map(|o| {
            let amps = logical_amplitudes(&o.state, &o.counts);
            (o.counts, o.probability, amps)
        })
        .collect();
    Ok(CnotResult {
        success_probability,
        outputs,
    })
}

/// Runs the gate on a product of control and target qubits `(α_H, α_V)`.
pub fn cnot_product(control: [C64; 2], target: [C64; 2]) -> Result<CnotResult> {
    for (name, q) in [("control", control), ("target", target)] {
        let n = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "{name} must hold exactly one photon (normalized qubit), norm is {n}"
            )));
        }
    }
    cnot_logical(&[
        control[0] * target[0],
        control[0] * target[1],
        control[1] * target[0],
        control[1] * target[1],
    ])
}

/// Runs the gate on an explicit Fock state, which must have one photon on
/// control, one on target and the ancilla pair in place.
pub fn cnot_fock(input: &StateVector) -> Result<Vec<PostSelectedOutcome>> {
    let circuit = shared_cnot_circuit();
    let control = LogicalQubitEncoding { path: CONTROL_PATH };
    let target = LogicalQubitEncoding { path: TARGET_PATH };
    for (idx, amp) in input.amplitudes().iter().enumerate() {
        if amp.norm_sqr() < fock::NEGLIGIBLE_PROBABILITY {
            continue;
        }
        let occ = circuit.basis().occupation(idx);
        if control.photons(occ) != 1 || target.photons(occ) != 1 {
            return Err(Error::invalid(format!(
                "input component {} does not hold one photon per logical path",
                fock::ket(occ)
            )));
        }
    }
    run_postselected(circuit, input, &cnot_rule())
}
