//! Dense linear algebra over truncated multimode Fock spaces.
//!
//! A [`FockBasis`] enumerates every occupation vector `(n_1, .., n_M)` with
//! `Σ n_i ≤ max_total` in lexicographic order. States, density matrices and
//! operators are dense complex arrays indexed by that enumeration.
//!
//! Truncation is hard: a creation operator that would push a component above
//! `max_total` drops it. Number-conserving operators built through
//! [`mode_coupling`], [`quadratic_hamiltonian`] or [`lift_mode_unitary`] never
//! leave the truncated space, so they are exact on it.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for hermiticity, unitarity and projector checks.
pub const OPERATOR_TOL: f64 = 1e-10;
/// Probabilities below this are treated as an impossible outcome.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;
/// Allowed excess of `Tr ρ` over 1 (accumulated integration rounding).
pub const TRACE_TOL: f64 = 1e-8;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Lexicographically ordered occupation-number basis of `num_modes` bosonic
/// modes holding at most `max_total` photons in total.
#[derive(Clone)]
pub struct FockBasis {
    num_modes: usize,
    max_total: usize,
    states: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn enumerate(num_modes: usize, max_total: usize) -> Result<Arc<Self>> {
        if num_modes == 0 {
            return Err(Error::invalid("a Fock basis needs at least one mode"));
        }
        let mut states = Vec::new();
        let mut prefix = Vec::with_capacity(num_modes);
        fill_lexicographic(&mut prefix, num_modes, max_total as u32, &mut states);
        let lookup = states
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.clone(), i))
            .collect();
        Ok(Arc::new(FockBasis {
            num_modes,
            max_total,
            states,
            lookup,
        }))
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    /// Occupation vector of basis state `index`. Panics when out of range.
    pub fn occupation(&self, index: usize) -> &[u32] {
        &self.states[index]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    pub fn total_photons(&self, index: usize) -> u32 {
        self.states[index].iter().sum()
    }

    /// Two bases are interchangeable when they enumerate the same space.
    pub fn same_space(&self, other: &FockBasis) -> bool {
        self.num_modes == other.num_modes && self.max_total == other.max_total
    }

    pub(crate) fn require_index(&self, occupation: &[u32]) -> Result<usize> {
        if occupation.len() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: occupation.len(),
            });
        }
        self.index_of(occupation).ok_or_else(|| {
            Error::invalid(format!(
                "occupation {} exceeds the truncation of {} photons",
                ket(occupation),
                self.max_total
            ))
        })
    }

    fn require_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for a {}-mode basis",
                self.num_modes
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for FockBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockBasis")
            .field("num_modes", &self.num_modes)
            .field("max_total", &self.max_total)
            .field("dim", &self.dim())
            .finish()
    }
}

fn fill_lexicographic(
    prefix: &mut Vec<u32>,
    modes_left: usize,
    budget: u32,
    out: &mut Vec<Vec<u32>>,
) {
    if modes_left == 0 {
        out.push(prefix.clone());
        return;
    }
    for n in 0..=budget {
        prefix.push(n);
        fill_lexicographic(prefix, modes_left - 1, budget - n, out);
        prefix.pop();
    }
}

/// Formats an occupation vector as a ket, e.g. `|1,0⟩`.
pub fn ket(occupation: &[u32]) -> String {
    let inner: Vec<String> = occupation.iter().map(|n| n.to_string()).collect();
    format!("|{}⟩", inner.join(","))
}

fn require_same_basis(a: &FockBasis, b: &FockBasis) -> Result<()> {
    if a.same_space(b) {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Pure state over a Fock basis. Norm never exceeds `1 + 1e-12`.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::invariant(
                "state norm <= 1",
                format!("norm is {norm}"),
            ));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let dim = basis.dim();
        StateVector {
            basis,
            amplitudes: CVector::zeros(dim),
        }
    }

    pub fn basis_state(basis: Arc<FockBasis>, occupation: &[u32]) -> Result<Self> {
        let index = basis.require_index(occupation)?;
        let mut amplitudes = CVector::zeros(basis.dim());
        amplitudes[index] = ONE;
        Ok(StateVector { basis, amplitudes })
    }

    /// Normalized superposition `Σ c_k |occ_k⟩ / ‖·‖`.
    pub fn superposition(basis: Arc<FockBasis>, terms: &[(&[u32], C64)]) -> Result<Self> {
        let mut amplitudes = CVector::zeros(basis.dim());
        for (occ, amp) in terms {
            amplitudes[basis.require_index(occ)?] += *amp;
        }
        let norm = amplitudes.norm();
        if norm < NEGLIGIBLE_PROBABILITY {
            return Err(Error::invalid("superposition has zero norm"));
        }
        amplitudes /= C64::from(norm);
        Ok(StateVector { basis, amplitudes })
    }

    /// Wraps amplitudes produced by a norm-preserving or norm-reducing map.
    pub(crate) fn from_trusted(basis: Arc<FockBasis>, amplitudes: CVector) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[u32]) -> Result<C64> {
        Ok(self.amplitudes[self.basis.require_index(occupation)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm < NEGLIGIBLE_PROBABILITY {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(StateVector {
            basis: self.basis.clone(),
            amplitudes: &self.amplitudes / C64::from(norm),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        require_same_basis(&self.basis, &other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        require_same_basis(&self.basis, &other.basis)?;
        Ok((&self.amplitudes - &other.amplitudes).norm())
    }

    /// Probability of finding the given occupation.
    pub fn probability(&self, occupation: &[u32]) -> Result<f64> {
        Ok(self.amplitude(occupation)?.norm_sqr())
    }
}

/// Mixed state. Hermitian, trace in `[0, 1]` and positive semidefinite, all
/// to numerical tolerance.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: Arc<FockBasis>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        validate_density(&matrix)?;
        Ok(DensityMatrix { basis, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = &state.amplitudes;
        DensityMatrix {
            basis: state.basis.clone(),
            matrix: v * v.adjoint(),
        }
    }

    pub(crate) fn from_trusted(basis: Arc<FockBasis>, matrix: CMatrix) -> Self {
        DensityMatrix { basis, matrix }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, occupation: &[u32]) -> Result<f64> {
        let i = self.basis.require_index(occupation)?;
        Ok(self.matrix[(i, i)].re)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.matrix)
    }

    /// Largest element-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        require_same_basis(&self.basis, &other.basis)?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }
}

pub(crate) fn validate_density(matrix: &CMatrix) -> Result<()> {
    let dev = hermitian_deviation(matrix);
    if dev > OPERATOR_TOL {
        return Err(Error::invariant(
            "density matrix hermitian",
            format!("max |ρ - ρ†| = {dev:e}"),
        ));
    }
    let trace = matrix.trace();
    if trace.im.abs() > OPERATOR_TOL || trace.re < -OPERATOR_TOL || trace.re > 1.0 + TRACE_TOL {
        return Err(Error::invariant(
            "density matrix trace in [0, 1]",
            format!("trace = {trace}"),
        ));
    }
    let min_eig = min_hermitian_eigenvalue(matrix);
    if min_eig < -1e-9 {
        return Err(Error::invariant(
            "density matrix positivity",
            format!("minimum eigenvalue {min_eig:e}"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    /// Orthogonal projector, `P² = P = P†`.
    Projector,
    General,
}

/// Dense operator on a Fock basis, tagged with the structure it is known to
/// have. Tags other than `General` are checked on construction.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<FockBasis>,
    matrix: CMatrix,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix, kind: OperatorKind) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        check_kind(&matrix, kind)?;
        Ok(OperatorMatrix {
            basis,
            matrix,
            kind,
        })
    }

    pub(crate) fn trusted(basis: Arc<FockBasis>, matrix: CMatrix, kind: OperatorKind) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        OperatorMatrix {
            basis,
            matrix,
            kind,
        }
    }

    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let dim = basis.dim();
        Self::trusted(basis, CMatrix::identity(dim, dim), OperatorKind::Projector)
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let dim = basis.dim();
        Self::trusted(basis, CMatrix::zeros(dim, dim), OperatorKind::Hermitian)
    }

    /// Diagonal projector onto the basis states whose occupation satisfies
    /// `keep`.
    pub fn projector_onto(basis: Arc<FockBasis>, keep: impl Fn(&[u32]) -> bool) -> Self {
        let dim = basis.dim();
        let mut matrix = CMatrix::zeros(dim, dim);
        for (i, occ) in basis.states().iter().enumerate() {
            if keep(occ) {
                matrix[(i, i)] = ONE;
            }
        }
        Self::trusted(basis, matrix, OperatorKind::Projector)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::trusted(self.basis.clone(), self.matrix.adjoint(), self.kind)
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<Self> {
        require_same_basis(&self.basis, &rhs.basis)?;
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self::trusted(
            self.basis.clone(),
            &self.matrix * &rhs.matrix,
            kind,
        ))
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<Self> {
        require_same_basis(&self.basis, &rhs.basis)?;
        let kind = match (self.kind, rhs.kind) {
            (
                OperatorKind::Hermitian | OperatorKind::Projector,
                OperatorKind::Hermitian | OperatorKind::Projector,
            ) => OperatorKind::Hermitian,
            _ => OperatorKind::General,
        };
        Ok(Self::trusted(
            self.basis.clone(),
            &self.matrix + &rhs.matrix,
            kind,
        ))
    }

    /// Real rescaling; keeps hermiticity, forgets other structure.
    pub fn scale(&self, factor: f64) -> Self {
        let kind = match self.kind {
            OperatorKind::Hermitian | OperatorKind::Projector => OperatorKind::Hermitian,
            _ => OperatorKind::General,
        };
        Self::trusted(self.basis.clone(), &self.matrix * C64::from(factor), kind)
    }

    /// Applies a unitary (or projector) to a state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        require_same_basis(&self.basis, &state.basis)?;
        match self.kind {
            OperatorKind::Unitary | OperatorKind::Projector => Ok(StateVector::from_trusted(
                state.basis.clone(),
                &self.matrix * &state.amplitudes,
            )),
            _ => StateVector::new(state.basis.clone(), &self.matrix * &state.amplitudes),
        }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    /// `max |U†U − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n)))
    }

    /// Operator 2-norm. Uses the spectrum directly for Hermitian operators.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        match self.kind {
            OperatorKind::Hermitian | OperatorKind::Projector => {
                hermitian_spectral_radius(&self.matrix)
            }
            _ => hermitian_spectral_radius(&(self.matrix.adjoint() * &self.matrix)).sqrt(),
        }
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        require_same_basis(&self.basis, &state.basis)?;
        Ok(state.amplitudes.dotc(&(&self.matrix * &state.amplitudes)))
    }
}

fn check_kind(matrix: &CMatrix, kind: OperatorKind) -> Result<()> {
    match kind {
        OperatorKind::General => Ok(()),
        OperatorKind::Hermitian => {
            let dev = hermitian_deviation(matrix);
            if dev > OPERATOR_TOL {
                return Err(Error::invariant(
                    "operator hermitian",
                    format!("max |A - A†| = {dev:e}"),
                ));
            }
            Ok(())
        }
        OperatorKind::Unitary => {
            let n = matrix.nrows();
            let dev = max_abs(&(matrix.adjoint() * matrix - CMatrix::identity(n, n)));
            if dev > OPERATOR_TOL {
                return Err(Error::invariant(
                    "operator unitary",
                    format!("max |U†U - I| = {dev:e}"),
                ));
            }
            Ok(())
        }
        OperatorKind::Projector => {
            let herm = hermitian_deviation(matrix);
            let idem = max_abs(&(matrix * matrix - matrix));
            if herm > OPERATOR_TOL || idem > OPERATOR_TOL {
                return Err(Error::invariant(
                    "orthogonal projector",
                    format!("max |P - P†| = {herm:e}, max |P² - P| = {idem:e}"),
                ));
            }
            Ok(())
        }
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect()
}

pub(crate) fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn hermitian_spectral_radius(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(0.0, |acc, l| acc.max(l.abs()))
}

// ---------------------------------------------------------------------------
// Mode operators
// ---------------------------------------------------------------------------

/// Boson annihilation operator `a_mode`: `a|..n..⟩ = √n |..n−1..⟩`.
pub fn annihilation(basis: &Arc<FockBasis>, mode: usize) -> Result<OperatorMatrix> {
    basis.require_mode(mode)?;
    let dim = basis.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut lowered = vec![0u32; basis.num_modes()];
    for (col, occ) in basis.states().iter().enumerate() {
        let n = occ[mode];
        if n == 0 {
            continue;
        }
        lowered.copy_from_slice(occ);
        lowered[mode] -= 1;
        let row = basis
            .index_of(&lowered)
            .expect("lowered state stays inside the truncation");
        matrix[(row, col)] = C64::from((n as f64).sqrt());
    }
    Ok(OperatorMatrix::trusted(
        basis.clone(),
        matrix,
        OperatorKind::General,
    ))
}

/// Creation operator `a†_mode`; components pushed past the truncation vanish.
pub fn creation(basis: &Arc<FockBasis>, mode: usize) -> Result<OperatorMatrix> {
    Ok(annihilation(basis, mode)?.adjoint())
}

/// Number operator `a†a`.
pub fn number(basis: &Arc<FockBasis>, mode: usize) -> Result<OperatorMatrix> {
    basis.require_mode(mode)?;
    let dim = basis.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (i, occ) in basis.states().iter().enumerate() {
        matrix[(i, i)] = C64::from(occ[mode] as f64);
    }
    Ok(OperatorMatrix::trusted(
        basis.clone(),
        matrix,
        OperatorKind::Hermitian,
    ))
}

/// Number-conserving quadratic Hamiltonian `Σ_ij h_ij a_i† a_j` for a
/// Hermitian mode matrix `h`. Built normal-ordered, so it is exact under the
/// truncation.
pub fn quadratic_hamiltonian(basis: &Arc<FockBasis>, h: &CMatrix) -> Result<OperatorMatrix> {
    let m = basis.num_modes();
    if h.nrows() != m || h.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: h.nrows(),
        });
    }
    if hermitian_deviation(h) > OPERATOR_TOL {
        return Err(Error::invariant("mode matrix hermitian", "h != h†"));
    }
    let dim = basis.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut moved = vec![0u32; m];
    for (col, occ) in basis.states().iter().enumerate() {
        for j in 0..m {
            if occ[j] == 0 {
                continue;
            }
            for i in 0..m {
                let hij = h[(i, j)];
                if hij == ZERO {
                    continue;
                }
                moved.copy_from_slice(occ);
                moved[j] -= 1;
                let lower = (occ[j] as f64).sqrt();
                moved[i] += 1;
                let upper = (moved[i] as f64).sqrt();
                let row = basis
                    .index_of(&moved)
                    .expect("number-conserving move stays in basis");
                matrix[(row, col)] += hij * lower * upper;
            }
        }
    }
    Ok(OperatorMatrix::trusted(
        basis.clone(),
        matrix,
        OperatorKind::Hermitian,
    ))
}

/// Evanescent coupling `κ (a_i† a_j + a_j† a_i)` between two modes.
pub fn mode_coupling(
    basis: &Arc<FockBasis>,
    i: usize,
    j: usize,
    kappa: f64,
) -> Result<OperatorMatrix> {
    basis.require_mode(i)?;
    basis.require_mode(j)?;
    if i == j {
        return Err(Error::invalid("mode coupling needs two distinct modes"));
    }
    let m = basis.num_modes();
    let mut h = CMatrix::zeros(m, m);
    h[(i, j)] = C64::from(kappa);
    h[(j, i)] = C64::from(kappa);
    quadratic_hamiltonian(basis, &h)
}

/// Lifts a single-particle mode unitary `u` to the Fock basis.
///
/// Input mode `i` maps to output modes as `a_i† → Σ_j u_ji a_j†`, so a single
/// photon in mode `i` ends in `Σ_j u_ji |1_j⟩`.
pub fn lift_mode_unitary(basis: &Arc<FockBasis>, u: &CMatrix) -> Result<OperatorMatrix> {
    let m = basis.num_modes();
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: u.nrows(),
        });
    }
    let dev = max_abs(&(u.adjoint() * u - CMatrix::identity(m, m)));
    if dev > OPERATOR_TOL {
        return Err(Error::invariant(
            "mode transformation unitary",
            format!("max |u†u - I| = {dev:e}"),
        ));
    }
    let dim = basis.dim();
    let vacuum = basis
        .index_of(&vec![0; m])
        .expect("vacuum is always in the basis");
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut scratch = vec![0u32; m];
    for (col, occ) in basis.states().iter().enumerate() {
        let mut v = CVector::zeros(dim);
        v[vacuum] = ONE;
        let mut factorial = 1.0;
        for (i, &n) in occ.iter().enumerate() {
            for k in 1..=n {
                v = apply_mixed_creation(basis, u, i, &v, &mut scratch);
                factorial *= k as f64;
            }
        }
        v /= C64::from(factorial.sqrt());
        matrix.set_column(col, &v);
    }
    Ok(OperatorMatrix::trusted(
        basis.clone(),
        matrix,
        OperatorKind::Unitary,
    ))
}

/// `(Σ_j u_ji a_j†) v`, dropping anything past the truncation.
fn apply_mixed_creation(
    basis: &FockBasis,
    u: &CMatrix,
    input_mode: usize,
    v: &CVector,
    scratch: &mut [u32],
) -> CVector {
    let mut out = CVector::zeros(v.len());
    for (idx, &amp) in v.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let occ = basis.occupation(idx);
        for j in 0..basis.num_modes() {
            let coeff = u[(j, input_mode)];
            if coeff == ZERO {
                continue;
            }
            scratch.copy_from_slice(occ);
            scratch[j] += 1;
            if let Some(target) = basis.index_of(scratch) {
                out[target] += amp * coeff * (scratch[j] as f64).sqrt();
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Evolution and measurement
// ---------------------------------------------------------------------------

fn require_hermitian(h: &OperatorMatrix) -> Result<()> {
    let dev = h.hermitian_deviation();
    if dev > OPERATOR_TOL {
        return Err(Error::invariant(
            "hamiltonian hermitian",
            format!("max |H - H†| = {dev:e}"),
        ));
    }
    Ok(())
}

/// `exp(−iHt)` for a Hermitian `H`, through its eigendecomposition.
pub fn propagator(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    require_hermitian(h)?;
    if !t.is_finite() {
        return Err(Error::invalid("evolution time must be finite"));
    }
    Ok(OperatorMatrix::trusted(
        h.basis.clone(),
        hermitian_exp(&h.matrix, t),
        OperatorKind::Unitary,
    ))
}

pub(crate) fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = hermitian_part(h).symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, -eig.eigenvalues[j] * t);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// `exp(−iHt)|ψ⟩`.
pub fn evolve_unitary(state: &StateVector, h: &OperatorMatrix, t: f64) -> Result<StateVector> {
    require_same_basis(&state.basis, &h.basis)?;
    let u = propagator(h, t)?;
    Ok(StateVector::from_trusted(
        state.basis.clone(),
        u.matrix * &state.amplitudes,
    ))
}

/// Projective measurement outcome: probability `⟨ψ|P|ψ⟩` and the
/// renormalized post-measurement state `P|ψ⟩/‖P|ψ⟩‖`. Outcomes below
/// [`NEGLIGIBLE_PROBABILITY`] return probability 0 and the zero vector.
pub fn project(state: &StateVector, projector: &OperatorMatrix) -> Result<(f64, StateVector)> {
    require_same_basis(&state.basis, &projector.basis)?;
    if projector.kind != OperatorKind::Projector {
        check_kind(&projector.matrix, OperatorKind::Projector)?;
    }
    let projected = &projector.matrix * &state.amplitudes;
    let probability = state.amplitudes.dotc(&projected).re.clamp(0.0, 1.0);
    if probability < NEGLIGIBLE_PROBABILITY {
        return Ok((0.0, StateVector::zero(state.basis.clone())));
    }
    let norm = projected.norm();
    Ok((
        probability,
        StateVector::from_trusted(state.basis.clone(), projected / C64::from(norm)),
    ))
}
