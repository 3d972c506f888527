//! Frequency-domain model of interference between two resonator modes
//! placed symmetrically about a probe frequency: single-photon scattering
//! from the two modes cancels at the midpoint while a two-photon absorber
//! resonant with the photon pair keeps a peak there.
//!
//! This is a phenomenological Lorentzian-response model, not a microscopic
//! scattering calculation.

use rayon::prelude::*;

use crate::curve::{ExperimentCurve, PlotHints};
use crate::error::{Error, Result};
use crate::fock::C64;

/// Two resonator modes at `∓Δ/2` around the probe midpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeCavitySpec {
    /// Δ, separation of the two modes.
    pub delta_spacing: f64,
    /// Γ_R, loaded linewidth of each mode.
    pub gamma_r: f64,
    /// Γ_A, linewidth of the two-photon transition.
    pub gamma_a: f64,
    /// Photon–mode coupling.
    pub g: f64,
    /// Mode–absorber coupling.
    pub mu: f64,
}

impl Default for TwoModeCavitySpec {
    fn default() -> Self {
        TwoModeCavitySpec {
            delta_spacing: 1.0,
            gamma_r: 0.03,
            gamma_a: 0.1,
            g: 1.0,
            mu: 1.0,
        }
    }
}

impl TwoModeCavitySpec {
    /// Checks ranges. Returns warnings for parameters that are valid but
    /// outside the interference regime.
    pub fn validate(&self) -> Result<Vec<String>> {
        for (name, v) in [
            ("delta_spacing", self.delta_spacing),
            ("gamma_r", self.gamma_r),
            ("gamma_a", self.gamma_a),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.g.is_finite() || !self.mu.is_finite() {
            return Err(Error::invalid("couplings must be finite"));
        }
        let mut warnings = Vec::new();
        if self.gamma_r >= self.delta_spacing {
            warnings.push(format!(
                "gamma_r = {} is not below delta_spacing = {}; the modes overlap and the dip washes out",
                self.gamma_r, self.delta_spacing
            ));
        }
        Ok(warnings)
    }
}

/// Which resonator modes take part; `LowerOnly` removes the upper mode to
/// show that the dip is an interference effect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSelection {
    Both,
    LowerOnly,
}

/// Response of the mode at `center` to detuning `delta`.
fn mode_response(delta: f64, center: f64, gamma_r: f64) -> C64 {
    C64::new(delta - center, gamma_r / 2.0).inv()
}

pub fn scattering_amplitude_with(
    spec: &TwoModeCavitySpec,
    delta: f64,
    modes: ModeSelection,
) -> C64 {
    let half = spec.delta_spacing / 2.0;
    let lower = mode_response(delta, -half, spec.gamma_r);
    let sum = match modes {
        ModeSelection::Both => lower + mode_response(delta, half, spec.gamma_r),
        ModeSelection::LowerOnly => lower,
    };
    sum * (spec.g * spec.g)
}

/// `A₁(δ) = g² [1/(δ + Δ/2 + iΓ_R/2) + 1/(δ − Δ/2 + iΓ_R/2)]`.
pub fn scattering_amplitude(spec: &TwoModeCavitySpec, delta: f64) -> C64 {
    scattering_amplitude_with(spec, delta, ModeSelection::Both)
}

/// Two-photon absorption rate (unit prefactor): a Lorentzian in the pair
/// detuning `2δ` times the probability of one photon sitting in each mode.
pub fn two_photon_response(spec: &TwoModeCavitySpec, delta: f64) -> f64 {
    let half = spec.delta_spacing / 2.0;
    let w = spec.gamma_a / 2.0;
    let pair_resonance = w * w / (4.0 * delta * delta + w * w);
    let intensity = |center: f64| mode_response(delta, center, spec.gamma_r).norm_sqr();
    let coupling = (spec.g * spec.mu).powi(4);
    pair_resonance * coupling * intensity(-half) * intensity(half)
}

/// On-resonance scattering of one mode alone, `4g⁴/Γ_R²`.
pub fn single_mode_peak(spec: &TwoModeCavitySpec) -> f64 {
    scattering_amplitude_with(spec, -spec.delta_spacing / 2.0, ModeSelection::LowerOnly).norm_sqr()
}

/// Midpoint scattering relative to the single-mode peak.
pub fn dip_ratio(spec: &TwoModeCavitySpec) -> f64 {
    scattering_amplitude(spec, 0.0).norm_sqr() / single_mode_peak(spec)
}

/// Two-photon absorption over single-photon scattering at the midpoint.
pub fn suppression_figure(spec: &TwoModeCavitySpec) -> f64 {
    two_photon_response(spec, 0.0) / scattering_amplitude(spec, 0.0).norm_sqr()
}

pub const SPECTRAL_COLUMNS: [&str; 3] =
    ["delta", "single_photon_scattering", "two_photon_absorption"];

/// Grid symmetric about the midpoint of `[lo, hi]`, built so that mirrored
/// points are exact negatives when the range is symmetric.
pub fn detuning_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 points, got {n}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("empty detuning range [{lo}, {hi}]")));
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let m = (n - 1) as f64;
    Ok((0..n)
        .map(|i| mid + half * ((2 * i) as f64 - m) / m)
        .collect())
}

pub fn transparency_curves_with(
    spec: &TwoModeCavitySpec,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
    modes: ModeSelection,
) -> Result<ExperimentCurve> {
    let warnings = spec.validate()?;
    if !(delta_min <= 0.0 && delta_max >= 0.0) {
        return Err(Error::invalid(format!(
            "detuning range [{delta_min}, {delta_max}] must contain 0"
        )));
    }
    let grid = detuning_grid(delta_min, delta_max, n_points)?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&d| {
            let scattering = scattering_amplitude_with(spec, d, modes).norm_sqr();
            let absorption = match modes {
                ModeSelection::Both => two_photon_response(spec, d),
                ModeSelection::LowerOnly => 0.0,
            };
            vec![d, scattering, absorption]
        })
        .collect();
    let mut curve = ExperimentCurve::new("transparency", SPECTRAL_COLUMNS);
    for row in rows {
        curve.push_row(row)?;
    }
    curve.set_metadata("delta_spacing", format!("{}", spec.delta_spacing));
    curve.set_metadata("gamma_r", format!("{}", spec.gamma_r));
    curve.set_metadata("gamma_a", format!("{}", spec.gamma_a));
    curve.set_metadata("g", format!("{}", spec.g));
    curve.set_metadata("mu", format!("{}", spec.mu));
    curve.set_metadata("dip_ratio", format!("{:e}", dip_ratio(spec)));
    if modes == ModeSelection::LowerOnly {
        curve.set_metadata("modes", "lower-only");
    }
    for (i, w) in warnings.into_iter().enumerate() {
        curve.set_metadata(format!("warning_{i}"), w);
    }
    curve.set_plot(PlotHints {
        x_column: "delta".into(),
        y_columns: vec![
            "single_photon_scattering".into(),
            "two_photon_absorption".into(),
        ],
        x_log: false,
        y_log: true,
        x_label: "detuning δ / Δ".into(),
        y_label: "rate (arb. units)".into(),
    });
    Ok(curve)
}

/// `|A₁(δ)|²` and `T(δ)` tabulated over `[delta_min, delta_max]`.
pub fn transparency_curves(
    spec: &TwoModeCavitySpec,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
) -> Result<ExperimentCurve> {
    transparency_curves_with(spec, delta_min, delta_max, n_points, ModeSelection::Both)
}
