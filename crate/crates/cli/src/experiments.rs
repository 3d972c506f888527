//! The seven subcommands: parameter schemas and how each turns resolved
//! parameters into curves and a one-line summary.

use std::f64::consts::FRAC_1_SQRT_2;

use zeno_core::cavity::{self, CapturePulse, CatchSetup, CavityParams, PulseGrid, WaveguideChain};
use zeno_core::curve::ExperimentCurve;
use zeno_core::fock::C64;
use zeno_core::master::{self, SinglePhotonLoss};
use zeno_core::optics;
use zeno_core::transparency::{self, ModeSelection, TwoModeCavitySpec};
use zeno_core::zeno::{self, CoupledModePair};

use crate::error::CliError;
use crate::params::{ParamKind, ParamSet, ParamSpec};

pub struct Outcome {
    pub curves: Vec<ExperimentCurve>,
    pub summary: String,
}

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [ParamSpec],
    pub run: fn(&ParamSet) -> Result<Outcome, CliError>,
}

use ParamKind::{Bool, Choice, Count, CountList, Float};

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "cnot",
        about: "Post-selected polarizing-beam-splitter CNOT: truth table, success probability, outcome patterns",
        params: &[],
        run: run_cnot,
    },
    Experiment {
        name: "zeno-n",
        about: "Gate error versus number of no-bunching measurements",
        params: &[
            ParamSpec::new("kappa", Float, "1", "coupling rate κ"),
            ParamSpec::new("n", CountList, "1..200", "measurement counts, e.g. 3..200 or 5,10,20"),
        ],
        run: run_zeno_n,
    },
    Experiment {
        name: "zeno-tpa",
        about: "Gate error and failure probability versus two-photon absorption rate",
        params: &[
            ParamSpec::new("kappa", Float, "1", "coupling rate κ"),
            ParamSpec::new("gamma_min", Float, "0.1", "smallest γ₂/κ on the log grid"),
            ParamSpec::new("gamma_max", Float, "10000", "largest γ₂/κ on the log grid"),
            ParamSpec::new("points", Count, "61", "log-grid points"),
            ParamSpec::new("include_zero", Bool, "true", "prepend a γ₂ = 0 row"),
            ParamSpec::new("gamma1", Float, "0", "fixed single-photon loss rate"),
            ParamSpec::new("gamma1_ratio", Float, "0", "single-photon loss as a fraction of γ₂"),
        ],
        run: run_zeno_tpa,
    },
    Experiment {
        name: "swap-prime",
        about: "Process tomography of the absorption gate at one rate",
        params: &[
            ParamSpec::new("kappa", Float, "1", "coupling rate κ"),
            ParamSpec::new("gamma2_over_kappa", Float, "1000", "two-photon absorption rate γ₂/κ"),
            ParamSpec::new("gamma1", Float, "0", "single-photon loss rate"),
        ],
        run: run_swap_prime,
    },
    Experiment {
        name: "cavity-ratio",
        about: "Absorption ratio and gate error versus cavity mode volume",
        params: &[
            ParamSpec::new("base_gamma1", Float, "0.01", "single-photon scattering rate at V = 1"),
            ParamSpec::new("base_gamma2", Float, "0.01", "two-photon absorption rate at V = 1"),
            ParamSpec::new("ring_coupling", Float, "1", "ring-ring coupling κ"),
            ParamSpec::new("q_factor", Float, "1000000", "intrinsic quality factor (inf for lossless)"),
            ParamSpec::new("v_min", Float, "0.00001", "smallest mode volume"),
            ParamSpec::new("v_max", Float, "1", "largest mode volume"),
            ParamSpec::new("points", Count, "11", "log-grid points"),
        ],
        run: run_cavity_ratio,
    },
    Experiment {
        name: "catch",
        about: "Capture of a travelling photon by a resonator with a shaped coupling pulse",
        params: &[
            ParamSpec::new("n_sites", Count, "40", "waveguide sites"),
            ParamSpec::new("hop", Float, "1", "nearest-neighbour hopping"),
            ParamSpec::new("center", Float, "19.5", "initial packet centre (site)"),
            ParamSpec::new("width", Float, "10", "packet intensity FWHM (sites)"),
            ParamSpec::new("duration", Float, "20", "pulse length"),
            ParamSpec::new("dt", Float, "0.0025", "integration step (upper bound)"),
            ParamSpec::new("g_max", Float, "3", "coupling ceiling"),
            ParamSpec::new("search", Bool, "true", "grid-search the pulse parameters"),
            ParamSpec::new("t_center", Float, "10", "pulse centre time (when search = false)"),
            ParamSpec::new("sigma_t", Float, "2.4", "pulse width (when search = false)"),
            ParamSpec::new("t_off", Float, "18", "coupling switch-off time (when search = false)"),
            ParamSpec::new("record_interval", Float, "0.1", "time between recorded rows"),
        ],
        run: run_catch,
    },
    Experiment {
        name: "transparency",
        about: "Single-photon scattering and two-photon absorption spectra of a two-mode cavity",
        params: &[
            ParamSpec::new("delta_spacing", Float, "1", "mode separation Δ"),
            ParamSpec::new("gamma_r", Float, "0.03", "resonator linewidth Γ_R"),
            ParamSpec::new("gamma_a", Float, "0.1", "two-photon linewidth Γ_A"),
            ParamSpec::new("g", Float, "1", "photon-mode coupling"),
            ParamSpec::new("mu", Float, "1", "mode-absorber coupling"),
            ParamSpec::new("delta_min", Float, "-1.5", "lowest detuning"),
            ParamSpec::new("delta_max", Float, "1.5", "highest detuning"),
            ParamSpec::new("points", Count, "601", "detuning points"),
            ParamSpec::new("modes", Choice(&["both", "lower"]), "both", "both modes, or the lower one alone"),
        ],
        run: run_transparency,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn fmt_sig(v: f64) -> String {
    format!("{v:.4e}")
}

// ---------------------------------------------------------------------------

fn run_cnot(_: &ParamSet) -> Result<Outcome, CliError> {
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    let s = C64::from(FRAC_1_SQRT_2);
    let (h, v) = ([one, zero], [zero, one]);
    let plus = [s, s];
    let minus = [s, -s];
    let inputs = [(h, h), (h, v), (v, h), (v, v), (plus, h), (minus, v)];

    let mut table = ExperimentCurve::new(
        "cnot",
        [
            "control_h",
            "control_v",
            "target_h",
            "target_v",
            "success_probability",
            "fidelity",
        ],
    );
    let mut basis_probs = Vec::new();
    let mut min_fidelity = f64::INFINITY;
    for (k, (c, t)) in inputs.iter().enumerate() {
        let result = optics::cnot_product(*c, *t)?;
        let logical = [c[0] * t[0], c[0] * t[1], c[1] * t[0], c[1] * t[1]];
        let fidelity = result.min_fidelity(&optics::ideal_cnot(&logical));
        min_fidelity = min_fidelity.min(fidelity);
        if k < 4 {
            basis_probs.push(result.success_probability);
        }
        table.push_row(vec![
            c[0].re,
            c[1].re,
            t[0].re,
            t[1].re,
            result.success_probability,
            fidelity,
        ])?;
    }

    let circuit = optics::cnot_circuit()?;
    let mut patterns = ExperimentCurve::new(
        "cnot-patterns",
        [
            "input",
            "control",
            "ancilla1",
            "ancilla2",
            "target",
            "probability",
            "accepted",
        ],
    );
    let mut unexplained = 0usize;
    for k in 0..4 {
        let mut logical = [zero; 4];
        logical[k] = one;
        let input = optics::cnot_input(circuit.basis(), &logical)?;
        for (counts, p) in optics::path_count_distribution(&circuit, &input)? {
            let accepted = counts[optics::ANCILLA1_PATH] == 1 && counts[optics::ANCILLA2_PATH] == 1;
            if !accepted && counts.iter().all(|&n| n < 2) {
                unexplained += 1;
            }
            let mut row = vec![k as f64];
            row.extend(counts.iter().map(|&n| n as f64));
            row.extend([p, if accepted { 1.0 } else { 0.0 }]);
            patterns.push_row(row)?;
        }
    }

    let probs = if basis_probs.iter().all(|p| (p - 0.25).abs() < 1e-9) {
        format!("{:.4} for all four basis inputs", basis_probs[0])
    } else {
        basis_probs
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let failure = if unexplained == 0 {
        "every rejected pattern has two photons in one path".to_string()
    } else {
        format!("{unexplained} rejected patterns without bunching")
    };
    table.set_metadata("min_fidelity", format!("{min_fidelity:.12}"));
    Ok(Outcome {
        summary: format!(
            "cnot: success probability {probs}; min fidelity {min_fidelity:.9}; {failure}"
        ),
        curves: vec![table, patterns],
    })
}

fn run_zeno_n(p: &ParamSet) -> Result<Outcome, CliError> {
    let pair = CoupledModePair::new(p.float("kappa"))?;
    let curve = zeno::error_vs_n(&pair, &p.counts("n"))?;
    let first = curve
        .rows()
        .iter()
        .find(|r| r[3] == 0.0)
        .or(curve.rows().first());
    let last = curve.rows().last();
    let describe = |r: Option<&Vec<f64>>| {
        r.map(|r| format!("N={} gate_error={}", r[0], fmt_sig(r[1])))
            .unwrap_or_default()
    };
    Ok(Outcome {
        summary: format!(
            "zeno-n: {} rows; {}; {}",
            curve.len(),
            describe(first),
            describe(last)
        ),
        curves: vec![curve],
    })
}

fn single_photon_loss(p: &ParamSet) -> Result<SinglePhotonLoss, CliError> {
    let (fixed, ratio) = (p.float("gamma1"), p.float("gamma1_ratio"));
    match (fixed > 0.0, ratio > 0.0) {
        (true, true) => Err(CliError::Validation(
            "set gamma1 or gamma1_ratio, not both".into(),
        )),
        (true, false) => Ok(SinglePhotonLoss::Fixed(fixed)),
        (false, true) => Ok(SinglePhotonLoss::Proportional(ratio)),
        (false, false) if fixed < 0.0 || ratio < 0.0 => Err(CliError::Validation(
            "loss rates must be nonnegative".into(),
        )),
        (false, false) => Ok(SinglePhotonLoss::None),
    }
}

fn run_zeno_tpa(p: &ParamSet) -> Result<Outcome, CliError> {
    let kappa = p.float("kappa");
    let pair = CoupledModePair::new(kappa)?;
    let mut ratios = Vec::new();
    if p.flag("include_zero") {
        ratios.push(0.0);
    }
    ratios.extend(master::log_grid(
        p.float("gamma_min"),
        p.float("gamma_max"),
        p.count("points"),
    )?);
    let gammas: Vec<f64> = ratios.iter().map(|r| r * kappa).collect();
    let curve = master::error_vs_gamma(&pair, &gammas, single_photon_loss(p)?)?;
    let first = curve.rows().first().expect("at least one point");
    let last = curve.rows().last().expect("at least one point");
    Ok(Outcome {
        summary: format!(
            "zeno-tpa: {} points; gate_error {} at γ₂/κ={} → {} at γ₂/κ={}",
            curve.len(),
            fmt_sig(first[2]),
            first[0],
            fmt_sig(last[2]),
            last[0]
        ),
        curves: vec![curve],
    })
}

fn run_swap_prime(p: &ParamSet) -> Result<Outcome, CliError> {
    let kappa = p.float("kappa");
    let ratio = p.float("gamma2_over_kappa");
    let pair = CoupledModePair::new(kappa)?;
    let problem = master::absorption_problem(&pair, ratio * kappa, p.float("gamma1"))?;
    let point = master::evaluate_gate(&pair, &problem)?;
    let ideal = zeno::swap_prime_ideal();
    let fidelity = 1.0 - point.gate_error;

    let mut choi = ExperimentCurve::new("swap-prime", ["row", "col", "re", "im"]);
    let j = point.process.choi();
    for r in 0..j.nrows() {
        for c in 0..j.ncols() {
            choi.push_row(vec![r as f64, c as f64, j[(r, c)].re, j[(r, c)].im])?;
        }
    }
    let mut map = ExperimentCurve::new(
        "swap-prime-map",
        ["out", "in", "re", "im", "ideal_re", "ideal_im"],
    );
    let m = point.process.coherent_map();
    for out in 0..4 {
        for inp in 0..4 {
            map.push_row(vec![
                out as f64,
                inp as f64,
                m[(out, inp)].re,
                m[(out, inp)].im,
                ideal[(out, inp)].re,
                ideal[(out, inp)].im,
            ])?;
        }
    }
    for curve in [&mut choi, &mut map] {
        curve.set_metadata("process_fidelity", format!("{fidelity:.12e}"));
        curve.set_metadata("gate_error", format!("{:.12e}", point.gate_error));
        curve.set_metadata("event_failure", format!("{:.12e}", point.event_failure));
        curve.set_metadata(
            "choi_min_eigenvalue",
            format!("{:.3e}", point.process.min_eigenvalue()),
        );
        curve.set_metadata("steps", format!("{}", problem.steps()));
    }
    let phase = m[(3, 3)].arg();
    let transfer = (m[(2, 1)] - ideal[(2, 1)]).norm();
    Ok(Outcome {
        summary: format!(
            "swap-prime: γ₂/κ={ratio} fidelity={fidelity:.6} gate_error={} event_failure={} |1,0⟩→|0,1⟩ error={} |1,1⟩ phase={:.4} rad",
            fmt_sig(point.gate_error),
            fmt_sig(point.event_failure),
            fmt_sig(transfer),
            phase
        ),
        curves: vec![choi, map],
    })
}

fn run_cavity_ratio(p: &ParamSet) -> Result<Outcome, CliError> {
    let params = CavityParams {
        mode_volume: 1.0,
        base_gamma1: p.float("base_gamma1"),
        base_gamma2: p.float("base_gamma2"),
        ring_coupling: p.float("ring_coupling"),
        q_factor: p.float("q_factor"),
    };
    let volumes = master::log_grid(p.float("v_min"), p.float("v_max"), p.count("points"))?;
    let curve = cavity::volume_sweep(&params, &volumes)?;
    let first = curve.rows().first().expect("at least one point");
    let last = curve.rows().last().expect("at least one point");
    Ok(Outcome {
        summary: format!(
            "cavity-ratio: {} volumes; V={} ratio={} gate_error={}; V={} ratio={} gate_error={}",
            curve.len(),
            first[0],
            fmt_sig(first[1]),
            fmt_sig(first[4]),
            last[0],
            fmt_sig(last[1]),
            fmt_sig(last[4])
        ),
        curves: vec![curve],
    })
}

fn run_catch(p: &ParamSet) -> Result<Outcome, CliError> {
    let setup = CatchSetup {
        chain: WaveguideChain {
            n_sites: p.count("n_sites"),
            hop: p.float("hop"),
        },
        center: p.float("center"),
        width: p.float("width"),
        duration: p.float("duration"),
        dt: p.float("dt"),
        g_max: p.float("g_max"),
    };
    let pulse = if p.flag("search") {
        cavity::optimize_capture(&setup, &PulseGrid::default())?.0
    } else {
        CapturePulse {
            t_center: p.float("t_center"),
            sigma_t: p.float("sigma_t"),
            t_off: p.float("t_off"),
            g_max: setup.g_max,
        }
    };
    let outcome = setup.run(&pulse, p.float("record_interval"))?;
    let released = cavity::release(&setup, &pulse)?;
    let mut curve = outcome.curve;
    curve.set_metadata("pulse_t_center", format!("{}", pulse.t_center));
    curve.set_metadata("pulse_sigma_t", format!("{}", pulse.sigma_t));
    curve.set_metadata("pulse_t_off", format!("{}", pulse.t_off));
    curve.set_metadata(
        "capture_efficiency",
        format!("{:.12e}", outcome.capture_efficiency),
    );
    curve.set_metadata("release_efficiency", format!("{released:.12e}"));
    Ok(Outcome {
        summary: format!(
            "catch: capture efficiency {:.6} (t_c={}, σ_t={}, t_off={}); release {:.6}",
            outcome.capture_efficiency, pulse.t_center, pulse.sigma_t, pulse.t_off, released
        ),
        curves: vec![curve],
    })
}

fn run_transparency(p: &ParamSet) -> Result<Outcome, CliError> {
    let spec = TwoModeCavitySpec {
        delta_spacing: p.float("delta_spacing"),
        gamma_r: p.float("gamma_r"),
        gamma_a: p.float("gamma_a"),
        g: p.float("g"),
        mu: p.float("mu"),
    };
    let modes = match p.raw("modes") {
        "lower" => ModeSelection::LowerOnly,
        _ => ModeSelection::Both,
    };
    let curve = transparency::transparency_curves_with(
        &spec,
        p.float("delta_min"),
        p.float("delta_max"),
        p.count("points"),
        modes,
    )?;
    let s = curve.column("single_photon_scattering").expect("column");
    let d = curve.column("delta").expect("column");
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let at_zero = d.iter().position(|&x| x == 0.0).map(|i| s[i] / smax);
    let mut summary = format!(
        "transparency: {} points; dip ratio {}",
        curve.len(),
        fmt_sig(transparency::dip_ratio(&spec))
    );
    if let Some(r) = at_zero {
        summary.push_str(&format!("; scattering(0)/max = {}", fmt_sig(r)));
    }
    for (k, w) in curve
        .metadata()
        .iter()
        .filter(|(k, _)| k.starts_with("warning"))
    {
        summary.push_str(&format!("; {k}: {w}"));
    }
    Ok(Outcome {
        summary,
        curves: vec![curve],
    })
}
