//! End-to-end acceptance suite. Runs without the libtest harness so the
//! PASS/FAIL line for each criterion is always printed; exits nonzero if
//! any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zeno_core::cavity::{self, CapturePulse, CatchSetup, CavityParams, PulseGrid, SampledPulse};
use zeno_core::fock::{self, DensityMatrix, C64};
use zeno_core::master::{self, SinglePhotonLoss, CHECKPOINTS};
use zeno_core::optics;
use zeno_core::transparency::{self, TwoModeCavitySpec};
use zeno_core::zeno::{self, CoupledModePair};
use zeno_sim::experiments::EXPERIMENTS;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn engine<T>(r: zeno_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Closed form for the fraction of `|1,1⟩` lost to N no-bunching checks.
fn zeno_closed_form(n: usize) -> f64 {
    1.0 - (PI / n as f64).cos().powi(2 * n as i32)
}

fn tpa_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(master::log_grid(0.1, 1e4, 61).unwrap());
    g
}

fn random_logical(rng: &mut ChaCha8Rng) -> [C64; 4] {
    let mut a = [C64::from(0.0); 4];
    for x in &mut a {
        *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    a.map(|x| x / n)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    let mut worst_p: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for c in [[one, zero], [zero, one]] {
        for t in [[one, zero], [zero, one]] {
            let r = engine(optics::cnot_product(c, t))?;
            let logical = [c[0] * t[0], c[0] * t[1], c[1] * t[0], c[1] * t[1]];
            worst_p = worst_p.max((r.success_probability - 0.25).abs());
            worst_f = worst_f.max(1.0 - r.min_fidelity(&optics::ideal_cnot(&logical)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..20 {
        let logical = random_logical(&mut rng);
        let r = engine(optics::cnot_logical(&logical))?;
        worst_p = worst_p.max((r.success_probability - 0.25).abs());
        worst_f = worst_f.max(1.0 - r.min_fidelity(&optics::ideal_cnot(&logical)));
    }
    ensure(
        worst_p <= 1e-9,
        format!("success probability off by {worst_p:e}"),
    )?;
    ensure(worst_f <= 1e-9, format!("fidelity short by {worst_f:e}"))?;
    let took = within_time(start, Duration::from_secs(5))?;
    Ok(format!(
        "24 inputs, max |p − 1/4| = {worst_p:.1e}, max 1 − F = {worst_f:.1e}, {took:.2?}"
    ))
}

fn criterion_2() -> Check {
    let circuit = engine(optics::cnot_circuit())?;
    let rule = optics::cnot_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let zero = C64::from(0.0);
    let mut inputs: Vec<[C64; 4]> = (0..4)
        .map(|k| {
            let mut a = [zero; 4];
            a[k] = C64::from(1.0);
            a
        })
        .collect();
    inputs.extend((0..4).map(|_| random_logical(&mut rng)));
    let (mut rejected, mut total_accepted) = (0usize, 0.0);
    for logical in &inputs {
        let input = engine(optics::cnot_input(circuit.basis(), logical))?;
        let dist = engine(optics::path_count_distribution(&circuit, &input))?;
        let total: f64 = dist.iter().map(|d| d.1).sum();
        ensure(
            (total - 1.0).abs() < 1e-9,
            format!("pattern probabilities sum to {total}"),
        )?;
        let mut accepted_p = 0.0;
        for (counts, p) in &dist {
            if *p < 1e-15 {
                continue;
            }
            let detectors = [counts[optics::ANCILLA1_PATH], counts[optics::ANCILLA2_PATH]];
            let accepted = detectors == [1, 1];
            if accepted {
                accepted_p += p;
            } else {
                rejected += 1;
                ensure(
                    counts.contains(&2),
                    format!("rejected pattern {counts:?} (p = {p:e}) has no doubly occupied path"),
                )?;
            }
        }
        total_accepted += accepted_p;
        ensure(
            rule.accepted.len() == 4,
            "post-selection accepts four detector patterns",
        )?;
    }
    Ok(format!(
        "{rejected} rejected path patterns over {} inputs, all with two photons in one path; mean accepted probability {:.4}",
        inputs.len(),
        total_accepted / inputs.len() as f64
    ))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let pair = engine(CoupledModePair::new(1.0))?;
    let ns: Vec<usize> = (3..=200).collect();
    let curve = engine(zeno::error_vs_n(&pair, &ns))?;
    let mut worst: f64 = 0.0;
    for row in curve.rows() {
        worst = worst.max((row[1] - zeno_closed_form(row[0] as usize)).abs());
    }
    ensure(
        worst <= 1e-10,
        format!("max deviation from 1 − cos^2N(π/N) is {worst:e}"),
    )?;
    let big = engine(zeno::error_vs_n(&pair, &[10_000]))?;
    let scaled = 1e4 * big.rows()[0][1];
    let rel = (scaled - PI * PI).abs() / (PI * PI);
    ensure(
        rel < 0.01,
        format!(
            "N·error at N = 1e4 is {scaled}, {:.2}% from π²",
            rel * 100.0
        ),
    )?;
    let took = within_time(start, Duration::from_secs(10))?;
    Ok(format!("max deviation {worst:.1e} over N = 3..200; N·error(1e4) = {scaled:.5} ({:.3}% from π²), {took:.2?}", rel * 100.0))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let pair = engine(CoupledModePair::new(1.0))?;
    let curve = engine(master::error_vs_gamma(
        &pair,
        &tpa_grid(),
        SinglePhotonLoss::None,
    ))?;
    let took = within_time(start, Duration::from_secs(60))?;
    let rows = curve.rows();
    let e0 = rows[0][2];
    ensure(
        (e0 - 0.75).abs() <= 1e-6,
        format!("gate error at γ₂ = 0 is {e0}"),
    )?;
    let band: Vec<&Vec<f64>> = rows
        .iter()
        .filter(|r| r[0] >= 10.0 * (1.0 - 1e-12) && r[0] <= 1e4 * (1.0 + 1e-12))
        .collect();
    for w in band.windows(2) {
        ensure(
            w[1][2] <= w[0][2],
            format!(
                "gate error rises from {:e} to {:e} between γ₂/κ = {} and {}",
                w[0][2], w[1][2], w[0][0], w[1][0]
            ),
        )?;
    }
    let (lo, hi) = (band.first().unwrap(), band.last().unwrap());
    ensure(
        hi[2] < lo[2] / 10.0,
        format!(
            "error({}) = {:e} not below error({})/10 = {:e}",
            hi[0],
            hi[2],
            lo[0],
            lo[2] / 10.0
        ),
    )?;
    Ok(format!(
        "error(0) = {e0:.9}; monotone over {} points in [10, 1e4]; error(10) = {:.3e}, error(1e4) = {:.3e}; {took:.2?}",
        band.len(),
        lo[2],
        hi[2]
    ))
}

fn criterion_5() -> Check {
    let pair = engine(CoupledModePair::new(1.0))?;
    let problem = engine(master::absorption_problem(&pair, 1e3, 0.0))?;
    let point = engine(master::evaluate_gate(&pair, &problem))?;
    let m = point.process.coherent_map();
    // subspace order |0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩
    let minus_i = C64::new(0.0, -1.0);
    let transfer = (m[(1, 2)] - minus_i)
        .norm()
        .max((m[(2, 1)] - minus_i).norm());
    let phase = m[(3, 3)].arg();
    ensure(
        transfer <= 1e-3,
        format!("|1,0⟩ → −i|0,1⟩ amplitude error {transfer:e}"),
    )?;
    ensure(phase.abs() <= 0.05, format!("|1,1⟩ phase {phase} rad"))?;
    Ok(format!(
        "γ₂/κ = 1e3: transfer amplitude error {transfer:.1e}, |1,1⟩ phase {phase:.1e} rad, |1,1⟩ amplitude {:.4}, process fidelity {:.6}",
        m[(3, 3)].norm(),
        1.0 - point.gate_error
    ))
}

fn criterion_6() -> Check {
    let base = CavityParams::default();
    let ratio = |v: f64| {
        engine(cavity::absorption_ratio(&CavityParams {
            mode_volume: v,
            ..base
        }))
    };
    let dyadic = [1.0, 0.5, 0.25, 0.125, 2f64.powi(-10), 2f64.powi(-17)];
    for &v1 in &dyadic {
        for &v2 in &dyadic {
            let (r1, r2) = (ratio(v1)?, ratio(v2)?);
            ensure(
                r1 / r2 == v2 / v1,
                format!("ratio({v1})/ratio({v2}) = {} ≠ {}", r1 / r2, v2 / v1),
            )?;
        }
    }
    let decades = engine(master::log_grid(1e-5, 1.0, 11))?;
    let mut worst_ulps: f64 = 0.0;
    for &v1 in &decades {
        for &v2 in &decades {
            let (got, want) = (ratio(v1)? / ratio(v2)?, v2 / v1);
            worst_ulps = worst_ulps.max((got - want).abs() / (want * f64::EPSILON));
        }
    }

    let pair = engine(CoupledModePair::new(1.0))?;
    let gammas = tpa_grid();
    let reference = engine(master::error_vs_gamma(
        &pair,
        &gammas,
        SinglePhotonLoss::None,
    ))?;
    for (g, row) in gammas.iter().zip(reference.rows()) {
        let params = CavityParams {
            mode_volume: 1.0,
            base_gamma1: 0.0,
            base_gamma2: *g,
            ring_coupling: 1.0,
            q_factor: f64::INFINITY,
        };
        let point = engine(cavity::ring_gate_point(&params))?;
        ensure(
            point.event_failure.to_bits() == row[1].to_bits()
                && point.gate_error.to_bits() == row[2].to_bits(),
            format!("ring gate at γ₂ = {g} differs from the coupled-mode sweep"),
        )?;
    }
    Ok(format!(
        "exact inverse-volume law on dyadic volumes ({} pairs), ≤ {worst_ulps:.0} ulp on the decade grid; ring gate bit-identical on {} rates",
        dyadic.len() * dyadic.len(),
        gammas.len()
    ))
}

fn criterion_7() -> Check {
    let setup = CatchSetup::default();
    let initial = engine(setup.initial_state())?;
    let off = engine(SampledPulse::constant(0.0, setup.duration, setup.dt))?;
    let idle = engine(cavity::catch_release(
        &setup.chain,
        &initial,
        &off,
        setup.dt,
        f64::INFINITY,
    ))?;
    ensure(
        idle.capture_efficiency.abs() <= 1e-12,
        format!("uncoupled capture {:e}", idle.capture_efficiency),
    )?;

    let (pulse, efficiency) = engine(cavity::optimize_capture(&setup, &PulseGrid::default()))?;
    ensure(
        efficiency >= 0.9,
        format!("best capture efficiency {efficiency}"),
    )?;
    let outcome = engine(setup.run(&pulse, 0.1))?;
    let mut drift: f64 = (outcome.final_state.norm_squared() - 1.0).abs();
    let res = outcome.curve.column("resonator_population").unwrap();
    let chain = outcome.curve.column("chain_population").unwrap();
    for (r, c) in res.iter().zip(&chain) {
        drift = drift.max((r + c - 1.0).abs());
    }
    ensure(drift <= 1e-9, format!("excitation drifted by {drift:e}"))?;
    let weak = CapturePulse {
        g_max: 0.5,
        ..pulse
    };
    let weak_run = engine(setup.run(&weak, f64::INFINITY))?;
    let weak_drift = (weak_run.final_state.norm_squared() - 1.0).abs();
    ensure(
        weak_drift <= 1e-9,
        format!("excitation drifted by {weak_drift:e} with a weaker pulse"),
    )?;
    Ok(format!(
        "uncoupled capture {:.1e}; best pulse (t_c = {}, σ_t = {}, t_off = {}) captures {efficiency:.5}; excitation drift {drift:.1e}",
        idle.capture_efficiency, pulse.t_center, pulse.sigma_t, pulse.t_off
    ))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let spec = TwoModeCavitySpec::default();
    let curve = engine(transparency::transparency_curves(&spec, -1.5, 1.5, 601))?;
    let d = curve.column("delta").unwrap();
    let s = curve.column("single_photon_scattering").unwrap();
    let t = curve.column("two_photon_absorption").unwrap();
    let n = d.len();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut asym: f64 = 0.0;
    for i in 0..n {
        ensure(d[i] == -d[n - 1 - i], "detuning grid is not symmetric")?;
        asym = asym.max((s[i] - s[n - 1 - i]).abs() / smax);
    }
    ensure(asym <= 1e-10, format!("scattering asymmetry {asym:e}"))?;
    let mid = n / 2;
    ensure(d[mid] == 0.0, "grid misses δ = 0")?;
    ensure(
        s[mid] < s[mid - 1] && s[mid] < s[mid + 1],
        "no local minimum of scattering at δ = 0",
    )?;
    let argmax = |v: &[f64], range: std::ops::Range<usize>| {
        range.max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
    };
    let upper = d[argmax(&s, mid..n)];
    let lower = d[argmax(&s, 0..mid)];
    let half = spec.delta_spacing / 2.0;
    ensure(
        (upper - half).abs() <= 0.05 * spec.delta_spacing
            && (lower + half).abs() <= 0.05 * spec.delta_spacing,
        format!("scattering maxima at {lower}, {upper}"),
    )?;
    ensure(
        argmax(&t, 0..n) == mid,
        format!("two-photon peak at δ = {}", d[argmax(&t, 0..n)]),
    )?;
    let dip = transparency::dip_ratio(&spec);
    let (gr, dl) = (spec.gamma_r, spec.delta_spacing);
    let closed = 4.0 * gr.powi(4) / (dl * dl + gr * gr).powi(2);
    ensure(
        (dip - closed).abs() <= 1e-12,
        format!("dip ratio {dip:e} vs closed form {closed:e}"),
    )?;
    ensure(dip <= 1e-4, format!("dip ratio {dip:e}"))?;
    let took = within_time(start, Duration::from_secs(2))?;
    Ok(format!(
        "asymmetry {asym:.1e}; minimum at 0, maxima at {lower}, {upper}; two-photon peak at 0; dip ratio {dip:.3e}; {took:.2?}"
    ))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Check {
    // unitarity
    let pair = engine(CoupledModePair::new(1.0))?;
    let mut unitarity: f64 = 0.0;
    for t in [0.1, FRAC_PI_2, 10.0] {
        unitarity =
            unitarity.max(engine(fock::propagator(&pair.hamiltonian(), t))?.unitarity_deviation());
    }
    let circuit = engine(optics::cnot_circuit())?;
    unitarity = unitarity.max(circuit.unitary().unitarity_deviation());
    ensure(
        unitarity <= 1e-10,
        format!("unitarity deviation {unitarity:e}"),
    )?;

    // trace, positivity and step convergence across the absorption sweep,
    // with and without single-photon loss
    let rho0 = DensityMatrix::from_pure(&pair.state([1, 1]));
    let mixed = {
        let a = DensityMatrix::from_pure(&pair.state([0, 1]));
        let b = DensityMatrix::from_pure(&pair.state([1, 1]));
        engine(DensityMatrix::new(
            pair.basis().clone(),
            (a.matrix() + b.matrix()) * C64::from(0.5),
        ))?
    };
    let (mut trace_dev, mut min_eig, mut half_step): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for g in tpa_grid() {
        for g1 in [0.0, 0.1 * g] {
            let problem = engine(master::absorption_problem(&pair, g, g1))?;
            for start in [&rho0, &mixed] {
                let traj = engine(master::integrate_checkpoints(&problem, start, CHECKPOINTS))?;
                for rho in &traj.states {
                    trace_dev = trace_dev.max((rho.trace() - 1.0).abs());
                    min_eig = min_eig.min(rho.min_eigenvalue());
                }
            }
            half_step = half_step.max(engine(master::half_step_difference(&problem, &rho0))?);
        }
    }
    ensure(trace_dev <= 1e-8, format!("trace deviation {trace_dev:e}"))?;
    ensure(
        min_eig >= -1e-9,
        format!("density matrix eigenvalue {min_eig:e}"),
    )?;
    ensure(
        half_step <= 1e-8,
        format!("half-step difference {half_step:e}"),
    )?;

    // byte-identical reruns
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for exp in EXPERIMENTS {
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{}-{k}", exp.name));
            let mut stdout = Vec::new();
            let mut stderr = Vec::new();
            let code = zeno_sim::run(
                ["zeno-sim", exp.name, "--out", out.to_str().unwrap()],
                &mut stdout,
                &mut stderr,
            );
            ensure(
                code == 0,
                format!(
                    "{} exited {code}: {}",
                    exp.name,
                    String::from_utf8_lossy(&stderr)
                ),
            )?;
            runs.push((stdout, read_tree(&out)));
        }
        ensure(
            runs[0] == runs[1],
            format!("{} output differs between runs", exp.name),
        )?;
        files += runs[0].1.len();
    }
    Ok(format!(
        "unitarity {unitarity:.1e}; trace drift {trace_dev:.1e}; min eigenvalue {min_eig:.1e}; half-step {half_step:.1e}; {files} files identical across reruns of {} subcommands",
        EXPERIMENTS.len()
    ))
}

fn main() {
    let criteria: [(usize, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = Vec::new();
    for (n, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {n}: PASS — {detail}"),
            Err(why) => {
                println!("criterion {n}: FAIL — {why}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
