use zeno_core::cavity::*;
use zeno_core::master::{self, SinglePhotonLoss};
use zeno_core::zeno::CoupledModePair;

#[test]
fn inverse_volume_law() {
    let base = CavityParams::default();
    // dyadic volumes: the law holds with equality
    for (v1, v2) in [(1.0, 0.5), (0.25, 4.0), (0.125, 2.0)] {
        let r1 = absorption_ratio(&CavityParams {
            mode_volume: v1,
            ..base
        })
        .unwrap();
        let r2 = absorption_ratio(&CavityParams {
            mode_volume: v2,
            ..base
        })
        .unwrap();
        assert_eq!(r1 / r2, v2 / v1);
    }
    for (v1, v2) in [(0.3, 0.7), (1e-3, 0.37), (2.5, 1e-5)] {
        let r1 = absorption_ratio(&CavityParams {
            mode_volume: v1,
            ..base
        })
        .unwrap();
        let r2 = absorption_ratio(&CavityParams {
            mode_volume: v2,
            ..base
        })
        .unwrap();
        assert!(((r1 / r2) / (v2 / v1) - 1.0).abs() < 4.0 * f64::EPSILON);
    }
}

#[test]
fn ring_gate_reduces_to_coupled_pair() {
    let gammas = [0.0, 10.0, 316.0, 1e3];
    let pair = CoupledModePair::new(1.0).unwrap();
    let curve = master::error_vs_gamma(&pair, &gammas, SinglePhotonLoss::None).unwrap();
    for (row, &g) in curve.rows().iter().zip(&gammas) {
        let params = CavityParams {
            mode_volume: 1.0,
            base_gamma1: 0.0,
            base_gamma2: g,
            ring_coupling: 1.0,
            q_factor: f64::INFINITY,
        };
        let point = ring_gate_point(&params).unwrap();
        assert_eq!(point.gate_error.to_bits(), row[2].to_bits());
        assert_eq!(point.event_failure.to_bits(), row[1].to_bits());
    }
}

#[test]
fn smaller_volume_lowers_error() {
    let base = CavityParams {
        base_gamma2: 0.01,
        base_gamma1: 1e-4,
        ..CavityParams::default()
    };
    let curve = volume_sweep(&base, &[1e-3, 1e-4, 1e-5]).unwrap();
    let err = curve.column("gate_error").unwrap();
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
}

#[test]
fn lower_q_raises_error() {
    let params = CavityParams {
        base_gamma1: 0.0,
        base_gamma2: 1e3,
        ..CavityParams::default()
    };
    let errs = q_sweep(&params, &[1e6, 1e5, 1e4]).unwrap();
    assert!(errs[0].1 < errs[1].1 && errs[1].1 < errs[2].1, "{errs:?}");
}

#[test]
fn zero_coupling_captures_nothing() {
    let setup = CatchSetup::default();
    let pulse = SampledPulse::constant(0.0, setup.duration, setup.dt).unwrap();
    let out = catch_release(
        &setup.chain,
        &setup.initial_state().unwrap(),
        &pulse,
        setup.dt,
        1.0,
    )
    .unwrap();
    assert!(out.capture_efficiency.abs() < 1e-12);
}

#[test]
fn two_level_rabi_transfer() {
    let chain = WaveguideChain {
        n_sites: 10,
        hop: 0.0,
    };
    let g = 0.8;
    let t = std::f64::consts::FRAC_PI_2 / g;
    let pulse = SampledPulse::constant(g, t, 1e-3).unwrap();
    let out = catch_release(
        &chain,
        &chain.site_excitation(9).unwrap(),
        &pulse,
        1e-3,
        0.01,
    )
    .unwrap();
    assert!((out.capture_efficiency - 1.0).abs() < 1e-10);
    let mid = out
        .curve
        .rows()
        .iter()
        .min_by(|a, b| (a[0] - t / 2.0).abs().total_cmp(&(b[0] - t / 2.0).abs()))
        .unwrap();
    assert!((mid[1] - (g * mid[0]).sin().powi(2)).abs() < 1e-10);
}

#[test]
fn optimized_capture_and_release() {
    let setup = CatchSetup::default();
    let (pulse, efficiency) = optimize_capture(&setup, &PulseGrid::default()).unwrap();
    assert!(efficiency >= 0.9, "capture {efficiency} with {pulse:?}");
    let back = release(&setup, &pulse).unwrap();
    assert!(
        back >= efficiency * efficiency,
        "release {back} < {}",
        efficiency * efficiency
    );
}
