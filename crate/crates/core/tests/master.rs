use zeno_core::fock::{CMatrix, C64};
use zeno_core::master::*;
use zeno_core::zeno::{self, CoupledModePair};

/// Plain coupler at the full-transfer time on {|00⟩,|01⟩,|10⟩,|11⟩}:
/// single photons hop with −i, |1,1⟩ picks up −1.
fn plain_coupler() -> CMatrix {
    let mi = C64::new(0.0, -1.0);
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = C64::from(1.0);
    m[(2, 1)] = mi;
    m[(1, 2)] = mi;
    m[(3, 3)] = C64::from(-1.0);
    m
}

#[test]
fn no_absorption_gives_plain_swap_defect() {
    let pair = CoupledModePair::new(1.0).unwrap();
    let curve = error_vs_gamma(&pair, &[0.0], SinglePhotonLoss::None).unwrap();
    let m = plain_coupler();
    let oracle = 1.0 - (zeno::swap_prime_ideal().adjoint() * m).trace().norm_sqr() / 16.0;
    assert!((curve.rows()[0][2] - oracle).abs() < 1e-6);
    assert!((oracle - 0.75).abs() < 1e-15);
    assert!(curve.rows()[0][1].abs() < 1e-9);
}

#[test]
fn strong_absorption_approaches_swap_prime() {
    let pair = CoupledModePair::new(1.0).unwrap();
    let gammas = [10.0, 100.0, 1e3, 1e4];
    let curve = error_vs_gamma(&pair, &gammas, SinglePhotonLoss::None).unwrap();
    let err = curve.column("gate_error").unwrap();
    for w in err.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(err[3] < err[0] / 10.0);
    assert_eq!(curve.column("gamma2_over_kappa").unwrap(), gammas.to_vec());
}

#[test]
fn single_photon_loss_only_adds_error() {
    let pair = CoupledModePair::new(1.0).unwrap();
    let clean = error_vs_gamma(&pair, &[100.0], SinglePhotonLoss::None).unwrap();
    let lossy = error_vs_gamma(&pair, &[100.0], SinglePhotonLoss::Proportional(1e-3)).unwrap();
    let fixed = error_vs_gamma(&pair, &[100.0], SinglePhotonLoss::Fixed(0.5)).unwrap();
    assert!(lossy.rows()[0][2] > clean.rows()[0][2]);
    assert!(fixed.rows()[0][2] > lossy.rows()[0][2]);
}

#[test]
fn swap_prime_coherent_map_at_strong_absorption() {
    let pair = CoupledModePair::new(1.0).unwrap();
    let problem = absorption_problem(&pair, 1e3, 0.0).unwrap();
    let point = evaluate_gate(&pair, &problem).unwrap();
    let m = point.process.coherent_map();
    let mi = C64::new(0.0, -1.0);
    assert!((m[(2, 1)] - mi).norm() < 1e-3);
    assert!((m[(1, 2)] - mi).norm() < 1e-3);
    assert!(m[(3, 3)].arg().abs() < 0.05);
    assert!(point.process.min_eigenvalue() > -1e-9);
}

#[test]
fn log_grid_endpoints() {
    let g = log_grid(0.1, 1e4, 61).unwrap();
    assert_eq!(g.len(), 61);
    assert!((g[0] - 0.1).abs() < 1e-15);
    assert!((g[60] - 1e4).abs() < 1e-9);
    assert!((g[24] - 10.0).abs() < 1e-12);
    assert!(log_grid(0.0, 1.0, 3).is_err());
}
