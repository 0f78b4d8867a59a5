use std::f64::consts::PI;

use fluxfit::hamiltonian::{
    eigensolve, phase_grid_oracle, BasisSpec, BuildOptions, Hamiltonian, ModelKind, PhaseGrid, SpectrumSolver,
    StateLabel,
};
use fluxfit::{CircuitParams, JunctionModel};

const DEVICE_A: CircuitParams = CircuitParams::DEVICE_A;

fn lowest(h: nalgebra::DMatrix<f64>, n: usize) -> Vec<f64> {
    eigensolve(h).unwrap().values.iter().take(n).copied().collect()
}

#[test]
fn oscillator_basis_matches_phase_grid() {
    let ham = Hamiltonian::<f64>::new(BasisSpec::uncoupled(60), BuildOptions::default()).unwrap();
    for e_j in [0.2, 3.8, 6.7, 9.6] {
        let j = JunctionModel::sinusoidal(e_j);
        for k in 0..5 {
            let phi = k as f64 * PI / 4.0;
            let basis = lowest(ham.fluxonium_matrix(&j, &DEVICE_A, phi).unwrap(), 5);
            let grid = phase_grid_oracle(&j, &DEVICE_A, phi, PhaseGrid::default()).unwrap();
            for (a, b) in basis.iter().zip(&grid) {
                assert!((a - b).abs() < 1e-4, "E_J={e_j} phi={phi}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn flux_minimum_matches_phase_grid() {
    let ham = Hamiltonian::<f64>::new(BasisSpec::uncoupled(60), BuildOptions::default()).unwrap();
    let j = JunctionModel::sinusoidal(6.7);
    let basis = lowest(ham.fluxonium_matrix(&j, &DEVICE_A, PI).unwrap(), 2);
    let grid = phase_grid_oracle(&j, &DEVICE_A, PI, PhaseGrid::default()).unwrap();
    assert!(((basis[1] - basis[0]) - (grid[1] - grid[0])).abs() < 1e-4);
}

#[test]
fn channels_oracle_agreement() {
    let ham = Hamiltonian::<f64>::new(BasisSpec::uncoupled(60), BuildOptions::default()).unwrap();
    let j = JunctionModel::channels(26.0, vec![0.5, 0.3]);
    for phi in [0.0, 0.9, PI] {
        let basis = lowest(ham.fluxonium_matrix(&j, &DEVICE_A, phi).unwrap(), 5);
        let grid = phase_grid_oracle(&j, &DEVICE_A, phi, PhaseGrid::default()).unwrap();
        for (a, b) in basis.iter().zip(&grid) {
            assert!((a - b).abs() < 1e-4, "phi={phi}: {a} vs {b}");
        }
    }
}

#[test]
fn decoupled_limit_is_tensor_sum() {
    let p = CircuitParams { l_s: 0.0, ..DEVICE_A };
    let j = JunctionModel::sinusoidal(3.8);
    let ham = Hamiltonian::<f64>::new(BasisSpec::coupled(60, 8), BuildOptions::default()).unwrap();
    for phi in [0.0, 0.7, PI] {
        let coupled = lowest(ham.coupled_matrix(&j, &p, phi).unwrap(), 480);
        let flux = lowest(ham.fluxonium_matrix(&j, &p, phi).unwrap(), 60);
        let w_r = p.resonator_energies().unwrap().frequency();
        let mut sums: Vec<f64> = flux.iter().flat_map(|f| (0..8).map(move |n| f + w_r * (n as f64 + 0.5))).collect();
        sums.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in coupled.iter().zip(&sums) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn bare_resonator_spacing_device_a() {
    let w = DEVICE_A.resonator_energies().unwrap().frequency();
    assert!((w - 4.19).abs() < 0.01, "{w}");
}

#[test]
fn coupling_sign_does_not_change_spectrum() {
    let ham = Hamiltonian::<f64>::new(BasisSpec::coupled(30, 5), BuildOptions::default()).unwrap();
    let j = JunctionModel::sinusoidal(6.7);
    let g = DEVICE_A.coupling_coefficient();
    for phi in [0.0, 1.1] {
        let plus = lowest(ham.coupled_matrix_with_coupling(&j, &DEVICE_A, phi, g).unwrap(), 20);
        let minus = lowest(ham.coupled_matrix_with_coupling(&j, &DEVICE_A, phi, -g).unwrap(), 20);
        for (a, b) in plus.iter().zip(&minus) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn decoupled_labels_are_product_indices() {
    let p = CircuitParams { l_s: 0.0, ..DEVICE_A };
    let solver = SpectrumSolver::<f64>::coupled(40, 6).unwrap().with_levels(12);
    let j = JunctionModel::sinusoidal(3.8);
    let point = solver.solve_point(&j, &p, 0.4).unwrap();
    let flux = SpectrumSolver::<f64>::uncoupled(40).unwrap().solve_point(&j, &p, 0.4).unwrap();
    let w_r = p.resonator_energies().unwrap().frequency();
    for (e, l) in point.energies.iter().zip(&point.labels) {
        let want = flux.energies[l.label.fluxonium] + w_r * (l.label.photons as f64 + 0.5);
        assert!((e - want).abs() < 1e-8, "{} at {e}, product {want}", l.label);
        assert!(l.overlap > 1.0 - 1e-10);
    }
}

#[test]
fn lowest_levels_follow_uncoupled_order() {
    let solver = SpectrumSolver::<f64>::coupled(40, 6).unwrap().with_levels(8);
    let flux_solver = SpectrumSolver::<f64>::uncoupled(40).unwrap();
    let j = JunctionModel::sinusoidal(6.7);
    let w_r = DEVICE_A.resonator_energies().unwrap().frequency();
    let mut checked = 0;
    for phi in [0.0, 0.25 * PI, 0.5 * PI, 0.9 * PI, PI] {
        let flux = flux_solver.solve_point(&j, &DEVICE_A, phi).unwrap();
        let mut products: Vec<(f64, StateLabel)> = (0..6)
            .flat_map(|m| (0..6).map(move |n| (m, n)))
            .map(|(m, n)| (flux.energies[m] + w_r * (n as f64 + 0.5), StateLabel::new(m, n)))
            .collect();
        products.sort_by(|a, b| a.0.total_cmp(&b.0));
        // only compare where the uncoupled levels are well separated
        if products.windows(2).take(4).any(|w| w[1].0 - w[0].0 < 0.3) {
            continue;
        }
        checked += 1;
        let point = solver.solve_point(&j, &DEVICE_A, phi).unwrap();
        let got: Vec<StateLabel> = point.labels.iter().take(4).map(|l| l.label).collect();
        let want: Vec<StateLabel> = products.iter().take(4).map(|e| e.1).collect();
        assert_eq!(got, want, "phi = {phi}");
    }
    assert!(checked >= 2);
}

#[test]
fn avoided_crossing_hybridizes_pair() {
    // sweep phi_ext through the g0->e0 / g0->g1 degeneracy near the resonator
    let solver = SpectrumSolver::<f64>::coupled(40, 6).unwrap().with_levels(10);
    let j = JunctionModel::sinusoidal(6.7);
    let flux = SpectrumSolver::<f64>::uncoupled(40).unwrap();
    let w_r = DEVICE_A.resonator_energies().unwrap().frequency();
    let axis: Vec<f64> = (0..=400).map(|i| i as f64 * PI / 400.0).collect();
    // locate the uncoupled crossing of e0 with g1
    let detuning: Vec<f64> = axis
        .iter()
        .map(|&phi| {
            let p = flux.solve_point(&j, &DEVICE_A, phi).unwrap();
            p.energies[1] - p.energies[0] - w_r
        })
        .collect();
    let i = detuning.windows(2).position(|w| w[0].signum() != w[1].signum()).expect("crossing");
    // bisect for the crossing point, then look there
    let (mut lo, mut hi) = (axis[i], axis[i + 1]);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let p = flux.solve_point(&j, &DEVICE_A, mid).unwrap();
        let d = p.energies[1] - p.energies[0] - w_r;
        if d.signum() == detuning[i].signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let at = solver.solve_point(&j, &DEVICE_A, 0.5 * (lo + hi)).unwrap();
    let e0_g1: Vec<_> =
        at.labels.iter().filter(|l| l.label == StateLabel::new(1, 0) || l.label == StateLabel::new(0, 1)).collect();
    assert_eq!(e0_g1.len(), 2);
    // a resonant pair splits its weight evenly between the two product states
    assert!(e0_g1.iter().all(|l| (l.overlap - 0.5).abs() < 0.1), "{e0_g1:?}");
    assert!(e0_g1.iter().all(|l| !l.mixed));
}

fn min_gap_through_crossing(l_s: f64) -> f64 {
    let p = CircuitParams { l_s, ..DEVICE_A };
    let ham = Hamiltonian::<f64>::new(BasisSpec::coupled(40, 6), BuildOptions::default()).unwrap();
    let j = JunctionModel::sinusoidal(6.7);
    let flux_h = Hamiltonian::<f64>::new(BasisSpec::uncoupled(40), BuildOptions::default()).unwrap();
    let w_r = p.resonator_energies().unwrap().frequency();
    let detune = |phi: f64| {
        let e = lowest(flux_h.fluxonium_matrix(&j, &p, phi).unwrap(), 2);
        e[1] - e[0] - w_r
    };
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if detune(mid).signum() == detune(0.0).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let centre = 0.5 * (lo + hi);
    (-40..=40)
        .map(|k| {
            let phi = centre + k as f64 * 2e-4;
            let e = lowest(ham.coupled_matrix(&j, &p, phi).unwrap(), 3);
            e[2] - e[1]
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn avoided_crossing_gap_grows_with_coupling_inductance() {
    let gaps: Vec<f64> = [2.0, 4.6, 8.5].iter().map(|&l| min_gap_through_crossing(l)).collect();
    assert!(gaps[0] > 0.0);
    assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2], "{gaps:?}");
}

#[test]
fn single_precision_spectrum_tracks_double() {
    let s64 = SpectrumSolver::<f64>::new(
        ModelKind::Uncoupled,
        BasisSpec::uncoupled(30),
        BuildOptions { verify_quadrature: false, ..BuildOptions::default() },
    )
    .unwrap();
    let s32 = SpectrumSolver::<f32>::new(
        ModelKind::Uncoupled,
        BasisSpec::uncoupled(30),
        BuildOptions { verify_quadrature: false, ..BuildOptions::default() },
    )
    .unwrap();
    let p32: CircuitParams<f32> = DEVICE_A.cast();
    let a = s64.solve_point(&JunctionModel::sinusoidal(3.8), &DEVICE_A, 0.5).unwrap();
    let b = s32.solve_point(&JunctionModel::sinusoidal(3.8f32), &p32, 0.5).unwrap();
    let fa = a.energies[1] - a.energies[0];
    let fb = (b.energies[1] - b.energies[0]) as f64;
    assert!((fa - fb).abs() < 1e-3, "{fa} vs {fb}");
}
