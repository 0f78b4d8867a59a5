use fluxfit::spectroscopy::{
    assign_markers, default_sigma, find_extrema, smooth_frequency_axis, synthesize_scan, Lineshape, Marker,
    ModelCurves, PeakSet, Polarity, PolarityFilter, Scan, SynthOptions,
};
use proptest::prelude::*;

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn synth(curves: &ModelCurves, f: &[f64], fwhm: f64, noise: f64, seed: u64) -> Scan {
    let opts = SynthOptions {
        lineshape: Lineshape { fwhm_ghz: fwhm, amplitude: 1.0, polarity: Polarity::Max },
        noise_sigma: noise,
        baseline: 0.1,
        seed,
    };
    synthesize_scan(curves, &curves.x_axis, f, &opts).unwrap()
}

/// Linear traces over an 11-column x axis.
fn linear_curves(lines: &[(f64, f64)]) -> ModelCurves {
    let x = axis(0.0, 1.0, 11);
    let curves = lines
        .iter()
        .enumerate()
        .map(|(k, &(f0, slope))| (format!("line{k}"), x.iter().map(|x| f0 + slope * x).collect()))
        .collect();
    ModelCurves::new(x, curves).unwrap()
}

fn positions(p: &PeakSet) -> Vec<(f64, f64, Polarity, String)> {
    p.markers.iter().map(|m| (m.x, m.f_ghz, m.polarity, m.label.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn extrema_invariant_under_amplitude_scaling(
        seed in any::<u64>(),
        scale in 0.05..50.0f64,
        min_height in 0.05..0.6f64,
    ) {
        let curves = linear_curves(&[(4.3, 0.4), (5.2, -0.3)]);
        let scan = synth(&curves, &axis(4.0, 6.0, 201), 0.05, 0.05, seed);
        let mut scaled = scan.clone();
        for col in &mut scaled.amplitude {
            for a in col.iter_mut() {
                *a *= scale;
            }
        }
        let filter = PolarityFilter::Both;
        let a = find_extrema(&scan, min_height, filter).unwrap();
        let b = find_extrema(&scaled, min_height * scale, filter).unwrap();
        let (a, b) = (positions(&a), positions(&b));
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!((p.0, p.2, &p.3), (q.0, q.2, &q.3));
            // Sub-step refinement rounds differently once scaled.
            prop_assert!((p.1 - q.1).abs() <= 1e-12, "{} vs {}", p.1, q.1);
        }
    }

    #[test]
    fn smoothing_keeps_single_line_centres(f0 in 4.4..5.6f64, slope in -0.3..0.3f64, fwhm in 0.03..0.1f64) {
        let curves = linear_curves(&[(f0, slope)]);
        let scan = synth(&curves, &axis(4.0, 6.0, 401), fwhm, 0.0, 0);
        let raw = find_extrema(&scan, 0.3, PolarityFilter::Max).unwrap();
        let smooth = smooth_frequency_axis(&scan, default_sigma(&scan)).unwrap();
        let smoothed = find_extrema(&smooth, 0.3, PolarityFilter::Max).unwrap();
        prop_assert_eq!(raw.len(), curves.x_axis.len());
        prop_assert_eq!(smoothed.len(), raw.len());
        for (a, b) in raw.markers.iter().zip(&smoothed.markers) {
            prop_assert_eq!(a.x, b.x);
            prop_assert!((a.f_ghz - b.f_ghz).abs() <= scan.f_step() * (1.0 + 1e-9), "{} vs {}", a.f_ghz, b.f_ghz);
        }
    }

    #[test]
    fn assignment_never_exceeds_tolerance(
        points in prop::collection::vec((0.0..1.0f64, 3.5..6.5f64), 1..60),
        lines in prop::collection::vec((4.0..6.0f64, -1.0..1.0f64), 1..4),
        tol in 0.001..0.3f64,
    ) {
        let curves = linear_curves(&lines);
        let markers = points
            .iter()
            .map(|&(x, f)| Marker { x, f_ghz: f, polarity: Polarity::Max, height: 1.0, label: "unassigned".into() })
            .collect();
        let out = assign_markers(&PeakSet { markers }, &curves, tol).unwrap();
        for m in out.markers.iter().filter(|m| m.is_assigned()) {
            let c = curves.curves.iter().position(|(n, _)| n == &m.label).unwrap();
            let d = (curves.value_at(c, m.x).unwrap() - m.f_ghz).abs();
            prop_assert!(d <= tol, "{} assigned at distance {} > {}", m.label, d, tol);
        }
    }

    #[test]
    fn noiseless_round_trip_labels_every_marker(
        f0 in 4.2..4.6f64,
        gap in 0.4..0.8f64,
        slope_a in -0.2..0.2f64,
        slope_b in -0.2..0.2f64,
        fwhm in 0.02..0.05f64,
    ) {
        let curves = linear_curves(&[(f0, slope_a), (f0 + gap, slope_b)]);
        let scan = synth(&curves, &axis(3.8, 5.8, 1001), fwhm, 0.0, 0);
        let smooth = smooth_frequency_axis(&scan, default_sigma(&scan)).unwrap();
        let peaks = find_extrema(&smooth, 0.3, PolarityFilter::Max).unwrap();
        let labeled = assign_markers(&peaks, &curves, 2.0 * fwhm).unwrap();
        prop_assert_eq!(labeled.len(), 2 * curves.x_axis.len());
        for m in &labeled.markers {
            let nearest = (0..curves.curves.len())
                .min_by(|&a, &b| {
                    let da = (curves.value_at(a, m.x).unwrap() - m.f_ghz).abs();
                    let db = (curves.value_at(b, m.x).unwrap() - m.f_ghz).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            prop_assert_eq!(&m.label, &curves.curves[nearest].0);
        }
    }
}

#[test]
fn two_resolved_lines_never_merge() {
    let fwhm = 0.04;
    let curves = linear_curves(&[(4.5, 0.0), (4.5 + 4.5 * fwhm, 0.0)]);
    let scan = synth(&curves, &axis(4.0, 5.5, 751), fwhm, 0.0, 0);
    let peaks = find_extrema(&scan, 0.2, PolarityFilter::Max).unwrap();
    for &x in &curves.x_axis {
        let column: Vec<f64> = peaks.markers.iter().filter(|m| m.x == x).map(|m| m.f_ghz).collect();
        assert_eq!(column.len(), 2, "column {x}: {column:?}");
    }
}
