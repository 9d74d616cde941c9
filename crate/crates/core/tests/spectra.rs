mod common;

use std::f64::consts::PI;

use common::*;
use kvwave_core::fit::log_space;
use kvwave_core::spectra::{
    eigenvalues, resolvent_norm, resolvent_norm_with, resolvent_sweep, weighted_resolvent_norm_dense,
    ResolventMethod,
};
use kvwave_core::{CaseLabel, CoefficientProfile, DiscreteGenerator, Error, SystemConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn discrete_frequencies(n: usize) -> Vec<f64> {
    let h = 1.0 / (n + 1) as f64;
    (1..=n).map(|k| 2.0 / h * (k as f64 * PI * h / 2.0).sin()).collect()
}

#[test]
fn skew_case_norm_is_inverse_distance_to_spectrum() {
    let gen = DiscreteGenerator::new(&undamped(0.0), 20).unwrap();
    let freqs = discrete_frequencies(20);
    for lambda in [0.0, 1.0, 4.0, 10.5, 30.0] {
        let dist = freqs.iter().map(|w| (lambda - w).abs().min((lambda + w).abs())).fold(f64::INFINITY, f64::min);
        let dense = resolvent_norm_with(&gen, lambda, ResolventMethod::DenseSvd).unwrap();
        let lanczos = resolvent_norm_with(&gen, lambda, ResolventMethod::ShiftInvert).unwrap();
        assert!((dense * dist - 1.0).abs() < 1e-10, "dense at {lambda}: {dense} vs {}", 1.0 / dist);
        assert!((lanczos * dist - 1.0).abs() < 1e-8, "lanczos at {lambda}: {lanczos} vs {}", 1.0 / dist);
    }
}

#[test]
fn resolvent_at_an_eigenvalue_is_singular() {
    let gen = DiscreteGenerator::new(&undamped(0.0), 20).unwrap();
    let w = discrete_frequencies(20)[0];
    for method in [ResolventMethod::DenseSvd, ResolventMethod::ShiftInvert] {
        let r = resolvent_norm_with(&gen, w, method);
        assert!(matches!(r, Err(Error::NumericallySingular { .. })), "{method:?}: {r:?}");
    }
    let profile = resolvent_sweep(&gen, &[1.0, w, 5.0]).unwrap();
    assert!(profile.points[1].singular && profile.points[1].norm == f64::INFINITY);
    assert!(!profile.all_finite());
}

fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `‖y‖_M / ‖(iλ - A) y‖_M`; its supremum over `y` is the resolvent norm.
fn ratio(a: &Dense, m: &Dense, lambda: f64, y: &[Complex64]) -> f64 {
    let dim = y.len();
    let ay: Vec<Complex64> = (0..dim)
        .map(|i| cplx(0.0, lambda) * y[i] - (0..dim).map(|j| y[j] * a[i][j]).sum::<Complex64>())
        .collect();
    let mnorm = |x: &[Complex64]| -> f64 {
        (0..dim).map(|i| (0..dim).map(|j| (x[i].conj() * x[j] * m[i][j]).re).sum::<f64>()).sum::<f64>().sqrt()
    };
    mnorm(y) / mnorm(&ay)
}

#[test]
fn weighted_norm_matches_brute_force_search() {
    let dim = 8;
    let mut rng = rng(1234);
    for trial in 0..3 {
        let a: Dense = (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let g: Dense = (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut m = matmul(&g, &transpose(&g));
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += 0.5;
        }
        let lambda = 0.3 + trial as f64;
        let exact = weighted_resolvent_norm_dense(&a, &m, lambda).unwrap();

        let random_vec = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
            (0..dim).map(|_| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        };
        let mut starts: Vec<(f64, Vec<Complex64>)> = (0..10_000)
            .map(|_| {
                let y = random_vec(&mut rng);
                (ratio(&a, &m, lambda, &y), y)
            })
            .collect();
        starts.sort_by(|p, q| q.0.total_cmp(&p.0));
        let mut best = starts[0].0;
        for (mut value, mut y) in starts.into_iter().take(5) {
            // random-direction hill climb with an adaptive step
            let mut step = 0.3;
            for _ in 0..20_000 {
                let trial_y: Vec<Complex64> =
                    y.iter().map(|v| v + cplx(rng.gen_range(-step..step), rng.gen_range(-step..step))).collect();
                let r = ratio(&a, &m, lambda, &trial_y);
                if r > value {
                    value = r;
                    y = trial_y;
                    step *= 1.5;
                } else {
                    step = (step * 0.97).max(1e-9);
                }
            }
            best = best.max(value);
        }
        assert!(best <= exact * (1.0 + 1e-9), "brute force {best} exceeds {exact}");
        assert!(best >= 0.98 * exact, "brute force {best} far below {exact}");
    }
}

#[test]
fn dense_and_lanczos_agree_at_production_size() {
    let gen = DiscreteGenerator::new(&c1ref(), 200).unwrap();
    let dense = resolvent_norm_with(&gen, 20.0, ResolventMethod::DenseSvd).unwrap();
    let lanczos = resolvent_norm_with(&gen, 20.0, ResolventMethod::ShiftInvert).unwrap();
    assert!((dense - lanczos).abs() <= 1e-6 * dense, "{dense} vs {lanczos}");
}

#[test]
fn c1_spectrum_is_strictly_stable() {
    let gen = DiscreteGenerator::new(&c1ref(), 100).unwrap();
    let report = eigenvalues(&gen).unwrap();
    assert_eq!(report.eigenvalues.len(), 400);
    assert!(report.max_real_part < 0.0);
    assert!(report.strongly_stable());
    for l in report.closest_to_axis(10) {
        assert!(resolvent_norm(&gen, l.im.abs()).unwrap().is_finite());
    }
}

#[test]
fn undamped_spectrum_is_not_strongly_stable() {
    let gen = DiscreteGenerator::new(&undamped(0.0), 40).unwrap();
    let report = eigenvalues(&gen).unwrap();
    assert!(report.max_real_part.abs() < 1e-10);
    assert!(!report.strongly_stable());
    assert!(report.flagged().is_empty());
}

#[test]
fn sweep_input_errors() {
    let gen = DiscreteGenerator::new(&c3ref(), 30).unwrap();
    assert!(matches!(resolvent_sweep(&gen, &[]), Err(Error::EmptyGrid)));
    assert!(matches!(resolvent_sweep(&gen, &[2.0, 1.0]), Err(Error::BadParameters(_))));
    assert!(matches!(resolvent_sweep(&gen, &[0.0, 1.0]), Err(Error::BadParameters(_))));
    let big = DiscreteGenerator::new(&c3ref(), 401).unwrap();
    assert!(matches!(eigenvalues(&big), Err(Error::TooLargeForDense { .. })));
}

#[test]
fn csv_flags_unresolved_frequencies() {
    let gen = DiscreteGenerator::new(&c1ref(), 40).unwrap();
    let limit = gen.resolution_limit();
    let profile = resolvent_sweep(&gen, &log_space(1.0, 2.0 * limit, 15)).unwrap();
    let mut buf = Vec::new();
    profile.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,norm,flag");
    assert_eq!(lines.len(), 16);
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[15].ends_with(",unresolved"));
    assert!(profile.fit_window.1 <= limit);
}

fn small_config() -> impl Strategy<Value = SystemConfig> {
    (0.3f64..3.0, 0.2f64..6.0, 0.1f64..2.0, any::<bool>()).prop_map(|(a, c0, d0, third)| SystemConfig {
        length: 1.0,
        wave_speed_sq: a,
        profile_b: CoefficientProfile::new(1.0, 0.05, 0.25),
        profile_c: CoefficientProfile::new(c0, 0.35, 0.6),
        profile_d: if third { CoefficientProfile::zero() } else { CoefficientProfile::new(d0, 0.7, 0.95) },
        case_label: if third { CaseLabel::Free } else { CaseLabel::C1 },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalues_never_leave_the_left_half_plane(cfg in small_config(), n in 10usize..40) {
        let gen = DiscreteGenerator::new(&cfg, n).unwrap();
        let report = eigenvalues(&gen).unwrap();
        prop_assert!(report.max_real_part <= 1e-10, "max Re = {}", report.max_real_part);
    }
}
