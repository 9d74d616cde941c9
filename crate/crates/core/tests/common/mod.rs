#![allow(dead_code)]

use std::io::Write;

use kvwave_core::{CaseLabel, CoefficientProfile, DiscreteGenerator, StateVector, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

fn base(c: CoefficientProfile, d: CoefficientProfile, case_label: CaseLabel) -> SystemConfig {
    SystemConfig {
        length: 1.0,
        wave_speed_sq: 1.0,
        profile_b: CoefficientProfile::new(1.0, 0.1, 0.2),
        profile_c: c,
        profile_d: d,
        case_label,
    }
}

pub fn c1ref() -> SystemConfig {
    base(CoefficientProfile::new(2.0, 0.4, 0.6), CoefficientProfile::new(1.0, 0.7, 0.9), CaseLabel::C1)
}

pub fn c2ref() -> SystemConfig {
    base(CoefficientProfile::new(2.0, 0.6, 0.8), CoefficientProfile::new(1.0, 0.3, 0.4), CaseLabel::C2)
}

pub fn c3ref() -> SystemConfig {
    base(CoefficientProfile::new(2.0, 0.4, 0.6), CoefficientProfile::zero(), CaseLabel::C3)
}

pub fn references() -> [(&'static str, SystemConfig); 3] {
    [("C1", c1ref()), ("C2", c2ref()), ("C3", c3ref())]
}

/// Two free strings, optionally coupled, with no damping at all.
pub fn undamped(c0: f64) -> SystemConfig {
    let c = if c0 == 0.0 { CoefficientProfile::zero() } else { CoefficientProfile::new(c0, 0.3, 0.7) };
    SystemConfig {
        length: 1.0,
        wave_speed_sq: 1.0,
        profile_b: CoefficientProfile::zero(),
        profile_c: c,
        profile_d: CoefficientProfile::zero(),
        case_label: CaseLabel::Free,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    StateVector::from_flat((0..4 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn dense(gen: &DiscreteGenerator) -> (Dense, Dense) {
    (gen.matrix().to_dense(), gen.mass().to_dense())
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; c]; r];
    for i in 0..r {
        for l in 0..k {
            let x = a[i][l];
            if x != 0.0 {
                for j in 0..c {
                    out[i][j] += x * b[l][j];
                }
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn quad(a: &Dense, x: &[f64]) -> f64 {
    x.iter().zip(matvec(a, x)).map(|(p, q)| p * q).sum()
}

/// `exp(t A)` by Taylor series with scaling and squaring.
pub fn expm(a: &Dense, t: f64) -> Dense {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| (v * t).abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = (norm / 0.25).log2().ceil().max(0.0) as i32;
    let tau = t / 2f64.powi(squarings);
    let x: Dense = a.iter().map(|r| r.iter().map(|v| v * tau).collect()).collect();
    let identity: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut sum = identity.clone();
    let mut term = identity;
    for k in 1..=30 {
        term = matmul(&term, &x).into_iter().map(|r| r.into_iter().map(|v| v / k as f64).collect()).collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            for (p, q) in s.iter_mut().zip(t) {
                *p += q;
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// `‖x - y‖_M` with `M` from the generator.
pub fn mass_distance(gen: &DiscreteGenerator, x: &[f64], y: &[f64]) -> f64 {
    let d = StateVector::from_flat(x.iter().zip(y).map(|(p, q)| p - q).collect()).unwrap();
    gen.mass_norm_sq(&d).unwrap().sqrt()
}

/// Plain Cholesky; `None` when a pivot is not positive.
pub fn cholesky(m: &Dense) -> Option<Dense> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d.is_nan() || d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Writes straight to the stderr handle so the line shows up even when the
/// test harness captures output.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}
