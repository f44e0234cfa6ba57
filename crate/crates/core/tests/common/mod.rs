#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volterra_core::{BilinearSystem, Matrix, Signal, Vector};

/// `f = -1, g = 1, b = c = 1, T = 1`.
pub fn scalar_system() -> BilinearSystem<f64> {
    BilinearSystem::new(
        Matrix::new(1, 1, vec![-1.0]).unwrap(),
        Matrix::new(1, 1, vec![1.0]).unwrap(),
        Vector::new(vec![1.0]).unwrap(),
        Vector::new(vec![1.0]).unwrap(),
        1.0,
    )
    .unwrap()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// Random system with `F = -2I + 0.5R`; Gershgorin keeps every eigenvalue
/// in the left half plane for `n ≤ 3`.
pub fn random_stable_system(n: usize, seed: u64) -> BilinearSystem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Matrix::from_rows(&(0..n).map(|_| uniform(&mut rng, n, 0.5)).collect::<Vec<_>>()).unwrap();
    for i in 0..n {
        f[(i, i)] -= 2.0;
    }
    let g = Matrix::from_rows(&(0..n).map(|_| uniform(&mut rng, n, 0.5)).collect::<Vec<_>>()).unwrap();
    let b = Vector::new(uniform(&mut rng, n, 1.0)).unwrap();
    let c = Vector::new(uniform(&mut rng, n, 1.0)).unwrap();
    BilinearSystem::new(f, g, b, c, 0.5).unwrap()
}

/// Lower-triangular `F`, strictly lower-triangular `G` (`G³ = 0`): every
/// kernel of order four or more vanishes.
pub fn nilpotent_system() -> BilinearSystem<f64> {
    BilinearSystem::new(
        Matrix::from_rows(&[vec![-1.0, 0.0, 0.0], vec![0.4, -1.5, 0.0], vec![-0.3, 0.6, -0.8]]).unwrap(),
        Matrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.2, 0.0, 0.0], vec![0.5, -0.9, 0.0]]).unwrap(),
        Vector::new(vec![1.0, 0.3, -0.5]).unwrap(),
        Vector::new(vec![0.6, -0.4, 1.1]).unwrap(),
        0.5,
    )
    .unwrap()
}

pub fn random_input(len: usize, period: f64, seed: u64) -> Signal<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::new(uniform(&mut rng, len, 1.0), period).unwrap()
}

/// `max |a - b| / max |b|`, falling back to the absolute error when `b ≡ 0`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let err = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

pub fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

/// Truncated Taylor series of `exp(A)`, independent of the library's expm.
pub fn taylor_expm(a: &Matrix<f64>, terms: usize) -> Matrix<f64> {
    let mut sum = Matrix::identity(a.rows());
    let mut term = Matrix::identity(a.rows());
    for k in 1..terms {
        term = (&term * a).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    sum
}

/// `exp(A)` by Taylor series after halving the argument until small, then
/// squaring back.
pub fn reference_expm(a: &Matrix<f64>) -> Matrix<f64> {
    let mut halvings = 0;
    let mut scaled = a.clone();
    while scaled.norm_one() > 0.25 {
        scaled = scaled.scale(0.5);
        halvings += 1;
    }
    let mut e = taylor_expm(&scaled, 30);
    for _ in 0..halvings {
        e = &e * &e;
    }
    e
}

/// The three criterion-1 fixtures.
pub fn oracle_fixtures() -> Vec<(&'static str, BilinearSystem<f64>)> {
    vec![
        ("scalar", scalar_system()),
        ("random N=2", random_stable_system(2, 2)),
        ("random N=3", random_stable_system(3, 3)),
    ]
}
