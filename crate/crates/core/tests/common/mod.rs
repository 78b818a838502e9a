#![allow(dead_code)]

use nadir_core::nalgebra::{DMatrix, DVector};
use nadir_core::{generate_random_network, BusParams, NetworkModel, RandomNetworkConfig, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const GB_INERTIA: f64 = 4.38;
pub const GB_DAMPING: f64 = 16.0;

/// Proportional model with inertias in (2, 8) s and GB-like `d/m`.
pub fn random_model(n: usize, seed: u64, weight_scale: f64) -> NetworkModel {
    let topology = if seed.is_multiple_of(2) {
        Topology::Ring
    } else {
        Topology::RandomTreePlusEdges
    };
    generate_random_network(&RandomNetworkConfig {
        n,
        seed,
        inertia_range: (2.0, 8.0),
        weight_scale,
        topology,
        ..Default::default()
    })
    .unwrap()
}

pub fn ring_laplacian(n: usize, weight: f64) -> DMatrix<f64> {
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        if i == j || (n == 2 && i == 1) {
            continue;
        }
        lap[(i, j)] -= weight;
        lap[(j, i)] -= weight;
        lap[(i, i)] += weight;
        lap[(j, j)] += weight;
    }
    lap
}

pub fn homogeneous(n: usize, m: f64, d: f64, lap: DMatrix<f64>) -> NetworkModel {
    NetworkModel::new(50.0, vec![BusParams::new(m, d); n], lap).unwrap()
}

/// `lambda_2` of a homogeneous ring with unit weights.
pub fn ring_lambda2(n: usize) -> f64 {
    if n == 2 {
        2.0
    } else {
        2.0 * (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos())
    }
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Classical RK4 on `m h'' + d h' + lambda h = 0`, `h(0) = 0`, `h'(0) = 1/m`.
/// Returns `h` at `0, step, 2 step, ..., steps * step`.
pub fn scalar_mode_rk4(lambda: f64, m: f64, d: f64, step: f64, steps: usize) -> Vec<f64> {
    let f = |x: f64, v: f64| (v, -(d * v + lambda * x) / m);
    let (mut x, mut v) = (0.0, 1.0 / m);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x);
    for _ in 0..steps {
        let (a1, b1) = f(x, v);
        let (a2, b2) = f(x + 0.5 * step * a1, v + 0.5 * step * b1);
        let (a3, b3) = f(x + 0.5 * step * a2, v + 0.5 * step * b2);
        let (a4, b4) = f(x + step * a3, v + step * b3);
        x += step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += step / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push(x);
    }
    out
}
