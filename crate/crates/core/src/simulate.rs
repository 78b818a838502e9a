//! Time-domain reference for the modal analysis.
//!
//! Integrates the swing dynamics
//!
//! ```text
//! delta' = omega
//! m_i omega_i' = u0_i - d_i omega_i - (L_B delta)_i
//! ```
//!
//! from rest with classical fixed-step RK4, directly in `(delta, omega)`
//! coordinates. Nothing here touches the eigendecomposition, so agreement
//! with [`crate::modal::frequency_response`] is a genuine cross-check. The
//! integrator needs no proportionality assumption.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::modal::Trajectory;
use crate::nadir::{NadirResult, NormKind};
use crate::netmodel::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// RK4 step `h`, seconds.
    pub step: f64,
    /// Final time `T`, seconds. The last step lands on or just past it.
    pub horizon: f64,
    /// Keep every `record_every`-th state in the output trajectory.
    pub record_every: usize,
}

impl SimConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            record_every: 1,
        }
    }

    pub fn recording_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    /// `(1/20) min(min_i m_i/d_i, 2 pi / omega_max)`, where `omega_max^2` is
    /// bounded by Gershgorin's theorem on `M^{-1} L_B`.
    pub fn stability_guard(model: &NetworkModel) -> f64 {
        let lap = model.laplacian();
        let mut time_constant = f64::INFINITY;
        let mut stiffness = 0.0f64;
        for (i, bus) in model.buses().iter().enumerate() {
            time_constant = time_constant.min(bus.inertia / bus.damping);
            let row: f64 = lap.row(i).iter().map(|v| v.abs()).sum();
            stiffness = stiffness.max(row / bus.inertia);
        }
        let period = if stiffness > 0.0 {
            2.0 * PI / stiffness.sqrt()
        } else {
            f64::INFINITY
        };
        time_constant.min(period) / 20.0
    }

    pub fn validate(&self, model: &NetworkModel) -> Result<()> {
        let step_ok = self.step.is_finite() && self.step > 0.0;
        let horizon_ok = self.horizon.is_finite() && self.horizon >= self.step;
        if !step_ok || !horizon_ok || self.record_every == 0 {
            return Err(Error::InvalidParameter(format!(
                "invalid simulation config: h = {}, T = {}, every = {}",
                self.step, self.horizon, self.record_every
            )));
        }
        let guard = Self::stability_guard(model);
        if self.step > guard {
            return Err(Error::StepTooLarge { step: self.step, guard });
        }
        Ok(())
    }

    fn step_count(&self) -> usize {
        (self.horizon / self.step - 1e-9).ceil() as usize
    }
}

/// RK4 state of the swing dynamics under a constant injection.
#[derive(Debug, Clone)]
pub struct SwingIntegrator<'a> {
    laplacian: &'a DMatrix<f64>,
    inertia: DVector<f64>,
    damping: DVector<f64>,
    injection: DVector<f64>,
    angle: DVector<f64>,
    frequency: DVector<f64>,
}

impl<'a> SwingIntegrator<'a> {
    pub fn new(model: &'a NetworkModel, injection: &DVector<f64>) -> Result<Self> {
        let n = model.n();
        if injection.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: injection.len(),
            });
        }
        Ok(Self {
            laplacian: model.laplacian(),
            inertia: model.inertias(),
            damping: model.dampings(),
            injection: injection.clone(),
            angle: DVector::zeros(n),
            frequency: DVector::zeros(n),
        })
    }

    fn acceleration(&self, angle: &DVector<f64>, frequency: &DVector<f64>) -> DVector<f64> {
        let mut acc = &self.injection - self.laplacian * angle;
        for i in 0..acc.len() {
            acc[i] = (acc[i] - self.damping[i] * frequency[i]) / self.inertia[i];
        }
        acc
    }

    pub fn step(&mut self, h: f64) {
        let (d0, w0) = (&self.angle, &self.frequency);
        let k1d = w0.clone();
        let k1w = self.acceleration(d0, w0);

        let d1 = d0 + &k1d * (h / 2.0);
        let w1 = w0 + &k1w * (h / 2.0);
        let k2d = w1.clone();
        let k2w = self.acceleration(&d1, &w1);

        let d2 = d0 + &k2d * (h / 2.0);
        let w2 = w0 + &k2w * (h / 2.0);
        let k3d = w2.clone();
        let k3w = self.acceleration(&d2, &w2);

        let d3 = d0 + &k3d * h;
        let w3 = w0 + &k3w * h;
        let k4d = w3.clone();
        let k4w = self.acceleration(&d3, &w3);

        self.angle += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (h / 6.0);
        self.frequency += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (h / 6.0);
    }

    pub fn angle(&self) -> &DVector<f64> {
        &self.angle
    }

    pub fn frequency(&self) -> &DVector<f64> {
        &self.frequency
    }

    /// `(sum m_i omega_i^2 + delta^T L_B delta) / 2 - u0^T delta`; nonincreasing
    /// along exact trajectories since its derivative is `-sum d_i omega_i^2`.
    pub fn energy(&self) -> f64 {
        let kinetic: f64 = self
            .frequency
            .iter()
            .zip(self.inertia.iter())
            .map(|(w, m)| m * w * w)
            .sum();
        let potential = self.angle.dot(&(self.laplacian * &self.angle));
        0.5 * (kinetic + potential) - self.injection.dot(&self.angle)
    }
}

/// Step response from rest, recorded on the RK4 grid `k h` (every
/// `record_every`-th point), with the COI series attached.
pub fn simulate_step_response(model: &NetworkModel, u0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate(model)?;
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("disturbance"));
    }
    let mut integrator = SwingIntegrator::new(model, u0)?;
    let steps = cfg.step_count();
    let mut times = vec![0.0];
    let mut columns = vec![integrator.frequency().clone()];
    for k in 1..=steps {
        integrator.step(cfg.step);
        let t = k as f64 * cfg.step;
        if integrator.frequency().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(t));
        }
        if k % cfg.record_every == 0 || k == steps {
            times.push(t);
            columns.push(integrator.frequency().clone());
        }
    }
    Trajectory::new(times, DMatrix::from_columns(&columns))?.with_coi(&model.inertias())
}

/// Per-bus `max_t |omega_i(t)|` on the trajectory grid and the first time
/// attaining it.
pub fn per_bus_nadir(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let times = traj.times();
    traj.omega()
        .row_iter()
        .map(|row| {
            let (j, value) =
                row.iter().enumerate().fold(
                    (0, 0.0f64),
                    |best, (j, w)| if w.abs() > best.1 { (j, w.abs()) } else { best },
                );
            (value, times.get(j).copied().unwrap_or(0.0))
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub kind: NormKind,
    pub rho: f64,
    pub seed: u64,
    pub samples: Vec<DVector<f64>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.5;

/// Random disturbances in the `rho`-ball of `kind`, half of them on its
/// boundary.
pub fn sample_norm_ball(kind: NormKind, rho: f64, n: usize, count: usize, seed: u64) -> SampleSet {
    sample_norm_ball_with(kind, rho, n, count, seed, DEFAULT_BOUNDARY_FRACTION)
}

/// Sample `count` points of the `rho`-ball in `R^n`.
///
/// * 2-norm: Gaussian direction, radius `rho U^{1/n}`.
/// * inf-norm: uniform per coordinate in `[-rho, rho]`.
/// * 1-norm: exponential (flat Dirichlet) weights with random signs, radius
///   `rho U^{1/n}`.
///
/// A `boundary_fraction` of samples is rescaled onto `||u|| = rho`. Sample `k`
/// draws from stream `k` of the seeded generator, so results do not depend
/// on evaluation order.
pub fn sample_norm_ball_with(
    kind: NormKind,
    rho: f64,
    n: usize,
    count: usize,
    seed: u64,
    boundary_fraction: f64,
) -> SampleSet {
    let samples = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let boundary = rng.random_bool(boundary_fraction.clamp(0.0, 1.0));
            let unit = loop {
                let raw: DVector<f64> = match kind {
                    NormKind::Two => DVector::from_fn(n, |_, _| rng.sample(StandardNormal)),
                    NormKind::Inf => DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)),
                    NormKind::One => DVector::from_fn(n, |_, _| {
                        let w: f64 = rng.sample(Exp1);
                        if rng.random_bool(0.5) {
                            w
                        } else {
                            -w
                        }
                    }),
                };
                let norm = kind.norm(&raw);
                if norm > 0.0 {
                    break match kind {
                        NormKind::Inf if !boundary => raw,
                        _ => raw / norm,
                    };
                }
            };
            let radius = match (boundary, kind) {
                (true, _) | (false, NormKind::Inf) => 1.0,
                (false, _) => (1.0 - rng.random::<f64>()).powf(1.0 / n as f64),
            };
            let mut u = unit * (rho * radius);
            // Pin boundary samples to the budget exactly.
            if boundary {
                let norm = kind.norm(&u);
                u *= rho / norm;
            }
            u
        })
        .collect();
    SampleSet {
        kind,
        rho,
        seed,
        samples,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub samples: usize,
    /// The worst-case value every sample is checked against.
    pub bound: f64,
    pub slack: f64,
    pub dominated: usize,
    pub fraction_dominated: f64,
    /// Indices of samples whose simulated nadir exceeds `bound + slack`.
    pub violations: Vec<usize>,
    pub sample_nadirs: Vec<f64>,
    pub max_sample_nadir: f64,
    /// `bound - max_sample_nadir`.
    pub min_gap: f64,
    pub mean_gap: f64,
    /// Simulated grid nadir (all buses) under the worst-case disturbance.
    pub worst_simulated_nadir: f64,
    /// Simulated `|omega_{i*}(t*)|` under the worst-case disturbance; for a
    /// settled maximizer, the value at the settling horizon.
    pub worst_reproduced: f64,
    pub worst_reproduction_time: f64,
    pub worst_reproduction_rel_error: f64,
}

impl DominanceReport {
    pub fn all_dominated(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Simulate every sample on the analysis grid and compare its nadir against
/// the computed worst case.
pub fn dominance_report(
    model: &NetworkModel,
    result: &NadirResult,
    step: f64,
    samples: &SampleSet,
    slack: f64,
) -> Result<DominanceReport> {
    let dt = result.options.step;
    let every = (dt / step).round() as usize;
    if every == 0 || ((every as f64) * step - dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidParameter(format!(
            "integrator step {step} must divide the grid spacing {dt}"
        )));
    }
    let cfg = SimConfig::new(step, result.options.horizon()).recording_every(every);
    cfg.validate(model)?;
    if let Some(bad) = samples.samples.iter().find(|u| u.len() != model.n()) {
        return Err(Error::Dimension {
            expected: model.n(),
            got: bad.len(),
        });
    }

    let grid_nadir = |u: &DVector<f64>| -> Result<f64> {
        let traj = simulate_step_response(model, u, &cfg)?;
        Ok(per_bus_nadir(&traj).0.into_iter().fold(0.0, f64::max))
    };

    let sample_nadirs = samples.samples.par_iter().map(grid_nadir).collect::<Result<Vec<_>>>()?;

    let bound = result.value;
    let violations: Vec<usize> = sample_nadirs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > bound + slack)
        .map(|(k, _)| k)
        .collect();
    let count = sample_nadirs.len();
    let max_sample_nadir = sample_nadirs.iter().copied().fold(0.0, f64::max);
    let mean_gap = if count > 0 {
        sample_nadirs.iter().map(|v| bound - v).sum::<f64>() / count as f64
    } else {
        0.0
    };

    let worst_simulated_nadir = grid_nadir(&result.disturbance)?;

    // Settled maximizers are reproduced at a horizon long enough for every
    // damped transient to die out.
    let reproduction_time = if result.time.is_finite() {
        result.time
    } else {
        let slowest = model.buses().iter().map(|b| b.inertia / b.damping).fold(0.0, f64::max);
        (40.0 * slowest).max(result.options.horizon())
    };
    let repro_cfg = SimConfig::new(step, reproduction_time.max(step));
    let traj = simulate_step_response(model, &result.disturbance, &repro_cfg)?;
    let j = traj.nearest_index(reproduction_time);
    let worst_reproduced = traj.omega()[(result.bus, j)].abs();

    Ok(DominanceReport {
        samples: count,
        bound,
        slack,
        dominated: count - violations.len(),
        fraction_dominated: if count > 0 {
            (count - violations.len()) as f64 / count as f64
        } else {
            1.0
        },
        violations,
        sample_nadirs,
        max_sample_nadir,
        min_gap: bound - max_sample_nadir,
        mean_gap,
        worst_simulated_nadir,
        worst_reproduced,
        worst_reproduction_time: traj.times()[j],
        worst_reproduction_rel_error: (worst_reproduced - bound).abs() / bound,
    })
}
