//! Worst-case frequency nadir under a norm-bounded step disturbance.
//!
//! For bus `i` and time `t` the largest deviation any `||u0|| <= rho` can
//! produce is
//!
//! ```text
//! F_it = rho / sqrt(r_i) * || R^{-1/2} V c_i(t) ||^D,   c_i(t) = (v_{k,i} h_k(t))_k
//! ```
//!
//! where `||.||^D` is the dual of the budget norm. [`worst_case_search`]
//! tabulates `F` over buses and a uniform time grid and reads off the
//! maximizer; [`recover_worst_disturbance`] returns the disturbance that
//! attains a given entry.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::ModalBasis;
use crate::netmodel::NetworkModel;

/// Largest `|r_i - 1|` for which a model counts as homogeneous.
pub const HOMOGENEITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
    #[serde(rename = "1")]
    One,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Two, NormKind::Inf, NormKind::One];

    pub fn norm(self, x: &DVector<f64>) -> f64 {
        match self {
            NormKind::Two => x.norm(),
            NormKind::Inf => x.amax(),
            NormKind::One => x.iter().map(|v| v.abs()).sum(),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "two" => Ok(NormKind::Two),
            "inf" | "infinity" => Ok(NormKind::Inf),
            "1" | "one" => Ok(NormKind::One),
            other => Err(Error::InvalidParameter(format!("unknown norm {other:?}"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Two => "2",
            NormKind::Inf => "inf",
            NormKind::One => "1",
        })
    }
}

/// The uncertainty set `{u0 : ||u0||_kind <= rho}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub kind: NormKind,
    pub rho: f64,
}

impl DisturbanceSpec {
    pub fn new(kind: NormKind, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!("budget must be positive, got {rho}")));
        }
        Ok(Self { kind, rho })
    }
}

/// Value of the dual norm of `x` and a unit-norm maximizer `y*` with
/// `x^T y* = value`.
///
/// | primal | dual value | maximizer |
/// |--------|------------|-----------|
/// | 2      | `||x||_2`  | `x / ||x||_2` |
/// | inf    | `||x||_1`  | `sign(x)` |
/// | 1      | `||x||_inf`| `sign(x_m) e_m`, `m` the first index of largest `|x_m|` |
///
/// For `x = 0` the value is 0 and `y* = e_1`.
pub fn dual_norm(x: &DVector<f64>, kind: NormKind) -> Result<(f64, DVector<f64>)> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dual norm argument"));
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    if x.iter().all(|v| *v == 0.0) {
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        return Ok((0.0, e1));
    }
    Ok(match kind {
        NormKind::Two => {
            let norm = x.norm();
            (norm, x / norm)
        }
        NormKind::Inf => {
            let y = x.map(|v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            });
            (x.iter().map(|v| v.abs()).sum(), y)
        }
        NormKind::One => {
            let (m, value) = x.iter().enumerate().fold(
                (0, 0.0f64),
                |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best },
            );
            let mut y = DVector::zeros(n);
            y[m] = x[m].signum();
            (value, y)
        }
    })
}

/// `R^{-1/2} V c_i(t)` for every bus at once: column `i` of
/// `R^{-1/2} V diag(h(t)) V^T`.
fn direction_matrix(basis: &ModalBasis, t: f64) -> DMatrix<f64> {
    let h = basis.mode_responses(t);
    let mut weighted = basis.scaled_vectors().clone();
    for (k, mut col) in weighted.column_iter_mut().enumerate() {
        col *= h[k];
    }
    weighted * basis.vectors().transpose()
}

/// `R^{-1/2} V c_i(t)`, the direction whose inner product with `u0` gives
/// `sqrt(r_i) omega_i(t)`.
pub fn worst_direction(bus: usize, t: f64, basis: &ModalBasis) -> DVector<f64> {
    let h = basis.mode_responses(t);
    let c = basis.vectors().row(bus).transpose().component_mul(&h);
    basis.scaled_vectors() * c
}

/// One table entry `F_it`.
pub fn objective_value(bus: usize, t: f64, basis: &ModalBasis, spec: &DisturbanceSpec) -> f64 {
    let x = worst_direction(bus, t, basis);
    let (value, _) = dual_norm(&x, spec.kind).expect("modal responses are finite");
    spec.rho / basis.proportionality()[bus].sqrt() * value
}

fn table_column(basis: &ModalBasis, spec: &DisturbanceSpec, t: f64) -> Vec<f64> {
    let x = direction_matrix(basis, t);
    let r = basis.proportionality();
    x.column_iter()
        .enumerate()
        .map(|(i, col)| {
            let (value, _) = dual_norm(&col.into_owned(), spec.kind).expect("modal responses are finite");
            spec.rho / r[i].sqrt() * value
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Grid spacing `dt`, seconds.
    pub step: f64,
    /// Number of grid points `N`; the grid is `dt, 2 dt, ..., N dt`.
    pub steps: usize,
    /// Also evaluate the settled `t -> inf` column.
    pub steady_state: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            steps: 100,
            steady_state: true,
        }
    }
}

impl SearchOptions {
    pub fn horizon(&self) -> f64 {
        self.step * self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.steps).map(|k| k as f64 * self.step).collect()
    }
}

/// Dense `n x N` table of `F_it`, row-major by bus.
#[derive(Debug, Clone, PartialEq)]
pub struct NadirTable {
    n: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    steady_state: Option<Vec<f64>>,
}

impl NadirTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn get(&self, bus: usize, step: usize) -> f64 {
        self.values[bus * self.times.len() + step]
    }

    pub fn row(&self, bus: usize) -> &[f64] {
        let len = self.times.len();
        &self.values[bus * len..(bus + 1) * len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `t -> inf` column, when it was computed.
    pub fn steady_state(&self) -> Option<&[f64]> {
        self.steady_state.as_deref()
    }

    /// Largest finite-grid entry.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct NadirResult {
    pub value: f64,
    pub bus: usize,
    /// Seconds; `f64::INFINITY` when the settled column wins.
    pub time: f64,
    pub steady_state: bool,
    pub disturbance: DVector<f64>,
    pub spec: DisturbanceSpec,
    pub options: SearchOptions,
    pub table: NadirTable,
}

fn check_options(opts: &SearchOptions) -> Result<()> {
    if !(opts.step.is_finite() && opts.step > 0.0) || opts.steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate grid: dt = {}, N = {}",
            opts.step, opts.steps
        )));
    }
    Ok(())
}

/// Tabulate `F` over all buses and grid times and return the maximizer.
///
/// Ties go to the smallest bus, then the smallest time; the settled column
/// counts as later than every grid time.
pub fn worst_case_search(model: &NetworkModel, spec: &DisturbanceSpec, opts: &SearchOptions) -> Result<NadirResult> {
    check_options(opts)?;
    let basis = ModalBasis::from_model(model)?;
    search_basis(&basis, spec, opts)
}

/// [`worst_case_search`] on an existing decomposition.
pub fn search_basis(basis: &ModalBasis, spec: &DisturbanceSpec, opts: &SearchOptions) -> Result<NadirResult> {
    check_options(opts)?;
    let n = basis.n();
    let times = opts.times();
    let columns: Vec<Vec<f64>> = times.par_iter().map(|&t| table_column(basis, spec, t)).collect();

    let steps = times.len();
    let mut values = vec![0.0; n * steps];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * steps + j] = *v;
        }
    }
    let steady = opts.steady_state.then(|| table_column(basis, spec, f64::INFINITY));

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..steps {
            let v = values[i * steps + j];
            if v > best.2 {
                best = (i, j, v);
            }
        }
        if let Some(col) = &steady {
            if col[i] > best.2 {
                best = (i, steps, col[i]);
            }
        }
    }
    let (bus, step, value) = best;
    let time = if step == steps { f64::INFINITY } else { times[step] };
    let disturbance = recover_worst_disturbance(bus, time, basis, spec)?;

    Ok(NadirResult {
        value,
        bus,
        time,
        steady_state: step == steps,
        disturbance,
        spec: *spec,
        options: *opts,
        table: NadirTable {
            n,
            times,
            values,
            steady_state: steady,
        },
    })
}

/// The disturbance `u0*(i, t)` on the budget boundary that maximizes
/// `|omega_i(t)|`, signed so that `omega_i(t) > 0`.
pub fn recover_worst_disturbance(
    bus: usize,
    t: f64,
    basis: &ModalBasis,
    spec: &DisturbanceSpec,
) -> Result<DVector<f64>> {
    if bus >= basis.n() {
        return Err(Error::Dimension {
            expected: basis.n(),
            got: bus,
        });
    }
    let x = worst_direction(bus, t, basis);
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroDirection { bus, t });
    }
    let (_, y) = dual_norm(&x, spec.kind)?;
    Ok(y * spec.rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongConnectivity {
    pub holds: bool,
    pub lambda2: f64,
    /// `(n - 0.75) d^2 / m`.
    pub threshold: f64,
}

/// Whether a homogeneous network is connected strongly enough for the even
/// disturbance `rho 1/sqrt(n)` to be worst under a 2-norm budget.
pub fn strong_connectivity_check(model: &NetworkModel) -> Result<StrongConnectivity> {
    let deviation = model.homogeneity_deviation();
    if deviation > HOMOGENEITY_TOL {
        return Err(Error::NotHomogeneous { deviation });
    }
    if model.n() < 2 {
        return Err(Error::InvalidParameter("strong connectivity needs n >= 2".into()));
    }
    let basis = ModalBasis::from_model(model)?;
    let unit = model.unit();
    let threshold = (model.n() as f64 - 0.75) * unit.damping * unit.damping / unit.inertia;
    let lambda2 = basis.lambda2().expect("n >= 2");
    Ok(StrongConnectivity {
        holds: lambda2 >= threshold,
        lambda2,
        threshold,
    })
}

/// Closed-form worst 2-norm nadir of a proportional network in the limit of
/// infinite connectivity: `rho sqrt(n) / (d sum r_i)`.
pub fn strong_limit_nadir(model: &NetworkModel, rho: f64) -> f64 {
    rho * (model.n() as f64).sqrt() / (model.unit().damping * model.proportionality().sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteTrace {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    pub target: f64,
}

/// Worst 2-norm nadir with `L_B` scaled by each `beta`, alongside the
/// infinite-connectivity limit.
pub fn heterogeneous_asymptote_check(
    model: &NetworkModel,
    spec: &DisturbanceSpec,
    betas: &[f64],
    opts: &SearchOptions,
) -> Result<AsymptoteTrace> {
    if spec.kind != NormKind::Two {
        return Err(Error::InvalidParameter("asymptote check needs a 2-norm budget".into()));
    }
    let values = betas
        .iter()
        .map(|&beta| {
            let scaled = model.with_scaled_laplacian(beta)?;
            Ok(worst_case_search(&scaled, spec, opts)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoteTrace {
        betas: betas.to_vec(),
        values,
        target: strong_limit_nadir(model, spec.rho),
    })
}
