//! Spectral coordinates of a proportional network and the closed-form
//! responses of its decoupled modes.
//!
//! With `R = diag(r)` and the scaled Laplacian `L = R^{-1/2} L_B R^{-1/2} =
//! V diag(lambda) V^T`, a step disturbance `u0` excites
//!
//! ```text
//! omega(t) = sum_k alpha_k h_k(t) R^{-1/2} v_k,     alpha = V^T R^{-1/2} u0
//! ```
//!
//! where `h_k` is the impulse response of `1 / (m s^2 + d s + lambda_k)`.
//! The per-mode transfer function `z_k(s)` of the frequency-domain form is
//! `s` times that transform; only `h_k(t)` is ever materialized here.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netmodel::NetworkModel;

/// Eigenvalues with `|lambda| <= n * ZERO_MODE_REL_TOL * max|L|` are zero modes.
pub const ZERO_MODE_REL_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_REL_TOL * max|L|` reject the input.
pub const PSD_REL_TOL: f64 = 1e-8;
/// Half-width of the band around `xi = 1` treated as critically damped.
pub const CRITICAL_BAND: f64 = 1e-9;
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// `L = R^{-1/2} L_B R^{-1/2}`, symmetrized after forming.
pub fn scaled_laplacian(laplacian: &DMatrix<f64>, r: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = laplacian.nrows();
    if laplacian.ncols() != n || r.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: r.len(),
        });
    }
    if let Some(bad) = r.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "proportionality entries must be positive, got {bad}"
        )));
    }
    let inv_sqrt = r.map(|v| 1.0 / v.sqrt());
    let l = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * laplacian[(i, j)] * inv_sqrt[j]);
    Ok((&l + l.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ZeroMode,
    Under,
    Critical,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKinetics {
    pub eigenvalue: f64,
    /// `sqrt(lambda / m)`, rad/s.
    pub natural_frequency: f64,
    /// `d / (2 sqrt(lambda m))`; infinite for a zero mode.
    pub damping_ratio: f64,
    pub regime: Regime,
    pub inertia: f64,
    pub damping: f64,
}

pub fn mode_kinetics(eigenvalue: f64, inertia: f64, damping: f64) -> ModeKinetics {
    let natural_frequency = (eigenvalue / inertia).sqrt();
    let damping_ratio = if eigenvalue == 0.0 {
        f64::INFINITY
    } else {
        damping / (2.0 * (eigenvalue * inertia).sqrt())
    };
    let regime = if eigenvalue == 0.0 {
        Regime::ZeroMode
    } else if (damping_ratio - 1.0).abs() <= CRITICAL_BAND {
        Regime::Critical
    } else if damping_ratio < 1.0 {
        Regime::Under
    } else {
        Regime::Over
    };
    ModeKinetics {
        eigenvalue,
        natural_frequency,
        damping_ratio,
        regime,
        inertia,
        damping,
    }
}

impl ModeKinetics {
    /// `h_k(t)`. Accepts `t = +inf` and returns the settled value.
    pub fn response(&self, t: f64) -> f64 {
        let (m, d) = (self.inertia, self.damping);
        if t.is_infinite() {
            return match self.regime {
                Regime::ZeroMode => 1.0 / d,
                _ => 0.0,
            };
        }
        let wn = self.natural_frequency;
        let xi = self.damping_ratio;
        match self.regime {
            Regime::ZeroMode => -(-d * t / m).exp_m1() / d,
            Regime::Under => {
                let wd = wn * ((1.0 - xi) * (1.0 + xi)).sqrt();
                (-xi * wn * t).exp() * (wd * t).sin() / (m * wd)
            }
            Regime::Critical => t * (-wn * t).exp() / m,
            Regime::Over => {
                // sigma_1 sigma_2 = wn^2; form sigma_2 from the product to
                // avoid cancellation at large xi.
                let spread = wn * ((xi - 1.0) * (xi + 1.0)).sqrt();
                let sigma1 = xi * wn + spread;
                let sigma2 = wn * wn / sigma1;
                let gap = 2.0 * spread;
                (-sigma2 * t).exp() * -(-gap * t).exp_m1() / (m * gap)
            }
        }
    }
}

/// Orthonormal eigenbasis of the scaled Laplacian plus the unit data needed
/// to evaluate modal responses.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    eigenvalues: DVector<f64>,
    vectors: DMatrix<f64>,
    r: DVector<f64>,
    scaled_vectors: DMatrix<f64>,
    kinetics: Vec<ModeKinetics>,
    inertia: f64,
    damping: f64,
}

impl ModalBasis {
    /// Decompose a proportional model.
    pub fn from_model(model: &NetworkModel) -> Result<Self> {
        if !model.is_proportional() {
            return Err(Error::NotProportional {
                residual: model.proportionality_residual(),
            });
        }
        let r = model.proportionality();
        let l = scaled_laplacian(model.laplacian(), r)?;
        let unit = model.unit();
        eigendecompose(&l, r, unit.inertia, unit.damping)
    }

    /// Assemble a basis from precomputed eigenpairs. Checks orthonormality,
    /// ordering, and nonnegativity; no clamping or sign fixing is applied.
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        vectors: DMatrix<f64>,
        r: DVector<f64>,
        inertia: f64,
        damping: f64,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: vectors.nrows(),
            });
        }
        if r.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: r.len(),
            });
        }
        if !(inertia > 0.0 && damping > 0.0) {
            return Err(Error::InvalidParameter("representative unit must have m, d > 0".into()));
        }
        if let Some(&neg) = eigenvalues.iter().find(|v| **v < 0.0) {
            return Err(Error::NotPsd(neg));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("eigenvalues must be nondecreasing".into()));
        }
        let residual = orthonormality_residual(&vectors);
        if residual > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(residual));
        }
        let inv_sqrt = r.map(|v| 1.0 / v.sqrt());
        let scaled_vectors = DMatrix::from_fn(n, n, |i, k| inv_sqrt[i] * vectors[(i, k)]);
        let kinetics = eigenvalues
            .iter()
            .map(|&l| mode_kinetics(l, inertia, damping))
            .collect();
        Ok(Self {
            eigenvalues,
            vectors,
            r,
            scaled_vectors,
            kinetics,
            inertia,
            damping,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Columns are the unit eigenvectors `v_k`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `R^{-1/2} V`.
    pub fn scaled_vectors(&self) -> &DMatrix<f64> {
        &self.scaled_vectors
    }

    pub fn proportionality(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn kinetics(&self) -> &[ModeKinetics] {
        &self.kinetics
    }

    pub fn zero_mode_count(&self) -> usize {
        self.kinetics.iter().filter(|k| k.regime == Regime::ZeroMode).count()
    }

    /// Algebraic connectivity `lambda_2`; `None` for a single bus.
    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    /// `(h_k(t), k = 1..n)`.
    pub fn mode_responses(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.kinetics.iter().map(|k| k.response(t)))
    }

    /// `R^{1/2} V alpha`, the inverse of [`decompose_disturbance`].
    pub fn reconstruct(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let mut u = &self.vectors * alpha;
        for (ui, ri) in u.iter_mut().zip(self.r.iter()) {
            *ui *= ri.sqrt();
        }
        u
    }

    /// Bus inertias `m_i = r_i m`.
    pub fn bus_inertias(&self) -> DVector<f64> {
        &self.r * self.inertia
    }
}

/// Max-abs entry of `V^T V - I`.
pub fn orthonormality_residual(vectors: &DMatrix<f64>) -> f64 {
    let gram = vectors.transpose() * vectors;
    let n = gram.nrows();
    (&gram - DMatrix::<f64>::identity(n, n)).amax()
}

/// Dense symmetric eigendecomposition of a scaled Laplacian.
///
/// Eigenvalues come back nondecreasing with near-zero noise clamped to
/// exactly zero. Each eigenvector has its largest-magnitude entry made
/// positive; when the zero eigenvalue is simple, `v_1` is replaced by the
/// exact null vector `R^{1/2} 1 / sqrt(sum r_i)`.
pub fn eigendecompose(l: &DMatrix<f64>, r: &DVector<f64>, inertia: f64, damping: f64) -> Result<ModalBasis> {
    let n = l.nrows();
    if l.ncols() != n || r.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: r.len(),
        });
    }
    let scale = l.amax();
    let eig = SymmetricEigen::new(l.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let clamp = n as f64 * ZERO_MODE_REL_TOL * scale;
    let mut eigenvalues = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[src];
        if lambda < -PSD_REL_TOL * scale {
            return Err(Error::NotPsd(lambda));
        }
        eigenvalues[k] = if lambda <= clamp { 0.0 } else { lambda };

        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold(
                (0, 0.0f64),
                |best, (i, v)| if v.abs() > best.1.abs() { (i, *v) } else { best },
            )
            .1;
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }

    let zeros = eigenvalues.iter().filter(|v| **v == 0.0).count();
    if zeros == 1 {
        let norm = r.sum().sqrt();
        let v1 = r.map(|v| v.sqrt() / norm);
        vectors.set_column(0, &v1);
    }

    ModalBasis::from_parts(eigenvalues, vectors, r.clone(), inertia, damping)
}

/// `alpha = V^T R^{-1/2} u0`.
pub fn decompose_disturbance(u0: &DVector<f64>, basis: &ModalBasis) -> Result<DVector<f64>> {
    if u0.len() != basis.n() {
        return Err(Error::Dimension {
            expected: basis.n(),
            got: u0.len(),
        });
    }
    Ok(basis.scaled_vectors().transpose() * u0)
}

/// Per-bus frequency deviations on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// `n x times.len()`, column `j` is `omega(times[j])`.
    omega: DMatrix<f64>,
    coi: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, omega: DMatrix<f64>) -> Result<Self> {
        check_grid(&times)?;
        if omega.ncols() != times.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                got: omega.ncols(),
            });
        }
        Ok(Self {
            times,
            omega,
            coi: None,
        })
    }

    pub fn with_coi(mut self, inertias: &DVector<f64>) -> Result<Self> {
        self.coi = Some(coi_frequency(&self, inertias)?);
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn coi(&self) -> Option<&[f64]> {
        self.coi.as_deref()
    }

    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Bus `i` as a time series.
    pub fn bus(&self, i: usize) -> Vec<f64> {
        self.omega.row(i).iter().copied().collect()
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.times.len() => self.times.len() - 1,
            Err(i) => {
                if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    /// `max_i max_t |omega_i(t) - coi(t)|`, if the COI series is present.
    pub fn max_coi_deviation(&self) -> Option<f64> {
        let coi = self.coi.as_ref()?;
        Some(
            self.omega
                .column_iter()
                .zip(coi)
                .map(|(col, c)| col.iter().map(|w| (w - c).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max),
        )
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter(
            "time grid must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `omega(t) = sum_k alpha_k h_k(t) R^{-1/2} v_k` on `times`, with the COI
/// series attached.
pub fn frequency_response(basis: &ModalBasis, alpha: &DVector<f64>, times: &[f64]) -> Result<Trajectory> {
    let n = basis.n();
    if alpha.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: alpha.len(),
        });
    }
    check_grid(times)?;
    let columns: Vec<DVector<f64>> = times
        .par_iter()
        .map(|&t| {
            let weights = basis.mode_responses(t).component_mul(alpha);
            basis.scaled_vectors() * weights
        })
        .collect();
    let omega = if columns.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&columns)
    };
    Trajectory::new(times.to_vec(), omega)?.with_coi(&basis.bus_inertias())
}

/// Inertia-weighted average `sum m_i omega_i / sum m_i` at every grid point.
pub fn coi_frequency(traj: &Trajectory, inertias: &DVector<f64>) -> Result<Vec<f64>> {
    if inertias.len() != traj.n() {
        return Err(Error::Dimension {
            expected: traj.n(),
            got: inertias.len(),
        });
    }
    let total = inertias.sum();
    Ok(traj.omega.column_iter().map(|col| col.dot(inertias) / total).collect())
}
