//! Linearized power-network model: per-bus generation units and the
//! weighted network Laplacian `L_B`.
//!
//! A model is immutable once built. On construction the representative unit
//! is derived from the bus data as
//!
//! ```text
//! m   = mean(m_i)
//! r_i = m_i / m
//! d   = mean(d_i / r_i)
//! ```
//!
//! and the relative proportionality residual `max_i |d_i - r_i d| / d` is
//! stored. Models whose residual exceeds [`PROPORTIONALITY_TOL`] are still
//! representable (the time-domain simulator accepts them) but the modal
//! analysis refuses them.
//!
//! Damping is stored in per-unit on the system base, even where source data
//! quotes it in seconds.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for Laplacian symmetry and zero row sums.
pub const LAPLACIAN_TOL: f64 = 1e-9;
/// Relative damping residual above which a model counts as non-proportional.
pub const PROPORTIONALITY_TOL: f64 = 1e-6;
/// Off-diagonal magnitude above which two buses count as coupled.
pub const COUPLING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusParams {
    /// Inertia `m_i` in seconds.
    pub inertia: f64,
    /// Damping `d_i` in per-unit.
    pub damping: f64,
}

impl BusParams {
    pub fn new(inertia: f64, damping: f64) -> Self {
        Self { inertia, damping }
    }
}

/// One transmission line, linearized around the equilibrium angle difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineData {
    pub from: usize,
    pub to: usize,
    /// Susceptance `B_ij` in per-unit.
    pub susceptance: f64,
    pub v_from: f64,
    pub v_to: f64,
    /// Equilibrium angle difference `theta_i0 - theta_j0` in radians.
    pub angle_diff: f64,
}

impl LineData {
    /// Flat-voltage, zero-angle line.
    pub fn simple(from: usize, to: usize, susceptance: f64) -> Self {
        Self {
            from,
            to,
            susceptance,
            v_from: 1.0,
            v_to: 1.0,
            angle_diff: 0.0,
        }
    }

    /// Effective coupling weight `Omega0 |V_i||V_j| B_ij cos(theta_i0 - theta_j0)`.
    pub fn weight(&self, omega0: f64) -> f64 {
        omega0 * self.v_from * self.v_to * self.susceptance * self.angle_diff.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentativeUnit {
    pub inertia: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    f0_hz: f64,
    buses: Vec<BusParams>,
    laplacian: DMatrix<f64>,
    unit: RepresentativeUnit,
    proportionality: DVector<f64>,
    proportionality_residual: f64,
}

/// Assemble `L_B` from a line list. Parallel lines accumulate.
pub fn build_laplacian_from_lines(lines: &[LineData], n: usize, omega0: f64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("network needs at least one bus".into()));
    }
    if !omega0.is_finite() {
        return Err(Error::NonFinite("nominal angular frequency"));
    }
    let mut lap = DMatrix::zeros(n, n);
    for (l, line) in lines.iter().enumerate() {
        for index in [line.from, line.to] {
            if index >= n {
                return Err(Error::EndpointOutOfRange { line: l, index, n });
            }
        }
        if line.from == line.to {
            return Err(Error::SelfLoop {
                line: l,
                index: line.from,
            });
        }
        let w = line.weight(omega0);
        if !w.is_finite() {
            return Err(Error::NonFinite("line weight"));
        }
        let (i, j) = (line.from, line.to);
        lap[(i, j)] -= w;
        lap[(j, i)] -= w;
        lap[(i, i)] += w;
        lap[(j, j)] += w;
    }
    Ok(lap)
}

impl NetworkModel {
    pub fn new(f0_hz: f64, buses: Vec<BusParams>, laplacian: DMatrix<f64>) -> Result<Self> {
        let n = buses.len();
        if n == 0 {
            return Err(Error::InvalidParameter("network needs at least one bus".into()));
        }
        if !(f0_hz.is_finite() && f0_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("f0_hz must be positive, got {f0_hz}")));
        }
        if laplacian.nrows() != n || laplacian.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: laplacian.nrows().max(laplacian.ncols()),
            });
        }
        if laplacian.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("laplacian"));
        }
        for (bus, b) in buses.iter().enumerate() {
            if !(b.inertia.is_finite() && b.inertia > 0.0) {
                return Err(Error::NonPositive {
                    bus,
                    what: "inertia",
                    value: b.inertia,
                });
            }
            if !(b.damping.is_finite() && b.damping > 0.0) {
                return Err(Error::NonPositive {
                    bus,
                    what: "damping",
                    value: b.damping,
                });
            }
        }

        let m = buses.iter().map(|b| b.inertia).sum::<f64>() / n as f64;
        let r = DVector::from_iterator(n, buses.iter().map(|b| b.inertia / m));
        let d = buses.iter().zip(r.iter()).map(|(b, ri)| b.damping / ri).sum::<f64>() / n as f64;
        let residual = buses
            .iter()
            .zip(r.iter())
            .map(|(b, ri)| (b.damping - ri * d).abs())
            .fold(0.0, f64::max)
            / d;

        Ok(Self {
            f0_hz,
            buses,
            laplacian,
            unit: RepresentativeUnit { inertia: m, damping: d },
            proportionality: r,
            proportionality_residual: residual,
        })
    }

    pub fn from_lines(f0_hz: f64, buses: Vec<BusParams>, lines: &[LineData]) -> Result<Self> {
        let lap = build_laplacian_from_lines(lines, buses.len(), 2.0 * PI * f0_hz)?;
        Self::new(f0_hz, buses, lap)
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    /// Nominal angular frequency `2 pi F0` in rad/s.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0_hz
    }

    pub fn buses(&self) -> &[BusParams] {
        &self.buses
    }

    pub fn inertias(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.inertia))
    }

    pub fn dampings(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.damping))
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn unit(&self) -> RepresentativeUnit {
        self.unit
    }

    /// Proportionality vector `r`, with `r_i = m_i / m`.
    pub fn proportionality(&self) -> &DVector<f64> {
        &self.proportionality
    }

    pub fn proportionality_residual(&self) -> f64 {
        self.proportionality_residual
    }

    pub fn is_proportional(&self) -> bool {
        self.proportionality_residual <= PROPORTIONALITY_TOL
    }

    /// `max_i |r_i - 1|`.
    pub fn homogeneity_deviation(&self) -> f64 {
        self.proportionality.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Same units, Laplacian multiplied by `beta`.
    pub fn with_scaled_laplacian(&self, beta: f64) -> Result<Self> {
        Self::new(self.f0_hz, self.buses.clone(), &self.laplacian * beta)
    }

    /// Relabel buses so that new bus `k` is old bus `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n || perm.iter().collect::<BTreeSet<_>>().len() != n || perm.iter().any(|&p| p >= n) {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let buses = perm.iter().map(|&p| self.buses[p]).collect();
        let lap = DMatrix::from_fn(n, n, |i, j| self.laplacian[(perm[i], perm[j])]);
        Self::new(self.f0_hz, buses, lap)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            f0_hz: self.f0_hz,
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    m_s: b.inertia,
                    d_pu: b.damping,
                })
                .collect(),
            laplacian: Some(
                self.laplacian
                    .row_iter()
                    .map(|row| row.iter().copied().collect())
                    .collect(),
            ),
            lines: None,
        }
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.to_file())?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub m_s: f64,
    pub d_pu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub i: usize,
    pub j: usize,
    pub b_pu: f64,
    pub vi_pu: f64,
    pub vj_pu: f64,
    #[serde(default)]
    pub theta0_rad: f64,
}

/// On-disk network document. Exactly one of `laplacian` / `lines` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub f0_hz: f64,
    pub buses: Vec<BusRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplacian: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<LineRecord>>,
}

impl NetworkFile {
    pub fn into_model(self) -> Result<NetworkModel> {
        let n = self.buses.len();
        let buses: Vec<BusParams> = self.buses.iter().map(|b| BusParams::new(b.m_s, b.d_pu)).collect();
        match (self.laplacian, self.lines) {
            (Some(rows), None) => {
                if rows.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: rows.len(),
                    });
                }
                if let Some(bad) = rows.iter().find(|row| row.len() != n) {
                    return Err(Error::Dimension {
                        expected: n,
                        got: bad.len(),
                    });
                }
                let lap = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                NetworkModel::new(self.f0_hz, buses, lap)
            }
            (None, Some(lines)) => {
                let lines: Vec<LineData> = lines
                    .iter()
                    .map(|l| LineData {
                        from: l.i,
                        to: l.j,
                        susceptance: l.b_pu,
                        v_from: l.vi_pu,
                        v_to: l.vj_pu,
                        angle_diff: l.theta0_rad,
                    })
                    .collect();
                NetworkModel::from_lines(self.f0_hz, buses, &lines)
            }
            _ => Err(Error::LaplacianSource),
        }
    }
}

pub fn load_network<R: Read>(reader: R) -> Result<NetworkModel> {
    let file: NetworkFile = serde_json::from_reader(reader)?;
    file.into_model()
}

pub fn load_network_str(text: &str) -> Result<NetworkModel> {
    let file: NetworkFile = serde_json::from_str(text)?;
    file.into_model()
}

pub fn load_network_path(path: impl AsRef<Path>) -> Result<NetworkModel> {
    let text = std::fs::read_to_string(path)?;
    load_network_str(&text)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub connected: bool,
    pub components: usize,
}

impl ValidationReport {
    /// True when no error-severity check failed. Warnings do not count.
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.severity == Severity::Warning)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Number of connected components of the coupling graph of `L_B`.
pub fn connected_components(lap: &DMatrix<f64>) -> usize {
    let n = lap.nrows();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && j != i && (lap[(i, j)].abs() > COUPLING_TOL || lap[(j, i)].abs() > COUPLING_TOL) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    components
}

pub fn validate_network(model: &NetworkModel) -> ValidationReport {
    let lap = model.laplacian();
    let n = model.n();
    let scale = {
        let max = lap.amax();
        if max > 0.0 {
            max
        } else {
            1.0
        }
    };

    let mut symmetry = 0.0f64;
    let mut positive_off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            symmetry = symmetry.max((lap[(i, j)] - lap[(j, i)]).abs());
            if i != j {
                positive_off = positive_off.max(lap[(i, j)]);
            }
        }
    }
    let row_sum = lap.row_iter().map(|row| row.sum().abs()).fold(0.0, f64::max);

    let min_inertia = model.buses().iter().map(|b| b.inertia).fold(f64::INFINITY, f64::min);
    let min_damping = model.buses().iter().map(|b| b.damping).fold(f64::INFINITY, f64::min);
    let components = connected_components(lap);

    let checks = vec![
        Check {
            name: "positive_inertia",
            passed: min_inertia > 0.0,
            residual: min_inertia,
            severity: Severity::Error,
        },
        Check {
            name: "positive_damping",
            passed: min_damping > 0.0,
            residual: min_damping,
            severity: Severity::Error,
        },
        Check {
            name: "symmetry",
            passed: symmetry / scale <= LAPLACIAN_TOL,
            residual: symmetry / scale,
            severity: Severity::Error,
        },
        Check {
            name: "zero_row_sums",
            passed: row_sum / scale <= LAPLACIAN_TOL,
            residual: row_sum / scale,
            severity: Severity::Error,
        },
        Check {
            name: "nonpositive_off_diagonal",
            passed: positive_off <= 0.0,
            residual: positive_off.max(0.0) / scale,
            severity: Severity::Warning,
        },
        Check {
            name: "proportionality",
            passed: model.is_proportional(),
            residual: model.proportionality_residual(),
            severity: Severity::Warning,
        },
        Check {
            name: "connectivity",
            passed: components == 1,
            residual: (components - 1) as f64,
            severity: Severity::Warning,
        },
    ];

    ValidationReport {
        checks,
        connected: components == 1,
        components,
    }
}

// ---------------------------------------------------------------------------
// Random networks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Ring,
    RandomTreePlusEdges,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Topology::Ring),
            "random-tree-plus-edges" | "tree" => Ok(Topology::RandomTreePlusEdges),
            other => Err(Error::InvalidParameter(format!("unknown topology {other:?}"))),
        }
    }
}

/// Damping-to-inertia ratio of the Great Britain low-inertia unit
/// (`d = 16` pu, `m = 4.38` s).
pub const DEFAULT_DAMPING_PER_INERTIA: f64 = 16.0 / 4.38;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetworkConfig {
    pub n: usize,
    pub seed: u64,
    /// Open interval `(lo, hi)` for `m_i`, in seconds.
    pub inertia_range: (f64, f64),
    /// Edge weights are drawn uniformly from `[0.5, 1.5) * weight_scale`.
    pub weight_scale: f64,
    pub topology: Topology,
    /// Representative `d / m`; every bus gets `d_i = r_i d`.
    pub damping_per_inertia: f64,
    pub f0_hz: f64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        Self {
            n: 10,
            seed: 0,
            inertia_range: (0.0, 1000.0),
            weight_scale: 1.0,
            topology: Topology::RandomTreePlusEdges,
            damping_per_inertia: DEFAULT_DAMPING_PER_INERTIA,
            f0_hz: 50.0,
        }
    }
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize, topology: Topology) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    match topology {
        Topology::Ring => {
            for i in 0..n {
                let j = (i + 1) % n;
                if i != j {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        Topology::RandomTreePlusEdges => {
            for i in 1..n {
                let j = rng.random_range(0..i);
                edges.insert((j, i));
            }
            if n >= 3 {
                for _ in 0..n / 2 {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    if a != b {
                        edges.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    edges.into_iter().collect()
}

pub fn generate_random_network(cfg: &RandomNetworkConfig) -> Result<NetworkModel> {
    let (lo, hi) = cfg.inertia_range;
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid inertia range ({lo}, {hi})")));
    }
    if !(cfg.weight_scale.is_finite() && cfg.weight_scale > 0.0) {
        return Err(Error::InvalidParameter("weight scale must be positive".into()));
    }
    if !(cfg.damping_per_inertia.is_finite() && cfg.damping_per_inertia > 0.0) {
        return Err(Error::InvalidParameter("damping ratio must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inertias: Vec<f64> = (0..cfg.n)
        .map(|_| loop {
            let v = rng.random_range(lo..hi);
            if v > lo {
                break v;
            }
        })
        .collect();
    let m = inertias.iter().sum::<f64>() / cfg.n as f64;
    let d = cfg.damping_per_inertia * m;
    let buses = inertias.iter().map(|&mi| BusParams::new(mi, (mi / m) * d)).collect();

    let mut lap = DMatrix::zeros(cfg.n, cfg.n);
    for (i, j) in random_edges(&mut rng, cfg.n, cfg.topology) {
        let w = cfg.weight_scale * rng.random_range(0.5..1.5);
        lap[(i, j)] -= w;
        lap[(j, i)] -= w;
        lap[(i, i)] += w;
        lap[(j, j)] += w;
    }
    NetworkModel::new(cfg.f0_hz, buses, lap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(n: usize, lap: DMatrix<f64>) -> NetworkModel {
        NetworkModel::new(50.0, vec![BusParams::new(4.38, 16.0); n], lap).unwrap()
    }

    #[test]
    fn two_bus_line() {
        let omega0 = 100.0 * PI;
        let lap = build_laplacian_from_lines(&[LineData::simple(0, 1, 1.0)], 2, omega0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]) * omega0;
        assert_eq!(lap, expected);
    }

    #[test]
    fn single_bus_no_lines() {
        let lap = build_laplacian_from_lines(&[], 1, 100.0 * PI).unwrap();
        assert_eq!(lap, DMatrix::zeros(1, 1));
    }

    #[test]
    fn ring_is_symmetric_with_zero_row_sums() {
        let lines: Vec<_> = (0..3).map(|i| LineData::simple(i, (i + 1) % 3, 2.5)).collect();
        let lap = build_laplacian_from_lines(&lines, 3, 314.0).unwrap();
        assert_eq!(lap, lap.transpose());
        for row in lap.row_iter() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_lines_accumulate() {
        let lines = [LineData::simple(0, 1, 1.0), LineData::simple(1, 0, 2.0)];
        let lap = build_laplacian_from_lines(&lines, 2, 1.0).unwrap();
        assert_eq!(lap[(0, 1)], -3.0);
        assert_eq!(lap[(1, 1)], 3.0);
    }

    #[test]
    fn angle_difference_enters_through_cosine() {
        let line = LineData {
            angle_diff: PI / 3.0,
            v_from: 1.05,
            v_to: 0.95,
            ..LineData::simple(0, 1, 2.0)
        };
        let lap = build_laplacian_from_lines(&[line], 2, 10.0).unwrap();
        let w = 10.0 * 1.05 * 0.95 * 2.0 * 0.5;
        assert!((lap[(0, 1)] + w).abs() < 1e-12);
    }

    #[test]
    fn line_errors() {
        assert!(matches!(
            build_laplacian_from_lines(&[LineData::simple(0, 3, 1.0)], 3, 1.0),
            Err(Error::EndpointOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            build_laplacian_from_lines(&[LineData::simple(1, 1, 1.0)], 3, 1.0),
            Err(Error::SelfLoop { .. })
        ));
        assert!(matches!(
            build_laplacian_from_lines(&[LineData::simple(0, 1, f64::NAN)], 3, 1.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn laplacian_is_linear_in_omega0() {
        let lines = [
            LineData::simple(0, 1, 0.3),
            LineData {
                angle_diff: 0.2,
                ..LineData::simple(1, 2, 1.7)
            },
        ];
        let a = build_laplacian_from_lines(&lines, 3, 314.159).unwrap();
        let b = build_laplacian_from_lines(&lines, 3, 2.0 * 314.159).unwrap();
        assert_eq!(b, a * 2.0);
    }

    #[test]
    fn homogeneous_three_bus_file() {
        let text = r#"{
            "f0_hz": 50,
            "buses": [{"m_s": 4.38, "d_pu": 16}, {"m_s": 4.38, "d_pu": 16}, {"m_s": 4.38, "d_pu": 16}],
            "lines": [
                {"i": 0, "j": 1, "b_pu": 1.0, "vi_pu": 1.0, "vj_pu": 1.0},
                {"i": 1, "j": 2, "b_pu": 1.0, "vi_pu": 1.0, "vj_pu": 1.0, "theta0_rad": 0.0}
            ]
        }"#;
        let model = load_network_str(text).unwrap();
        assert_eq!(model.proportionality().as_slice(), &[1.0, 1.0, 1.0]);
        assert!((model.unit().inertia - 4.38).abs() < 1e-12);
        assert!((model.unit().damping - 16.0).abs() < 1e-12);
        assert!(model.is_proportional());
        assert!(validate_network(&model).is_valid());
    }

    #[test]
    fn explicit_zero_matrix_loads_disconnected() {
        let text = r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": 1}, {"m_s": 1, "d_pu": 1}],
                       "laplacian": [[0, 0], [0, 0]]}"#;
        let model = load_network_str(text).unwrap();
        let report = validate_network(&model);
        assert!(!report.connected);
        assert_eq!(report.components, 2);
        assert!(report.is_valid());
    }

    #[test]
    fn representative_inertia_is_mean() {
        let inertias = [300.0, 700.0, 559.69 * 3.0 - 1000.0];
        let buses: Vec<_> = inertias
            .iter()
            .map(|&m| BusParams::new(m, m * 2044.52 / 559.69))
            .collect();
        let model = NetworkModel::new(50.0, buses, DMatrix::zeros(3, 3)).unwrap();
        assert!((model.unit().inertia - 559.69).abs() < 1e-6);
        assert!((model.unit().damping - 2044.52).abs() < 1e-6);
        assert!(model.is_proportional());
    }

    #[test]
    fn schema_errors() {
        let both = r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": 1}], "laplacian": [[0]], "lines": []}"#;
        assert!(matches!(load_network_str(both), Err(Error::LaplacianSource)));
        let neither = r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": 1}]}"#;
        assert!(matches!(load_network_str(neither), Err(Error::LaplacianSource)));
        let bad_m = r#"{"f0_hz": 50, "buses": [{"m_s": 0, "d_pu": 1}], "laplacian": [[0]]}"#;
        assert!(matches!(
            load_network_str(bad_m),
            Err(Error::NonPositive { what: "inertia", .. })
        ));
        let bad_d = r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": -2}], "laplacian": [[0]]}"#;
        assert!(matches!(
            load_network_str(bad_d),
            Err(Error::NonPositive { what: "damping", .. })
        ));
        let ragged =
            r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": 1}, {"m_s": 1, "d_pu": 1}], "laplacian": [[0, 0], [0]]}"#;
        assert!(matches!(load_network_str(ragged), Err(Error::Dimension { .. })));
        assert!(matches!(load_network_str("{not json"), Err(Error::Schema(_))));
        let unknown = r#"{"f0_hz": 50, "buses": [{"m_s": 1, "d_pu": 1, "x": 2}], "laplacian": [[0]]}"#;
        assert!(matches!(load_network_str(unknown), Err(Error::Schema(_))));
    }

    #[test]
    fn non_proportional_is_flagged() {
        let buses = vec![BusParams::new(1.0, 1.0), BusParams::new(2.0, 1.0)];
        let model = NetworkModel::new(50.0, buses, DMatrix::zeros(2, 2)).unwrap();
        assert!(!model.is_proportional());
        let report = validate_network(&model);
        assert!(!report.check("proportionality").unwrap().passed);
        assert!(report.is_valid());
    }

    #[test]
    fn validate_connected_three_bus() {
        let lines: Vec<_> = (0..2).map(|i| LineData::simple(i, i + 1, 1.0)).collect();
        let model = NetworkModel::from_lines(50.0, vec![BusParams::new(4.38, 16.0); 3], &lines).unwrap();
        let report = validate_network(&model);
        assert!(report.checks.iter().all(|c| c.passed), "{report:?}");
        assert_eq!(report.components, 1);
    }

    #[test]
    fn validate_zero_laplacian() {
        let report = validate_network(&homogeneous(3, DMatrix::zeros(3, 3)));
        assert!(!report.connected);
        assert_eq!(report.components, 3);
        assert!(report.check("symmetry").unwrap().passed);
        assert!(!report.check("connectivity").unwrap().passed);
    }

    #[test]
    fn validate_row_sum_fault() {
        let mut lap = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        lap[(0, 0)] += 1e-3;
        let report = validate_network(&homogeneous(2, lap));
        let check = report.check("zero_row_sums").unwrap();
        assert!(!check.passed);
        assert!((check.residual - 1e-3 / 1.001).abs() < 1e-12);
        assert!(!report.is_valid());
    }

    #[test]
    fn positive_off_diagonal_is_a_warning() {
        let lap = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let report = validate_network(&homogeneous(2, lap));
        assert!(!report.check("nonpositive_off_diagonal").unwrap().passed);
        assert!(report.is_valid());
    }

    #[test]
    fn random_network_394() {
        let cfg = RandomNetworkConfig {
            n: 394,
            seed: 3,
            ..Default::default()
        };
        let model = generate_random_network(&cfg).unwrap();
        assert!(model.buses().iter().all(|b| b.inertia > 0.0 && b.inertia < 1000.0));
        let mean = model.buses().iter().map(|b| b.inertia).sum::<f64>() / 394.0;
        assert!((mean - model.unit().inertia).abs() < 1e-9);
        assert!(model.proportionality_residual() < 1e-12);
        assert!(validate_network(&model).is_valid());
        assert!(validate_network(&model).connected);
    }

    #[test]
    fn random_network_single_bus() {
        let cfg = RandomNetworkConfig {
            n: 1,
            ..Default::default()
        };
        let model = generate_random_network(&cfg).unwrap();
        assert_eq!(model.laplacian(), &DMatrix::zeros(1, 1));
    }

    #[test]
    fn random_network_is_deterministic() {
        for topology in [Topology::Ring, Topology::RandomTreePlusEdges] {
            let cfg = RandomNetworkConfig {
                n: 17,
                seed: 99,
                topology,
                ..Default::default()
            };
            let a = generate_random_network(&cfg).unwrap().to_json_string().unwrap();
            let b = generate_random_network(&cfg).unwrap().to_json_string().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_network_rejects_bad_range() {
        let cfg = RandomNetworkConfig {
            inertia_range: (5.0, 5.0),
            ..Default::default()
        };
        assert!(generate_random_network(&cfg).is_err());
        let cfg = RandomNetworkConfig {
            inertia_range: (-1.0, 5.0),
            ..Default::default()
        };
        assert!(generate_random_network(&cfg).is_err());
    }

    #[test]
    fn permutation_relabels_buses() {
        let cfg = RandomNetworkConfig {
            n: 5,
            seed: 1,
            inertia_range: (1.0, 10.0),
            ..Default::default()
        };
        let model = generate_random_network(&cfg).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let p = model.permuted(&perm).unwrap();
        for i in 0..5 {
            assert_eq!(p.buses()[i], model.buses()[perm[i]]);
            for j in 0..5 {
                assert_eq!(p.laplacian()[(i, j)], model.laplacian()[(perm[i], perm[j])]);
            }
        }
        assert!(model.permuted(&[0, 0, 1, 2, 3]).is_err());
    }
}
