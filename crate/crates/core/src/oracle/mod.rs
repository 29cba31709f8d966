//! Finite-volume discretization of the patchy operator and its top
//! eigenvalue, used to cross-check the closed-form criteria.
//!
//! The operator is assembled in divergence form on a vertex-centred grid
//! whose zone interfaces fall on nodes, so flux continuity across an
//! interface is part of the stencil. For operators with nonnegative
//! off-diagonal entries (every scalar layout, and staged layouts whose
//! reaction matrices are Metzler) the top eigenvalue is
//! `inf { σ : σI − L has only positive pivots }`, found by bisection.
//! Other staged layouts use shifted inverse iteration.

mod dense;
mod lu;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lu::BlockLu;
use lu::FactorFailure;

use crate::model::{
    validate_layout, BoundaryCondition, ModelError, PatchLayout, Resolution, Rule, SpectralMethod,
    SpectralReport, StageZone, Verdict,
};

/// Iteration cap for the inverse-iteration path.
pub const MAX_INVERSE_ITERATIONS: usize = 20_000;

/// Width of the Marginal band in units of the Richardson error estimate.
pub const MARGINAL_BAND_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Layout(#[from] ModelError),
    #[error("inverse iteration did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("factorization broke down at shift {shift}")]
    Breakdown { shift: f64 },
    #[error("grid needs at least 2 refinement levels, got {0}")]
    TooFewLevels(u32),
}

/// Grid family: level `ℓ` puts `max(min_cells_per_zone, ⌈cells_per_unit·len⌉)·2^ℓ`
/// cells in every zone, so cell counts double exactly between levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells_per_unit: u32,
    pub min_cells_per_zone: u32,
    pub levels: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cells_per_unit: 64,
            min_cells_per_zone: 16,
            levels: 3,
        }
    }
}

impl GridSpec {
    pub fn with_cells_per_unit(cells_per_unit: u32) -> Self {
        Self {
            cells_per_unit,
            ..Self::default()
        }
    }

    /// Cells in a zone of length `len` at refinement `level`.
    pub fn cells(&self, len: f64, level: u32) -> usize {
        let base = ((self.cells_per_unit as f64 * len).ceil() as usize).max(self.min_cells_per_zone as usize);
        base << level
    }
}

/// Assembled `L`, block tridiagonal with `n × n` diagonal blocks and
/// diagonal (per-stage) couplings, plus wrap-around couplings when periodic.
/// Unknowns are ordered node-major: index `i·n + s`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub stages: usize,
    pub nodes: usize,
    pub periodic: bool,
    /// Node coordinates.
    pub positions: Vec<f64>,
    /// Dual-cell lengths (quadrature weights).
    pub weights: Vec<f64>,
    /// Diagonal blocks, `nodes · n²`, row-major per block.
    pub diag: Vec<f64>,
    /// Coupling of node `i` to its left neighbour, `nodes · n`.
    pub lower: Vec<f64>,
    /// Coupling of node `i` to its right neighbour, `nodes · n`.
    pub upper: Vec<f64>,
}

struct Cell {
    h: f64,
    zone: usize,
}

impl DiscreteOperator {
    /// `L·y`
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = self.stages;
        let nn = n * n;
        let nodes = self.nodes;
        let mut out = vec![0.0; nodes * n];
        for i in 0..nodes {
            let left = if i > 0 { Some(i - 1) } else if self.periodic { Some(nodes - 1) } else { None };
            let right = if i + 1 < nodes { Some(i + 1) } else if self.periodic { Some(0) } else { None };
            for s in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    v += self.diag[i * nn + s * n + k] * y[i * n + k];
                }
                if let Some(l) = left {
                    v += self.lower[i * n + s] * y[l * n + s];
                }
                if let Some(r) = right {
                    v += self.upper[i * n + s] * y[r * n + s];
                }
                out[i * n + s] = v;
            }
        }
        out
    }

    /// True when every off-diagonal entry is nonnegative.
    pub fn is_metzler(&self) -> bool {
        let n = self.stages;
        (0..self.nodes).all(|i| {
            (0..n).all(|j| (0..n).all(|k| j == k || self.diag[i * n * n + j * n + k] >= 0.0))
        })
    }

    /// Gershgorin bound on the real parts of the eigenvalues.
    pub fn gershgorin_upper(&self) -> f64 {
        let n = self.stages;
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.nodes {
            for s in 0..n {
                let row = &self.diag[i * n * n + s * n..i * n * n + (s + 1) * n];
                let off: f64 = row.iter().enumerate().filter(|(k, _)| *k != s).map(|(_, v)| v.abs()).sum();
                let bound = row[s] + off + self.lower[i * n + s].abs() + self.upper[i * n + s].abs();
                best = best.max(bound);
            }
        }
        best
    }

    /// Largest absolute entry of `L`.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Couplings `(S_{i,i+1}, S_{i+1,i})` of `S = W^{1/2} L W^{-1/2}` for a
    /// scalar operator; `S` is symmetric iff every pair is equal.
    pub fn symmetrized_couplings(&self) -> Vec<(f64, f64)> {
        assert_eq!(self.stages, 1, "scalar operator expected");
        let nodes = self.nodes;
        let pairs = if self.periodic { nodes } else { nodes - 1 };
        (0..pairs)
            .map(|i| {
                let j = (i + 1) % nodes;
                let (wi, wj) = (self.weights[i], self.weights[j]);
                (self.upper[i] * (wi / wj).sqrt(), self.lower[j] * (wj / wi).sqrt())
            })
            .collect()
    }

    /// `Σ w_i y_{i,s}` over nodes and stages.
    pub fn mass(&self, y: &[f64]) -> f64 {
        let n = self.stages;
        (0..self.nodes).map(|i| self.weights[i] * y[i * n..(i + 1) * n].iter().sum::<f64>()).sum()
    }

    /// `√(Σ w_i |y_i|²)`, optionally restricted to one stage.
    pub fn l2_norm(&self, y: &[f64], stage: Option<usize>) -> f64 {
        let n = self.stages;
        (0..self.nodes)
            .map(|i| {
                let node = &y[i * n..(i + 1) * n];
                let sq: f64 = match stage {
                    Some(s) => node[s] * node[s],
                    None => node.iter().map(|v| v * v).sum(),
                };
                self.weights[i] * sq
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn factor(&self, alpha: f64, beta: f64) -> Option<BlockLu> {
        BlockLu::factor(self, alpha, beta, false).ok()
    }
}

/// Assembles `L` for `layout` at refinement `level` of `grid`.
pub fn assemble(layout: &PatchLayout, grid: &GridSpec, level: u32) -> DiscreteOperator {
    let (ben, ctl) = layout.zones.as_stage_zones();
    let zones: [&StageZone; 2] = [&ben, &ctl];
    let n = ben.stages();
    let nn = n * n;

    let copies = match layout.bc {
        BoundaryCondition::Periodic => layout.repeats as usize,
        _ => 1,
    };
    let mut cells = Vec::new();
    for _ in 0..copies {
        for (zone, len) in [(0usize, layout.patch_width), (1, layout.control_width)] {
            if len <= 0.0 {
                continue;
            }
            let m = grid.cells(len, level);
            cells.extend((0..m).map(|_| Cell { h: len / m as f64, zone }));
        }
    }
    let nc = cells.len();
    let periodic = layout.bc == BoundaryCondition::Periodic;
    // node i sits between cell i-1 and cell i
    let node_range: Vec<usize> = match layout.bc {
        BoundaryCondition::Dirichlet => (1..nc).collect(),
        BoundaryCondition::Neumann => (0..=nc).collect(),
        BoundaryCondition::Periodic => (0..nc).collect(),
    };
    let mut x = 0.0;
    let mut node_x = Vec::with_capacity(nc + 1);
    node_x.push(0.0);
    for c in &cells {
        x += c.h;
        node_x.push(x);
    }

    let nodes = node_range.len();
    let mut op = DiscreteOperator {
        stages: n,
        nodes,
        periodic,
        positions: Vec::with_capacity(nodes),
        weights: Vec::with_capacity(nodes),
        diag: vec![0.0; nodes * nn],
        lower: vec![0.0; nodes * n],
        upper: vec![0.0; nodes * n],
    };
    for (idx, &i) in node_range.iter().enumerate() {
        let left = if i > 0 {
            Some(&cells[i - 1])
        } else if periodic {
            Some(&cells[nc - 1])
        } else {
            None
        };
        let right = cells.get(i);
        let hl = left.map_or(0.0, |c| c.h);
        let hr = right.map_or(0.0, |c| c.h);
        let w = 0.5 * (hl + hr);
        op.positions.push(node_x[i]);
        op.weights.push(w);
        let block = &mut op.diag[idx * nn..(idx + 1) * nn];
        for (cell, h) in [(left, hl), (right, hr)] {
            let Some(cell) = cell else { continue };
            let z = zones[cell.zone];
            // reaction: cell average over the dual cell
            let share = h / (hl + hr);
            for j in 0..n {
                for k in 0..n {
                    block[j * n + k] += share * z.reaction[(j, k)];
                }
            }
        }
        for s in 0..n {
            let cl = left.map_or(0.0, |c| zones[c.zone].diffusion[s] / c.h);
            let cr = right.map_or(0.0, |c| zones[c.zone].diffusion[s] / c.h);
            block[s * n + s] -= (cl + cr) / w;
            op.lower[idx * n + s] = cl / w;
            op.upper[idx * n + s] = cr / w;
        }
    }
    if layout.bc == BoundaryCondition::Dirichlet {
        // couplings to the boundary nodes drop out
        for s in 0..n {
            op.lower[s] = 0.0;
            op.upper[(nodes - 1) * n + s] = 0.0;
        }
    }
    op
}

fn shifted_is_m_matrix(op: &DiscreteOperator, sigma: f64) -> bool {
    matches!(BlockLu::factor(op, sigma, 1.0, true), Ok(_))
}

/// Top eigenvalue of a Metzler-form operator by pivot-sign bisection.
fn top_eigenvalue_bisection(op: &DiscreteOperator) -> f64 {
    let scale = op.max_abs().max(1.0);
    let floor = 1e-15 * scale;
    let mut hi = op.gershgorin_upper() + floor;
    while !shifted_is_m_matrix(op, hi) {
        hi += (1e-6 * scale).max(hi.abs());
    }
    let mut step = 1e-3 * (1.0 + hi.abs());
    let mut lo = hi - step;
    while shifted_is_m_matrix(op, lo) {
        hi = lo;
        step *= 4.0;
        lo = hi - step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= floor || mid <= lo || mid >= hi {
            break;
        }
        if shifted_is_m_matrix(op, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvalue of largest real part by shifted inverse iteration; assumes
/// that eigenvalue is real.
fn top_eigenvalue_inverse_iteration(op: &DiscreteOperator) -> Result<f64, OracleError> {
    let scale = op.max_abs().max(1.0);
    let mut sigma = op.gershgorin_upper() + 1.0;
    let size = op.nodes * op.stages;
    let mut v: Vec<f64> = (0..size).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618).sin().abs()).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    let mut lu = op.factor(sigma, 1.0).ok_or(OracleError::Breakdown { shift: sigma })?;
    let mut prev = f64::NAN;
    let mut settled = 0;
    let mut shifted = false;
    let mut last_change = f64::INFINITY;
    for it in 0..MAX_INVERSE_ITERATIONS {
        let x = lu.solve(&v);
        let rho = dot(&v, &x);
        let norm = dot(&x, &x).sqrt();
        if !(norm.is_finite() && rho.is_finite()) || rho == 0.0 {
            return Err(OracleError::Breakdown { shift: sigma });
        }
        let estimate = sigma - 1.0 / rho;
        v = x.into_iter().map(|c| c / norm).collect();
        last_change = (estimate - prev).abs();
        prev = estimate;
        if last_change <= 1e-13 * scale {
            settled += 1;
            if settled >= 3 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        if !shifted && it > 10 && last_change <= 1e-6 * (sigma - estimate) {
            // any real shift above the top eigenvalue keeps it dominant
            let closer = estimate + 0.02 * (sigma - estimate);
            if let Some(f) = op.factor(closer, 1.0) {
                sigma = closer;
                lu = f;
            }
            shifted = true;
        }
    }
    Err(OracleError::NoConvergence {
        iterations: MAX_INVERSE_ITERATIONS,
        last_change,
    })
}

/// Top eigenvalue of one assembled operator.
pub fn top_eigenvalue_of(op: &DiscreteOperator) -> Result<f64, OracleError> {
    if op.is_metzler() {
        Ok(top_eigenvalue_bisection(op))
    } else {
        top_eigenvalue_inverse_iteration(op)
    }
}

/// Top eigenvalue at every refinement level, coarsest first.
pub fn top_eigenvalue_levels(layout: &PatchLayout, grid: &GridSpec) -> Result<Vec<f64>, OracleError> {
    (0..grid.levels)
        .map(|level| top_eigenvalue_of(&assemble(layout, grid, level)))
        .collect()
}

/// Richardson-extrapolated top eigenvalue from the two finest levels;
/// the error estimate is their difference.
pub fn top_eigenvalue_fd(layout: &PatchLayout, grid: &GridSpec) -> Result<SpectralReport, OracleError> {
    if grid.levels < 2 {
        return Err(OracleError::TooFewLevels(grid.levels));
    }
    let layout = validate_layout(layout.clone())?;
    let values = top_eigenvalue_levels(&layout, grid)?;
    let fine = values[values.len() - 1];
    let coarse = values[values.len() - 2];
    Ok(SpectralReport {
        top_eigenvalue: fine + (fine - coarse) / 3.0,
        method: SpectralMethod::FiniteDifference,
        error_estimate: (fine - coarse).abs(),
        resolution: Resolution::Grid {
            cells_per_unit: grid.cells_per_unit << (grid.levels - 1),
            levels: grid.levels,
        },
    })
}

/// Verdict from the sign of the top eigenvalue. The margin is `−E` so that
/// positive means eradication, as for the closed-form criteria.
pub fn verdict_from_report(report: &SpectralReport) -> Verdict {
    let band = MARGINAL_BAND_FACTOR * report.error_estimate;
    Verdict::from_margin(-report.top_eigenvalue, Rule::FiniteDifferenceOracle, band)
}

pub fn verdict_fd(layout: &PatchLayout, grid: &GridSpec) -> Result<Verdict, OracleError> {
    Ok(verdict_from_report(&top_eigenvalue_fd(layout, grid)?))
}

impl From<FactorFailure> for OracleError {
    fn from(_: FactorFailure) -> Self {
        OracleError::Breakdown { shift: f64::NAN }
    }
}
