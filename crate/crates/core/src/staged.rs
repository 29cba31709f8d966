//! Criteria for the staged (vector) model `ẏ = A y'' + M y`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    brent, eigen_basis_2x2, eigenvalues, max_real_eigenvalue, symmetric_eigen, Basis2x2, LinalgError, Matrix,
};
use crate::model::{
    validate_layout, BirthDeathParams, BoundaryCondition, ModelError, PatchLayout, StageZone, Verdict, Zones,
    DEFAULT_MARGINAL_TOL,
};
use crate::scalar::{self, ScalarCriterionInput, ScalarError};

/// Sample points on `[0, E₀]` for the sign and ordering checks.
pub const SIGN_CHECK_SAMPLES: usize = 257;

/// Relative tolerance for treating two diffusion diagonals as equal or proportional.
const DIFFUSION_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StagedError {
    #[error("AssumptionViolated: {0}")]
    AssumptionViolated(String),
    #[error("NonpositiveLeadEigenvalue: {0}")]
    NonpositiveLeadEigenvalue(f64),
    #[error("SingularBasis: eigenvector basis is (nearly) singular")]
    SingularBasis,
    #[error("layout is not a staged model")]
    NotStaged,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Layout(#[from] ModelError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Cyclic stage matrix: `M_jj = −m_j`, `M_{j+1,j} = b_j`, `M_{1n} = b_n`;
/// a single stage collapses to `[b₁ − m₁]`.
pub fn build_stage_matrix(params: &BirthDeathParams) -> Matrix {
    let n = params.stages();
    if n == 1 {
        return Matrix::scalar(params.births[0] - params.deaths[0]);
    }
    let mut m = Matrix::zeros(n);
    for j in 0..n {
        m[(j, j)] = -params.deaths[j];
    }
    for j in 0..n - 1 {
        m[(j + 1, j)] = params.births[j];
    }
    m[(0, n - 1)] = params.births[n - 1];
    m
}

/// Both zones of a staged layout plus geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedCriterionInput {
    pub beneficial: StageZone,
    pub control: StageZone,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub bc: BoundaryCondition,
    #[serde(rename = "K")]
    pub repeats: u32,
    pub marginal_tol: f64,
}

impl StagedCriterionInput {
    pub fn new(beneficial: StageZone, control: StageZone, big_r: f64, r: f64, bc: BoundaryCondition) -> Self {
        Self {
            beneficial,
            control,
            big_r,
            r,
            bc,
            repeats: 1,
            marginal_tol: DEFAULT_MARGINAL_TOL,
        }
    }

    pub fn from_layout(layout: &PatchLayout) -> Result<Self, StagedError> {
        let layout = validate_layout(layout.clone())?;
        let Zones::Staged { beneficial, control } = layout.zones else {
            return Err(StagedError::NotStaged);
        };
        Ok(Self {
            beneficial,
            control,
            big_r: layout.patch_width,
            r: layout.control_width,
            bc: layout.bc,
            repeats: layout.repeats,
            marginal_tol: DEFAULT_MARGINAL_TOL,
        })
    }

    pub fn to_layout(&self) -> PatchLayout {
        PatchLayout::staged(
            self.beneficial.clone(),
            self.control.clone(),
            self.big_r,
            self.r,
            self.repeats,
            self.bc,
        )
    }

    pub fn stages(&self) -> usize {
        self.beneficial.stages()
    }

    /// `a` with `A_nb = a·A_ben`, if the diagonals are proportional.
    pub fn diffusion_ratio(&self) -> Option<f64> {
        let a0 = self.control.diffusion[0] / self.beneficial.diffusion[0];
        let proportional = self
            .beneficial
            .diffusion
            .iter()
            .zip(&self.control.diffusion)
            .all(|(b, c)| (c / b - a0).abs() <= DIFFUSION_MATCH_TOL * a0);
        proportional.then_some(a0)
    }
}

/// Parameters of the uniform-control reduction: both zones diffuse every
/// stage at one rate (`a` resp. `b`) and the control zone applies the
/// extra mortality `μ` to every stage, `M_nb = M − μI`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformControlInput {
    pub reaction: Matrix,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub bc: BoundaryCondition,
    #[serde(rename = "K")]
    pub repeats: u32,
}

impl UniformControlInput {
    /// Recognizes the uniform-control shape in a staged input.
    pub fn from_staged(input: &StagedCriterionInput) -> Option<Self> {
        let uniform = |d: &[f64]| d.iter().all(|x| (x - d[0]).abs() <= DIFFUSION_MATCH_TOL * d[0]);
        if !uniform(&input.beneficial.diffusion) || !uniform(&input.control.diffusion) {
            return None;
        }
        let m = &input.beneficial.reaction;
        let diff = m.sub(&input.control.reaction);
        let mu = diff[(0, 0)];
        let scale = m.max_abs().max(1.0);
        let is_shift = (0..m.order()).all(|i| {
            (0..m.order()).all(|j| {
                let expected = if i == j { mu } else { 0.0 };
                (diff[(i, j)] - expected).abs() <= 1e-12 * scale
            })
        });
        is_shift.then(|| Self {
            reaction: m.clone(),
            a: input.beneficial.diffusion[0],
            b: input.control.diffusion[0],
            mu,
            big_r: input.big_r,
            r: input.r,
            bc: input.bc,
            repeats: input.repeats,
        })
    }

    pub fn to_layout(&self) -> PatchLayout {
        let n = self.reaction.order();
        PatchLayout::staged(
            StageZone::new(vec![self.a; n], self.reaction.clone()),
            StageZone::new(vec![self.b; n], self.reaction.shift(self.mu)),
            self.big_r,
            self.r,
            self.repeats,
            self.bc,
        )
    }
}

/// Reduces to the scalar criterion with growth `Λ₁` and mortality `μ − Λ₁`,
/// where `Λ₁` is the largest real eigenvalue of `M`.
pub fn uniform_control_verdict(input: &UniformControlInput) -> Result<Verdict, StagedError> {
    Ok(scalar::scalar_verdict(&uniform_control_reduction(input)?)?)
}

/// The equivalent scalar problem of [`uniform_control_verdict`].
pub fn uniform_control_reduction(input: &UniformControlInput) -> Result<ScalarCriterionInput, StagedError> {
    let lead = max_real_eigenvalue(&input.reaction)?;
    if lead <= 0.0 {
        return Err(StagedError::AssumptionViolated(format!(
            "Lambda1 = {lead} must be positive"
        )));
    }
    if input.mu <= lead {
        return Err(StagedError::AssumptionViolated(format!(
            "mu must exceed Lambda1 (mu = {}, Lambda1 = {lead})",
            input.mu
        )));
    }
    let tol = 1e-10 * (1.0 + input.reaction.norm());
    let vals = eigenvalues(&input.reaction)?;
    let lead_idx = vals
        .iter()
        .position(|z| z.im.abs() <= tol && (z.re - lead).abs() <= tol)
        .expect("lead eigenvalue is among the eigenvalues");
    if let Some(z) = vals.iter().enumerate().find(|(i, z)| *i != lead_idx && z.re >= 0.0).map(|(_, z)| z) {
        return Err(StagedError::AssumptionViolated(format!(
            "another eigenvalue has nonnegative real part ({} {:+}i)",
            z.re, z.im
        )));
    }
    Ok(ScalarCriterionInput::new(
        input.a,
        lead,
        input.b,
        input.mu - lead,
        input.big_r,
        input.r,
        input.bc,
    )
    .with_repeats(input.repeats))
}

/// Critical size of a staged patch with absorbing ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPatch {
    /// Largest real eigenvalue `Λ₁` of `A⁻¹M`.
    pub lead_eigenvalue: f64,
    /// `π/√Λ₁`
    pub critical_size: f64,
}

/// `R_c = π/√Λ₁(A⁻¹M)`.
pub fn critical_patch_staged(a_diag: &[f64], m: &Matrix) -> Result<CriticalPatch, StagedError> {
    critical_patch_staged_reduced(a_diag, m, None)
}

/// As [`critical_patch_staged`], optionally rounding `A⁻¹M` to `digits`
/// decimals before the eigen-solve.
pub fn critical_patch_staged_reduced(
    a_diag: &[f64],
    m: &Matrix,
    digits: Option<u32>,
) -> Result<CriticalPatch, StagedError> {
    let mut n = StageZone::new(a_diag.to_vec(), m.clone()).scaled_reaction();
    if let Some(d) = digits {
        n = n.rounded(d);
    }
    let lead = max_real_eigenvalue(&n)?;
    if lead <= 0.0 {
        return Err(StagedError::NonpositiveLeadEigenvalue(lead));
    }
    Ok(CriticalPatch {
        lead_eigenvalue: lead,
        critical_size: PI / lead.sqrt(),
    })
}

/// Why a one-sided criterion could not certify eradication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Inconclusive {
    ControlNotDissipative { mu1: f64 },
    DiffusionMismatch,
    PatchTooWide { critical_size: f64 },
    InequalityFails { margin: f64 },
    ControlOrdering { e: f64 },
    BeneficialOrdering { e: f64 },
    SignConditions { e: f64 },
    NotTwoStage,
}

impl fmt::Display for Inconclusive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ControlNotDissipative { mu1 } => {
                write!(f, "control zone not dissipative (top eigenvalue {mu1:.4e})")
            }
            Self::DiffusionMismatch => f.write_str("diffusion matrices of the two zones differ"),
            Self::PatchTooWide { critical_size } => {
                write!(f, "patch not below the critical size {critical_size:.4}")
            }
            Self::InequalityFails { margin } => write!(f, "sufficient inequality fails (margin {margin:.4e})"),
            Self::ControlOrdering { e } => write!(f, "control eigenvalues not 0 > mu1 > mu2 at E = {e:.4e}"),
            Self::BeneficialOrdering { e } => {
                write!(f, "beneficial eigenvalues not Lambda1 >= 0 > Lambda2 at E = {e:.4e}")
            }
            Self::SignConditions { e } => write!(f, "transfer-matrix sign conditions fail at E = {e:.4e}"),
            Self::NotTwoStage => f.write_str("requires exactly two stages with proportional diffusion"),
        }
    }
}

/// Outcome of a sufficient (one-sided) criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SufficientVerdict {
    Eradication { margin: f64 },
    Inconclusive(Inconclusive),
}

impl SufficientVerdict {
    pub fn is_eradication(&self) -> bool {
        matches!(self, Self::Eradication { .. })
    }
}

impl fmt::Display for SufficientVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eradication { margin } => write!(f, "Eradication (margin {margin:.4e})"),
            Self::Inconclusive(why) => write!(f, "Inconclusive: {why}"),
        }
    }
}

/// Quantities of the symmetrization bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedReport {
    /// Top eigenvalue `λ₁` of the symmetrized beneficial matrix.
    pub lambda1: f64,
    /// Number `k` of positive eigenvalues of the symmetrized beneficial matrix.
    pub positive_count: usize,
    /// Top eigenvalue `μ₁` of the symmetrized control matrix.
    pub mu1: f64,
    /// `π/√λ₁` (infinite when `λ₁ ≤ 0`).
    pub critical_size: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: SufficientVerdict,
}

/// `(M·A⁻¹ + A⁻¹·Mᵀ)/2`
pub fn symmetrized(zone: &StageZone) -> Matrix {
    let inv: Vec<f64> = zone.diffusion.iter().map(|a| 1.0 / a).collect();
    let ma = zone.reaction.scale_cols(&inv);
    ma.symmetric_part()
}

/// Which product a symmetrized matrix is the symmetric part of. With equal
/// diffusion in both zones either choice bounds the quadratic form: `M·A⁻¹`
/// comes from the substitution `z = Ay`, `A⁻¹M` from dividing the equation
/// by `A` and keeping `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetrizedForm {
    /// `(M·A⁻¹ + A⁻¹·Mᵀ)/2`, the form [`symmetrized_sufficient_verdict`] uses.
    MAinv,
    /// `(A⁻¹M + Mᵀ·A⁻¹)/2`
    AinvM,
}

/// Top eigenvalue of the symmetrized beneficial matrix in the given form,
/// optionally after rounding the product to `digits` decimals.
pub fn symmetrized_critical_patch(
    a_diag: &[f64],
    m: &Matrix,
    form: SymmetrizedForm,
    digits: Option<u32>,
) -> Result<CriticalPatch, StagedError> {
    let inv: Vec<f64> = a_diag.iter().map(|a| 1.0 / a).collect();
    let mut product = match form {
        SymmetrizedForm::MAinv => m.scale_cols(&inv),
        SymmetrizedForm::AinvM => m.scale_rows(&inv),
    };
    if let Some(d) = digits {
        product = product.rounded(d);
    }
    let s = product.symmetric_part();
    let lead = symmetric_eigen(&s)?.values[0];
    if lead <= 0.0 {
        return Err(StagedError::NonpositiveLeadEigenvalue(lead));
    }
    Ok(CriticalPatch {
        lead_eigenvalue: lead,
        critical_size: PI / lead.sqrt(),
    })
}

/// Sufficient eradication test from the symmetric parts of the zone
/// matrices (periodic geometry). Requires `A_ben = A_nb`: with different
/// diffusion matrices the underlying energy estimate does not hold.
pub fn symmetrized_sufficient_verdict(input: &StagedCriterionInput) -> Result<SymmetrizedReport, StagedError> {
    validate_layout(input.to_layout())?;
    let n = input.stages();
    let ben = symmetric_eigen(&symmetrized(&input.beneficial))?;
    let ctl = symmetric_eigen(&symmetrized(&input.control))?;
    let lambda1 = ben.values[0];
    let k = ben.values.iter().filter(|v| **v > 0.0).count();
    let mu1 = ctl.values[0];
    let critical_size = if lambda1 > 0.0 { PI / lambda1.sqrt() } else { f64::INFINITY };
    let mut report = SymmetrizedReport {
        lambda1,
        positive_count: k,
        mu1,
        critical_size,
        lhs: f64::NAN,
        rhs: f64::NAN,
        verdict: SufficientVerdict::Inconclusive(Inconclusive::DiffusionMismatch),
    };
    if k == 0 {
        // negative definite: the energy decays even without control
        report.verdict = SufficientVerdict::Eradication { margin: -lambda1 };
        return Ok(report);
    }
    if mu1 >= 0.0 {
        report.verdict = SufficientVerdict::Inconclusive(Inconclusive::ControlNotDissipative { mu1 });
        return Ok(report);
    }
    let same_diffusion = input
        .beneficial
        .diffusion
        .iter()
        .zip(&input.control.diffusion)
        .all(|(a, b)| (a - b).abs() <= DIFFUSION_MATCH_TOL * a);
    if !same_diffusion {
        return Ok(report);
    }
    let phase = input.big_r * lambda1.sqrt();
    if phase >= PI {
        report.verdict = SufficientVerdict::Inconclusive(Inconclusive::PatchTooWide { critical_size });
        return Ok(report);
    }
    let root = (-mu1).sqrt();
    // sinh(x)/(1 + cosh(x)) = tanh(x/2)
    report.lhs = root * (0.5 * input.r * root).tanh();
    report.rhs = 2.0 * input.big_r * (n * k) as f64 * lambda1 / (1.0 + phase.cos());
    let margin = report.lhs - report.rhs;
    report.verdict = if margin > input.marginal_tol {
        SufficientVerdict::Eradication { margin }
    } else {
        SufficientVerdict::Inconclusive(Inconclusive::InequalityFails { margin })
    };
    Ok(report)
}

/// Change of basis between the normalized eigenbases `{v_j}` of `N_ben`
/// and `{w_j}` of `N_nb`: `w_j = Σ_k c_jk v_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub c: Matrix,
    /// Point at which the two matrices were evaluated.
    pub e: f64,
    #[serde(skip)]
    pub v: Option<Basis2x2>,
    #[serde(skip)]
    pub w: Option<Basis2x2>,
}

impl TransferMatrix {
    /// `max_j |w_j − Σ_k c_jk v_k|`
    pub fn residual(&self) -> f64 {
        let (Some(v), Some(w)) = (&self.v, &self.w) else {
            return 0.0;
        };
        let vs = [v.v1, v.v2];
        let ws = [w.v1, w.v2];
        (0..2)
            .map(|j| {
                (0..2)
                    .map(|comp| {
                        let rebuilt: f64 = (0..2).map(|k| self.c[(j, k)] * vs[k][comp]).sum();
                        (ws[j][comp] - rebuilt).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `c₁₂c₂₁ ≤ 0` and `c₁₁c₂₂ ≥ 0`.
    pub fn sign_conditions_hold(&self) -> bool {
        let c = &self.c;
        c[(0, 1)] * c[(1, 0)] <= 0.0 && c[(0, 0)] * c[(1, 1)] >= 0.0
    }
}

pub fn transfer_matrix(n_ben: &Matrix, n_nb: &Matrix) -> Result<TransferMatrix, StagedError> {
    transfer_matrix_at(n_ben, n_nb, 0.0)
}

fn transfer_matrix_at(n_ben: &Matrix, n_nb: &Matrix, e: f64) -> Result<TransferMatrix, StagedError> {
    let v = eigen_basis_2x2(n_ben)?;
    let w = eigen_basis_2x2(n_nb)?;
    let vm = v.as_columns();
    let scale = (v.v1[0].hypot(v.v1[1])) * (v.v2[0].hypot(v.v2[1]));
    if vm.determinant().abs() <= 1e-12 * scale {
        return Err(StagedError::SingularBasis);
    }
    let ct = vm.inverse().map_err(|_| StagedError::SingularBasis)?.mul(&w.as_columns());
    Ok(TransferMatrix {
        c: ct.transpose(),
        e,
        v: Some(v),
        w: Some(w),
    })
}

/// Result of the proportional-control hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProportionalCheck {
    ConditionsHold,
    ConditionsFail(String),
}

/// Hypotheses under which the transfer-matrix sign conditions hold for
/// a control zone with births `ω·b_j` and deaths `m̃_j`.
pub fn proportional_control_check(
    a: [f64; 2],
    ben: &BirthDeathParams,
    omega: f64,
    m_tilde: [f64; 2],
) -> ProportionalCheck {
    let fail = |s: &str| ProportionalCheck::ConditionsFail(s.to_string());
    if ben.stages() != 2 || ben.validate().is_err() {
        return fail("two positive stages required");
    }
    let (m1, m2) = (ben.deaths[0], ben.deaths[1]);
    let (b1, b2) = (ben.births[0], ben.births[1]);
    if !(a[0] > 0.0 && a[1] > 0.0) {
        return fail("nonpositive diffusion");
    }
    if m1 * m2 - b1 * b2 >= 0.0 {
        return fail("lead eigenvalue nonpositive");
    }
    if 1.0 / a[0] < 1.0 / a[1] {
        return fail("diffusion ordering");
    }
    if m1 / a[0] < m2 / a[1] {
        return fail("diffusion-weighted death ordering");
    }
    if !(omega > 0.0 && omega < 1.0) {
        return fail("omega outside (0, 1)");
    }
    if m_tilde[0] < m1 || m_tilde[1] < m2 {
        return fail("control deaths below beneficial deaths");
    }
    if m_tilde[0] - m_tilde[1] < m1 - m2 {
        return fail("death difference ordering");
    }
    ProportionalCheck::ConditionsHold
}

/// Control-zone matrix with births `ω·b_j` and deaths `m̃_j`.
pub fn proportional_control_matrix(ben: &BirthDeathParams, omega: f64, m_tilde: [f64; 2]) -> Matrix {
    build_stage_matrix(&BirthDeathParams {
        deaths: m_tilde.to_vec(),
        births: ben.births.iter().map(|b| omega * b).collect(),
    })
}

/// Reads `(m, b)` back from a two-stage birth-and-death matrix.
fn birth_death_of(m: &Matrix) -> Option<BirthDeathParams> {
    if m.order() != 2 {
        return None;
    }
    BirthDeathParams::new(vec![-m[(0, 0)], -m[(1, 1)]], vec![m[(1, 0)], m[(0, 1)]]).ok()
}

/// Quantities of the two-stage transfer-matrix criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageReport {
    /// `a` in `A_nb = a·A_ben`.
    pub diffusion_ratio: f64,
    /// `Λ₁(0)`
    pub lead: f64,
    /// `μ₁(0)`
    pub mu1: f64,
    /// Root of `Λ₁(E) = 0`.
    pub e0: f64,
    /// Sign conditions certified by the proportional-control hypotheses.
    pub certified: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: SufficientVerdict,
}

fn two_stage_matrices(input: &StagedCriterionInput, a: f64, e: f64) -> (Matrix, Matrix) {
    let n_ben = input.beneficial.reaction.shift(e).scale_rows(&inv(&input.beneficial.diffusion));
    let n_nb = input
        .control
        .reaction
        .shift(e)
        .scale_rows(&inv(&input.beneficial.diffusion))
        .scale(1.0 / a);
    (n_ben, n_nb)
}

fn inv(d: &[f64]) -> Vec<f64> {
    d.iter().map(|x| 1.0 / x).collect()
}

/// Real eigenvalues in descending order, if both are real.
fn real_pair(m: &Matrix) -> Option<(f64, f64)> {
    let vals = eigenvalues(m).ok()?;
    let tol = 1e-12 * (1.0 + m.norm());
    if vals.iter().any(|z| z.im.abs() > tol) {
        return None;
    }
    let (x, y) = (vals[0].re, vals[1].re);
    Some(if x >= y { (x, y) } else { (y, x) })
}

/// Smallest `|μ₁(0)|` satisfying the two-stage inequality
/// `a√|μ₁| tanh(√|μ₁| r/2) > √Λ₁ tan(√Λ₁ R/2)`.
pub fn two_stage_mu1_threshold(lead: f64, a: f64, big_r: f64, r: f64) -> Result<f64, StagedError> {
    let phase = lead.sqrt() * big_r / 2.0;
    if !(lead > 0.0) || phase >= PI / 2.0 {
        return Err(StagedError::AssumptionViolated("patch not below the critical size".into()));
    }
    let rhs = lead.sqrt() * phase.tan();
    let lhs = |x: f64| a * x.sqrt() * (x.sqrt() * r / 2.0).tanh() - rhs;
    let mut hi = 1.0;
    while lhs(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(StagedError::AssumptionViolated("no threshold below 1e12".into()));
        }
    }
    Ok(brent(lhs, 0.0, hi, 1e-12)?)
}

/// Two-stage criterion for `A_nb = a·A_ben` (periodic geometry).
pub fn two_stage_verdict(input: &StagedCriterionInput) -> Result<TwoStageReport, StagedError> {
    validate_layout(input.to_layout())?;
    let inconclusive = |why| SufficientVerdict::Inconclusive(why);
    let Some(a) = input.diffusion_ratio().filter(|_| input.stages() == 2) else {
        return Ok(TwoStageReport {
            diffusion_ratio: f64::NAN,
            lead: f64::NAN,
            mu1: f64::NAN,
            e0: f64::NAN,
            certified: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            verdict: inconclusive(Inconclusive::NotTwoStage),
        });
    };
    let at = |e: f64| two_stage_matrices(input, a, e);
    let ben_pair = |e: f64| real_pair(&at(e).0);
    let (lead, second) = ben_pair(0.0)
        .ok_or_else(|| StagedError::AssumptionViolated("beneficial eigenvalues are complex".into()))?;
    if !(lead > 0.0 && second < 0.0) {
        return Err(StagedError::AssumptionViolated(format!(
            "need Lambda1(0) > 0 > Lambda2(0), got {lead}, {second}"
        )));
    }
    let lead_at = |e: f64| ben_pair(e).map_or(f64::NAN, |p| p.0);
    let a_max = input.beneficial.diffusion.iter().cloned().fold(0.0, f64::max);
    let mut upper = lead * a_max;
    while !(lead_at(upper) < 0.0) {
        upper *= 2.0;
        if !upper.is_finite() || upper > 1e15 {
            return Err(StagedError::AssumptionViolated("Lambda1(E) has no zero".into()));
        }
    }
    let e0 = brent(lead_at, 0.0, upper, 1e-14)?;

    let (_, n_nb0) = at(0.0);
    let mu1 = real_pair(&n_nb0).map_or(f64::NAN, |p| p.0);
    let certified = a == 1.0
        && match (birth_death_of(&input.beneficial.reaction), birth_death_of(&input.control.reaction)) {
            (Some(ben), Some(ctl)) => {
                let omega = ctl.births[0] / ben.births[0];
                let same_omega = (ctl.births[1] / ben.births[1] - omega).abs() <= 1e-12 * omega;
                let d = &input.beneficial.diffusion;
                same_omega
                    && proportional_control_check([d[0], d[1]], &ben, omega, [ctl.deaths[0], ctl.deaths[1]])
                        == ProportionalCheck::ConditionsHold
            }
            _ => false,
        };
    let mut report = TwoStageReport {
        diffusion_ratio: a,
        lead,
        mu1,
        e0,
        certified,
        lhs: f64::NAN,
        rhs: f64::NAN,
        verdict: inconclusive(Inconclusive::InequalityFails { margin: f64::NAN }),
    };

    for i in 0..SIGN_CHECK_SAMPLES {
        let e = e0 * i as f64 / (SIGN_CHECK_SAMPLES - 1) as f64;
        let (n_ben, n_nb) = at(e);
        match real_pair(&n_ben) {
            Some((l1, l2)) if l1 >= -1e-12 * lead && l2 < 0.0 => {}
            _ => {
                return Err(StagedError::AssumptionViolated(format!(
                    "need Lambda1(E) >= 0 > Lambda2(E) at E = {e}"
                )))
            }
        }
        match real_pair(&n_nb) {
            Some((m1, m2)) if 0.0 > m1 && m1 > m2 => {}
            _ => {
                report.verdict = inconclusive(Inconclusive::ControlOrdering { e });
                return Ok(report);
            }
        }
        if !certified {
            let ok = transfer_matrix_at(&n_ben, &n_nb, e).map_or(false, |t| t.sign_conditions_hold());
            if !ok {
                report.verdict = inconclusive(Inconclusive::SignConditions { e });
                return Ok(report);
            }
        }
    }

    let phase = lead.sqrt() * input.big_r / 2.0;
    if phase >= PI / 2.0 {
        report.verdict = inconclusive(Inconclusive::PatchTooWide {
            critical_size: PI / lead.sqrt(),
        });
        return Ok(report);
    }
    let root = (-mu1).sqrt();
    report.lhs = a * root * (root * input.r / 2.0).tanh();
    report.rhs = lead.sqrt() * phase.tan();
    let margin = report.lhs - report.rhs;
    report.verdict = if margin > input.marginal_tol {
        SufficientVerdict::Eradication { margin }
    } else {
        inconclusive(Inconclusive::InequalityFails { margin })
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Status;

    fn taiga_m() -> Matrix {
        Matrix::from_rows(&[[-1.0, 2.46], [0.52, -1.0]]).unwrap()
    }

    #[test]
    fn stage_matrix_patterns() {
        let p = BirthDeathParams::new(vec![1.0, 1.0], vec![0.52, 2.46]).unwrap();
        assert_eq!(build_stage_matrix(&p), taiga_m());
        let p = BirthDeathParams::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]).unwrap();
        let m = build_stage_matrix(&p);
        assert_eq!(m.rows(), vec![vec![-1.0, 0.0, 6.0], vec![4.0, -2.0, 0.0], vec![0.0, 5.0, -3.0]]);
        let p = BirthDeathParams::new(vec![2.0], vec![5.0]).unwrap();
        assert_eq!(build_stage_matrix(&p).rows(), vec![vec![3.0]]);
    }

    #[test]
    fn taiga_critical_patch() {
        let a = [1.1, 50.0];
        let exact = critical_patch_staged(&a, &taiga_m()).unwrap();
        assert!((exact.lead_eigenvalue.sqrt() - 0.073702).abs() < 1e-5);
        let printed = critical_patch_staged_reduced(&a, &taiga_m(), Some(2)).unwrap();
        assert!((printed.lead_eigenvalue.sqrt() - 0.067).abs() < 1e-3);
        assert!((printed.critical_size - 46.9).abs() < 0.2);
        let sym = symmetrized_critical_patch(&a, &taiga_m(), SymmetrizedForm::AinvM, Some(2)).unwrap();
        assert!((sym.lead_eigenvalue.sqrt() - 0.863).abs() < 3e-3);
        assert!((sym.critical_size - 3.64).abs() < 0.02);
        let unrounded = symmetrized_critical_patch(&a, &taiga_m(), SymmetrizedForm::AinvM, None).unwrap();
        assert!((unrounded.critical_size - sym.critical_size).abs() < 0.01);
        let verdict_form = symmetrized_critical_patch(&a, &taiga_m(), SymmetrizedForm::MAinv, None).unwrap();
        let zone = StageZone::new(a.to_vec(), taiga_m());
        let direct = symmetric_eigen(&symmetrized(&zone)).unwrap().values[0];
        assert!((verdict_form.lead_eigenvalue - direct).abs() < 1e-14);
    }

    #[test]
    fn critical_patch_reductions() {
        let c = critical_patch_staged(&[2.0], &Matrix::scalar(0.5)).unwrap();
        assert!((c.critical_size - scalar::critical_patch_dirichlet(2.0, 0.5).unwrap()).abs() < 1e-14);
        let c = critical_patch_staged(&[1.0, 1.0], &Matrix::from_diagonal(&[PI * PI, -1.0])).unwrap();
        assert!((c.critical_size - 1.0).abs() < 1e-14);
        assert!(matches!(
            critical_patch_staged(&[1.0], &Matrix::scalar(-1.0)),
            Err(StagedError::NonpositiveLeadEigenvalue(_))
        ));
    }

    #[test]
    fn uniform_control_matches_scalar() {
        let input = UniformControlInput {
            reaction: taiga_m(),
            a: 2.0,
            b: 2.0,
            mu: 5.0,
            big_r: 3.0,
            r: 1.0,
            bc: BoundaryCondition::Periodic,
            repeats: 1,
        };
        let lead = max_real_eigenvalue(&taiga_m()).unwrap();
        let v = uniform_control_verdict(&input).unwrap();
        let s = scalar::periodic_verdict(&ScalarCriterionInput::new(
            2.0,
            lead,
            2.0,
            5.0 - lead,
            3.0,
            1.0,
            BoundaryCondition::Periodic,
        ))
        .unwrap();
        assert_eq!(v, s);
        let low_mu = UniformControlInput {
            mu: lead / 2.0,
            ..input.clone()
        };
        let err = uniform_control_verdict(&low_mu).unwrap_err();
        assert!(err.to_string().contains("mu must exceed Lambda1"));
        let wide = UniformControlInput { big_r: 100.0, ..input };
        assert_eq!(uniform_control_verdict(&wide).unwrap().status, Status::Survival);
    }

    #[test]
    fn uniform_control_rejects_second_growing_mode() {
        let input = UniformControlInput {
            reaction: Matrix::from_diagonal(&[1.0, 0.5]),
            a: 1.0,
            b: 1.0,
            mu: 5.0,
            big_r: 1.0,
            r: 1.0,
            bc: BoundaryCondition::Periodic,
            repeats: 1,
        };
        assert!(matches!(
            uniform_control_verdict(&input),
            Err(StagedError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn transfer_matrix_identity_and_residual() {
        let n = Matrix::from_rows(&[[-2.0, 1.0], [1.0, -1.0]]).unwrap();
        let t = transfer_matrix(&n, &n).unwrap();
        assert!(t.c.sub(&Matrix::identity(2)).max_abs() < 1e-14);
        let m = Matrix::from_rows(&[[-3.0, 0.4], [2.0, -1.5]]).unwrap();
        let t = transfer_matrix(&n, &m).unwrap();
        assert!(t.residual() < 1e-10);
    }

    #[test]
    fn proportional_control_cases() {
        let taiga = BirthDeathParams::new(vec![1.0, 1.0], vec![0.52, 2.46]).unwrap();
        let a = [1.1, 50.0];
        assert_eq!(proportional_control_check(a, &taiga, 0.5, [1.0, 1.0]), ProportionalCheck::ConditionsHold);
        let low = BirthDeathParams::new(vec![2.0, 2.0], vec![0.52, 2.46]).unwrap();
        assert_eq!(
            proportional_control_check(a, &low, 0.5, [2.0, 2.0]),
            ProportionalCheck::ConditionsFail("lead eigenvalue nonpositive".into())
        );
        assert_eq!(
            proportional_control_check([50.0, 1.1], &taiga, 0.5, [1.0, 1.0]),
            ProportionalCheck::ConditionsFail("diffusion ordering".into())
        );
    }

    #[test]
    fn symmetrized_scalar_guard_and_branches() {
        let zone = |a: f64, m: f64| StageZone::new(vec![a], Matrix::scalar(m));
        // different diffusion: never certifies
        let i = StagedCriterionInput::new(zone(1.0, 1.0), zone(0.01, -1.0), 1.0, 1.0, BoundaryCondition::Periodic);
        let rep = symmetrized_sufficient_verdict(&i).unwrap();
        assert_eq!(rep.verdict, SufficientVerdict::Inconclusive(Inconclusive::DiffusionMismatch));
        let i = StagedCriterionInput::new(zone(1.0, 1.0), zone(1.0, 0.5), 1.0, 1.0, BoundaryCondition::Periodic);
        let rep = symmetrized_sufficient_verdict(&i).unwrap();
        assert!(matches!(rep.verdict, SufficientVerdict::Inconclusive(Inconclusive::ControlNotDissipative { .. })));
        assert!(rep.verdict.to_string().contains("control zone not dissipative"));
        // small patch, strong control
        let i = StagedCriterionInput::new(zone(1.0, 0.1), zone(1.0, -50.0), 0.5, 2.0, BoundaryCondition::Periodic);
        let rep = symmetrized_sufficient_verdict(&i).unwrap();
        assert!(rep.verdict.is_eradication(), "{rep:?}");
    }

    #[test]
    fn two_stage_taiga_threshold() {
        let n = Matrix::from_rows(&[[-0.91, 2.24], [0.01, -0.02]]).unwrap();
        let lead = max_real_eigenvalue(&n).unwrap();
        let rhs = lead.sqrt() * (lead.sqrt() * 20.0).tan();
        assert!((rhs - 0.29).abs() < 0.01);
        let t = two_stage_mu1_threshold(lead, 1.0, 40.0, 1.0).unwrap();
        assert!((0.60..=0.66).contains(&t), "{t}");
    }

    #[test]
    fn two_stage_without_control_is_inconclusive() {
        let a = vec![1.1, 50.0];
        let z = StageZone::new(a, taiga_m());
        let i = StagedCriterionInput::new(z.clone(), z, 40.0, 1.0, BoundaryCondition::Periodic);
        let rep = two_stage_verdict(&i).unwrap();
        assert!(matches!(rep.verdict, SufficientVerdict::Inconclusive(Inconclusive::ControlOrdering { .. })));
    }

    #[test]
    fn two_stage_certified_control() {
        let a = vec![1.1, 50.0];
        let ben = BirthDeathParams::new(vec![1.0, 1.0], vec![0.52, 2.46]).unwrap();
        let ctl = proportional_control_matrix(&ben, 0.5, [3.0, 1.0]);
        let i = StagedCriterionInput::new(
            StageZone::new(a.clone(), ben.matrix()),
            StageZone::new(a, ctl),
            20.0,
            1.0,
            BoundaryCondition::Periodic,
        );
        let rep = two_stage_verdict(&i).unwrap();
        assert!(rep.certified);
        assert!(rep.e0 > 0.0);
    }
}
