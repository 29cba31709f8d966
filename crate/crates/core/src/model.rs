//! Domain model: zones, layouts, verdicts and spectral reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, MAX_ORDER};
use crate::staged::build_stage_matrix;

/// Default half-width of the band around zero in which a margin is Marginal.
pub const DEFAULT_MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
            Self::Periodic => "periodic",
        })
    }
}

impl FromStr for BoundaryCondition {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            "periodic" => Ok(Self::Periodic),
            _ => Err(ModelError::UnknownBoundaryCondition(s.to_string())),
        }
    }
}

/// A homogeneous zone of the scalar model. The control zone stores its
/// mortality as negative growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarZone {
    pub diffusion: f64,
    pub growth: f64,
}

impl ScalarZone {
    pub fn new(diffusion: f64, growth: f64) -> Self {
        Self { diffusion, growth }
    }

    /// Control zone with mortality `mu` (stored as growth `-mu`).
    pub fn control(diffusion: f64, mu: f64) -> Self {
        Self::new(diffusion, -mu)
    }
}

/// Death rates `m_j` and birth/maturation rates `b_j` of a cyclic stage chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthDeathParams {
    pub deaths: Vec<f64>,
    pub births: Vec<f64>,
}

impl BirthDeathParams {
    pub fn new(deaths: Vec<f64>, births: Vec<f64>) -> Result<Self, ModelError> {
        let p = Self { deaths, births };
        p.validate()?;
        Ok(p)
    }

    pub fn stages(&self) -> usize {
        self.deaths.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.deaths.len();
        if n == 0 || n > MAX_ORDER {
            return Err(ModelError::TooManyStages(n));
        }
        if self.births.len() != n {
            return Err(ModelError::DimensionMismatch {
                what: "births vs deaths",
                left: n,
                right: self.births.len(),
            });
        }
        if let Some(&v) = self.deaths.iter().chain(&self.births).find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(ModelError::NonpositiveRate(v));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix {
        build_stage_matrix(self)
    }
}

/// A homogeneous zone of the staged model: diagonal diffusion `A` (stored
/// as its diagonal) and reaction matrix `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StageZoneRepr", into = "StageZoneRepr")]
pub struct StageZone {
    pub diffusion: Vec<f64>,
    pub reaction: Matrix,
}

impl StageZone {
    pub fn new(diffusion: Vec<f64>, reaction: Matrix) -> Self {
        Self { diffusion, reaction }
    }

    pub fn from_birth_death(diffusion: Vec<f64>, params: &BirthDeathParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self::new(diffusion, params.matrix()))
    }

    pub fn stages(&self) -> usize {
        self.diffusion.len()
    }

    pub fn diffusion_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&self.diffusion)
    }

    /// `A⁻¹M`
    pub fn scaled_reaction(&self) -> Matrix {
        let inv: Vec<f64> = self.diffusion.iter().map(|a| 1.0 / a).collect();
        self.reaction.scale_rows(&inv)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageZoneRepr {
    #[serde(rename = "A_diag")]
    a_diag: Vec<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    births: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deaths: Option<Vec<f64>>,
}

impl TryFrom<StageZoneRepr> for StageZone {
    type Error = ModelError;

    fn try_from(r: StageZoneRepr) -> Result<Self, ModelError> {
        match (r.m, r.births, r.deaths) {
            (Some(m), None, None) => Ok(Self::new(r.a_diag, m)),
            (None, Some(births), Some(deaths)) => {
                Self::from_birth_death(r.a_diag, &BirthDeathParams::new(deaths, births)?)
            }
            _ => Err(ModelError::AmbiguousReaction),
        }
    }
}

impl From<StageZone> for StageZoneRepr {
    fn from(z: StageZone) -> Self {
        Self {
            a_diag: z.diffusion,
            m: Some(z.reaction),
            births: None,
            deaths: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Scalar,
    Staged,
}

/// The beneficial and control zones; both sides always have the same shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Zones {
    Scalar { beneficial: ScalarZone, control: ScalarZone },
    Staged { beneficial: StageZone, control: StageZone },
}

impl Zones {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Scalar { .. } => ModelKind::Scalar,
            Self::Staged { .. } => ModelKind::Staged,
        }
    }

    /// Number of stages (1 for the scalar model).
    pub fn stages(&self) -> usize {
        match self {
            Self::Scalar { .. } => 1,
            Self::Staged { beneficial, .. } => beneficial.stages(),
        }
    }

    /// Diffusion diagonals and reaction matrices as stage zones, so the
    /// scalar model can share the staged assembly path.
    pub fn as_stage_zones(&self) -> (StageZone, StageZone) {
        match self {
            Self::Scalar { beneficial, control } => (
                StageZone::new(vec![beneficial.diffusion], Matrix::scalar(beneficial.growth)),
                StageZone::new(vec![control.diffusion], Matrix::scalar(control.growth)),
            ),
            Self::Staged { beneficial, control } => (beneficial.clone(), control.clone()),
        }
    }
}

/// Beneficial zone of width `R` followed by a control zone of width `r`.
/// Periodic layouts repeat that cell `K` times on `[0, K(R+r)]`; bounded
/// layouts occupy `[0, R+r]` with the boundary condition at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct PatchLayout {
    pub zones: Zones,
    pub patch_width: f64,
    pub control_width: f64,
    pub repeats: u32,
    pub bc: BoundaryCondition,
}

impl PatchLayout {
    pub fn scalar(
        beneficial: ScalarZone,
        control: ScalarZone,
        patch_width: f64,
        control_width: f64,
        repeats: u32,
        bc: BoundaryCondition,
    ) -> Self {
        Self {
            zones: Zones::Scalar { beneficial, control },
            patch_width,
            control_width,
            repeats,
            bc,
        }
    }

    pub fn staged(
        beneficial: StageZone,
        control: StageZone,
        patch_width: f64,
        control_width: f64,
        repeats: u32,
        bc: BoundaryCondition,
    ) -> Self {
        Self {
            zones: Zones::Staged { beneficial, control },
            patch_width,
            control_width,
            repeats,
            bc,
        }
    }

    pub fn period(&self) -> f64 {
        self.patch_width + self.control_width
    }

    pub fn domain_length(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Periodic => self.repeats as f64 * self.period(),
            _ => self.period(),
        }
    }

    pub fn stages(&self) -> usize {
        self.zones.stages()
    }

    /// Largest absolute reaction entry over both zones.
    pub fn growth_scale(&self) -> f64 {
        let (ben, ctl) = self.zones.as_stage_zones();
        [ben.reaction.max_abs(), ctl.reaction.max_abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutRepr {
    model: ModelKind,
    beneficial: serde_json::Value,
    control: serde_json::Value,
    #[serde(rename = "R")]
    patch_width: f64,
    r: f64,
    #[serde(rename = "K", default = "one")]
    repeats: u32,
    bc: BoundaryCondition,
}

fn one() -> u32 {
    1
}

impl TryFrom<LayoutRepr> for PatchLayout {
    type Error = ModelError;

    fn try_from(r: LayoutRepr) -> Result<Self, ModelError> {
        let parse = |e: serde_json::Error| ModelError::Parse(e.to_string());
        let zones = match r.model {
            ModelKind::Scalar => Zones::Scalar {
                beneficial: serde_json::from_value(r.beneficial).map_err(parse)?,
                control: serde_json::from_value(r.control).map_err(parse)?,
            },
            ModelKind::Staged => Zones::Staged {
                beneficial: serde_json::from_value(r.beneficial).map_err(parse)?,
                control: serde_json::from_value(r.control).map_err(parse)?,
            },
        };
        Ok(Self {
            zones,
            patch_width: r.patch_width,
            control_width: r.r,
            repeats: r.repeats,
            bc: r.bc,
        })
    }
}

impl From<PatchLayout> for LayoutRepr {
    fn from(l: PatchLayout) -> Self {
        let to = |v: Result<serde_json::Value, serde_json::Error>| v.expect("zone serializes");
        let (model, beneficial, control) = match l.zones {
            Zones::Scalar { beneficial, control } => (
                ModelKind::Scalar,
                to(serde_json::to_value(beneficial)),
                to(serde_json::to_value(control)),
            ),
            Zones::Staged { beneficial, control } => (
                ModelKind::Staged,
                to(serde_json::to_value(beneficial)),
                to(serde_json::to_value(control)),
            ),
        };
        Self {
            model,
            beneficial,
            control,
            patch_width: l.patch_width,
            r: l.control_width,
            repeats: l.repeats,
            bc: l.bc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("NonpositiveDiffusion: {zone} zone diffusion {value} must be > 0")]
    NonpositiveDiffusion { zone: &'static str, value: f64 },
    #[error("DimensionMismatch: {what} ({left} vs {right})")]
    DimensionMismatch { what: &'static str, left: usize, right: usize },
    #[error("InvalidRepeatCount: K = {repeats} is not allowed with {bc} boundary conditions")]
    InvalidRepeatCount { repeats: u32, bc: BoundaryCondition },
    #[error("NegativeWidth: control width r = {0} must be >= 0")]
    NegativeWidth(f64),
    #[error("NonpositiveWidth: beneficial width R = {0} must be > 0")]
    NonpositiveWidth(f64),
    #[error("TooManyStages: {0} stages, supported range is 1..=8")]
    TooManyStages(usize),
    #[error("NonFinite: {0} is not finite")]
    NonFinite(&'static str),
    #[error("NonpositiveRate: birth and death rates must be > 0, got {0}")]
    NonpositiveRate(f64),
    #[error("AmbiguousReaction: a staged zone needs either M or both births and deaths")]
    AmbiguousReaction,
    #[error("UnknownBoundaryCondition: {0}")]
    UnknownBoundaryCondition(String),
    #[error("Parse: {0}")]
    Parse(String),
}

impl ModelError {
    /// Stable identifier of the violated invariant.
    pub fn code(&self) -> &'static str {
        match self {
            Self::NonpositiveDiffusion { .. } => "NonpositiveDiffusion",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::InvalidRepeatCount { .. } => "InvalidRepeatCount",
            Self::NegativeWidth(_) => "NegativeWidth",
            Self::NonpositiveWidth(_) => "NonpositiveWidth",
            Self::TooManyStages(_) => "TooManyStages",
            Self::NonFinite(_) => "NonFinite",
            Self::NonpositiveRate(_) => "NonpositiveRate",
            Self::AmbiguousReaction => "AmbiguousReaction",
            Self::UnknownBoundaryCondition(_) => "UnknownBoundaryCondition",
            Self::Parse(_) => "Parse",
        }
    }
}

fn check_finite(v: f64, what: &'static str) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what))
    }
}

fn check_stage_zone(z: &StageZone, zone: &'static str) -> Result<(), ModelError> {
    let n = z.stages();
    if n == 0 || n > MAX_ORDER {
        return Err(ModelError::TooManyStages(n));
    }
    if z.reaction.order() != n {
        return Err(ModelError::DimensionMismatch {
            what: "diffusion vs reaction",
            left: n,
            right: z.reaction.order(),
        });
    }
    for &a in &z.diffusion {
        check_finite(a, "diffusion")?;
        if a <= 0.0 {
            return Err(ModelError::NonpositiveDiffusion { zone, value: a });
        }
    }
    if !z.reaction.is_finite() {
        return Err(ModelError::NonFinite("reaction matrix"));
    }
    Ok(())
}

/// Checks every layout invariant and returns the layout unchanged.
pub fn validate_layout(layout: PatchLayout) -> Result<PatchLayout, ModelError> {
    check_finite(layout.patch_width, "R")?;
    check_finite(layout.control_width, "r")?;
    if layout.patch_width <= 0.0 {
        return Err(ModelError::NonpositiveWidth(layout.patch_width));
    }
    if layout.control_width < 0.0 {
        return Err(ModelError::NegativeWidth(layout.control_width));
    }
    let repeats_ok = match layout.bc {
        BoundaryCondition::Periodic => layout.repeats >= 1,
        _ => layout.repeats == 1,
    };
    if !repeats_ok {
        return Err(ModelError::InvalidRepeatCount {
            repeats: layout.repeats,
            bc: layout.bc,
        });
    }
    match &layout.zones {
        Zones::Scalar { beneficial, control } => {
            for (z, name) in [(beneficial, "beneficial"), (control, "control")] {
                check_finite(z.diffusion, "diffusion")?;
                check_finite(z.growth, "growth")?;
                if z.diffusion <= 0.0 {
                    return Err(ModelError::NonpositiveDiffusion {
                        zone: name,
                        value: z.diffusion,
                    });
                }
            }
        }
        Zones::Staged { beneficial, control } => {
            if beneficial.stages() != control.stages() {
                return Err(ModelError::DimensionMismatch {
                    what: "beneficial vs control stages",
                    left: beneficial.stages(),
                    right: control.stages(),
                });
            }
            check_stage_zone(beneficial, "beneficial")?;
            check_stage_zone(control, "control")?;
        }
    }
    Ok(layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Eradication,
    Survival,
    Marginal,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The criterion clause that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Growth rate is negative everywhere.
    NegativeGrowth,
    /// Beneficial zone alone supports growth under absorbing ends.
    DirichletPatchTooLarge,
    /// Tan/tanh balance between the two critical widths.
    DirichletBalance,
    /// Beneficial zone too small even with reflecting interface.
    DirichletPatchSubcritical,
    NeumannPatchTooLarge,
    NeumannBalance,
    PeriodicPatchTooLarge,
    PeriodicBalance,
    /// Sign of the finite-difference top eigenvalue.
    FiniteDifferenceOracle,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("rule serializes");
        f.write_str(s.as_str().unwrap_or("unknown"))
    }
}

/// Outcome of a criterion. Positive margin means strictly inside the
/// eradication region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub margin: f64,
    pub rule: Rule,
}

impl Verdict {
    /// Marginal iff `|margin| <= tol`.
    pub fn from_margin(margin: f64, rule: Rule, tol: f64) -> Self {
        let status = if margin.abs() <= tol {
            Status::Marginal
        } else if margin > 0.0 {
            Status::Eradication
        } else {
            Status::Survival
        };
        Self { status, margin, rule }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralMethod {
    DispersionRoot,
    FiniteDifference,
    SimulationSlope,
}

impl fmt::Display for SpectralMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What limited the accuracy of a spectral estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Resolution {
    /// Root-finder tolerance on the eigenvalue.
    RootTolerance(f64),
    /// Finest grid used, in cells per unit length.
    Grid { cells_per_unit: u32, levels: u32 },
    /// Time step of the simulation the slope was fitted on.
    TimeStep(f64),
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RootTolerance(t) => write!(f, "root tol {t:.1e}"),
            Self::Grid { cells_per_unit, levels } => {
                write!(f, "{levels} grids up to {cells_per_unit} cells/unit")
            }
            Self::TimeStep(dt) => write!(f, "dt {dt:.3e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub top_eigenvalue: f64,
    pub method: SpectralMethod,
    pub error_estimate: f64,
    pub resolution: Resolution,
}
