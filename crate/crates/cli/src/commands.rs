//! Subcommand implementations. Each returns a typed result; rendering to
//! text is separate so tests and the acceptance harness can use the numbers.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use kiss_control::model::{PatchLayout, SpectralReport, Status, Verdict, Zones};
use kiss_control::oracle::{self, GridSpec};
use kiss_control::scalar::{self, ScalarCriterionInput};
use kiss_control::sim::{self, format_significant, SimulationRun, Trajectory};
use kiss_control::staged::{
    self, CriticalPatch, StagedCriterionInput, SymmetrizedForm, SymmetrizedReport, TwoStageReport, UniformControlInput,
};
use rayon::prelude::*;

use crate::args::Method;
use crate::scenario::Scenario;
use crate::CliError;

/// Significant digits of human-readable numbers.
pub const SUMMARY_DIGITS: usize = 4;
/// Significant digits of CSV numbers.
pub const CSV_DIGITS: usize = 6;

fn fmt4(x: f64) -> String {
    format_significant(x, SUMMARY_DIGITS)
}

fn scalar_input(layout: &PatchLayout, command: &str) -> Result<ScalarCriterionInput, CliError> {
    ScalarCriterionInput::from_layout(layout)
        .map_err(|_| CliError::Validation(format!("{command} needs a scalar scenario")))
}

// ---------------------------------------------------------------- critical-size

#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSize {
    Scalar {
        critical_size: f64,
    },
    Staged {
        lead: CriticalPatch,
        /// Symmetric part of `A⁻¹M`.
        symmetrized: CriticalPatch,
        /// Symmetric part of `M·A⁻¹`, the form the verdict uses.
        symmetrized_verdict_form: CriticalPatch,
        /// Digits the products were rounded to, with the unrounded `R_c`.
        rounding: Option<(u32, CriticalPatch)>,
    },
}

pub fn critical_size(scenario: &Scenario, digits: Option<u32>) -> Result<CriticalSize, CliError> {
    match &scenario.layout.zones {
        Zones::Scalar { beneficial, .. } => Ok(CriticalSize::Scalar {
            critical_size: scalar::critical_patch_dirichlet(beneficial.diffusion, beneficial.growth)?,
        }),
        Zones::Staged { beneficial, .. } => {
            let digits = digits.or_else(|| scenario.preset.as_ref().and_then(|p| p.reduced_digits));
            let a = &beneficial.diffusion;
            let m = &beneficial.reaction;
            let lead = staged::critical_patch_staged_reduced(a, m, digits)?;
            let symmetrized = staged::symmetrized_critical_patch(a, m, SymmetrizedForm::AinvM, digits)?;
            let symmetrized_verdict_form = staged::symmetrized_critical_patch(a, m, SymmetrizedForm::MAinv, digits)?;
            let rounding = match digits {
                Some(d) => Some((d, staged::critical_patch_staged(a, m)?)),
                None => None,
            };
            Ok(CriticalSize::Staged { lead, symmetrized, symmetrized_verdict_form, rounding })
        }
    }
}

pub fn render_critical_size(c: &CriticalSize) -> String {
    match c {
        CriticalSize::Scalar { critical_size } => format!("R_c = {}\n", fmt4(*critical_size)),
        CriticalSize::Staged { lead, symmetrized, symmetrized_verdict_form, rounding } => {
            let mut s = format!(
                "R_c = {}  (sqrt Lambda1 = {})\nR_c^sym = {}  (sqrt lambda1 = {}, symmetric part of A^-1 M)\n",
                fmt4(lead.critical_size),
                fmt4(lead.lead_eigenvalue.sqrt()),
                fmt4(symmetrized.critical_size),
                fmt4(symmetrized.lead_eigenvalue.sqrt()),
            );
            let _ = writeln!(
                s,
                "R_c^sym = {}  (sqrt lambda1 = {}, symmetric part of M A^-1, used by verdict)",
                fmt4(symmetrized_verdict_form.critical_size),
                fmt4(symmetrized_verdict_form.lead_eigenvalue.sqrt()),
            );
            if let Some((d, exact)) = rounding {
                let _ = writeln!(
                    s,
                    "products rounded to {d} decimals; unrounded R_c = {}",
                    fmt4(exact.critical_size)
                );
            }
            s
        }
    }
}

// ---------------------------------------------------------------- verdict

/// Closed-form side of a verdict, dispatched on the scenario shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Scalar(Verdict),
    /// Staged scenario with uniform diffusion and control `M − μI`.
    Uniform { verdict: Verdict, reduced: ScalarCriterionInput },
    /// One-sided criteria; each either certifies eradication or is inconclusive.
    Sufficient {
        symmetrized: Result<SymmetrizedReport, String>,
        two_stage: Option<Result<TwoStageReport, String>>,
    },
}

impl ClosedForm {
    /// `None` when the one-sided criteria are inconclusive.
    pub fn status(&self) -> Option<Status> {
        match self {
            Self::Scalar(v) | Self::Uniform { verdict: v, .. } => Some(v.status),
            Self::Sufficient { symmetrized, two_stage } => {
                let sym = symmetrized.as_ref().is_ok_and(|r| r.verdict.is_eradication());
                let two = matches!(two_stage, Some(Ok(r)) if r.verdict.is_eradication());
                (sym || two).then_some(Status::Eradication)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub report: SpectralReport,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictOutcome {
    pub closed: Option<ClosedForm>,
    pub oracle: Option<OracleVerdict>,
}

impl VerdictOutcome {
    /// Both methods ran, neither is Marginal or inconclusive, and the statuses differ.
    pub fn disagrees(&self) -> bool {
        match (&self.closed, &self.oracle) {
            (Some(c), Some(o)) => match c.status() {
                Some(Status::Marginal) | None => false,
                Some(s) => o.verdict.status != Status::Marginal && s != o.verdict.status,
            },
            _ => false,
        }
    }
}

pub fn closed_form(layout: &PatchLayout) -> Result<ClosedForm, CliError> {
    if let Zones::Scalar { .. } = layout.zones {
        return Ok(ClosedForm::Scalar(scalar::scalar_verdict(&scalar_input(layout, "verdict")?)?));
    }
    let input = StagedCriterionInput::from_layout(layout)?;
    if let Some(uniform) = UniformControlInput::from_staged(&input) {
        if let Ok(reduced) = staged::uniform_control_reduction(&uniform) {
            let verdict = scalar::scalar_verdict(&reduced)?;
            return Ok(ClosedForm::Uniform { verdict, reduced });
        }
    }
    let symmetrized = staged::symmetrized_sufficient_verdict(&input).map_err(|e| e.to_string());
    let two_stage = (input.stages() == 2).then(|| staged::two_stage_verdict(&input).map_err(|e| e.to_string()));
    Ok(ClosedForm::Sufficient { symmetrized, two_stage })
}

pub fn oracle_verdict(layout: &PatchLayout, grid: &GridSpec) -> Result<OracleVerdict, CliError> {
    let report = oracle::top_eigenvalue_fd(layout, grid)?;
    Ok(OracleVerdict { verdict: oracle::verdict_from_report(&report), report })
}

pub fn verdict(scenario: &Scenario, method: Method) -> Result<VerdictOutcome, CliError> {
    let closed = match method {
        Method::Closed | Method::Both => Some(closed_form(&scenario.layout)?),
        Method::Oracle => None,
    };
    let oracle = match method {
        Method::Oracle | Method::Both => Some(oracle_verdict(&scenario.layout, &scenario.grid)?),
        Method::Closed => None,
    };
    Ok(VerdictOutcome { closed, oracle })
}

fn render_verdict_line(label: &str, v: &Verdict) -> String {
    format!("{label}: {}  margin {}  rule {}\n", v.status, fmt4(v.margin), v.rule)
}

pub fn render_verdict(out: &VerdictOutcome) -> String {
    let mut s = String::new();
    match &out.closed {
        Some(ClosedForm::Scalar(v)) => s += &render_verdict_line("closed-form", v),
        Some(ClosedForm::Uniform { verdict, reduced }) => {
            s += &render_verdict_line("closed-form", verdict);
            let _ = writeln!(
                s,
                "  uniform control reduced to growth {} and mortality {}",
                fmt4(reduced.lambda),
                fmt4(reduced.mu)
            );
        }
        Some(ClosedForm::Sufficient { symmetrized, two_stage }) => {
            let _ = writeln!(s, "closed-form: {}", match out.closed.as_ref().and_then(ClosedForm::status) {
                Some(st) => st.to_string(),
                None => "Inconclusive".into(),
            });
            match symmetrized {
                Ok(r) => {
                    let _ = writeln!(
                        s,
                        "  symmetrized: {}  (lhs {}, rhs {}, R_c^sym {})",
                        r.verdict,
                        fmt4(r.lhs),
                        fmt4(r.rhs),
                        fmt4(r.critical_size)
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "  symmetrized: not applicable: {e}");
                }
            }
            match two_stage {
                Some(Ok(r)) => {
                    let _ = writeln!(
                        s,
                        "  two-stage: {}  (lhs {}, rhs {}, |mu1| {}, {})",
                        r.verdict,
                        fmt4(r.lhs),
                        fmt4(r.rhs),
                        fmt4(r.mu1.abs()),
                        if r.certified { "certified" } else { "sampled" }
                    );
                }
                Some(Err(e)) => {
                    let _ = writeln!(s, "  two-stage: not applicable: {e}");
                }
                None => {}
            }
        }
        None => {}
    }
    if let Some(o) = &out.oracle {
        s += &render_verdict_line("oracle", &o.verdict);
        let _ = writeln!(
            s,
            "  top eigenvalue {} +/- {} ({})",
            fmt4(o.report.top_eigenvalue),
            format_significant(o.report.error_estimate, 2),
            o.report.resolution
        );
    }
    if out.closed.is_some() && out.oracle.is_some() {
        s += if out.disagrees() { "agreement: DISAGREE\n" } else { "agreement: agree\n" };
    }
    s
}

// ---------------------------------------------------------------- inverse problems

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Mortality,
    ZoneWidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseOutcome {
    pub unknown: Unknown,
    pub closed: f64,
    /// `None` when no control is needed and the oracle has nothing to locate.
    pub oracle: Option<f64>,
    pub notes: Vec<String>,
}

impl InverseOutcome {
    /// `|closed − oracle| / closed`.
    pub fn relative_difference(&self) -> Option<f64> {
        self.oracle.map(|o| (self.closed - o).abs() / self.closed.abs().max(f64::MIN_POSITIVE))
    }
}

pub fn inverse(scenario: &Scenario, unknown: Unknown) -> Result<InverseOutcome, CliError> {
    let name = match unknown {
        Unknown::Mortality => "min-mortality",
        Unknown::ZoneWidth => "min-zone",
    };
    let input = scalar_input(&scenario.layout, name)?;
    let closed = match unknown {
        Unknown::Mortality => scalar::min_mortality(&input)?,
        Unknown::ZoneWidth => scalar::min_zone_width(&input)?,
    };
    let mut notes = Vec::new();
    let oracle = if closed == 0.0 {
        notes.push("no control needed: the beneficial zone cannot sustain growth on its own".into());
        None
    } else {
        Some(match unknown {
            Unknown::Mortality => scalar::min_mortality_oracle(&input, closed, &scenario.grid)?,
            Unknown::ZoneWidth => scalar::min_zone_width_oracle(&input, closed, &scenario.grid)?,
        })
    };
    if let (Unknown::Mortality, Some(reference)) = (unknown, scenario.reference_mu_star()) {
        notes.push(format!(
            "published value about {} is not reproduced; the balance condition gives {} (ratio {})",
            fmt4(reference),
            fmt4(closed),
            fmt4(reference / closed)
        ));
    }
    Ok(InverseOutcome { unknown, closed, oracle, notes })
}

pub fn render_inverse(out: &InverseOutcome) -> String {
    let sym = match out.unknown {
        Unknown::Mortality => "mu*",
        Unknown::ZoneWidth => "r*",
    };
    let mut s = format!("{sym} closed-form = {}\n", fmt4(out.closed));
    if let (Some(o), Some(d)) = (out.oracle, out.relative_difference()) {
        let _ = writeln!(s, "{sym} oracle = {}", fmt4(o));
        let _ = writeln!(s, "relative difference = {}", format_significant(d, 2));
    }
    for n in &out.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Dispersion-root estimate, for scalar and uniform-control scenarios.
    pub closed: Option<SpectralReport>,
    pub oracle: SpectralReport,
    /// Richardson level values, coarse to fine.
    pub levels: Vec<f64>,
}

pub fn spectrum(scenario: &Scenario) -> Result<Spectrum, CliError> {
    let layout = &scenario.layout;
    let closed = match &layout.zones {
        Zones::Scalar { .. } => Some(scalar::top_eigenvalue_scalar(&scalar_input(layout, "spectrum")?)?),
        Zones::Staged { .. } => {
            let input = StagedCriterionInput::from_layout(layout)?;
            match UniformControlInput::from_staged(&input).map(|u| staged::uniform_control_reduction(&u)) {
                Some(Ok(reduced)) => {
                    let mut report = scalar::top_eigenvalue_scalar(&reduced)?;
                    report.top_eigenvalue += reduced.lambda;
                    Some(report)
                }
                _ => None,
            }
        }
    };
    let levels = oracle::top_eigenvalue_levels(layout, &scenario.grid)?;
    let oracle = oracle::top_eigenvalue_fd(layout, &scenario.grid)?;
    Ok(Spectrum { closed, oracle, levels })
}

pub fn render_spectrum(s: &Spectrum) -> String {
    let line = |r: &SpectralReport| {
        format!(
            "{}: E = {} +/- {} ({})\n",
            r.method,
            fmt4(r.top_eigenvalue),
            format_significant(r.error_estimate, 2),
            r.resolution
        )
    };
    let mut out = String::new();
    if let Some(c) = &s.closed {
        out += &line(c);
    }
    out += &line(&s.oracle);
    let levels: Vec<String> = s.levels.iter().map(|e| format_significant(*e, CSV_DIGITS)).collect();
    let _ = writeln!(out, "  grid levels: {}", levels.join(", "));
    out
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub files: Vec<PathBuf>,
    pub exponent: f64,
}

pub fn simulate(
    scenario: &Scenario,
    dt: Option<f64>,
    horizon: Option<f64>,
    snapshots: &[f64],
    out_dir: &Path,
) -> Result<SimulationOutcome, CliError> {
    let mut run = SimulationRun::new(scenario.layout.clone()).with_grid(scenario.grid, 0);
    if let Some(t) = horizon {
        run = run.with_horizon(t);
    }
    if let Some(dt) = dt {
        run = run.with_dt(dt);
    }
    run = run.with_snapshots(snapshots.to_vec());
    let trajectory = sim::simulate(&run)?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut files = Vec::new();
    let path = out_dir.join("trajectory.csv");
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    sim::write_trajectory_csv(&trajectory, BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    for (k, snap) in trajectory.snapshots.iter().enumerate() {
        let path = out_dir.join(format!("snapshot_{k:03}.csv"));
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        sim::write_snapshot_csv(&trajectory, snap, BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
        files.push(path);
    }

    let exponent = sim::growth_exponent(&trajectory)?;
    Ok(SimulationOutcome { trajectory, files, exponent })
}

pub fn render_simulation(s: &SimulationOutcome) -> String {
    let t = &s.trajectory;
    let mut out = format!(
        "growth exponent = {}  (fit on t >= {}, dt {}, {} damped steps)\n",
        fmt4(s.exponent),
        fmt4(t.horizon / 2.0),
        format_significant(t.dt, 3),
        t.damped_steps
    );
    let _ = writeln!(out, "min relative density = {}", format_significant(t.min_relative_density, 3));
    for f in &s.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    for (k, snap) in t.snapshots.iter().enumerate() {
        let _ = writeln!(out, "snapshot {k:03} at t = {}", format_significant(snap.t, CSV_DIGITS));
    }
    out
}

// ---------------------------------------------------------------- sweep

pub const SWEEP_HEADER: &str = "param,value,margin,top_eigenvalue,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    A,
    Lambda,
    B,
    Mu,
    BigR,
    SmallR,
}

impl SweepParam {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "a" => Self::A,
            "lambda" => Self::Lambda,
            "b" => Self::B,
            "mu" => Self::Mu,
            "R" => Self::BigR,
            "r" => Self::SmallR,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::A => "a",
            Self::Lambda => "lambda",
            Self::B => "b",
            Self::Mu => "mu",
            Self::BigR => "R",
            Self::SmallR => "r",
        }
    }

    fn apply(self, layout: &PatchLayout, v: f64) -> Result<PatchLayout, CliError> {
        let mut l = layout.clone();
        match (self, &mut l.zones) {
            (Self::BigR, _) => l.patch_width = v,
            (Self::SmallR, _) => l.control_width = v,
            (Self::A, Zones::Scalar { beneficial, .. }) => beneficial.diffusion = v,
            (Self::Lambda, Zones::Scalar { beneficial, .. }) => beneficial.growth = v,
            (Self::B, Zones::Scalar { control, .. }) => control.diffusion = v,
            (Self::Mu, Zones::Scalar { control, .. }) => control.growth = -v,
            (_, Zones::Staged { .. }) => {
                return Err(CliError::Validation(format!(
                    "parameter '{}' applies to scalar scenarios only",
                    self.name()
                )))
            }
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub margin: f64,
    pub top_eigenvalue: f64,
    pub status: Status,
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Scalar rows use the closed-form margin and the dispersion root;
/// staged rows use the oracle for both.
fn sweep_point(layout: &PatchLayout, grid: &GridSpec) -> Result<(f64, f64, Status), CliError> {
    match layout.zones {
        Zones::Scalar { .. } => {
            let input = ScalarCriterionInput::from_layout(layout)?;
            let v = scalar::scalar_verdict(&input)?;
            let e = scalar::top_eigenvalue_scalar(&input)?.top_eigenvalue;
            Ok((v.margin, e, v.status))
        }
        Zones::Staged { .. } => {
            let o = oracle_verdict(layout, grid)?;
            Ok((o.verdict.margin, o.report.top_eigenvalue, o.verdict.status))
        }
    }
}

pub fn sweep(scenario: &Scenario, vary: &str, from: f64, to: f64, steps: usize) -> Result<(SweepParam, Vec<SweepRow>), CliError> {
    let param = SweepParam::parse(vary).ok_or_else(|| {
        CliError::Validation(format!("unknown sweep parameter '{vary}' (expected a, lambda, b, mu, R or r)"))
    })?;
    if steps == 0 {
        return Err(CliError::Validation("--steps must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Validation("--from and --to must be finite".into()));
    }
    let rows = sweep_values(from, to, steps)
        .into_par_iter()
        .map(|value| {
            let layout = kiss_control::model::validate_layout(param.apply(&scenario.layout, value)?)?;
            let (margin, top_eigenvalue, status) = sweep_point(&layout, &scenario.grid)?;
            Ok(SweepRow { value, margin, top_eigenvalue, status })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((param, rows))
}

pub fn render_sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            param.name(),
            format_significant(r.value, CSV_DIGITS),
            format_significant(r.margin, CSV_DIGITS),
            format_significant(r.top_eigenvalue, CSV_DIGITS),
            r.status
        );
    }
    s
}
