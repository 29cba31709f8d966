//! Closed-form verdicts, dispersion roots and inverse design for the scalar
//! two-zone model.
//!
//! Layouts: a beneficial zone `[0, R]` (diffusion `a`, growth `λ`) next to
//! a control zone of width `r` (diffusion `b`, mortality `μ`). Bounded
//! layouts put the boundary condition at `0` and `R + r`; periodic ones
//! repeat the cell, and only the even mode about the beneficial centre
//! matters for the top eigenvalue, so `R/2` and `r/2` enter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{brent, sign_change_brackets, DEFAULT_SCAN_SAMPLES};
use crate::model::{
    BoundaryCondition, ModelError, PatchLayout, Resolution, Rule, ScalarZone, SpectralMethod, SpectralReport,
    Verdict, Zones, DEFAULT_MARGINAL_TOL,
};
use crate::oracle::{self, GridSpec, OracleError};

/// Relative tolerance of the inverse solvers.
pub const INVERSE_REL_TOL: f64 = 1e-10;
/// Upper cap on the doubled bracket of the inverse solvers.
pub const INVERSE_BRACKET_CAP: f64 = 1e12;
/// Tolerance of the dispersion-root refinement, relative to `max(1, |E|)`.
pub const DISPERSION_ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalarError {
    #[error("invalid input: {field} = {value}")]
    InvalidInput { field: &'static str, value: f64 },
    #[error("NonpositiveGrowth: critical patch size undefined for growth {0} <= 0")]
    NonpositiveGrowth(f64),
    #[error("Uncontrollable: {0}")]
    Uncontrollable(&'static str),
    #[error("InsufficientMortality: sup of the control term {sup:.6} does not exceed {required:.6}")]
    InsufficientMortality { sup: f64, required: f64 },
    #[error("layout is not a scalar model")]
    NotScalar,
    #[error(transparent)]
    Layout(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Parameters of the scalar criteria. `mu` is the (nonnegative) control
/// mortality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCriterionInput {
    pub a: f64,
    pub lambda: f64,
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub bc: BoundaryCondition,
    #[serde(rename = "K")]
    pub repeats: u32,
    pub marginal_tol: f64,
}

impl ScalarCriterionInput {
    pub fn new(a: f64, lambda: f64, b: f64, mu: f64, big_r: f64, r: f64, bc: BoundaryCondition) -> Self {
        Self {
            a,
            lambda,
            b,
            mu,
            big_r,
            r,
            bc,
            repeats: 1,
            marginal_tol: DEFAULT_MARGINAL_TOL,
        }
    }

    pub fn with_repeats(mut self, repeats: u32) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn from_layout(layout: &PatchLayout) -> Result<Self, ScalarError> {
        let Zones::Scalar { beneficial, control } = &layout.zones else {
            return Err(ScalarError::NotScalar);
        };
        let input = Self::new(
            beneficial.diffusion,
            beneficial.growth,
            control.diffusion,
            -control.growth,
            layout.patch_width,
            layout.control_width,
            layout.bc,
        )
        .with_repeats(layout.repeats);
        input.validate()?;
        Ok(input)
    }

    pub fn to_layout(&self) -> PatchLayout {
        PatchLayout::scalar(
            ScalarZone::new(self.a, self.lambda),
            ScalarZone::control(self.b, self.mu),
            self.big_r,
            self.r,
            self.repeats,
            self.bc,
        )
    }

    pub fn validate(&self) -> Result<(), ScalarError> {
        let checks = [
            ("a", self.a, self.a > 0.0),
            ("b", self.b, self.b > 0.0),
            ("R", self.big_r, self.big_r > 0.0),
            ("mu", self.mu, self.mu >= 0.0),
            ("r", self.r, self.r >= 0.0),
            ("lambda", self.lambda, true),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(ScalarError::InvalidInput { field, value });
            }
        }
        crate::model::validate_layout(self.to_layout())?;
        Ok(())
    }

    /// Half-widths entering the dispersion relation.
    fn effective_widths(&self) -> (f64, f64) {
        match self.bc {
            BoundaryCondition::Periodic => (0.5 * self.big_r, 0.5 * self.r),
            _ => (self.big_r, self.r),
        }
    }
}

/// `π·√(a/λ)`
pub fn critical_patch_dirichlet(a: f64, lambda: f64) -> Result<f64, ScalarError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ScalarError::InvalidInput { field: "a", value: a });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ScalarError::NonpositiveGrowth(lambda));
    }
    Ok(PI * (a / lambda).sqrt())
}

/// `tanh(x)/x`, continuous at 0.
fn tanh_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.tanh() / x
    }
}

/// Control-zone term `√(μb)·tanh(w√(μ/b))`, increasing in `μ` and `w`.
pub fn control_term(b: f64, mu: f64, width: f64) -> f64 {
    (mu * b).sqrt() * (width * (mu / b).sqrt()).tanh()
}

/// Beneficial-zone term `√(λa)·tan(w√(λ/a))`, finite below the first pole.
pub fn beneficial_term(a: f64, lambda: f64, width: f64) -> f64 {
    (lambda * a).sqrt() * (width * (lambda / a).sqrt()).tan()
}

/// Survival threshold on `λ/a` beyond which no control helps.
pub fn survival_threshold(bc: BoundaryCondition, big_r: f64) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet | BoundaryCondition::Periodic => PI * PI / (big_r * big_r),
        BoundaryCondition::Neumann => PI * PI / (4.0 * big_r * big_r),
    }
}

fn margin_and_rule(input: &ScalarCriterionInput) -> (f64, Rule) {
    let &ScalarCriterionInput { a, lambda, b, mu, big_r, r, bc, .. } = input;
    if lambda < 0.0 {
        return (-lambda, Rule::NegativeGrowth);
    }
    let s = lambda / a;
    let threshold = survival_threshold(bc, big_r);
    match bc {
        BoundaryCondition::Dirichlet => {
            let quarter = PI * PI / (4.0 * big_r * big_r);
            if s >= threshold {
                (threshold - s, Rule::DirichletPatchTooLarge)
            } else if s <= quarter {
                (quarter - s, Rule::DirichletPatchSubcritical)
            } else {
                // −tanh(r√(μ/b))/√(bμ), equal to −r/b at μ = 0
                let control = -(r / b) * tanh_ratio(r * (mu / b).sqrt());
                let ben = (big_r * s.sqrt()).tan() / (a * lambda).sqrt();
                (control - ben, Rule::DirichletBalance)
            }
        }
        BoundaryCondition::Neumann => {
            if s >= threshold {
                (threshold - s, Rule::NeumannPatchTooLarge)
            } else {
                (control_term(b, mu, r) - beneficial_term(a, lambda, big_r), Rule::NeumannBalance)
            }
        }
        BoundaryCondition::Periodic => {
            if s >= threshold {
                (threshold - s, Rule::PeriodicPatchTooLarge)
            } else {
                (
                    control_term(b, mu, 0.5 * r) - beneficial_term(a, lambda, 0.5 * big_r),
                    Rule::PeriodicBalance,
                )
            }
        }
    }
}

fn verdict_unchecked(input: &ScalarCriterionInput) -> Verdict {
    let (margin, rule) = margin_and_rule(input);
    Verdict::from_margin(margin, rule, input.marginal_tol)
}

fn expect_bc(input: &ScalarCriterionInput, bc: BoundaryCondition) -> Result<(), ScalarError> {
    input.validate()?;
    if input.bc != bc {
        return Err(ScalarError::InvalidInput {
            field: "bc",
            value: f64::NAN,
        });
    }
    Ok(())
}

pub fn dirichlet_verdict(input: &ScalarCriterionInput) -> Result<Verdict, ScalarError> {
    expect_bc(input, BoundaryCondition::Dirichlet)?;
    Ok(verdict_unchecked(input))
}

pub fn neumann_verdict(input: &ScalarCriterionInput) -> Result<Verdict, ScalarError> {
    expect_bc(input, BoundaryCondition::Neumann)?;
    Ok(verdict_unchecked(input))
}

/// Independent of the repeat count.
pub fn periodic_verdict(input: &ScalarCriterionInput) -> Result<Verdict, ScalarError> {
    expect_bc(input, BoundaryCondition::Periodic)?;
    Ok(verdict_unchecked(input))
}

/// Dispatches on the boundary condition.
pub fn scalar_verdict(input: &ScalarCriterionInput) -> Result<Verdict, ScalarError> {
    input.validate()?;
    Ok(verdict_unchecked(input))
}

/// Pole-free dispersion residual; its roots in `(−μ, λ)` are eigenvalues.
fn dispersion_residual(input: &ScalarCriterionInput, e: f64) -> f64 {
    let &ScalarCriterionInput { a, lambda, b, mu, bc, .. } = input;
    let (w_ben, w_ctl) = input.effective_widths();
    let k = ((lambda - e) / a).max(0.0).sqrt();
    let kappa = ((mu + e) / b).max(0.0).sqrt();
    let t = (kappa * w_ctl).tanh();
    let kw = k * w_ben;
    match bc {
        BoundaryCondition::Dirichlet => {
            // sin(kR)/k without the removable zero at k = 0
            let sinc = if kw.abs() < 1e-8 { w_ben } else { kw.sin() / k };
            a * kw.cos() * t + b * kappa * sinc
        }
        BoundaryCondition::Neumann | BoundaryCondition::Periodic => a * k * kw.sin() - b * kappa * kw.cos() * t,
    }
}

/// Largest eigenvalue of the scalar operator: the largest root of the
/// dispersion relation in `(−μ, λ)`, or the finite-difference oracle on
/// the default grid when there is none.
pub fn top_eigenvalue_scalar(input: &ScalarCriterionInput) -> Result<SpectralReport, ScalarError> {
    top_eigenvalue_scalar_with(input, &GridSpec::default())
}

pub fn top_eigenvalue_scalar_with(input: &ScalarCriterionInput, grid: &GridSpec) -> Result<SpectralReport, ScalarError> {
    input.validate()?;
    let root_report = |e: f64| SpectralReport {
        top_eigenvalue: e,
        method: SpectralMethod::DispersionRoot,
        error_estimate: DISPERSION_ROOT_TOL * e.abs().max(1.0),
        resolution: Resolution::RootTolerance(DISPERSION_ROOT_TOL),
    };
    if input.r == 0.0 {
        let e = match input.bc {
            BoundaryCondition::Dirichlet => input.lambda - input.a * (PI / input.big_r).powi(2),
            _ => input.lambda,
        };
        return Ok(root_report(e));
    }
    let eps = 1e-9 * input.lambda.abs().max(input.mu).max(1.0);
    let lo = -input.mu + eps;
    let hi = input.lambda - eps;
    if lo < hi {
        if let Some(e) = largest_dispersion_root(input, lo, hi) {
            return Ok(root_report(e));
        }
    }
    Ok(oracle::top_eigenvalue_fd(&input.to_layout(), grid)?)
}

fn largest_dispersion_root(input: &ScalarCriterionInput, lo: f64, hi: f64) -> Option<f64> {
    let (w_ben, _) = input.effective_widths();
    let f = |e: f64| dispersion_residual(input, e);
    // split where the beneficial phase k·w crosses multiples of π/2
    let phase = |e: f64| ((input.lambda - e) / input.a).max(0.0).sqrt() * w_ben;
    let energy = |p: f64| input.lambda - input.a * (p / w_ben).powi(2);
    let mut top = hi;
    let mut j = (phase(hi) / (0.5 * PI)).floor() as i64 + 1;
    while top > lo {
        let bottom = energy(0.5 * PI * j as f64).max(lo);
        if bottom < top {
            if let Ok(brackets) = sign_change_brackets(f, bottom, top, DEFAULT_SCAN_SAMPLES) {
                if let Some(&(x0, x1)) = brackets.last() {
                    let tol = DISPERSION_ROOT_TOL;
                    return brent(f, x0, x1, tol).ok();
                }
            }
        }
        top = bottom;
        j += 1;
    }
    None
}

/// Smallest `μ ≥ 0` at which the closed-form verdict is Eradication.
pub fn min_mortality(input: &ScalarCriterionInput) -> Result<f64, ScalarError> {
    input.validate()?;
    let s = input.lambda / input.a;
    if s >= survival_threshold(input.bc, input.big_r) {
        return Err(ScalarError::Uncontrollable("beneficial zone supports growth for any control"));
    }
    let margin = |mu: f64| margin_and_rule(&input.with_mu(mu)).0;
    if margin(0.0) > input.marginal_tol || input.lambda <= 0.0 {
        return Ok(0.0);
    }
    if input.r == 0.0 {
        return Err(ScalarError::Uncontrollable("no control zone"));
    }
    let hi = bracket_upward(margin)?;
    solve_crossing(margin, 0.5 * hi, hi)
}

/// Smallest `r ≥ 0` at which the closed-form verdict is Eradication.
pub fn min_zone_width(input: &ScalarCriterionInput) -> Result<f64, ScalarError> {
    input.validate()?;
    let s = input.lambda / input.a;
    if s >= survival_threshold(input.bc, input.big_r) {
        return Err(ScalarError::Uncontrollable("beneficial zone supports growth for any control"));
    }
    let margin = |r: f64| margin_and_rule(&input.with_r(r)).0;
    if margin(0.0) > input.marginal_tol || input.lambda <= 0.0 {
        return Ok(0.0);
    }
    if input.bc == BoundaryCondition::Dirichlet {
        // the control term only decreases with r under absorbing ends
        return Err(ScalarError::Uncontrollable("a wider control zone cannot help under absorbing ends"));
    }
    let (w_ben, _) = input.effective_widths();
    let required = beneficial_term(input.a, input.lambda, w_ben);
    let sup = (input.mu * input.b).sqrt();
    if sup <= required {
        return Err(ScalarError::InsufficientMortality { sup, required });
    }
    let hi = bracket_upward(margin)?;
    solve_crossing(margin, 0.5 * hi, hi)
}

/// Doubles from 1 until `margin` turns positive.
fn bracket_upward(margin: impl Fn(f64) -> f64) -> Result<f64, ScalarError> {
    let mut hi = 1.0;
    while margin(hi) <= 0.0 {
        hi *= 2.0;
        if hi > INVERSE_BRACKET_CAP {
            return Err(ScalarError::Uncontrollable("no crossing below the bracket cap"));
        }
    }
    Ok(hi)
}

/// Crossing of an increasing `margin` in `[0, hi]`, refined to
/// `INVERSE_REL_TOL` and returned on the eradication side.
fn solve_crossing(margin: impl Fn(f64) -> f64, lo_guess: f64, hi: f64) -> Result<f64, ScalarError> {
    let lo = if margin(lo_guess) <= 0.0 { lo_guess } else { 0.0 };
    let x = brent(&margin, lo, hi, INVERSE_REL_TOL).map_err(|_| ScalarError::Uncontrollable("no sign change"))?;
    Ok(x)
}

/// Where the oracle's top eigenvalue crosses zero as `param` varies over
/// `[lo, hi]` (`top(lo)` and `top(hi)` must differ in sign). Bisects to
/// `rel_tol` relative width.
pub fn oracle_crossing(
    layout_at: impl Fn(f64) -> PatchLayout,
    lo: f64,
    hi: f64,
    grid: &GridSpec,
    rel_tol: f64,
) -> Result<f64, ScalarError> {
    let top = |p: f64| -> Result<f64, ScalarError> { Ok(oracle::top_eigenvalue_fd(&layout_at(p), grid)?.top_eigenvalue) };
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = top(lo)?;
    let f_hi = top(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(ScalarError::Uncontrollable("oracle eigenvalue does not change sign on the bracket"));
    }
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if top(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimal mortality located by the oracle, bracketed around `guess`.
pub fn min_mortality_oracle(input: &ScalarCriterionInput, guess: f64, grid: &GridSpec) -> Result<f64, ScalarError> {
    input.validate()?;
    let at = |mu: f64| input.with_mu(mu).to_layout();
    let (lo, hi) = expand_bracket(|mu| Ok(oracle::top_eigenvalue_fd(&at(mu), grid)?.top_eigenvalue), guess)?;
    oracle_crossing(at, lo, hi, grid, 1e-6)
}

/// Minimal control width located by the oracle, bracketed around `guess`.
pub fn min_zone_width_oracle(input: &ScalarCriterionInput, guess: f64, grid: &GridSpec) -> Result<f64, ScalarError> {
    input.validate()?;
    let at = |r: f64| input.with_r(r).to_layout();
    let (lo, hi) = expand_bracket(|r| Ok(oracle::top_eigenvalue_fd(&at(r), grid)?.top_eigenvalue), guess)?;
    oracle_crossing(at, lo, hi, grid, 1e-6)
}

/// `[lo, hi]` around `guess > 0` with `top(lo) > 0 > top(hi)`.
fn expand_bracket(top: impl Fn(f64) -> Result<f64, ScalarError>, guess: f64) -> Result<(f64, f64), ScalarError> {
    let mut lo = 0.8 * guess;
    let mut hi = 1.25 * guess;
    for _ in 0..60 {
        let lo_ok = top(lo)? > 0.0;
        let hi_ok = top(hi)? < 0.0;
        if lo_ok && hi_ok {
            return Ok((lo, hi));
        }
        if !lo_ok {
            lo *= 0.5;
        }
        if !hi_ok {
            hi *= 2.0;
        }
    }
    Err(ScalarError::Uncontrollable("oracle eigenvalue does not change sign"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Status;

    fn input(a: f64, lambda: f64, b: f64, mu: f64, big_r: f64, r: f64, bc: BoundaryCondition) -> ScalarCriterionInput {
        ScalarCriterionInput::new(a, lambda, b, mu, big_r, r, bc)
    }

    #[test]
    fn critical_patch_values() {
        assert!((critical_patch_dirichlet(16.67, 0.65).unwrap() - 15.91).abs() < 0.01);
        assert!((critical_patch_dirichlet(50.0, 2.0).unwrap() - 15.708).abs() < 1e-3);
        assert!((critical_patch_dirichlet(1.0, PI * PI).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(critical_patch_dirichlet(1.0, 0.0), Err(ScalarError::NonpositiveGrowth(0.0)));
    }

    #[test]
    fn dirichlet_clauses() {
        let v = dirichlet_verdict(&input(1.0, 10.0, 1.0, 5.0, PI, 1.0, BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!((v.status, v.rule), (Status::Survival, Rule::DirichletPatchTooLarge));
        let v = dirichlet_verdict(&input(16.67, 0.65, 16.67, 3.0, 7.0, 1.0, BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!((v.status, v.rule), (Status::Eradication, Rule::DirichletPatchSubcritical));
        assert!((v.margin - (PI * PI / 196.0 - 0.65 / 16.67)).abs() < 1e-15);
    }

    #[test]
    fn neumann_example() {
        let i = input(1.0, 0.2, 1.0, 2.0, 1.0, 1.0, BoundaryCondition::Neumann);
        let v = neumann_verdict(&i).unwrap();
        let lhs = 2f64.sqrt() * 2f64.sqrt().tanh();
        let rhs = 0.2f64.sqrt() * 0.2f64.sqrt().tan();
        assert!((lhs - 1.2564).abs() < 1e-4 && (rhs - 0.2145).abs() < 1e-4);
        assert_eq!(v.status, Status::Eradication);
        assert!((v.margin - (lhs - rhs)).abs() < 1e-14);
        let v = neumann_verdict(&i.with_mu(0.0)).unwrap();
        assert_eq!(v.status, Status::Survival);
    }

    #[test]
    fn periodic_lone_star() {
        let i = input(16.67, 0.65, 16.67, 10.0, 14.0, 1.0, BoundaryCondition::Periodic);
        let rhs = beneficial_term(16.67, 0.65, 7.0);
        assert!((rhs - 17.2512).abs() < 1e-4);
        let lhs = control_term(16.67, 10.0, 0.5);
        assert!((lhs - 4.7642).abs() < 1e-4);
        let v = periodic_verdict(&i).unwrap();
        assert_eq!(v.status, Status::Survival);
        assert_eq!(periodic_verdict(&i.with_repeats(3)).unwrap(), v);
    }

    #[test]
    fn wrong_boundary_rejected() {
        let i = input(1.0, 0.2, 1.0, 2.0, 1.0, 1.0, BoundaryCondition::Neumann);
        assert!(periodic_verdict(&i).is_err());
    }

    #[test]
    fn negative_growth_short_circuits() {
        let v = scalar_verdict(&input(1.0, -0.5, 1.0, 0.0, 100.0, 0.0, BoundaryCondition::Periodic)).unwrap();
        assert_eq!((v.status, v.margin, v.rule), (Status::Eradication, 0.5, Rule::NegativeGrowth));
    }

    #[test]
    fn kiss_ground_modes() {
        let r = top_eigenvalue_scalar(&input(1.0, 1.0, 1.0, 1.0, PI, 0.0, BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!(r.top_eigenvalue, 0.0);
        let r = top_eigenvalue_scalar(&input(1.0, 5.0, 1.0, 1.0, PI, 0.0, BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!(r.top_eigenvalue, 4.0);
    }

    #[test]
    fn dispersion_root_satisfies_flux_matching() {
        // Dirichlet: a k cot(kR) = −b κ coth(κ r) at the root
        let i = input(1.0, 0.5, 1.0, 5.0, 3.5, 2.0, BoundaryCondition::Dirichlet);
        let e = top_eigenvalue_scalar(&i).unwrap();
        assert_eq!(e.method, SpectralMethod::DispersionRoot);
        let k = ((0.5 - e.top_eigenvalue) / 1.0).sqrt();
        let kappa = (5.0 + e.top_eigenvalue).sqrt();
        let lhs = k / (k * 3.5).tan();
        let rhs = -kappa / (kappa * 2.0).tanh();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn min_mortality_lone_star() {
        let i = input(16.67, 0.65, 16.67, 0.0, 14.0, 1.0, BoundaryCondition::Periodic);
        let mu = min_mortality(&i).unwrap();
        assert!((mu - 41.357).abs() < 1e-2, "{mu}");
        assert!((control_term(16.67, mu, 0.5) - beneficial_term(16.67, 0.65, 7.0)).abs() < 1e-8);
        assert_eq!(scalar_verdict(&i.with_mu(mu * (1.0 + 1e-6))).unwrap().status, Status::Eradication);
        assert_ne!(scalar_verdict(&i.with_mu(mu * (1.0 - 1e-6))).unwrap().status, Status::Eradication);
    }

    #[test]
    fn min_mortality_edge_cases() {
        let big = input(16.67, 0.65, 16.67, 0.0, 20.0, 1.0, BoundaryCondition::Periodic);
        assert!(matches!(min_mortality(&big), Err(ScalarError::Uncontrollable(_))));
        let small = input(16.67, 0.65, 16.67, 0.0, 7.0, 1.0, BoundaryCondition::Dirichlet);
        assert_eq!(min_mortality(&small).unwrap(), 0.0);
    }

    #[test]
    fn min_zone_width_periodic_example() {
        let i = input(1.0, 0.2, 1.0, 2.0, 1.0, 0.0, BoundaryCondition::Periodic);
        let r = min_zone_width(&i).unwrap();
        // closed form: tanh((r/2)√2) = RHS/√2
        let rhs = beneficial_term(1.0, 0.2, 0.5);
        assert!((rhs - 0.10170).abs() < 1e-5);
        let exact = 2.0 * (rhs / 2f64.sqrt()).atanh() / 2f64.sqrt();
        assert!((r - exact).abs() < 1e-9 * exact);
        assert!((r - 0.1019).abs() < 1e-4);
        assert!(matches!(
            min_zone_width(&i.with_mu(0.0)),
            Err(ScalarError::InsufficientMortality { .. })
        ));
        let sub = input(16.67, 0.65, 16.67, 1.0, 7.0, 0.0, BoundaryCondition::Dirichlet);
        assert_eq!(min_zone_width(&sub).unwrap(), 0.0);
    }
}
