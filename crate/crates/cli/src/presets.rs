//! Built-in scenarios for the lone-star tick and the two taiga calibrations.

use kiss_control::linalg::Matrix;
use kiss_control::model::{BirthDeathParams, BoundaryCondition, PatchLayout, ScalarZone, StageZone};
use kiss_control::staged::proportional_control_matrix;

/// A named, fully populated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    /// Length and time units the rates are expressed in.
    pub units: &'static str,
    pub layout: PatchLayout,
    /// Decimals `A⁻¹M` is rounded to before the staged critical-size solve.
    pub reduced_digits: Option<u32>,
    /// Published minimal control mortality for this geometry, kept for
    /// comparison only.
    pub reference_mu_star: Option<f64>,
}

pub const NAMES: [&str; 3] = ["lone-star", "taiga-one-stage", "taiga-two-stage"];

pub fn all() -> Vec<Preset> {
    NAMES.iter().map(|n| find(n).expect("listed preset exists")).collect()
}

pub fn find(name: &str) -> Option<Preset> {
    match name {
        "lone-star" => Some(lone_star()),
        "taiga-one-stage" => Some(taiga_one_stage()),
        "taiga-two-stage" => Some(taiga_two_stage()),
        _ => None,
    }
}

fn lone_star() -> Preset {
    Preset {
        name: "lone-star",
        summary: "lone star tick, periodic patches R = 14 with 1 km acaricide strips at mu = 1958",
        units: "km, month",
        layout: PatchLayout::scalar(
            ScalarZone::new(16.67, 0.65),
            ScalarZone::control(16.67, 1958.0),
            14.0,
            1.0,
            1,
            BoundaryCondition::Periodic,
        ),
        reduced_digits: None,
        reference_mu_star: Some(1958.0),
    }
}

fn taiga_one_stage() -> Preset {
    Preset {
        name: "taiga-one-stage",
        summary: "taiga tick, single stage; R, r and mu are illustrative",
        units: "km, year",
        layout: PatchLayout::scalar(
            ScalarZone::new(50.0, 2.0),
            ScalarZone::control(50.0, 10.0),
            14.0,
            1.0,
            1,
            BoundaryCondition::Periodic,
        ),
        reduced_digits: None,
        reference_mu_star: None,
    }
}

/// Beneficial zone: larvae/nymphs and adults with deaths (1, 1) and
/// births (0.52, 2.46). The control zone halves births and raises both
/// deaths to 100/year, which satisfies the proportional-control
/// conditions and clears the two-stage bound at R = 40.
fn taiga_two_stage() -> Preset {
    let params = BirthDeathParams::new(vec![1.0, 1.0], vec![0.52, 2.46]).expect("valid rates");
    let a = vec![1.1, 50.0];
    let m = Matrix::from_rows(&[[-1.0, 2.46], [0.52, -1.0]]).expect("square");
    let control = proportional_control_matrix(&params, 0.5, [100.0, 100.0]);
    Preset {
        name: "taiga-two-stage",
        summary: "taiga tick, two stages A = diag(1.1, 50); control halves births and sets deaths to 100",
        units: "km, year",
        layout: PatchLayout::staged(
            StageZone::new(a.clone(), m),
            StageZone::new(a, control),
            40.0,
            1.0,
            1,
            BoundaryCondition::Periodic,
        ),
        reduced_digits: Some(2),
        reference_mu_star: None,
    }
}
