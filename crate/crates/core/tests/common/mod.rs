#![allow(dead_code)]

use kiss_control::model::{BirthDeathParams, BoundaryCondition, PatchLayout, StageZone};
use kiss_control::scalar::ScalarCriterionInput;
use proptest::prelude::*;

pub fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

pub fn any_bc() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Dirichlet),
        Just(BoundaryCondition::Neumann),
        Just(BoundaryCondition::Periodic),
    ]
}

/// Moderate scalar inputs: grids stay small enough for many oracle calls.
pub fn scalar_input() -> impl Strategy<Value = ScalarCriterionInput> {
    (
        log_uniform(0.2, 5.0),
        log_uniform(0.05, 3.0),
        log_uniform(0.2, 5.0),
        log_uniform(0.05, 20.0),
        log_uniform(0.3, 4.0),
        log_uniform(0.1, 3.0),
        any_bc(),
    )
        .prop_map(|(a, lambda, b, mu, big_r, r, bc)| ScalarCriterionInput::new(a, lambda, b, mu, big_r, r, bc))
}

pub fn scalar_layout() -> impl Strategy<Value = PatchLayout> {
    (scalar_input(), 1u32..4).prop_map(|(i, k)| {
        let mut l = i.to_layout();
        if l.bc == BoundaryCondition::Periodic {
            l.repeats = k;
        }
        l
    })
}

pub fn birth_death(deaths: (f64, f64), births: (f64, f64)) -> impl Strategy<Value = BirthDeathParams> {
    (
        deaths.0..deaths.1,
        deaths.0..deaths.1,
        births.0..births.1,
        births.0..births.1,
    )
        .prop_map(|(m1, m2, b1, b2)| BirthDeathParams::new(vec![m1, m2], vec![b1, b2]).expect("positive rates"))
}

pub fn staged_layout() -> impl Strategy<Value = PatchLayout> {
    (
        birth_death((0.2, 1.0), (0.5, 2.5)),
        birth_death((1.0, 4.0), (0.1, 1.0)),
        prop::collection::vec(0.2..2.0f64, 4),
        0.5..3.0f64,
        0.3..2.0f64,
        any_bc(),
    )
        .prop_map(|(ben, ctl, d, big_r, r, bc)| {
            PatchLayout::staged(
                StageZone::new(vec![d[0], d[1]], ben.matrix()),
                StageZone::new(vec![d[2], d[3]], ctl.matrix()),
                big_r,
                r,
                1,
                bc,
            )
        })
}
