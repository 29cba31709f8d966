use std::fs;

use kiss_control::model::{validate_layout, PatchLayout, ScalarZone, Zones};
use kiss_control::oracle::GridSpec;

use crate::args::{GlobalArgs, Overrides};
use crate::presets::{self, Preset};
use crate::CliError;

/// A validated layout plus the preset it came from, if any.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub layout: PatchLayout,
    pub preset: Option<Preset>,
    pub grid: GridSpec,
}

impl Scenario {
    /// The published minimal mortality, when the geometry and rates other
    /// than `mu` still match the preset.
    pub fn reference_mu_star(&self) -> Option<f64> {
        let preset = self.preset.as_ref()?;
        let reference = preset.reference_mu_star?;
        (without_mu(&self.layout) == without_mu(&preset.layout)).then_some(reference)
    }
}

fn without_mu(layout: &PatchLayout) -> PatchLayout {
    let mut l = layout.clone();
    if let Zones::Scalar { control, .. } = &mut l.zones {
        control.growth = 0.0;
    }
    l
}

pub fn load(global: &GlobalArgs) -> Result<Scenario, CliError> {
    let (layout, preset) = match (&global.scenario, &global.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            (PatchLayout::from_json(&text)?, None)
        }
        (None, Some(name)) => {
            let p = presets::find(name).ok_or_else(|| {
                CliError::Validation(format!(
                    "unknown preset '{name}' (available: {})",
                    presets::NAMES.join(", ")
                ))
            })?;
            (p.layout.clone(), Some(p))
        }
        (None, None) => return Err(CliError::Validation("one of --scenario or --preset is required".into())),
        (Some(_), Some(_)) => return Err(CliError::Validation("--scenario and --preset are exclusive".into())),
    };
    let layout = validate_layout(apply_overrides(layout, &global.overrides)?)?;
    let grid = match global.grid_cells {
        Some(0) => return Err(CliError::Validation("--grid-cells must be positive".into())),
        Some(n) => GridSpec::with_cells_per_unit(n),
        None => GridSpec::default(),
    };
    Ok(Scenario { layout, preset, grid })
}

pub fn apply_overrides(mut layout: PatchLayout, o: &Overrides) -> Result<PatchLayout, CliError> {
    if let Some(v) = o.big_r {
        layout.patch_width = v;
    }
    if let Some(v) = o.r {
        layout.control_width = v;
    }
    if let Some(v) = o.repeats {
        layout.repeats = v;
    }
    if let Some(v) = o.bc {
        layout.bc = v;
    }
    let scalar_fields = [o.a, o.lambda, o.b, o.mu];
    match &mut layout.zones {
        Zones::Scalar { beneficial, control } => {
            set_scalar(beneficial, control, o);
        }
        Zones::Staged { .. } if scalar_fields.iter().any(Option::is_some) => {
            return Err(CliError::Validation(
                "--a, --lambda, --b and --mu apply to scalar scenarios only".into(),
            ));
        }
        Zones::Staged { .. } => {}
    }
    Ok(layout)
}

fn set_scalar(beneficial: &mut ScalarZone, control: &mut ScalarZone, o: &Overrides) {
    if let Some(v) = o.a {
        beneficial.diffusion = v;
    }
    if let Some(v) = o.lambda {
        beneficial.growth = v;
    }
    if let Some(v) = o.b {
        control.diffusion = v;
    }
    if let Some(v) = o.mu {
        control.growth = -v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global(preset: &str) -> GlobalArgs {
        GlobalArgs {
            preset: Some(preset.into()),
            ..GlobalArgs::default()
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let mut g = global("lone-star");
        g.overrides.mu = Some(10.0);
        g.overrides.big_r = Some(12.0);
        let s = load(&g).unwrap();
        assert_eq!(s.layout.patch_width, 12.0);
        match s.layout.zones {
            Zones::Scalar { control, .. } => assert_eq!(control.growth, -10.0),
            Zones::Staged { .. } => panic!("scalar preset"),
        }
        assert_eq!(s.reference_mu_star(), None);
    }

    #[test]
    fn reference_survives_mu_override_only() {
        let mut g = global("lone-star");
        g.overrides.mu = Some(10.0);
        assert_eq!(load(&g).unwrap().reference_mu_star(), Some(1958.0));
    }

    #[test]
    fn scalar_overrides_rejected_on_staged() {
        let mut g = global("taiga-two-stage");
        g.overrides.mu = Some(1.0);
        assert_eq!(load(&g).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_source_is_a_validation_error() {
        assert_eq!(load(&GlobalArgs::default()).unwrap_err().exit_code(), 2);
        assert_eq!(load(&global("unknown")).unwrap_err().exit_code(), 2);
    }
}
