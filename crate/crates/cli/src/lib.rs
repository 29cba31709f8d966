//! Library side of the `kiss-control` binary: argument types, presets,
//! scenario loading and the subcommands.

pub mod args;
pub mod commands;
pub mod error;
pub mod presets;
pub mod scenario;

use std::path::PathBuf;

use args::{Cli, Command, PresetAction};
use commands::Unknown;
pub use error::CliError;

/// Text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, code: error::EXIT_OK }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Command::Preset { action } = &cli.command {
        return preset_command(action);
    }
    let scenario = scenario::load(&cli.global)?;
    let out_dir = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::CriticalSize { reduced_digits } => Ok(Outcome::ok(commands::render_critical_size(
            &commands::critical_size(&scenario, *reduced_digits)?,
        ))),
        Command::Verdict { method } => {
            let v = commands::verdict(&scenario, *method)?;
            Ok(Outcome {
                text: commands::render_verdict(&v),
                code: if v.disagrees() { error::EXIT_DISAGREEMENT } else { error::EXIT_OK },
            })
        }
        Command::MinMortality => Ok(Outcome::ok(commands::render_inverse(&commands::inverse(
            &scenario,
            Unknown::Mortality,
        )?))),
        Command::MinZone => Ok(Outcome::ok(commands::render_inverse(&commands::inverse(
            &scenario,
            Unknown::ZoneWidth,
        )?))),
        Command::Spectrum => Ok(Outcome::ok(commands::render_spectrum(&commands::spectrum(&scenario)?))),
        Command::Simulate { dt, horizon, snapshots } => Ok(Outcome::ok(commands::render_simulation(
            &commands::simulate(&scenario, *dt, *horizon, snapshots, &out_dir)?,
        ))),
        Command::Sweep { vary, from, to, steps } => {
            let (param, rows) = commands::sweep(&scenario, vary, *from, *to, *steps)?;
            let csv = commands::render_sweep_csv(param, &rows);
            if let Some(dir) = &cli.global.out {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                let path = dir.join("sweep.csv");
                std::fs::write(&path, &csv).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(Outcome::ok(csv))
        }
        Command::Preset { .. } => unreachable!("handled above"),
    }
}

fn preset_command(action: &PresetAction) -> Result<Outcome, CliError> {
    match action {
        PresetAction::List => {
            let mut s = String::new();
            for p in presets::all() {
                s += &format!("{:<16} [{}] {}\n", p.name, p.units, p.summary);
            }
            Ok(Outcome::ok(s))
        }
        PresetAction::Show { name } => {
            let p = presets::find(name)
                .ok_or_else(|| CliError::Validation(format!("unknown preset '{name}'")))?;
            Ok(Outcome::ok(format!("{}\n", p.layout.to_json())))
        }
    }
}
