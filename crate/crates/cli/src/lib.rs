//! Scenario files, experiment presets and the multi-run driver behind the
//! `brpl` command.

pub mod presets;
pub mod runner;
pub mod scenario;

pub use presets::{find as find_preset, Preset, PRESETS};
pub use runner::{output_root, plan, run_all, Job, RunOutcome, Sweep};
pub use scenario::{load_scenario, Scenario, ScenarioError};

/// Resolves `arg` as a preset name or a scenario file path, returning the
/// scenario and a run name.
pub fn resolve(arg: &str) -> Result<(Scenario, String), ScenarioError> {
    if let Some(p) = find_preset(arg) {
        return Ok((p.scenario(), p.name.to_string()));
    }
    let path = std::path::Path::new(arg);
    let scenario = load_scenario(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    Ok((scenario, name))
}
