//! Batch front end for `semiclassic-core`.
//!
//! A run is a JSON document `{"command": ..., "payload": {...}, "output": {...}}`.
//! [`parse_config`] validates it, [`run`] dispatches it and [`emit_report`]
//! writes the report as JSON (17 significant digits, fixed key order) or CSV.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{parse_config, Command, Format, OutputSpec, Payload, RunConfig};
pub use error::CliError;
pub use report::{emit_report, format_float, Diagnostic, Level, Report, Table, SCHEMA_VERSION};
pub use run::run;

/// Everything `main` does after argument parsing; returns the exit code.
pub fn execute(command: Command, config_path: &std::path::Path, out: Option<&str>, format: Option<Format>) -> i32 {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", config_path.display());
            return 6;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if cfg.command != command {
        let e = CliError::Schema {
            field: "command".into(),
            message: format!("config is for `{}`, invoked as `{}`", cfg.command.name(), command.name()),
        };
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let spec = cfg.output.clone().unwrap_or_default();
    let path = out.map(str::to_owned).unwrap_or(spec.path);
    let format = format.unwrap_or(spec.format);
    let report = run(&cfg);
    for d in &report.diagnostics {
        if d.level == Level::Error {
            eprintln!("error: {}: {}", d.kind, d.message);
        }
    }
    match emit_report(&report, format, &path) {
        Ok(()) => report.exit_code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
