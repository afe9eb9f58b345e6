use clap::Parser;
use semiclassic::{execute, Command, Format};
use std::path::PathBuf;

/// Semiclassical partition functions of symplectic maps and torus bundles.
#[derive(Parser)]
#[command(name = "semiclassic", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path, `-` for standard output. Overrides `output.path`.
    #[arg(long)]
    out: Option<String>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() {
    let a = Args::parse();
    std::process::exit(execute(a.command, &a.config, a.out.as_deref(), a.format));
}
