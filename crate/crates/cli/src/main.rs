//! `revflow`: run Ricci-flow scenarios for surfaces of revolution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod pipeline;
mod regress;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use revflow_core::build_profile;

use config::{parse_frames, Mode, PartialConfig, PartialGrid, PartialOutputs};
use pipeline::CliError;

#[derive(Parser)]
#[command(name = "revflow", version, about = "Ricci flow of surfaces of revolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a surface; write frames, profiles, meshes and diagnostics.
    Evolve(ScenarioArgs),
    /// Evolve a torus and fold every frame into the creased compact surface.
    Crease(ScenarioArgs),
    /// Run the sphere and torus regression suites.
    Regress(ScenarioArgs),
    /// Evolve and write only the OBJ meshes.
    ExportMesh(ScenarioArgs),
}

#[derive(Args, Default)]
struct ScenarioArgs {
    /// sphere | torus:a=A,b=B | cylinder:r=R,len=L | csv:PATH
    #[arg(long)]
    surface: Option<String>,
    /// Grid nodes.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Half-width of the truncated isothermal interval (sphere-like surfaces).
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Comma-separated output times.
    #[arg(long)]
    frames: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Angular resolution of meshes.
    #[arg(long = "n-theta")]
    n_theta: Option<usize>,
    /// Starting height of the crease fold.
    #[arg(long, allow_negative_numbers = true)]
    z0: Option<f64>,
    /// TOML scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(self, mode: Mode) -> Result<config::ScenarioConfig, CliError> {
        let file = match &self.config {
            Some(path) => PartialConfig::from_file(path)?,
            None => PartialConfig::default(),
        };
        let frames = self
            .frames
            .as_deref()
            .map(parse_frames)
            .transpose()
            .map_err(config::ConfigError::Invalid)?;
        let flags = PartialConfig {
            surface: self.surface,
            grid: PartialGrid { n: self.n, l: self.l },
            stepper: Default::default(),
            outputs: PartialOutputs {
                t_end: self.t_end,
                frames,
                n_theta: self.n_theta,
                dir: self.out,
                z0: self.z0,
            },
        };
        let cfg = file
            .overlay(flags)
            .resolve(mode, |spec| build_profile(spec).ok().map(|c| c.topology()))?;
        // Reject a bad surface before anything is written.
        build_profile(&cfg.surface_spec())?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(args) => pipeline::evolve(&args.resolve(Mode::Evolve)?).map(drop),
        Command::Crease(args) => pipeline::crease(&args.resolve(Mode::Crease)?).map(drop),
        Command::Regress(args) => regress::regress(&args.resolve(Mode::Regress)?).map(drop),
        Command::ExportMesh(args) => pipeline::export_meshes(&args.resolve(Mode::ExportMesh)?).map(drop),
    }
}

fn error_line(kind: &str, code: i32, message: &str) -> String {
    serde_json::json!({ "error": kind, "exit_code": code, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                error_line("config", 2, e.to_string().lines().next().unwrap_or("bad arguments"))
            );
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", error_line(e.kind(), code, &e.to_string()));
            ExitCode::from(code as u8)
        }
    }
}
