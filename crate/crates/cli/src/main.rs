use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod config;

use cli::{Cli, Command};
use fisheye_depth::{Error, ErrorClass};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_GEOMETRY: u8 = 4;

/// One JSON object per line on stderr.
fn report_error(class: &str, message: &str) {
    let line = serde_json::json!({ "error": { "class": class, "message": message } });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let args: Vec<OsString> = std::env::args_os().collect();
    let args = match config::merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            report_error("usage", &e.0);
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report_error("usage", e.to_string().trim());
            return ExitCode::from(EXIT_USAGE);
        }
    };

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            report_error("usage", &format!("cannot configure threads: {e}"));
            return ExitCode::from(EXIT_USAGE);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = match &e {
                Error::Config(_) => ("usage", EXIT_USAGE),
                e if e.class() == ErrorClass::Geometry => ("geometry", EXIT_GEOMETRY),
                _ => ("data", EXIT_DATA),
            };
            report_error(class, &e.to_string());
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> fisheye_depth::Result<()> {
    match command {
        Command::Warp(a) => commands::warp(a),
        Command::GenStereo(a) => commands::gen_stereo(a),
        Command::Disp2depth(a) => commands::disp2depth(a),
        Command::Depth2disp(a) => commands::depth2disp(a),
        Command::Eval(a) => commands::eval(a),
        Command::Stats(a) => commands::stats(a),
        Command::PrepStereoInput(a) => commands::prep_stereo_input(a),
        Command::SynthScene(a) => commands::synth_scene(a),
    }
}
