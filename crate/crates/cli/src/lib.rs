//! Command-line front end for the zeno-core engine: one subcommand per
//! experiment, layered parameters, and CSV/JSON/SVG output.

pub mod emit;
pub mod error;
pub mod experiments;
pub mod params;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::emit::Format;
use crate::error::CliError;
use crate::experiments::{Experiment, EXPERIMENTS};

fn command() -> Command {
    let mut cmd = Command::new("zeno-sim")
        .version(zeno_core::ENGINE_VERSION)
        .about("Quantum Zeno gate and micro-cavity experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for exp in EXPERIMENTS {
        let mut sub = Command::new(exp.name)
            .about(exp.about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("key = value parameter file"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .default_value("out")
                    .help("output directory"),
            )
            .arg(
                Arg::new("format")
                    .long("format")
                    .value_name("LIST")
                    .default_value("csv,json,svg")
                    .help("comma-separated output formats"),
            );
        for spec in exp.params {
            sub = sub.arg(
                Arg::new(spec.key)
                    .long(spec.key)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .action(ArgAction::Set)
                    .help(format!("{} [default: {}]", spec.help, spec.default)),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses `args` (including the program name), runs the experiment, and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let exp = experiments::find(name).expect("registered subcommand");
    match execute(exp, sub) {
        Ok((summary, written)) => {
            let _ = writeln!(stdout, "{summary} [{} files]", written.len());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "zeno-sim {name}: {e}");
            e.exit_code()
        }
    }
}

fn execute(exp: &Experiment, m: &ArgMatches) -> Result<(String, Vec<PathBuf>), CliError> {
    let config = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
            params::parse_config(&text)?
        }
        None => Vec::new(),
    };
    let flags: Vec<(String, String)> = exp
        .params
        .iter()
        .filter_map(|s| {
            m.get_one::<String>(s.key)
                .map(|v| (s.key.to_string(), v.clone()))
        })
        .collect();
    let formats = Format::parse_list(m.get_one::<String>("format").expect("has default"))?;
    let params = params::resolve(exp.params, &config, &flags)?;
    let outcome = (exp.run)(&params)?;
    let mut curves = outcome.curves;
    for curve in &mut curves {
        for (k, v) in params.iter() {
            curve.set_metadata(format!("param.{k}"), v);
        }
        curve.set_metadata("engine_version", zeno_core::ENGINE_VERSION);
    }
    let dir = PathBuf::from(m.get_one::<String>("out").expect("has default"));
    let written = emit::emit(&curves, &formats, &dir)?;
    Ok((outcome.summary, written))
}
