mod args;
mod commands;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use serde_json::json;

use args::{Cli, Command, Format};
use report::Report;

/// Exit status for usage and input errors.
const EXIT_USAGE: u8 = 2;
/// Exit status for numerical failures (non-convergence, failed inversion).
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<freeprob::Error> for Failure {
    fn from(e: freeprob::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Reads `key = value` lines into `--key value` tokens. Keys may use
/// underscores or dashes.
fn config_tokens(text: &str, subcommand: &str) -> Result<Vec<String>, Failure> {
    let cmd = Cli::command();
    let flags: Vec<&clap::Arg> = cmd
        .find_subcommand(subcommand)
        .map(|s| s.get_arguments().collect())
        .unwrap_or_default();
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if matches!(key.as_str(), "config" | "command") {
            continue;
        }
        let is_switch = flags
            .iter()
            .find(|a| a.get_long() == Some(key.as_str()))
            .is_some_and(|a| !a.get_action().takes_values());
        if is_switch {
            if value == "true" {
                tokens.push(format!("--{key}"));
            }
        } else {
            tokens.push(format!("--{key}"));
            tokens.push(value.to_string());
        }
    }
    Ok(tokens)
}

/// The `--config` path as typed, found before clap runs so that config
/// values can satisfy required flags.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Values from `--config` sit just after the subcommand token, so anything
/// the user typed later on the command line overrides them.
fn merge_config(argv: &[OsString]) -> Result<Vec<OsString>, Failure> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.to_string_lossy())))?;
    let cmd = Cli::command();
    let Some(pos) = argv
        .iter()
        .position(|a| cmd.get_subcommands().any(|s| a.to_str() == Some(s.get_name())))
    else {
        return Ok(argv.to_vec());
    };
    let tokens = config_tokens(&text, argv[pos].to_str().unwrap_or_default())?;
    let mut merged = argv[..=pos].to_vec();
    merged.extend(tokens.into_iter().map(OsString::from));
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(merged)
}

fn dispatch(cli: &Cli) -> freeprob::Result<Report> {
    match &cli.command {
        Command::Cumulants(a) => commands::cumulants(a, cli.format),
        Command::Freeconv(a) => commands::freeconv(a, cli.format),
        Command::Kesten(a) => commands::kesten(a, cli.format),
        Command::Polya(a) => commands::polya(a, cli.format),
        Command::Flow(a) => commands::flow(a),
        Command::Rmt(a) => commands::rmt(a, cli.seed, cli.workers.max(1)),
        Command::Wick(a) => commands::wick(a, cli.format),
        Command::Weingarten(a) => commands::weingarten(a, cli.format),
    }
}

fn render(cli: &Cli, report: Report) -> Result<String, Failure> {
    match cli.format {
        Format::Csv => report
            .csv
            .ok_or_else(|| Failure::Usage("this command has no CSV output".into())),
        Format::Json => {
            let doc = json!({
                "config": serde_json::to_value(cli).map_err(|e| Failure::Io(e.to_string()))?,
                "result": report.result,
                "diagnostics": report.diagnostics,
            });
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

enum Outcome {
    Done,
    Clap(clap::Error),
}

fn run(argv: Vec<OsString>) -> Result<Outcome, Failure> {
    let cli = match Cli::try_parse_from(merge_config(&argv)?) {
        Ok(c) => c,
        Err(e) => return Ok(Outcome::Clap(e)),
    };
    let report = dispatch(&cli)?;
    let text = render(&cli, report)?;
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string()))?,
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn numerical_errors_map_to_their_own_code() {
        let e = freeprob::Error::ContinuationFailure {
            z: Complex64::new(0.0, 1.0),
            residual: 1.0,
        };
        assert_eq!(Failure::from(e).code(), EXIT_NUMERICAL);
        let e = freeprob::Error::InvalidInput("x".into());
        assert_eq!(Failure::from(e).code(), EXIT_USAGE);
    }

    #[test]
    fn config_lines_become_flags() {
        let t = config_tokens("# comment\n\nnmax = 8\nd=3\n", "kesten").unwrap();
        assert_eq!(t, ["--nmax", "8", "--d", "3"]);
        assert!(config_tokens("nonsense", "kesten").is_err());
    }

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
