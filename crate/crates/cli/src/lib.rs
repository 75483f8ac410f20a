//! Command-line driver: subcommands, run manifests and acceptance checks.
use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod manifest;

pub use args::{Cli, Command};

/// A malformed configuration file or flag value.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Numerical,
    Usage,
    Resolution,
    Config,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Numerical => 1,
            Category::Usage => 2,
            Category::Resolution => 3,
            Category::Config => 4,
            Category::Io => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Numerical => "numerical",
            Category::Usage => "usage",
            Category::Resolution => "resolution",
            Category::Config => "config",
            Category::Io => "io",
        }
    }
}

pub fn categorize(err: &anyhow::Error) -> Category {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return Category::Config;
        }
        if let Some(e) = cause.downcast_ref::<dnls_core::Error>() {
            return match e {
                dnls_core::Error::Resolution(_) => Category::Resolution,
                dnls_core::Error::Parse(_) | dnls_core::Error::Json(_) => Category::Config,
                dnls_core::Error::Io(_) => Category::Io,
                dnls_core::Error::Unknown { .. } | dnls_core::Error::InvalidParameter(_) => {
                    Category::Config
                }
                _ => Category::Numerical,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return Category::Config;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return Category::Io;
        }
    }
    Category::Numerical
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `argv`, runs the subcommand and returns the exit code. Errors are
/// reported on stderr as `error[<category>]: <message>`.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[{}]: {}", Category::Usage.name(), one_line(first));
            return Category::Usage.exit_code();
        }
    };
    match commands::execute(cli.command) {
        Ok(manifest) => {
            let failed = manifest.checks.iter().filter(|c| !c.pass).count();
            println!(
                "{}",
                serde_json::json!({
                    "subcommand": manifest.subcommand,
                    "outputs": manifest.outputs.len(),
                    "output_hash": manifest.output_hash,
                    "checks": manifest.checks.len(),
                    "failed_checks": failed,
                })
            );
            0
        }
        Err(err) => {
            let cat = categorize(&err);
            eprintln!("error[{}]: {}", cat.name(), one_line(&format!("{err:#}")));
            cat.exit_code()
        }
    }
}
