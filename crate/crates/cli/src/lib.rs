//! Command-line driver for `hybrid-core`: scenario files, the `simulate`,
//! `verify`, `bounds` and `field-export` commands, and their output formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;

pub use cli::{Cli, Command};
pub use error::{CliError, CliResult};

/// Execute a parsed command line, printing a short summary to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let out = commands::cmd_simulate(&a.solve, &a.grid)?;
            let m = &out.manifest;
            println!(
                "simulated [0, {}] in {} segment(s); wrote {} to {}",
                m.horizon,
                m.segments.len(),
                m.outputs.join(", "),
                out.dir.display()
            );
        }
        Command::FieldExport(a) => {
            let out = commands::cmd_field_export(&a.solve, &a.grid)?;
            println!("wrote {} to {}", out.manifest.outputs.join(", "), out.dir.display());
        }
        Command::Bounds(a) => print!("{}", commands::cmd_bounds(&a)?),
        Command::Verify(a) => {
            let doc = commands::verify_document(&a)?;
            commands::write_report(&a, &doc)?;
            for r in &doc.reports {
                let status = if r.report.pass { "pass" } else { "FAIL" };
                println!(
                    "{status} {}/{}: worst ratio {:.6} over {} samples",
                    r.suite, r.target, r.report.worst_ratio, r.report.samples
                );
            }
            if !doc.all_pass() {
                return Err(CliError::VerificationFailed(doc.failures()));
            }
        }
    }
    Ok(())
}
