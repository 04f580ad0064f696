mod cli;
mod commands;
mod common;
mod config;
mod dataset;
mod frames;
mod pipeline;
mod sim;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use crate::cli::{Cli, Command, ReportFormat, DATASET_ENV};
use crate::common::{Context, Outcome};

fn run(cli: Cli) -> Result<Outcome> {
    if let Command::Pipeline(args) = &cli.command {
        let global = config::GlobalFlags {
            label_map: cli.label_map.as_deref(),
            workers: cli.workers,
            format: cli.report_format,
        };
        let env = std::env::var_os(DATASET_ENV)
            .filter(|v| !v.is_empty())
            .map(Into::into);
        let resolved = config::resolve(args, &global, env)?;
        return pipeline::pipeline(&resolved);
    }
    let ctx = Context {
        labels: common::load_labels(cli.label_map.as_deref())?,
        workers: cli.workers.unwrap_or(0),
        format: cli.report_format.unwrap_or(ReportFormat::Kv),
    };
    match &cli.command {
        Command::RangeProject(a) => commands::range_project(a, &ctx),
        Command::Sgp(a) => commands::sgp(a, &ctx),
        Command::Clean(a) => commands::clean(a, &ctx),
        Command::Fuse(a) => commands::fuse_cmd(a, &ctx),
        Command::Stvd(a) => commands::stvd(a, &ctx),
        Command::Sweep(a) => commands::sweep(a, &ctx),
        Command::Sim(a) => sim::sim(a, &ctx),
        Command::Pipeline(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation failures; help and version are not
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(2),
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
