//! `lzchain`: closed-form and brute-force Landau-Zener probabilities for a
//! qubit swept through resonance while coupled to an XY spin chain.
//!
//! Exit codes: 0 success, 1 write failure, 2 invalid input, 3 tolerance or
//! convergence failure.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use lzchain_core::error::Error;

use crate::config::{Cli, RunConfig};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PHYSICS: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn physics(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PHYSICS,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NormBudgetExceeded { .. }
            | Error::NonConvergent { .. }
            | Error::StepLimit(_) => Failure::physics(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let (command, flags) = Cli::parse().command.split();
    let dump = flags.dump_config;
    let result = RunConfig::resolve(command, flags).and_then(|cfg| {
        if dump {
            print!("{}", cfg.dump());
            Ok(())
        } else {
            commands::run(&cfg)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
