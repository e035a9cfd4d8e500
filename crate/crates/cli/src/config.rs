//! Command-line flags, `key=value` config files and their resolution into
//! concrete run settings.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lzchain_core::sweep::{Axis, AxisName, Column};
use lzchain_core::{ChainKind, ChainSpec, GaplessPolicy, LzParams};

use crate::output::Format;
use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "lzchain",
    version,
    about = "Landau-Zener transitions of a qubit coupled to an XY spin chain"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    Spectrum,
    Prob,
    Sweep,
    Oracle,
    Compare,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-mode Bogoliubov table and ground-state moments
    Spectrum(Flags),
    /// Closed-form flip probability at one parameter point
    Prob(Flags),
    /// Closed-form quantities over a 1-D or 2-D grid
    Sweep(Flags),
    /// Brute-force propagation of the full qubit + chain system
    Oracle(Flags),
    /// Closed form against the brute-force oracle
    Compare(Flags),
}

impl Command {
    pub fn split(self) -> (CommandName, Flags) {
        match self {
            Command::Spectrum(f) => (CommandName::Spectrum, f),
            Command::Prob(f) => (CommandName::Prob, f),
            Command::Sweep(f) => (CommandName::Sweep, f),
            Command::Oracle(f) => (CommandName::Oracle, f),
            Command::Compare(f) => (CommandName::Compare, f),
        }
    }
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Spectrum => "spectrum",
            CommandName::Prob => "prob",
            CommandName::Sweep => "sweep",
            CommandName::Oracle => "oracle",
            CommandName::Compare => "compare",
        }
    }

    fn uses_oracle(self) -> bool {
        matches!(self, CommandName::Oracle | CommandName::Compare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ising,
    Xy,
}

impl KindArg {
    fn kind(self) -> ChainKind {
        match self {
            KindArg::Ising => ChainKind::Ising,
            KindArg::Xy => ChainKind::Xy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn axes(self) -> Vec<Axis> {
        let lambda = Axis::new(AxisName::Lambda, 0.0, 2.0, 401).expect("static axis");
        match self {
            Preset::Fig1 => vec![lambda],
            Preset::Fig2 | Preset::Fig3 => vec![
                lambda,
                Axis::new(AxisName::Delta, 0.0, 20.0, 41).expect("static axis"),
            ],
            Preset::Fig4 => vec![
                lambda,
                Axis::new(AxisName::Gamma, 0.0, 1.0, 21).expect("static axis"),
            ],
        }
    }

    /// Value columns written after the axis columns: `(column, derivative?)`.
    pub fn columns(self) -> Vec<(Column, bool)> {
        match self {
            Preset::Fig1 => vec![
                (Column::M, false),
                (Column::S2, false),
                (Column::M, true),
                (Column::S2, true),
            ],
            Preset::Fig2 => vec![(Column::Gamma2, false), (Column::Gamma2, true)],
            Preset::Fig3 | Preset::Fig4 => vec![(Column::PFlip, false), (Column::PFlip, true)],
        }
    }

    fn kind(self) -> KindArg {
        match self {
            Preset::Fig4 => KindArg::Xy,
            _ => KindArg::Ising,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Chain family
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Number of chain spins (odd)
    #[arg(long)]
    pub n: Option<usize>,
    /// Exchange coupling J
    #[arg(long)]
    pub j: Option<f64>,
    /// Transverse field in units of J
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// XY anisotropy (1 = Ising, 0 = XX)
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Qubit tunnelling splitting
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Qubit-chain coupling
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    /// Sweep velocity
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Sweep axis `name:min:max:points` with name lambda, delta or gamma
    #[arg(long = "grid", value_name = "AXIS")]
    pub grid: Vec<Axis>,
    /// Figure preset for `sweep`
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Half-width T of the oracle sweep window
    #[arg(long)]
    pub t_span: Option<f64>,
    /// Largest accepted |p_oracle - p_formula| for `compare`
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Significant digits of floating-point output
    #[arg(long)]
    pub precision: Option<usize>,
    /// Fail on gapless modes instead of using the limiting angle
    #[arg(long)]
    pub strict_gapless: bool,
    /// Also evolve back to -T and report the return fidelity (oracle, compare)
    #[arg(long)]
    pub round_trip: bool,
    /// Print the resolved configuration as key=value lines and exit
    #[arg(long)]
    pub dump_config: bool,
    /// Read key=value settings from a file; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Failure::usage(format!("config key {key}: {e}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, Failure> {
    T::from_str(value, true).map_err(|e| Failure::usage(format!("config key {key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Failure> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Failure::usage(format!(
            "config key {key}: expected a boolean, got {value}"
        ))),
    }
}

impl Flags {
    /// Parses a config file body. Blank lines and `#` comments are skipped;
    /// `grid` may repeat.
    pub fn from_config_text(text: &str) -> Result<Flags, Failure> {
        let mut flags = Flags::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Failure::usage(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "kind" => flags.kind = Some(parse_enum(&key, value)?),
                "n" => flags.n = Some(parse_value(&key, value)?),
                "j" => flags.j = Some(parse_value(&key, value)?),
                "lambda" => flags.lambda = Some(parse_value(&key, value)?),
                "gamma" => flags.gamma = Some(parse_value(&key, value)?),
                "delta" => flags.delta = Some(parse_value(&key, value)?),
                "g" => flags.g = Some(parse_value(&key, value)?),
                "v" => flags.v = Some(parse_value(&key, value)?),
                "hbar" => flags.hbar = Some(parse_value(&key, value)?),
                "grid" => flags.grid.push(parse_value(&key, value)?),
                "preset" => flags.preset = Some(parse_enum(&key, value)?),
                "t_span" => flags.t_span = Some(parse_value(&key, value)?),
                "tolerance" => flags.tolerance = Some(parse_value(&key, value)?),
                "out" => flags.out = Some(PathBuf::from(value)),
                "format" => flags.format = Some(parse_enum(&key, value)?),
                "precision" => flags.precision = Some(parse_value(&key, value)?),
                "strict_gapless" => flags.strict_gapless = parse_bool(&key, value)?,
                "round_trip" => flags.round_trip = parse_bool(&key, value)?,
                _ => return Err(Failure::usage(format!("unknown config key {key}"))),
            }
        }
        Ok(flags)
    }

    /// Fills every setting not given on the command line from `file`.
    pub fn merge_file(mut self, file: Flags) -> Flags {
        self.kind = self.kind.or(file.kind);
        self.n = self.n.or(file.n);
        self.j = self.j.or(file.j);
        self.lambda = self.lambda.or(file.lambda);
        self.gamma = self.gamma.or(file.gamma);
        self.delta = self.delta.or(file.delta);
        self.g = self.g.or(file.g);
        self.v = self.v.or(file.v);
        self.hbar = self.hbar.or(file.hbar);
        if self.grid.is_empty() {
            self.grid = file.grid;
        }
        self.preset = self.preset.or(file.preset);
        self.t_span = self.t_span.or(file.t_span);
        self.tolerance = self.tolerance.or(file.tolerance);
        self.out = self.out.or(file.out);
        self.format = self.format.or(file.format);
        self.precision = self.precision.or(file.precision);
        self.strict_gapless |= file.strict_gapless;
        self.round_trip |= file.round_trip;
        self
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub kind: KindArg,
    pub n: usize,
    pub j: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    pub g: f64,
    pub v: f64,
    pub hbar: f64,
    pub grid: Vec<Axis>,
    pub preset: Option<Preset>,
    pub t_span: f64,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub precision: usize,
    pub strict_gapless: bool,
    pub round_trip: bool,
}

pub const DEFAULT_PRECISION: usize = 17;

impl RunConfig {
    /// Reads the optional config file, applies preset and per-command
    /// defaults.
    pub fn resolve(command: CommandName, flags: Flags) -> Result<RunConfig, Failure> {
        let flags = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Failure::usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                let file = Flags::from_config_text(&text)?;
                flags.merge_file(file)
            }
            None => flags,
        };
        Self::from_flags(command, flags)
    }

    pub fn from_flags(command: CommandName, flags: Flags) -> Result<RunConfig, Failure> {
        if flags.preset.is_some() && command != CommandName::Sweep {
            return Err(Failure::usage("--preset only applies to sweep"));
        }
        if flags.preset.is_some() && !flags.grid.is_empty() {
            return Err(Failure::usage("--preset and --grid are mutually exclusive"));
        }
        if flags.grid.len() > 2 {
            return Err(Failure::usage(format!(
                "at most two --grid axes, got {}",
                flags.grid.len()
            )));
        }
        let precision = flags.precision.unwrap_or(DEFAULT_PRECISION);
        if !(1..=40).contains(&precision) {
            return Err(Failure::usage(format!(
                "invalid precision: must be between 1 and 40, got {precision}"
            )));
        }
        let tolerance = flags.tolerance.unwrap_or(0.02);
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Failure::usage(format!(
                "invalid tolerance: must be non-negative, got {tolerance}"
            )));
        }
        let oracle = command.uses_oracle();
        let preset_kind = flags.preset.map(Preset::kind);
        Ok(RunConfig {
            command,
            kind: flags.kind.or(preset_kind).unwrap_or(KindArg::Ising),
            n: flags.n.unwrap_or(if oracle { 5 } else { 201 }),
            j: flags.j.unwrap_or(1.0),
            lambda: flags.lambda.unwrap_or(if oracle { 2.0 } else { 1.0 }),
            gamma: flags.gamma.unwrap_or(1.0),
            delta: flags.delta.unwrap_or(5.0),
            g: flags.g.unwrap_or(0.1),
            v: flags.v.unwrap_or(50.0),
            hbar: flags.hbar.unwrap_or(1.0),
            grid: flags.grid,
            preset: flags.preset,
            t_span: flags.t_span.unwrap_or(40.0),
            tolerance,
            out: flags.out,
            format: flags.format.unwrap_or(Format::Tsv),
            precision,
            strict_gapless: flags.strict_gapless,
            round_trip: flags.round_trip,
        })
    }

    pub fn chain(&self) -> Result<ChainSpec, Failure> {
        Ok(ChainSpec::new(
            self.kind.kind(),
            self.n,
            self.j,
            self.lambda,
            self.gamma,
        )?)
    }

    pub fn params(&self) -> Result<LzParams, Failure> {
        Ok(LzParams::new(self.delta, self.v, self.g, self.hbar)?)
    }

    pub fn policy(&self) -> GaplessPolicy {
        if self.strict_gapless {
            GaplessPolicy::Strict
        } else {
            GaplessPolicy::Limit
        }
    }

    pub fn axes(&self) -> Vec<Axis> {
        match self.preset {
            Some(p) => p.axes(),
            None => self.grid.clone(),
        }
    }

    /// `key=value` lines that reproduce this configuration (the output path
    /// is left out so a replay can write elsewhere).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            KindArg::Ising => "ising",
            KindArg::Xy => "xy",
        };
        let _ = writeln!(s, "kind={kind}");
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "j={}", self.j);
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "gamma={}", self.gamma);
        let _ = writeln!(s, "delta={}", self.delta);
        let _ = writeln!(s, "g={}", self.g);
        let _ = writeln!(s, "v={}", self.v);
        let _ = writeln!(s, "hbar={}", self.hbar);
        for axis in &self.grid {
            let _ = writeln!(s, "grid={axis}");
        }
        if let Some(p) = self.preset {
            let _ = writeln!(s, "preset={}", p.name());
        }
        let _ = writeln!(s, "t_span={}", self.t_span);
        let _ = writeln!(s, "tolerance={}", self.tolerance);
        let _ = writeln!(s, "format={}", self.format.name());
        let _ = writeln!(s, "precision={}", self.precision);
        let _ = writeln!(s, "strict_gapless={}", self.strict_gapless);
        let _ = writeln!(s, "round_trip={}", self.round_trip);
        s
    }

    /// One-line parameter summary for output headers.
    pub fn summary(&self) -> String {
        let kind = match self.kind {
            KindArg::Ising => "ising",
            KindArg::Xy => "xy",
        };
        format!(
            "kind={kind} n={} j={} lambda={} gamma={} delta={} g={} v={} hbar={}",
            self.n, self.j, self.lambda, self.gamma, self.delta, self.g, self.v, self.hbar
        )
    }
}
