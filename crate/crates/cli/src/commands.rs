use lzchain_core::oracle::{check_convergence, exact_ground_moments, OracleConfig};
use lzchain_core::sweep::{run_sweep, Column, GridSpec, SweepTable};
use lzchain_core::{
    chain_driven_probability_with, gamma_squared, ground_moments, lz_probability, spectrum_with,
};

use crate::config::{CommandName, RunConfig};
use crate::output::{emit, render_float, Cell, Table};
use crate::Failure;

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    match cfg.command {
        CommandName::Spectrum => cmd_spectrum(cfg),
        CommandName::Prob => cmd_prob(cfg),
        CommandName::Sweep => cmd_sweep(cfg),
        CommandName::Oracle => cmd_oracle(cfg),
        CommandName::Compare => cmd_compare(cfg),
    }
}

fn header(cfg: &RunConfig) -> Table {
    let mut t = Table::default();
    t.meta(format!("lzchain {}", env!("CARGO_PKG_VERSION")));
    t.meta(format!("command: {}", cfg.command.as_str()));
    t.meta(format!("params: {}", cfg.summary()));
    t.meta("units: energies in J, time in hbar/J, v in J^2/hbar");
    t
}

fn write(cfg: &RunConfig, table: &Table) -> Result<(), Failure> {
    let text = table.render(cfg.format, cfg.precision);
    emit(&text, cfg.out.as_deref()).map_err(|e| Failure::io(format!("cannot write output: {e}")))
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.chain()?;
    let spectrum = spectrum_with(&spec, cfg.policy())?;
    let moments = ground_moments(&spectrum);
    let mut t = header(cfg);
    t.meta(format!(
        "summary: m={} s2={}",
        render_float(moments.m, cfg.precision),
        render_float(moments.s2, cfg.precision)
    ));
    t.set_columns(&["k", "momentum", "eps", "xi", "cos_theta", "sin_theta"]);
    for mode in &spectrum.modes {
        t.rows.push(vec![
            Cell::Int(mode.k),
            Cell::Float(mode.momentum),
            Cell::Float(mode.eps),
            Cell::Float(mode.xi),
            Cell::Float(mode.cos_theta),
            Cell::Float(mode.sin_theta),
        ]);
    }
    write(cfg, &t)
}

fn cmd_prob(cfg: &RunConfig) -> Result<(), Failure> {
    let r = chain_driven_probability_with(&cfg.chain()?, &cfg.params()?, cfg.policy())?;
    let mut t = header(cfg);
    t.set_columns(&["gamma2", "p_flip", "p_survive"]);
    t.rows.push(vec![
        Cell::Float(r.gamma2),
        Cell::Float(r.p_flip),
        Cell::Float(r.p_survive),
    ]);
    write(cfg, &t)
}

fn sweep_columns(cfg: &RunConfig, table: &SweepTable) -> Vec<(Column, bool)> {
    match cfg.preset {
        Some(p) => p.columns(),
        None => {
            let mut cols: Vec<(Column, bool)> = Column::ALL.iter().map(|&c| (c, false)).collect();
            if table.lambda_axis().is_some() {
                cols.extend(Column::ALL.iter().map(|&c| (c, true)));
            }
            cols
        }
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let axes = cfg.axes();
    if axes.is_empty() {
        return Err(Failure::usage("sweep needs --grid or --preset"));
    }
    let grid = GridSpec::new(axes, cfg.chain()?, cfg.params()?, cfg.policy())?;
    let table = run_sweep(&grid)?;

    let mut t = header(cfg);
    if let Some(p) = cfg.preset {
        t.meta(format!(
            "preset: {} (figure captions use N=200; the closed form needs odd N, so N={} is used)",
            p.name(),
            cfg.n
        ));
    }
    let axis_text: Vec<String> = grid.axes().iter().map(|a| a.to_string()).collect();
    t.meta(format!(
        "grid: {} (first axis varies slowest)",
        axis_text.join(" ")
    ));
    if table.lambda_axis().is_some() {
        t.meta("derivatives: central differences in lambda, one-sided at the ends");
    }

    let columns = sweep_columns(cfg, &table);
    let mut names: Vec<&str> = grid.axes().iter().map(|a| a.name.as_str()).collect();
    for &(c, d) in &columns {
        names.push(if d { c.derivative_name() } else { c.as_str() });
    }
    t.set_columns(&names);
    for row in &table.rows {
        let mut cells: Vec<Cell> = row.coords.iter().map(|&x| Cell::Float(x)).collect();
        for &(c, d) in &columns {
            let value = if d {
                row.derivative(c)
                    .ok_or(lzchain_core::error::Error::NoLambdaAxis)?
            } else {
                row.get(c)
            };
            cells.push(Cell::Float(value));
        }
        t.rows.push(cells);
    }
    write(cfg, &t)
}

fn oracle_config(cfg: &RunConfig) -> OracleConfig {
    OracleConfig {
        round_trip: cfg.round_trip,
        ..OracleConfig::default().with_t_span(cfg.t_span)
    }
}

/// Notes a sweep window too short for the asymptotic regime, on stderr and in
/// the output header.
fn window_note(t: &mut Table, cfg: &RunConfig, asymptotic: bool) {
    if !asymptotic {
        let note = format!(
            "window T={} is short: v*T is below 20 max(delta, max xi), p_flip carries finite-time error",
            cfg.t_span
        );
        eprintln!("warning: {note}");
        t.meta(format!("warning: {note}"));
    }
}

fn cmd_oracle(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.chain()?;
    let report = check_convergence(&spec, &cfg.params()?, &oracle_config(cfg))?;
    let r = &report.short;
    let mut t = header(cfg);
    t.meta(format!(
        "convergence: p_flip={} at T={}, {} at T={}",
        render_float(r.p_flip, cfg.precision),
        r.t_span_used,
        render_float(report.long.p_flip, cfg.precision),
        report.long.t_span_used
    ));
    window_note(&mut t, cfg, r.asymptotic_window);
    let mut names = vec![
        "p_flip",
        "p_survive",
        "norm_drift",
        "converged",
        "t_span",
        "steps",
        "subspace_dim",
        "survivor_ground_overlap",
    ];
    let mut row = vec![
        Cell::Float(r.p_flip),
        Cell::Float(r.p_survive),
        Cell::Float(r.norm_drift.max(report.long.norm_drift)),
        Cell::Bool(report.converged),
        Cell::Float(r.t_span_used),
        Cell::Int(r.steps),
        Cell::Int(r.subspace_dim),
        Cell::Float(r.survivor_ground_overlap),
    ];
    if let Some(f) = r.round_trip_fidelity {
        names.push("round_trip_fidelity");
        row.push(Cell::Float(f));
    }
    t.set_columns(&names);
    t.rows.push(row);
    write(cfg, &t)?;
    if !report.converged {
        return Err(Failure::physics(format!(
            "not converged: p_flip changed by {:e} between T={} and T={}",
            report.drift, r.t_span_used, report.long.t_span_used
        )));
    }
    Ok(())
}

fn cmd_compare(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.chain()?;
    let params = cfg.params()?;
    let formula = chain_driven_probability_with(&spec, &params, cfg.policy())?;
    let report = check_convergence(&spec, &params, &oracle_config(cfg))?;
    let oracle = &report.short;
    let abs_diff = (formula.p_flip - oracle.p_flip).abs();
    let exact = lz_probability(
        gamma_squared(&exact_ground_moments(&spec)?, &params),
        &params,
    )?;

    let mut t = header(cfg);
    t.meta(format!("tolerance: {}", cfg.tolerance));
    t.meta(format!(
        "closed form with exact ground-state moments of Jx: p_flip={}",
        render_float(exact.p_flip, cfg.precision)
    ));
    window_note(&mut t, cfg, oracle.asymptotic_window);
    t.set_columns(&[
        "p_formula",
        "p_oracle",
        "abs_diff",
        "norm_drift",
        "converged",
    ]);
    t.rows.push(vec![
        Cell::Float(formula.p_flip),
        Cell::Float(oracle.p_flip),
        Cell::Float(abs_diff),
        Cell::Float(oracle.norm_drift.max(report.long.norm_drift)),
        Cell::Bool(report.converged),
    ]);
    write(cfg, &t)?;
    if !report.converged {
        return Err(Failure::physics(format!(
            "oracle not converged: p_flip changed by {:e} between T={} and T={}",
            report.drift, oracle.t_span_used, report.long.t_span_used
        )));
    }
    if abs_diff > cfg.tolerance {
        return Err(Failure::physics(format!(
            "abs_diff {abs_diff:e} exceeds tolerance {}",
            cfg.tolerance
        )));
    }
    Ok(())
}
