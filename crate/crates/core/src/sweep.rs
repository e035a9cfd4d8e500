//! Parameter grids over λ, Δ and γ, λ-derivatives and critical-point detection.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lz::{gamma_squared, lz_probability, LzParams};
use crate::spectrum::{ground_moments, spectrum_with, ChainSpec, GaplessPolicy};

/// Adjacent-difference ratio above which `∂P/∂λ` is flagged as discontinuous.
pub const JUMP_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisName {
    Lambda,
    Delta,
    Gamma,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Lambda => "lambda",
            AxisName::Delta => "delta",
            AxisName::Gamma => "gamma",
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(AxisName::Lambda),
            "delta" => Ok(AxisName::Delta),
            "gamma" => Ok(AxisName::Gamma),
            other => Err(Error::InvalidGrid(format!(
                "unknown axis '{other}' (expected lambda, delta or gamma)"
            ))),
        }
    }
}

/// Uniform axis `min, min + h, ..., max` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(name: AxisName, min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidGrid(format!(
                "axis {name} needs at least 2 points, got {points}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidGrid(format!(
                "axis {name} needs min < max, got {min}..{max}"
            )));
        }
        Ok(Self {
            name,
            min,
            max,
            points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Parses `name:min:max:points`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidGrid(format!(
                "expected name:min:max:points, got '{s}'"
            )));
        }
        let num = |p: &str| -> Result<f64> {
            p.parse()
                .map_err(|_| Error::InvalidGrid(format!("bad number '{p}' in '{s}'")))
        };
        let points = parts[3]
            .parse()
            .map_err(|_| Error::InvalidGrid(format!("bad point count '{}' in '{s}'", parts[3])))?;
        Axis::new(parts[0].parse()?, num(parts[1])?, num(parts[2])?, points)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.name, self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
    chain: ChainSpec,
    params: LzParams,
    policy: GaplessPolicy,
}

impl GridSpec {
    /// `chain` and `params` supply every value not swept by an axis.
    pub fn new(
        axes: Vec<Axis>,
        chain: ChainSpec,
        params: LzParams,
        policy: GaplessPolicy,
    ) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "expected one or two axes, got {}",
                axes.len()
            )));
        }
        if axes.len() == 2 && axes[0].name == axes[1].name {
            return Err(Error::InvalidGrid(format!(
                "axis {} given twice",
                axes[0].name
            )));
        }
        Ok(Self {
            axes,
            chain,
            params,
            policy,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn params(&self) -> &LzParams {
        &self.params
    }

    pub fn policy(&self) -> GaplessPolicy {
        self.policy
    }

    pub fn with_chain(&self, chain: ChainSpec) -> Self {
        Self {
            chain,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of row `index`; the first axis varies slowest.
    fn coords(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = axis.value(rest % axis.points);
            rest /= axis.points;
        }
        out
    }

    fn point(&self, coords: &[f64]) -> Result<(ChainSpec, LzParams)> {
        let mut chain = self.chain;
        let mut params = self.params;
        for (axis, &x) in self.axes.iter().zip(coords) {
            match axis.name {
                AxisName::Lambda => chain = chain.with_lambda(x)?,
                AxisName::Gamma => chain = chain.with_gamma(x)?,
                AxisName::Delta => params = params.with_delta(x)?,
            }
        }
        Ok((chain, params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    M,
    S2,
    Gamma2,
    PFlip,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::M, Column::S2, Column::Gamma2, Column::PFlip];

    pub fn as_str(self) -> &'static str {
        match self {
            Column::M => "m",
            Column::S2 => "s2",
            Column::Gamma2 => "gamma2",
            Column::PFlip => "p_flip",
        }
    }

    pub fn derivative_name(self) -> &'static str {
        match self {
            Column::M => "dm_dlambda",
            Column::S2 => "ds2_dlambda",
            Column::Gamma2 => "dgamma2_dlambda",
            Column::PFlip => "dP_dlambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// One value per grid axis, in axis order.
    pub coords: Vec<f64>,
    pub m: f64,
    pub s2: f64,
    pub gamma2: f64,
    pub p_flip: f64,
    /// `∂/∂λ` of `[m, s2, gamma2, p_flip]`; present only when a λ axis exists.
    pub derivatives: Option<[f64; 4]>,
}

impl SweepRow {
    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::M => self.m,
            Column::S2 => self.s2,
            Column::Gamma2 => self.gamma2,
            Column::PFlip => self.p_flip,
        }
    }

    pub fn derivative(&self, column: Column) -> Option<f64> {
        let idx = Column::ALL.iter().position(|&c| c == column)?;
        self.derivatives.map(|d| d[idx])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<Axis>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn lambda_axis(&self) -> Option<usize> {
        self.axes.iter().position(|a| a.name == AxisName::Lambda)
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(column)).collect()
    }

    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.coords[axis]).collect()
    }

    /// Stored `∂/∂λ` column, if the table has a λ axis.
    pub fn derivative_column(&self, column: Column) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.derivative(column)).collect()
    }
}

/// Evaluates every grid point and attaches λ-derivatives when λ is swept.
pub fn run_sweep(grid: &GridSpec) -> Result<SweepTable> {
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let coords = grid.coords(i);
            let (chain, params) = grid.point(&coords)?;
            let gm = ground_moments(&spectrum_with(&chain, grid.policy)?);
            let gamma2 = gamma_squared(&gm, &params);
            let lz = lz_probability(gamma2, &params)?;
            Ok(SweepRow {
                coords,
                m: gm.m,
                s2: gm.s2,
                gamma2,
                p_flip: lz.p_flip,
                derivatives: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = SweepTable {
        axes: grid.axes.clone(),
        rows,
    };
    if table.lambda_axis().is_some() {
        let derivs = Column::ALL
            .iter()
            .map(|&c| central_derivative(&table, c))
            .collect::<Result<Vec<_>>>()?;
        for (i, row) in table.rows.iter_mut().enumerate() {
            row.derivatives = Some([derivs[0][i], derivs[1][i], derivs[2][i], derivs[3][i]]);
        }
    }
    Ok(table)
}

/// Second-order finite differences on a uniform grid: central in the interior,
/// one-sided three-point stencils at both ends.
pub fn central_difference(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidGrid(format!(
            "{} abscissae for {} values",
            n,
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 points for a derivative, got {n}"
        )));
    }
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    if h == 0.0 || !h.is_finite() {
        return Err(Error::NonUniformAxis(format!("degenerate step {h}")));
    }
    for (i, w) in x.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::NonUniformAxis(format!(
                "step {} at index {i} differs from {h}",
                w[1] - w[0]
            )));
        }
    }
    let inv = 0.5 / h;
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) * inv;
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) * inv;
    }
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) * inv;
    Ok(d)
}

/// `∂column/∂λ` for every row, differentiating along λ with the other axis held fixed.
pub fn central_derivative(table: &SweepTable, column: Column) -> Result<Vec<f64>> {
    let li = table.lambda_axis().ok_or(Error::NoLambdaAxis)?;
    let lambda_points = table.axes[li].points;
    // stride between consecutive λ samples in row-major order
    let stride: usize = table.axes[li + 1..].iter().map(|a| a.points).product();
    let mut out = vec![0.0; table.rows.len()];
    for start in 0..table.rows.len() {
        if (start / stride) % lambda_points != 0 {
            continue;
        }
        let idx: Vec<usize> = (0..lambda_points).map(|k| start + k * stride).collect();
        let x: Vec<f64> = idx.iter().map(|&i| table.rows[i].coords[li]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| table.rows[i].get(column)).collect();
        for (&i, d) in idx.iter().zip(central_difference(&x, &y)?) {
            out[i] = d;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalReport {
    /// Grid value of λ maximising `|∂P/∂λ|`.
    pub lambda_star: f64,
    pub peak_value: f64,
    pub jump_detected: bool,
    pub jump_location: Option<f64>,
}

/// Critical-point signatures of a one-dimensional λ sweep.
pub fn locate_critical(table: &SweepTable) -> Result<CriticalReport> {
    if table.axes.len() != 1 || table.lambda_axis().is_none() {
        return Err(Error::NoLambdaAxis);
    }
    let dp = table
        .derivative_column(Column::PFlip)
        .ok_or(Error::NoLambdaAxis)?;
    Ok(locate_critical_profile(&table.coordinate(0), &dp))
}

/// Peak of `|dp|` and the adjacent-difference jump test on a sampled derivative.
pub fn locate_critical_profile(lambda: &[f64], dp: &[f64]) -> CriticalReport {
    let (star, peak) = dp
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    let diffs: Vec<f64> = dp.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (jump_detected, jump_location) = if diffs.is_empty() {
        (false, None)
    } else {
        let (at, largest) =
            diffs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
        let detected = largest > JUMP_RATIO * median(&diffs);
        let location = detected.then(|| 0.5 * (lambda[at] + lambda[at + 1]));
        (detected, location)
    };
    CriticalReport {
        lambda_star: lambda[star],
        peak_value: peak,
        jump_detected,
        jump_location,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Peak `|∂P/∂λ|` of the same one-dimensional λ sweep for each chain length.
pub fn sharpness_scaling(ns: &[usize], grid: &GridSpec) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let table = run_sweep(&grid.with_chain(grid.chain.with_n(n)?))?;
            Ok((n, locate_critical(&table)?.peak_value))
        })
        .collect()
}

/// Index of the global minimum and the largest rise above it at later indices.
pub fn recovery_after_minimum(values: &[f64]) -> Option<(usize, f64)> {
    let (imin, vmin) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let rise = values[imin..]
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v - vmin));
    Some((imin, rise))
}
