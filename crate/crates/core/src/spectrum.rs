//! Quasiparticle spectrum of the periodic transverse-field Ising / XY chain.
//!
//! After Jordan-Wigner, Fourier and Bogoliubov transformations the chain
//! `-J Σ_j [(1+γ)/2 σᶻσᶻ + (1-γ)/2 σʸσʸ + λ σˣ]` becomes `Σ_k ξ_k b†_k b_k` with
//!
//! ```text
//! ε_k = 2J (λ - cos q_k)
//! ξ_k = 2J sqrt[(cos q_k - λ)² + γ² sin² q_k]
//! cos θ_k = ε_k / ξ_k,   sin θ_k = 2Jγ sin q_k / ξ_k,   q_k = 2πk / N
//! ```
//!
//! Only the modes `k = 1 ..= (N-1)/2` enter the ground-state moments.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Quasiparticle energies at or below `GAPLESS_TOLERANCE * J` count as gapless.
pub const GAPLESS_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Ising,
    Xy,
}

impl ChainKind {
    pub fn name(self) -> &'static str {
        match self {
            ChainKind::Ising => "ising",
            ChainKind::Xy => "xy",
        }
    }
}

/// Periodic chain of `n` spins: exchange `j`, transverse field `lambda`
/// (in units of `j`) and anisotropy `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    kind: ChainKind,
    n: usize,
    j: f64,
    lambda: f64,
    gamma: f64,
}

impl ChainSpec {
    pub fn ising(n: usize, j: f64, lambda: f64) -> Result<Self> {
        Self::new(ChainKind::Ising, n, j, lambda, 1.0)
    }

    pub fn xy(n: usize, j: f64, lambda: f64, gamma: f64) -> Result<Self> {
        Self::new(ChainKind::Xy, n, j, lambda, gamma)
    }

    pub fn new(kind: ChainKind, n: usize, j: f64, lambda: f64, gamma: f64) -> Result<Self> {
        if n < 3 {
            return Err(invalid("n", format!("N must be at least 3, got {n}")));
        }
        if n % 2 == 0 {
            return Err(invalid("n", format!("N must be odd, got {n}")));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(invalid("j", format!("J must be positive, got {j}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("lambda must be non-negative, got {lambda}"),
            ));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(
                "gamma",
                format!("gamma must lie in [0, 1], got {gamma}"),
            ));
        }
        if kind == ChainKind::Ising && gamma != 1.0 {
            return Err(invalid(
                "gamma",
                format!("the Ising chain has gamma = 1, got {gamma}"),
            ));
        }
        Ok(Self {
            kind,
            n,
            j,
            lambda,
            gamma,
        })
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of positive momenta, `(N-1)/2`.
    pub fn num_modes(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, self.n, self.j, lambda, self.gamma)
    }

    /// Changing `gamma` on an Ising spec promotes it to an XY spec.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(ChainKind::Xy, self.n, self.j, self.lambda, gamma)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.kind, n, self.j, self.lambda, self.gamma)
    }
}

/// What to do with a mode whose quasiparticle energy vanishes (XX chain with
/// `λ = cos q_k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaplessPolicy {
    /// Use the one-sided limit `λ → cos q_k⁺`: `cos θ = 1`, `sin θ = 0`.
    #[default]
    Limit,
    /// Fail with [`Error::GaplessMode`].
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: usize,
    /// `2πk/N`, radians.
    pub momentum: f64,
    pub eps: f64,
    pub xi: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub spec: ChainSpec,
    pub modes: Vec<Mode>,
}

impl Spectrum {
    /// Smallest quasiparticle energy among the retained modes.
    pub fn gap(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.xi)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_xi(&self) -> f64 {
        self.modes.iter().map(|m| m.xi).fold(0.0, f64::max)
    }
}

/// Ground-state mean `m = Σ_{k>0} cos θ_k` and variance `s2 = Σ_{k>0} sin² θ_k`
/// of the transverse moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundMoments {
    pub m: f64,
    pub s2: f64,
}

/// Positive momentum indices `1 ..= (N-1)/2` for an odd chain length.
pub fn momenta(n: usize) -> Result<Vec<usize>> {
    if n < 3 || n % 2 == 0 {
        return Err(invalid(
            "n",
            format!("N must be odd and at least 3, got {n}"),
        ));
    }
    Ok((1..=(n - 1) / 2).collect())
}

fn check_k(spec: &ChainSpec, k: usize) -> Result<()> {
    if k == 0 || k > spec.num_modes() {
        return Err(invalid(
            "k",
            format!("k must lie in 1..={}, got {k}", spec.num_modes()),
        ));
    }
    Ok(())
}

fn momentum(spec: &ChainSpec, k: usize) -> f64 {
    2.0 * PI * k as f64 / spec.n as f64
}

/// Returns `(ε_k, ξ_k)`.
pub fn dispersion(spec: &ChainSpec, k: usize) -> Result<(f64, f64)> {
    check_k(spec, k)?;
    Ok(dispersion_at(spec, momentum(spec, k)))
}

fn dispersion_at(spec: &ChainSpec, q: f64) -> (f64, f64) {
    let (sin_q, cos_q) = q.sin_cos();
    let eps = 2.0 * spec.j * (spec.lambda - cos_q);
    let d = cos_q - spec.lambda;
    let a = spec.gamma * sin_q;
    let xi = 2.0 * spec.j * (d * d + a * a).sqrt();
    (eps, xi)
}

/// Returns `(cos θ_k, sin θ_k)` with `sin θ_k ≥ 0`.
pub fn bogoliubov(spec: &ChainSpec, k: usize, policy: GaplessPolicy) -> Result<(f64, f64)> {
    check_k(spec, k)?;
    let m = mode_at(spec, k, policy)?;
    Ok((m.cos_theta, m.sin_theta))
}

fn mode_at(spec: &ChainSpec, k: usize, policy: GaplessPolicy) -> Result<Mode> {
    let q = momentum(spec, k);
    let (eps, xi) = dispersion_at(spec, q);
    let (cos_theta, sin_theta) = if xi <= GAPLESS_TOLERANCE * spec.j {
        match policy {
            GaplessPolicy::Limit => (1.0, 0.0),
            GaplessPolicy::Strict => {
                return Err(Error::GaplessMode {
                    k,
                    lambda: spec.lambda,
                })
            }
        }
    } else {
        (eps / xi, 2.0 * spec.j * spec.gamma * q.sin() / xi)
    };
    Ok(Mode {
        k,
        momentum: q,
        eps,
        xi,
        cos_theta,
        sin_theta,
    })
}

/// Full mode table under the default [`GaplessPolicy::Limit`].
pub fn spectrum(spec: &ChainSpec) -> Spectrum {
    spectrum_with(spec, GaplessPolicy::Limit).expect("limit policy never fails")
}

pub fn spectrum_with(spec: &ChainSpec, policy: GaplessPolicy) -> Result<Spectrum> {
    let modes = (1..=spec.num_modes())
        .map(|k| mode_at(spec, k, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { spec: *spec, modes })
}

pub fn ground_moments(spectrum: &Spectrum) -> GroundMoments {
    let (m, s2) = spectrum.modes.iter().fold((0.0, 0.0), |(m, s2), mode| {
        (m + mode.cos_theta, s2 + mode.sin_theta * mode.sin_theta)
    });
    GroundMoments { m, s2 }
}
