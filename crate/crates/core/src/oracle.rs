//! Brute-force reference for the closed-form flip probability.
//!
//! The full Hamiltonian of qubit + chain,
//!
//! ```text
//! H(t) = (vt/2) σᶻ + (Δ/2) σˣ - J Σ_j [(1+γ)/2 σᶻ_j σᶻ_{j+1} + (1-γ)/2 σʸ_j σʸ_{j+1} + λ σˣ_j]
//!        - g σˣ Σ_j σˣ_j
//! ```
//!
//! is built densely in the `2^(N+1)` product basis. The qubit is the leading
//! tensor factor (`|↑⟩` first); chain site `j` is bit `N-1-j` of the chain
//! index, with a clear bit meaning `σᶻ_j = +1`. All matrices are real.
//!
//! Time evolution starts from `|↑⟩ ⊗ |chain ground state⟩` at `-T` and runs to
//! `+T`. Since `H(t) = H₀(t) + σˣ ⊗ W` with `H₀ = (vt/2) σᶻ + H_chain` diagonal
//! in the chain eigenbasis and `W = Δ/2 - g Jˣ` time independent, each step is
//! a symmetric split: exact phases for `H₀`, an exact rotation for `σˣ ⊗ W`,
//! composed to fourth order and wrapped in step-doubling error control. Every
//! factor is unitary, so the norm only drifts by rounding.
//!
//! By default the chain factor is restricted to the smallest subspace that
//! contains the ground state and is invariant under `H_chain` and `Jˣ`. The
//! restriction is exact (the full dynamics never leaves it) and keeps the
//! propagation cheap; [`OracleConfig::reduce`] switches it off.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::lz::LzParams;
use crate::spectrum::{spectrum, ChainSpec, GroundMoments};

/// Largest chain handled by the dense oracle (total dimension `2^14`).
pub const MAX_ORACLE_SPINS: usize = 13;

/// Ground-state degeneracy threshold, in units of `J`.
const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Relative residual below which a Krylov vector is treated as already spanned.
const KRYLOV_TOLERANCE: f64 = 1e-6;

/// `|Δp_flip|` between the `T` and `1.5T` windows accepted as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max |A - A†|` relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.matrix.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigen(self.matrix.clone()).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Half-width `T` of the sweep window `[-T, T]`, in units of `ħ/J`.
    pub t_span: f64,
    /// Target local error per accepted step.
    pub step_tolerance: f64,
    /// Largest tolerated `|‖ψ‖ - 1|`.
    pub norm_budget: f64,
    /// Propagate in the invariant Krylov subspace instead of the full chain space.
    pub reduce: bool,
    /// Also evolve back from `+T` to `-T` and report the return fidelity.
    pub round_trip: bool,
    pub max_steps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            t_span: 40.0,
            step_tolerance: 1e-10,
            norm_budget: 1e-8,
            reduce: true,
            round_trip: false,
            max_steps: 20_000_000,
        }
    }
}

impl OracleConfig {
    pub fn with_t_span(&self, t_span: f64) -> Self {
        Self {
            t_span,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_span.is_finite() && self.t_span > 0.0) {
            return Err(invalid(
                "t_span",
                format!("T must be positive, got {}", self.t_span),
            ));
        }
        if !(self.step_tolerance.is_finite() && self.step_tolerance > 0.0) {
            return Err(invalid(
                "step_tolerance",
                format!("must be positive, got {}", self.step_tolerance),
            ));
        }
        if !(self.norm_budget.is_finite() && self.norm_budget > 0.0) {
            return Err(invalid(
                "norm_budget",
                format!("must be positive, got {}", self.norm_budget),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub p_flip: f64,
    pub p_survive: f64,
    /// Largest `|‖ψ‖ - 1|` seen at any accepted step.
    pub norm_drift: f64,
    pub t_span_used: f64,
    /// `None` unless the run went through [`propagate_checked`].
    pub converged: Option<bool>,
    /// `|⟨ψ(-T)|ψ_back(-T)⟩|²` when a round trip was requested.
    pub round_trip_fidelity: Option<f64>,
    /// Weight of the chain ground state inside the surviving `|↑⟩` branch.
    pub survivor_ground_overlap: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub subspace_dim: usize,
    pub degenerate_ground: bool,
    /// `vT ≥ 20 max(Δ, max_k ξ_k)`.
    pub asymptotic_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub short: OracleResult,
    pub long: OracleResult,
    pub drift: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainGroundState {
    pub state: DVector<f64>,
    pub energy: f64,
    /// `E₁ - E₀` of the chain Hamiltonian.
    pub gap: f64,
    /// Set when the gap is below `1e-10 J`; the state is then the
    /// even-parity (`Πσˣ = +1`) member of the lowest multiplet.
    pub degenerate: bool,
}

fn check_cap(spec: &ChainSpec) -> Result<()> {
    if spec.n() > MAX_ORACLE_SPINS {
        return Err(Error::DimensionCap {
            n: spec.n(),
            max: MAX_ORACLE_SPINS,
        });
    }
    Ok(())
}

#[inline]
fn site_bit(n: usize, j: usize) -> usize {
    1 << (n - 1 - j)
}

/// Dense chain Hamiltonian on `2^N` states.
pub fn chain_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    check_cap(spec)?;
    let n = spec.n();
    let dim = 1usize << n;
    let zz = -spec.j() * 0.5 * (1.0 + spec.gamma());
    let yy = -spec.j() * 0.5 * (1.0 - spec.gamma());
    let field = -spec.j() * spec.lambda();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        for j in 0..n {
            let a = site_bit(n, j);
            let b = site_bit(n, (j + 1) % n);
            let aligned = (c & a == 0) == (c & b == 0);
            h[(c, c)] += if aligned { zz } else { -zz };
            if yy != 0.0 {
                h[(c ^ a ^ b, c)] += if aligned { -yy } else { yy };
            }
            h[(c ^ a, c)] += field;
        }
    }
    Ok(h)
}

/// `Jˣ = Σ_j σˣ_j` on `2^N` states.
pub fn transverse_moment(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut jx = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        for j in 0..n {
            jx[(c ^ site_bit(n, j), c)] += 1.0;
        }
    }
    jx
}

/// `W = Δ/2 - g Jˣ`, the operator multiplying `σˣ`.
fn flip_operator(n: usize, params: &LzParams) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::identity(dim, dim) * (0.5 * params.delta()) - transverse_moment(n) * params.g()
}

/// `H(t)` on the full `2^(N+1)` space.
pub fn build_hamiltonian(spec: &ChainSpec, params: &LzParams, t: f64) -> Result<DenseOperator> {
    let hc = chain_hamiltonian(spec)?;
    let w = flip_operator(spec.n(), params);
    let dc = hc.nrows();
    let bias = 0.5 * params.v() * t;
    let mut h = DMatrix::<f64>::zeros(2 * dc, 2 * dc);
    h.view_mut((0, 0), (dc, dc)).copy_from(&hc);
    h.view_mut((dc, dc), (dc, dc)).copy_from(&hc);
    h.view_mut((0, dc), (dc, dc)).copy_from(&w);
    h.view_mut((dc, 0), (dc, dc)).copy_from(&w);
    for i in 0..dc {
        h[(i, i)] += bias;
        h[(dc + i, dc + i)] -= bias;
    }
    Ok(DenseOperator { matrix: h })
}

/// Eigenvalues in ascending order with matching eigenvector columns.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

fn parity_flip(v: &DVector<f64>) -> DVector<f64> {
    let all = v.len() - 1;
    DVector::from_fn(v.len(), |c, _| v[c ^ all])
}

fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let pivot = v.iamax();
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
    v
}

pub fn chain_ground_state(spec: &ChainSpec) -> Result<ChainGroundState> {
    let (values, vectors) = sorted_eigen(chain_hamiltonian(spec)?);
    let energy = values[0];
    let gap = values[1] - values[0];
    let threshold = DEGENERACY_TOLERANCE * spec.j();
    let degenerate = gap < threshold;
    let state = if degenerate {
        // even-parity projection of each member of the lowest multiplet
        let best = values
            .iter()
            .take_while(|&&e| e - energy < threshold)
            .enumerate()
            .map(|(i, _)| {
                let v = vectors.column(i).into_owned();
                (&v + parity_flip(&v)) * 0.5
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("multiplet is non-empty");
        if best.norm() > 1e-8 {
            best.normalize()
        } else {
            vectors.column(0).into_owned()
        }
    } else {
        vectors.column(0).into_owned()
    };
    Ok(ChainGroundState {
        state: fix_sign(state),
        energy,
        gap,
        degenerate,
    })
}

/// `⟨Jˣ⟩` and `⟨(Jˣ)²⟩ - ⟨Jˣ⟩²` in the exact chain ground state.
pub fn exact_ground_moments(spec: &ChainSpec) -> Result<GroundMoments> {
    let gs = chain_ground_state(spec)?;
    let jx_psi = transverse_moment(spec.n()) * &gs.state;
    let m = gs.state.dot(&jx_psi);
    let second = jx_psi.norm_squared();
    Ok(GroundMoments {
        m,
        s2: (second - m * m).max(0.0),
    })
}

/// Orthonormal basis of the smallest subspace containing `seed` and invariant
/// under every operator in `ops`.
fn invariant_subspace(seed: &DVector<f64>, ops: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut basis = vec![seed.normalize()];
    let mut next = 0;
    while next < basis.len() {
        for op in ops {
            let mut w = *op * &basis[next];
            let scale = w.norm();
            if scale == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let overlap = b.dot(&w);
                    w.axpy(-overlap, b, 1.0);
                }
            }
            let residual = w.norm();
            if residual > KRYLOV_TOLERANCE * scale {
                basis.push(w / residual);
            }
        }
        next += 1;
    }
    DMatrix::from_columns(&basis)
}

/// Qubit + chain amplitudes in the working chain basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelState {
    pub up: Vec<C64>,
    pub down: Vec<C64>,
}

impl TwoLevelState {
    pub fn norm(&self) -> f64 {
        (self.weight_up() + self.weight_down()).sqrt()
    }

    pub fn weight_up(&self) -> f64 {
        self.up.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn weight_down(&self) -> f64 {
        self.down.iter().map(|a| a.norm_sqr()).sum()
    }

    fn distance(&self, other: &Self) -> f64 {
        self.up
            .iter()
            .zip(&other.up)
            .chain(self.down.iter().zip(&other.down))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.up
            .iter()
            .zip(&other.up)
            .chain(self.down.iter().zip(&other.down))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolveStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_norm_drift: f64,
}

/// Split-step propagator for `H(t) = (vt/2) σᶻ + H_chain + σˣ ⊗ W`.
#[derive(Debug, Clone)]
pub struct Propagator {
    v: f64,
    hbar: f64,
    /// Chain energies of the working basis vectors.
    energies: Vec<f64>,
    /// Eigenvalues of `W` in the working subspace.
    flip_values: Vec<f64>,
    /// Eigenvectors of `W`, as columns in working-basis coordinates.
    flip_vectors: DMatrix<f64>,
    /// Working basis (chain eigenvectors) as columns in the `2^N` product basis.
    basis: DMatrix<f64>,
    ground: ChainGroundState,
}

impl Propagator {
    pub fn new(spec: &ChainSpec, params: &LzParams, reduce: bool) -> Result<Self> {
        let hc = chain_hamiltonian(spec)?;
        let ground = chain_ground_state(spec)?;
        let w = flip_operator(spec.n(), params);
        let (energies, basis) = if reduce {
            let q = invariant_subspace(&ground.state, &[&hc, &w]);
            let (e, u) = sorted_eigen(q.transpose() * &hc * &q);
            (e, q * u)
        } else {
            sorted_eigen(hc)
        };
        let (flip_values, flip_vectors) = sorted_eigen(basis.transpose() * &w * &basis);
        Ok(Self {
            v: params.v(),
            hbar: params.hbar(),
            energies,
            flip_values,
            flip_vectors,
            basis,
            ground,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground(&self) -> &ChainGroundState {
        &self.ground
    }

    fn to_working(&self, chain: &DVector<f64>) -> Vec<C64> {
        (self.basis.transpose() * chain)
            .iter()
            .map(|&x| C64::new(x, 0.0))
            .collect()
    }

    /// `|↑⟩ ⊗ |chain ground state⟩`.
    pub fn initial_state(&self) -> TwoLevelState {
        TwoLevelState {
            up: self.to_working(&self.ground.state),
            down: vec![C64::new(0.0, 0.0); self.dim()],
        }
    }

    /// Amplitudes in the `2^(N+1)` product basis of [`build_hamiltonian`].
    pub fn embed(&self, state: &TwoLevelState) -> Vec<C64> {
        let lift = |amps: &[C64]| -> Vec<C64> {
            (0..self.basis.nrows())
                .map(|r| {
                    amps.iter()
                        .enumerate()
                        .map(|(c, a)| a * self.basis[(r, c)])
                        .sum()
                })
                .collect()
        };
        let mut out = lift(&state.up);
        out.extend(lift(&state.down));
        out
    }

    /// `|⟨0|χ_↑⟩|²`, weight of the chain ground state in the `|↑⟩` branch.
    pub fn ground_weight_up(&self, state: &TwoLevelState) -> f64 {
        self.to_working(&self.ground.state)
            .iter()
            .zip(&state.up)
            .map(|(g, a)| g.conj() * a)
            .sum::<C64>()
            .norm_sqr()
    }

    /// Exact evolution under `H₀` from `t0` to `t1`.
    fn drift(&self, s: &mut TwoLevelState, t0: f64, t1: f64) {
        let dt = t1 - t0;
        let sweep = 0.25 * self.v * dt * (t1 + t0);
        for (i, &e) in self.energies.iter().enumerate() {
            let base = e * dt;
            s.up[i] *= C64::from_polar(1.0, -(base + sweep) / self.hbar);
            s.down[i] *= C64::from_polar(1.0, -(base - sweep) / self.hbar);
        }
    }

    /// Exact evolution under `σˣ ⊗ W` for a duration `h`.
    fn kick(&self, s: &mut TwoLevelState, h: f64) {
        let d = self.dim();
        let r = &self.flip_vectors;
        let mut a = vec![C64::new(0.0, 0.0); d];
        let mut b = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            let col = r.column(j);
            let mut sa = C64::new(0.0, 0.0);
            let mut sb = C64::new(0.0, 0.0);
            for i in 0..d {
                sa += s.up[i] * col[i];
                sb += s.down[i] * col[i];
            }
            let (sin, cos) = (self.flip_values[j] * h / self.hbar).sin_cos();
            let mi_sin = C64::new(0.0, -sin);
            a[j] = sa * cos + sb * mi_sin;
            b[j] = sa * mi_sin + sb * cos;
        }
        for i in 0..d {
            let mut su = C64::new(0.0, 0.0);
            let mut sd = C64::new(0.0, 0.0);
            for j in 0..d {
                let rij = r[(i, j)];
                su += a[j] * rij;
                sd += b[j] * rij;
            }
            s.up[i] = su;
            s.down[i] = sd;
        }
    }

    fn strang(&self, s: &mut TwoLevelState, t: f64, h: f64) {
        let mid = t + 0.5 * h;
        self.drift(s, t, mid);
        self.kick(s, h);
        self.drift(s, mid, t + h);
    }

    /// Fourth-order symmetric composition of three Strang steps.
    fn step4(&self, s: &mut TwoLevelState, t: f64, h: f64) {
        let outer = 1.0 / (2.0 - 2f64.cbrt());
        let inner = 1.0 - 2.0 * outer;
        self.strang(s, t, outer * h);
        self.strang(s, t + outer * h, inner * h);
        self.strang(s, t + (outer + inner) * h, outer * h);
    }

    /// Adaptive evolution from `t0` to `t1` (either direction).
    pub fn evolve(
        &self,
        state: &mut TwoLevelState,
        t0: f64,
        t1: f64,
        tolerance: f64,
        max_steps: usize,
    ) -> Result<EvolveStats> {
        let mut stats = EvolveStats::default();
        if t0 == t1 {
            return Ok(stats);
        }
        let direction = (t1 - t0).signum();
        let mut t = t0;
        let mut h = direction * (t1 - t0).abs().min(1e-4);
        while t != t1 {
            if stats.steps + stats.rejected >= max_steps {
                return Err(Error::StepLimit(max_steps));
            }
            let last = (t1 - t).abs() <= h.abs();
            if last {
                h = t1 - t;
            }
            let mut coarse = state.clone();
            self.step4(&mut coarse, t, h);
            let mut fine = state.clone();
            self.step4(&mut fine, t, 0.5 * h);
            self.step4(&mut fine, t + 0.5 * h, 0.5 * h);
            let err = coarse.distance(&fine) / 15.0;
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * (tolerance / err).powf(0.2)).clamp(0.2, 4.0)
            };
            if err <= tolerance {
                *state = fine;
                t = if last { t1 } else { t + h };
                stats.steps += 1;
                stats.max_norm_drift = stats.max_norm_drift.max((state.norm() - 1.0).abs());
            } else {
                stats.rejected += 1;
            }
            h *= factor;
        }
        Ok(stats)
    }
}

fn run(spec: &ChainSpec, params: &LzParams, config: &OracleConfig) -> Result<OracleResult> {
    config.validate()?;
    let prop = Propagator::new(spec, params, config.reduce)?;
    let t = config.t_span;
    let initial = prop.initial_state();
    let mut state = initial.clone();
    let forward = prop.evolve(&mut state, -t, t, config.step_tolerance, config.max_steps)?;
    let p_survive = state.weight_up();
    let p_flip = state.weight_down();
    let survivor_ground_overlap = if p_survive > 0.0 {
        prop.ground_weight_up(&state) / p_survive
    } else {
        0.0
    };
    let mut norm_drift = forward.max_norm_drift;
    let mut steps = forward.steps;
    let mut rejected = forward.rejected;
    let round_trip_fidelity = if config.round_trip {
        let back = prop.evolve(&mut state, t, -t, config.step_tolerance, config.max_steps)?;
        norm_drift = norm_drift.max(back.max_norm_drift);
        steps += back.steps;
        rejected += back.rejected;
        Some(initial.inner(&state).norm_sqr())
    } else {
        None
    };
    if norm_drift > config.norm_budget {
        return Err(Error::NormBudgetExceeded {
            drift: norm_drift,
            budget: config.norm_budget,
        });
    }
    let scale = params.delta().max(spectrum(spec).max_xi());
    Ok(OracleResult {
        p_flip,
        p_survive,
        norm_drift,
        t_span_used: t,
        converged: None,
        round_trip_fidelity,
        survivor_ground_overlap,
        steps,
        rejected_steps: rejected,
        subspace_dim: prop.dim(),
        degenerate_ground: prop.ground().degenerate,
        asymptotic_window: params.v() * t >= 20.0 * scale,
    })
}

/// One sweep over `[-T, T]`.
pub fn propagate(
    spec: &ChainSpec,
    params: &LzParams,
    config: &OracleConfig,
) -> Result<OracleResult> {
    run(spec, params, config)
}

/// Runs the sweep at `T` and `1.5 T` and compares the flip probabilities.
pub fn check_convergence(
    spec: &ChainSpec,
    params: &LzParams,
    config: &OracleConfig,
) -> Result<ConvergenceReport> {
    let short = run(spec, params, config)?;
    let long = run(spec, params, &config.with_t_span(1.5 * config.t_span))?;
    let drift = (short.p_flip - long.p_flip).abs();
    Ok(ConvergenceReport {
        short,
        long,
        drift,
        converged: drift < CONVERGENCE_THRESHOLD,
    })
}

/// [`propagate`] plus the convergence check; fails with [`Error::NonConvergent`].
pub fn propagate_checked(
    spec: &ChainSpec,
    params: &LzParams,
    config: &OracleConfig,
) -> Result<OracleResult> {
    let report = check_convergence(spec, params, config)?;
    if !report.converged {
        return Err(Error::NonConvergent {
            t_short: report.short.t_span_used,
            p_short: report.short.p_flip,
            t_long: report.long.t_span_used,
            p_long: report.long.p_flip,
        });
    }
    Ok(OracleResult {
        converged: Some(true),
        ..report.short
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lz::standard_lz;
    use crate::spectrum::{momenta, ChainKind};
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::PI;

    fn lz(delta: f64, v: f64, g: f64) -> LzParams {
        LzParams::new(delta, v, g, 1.0).unwrap()
    }

    #[test]
    fn tunnelling_only_hamiltonian() {
        let spec = ChainSpec::xy(3, 1.0, 0.0, 1.0).unwrap();
        // J is strictly positive, so check the bare qubit part by subtraction
        let h = build_hamiltonian(&spec, &lz(2.0, 1.0, 0.0), 0.0).unwrap();
        let hc = chain_hamiltonian(&spec).unwrap();
        let mut bare = h.matrix().clone();
        for s in 0..2 {
            let mut block = bare.view_mut((8 * s, 8 * s), (8, 8));
            block -= &hc;
        }
        let expected = {
            let mut m = DMatrix::<f64>::zeros(16, 16);
            for i in 0..8 {
                m[(i, 8 + i)] = 1.0;
                m[(8 + i, i)] = 1.0;
            }
            m
        };
        assert_eq!(bare, expected);
        let ev = DenseOperator { matrix: bare }.eigenvalues();
        assert!(ev[..8].iter().all(|e| (e + 1.0).abs() < 1e-12));
        assert!(ev[8..].iter().all(|e| (e - 1.0).abs() < 1e-12));
    }

    /// Hand enumeration of `-Σ σᶻσᶻ` on three periodic spins: all-aligned
    /// configurations give -3, the six others give +1.
    #[test]
    fn classical_ring_spectrum() {
        let spec = ChainSpec::ising(3, 1.0, 0.0).unwrap();
        let hc = chain_hamiltonian(&spec).unwrap();
        for c in 0..8usize {
            let expected = if c == 0 || c == 7 { -3.0 } else { 1.0 };
            assert_eq!(hc[(c, c)], expected);
        }
        assert_eq!(
            hc.clone() - DMatrix::from_diagonal(&hc.diagonal()),
            DMatrix::zeros(8, 8)
        );
        let h = build_hamiltonian(&spec, &lz(0.0, 1.0, 0.0), 0.0).unwrap();
        let ev = h.eigenvalues();
        assert_eq!(ev.len(), 16);
        assert!(ev[..4].iter().all(|e| (e + 3.0).abs() < 1e-12));
        assert!(ev[4..].iter().all(|e| (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let gamma = rng.random_range(0.0..=1.0);
            let spec = ChainSpec::xy(
                5,
                rng.random_range(0.1..3.0),
                rng.random_range(0.0..3.0),
                gamma,
            )
            .unwrap();
            let p = lz(
                rng.random_range(0.0..20.0),
                rng.random_range(1.0..100.0),
                rng.random_range(0.0..1.0),
            );
            let h = build_hamiltonian(&spec, &p, rng.random_range(-50.0..50.0)).unwrap();
            assert_eq!(h.dim(), 64);
            assert!(h.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn dimension_cap() {
        let spec = ChainSpec::ising(15, 1.0, 1.0).unwrap();
        assert_eq!(
            chain_hamiltonian(&spec),
            Err(Error::DimensionCap { n: 15, max: 13 })
        );
        assert!(build_hamiltonian(&spec, &lz(1.0, 1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn yy_term_matches_kronecker_product() {
        // (1-γ)/2 σʸσʸ on a 3-ring, compared against explicit complex Kronecker products.
        use num_complex::Complex64 as C;
        let spec = ChainSpec::xy(3, 1.0, 0.0, 0.0).unwrap();
        let hc = chain_hamiltonian(&spec).unwrap();
        let i = C::new(0.0, 1.0);
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        let sy = DMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]);
        let sz = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);
        let id = DMatrix::<C>::identity(2, 2);
        let site = |op: &DMatrix<C>, j: usize| {
            let mut m = DMatrix::<C>::identity(1, 1);
            for s in 0..3 {
                m = m.kronecker(if s == j { op } else { &id });
            }
            m
        };
        let mut expected = DMatrix::<C>::zeros(8, 8);
        for j in 0..3 {
            let k = (j + 1) % 3;
            expected -=
                (site(&sz, j) * site(&sz, k) + site(&sy, j) * site(&sy, k)) * C::new(0.5, 0.0);
        }
        for r in 0..8 {
            for c in 0..8 {
                assert!(expected[(r, c)].im.abs() < 1e-15);
                assert!((expected[(r, c)].re - hc[(r, c)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn large_field_ground_state_is_x_polarised() {
        let spec = ChainSpec::ising(3, 1.0, 10.0).unwrap();
        let gs = chain_ground_state(&spec).unwrap();
        assert!(!gs.degenerate);
        // |+++⟩ has equal amplitude 1/√8 on every configuration
        let overlap: f64 = gs.state.iter().sum::<f64>() / 8f64.sqrt();
        assert!(overlap * overlap > 0.99, "{overlap}");
    }

    #[test]
    fn zero_field_ground_state_is_symmetric_cat() {
        let spec = ChainSpec::ising(3, 1.0, 0.0).unwrap();
        let gs = chain_ground_state(&spec).unwrap();
        assert!(gs.degenerate);
        assert!((gs.energy + 3.0).abs() < 1e-12);
        let r = 0.5f64.sqrt();
        assert!((gs.state[0] - r).abs() < 1e-12);
        assert!((gs.state[7] - r).abs() < 1e-12);
        assert!(gs.state.iter().skip(1).take(6).all(|x| x.abs() < 1e-12));
    }

    /// Free-fermion ground energy of the even-parity sector, where the periodic
    /// spin chain maps to antiperiodic fermions with momenta 2π(k+1/2)/N.
    fn even_sector(spec: &ChainSpec) -> (f64, f64, f64) {
        let n = spec.n();
        let (j, l, g) = (spec.j(), spec.lambda(), spec.gamma());
        let (mut energy, mut m, mut s2) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let q = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            let xi = 2.0 * j * ((q.cos() - l).powi(2) + (g * q.sin()).powi(2)).sqrt();
            energy -= 0.5 * xi;
            let c = 2.0 * j * (l - q.cos()) / xi;
            m += c;
            // each ±q pair contributes 4 sin²θ; per momentum that is 2(1 - cos²θ)
            s2 += 2.0 * (1.0 - c * c);
        }
        (energy, m, s2)
    }

    #[test]
    fn ground_state_matches_free_fermions() {
        for n in [3, 5, 7] {
            for (kind, gamma) in [(ChainKind::Ising, 1.0), (ChainKind::Xy, 0.6)] {
                let spec = ChainSpec::new(kind, n, 1.0, 2.0, gamma).unwrap();
                let (energy, m, s2) = even_sector(&spec);
                let gs = chain_ground_state(&spec).unwrap();
                assert!((gs.energy - energy).abs() < 1e-9 * energy.abs(), "n={n}");
                let exact = exact_ground_moments(&spec).unwrap();
                assert!((exact.m - m).abs() < 1e-9, "n={n}: {} vs {m}", exact.m);
                assert!((exact.s2 - s2).abs() < 1e-9, "n={n}: {} vs {s2}", exact.s2);
            }
        }
    }

    /// The closed-form sums over integer `k > 0` and the exact ground-state
    /// moments are related by `m_exact ≈ 2 m + 1` and `s2_exact ≈ 4 s2` up to
    /// the half-integer momentum shift, never by equality.
    #[test]
    fn closed_form_moments_are_half_the_physical_ones() {
        let spec = ChainSpec::ising(7, 1.0, 2.0).unwrap();
        let formula = crate::spectrum::ground_moments(&spectrum(&spec));
        let exact = exact_ground_moments(&spec).unwrap();
        assert!((exact.m - (2.0 * formula.m + 1.0)).abs() / exact.m < 0.02);
        assert!((exact.s2 - 4.0 * formula.s2).abs() / exact.s2 < 0.1);
        assert!((exact.m - formula.m).abs() > 1.0);
    }

    #[test]
    fn ground_energy_versus_integer_momentum_sum() {
        let spec = ChainSpec::ising(7, 1.0, 2.0).unwrap();
        let gs = chain_ground_state(&spec).unwrap();
        let sum_xi: f64 = momenta(7)
            .unwrap()
            .iter()
            .map(|&k| crate::spectrum::dispersion(&spec, k).unwrap().1)
            .sum();
        // the k = 0 mode (ξ₀/2 = J|λ - 1|) closes the integer-momentum sum;
        // what remains is the parity-sector offset
        let integer = -sum_xi - spec.j() * (spec.lambda() - 1.0);
        assert!((gs.energy - integer).abs() / gs.energy.abs() < 1e-3);
    }

    #[test]
    fn reduced_basis_is_invariant_and_small() {
        // one occupied-or-empty choice per (k, -k) pair: 2^((N-1)/2)
        for (n, lambda, dim) in [(5, 1.5, 4), (7, 2.0, 8), (7, 3.0, 8)] {
            let spec = ChainSpec::ising(n, 1.0, lambda).unwrap();
            let p = lz(5.0, 50.0, 0.05);
            let prop = Propagator::new(&spec, &p, true).unwrap();
            assert_eq!(prop.dim(), dim, "N={n} lambda={lambda}");
            let b = &prop.basis;
            let hc = chain_hamiltonian(&spec).unwrap();
            let w = flip_operator(n, &p);
            for op in [&hc, &w] {
                let image = op * b;
                let projected = b * (b.transpose() * &image);
                assert!((image - projected).amax() < 1e-9);
            }
        }
    }

    /// Classic RK4 on the dense `2^(N+1)` Hamiltonian, kept independent of the
    /// split-step machinery.
    fn rk4_dense(
        spec: &ChainSpec,
        p: &LzParams,
        psi: &[C64],
        t0: f64,
        t1: f64,
        steps: usize,
    ) -> Vec<C64> {
        let dim = psi.len();
        let h0 = build_hamiltonian(spec, p, 0.0).unwrap();
        let sz_diag: Vec<f64> = (0..dim)
            .map(|i| {
                if i < dim / 2 {
                    0.5 * p.v()
                } else {
                    -0.5 * p.v()
                }
            })
            .collect();
        let deriv = |t: f64, y: &[C64]| -> Vec<C64> {
            (0..dim)
                .map(|r| {
                    let mut acc = C64::new(sz_diag[r] * t, 0.0) * y[r];
                    for c in 0..dim {
                        let hrc = h0.matrix()[(r, c)];
                        if hrc != 0.0 {
                            acc += y[c] * hrc;
                        }
                    }
                    acc * C64::new(0.0, -1.0)
                })
                .collect()
        };
        let h = (t1 - t0) / steps as f64;
        let mut y = psi.to_vec();
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            let k1 = deriv(t, &y);
            let y2: Vec<C64> = y.iter().zip(&k1).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k2 = deriv(t + 0.5 * h, &y2);
            let y3: Vec<C64> = y.iter().zip(&k2).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k3 = deriv(t + 0.5 * h, &y3);
            let y4: Vec<C64> = y.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
            let k4 = deriv(t + h, &y4);
            for i in 0..dim {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        y
    }

    #[test]
    fn split_step_agrees_with_dense_rk4() {
        let spec = ChainSpec::xy(3, 1.0, 1.3, 0.7).unwrap();
        let p = lz(1.5, 4.0, 0.3);
        for reduce in [false, true] {
            let prop = Propagator::new(&spec, &p, reduce).unwrap();
            let mut s = prop.initial_state();
            let psi0 = prop.embed(&s);
            prop.evolve(&mut s, -2.0, 2.0, 1e-12, 10_000_000).unwrap();
            let ours = prop.embed(&s);
            let reference = rk4_dense(&spec, &p, &psi0, -2.0, 2.0, 40_000);
            let err: f64 = ours
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-7, "reduce={reduce}: {err}");
        }
    }

    #[test]
    fn reduced_and_full_propagation_agree() {
        let spec = ChainSpec::ising(5, 1.0, 1.5).unwrap();
        let p = lz(2.0, 50.0, 0.05);
        let cfg = OracleConfig {
            t_span: 10.0,
            step_tolerance: 1e-9,
            ..OracleConfig::default()
        };
        let reduced = propagate(&spec, &p, &cfg).unwrap();
        let full = propagate(
            &spec,
            &p,
            &OracleConfig {
                reduce: false,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(full.subspace_dim, 32);
        assert!(reduced.subspace_dim < 32);
        assert!((reduced.p_flip - full.p_flip).abs() < 1e-6);
    }

    #[test]
    fn decoupled_without_tunnelling_never_flips() {
        let spec = ChainSpec::ising(5, 1.0, 2.0).unwrap();
        let r = propagate(&spec, &lz(0.0, 50.0, 0.0), &OracleConfig::default()).unwrap();
        assert!(r.p_flip < 1e-10);
        assert!(r.norm_drift < 1e-8);
        let rep = check_convergence(&spec, &lz(0.0, 50.0, 0.0), &OracleConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.short.p_flip < 1e-10 && rep.long.p_flip < 1e-10);
    }

    #[test]
    fn bare_crossing_matches_standard_formula() {
        let spec = ChainSpec::ising(3, 1.0, 2.0).unwrap();
        let p = lz(5.0, 50.0, 0.0);
        let r = propagate(&spec, &p, &OracleConfig::default()).unwrap();
        assert!(
            (r.p_flip - standard_lz(5.0, 50.0, 1.0)).abs() < 0.01,
            "{}",
            r.p_flip
        );
        assert!((r.p_flip + r.p_survive - 1.0).abs() < 1e-8);
        assert!(r.asymptotic_window);
    }

    #[test]
    fn decoupled_flip_is_chain_independent() {
        let p = lz(3.0, 50.0, 0.0);
        let cfg = OracleConfig::default();
        let reference = propagate(&ChainSpec::ising(3, 1.0, 2.0).unwrap(), &p, &cfg)
            .unwrap()
            .p_flip;
        for spec in [
            ChainSpec::ising(5, 1.0, 0.7).unwrap(),
            ChainSpec::xy(5, 1.0, 1.4, 0.3).unwrap(),
            ChainSpec::xy(7, 1.0, 3.0, 0.0).unwrap(),
        ] {
            let r = propagate(&spec, &p, &cfg).unwrap();
            assert!((r.p_flip - reference).abs() < 1e-6, "{spec:?}");
        }
    }

    #[test]
    fn convergence_windows() {
        let spec = ChainSpec::ising(3, 1.0, 2.0).unwrap();
        let p = lz(5.0, 50.0, 0.0);
        let narrow =
            check_convergence(&spec, &p, &OracleConfig::default().with_t_span(10.0)).unwrap();
        assert_eq!(narrow.short.t_span_used, 10.0);
        assert_eq!(narrow.long.t_span_used, 15.0);
        assert_eq!(
            narrow.drift,
            (narrow.short.p_flip - narrow.long.p_flip).abs()
        );
        let wide = check_convergence(&spec, &p, &OracleConfig::default()).unwrap();
        assert!(wide.converged, "drift {}", wide.drift);
        assert!(wide.drift < 5e-3);
    }

    #[test]
    fn tiny_window_fails_the_check() {
        let spec = ChainSpec::ising(3, 1.0, 2.0).unwrap();
        let p = lz(5.0, 50.0, 0.0);
        let err =
            propagate_checked(&spec, &p, &OracleConfig::default().with_t_span(0.05)).unwrap_err();
        assert!(matches!(err, Error::NonConvergent { .. }));
    }

    #[test]
    fn round_trip_returns_home() {
        let spec = ChainSpec::ising(5, 1.0, 2.0).unwrap();
        let cfg = OracleConfig {
            round_trip: true,
            ..OracleConfig::default()
        };
        let r = propagate(&spec, &lz(2.0, 50.0, 0.05), &cfg).unwrap();
        let f = r.round_trip_fidelity.unwrap();
        assert!(f > 1.0 - 1e-6, "{f}");
        assert!(r.norm_drift < 1e-8);
    }

    #[test]
    fn survivor_stays_in_ground_state_at_weak_coupling() {
        let spec = ChainSpec::ising(5, 1.0, 2.0).unwrap();
        let r = propagate(&spec, &lz(2.0, 50.0, 0.02), &OracleConfig::default()).unwrap();
        assert!(
            r.survivor_ground_overlap > 0.99,
            "{}",
            r.survivor_ground_overlap
        );
    }

    #[test]
    fn config_validation() {
        let spec = ChainSpec::ising(3, 1.0, 2.0).unwrap();
        let p = lz(1.0, 50.0, 0.0);
        for cfg in [
            OracleConfig::default().with_t_span(0.0),
            OracleConfig {
                step_tolerance: -1.0,
                ..OracleConfig::default()
            },
            OracleConfig {
                norm_budget: 0.0,
                ..OracleConfig::default()
            },
        ] {
            assert!(matches!(
                propagate(&spec, &p, &cfg),
                Err(Error::InvalidParameter { .. })
            ));
        }
    }
}
