//! Landau-Zener transitions of a two-level system coupled to a transverse-field
//! Ising or XY spin chain.
//!
//! The crate is organised around four pieces:
//!
//! - [`spectrum`]: Bogoliubov quasiparticle spectrum of the chain and the
//!   ground-state moments of the transverse magnetisation `J^x`.
//! - [`lz`]: the closed-form flip probability `P = 1 - exp(-2π Γ² / ħv)` with
//!   `Γ² = (Δ/2 - g m)² + g² s²`.
//! - [`oracle`]: brute-force time evolution of the full qubit + chain
//!   Hamiltonian for small chains, used to cross-check the closed form.
//! - [`sweep`]: parameter grids, λ-derivatives and critical-point detection.
//!
//! Units are ħ = 1 and J = 1 unless a caller overrides them.
//!
//! ```
//! use lzchain_core::{ChainSpec, LzParams, chain_driven_probability};
//!
//! let chain = ChainSpec::ising(201, 1.0, 0.0).unwrap();
//! let params = LzParams::new(0.0, 50.0, 0.1, 1.0).unwrap();
//! let res = chain_driven_probability(&chain, &params).unwrap();
//! assert!((res.p_flip - 0.0615).abs() < 1e-3);
//! ```

pub mod error;
pub mod lz;
pub mod oracle;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use lz::{
    chain_driven_probability, chain_driven_probability_with, gamma_squared, lz_probability,
    standard_lz, LzParams, LzResult,
};
pub use spectrum::{
    bogoliubov, dispersion, ground_moments, momenta, spectrum, spectrum_with, ChainKind, ChainSpec,
    GaplessPolicy, GroundMoments, Mode, Spectrum, GAPLESS_TOLERANCE,
};
