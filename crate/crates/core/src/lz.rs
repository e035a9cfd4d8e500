//! Closed-form Landau-Zener flip probability for the chain-coupled qubit.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::spectrum::{ground_moments, spectrum_with, ChainSpec, GaplessPolicy, GroundMoments};

/// Exponents below this underflow `exp`; the survival probability is set to 0.
const EXP_FLOOR: f64 = -745.0;

/// Sweep parameters: tunnelling `delta`, sweep velocity `v`, qubit-chain
/// coupling `g` and `hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzParams {
    delta: f64,
    v: f64,
    g: f64,
    hbar: f64,
}

impl LzParams {
    pub fn new(delta: f64, v: f64, g: f64, hbar: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(invalid(
                "delta",
                format!("delta must be non-negative, got {delta}"),
            ));
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid("v", format!("v must be positive, got {v}")));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(invalid("g", format!("g must be non-negative, got {g}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(invalid(
                "hbar",
                format!("hbar must be positive, got {hbar}"),
            ));
        }
        Ok(Self { delta, v, g, hbar })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(delta, self.v, self.g, self.hbar)
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.delta, self.v, g, self.hbar)
    }

    pub fn with_v(&self, v: f64) -> Result<Self> {
        Self::new(self.delta, v, self.g, self.hbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzResult {
    pub gamma2: f64,
    pub p_flip: f64,
    pub p_survive: f64,
}

/// `Γ² = (Δ/2 - g m)² + g² s2`.
pub fn gamma_squared(moments: &GroundMoments, params: &LzParams) -> f64 {
    let shift = 0.5 * params.delta - params.g * moments.m;
    shift * shift + params.g * params.g * moments.s2
}

/// `P_{↑→↑} = exp(-2π Γ² / ħv)` and its complement.
pub fn lz_probability(gamma2: f64, params: &LzParams) -> Result<LzResult> {
    if gamma2.is_nan() || gamma2 < 0.0 {
        return Err(Error::NegativeGamma2(gamma2));
    }
    let exponent = -2.0 * PI * gamma2 / (params.hbar * params.v);
    Ok(from_exponent(gamma2, exponent))
}

fn from_exponent(gamma2: f64, exponent: f64) -> LzResult {
    let (p_survive, p_flip) = if exponent < EXP_FLOOR {
        (0.0, 1.0)
    } else {
        (exponent.exp(), -exponent.exp_m1())
    };
    LzResult {
        gamma2,
        p_flip,
        p_survive,
    }
}

/// Bare two-level result `1 - exp(-πΔ² / 2ħv)`.
pub fn standard_lz(delta: f64, v: f64, hbar: f64) -> f64 {
    let exponent = -PI * delta * delta / (2.0 * hbar * v);
    if exponent < EXP_FLOOR {
        1.0
    } else {
        -exponent.exp_m1()
    }
}

pub fn chain_driven_probability(spec: &ChainSpec, params: &LzParams) -> Result<LzResult> {
    chain_driven_probability_with(spec, params, GaplessPolicy::Limit)
}

pub fn chain_driven_probability_with(
    spec: &ChainSpec,
    params: &LzParams,
    policy: GaplessPolicy,
) -> Result<LzResult> {
    let moments = ground_moments(&spectrum_with(spec, policy)?);
    lz_probability(gamma_squared(&moments, params), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectrum;
    use proptest::prelude::*;

    fn params(delta: f64, v: f64, g: f64) -> LzParams {
        LzParams::new(delta, v, g, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(LzParams::new(-1.0, 50.0, 0.1, 1.0).is_err());
        assert!(LzParams::new(1.0, 0.0, 0.1, 1.0).is_err());
        assert!(LzParams::new(1.0, 50.0, -0.1, 1.0).is_err());
        assert!(LzParams::new(1.0, 50.0, 0.1, 0.0).is_err());
        assert!(LzParams::new(1.0, f64::NAN, 0.1, 1.0).is_err());
    }

    #[test]
    fn gamma_squared_examples() {
        let any = GroundMoments { m: 17.3, s2: 4.2 };
        assert_eq!(gamma_squared(&any, &params(5.0, 50.0, 0.0)), 6.25);
        assert_eq!(gamma_squared(&any, &params(0.0, 50.0, 0.0)), 0.0);

        let gm = ground_moments(&spectrum(&ChainSpec::ising(201, 1.0, 0.0).unwrap()));
        let g2 = gamma_squared(&gm, &params(0.0, 50.0, 0.1));
        assert!((g2 - 0.5050).abs() < 1e-12, "{g2}");
    }

    #[test]
    fn probability_limits() {
        let p = params(5.0, 50.0, 0.0);
        assert_eq!(lz_probability(0.0, &p).unwrap().p_flip, 0.0);
        let r = lz_probability(1e6, &p).unwrap();
        assert!((r.p_flip - 1.0).abs() < 1e-12);
        assert_eq!(r.p_survive, 0.0);
        assert!(lz_probability(-1e-3, &p).is_err());
        assert!(lz_probability(f64::NAN, &p).is_err());
    }

    #[test]
    fn bare_crossing_value() {
        let r = lz_probability(6.25, &params(5.0, 50.0, 0.0)).unwrap();
        let expected = 1.0 - (-0.25 * PI).exp();
        assert!((r.p_flip - expected).abs() < 1e-15);
        assert!((r.p_flip - 0.54406).abs() < 1e-5);
    }

    #[test]
    fn standard_lz_examples() {
        assert_eq!(standard_lz(0.0, 50.0, 1.0), 0.0);
        assert!((standard_lz(5.0, 50.0, 1.0) - 0.54406).abs() < 1e-5);
        let p = standard_lz(20.0, 50.0, 1.0);
        assert!((p - (1.0 - (-4.0 * PI).exp())).abs() < 1e-15);
        assert!((p - 0.9999965).abs() < 1e-7);
    }

    #[test]
    fn chain_driven_examples() {
        let spec = ChainSpec::ising(201, 1.0, 0.0).unwrap();
        assert_eq!(
            chain_driven_probability(&spec, &params(0.0, 50.0, 0.0))
                .unwrap()
                .p_flip,
            0.0
        );
        let r = chain_driven_probability(&spec, &params(5.0, 50.0, 0.0)).unwrap();
        assert!((r.p_flip - standard_lz(5.0, 50.0, 1.0)).abs() < 1e-15);

        let r = chain_driven_probability(&spec, &params(0.0, 50.0, 0.1)).unwrap();
        let expected = 1.0 - (-2.0 * PI * 0.5050 / 50.0).exp();
        assert!((r.p_flip - expected).abs() < 1e-12);
        assert!((r.p_flip - 0.0615).abs() < 1e-4);
    }

    #[test]
    fn strict_policy_propagates() {
        let lambda = (2.0 * PI / 7.0).cos();
        let spec = ChainSpec::xy(7, 1.0, lambda, 0.0).unwrap();
        let p = params(1.0, 50.0, 0.1);
        assert!(chain_driven_probability(&spec, &p).is_ok());
        assert!(matches!(
            chain_driven_probability_with(&spec, &p, GaplessPolicy::Strict),
            Err(Error::GaplessMode { k: 1, .. })
        ));
    }

    fn draw() -> impl Strategy<Value = (ChainSpec, LzParams)> {
        (
            1usize..=100,
            0.0f64..3.0,
            0.0f64..=1.0,
            0.0f64..20.0,
            1.0f64..200.0,
            0.0f64..1.0,
        )
            .prop_map(|(h, l, gm, d, v, g)| {
                (
                    ChainSpec::xy(2 * h + 1, 1.0, l, gm).unwrap(),
                    LzParams::new(d, v, g, 1.0).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn probabilities_are_probabilities((spec, p) in draw()) {
            let r = chain_driven_probability(&spec, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_flip));
            prop_assert!((0.0..=1.0).contains(&r.p_survive));
            prop_assert!((r.p_flip + r.p_survive - 1.0).abs() <= 1e-15);
            let gm = ground_moments(&spectrum(&spec));
            prop_assert!(r.gamma2 >= p.g() * p.g() * gm.s2);
        }

        #[test]
        fn decoupled_chain_reduces_to_bare((spec, p) in draw()) {
            let p = p.with_g(0.0).unwrap();
            let r = chain_driven_probability(&spec, &p).unwrap();
            prop_assert!((r.p_flip - standard_lz(p.delta(), p.v(), 1.0)).abs() < 1e-14);
        }

        #[test]
        fn monotone_in_gamma2(a in 0.0f64..50.0, b in 0.0f64..50.0, v in 1.0f64..200.0) {
            prop_assume!(a != b);
            let p = params(1.0, v, 0.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let r_lo = lz_probability(lo, &p).unwrap();
            let r_hi = lz_probability(hi, &p).unwrap();
            prop_assert!(r_hi.p_flip >= r_lo.p_flip);
            // strict where the exponent has not saturated in double precision
            if r_lo.p_survive > 1e-12 && (hi - lo) / v > 1e-9 {
                prop_assert!(r_hi.p_flip > r_lo.p_flip);
            }
        }

        #[test]
        fn scale_covariance((spec, p) in draw(), ci in 0usize..3) {
            let c = [0.5, 2.0, 10.0][ci];
            let scaled = LzParams::new(c * p.delta(), c * c * p.v(), c * p.g(), 1.0).unwrap();
            let a = chain_driven_probability(&spec, &p).unwrap();
            let b = chain_driven_probability(&spec, &scaled).unwrap();
            prop_assert!((a.p_flip - b.p_flip).abs() < 1e-12);
        }
    }
}
