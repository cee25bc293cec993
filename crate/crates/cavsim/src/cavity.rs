//! The quantum-dot / double-sided-cavity unit: input-output scattering
//! coefficients and the spin-conditioned photon transition rules, ideal and
//! lossy.
//!
//! A photon whose spin s_z matches the electron spin (s_z = +1 with up,
//! s_z = -1 with down) couples to the trion transition and is reflected with
//! its polarization and propagation direction flipped. An uncoupled photon
//! transmits the cavity and picks up a π phase. With side leakage the
//! reflection/transmission amplitudes degrade from (1, -1) to the
//! steady-state coefficients r, t (hot cavity) and r₀, t₀ (cold cavity).

use num_complex::Complex64;
use thiserror::Error;

use crate::elements::{CavityMap, ElementMap};
use crate::state::{Direction, Mode, Polarization, Spin, C64};

#[derive(Debug, Error, PartialEq)]
pub enum CavityError {
    #[error("invalid cavity parameters: {reason}")]
    InvalidParams { reason: String },
    #[error("resonant coefficients need omega = omega_c = omega_x (got detunings {detail})")]
    Detuned { detail: String },
}

/// Physical rates of the coupled dot-cavity system, all in units of the
/// cavity field decay rate κ. Frequencies are detunings relative to κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Coupling strength between the trion and the cavity mode.
    pub g: f64,
    /// Cavity field decay rate (the normalization unit, usually 1).
    pub kappa: f64,
    /// Side leakage rate.
    pub kappa_s: f64,
    /// Trion dipole decay rate.
    pub gamma: f64,
    /// Input photon frequency.
    pub omega: f64,
    /// Cavity mode frequency.
    pub omega_c: f64,
    /// Trion transition frequency.
    pub omega_x: f64,
}

impl CavityParams {
    /// Resonant parameters (ω = ω_c = ω_X) with κ = 1.
    pub fn resonant(g: f64, kappa_s: f64, gamma: f64) -> Self {
        CavityParams {
            g,
            kappa: 1.0,
            kappa_s,
            gamma,
            omega: 0.0,
            omega_c: 0.0,
            omega_x: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), CavityError> {
        let bad = |reason: &str| CavityError::InvalidParams {
            reason: reason.to_string(),
        };
        if !(self.kappa > 0.0) {
            return Err(bad("kappa must be > 0"));
        }
        if !(self.kappa_s >= 0.0) {
            return Err(bad("kappa_s must be >= 0"));
        }
        if !(self.gamma > 0.0) {
            return Err(bad("gamma must be > 0"));
        }
        if !(self.g >= 0.0) {
            return Err(bad("g must be >= 0"));
        }
        Ok(())
    }
}

/// Steady-state transmission amplitude t(ω) of the coupled dot-cavity system.
///
/// t(ω) = -κ[i(ω_X-ω)+γ/2] / {[i(ω_X-ω)+γ/2][i(ω_c-ω)+κ+κ_s/2] + g²},
/// and r(ω) = 1 + t(ω).
pub fn transmission_coefficient(params: &CavityParams) -> C64 {
    let i = C64::new(0.0, 1.0);
    let dipole = i * (params.omega_x - params.omega) + params.gamma / 2.0;
    let cavity = i * (params.omega_c - params.omega) + params.kappa + params.kappa_s / 2.0;
    -params.kappa * dipole / (dipole * cavity + params.g * params.g)
}

pub fn reflection_coefficient(params: &CavityParams) -> C64 {
    Complex64::new(1.0, 0.0) + transmission_coefficient(params)
}

/// The four scattering amplitudes of the dot-cavity unit: hot (coupled) r, t
/// and cold (uncoupled) r₀, t₀. Structurally r = 1 + t and r₀ = 1 + t₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterCoefficients {
    pub r: C64,
    pub t: C64,
    pub r0: C64,
    pub t0: C64,
}

impl ScatterCoefficients {
    /// Lossless limit: perfect reflection when coupled, perfect (sign-flipped)
    /// transmission when uncoupled.
    pub fn ideal() -> Self {
        ScatterCoefficients {
            r: C64::new(1.0, 0.0),
            t: C64::new(0.0, 0.0),
            r0: C64::new(0.0, 0.0),
            t0: C64::new(-1.0, 0.0),
        }
    }

    pub fn magnitudes(&self) -> CoeffMagnitudes {
        CoeffMagnitudes {
            r: self.r.norm(),
            t: self.t.norm(),
            r0: self.r0.norm(),
            t0: self.t0.norm(),
        }
    }
}

/// Magnitudes |r|, |t|, |r₀|, |t₀| used by the lossy transition rules and the
/// closed-form fidelity/efficiency expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffMagnitudes {
    pub r: f64,
    pub t: f64,
    pub r0: f64,
    pub t0: f64,
}

impl CoeffMagnitudes {
    pub fn ideal() -> Self {
        CoeffMagnitudes {
            r: 1.0,
            t: 0.0,
            r0: 0.0,
            t0: 1.0,
        }
    }

    /// Photon survival probability for a coupled (hot) pass.
    pub fn survival_hot(&self) -> f64 {
        self.r * self.r + self.t * self.t
    }

    /// Photon survival probability for an uncoupled (cold) pass.
    pub fn survival_cold(&self) -> f64 {
        self.r0 * self.r0 + self.t0 * self.t0
    }

    /// Mean pass survival X = (|r|²+|t|²+|r₀|²+|t₀|²)/2 over an equal
    /// hot/cold mixture.
    pub fn mean_survival(&self) -> f64 {
        (self.survival_hot() + self.survival_cold()) / 2.0
    }
}

/// Resonant (ω = ω_c = ω_X) coefficients:
/// r₀ = (κ_s/2)/(κ+κ_s/2), t₀ = -κ/(κ+κ_s/2),
/// t = -(γκ/2)/[(γ/2)(κ+κ_s/2)+g²], r = 1+t.
pub fn resonant_coefficients(params: &CavityParams) -> Result<ScatterCoefficients, CavityError> {
    params.validate()?;
    if params.omega != params.omega_c || params.omega != params.omega_x {
        return Err(CavityError::Detuned {
            detail: format!(
                "omega_c-omega={}, omega_x-omega={}",
                params.omega_c - params.omega,
                params.omega_x - params.omega
            ),
        });
    }
    let half_total = params.kappa + params.kappa_s / 2.0;
    let r0 = (params.kappa_s / 2.0) / half_total;
    let t0 = -params.kappa / half_total;
    let t = -(params.gamma / 2.0) * params.kappa
        / ((params.gamma / 2.0) * half_total + params.g * params.g);
    Ok(ScatterCoefficients {
        r: C64::new(1.0 + t, 0.0),
        t: C64::new(t, 0.0),
        r0: C64::new(r0, 0.0),
        t0: C64::new(t0, 0.0),
    })
}

/// Whether the photon couples to the trion: s_z = +1 with spin up, or
/// s_z = -1 with spin down.
pub fn couples(polarization: Polarization, direction: Direction, spin: Spin) -> bool {
    let sz = crate::state::photon_spin(polarization, direction);
    (sz == 1) == (spin == Spin::Up)
}

/// One output term of the scattering table: (polarization, direction,
/// amplitude). Reflection flips both polarization and direction; transmission
/// keeps them.
pub type ScatterTerm = (Polarization, Direction, f64);

/// Ideal spin-conditioned transition table. Coupled inputs reflect with
/// amplitude +1 (polarization and direction flipped); uncoupled inputs
/// transmit with amplitude -1.
pub fn ideal_scatter(
    polarization: Polarization,
    direction: Direction,
    spin: Spin,
) -> Vec<ScatterTerm> {
    if couples(polarization, direction, spin) {
        vec![(polarization.flipped(), direction.flipped(), 1.0)]
    } else {
        vec![(polarization, direction, -1.0)]
    }
}

/// Lossy transition table with magnitudes |r|, |t|, |r₀|, |t₀|.
///
/// Coupled: |r|·(reflected, flipped) + |t|·(transmitted, unchanged).
/// Uncoupled: -|t₀|·(transmitted) - |r₀|·(reflected, flipped).
/// The listed rows for s_z = -1 extend to all eight input states by the
/// spin/photon-spin symmetry of the ideal table.
pub fn lossy_scatter(
    polarization: Polarization,
    direction: Direction,
    spin: Spin,
    mags: &CoeffMagnitudes,
) -> Vec<ScatterTerm> {
    if couples(polarization, direction, spin) {
        vec![
            (polarization.flipped(), direction.flipped(), mags.r),
            (polarization, direction, mags.t),
        ]
    } else {
        vec![
            (polarization, direction, -mags.t0),
            (polarization.flipped(), direction.flipped(), -mags.r0),
        ]
    }
}

/// Ideal cavity interaction as a circuit element. `port_a` is entered moving
/// along `entry_a`; `port_b` is entered from the opposite mirror.
pub fn ideal_cavity_map(
    cavity_id: impl Into<String>,
    spin_index: usize,
    port_a: Mode,
    entry_a: Direction,
    port_b: Mode,
) -> ElementMap {
    ElementMap::cavity(CavityMap {
        cavity_id: cavity_id.into(),
        spin_index,
        port_a,
        entry_a,
        port_b,
        mags: None,
        leak_sink: None,
    })
}

/// Lossy cavity interaction as a circuit element. When `leak_sink` is given,
/// the per-input amplitude deficit sqrt(1 - |r|² - |t|²) (coupled) or
/// sqrt(1 - |r₀|² - |t₀|²) (uncoupled) is routed onto the reserved sink mode
/// `leaked:<tag>` instead of being dropped.
pub fn lossy_cavity_map(
    cavity_id: impl Into<String>,
    spin_index: usize,
    port_a: Mode,
    entry_a: Direction,
    port_b: Mode,
    coeffs: &ScatterCoefficients,
    leak_sink: Option<String>,
) -> ElementMap {
    ElementMap::cavity(CavityMap {
        cavity_id: cavity_id.into(),
        spin_index,
        port_a,
        entry_a,
        port_b,
        mags: Some(coeffs.magnitudes()),
        leak_sink,
    })
}

/// Exciton-dephasing parameters: cavity photon lifetime τ and trion coherence
/// time T₂, in the same time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingParams {
    pub tau: f64,
    pub t2: f64,
}

impl DephasingParams {
    pub fn validate(&self) -> Result<(), CavityError> {
        if !(self.tau > 0.0) || !(self.t2 > 0.0) {
            return Err(CavityError::InvalidParams {
                reason: "tau and T2 must be > 0".to_string(),
            });
        }
        Ok(())
    }
}

/// Fidelity retention factor exp(-τ/T₂); the fidelity reduction from exciton
/// dephasing is its complement 1 - exp(-τ/T₂).
pub fn dephasing_factor(params: &DephasingParams) -> f64 {
    (-params.tau / params.t2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Direction::*, Polarization::*, Spin::*};

    #[test]
    fn transmission_reduces_to_cold_cavity_at_zero_coupling() {
        // with g = 0 the general expression collapses to t0 = -κ/(κ+κ_s/2)
        let params = CavityParams::resonant(0.0, 0.25, 0.1);
        let t = transmission_coefficient(&params);
        let expected = -1.0 / (1.0 + 0.125);
        assert!((t - C64::new(expected, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transmission_matches_hand_evaluated_rational() {
        // g=0.5, κ_s=0.25, γ=0.1: t = -0.05/(0.05*1.125+0.25) = -8/49
        let params = CavityParams::resonant(0.5, 0.25, 0.1);
        let t = transmission_coefficient(&params);
        assert!((t.re - (-8.0 / 49.0)).abs() < 1e-15);
        assert!(t.im.abs() < 1e-15);
        assert!((t.re - (-0.163265306122449)).abs() < 1e-12);
    }

    #[test]
    fn strong_coupling_limit_transmits_nothing() {
        let params = CavityParams::resonant(1e6, 0.0, 0.1);
        let t = transmission_coefficient(&params);
        let r = reflection_coefficient(&params);
        assert!(t.norm() < 1e-10);
        assert!((r - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn resonant_coefficients_with_no_leakage() {
        let coeffs = resonant_coefficients(&CavityParams::resonant(0.5, 0.0, 0.1)).unwrap();
        assert!((coeffs.r0.norm()).abs() < 1e-15);
        assert!((coeffs.t0 - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn resonant_coefficients_weak_coupling_point() {
        let coeffs = resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
        assert!((coeffs.r.re - 0.836734693877551).abs() < 1e-12);
        assert!((coeffs.t.re - (-0.163265306122449)).abs() < 1e-12);
        assert!((coeffs.r0.re - (1.0 / 9.0)).abs() < 1e-12);
        assert!((coeffs.t0.re - (-8.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn resonant_coefficients_strong_coupling_point() {
        let coeffs = resonant_coefficients(&CavityParams::resonant(2.4, 0.5, 0.1)).unwrap();
        assert!((coeffs.t.re - (-0.05 / 5.8225)).abs() < 1e-12);
        assert!((coeffs.r.re - (1.0 - 0.05 / 5.8225)).abs() < 1e-12);
        assert!((coeffs.r0.re - 0.2).abs() < 1e-12);
        assert!((coeffs.t0.re - (-0.8)).abs() < 1e-12);
    }

    #[test]
    fn resonant_coefficients_reject_detuned_params() {
        let mut params = CavityParams::resonant(0.5, 0.25, 0.1);
        params.omega_c = 0.3;
        assert!(matches!(
            resonant_coefficients(&params),
            Err(CavityError::Detuned { .. })
        ));
    }

    #[test]
    fn invalid_rates_are_rejected() {
        let mut params = CavityParams::resonant(0.5, 0.25, 0.1);
        params.g = -1.0;
        assert!(params.validate().is_err());
        params.g = 0.5;
        params.kappa = 0.0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn structural_identities_hold_over_a_parameter_grid() {
        for gi in 1..=30 {
            for ki in 0..=20 {
                let g = gi as f64 * 0.1;
                let ks = ki as f64 * 0.1;
                let params = CavityParams::resonant(g, ks, 0.1);
                let c = resonant_coefficients(&params).unwrap();
                // r = 1 + t and r0 = 1 + t0 to machine precision
                assert!((c.r - (C64::new(1.0, 0.0) + c.t)).norm() < 1e-15);
                assert!((c.r0 - (C64::new(1.0, 0.0) + c.t0)).norm() < 1e-15);
                // on resonance both t's are real in [-1, 0] so the magnitudes sum to 1
                let m = c.magnitudes();
                assert!((m.r + m.t - 1.0).abs() < 1e-15);
                assert!((m.r0 + m.t0 - 1.0).abs() < 1e-15);
                // also for the general expression: r(ω) = 1 + t(ω)
                let t = transmission_coefficient(&params);
                assert!((reflection_coefficient(&params) - (C64::new(1.0, 0.0) + t)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn transmission_magnitude_strictly_decreases_in_g() {
        let mut prev = f64::INFINITY;
        for gi in 0..=50 {
            let g = gi as f64 * 0.1;
            let c = resonant_coefficients(&CavityParams::resonant(g, 0.25, 0.1)).unwrap();
            let t = c.magnitudes().t;
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn cold_reflection_strictly_increases_in_kappa_s() {
        let mut prev = -1.0;
        for ki in 0..=40 {
            let ks = ki as f64 * 0.05;
            let c = resonant_coefficients(&CavityParams::resonant(0.5, ks, 0.1)).unwrap();
            let r0 = c.magnitudes().r0;
            assert!(r0 > prev);
            prev = r0;
        }
    }

    #[test]
    fn ideal_table_matches_all_eight_transition_rules() {
        let expect = [
            ((R, AlongZ, Up), (L, AgainstZ, 1.0)),
            ((L, AlongZ, Up), (L, AlongZ, -1.0)),
            ((R, AgainstZ, Up), (R, AgainstZ, -1.0)),
            ((L, AgainstZ, Up), (R, AlongZ, 1.0)),
            ((R, AlongZ, Down), (R, AlongZ, -1.0)),
            ((L, AlongZ, Down), (R, AgainstZ, 1.0)),
            ((R, AgainstZ, Down), (L, AlongZ, 1.0)),
            ((L, AgainstZ, Down), (L, AgainstZ, -1.0)),
        ];
        for ((pol, dir, spin), (pol2, dir2, amp)) in expect {
            let terms = ideal_scatter(pol, dir, spin);
            assert_eq!(terms, vec![(pol2, dir2, amp)], "input {pol:?} {dir:?} {spin:?}");
        }
    }

    #[test]
    fn ideal_table_is_an_involution() {
        for pol in [R, L] {
            for dir in [AlongZ, AgainstZ] {
                for spin in [Up, Down] {
                    let first = ideal_scatter(pol, dir, spin);
                    assert_eq!(first.len(), 1);
                    let (p1, d1, a1) = first[0];
                    let second = ideal_scatter(p1, d1, spin);
                    let (p2, d2, a2) = second[0];
                    assert_eq!((p2, d2), (pol, dir));
                    assert!((a1 * a2 - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn lossy_table_reproduces_the_listed_rows() {
        let mags = CoeffMagnitudes {
            r: 0.8,
            t: 0.2,
            r0: 0.1,
            t0: 0.9,
        };
        // coupled row: |R against, down> -> |r| |L along, down> + |t| |R against, down>
        let terms = lossy_scatter(R, AgainstZ, Down, &mags);
        assert_eq!(terms, vec![(L, AlongZ, 0.8), (R, AgainstZ, 0.2)]);
        // uncoupled row: |L along, up> -> -|t0| |L along, up> - |r0| |R against, up>
        let terms = lossy_scatter(L, AlongZ, Up, &mags);
        assert_eq!(terms, vec![(L, AlongZ, -0.9), (R, AgainstZ, -0.1)]);
    }

    #[test]
    fn lossy_table_with_ideal_magnitudes_reproduces_ideal_table() {
        let mags = CoeffMagnitudes::ideal();
        for pol in [R, L] {
            for dir in [AlongZ, AgainstZ] {
                for spin in [Up, Down] {
                    let lossy: Vec<_> = lossy_scatter(pol, dir, spin, &mags)
                        .into_iter()
                        .filter(|(_, _, a)| a.abs() > 0.0)
                        .collect();
                    assert_eq!(lossy, ideal_scatter(pol, dir, spin));
                }
            }
        }
    }

    #[test]
    fn lossy_table_converges_to_ideal_at_strong_coupling() {
        // g = 1e4 κ, κ_s = 0: entrywise agreement within 1e-7
        let coeffs = resonant_coefficients(&CavityParams::resonant(1e4, 0.0, 0.1)).unwrap();
        let mags = coeffs.magnitudes();
        for pol in [R, L] {
            for dir in [AlongZ, AgainstZ] {
                for spin in [Up, Down] {
                    let ideal = ideal_scatter(pol, dir, spin);
                    let lossy = lossy_scatter(pol, dir, spin, &mags);
                    for (p, d, a) in &lossy {
                        let ideal_amp = ideal
                            .iter()
                            .find(|(ip, id, _)| ip == p && id == d)
                            .map(|(_, _, ia)| *ia)
                            .unwrap_or(0.0);
                        assert!((a - ideal_amp).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn dephasing_factor_examples() {
        assert!((dephasing_factor(&DephasingParams { tau: 1e-9, t2: 1.0 }) - 1.0).abs() < 1e-8);
        assert!(
            (dephasing_factor(&DephasingParams { tau: 1.0, t2: 1.0 }) - (-1.0f64).exp()).abs()
                < 1e-15
        );
        // τ = 10 ps, T2 = 100 ns: reduction about 1e-4, negligible
        let reduction = 1.0 - dephasing_factor(&DephasingParams { tau: 10e-12, t2: 100e-9 });
        assert!(reduction > 0.0 && reduction < 2e-4);
    }
}
