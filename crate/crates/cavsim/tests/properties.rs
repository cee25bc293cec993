//! Property tests for the state algebra and element maps.

use proptest::prelude::*;

use cavsim::cavity::{lossy_cavity_map, resonant_coefficients, CavityParams};
use cavsim::elements::{make_hwp, make_pbs, make_phase_shift, make_spin_hadamard, PortTarget};
use cavsim::state::{
    BasisLabel, Direction, HybridState, Mode, PhotonLabel, Polarization, Spin, SpinConfig, C64,
};

fn amp_pair() -> impl Strategy<Value = (C64, C64)> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
    )
        .prop_filter_map("nonzero", |(a, b, c, d)| {
            let norm = (a * a + b * b + c * c + d * d).sqrt();
            if norm < 1e-3 {
                return None;
            }
            Some((C64::new(a / norm, b / norm), C64::new(c / norm, d / norm)))
        })
}

/// Random normalized state over the four (polarization, mode) combinations of
/// two loop paths, with one electron.
fn loop_state() -> impl Strategy<Value = HybridState> {
    (amp_pair(), amp_pair()).prop_map(|((a, b), (c, d))| {
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let mut state = HybridState::zero();
        for (pol, path, dir, amp) in [
            (Polarization::R, "3", Direction::AgainstZ, a * h),
            (Polarization::L, "3", Direction::AgainstZ, b * h),
            (Polarization::R, "4", Direction::AlongZ, c * h),
            (Polarization::L, "4", Direction::AlongZ, d * h),
        ] {
            state.add_amplitude(
                BasisLabel::new(
                    PhotonLabel::new(pol, path, dir),
                    SpinConfig::new(vec![Spin::Up]),
                ),
                amp,
            );
        }
        state
    })
}

proptest! {
    #[test]
    fn tensor_product_of_normalized_factors_has_unit_norm(
        (pr, pl) in amp_pair(),
        s1 in amp_pair(),
        s2 in amp_pair(),
    ) {
        let state = HybridState::tensor_product(
            &[
                (PhotonLabel::new(Polarization::R, "in", Direction::AlongZ), pr),
                (PhotonLabel::new(Polarization::L, "in", Direction::AlongZ), pl),
            ],
            &[s1, s2],
        ).unwrap();
        prop_assert!((state.squared_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn element_application_is_linear(
        state_x in loop_state(),
        state_y in loop_state(),
        (alpha, beta) in amp_pair(),
    ) {
        let coeffs = resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
        let elements = vec![
            make_hwp(Mode::from("3")),
            make_phase_shift(Mode::from("4"), 0.7),
            make_spin_hadamard(0),
            lossy_cavity_map("c", 0, Mode::from("3"), Direction::AgainstZ, Mode::from("4"), &coeffs, None),
        ];
        for element in &elements {
            let combined = element
                .apply(&state_x.scaled(alpha).sum(&state_y.scaled(beta)))
                .unwrap();
            let separate = element.apply(&state_x).unwrap().scaled(alpha)
                .sum(&element.apply(&state_y).unwrap().scaled(beta));
            prop_assert!(combined.max_deviation(&separate) < 1e-12);
        }
    }

    #[test]
    fn unitary_elements_preserve_norm_and_lossy_cavity_never_gains(state in loop_state()) {
        let norm = state.squared_norm();
        let pbs = make_pbs(
            &[Mode::from("3"), Mode::from("4")],
            &[PortTarget::new("a", None), PortTarget::new("b", None)],
            &[PortTarget::new("b2", None), PortTarget::new("a2", None)],
        ).unwrap();
        for element in [
            make_hwp(Mode::from("3")),
            make_phase_shift(Mode::from("3"), 1.1),
            make_spin_hadamard(0),
            pbs,
        ] {
            let out = element.apply(&state).unwrap();
            prop_assert!((out.squared_norm() - norm).abs() < 1e-12);
        }
        let coeffs = resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
        let lossy = lossy_cavity_map(
            "c", 0, Mode::from("3"), Direction::AgainstZ, Mode::from("4"), &coeffs, None,
        );
        let out = lossy.apply(&state).unwrap();
        prop_assert!(out.squared_norm() <= norm + 1e-12);
    }

    #[test]
    fn restricting_to_the_full_support_changes_nothing(state in loop_state()) {
        let support = state.support();
        let restricted = state.restrict_to_modes(&support);
        prop_assert!(restricted.max_deviation(&state) < 1e-15);
        prop_assert!((restricted.squared_norm() - state.squared_norm()).abs() < 1e-15);
    }
}

/// Lossy single-pass loss accounting: with the leak sink attached, a basis
/// input keeps total norm 1 and the non-leaked part carries the pass
/// survival.
#[test]
fn leak_sink_accounts_for_the_survival_deficit() {
    let coeffs = resonant_coefficients(&CavityParams::resonant(0.5, 0.25, 0.1)).unwrap();
    let mags = coeffs.magnitudes();
    let map = lossy_cavity_map(
        "c",
        0,
        Mode::from("3"),
        Direction::AgainstZ,
        Mode::from("4"),
        &coeffs,
        Some(String::new()),
    );
    // coupled input: R entering against z with spin down
    let input = HybridState::basis(BasisLabel::new(
        PhotonLabel::new(Polarization::R, "3", Direction::AgainstZ),
        SpinConfig::new(vec![Spin::Down]),
    ));
    let out = map.apply(&input).unwrap();
    assert!((out.squared_norm() - 1.0).abs() < 1e-12);
    assert!((out.drop_leaked().squared_norm() - mags.survival_hot()).abs() < 1e-12);
    assert!((out.leaked_norm() - (1.0 - mags.survival_hot())).abs() < 1e-12);
}
