//! Property tests for the model invariants: parities, sum rules,
//! convexity, and round trips over randomized inputs.

use approx::assert_relative_eq;
use proptest::prelude::*;
use qcrlab::constants::{angular, ELEMENTARY_CHARGE};
use qcrlab::junction::{dynes_dos, elastic_dc_current, forward_rate, JunctionParams};
use qcrlab::photon_assisted::{
    pat_weights, transition_rate, tunneling_current, Direction, DriveCondition,
};
use qcrlab::quadrature::QuadratureConfig;
use qcrlab::resonator::{
    bose_occupation, coherent_population_from_rate, gamma_qcr, steady_state_from_rates,
    temp_from_occupation, ResonatorParams,
};
use qcrlab::spectroscopy::{
    extract_peak_weights, synthesize_spectrum, thermal_distribution, default_grid,
    DistributionFamily, FockDistribution, PeakModel,
};

fn table_junction(t_qp: f64) -> JunctionParams {
    JunctionParams::with_gap_ev(203e-6, 1.96e-3, 29.4e3, t_qp)
}

fn table_resonator() -> ResonatorParams {
    ResonatorParams {
        omega_r: angular(4.671e9),
        gamma_dr: angular(1.1e6),
        gamma_0: angular(1.3e6),
        rho: 8e-3,
        n_c: 0.92,
        n_max: 9,
    }
}

// loose tolerances keep the quadrature-heavy cases fast
fn fast_quad() -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-6,
        abs_tol: 1e-1,
        ..QuadratureConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dynes_dos_is_even(u in -5.0_f64..5.0, gamma in 1e-6_f64..0.5) {
        let junction = JunctionParams {
            gamma_dynes: gamma,
            ..table_junction(0.0)
        };
        let eps = u * junction.delta;
        prop_assert_eq!(dynes_dos(eps, &junction), dynes_dos(-eps, &junction));
    }

    #[test]
    fn pat_weight_sum_is_unity(x in 0.0_f64..40.0) {
        let w = pat_weights(x, 1e-9);
        prop_assert!(w.tail.abs() < 1e-9);
        prop_assert!(w.terms.iter().all(|t| t.1 >= 0.0));
        // symmetric in k ↔ −k
        for &(k, wk) in &w.terms {
            let mirrored = w.terms.iter().find(|t| t.0 == -k).unwrap().1;
            prop_assert_eq!(wk, mirrored);
        }
    }

    #[test]
    fn bose_round_trip(t in 0.010_f64..1.0) {
        let omega = angular(4.671e9);
        let n = bose_occupation(t, omega);
        let back = temp_from_occupation(n, omega);
        prop_assert!((back - t).abs() <= 1e-12 * t);
    }

    #[test]
    fn steady_state_is_convex(n_qcr in 0.0_f64..5.0, gamma in 0.0_f64..1e9) {
        let resonator = table_resonator();
        let n = steady_state_from_rates(n_qcr, gamma, &resonator);
        let lo = n_qcr.min(resonator.n_c) - 1e-12;
        let hi = n_qcr.max(resonator.n_c) + 1e-12;
        prop_assert!(n >= lo && n <= hi);
    }

    #[test]
    fn coherent_population_monotone_past_matching(
        p_in in 1e-18_f64..1e-15,
        g0 in 0.0_f64..5e8,
        dg in 0.0_f64..5e8,
    ) {
        // with γ_dr ≤ γ_QCR + γ_0 the population decreases in γ_QCR
        let resonator = table_resonator();
        let g_low = g0 + (resonator.gamma_dr - resonator.gamma_0).max(0.0);
        let n1 = coherent_population_from_rate(p_in, g_low, &resonator).unwrap();
        let n2 = coherent_population_from_rate(p_in, g_low + dg, &resonator).unwrap();
        prop_assert!(n2 <= n1 * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn forward_rate_monotone_in_energy(
        gamma in 1e-4_f64..0.1,
        t_qp in 0.0_f64..0.3,
    ) {
        let junction = JunctionParams {
            gamma_dynes: gamma,
            ..table_junction(t_qp)
        };
        let quad = fast_quad();
        let mut last = -1.0;
        for i in 0..9 {
            let e_red = -2.0 + 0.5 * i as f64; // −2Δ .. 2Δ
            let f = forward_rate(e_red * junction.delta, &junction, &quad).unwrap();
            prop_assert!(
                f >= last - quad.abs_tol - 1e-6 * last.abs(),
                "F not monotone at step {}: {} < {}", i, f, last
            );
            last = f;
        }
    }

    #[test]
    fn elastic_current_is_odd(v in 1e-6_f64..5e-4, t_qp in 0.01_f64..0.3) {
        let junction = table_junction(t_qp);
        let quad = fast_quad();
        let plus = elastic_dc_current(v, &junction, &quad).unwrap();
        let minus = elastic_dc_current(-v, &junction, &quad).unwrap();
        prop_assert_eq!(plus, -minus);
    }

    #[test]
    fn driven_current_is_odd(
        v_dc in 1e-6_f64..4e-4,
        v_ac in 0.0_f64..3e-4,
    ) {
        let junction = table_junction(0.248);
        let quad = fast_quad();
        let drive = DriveCondition { v_dc, v_ac, omega_ac: angular(3.6e9) };
        let flipped = DriveCondition { v_dc: -v_dc, ..drive };
        let plus = tunneling_current(&drive, &junction, &quad).unwrap();
        let minus = tunneling_current(&flipped, &junction, &quad).unwrap();
        prop_assert_eq!(plus, -minus);
    }

    #[test]
    fn backward_equals_forward_at_inverted_bias(
        v_dc in -4e-4_f64..4e-4,
        v_ac in 0.0_f64..3e-4,
        m in 0_usize..3,
    ) {
        let junction = table_junction(0.060);
        let resonator = table_resonator();
        let quad = fast_quad();
        let drive = DriveCondition { v_dc, v_ac, omega_ac: angular(3.2e9) };
        let flipped = DriveCondition { v_dc: -v_dc, ..drive };
        let bwd = transition_rate(m + 1, m, Direction::Backward, &drive, &junction, &resonator, &quad).unwrap();
        let fwd = transition_rate(m + 1, m, Direction::Forward, &flipped, &junction, &resonator, &quad).unwrap();
        prop_assert_eq!(bwd, fwd);
    }

    #[test]
    fn qcr_decay_even_in_bias(v_dc in 0.0_f64..4e-4, v_ac in 0.0_f64..2.5e-4) {
        let junction = table_junction(0.060);
        let resonator = table_resonator();
        let quad = fast_quad();
        let drive = DriveCondition { v_dc, v_ac, omega_ac: angular(3.6e9) };
        let flipped = DriveCondition { v_dc: -v_dc, ..drive };
        let plus = gamma_qcr(&drive, &junction, &resonator, &quad).unwrap();
        let minus = gamma_qcr(&flipped, &junction, &resonator, &quad).unwrap();
        prop_assert_eq!(plus.rate, minus.rate);
    }

    #[test]
    fn subgap_current_monotone_in_drive_amplitude(v_dc in 2e-5_f64..1.9e-4) {
        let junction = table_junction(0.060);
        let quad = fast_quad();
        let mut last = -1.0_f64;
        for &v_ac in &[0.0, 1e-4, 2e-4, 3e-4] {
            let drive = DriveCondition { v_dc, v_ac, omega_ac: angular(3.6e9) };
            let i = tunneling_current(&drive, &junction, &quad).unwrap();
            prop_assert!(i >= last - 1e-13, "I({v_ac}) = {i} < {last}");
            last = i;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extraction_inverts_synthesis_for_random_distributions(
        raw in proptest::collection::vec(0.01_f64..1.0, 6..=10)
    ) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let n_max = probs.len() - 1;
        let dist = FockDistribution {
            mean: probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
            probs,
            family: DistributionFamily::Empirical,
        };
        let peaks = PeakModel::uniform(4.4e6, 0.5e6, 0.0);
        let grid = default_grid(&peaks, n_max);
        let trace = synthesize_spectrum(&dist, &peaks, &grid).unwrap();
        let weights = extract_peak_weights(&trace, &peaks, n_max).unwrap();
        for (w, p) in weights.iter().zip(&dist.probs) {
            prop_assert!((w - p).abs() < 1e-6, "weight {} vs prob {}", w, p);
        }
    }

    #[test]
    fn distribution_mass_and_tail_balance(n_bar in 0.0_f64..4.0, n_max in 5_usize..20) {
        let t = thermal_distribution(n_bar, n_max);
        let total = t.probs.iter().sum::<f64>() + t.truncation_deficit();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(t.probs.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn tolerance_halving_stability() {
    // quadrature result invariant (within 2·rel_tol) under rel_tol halving
    let junction = table_junction(0.060);
    let quad = QuadratureConfig::default();
    let halved = QuadratureConfig {
        rel_tol: quad.rel_tol / 2.0,
        ..quad
    };
    for e_red in [-0.5, 0.1, 0.95, 1.05, 2.0] {
        let a = forward_rate(e_red * junction.delta, &junction, &quad).unwrap();
        let b = forward_rate(e_red * junction.delta, &junction, &halved).unwrap();
        assert_relative_eq!(a, b, max_relative = 2.0 * quad.rel_tol, epsilon = 2.0 * quad.abs_tol);
    }
}

#[test]
fn gap_suppression_in_clean_limit() {
    let junction = JunctionParams {
        gamma_dynes: 1e-9,
        ..table_junction(0.0)
    };
    let quad = QuadratureConfig::default();
    let bound = 1e-6 * junction.delta / (ELEMENTARY_CHARGE * junction.r_t);
    for u in [0.15, 0.45, 0.75, 0.89] {
        let v = u * junction.delta / ELEMENTARY_CHARGE;
        let current = elastic_dc_current(v, &junction, &quad).unwrap();
        assert!(current.abs() < bound);
    }
}
