use std::f64::consts::{PI, TAU};

use flatflow::branch::*;
use flatflow::oracle::*;
use flatflow::ring::*;
use proptest::prelude::*;

const RHO_GRID: [f64; 5] = [0.0, 0.1, 0.5, 1.0, 2.0];

fn xp_max(rho: f64) -> f64 {
    limiting_point(&BranchImpedance::from_ratio(rho, 1.0).unwrap()).p_max
}

/// Central difference with step scaled to the argument.
fn central_diff(f: impl Fn(f64) -> f64, at: f64) -> f64 {
    let h = 1e-6 * at.abs().max(1e-3);
    (f(at + h) - f(at - h)) / (2.0 * h)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// A feasible (impedance, P) pair: P is a fraction of the limiting flow.
fn feasible_point() -> impl Strategy<Value = (BranchImpedance, f64)> {
    (0.0..3.0f64, 0.01..2.0f64, 0.0..0.999f64).prop_map(|(rho, x, frac)| {
        let imp = BranchImpedance::from_ratio(rho, x).unwrap();
        let p = frac * limiting_point(&imp).p_max;
        (imp, p)
    })
}

#[test]
fn oracle_matches_closed_form_on_grid() {
    for rho in RHO_GRID {
        for x in [0.05, 0.1, 1.0] {
            let imp = BranchImpedance::from_ratio(rho, x).unwrap();
            for xp in [0.0, 0.01, 0.1, 0.5, 0.9 * xp_max(rho)] {
                let p = xp / x;
                let Ok(q) = receiving_q_exact(&imp, p) else {
                    // XP = 0.5 is beyond the limit for the lossiest branches
                    assert!(xp > xp_max(rho), "rho={rho} xp={xp}");
                    assert!(bisect_receiving_q(&imp, p, 1e-12).is_err());
                    continue;
                };
                let q_bisect = bisect_receiving_q(&imp, p, 1e-12).unwrap();
                assert!(
                    (q - q_bisect).abs() < 1e-9,
                    "rho={rho} x={x} xp={xp}: {q} vs {q_bisect}"
                );
                assert!(flat_residual(&imp, p, q).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn series_error_is_third_order() {
    for rho in [0.0, 0.5, 1.0] {
        let imp = BranchImpedance::from_ratio(rho, 1.0).unwrap();
        let err =
            |p: f64| (receiving_q_series(&imp, p) - receiving_q_exact(&imp, p).unwrap()).abs();
        let mut p = 0.05;
        while p > 0.004 {
            let ratio = err(p) / err(p / 2.0);
            assert!(ratio >= 7.0, "rho={rho} p={p} ratio={ratio}");
            p /= 2.0;
        }
    }
}

#[test]
fn ring_formula_agrees_with_inverse_power() {
    for n in 4..=16 {
        for m in 1..=n / 4 {
            let bound = rho_max(n, m).unwrap();
            for frac in [0.0, 0.3, 0.7, 1.0] {
                let rho = frac * bound;
                for x in [0.1, 1.0] {
                    let imp = BranchImpedance::from_ratio(rho, x).unwrap();
                    let a = circulating_power(x, rho, n, m).unwrap();
                    let b =
                        power_from_flow_coefficient(&imp, homogeneous_mu(n, m).unwrap()).unwrap();
                    assert!((a - b).abs() <= 1e-12 * b.max(1.0), "n={n} m={m} rho={rho}");
                }
            }
        }
    }
}

#[test]
fn circulating_power_decreases_along_rho() {
    for n in 4..=12 {
        let bound = rho_max(n, 1).unwrap();
        let lossless = circulating_power_lossless(1.0, n, 1).unwrap();
        assert!((circulating_power(1.0, 0.0, n, 1).unwrap() - lossless).abs() < 1e-15);
        let at_max = circulating_power(1.0, bound, n, 1).unwrap();
        let limit = limiting_point(&BranchImpedance::from_ratio(bound, 1.0).unwrap()).p_max;
        assert!((at_max - limit).abs() < 1e-12);
        if bound == 0.0 {
            continue;
        }
        let samples: Vec<f64> = (0..=50)
            .map(|i| circulating_power(1.0, bound * f64::from(i) / 50.0, n, 1).unwrap())
            .collect();
        assert!(samples.windows(2).all(|w| w[1] < w[0]), "n={n}");
    }
}

#[test]
fn losses_exceed_circulating_power_from_seven_branches() {
    for n in 4..=20 {
        let row = ring_limit_row(n).unwrap();
        let excess = row.losses_per_branch - row.p_circ_at_max;
        match n {
            6 => assert!(excess.abs() < 1e-12),
            n if n >= 7 => assert!(excess > 0.0, "n={n}"),
            _ => assert!(excess < 0.0, "n={n}"),
        }
    }
}

#[test]
fn limiting_support_exceeds_one_below_sqrt3() {
    for i in 0..=400 {
        let rho = f64::from(i) * 0.01;
        if (rho - 3f64.sqrt()).abs() < 1e-9 {
            continue;
        }
        let sigma = limiting_point(&BranchImpedance::from_ratio(rho, 1.0).unwrap()).sigma_at_limit;
        assert_eq!(sigma > 1.0, rho < 3f64.sqrt(), "rho={rho}");
    }
}

#[test]
fn perturbed_ring_loses_integer_winding() {
    let spec = RingSpec::new(9, 1, 0.5, 0.4).unwrap();
    let sol = assemble_homogeneous_ring(&spec).unwrap();
    assert!(winding_sum(&sol.angle_steps).unwrap().is_integer());

    let imp = BranchImpedance::from_ratio(0.4, 0.5).unwrap();
    let mut steps = sol.angle_steps.clone();
    let bumped = solve_branch(&imp, sol.p_circ * 1.01).unwrap();
    steps[3] = bumped.phase_shift;
    assert!(!winding_sum(&steps).unwrap().is_integer());
}

#[test]
fn ring_solution_matches_forward_branch_solve() {
    for (n, m, rho_frac) in [(8, 1, 0.5), (12, 2, 0.3), (10, 1, 0.9), (16, 3, 0.0)] {
        let rho = rho_frac * rho_max(n, m).unwrap();
        let sol = assemble_homogeneous_ring(&RingSpec::new(n, m, 0.2, rho).unwrap()).unwrap();
        let imp = BranchImpedance::from_ratio(rho, 0.2).unwrap();
        let fwd = solve_branch(&imp, sol.p_circ).unwrap();
        assert!((fwd.mu - sol.mu).abs() < 1e-10);
        assert!((fwd.sigma - sol.sigma).abs() < 1e-10);
        let steps_sum: f64 = sol.angle_steps.iter().sum();
        assert!((steps_sum - TAU * f64::from(m)).abs() < 1e-9);
    }
}

#[test]
fn discarded_inverse_root_violates_the_bound() {
    // Completing the square gives (1+ρ²)XP = μ − ρ ± ρ√(1−μ²); the minus
    // sign is the spurious root introduced by squaring.
    for rho in [0.1, 0.5, 1.0, 2.0] {
        let imp = BranchImpedance::from_ratio(rho, 1.0).unwrap();
        let a = 1.0 + rho * rho;
        let mu_max = 1.0 / a.sqrt();
        for i in 0..20 {
            let mu = mu_max * f64::from(i) / 20.0;
            let c = (1.0 - mu * mu).sqrt();
            let kept = (mu - rho + rho * c) / a;
            let discarded = (mu - rho - rho * c) / a;
            assert!((kept - power_from_flow_coefficient(&imp, mu).unwrap()).abs() < 1e-12);
            assert!(mu - discarded > rho / a, "rho={rho} mu={mu}");
            assert!(mu - kept <= rho / a + 1e-15);
        }
    }
}

proptest! {
    #[test]
    fn exact_root_satisfies_flat_condition((imp, p) in feasible_point()) {
        let q = receiving_q_exact(&imp, p).unwrap();
        let z2 = imp.z_squared();
        let residual = z2 * (p * p + q * q) + 2.0 * (imp.r() * p + imp.x() * q);
        let scale = 1.0 + z2 * (p * p + q * q);
        prop_assert!(residual.abs() < 1e-12 * scale);
        prop_assert!(flat_residual(&imp, p, q).abs() < 1e-10);
    }

    #[test]
    fn operating_point_invariants((imp, p) in feasible_point()) {
        let op = solve_branch(&imp, p).unwrap();
        let (r, x, rho) = (imp.r(), imp.x(), imp.rho());
        let i2 = op.current_mag * op.current_mag;
        let tol = 1e-12 * (1.0 + p);
        prop_assert!(op.p_send >= op.p_recv && op.p_recv >= 0.0);
        prop_assert!(op.q_recv <= 0.0);
        prop_assert!((op.losses - rho * op.sigma * p).abs() <= tol);
        prop_assert!((i2 - (p * p + op.q_recv * op.q_recv)).abs() <= 1e-12 * (1.0 + i2));
        prop_assert!((op.mu - (x * op.p_send - r * op.q_send)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&op.mu));
        prop_assert!((op.phase_shift - op.mu.asin()).abs() <= 1e-15);
        // conservation
        prop_assert!((op.q_send - op.q_recv - op.sigma * p).abs() <= tol);
        prop_assert!((op.q_send - op.q_recv - x * i2).abs() <= 1e-12 * (1.0 + x * i2));
        prop_assert!((op.p_send - op.p_recv - r * i2).abs() <= 1e-12 * (1.0 + r * i2));
        // counter-flow decomposition
        let counter = -(rho + rho * rho * op.sigma / 2.0) * p;
        prop_assert!((op.q_recv - (-op.sigma / 2.0 * p + counter)).abs() <= tol);
        prop_assert!((op.q_send - (op.sigma / 2.0 * p + counter)).abs() <= tol);
        // bound chain
        let a = 1.0 + rho * rho;
        prop_assert!(x * p <= op.mu + 1e-15);
        prop_assert!(op.mu <= x * p + rho / a + 1e-15);
        prop_assert!(op.sigma <= 2.0 && op.sigma >= 0.0);
    }

    #[test]
    fn solution_rebuilds_to_flat_phasors((imp, p) in feasible_point()) {
        let op = solve_branch(&imp, p).unwrap();
        let st = reconstruct_phasors(&imp, p, op.q_recv);
        prop_assert!((st.v_send.norm() - 1.0).abs() < 1e-9);
        prop_assert!((st.phase_shift() - op.phase_shift).abs() < 1e-9);
        prop_assert!((st.s_send.re - op.p_send).abs() < 1e-9 * (1.0 + p));
        prop_assert!((st.s_send.im - op.q_send).abs() < 1e-9 * (1.0 + p));
        // Beyond a π/3 shift the voltage drop |Z||I| exceeds 1 pu and the
        // flat solution becomes the low root of the biquadratic.
        let high_is_flat = op.phase_shift < PI / 3.0 - 1e-3;
        let low_is_flat = op.phase_shift > PI / 3.0 + 1e-3;
        for (hi, lo) in [
            receiving_voltage_magnitude(1.0, &imp, p, op.q_recv).unwrap(),
            sending_voltage_magnitude(1.0, &imp, op.p_send, op.q_send).unwrap(),
        ] {
            prop_assert!(hi >= lo);
            prop_assert!((hi - 1.0).abs() < 1e-9 || (lo - 1.0).abs() < 1e-9);
            if high_is_flat {
                prop_assert!((hi - 1.0).abs() < 1e-9);
            }
            if low_is_flat {
                prop_assert!((lo - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn phasor_identities_hold_for_any_input(
        r in 0.0..1.0f64, x in 0.01..1.0f64, p in -5.0..5.0f64, q in -5.0..5.0f64
    ) {
        let imp = BranchImpedance::new(r, x).unwrap();
        let st = reconstruct_phasors(&imp, p, q);
        prop_assert!((st.angle_product_imag() - (x * p - r * q)).abs() < 1e-12);
        let i2 = st.current.norm_sqr();
        let sunk = st.s_send - st.s_recv;
        prop_assert!((sunk.re - r * i2).abs() < 1e-12 * (1.0 + i2));
        prop_assert!((sunk.im - x * i2).abs() < 1e-12 * (1.0 + i2));
        prop_assert_eq!(st.v_recv, num_complex::Complex64::new(1.0, 0.0));
    }

    #[test]
    fn inverse_round_trips((imp, p) in feasible_point()) {
        let mu = flow_coefficient(&imp, p).unwrap();
        let back = power_from_flow_coefficient(&imp, mu).unwrap();
        prop_assert!((back - p).abs() <= 1e-10 * p.max(1e-300), "{} vs {}", back, p);
    }

    #[test]
    fn support_increases_with_each_argument(
        rho in 0.0..2.0f64, x in 0.05..1.0f64, f1 in 0.001..0.9f64, f2 in 0.001..0.9f64
    ) {
        prop_assume!((f1 - f2).abs() > 1e-6);
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let imp = BranchImpedance::from_ratio(rho, x).unwrap();
        let pmax = limiting_point(&imp).p_max;
        prop_assert!(support_coefficient(&imp, lo * pmax).unwrap() < support_coefficient(&imp, hi * pmax).unwrap());

        // x with ρ and P fixed, both points feasible
        let p = 0.5 * lo * pmax;
        let x2 = x * (1.0 + hi);
        let imp2 = BranchImpedance::from_ratio(rho, x2).unwrap();
        if p < limiting_point(&imp2).p_max {
            prop_assert!(support_coefficient(&imp, p).unwrap() < support_coefficient(&imp2, p).unwrap());
        }

        // ρ with X and P fixed
        let rho2 = rho + hi;
        let imp3 = BranchImpedance::from_ratio(rho2, x).unwrap();
        if p < limiting_point(&imp3).p_max {
            prop_assert!(support_coefficient(&imp, p).unwrap() < support_coefficient(&imp3, p).unwrap());
        }
    }

    #[test]
    fn derivatives_match_finite_differences(rho in 0.0..2.0f64, x in 0.05..1.0f64, frac in 0.05..0.8f64) {
        let imp = BranchImpedance::from_ratio(rho, x).unwrap();
        let p = frac * limiting_point(&imp).p_max;

        let fd = central_diff(|pp| support_coefficient(&imp, pp).unwrap(), p);
        prop_assert!(rel_err(dsigma_dp(&imp, p).unwrap(), fd) < 1e-5);

        let fd = central_diff(|xx| support_coefficient(&BranchImpedance::from_ratio(rho, xx).unwrap(), p).unwrap(), x);
        prop_assert!(rel_err(dsigma_dx(&imp, p).unwrap(), fd) < 1e-5);

        let rho_at = rho.max(1e-2);
        let imp_r = BranchImpedance::from_ratio(rho_at, x).unwrap();
        let fd = central_diff(|rr| support_coefficient(&BranchImpedance::from_ratio(rr, x).unwrap(), p).unwrap(), rho_at);
        prop_assert!(rel_err(dsigma_drho(&imp_r, p).unwrap(), fd) < 1e-5);

        let mu = flow_coefficient(&imp, p).unwrap();
        let fd = central_diff(|m| power_from_flow_coefficient(&imp, m).unwrap(), mu);
        prop_assert!(rel_err(dp_dmu(&imp, mu).unwrap(), fd) < 1e-5);
        prop_assert!(dp_dmu(&imp, mu).unwrap() > 0.0);
    }

    #[test]
    fn winding_of_assembled_rings(n in 4u32..=40, m_seed in 0u32..10, frac in 0.0..=1.0f64) {
        let m = 1 + m_seed % (n / 4);
        let rho = frac * rho_max(n, m).unwrap();
        let sol = assemble_homogeneous_ring(&RingSpec::new(n, m, 1.0, rho).unwrap()).unwrap();
        let w = winding_sum(&sol.angle_steps).unwrap();
        prop_assert!(w.is_integer());
        prop_assert_eq!(w.m, i64::from(m));
        prop_assert!(sol.angle_steps.iter().all(|s| *s > 0.0 && *s <= PI / 2.0 + 1e-12));
    }

    #[test]
    fn per_unit_round_trip(v in 1e3..1e6f64, s in 1e6..1e9f64, value in -1e9..1e9f64) {
        let base = PerUnitBase::new(v, s).unwrap();
        for kind in [Quantity::Impedance, Quantity::Power, Quantity::Current] {
            let back = from_per_unit(to_per_unit(value, &base, kind), &base, kind);
            prop_assert!((back - value).abs() <= f64::EPSILON * value.abs());
        }
    }
}
