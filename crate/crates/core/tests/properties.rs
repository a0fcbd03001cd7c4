use jbg::core_math::{distinguishability, equal_prior_jbg, p2_from_p1, stationarity_residual};
use jbg::optimizer::{find_sb, optimize_reduced, OptimizerConfig};
use jbg::DiscriminationInstance;
use proptest::prelude::*;

fn optimum(s: f64, eta1: f64, n: usize) -> jbg::StrategyResult {
    let inst = DiscriminationInstance::with_prior(s, eta1, n).unwrap();
    optimize_reduced(&inst, &OptimizerConfig::default()).unwrap()
}

/// `|√(p1(1-p2)) - √(p2(1-p1))|`, the combination the larger root satisfies
/// when `p1 < 1 - s_eff²`.
fn minus_combination(p1: f64, p2: f64) -> f64 {
    ((p1 * (1.0 - p2)).sqrt() - (p2 * (1.0 - p1)).sqrt()).abs()
}

fn check_round_trip(p1: f64, s_eff: f64) -> Result<(), String> {
    let p2 = p2_from_p1(p1, s_eff).map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&p2) {
        return Err(format!("p2 = {p2} out of range"));
    }
    let plus = distinguishability(p1, p2).unwrap();
    let threshold = 1.0 - s_eff * s_eff;
    let err = if p1 >= threshold + 1e-9 {
        (plus - s_eff).abs()
    } else if p1 <= threshold - 1e-9 {
        (minus_combination(p1, p2) - s_eff).abs()
    } else {
        // at the switch point both combinations agree with s_eff
        (plus - s_eff)
            .abs()
            .min((minus_combination(p1, p2) - s_eff).abs())
    };
    if err <= 1e-10 {
        Ok(())
    } else {
        Err(format!(
            "p1 = {p1}, s_eff = {s_eff}, p2 = {p2}: error {err}"
        ))
    }
}

#[test]
fn round_trip_on_thousand_point_grid() {
    for i in 0..40 {
        for j in 0..25 {
            let p1 = i as f64 / 39.0;
            let s_eff = j as f64 / 24.0;
            check_round_trip(p1, s_eff).unwrap();
        }
    }
}

#[test]
fn symmetric_point_is_stationary() {
    for k in 0..100 {
        let s_eff = 0.005 + 0.99 * k as f64 / 99.0;
        for n in 1..=4 {
            let s = s_eff.powi(n as i32);
            let inst = DiscriminationInstance::equal_priors(s, n).unwrap();
            let p = 0.5 * (1.0 + (1.0 - s_eff * s_eff).sqrt());
            let r = stationarity_residual(p, &inst).unwrap();
            assert!(r.abs() <= 1e-9, "s_eff = {s_eff}, N = {n}: {r}");
        }
    }
}

#[test]
fn joint_success_non_increasing_in_overlap() {
    for &(eta1, n) in &[(0.5, 2), (0.2, 2), (0.7, 3), (0.05, 4)] {
        let mut previous = f64::INFINITY;
        for k in 0..100 {
            let s = k as f64 / 99.0;
            let joint = optimum(s, eta1, n).joint_success;
            assert!(joint <= previous + 1e-12, "η₁ = {eta1}, N = {n}, s = {s}");
            previous = joint;
        }
    }
}

#[test]
fn joint_success_continuous_across_threshold() {
    let cfg = OptimizerConfig::default();
    for n in [2, 3] {
        let s_b = find_sb(n, &cfg).unwrap();
        // the one-sided slopes agree away from s_b, so any step beyond the
        // linear trend across the threshold would be a jump
        let h = 1e-4;
        let slope = (optimum(s_b + h, 0.5, n).joint_success
            - optimum(s_b - h, 0.5, n).joint_success)
            / (2.0 * h);
        for delta in [1e-6, 1e-7, 1e-8] {
            let below = optimum(s_b - delta, 0.5, n).joint_success;
            let above = optimum(s_b + delta, 0.5, n).joint_success;
            let jump = (above - below - 2.0 * delta * slope).abs();
            assert!(jump <= 1e-6, "N = {n}, δ = {delta}: {jump}");
        }
        let symmetric = equal_prior_jbg(s_b, n).unwrap().joint_success;
        assert!((optimum(s_b, 0.5, n).joint_success - symmetric).abs() <= 1e-6);
    }
}

#[test]
fn washout_towards_one_sided_strategy() {
    for n in 1..=4 {
        for &s in &[0.2_f64, 0.5, 0.8] {
            let x = s.powf(2.0 / n as f64);
            let mut previous_gap = f64::INFINITY;
            for &eta1 in &[1e-2, 1e-3, 1e-4, 1e-6] {
                let r = optimum(s, eta1, n);
                let pair = r.stages[0];
                let gap = (pair.p1 - (1.0 - x)).abs() + (1.0 - pair.p2);
                assert!(gap <= previous_gap + 1e-12, "N = {n}, s = {s}, η₁ = {eta1}");
                previous_gap = gap;
                assert!(eta1 * pair.p1 <= eta1);
            }
            assert!(previous_gap < 1e-3, "N = {n}, s = {s}: {previous_gap}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn distinguishability_is_symmetric_and_bounded(a in 0.0..=1.0_f64, b in 0.0..=1.0_f64) {
        let ab = distinguishability(a, b).unwrap();
        let ba = distinguishability(b, a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
    }

    #[test]
    fn p2_round_trip(p1 in 0.0..=1.0_f64, s_eff in 0.0..=1.0_f64) {
        prop_assert!(check_round_trip(p1, s_eff).is_ok(), "{:?}", check_round_trip(p1, s_eff));
    }

    #[test]
    fn swapping_priors_mirrors_optimum(s in 0.0..=1.0_f64, eta1 in 0.0..=1.0_f64, n in 1usize..=5) {
        let direct = optimum(s, eta1, n);
        let mirrored = optimum(s, 1.0 - eta1, n);
        // 1 - (1 - η₁) need not equal η₁ exactly, so compare through the instance
        let inst = DiscriminationInstance::with_prior(s, 1.0 - eta1, n).unwrap();
        let again = optimize_reduced(&inst.swapped(), &OptimizerConfig::default()).unwrap();
        prop_assert_eq!(mirrored.stages[0].swapped(), again.stages[0]);
        prop_assert_eq!(mirrored.joint_success, again.joint_success);
        prop_assert!((direct.joint_success - again.joint_success).abs() <= 1e-12);
    }

    #[test]
    fn joint_success_non_increasing_in_receivers(s in 0.0..=1.0_f64, eta1 in 0.0..=1.0_f64) {
        let mut previous = f64::INFINITY;
        for n in 1..=5 {
            let joint = optimum(s, eta1, n).joint_success;
            prop_assert!(joint <= previous + 1e-12, "N = {}", n);
            previous = joint;
        }
    }

    #[test]
    fn optimum_is_stationary_or_on_boundary(s in 0.05..0.95_f64, eta1 in 0.05..0.95_f64, n in 1usize..=4) {
        let inst = DiscriminationInstance::with_prior(s, eta1, n).unwrap();
        let pair = optimize_reduced(&inst, &OptimizerConfig::default()).unwrap().stages[0];
        if pair.p1 > 1e-6 && pair.p1 < 1.0 - 1e-6 && pair.p2 < 1.0 - 1e-6 {
            let r = stationarity_residual(pair.p1, &inst).unwrap();
            prop_assert!(r.abs() <= 1e-8, "residual {}", r);
        }
    }
}
