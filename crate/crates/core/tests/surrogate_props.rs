use dsqn::neuron::heaviside;
use dsqn::surrogate::{surrogate_grad, surrogate_value};
use dsqn::SurrogateConfig;
use proptest::prelude::*;

fn grid() -> impl Iterator<Item = f64> {
    (-500..=500).map(|i| f64::from(i) * 0.01)
}

fn check_central_difference(cfg: &SurrogateConfig) {
    let h = 1e-5;
    for x in grid() {
        let numeric = (surrogate_value(x + h, cfg).unwrap() - surrogate_value(x - h, cfg).unwrap()) / (2.0 * h);
        let analytic = surrogate_grad(x, cfg).unwrap();
        let rel = (numeric - analytic).abs() / analytic.abs();
        assert!(rel <= 1e-6, "{cfg:?} at x = {x}: {analytic} vs {numeric} ({rel:e})");
    }
}

#[test]
fn arctan_gradient_matches_central_difference() {
    for alpha in [1.0, 2.0, 4.0] {
        check_central_difference(&SurrogateConfig::arctan(alpha));
    }
}

#[test]
fn sigmoid_gradient_matches_central_difference() {
    // steeper sigmoids put values within a few ulps of 1 on this grid, where a
    // 1e-5 difference quotient is dominated by rounding
    for alpha in [1.0, 2.0] {
        check_central_difference(&SurrogateConfig::sigmoid(alpha));
    }
}

#[test]
fn arctan_matches_closed_form() {
    let cfg = SurrogateConfig::arctan(2.0);
    for x in grid() {
        let value = (std::f64::consts::PI * x).atan() / std::f64::consts::PI + 0.5;
        let grad = 1.0 / (1.0 + (std::f64::consts::PI * x).powi(2));
        assert!((surrogate_value(x, &cfg).unwrap() - value).abs() <= 1e-15);
        assert!((surrogate_grad(x, &cfg).unwrap() - grad).abs() <= 1e-15);
    }
}

fn any_config() -> impl Strategy<Value = SurrogateConfig> {
    (any::<bool>(), 0.1f64..10.0).prop_map(|(arctan, alpha)| {
        if arctan {
            SurrogateConfig::arctan(alpha)
        } else {
            SurrogateConfig::sigmoid(alpha)
        }
    })
}

proptest! {
    #[test]
    fn symmetric_about_zero(cfg in any_config(), x in -20.0f64..20.0) {
        let v = surrogate_value(x, &cfg).unwrap();
        let w = surrogate_value(-x, &cfg).unwrap();
        prop_assert!((v + w - 1.0).abs() <= 1e-15);
        let g = surrogate_grad(x, &cfg).unwrap();
        let k = surrogate_grad(-x, &cfg).unwrap();
        prop_assert!((g - k).abs() <= 1e-15 * g.max(k));
    }

    #[test]
    fn values_in_unit_interval_and_gradient_peaks_at_zero(cfg in any_config(), x in -20.0f64..20.0) {
        let v = surrogate_value(x, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let g = surrogate_grad(x, &cfg).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(g <= surrogate_grad(0.0, &cfg).unwrap());
        if x.abs() < 5.0 {
            prop_assert!(g > 0.0);
        }
    }

    #[test]
    fn larger_alpha_is_closer_to_the_step(arctan in any::<bool>(), a1 in 0.1f64..5.0, extra in 0.1f64..5.0, x in prop_oneof![-3.0f64..-0.05, 0.05f64..3.0]) {
        let a2 = a1 + extra;
        let make = |a| if arctan { SurrogateConfig::arctan(a) } else { SurrogateConfig::sigmoid(a) };
        let step = heaviside(x);
        let d1 = (surrogate_value(x, &make(a1)).unwrap() - step).abs();
        let d2 = (surrogate_value(x, &make(a2)).unwrap() - step).abs();
        prop_assert!(d2 <= d1, "alpha {a1} -> {d1}, alpha {a2} -> {d2}");
    }
}
