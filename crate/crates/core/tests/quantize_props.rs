//! Shape of the midpoint-quantile discretization.

use orlicz_bounds::gamma_dist::{gamma_cdf, GammaParams};
use orlicz_bounds::quantize::{discretization_sup_error, quantize};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atoms_increase_and_track_the_cdf(a in 0.3f64..15.0, b in 0.01f64..2.0, m in 1u32..12) {
        let p = GammaParams::new(a, b).unwrap();
        let s = quantize(&p, m).unwrap();
        let n = s.len();
        prop_assert_eq!(n, 1usize << m);
        prop_assert!(s.atoms().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.atoms()[0] > 0.0);
        // each atom sits at the midpoint of its probability cell
        for (i, &u) in s.atoms().iter().enumerate() {
            let want = (2 * i + 1) as f64 / (2 * n) as f64;
            prop_assert!((gamma_cdf(&p, u) - want).abs() < 1e-10);
        }
        let err = discretization_sup_error(&s);
        prop_assert!(err <= 1.0 / n as f64, "{err} > 1/{n}");
        prop_assert!(err >= 0.5 / n as f64 - 1e-9);
    }
}

#[test]
fn step_cdf_counts_atoms() {
    let s = quantize(&GammaParams::new(4.60, 0.142).unwrap(), 3).unwrap();
    assert_eq!(s.step_cdf(0.0), 0.0);
    assert_eq!(s.step_cdf(s.atoms()[2]), 3.0 / 8.0);
    assert_eq!(s.step_cdf(f64::MAX), 1.0);
}

#[test]
fn rejects_out_of_range_exponents() {
    let p = GammaParams::new(1.0, 1.0).unwrap();
    assert!(quantize(&p, 0).is_err());
    assert!(quantize(&p, 40).is_err());
}
