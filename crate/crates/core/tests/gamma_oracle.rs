//! The in-house gamma special functions against `statrs`, and the
//! moment-matching fit against seeded draws from `rand_distr`.

use orlicz_bounds::gamma_dist::{
    fit_moment_matching, gamma_cdf, gamma_pdf, gamma_quantile, ln_gamma, theoretical_moments,
    GammaParams,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::Distribution;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma};

fn oracle(a: f64, b: f64) -> Gamma {
    Gamma::new(a, 1.0 / b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ln_gamma_agrees(x in 1e-3f64..200.0) {
        let want = statrs::function::gamma::ln_gamma(x);
        prop_assert!((ln_gamma(x) - want).abs() <= 1e-12 * want.abs().max(1.0), "{x}");
    }

    #[test]
    fn cdf_and_pdf_agree(a in 0.2f64..20.0, b in 0.01f64..3.0, r in 0.0f64..1.0) {
        let p = GammaParams::new(a, b).unwrap();
        let g = oracle(a, b);
        // probe up to roughly ten standard deviations past the mean
        let u = r * (a * b + 10.0 * a.sqrt() * b);
        prop_assert!((gamma_cdf(&p, u) - g.cdf(u)).abs() <= 1e-12, "{a} {b} {u}");
        let want = g.pdf(u);
        prop_assert!((gamma_pdf(&p, u) - want).abs() <= 1e-10 * want.max(1.0), "{a} {b} {u}");
    }

    #[test]
    fn quantile_inverts_the_oracle_cdf(a in 0.2f64..20.0, b in 0.01f64..3.0, q in 1e-6f64..0.999_999) {
        let p = GammaParams::new(a, b).unwrap();
        let u = gamma_quantile(&p, q).unwrap();
        prop_assert!((oracle(a, b).cdf(u) - q).abs() <= 1e-11, "{a} {b} {q}: {u}");
    }
}

#[test]
fn fit_recovers_the_shape_from_draws() {
    let (a, b) = (4.60, 0.142);
    let dist = rand_distr::Gamma::new(a, b).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let draws: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
    let fit = fit_moment_matching(&draws).unwrap();
    assert!((fit.shape() - a).abs() <= 0.03 * a, "{fit}");
    assert!((fit.scale() - b).abs() <= 0.03 * b, "{fit}");
}

#[test]
fn fit_of_theoretical_moments_round_trips() {
    for (a, b) in [(4.60, 0.142), (0.801, 0.0541), (25.0, 2.0)] {
        let m = theoretical_moments(&GammaParams::new(a, b).unwrap());
        // two points with the theoretical mean and unbiased variance
        let half_gap = (m.variance / 2.0).sqrt();
        let fit = fit_moment_matching(&[m.mean - half_gap, m.mean + half_gap]).unwrap();
        assert!((fit.shape() - a).abs() <= 1e-12 * a);
        assert!((fit.scale() - b).abs() <= 1e-12 * b);
    }
}
