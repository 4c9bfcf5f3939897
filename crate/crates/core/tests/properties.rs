use proptest::prelude::*;
use vpidm::diffusion::marginal_mean;
use vpidm::{LinearBeta, Schedule, SpectroTensor, Time, VeSchedule, VpSchedule};

fn tensor(v: &[f64]) -> SpectroTensor {
    SpectroTensor::from_flat(1, v.len() / 2, v).unwrap()
}

proptest! {
    #[test]
    fn marginal_mean_is_linear(
        a in prop::collection::vec(-10.0..10.0f64, 8),
        b in prop::collection::vec(-10.0..10.0f64, 8),
        c in prop::collection::vec(-10.0..10.0f64, 8),
        d in prop::collection::vec(-10.0..10.0f64, 8),
        k in -3.0..3.0f64,
        t in 0.0..=1.0f64,
    ) {
        let s = VpSchedule::default();
        let t = Time::new(t).unwrap();
        let (x1, y1, x2, y2) = (tensor(&a), tensor(&b), tensor(&c), tensor(&d));
        let lhs = marginal_mean(&x1.lin_comb(1.0, &x2, k).unwrap(), &y1.lin_comb(1.0, &y2, k).unwrap(), &s, t).unwrap();
        let rhs = marginal_mean(&x1, &y1, &s, t).unwrap()
            .lin_comb(1.0, &marginal_mean(&x2, &y2, &s, t).unwrap(), k).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn vp_alpha_and_lambda_decrease(
        bmin in 0.01..1.0f64,
        span in 0.0..20.0f64,
        lam in 0.01..5.0f64,
        t1 in 0.0..1.0f64,
        dt in 1e-3..1.0f64,
    ) {
        let s = VpSchedule::new(LinearBeta::new(bmin, bmin + span).unwrap(), lam).unwrap();
        let t2 = (t1 + dt).min(1.0);
        let (a, b) = (Time::new(t1).unwrap(), Time::new(t2).unwrap());
        prop_assert!(s.alpha(b) < s.alpha(a));
        prop_assert!(s.lambda(b) < s.lambda(a));
        prop_assert!(s.big_g(b) > s.big_g(a));
    }

    #[test]
    fn ve_g_grows(
        smin in 0.01..0.5f64,
        ratio in 1.01..50.0f64,
        lam in 0.01..5.0f64,
        t1 in 0.0..1.0f64,
        dt in 1e-3..1.0f64,
    ) {
        let s = VeSchedule::new(smin, smin * ratio, lam).unwrap();
        let t2 = (t1 + dt).min(1.0);
        prop_assert!(s.big_g_sq(Time::new(t2).unwrap()) > s.big_g_sq(Time::new(t1).unwrap()));
    }
}
