use nrpca_core::dist::{f_cdf, ks_test};
use nrpca_core::simulation::test_draws;
use nrpca_core::{
    contribution_ci, gen_spiked, test_f3, Hypothesis, Model, NrEstimate, Seed, SpikeScenario, TwoSampleScenario,
};

#[test]
fn contribution_interval_covers_the_true_ratio() {
    let (d, n, reps) = (1024, 10, 400);
    let sc = SpikeScenario { model: Model::A, d, n, seed: Seed(31) };
    let mut covered = 0;
    for r in 0..reps {
        let sample = gen_spiked(&sc, &mut Seed(31).substream(&[r])).unwrap();
        let truth = sample.lambda1 / (sample.lambda1 + sample.kappa);
        let est = NrEstimate::fit(&sample.x).unwrap();
        let ci = contribution_ci(est.lambda_tilde_1(), est.kappa_tilde, n, 0.05).unwrap();
        covered += usize::from(ci.lower <= truth && truth <= ci.upper);
    }
    let rate = covered as f64 / reps as f64;
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}

#[test]
fn null_f1_follows_the_f_law() {
    let sc = TwoSampleScenario { hypothesis: Hypothesis::H0, d: 1024, n1: 10, n2: 20, seed: Seed(5) };
    let f1: Vec<f64> = test_draws(&sc, 600).unwrap().iter().map(|s| s[0].unwrap()).collect();
    let ks = ks_test(&f1, |x| f_cdf(9.0, 19.0, x)).unwrap();
    assert!(ks.p_value > 0.001, "{ks:?}");
}

#[test]
fn same_population_rarely_rejected_by_f3() {
    let mut rejections = 0;
    for r in 0..100 {
        let sc = SpikeScenario { model: Model::B, d: 512, n: 12, seed: Seed(8) };
        let a = gen_spiked(&sc, &mut Seed(8).substream(&[0, r])).unwrap();
        let b = gen_spiked(&sc, &mut Seed(8).substream(&[1, r])).unwrap();
        let out = test_f3(&NrEstimate::fit(&a.x).unwrap(), &NrEstimate::fit(&b.x).unwrap(), 0.05).unwrap();
        rejections += usize::from(out.reject_null);
    }
    assert!(rejections <= 15, "{rejections} rejections out of 100");
}
