use hom_metrology::estimation::{
    fit_hom, mc_crb_study, simulate_counts, CountsMode, FitFamily, FitOptions,
};
use hom_metrology::grid::UniformGrid;
use hom_metrology::metrology::{max_fisher, Probe, VisibilityModel};
use hom_metrology::spectra::StateDescriptor;

fn gauss() -> Probe {
    Probe::analytic(&StateDescriptor::Gauss { sigma: 1.0 }).unwrap()
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    0.5 * (x[(x.len() - 1) / 2] + x[x.len() / 2])
}

#[test]
fn fitted_visibility_converges_with_flux() {
    let (probe, v) = (gauss(), 0.9);
    let taus = UniformGrid::linspace(-4.0, 4.0, 41).unwrap().points();
    let opts = FitOptions::new(FitFamily::Gauss);
    let errs: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&nu| {
            median(
                (0..50)
                    .map(|seed| {
                        let rec = simulate_counts(
                            &probe,
                            &VisibilityModel::new(v).unwrap(),
                            &taus,
                            nu,
                            seed,
                            CountsMode::Binomial,
                        )
                        .unwrap();
                        (fit_hom(&rec, &opts).unwrap().v_hat - v).abs()
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // error falls like 1/sqrt(flux): a decade of flux is a factor ~3.16
    assert!(errs[0] / errs[2] > 5.0, "{errs:?}");
}

#[test]
fn fitted_width_recovers_the_generating_state() {
    let probe = Probe::analytic(&StateDescriptor::Gauss { sigma: 2.0 }).unwrap();
    let taus = UniformGrid::linspace(-2.0, 2.0, 81).unwrap().points();
    let rec = simulate_counts(
        &probe,
        &VisibilityModel::new(0.9).unwrap(),
        &taus,
        100_000,
        11,
        CountsMode::Binomial,
    )
    .unwrap();
    let fit = fit_hom(&rec, &FitOptions::new(FitFamily::Gauss)).unwrap();
    let se = fit.std_error("sigma").unwrap();
    assert!((fit.param_hat[0] - 2.0).abs() < 5.0 * se, "{fit:?}");
    assert!(!fit.model_mismatch);
}

#[test]
fn wrong_family_is_flagged() {
    let probe = Probe::analytic(&StateDescriptor::Rect { delta_omega: 4.0 }).unwrap();
    let taus = UniformGrid::linspace(-4.0, 4.0, 81).unwrap().points();
    let rec = simulate_counts(
        &probe,
        &VisibilityModel::new(0.95).unwrap(),
        &taus,
        100_000,
        5,
        CountsMode::Binomial,
    )
    .unwrap();
    assert!(
        fit_hom(&rec, &FitOptions::new(FitFamily::Gauss))
            .unwrap()
            .model_mismatch
    );
    assert!(
        !fit_hom(&rec, &FitOptions::new(FitFamily::Rect))
            .unwrap()
            .model_mismatch
    );
}

#[test]
fn delay_estimator_is_unbiased_at_the_operating_point() {
    let (probe, v) = (gauss(), VisibilityModel::new(0.95).unwrap());
    let tau_m = max_fisher(&probe, &v).unwrap().tau_m;
    let r = mc_crb_study(&probe, &v, tau_m, 100_000, 400, 99).unwrap();
    let se_mean = r.empirical_std / (r.replicates as f64).sqrt();
    assert!(
        r.bias.abs() < 4.0 * se_mean,
        "bias {} vs standard error {se_mean}",
        r.bias
    );
    assert!((r.ratio_to_crb - 1.0).abs() < 0.15, "{}", r.ratio_to_crb);
    assert_eq!(r.clipped, 0);
}
