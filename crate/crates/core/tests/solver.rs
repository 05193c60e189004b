use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdars_core::array::{feasible_sparsities, los_channels};
use rdars_core::campaign::drop_ues;
use rdars_core::closed_form::{proposition1_select, single_ue_gamma_max, SparsityCase, DEFAULT_REGIME_FACTOR};
use rdars_core::validation::reference_scenario;
use rdars_core::wmmse::{solve_at_eta, wa_solve};

#[test]
fn single_ue_levels_tie_and_resolve_to_compact() {
    let sc = reference_scenario(32, 128, 20, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let ues = drop_ues(sc.ue_center, sc.ue_radius, 1, &mut rng).unwrap();
        let geo = sc.geometry(&ues).unwrap();
        let wa = wa_solve(&geo, &sc.config).unwrap();
        assert_eq!(wa.mode.eta, 1);
        let rates: Vec<f64> = wa.rates.iter().map(|r| r.1).collect();
        let hi = rates.iter().cloned().fold(f64::MIN, f64::max);
        let lo = rates.iter().cloned().fold(f64::MAX, f64::min);
        assert!((hi - lo) / lo <= 1e-6, "{rates:?}");
        let closed = (1.0 + single_ue_gamma_max(&sc.config, geo.kappa_br, geo.kappa_ru[0])).log2();
        assert!((wa.report.sum_rate - closed).abs() <= 1e-3 * closed);
    }
}

#[test]
fn two_ue_optimum_lands_in_null_set() {
    let sc = reference_scenario(32, 128, 20, 2);
    let cfg = &sc.config;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (mut hits, mut total) = (0, 0);
    while total < 30 {
        let ues = drop_ues(sc.ue_center, sc.ue_radius, 2, &mut rng).unwrap();
        let geo = sc.geometry(&ues).unwrap();
        let sel = proposition1_select(&geo, cfg, DEFAULT_REGIME_FACTOR).unwrap();
        if sel.case != SparsityCase::Subcase1 || sel.fallback {
            continue;
        }
        total += 1;
        let wa = wa_solve(&geo, cfg).unwrap();
        if sel.etas.contains(&wa.mode.eta) {
            hits += 1;
        }
    }
    assert!(hits * 10 >= total * 9, "{hits}/{total}");
}

#[test]
fn every_level_respects_constraints() {
    let sc = reference_scenario(8, 32, 4, 4);
    let cfg = &sc.config;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ues = drop_ues(sc.ue_center, sc.ue_radius, 4, &mut rng).unwrap();
    let geo = sc.geometry(&ues).unwrap();
    let ch = los_channels(&geo, cfg);
    for eta in feasible_sparsities(32, 4).unwrap() {
        let out = solve_at_eta(&ch, cfg, eta).unwrap();
        assert!(out.state.solution.power() <= cfg.total_power * (1.0 + 1e-6));
        assert!(out.state.solution.passive.modulus_error() <= 1e-12);
        assert!(out.state.zeta.iter().all(|z| *z > 0.0));
        assert!(out.state.rho >= 0.0);
        assert_eq!(out.state.mode.eta, eta);
    }
}
