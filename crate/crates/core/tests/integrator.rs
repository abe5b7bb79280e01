use snse_core::integrator::{simulate, IntegratorConfig, RunSpec, Scheme};
use snse_core::spectral::{Bilinear, CoriolisOperator, Field, SparseTensor, SpectralBasis, SpectralModel};
use snse_core::stable::StableParams;

fn linear_model(lambda: Vec<f64>, forcing: Vec<f64>) -> SpectralModel {
    let n = lambda.len();
    SpectralModel::new(
        SpectralBasis::new(lambda, 1).unwrap(),
        Bilinear::Abstract(SparseTensor::zero(n)),
        CoriolisOperator::zero(n),
        Field::from_vec(forcing),
    )
    .unwrap()
}

fn run(model: &SpectralModel, params: &StableParams, cfg: &IntegratorConfig, u0: &Field, traj: u64) -> Vec<Field> {
    let spec = RunSpec {
        cfg,
        model,
        params,
        alpha: 0.0,
        eta: 0.0,
        seed: 9,
        trajectory: traj,
        config_hash: "test",
    };
    simulate(u0, &spec).unwrap().u
}

fn silent() -> StableParams {
    StableParams::new(1.5, vec![0.0]).unwrap()
}

/// `u(t) = e^{-lambda t} u0 + (1 - e^{-lambda t}) f / lambda` per mode.
fn linear_error(h: f64) -> f64 {
    let lambda = vec![1.0, 2.0, 5.0];
    let f = vec![0.5, 0.0, 1.0];
    let model = linear_model(lambda.clone(), f.clone());
    let u0 = Field::from_vec(vec![1.0, -1.0, 0.3]);
    let cfg = IntegratorConfig::new(h, 1.0);
    let u = run(&model, &silent(), &cfg, &u0, 0);
    let last = u.last().unwrap();
    (0..3)
        .map(|l| {
            let e = (-lambda[l]).exp();
            (last[l] - (e * u0[l] + (1.0 - e) * f[l] / lambda[l])).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn linear_decay_converges_at_first_order() {
    let (e1, e2, e3) = (linear_error(1e-2), linear_error(5e-3), linear_error(2.5e-3));
    assert!(e1 < 1e-2, "{e1}");
    for r in [e1 / e2, e2 / e3] {
        assert!((r - 2.0).abs() < 0.1, "order ratio {r}");
    }
}

#[test]
fn steady_forcing_fixed_point_is_preserved() {
    // f = nu A u* with B = C = 0 and no noise.
    let lambda = vec![1.0, 3.0];
    let ustar = Field::from_vec(vec![0.7, -0.2]);
    let f = vec![0.7, -0.6];
    let model = linear_model(lambda, f);
    let cfg = IntegratorConfig::new(0.01, 2.0);
    for u in run(&model, &silent(), &cfg, &ustar, 0) {
        let mut d = u.clone();
        d.axpy(-1.0, &ustar);
        assert!(d.norm() < 1e-14, "{d:?}");
    }
}

#[test]
fn explicit_scheme_agrees_to_first_order() {
    let model = linear_model(vec![1.0, 2.0], vec![0.0, 0.0]);
    let u0 = Field::from_vec(vec![1.0, 1.0]);
    let mut cfg = IntegratorConfig::new(1e-3, 1.0);
    let semi = run(&model, &silent(), &cfg, &u0, 0);
    cfg.scheme = Scheme::ExplicitEuler;
    let expl = run(&model, &silent(), &cfg, &u0, 0);
    for (l, lambda) in [1.0f64, 2.0].into_iter().enumerate() {
        let exact = (-lambda).exp();
        let (s, e) = (semi.last().unwrap()[l], expl.last().unwrap()[l]);
        // Implicit overshoots, explicit undershoots, both by O(h).
        assert!(s > exact && e < exact, "{s} {e} {exact}");
        assert!((s - exact).abs() < 2e-3 && (e - exact).abs() < 2e-3);
    }
}

fn noisy_model() -> (SpectralModel, StableParams) {
    let mut model = SpectralModel::nse2d(8, 2, 0.0).unwrap();
    model.forcing[0] = 1.0;
    (model, StableParams::new(1.5, vec![0.2, 0.2]).unwrap())
}

#[test]
fn fixed_seed_is_reproducible_and_trajectories_differ() {
    let (model, params) = noisy_model();
    let cfg = IntegratorConfig::new(1e-2, 2.0);
    let u0 = Field::unit(model.n(), 0);
    let a = run(&model, &params, &cfg, &u0, 0);
    let b = run(&model, &params, &cfg, &u0, 0);
    let c = run(&model, &params, &cfg, &u0, 1);
    assert_eq!(a, b);
    assert_ne!(a.last(), c.last());
}

#[test]
fn nearby_initial_conditions_stay_close_under_shared_noise() {
    let (model, params) = noisy_model();
    let cfg = IntegratorConfig::new(1e-2, 1.0);
    let u0 = Field::unit(model.n(), 0);
    let mut u1 = u0.clone();
    u1[3] += 1e-8;
    let (a, b) = (run(&model, &params, &cfg, &u0, 0), run(&model, &params, &cfg, &u1, 0));
    let mut d = a.last().unwrap().clone();
    d.axpy(-1.0, b.last().unwrap());
    assert!(d.norm() > 0.0 && d.norm() < 1e-7, "{}", d.norm());
}

#[test]
fn recorded_decomposition_is_exact() {
    let (model, params) = noisy_model();
    let mut cfg = IntegratorConfig::new(1e-2, 1.0);
    cfg.record_stride = 10;
    let spec = RunSpec {
        cfg: &cfg,
        model: &model,
        params: &params,
        alpha: 2.0,
        eta: 0.1,
        seed: 3,
        trajectory: 0,
        config_hash: "",
    };
    let rec = simulate(&Field::unit(model.n(), 1), &spec).unwrap();
    assert_eq!(rec.len(), 11);
    assert!((rec.dt() - 0.1).abs() < 1e-15);
    for i in 0..rec.len() {
        for l in 0..model.n() {
            let z = rec.z[i].get(l).copied().unwrap_or(0.0);
            assert_eq!(rec.u[i][l], rec.v[i][l] + z);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let (model, params) = noisy_model();
    let u0 = Field::zeros(model.n());
    for cfg in [IntegratorConfig::new(0.0, 1.0), IntegratorConfig::new(0.1, 0.01)] {
        let spec = RunSpec {
            cfg: &cfg,
            model: &model,
            params: &params,
            alpha: 0.0,
            eta: 0.0,
            seed: 0,
            trajectory: 0,
            config_hash: "",
        };
        assert!(simulate(&u0, &spec).is_err());
    }
}
