use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stark_ladder::anticontinuum::{canonical_state, enumerate_solution_sets, translate_state};
use stark_ladder::continuation::{
    beta_from_prime, continue_in_beta, dnls_jacobian, jacobian_diagonal_t0, max_norm, residual_of,
    track_beta, NewtonOptions,
};
use stark_ladder::{Error, LatticeParams, SolutionSet, Window};

fn set(sites: &[i64]) -> SolutionSet {
    SolutionSet::new(sites.to_vec()).unwrap()
}

fn params_for(s: &SolutionSet, x: f64) -> LatticeParams {
    LatticeParams::from_ratio(x, 1.0, 0.0, Window::around(s, 5)).unwrap()
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..25 {
        let window = Window::new(-4, 6).unwrap();
        let params = LatticeParams::new(
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..0.5),
            window,
        )
        .unwrap();
        let mut c: Vec<f64> = (0..window.len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        let mu = rng.gen_range(-3.0..3.0);

        let dense = dnls_jacobian(&c, mu, &params).to_dense();
        let n = c.len();
        let scale = dense.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for j in 0..=n {
            let eval = |delta: f64| {
                let mut cc = c.clone();
                let mut m = mu;
                if j < n {
                    cc[j] += delta;
                } else {
                    m += delta;
                }
                residual_of(&cc, m, &params)
            };
            let (plus, minus) = (eval(h), eval(-h));
            for i in 0..=n {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max((fd - dense[i][j]).abs());
            }
        }
        assert!(worst / scale < 1e-6, "relative error {:e}", worst / scale);
    }
}

#[test]
fn certificate_positive_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 200 {
        let x: f64 = rng.gen_range(0.01..8.0);
        let sets = enumerate_solution_sets(x, 100);
        let s = &sets[rng.gen_range(0..sets.len())];
        let st = canonical_state(s, x, 1.0).unwrap();
        match jacobian_diagonal_t0(&st) {
            Ok(cert) => {
                assert!(cert.infimum > 0.0);
                for &l in s.sites() {
                    let t = cert.diagonal[st.window().index(l).unwrap()];
                    let exact = 2.0 * (1.0 - l as f64 / st.mu);
                    assert!((t - exact).abs() < 1e-12);
                    assert!(t > 0.0);
                }
                checked += 1;
            }
            Err(Error::Resonance { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn continued_branch_is_smooth_and_solves() {
    let s = set(&[0, 1]);
    let params = params_for(&s, 1.5);
    let beta = beta_from_prime(&s, &params, 0.02);
    let res = continue_in_beta(&s, &params, beta, 10).unwrap();
    assert!(res.certificate > 0.0);
    assert!(res.path.iter().all(|p| p.residual < 1e-12));
    let r = residual_of(&res.state.coefficients, res.state.mu, &res.state.params);
    assert!(max_norm(&r) < 1e-12);

    let dbeta = beta / 10.0;
    let jumps: Vec<f64> = res
        .path
        .windows(2)
        .map(|w| (w[1].mu - w[0].mu).abs())
        .collect();
    for w in jumps.windows(2) {
        let slope = w[0] / dbeta;
        assert!(
            w[1] <= 10.0 * dbeta * slope.max(1e-12),
            "jump {} after {}",
            w[1],
            w[0]
        );
    }
}

#[test]
fn round_trip_to_zero_recovers_anticontinuum() {
    let s = set(&[0, 1]);
    let params = params_for(&s, 1.5);
    let beta = beta_from_prime(&s, &params, 0.02);
    let res = continue_in_beta(&s, &params, beta, 10).unwrap();
    let (back, _) = track_beta(&res.state, 0.0, 10, NewtonOptions::default()).unwrap();
    let exact = canonical_state(&s, 1.5, 1.0).unwrap();
    for (a, b) in back.coefficients.iter().zip(&exact.coefficients) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((back.mu - exact.mu).abs() < 1e-10);
}

#[test]
fn distance_from_anticontinuum_is_linear_in_beta() {
    let s = set(&[0]);
    let params = params_for(&s, 0.5);
    let exact = canonical_state(&s, 0.5, 1.0).unwrap();
    let dist = |bp: f64| {
        let res = continue_in_beta(&s, &params, beta_from_prime(&s, &params, bp), 4).unwrap();
        res.state
            .coefficients
            .iter()
            .zip(&exact.coefficients)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let (d1, d2, d3) = (dist(0.01), dist(0.005), dist(0.0025));
    for r in [d1 / d2, d2 / d3] {
        assert!((r - 2.0).abs() < 0.05, "ratio {r}");
    }
}

#[test]
fn translation_commutes_with_continuation() {
    let s = set(&[0, 1]);
    let params = params_for(&s, 1.5);
    let beta = beta_from_prime(&s, &params, 0.02);
    let base = continue_in_beta(&s, &params, beta, 10).unwrap();
    for j in [-3i64, 4] {
        let shifted_start = translate_state(&canonical_state(&s, 1.5, 1.0).unwrap(), j).unwrap();
        let (moved, _) = track_beta(&shifted_start, beta, 10, NewtonOptions::default()).unwrap();
        let expect = translate_state(&base.state, j).unwrap();
        assert_eq!(moved.window(), expect.window());
        for (a, b) in moved.coefficients.iter().zip(&expect.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((moved.mu - expect.mu).abs() < 1e-10);
    }
}
