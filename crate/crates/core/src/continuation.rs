//! Persistence of anticontinuum states to small hopping β > 0.
//!
//! The stationary lattice equation
//! `μ c_l = -β (c_{l+1} + c_{l-1} + 2 c_l) + ν c_l³ + f l c_l`
//! is solved together with `Σ c_l² = 1` as one square system in the unknowns
//! `(c_l, μ)`, with `c = 0` outside the window. Its Jacobian is tridiagonal in
//! the `c` block, bordered by the `μ` column and the normalization row.
//!
//! Persistence from β = 0 is certified by the diagonal linearization
//! `T_l = f l / μ^S - 1 + 3 c'_l²` in the rescaled variables
//! `c' = (ν/μ^S)^{1/2} c`, `β' = β/μ^S`, `f' = f/μ^S`, which must stay away
//! from zero on every site.

use serde::{Deserialize, Serialize};

use crate::anticontinuum::StationaryState;
use crate::anticontinuum::{build_state, energy_of_set};
use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, SignPattern, SolutionSet, Window};
use crate::linalg::BorderedTridiagonal;

/// `|μ^S/f - l| ` below this for an integer `l ∉ S` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Bound on the max-norm of the extended residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Extended residual: one component per window site, then `Σ c² - 1`.
pub fn residual_of(coefficients: &[f64], mu: f64, params: &LatticeParams) -> Vec<f64> {
    let window = params.window;
    let n = coefficients.len();
    debug_assert_eq!(n, window.len());
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= n {
            0.0
        } else {
            coefficients[i as usize]
        }
    };
    let mut out = Vec::with_capacity(n + 1);
    for (i, &c) in coefficients.iter().enumerate() {
        let l = window.site(i) as f64;
        let hop = at(i as isize + 1) + at(i as isize - 1) + 2.0 * c;
        out.push(-params.beta * hop + params.nu * c * c * c + params.f * l * c - mu * c);
    }
    out.push(coefficients.iter().map(|c| c * c).sum::<f64>() - 1.0);
    out
}

/// [`residual_of`] for a state, evaluated with `params` (window taken from the state).
pub fn dnls_residual(state: &StationaryState, params: &LatticeParams) -> Vec<f64> {
    let params = params.with_window(state.window());
    residual_of(&state.coefficients, state.mu, &params)
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Jacobian of [`residual_of`] with respect to `(c_lo, …, c_hi, μ)`.
pub fn dnls_jacobian(coefficients: &[f64], mu: f64, params: &LatticeParams) -> BorderedTridiagonal {
    let window = params.window;
    let n = coefficients.len();
    let off = vec![-params.beta; n.saturating_sub(1)];
    let diag = coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let l = window.site(i) as f64;
            -2.0 * params.beta + 3.0 * params.nu * c * c + params.f * l - mu
        })
        .collect();
    BorderedTridiagonal {
        sub: off.clone(),
        diag,
        sup: off,
        col: coefficients.iter().map(|c| -c).collect(),
        row: coefficients.iter().map(|c| 2.0 * c).collect(),
        corner: 0.0,
    }
}

/// The lattice equation divided through by a positive reference energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RescaledProblem {
    /// `β' = β/μ^S`
    pub beta_prime: f64,
    /// `f' = f/μ^S`
    pub f_prime: f64,
    /// `μ^S`
    pub base_mu: f64,
}

impl RescaledProblem {
    pub fn new(base_mu: f64, params: &LatticeParams) -> Result<Self> {
        if !(base_mu.is_finite() && base_mu > 0.0) {
            return Err(Error::Domain(format!(
                "rescaling needs mu^S > 0, got {base_mu}; translate the set first"
            )));
        }
        Ok(Self {
            beta_prime: params.beta / base_mu,
            f_prime: params.f / base_mu,
            base_mu,
        })
    }

    /// Hopping `β` corresponding to a rescaled hopping `β'`.
    pub fn beta_for(&self, beta_prime: f64) -> f64 {
        beta_prime * self.base_mu
    }

    /// `c' = (ν/μ^S)^{1/2} c`.
    pub fn rescale(&self, nu: f64, coefficients: &[f64]) -> Vec<f64> {
        let s = (nu / self.base_mu).sqrt();
        coefficients.iter().map(|c| s * c).collect()
    }

    /// `(1 - c'_l²) c'_l + β' (c'_{l+1} + c'_{l-1} + 2 c'_l) - f' l c'_l`,
    /// zero for a solution of the lattice equation at `μ = μ^S`.
    pub fn residual(&self, rescaled: &[f64], window: Window) -> Vec<f64> {
        let n = rescaled.len();
        let at = |i: isize| {
            if i < 0 || i as usize >= n {
                0.0
            } else {
                rescaled[i as usize]
            }
        };
        rescaled
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let l = window.site(i) as f64;
                let hop = at(i as isize + 1) + at(i as isize - 1) + 2.0 * c;
                (1.0 - c * c) * c + self.beta_prime * hop - self.f_prime * l * c
            })
            .collect()
    }

    /// `T(β')`: derivative of `f' l c' - (1 - c'²) c' - β'(…)` in `c'`, as
    /// `(sub, diag, sup)`.
    pub fn tridiagonal(&self, rescaled: &[f64], window: Window) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = rescaled.len();
        let off = vec![-self.beta_prime; n.saturating_sub(1)];
        let diag = rescaled
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                self.f_prime * window.site(i) as f64 - 1.0 + 3.0 * c * c - 2.0 * self.beta_prime
            })
            .collect();
        (off.clone(), diag, off)
    }
}

/// The diagonal `T(0)` over the window, and the smallest `|T_l|` over all of ℤ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub diagonal: Vec<f64>,
    /// `min |T_l|` over the window.
    pub window_min: f64,
    /// `inf_{l ∈ ℤ} |T_l|`; off the support `T_l = f l/μ^S - 1`, so the
    /// infimum is attained either on the support or next to `l = μ^S/f`.
    pub infimum: f64,
}

/// `T_l = f l / μ^S - 1 + 3 c'_l²` for an anticontinuum state.
pub fn jacobian_diagonal_t0(state: &StationaryState) -> Result<Certificate> {
    let set = state
        .set
        .as_ref()
        .ok_or_else(|| Error::Domain("certificate needs an exact anticontinuum state".into()))?;
    let params = state.params;
    let problem = RescaledProblem::new(state.mu, &params)?;
    let mu_over_f = state.mu / params.f;

    let nearest = mu_over_f.round();
    if (mu_over_f - nearest).abs() < RESONANCE_TOL && !set.contains(nearest as i64) {
        return Err(Error::Resonance {
            site: nearest as i64,
            mu_over_f,
        });
    }

    let rescaled = problem.rescale(params.nu, &state.coefficients);
    let t_of = |l: i64, c: f64| problem.f_prime * l as f64 - 1.0 + 3.0 * c * c;
    let diagonal: Vec<f64> = state
        .window()
        .sites()
        .zip(&rescaled)
        .map(|(l, &c)| t_of(l, c))
        .collect();
    let window_min = diagonal.iter().fold(f64::INFINITY, |m, t| m.min(t.abs()));

    let off_support = [mu_over_f.floor() as i64, mu_over_f.ceil() as i64]
        .into_iter()
        .filter(|l| !set.contains(*l))
        .map(|l| t_of(l, 0.0).abs());
    let on_support = set
        .sites()
        .iter()
        .map(|&l| 2.0 * (1.0 - params.f * l as f64 / state.mu));
    let infimum = off_support
        .chain(on_support.map(f64::abs))
        .fold(window_min, f64::min);

    Ok(Certificate {
        diagonal,
        window_min,
        infimum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonSolution {
    pub state: StationaryState,
    pub iterations: usize,
    /// Max-norm of the extended residual at the returned state.
    pub residual: f64,
}

/// Newton's method on the extended system, starting from `guess` and
/// solving at `params` (the window is taken from the guess).
pub fn newton_solve(
    guess: &StationaryState,
    params: &LatticeParams,
    opts: NewtonOptions,
) -> Result<NewtonSolution> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let params = params.with_window(guess.window());
    let mut c = guess.coefficients.clone();
    let mut mu = guess.mu;
    let mut iterations = 0;
    loop {
        let r = residual_of(&c, mu, &params);
        let norm = max_norm(&r);
        if !norm.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        if norm < opts.tol {
            let set = if params.beta == 0.0 {
                guess.set.clone()
            } else {
                None
            };
            return Ok(NewtonSolution {
                state: StationaryState {
                    params,
                    coefficients: c,
                    mu,
                    set,
                    signs: guess.signs.clone(),
                },
                iterations,
                residual: norm,
            });
        }
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = dnls_jacobian(&c, mu, &params).solve(&neg)?;
        for (ci, di) in c.iter_mut().zip(&step) {
            *ci += di;
        }
        mu += step[step.len() - 1];
        iterations += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub beta: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationResult {
    pub set: SolutionSet,
    pub state: StationaryState,
    pub path: Vec<PathEntry>,
    /// `inf |T_l|` of the starting anticontinuum state.
    pub certificate: f64,
}

/// Natural-parameter continuation of `start` from its own β to
/// `beta_target` in `steps` uniform steps, warm-starting each Newton solve.
pub fn track_beta(
    start: &StationaryState,
    beta_target: f64,
    steps: usize,
    opts: NewtonOptions,
) -> Result<(StationaryState, Vec<PathEntry>)> {
    if !(beta_target.is_finite() && beta_target >= 0.0) {
        return Err(Error::Domain(format!(
            "beta target must be >= 0, got {beta_target}"
        )));
    }
    if steps == 0 {
        return Err(Error::Domain("continuation needs at least one step".into()));
    }
    let beta0 = start.params.beta;
    let r0 = max_norm(&dnls_residual(start, &start.params));
    let mut path = vec![PathEntry {
        beta: beta0,
        mu: start.mu,
        residual: r0,
        iterations: 0,
    }];
    let mut current = start.clone();
    for k in 1..=steps {
        let beta = if k == steps {
            beta_target
        } else {
            beta0 + (beta_target - beta0) * k as f64 / steps as f64
        };
        let params = current.params.with_beta(beta);
        match newton_solve(&current, &params, opts) {
            Ok(sol) => {
                path.push(PathEntry {
                    beta,
                    mu: sol.state.mu,
                    residual: sol.residual,
                    iterations: sol.iterations,
                });
                current = sol.state;
            }
            Err(source) => {
                return Err(Error::Continuation {
                    beta,
                    path,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok((current, path))
}

/// Builds the anticontinuum state on `set` (signs as given), certifies it,
/// and continues it to `beta_target`. `params.beta` is ignored.
pub fn continue_with_signs(
    set: &SolutionSet,
    params: &LatticeParams,
    signs: &SignPattern,
    beta_target: f64,
    steps: usize,
    opts: NewtonOptions,
) -> Result<ContinuationResult> {
    let start = build_state(set, &params.with_beta(0.0), signs)?;
    let certificate = jacobian_diagonal_t0(&start)?;
    let (state, path) = track_beta(&start, beta_target, steps, opts)?;
    Ok(ContinuationResult {
        set: set.clone(),
        state,
        path,
        certificate: certificate.infimum,
    })
}

/// [`continue_with_signs`] with the all-plus sign pattern and default Newton options.
pub fn continue_in_beta(
    set: &SolutionSet,
    params: &LatticeParams,
    beta_target: f64,
    steps: usize,
) -> Result<ContinuationResult> {
    continue_with_signs(
        set,
        params,
        &SignPattern::all_plus(set.len()),
        beta_target,
        steps,
        NewtonOptions::default(),
    )
}

/// Hopping `β` for a rescaled `β'` on the branch of `set`.
pub fn beta_from_prime(set: &SolutionSet, params: &LatticeParams, beta_prime: f64) -> f64 {
    beta_prime * energy_of_set(set, params.nu, params.f)
}

/// Scans β upward in steps of `beta_max / steps` and reports the first β at
/// which Newton fails, or `None` if the whole range continues.
pub fn failure_beta(
    set: &SolutionSet,
    params: &LatticeParams,
    beta_max: f64,
    steps: usize,
) -> Result<Option<f64>> {
    match continue_in_beta(set, params, beta_max, steps) {
        Ok(_) => Ok(None),
        Err(Error::Continuation { beta, .. }) => Ok(Some(beta)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anticontinuum::canonical_state;

    fn set(sites: &[i64]) -> SolutionSet {
        SolutionSet::new(sites.to_vec()).unwrap()
    }

    #[test]
    fn residual_vanishes_at_anticontinuum() {
        for (s, x) in [(&[0][..], 0.4), (&[0, 1], 1.5), (&[0, 2, 3], 4.5)] {
            let st = canonical_state(&set(s), x, 1.0).unwrap();
            assert!(max_norm(&dnls_residual(&st, &st.params)) < 1e-14);
        }
    }

    #[test]
    fn residual_of_delta_with_hopping() {
        let st = canonical_state(&set(&[0]), 0.8, 1.0).unwrap();
        let r = dnls_residual(&st, &st.params.with_beta(0.1));
        let w = st.window();
        assert!((r[w.index(0).unwrap()] + 0.2).abs() < 1e-15);
        assert!((r[w.index(1).unwrap()] + 0.1).abs() < 1e-15);
        assert!((r[w.index(-1).unwrap()] + 0.1).abs() < 1e-15);
        assert!((max_norm(&r) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn certificate_examples() {
        let st = canonical_state(&set(&[0]), 0.5, 1.0).unwrap();
        let cert = jacobian_diagonal_t0(&st).unwrap();
        for (l, t) in st.window().sites().zip(&cert.diagonal) {
            let want = if l == 0 { 2.0 } else { 2.0 * l as f64 - 1.0 };
            assert!((t - want).abs() < 1e-14, "l={l}: {t} vs {want}");
        }
        assert!((cert.infimum - 1.0).abs() < 1e-14);

        let st = canonical_state(&set(&[0]), 1.0, 1.0).unwrap();
        assert!(matches!(
            jacobian_diagonal_t0(&st),
            Err(Error::Resonance { site: 1, .. })
        ));
    }

    #[test]
    fn certificate_on_support() {
        let s = set(&[0, 1, 3]);
        let st = canonical_state(&s, 7.3, 1.0).unwrap();
        let cert = jacobian_diagonal_t0(&st).unwrap();
        for &l in s.sites() {
            let t = cert.diagonal[st.window().index(l).unwrap()];
            let want = 2.0 * (1.0 - l as f64 / st.mu);
            assert!((t - want).abs() < 1e-13);
            assert!(t > 0.0);
        }
    }

    #[test]
    fn certificate_sees_resonance_beyond_window() {
        // μ/f = 9 lies outside the default window [-5, 5].
        let st = canonical_state(&set(&[0]), 9.0, 1.0).unwrap();
        assert!(matches!(
            jacobian_diagonal_t0(&st),
            Err(Error::Resonance { site: 9, .. })
        ));
        let st = canonical_state(&set(&[0]), 9.25, 1.0).unwrap();
        let cert = jacobian_diagonal_t0(&st).unwrap();
        assert!((cert.infimum - 0.25 / 9.25).abs() < 1e-14);
        assert!(cert.window_min > cert.infimum);
    }

    #[test]
    fn rescaled_t0_matches_unscaled_jacobian() {
        let st = canonical_state(&set(&[0, 2]), 3.3, 0.7).unwrap();
        let cert = jacobian_diagonal_t0(&st).unwrap();
        let jac = dnls_jacobian(&st.coefficients, st.mu, &st.params);
        for (t, d) in cert.diagonal.iter().zip(&jac.diag) {
            assert!((st.mu * t - d).abs() < 1e-13);
        }
        let problem = RescaledProblem::new(st.mu, &st.params).unwrap();
        let rescaled = problem.rescale(st.params.nu, &st.coefficients);
        assert!(max_norm(&problem.residual(&rescaled, st.window())) < 1e-14);
        let (_, diag, _) = problem.tridiagonal(&rescaled, st.window());
        assert_eq!(diag, cert.diagonal);
    }

    #[test]
    fn rescaled_residual_matches_unscaled_at_positive_beta() {
        let s = set(&[0, 1]);
        let params = LatticeParams::from_ratio(1.5, 1.0, 0.0, Window::around(&s, 5)).unwrap();
        let beta = beta_from_prime(&s, &params, 0.02);
        let res = continue_in_beta(&s, &params, beta, 5).unwrap();
        // at μ = μ(β) the rescaled equation holds with that μ as reference
        let problem = RescaledProblem::new(res.state.mu, &res.state.params).unwrap();
        let rescaled = problem.rescale(params.nu, &res.state.coefficients);
        assert!(max_norm(&problem.residual(&rescaled, res.state.window())) < 1e-11);
    }

    #[test]
    fn rescaling_requires_positive_mu() {
        let params = LatticeParams::new(1.0, 1.0, 0.0, Window::new(-3, 3).unwrap()).unwrap();
        assert!(RescaledProblem::new(0.0, &params).is_err());
        assert!(RescaledProblem::new(-1.0, &params).is_err());
    }

    #[test]
    fn newton_keeps_exact_guess() {
        let st = canonical_state(&set(&[0, 1]), 1.5, 1.0).unwrap();
        let sol = newton_solve(&st, &st.params, NewtonOptions::default()).unwrap();
        assert!(sol.iterations <= 1);
        assert_eq!(sol.state.set, st.set);
        for (a, b) in sol.state.coefficients.iter().zip(&st.coefficients) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn newton_small_beta_spreads_state() {
        let s = set(&[0]);
        let st = canonical_state(&s, 0.5, 1.0).unwrap();
        let beta = 0.01 * st.mu;
        let sol = newton_solve(&st, &st.params.with_beta(beta), NewtonOptions::default()).unwrap();
        assert!(sol.residual < 1e-12);
        assert!(sol.state.coefficient(1).abs() > 0.0);
        assert!(sol.state.coefficient(-1).abs() > 0.0);
        assert!(sol.state.coefficient(1).abs() < 10.0 * beta);
        assert!(sol.state.set.is_none());
    }

    #[test]
    fn newton_rejects_bad_tolerance() {
        let st = canonical_state(&set(&[0]), 0.5, 1.0).unwrap();
        let opts = NewtonOptions {
            tol: 0.0,
            max_iter: 5,
        };
        assert!(newton_solve(&st, &st.params, opts).is_err());
    }

    #[test]
    fn newton_reports_non_convergence() {
        let st = canonical_state(&set(&[0]), 0.5, 1.0).unwrap();
        let opts = NewtonOptions {
            tol: 1e-12,
            max_iter: 0,
        };
        let err = newton_solve(&st, &st.params.with_beta(0.1), opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 0, .. }));
    }

    #[test]
    fn continuation_to_zero_is_identity() {
        let s = set(&[0, 1]);
        let params = LatticeParams::from_ratio(1.5, 1.0, 0.0, Window::around(&s, 5)).unwrap();
        let res = continue_in_beta(&s, &params, 0.0, 3).unwrap();
        let start = canonical_state(&s, 1.5, 1.0).unwrap();
        assert_eq!(res.state, start);
        assert_eq!(res.path.len(), 4);
        assert!(res.path.iter().all(|p| p.iterations == 0));
    }

    #[test]
    fn newton_from_resonant_guess_leaves_perturbative_regime() {
        // Plain Newton does not know about the resonance: from δ_0 at
        // ν/f = 1 it lands on a state whose site-1 amplitude is far larger
        // than the O(β) tail of a genuine continuation.
        let st = canonical_state(&set(&[0]), 1.0, 1.0).unwrap();
        let beta = 0.01 * st.mu;
        match newton_solve(&st, &st.params.with_beta(beta), NewtonOptions::default()) {
            Ok(sol) => assert!(sol.state.coefficient(1).abs() > 10.0 * beta),
            Err(e) => assert!(matches!(
                e,
                Error::SingularJacobian { .. } | Error::NoConvergence { .. }
            )),
        }
        let off = canonical_state(&set(&[0]), 0.5, 1.0).unwrap();
        let sol = newton_solve(
            &off,
            &off.params.with_beta(0.01 * off.mu),
            NewtonOptions::default(),
        )
        .unwrap();
        assert!(sol.state.coefficient(1).abs() < 2.0 * 0.01 * off.mu);
    }

    #[test]
    fn continuation_refuses_resonance() {
        let s = set(&[0]);
        let params = LatticeParams::from_ratio(1.0, 1.0, 0.0, Window::around(&s, 5)).unwrap();
        assert!(matches!(
            continue_in_beta(&s, &params, 0.01, 5),
            Err(Error::Resonance { .. })
        ));
    }

    #[test]
    fn continuation_failure_keeps_partial_path() {
        // {0, 2} just above its birth at ν/f = 2 loses its Newton branch
        // well before β = 3.
        let s = set(&[0, 2]);
        let params = LatticeParams::from_ratio(2.1, 1.0, 0.0, Window::around(&s, 5)).unwrap();
        match continue_in_beta(&s, &params, 3.0, 300) {
            Err(Error::Continuation { beta, path, .. }) => {
                assert!(beta > 0.0);
                assert!(!path.is_empty());
                assert!(path.iter().all(|p| p.residual < 1e-12));
                assert!(path.last().unwrap().beta < beta);
            }
            other => panic!("expected failure, got {:?}", other.map(|r| r.path.len())),
        }
        let fail = failure_beta(&s, &params, 3.0, 300).unwrap().unwrap();
        assert!(fail > 0.0 && fail < 3.0);
        let pair = set(&[0, 1]);
        let params = LatticeParams::from_ratio(1.5, 1.0, 0.0, Window::around(&pair, 5)).unwrap();
        assert_eq!(failure_beta(&pair, &params, 0.05, 10).unwrap(), None);
    }
}
