use std::collections::BTreeMap;
use std::fmt;
use std::fs;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use stark_ladder::continuation::{
    continue_with_signs, jacobian_diagonal_t0, max_norm, NewtonOptions, PathEntry,
};
use stark_ladder::dynamics::{
    evolve, evolve_superposition, frequency_resolution, spectrum, superposition_state,
    BeatingPrediction, DynamicsTrace, SpectralPeak, BLOCH_PERIOD, DEFAULT_DT,
};
use stark_ladder::partitions::{counting_function, f_asymptotic};
use stark_ladder::{
    bifurcation_tree, build_state, dnls_residual, BifurcationTree, LatticeParams, Sign,
    SignPattern, SolutionSet, StationaryState, Window,
};

use crate::output::fmt17;
use crate::{CliError, ContinueArgs, EvolveArgs, EvolveMode, StateArgs, TreeArgs};

/// Rows kept per site in an evolve CSV unless `--every` says otherwise.
const DEFAULT_CSV_ROWS: usize = 4096;

/// Bloch periods simulated when `--t-end` is absent.
const DEFAULT_PERIODS: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountReport {
    pub x: f64,
    /// `F(x)` as a decimal string; it overflows `u64` for large `x`.
    pub f: String,
    pub branches: String,
    /// Leading-order estimate of `F`, present when `x >= 1`.
    pub asymptotic: Option<f64>,
}

impl fmt::Display for CountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F = {}, branches = {}", self.f, self.branches)?;
        if let Some(a) = self.asymptotic {
            write!(f, "\nasymptotic F ~ {a:.6e}")?;
        }
        Ok(())
    }
}

pub fn cmd_count(x: f64) -> Result<CountReport, CliError> {
    if !(x.is_finite() && x > 0.0) {
        return Err(CliError::Input(format!(
            "--x must be positive and finite, got {x}"
        )));
    }
    let f = counting_function(x)?;
    let asymptotic = if x >= 1.0 {
        let n = (x.ceil() as u64).saturating_sub(1).max(1);
        Some(f_asymptotic(n)?)
    } else {
        None
    };
    Ok(CountReport {
        x,
        branches: (&f + 1u32).to_string(),
        f: f.to_string(),
        asymptotic,
    })
}

pub fn cmd_tree(args: &TreeArgs) -> Result<BifurcationTree, CliError> {
    Ok(bifurcation_tree(
        args.x_min,
        args.x_max,
        args.samples,
        args.max_n,
    )?)
}

/// One row per (grid point, live branch), ordered by `x` then branch id.
pub fn render_tree_csv(tree: &BifurcationTree) -> String {
    let mut rows: Vec<(f64, usize, String)> = Vec::new();
    for b in &tree.branches {
        let label = b.set.label();
        for &(x, mu) in &b.samples {
            rows.push((
                x,
                b.id,
                format!(
                    "{},{},{},{},{},{}\n",
                    fmt17(x),
                    b.id,
                    label,
                    fmt17(mu),
                    b.n_modes(),
                    b.birth_x
                ),
            ));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::from("x,branch_id,set,mu_over_f,n_modes,birth_x\n");
    for (_, _, line) in rows {
        out.push_str(&line);
    }
    out
}

pub fn render_tree_json(tree: &BifurcationTree) -> Result<Vec<u8>, CliError> {
    crate::output::to_json(tree)
}

/// Serialized stationary state, as written by `state` and read by `evolve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub set: SolutionSet,
    pub signs: String,
    pub nu: f64,
    pub f: f64,
    pub beta: f64,
    pub mu: f64,
    pub window: Window,
    /// Nonzero coefficients by site; every other window site holds zero.
    pub coefficients: BTreeMap<i64, f64>,
    /// `min |T_l|` of the anticontinuum state the branch starts from.
    pub certificate: f64,
    pub residual_norm: f64,
    pub path: Vec<PathEntry>,
}

impl StateFile {
    fn from_state(
        set: &SolutionSet,
        state: &StationaryState,
        certificate: f64,
        path: Vec<PathEntry>,
    ) -> Self {
        let params = state.params;
        Self {
            set: set.clone(),
            signs: state.signs.to_string(),
            nu: params.nu,
            f: params.f,
            beta: params.beta,
            mu: state.mu,
            window: params.window,
            coefficients: state.entries().filter(|&(_, c)| c != 0.0).collect(),
            certificate,
            residual_norm: max_norm(&dnls_residual(state, &params)),
            path,
        }
    }

    pub fn params(&self) -> Result<LatticeParams, CliError> {
        let window = Window::new(self.window.lo, self.window.hi)?;
        Ok(LatticeParams::new(self.nu, self.f, self.beta, window)?)
    }

    /// Coefficients laid out over the window, as evolution expects them.
    pub fn initial_vector(&self) -> Result<Vec<Complex64>, CliError> {
        let window = self.params()?.window;
        let mut v = vec![Complex64::new(0.0, 0.0); window.len()];
        for (&site, &c) in &self.coefficients {
            let i = window.index(site).ok_or_else(|| {
                CliError::Input(format!(
                    "coefficient at site {site} lies outside window [{}, {}]",
                    window.lo, window.hi
                ))
            })?;
            v[i] = Complex64::new(c, 0.0);
        }
        Ok(v)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: not a state file: {e}", path.display())))
    }

    /// `site,coefficient` over the whole window.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("site,coefficient\n");
        for site in self.window.lo..=self.window.hi {
            let c = self.coefficients.get(&site).copied().unwrap_or(0.0);
            out.push_str(&format!("{site},{}\n", fmt17(c)));
        }
        out
    }
}

fn parse_set(s: &str) -> Result<SolutionSet, CliError> {
    Ok(s.parse()?)
}

/// `None` gives all plus; `random` draws from a ChaCha stream seeded by `seed`.
fn resolve_signs(pattern: Option<&str>, n: usize, seed: u64) -> Result<SignPattern, CliError> {
    match pattern {
        None => Ok(SignPattern::all_plus(n)),
        Some("random") => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(SignPattern(
                (0..n)
                    .map(|_| {
                        if rng.gen::<bool>() {
                            Sign::Minus
                        } else {
                            Sign::Plus
                        }
                    })
                    .collect(),
            ))
        }
        Some(p) => {
            let signs: SignPattern = p.parse()?;
            if signs.len() != n {
                return Err(CliError::Input(format!(
                    "--signs {p} has {} entries but the set has {n} sites",
                    signs.len()
                )));
            }
            Ok(signs)
        }
    }
}

fn check_beta(beta: f64, steps: usize) -> Result<(), CliError> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(CliError::Input(format!(
            "--beta must be non-negative, got {beta}"
        )));
    }
    if beta > 0.0 && steps == 0 {
        return Err(CliError::Input("--steps must be at least 1".into()));
    }
    Ok(())
}

struct Solved {
    set: SolutionSet,
    state: StationaryState,
    certificate: f64,
    path: Vec<PathEntry>,
}

#[allow(clippy::too_many_arguments)]
fn solve_branch(
    set: &str,
    ratio: &crate::Ratio,
    beta: f64,
    steps: usize,
    signs: Option<&str>,
    seed: u64,
    margin: i64,
) -> Result<Solved, CliError> {
    let set = parse_set(set)?;
    let (nu, f) = ratio.resolve()?;
    check_beta(beta, steps)?;
    if margin < stark_ladder::anticontinuum::MIN_MARGIN {
        return Err(CliError::Input(format!(
            "--margin must be at least {}, got {margin}",
            stark_ladder::anticontinuum::MIN_MARGIN
        )));
    }
    let signs = resolve_signs(signs, set.len(), seed)?;
    let params = LatticeParams::new(nu, f, 0.0, Window::around(&set, margin))?;
    if beta == 0.0 {
        let state = build_state(&set, &params, &signs)?;
        let certificate = jacobian_diagonal_t0(&state)?.infimum;
        let path = vec![PathEntry {
            beta: 0.0,
            mu: state.mu,
            residual: max_norm(&dnls_residual(&state, &params)),
            iterations: 0,
        }];
        return Ok(Solved {
            set,
            state,
            certificate,
            path,
        });
    }
    let result = continue_with_signs(&set, &params, &signs, beta, steps, NewtonOptions::default())?;
    Ok(Solved {
        set,
        state: result.state,
        certificate: result.certificate,
        path: result.path,
    })
}

pub fn cmd_state(args: &StateArgs) -> Result<StateFile, CliError> {
    let s = solve_branch(
        &args.set,
        &args.ratio,
        args.beta,
        args.steps,
        args.signs.as_deref(),
        args.seed,
        args.margin,
    )?;
    Ok(StateFile::from_state(
        &s.set,
        &s.state,
        s.certificate,
        s.path,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinueReport {
    pub set: SolutionSet,
    pub signs: String,
    pub nu: f64,
    pub f: f64,
    pub beta_target: f64,
    pub steps: usize,
    pub certificate: f64,
    pub path: Vec<PathEntry>,
}

impl ContinueReport {
    /// `beta,mu,residual,iterations`, one row per converged step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,mu,residual,iterations\n");
        for p in &self.path {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(p.beta),
                fmt17(p.mu),
                fmt17(p.residual),
                p.iterations
            ));
        }
        out
    }
}

pub fn cmd_continue(args: &ContinueArgs) -> Result<ContinueReport, CliError> {
    let s = solve_branch(
        &args.set,
        &args.ratio,
        args.beta,
        args.steps,
        args.signs.as_deref(),
        args.seed,
        args.margin,
    )?;
    Ok(ContinueReport {
        set: s.set,
        signs: s.state.signs.to_string(),
        nu: s.state.params.nu,
        f: s.state.params.f,
        beta_target: args.beta,
        steps: args.steps,
        certificate: s.certificate,
        path: s.path,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    /// `(2π, T₁, T₂)`.
    pub periods: [f64; 3],
    /// `2π / T` for each period.
    pub frequencies: [f64; 3],
    pub amplitudes: [f64; 3],
}

/// Companion report of an evolve run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolveReport {
    pub source: String,
    pub nu: f64,
    pub f: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub site: i64,
    /// FFT bin width in angular frequency.
    pub resolution: f64,
    pub predicted: Option<Prediction>,
    pub peaks: Vec<SpectralPeak>,
    pub norm_drift: f64,
    pub energy_drift: f64,
}

pub struct EvolveOutput {
    pub csv: String,
    pub report: EvolveReport,
    pub trace: DynamicsTrace,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {v}")))
    }
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<EvolveOutput, CliError> {
    let dt = positive("--dt", args.dt.unwrap_or(DEFAULT_DT))?;
    let t_end = positive(
        "--t-end",
        args.t_end.unwrap_or(DEFAULT_PERIODS * BLOCH_PERIOD),
    )?;
    if args.every == Some(0) {
        return Err(CliError::Input("--every must be at least 1".into()));
    }
    if let Some(b) = args.beta {
        check_beta(b, 1)?;
    }

    let (params, trace, source, default_site) = match &args.state {
        Some(path) => {
            if args.ratio.x.is_some() || args.ratio.nu.is_some() || args.ratio.f.is_some() {
                return Err(CliError::Input(
                    "--state already fixes nu and f; drop --x/--nu/--f".into(),
                ));
            }
            let file = StateFile::read(path)?;
            let mut params = file.params()?;
            if let Some(b) = args.beta {
                params = params.with_beta(b);
            }
            let initial = file.initial_vector()?;
            let site = file
                .coefficients
                .iter()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(a.0)))
                .map_or(file.window.lo, |(&s, _)| s);
            let trace = evolve(&initial, &params, t_end, dt)?;
            (params, trace, format!("state {}", path.display()), site)
        }
        None => {
            let (nu, f) = args.ratio.resolve()?;
            let j = args.well;
            let margin = stark_ladder::anticontinuum::DEFAULT_MARGIN;
            let window = Window::new(j - 1 - margin, j + 1 + margin)?;
            let params = LatticeParams::new(nu, f, args.beta.unwrap_or(0.0), window)?;
            let x = nu / f;
            let trace = match args.mode {
                EvolveMode::Superposed => evolve_superposition(x, j, &params, t_end, dt)?.combined,
                EvolveMode::Direct => {
                    let initial = superposition_state(x, j, &params)?;
                    evolve(&initial, &params, t_end, dt)?
                }
            };
            let mode = match args.mode {
                EvolveMode::Superposed => "superposed",
                EvolveMode::Direct => "direct",
            };
            (
                params,
                trace,
                format!("superposition at well {j} ({mode})"),
                j,
            )
        }
    };

    let site = args.site.unwrap_or(default_site);
    let peaks = spectrum(&trace, site)?;
    let predicted = BeatingPrediction::new(params.ratio()).ok().map(|p| {
        let (b, t1, t2) = p.periods;
        let (w0, w1, w2) = p.frequencies();
        Prediction {
            periods: [b, t1, t2],
            frequencies: [w0, w1, w2],
            amplitudes: p.amplitudes,
        }
    });
    let every = args
        .every
        .unwrap_or_else(|| trace.len().div_ceil(DEFAULT_CSV_ROWS).max(1));

    let mut csv = String::from("t_prime,site,abs2\n");
    for (t, state) in trace.times.iter().zip(&trace.states).step_by(every) {
        for (i, c) in state.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt17(*t),
                trace.window.site(i),
                fmt17(c.norm_sqr())
            ));
        }
    }

    let report = EvolveReport {
        source,
        nu: params.nu,
        f: params.f,
        beta: params.beta,
        dt,
        t_end,
        samples: trace.len(),
        site,
        resolution: frequency_resolution(trace.len(), dt),
        predicted,
        peaks,
        norm_drift: trace.norm_drift,
        energy_drift: trace.energy_drift,
    };
    Ok(EvolveOutput { csv, report, trace })
}
