//! Time evolution on the tilted lattice and the beating of superposed
//! stationary states.
//!
//! Time is the dimensionless `t' = f t / ħ`, in which the Bloch period is
//! `2π`. The evolution law is
//! `i dc_l/dt' = -[-β(c_{l+1} + c_{l-1} + 2c_l) + ν|c_l|² c_l + f l c_l] / f`,
//! signed so that a stationary state of energy `μ` rotates as `e^{iμt'/f}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::anticontinuum::StationaryState;
use crate::anticontinuum::{
    canonical_state, energy_of_set, enumerate_solution_sets, translate_state,
};
use crate::error::{domain, Error, Result};
use crate::lattice::{LatticeParams, Sign, SolutionSet, Window};

/// Bloch period in `t'`.
pub const BLOCH_PERIOD: f64 = 2.0 * PI;

/// Default integration step, `2π / 2048`.
pub const DEFAULT_DT: f64 = BLOCH_PERIOD / 2048.0;

/// Norm drift that aborts an integration.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Fewest samples accepted by [`spectrum`].
pub const MIN_SPECTRUM_SAMPLES: usize = 1 << 10;

/// Peaks below this fraction of the largest non-DC peak are dropped.
pub const PEAK_RELATIVE_THRESHOLD: f64 = 0.01;

/// Peaks below this fraction of the total power are treated as round-off.
const PEAK_NOISE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsTrace {
    pub window: Window,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// `max_t |Σ|c|² - 1|`.
    pub norm_drift: f64,
    /// `max_t |E(t) - E(0)| / |E(0)|`.
    pub energy_drift: f64,
}

impl DynamicsTrace {
    /// `|c_site(t')|²` along the trace.
    pub fn density(&self, site: i64) -> Option<Vec<f64>> {
        let i = self.window.index(site)?;
        Some(self.states.iter().map(|s| s[i].norm_sqr()).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Right-hand side `dc/dt'`.
fn rhs(c: &[Complex64], params: &LatticeParams, out: &mut [Complex64]) {
    let n = c.len();
    let lo = params.window.lo as f64;
    let zero = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let left = if i > 0 { c[i - 1] } else { zero };
        let right = if i + 1 < n { c[i + 1] } else { zero };
        let l = lo + i as f64;
        let h = -params.beta * (left + right + 2.0 * c[i])
            + c[i] * (params.nu * c[i].norm_sqr() + params.f * l);
        out[i] = Complex64::new(0.0, 1.0) * h / params.f;
    }
}

/// `Σ_l [-β(c̄_l c_{l+1} + c.c.) - 2β|c_l|² + (ν/2)|c_l|⁴ + f l |c_l|²]`,
/// the conserved quantity whose gradient gives the right-hand side.
pub fn dnls_energy(c: &[Complex64], params: &LatticeParams) -> f64 {
    let lo = params.window.lo as f64;
    let mut e = 0.0;
    for (i, ci) in c.iter().enumerate() {
        let a = ci.norm_sqr();
        let l = lo + i as f64;
        e += -2.0 * params.beta * a + 0.5 * params.nu * a * a + params.f * l * a;
        if let Some(next) = c.get(i + 1) {
            e -= 2.0 * params.beta * (ci.conj() * next).re;
        }
    }
    e
}

fn norm_sq(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum()
}

/// Classical fourth-order Runge-Kutta with fixed step `dt` from `t' = 0`
/// until the first step at or past `t_end`; every step is recorded.
pub fn evolve(
    initial: &[Complex64],
    params: &LatticeParams,
    t_end: f64,
    dt: f64,
) -> Result<DynamicsTrace> {
    params.validate_linear_ok()?;
    if !(dt.is_finite() && dt > 0.0) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return domain(format!("t_end must be positive, got {t_end}"));
    }
    let window = params.window;
    if initial.len() != window.len() {
        return Err(Error::Configuration(format!(
            "initial vector has {} entries, window [{}, {}] has {}",
            initial.len(),
            window.lo,
            window.hi,
            window.len()
        )));
    }
    let n0 = norm_sq(initial);
    if (n0 - 1.0).abs() > 1e-9 {
        return domain(format!("initial state must be normalized, norm² = {n0}"));
    }

    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let n = initial.len();
    let e0 = dnls_energy(initial, params);
    let e_scale = e0.abs().max(f64::MIN_POSITIVE);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.to_vec());

    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
    );
    let mut c = initial.to_vec();
    let mut norm_drift: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    for k in 1..=steps {
        rhs(&c, params, &mut k1);
        for i in 0..n {
            tmp[i] = c[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, params, &mut k2);
        for i in 0..n {
            tmp[i] = c[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, params, &mut k3);
        for i in 0..n {
            tmp[i] = c[i] + dt * k3[i];
        }
        rhs(&tmp, params, &mut k4);
        for i in 0..n {
            c[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        norm_drift = norm_drift.max((norm_sq(&c) - 1.0).abs());
        if norm_drift.is_nan() || norm_drift > NORM_DRIFT_LIMIT {
            return Err(Error::IntegrationQuality {
                norm_drift,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        energy_drift = energy_drift.max((dnls_energy(&c, params) - e0).abs() / e_scale);
        times.push(k as f64 * dt);
        states.push(c.clone());
    }

    Ok(DynamicsTrace {
        window,
        dt,
        times,
        states,
        norm_drift,
        energy_drift,
    })
}

/// Real stationary coefficients as a complex vector.
pub fn complexify(state: &StationaryState) -> Vec<Complex64> {
    state
        .coefficients
        .iter()
        .map(|&c| Complex64::new(c, 0.0))
        .collect()
}

fn check_beating_ratio(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 1.0) {
        return domain(format!("beating needs nu/f > 1, got {x}"));
    }
    Ok(())
}

/// Bloch period `2π` and the two beat periods `T₁ = 4π/(1 + x)`,
/// `T₂ = 4π/(x - 1)`.
pub fn beat_periods(x: f64) -> Result<(f64, f64, f64)> {
    check_beating_ratio(x)?;
    Ok((BLOCH_PERIOD, 4.0 * PI / (1.0 + x), 4.0 * PI / (x - 1.0)))
}

/// Amplitudes on site `j` of the states on `{j}`, `{j, j+1}` and `{j-1, j}`:
/// `1`, `[1/2 + f/(2ν)]^{1/2}` and `[1/2 - f/(2ν)]^{1/2}`.
pub fn beating_amplitudes(x: f64) -> Result<[f64; 3]> {
    check_beating_ratio(x)?;
    Ok([1.0, (0.5 + 0.5 / x).sqrt(), (0.5 - 0.5 / x).sqrt()])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeatingPrediction {
    pub x: f64,
    pub amplitudes: [f64; 3],
    /// `(2π, T₁, T₂)`
    pub periods: (f64, f64, f64),
}

impl BeatingPrediction {
    pub fn new(x: f64) -> Result<Self> {
        Ok(Self {
            x,
            amplitudes: beating_amplitudes(x)?,
            periods: beat_periods(x)?,
        })
    }

    /// Angular frequencies `(1, 2π/T₁, 2π/T₂)`.
    pub fn frequencies(&self) -> (f64, f64, f64) {
        let (b, t1, t2) = self.periods;
        (2.0 * PI / b, 2.0 * PI / t1, 2.0 * PI / t2)
    }
}

/// `q(t') = c₁ e^{i x t'/2} + c₂ e^{i t'/2} + c₃ e^{-i t'/2}` with the
/// amplitudes of [`beating_amplitudes`] carrying the given signs.
pub fn beating_profile(x: f64, signs: [Sign; 3], t_prime: f64) -> Result<Complex64> {
    let [a1, a2, a3] = beating_amplitudes(x)?;
    let phase = |w: f64| Complex64::from_polar(1.0, w * t_prime);
    Ok(signs[0].value() * a1 * phase(x / 2.0)
        + signs[1].value() * a2 * phase(0.5)
        + signs[2].value() * a3 * phase(-0.5))
}

/// The three all-plus anticontinuum states on `{j}`, `{j, j+1}`, `{j-1, j}`
/// at ratio `x`, placed in `params.window`.
pub fn superposition_components(
    x: f64,
    j: i64,
    params: &LatticeParams,
) -> Result<[StationaryState; 3]> {
    check_beating_ratio(x)?;
    params.validate()?;
    if (params.ratio() - x).abs() > 1e-12 * x {
        return domain(format!(
            "ratio mismatch: x = {x} but nu/f = {}",
            params.ratio()
        ));
    }
    let single = canonical_state(&SolutionSet::singleton(0), params.nu, params.f)?;
    let pair = canonical_state(&SolutionSet::new(vec![0, 1])?, params.nu, params.f)?;
    let s1 = translate_state(&single, j)?.embed(params.window)?;
    let s2 = translate_state(&pair, j)?.embed(params.window)?;
    let s3 = translate_state(&pair, j - 1)?.embed(params.window)?;
    Ok([s1, s2, s3].map(|s| StationaryState {
        params: params.with_beta(0.0),
        ..s
    }))
}

/// Normalized sum of [`superposition_components`].
pub fn superposition_state(x: f64, j: i64, params: &LatticeParams) -> Result<Vec<Complex64>> {
    let parts = superposition_components(x, j, params)?;
    let sum: Vec<f64> = (0..params.window.len())
        .map(|i| parts.iter().map(|s| s.coefficients[i]).sum())
        .collect();
    let norm = sum.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(sum
        .into_iter()
        .map(|c| Complex64::new(c / norm, 0.0))
        .collect())
}

/// Each of the three stationary states evolved separately, and their sum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperposedTrace {
    /// Sum of the component traces divided by the norm of the initial sum.
    /// Its `norm_drift` and `energy_drift` are the largest over the components.
    pub combined: DynamicsTrace,
    pub components: Vec<DynamicsTrace>,
}

/// Evolves the three stationary states of [`superposition_components`]
/// independently under the full lattice dynamics and superposes the results.
pub fn evolve_superposition(
    x: f64,
    j: i64,
    params: &LatticeParams,
    t_end: f64,
    dt: f64,
) -> Result<SuperposedTrace> {
    let parts = superposition_components(x, j, params)?;
    let components = parts
        .iter()
        .map(|s| evolve(&complexify(s), params, t_end, dt))
        .collect::<Result<Vec<_>>>()?;
    let n = params.window.len();
    let initial_norm = (0..n)
        .map(|i| parts.iter().map(|s| s.coefficients[i]).sum::<f64>().powi(2))
        .sum::<f64>()
        .sqrt();
    let first = &components[0];
    let states = (0..first.len())
        .map(|k| {
            (0..n)
                .map(|i| {
                    components.iter().map(|c| c.states[k][i]).sum::<Complex64>() / initial_norm
                })
                .collect()
        })
        .collect();
    let combined = DynamicsTrace {
        window: params.window,
        dt,
        times: first.times.clone(),
        states,
        norm_drift: components.iter().map(|c| c.norm_drift).fold(0.0, f64::max),
        energy_drift: components
            .iter()
            .map(|c| c.energy_drift)
            .fold(0.0, f64::max),
    };
    Ok(SuperposedTrace {
        combined,
        components,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralPeak {
    /// Angular frequency in units of `1/t'`.
    pub frequency: f64,
    pub power: f64,
    pub bin: usize,
}

/// Angular frequency spacing `2π / (n dt)` of an `n`-sample spectrum.
pub fn frequency_resolution(n: usize, dt: f64) -> f64 {
    2.0 * PI / (n as f64 * dt)
}

/// Hann-windowed power spectrum of a uniformly sampled real series, reduced
/// to its local maxima. Non-DC peaks must exceed 1% of the largest non-DC
/// peak; the result is sorted by decreasing power.
pub fn spectrum_of_series(series: &[f64], dt: f64) -> Result<Vec<SpectralPeak>> {
    let n = series.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return domain(format!(
            "spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples, got {n}"
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return domain(format!("sample spacing must be positive, got {dt}"));
    }
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
            Complex64::new(v * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let power: Vec<f64> = buf[..=half].iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = power.iter().sum();

    let is_peak = |k: usize| {
        let left = if k == 0 {
            f64::NEG_INFINITY
        } else {
            power[k - 1]
        };
        let right = power.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        power[k] > left && power[k] >= right
    };
    let floor = PEAK_NOISE_FLOOR * total;
    let non_dc: Vec<usize> = (1..=half)
        .filter(|&k| is_peak(k) && power[k] > floor)
        .collect();
    let strongest = non_dc.iter().map(|&k| power[k]).fold(0.0, f64::max);
    let resolution = frequency_resolution(n, dt);

    let mut peaks: Vec<SpectralPeak> = is_peak(0)
        .then_some(0)
        .into_iter()
        .chain(
            non_dc
                .into_iter()
                .filter(|&k| power[k] >= PEAK_RELATIVE_THRESHOLD * strongest),
        )
        .map(|bin| SpectralPeak {
            frequency: bin as f64 * resolution,
            power: power[bin],
            bin,
        })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    Ok(peaks)
}

/// Peaks of `|c_site(t')|²` along a trace.
pub fn spectrum(trace: &DynamicsTrace, site: i64) -> Result<Vec<SpectralPeak>> {
    let series = trace.density(site).ok_or_else(|| {
        Error::Domain(format!(
            "site {site} outside window [{}, {}]",
            trace.window.lo, trace.window.hi
        ))
    })?;
    spectrum_of_series(&series, trace.dt)
}

/// Distinct energies `μ/f` (with `f = 1`, `ν = x`) of every stationary state
/// at ratio `x` whose support contains site 0, obtained by translating each
/// canonical set so that one of its sites lands on 0.
pub fn energies_through_site(x: f64, max_n: u64) -> Vec<f64> {
    let mut energies: Vec<f64> = enumerate_solution_sets(x, max_n)
        .iter()
        .flat_map(|s| {
            let mu = energy_of_set(s, x, 1.0);
            s.sites().iter().map(move |&l| mu - l as f64)
        })
        .collect();
    dedup_sorted(&mut energies);
    energies
}

/// Distinct positive differences between the energies of
/// [`energies_through_site`]: the beat frequencies a superposition of those
/// states shows on site 0.
pub fn beat_frequencies(x: f64, max_n: u64) -> Vec<f64> {
    let e = energies_through_site(x, max_n);
    let mut diffs: Vec<f64> = e
        .iter()
        .enumerate()
        .flat_map(|(i, a)| e[i + 1..].iter().map(move |b| (b - a).abs()))
        .collect();
    dedup_sorted(&mut diffs);
    diffs
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
}
