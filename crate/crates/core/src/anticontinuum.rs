//! Exact stationary states of the decoupled lattice (β = 0).
//!
//! At zero hopping every site solves `μ c = ν c³ + f l c` on its own, so a
//! state is fixed by its support `S` and one sign per site:
//! `c_l = ±√((μ^S - f l)/ν)` on `S`, zero elsewhere. Normalization pins
//! `μ^S = ν/N + (f/N) Σ_{l∈S} l`, and real amplitudes need `μ^S/f > max S`,
//! which is the same as `ν/f > Σ_{l⋆∈S⋆} l⋆`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, SignPattern, SolutionSet, Window};
use crate::partitions::{for_each_distinct_partition, largest_integer_below};

/// Margin (in sites) used when a window is derived from a solution-set.
pub const DEFAULT_MARGIN: i64 = 5;

/// Minimum margin required between a solution-set and the window edge.
pub const MIN_MARGIN: i64 = 2;

/// A stationary state on a finite window together with its energy `mu`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryState {
    pub params: LatticeParams,
    /// `c_l` for `l = window.lo ..= window.hi`.
    pub coefficients: Vec<f64>,
    pub mu: f64,
    /// Exact support; `None` once hopping spreads the state over the window.
    pub set: Option<SolutionSet>,
    pub signs: SignPattern,
}

impl StationaryState {
    pub fn window(&self) -> Window {
        self.params.window
    }

    /// `c_l`, zero outside the window.
    pub fn coefficient(&self, site: i64) -> f64 {
        self.window()
            .index(site)
            .map_or(0.0, |i| self.coefficients[i])
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// `(site, c_l)` pairs over the window.
    pub fn entries(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.window().sites().zip(self.coefficients.iter().copied())
    }

    /// Copies the state into another window. Fails if a nonzero coefficient
    /// would be dropped, or if an exact support would end up closer than
    /// [`MIN_MARGIN`] to the edge.
    pub fn embed(&self, window: Window) -> Result<StationaryState> {
        if let Some(set) = &self.set {
            if !window.covers(set, MIN_MARGIN) {
                return Err(Error::Configuration(format!(
                    "window [{}, {}] does not hold {set} with margin {MIN_MARGIN}",
                    window.lo, window.hi
                )));
            }
        }
        let mut coefficients = vec![0.0; window.len()];
        for (site, c) in self.entries() {
            match window.index(site) {
                Some(i) => coefficients[i] = c,
                None if c != 0.0 => {
                    return Err(Error::Configuration(format!(
                        "site {site} (c = {c:e}) falls outside window [{}, {}]",
                        window.lo, window.hi
                    )))
                }
                None => {}
            }
        }
        Ok(StationaryState {
            params: self.params.with_window(window),
            coefficients,
            mu: self.mu,
            set: self.set.clone(),
            signs: self.signs.clone(),
        })
    }
}

/// `S⋆ = {max S - l : l ∈ S}`.
pub fn complementary_set(set: &SolutionSet) -> SolutionSet {
    let max = set.max_site();
    let mut sites: Vec<i64> = set.sites().iter().rev().map(|l| max - l).collect();
    sites.dedup();
    SolutionSet::from_sorted(sites)
}

/// `ν/f > Σ_{l⋆ ∈ S⋆} l⋆`.
pub fn admissible(set: &SolutionSet, x: f64) -> bool {
    x > set.threshold() as f64
}

/// The same condition phrased through the energy: `μ^S/f > max S`.
pub fn admissible_by_energy(set: &SolutionSet, x: f64) -> bool {
    energy_of_set(set, x, 1.0) > set.max_site() as f64
}

/// `μ^S = ν/N + (f/N) Σ_{l∈S} l`.
pub fn energy_of_set(set: &SolutionSet, nu: f64, f: f64) -> f64 {
    let n = set.len() as f64;
    nu / n + f / n * set.sum() as f64
}

/// `μ^S/f` at ratio `x = ν/f`, written as `x/N + (Σ S)/N`.
pub fn mu_over_f(set: &SolutionSet, x: f64) -> f64 {
    let n = set.len() as f64;
    x / n + set.sum() as f64 / n
}

/// The anticontinuum state on `set` with the given sign pattern.
pub fn build_state(
    set: &SolutionSet,
    params: &LatticeParams,
    signs: &SignPattern,
) -> Result<StationaryState> {
    params.validate()?;
    let x = params.ratio();
    if !admissible(set, x) {
        return Err(Error::Inadmissible {
            set: set.to_string(),
            x,
            threshold: set.threshold(),
        });
    }
    let window = params.window;
    if !window.covers(set, MIN_MARGIN) {
        return Err(Error::Configuration(format!(
            "window [{}, {}] does not hold {set} with margin {MIN_MARGIN}",
            window.lo, window.hi
        )));
    }
    if signs.len() != set.len() {
        return Err(Error::Configuration(format!(
            "sign pattern {signs} has {} entries, set {set} has {}",
            signs.len(),
            set.len()
        )));
    }

    let mu = energy_of_set(set, params.nu, params.f);
    let mut coefficients = vec![0.0; window.len()];
    for (&site, sign) in set.sites().iter().zip(&signs.0) {
        let i = window.index(site).expect("covered above");
        coefficients[i] = sign.value() * ((mu - params.f * site as f64) / params.nu).sqrt();
    }
    let state = StationaryState {
        params: *params,
        coefficients,
        mu,
        set: Some(set.clone()),
        signs: signs.clone(),
    };
    let drift = (state.norm_sq() - 1.0).abs();
    assert!(drift < 1e-10, "normalization drift {drift:e} for {set}");
    Ok(state)
}

/// [`build_state`] with all-plus signs in the default window around `set`.
pub fn canonical_state(set: &SolutionSet, nu: f64, f: f64) -> Result<StationaryState> {
    let params = LatticeParams::new(nu, f, 0.0, Window::around(set, DEFAULT_MARGIN))?;
    build_state(set, &params, &SignPattern::all_plus(set.len()))
}

/// Moves the state `j` sites along the lattice: sites `l → l + j`, energy
/// `μ → μ + j f`. The window moves with the state.
pub fn translate_state(state: &StationaryState, j: i64) -> Result<StationaryState> {
    let window = state.window();
    if window.lo.checked_add(j).is_none() || window.hi.checked_add(j).is_none() {
        return Err(Error::Configuration(format!(
            "translation by {j} overflows the lattice"
        )));
    }
    Ok(StationaryState {
        params: state.params.with_window(window.shift(j)),
        coefficients: state.coefficients.clone(),
        mu: state.mu + j as f64 * state.params.f,
        set: state.set.as_ref().map(|s| s.translate(j)),
        signs: state.signs.clone(),
    })
}

/// Every canonical solution-set admissible at `x = ν/f`, including `{0}`.
///
/// Sets are produced from the distinct partitions `S⋆` of each `n < x`
/// (`n ≤ max_n`) by reflecting back, `S = {max S⋆ - l⋆}`. Order: by
/// threshold `n`, then by cardinality, then lexicographically.
pub fn enumerate_solution_sets(x: f64, max_n: u64) -> Vec<SolutionSet> {
    if x.is_nan() || x <= 0.0 {
        return Vec::new();
    }
    let top = largest_integer_below(x).unwrap_or(0).min(max_n);
    let mut out = Vec::new();
    for n in 0..=top {
        let mut level = Vec::new();
        for_each_distinct_partition(n, |star| {
            let max = *star.last().expect("non-empty") as i64;
            let sites = star.iter().rev().map(|&p| max - p as i64).collect();
            level.push(SolutionSet::from_sorted(sites));
        });
        level.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.sites().cmp(b.sites())));
        out.extend(level);
    }
    out
}

/// `N(N-1)/2`: birth of the consecutive family `{0, 1, …, N-1}`.
pub fn consecutive_threshold(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// One branch of the tree: a canonical set and its energy curve above birth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    pub set: SolutionSet,
    /// Birth threshold `Σ S⋆`; the branch exists for `x > birth_x` only.
    pub birth_x: i64,
    /// `(x, μ/f)` at every grid point above the birth threshold.
    pub samples: Vec<(f64, f64)>,
}

impl Branch {
    pub fn n_modes(&self) -> usize {
        self.set.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BifurcationTree {
    pub x_grid: Vec<f64>,
    pub branches: Vec<Branch>,
}

impl BifurcationTree {
    /// Number of branches alive at `x`.
    pub fn live_count(&self, x: f64) -> usize {
        self.branches
            .iter()
            .filter(|b| x > b.birth_x as f64)
            .count()
    }
}

/// Uniform grid on `[x_min, x_max]` with every integer in range inserted;
/// grid points within 1e-9 of an integer snap to it.
pub fn tree_grid(x_min: f64, x_max: f64, samples: usize) -> Vec<f64> {
    let step = (x_max - x_min) / (samples - 1) as f64;
    let mut grid: Vec<f64> = (0..samples)
        .map(|i| {
            let x = if i + 1 == samples {
                x_max
            } else {
                x_min + i as f64 * step
            };
            let r = x.round();
            if (x - r).abs() < 1e-9 {
                r
            } else {
                x
            }
        })
        .collect();
    let first = x_min.ceil() as i64;
    let last = x_max.floor() as i64;
    grid.extend((first..=last).map(|n| n as f64));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Energies `μ/f` of every branch admissible somewhere in `[x_min, x_max]`.
pub fn bifurcation_tree(
    x_min: f64,
    x_max: f64,
    samples: usize,
    max_n: u64,
) -> Result<BifurcationTree> {
    if !(x_min.is_finite() && x_max.is_finite() && 0.0 <= x_min && x_min < x_max) {
        return Err(Error::Domain(format!(
            "need 0 <= x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if samples < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let x_grid = tree_grid(x_min, x_max, samples);
    let branches = enumerate_solution_sets(x_max, max_n)
        .into_iter()
        .enumerate()
        .map(|(id, set)| {
            let birth_x = set.threshold();
            let samples = x_grid
                .iter()
                .filter(|&&x| x > birth_x as f64)
                .map(|&x| (x, mu_over_f(&set, x)))
                .collect();
            Branch {
                id,
                set,
                birth_x,
                samples,
            }
        })
        .collect();
    Ok(BifurcationTree { x_grid, branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Sign;

    fn set(sites: &[i64]) -> SolutionSet {
        SolutionSet::new(sites.to_vec()).unwrap()
    }

    #[test]
    fn complementary_set_examples() {
        assert_eq!(complementary_set(&set(&[0, 1, 3])), set(&[0, 2, 3]));
        assert_eq!(complementary_set(&set(&[0])), set(&[0]));
        assert_eq!(complementary_set(&set(&[0, 2])), set(&[0, 2]));
        assert_eq!(complementary_set(&set(&[2, 3, 5])), set(&[0, 2, 3]));
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissible(&set(&[0, 1]), 1.5));
        assert!(!admissible(&set(&[0, 1]), 1.0));
        assert!(!admissible(&set(&[0, 1, 2, 3]), 5.9));
        assert!(admissible(&set(&[0, 1, 2, 3]), 6.1));
        assert!(!admissible_by_energy(&set(&[0, 1]), 1.0));
        assert!(admissible_by_energy(&set(&[0, 1, 2, 3]), 6.1));
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy_of_set(&set(&[0]), 2.0, 1.0), 2.0);
        let (nu, f) = (2.7, 0.4);
        let e = energy_of_set(&set(&[0, 3]), nu, f);
        assert!((e - (nu / 2.0 + f * 3.0 / 2.0)).abs() < 1e-15);
        assert_eq!(energy_of_set(&set(&[0, 1, 2]), 3.0, 1.0), 2.0);
    }

    #[test]
    fn build_state_examples() {
        let s = canonical_state(&set(&[0]), 0.7, 1.0).unwrap();
        assert_eq!(s.coefficient(0), 1.0);
        assert_eq!(s.mu, 0.7);

        let s = canonical_state(&set(&[0, 1]), 1.5, 1.0).unwrap();
        assert!((s.coefficient(0) - (5.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((s.coefficient(1) - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.coefficient(2), 0.0);

        match canonical_state(&set(&[0, 2]), 2.0, 1.0) {
            Err(Error::Inadmissible { threshold, .. }) => assert_eq!(threshold, 2),
            other => panic!("expected inadmissible, got {other:?}"),
        }
    }

    #[test]
    fn build_state_configuration_errors() {
        let s = set(&[0, 1]);
        let tight = LatticeParams::new(3.0, 1.0, 0.0, Window::new(-1, 2).unwrap()).unwrap();
        assert!(matches!(
            build_state(&s, &tight, &SignPattern::all_plus(2)),
            Err(Error::Configuration(_))
        ));
        let ok = tight.with_window(Window::new(-2, 3).unwrap());
        assert!(build_state(&s, &ok, &SignPattern::all_plus(2)).is_ok());
        assert!(matches!(
            build_state(&s, &ok, &SignPattern::all_plus(3)),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn signs_are_applied() {
        let s = set(&[0, 1]);
        let params = LatticeParams::new(3.0, 1.0, 0.0, Window::around(&s, 5)).unwrap();
        let st = build_state(&s, &params, &SignPattern(vec![Sign::Plus, Sign::Minus])).unwrap();
        assert!(st.coefficient(0) > 0.0);
        assert!(st.coefficient(1) < 0.0);
    }

    #[test]
    fn translate_examples() {
        let s = canonical_state(&set(&[0]), 0.5, 2.0).unwrap();
        let t = translate_state(&s, 3).unwrap();
        assert_eq!(t.set, Some(set(&[3])));
        assert_eq!(t.mu, 0.5 + 3.0 * 2.0);
        assert_eq!(t.coefficient(3), 1.0);
        assert_eq!(translate_state(&s, 0).unwrap(), s);
        let back = translate_state(&translate_state(&s, -1).unwrap(), 1).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn embed_checks_support() {
        let s = canonical_state(&set(&[0, 1]), 3.0, 1.0).unwrap();
        let wide = s.embed(Window::new(-10, 10).unwrap()).unwrap();
        assert_eq!(wide.coefficient(1), s.coefficient(1));
        assert!(s.embed(Window::new(-2, 2).unwrap()).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let got = enumerate_solution_sets(3.1, 100);
        let want: Vec<_> = [&[0][..], &[0, 1], &[0, 2], &[0, 3], &[0, 1, 2]]
            .iter()
            .map(|s| set(s))
            .collect();
        assert_eq!(got, want);
        assert_eq!(enumerate_solution_sets(0.5, 100), vec![set(&[0])]);
        assert_eq!(enumerate_solution_sets(10.0, 100).len(), 33);
        assert_eq!(enumerate_solution_sets(10.0, 3).len(), 5);
        assert!(enumerate_solution_sets(0.0, 10).is_empty());
    }

    #[test]
    fn consecutive_thresholds() {
        assert_eq!(consecutive_threshold(1), 0.0);
        assert_eq!(consecutive_threshold(2), 1.0);
        assert_eq!(consecutive_threshold(5), 10.0);
        for n in 1..8i64 {
            let s = SolutionSet::new((0..n).collect()).unwrap();
            assert_eq!(s.threshold() as f64, consecutive_threshold(n as u64));
        }
    }

    #[test]
    fn tree_examples() {
        let tree = bifurcation_tree(0.0, 10.0, 1001, 100).unwrap();
        assert_eq!(tree.branches.len(), 33);
        for n in 0..=10 {
            assert!(tree.x_grid.contains(&(n as f64)));
        }
        let single = &tree.branches[0];
        assert_eq!(single.set, set(&[0]));
        assert!(single.samples.iter().all(|&(x, m)| m == x));
        assert_eq!(single.samples.len(), tree.x_grid.len() - 1);

        let pair = tree
            .branches
            .iter()
            .find(|b| b.set == set(&[0, 1]))
            .unwrap();
        assert_eq!(pair.birth_x, 1);
        assert!(pair.samples[0].0 > 1.0);
        assert!(pair.samples.iter().all(|&(x, m)| m == x / 2.0 + 0.5));
    }

    #[test]
    fn tree_rejects_bad_ranges() {
        assert!(bifurcation_tree(2.0, 1.0, 10, 10).is_err());
        assert!(bifurcation_tree(-1.0, 1.0, 10, 10).is_err());
        assert!(bifurcation_tree(0.0, 1.0, 1, 10).is_err());
    }
}
