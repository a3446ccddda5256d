//! Lattice geometry and model constants shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of distinct lattice sites, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SolutionSet {
    sites: Vec<i64>,
}

impl SolutionSet {
    /// Builds a set from sites in any order; duplicates and the empty set are rejected.
    pub fn new(mut sites: Vec<i64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Configuration(
                "solution-set must be non-empty".into(),
            ));
        }
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Configuration(format!(
                "solution-set has repeated sites: {sites:?}"
            )));
        }
        Ok(Self { sites })
    }

    pub fn singleton(site: i64) -> Self {
        Self { sites: vec![site] }
    }

    pub(crate) fn from_sorted(sites: Vec<i64>) -> Self {
        debug_assert!(!sites.is_empty() && sites.windows(2).all(|w| w[0] < w[1]));
        Self { sites }
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    /// Cardinality `N`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_site(&self) -> i64 {
        self.sites[0]
    }

    pub fn max_site(&self) -> i64 {
        self.sites[self.sites.len() - 1]
    }

    pub fn sum(&self) -> i64 {
        self.sites.iter().sum()
    }

    pub fn contains(&self, site: i64) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn is_canonical(&self) -> bool {
        self.min_site() == 0
    }

    /// `Σ_{l ∈ S} (max S - l)`, the ratio ν/f at which this branch is born.
    pub fn threshold(&self) -> i64 {
        let max = self.max_site();
        self.sites.iter().map(|&l| max - l).sum()
    }

    pub fn translate(&self, shift: i64) -> Self {
        Self {
            sites: self.sites.iter().map(|l| l + shift).collect(),
        }
    }

    /// Translate so that `min S = 0`.
    pub fn canonical(&self) -> Self {
        self.translate(-self.min_site())
    }

    /// Sites joined by `+`, e.g. `0+1+3`.
    pub fn label(&self) -> String {
        join(&self.sites, "+")
    }
}

fn join(sites: &[i64], sep: &str) -> String {
    sites
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

impl fmt::Display for SolutionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", join(&self.sites, ","))
    }
}

/// Parses `0,1,3` (also accepts `+` separators and surrounding braces).
impl FromStr for SolutionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let sites = inner
            .split([',', '+'])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::Configuration(format!("bad site `{t}` in set `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }
}

impl TryFrom<Vec<i64>> for SolutionSet {
    type Error = Error;

    fn try_from(sites: Vec<i64>) -> Result<Self> {
        Self::new(sites)
    }
}

impl From<SolutionSet> for Vec<i64> {
    fn from(set: SolutionSet) -> Self {
        set.sites
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One sign per site of a solution-set, in site order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern(pub Vec<Sign>);

impl SignPattern {
    pub fn all_plus(n: usize) -> Self {
        Self(vec![Sign::Plus; n])
    }

    /// Pattern whose bit `k` of `mask` selects a minus sign at position `k`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self(
            (0..n)
                .map(|k| {
                    if mask >> k & 1 == 1 {
                        Sign::Minus
                    } else {
                        Sign::Plus
                    }
                })
                .collect(),
        )
    }

    /// All `2^n` patterns.
    pub fn all(n: usize) -> impl Iterator<Item = SignPattern> {
        assert!(n < 64);
        (0..1u64 << n).map(move |mask| Self::from_mask(n, mask))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            })?;
        }
        Ok(())
    }
}

impl FromStr for SignPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(Error::Configuration(format!(
                    "sign pattern may only contain + and -, got `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignPattern)
    }
}

/// Inclusive range of lattice sites `[lo, hi]` kept in a truncated computation.
/// Sites outside are held at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Configuration(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[min S - margin, max S + margin]`.
    pub fn around(set: &SolutionSet, margin: i64) -> Self {
        Self {
            lo: set.min_site() - margin,
            hi: set.max_site() + margin,
        }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i64) -> bool {
        (self.lo..=self.hi).contains(&site)
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        self.contains(site).then(|| (site - self.lo) as usize)
    }

    pub fn site(&self, index: usize) -> i64 {
        self.lo + index as i64
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    pub fn shift(&self, by: i64) -> Self {
        Self {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }

    /// True when every site of `set` lies at least `margin` sites inside.
    pub fn covers(&self, set: &SolutionSet, margin: i64) -> bool {
        self.lo <= set.min_site() - margin && set.max_site() + margin <= self.hi
    }
}

/// Model constants of the tilted lattice: on-site nonlinearity `nu`, tilt `f`
/// per lattice period, hopping `beta`, and the lattice truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub nu: f64,
    pub f: f64,
    pub beta: f64,
    pub window: Window,
}

impl LatticeParams {
    /// Requires `nu > 0`, `f > 0`, `beta >= 0`, all finite.
    pub fn new(nu: f64, f: f64, beta: f64, window: Window) -> Result<Self> {
        let params = Self {
            nu,
            f,
            beta,
            window,
        };
        params.validate()?;
        Ok(params)
    }

    /// `nu = x·f` for a ratio `x = ν/f`.
    pub fn from_ratio(x: f64, f: f64, beta: f64, window: Window) -> Result<Self> {
        Self::new(x * f, f, beta, window)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Domain(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        self.validate_linear_ok()
    }

    /// Same checks as [`validate`](Self::validate) but allowing `nu = 0`,
    /// the linear Wannier-Stark limit used by time evolution.
    pub fn validate_linear_ok(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::Domain(format!(
                "nu must be non-negative, got {}",
                self.nu
            )));
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::Domain(format!("f must be positive, got {}", self.f)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Domain(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// `ν/f`.
    pub fn ratio(&self) -> f64 {
        self.nu / self.f
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn with_window(self, window: Window) -> Self {
        Self { window, ..self }
    }
}
