//! Demand distributions on the nonnegative half-line.
//!
//! Every family exposes the same small surface: weak and strict CDFs,
//! the generalized inverse `quantile(p) = inf{x : F(x) >= p}`, the partial
//! expectations `E[(q - D) 1{D <= q}]` and `E[(q - D) 1{D < q}]` that the
//! cost and regret formulas consume, the mean, and inverse-CDF sampling.
//! Parametric families use closed forms; discrete families use exact finite
//! sums over their atoms. Values are immutable after construction and safe
//! to share across threads.

use rand::Rng;
use rand::SeedableRng;
use rand::distr::Open01;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("cannot parse distribution '{0}': {1}")]
    Unparseable(String, String),
}

/// Deterministic random source: the same `(seed, stream)` pair yields an
/// identical sample sequence on every run and platform. Concurrent users
/// derive independent generators by picking distinct stream indices.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from the open interval (0, 1); never exactly 0 or 1, so
    /// inverse-CDF transforms stay finite.
    pub fn uniform_open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        self.rng.random_range(lo..hi)
    }

    /// Uniform integer draw from the inclusive range [lo, hi].
    pub fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        self.rng.random_range(lo..=hi)
    }
}

/// Sorted atoms with cached prefix sums; the shared kernel for every
/// discrete family. `cum` ends at exactly 1.0.
#[derive(Debug, Clone, PartialEq)]
struct Atoms {
    xs: Vec<f64>,
    ps: Vec<f64>,
    cum: Vec<f64>,
    cum_px: Vec<f64>,
}

impl Atoms {
    /// Build from sorted, deduplicated atoms whose masses sum to 1 within
    /// float noise; the last cumulative value is pinned to exactly 1.
    fn from_sorted(xs: Vec<f64>, ps: Vec<f64>) -> Self {
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let mut cum = Vec::with_capacity(ps.len());
        let mut cum_px = Vec::with_capacity(ps.len());
        let mut c = 0.0;
        let mut cpx = 0.0;
        for (&x, &p) in xs.iter().zip(&ps) {
            c += p;
            cpx += p * x;
            cum.push(c);
            cum_px.push(cpx);
        }
        *cum.last_mut().expect("atoms nonempty") = 1.0;
        Self { xs, ps, cum, cum_px }
    }

    /// Build from raw (value, mass) pairs: sorts, merges equal values, drops
    /// zero-mass entries.
    fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, DistributionError> {
        if pairs.is_empty() {
            return Err(DistributionError::InvalidParameters(
                "atom list is empty".into(),
            ));
        }
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for &(x, p) in pairs {
            if !x.is_finite() || x < 0.0 {
                return Err(DistributionError::InvalidParameters(format!(
                    "atom {x} outside the nonnegative reals"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(DistributionError::InvalidParameters(format!(
                    "atom mass {p} is negative or non-finite"
                )));
            }
            if p > 0.0 {
                sorted.push((x, p));
            }
        }
        if sorted.is_empty() {
            return Err(DistributionError::InvalidParameters(
                "all atoms have zero mass".into(),
            ));
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = sorted.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistributionError::InvalidParameters(format!(
                "atom masses sum to {total}, not 1"
            )));
        }
        let mut xs: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut ps: Vec<f64> = Vec::with_capacity(sorted.len());
        for (x, p) in sorted {
            if xs.last() == Some(&x) {
                *ps.last_mut().expect("nonempty") += p;
            } else {
                xs.push(x);
                ps.push(p);
            }
        }
        Ok(Self::from_sorted(xs, ps))
    }

    fn cdf(&self, x: f64) -> f64 {
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    fn cdf_strict(&self, x: f64) -> f64 {
        match self.xs.partition_point(|&v| v < x) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c < p);
        self.xs[i.min(self.xs.len() - 1)]
    }

    fn partial_expectation(&self, q: f64) -> f64 {
        match self.xs.partition_point(|&v| v <= q) {
            0 => 0.0,
            k => q * self.cum[k - 1] - self.cum_px[k - 1],
        }
    }

    fn strict_partial_expectation(&self, q: f64) -> f64 {
        match self.xs.partition_point(|&v| v < q) {
            0 => 0.0,
            k => q * self.cum[k - 1] - self.cum_px[k - 1],
        }
    }

    fn mean(&self) -> f64 {
        *self.cum_px.last().expect("atoms nonempty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AtomFamily {
    PointMassMixture,
    Empirical,
}

#[derive(Debug, Clone)]
enum Kernel {
    DiscreteUniform {
        lo: u64,
        hi: u64,
    },
    Exponential {
        mean: f64,
    },
    Poisson {
        mean: f64,
        atoms: Atoms,
    },
    TruncatedNormal {
        location: f64,
        scale: f64,
    },
    Atoms {
        family: AtomFamily,
        atoms: Atoms,
    },
    /// Copies `base` below `boundary`, places `boundary_mass` at the
    /// boundary, and the remaining mass at `cap`. Internal: realizes members
    /// of the boundary family used by the worst-case oracle.
    BoundaryRemix {
        base: Box<DemandDistribution>,
        boundary: f64,
        boundary_mass: f64,
        cap: f64,
        below: f64,
        below_deficit: f64,
        below_mean: f64,
    },
}

/// A demand distribution on [0, inf) with finite mean.
///
/// The CDF is nondecreasing, right-continuous, zero below 0, and limits to 1.
#[derive(Debug, Clone)]
pub struct DemandDistribution {
    kernel: Kernel,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

impl DemandDistribution {
    /// Uniform over the integers {lo, ..., hi}.
    pub fn discrete_uniform(lo: u64, hi: u64) -> Result<Self, DistributionError> {
        if lo > hi {
            return Err(DistributionError::InvalidParameters(format!(
                "discrete uniform bounds out of order: {lo} > {hi}"
            )));
        }
        if hi >= (1u64 << 53) {
            return Err(DistributionError::InvalidParameters(format!(
                "discrete uniform upper bound {hi} not exactly representable"
            )));
        }
        Ok(Self { kernel: Kernel::DiscreteUniform { lo, hi } })
    }

    pub fn exponential(mean: f64) -> Result<Self, DistributionError> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(DistributionError::InvalidParameters(format!(
                "exponential mean {mean} must be finite and positive"
            )));
        }
        Ok(Self { kernel: Kernel::Exponential { mean } })
    }

    pub fn poisson(mean: f64) -> Result<Self, DistributionError> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(DistributionError::InvalidParameters(format!(
                "poisson mean {mean} must be finite and positive"
            )));
        }
        if mean > 1e6 {
            return Err(DistributionError::InvalidParameters(format!(
                "poisson mean {mean} too large to tabulate"
            )));
        }
        let ln_mean = mean.ln();
        let cap_k = (mean + 20.0 * mean.sqrt() + 200.0) as usize;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut cum = 0.0f64;
        for k in 0..=cap_k {
            let kf = k as f64;
            let p = (-mean + kf * ln_mean - ln_gamma(kf + 1.0)).exp();
            xs.push(kf);
            ps.push(p);
            cum += p;
            // Truncate once the unseen tail is below 1e-12; fold it into the
            // final atom so total mass is exactly 1.
            if 1.0 - cum < 1e-12 && kf >= mean {
                break;
            }
        }
        let residual = (1.0 - cum).max(0.0);
        *ps.last_mut().expect("nonempty") += residual;
        Ok(Self { kernel: Kernel::Poisson { mean, atoms: Atoms::from_sorted(xs, ps) } })
    }

    /// Demand `D = max(0, X)` with `X ~ Normal(location, scale^2)`: a
    /// continuous right tail plus an atom at zero of mass `Phi(-location/scale)`.
    pub fn truncated_normal(location: f64, scale: f64) -> Result<Self, DistributionError> {
        if !location.is_finite() || !scale.is_finite() || scale <= 0.0 {
            return Err(DistributionError::InvalidParameters(format!(
                "truncated normal location {location} / scale {scale} invalid"
            )));
        }
        Ok(Self { kernel: Kernel::TruncatedNormal { location, scale } })
    }

    /// Finite mixture of point masses. Masses must be nonnegative and sum to
    /// 1 within 1e-12; equal atoms are merged.
    pub fn point_mass_mixture(atoms: &[(f64, f64)]) -> Result<Self, DistributionError> {
        Ok(Self {
            kernel: Kernel::Atoms {
                family: AtomFamily::PointMassMixture,
                atoms: Atoms::from_pairs(atoms)?,
            },
        })
    }

    /// Uniform-weight empirical distribution of the given samples.
    pub fn empirical_from_samples(xs: &[f64]) -> Result<Self, DistributionError> {
        if xs.is_empty() {
            return Err(DistributionError::InvalidParameters(
                "empirical sample set is empty".into(),
            ));
        }
        for &x in xs {
            if !x.is_finite() || x < 0.0 {
                return Err(DistributionError::InvalidParameters(format!(
                    "empirical sample {x} outside the nonnegative reals"
                )));
            }
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let mut vals: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for &x in &sorted {
            if vals.last() == Some(&x) {
                *counts.last_mut().expect("nonempty") += 1;
            } else {
                vals.push(x);
                counts.push(1);
            }
        }
        // Cumulative weights as exact ratios k/n so ties and quantile
        // comparisons behave like hand counting.
        let mut cum = Vec::with_capacity(vals.len());
        let mut cum_px = Vec::with_capacity(vals.len());
        let mut seen = 0usize;
        let mut cpx = 0.0;
        let mut ps = Vec::with_capacity(vals.len());
        for (&x, &c) in vals.iter().zip(&counts) {
            seen += c;
            let p = c as f64 / n as f64;
            cpx += p * x;
            ps.push(p);
            cum.push(seen as f64 / n as f64);
            cum_px.push(cpx);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok(Self {
            kernel: Kernel::Atoms {
                family: AtomFamily::Empirical,
                atoms: Atoms { xs: vals, ps, cum, cum_px },
            },
        })
    }

    /// Internal composite: agrees with `base` strictly below `boundary`,
    /// then mass `boundary_mass` at the boundary and the rest at `cap`.
    pub(crate) fn boundary_remix(
        base: &DemandDistribution,
        boundary: f64,
        boundary_mass: f64,
        cap: f64,
    ) -> Result<Self, DistributionError> {
        if !boundary.is_finite() || boundary < 0.0 {
            return Err(DistributionError::InvalidParameters(format!(
                "boundary {boundary} must be finite and nonnegative"
            )));
        }
        if !cap.is_finite() || cap <= boundary {
            return Err(DistributionError::InvalidParameters(format!(
                "cap {cap} must exceed the boundary {boundary}"
            )));
        }
        let below = base.cdf_strict(boundary);
        let avail = 1.0 - below;
        if !boundary_mass.is_finite() || boundary_mass < -1e-12 || boundary_mass > avail + 1e-12 {
            return Err(DistributionError::InvalidParameters(format!(
                "boundary mass {boundary_mass} outside [0, {avail}]"
            )));
        }
        let boundary_mass = boundary_mass.clamp(0.0, avail);
        let below_deficit = base.strict_partial_expectation(boundary);
        let below_mean = boundary * below - below_deficit;
        Ok(Self {
            kernel: Kernel::BoundaryRemix {
                base: Box::new(base.clone()),
                boundary,
                boundary_mass,
                cap,
                below,
                below_deficit,
                below_mean,
            },
        })
    }

    pub fn family(&self) -> &'static str {
        match &self.kernel {
            Kernel::DiscreteUniform { .. } => "discrete-uniform",
            Kernel::Exponential { .. } => "exponential",
            Kernel::Poisson { .. } => "poisson",
            Kernel::TruncatedNormal { .. } => "truncated-normal",
            Kernel::Atoms { family: AtomFamily::PointMassMixture, .. } => "point-mass-mixture",
            Kernel::Atoms { family: AtomFamily::Empirical, .. } => "empirical",
            Kernel::BoundaryRemix { .. } => "composite",
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kernel, Kernel::Exponential { .. })
    }

    /// Pr(D <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => du_cdf(*lo, *hi, x),
            Kernel::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Kernel::Poisson { atoms, .. } | Kernel::Atoms { atoms, .. } => atoms.cdf(x),
            Kernel::TruncatedNormal { location, scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    std_normal().cdf((x - location) / scale)
                }
            }
            Kernel::BoundaryRemix { base, boundary, boundary_mass, cap, below, .. } => {
                if x < *boundary {
                    base.cdf(x)
                } else if x < *cap {
                    below + boundary_mass
                } else {
                    1.0
                }
            }
        }
    }

    /// Pr(D < x): the left limit of the CDF at x. Differs from `cdf` only at
    /// atoms, where the atom's mass is excluded.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => {
                if x <= *lo as f64 {
                    0.0
                } else {
                    let below = if x.fract() == 0.0 { x - 1.0 } else { x.floor() };
                    du_cdf(*lo, *hi, below)
                }
            }
            Kernel::Exponential { .. } => self.cdf(x),
            Kernel::Poisson { atoms, .. } | Kernel::Atoms { atoms, .. } => atoms.cdf_strict(x),
            Kernel::TruncatedNormal { location, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal().cdf((x - location) / scale)
                }
            }
            Kernel::BoundaryRemix { base, boundary, boundary_mass, cap, below, .. } => {
                if x <= *boundary {
                    base.cdf_strict(x)
                } else if x <= *cap {
                    below + boundary_mass
                } else {
                    1.0
                }
            }
        }
    }

    /// Generalized inverse CDF: the smallest x with `cdf(x) >= p`. For
    /// unbounded continuous families `quantile(1)` is positive infinity.
    pub fn quantile(&self, p: f64) -> Result<f64, DistributionError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(DistributionError::InvalidProbability(p));
        }
        Ok(match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => {
                let n = (hi - lo + 1) as f64;
                let offset = ((p * n).ceil() as u64).max(1) - 1;
                let mut k = lo + offset.min(hi - lo);
                // Pin the candidate to the inf definition using the same
                // float division the CDF itself performs.
                while k > *lo && du_cdf(*lo, *hi, (k - 1) as f64) >= p {
                    k -= 1;
                }
                while k < *hi && du_cdf(*lo, *hi, k as f64) < p {
                    k += 1;
                }
                k as f64
            }
            Kernel::Exponential { mean } => -mean * (-p).ln_1p(),
            Kernel::Poisson { atoms, .. } | Kernel::Atoms { atoms, .. } => atoms.quantile(p),
            Kernel::TruncatedNormal { location, scale } => {
                let zero_mass = std_normal().cdf(-location / scale);
                if p <= zero_mass {
                    0.0
                } else if p == 1.0 {
                    f64::INFINITY
                } else {
                    let normal = std_normal();
                    // The rational-approximation inverse is only ~1e-9
                    // accurate; two Newton steps polish it to full
                    // precision so quantile and cdf invert each other.
                    let mut z = normal.inverse_cdf(p);
                    for _ in 0..2 {
                        let density = normal.pdf(z);
                        if density > 0.0 {
                            z -= (normal.cdf(z) - p) / density;
                        }
                    }
                    location + scale * z
                }
            }
            Kernel::BoundaryRemix { base, boundary, boundary_mass, cap, below, .. } => {
                if p <= *below {
                    base.quantile(p)?.min(*boundary)
                } else if p <= below + boundary_mass {
                    *boundary
                } else {
                    *cap
                }
            }
        })
    }

    /// E[(q - D) 1{D <= q}]; zero when q <= 0 for distributions without an
    /// atom at zero, and always nonnegative.
    pub fn partial_expectation(&self, q: f64) -> f64 {
        match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => {
                if q < *lo as f64 {
                    0.0
                } else {
                    du_partial(*lo, *hi, q, q.floor())
                }
            }
            Kernel::Exponential { mean } => {
                if q <= 0.0 {
                    0.0
                } else {
                    q + mean * (-q / mean).exp_m1()
                }
            }
            Kernel::Poisson { atoms, .. } | Kernel::Atoms { atoms, .. } => {
                atoms.partial_expectation(q)
            }
            Kernel::TruncatedNormal { location, scale } => tn_partial(*location, *scale, q),
            Kernel::BoundaryRemix {
                boundary, boundary_mass, cap, below, below_deficit, base, ..
            } => {
                if q < *boundary {
                    base.partial_expectation(q)
                } else {
                    let held = (below + boundary_mass) * (q - boundary) + below_deficit;
                    if q < *cap {
                        held
                    } else {
                        held + (1.0 - below - boundary_mass) * (q - cap)
                    }
                }
            }
        }
    }

    /// E[(q - D) 1{D < q}]: the strict-indicator partial expectation.
    /// Numerically equal to `partial_expectation` everywhere (an atom at q
    /// contributes (q - q) = 0), but computed from strictly-below mass.
    pub fn strict_partial_expectation(&self, q: f64) -> f64 {
        match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => {
                if q <= *lo as f64 {
                    0.0
                } else {
                    let below = if q.fract() == 0.0 { q - 1.0 } else { q.floor() };
                    du_partial(*lo, *hi, q, below)
                }
            }
            Kernel::Exponential { .. } => self.partial_expectation(q),
            Kernel::Poisson { atoms, .. } | Kernel::Atoms { atoms, .. } => {
                atoms.strict_partial_expectation(q)
            }
            Kernel::TruncatedNormal { location, scale } => tn_partial(*location, *scale, q),
            Kernel::BoundaryRemix {
                boundary, boundary_mass, cap, below, below_deficit, base, ..
            } => {
                if q <= *boundary {
                    base.strict_partial_expectation(q)
                } else {
                    let held = (below + boundary_mass) * (q - boundary) + below_deficit;
                    if q <= *cap {
                        held
                    } else {
                        held + (1.0 - below - boundary_mass) * (q - cap)
                    }
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kernel {
            Kernel::DiscreteUniform { lo, hi } => (*lo as f64 + *hi as f64) / 2.0,
            Kernel::Exponential { mean } => *mean,
            Kernel::Poisson { mean, .. } => *mean,
            Kernel::TruncatedNormal { location, scale } => {
                let z = location / scale;
                location * std_normal().cdf(z) + scale * std_normal().pdf(z)
            }
            Kernel::Atoms { atoms, .. } => atoms.mean(),
            Kernel::BoundaryRemix {
                boundary, boundary_mass, cap, below, below_mean, ..
            } => below_mean + boundary_mass * boundary + (1.0 - below - boundary_mass) * cap,
        }
    }

    /// n i.i.d. draws via the inverse-CDF transform, so discrete and
    /// empirical sampling is exact and seeds are portable.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    pub fn sample_one(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform_open01();
        self.quantile(u).expect("open-interval draw is a valid probability")
    }
}

fn du_cdf(lo: u64, hi: u64, x: f64) -> f64 {
    if x < lo as f64 {
        0.0
    } else if x >= hi as f64 {
        1.0
    } else {
        let k = x.floor() as u64;
        (k - lo + 1) as f64 / (hi - lo + 1) as f64
    }
}

/// Shared tail of the discrete-uniform partial expectations: sum of
/// (q - d)/n over support points d <= `top` (callers pass the weak or strict
/// top index as an f64 already clamped to be >= lo).
fn du_partial(lo: u64, hi: u64, q: f64, top: f64) -> f64 {
    let m = top.min(hi as f64);
    if m < lo as f64 {
        return 0.0;
    }
    let m = m as u64;
    let n = (hi - lo + 1) as f64;
    let cnt = (m - lo + 1) as f64;
    cnt * (q - (lo + m) as f64 / 2.0) / n
}

/// E[(q - D) 1{D <= q}] for D = max(0, X), X ~ Normal(location, scale^2):
/// q Phi(beta) - E[D 1{D <= q}] with
/// E[D 1{D <= q}] = location (Phi(beta) - Phi(alpha)) + scale (phi(alpha) - phi(beta)),
/// alpha = -location/scale, beta = (q - location)/scale.
fn tn_partial(location: f64, scale: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let n = std_normal();
    let alpha = -location / scale;
    let beta = (q - location) / scale;
    let mass_below = n.cdf(beta);
    let mean_below =
        location * (mass_below - n.cdf(alpha)) + scale * (n.pdf(alpha) - n.pdf(beta));
    q * mass_below - mean_below
}

/// Declarative description of a demand distribution, for config files and
/// command-line arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    DiscreteUniform { lo: u64, hi: u64 },
    Exponential { mean: f64 },
    Poisson { mean: f64 },
    TruncatedNormal { mean: f64, sd: f64 },
    PointMassMixture { atoms: Vec<(f64, f64)> },
    Empirical { values: Vec<f64> },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<DemandDistribution, DistributionError> {
        match self {
            Self::DiscreteUniform { lo, hi } => DemandDistribution::discrete_uniform(*lo, *hi),
            Self::Exponential { mean } => DemandDistribution::exponential(*mean),
            Self::Poisson { mean } => DemandDistribution::poisson(*mean),
            Self::TruncatedNormal { mean, sd } => DemandDistribution::truncated_normal(*mean, *sd),
            Self::PointMassMixture { atoms } => DemandDistribution::point_mass_mixture(atoms),
            Self::Empirical { values } => DemandDistribution::empirical_from_samples(values),
        }
    }

    /// Compact one-line syntax for the command line:
    /// `uniform(0,100)`, `exponential(80)`, `poisson(80)`, `normal(80,30)`,
    /// `point-mass(0:0.4,10:0.6)`, `empirical(1,2,3)`.
    pub fn parse(s: &str) -> Result<Self, DistributionError> {
        let err = |msg: &str| DistributionError::Unparseable(s.to_string(), msg.to_string());
        let t = s.trim();
        let open = t.find('(').ok_or_else(|| err("expected name(args)"))?;
        if !t.ends_with(')') {
            return Err(err("expected closing parenthesis"));
        }
        let name = t[..open].trim().to_ascii_lowercase();
        let args: Vec<&str> = t[open + 1..t.len() - 1]
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .collect();
        let num = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| err(&format!("'{a}' is not a number")))
        };
        let spec = match name.as_str() {
            "uniform" | "discrete-uniform" => {
                if args.len() != 2 {
                    return Err(err("uniform takes (lo,hi)"));
                }
                let lo = args[0]
                    .parse::<u64>()
                    .map_err(|_| err("uniform bounds must be nonnegative integers"))?;
                let hi = args[1]
                    .parse::<u64>()
                    .map_err(|_| err("uniform bounds must be nonnegative integers"))?;
                Ok(Self::DiscreteUniform { lo, hi })
            }
            "exponential" | "exp" => {
                if args.len() != 1 {
                    return Err(err("exponential takes (mean)"));
                }
                Ok(Self::Exponential { mean: num(args[0])? })
            }
            "poisson" => {
                if args.len() != 1 {
                    return Err(err("poisson takes (mean)"));
                }
                Ok(Self::Poisson { mean: num(args[0])? })
            }
            "normal" | "truncated-normal" => {
                if args.len() != 2 {
                    return Err(err("normal takes (mean,sd)"));
                }
                Ok(Self::TruncatedNormal { mean: num(args[0])?, sd: num(args[1])? })
            }
            "point-mass" | "mixture" => {
                let mut atoms = Vec::new();
                for a in &args {
                    let (x, p) = a
                        .split_once(':')
                        .ok_or_else(|| err("point-mass atoms are value:mass pairs"))?;
                    atoms.push((num(x.trim())?, num(p.trim())?));
                }
                Ok(Self::PointMassMixture { atoms })
            }
            "empirical" => {
                let values = args.iter().map(|a| num(a)).collect::<Result<Vec<_>, _>>()?;
                Ok(Self::Empirical { values })
            }
            other => Err(err(&format!("unknown family '{other}'"))),
        }?;
        // Parsing validates semantics too, so bad parameters surface where
        // the text came from rather than at first use.
        spec.build()?;
        Ok(spec)
    }
}

impl std::str::FromStr for DistributionSpec {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
