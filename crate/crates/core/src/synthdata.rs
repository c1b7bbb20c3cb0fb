//! Seeded generators for the synthetic benchmarks and a statistical power harness.
//!
//! Every random draw comes from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64`, with distributions from rand_distr 0.5. Independent
//! streams are selected with `set_stream`, so results do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{self as distr, Distribution, Exp, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::GridStrategy;
use crate::score::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Linear,
    Exponential,
    Step,
    Sawtooth,
    UniformRandom,
    Constant,
    Normal,
    Logistic,
    Triangular,
    Laplace,
    Rayleigh,
    Weibull,
    ExponentialDist,
    Poisson,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use GeneratorKind::*;
        Ok(match s {
            "linear" => Linear,
            "exponential" => Exponential,
            "step" => Step,
            "sawtooth" => Sawtooth,
            "uniform" | "uniform_random" => UniformRandom,
            "constant" => Constant,
            "normal" => Normal,
            "logistic" => Logistic,
            "triangular" => Triangular,
            "laplace" => Laplace,
            "rayleigh" => Rayleigh,
            "weibull" => Weibull,
            "exponential_dist" => ExponentialDist,
            "poisson" => Poisson,
            other => return Err(Error::InvalidArgument(format!("unknown generator {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    /// Repetitions per step, levels per sawtooth ramp, Poisson mean.
    pub param: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize) -> Self {
        Self { kind, n, param: 0, seed: 0 }
    }

    pub fn param(mut self, param: usize) -> Self {
        self.param = param;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn ramp(n: usize) -> impl Iterator<Item = f64> {
    let last = (n - 1) as f64;
    (0..n).map(move |i| i as f64 / last)
}

fn draw<D: Distribution<f64>>(d: D, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Open-interval uniform, safe for logarithms.
fn open01(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Vec<f64>> {
    generate_on_stream(spec, 0)
}

fn generate_on_stream(spec: &GeneratorSpec, stream: u64) -> Result<Vec<f64>> {
    use GeneratorKind::*;
    let n = spec.n;
    if n == 0 || (n < 2 && spec.kind != Constant) {
        return Err(Error::TooFewSamples(n));
    }
    let mut r = rng(spec.seed, stream);
    let v = match spec.kind {
        Linear => ramp(n).collect(),
        Exponential => {
            let e1 = std::f64::consts::E - 1.0;
            ramp(n).map(|t| t.exp_m1() / e1).collect()
        }
        Step => {
            let s = spec.param;
            if s < 2 {
                return Err(Error::InvalidDiscretization(s));
            }
            let last = (n - 1) as f64;
            (0..n).map(|i| ((i / s) * s) as f64 / last).collect()
        }
        Sawtooth => {
            let l = spec.param;
            if l < 2 {
                return Err(Error::InvalidDiscretization(l));
            }
            (0..n).map(|i| (i % l) as f64 / (l - 1) as f64).collect()
        }
        UniformRandom => (0..n).map(|_| r.random::<f64>()).collect(),
        Constant => vec![0.0; n],
        Normal => draw(StandardNormal, n, &mut r),
        Logistic => (0..n)
            .map(|_| {
                let u = open01(&mut r);
                (u / (1.0 - u)).ln()
            })
            .collect(),
        Triangular => draw(distr::Triangular::new(-1.0, 1.0, 0.0).unwrap(), n, &mut r),
        Laplace => (0..n)
            .map(|_| {
                let u = open01(&mut r) - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            })
            .collect(),
        Rayleigh => (0..n).map(|_| (-2.0 * open01(&mut r).ln()).sqrt()).collect(),
        Weibull => draw(distr::Weibull::new(1.0, 1.5).unwrap(), n, &mut r),
        ExponentialDist => draw(Exp::new(1.0).unwrap(), n, &mut r),
        Poisson => {
            let lambda = if spec.param == 0 { 1.0 } else { spec.param as f64 };
            draw(distr::Poisson::new(lambda).unwrap(), n, &mut r)
        }
    };
    Ok(v)
}

/// `10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5`.
pub fn friedman1_response(x: [f64; 5]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Friedman #1 regression problem with features `X1..X10` (and `X11..X14`,
/// noisy copies of `X1..X4`, when `include_correlated`).
pub fn friedman1(n: usize, seed: u64, include_correlated: bool, epsilon_sigma: f64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let cols: Vec<Vec<f64>> = (0..10u64)
        .map(|k| {
            let mut r = rng(seed, k);
            (0..n).map(|_| r.random::<f64>()).collect()
        })
        .collect();
    let mut noise = rng(seed, 100);
    let target: Vec<f64> = (0..n)
        .map(|i| {
            let eps: f64 = noise.sample(StandardNormal);
            friedman1_response([cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]]) + epsilon_sigma * eps
        })
        .collect();
    let mut features: Vec<(String, Vec<f64>)> =
        cols.iter().enumerate().map(|(k, c)| (format!("X{}", k + 1), c.clone())).collect();
    if include_correlated {
        for k in 0..4 {
            let mut r = rng(seed, 200 + k as u64);
            let jitter = Normal::new(0.0, 0.01).unwrap();
            let c = cols[k].iter().map(|&v| v + jitter.sample(&mut r)).collect();
            features.push((format!("X{}", k + 11), c));
        }
    }
    Dataset::new("Y", target, features)
}

/// Names of the eight distractor columns of [`bivariate_normal_suite`].
pub const DISTRACTORS: [(&str, GeneratorKind); 8] = [
    ("normal", GeneratorKind::Normal),
    ("exponential", GeneratorKind::ExponentialDist),
    ("logistic", GeneratorKind::Logistic),
    ("triangular", GeneratorKind::Triangular),
    ("uniform", GeneratorKind::UniformRandom),
    ("laplace", GeneratorKind::Laplace),
    ("rayleigh", GeneratorKind::Rayleigh),
    ("weibull", GeneratorKind::Weibull),
];

/// Features `x`, `y` drawn from a bivariate normal with unit variances and
/// correlation 0.5, eight independent distractors, and the joint density at
/// `(x, y)` as the target.
pub fn bivariate_normal_suite(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let rho: f64 = 0.5;
    let mut r = rng(seed, 0);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = r.sample(StandardNormal);
        let z2: f64 = r.sample(StandardNormal);
        x.push(z1);
        y.push(rho * z1 + (1.0 - rho * rho).sqrt() * z2);
    }
    let det = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let target = x
        .iter()
        .zip(&y)
        .map(|(a, b)| norm * (-0.5 * (a * a - 2.0 * rho * a * b + b * b) / det).exp())
        .collect();

    let mut features = vec![("x".to_string(), x), ("y".to_string(), y)];
    for (k, (name, kind)) in DISTRACTORS.iter().enumerate() {
        let spec = GeneratorSpec::new(*kind, n).seed(seed);
        features.push((name.to_string(), generate_on_stream(&spec, 1 + k as u64)?));
    }
    Dataset::new("density", target, features)
}

/// Functional relation between the mean of the features and the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Linear,
    Quadratic,
    Sine,
    /// Target drawn independently of the features.
    Independent,
}

/// Data-generating process of a power study: `d` uniform features named
/// `x1..xd` and a target following `relation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDesign {
    pub n: usize,
    pub d: usize,
    pub relation: Relation,
}

impl PowerDesign {
    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.d).map(|k| format!("x{k}")).collect()
    }

    /// One noise-free dataset with a standardized target.
    pub fn sample(&self, seed: u64, stream: u64) -> Result<Dataset> {
        let mut r = rng(seed, stream);
        let cols: Vec<Vec<f64>> = (0..self.d).map(|_| (0..self.n).map(|_| r.random::<f64>()).collect()).collect();
        let target: Vec<f64> = (0..self.n)
            .map(|i| {
                let m = cols.iter().map(|c| c[i]).sum::<f64>() / self.d as f64;
                match self.relation {
                    Relation::Linear => m,
                    Relation::Quadratic => (m - 0.5).powi(2),
                    Relation::Sine => (4.0 * std::f64::consts::PI * m).sin(),
                    Relation::Independent => r.random::<f64>(),
                }
            })
            .collect();
        let features = self.feature_names().into_iter().zip(cols).collect();
        Dataset::new("target", standardize(target), features)
    }

    fn independent(&self) -> PowerDesign {
        PowerDesign {
            relation: Relation::Independent,
            ..*self
        }
    }
}

fn standardize(v: Vec<f64>) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return v;
    }
    v.into_iter().map(|x| (x - mean) / sd).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub sigma_levels: Vec<f64>,
    pub power: Vec<f64>,
    pub mean_score: Vec<f64>,
    /// Mean score minus the mean score under independence, per level.
    pub contrast: Vec<f64>,
    pub independence_percentile: f64,
    pub gamma: f64,
    pub repeats: usize,
}

/// `gamma`-quantile by linear interpolation between order statistics.
pub(crate) fn quantile(sorted: &[f64], gamma: f64) -> f64 {
    let pos = gamma * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

const NULL_STREAM: u64 = 1 << 40;
const NOISE_STREAM: u64 = 1 << 41;

/// Fraction of noisy repeats whose assessment score exceeds the
/// `gamma`-percentile of the scores on independent data of the same shape.
///
/// Repeat `k` uses the same noise-free dataset at every noise level;
/// Gaussian noise of standard deviation `sigma` is added to its
/// standardized target.
pub fn power_analysis<S: AsRef<str>>(
    design: &PowerDesign,
    subset: &[S],
    sigma_levels: &[f64],
    gamma: f64,
    repeats: usize,
    seed: u64,
) -> Result<PowerReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if repeats < 2 {
        return Err(Error::InvalidArgument("need at least 2 repeats".into()));
    }
    if sigma_levels.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidArgument("noise levels must be finite and nonnegative".into()));
    }
    let subset: Vec<&str> = subset.iter().map(AsRef::as_ref).collect();
    let score = |data: &Dataset| -> Result<f64> {
        Ok(Scorer::new(data, GridStrategy::Sample)?.score(&subset)?.assessment_score)
    };

    let null_design = design.independent();
    let mut null = (0..repeats as u64)
        .into_par_iter()
        .map(|k| score(&null_design.sample(seed, NULL_STREAM + k)?))
        .collect::<Result<Vec<_>>>()?;
    let null_mean = null.iter().sum::<f64>() / repeats as f64;
    null.sort_by(f64::total_cmp);
    let threshold = quantile(&null, gamma);

    let mut power = Vec::with_capacity(sigma_levels.len());
    let mut mean_score = Vec::with_capacity(sigma_levels.len());
    for (level, &sigma) in sigma_levels.iter().enumerate() {
        let scores = (0..repeats as u64)
            .into_par_iter()
            .map(|k| {
                let base = design.sample(seed, k)?;
                let mut r = rng(seed, NOISE_STREAM + ((level as u64) << 20) + k);
                let noisy = base
                    .target()
                    .iter()
                    .map(|&v| v + sigma * r.sample::<f64, _>(StandardNormal))
                    .collect();
                score(&base.with_target(noisy)?)
            })
            .collect::<Result<Vec<_>>>()?;
        power.push(scores.iter().filter(|&&s| s > threshold).count() as f64 / repeats as f64);
        mean_score.push(scores.iter().sum::<f64>() / repeats as f64);
    }
    Ok(PowerReport {
        sigma_levels: sigma_levels.to_vec(),
        contrast: mean_score.iter().map(|m| m - null_mean).collect(),
        power,
        mean_score,
        independence_percentile: threshold,
        gamma,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_families() {
        assert_eq!(generate(&GeneratorSpec::new(GeneratorKind::Linear, 3)).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(generate(&GeneratorSpec::new(GeneratorKind::Constant, 4)).unwrap(), vec![0.0; 4]);
        let step = generate(&GeneratorSpec::new(GeneratorKind::Step, 4).param(2)).unwrap();
        assert_eq!(step, vec![0.0, 0.0, 2.0 / 3.0, 2.0 / 3.0]);
        let saw = generate(&GeneratorSpec::new(GeneratorKind::Sawtooth, 6).param(3)).unwrap();
        assert_eq!(saw, vec![0.0, 0.5, 1.0, 0.0, 0.5, 1.0]);
        let e = generate(&GeneratorSpec::new(GeneratorKind::Exponential, 5)).unwrap();
        assert_eq!(e[0], 0.0);
        assert_abs_diff_eq!(e[4], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bad_discretization() {
        for kind in [GeneratorKind::Step, GeneratorKind::Sawtooth] {
            assert_eq!(
                generate(&GeneratorSpec::new(kind, 10).param(1)).unwrap_err(),
                Error::InvalidDiscretization(1)
            );
        }
    }

    #[test]
    fn stochastic_families_are_seeded() {
        for (_, kind) in DISTRACTORS {
            let a = generate(&GeneratorSpec::new(kind, 100).seed(5)).unwrap();
            let b = generate(&GeneratorSpec::new(kind, 100).seed(5)).unwrap();
            let c = generate(&GeneratorSpec::new(kind, 100).seed(6)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            assert!(a.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn friedman_values() {
        assert_abs_diff_eq!(friedman1_response([0.5; 5]), 14.571_067_811_865_476, epsilon = 1e-12);
        assert_abs_diff_eq!(friedman1_response([0.0; 5]), 5.0, epsilon = 1e-12);
        let d = friedman1(50, 1, true, 1.0).unwrap();
        assert_eq!(d.n_features(), 14);
        assert_eq!(d.n_rows(), 50);
        assert_eq!(friedman1(50, 1, false, 1.0).unwrap().n_features(), 10);
    }

    #[test]
    fn suite_shape() {
        let d = bivariate_normal_suite(500, 3).unwrap();
        assert_eq!(d.n_features(), 10);
        assert_eq!(d.n_rows(), 500);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0], 0.5), 1.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.25), 0.25);
    }
}
