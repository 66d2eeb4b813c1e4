//! Rejection ABC for the filament process parameters θ = (λ₀, λ₁, μ).
//!
//! Each observed or simulated pattern is summarised by a four-component
//! feature vector: total points, points outside filaments, filament count,
//! and blunt triads among the non-filament points. Filaments come from an
//! exclusive arc search followed by zero-inflated-Poisson pruning of the
//! excess of minimal (length-3) filaments. The ABC distance is the
//! componentwise relative L1 norm; draws within the threshold are accepted.

mod zip;

pub use zip::{fit_zip, ZipFit};

use crate::error::{Error, Result};
use crate::filament_search::{arc_search, FilamentSet};
use crate::geometry::{Metric, Point, Region};
use crate::pfp_sim::{simulate_pfp, CountMode, PfpParams, SizeLaw, WalkLaws};
use crate::rng::substream;
use crate::triad_stats::{count_blunt_triads, TriadParams};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Four-component ABC summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub total_points: u64,
    pub non_filament_points: u64,
    pub n_filaments: u64,
    pub residual_blunt_triads: u64,
}

impl FeatureVector {
    fn as_array(&self) -> [f64; 4] {
        [
            self.total_points as f64,
            self.non_filament_points as f64,
            self.n_filaments as f64,
            self.residual_blunt_triads as f64,
        ]
    }
}

/// Outcome of ZIP pruning.
#[derive(Debug, Clone, Serialize)]
pub struct ZipPruneReport {
    pub initial_fit: ZipFit,
    pub final_fit: ZipFit,
    pub deleted: usize,
    pub warning: Option<String>,
}

/// Delete uniformly-random length-3 filaments until the zero-inflated-Poisson
/// fit of the size distribution (minus 3) shows no significant zero excess
/// (likelihood ratio against plain Poisson, boundary null ½χ²₀ + ½χ²₁, 5%).
pub fn zip_prune<R: Rng + ?Sized>(
    fs: &FilamentSet,
    rng: &mut R,
) -> Result<(FilamentSet, ZipPruneReport)> {
    if !fs.exclusive {
        return Err(Error::invalid("zip_prune requires an exclusive filament set"));
    }
    let mut filaments = fs.filaments.clone();
    let counts = |fils: &[crate::filament_search::Filament]| -> Vec<u32> {
        fils.iter().map(|f| (f.len() - 3) as u32).collect()
    };
    let initial_fit = fit_zip(&counts(&filaments));
    let mut fit = initial_fit.clone();
    let mut deleted = 0usize;
    let mut warning = None;
    while fit.significant {
        let short: Vec<usize> = filaments
            .iter()
            .enumerate()
            .filter_map(|(i, f)| (f.len() == 3).then_some(i))
            .collect();
        if short.is_empty() {
            warning = Some(
                "significant zero excess but no length-3 filaments left to delete".to_string(),
            );
            break;
        }
        let victim = short[rng.random_range(0..short.len())];
        filaments.remove(victim);
        deleted += 1;
        fit = fit_zip(&counts(&filaments));
    }
    Ok((
        FilamentSet { filaments, exclusive: true },
        ZipPruneReport { initial_fit, final_fit: fit, deleted, warning },
    ))
}

/// Map a point pattern to its feature vector: exclusive arc search, ZIP
/// pruning, then residual blunt triads over the non-filament points.
pub fn summarise<R: Rng + ?Sized>(
    points: &[Point],
    search: &TriadParams,
    metric: &Metric,
    rng: &mut R,
) -> Result<FeatureVector> {
    let fs = arc_search(points, search, metric, true);
    let (pruned, _report) = zip_prune(&fs, rng)?;
    let covered = pruned.covered_points();
    let residual: Vec<Point> = (0..points.len())
        .filter(|i| !covered.contains(i))
        .map(|i| points[i])
        .collect();
    let census = count_blunt_triads(&residual, search, metric)?;
    Ok(FeatureVector {
        total_points: points.len() as u64,
        non_filament_points: residual.len() as u64,
        n_filaments: pruned.filaments.len() as u64,
        residual_blunt_triads: census.count(),
    })
}

/// Componentwise relative L1 distance `Σ |sim_i − obs_i| / obs_i`. A zero
/// observed component falls back to denominator 1 and sets the flag.
pub fn abc_distance(sim: &FeatureVector, obs: &FeatureVector) -> (f64, bool) {
    let s = sim.as_array();
    let o = obs.as_array();
    let mut total = 0.0;
    let mut flagged = false;
    for i in 0..4 {
        let denom = if o[i] > 0.0 {
            o[i]
        } else {
            flagged = true;
            1.0
        };
        total += (s[i] - o[i]).abs() / denom;
    }
    (total, flagged)
}

/// Independent uniform priors; μ is log-uniform.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Priors {
    pub lambda0: (f64, f64),
    pub lambda1: (f64, f64),
    pub log_mu: (f64, f64),
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            lambda0: (10.0, 110.0),
            lambda1: (100.0, 700.0),
            log_mu: (0.5f64.ln(), 5.0f64.ln()),
        }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.lambda0, self.lambda1, self.log_mu] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid("prior bounds must be finite with lo < hi"));
            }
        }
        if self.lambda0.0 < 0.0 || self.lambda1.0 < 0.0 {
            return Err(Error::invalid("rate priors must be non-negative"));
        }
        Ok(())
    }

    /// Draw θ = (λ₀, λ₁, μ).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64) {
        let l0 = rng.random_range(self.lambda0.0..self.lambda0.1);
        let l1 = rng.random_range(self.lambda1.0..self.lambda1.1);
        let mu = rng.random_range(self.log_mu.0..self.log_mu.1).exp();
        (l0, l1, mu)
    }

    pub fn mu_bounds(&self) -> (f64, f64) {
        (self.log_mu.0.exp(), self.log_mu.1.exp())
    }
}

/// Noise placement for simulated data: the process definition (Poisson
/// count with mean λ₁) or a fixed count of round(λ₁) points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    Poisson,
    FixedCount,
}

/// Rejection-ABC configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AbcConfig {
    pub iterations: usize,
    /// acceptance uses distance <= threshold
    pub threshold: f64,
    pub search: TriadParams,
    /// nuisance walk laws, held fixed across iterations
    pub walk: WalkLaws,
    pub noise: NoiseMode,
}

impl AbcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("ABC needs at least one iteration"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid("threshold must be positive"));
        }
        Ok(())
    }
}

/// One accepted parameter draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptedDraw {
    pub iteration: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu: f64,
    pub distance: f64,
}

/// Accepted draws plus bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSample {
    pub accepted: Vec<AcceptedDraw>,
    pub iterations: usize,
    pub acceptance_rate: f64,
    pub observed_features: FeatureVector,
    pub distance_zero_component: bool,
}

/// Rejection ABC: per iteration, draw θ from the priors, simulate the
/// filament process, summarise, and accept when the distance is within the
/// threshold. Iterations use independent derived streams, so the accepted
/// set is identical for any worker count.
pub fn rejection_abc(
    obs_points: &[Point],
    priors: &Priors,
    cfg: &AbcConfig,
    region: &Region,
    metric: &Metric,
    master_seed: u64,
) -> Result<PosteriorSample> {
    priors.validate()?;
    cfg.validate()?;
    let mut obs_rng = substream(master_seed, 1, 0);
    let observed = summarise(obs_points, &cfg.search, metric, &mut obs_rng)?;

    let draws: Vec<Option<AcceptedDraw>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(master_seed, 0, i as u64);
            let (l0, l1, mu) = priors.sample(&mut rng);
            let params = PfpParams {
                lambda0: l0,
                lambda1: match cfg.noise {
                    NoiseMode::Poisson => l1,
                    NoiseMode::FixedCount => 0.0,
                },
                size: SizeLaw::Poisson { mu },
                walk: cfg.walk,
            };
            let mut realisation =
                simulate_pfp(&params, region, &mut rng).expect("validated parameters");
            if cfg.noise == NoiseMode::FixedCount {
                let extra = simulate_poisson(region, l1.round() as usize, &mut rng);
                realisation.points.extend(extra);
            }
            let features = summarise(&realisation.points, &cfg.search, metric, &mut rng)
                .expect("simulated points are finite");
            let (d, _flag) = abc_distance(&features, &observed);
            (d <= cfg.threshold).then_some(AcceptedDraw {
                iteration: i,
                lambda0: l0,
                lambda1: l1,
                mu,
                distance: d,
            })
        })
        .collect();

    let accepted: Vec<AcceptedDraw> = draws.into_iter().flatten().collect();
    let (_, flagged) = abc_distance(&observed, &observed);
    Ok(PosteriorSample {
        acceptance_rate: accepted.len() as f64 / cfg.iterations as f64,
        accepted,
        iterations: cfg.iterations,
        observed_features: observed,
        distance_zero_component: flagged,
    })
}

fn simulate_poisson(region: &Region, n: usize, rng: &mut impl Rng) -> Vec<Point> {
    (0..n).map(|_| region.sample_uniform(rng)).collect()
}

/// Per-parameter posterior summary with a kernel density grid.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorReport {
    pub n_accepted: usize,
    pub acceptance_rate: f64,
    pub lambda0: ParamSummary,
    pub lambda1: ParamSummary,
    pub mu: ParamSummary,
    /// 3 + median(μ), the parametrisation of filament length
    pub median_filament_length: f64,
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarise_param(values: &[f64], support: (f64, f64)) -> ParamSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    let med = median(&mut sorted);
    // Silverman bandwidth on a fixed 512-point grid over the prior support
    let iqr = if sorted.len() >= 4 {
        sorted[(0.75 * (sorted.len() - 1) as f64).round() as usize]
            - sorted[(0.25 * (sorted.len() - 1) as f64).round() as usize]
    } else {
        0.0
    };
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bw = if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        (support.1 - support.0) / 100.0
    };
    let grid_n = 512;
    let mut grid = Vec::with_capacity(grid_n);
    let mut density = Vec::with_capacity(grid_n);
    for i in 0..grid_n {
        let x = support.0 + (support.1 - support.0) * i as f64 / (grid_n - 1) as f64;
        let mut acc = 0.0;
        for v in values {
            let z = (x - v) / bw;
            acc += (-0.5 * z * z).exp();
        }
        grid.push(x);
        density.push(acc / (n * bw * (2.0 * std::f64::consts::PI).sqrt()));
    }
    ParamSummary { mean, median: med, sd, grid, density }
}

/// Summaries of a non-empty posterior sample.
pub fn posterior_summary(sample: &PosteriorSample, priors: &Priors) -> Result<PosteriorReport> {
    if sample.accepted.is_empty() {
        return Err(Error::invalid(
            "no accepted draws: raise the acceptance threshold or the iteration budget",
        ));
    }
    let l0: Vec<f64> = sample.accepted.iter().map(|d| d.lambda0).collect();
    let l1: Vec<f64> = sample.accepted.iter().map(|d| d.lambda1).collect();
    let mu: Vec<f64> = sample.accepted.iter().map(|d| d.mu).collect();
    let mu_summary = summarise_param(&mu, priors.mu_bounds());
    let median_filament_length = 3.0 + mu_summary.median;
    Ok(PosteriorReport {
        n_accepted: sample.accepted.len(),
        acceptance_rate: sample.acceptance_rate,
        lambda0: summarise_param(&l0, priors.lambda0),
        lambda1: summarise_param(&l1, priors.lambda1),
        mu: mu_summary,
        median_filament_length,
    })
}
