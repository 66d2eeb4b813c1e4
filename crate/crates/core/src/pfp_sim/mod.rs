//! Generators for the Poisson filament process and its baselines.
//!
//! A realisation is built in stages: filament parents from a homogeneous
//! Poisson process, a correlated random walk of length ≥ 3 per parent
//! (initial direction uniform, i.i.d. edge lengths, i.i.d. direction
//! *changes*), then unlabelled uniform noise, either Poisson-count or
//! fixed-count. The fixed-total variant mixes a proportion `w` of filament
//! points into an exact total. A Poisson cluster process with the same
//! parent/size laws but isotropically scattered offspring serves as the
//! clustered (non-filamentary) alternative.
//!
//! Boundary policy: a walk step that would leave the region is re-drawn
//! (length and turn re-sampled) up to 50 times, after which the filament is
//! truncated at its current size if that is at least 3, or discarded and
//! regenerated otherwise. On cyclic-longitude bands, longitude wraps instead
//! of rejecting.

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

const STEP_REDRAW_LIMIT: usize = 50;
const STRUCTURE_REGEN_LIMIT: usize = 100;

/// Edge-length law g_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeLaw {
    Uniform { min: f64, max: f64 },
}

impl EdgeLaw {
    pub fn validate(&self) -> Result<()> {
        let EdgeLaw::Uniform { min, max } = *self;
        if !(min > 0.0 && max >= min) {
            return Err(Error::invalid("edge-length law needs 0 < min <= max"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let EdgeLaw::Uniform { min, max } = *self;
        if max > min {
            rng.random_range(min..max)
        } else {
            min
        }
    }

    pub fn mean(&self) -> f64 {
        let EdgeLaw::Uniform { min, max } = *self;
        0.5 * (min + max)
    }
}

/// Turn-angle law g_C for the direction increments, symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TurnLaw {
    Uniform { half_width: f64 },
    WrappedNormal { sigma: f64 },
}

impl TurnLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TurnLaw::Uniform { half_width } => {
                if !(half_width >= 0.0) {
                    return Err(Error::invalid("turn law half-width must be non-negative"));
                }
            }
            TurnLaw::WrappedNormal { sigma } => {
                if !(sigma >= 0.0) {
                    return Err(Error::invalid("turn law sigma must be non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TurnLaw::Uniform { half_width } => {
                if half_width > 0.0 {
                    rng.random_range(-half_width..half_width)
                } else {
                    0.0
                }
            }
            TurnLaw::WrappedNormal { sigma } => {
                if sigma > 0.0 {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let a = (sigma * z).rem_euclid(TAU);
                    if a > TAU / 2.0 {
                        a - TAU
                    } else {
                        a
                    }
                } else {
                    0.0
                }
            }
        }
    }
}

/// Size law g_M, expressed as the law of the whole filament/cluster size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SizeLaw {
    /// size = 3 + M with M ~ Poisson(mu)
    Poisson { mu: f64 },
    /// size uniform on {min, ..., max}
    UniformInt { min: u32, max: u32 },
}

impl SizeLaw {
    pub fn validate(&self, min_allowed: u32) -> Result<()> {
        match *self {
            SizeLaw::Poisson { mu } => {
                if !(mu >= 0.0) {
                    return Err(Error::invalid("size law mu must be non-negative"));
                }
            }
            SizeLaw::UniformInt { min, max } => {
                if min < min_allowed || max < min {
                    return Err(Error::invalid(format!(
                        "integer size law needs {min_allowed} <= min <= max"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            SizeLaw::Poisson { mu } => 3 + poisson_count(mu, rng),
            SizeLaw::UniformInt { min, max } => rng.random_range(min..=max) as usize,
        }
    }

    pub fn mean_size(&self) -> f64 {
        match *self {
            SizeLaw::Poisson { mu } => 3.0 + mu,
            SizeLaw::UniformInt { min, max } => 0.5 * (min + max) as f64,
        }
    }

    fn min_size(&self) -> usize {
        match *self {
            SizeLaw::Poisson { .. } => 3,
            SizeLaw::UniformInt { min, .. } => min as usize,
        }
    }
}

/// Walk nuisance laws (initial direction is always uniform on [0, 2π)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkLaws {
    pub edge: EdgeLaw,
    pub turn: TurnLaw,
}

/// Full parameter set of the filament process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfpParams {
    /// mean number of filaments λ₀
    pub lambda0: f64,
    /// mean number of noise points λ₁
    pub lambda1: f64,
    pub size: SizeLaw,
    pub walk: WalkLaws,
}

impl PfpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0 && self.lambda1 >= 0.0) {
            return Err(Error::invalid("lambda0 and lambda1 must be non-negative"));
        }
        self.size.validate(3)?;
        self.walk.edge.validate()?;
        self.walk.turn.validate()
    }
}

/// A labelled realisation. Exports strip the labels; they exist for
/// evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct Realisation {
    pub points: Vec<Point>,
    /// per-point structure id (filament or cluster), None for noise
    pub labels: Vec<Option<u32>>,
    /// ordered index chains of the true structures
    pub structures: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl Realisation {
    pub fn n_structure_points(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn n_noise_points(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    draw as usize
}

/// One correlated random walk of `size` points starting at a uniform parent.
/// `None` when boundary re-draws forced a restart.
fn walk_filament<R: Rng + ?Sized>(
    region: &Region,
    laws: &WalkLaws,
    size: usize,
    rng: &mut R,
) -> Option<Vec<Point>> {
    let band = matches!(region, Region::LatLonBand { .. });
    let cyclic = matches!(region, Region::LatLonBand { cyclic: true, .. });
    let mut pts = Vec::with_capacity(size);
    pts.push(region.sample_uniform(rng));
    let mut bearing = rng.random_range(0.0..TAU);
    while pts.len() < size {
        let first = pts.len() == 1;
        let mut placed = false;
        for _ in 0..STEP_REDRAW_LIMIT {
            let proposal_bearing = if first {
                rng.random_range(0.0..TAU)
            } else {
                bearing + laws.turn.sample(rng)
            };
            let len = laws.edge.sample(rng);
            let prev = *pts.last().unwrap();
            let cand = if band {
                // local tangent-plane step in degrees; longitude wraps on
                // cyclic bands
                let dlat = len * proposal_bearing.sin();
                let dlon = len * proposal_bearing.cos() / prev.y.to_radians().cos();
                let raw = Point::new(prev.x + dlon, prev.y + dlat);
                if cyclic {
                    Point::new(raw.normalised_lonlat().x, raw.y)
                } else {
                    raw
                }
            } else {
                Point::new(
                    prev.x + len * proposal_bearing.cos(),
                    prev.y + len * proposal_bearing.sin(),
                )
            };
            if region.contains(cand) {
                pts.push(cand);
                bearing = proposal_bearing;
                placed = true;
                break;
            }
        }
        if !placed {
            if pts.len() >= 3 {
                return Some(pts); // truncated but still a legal filament
            }
            return None;
        }
    }
    Some(pts)
}

fn grow_filament<R: Rng + ?Sized>(
    region: &Region,
    laws: &WalkLaws,
    size_law: &SizeLaw,
    rng: &mut R,
) -> Vec<Point> {
    for _ in 0..STRUCTURE_REGEN_LIMIT {
        let size = size_law.sample(rng);
        if let Some(pts) = walk_filament(region, laws, size, rng) {
            return pts;
        }
    }
    // pathological region; fall back to a minimal straight run at the centre
    // of mass of fresh uniform draws is not meaningful, so give up loudly
    panic!("filament regeneration limit exceeded; region too small for the walk laws");
}

/// The Poisson filament process of the module docs.
pub fn simulate_pfp<R: Rng + ?Sized>(
    params: &PfpParams,
    region: &Region,
    rng: &mut R,
) -> Result<Realisation> {
    params.validate()?;
    region.validate()?;
    let n_fil = poisson_count(params.lambda0, rng);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut structures = Vec::new();
    for fid in 0..n_fil {
        let pts = grow_filament(region, &params.walk, &params.size, rng);
        let start = points.len();
        structures.push((start..start + pts.len()).collect());
        labels.extend(std::iter::repeat_n(Some(fid as u32), pts.len()));
        points.extend(pts);
    }
    let n_noise = poisson_count(params.lambda1, rng);
    for _ in 0..n_noise {
        points.push(region.sample_uniform(rng));
        labels.push(None);
    }
    Ok(Realisation { points, labels, structures, warnings: vec![] })
}

/// Fixed-total mixture: exactly `n_tot` points with a proportion `w` of them
/// in filaments. Whole filaments are generated until the filament-point
/// budget `round(w·n_tot)` is reached; overshoot is trimmed from the end of
/// the last filament unless that would leave it under 3 points, in which
/// case the last filament is dropped. The remainder is uniform noise.
pub fn simulate_fixed_total<R: Rng + ?Sized>(
    n_tot: usize,
    w: f64,
    size_law: &SizeLaw,
    walk: &WalkLaws,
    region: &Region,
    rng: &mut R,
) -> Result<Realisation> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid("w must lie in [0, 1]"));
    }
    size_law.validate(3)?;
    walk.edge.validate()?;
    walk.turn.validate()?;
    region.validate()?;
    let mut warnings = Vec::new();
    let mut chains: Vec<Vec<Point>> = Vec::new();
    if w > 0.0 && w * n_tot as f64 >= 3.0 {
        let target = (w * n_tot as f64).round() as usize;
        let mut total = 0usize;
        while total < target {
            let pts = grow_filament(region, walk, size_law, rng);
            total += pts.len();
            chains.push(pts);
        }
        if total > target {
            let excess = total - target;
            let last = chains.last_mut().unwrap();
            if last.len() >= excess + 3 {
                last.truncate(last.len() - excess);
            } else {
                chains.pop();
            }
        }
    } else if w > 0.0 {
        warnings.push(format!(
            "filament budget w*n_tot = {:.2} is below the minimum filament size; \
             emitting zero filaments",
            w * n_tot as f64
        ));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut structures = Vec::new();
    for (fid, pts) in chains.into_iter().enumerate() {
        let start = points.len();
        structures.push((start..start + pts.len()).collect());
        labels.extend(std::iter::repeat_n(Some(fid as u32), pts.len()));
        points.extend(pts);
    }
    if points.len() > n_tot {
        // only possible when w = 1 and the trim rule dropped to target
        points.truncate(n_tot);
        labels.truncate(n_tot);
    }
    while points.len() < n_tot {
        points.push(region.sample_uniform(rng));
        labels.push(None);
    }
    Ok(Realisation { points, labels, structures, warnings })
}

/// Pure-noise baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountMode {
    Fixed(usize),
    PoissonMean(f64),
}

/// Homogeneous Poisson (or fixed-count binomial) scatter; all labels noise.
pub fn simulate_poisson<R: Rng + ?Sized>(
    mode: CountMode,
    region: &Region,
    rng: &mut R,
) -> Result<Realisation> {
    region.validate()?;
    let n = match mode {
        CountMode::Fixed(n) => n,
        CountMode::PoissonMean(mean) => {
            if mean < 0.0 {
                return Err(Error::invalid("Poisson mean must be non-negative"));
            }
            poisson_count(mean, rng)
        }
    };
    let points: Vec<Point> = (0..n).map(|_| region.sample_uniform(rng)).collect();
    let labels = vec![None; n];
    Ok(Realisation { points, labels, structures: vec![], warnings: vec![] })
}

/// Half the expected filament extent: the default offspring dispersion radius
/// for a cluster process "comparable" to a filament configuration.
pub fn default_dispersion_radius(size_law: &SizeLaw, edge_law: &EdgeLaw) -> f64 {
    (size_law.mean_size() - 1.0) * edge_law.mean() / 2.0
}

/// Fixed-total Poisson cluster process matched to a filament configuration:
/// identical cluster-count budgeting and size law, offspring i.i.d. uniform
/// in a disc of `dispersion_radius` around the parent point.
pub fn simulate_pcp<R: Rng + ?Sized>(
    n_tot: usize,
    w: f64,
    size_law: &SizeLaw,
    dispersion_radius: f64,
    region: &Region,
    rng: &mut R,
) -> Result<Realisation> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid("w must lie in [0, 1]"));
    }
    if !(dispersion_radius > 0.0) {
        return Err(Error::invalid("dispersion radius must be positive"));
    }
    size_law.validate(1)?;
    region.validate()?;
    let min_size = size_law.min_size();
    let mut warnings = Vec::new();
    let mut chains: Vec<Vec<Point>> = Vec::new();
    if w > 0.0 && w * n_tot as f64 >= min_size as f64 {
        let target = (w * n_tot as f64).round() as usize;
        let mut total = 0usize;
        while total < target {
            let pts = grow_cluster(region, size_law, dispersion_radius, rng);
            total += pts.len();
            chains.push(pts);
        }
        if total > target {
            let excess = total - target;
            let last = chains.last_mut().unwrap();
            if last.len() >= excess + min_size {
                last.truncate(last.len() - excess);
            } else {
                chains.pop();
            }
        }
    } else if w > 0.0 {
        warnings.push("cluster budget below the minimum cluster size; zero clusters".into());
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut structures = Vec::new();
    for (cid, pts) in chains.into_iter().enumerate() {
        let start = points.len();
        structures.push((start..start + pts.len()).collect());
        labels.extend(std::iter::repeat_n(Some(cid as u32), pts.len()));
        points.extend(pts);
    }
    if points.len() > n_tot {
        points.truncate(n_tot);
        labels.truncate(n_tot);
    }
    while points.len() < n_tot {
        points.push(region.sample_uniform(rng));
        labels.push(None);
    }
    Ok(Realisation { points, labels, structures, warnings })
}

fn grow_cluster<R: Rng + ?Sized>(
    region: &Region,
    size_law: &SizeLaw,
    dispersion: f64,
    rng: &mut R,
) -> Vec<Point> {
    let min_size = size_law.min_size();
    for _ in 0..STRUCTURE_REGEN_LIMIT {
        let size = size_law.sample(rng);
        let parent = region.sample_uniform(rng);
        let mut pts = vec![parent];
        let mut ok = true;
        while pts.len() < size {
            let mut placed = false;
            for _ in 0..STEP_REDRAW_LIMIT {
                let r = dispersion * rng.random_range(0.0f64..1.0).sqrt();
                let th = rng.random_range(0.0..TAU);
                let cand = Point::new(parent.x + r * th.cos(), parent.y + r * th.sin());
                if region.contains(cand) {
                    pts.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                ok = pts.len() >= min_size;
                break;
            }
        }
        if ok || pts.len() >= min_size {
            return pts;
        }
    }
    panic!("cluster regeneration limit exceeded; region too small for the dispersion radius");
}
