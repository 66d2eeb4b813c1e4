//! Filament identification: the arc-search routine, a minimum-spanning-tree
//! baseline, the linearity diagnostic and point-level recovery metrics.
//!
//! Arc search grows a chain from every starting point in turn: the nearest
//! neighbour within d₀ seeds an edge, and the chain extends through a sector
//! of half-angle ε and radius d₀ around the projected direction at the
//! current end (the "arc of acceptability"), choosing the qualifying
//! candidate nearest the projected line. After the pass over all starts the
//! chains are rationalised: two-point chains dropped, contiguous-subsequence
//! duplicates removed, and endpoint-sharing chains merged when the junction
//! still satisfies the blunt-angle condition.
//!
//! Determinism: starts are processed in ascending index; nearest-neighbour
//! and nearest-to-line ties break to the lowest index.

use crate::error::{Error, Result};
use crate::geometry::{Metric, NeighborGrid, Point, Region};
use crate::pfp_sim::{simulate_poisson, CountMode};
use crate::rng::stream;
use crate::triad_stats::TriadParams;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;
use std::f64::consts::PI;

/// An ordered chain of at least three point indices with its edge lengths
/// and interior angles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Filament {
    pub indices: Vec<usize>,
    pub edge_lengths: Vec<f64>,
    pub interior_angles: Vec<f64>,
}

impl Filament {
    pub fn from_indices(indices: Vec<usize>, points: &[Point], metric: &Metric) -> Filament {
        let edge_lengths = indices
            .windows(2)
            .map(|w| metric.distance(points[w[0]], points[w[1]]))
            .collect();
        let interior_angles = indices
            .windows(3)
            .map(|w| {
                metric
                    .angle_at(points[w[1]], points[w[0]], points[w[2]])
                    .unwrap_or(0.0)
            })
            .collect();
        Filament { indices, edge_lengths, interior_angles }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sum of edge lengths over the end-to-end separation; ≥ 1, equal to 1
    /// exactly when the chain is straight. Coincident endpoints give +∞.
    pub fn linearity(&self, points: &[Point], metric: &Metric) -> f64 {
        let total: f64 = self.edge_lengths.iter().sum();
        let sep = metric.distance(
            points[self.indices[0]],
            points[*self.indices.last().unwrap()],
        );
        if sep == 0.0 {
            return f64::INFINITY;
        }
        total / sep
    }
}

/// A collection of filaments; `exclusive` means no point belongs to more
/// than one filament.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilamentSet {
    pub filaments: Vec<Filament>,
    pub exclusive: bool,
}

impl FilamentSet {
    pub fn empty(exclusive: bool) -> Self {
        FilamentSet { filaments: vec![], exclusive }
    }

    /// Wrap raw index chains (e.g. simulator ground truth).
    pub fn from_chains(chains: &[Vec<usize>], points: &[Point], metric: &Metric) -> Self {
        FilamentSet {
            filaments: chains
                .iter()
                .map(|c| Filament::from_indices(c.clone(), points, metric))
                .collect(),
            exclusive: true,
        }
    }

    /// All point indices covered by some filament.
    pub fn covered_points(&self) -> HashSet<usize> {
        self.filaments.iter().flat_map(|f| f.indices.iter().copied()).collect()
    }
}

fn sector_candidates(
    points: &[Point],
    metric: &Metric,
    grid: &NeighborGrid,
    chain: &[usize],
    params: &TriadParams,
    scratch: &mut Vec<u32>,
) -> Option<usize> {
    let last = chain[chain.len() - 1];
    let prev = chain[chain.len() - 2];
    let threshold = PI - params.epsilon;
    grid.candidates(last, scratch);
    let mut best: Option<(f64, usize)> = None;
    for &k in scratch.iter() {
        let k = k as usize;
        if chain.contains(&k) {
            continue;
        }
        let d = metric.distance(points[last], points[k]);
        if d <= 0.0 || d > params.d0 {
            continue;
        }
        let angle = metric
            .angle_at(points[last], points[prev], points[k])
            .expect("chain edges are non-degenerate");
        if angle < threshold {
            continue;
        }
        // perpendicular distance to the projected line: d·sin(π − angle)
        let perp = d * (PI - angle).sin();
        match best {
            Some((b, bk)) if perp > b || (perp == b && k > bk) => {}
            _ => best = Some((perp, k)),
        }
    }
    best.map(|(_, k)| k)
}

/// Arc-search filament identification. `exclusive` additionally resolves
/// point-sharing so each point belongs to at most one filament.
pub fn arc_search(
    points: &[Point],
    params: &TriadParams,
    metric: &Metric,
    exclusive: bool,
) -> FilamentSet {
    if points.len() < 3 {
        return FilamentSet::empty(exclusive);
    }
    let grid = NeighborGrid::build(points, metric, params.d0);
    let chains: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .filter_map(|start| {
            let mut scratch = Vec::new();
            grid.candidates(start, &mut scratch);
            let mut nearest: Option<(f64, usize)> = None;
            for &j in &scratch {
                let j = j as usize;
                let d = metric.distance(points[start], points[j]);
                if d <= 0.0 || d > params.d0 {
                    continue;
                }
                match nearest {
                    Some((bd, bj)) if d > bd || (d == bd && j > bj) => {}
                    _ => nearest = Some((d, j)),
                }
            }
            let (_, j) = nearest?;
            let mut chain = vec![start, j];
            while let Some(k) =
                sector_candidates(points, metric, &grid, &chain, params, &mut scratch)
            {
                chain.push(k);
            }
            chain.reverse();
            while let Some(k) =
                sector_candidates(points, metric, &grid, &chain, params, &mut scratch)
            {
                chain.push(k);
            }
            Some(chain)
        })
        .collect();

    let rationalised = rationalise(chains, points, params, metric);
    let final_chains = if exclusive {
        make_exclusive(rationalised, points, metric)
    } else {
        rationalised
    };
    build_set(final_chains, points, metric, exclusive)
}

fn build_set(
    mut chains: Vec<Vec<usize>>,
    points: &[Point],
    metric: &Metric,
    exclusive: bool,
) -> FilamentSet {
    chains.sort();
    FilamentSet {
        filaments: chains
            .into_iter()
            .map(|c| Filament::from_indices(c, points, metric))
            .collect(),
        exclusive,
    }
}

fn canonical(mut chain: Vec<usize>) -> Vec<usize> {
    if chain.first() > chain.last() {
        chain.reverse();
    }
    chain
}

/// True when `needle` (or its reverse) appears as a contiguous window of
/// `hay`.
fn is_contiguous_subsequence(needle: &[usize], hay: &[usize]) -> bool {
    if needle.len() > hay.len() {
        return false;
    }
    hay.windows(needle.len())
        .any(|w| w == needle || w.iter().rev().eq(needle.iter()))
}

fn prune_subsequences(chains: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut keep = vec![true; chains.len()];
    for i in 0..chains.len() {
        for j in 0..chains.len() {
            if i == j || !keep[i] {
                continue;
            }
            if keep[j]
                && chains[i].len() <= chains[j].len()
                && chains[i] != chains[j]
                && is_contiguous_subsequence(&chains[i], &chains[j])
            {
                keep[i] = false;
            }
        }
    }
    chains
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

fn rationalise(
    chains: Vec<Vec<usize>>,
    points: &[Point],
    params: &TriadParams,
    metric: &Metric,
) -> Vec<Vec<usize>> {
    // drop 2-point chains, canonicalise, dedupe
    let mut seen = HashSet::new();
    let mut chains: Vec<Vec<usize>> = chains
        .into_iter()
        .filter(|c| c.len() >= 3)
        .map(canonical)
        .filter(|c| seen.insert(c.clone()))
        .collect();
    chains.sort();
    chains = prune_subsequences(chains);

    // merge endpoint-sharing chains while the junction stays blunt
    let threshold = PI - params.epsilon;
    'merge: loop {
        for i in 0..chains.len() {
            for j in 0..chains.len() {
                if i == j {
                    continue;
                }
                let merged = try_merge(&chains[i], &chains[j], points, metric, threshold);
                if let Some(m) = merged {
                    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                    chains.remove(hi);
                    chains.remove(lo);
                    chains.push(canonical(m));
                    chains.sort();
                    continue 'merge;
                }
            }
        }
        break;
    }
    prune_subsequences(chains)
}

/// Merge `a` and `b` when they share exactly one endpoint and the three-point
/// junction satisfies the blunt condition. Orientations are tried in a fixed
/// order.
fn try_merge(
    a: &[usize],
    b: &[usize],
    points: &[Point],
    metric: &Metric,
    threshold: f64,
) -> Option<Vec<usize>> {
    let orientations: [(Vec<usize>, Vec<usize>); 4] = [
        (a.to_vec(), b.to_vec()),
        (a.to_vec(), b.iter().rev().copied().collect()),
        (a.iter().rev().copied().collect(), b.to_vec()),
        (
            a.iter().rev().copied().collect(),
            b.iter().rev().copied().collect(),
        ),
    ];
    for (x, y) in orientations {
        if x.last() != y.first() {
            continue;
        }
        let shared = *x.last().unwrap();
        let before = x[x.len() - 2];
        let after = y[1];
        // all indices distinct apart from the shared endpoint
        let set: HashSet<usize> = x.iter().chain(y.iter().skip(1)).copied().collect();
        if set.len() != x.len() + y.len() - 1 {
            continue;
        }
        let angle = metric
            .angle_at(points[shared], points[before], points[after])
            .unwrap_or(0.0);
        if angle >= threshold {
            let mut m = x;
            m.extend_from_slice(&y[1..]);
            return Some(m);
        }
    }
    None
}

/// Resolve point sharing: filaments ranked by (length desc, linearity asc,
/// lowest index) claim their points in order; what survives of a lower-ranked
/// filament is split into contiguous runs and runs of ≥ 3 points are kept.
fn make_exclusive(
    chains: Vec<Vec<usize>>,
    points: &[Point],
    metric: &Metric,
) -> Vec<Vec<usize>> {
    let mut ranked: Vec<(usize, f64, Vec<usize>)> = chains
        .into_iter()
        .map(|c| {
            let f = Filament::from_indices(c.clone(), points, metric);
            (c.len(), f.linearity(points, metric), c)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.2.cmp(&b.2))
    });
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    for (_, _, chain) in ranked {
        let mut run: Vec<usize> = Vec::new();
        let mut runs: Vec<Vec<usize>> = Vec::new();
        for &idx in &chain {
            if claimed.contains(&idx) {
                if run.len() >= 3 {
                    runs.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
            } else {
                run.push(idx);
            }
        }
        if run.len() >= 3 {
            runs.push(run);
        }
        for r in runs {
            claimed.extend(r.iter().copied());
            out.push(canonical(r));
        }
    }
    out
}

/// Minimum spanning tree edges by Prim's algorithm, deterministic tie-break
/// on vertex index.
pub fn mst_edges(points: &[Point], metric: &Metric) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return vec![];
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    key[0] = 0.0;
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 0..n {
        let mut best = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (best == usize::MAX || key[v] < key[best]) {
                best = v;
            }
        }
        in_tree[best] = true;
        if parent[best] != usize::MAX {
            edges.push((parent[best].min(best), parent[best].max(best)));
        }
        for v in 0..n {
            if !in_tree[v] {
                let d = metric.distance(points[best], points[v]);
                if d < key[v] {
                    key[v] = d;
                    parent[v] = best;
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Filaments along MST branches: the tree is split at every vertex of degree
/// ≥ 3, each branch path is scanned for maximal sub-paths whose edges are all
/// ≤ d₀ and interior angles all ≥ π−ε, and the results pass through the same
/// rationalisation as arc search.
pub fn mst_filaments(points: &[Point], params: &TriadParams, metric: &Metric) -> FilamentSet {
    if points.len() < 3 {
        return FilamentSet::empty(false);
    }
    let edges = mst_edges(points, metric);
    let n = points.len();
    let mut adj: Vec<Vec<usize>> = vec![vec![]; n];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }

    // maximal paths between terminals (degree != 2) through degree-2 interiors
    let mut visited: HashSet<(usize, usize)> = HashSet::new();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for t in 0..n {
        if adj[t].len() == 2 || adj[t].is_empty() {
            continue;
        }
        for &nb in &adj[t] {
            let key = (t.min(nb), t.max(nb));
            if !visited.insert(key) {
                continue;
            }
            let mut path = vec![t, nb];
            loop {
                let last = *path.last().unwrap();
                if adj[last].len() != 2 {
                    break;
                }
                let prev = path[path.len() - 2];
                let next = if adj[last][0] == prev { adj[last][1] } else { adj[last][0] };
                visited.insert((last.min(next), last.max(next)));
                path.push(next);
            }
            paths.push(path);
        }
    }

    // maximal qualifying sub-paths
    let threshold = PI - params.epsilon;
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for path in paths {
        let mut run: Vec<usize> = vec![path[0]];
        for k in 1..path.len() {
            let d = metric.distance(points[path[k - 1]], points[path[k]]);
            if d > params.d0 {
                if run.len() >= 2 {
                    chains.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
                run.push(path[k]);
                continue;
            }
            if run.len() >= 2 {
                let a = run[run.len() - 2];
                let angle = metric
                    .angle_at(points[path[k - 1]], points[a], points[path[k]])
                    .unwrap_or(0.0);
                if angle < threshold {
                    chains.push(std::mem::take(&mut run));
                    run.push(path[k - 1]);
                }
            }
            run.push(path[k]);
        }
        if run.len() >= 2 {
            chains.push(run);
        }
    }

    let rationalised = rationalise(chains, points, params, metric);
    build_set(rationalised, points, metric, false)
}

/// Point-level and filament-level recovery metrics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvalMetrics {
    /// fraction of true filaments for which a single estimated filament
    /// contains more than half of their points; None when there is no truth
    pub capture_rate: Option<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Compare estimated filaments with ground truth over `n_points` points.
pub fn evaluate(truth: &FilamentSet, estimate: &FilamentSet, n_points: usize) -> EvalMetrics {
    let est_points = estimate.covered_points();
    let truth_points = truth.covered_points();

    let capture_rate = if truth.filaments.is_empty() {
        None
    } else {
        let captured = truth
            .filaments
            .iter()
            .filter(|tf| {
                let need = tf.len() as f64 / 2.0;
                estimate.filaments.iter().any(|ef| {
                    let hits = tf.indices.iter().filter(|i| ef.indices.contains(i)).count();
                    hits as f64 > need
                })
            })
            .count();
        Some(captured as f64 / truth.filaments.len() as f64)
    };

    let sensitivity = if truth_points.is_empty() {
        1.0
    } else {
        truth_points.iter().filter(|i| est_points.contains(i)).count() as f64
            / truth_points.len() as f64
    };

    let n_noise = n_points - truth_points.len();
    let specificity = if n_noise == 0 {
        1.0
    } else {
        let false_pos = (0..n_points)
            .filter(|i| !truth_points.contains(i) && est_points.contains(i))
            .count();
        (n_noise - false_pos) as f64 / n_noise as f64
    };

    EvalMetrics { capture_rate, sensitivity, specificity }
}

/// Linearity diagnostic against Monte Carlo critical values from matched
/// Poisson nulls.
#[derive(Debug, Clone, Serialize)]
pub struct LinearityReport {
    pub per_filament: Vec<f64>,
    pub median: Option<f64>,
    pub critical_value: f64,
    pub p_value: Option<f64>,
    /// None when the observed data produced no filaments (inconclusive)
    pub reject: Option<bool>,
    pub n_null_used: usize,
    pub sig_level: f64,
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One-sided test of "more linear than Poisson": small median linearity
/// rejects. Null realisations are matched on point count and region.
pub fn linearity_test(
    points: &[Point],
    params: &TriadParams,
    metric: &Metric,
    region: &Region,
    null_sims: usize,
    sig_level: f64,
    master_seed: u64,
) -> Result<LinearityReport> {
    if null_sims < 99 {
        return Err(Error::invalid("linearity test needs at least 99 null simulations"));
    }
    if !(sig_level > 0.0 && sig_level < 1.0) {
        return Err(Error::invalid("significance level must lie in (0, 1)"));
    }
    let observed = arc_search(points, params, metric, false);
    let mut per: Vec<f64> = observed
        .filaments
        .iter()
        .map(|f| f.linearity(points, metric))
        .collect();
    let obs_median = if per.is_empty() { None } else { Some(median_of(&mut per)) };

    let mut null_medians: Vec<f64> = (0..null_sims)
        .into_par_iter()
        .filter_map(|s| {
            let mut rng = stream(master_seed, s as u64);
            let null = simulate_poisson(CountMode::Fixed(points.len()), region, &mut rng)
                .expect("valid region");
            let fs = arc_search(&null.points, params, metric, false);
            if fs.filaments.is_empty() {
                return None;
            }
            let mut vals: Vec<f64> = fs
                .filaments
                .iter()
                .map(|f| f.linearity(&null.points, metric))
                .collect();
            Some(median_of(&mut vals))
        })
        .collect();
    null_medians.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = null_medians.len();
    let k = ((sig_level * (m + 1) as f64).floor() as usize).clamp(1, m);
    let critical_value = null_medians[k - 1];

    let (p_value, reject) = match obs_median {
        None => (None, None),
        Some(om) => {
            let r = null_medians.iter().filter(|&&v| v <= om).count();
            let p = (r as f64 + 1.0) / (m as f64 + 1.0);
            (Some(p), Some(p <= sig_level))
        }
    };
    Ok(LinearityReport {
        per_filament: per,
        median: obs_median,
        critical_value,
        p_value,
        reject,
        n_null_used: m,
        sig_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfp_sim::{simulate_pfp, EdgeLaw, PfpParams, SizeLaw, TurnLaw, WalkLaws};
    use crate::rng::stream;
    use rand::Rng;

    fn params15(d0: f64) -> TriadParams {
        TriadParams::new(15f64.to_radians(), d0).unwrap()
    }

    fn line(n: usize) -> Vec<Point> {
        (0..n).map(|i| Point::new(i as f64, 0.0)).collect()
    }

    /// Check the full set of filament invariants for a search output.
    fn assert_valid(fs: &FilamentSet, points: &[Point], params: &TriadParams, metric: &Metric) {
        for f in &fs.filaments {
            assert!(f.len() >= 3);
            let distinct: HashSet<usize> = f.indices.iter().copied().collect();
            assert_eq!(distinct.len(), f.len(), "duplicate indices in a filament");
            for &e in &f.edge_lengths {
                assert!(e <= params.d0 + 1e-12, "edge {e} over d0 {}", params.d0);
            }
            for &a in &f.interior_angles {
                assert!(a >= PI - params.epsilon - 1e-12, "angle {a} too sharp");
            }
            assert!(f.linearity(points, metric) >= 1.0 - 1e-12);
        }
        for (i, f) in fs.filaments.iter().enumerate() {
            for (j, g) in fs.filaments.iter().enumerate() {
                if i != j {
                    assert!(
                        !is_contiguous_subsequence(&f.indices, &g.indices),
                        "filament {i} is a contiguous subsequence of {j}"
                    );
                }
            }
        }
        if fs.exclusive {
            let total: usize = fs.filaments.iter().map(|f| f.len()).sum();
            assert_eq!(total, fs.covered_points().len(), "shared points in exclusive mode");
        }
    }

    #[test]
    fn collinear_points_give_one_filament() {
        let pts = line(5);
        let fs = arc_search(&pts, &params15(1.5), &Metric::Euclidean, false);
        assert_eq!(fs.filaments.len(), 1);
        assert_eq!(fs.filaments[0].len(), 5);
        assert_valid(&fs, &pts, &params15(1.5), &Metric::Euclidean);
    }

    #[test]
    fn two_isolated_points_give_nothing() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let fs = arc_search(&pts, &params15(1.5), &Metric::Euclidean, false);
        assert!(fs.filaments.is_empty());
    }

    #[test]
    fn candidate_nearest_projected_line_wins() {
        // seed edge (0,0)-(1,0); candidates (2, 0.05) and (1.9, 0.15) both sit
        // in the sector; the one nearer the projected line must be chosen
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.05),
            Point::new(1.9, 0.15),
        ];
        let params = params15(1.5);
        let m = Metric::Euclidean;
        let fs = arc_search(&pts, &params, &m, false);
        let with_both: Vec<&Filament> =
            fs.filaments.iter().filter(|f| f.indices.contains(&0)).collect();
        assert!(!with_both.is_empty());
        let f = with_both[0];
        // chain 0-1 extends to point 2, not point 3
        let pos1 = f.indices.iter().position(|&i| i == 1).unwrap();
        let neighbours: Vec<usize> = [pos1.checked_sub(1), Some(pos1 + 1)]
            .iter()
            .flatten()
            .filter_map(|&p| f.indices.get(p).copied())
            .collect();
        assert!(neighbours.contains(&2), "expected 2 adjacent to 1, chain {:?}", f.indices);

        // oracle: nearest-to-line is the blunt triangle with the largest obtuse angle
        let a2 = m.angle_at(pts[1], pts[0], pts[2]).unwrap();
        let a3 = m.angle_at(pts[1], pts[0], pts[3]).unwrap();
        assert!(a2 > a3);
    }

    #[test]
    fn backward_extension_mirrors_forward() {
        // starting anywhere on a straight run must recover the whole run
        let pts = line(6);
        let fs = arc_search(&pts, &params15(1.2), &Metric::Euclidean, false);
        assert_eq!(fs.filaments.len(), 1);
        assert_eq!(fs.filaments[0].indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn exclusive_mode_partitions_points() {
        let region = Region::Rect { width: 360.0, height: 150.0 };
        let params = params15(10.0);
        let pfp = PfpParams {
            lambda0: 40.0,
            lambda1: 300.0,
            size: SizeLaw::UniformInt { min: 3, max: 8 },
            walk: WalkLaws {
                edge: EdgeLaw::Uniform { min: 2.0, max: 10.0 },
                turn: TurnLaw::Uniform { half_width: 15f64.to_radians() },
            },
        };
        let mut rng = stream(50, 0);
        let r = simulate_pfp(&pfp, &region, &mut rng).unwrap();
        let fs = arc_search(&r.points, &params, &Metric::Euclidean, true);
        assert!(!fs.filaments.is_empty());
        assert_valid(&fs, &r.points, &params, &Metric::Euclidean);
        let fs_open = arc_search(&r.points, &params, &Metric::Euclidean, false);
        assert_valid(&fs_open, &r.points, &params, &Metric::Euclidean);
    }

    #[test]
    fn permutation_invariance_as_point_sets() {
        let region = Region::Rect { width: 50.0, height: 50.0 };
        let mut rng = stream(51, 0);
        let pts: Vec<Point> = (0..150).map(|_| region.sample_uniform(&mut rng)).collect();
        let params = params15(4.0);
        let m = Metric::Euclidean;
        let base = arc_search(&pts, &params, &m, false);

        // reverse the point order
        let perm: Vec<usize> = (0..pts.len()).rev().collect();
        let permuted: Vec<Point> = perm.iter().map(|&i| pts[i]).collect();
        let other = arc_search(&permuted, &params, &m, false);

        let to_sets = |fs: &FilamentSet, map: &dyn Fn(usize) -> usize| -> HashSet<Vec<usize>> {
            fs.filaments
                .iter()
                .map(|f| {
                    let mut v: Vec<usize> = f.indices.iter().map(|&i| map(i)).collect();
                    v.sort_unstable();
                    v
                })
                .collect()
        };
        let a = to_sets(&base, &|i| i);
        let b = to_sets(&other, &|i| perm[i]);
        assert_eq!(a, b);
    }

    #[test]
    fn mst_unit_square_corners() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let m = Metric::Euclidean;
        let edges = mst_edges(&pts, &m);
        let total: f64 = edges.iter().map(|&(a, b)| m.distance(pts[a], pts[b])).sum();
        assert!((total - 3.0).abs() < 1e-12);
        let fs = mst_filaments(&pts, &params15(1.5), &m);
        assert!(fs.filaments.is_empty(), "right angles cannot qualify");
    }

    #[test]
    fn mst_path_on_collinear_points() {
        let pts = line(5);
        let fs = mst_filaments(&pts, &params15(1.5), &Metric::Euclidean);
        assert_eq!(fs.filaments.len(), 1);
        assert_eq!(fs.filaments[0].indices, vec![0, 1, 2, 3, 4]);
    }

    /// Kruskal with union-find: the independent reference MST.
    fn kruskal(points: &[Point], metric: &Metric) -> (Vec<(usize, usize)>, f64) {
        let n = points.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((metric.distance(points[i], points[j]), i, j));
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        let mut out = Vec::new();
        let mut total = 0.0;
        for (w, i, j) in edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                out.push((i, j));
                total += w;
            }
        }
        out.sort_unstable();
        (out, total)
    }

    #[test]
    fn mst_matches_kruskal_oracle() {
        let region = Region::Rect { width: 10.0, height: 10.0 };
        let m = Metric::Euclidean;
        for s in 0..20 {
            let mut rng = stream(52, s);
            let pts: Vec<Point> = (0..50).map(|_| region.sample_uniform(&mut rng)).collect();
            let prim = mst_edges(&pts, &m);
            let (krus, ktotal) = kruskal(&pts, &m);
            let ptotal: f64 = prim.iter().map(|&(a, b)| m.distance(pts[a], pts[b])).sum();
            assert!((ptotal - ktotal).abs() < 1e-12);
            assert_eq!(prim, krus); // weights distinct a.s. -> unique tree
        }
    }

    #[test]
    fn linearity_values() {
        let m = Metric::Euclidean;
        let pts = line(4);
        let f = Filament::from_indices(vec![0, 1, 2, 3], &pts, &m);
        assert_eq!(f.linearity(&pts, &m), 1.0);

        let elbow = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)];
        let f = Filament::from_indices(vec![0, 1, 2], &elbow, &m);
        assert!((f.linearity(&elbow, &m) - 2.0 / 2f64.sqrt()).abs() < 1e-12);

        let loopy = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 0.0)];
        let f = Filament::from_indices(vec![0, 1, 2], &loopy, &m);
        assert!(f.linearity(&loopy, &m).is_infinite());
    }

    #[test]
    fn walk_filament_linearity_band() {
        // generated filaments with eps = 15 degrees stay within [1, 1.2]
        let region = Region::Rect { width: 360.0, height: 150.0 };
        let pfp = PfpParams {
            lambda0: 5.0,
            lambda1: 0.0,
            size: SizeLaw::UniformInt { min: 3, max: 8 },
            walk: WalkLaws {
                edge: EdgeLaw::Uniform { min: 2.0, max: 10.0 },
                turn: TurnLaw::Uniform { half_width: 15f64.to_radians() },
            },
        };
        let m = Metric::Euclidean;
        for s in 0..1000 {
            let mut rng = stream(53, s);
            let r = simulate_pfp(&pfp, &region, &mut rng).unwrap();
            let truth = FilamentSet::from_chains(&r.structures, &r.points, &m);
            for f in &truth.filaments {
                let lin = f.linearity(&r.points, &m);
                assert!((1.0..=1.2).contains(&lin), "linearity {lin} at seed {s}");
            }
        }
    }

    #[test]
    fn evaluate_perfect_and_empty() {
        let pts = line(6);
        let m = Metric::Euclidean;
        let truth = FilamentSet::from_chains(&[vec![0, 1, 2], vec![3, 4, 5]], &pts, &m);
        let metrics = evaluate(&truth, &truth, 6);
        assert_eq!(metrics.capture_rate, Some(1.0));
        assert_eq!(metrics.sensitivity, 1.0);
        assert_eq!(metrics.specificity, 1.0);

        let empty = FilamentSet::empty(false);
        let metrics = evaluate(&truth, &empty, 6);
        assert_eq!(metrics.capture_rate, Some(0.0));
        assert_eq!(metrics.sensitivity, 0.0);
        assert_eq!(metrics.specificity, 1.0);

        let metrics = evaluate(&empty, &truth, 6);
        assert!(metrics.capture_rate.is_none());
    }

    #[test]
    fn evaluate_over_half_rule() {
        let pts = line(8);
        let m = Metric::Euclidean;
        // true filament of 4; estimate covering exactly 2 of its points is not
        // "over half", 3 is
        let truth = FilamentSet::from_chains(&[vec![0, 1, 2, 3]], &pts, &m);
        let est2 = FilamentSet::from_chains(&[vec![2, 3, 4]], &pts, &m);
        assert_eq!(evaluate(&truth, &est2, 8).capture_rate, Some(0.0));
        let est3 = FilamentSet::from_chains(&[vec![1, 2, 3, 4]], &pts, &m);
        assert_eq!(evaluate(&truth, &est3, 8).capture_rate, Some(1.0));
    }

    #[test]
    fn linearity_test_size_calibration() {
        // feeding a Poisson draw as "observed" rejects at roughly the nominal rate
        let region = Region::Rect { width: 60.0, height: 60.0 };
        let params = params15(4.0);
        let m = Metric::Euclidean;
        let reps = 200;
        let mut rejections = 0;
        let mut used = 0;
        for r in 0..reps {
            let mut rng = stream(54, 1000 + r);
            let obs = simulate_poisson(CountMode::Fixed(150), &region, &mut rng).unwrap();
            let report =
                linearity_test(&obs.points, &params, &m, &region, 199, 0.05, 55).unwrap();
            if let Some(reject) = report.reject {
                used += 1;
                if reject {
                    rejections += 1;
                }
            }
        }
        assert!(used > reps * 9 / 10);
        let rate = rejections as f64 / used as f64;
        let se = (0.05f64 * 0.95 / used as f64).sqrt();
        assert!((rate - 0.05).abs() < 2.0 * se + 0.01, "size {rate}");
    }

    #[test]
    fn seeded_search_is_deterministic() {
        let region = Region::Rect { width: 100.0, height: 100.0 };
        let mut rng = stream(56, 0);
        let pts: Vec<Point> = (0..400).map(|_| region.sample_uniform(&mut rng)).collect();
        let params = params15(5.0);
        let a = arc_search(&pts, &params, &Metric::Euclidean, true);
        let b = arc_search(&pts, &params, &Metric::Euclidean, true);
        assert_eq!(a, b);
    }
}
