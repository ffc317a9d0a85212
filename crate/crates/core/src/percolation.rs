//! Clusters, annulus crossings and per-sample thresholds.
//!
//! A crossing of the annulus `B(c, outer) \ B(c, inner)` is an occupied path
//! whose first site is adjacent to a point of `A = B(c, inner)` and whose last
//! site is adjacent to a point outside `B(c, outer)`, adjacency taken in the
//! path's own mode.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::HitModel;
use crate::lattice::{neighbor_offsets, ConnectivityMode, LatticePoint, Norm, Window, Annulus};
use crate::rng::{child_seed, purpose, stream};
use crate::stationary::{realize_config, sample_sites, CoalescenceStructure, SamplerConfig, SiteConfiguration};
use crate::stats::{quantile_ci, Estimate, Moments};
use crate::union_find::DisjointSets;
use crate::walks::{simulate_system, CollisionMode, SimOptions, StepKernel, StopRule};

/// Neighbour lists of an l-infinity window in compressed form.
#[derive(Clone, Debug)]
pub struct Adjacency {
    start: Vec<u32>,
    list: Vec<u32>,
}

impl Adjacency {
    pub fn new(window: &Window, mode: ConnectivityMode) -> Result<Self> {
        let offsets = neighbor_offsets(window.dim(), mode);
        let sites = window.sites();
        let mut start = Vec::with_capacity(sites.len() + 1);
        let mut list = Vec::new();
        let mut q = vec![0i64; window.dim()];
        for p in &sites {
            start.push(list.len() as u32);
            for o in &offsets {
                for ((qi, pi), oi) in q.iter_mut().zip(p.coords()).zip(o) {
                    *qi = pi + oi;
                }
                if let Some(j) = window.index_of(&q) {
                    list.push(j as u32);
                }
            }
        }
        start.push(list.len() as u32);
        Ok(Adjacency { start, list })
    }

    pub fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of(&self, i: usize) -> &[u32] {
        &self.list[self.start[i] as usize..self.start[i + 1] as usize]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub window: Window,
    pub mode: ConnectivityMode,
    /// 0 for vacant sites, otherwise 1 + index of the cluster's minimal site.
    pub labels: Vec<u32>,
    pub cluster_count: usize,
}

fn config_window(cfg: &SiteConfiguration) -> Result<&Window> {
    cfg.window
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("configuration carries no window".into()))
}

pub fn label_clusters(cfg: &SiteConfiguration, mode: ConnectivityMode) -> Result<ClusterLabeling> {
    let window = config_window(cfg)?;
    let adj = Adjacency::new(window, mode)?;
    let n = cfg.len();
    let mut ds = DisjointSets::new(n);
    for i in 0..n {
        if !cfg.get(i) {
            continue;
        }
        for &j in adj.of(i) {
            if cfg.get(j as usize) {
                ds.union(i, j as usize);
            }
        }
    }
    let mins = ds.min_labels();
    let labels: Vec<u32> = (0..n).map(|i| if cfg.get(i) { mins[i] + 1 } else { 0 }).collect();
    let cluster_count = (0..n).filter(|&i| cfg.get(i) && mins[i] as usize == i).count();
    Ok(ClusterLabeling { window: window.clone(), mode, labels, cluster_count })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub annulus: Annulus,
    pub mode: ConnectivityMode,
}

impl CrossingSpec {
    pub fn new(annulus: Annulus, mode: ConnectivityMode) -> Self {
        CrossingSpec { annulus, mode }
    }

    /// Centred annulus with inner radius `L - 2` and outer radius `2L`, star mode.
    pub fn for_scale(dim: usize, scale: i64) -> Result<Self> {
        if scale < 3 {
            return Err(Error::InvalidArgument(format!("scale L = {scale} must be >= 3")));
        }
        Ok(CrossingSpec::new(
            Annulus::new(LatticePoint::origin(dim), scale - 2, 2 * scale)?,
            ConnectivityMode::Star,
        ))
    }

    /// The smallest centred window that fits: radius `outer + 1`.
    pub fn window(&self) -> Result<Window> {
        Window::new(self.annulus.center.clone(), self.annulus.outer + 1, Norm::LInf)
    }

    /// The annulus plus a one-site margin must lie inside an l-infinity window.
    pub fn check_fits(&self, window: &Window) -> Result<()> {
        if window.norm != Norm::LInf {
            return Err(Error::SpecDoesNotFit("crossings need an l-infinity window".into()));
        }
        if window.dim() != self.annulus.center.dim() {
            return Err(Error::DimensionMismatch { expected: window.dim(), got: self.annulus.center.dim() });
        }
        let off = window.center.dist_inf(&self.annulus.center);
        if off + self.annulus.outer + 1 > window.radius {
            return Err(Error::SpecDoesNotFit(format!(
                "annulus of outer radius {} at offset {off} needs window radius >= {}, got {}",
                self.annulus.outer,
                off + self.annulus.outer + 1,
                window.radius
            )));
        }
        Ok(())
    }
}

/// Per-window precomputation for repeated crossing queries.
#[derive(Clone, Debug)]
pub struct CrossingGeometry {
    pub window: Window,
    pub spec: CrossingSpec,
    adj: Adjacency,
    /// Site is adjacent to a point of the inner ball.
    source: Vec<bool>,
    /// Site is adjacent to a point outside the outer ball.
    target: Vec<bool>,
}

impl CrossingGeometry {
    pub fn new(window: &Window, spec: &CrossingSpec) -> Result<Self> {
        spec.check_fits(window)?;
        let adj = Adjacency::new(window, spec.mode)?;
        let offsets = neighbor_offsets(window.dim(), spec.mode);
        let c = &spec.annulus.center;
        let mut source = Vec::with_capacity(adj.len());
        let mut target = Vec::with_capacity(adj.len());
        for p in window.sites() {
            let (mut s, mut t) = (false, false);
            for o in &offsets {
                let r = p
                    .coords()
                    .iter()
                    .zip(o)
                    .zip(c.coords())
                    .map(|((a, b), z)| (a + b - z).abs())
                    .max()
                    .unwrap_or(0);
                s |= r <= spec.annulus.inner;
                t |= r > spec.annulus.outer;
            }
            source.push(s);
            target.push(t);
        }
        Ok(CrossingGeometry { window: window.clone(), spec: spec.clone(), adj, source, target })
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn is_source(&self, i: usize) -> bool {
        self.source[i]
    }

    pub fn is_target(&self, i: usize) -> bool {
        self.target[i]
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adj
    }

    /// Breadth-first search from occupied source sites.
    pub fn crossing(&self, occupied: impl Fn(usize) -> bool) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if self.source[i] && occupied(i) {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            if self.target[i] {
                return true;
            }
            for &j in self.adj.of(i) {
                let j = j as usize;
                if !seen[j] && occupied(j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        false
    }

    /// Activation sweep: sites become occupied group by group in increasing
    /// `level`; returns the first level at which a crossing exists.
    pub fn activation_threshold(&self, groups: &[(f64, Vec<u32>)]) -> Threshold {
        let n = self.len();
        let (src, tgt) = (n, n + 1);
        let mut ds = DisjointSets::new(n + 2);
        let mut active = vec![false; n];
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by(|&a, &b| groups[a].0.total_cmp(&groups[b].0).then(a.cmp(&b)));
        let mut k = 0;
        while k < order.len() {
            let level = groups[order[k]].0;
            while k < order.len() && groups[order[k]].0 == level {
                for &i in &groups[order[k]].1 {
                    let i = i as usize;
                    active[i] = true;
                    if self.source[i] {
                        ds.union(i, src);
                    }
                    if self.target[i] {
                        ds.union(i, tgt);
                    }
                    for &j in self.adj.of(i) {
                        if active[j as usize] {
                            ds.union(i, j as usize);
                        }
                    }
                }
                k += 1;
            }
            if ds.same(src, tgt) {
                return Threshold::At(level);
            }
        }
        Threshold::Never
    }
}

/// True iff the configuration contains a crossing of `spec`.
pub fn has_crossing(cfg: &SiteConfiguration, spec: &CrossingSpec) -> Result<bool> {
    let window = config_window(cfg)?;
    let geom = CrossingGeometry::new(window, spec)?;
    Ok(geom.crossing(|i| cfg.get(i)))
}

/// Smallest alpha at which a crossing appears, or `Never`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    At(f64),
    Never,
}

impl Threshold {
    pub fn crossing_at(self, alpha: f64) -> bool {
        matches!(self, Threshold::At(a) if alpha >= a)
    }

    /// `+inf` for `Never`, convenient for sorting.
    pub fn as_f64(self) -> f64 {
        match self {
            Threshold::At(a) => a,
            Threshold::Never => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::At(a) => write!(f, "{a}"),
            Threshold::Never => write!(f, "never"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdSample {
    pub alpha_star: Threshold,
    pub seed: u64,
    pub replica: u64,
    pub spec: CrossingSpec,
}

fn structure_groups(s: &CoalescenceStructure) -> Vec<(f64, Vec<u32>)> {
    s.class_uniforms.iter().copied().zip(s.class_members()).collect()
}

pub fn alpha_threshold(s: &CoalescenceStructure, spec: &CrossingSpec) -> Result<ThresholdSample> {
    let window = s
        .window
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("structure carries no window".into()))?;
    let geom = CrossingGeometry::new(window, spec)?;
    Ok(ThresholdSample {
        alpha_star: geom.activation_threshold(&structure_groups(s)),
        seed: s.seed,
        replica: s.replica,
        spec: spec.clone(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "L")]
    pub scale: i64,
    pub alpha: f64,
    pub p_hat: f64,
    pub se: f64,
    pub residual_bound: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdRow {
    #[serde(rename = "L")]
    pub scale: i64,
    pub alpha_star: Threshold,
    /// Seed reproducing this structure as replica 0.
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingCurve {
    pub rows: Vec<CurveRow>,
    pub thresholds: Vec<ThresholdRow>,
}

impl CrossingCurve {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L,alpha,p_hat,se,residual_bound,n")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.scale, r.alpha, r.p_hat, r.se, r.residual_bound, r.n)?;
        }
        Ok(())
    }

    pub fn write_thresholds_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L,alpha_star,seed")?;
        for r in &self.thresholds {
            writeln!(w, "{},{},{}", r.scale, r.alpha_star, r.seed)?;
        }
        Ok(())
    }
}

/// Per-replica seed for crossing structures at scale `L`.
pub fn crossing_seed(root: u64, scale: i64, replica: u64) -> u64 {
    child_seed(root ^ (scale as u64).rotate_left(32), purpose::CROSSING, replica)
}

/// Threshold samples at one scale, with the mean truncation residual.
pub fn threshold_samples(
    dim: usize,
    range: u32,
    scale: i64,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<(Vec<ThresholdRow>, f64)> {
    let spec = CrossingSpec::for_scale(dim, scale)?;
    let window = spec.window()?;
    let geom = CrossingGeometry::new(&window, &spec)?;
    let kernel = StepKernel::new(dim, range)?;
    let hit = HitModel::for_kernel(dim, range)?;
    let sites = window.sites();
    let out: Vec<(ThresholdRow, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let seed = crossing_seed(config.seed, scale, i);
            let mut rng = stream(seed, purpose::STRUCTURE, 0);
            let cfg = SamplerConfig { seed, ..config.clone() };
            let s = sample_sites(&sites, Some(&window), &kernel, &hit, &cfg, &mut rng)?;
            let t = geom.activation_threshold(&structure_groups(&s));
            Ok((ThresholdRow { scale, alpha_star: t, seed }, s.residual_bound))
        })
        .collect::<Result<_>>()?;
    let mean_res = out.iter().map(|o| o.1).sum::<f64>() / replicas.max(1) as f64;
    Ok((out.into_iter().map(|o| o.0).collect(), mean_res))
}

/// Crossing probabilities as the empirical CDF of per-sample thresholds.
pub fn crossing_curve(
    dim: usize,
    range: u32,
    scales: &[i64],
    alpha_grid: &[f64],
    replicas: usize,
    config: &SamplerConfig,
) -> Result<CrossingCurve> {
    if replicas < 1 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    for &a in alpha_grid {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidArgument(format!("alpha {a} outside [0, 1]")));
        }
    }
    let mut rows = Vec::new();
    let mut thresholds = Vec::new();
    for &scale in scales {
        let (ts, res) = threshold_samples(dim, range, scale, replicas, config)?;
        let n = ts.len();
        for &alpha in alpha_grid {
            let k = ts.iter().filter(|t| t.alpha_star.crossing_at(alpha)).count();
            let p = k as f64 / n as f64;
            rows.push(CurveRow {
                scale,
                alpha,
                p_hat: p,
                se: (p * (1.0 - p) / n as f64).sqrt(),
                residual_bound: res,
                n,
            });
        }
        thresholds.extend(ts);
    }
    Ok(CrossingCurve { rows, thresholds })
}

/// Independent direct estimate of the crossing probability at one alpha.
pub fn direct_crossing_probability(
    dim: usize,
    range: u32,
    scale: i64,
    alpha: f64,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<Estimate<f64>> {
    let spec = CrossingSpec::for_scale(dim, scale)?;
    let window = spec.window()?;
    let geom = CrossingGeometry::new(&window, &spec)?;
    let kernel = StepKernel::new(dim, range)?;
    let hit = HitModel::for_kernel(dim, range)?;
    let sites = window.sites();
    let per: Vec<(f64, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed ^ (scale as u64).rotate_left(32), purpose::THRESHOLD, i);
            let s = sample_sites(&sites, Some(&window), &kernel, &hit, config, &mut rng)?;
            let c = realize_config(&s, alpha)?;
            Ok((geom.crossing(|j| c.get(j)) as u8 as f64, s.residual_bound))
        })
        .collect::<Result<_>>()?;
    let m = Moments::from_values(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let res = per.iter().map(|p| p.1).sum::<f64>() / replicas.max(1) as f64;
    Ok(m.estimate(res))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "L")]
    pub scale: i64,
    pub quantile: f64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub never: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub label: String,
    pub rows: Vec<ScanRow>,
    /// Differences of consecutive per-scale estimates.
    pub trend: Vec<f64>,
}

pub const SCAN_LABEL: &str = "finite-size pseudo-critical values (exploratory)";
pub const MIN_SCAN_SAMPLES: usize = 10;

/// Threshold quantiles per scale with 95% order-statistic intervals.
pub fn scan_thresholds(samples: &[(i64, Vec<Threshold>)], quantile: f64) -> Result<ScanReport> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("a scan needs at least two scales".into()));
    }
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidArgument(format!("quantile {quantile} outside [0, 1]")));
    }
    let mut rows = Vec::new();
    for (scale, ts) in samples {
        if ts.len() < MIN_SCAN_SAMPLES {
            return Err(Error::InsufficientSamples(format!(
                "scale {scale} has {} threshold samples, need {MIN_SCAN_SAMPLES}",
                ts.len()
            )));
        }
        let mut v: Vec<f64> = ts.iter().map(|t| t.as_f64()).collect();
        v.sort_by(f64::total_cmp);
        let q = quantile_ci(&v, quantile, 1.96).expect("non-empty");
        rows.push(ScanRow {
            scale: *scale,
            quantile,
            estimate: q.estimate,
            ci_lo: q.lo,
            ci_hi: q.hi,
            n: v.len(),
            never: ts.iter().filter(|t| matches!(t, Threshold::Never)).count(),
        });
    }
    let trend = rows.windows(2).map(|w| w[1].estimate - w[0].estimate).collect();
    Ok(ScanReport { label: SCAN_LABEL.into(), rows, trend })
}

pub fn alpha_c_scan(
    dim: usize,
    range: u32,
    scales: &[i64],
    quantile: f64,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<ScanReport> {
    if scales.len() < 2 {
        return Err(Error::InvalidArgument("a scan needs at least two scales".into()));
    }
    if replicas < MIN_SCAN_SAMPLES {
        return Err(Error::InsufficientSamples(format!("{replicas} replicas, need {MIN_SCAN_SAMPLES}")));
    }
    let mut samples = Vec::new();
    for &scale in scales {
        let (ts, _) = threshold_samples(dim, range, scale, replicas, config)?;
        samples.push((scale, ts.into_iter().map(|t| t.alpha_star).collect()));
    }
    scan_thresholds(&samples, quantile)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionReplica {
    pub alpha_star: Threshold,
    /// Left event at the threshold and at alpha = 1.
    pub left: [bool; 2],
    pub right: [bool; 2],
    pub e_count: usize,
    pub e_origin: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionReport {
    pub dim: usize,
    pub range: u32,
    #[serde(rename = "L")]
    pub scale: i64,
    pub epsilon: f64,
    pub horizon: f64,
    pub replicas: usize,
    pub left_events: usize,
    pub violations: usize,
    /// Empirical `P[E_0]`.
    pub beta_hat: Estimate<f64>,
    /// `2d exp(-(L/8) ln(1 + (d/4) L^(eps-1)))`.
    pub beta_bound: f64,
    pub beta_ok: bool,
    pub per_replica: Vec<InclusionReplica>,
}

/// Crossing `B(0,L) -> B(0,2L)^c` implies some walk from `B(0,2L)` moved more
/// than `L/4` by time `T = L^(2 - 1/(4d))`, or some star-adjacent pair of
/// occupied sites did not meet by `T`. Checked pathwise, with `xi` taken from
/// the time-`T` classes at each sample's own threshold and at alpha = 1.
pub fn verify_bottom_scale_inclusion(
    dim: usize,
    range: u32,
    scale: i64,
    replicas: usize,
    seed: u64,
) -> Result<InclusionReport> {
    if scale < 3 {
        return Err(Error::InvalidArgument(format!("L = {scale} is too small for the annulus geometry (need L >= 3)")));
    }
    let eps = 1.0 / (4.0 * dim as f64);
    let horizon = (scale as f64).powf(2.0 - eps);
    let ball = Window::cube(dim, 2 * scale)?;
    let sites = ball.sites();
    let spec = CrossingSpec::new(Annulus::new(LatticePoint::origin(dim), scale, 2 * scale)?, ConnectivityMode::Star);
    let window = spec.window()?;
    let geom = CrossingGeometry::new(&window, &spec)?;
    let kernel = StepKernel::new(dim, range)?;
    // Window index of each ball site; the outer shell stays vacant.
    let to_window: Vec<u32> = sites.iter().map(|p| window.index_of(p.coords()).unwrap() as u32).collect();
    let star = neighbor_offsets(dim, ConnectivityMode::Star);
    let pairs: Vec<(u32, u32)> = sites
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            let ball = &ball;
            star.iter().filter_map(move |o| {
                let q: Vec<i64> = p.coords().iter().zip(o).map(|(a, b)| a + b).collect();
                ball.index_of(&q).filter(|&j| j > i).map(|j| (i as u32, j as u32))
            })
        })
        .collect();
    let origin_idx = ball.index_of(&vec![0; dim]).unwrap();
    let quarter = scale as f64 / 4.0;

    let per: Vec<InclusionReplica> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, purpose::CLAIM, i);
            let run = simulate_system(
                &sites,
                &kernel,
                CollisionMode::Coalescing,
                StopRule::Horizon(horizon),
                SimOptions { track_displacement: true, record_events: false },
                &mut rng,
            )?;
            let sys = &run.system;
            let class = sys.class_map();
            let disp = sys.max_displacement().unwrap();
            let e: Vec<bool> = disp.iter().map(|&m| m as f64 > quarter).collect();
            let any_e = e.iter().any(|&b| b);
            // One uniform per time-T class, drawn in representative order.
            let mut uniform = vec![f64::NAN; sites.len()];
            for w in 0..sites.len() {
                if class[w] as usize == w {
                    uniform[w] = rand::Rng::random::<f64>(&mut rng);
                }
            }
            let site_u: Vec<f64> = (0..sites.len()).map(|w| uniform[class[w] as usize]).collect();
            let mut groups: Vec<(f64, Vec<u32>)> = Vec::new();
            let mut members: Vec<Vec<u32>> = vec![Vec::new(); sites.len()];
            for w in 0..sites.len() {
                members[class[w] as usize].push(to_window[w]);
            }
            for w in 0..sites.len() {
                if class[w] as usize == w {
                    groups.push((uniform[w], std::mem::take(&mut members[w])));
                }
            }
            let alpha_star = geom.activation_threshold(&groups);
            let mut left = [false; 2];
            let mut right = [false; 2];
            let alphas = [alpha_star.as_f64().min(1.0), 1.0];
            for (k, &alpha) in alphas.iter().enumerate() {
                let xi: Vec<bool> = site_u.iter().map(|&u| u <= alpha).collect();
                let mut occ = vec![false; window.len()];
                for (w, &b) in xi.iter().enumerate() {
                    occ[to_window[w] as usize] = b;
                }
                left[k] = geom.crossing(|j| occ[j]);
                let f = pairs.iter().any(|&(x, y)| {
                    let (x, y) = (x as usize, y as usize);
                    !e[x] && !e[y] && class[x] != class[y] && xi[x] && xi[y]
                });
                right[k] = any_e || f;
            }
            Ok(InclusionReplica {
                alpha_star,
                left,
                right,
                e_count: e.iter().filter(|&&b| b).count(),
                e_origin: e[origin_idx],
            })
        })
        .collect::<Result<_>>()?;

    let left_events = per.iter().map(|r| r.left.iter().filter(|&&b| b).count()).sum();
    let violations = per.iter().map(|r| (0..2).filter(|&k| r.left[k] && !r.right[k]).count()).sum();
    let beta_hat = Moments::from_values(&per.iter().map(|r| r.e_origin as u8 as f64).collect::<Vec<_>>()).estimate(0.0);
    let (d, l) = (dim as f64, scale as f64);
    let beta_bound = 2.0 * d * (-(l / 8.0) * (1.0 + d / 4.0 * l.powf(eps - 1.0)).ln()).exp();
    Ok(InclusionReport {
        dim,
        range,
        scale,
        epsilon: eps,
        horizon,
        replicas,
        left_events,
        violations,
        beta_ok: beta_hat.value <= beta_bound + 3.0 * beta_hat.se,
        beta_hat,
        beta_bound,
        per_replica: per,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_config(w: &Window, f: impl Fn(&LatticePoint) -> bool) -> SiteConfiguration {
        let v: Vec<bool> = w.sites().iter().map(f).collect();
        SiteConfiguration::from_bits(Some(w.clone()), w.dim(), 0.5, &v)
    }

    #[test]
    fn checkerboard_labels() {
        let w = Window::cube(2, 2).unwrap();
        let c = window_config(&w, |p| (p.coords()[0] + p.coords()[1]).rem_euclid(2) == 0);
        let near = label_clusters(&c, ConnectivityMode::Nearest).unwrap();
        assert_eq!(near.cluster_count, 13);
        let star = label_clusters(&c, ConnectivityMode::Star).unwrap();
        assert_eq!(star.cluster_count, 1);
        let zeros = window_config(&w, |_| false);
        assert_eq!(label_clusters(&zeros, ConnectivityMode::Star).unwrap().cluster_count, 0);
    }

    #[test]
    fn trivial_crossings() {
        let spec = CrossingSpec::for_scale(2, 3).unwrap();
        let w = spec.window().unwrap();
        assert!(has_crossing(&window_config(&w, |_| true), &spec).unwrap());
        assert!(!has_crossing(&window_config(&w, |_| false), &spec).unwrap());
        // Radial segment from |x| = inner + 1 to |x| = outer.
        let seg = window_config(&w, |p| p.coords()[1] == 0 && (2..=6).contains(&p.coords()[0]));
        assert!(has_crossing(&seg, &spec).unwrap());
        let short = window_config(&w, |p| p.coords()[1] == 0 && (2..=5).contains(&p.coords()[0]));
        assert!(!has_crossing(&short, &spec).unwrap());
    }

    #[test]
    fn spec_must_fit() {
        let spec = CrossingSpec::for_scale(2, 3).unwrap();
        let small = Window::cube(2, 6).unwrap();
        assert!(matches!(spec.check_fits(&small), Err(Error::SpecDoesNotFit(_))));
    }

    #[test]
    fn single_class_threshold_is_its_uniform() {
        let spec = CrossingSpec::for_scale(2, 3).unwrap();
        let w = spec.window().unwrap();
        let n = w.len();
        let s = CoalescenceStructure::from_parts(Some(w.clone()), w.sites(), vec![0; n], vec![0.37]).unwrap();
        assert_eq!(alpha_threshold(&s, &spec).unwrap().alpha_star, Threshold::At(0.37));
    }
}
