//! Sampling the stationary voter measure through coalescence classes.
//!
//! Dual coalescing walks are launched from every site; when they stop, each
//! class receives one uniform and `xi(x) = 1` iff the uniform of x's class is
//! at most `alpha`. One structure therefore yields configurations for every
//! `alpha` at once, monotonically coupled.
//!
//! The infinite-horizon partition is not computable. Evolution stops once the
//! union bound `sum over surviving class pairs of h(separation)` drops below a
//! target, or at a time cap; the achieved bound travels with every estimate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::HitModel;
use crate::lattice::{LatticePoint, Window};
use crate::rng::{purpose, stream, SimRng};
use crate::stats::{jackknife_se, Estimate, Moments};
use crate::union_find::DisjointSets;
use crate::walks::{
    coupled_coalescing_annihilating, pair_meeting, simulate_system, CollisionMode, MeetingStatus, SimOptions,
    StepKernel, StopRule,
};

/// Exact pair sums are used up to this many surviving classes.
const EXACT_RESIDUAL_LIMIT: usize = 4096;
/// The stop rule is only evaluated once this few classes remain.
const CHECK_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub eps_pair_residual: f64,
    pub horizon_cap: f64,
    pub escape_radius: i64,
    pub pair_closure_heuristic: bool,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            eps_pair_residual: 1e-3,
            horizon_cap: 1e7,
            escape_radius: 512,
            pair_closure_heuristic: false,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Defaults for a window: time cap `64 * diameter^2`.
    pub fn for_window(w: &Window) -> Self {
        let diam = (2 * w.radius).max(1) as f64;
        SamplerConfig { horizon_cap: 64.0 * diam * diam, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_pair_residual > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_pair_residual must be > 0, got {}",
                self.eps_pair_residual
            )));
        }
        if !(self.horizon_cap > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon_cap must be > 0, got {}", self.horizon_cap)));
        }
        if self.escape_radius < 1 {
            return Err(Error::InvalidArgument(format!("escape_radius must be >= 1, got {}", self.escape_radius)));
        }
        Ok(())
    }
}

/// Partition of a finite site set into coalescence classes with one uniform per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceStructure {
    pub window: Option<Window>,
    /// Sites in lexicographic order.
    pub sites: Vec<LatticePoint>,
    /// Index of the minimal member of each site's class.
    pub class_of: Vec<u32>,
    /// One uniform per class, classes ordered by representative.
    pub class_uniforms: Vec<f64>,
    pub residual_bound: f64,
    pub elapsed: f64,
    pub seed: u64,
    pub replica: u64,
    /// Set when surviving pairs were closed heuristically.
    pub approximate: bool,
}

impl CoalescenceStructure {
    /// Assembles a structure from explicit parts, checking every invariant.
    pub fn from_parts(
        window: Option<Window>,
        sites: Vec<LatticePoint>,
        class_of: Vec<u32>,
        class_uniforms: Vec<f64>,
    ) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Empty("site set"));
        }
        if class_of.len() != sites.len() {
            return Err(Error::InvalidArgument("class_of length differs from site count".into()));
        }
        let s = CoalescenceStructure {
            window,
            sites,
            class_of,
            class_uniforms,
            residual_bound: 0.0,
            elapsed: 0.0,
            seed: 0,
            replica: 0,
            approximate: false,
        };
        s.check()?;
        Ok(s)
    }

    /// Verifies ordering, minimal representatives and uniform ranges.
    pub fn check(&self) -> Result<()> {
        if !self.sites.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("sites must be strictly lexicographic".into()));
        }
        if let Some(w) = &self.window {
            if w.sites() != self.sites {
                return Err(Error::InvalidArgument("sites do not enumerate the window".into()));
            }
        }
        for (i, &r) in self.class_of.iter().enumerate() {
            let r = r as usize;
            if r > i || self.class_of[r] as usize != r {
                return Err(Error::InvalidArgument(format!("site {i} has non-minimal representative {r}")));
            }
        }
        if self.class_uniforms.len() != self.class_count() {
            return Err(Error::InvalidArgument("one uniform per class required".into()));
        }
        if self.class_uniforms.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::InvalidArgument("uniforms must lie in [0, 1]".into()));
        }
        if !(self.residual_bound >= 0.0) {
            return Err(Error::InvalidArgument("residual bound must be >= 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_of.iter().enumerate().filter(|&(i, &r)| i == r as usize).count()
    }

    /// Class ordinal of each site (classes numbered by representative).
    pub fn class_index(&self) -> Vec<u32> {
        let mut ord = vec![u32::MAX; self.sites.len()];
        let mut next = 0u32;
        for i in 0..self.sites.len() {
            let r = self.class_of[i] as usize;
            if r == i {
                ord[i] = next;
                next += 1;
            } else {
                ord[i] = ord[r];
            }
        }
        ord
    }

    /// Site indices of each class, in class order.
    pub fn class_members(&self) -> Vec<Vec<u32>> {
        let idx = self.class_index();
        let mut out = vec![Vec::new(); self.class_count()];
        for (i, &c) in idx.iter().enumerate() {
            out[c as usize].push(i as u32);
        }
        out
    }

    pub fn site_uniforms(&self) -> Vec<f64> {
        self.class_index().iter().map(|&c| self.class_uniforms[c as usize]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: CoalescenceStructure = serde_json::from_str(s)?;
        v.check()?;
        Ok(v)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// `sum_{i<j} h(p_i - p_j)` over surviving positions, or a cell-based upper
/// bound when there are too many of them.
pub fn pair_residual(positions: &[&LatticePoint], hit: &HitModel) -> f64 {
    let k = positions.len();
    if k < 2 {
        return 0.0;
    }
    if let HitModel::Recurrent = hit {
        return (k * (k - 1) / 2) as f64;
    }
    let d = positions[0].dim();
    if k <= EXACT_RESIDUAL_LIMIT {
        let mut sep = vec![0i64; d];
        let mut total = 0.0;
        for i in 0..k {
            let a = positions[i].coords();
            for b in &positions[i + 1..] {
                for ((s, x), y) in sep.iter_mut().zip(a).zip(b.coords()) {
                    *s = x - y;
                }
                total += hit.h(&sep);
            }
        }
        return total;
    }
    // Bin into at most 8 cells per axis; pairs in cells at l-inf cell gap g
    // are at least (g - 1) * side + 1 apart.
    let lo: Vec<i64> = (0..d).map(|a| positions.iter().map(|p| p.coords()[a]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..d).map(|a| positions.iter().map(|p| p.coords()[a]).max().unwrap()).collect();
    let extent = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).max().unwrap();
    let side = ((extent + 7) / 8).max(1);
    let mut cells: rustc_hash::FxHashMap<Vec<i64>, f64> = Default::default();
    for p in positions {
        let key: Vec<i64> = p.coords().iter().zip(&lo).map(|(c, l)| (c - l) / side).collect();
        *cells.entry(key).or_insert(0.0) += 1.0;
    }
    let cells: Vec<(Vec<i64>, f64)> = cells.into_iter().collect();
    let mut total = 0.0;
    for (i, (ci, ni)) in cells.iter().enumerate() {
        total += ni * (ni - 1.0) / 2.0 * hit.envelope(1);
        for (cj, nj) in &cells[i + 1..] {
            let gap = ci.iter().zip(cj).map(|(a, b)| (a - b).abs()).max().unwrap();
            let dmin = if gap == 0 { 1 } else { (gap - 1) * side + 1 };
            total += ni * nj * hit.envelope(dmin);
        }
    }
    total
}

/// Samples a structure on an arbitrary finite site set.
pub fn sample_sites<R: Rng + ?Sized>(
    sites: &[LatticePoint],
    window: Option<&Window>,
    kernel: &StepKernel,
    hit: &HitModel,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<CoalescenceStructure> {
    config.validate()?;
    if sites.is_empty() {
        return Err(Error::Empty("site set"));
    }
    let mut sorted = sites.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateSite(sorted.windows(2).find(|w| w[0] == w[1]).unwrap()[0].to_string()));
    }
    let eps = config.eps_pair_residual;
    let mut next_check = 0.0f64;
    let check = Box::new(|sys: &crate::walks::WalkerSystem| {
        let k = sys.live_count();
        if k <= 1 {
            return true;
        }
        if k > CHECK_LIMIT {
            return false;
        }
        if k > 8 && sys.clock() < next_check {
            return false;
        }
        next_check = sys.clock() * 1.02 + 0.25;
        let pos: Vec<&LatticePoint> = sys.live_particles().map(|(_, p)| p).collect();
        pair_residual(&pos, hit) <= eps
    });
    let run = simulate_system(
        &sorted,
        kernel,
        CollisionMode::Coalescing,
        StopRule::Predicate { horizon: config.horizon_cap, check },
        SimOptions::default(),
        rng,
    )?;
    let sys = &run.system;
    let pos: Vec<&LatticePoint> = sys.live_particles().map(|(_, p)| p).collect();
    let residual = pair_residual(&pos, hit);
    let mut class_of = sys.class_map();
    let mut approximate = false;
    if config.pair_closure_heuristic && pos.len() > 1 {
        approximate = true;
        let parts: Vec<(u32, &LatticePoint)> = sys.live_particles().collect();
        let mut ds = DisjointSets::new(sorted.len());
        for (w, &r) in class_of.iter().enumerate() {
            ds.union(w, r as usize);
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let sep = parts[i].1.sub(parts[j].1)?;
                if rng.random::<f64>() < hit.h(&sep) {
                    ds.union(parts[i].0 as usize, parts[j].0 as usize);
                }
            }
        }
        class_of = ds.min_labels();
    }
    let classes = class_of.iter().enumerate().filter(|&(i, &r)| i == r as usize).count();
    let class_uniforms: Vec<f64> = (0..classes).map(|_| rng.random::<f64>()).collect();
    Ok(CoalescenceStructure {
        window: window.cloned(),
        sites: sorted,
        class_of,
        class_uniforms,
        residual_bound: if approximate { 0.0 } else { residual },
        elapsed: sys.clock(),
        seed: config.seed,
        replica: 0,
        approximate,
    })
}

/// Structure on every site of `window`, replica `replica` of `config.seed`.
pub fn sample_structure(window: &Window, range: u32, config: &SamplerConfig, replica: u64) -> Result<CoalescenceStructure> {
    let kernel = StepKernel::new(window.dim(), range)?;
    let hit = HitModel::for_kernel(window.dim(), range)?;
    let mut rng = stream(config.seed, purpose::STRUCTURE, replica);
    let mut s = sample_sites(&window.sites(), Some(window), &kernel, &hit, config, &mut rng)?;
    s.replica = replica;
    Ok(s)
}

/// Occupation bits in canonical site order.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteConfiguration {
    pub window: Option<Window>,
    pub dim: usize,
    pub alpha: f64,
    len: usize,
    bits: Vec<u64>,
}

const MAGIC: &[u8; 4] = b"VMCF";

impl SiteConfiguration {
    pub fn from_bits(window: Option<Window>, dim: usize, alpha: f64, values: &[bool]) -> Self {
        let mut bits = vec![0u64; values.len().div_ceil(64)];
        for (i, &b) in values.iter().enumerate() {
            if b {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        SiteConfiguration { window, dim, alpha, len: values.len(), bits }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// `self <= other` site by site.
    pub fn le(&self, other: &SiteConfiguration) -> bool {
        self.len == other.len && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Site-wise complement `1 - xi`.
    pub fn complement(&self) -> SiteConfiguration {
        let mut c = self.clone();
        for w in c.bits.iter_mut() {
            *w = !*w;
        }
        if self.len % 64 != 0 {
            let last = c.bits.len() - 1;
            c.bits[last] &= (1u64 << (self.len % 64)) - 1;
        }
        c
    }

    /// Packed form: magic, version, d, window spec, alpha, site count, bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(1);
        out.push(self.dim as u8);
        match &self.window {
            Some(w) => {
                out.push(1);
                out.push(match w.norm {
                    crate::lattice::Norm::LInf => 0,
                    crate::lattice::Norm::L1 => 1,
                });
                out.extend_from_slice(&w.radius.to_le_bytes());
                for c in w.center.coords() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            None => out.push(0),
        }
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        for i in 0..self.len.div_ceil(8) {
            out.push((self.bits[i / 8] >> (8 * (i % 8))) as u8);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("configuration: {m}"));
        let mut at = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = b.get(at..at + n).ok_or_else(|| bad("truncated"))?;
            at += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        if take(1)?[0] != 1 {
            return Err(bad("unsupported version"));
        }
        let dim = take(1)?[0] as usize;
        let i64_of = |s: &[u8]| i64::from_le_bytes(s.try_into().unwrap());
        let window = match take(1)?[0] {
            0 => None,
            1 => {
                let norm = match take(1)?[0] {
                    0 => crate::lattice::Norm::LInf,
                    1 => crate::lattice::Norm::L1,
                    _ => return Err(bad("bad norm")),
                };
                let radius = i64_of(take(8)?);
                let mut c = Vec::with_capacity(dim);
                for _ in 0..dim {
                    c.push(i64_of(take(8)?));
                }
                Some(Window::new(LatticePoint::new(&c)?, radius, norm)?)
            }
            _ => return Err(bad("bad window flag")),
        };
        let alpha = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let len = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let bytes = take(len.div_ceil(8))?;
        let mut bits = vec![0u64; len.div_ceil(64)];
        for (i, &byte) in bytes.iter().enumerate() {
            bits[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        Ok(SiteConfiguration { window, dim, alpha, len, bits })
    }
}

/// `xi(x) = 1` iff the uniform of x's class is at most `alpha`.
pub fn realize_config(s: &CoalescenceStructure, alpha: f64) -> Result<SiteConfiguration> {
    check_alpha(alpha)?;
    let values: Vec<bool> = s.site_uniforms().iter().map(|&u| u <= alpha).collect();
    Ok(SiteConfiguration::from_bits(s.window.clone(), s.sites[0].dim(), alpha, &values))
}

fn replicas_at_least(replicas: usize, min: usize) -> Result<()> {
    if replicas < min {
        return Err(Error::InvalidArgument(format!("need at least {min} replicas, got {replicas}")));
    }
    Ok(())
}

/// Runs `f` on every replica in parallel and returns results in replica order.
pub(crate) fn replicate<T: Send>(replicas: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..replicas as u64).into_par_iter().map(f).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub alpha: f64,
    pub estimate: Estimate<f64>,
    pub mean_residual: f64,
    pub mean_classes: f64,
}

/// Occupation fraction of the window for each `alpha`, sharing structures.
/// Unbiased under any truncation: every class carries its own uniform.
pub fn estimate_density_multi(
    range: u32,
    alphas: &[f64],
    window: &Window,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<Vec<DensityReport>> {
    replicas_at_least(replicas, 2)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let kernel = StepKernel::new(window.dim(), range)?;
    let hit = HitModel::for_kernel(window.dim(), range)?;
    let sites = window.sites();
    let n = sites.len() as f64;
    let per = replicate(replicas, |i| {
        let mut rng = stream(config.seed, purpose::DENSITY, i);
        let s = sample_sites(&sites, Some(window), &kernel, &hit, config, &mut rng)?;
        let u = s.site_uniforms();
        let fr: Vec<f64> = alphas.iter().map(|&a| u.iter().filter(|&&x| x <= a).count() as f64 / n).collect();
        Ok((fr, s.residual_bound, s.class_count()))
    })?;
    let mean_residual = per.iter().map(|p| p.1).sum::<f64>() / replicas as f64;
    let mean_classes = per.iter().map(|p| p.2 as f64).sum::<f64>() / replicas as f64;
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let mut m = Moments::new();
            for p in &per {
                m.push(p.0[k]);
            }
            DensityReport { alpha, estimate: m.estimate(0.0), mean_residual, mean_classes }
        })
        .collect())
}

pub fn estimate_density(
    range: u32,
    alpha: f64,
    window: &Window,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<DensityReport> {
    Ok(estimate_density_multi(range, &[alpha], window, replicas, config)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    DualPair,
    Window,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method: CorrelationMethod,
    pub estimate: Estimate<f64>,
    pub escaped: u64,
    pub horizon_hits: u64,
}

/// `Corr(xi(0), xi(x))`, which equals the meeting probability `h(x)` for every alpha.
pub fn estimate_correlation(
    dim: usize,
    range: u32,
    x: &LatticePoint,
    replicas: usize,
    method: CorrelationMethod,
    config: &SamplerConfig,
) -> Result<CorrelationReport> {
    config.validate()?;
    crate::lattice::same_dim(dim, x.dim())?;
    let origin = LatticePoint::origin(dim);
    if *x == origin {
        return Ok(CorrelationReport { method, estimate: Estimate::exact(1.0), escaped: 0, horizon_hits: 0 });
    }
    replicas_at_least(replicas, 2)?;
    let kernel = StepKernel::new(dim, range)?;
    let hit = HitModel::for_kernel(dim, range)?;
    match method {
        CorrelationMethod::DualPair => {
            let rho = config.escape_radius;
            let outcomes = replicate(replicas, |i| {
                let mut rng = stream(config.seed, purpose::CORRELATION, i);
                // The escape radius bounds every run, so no time cap is needed.
                pair_meeting(&origin, x, &kernel, Some(rho), f64::INFINITY, &mut rng)
            })?;
            let mut m = Moments::new();
            let (mut esc, mut hor, mut hor_res) = (0u64, 0u64, 0.0);
            for o in &outcomes {
                m.push(if o.status == MeetingStatus::Met { 1.0 } else { 0.0 });
                match o.status {
                    MeetingStatus::Escaped => esc += 1,
                    MeetingStatus::Horizon => {
                        hor += 1;
                        hor_res += hit.envelope(o.final_separation).min(1.0);
                    }
                    MeetingStatus::Met => {}
                }
            }
            // A walk that escaped past rho can still meet with probability at
            // most sup_{|z| > rho} h(z).
            let n = replicas as f64;
            let bias = hit.envelope(rho + 1).min(1.0) * esc as f64 / n + hor_res / n;
            Ok(CorrelationReport { method, estimate: m.estimate(bias), escaped: esc, horizon_hits: hor })
        }
        CorrelationMethod::Window => {
            let alpha = 0.5;
            let sites = vec![origin.clone(), x.clone()];
            let per = replicate(replicas, |i| {
                let mut rng = stream(config.seed, purpose::CORRELATION, i);
                let s = sample_sites(&sites, None, &kernel, &hit, config, &mut rng)?;
                let c = realize_config(&s, alpha)?;
                let ix = s.sites.iter().position(|p| p == x).unwrap();
                let io = s.sites.iter().position(|p| *p == origin).unwrap();
                Ok((c.get(io) as u8 as f64, c.get(ix) as u8 as f64, s.residual_bound))
            })?;
            let pearson = |skip: Option<std::ops::Range<usize>>| {
                let (mut n, mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, &(a, b, _)) in per.iter().enumerate() {
                    if skip.as_ref().is_some_and(|r| r.contains(&i)) {
                        continue;
                    }
                    n += 1.0;
                    sa += a;
                    sb += b;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
                let cov = sab / n - sa / n * sb / n;
                let va = saa / n - (sa / n).powi(2);
                let vb = sbb / n - (sb / n).powi(2);
                cov / (va * vb).sqrt()
            };
            let value = pearson(None);
            let groups = 20.min(replicas);
            let size = replicas.div_ceil(groups);
            let se = jackknife_se(groups, |g| pearson(Some(g * size..((g + 1) * size).min(replicas))));
            let bias = per.iter().map(|p| p.2.min(1.0)).sum::<f64>() / replicas as f64;
            Ok(CorrelationReport {
                method,
                estimate: Estimate { value, se, bias_bound: bias, n: replicas as u64 },
                escaped: 0,
                horizon_hits: 0,
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointReport {
    pub alpha: f64,
    pub estimate: Estimate<f64>,
    /// `alpha^|A|`.
    pub lower: f64,
    /// `alpha^|A| prod_{i<j} (1 + h_ij (alpha^-2 - 1))`.
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `alpha^2 + alpha (1 - alpha) h` when `|A| = 2`.
    pub closed_form: Option<f64>,
    pub closed_form_ok: Option<bool>,
}

/// `mu_alpha[xi = 1 on A] = E[alpha^{N_inf(A)}]` for several alphas from the
/// same structures.
pub fn estimate_joint_occupation_multi(
    sites: &[LatticePoint],
    range: u32,
    alphas: &[f64],
    replicas: usize,
    config: &SamplerConfig,
) -> Result<Vec<JointReport>> {
    let first = sites.first().ok_or(Error::Empty("site set A"))?;
    for &a in alphas {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {a} must lie in (0, 1]")));
        }
    }
    replicas_at_least(replicas, 2)?;
    let dim = first.dim();
    let kernel = StepKernel::new(dim, range)?;
    let hit = HitModel::for_kernel(dim, range)?;
    let per = replicate(replicas, |i| {
        let mut rng = stream(config.seed, purpose::JOINT, i);
        let s = sample_sites(sites, None, &kernel, &hit, config, &mut rng)?;
        Ok((s.class_count(), s.residual_bound))
    })?;
    let mut hs = Vec::new();
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            hs.push(hit.h(&sites[i].sub(&sites[j])?));
        }
    }
    let n = sites.len() as i32;
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let mut m = Moments::new();
            let mut bias = 0.0;
            for &(k, res) in &per {
                let v = alpha.powi(k as i32);
                m.push(v);
                // Further merges can only raise alpha^N, by at most alpha - alpha^k.
                bias += (alpha - v) * res.min(1.0);
            }
            let est = m.estimate(bias / replicas as f64);
            let lower = alpha.powi(n);
            let upper = lower * hs.iter().map(|h| 1.0 + h * (alpha.powi(-2) - 1.0)).product::<f64>();
            let closed_form = (sites.len() == 2).then(|| alpha * alpha + alpha * (1.0 - alpha) * hs[0]);
            JointReport {
                alpha,
                estimate: est,
                lower,
                upper,
                lower_ok: est.value >= lower - 3.0 * est.se,
                upper_ok: est.value <= upper + 3.0 * est.se + est.bias_bound,
                closed_form,
                closed_form_ok: closed_form.map(|c| est.agrees_with(c, 3.0)),
            }
        })
        .collect())
}

pub fn estimate_joint_occupation(
    sites: &[LatticePoint],
    range: u32,
    alpha: f64,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<JointReport> {
    Ok(estimate_joint_occupation_multi(sites, range, &[alpha], replicas, config)?.remove(0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnihilationReport {
    pub alpha: f64,
    pub lambda: f64,
    pub coupling_horizon: f64,
    /// `E[alpha^{N_t}]` for the coalescing system.
    pub coalescing_functional: Estimate<f64>,
    /// `E[alpha^{N'_t}]` for the annihilating system.
    pub annihilating_functional: Estimate<f64>,
    /// `X'_t` included in `X_t` and `N'_t <= N_t` at every event of every run.
    pub pathwise_ok: bool,
    pub inclusion_violations: u64,
    /// `E[exp(lambda A_inf)]`, bias bound from the truncation residual.
    pub lhs: Estimate<f64>,
    /// Monte Carlo `E[exp(lambda A*)]` with independent pair indicators.
    pub rhs_monte_carlo: Estimate<f64>,
    /// `prod_{i<j} (1 + h_ij (e^lambda - 1))`.
    pub rhs_closed_form: f64,
    pub exponential_ok: bool,
}

/// Runs the coupled inclusion check and the exponential-moment comparison.
pub fn check_annihilation_inequalities(
    sites: &[LatticePoint],
    range: u32,
    alpha: f64,
    lambda: f64,
    replicas: usize,
    coupling_horizon: f64,
    config: &SamplerConfig,
) -> Result<AnnihilationReport> {
    config.validate()?;
    let first = sites.first().ok_or(Error::Empty("site set X"))?;
    if sites.len() > 8 {
        return Err(Error::GuardExceeded(format!("|X| = {} exceeds the desk-scale limit 8", sites.len())));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must lie in (0, 1]")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be >= 0")));
    }
    replicas_at_least(replicas, 2)?;
    let dim = first.dim();
    let kernel = StepKernel::new(dim, range)?;
    let hit = HitModel::for_kernel(dim, range)?;

    let coupled = replicate(replicas, |i| {
        let mut rng = stream(config.seed, purpose::ANNIHILATION_COUPLED, i);
        let tr = coupled_coalescing_annihilating(sites, &kernel, coupling_horizon, &mut rng)?;
        let bad = tr.steps.iter().filter(|s| !s.included || s.annihilating > s.coalescing).count() as u64;
        Ok((tr.final_coalescing, tr.final_annihilating, bad))
    })?;
    let mut mc = Moments::new();
    let mut ma = Moments::new();
    let mut violations = 0;
    for &(nc, na, bad) in &coupled {
        mc.push(alpha.powi(nc as i32));
        ma.push(alpha.powi(na as i32));
        violations += bad;
    }

    let eps = config.eps_pair_residual;
    let exp_runs = replicate(replicas, |i| {
        let mut rng = stream(config.seed, purpose::ANNIHILATION_EXP, i);
        let check = Box::new(|sys: &crate::walks::WalkerSystem| {
            let pos: Vec<&LatticePoint> = sys.live_particles().map(|(_, p)| p).collect();
            pos.len() < 2 || pair_residual(&pos, &hit) <= eps
        });
        let run = simulate_system(
            sites,
            &kernel,
            CollisionMode::Annihilating,
            StopRule::Predicate { horizon: config.horizon_cap, check },
            SimOptions::default(),
            &mut rng,
        )?;
        let pos: Vec<&LatticePoint> = run.system.live_particles().map(|(_, p)| p).collect();
        let residual = pair_residual(&pos, &hit).min(1.0);
        let a = run.system.annihilations() as f64;
        let more = (pos.len() / 2) as f64;
        Ok(((lambda * a).exp(), ((lambda * (a + more)).exp() - (lambda * a).exp()) * residual))
    })?;
    let mut ml = Moments::new();
    let mut bias = 0.0;
    for &(v, b) in &exp_runs {
        ml.push(v);
        bias += b;
    }
    let lhs = ml.estimate(bias / replicas as f64);

    let mut hs = Vec::new();
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            hs.push(hit.h(&sites[i].sub(&sites[j])?));
        }
    }
    let star = replicate(replicas, |i| {
        let mut rng: SimRng = stream(config.seed, purpose::ANNIHILATION_IND, i);
        let a = hs.iter().filter(|&&h| rng.random::<f64>() < h).count() as f64;
        Ok((lambda * a).exp())
    })?;
    let rhs_mc = Moments::from_values(&star).estimate(0.0);
    let rhs_closed: f64 = hs.iter().map(|h| 1.0 + h * (lambda.exp() - 1.0)).product();
    Ok(AnnihilationReport {
        alpha,
        lambda,
        coupling_horizon,
        coalescing_functional: mc.estimate(0.0),
        annihilating_functional: ma.estimate(0.0),
        pathwise_ok: violations == 0,
        inclusion_violations: violations,
        lhs,
        rhs_monte_carlo: rhs_mc,
        rhs_closed_form: rhs_closed,
        exponential_ok: lhs.value + lhs.bias_bound <= rhs_closed + 3.0 * lhs.se,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub alpha: f64,
    /// Density of `1 - xi` under `mu_alpha`.
    pub density_flipped: Estimate<f64>,
    /// Density of `xi` under `mu_{1 - alpha}`.
    pub density_dual: Estimate<f64>,
    /// Fraction of `e_1`-adjacent window pairs with both sites occupied.
    pub pair_flipped: Estimate<f64>,
    pub pair_dual: Estimate<f64>,
    pub density_ok: bool,
    pub pair_ok: bool,
}

/// Compares `1 - xi` under `mu_alpha` with `xi` under `mu_{1-alpha}` on
/// independent samples.
pub fn check_symmetry(
    range: u32,
    alpha: f64,
    window: &Window,
    replicas: usize,
    config: &SamplerConfig,
) -> Result<SymmetryReport> {
    check_alpha(alpha)?;
    replicas_at_least(replicas, 2)?;
    let kernel = StepKernel::new(window.dim(), range)?;
    let hit = HitModel::for_kernel(window.dim(), range)?;
    let sites = window.sites();
    let pairs: Vec<(usize, usize)> = sites
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let mut q = p.coords().to_vec();
            q[0] += 1;
            window.index_of(&q).map(|j| (i, j))
        })
        .collect();
    let stats = |tag: u64, a: f64, flip: bool| -> Result<(Estimate<f64>, Estimate<f64>)> {
        let per = replicate(replicas, |i| {
            let mut rng = stream(config.seed, tag, i);
            let s = sample_sites(&sites, Some(window), &kernel, &hit, config, &mut rng)?;
            let mut c = realize_config(&s, a)?;
            if flip {
                c = c.complement();
            }
            let dens = c.count_ones() as f64 / c.len() as f64;
            let both = pairs.iter().filter(|&&(x, y)| c.get(x) && c.get(y)).count() as f64;
            Ok((dens, both / pairs.len().max(1) as f64, s.residual_bound))
        })?;
        let res = per.iter().map(|p| p.2.min(1.0)).sum::<f64>() / replicas as f64;
        let d = Moments::from_values(&per.iter().map(|p| p.0).collect::<Vec<_>>()).estimate(0.0);
        let p = Moments::from_values(&per.iter().map(|p| p.1).collect::<Vec<_>>()).estimate(res);
        Ok((d, p))
    };
    let (da, pa) = stats(purpose::SYMMETRY_A, alpha, true)?;
    let (db, pb) = stats(purpose::SYMMETRY_B, 1.0 - alpha, false)?;
    Ok(SymmetryReport {
        alpha,
        density_ok: crate::stats::two_sample_agree(&da, &db, 3.0),
        pair_ok: crate::stats::two_sample_agree(&pa, &pb, 3.0),
        density_flipped: da,
        density_dual: db,
        pair_flipped: pa,
        pair_dual: pb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn single_site_structure() {
        let w = Window::cube(3, 0).unwrap();
        let s = sample_structure(&w, 1, &SamplerConfig::default(), 0).unwrap();
        assert_eq!(s.class_count(), 1);
        assert_eq!(s.residual_bound, 0.0);
    }

    #[test]
    fn alpha_extremes() {
        let w = Window::cube(2, 2).unwrap();
        let cfg = SamplerConfig { horizon_cap: 5.0, ..Default::default() };
        let s = sample_structure(&w, 1, &cfg, 3).unwrap();
        assert_eq!(realize_config(&s, 0.0).unwrap().count_ones(), 0);
        assert_eq!(realize_config(&s, 1.0).unwrap().count_ones(), 25);
        assert!(realize_config(&s, 1.5).is_err());
    }

    #[test]
    fn config_bytes_roundtrip() {
        let w = Window::cube(2, 3).unwrap();
        let cfg = SamplerConfig { horizon_cap: 3.0, ..Default::default() };
        let s = sample_structure(&w, 1, &cfg, 1).unwrap();
        let c = realize_config(&s, 0.4).unwrap();
        let back = SiteConfiguration::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        assert!(SiteConfiguration::from_bytes(&c.to_bytes()[..10]).is_err());
    }

    #[test]
    fn structure_json_roundtrip() {
        let w = Window::cube(2, 1).unwrap();
        let cfg = SamplerConfig { horizon_cap: 3.0, ..Default::default() };
        let s = sample_structure(&w, 1, &cfg, 2).unwrap();
        let back = CoalescenceStructure::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn from_parts_rejects_bad_representatives() {
        let sites = vec![pt(&[0]), pt(&[1])];
        assert!(CoalescenceStructure::from_parts(None, sites.clone(), vec![1, 1], vec![0.5]).is_err());
        assert!(CoalescenceStructure::from_parts(None, sites, vec![0, 0], vec![0.5]).is_ok());
    }

    #[test]
    fn complement_clears_padding() {
        let c = SiteConfiguration::from_bits(None, 1, 0.5, &[true, false, true]);
        let f = c.complement();
        assert_eq!(f.count_ones(), 1);
        assert!(f.get(1));
    }
}
