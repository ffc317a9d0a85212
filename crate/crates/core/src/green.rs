//! Lattice Green function, hitting probabilities and heat kernel of the
//! R-spread-out walk, by Fourier quadrature.
//!
//! The jump law is uniform on the punctured l1 ball `B_1(R) \ {0}`. By
//! symmetry its characteristic function is a sum over absolute-value patterns
//! `k` of `m(k) prod_i cos(theta_i k_i)`, `m(k) = 2^#{i : k_i != 0}`, and the
//! gap `1 - phi` is accumulated from `1 - prod_i (1 - a_i)` with
//! `a_i = 2 sin^2(theta_i k_i / 2)`, which stays accurate near the singular
//! point even in single precision.
//!
//! Integrals are evaluated by the midpoint rule on an `n^d` grid, folded onto
//! the positive octant (all integrands are even in every coordinate). The
//! midpoint error of the Green integrand expands as `c0 h^(d-2) + c1 h^d + ...`,
//! so one Richardson step with exponent `d - 2` removes the leading term and
//! the spread between two Richardson levels serves as the error estimate.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{same_dim, BoxIter, Coords};
use crate::scalar::{pairwise_sum, Scalar};
use crate::stats::Moments;
use crate::walks::StepKernel;

/// Default quadrature resolution per dimension.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        0..=3 => 128,
        4 => 48,
        5 => 24,
        _ => 16,
    }
}

/// Default radius of precomputed hitting tables.
pub fn default_table_radius(dim: usize) -> i64 {
    match dim {
        0..=3 => 16,
        4 => 8,
        _ => 6,
    }
}

fn check_kernel(dim: usize, range: u32) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if range == 0 {
        return Err(Error::InvalidArgument("range R must be at least 1".into()));
    }
    Ok(())
}

/// Characteristic function of the jump law.
#[derive(Clone, Debug)]
pub struct Spectrum<S> {
    dim: usize,
    range: u32,
    support: usize,
    /// Absolute-value patterns `k != 0` with `|k|_1 <= R`, and multiplicities.
    patterns: Vec<(Coords, f64)>,
    _s: std::marker::PhantomData<S>,
}

impl<S: Scalar> Spectrum<S> {
    pub fn new(dim: usize, range: u32) -> Result<Self> {
        check_kernel(dim, range)?;
        let r = range as i64;
        let lo: Coords = smallvec::smallvec![0; dim];
        let hi: Coords = smallvec::smallvec![r; dim];
        let mut patterns = Vec::new();
        let mut support = 0usize;
        for k in BoxIter::new(&lo, &hi) {
            let l1: i64 = k.iter().sum();
            if l1 == 0 || l1 > r {
                continue;
            }
            let m = 1usize << k.iter().filter(|&&c| c != 0).count();
            support += m;
            patterns.push((k, m as f64));
        }
        Ok(Spectrum { dim, range, support, patterns, _s: Default::default() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// `|B_1(R) \ {0}|`.
    pub fn support_size(&self) -> usize {
        self.support
    }

    /// `E[z_1^2]` for one jump.
    pub fn step_variance(&self) -> f64 {
        let s: f64 = self.patterns.iter().map(|(k, m)| m * (k[0] * k[0]) as f64).sum();
        s / self.support as f64
    }

    /// `1 - phi(theta)`, computed without cancellation near the origin.
    pub fn gap(&self, theta: &[S]) -> S {
        let t: Vec<f64> = theta.iter().map(|v| v.as_f64()).collect();
        S::of(self.gap_with(|axis, k| {
            let s = (t[axis] * k as f64 / 2.0).sin();
            2.0 * s * s
        }))
    }

    /// Gap from per-axis defects `a(axis, k) = 1 - cos(theta_axis k)`.
    fn gap_with(&self, defect: impl Fn(usize, i64) -> f64) -> f64 {
        let mut total = 0.0;
        for (k, m) in &self.patterns {
            let (mut p, mut q) = (1.0f64, 0.0f64);
            for (axis, &ki) in k.iter().enumerate() {
                if ki != 0 {
                    let a = defect(axis, ki);
                    q += p * a;
                    p *= 1.0 - a;
                }
            }
            total += m * q;
        }
        total / self.support as f64
    }

    pub fn phi(&self, theta: &[S]) -> S {
        S::one() - self.gap(theta)
    }
}

/// Midpoint grid on the positive octant of `[-pi, pi]^d` at resolution `n`.
#[derive(Clone, Debug)]
struct OctantGrid<S> {
    dim: usize,
    half: usize,
    theta: Vec<f64>,
    gap: Vec<S>,
    inv_gap: Vec<S>,
}

impl<S: Scalar> OctantGrid<S> {
    fn new(spec: &Spectrum<S>, n: usize) -> Self {
        let dim = spec.dim;
        let half = n / 2;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let theta: Vec<f64> = (0..half).map(|m| (m as f64 + 0.5) * h).collect();
        let r = spec.range as usize;
        // defect[k][m] = 1 - cos(theta_m k)
        let defect: Vec<Vec<f64>> = (0..=r)
            .map(|k| {
                theta.iter().map(|&t| {
                    let s = (t * k as f64 / 2.0).sin();
                    2.0 * s * s
                }).collect()
            })
            .collect();
        let total = half.pow(dim as u32);
        let mut gap = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            gap.push(spec.gap_with(|axis, k| defect[k as usize][idx[axis]]));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < half {
                    break;
                }
                idx[a] = 0;
            }
        }
        let inv_gap = gap.iter().map(|&g| S::of(1.0 / g)).collect();
        let gap = gap.into_iter().map(S::of).collect();
        OctantGrid { dim, half, theta, gap, inv_gap }
    }

    /// Octant mean of `weights * prod_i cos(theta_i x_i)`.
    fn transform(&self, weights: &[S], x: &[i64]) -> S {
        let d = self.dim;
        let half = self.half;
        let cos: Vec<Vec<S>> = x
            .iter()
            .map(|&xi| self.theta.iter().map(|&t| S::of((t * xi as f64).cos())).collect())
            .collect();
        let last = &cos[d - 1];
        let blocks = half.pow(d as u32 - 1);
        let mut sums = Vec::with_capacity(blocks);
        let mut idx = vec![0usize; d - 1];
        for b in 0..blocks {
            let mut pref = S::one();
            for (a, &i) in idx.iter().enumerate() {
                pref *= cos[a][i];
            }
            let row = &weights[b * half..(b + 1) * half];
            let mut s = S::zero();
            for (&w, &c) in row.iter().zip(last) {
                s += w * c;
            }
            sums.push(pref * s);
            for a in (0..d - 1).rev() {
                idx[a] += 1;
                if idx[a] < half {
                    break;
                }
                idx[a] = 0;
            }
        }
        pairwise_sum(&sums) / S::of_usize(half.pow(d as u32))
    }

    fn weights(&self, f: impl Fn(S) -> S + Sync) -> Vec<S> {
        self.gap.iter().map(|&g| f(g)).collect()
    }
}

/// A quadrature value with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenValue<S> {
    pub value: S,
    pub error: S,
}

/// Quadrature engine for one `(d, R, resolution)`. Grids at `n`, `n/2`, `n/4`
/// are built once and reused for every query.
#[derive(Clone, Debug)]
pub struct GreenSolver<S> {
    spectrum: Spectrum<S>,
    resolution: usize,
    grids: [OctantGrid<S>; 3],
}

impl<S: Scalar> GreenSolver<S> {
    pub fn new(dim: usize, range: u32, resolution: usize) -> Result<Self> {
        check_kernel(dim, range)?;
        if dim < 3 {
            return Err(Error::GreenDivergent(dim));
        }
        if resolution < 8 || resolution % 8 != 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature resolution {resolution} must be a positive multiple of 8"
            )));
        }
        let spectrum = Spectrum::new(dim, range)?;
        let points = (resolution / 2).checked_pow(dim as u32).unwrap_or(usize::MAX);
        if points > 1 << 26 {
            return Err(Error::GuardExceeded(format!(
                "quadrature grid of {points} points is too large"
            )));
        }
        let grids = [
            OctantGrid::new(&spectrum, resolution),
            OctantGrid::new(&spectrum, resolution / 2),
            OctantGrid::new(&spectrum, resolution / 4),
        ];
        Ok(GreenSolver { spectrum, resolution, grids })
    }

    pub fn with_default_resolution(dim: usize, range: u32) -> Result<Self> {
        Self::new(dim, range, default_resolution(dim))
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim
    }

    pub fn range(&self) -> u32 {
        self.spectrum.range
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spectrum(&self) -> &Spectrum<S> {
        &self.spectrum
    }

    /// `g(0, x)`.
    pub fn green(&self, x: &[i64]) -> Result<GreenValue<S>> {
        same_dim(self.dim(), x.len())?;
        let g: Vec<S> = self.grids.iter().map(|gr| gr.transform(&gr.inv_gap, x)).collect();
        let f = S::of(2f64.powi(self.dim() as i32 - 2));
        let r1 = (f * g[0] - g[1]) / (f - S::one());
        let r2 = (f * g[1] - g[2]) / (f - S::one());
        Ok(GreenValue { value: r1, error: (r1 - r2).abs() })
    }

    /// `h(x) = g(0, x) / g(0, 0)`.
    pub fn hitting(&self, x: &[i64]) -> Result<GreenValue<S>> {
        let g0 = self.green(&vec![0; self.dim()])?;
        let gx = self.green(x)?;
        Ok(ratio(gx, g0))
    }

    /// Smooth part `int_0^T p_t(0, x) dt`; spectrally accurate.
    fn smooth_part(&self, x: &[i64], horizon: S) -> (S, S) {
        let f = |g: S| {
            let tu = horizon * g;
            if tu < S::of(1e-8) {
                horizon * (S::one() - tu / S::of(2.0))
            } else {
                -(-tu).exp_m1() / g
            }
        };
        let a = self.grids[0].transform(&self.grids[0].weights(f), x);
        let b = self.grids[1].transform(&self.grids[1].weights(f), x);
        (a, (a - b).abs())
    }

    /// `int_T^inf p_t(0, x) dt`.
    pub fn tail(&self, x: &[i64], horizon: S) -> Result<GreenValue<S>> {
        same_dim(self.dim(), x.len())?;
        if !(horizon >= S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be finite and >= 0")));
        }
        let g = self.green(x)?;
        let (s, es) = self.smooth_part(x, horizon);
        Ok(GreenValue { value: g.value - s, error: g.error + es })
    }

    /// Continuous-time transition probability `p_t(0, x)`.
    pub fn heat_kernel(&self, x: &[i64], t: S) -> Result<GreenValue<S>> {
        same_dim(self.dim(), x.len())?;
        if !(t >= S::zero()) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
        }
        let f = |g: S| (-t * g).exp();
        let a = self.grids[0].transform(&self.grids[0].weights(f), x);
        let b = self.grids[1].transform(&self.grids[1].weights(f), x);
        Ok(GreenValue { value: a, error: (a - b).abs() })
    }

    /// Green values on the l-infinity box of radius `radius`.
    pub fn table(&self, radius: i64) -> Result<GreenTable<S>> {
        if radius < 0 {
            return Err(Error::InvalidArgument(format!("table radius {radius} is negative")));
        }
        let reps = orbit_representatives(self.dim(), radius);
        let values: Vec<GreenValue<S>> = reps
            .par_iter()
            .map(|r| self.green(r).expect("dimension checked"))
            .collect();
        let index = reps.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        Ok(GreenTable {
            dim: self.dim(),
            range: self.range(),
            radius,
            resolution: self.resolution,
            reps,
            values,
            index,
        })
    }
}

fn ratio<S: Scalar>(num: GreenValue<S>, den: GreenValue<S>) -> GreenValue<S> {
    let v = num.value / den.value;
    GreenValue { value: v, error: (num.error + v.abs() * den.error) / den.value }
}

/// One-shot `g(0, x)`.
pub fn green_value<S: Scalar>(dim: usize, range: u32, x: &[i64], resolution: usize) -> Result<GreenValue<S>> {
    GreenSolver::<S>::new(dim, range, resolution)?.green(x)
}

/// One-shot `h(x)`.
pub fn hitting_prob<S: Scalar>(dim: usize, range: u32, x: &[i64], resolution: usize) -> Result<GreenValue<S>> {
    GreenSolver::<S>::new(dim, range, resolution)?.hitting(x)
}

/// One-shot `int_T^inf p_t(0, x) dt`.
pub fn tail_integral<S: Scalar>(
    dim: usize,
    range: u32,
    x: &[i64],
    horizon: S,
    resolution: usize,
) -> Result<GreenValue<S>> {
    GreenSolver::<S>::new(dim, range, resolution)?.tail(x, horizon)
}

/// Sorted absolute coordinates: the hyperoctahedral orbit key.
pub fn canonical(x: &[i64]) -> Coords {
    let mut c: Coords = x.iter().map(|v| v.abs()).collect();
    c.sort_unstable();
    c
}

fn orbit_representatives(dim: usize, radius: i64) -> Vec<Coords> {
    let lo: Coords = smallvec::smallvec![0; dim];
    let hi: Coords = smallvec::smallvec![radius; dim];
    BoxIter::new(&lo, &hi).filter(|c| c.windows(2).all(|w| w[0] <= w[1])).collect()
}

/// Gamma function at a positive half-integer or integer.
fn gamma_half_integer(s: f64) -> f64 {
    let twice = (2.0 * s).round() as i64;
    let (mut v, mut k) = if twice % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while k < s - 1e-9 {
        v *= k;
        k += 1.0;
    }
    v
}

/// Leading far-field constant `C` with `g(0, x) ~ C |x|_2^(2-d)`.
pub fn far_field_constant(dim: usize, range: u32) -> Result<f64> {
    if dim < 3 {
        return Err(Error::GreenDivergent(dim));
    }
    let sigma2 = Spectrum::<f64>::new(dim, range)?.step_variance();
    let d = dim as f64;
    Ok(gamma_half_integer(d / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(d / 2.0) * sigma2))
}

/// `g(0, x)` on an l-infinity box, stored by symmetry orbit.
#[derive(Clone, Debug)]
pub struct GreenTable<S> {
    dim: usize,
    range: u32,
    radius: i64,
    /// Zero when the table was read from a file.
    resolution: usize,
    reps: Vec<Coords>,
    values: Vec<GreenValue<S>>,
    index: FxHashMap<Coords, usize>,
}

impl<S: Scalar> GreenTable<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn get(&self, x: &[i64]) -> Option<GreenValue<S>> {
        if x.len() != self.dim {
            return None;
        }
        self.index.get(&canonical(x)).map(|&i| self.values[i])
    }

    /// Orbit representatives with their values.
    pub fn orbits(&self) -> impl Iterator<Item = (&[i64], GreenValue<S>)> {
        self.reps.iter().map(|r| r.as_slice()).zip(self.values.iter().copied())
    }

    /// CSV with columns `x_1..x_d, value, error`, one row per box site.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{},value,error", cols.join(","))?;
        for x in BoxIter::centered(&vec![0; self.dim], self.radius) {
            let v = self.get(&x).expect("box site inside table");
            let xs: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{},{}", xs.join(","), v.value, v.error)?;
        }
        Ok(())
    }

    /// Reads a table written by [`GreenTable::write_csv`]. The range must be
    /// supplied since the file does not record it.
    pub fn read_csv<R: BufRead>(r: R, range: u32) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Empty("green table"))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[cols.len() - 2] != "value" || cols[cols.len() - 1] != "error" {
            return Err(Error::Parse(format!("unexpected green table header '{header}'")));
        }
        let dim = cols.len() - 2;
        let mut reps = Vec::new();
        let mut values: Vec<GreenValue<S>> = Vec::new();
        let mut index: FxHashMap<Coords, usize> = FxHashMap::default();
        let mut radius = 0;
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != dim + 2 {
                return Err(Error::Parse(format!("row {} has {} fields, expected {}", ln + 2, f.len(), dim + 2)));
            }
            let bad = |e: String| Error::Parse(format!("row {}: {e}", ln + 2));
            let x: Coords = f[..dim]
                .iter()
                .map(|s| s.parse::<i64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<_>>()?;
            let value: f64 = f[dim].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            let error: f64 = f[dim + 1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            radius = radius.max(x.iter().map(|c| c.abs()).max().unwrap_or(0));
            let key = canonical(&x);
            match index.get(&key) {
                // Symmetric copies must agree; a mismatch means the file was altered.
                Some(&i) => {
                    let w = S::of(value);
                    if (values[i].value - w).abs() > w.abs() * S::of(1e-12) {
                        return Err(bad(format!("value {value} differs from symmetric entry {:?}", reps[i])));
                    }
                }
                None => {
                    index.insert(key.clone(), reps.len());
                    reps.push(key);
                    values.push(GreenValue { value: S::of(value), error: S::of(error) });
                }
            }
        }
        if reps.is_empty() {
            return Err(Error::Empty("green table rows"));
        }
        Ok(GreenTable { dim, range, radius, resolution: 0, reps, values, index })
    }
}

/// Hitting probabilities `h = g(0,x)/g(0,0)` with a far-field extension and
/// the envelope `sup_{|x|_inf >= r} h(x)`.
#[derive(Clone, Debug)]
pub struct HittingTable<S> {
    green: GreenTable<S>,
    g0: S,
    /// Calibrated far-field constant: `g(0,x) <= far * |x|_2^(2-d)` beyond the table.
    far: f64,
    envelope: Vec<S>,
    /// `h` on the full box, lexicographic, for constant-time lookup.
    dense: Vec<S>,
}

impl<S: Scalar> HittingTable<S> {
    pub fn new(green: GreenTable<S>) -> Result<Self> {
        let dim = green.dim;
        let g0 = green.get(&vec![0; dim]).ok_or(Error::Empty("green table origin"))?.value;
        let c = far_field_constant(dim, green.range)?;
        let m = green.radius;
        // Calibrate against the outermost shell so the extension does not
        // undershoot the lattice values there.
        let mut calib = 1.0f64;
        for (x, v) in green.orbits() {
            if x.iter().copied().max() == Some(m) && m > 0 {
                let r2 = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                calib = calib.max(v.value.as_f64() * r2.powi(dim as i32 - 2) / c);
            }
        }
        let far = c * calib;
        let far_h = |r: f64| S::of(far / r.powi(dim as i32 - 2)) / g0;
        let mut envelope = vec![S::zero(); m as usize + 2];
        envelope[m as usize + 1] = far_h((m + 1) as f64);
        for (x, v) in green.orbits() {
            let r = x.iter().copied().max().unwrap_or(0) as usize;
            envelope[r] = envelope[r].max(v.value / g0);
        }
        for r in (0..=m as usize).rev() {
            envelope[r] = envelope[r].max(envelope[r + 1]);
        }
        let dense = BoxIter::centered(&vec![0; dim], m)
            .map(|x| green.get(&x).expect("box site inside table").value / g0)
            .collect();
        Ok(HittingTable { green, g0, far, envelope, dense })
    }

    pub fn build(dim: usize, range: u32, radius: i64, resolution: usize) -> Result<Self> {
        Self::new(GreenSolver::<S>::new(dim, range, resolution)?.table(radius)?)
    }

    pub fn green_table(&self) -> &GreenTable<S> {
        &self.green
    }

    pub fn dim(&self) -> usize {
        self.green.dim
    }

    pub fn radius(&self) -> i64 {
        self.green.radius
    }

    pub fn g0(&self) -> S {
        self.g0
    }

    /// `h(x)`; far-field extension outside the table.
    pub fn h(&self, x: &[i64]) -> S {
        let m = self.green.radius;
        if x.iter().all(|c| c.abs() <= m) {
            let side = 2 * m + 1;
            let idx = x.iter().fold(0i64, |acc, &c| acc * side + c + m);
            return self.dense[idx as usize];
        }
        let r2 = x.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt();
        S::of(self.far / r2.powi(self.dim() as i32 - 2)) / self.g0
    }

    /// `sup { h(x) : |x|_inf >= r }`, non-increasing in `r`.
    pub fn envelope(&self, r: i64) -> S {
        let r = r.max(0) as usize;
        if r < self.envelope.len() {
            self.envelope[r]
        } else {
            S::of(self.far / (r as f64).powi(self.dim() as i32 - 2)) / self.g0
        }
    }
}

/// Hitting model used by the samplers: trivial in recurrent dimensions.
#[derive(Clone, Debug)]
pub enum HitModel {
    Recurrent,
    Transient(Arc<HittingTable<f64>>),
}

impl HitModel {
    /// Shared, lazily built table at default resolution and radius.
    pub fn for_kernel(dim: usize, range: u32) -> Result<Self> {
        check_kernel(dim, range)?;
        if dim <= 2 {
            return Ok(HitModel::Recurrent);
        }
        static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<HittingTable<f64>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&(dim, range)) {
            return Ok(HitModel::Transient(t.clone()));
        }
        let t = Arc::new(HittingTable::build(
            dim,
            range,
            default_table_radius(dim),
            default_resolution(dim),
        )?);
        cache.lock().unwrap().insert((dim, range), t.clone());
        Ok(HitModel::Transient(t))
    }

    pub fn h(&self, x: &[i64]) -> f64 {
        match self {
            HitModel::Recurrent => 1.0,
            HitModel::Transient(t) => t.h(x),
        }
    }

    pub fn envelope(&self, r: i64) -> f64 {
        match self {
            HitModel::Recurrent => 1.0,
            HitModel::Transient(t) => t.envelope(r),
        }
    }
}

/// `sup_{0 < |x|_inf <= radius} h_R(x) |x|_inf` for one range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRow {
    pub range: u32,
    pub g00: f64,
    pub sup: f64,
    pub argmax: Vec<i64>,
}

pub fn spread_out_decay(dim: usize, ranges: &[u32], radius: i64, resolution: usize) -> Result<Vec<DecayRow>> {
    if radius < 1 {
        return Err(Error::InvalidArgument("decay radius must be at least 1".into()));
    }
    ranges
        .iter()
        .map(|&range| {
            let table = GreenSolver::<f64>::new(dim, range, resolution)?.table(radius)?;
            let g00 = table.get(&vec![0; dim]).unwrap().value;
            let mut best = (f64::NEG_INFINITY, Coords::new());
            for (x, v) in table.orbits() {
                let r = x.iter().copied().max().unwrap_or(0);
                if r == 0 {
                    continue;
                }
                let s = v.value / g00 * r as f64;
                if s > best.0 {
                    best = (s, Coords::from_slice(x));
                }
            }
            Ok(DecayRow { range, g00, sup: best.0, argmax: best.1.into_vec() })
        })
        .collect()
}

/// One family of inequalities: the observed statistic and, where the family
/// has a closed-form right side, that bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Largest observed ratio, or the Monte Carlo estimate.
    pub value: f64,
    /// Smallest observed ratio, where meaningful.
    pub min: Option<f64>,
    pub se: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub dim: usize,
    pub range: u32,
    pub resolution: usize,
    /// l-infinity radius of the spatial grid for the tail ratio.
    pub spatial_radius: i64,
    pub horizons: Vec<f64>,
    /// Largest `|x - y|` in the nearest-neighbour difference check.
    pub diff_radius: i64,
    pub heat_radius: i64,
    pub heat_times: Vec<f64>,
    pub mc_times: Vec<f64>,
    /// Targets `v` for the smoothed difference.
    pub mc_targets: Vec<Vec<i64>>,
    pub mc_samples: usize,
    pub max_time: f64,
    pub max_radius: f64,
    pub seed: u64,
}

impl BoundsConfig {
    pub fn new(dim: usize, range: u32) -> Self {
        let mut targets = vec![vec![0; dim]];
        for r in [2, 5] {
            let mut v = vec![0; dim];
            v[0] = r;
            targets.push(v);
        }
        BoundsConfig {
            dim,
            range,
            resolution: default_resolution(dim),
            spatial_radius: 16,
            horizons: vec![0.0, 1.0, 4.0, 16.0, 64.0],
            diff_radius: 12,
            heat_radius: 8,
            heat_times: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            mc_times: vec![1.0, 4.0, 16.0],
            mc_targets: targets,
            mc_samples: 20_000,
            max_time: 25.0,
            max_radius: 10.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub x: Vec<i64>,
    pub horizon: f64,
    pub tail: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub config: BoundsConfig,
    pub checks: Vec<BoundCheck>,
    /// Tail ratios on orbit representatives, empty for `d < 3`.
    pub ratios: Vec<RatioRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write_ratios_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.config.dim;
        let head: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{},T,tail,ratio", head.join(","))?;
        for r in &self.ratios {
            let x: Vec<String> = r.x.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{},{:e},{:e}", x.join(","), r.horizon, r.tail, r.ratio)?;
        }
        Ok(())
    }
}

/// `2d exp(-(r/2) ln(1 + d r / S))`.
pub fn max_displacement_bound(dim: usize, time: f64, radius: f64) -> f64 {
    let d = dim as f64;
    2.0 * d * (-0.5 * radius * (d * radius / time).ln_1p()).exp()
}

/// Sorted non-negative representatives with l-infinity norm at most `r`.
fn orbit_reps(dim: usize, r: i64) -> Vec<Vec<i64>> {
    BoxIter::new(&vec![0; dim], &vec![r; dim])
        .filter(|x| x.windows(2).all(|w| w[0] <= w[1]))
        .map(|x| x.to_vec())
        .collect()
}

/// Splits `n` Monte Carlo samples over 64 chunks with one stream each, so the
/// result does not depend on thread scheduling.
fn monte_carlo(n: usize, seed: u64, tag: u64, f: impl Fn(&mut crate::rng::SimRng) -> f64 + Sync) -> Moments<f64> {
    const CHUNKS: usize = 64;
    let parts: Vec<Moments<f64>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::rng::stream(seed ^ tag, crate::rng::purpose::BOUNDS, c as u64);
            let mut m = Moments::new();
            for _ in (c..n).step_by(CHUNKS) {
                m.push(f(&mut rng));
            }
            m
        })
        .collect();
    parts.iter().fold(Moments::new(), |mut a, b| {
        a.merge(b);
        a
    })
}

/// Position of a rate-one walk at time `t`, started at the origin.
fn walk_at<R: rand::Rng + ?Sized>(kernel: &StepKernel, t: f64, rng: &mut R) -> Vec<i64> {
    let jumps = rand_distr::Poisson::new(t).map(|p| rand::Rng::sample(rng, p) as u64).unwrap_or(0);
    let mut x = vec![0i64; kernel.dim()];
    for _ in 0..jumps {
        for (a, b) in x.iter_mut().zip(kernel.sample(rng)) {
            *a += b;
        }
    }
    x
}

/// Empirical checks of the kernel estimates:
/// (i) `tail(x, T) / (|x| v sqrt(T) + 1)^(2-d)` over the spatial and horizon grids;
/// (ii) `|g(0, z) - g(0, z + e)| (|z| + 1)^(d-1)` over nearest neighbours `e`;
/// (iii) `p_t(0, x) t^(d/2) exp(c'|x|^2 / t)` with `c'` fitted on the grid;
/// (iv) Monte Carlo `E|g(X_t, v) - g(X_t, v + e)| t^(d/2 - 1/2)`;
/// (v) `P[max_{t <= S} |X_t| > r]` for the nearest-neighbour walk against
///     `2d exp(-(r/2) ln(1 + d r / S))`.
/// Only (v) runs for `d < 3`.
pub fn validate_kernel_bounds(cfg: &BoundsConfig) -> Result<BoundReport> {
    let dim = cfg.dim;
    let mut checks = Vec::new();
    let mut ratios = Vec::new();
    if dim >= 3 {
        let solver = GreenSolver::<f64>::new(dim, cfg.range, cfg.resolution)?;
        let table = solver.table(cfg.spatial_radius.max(cfg.diff_radius + 1))?;
        let (r, c) = tail_ratio_check(&solver, &table, cfg)?;
        ratios = r;
        checks.push(c);
        checks.push(difference_check(&table, cfg));
        checks.push(heat_kernel_check(&solver, cfg)?);
        checks.push(smoothed_difference_check(&table, cfg)?);
    }
    checks.push(max_displacement_check(cfg)?);
    Ok(BoundReport { config: cfg.clone(), checks, ratios })
}

fn tail_ratio_check(solver: &GreenSolver<f64>, table: &GreenTable<f64>, cfg: &BoundsConfig) -> Result<(Vec<RatioRow>, BoundCheck)> {
    let dim = cfg.dim;
    let reps = orbit_reps(dim, cfg.spatial_radius);
    let jobs: Vec<(usize, f64)> = (0..reps.len()).flat_map(|i| cfg.horizons.iter().map(move |&t| (i, t))).collect();
    let rows: Vec<RatioRow> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let x = &reps[i];
            let tail = if t == 0.0 { table.get(x).unwrap().value } else { solver.tail(x, t)?.value };
            let r = *x.iter().max().unwrap() as f64;
            let scale = (r.max(t.sqrt()) + 1.0).powi(2 - dim as i32);
            Ok(RatioRow { x: x.clone(), horizon: t, tail, ratio: tail / scale })
        })
        .collect::<Result<_>>()?;
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let check = BoundCheck {
        name: "green_tail_ratio".into(),
        value: hi,
        min: Some(lo),
        se: None,
        bound: None,
        pass: lo > 0.0 && hi.is_finite(),
        detail: format!(
            "ratio in [{lo:.6}, {hi:.6}] over |x| <= {}, T in {:?}",
            cfg.spatial_radius, cfg.horizons
        ),
    };
    Ok((rows, check))
}

fn difference_check(table: &GreenTable<f64>, cfg: &BoundsConfig) -> BoundCheck {
    let dim = cfg.dim;
    let r = cfg.diff_radius;
    let mut best = 0.0f64;
    let mut z1 = vec![0i64; dim];
    for z in BoxIter::centered(&vec![0; dim], r) {
        let g = table.get(&z).unwrap().value;
        let w = ((z.iter().map(|c| c.abs()).max().unwrap() + 1) as f64).powi(dim as i32 - 1);
        for i in 0..dim {
            for s in [-1, 1] {
                z1.copy_from_slice(&z);
                z1[i] += s;
                best = best.max((g - table.get(&z1).unwrap().value).abs() * w);
            }
        }
    }
    BoundCheck {
        name: "green_difference".into(),
        value: best,
        min: None,
        se: None,
        bound: None,
        pass: best.is_finite(),
        detail: format!("max |g(x,y) - g(x,y+e)| (|x-y|+1)^(d-1) = {best:.6} over |x-y| <= {r}"),
    }
}

fn heat_kernel_check(solver: &GreenSolver<f64>, cfg: &BoundsConfig) -> Result<BoundCheck> {
    let dim = cfg.dim;
    let half = dim as f64 / 2.0;
    let reps = orbit_reps(dim, cfg.heat_radius);
    let jobs: Vec<(usize, f64)> = (0..reps.len()).flat_map(|i| cfg.heat_times.iter().map(move |&t| (i, t))).collect();
    let vals: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let r = *reps[i].iter().max().unwrap() as f64;
            Ok((r, t, solver.heat_kernel(&reps[i], t)?.value))
        })
        .collect::<Result<_>>()?;
    let c0 = vals.iter().filter(|v| v.0 == 0.0).map(|v| v.2 * v.1.powf(half)).fold(0.0, f64::max);
    // Largest c' with p_t(0,x) <= 2 C0 t^(-d/2) exp(-c'|x|^2/t) on every grid
    // point resolved above round-off.
    let mut cprime = f64::INFINITY;
    for &(r, t, p) in &vals {
        if r > 0.0 && p > 1e-10 {
            cprime = cprime.min(t / (r * r) * (2.0 * c0 * t.powf(-half) / p).ln());
        }
    }
    if !(cprime.is_finite() && cprime > 0.0) {
        return Err(Error::InvalidArgument("grid too small to fit the heat-kernel constant c'".into()));
    }
    let mut best = 0.0f64;
    for &(r, t, p) in &vals {
        if p > 1e-10 {
            best = best.max(p * t.powf(half) * (cprime * r * r / t).exp());
        }
    }
    Ok(BoundCheck {
        name: "heat_kernel".into(),
        value: best,
        min: Some(cprime),
        se: None,
        bound: Some(2.0 * c0),
        pass: best.is_finite() && best <= 2.0 * c0 * (1.0 + 1e-12),
        detail: format!(
            "max p_t t^(d/2) exp(c'|x|^2/t) = {best:.6} with fitted c' = {cprime:.6}, C0 = {c0:.6}, |x| <= {}, t in {:?}",
            cfg.heat_radius, cfg.heat_times
        ),
    })
}

fn smoothed_difference_check(table: &GreenTable<f64>, cfg: &BoundsConfig) -> Result<BoundCheck> {
    let dim = cfg.dim;
    let kernel = StepKernel::new(dim, 1)?;
    let far = far_field_constant(dim, 1)?;
    let g = |z: &[i64]| match table.get(z) {
        Some(v) => v.value,
        None => far * (z.iter().map(|&c| (c * c) as f64).sum::<f64>()).powf(1.0 - dim as f64 / 2.0),
    };
    let mut best = (0.0f64, 0.0f64);
    let mut lines = Vec::new();
    for (ti, &t) in cfg.mc_times.iter().enumerate() {
        for (vi, v) in cfg.mc_targets.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            let tag = ((ti as u64) << 32) | vi as u64;
            let m = monte_carlo(cfg.mc_samples, cfg.seed, tag, |rng| {
                let w = walk_at(&kernel, t, rng);
                let z: Vec<i64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
                let mut z1 = z.clone();
                z1[0] += 1;
                (g(&z) - g(&z1)).abs()
            });
            let scale = t.powf(dim as f64 / 2.0 - 0.5);
            let est = m.mean() * scale;
            if est > best.0 {
                best = (est, m.std_error() * scale);
            }
            lines.push(format!("t={t} v={v:?}: {est:.5}"));
        }
    }
    Ok(BoundCheck {
        name: "smoothed_difference".into(),
        value: best.0,
        min: None,
        se: Some(best.1),
        bound: None,
        pass: best.0.is_finite(),
        detail: lines.join("; "),
    })
}

fn max_displacement_check(cfg: &BoundsConfig) -> Result<BoundCheck> {
    let (s, r) = (cfg.max_time, cfg.max_radius);
    if !(s > 0.0 && r >= 0.0) {
        return Err(Error::InvalidArgument(format!("need S > 0 and r >= 0, got S = {s}, r = {r}")));
    }
    let kernel = StepKernel::new(cfg.dim, 1)?;
    let m = monte_carlo(cfg.mc_samples, cfg.seed, u64::MAX, |rng| {
        let mut x = vec![0i64; cfg.dim];
        let mut t = 0.0;
        loop {
            t += rand::Rng::sample::<f64, _>(rng, rand_distr::Exp1);
            if t > s {
                return 0.0;
            }
            for (a, b) in x.iter_mut().zip(kernel.sample(rng)) {
                *a += b;
            }
            if x.iter().any(|c| c.abs() as f64 > r) {
                return 1.0;
            }
        }
    });
    let bound = max_displacement_bound(cfg.dim, s, r);
    let (p, se) = (m.mean(), m.std_error());
    Ok(BoundCheck {
        name: "max_displacement".into(),
        value: p,
        min: None,
        se: Some(se),
        bound: Some(bound),
        pass: p <= bound + 3.0 * se,
        detail: format!("P[max_(t<={s}) |X_t| > {r}] = {p:.6} +- {se:.6}, closed form {bound:.6}, n = {}", cfg.mc_samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_matches_direct_sum() {
        let s = Spectrum::<f64>::new(3, 2).unwrap();
        assert_eq!(s.support_size(), 24);
        let theta = [0.3, -1.1, 2.0];
        let mut direct = 0.0;
        for z in BoxIter::centered(&[0, 0, 0], 2) {
            let l1: i64 = z.iter().map(|c| c.abs()).sum();
            if l1 == 0 || l1 > 2 {
                continue;
            }
            direct += (theta[0] * z[0] as f64 + theta[1] * z[1] as f64 + theta[2] * z[2] as f64).cos();
        }
        direct /= 24.0;
        assert!((s.phi(&theta) - direct).abs() < 1e-14);
    }

    #[test]
    fn step_variance_of_nearest_neighbour_walk() {
        let s = Spectrum::<f64>::new(3, 1).unwrap();
        assert!((s.step_variance() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn low_dimensions_diverge() {
        assert!(matches!(GreenSolver::<f64>::new(2, 1, 64), Err(Error::GreenDivergent(2))));
        assert!(GreenSolver::<f64>::new(3, 1, 60).is_err());
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_integer(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(1.0), 1.0);
        assert_eq!(gamma_half_integer(3.0), 2.0);
        assert!((gamma_half_integer(1.5) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
    }
}
