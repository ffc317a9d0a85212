//! The invariant suite behind `vmperc validate`.

use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use vmperc::green::{GreenSolver, GreenTable};
use vmperc::lattice::{enumerate_region, enumerate_sphere, neighbors, validate_path, BoxIter};
use vmperc::percolation::{
    crossing_curve, direct_crossing_probability, has_crossing, label_clusters, CrossingGeometry, CrossingSpec,
};
use vmperc::renorm::{
    check_spread_out, enumerate_part, enumeration_parts, extract_embedding, for_each_admissible_pair, leaves_crossed,
    sample_embedding, validate_embedding, Scales,
};
use vmperc::stationary::{
    estimate_density, estimate_joint_occupation_multi, realize_config, sample_structure, SamplerConfig,
    SiteConfiguration,
};
use vmperc::walks::{
    coupled_coalescing_annihilating, simulate_system, CollisionMode, SimOptions, StepKernel, StopRule,
};
use vmperc::{ConnectivityMode, LatticePoint, Result, Window};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = (&'static str, Box<dyn Fn(u64) -> Result<(bool, String)>>);

pub fn run(seed: u64, green_table: Option<&Path>, range: u32, only: Option<&str>) -> Vec<CheckResult> {
    let mut checks: Vec<Check> = vec![
        ("lattice.region_counts", Box::new(|_| region_counts())),
        ("lattice.neighbor_inclusion", Box::new(neighbor_inclusion)),
        ("lattice.enumeration_deterministic", Box::new(|_| enumeration_deterministic())),
        ("walks.coalescing", Box::new(coalescing)),
        ("walks.annihilating_parity", Box::new(annihilating_parity)),
        ("walks.coupled_inclusion", Box::new(coupled_inclusion)),
        ("walks.determinism", Box::new(walk_determinism)),
        ("walks.step_uniformity", Box::new(step_uniformity)),
        ("green.convergence", Box::new(|_| green_convergence())),
        ("green.symmetry", Box::new(|_| green_symmetry())),
        ("green.hitting_below_green", Box::new(|_| hitting_below_green())),
        ("green.tail_below_green", Box::new(|_| tail_below_green())),
        ("stationary.density", Box::new(density_unbiased)),
        ("stationary.monotone_coupling", Box::new(monotone_coupling)),
        ("stationary.joint_occupation", Box::new(joint_occupation)),
        ("percolation.threshold_exactness", Box::new(threshold_exactness)),
        ("percolation.ecdf_consistency", Box::new(ecdf_consistency)),
        ("percolation.nearest_implies_star", Box::new(nearest_implies_star)),
        ("percolation.labeling_refinement", Box::new(labeling_refinement)),
        ("renorm.enumeration_count", Box::new(|_| enumeration_count())),
        ("renorm.extraction", Box::new(extraction)),
        ("renorm.spread_out", Box::new(spread_out)),
        ("renorm.admissible_cover", Box::new(|_| admissible_cover())),
        ("cli.replica_order", Box::new(replica_order)),
    ];
    if let Some(p) = green_table {
        let p = p.to_path_buf();
        checks.insert(12, ("green.table_file", Box::new(move |_| table_file(&p, range))));
    }
    checks
        .into_iter()
        .filter(|(name, _)| only.is_none_or(|o| name.starts_with(o)))
        .map(|(name, f)| {
            let c = match f(seed) {
                Ok((pass, detail)) => CheckResult { name, pass, detail },
                Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
            };
            eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            c
        })
        .collect()
}

fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::new(c).unwrap()
}

fn rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn region_counts() -> Result<(bool, String)> {
    for d in 1..=4usize {
        for l in 0..=4i64 {
            let n = enumerate_region(&Window::cube(d, l)?).len() as i64;
            if n != (2 * l + 1).pow(d as u32) {
                return Ok((false, format!("region d={d} L={l}: {n}")));
            }
            if l >= 1 {
                let s = enumerate_sphere(&LatticePoint::origin(d), l)?.len() as i64;
                if s != (2 * l + 1).pow(d as u32) - (2 * l - 1).pow(d as u32) {
                    return Ok((false, format!("sphere d={d} L={l}: {s}")));
                }
            }
        }
    }
    Ok((true, "d <= 4, L <= 4".into()))
}

fn neighbor_inclusion(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 1);
    for d in 1..=4usize {
        for _ in 0..50 {
            let p = pt(&(0..d).map(|_| r.random_range(-20..=20)).collect::<Vec<_>>());
            let star = neighbors(&p, ConnectivityMode::Star)?;
            if !neighbors(&p, ConnectivityMode::Nearest)?.iter().all(|q| star.contains(q)) {
                return Ok((false, format!("nearest neighbours of {p} not all star neighbours")));
            }
            let mut path = vec![p.clone()];
            for _ in 0..30 {
                let nb = neighbors(path.last().unwrap(), ConnectivityMode::Nearest)?;
                path.push(nb[r.random_range(0..nb.len())].clone());
            }
            if !(validate_path(&path, ConnectivityMode::Nearest)? && validate_path(&path, ConnectivityMode::Star)?) {
                return Ok((false, "a nearest path failed star validation".into()));
            }
        }
    }
    Ok((true, "200 points, 200 random nearest paths".into()))
}

fn enumeration_deterministic() -> Result<(bool, String)> {
    let w = Window::new(pt(&[1, -2, 3]), 3, vmperc::Norm::L1)?;
    Ok((enumerate_region(&w) == enumerate_region(&w) && w.sites() == enumerate_region(&w), "l1 window".into()))
}

fn coalescing(seed: u64) -> Result<(bool, String)> {
    let kernel = StepKernel::new(2, 1)?;
    let sites = Window::cube(2, 2)?.sites();
    for i in 0..20 {
        let mut r = vmperc::rng::stream(seed, vmperc::rng::purpose::WALKS, i);
        let run = simulate_system(&sites, &kernel, CollisionMode::Coalescing, StopRule::Horizon(30.0), SimOptions::default(), &mut r)?;
        let sys = &run.system;
        if sys.trace().windows(2).any(|w| w[1].1 > w[0].1) {
            return Ok((false, format!("run {i}: live count increased")));
        }
        let class = sys.class_map();
        for (w, &c) in class.iter().enumerate() {
            if class[c as usize] != c || c as usize > w {
                return Ok((false, format!("run {i}: class map is not a partition by minimal member")));
            }
            if sys.position(w) != sys.position(c as usize) {
                return Ok((false, format!("run {i}: walker {w} not at its class position")));
            }
        }
        let live: std::collections::HashSet<&LatticePoint> = sys.live_particles().map(|(_, p)| p).collect();
        if live.len() != sys.live_count() {
            return Ok((false, format!("run {i}: two live particles share a site")));
        }
    }
    Ok((true, "20 runs, 25 walkers".into()))
}

fn annihilating_parity(seed: u64) -> Result<(bool, String)> {
    let kernel = StepKernel::new(1, 1)?;
    let sites: Vec<LatticePoint> = (0..9).map(|i| pt(&[2 * i])).collect();
    for i in 0..50 {
        let mut r = vmperc::rng::stream(seed, vmperc::rng::purpose::WALKS, 100 + i);
        let run = simulate_system(&sites, &kernel, CollisionMode::Annihilating, StopRule::Horizon(50.0), SimOptions::default(), &mut r)?;
        let sys = &run.system;
        if sys.trace().iter().any(|&(_, n)| (sites.len() - n) % 2 != 0) {
            return Ok((false, format!("run {i}: odd number of removed walkers")));
        }
        if sys.live_count() != sites.len() - 2 * sys.annihilations() as usize {
            return Ok((false, format!("run {i}: live count differs from initial - 2 * annihilations")));
        }
    }
    Ok((true, "50 runs, d = 1".into()))
}

fn coupled_inclusion(seed: u64) -> Result<(bool, String)> {
    let mut bad = 0;
    let mut r = rng(seed, 3);
    for d in [1usize, 3] {
        let kernel = StepKernel::new(d, 1)?;
        for i in 0..200u64 {
            let k = r.random_range(4..=8);
            let mut sites: Vec<LatticePoint> = Vec::new();
            while sites.len() < k {
                let p = pt(&(0..d).map(|_| r.random_range(-5..=5)).collect::<Vec<_>>());
                if !sites.contains(&p) {
                    sites.push(p);
                }
            }
            let mut s = vmperc::rng::stream(seed, vmperc::rng::purpose::ANNIHILATION_COUPLED, i);
            bad += !coupled_coalescing_annihilating(&sites, &kernel, 20.0, &mut s)?.all_included as usize;
        }
    }
    Ok((bad == 0, format!("{bad} of 400 coupled runs violated inclusion")))
}

fn walk_determinism(seed: u64) -> Result<(bool, String)> {
    let kernel = StepKernel::new(3, 2)?;
    let sites = Window::cube(3, 1)?.sites();
    let log = || -> Result<Vec<u8>> {
        let mut r = vmperc::rng::stream(seed, vmperc::rng::purpose::WALKS, 7);
        let run = simulate_system(
            &sites,
            &kernel,
            CollisionMode::Coalescing,
            StopRule::Horizon(10.0),
            SimOptions { track_displacement: false, record_events: true },
            &mut r,
        )?;
        let mut buf = Vec::new();
        run.system.write_event_log_csv(&mut buf)?;
        Ok(buf)
    };
    let (a, b) = (log()?, log()?);
    Ok((a == b && !a.is_empty(), format!("{} byte event log", a.len())))
}

fn step_uniformity(seed: u64) -> Result<(bool, String)> {
    let kernel = StepKernel::new(3, 2)?;
    let k = kernel.support_len();
    let mut counts = vec![0u64; k];
    let mut r = rng(seed, 4);
    let n = 1_000_000u64;
    for _ in 0..n {
        counts[kernel.sample_index(&mut r)] += 1;
    }
    let e = n as f64 / k as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new((k - 1) as f64).unwrap().inverse_cdf(0.999);
    Ok((chi2 <= crit, format!("chi2 = {chi2:.2} vs 0.999 quantile {crit:.2} over {k} offsets")))
}

fn green_convergence() -> Result<(bool, String)> {
    let coarse = GreenSolver::<f64>::new(3, 1, 64)?;
    let fine = GreenSolver::<f64>::new(3, 1, 128)?;
    for x in [[0, 0, 0], [1, 0, 0], [1, 1, 0], [2, 1, 1], [4, 0, 0]] {
        let (c, f) = (coarse.green(&x)?, fine.green(&x)?);
        if (c.value - f.value).abs() > c.error {
            return Ok((false, format!("x = {x:?}: |{} - {}| > {}", c.value, f.value, c.error)));
        }
    }
    Ok((true, "resolution 64 -> 128, d = 3".into()))
}

fn green_symmetry() -> Result<(bool, String)> {
    let s = GreenSolver::<f64>::new(3, 2, 64)?;
    let base = s.green(&[3, 1, 0])?.value;
    for x in [[1, 3, 0], [0, -1, 3], [-3, 0, -1], [1, 0, -3]] {
        let v = s.green(&x)?.value;
        if (v - base).abs() > 1e-12 * base {
            return Ok((false, format!("g{x:?} = {v} differs from g(3,1,0) = {base}")));
        }
    }
    Ok((true, "permutations and sign flips of (3,1,0), R = 2".into()))
}

fn hitting_below_green() -> Result<(bool, String)> {
    let s = GreenSolver::<f64>::new(3, 1, 64)?;
    for x in BoxIter::new(&[0, 0, 0], &[3, 3, 3]) {
        if s.hitting(&x)?.value > s.green(&x)?.value {
            return Ok((false, format!("h > g at {x:?}")));
        }
    }
    Ok((true, "box [0,3]^3".into()))
}

fn tail_below_green() -> Result<(bool, String)> {
    let s = GreenSolver::<f64>::new(3, 1, 64)?;
    for x in [[0, 0, 0], [1, 0, 0], [2, 2, 1], [5, 0, 0]] {
        let g = s.green(&x)?;
        for t in [0.5, 1.0, 4.0, 16.0, 64.0] {
            let v = s.tail(&x, t)?;
            if v.value > g.value + g.error + v.error {
                return Ok((false, format!("tail({x:?}, {t}) = {} > g = {}", v.value, g.value)));
            }
        }
    }
    Ok((true, "four sites, T up to 64".into()))
}

fn table_file(path: &Path, range: u32) -> Result<(bool, String)> {
    let f = std::fs::File::open(path)?;
    let file = GreenTable::<f64>::read_csv(BufReader::new(f), range)?;
    let fresh = GreenSolver::<f64>::with_default_resolution(file.dim(), range)?.table(file.radius())?;
    for (x, v) in file.orbits() {
        let w = fresh.get(x).unwrap();
        let tol = 3.0 * (v.error + w.error) + 1e-9;
        if (v.value - w.value).abs() > tol {
            return Ok((false, format!("entry {x:?}: file {} vs recomputed {} (tolerance {tol:.2e})", v.value, w.value)));
        }
    }
    Ok((true, format!("{} orbits agree with recomputation", file.orbits().count())))
}

fn desk_sampler(seed: u64) -> SamplerConfig {
    SamplerConfig { eps_pair_residual: 1e-2, horizon_cap: 200.0, ..SamplerConfig::default() }.with_seed(seed)
}

fn density_unbiased(seed: u64) -> Result<(bool, String)> {
    let w = Window::cube(3, 4)?;
    let cfg = SamplerConfig { horizon_cap: 16.0, ..desk_sampler(seed) };
    let r = estimate_density(1, 0.3, &w, 100, &cfg)?;
    let e = &r.estimate;
    Ok(((e.value - 0.3).abs() <= 3.0 * e.se, format!("{:.5} +- {:.5} vs 0.3", e.value, e.se)))
}

fn monotone_coupling(seed: u64) -> Result<(bool, String)> {
    let w = Window::cube(3, 3)?;
    let cfg = desk_sampler(seed);
    let mut r = rng(seed, 5);
    for i in 0..10 {
        let s = sample_structure(&w, 1, &cfg, i)?;
        for _ in 0..16 {
            let (a, b) = (r.random::<f64>(), r.random::<f64>());
            let (lo, hi) = (a.min(b), a.max(b));
            let (cl, ch) = (realize_config(&s, lo)?, realize_config(&s, hi)?);
            if !cl.le(&ch) {
                return Ok((false, format!("structure {i}: realize({lo}) not below realize({hi})")));
            }
            if (0..s.len()).any(|j| cl.get(j) != cl.get(s.class_of[j] as usize)) {
                return Ok((false, format!("structure {i}: xi not constant on a class")));
            }
        }
    }
    Ok((true, "10 structures x 16 alpha pairs, class constancy included".into()))
}

fn joint_occupation(seed: u64) -> Result<(bool, String)> {
    let cfg = desk_sampler(seed);
    let pair = [pt(&[0, 0, 0]), pt(&[1, 0, 0])];
    let triple = [pt(&[0, 0, 0]), pt(&[1, 0, 0]), pt(&[0, 2, 0])];
    let mut lines = Vec::new();
    let mut ok = true;
    for sites in [&pair[..], &triple[..]] {
        for r in estimate_joint_occupation_multi(sites, 1, &[0.3, 0.5], 2000, &cfg)? {
            ok &= r.lower_ok && r.closed_form_ok.unwrap_or(true);
            lines.push(format!(
                "|A|={} alpha={}: {:.4} +- {:.4} (lower {:.4}{})",
                sites.len(),
                r.alpha,
                r.estimate.value,
                r.estimate.se,
                r.lower,
                r.closed_form.map(|c| format!(", closed form {c:.4}")).unwrap_or_default()
            ));
        }
    }
    Ok((ok, lines.join("; ")))
}

fn threshold_exactness(seed: u64) -> Result<(bool, String)> {
    let spec = CrossingSpec::for_scale(3, 3)?;
    let w = spec.window()?;
    let geom = CrossingGeometry::new(&w, &spec)?;
    let cfg = SamplerConfig { horizon_cap: 50.0, ..desk_sampler(seed) };
    let mut r = rng(seed, 6);
    for i in 0..20 {
        let s = sample_structure(&w, 1, &cfg, i)?;
        let star = vmperc::percolation::alpha_threshold(&s, &spec)?.alpha_star;
        for _ in 0..64 {
            let a: f64 = r.random();
            let c = realize_config(&s, a)?;
            if geom.crossing(|j| c.get(j)) != star.crossing_at(a) {
                return Ok((false, format!("structure {i}, alpha {a}: crossing disagrees with threshold {star}")));
            }
        }
    }
    Ok((true, "20 structures x 64 alphas".into()))
}

fn ecdf_consistency(seed: u64) -> Result<(bool, String)> {
    let cfg = SamplerConfig { horizon_cap: 50.0, ..desk_sampler(seed) };
    // Both sides sample the same truncated structure law, so the residual
    // does not enter the comparison.
    let curve = crossing_curve(3, 1, &[3], &[0.05], 200, &cfg)?;
    let row = &curve.rows[0];
    let direct = direct_crossing_probability(3, 1, 3, 0.05, 200, &cfg)?;
    let tol = 3.0 * (row.se.powi(2) + direct.se.powi(2)).sqrt();
    let ok = (row.p_hat - direct.value).abs() <= tol;
    Ok((ok, format!("ECDF {:.4} vs direct {:.4}, tolerance {tol:.4}", row.p_hat, direct.value)))
}

fn random_config(w: &Window, p: f64, r: &mut ChaCha8Rng) -> SiteConfiguration {
    let bits: Vec<bool> = (0..w.len()).map(|_| r.random_bool(p)).collect();
    SiteConfiguration::from_bits(Some(w.clone()), w.dim(), p, &bits)
}

fn nearest_implies_star(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 7);
    let near = CrossingSpec::new(vmperc::Annulus::new(LatticePoint::origin(3), 1, 4)?, ConnectivityMode::Nearest);
    let star = CrossingSpec { mode: ConnectivityMode::Star, ..near.clone() };
    let w = near.window()?;
    let mut hits = 0;
    for _ in 0..200 {
        let c = random_config(&w, r.random_range(0.1..0.6), &mut r);
        if has_crossing(&c, &near)? {
            hits += 1;
            if !has_crossing(&c, &star)? {
                return Ok((false, "nearest crossing without star crossing".into()));
            }
        }
    }
    Ok((true, format!("{hits} nearest crossings among 200 configurations")))
}

fn labeling_refinement(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 8);
    let w = Window::cube(3, 4)?;
    for _ in 0..50 {
        let c = random_config(&w, 0.3, &mut r);
        let n = label_clusters(&c, ConnectivityMode::Nearest)?;
        let s = label_clusters(&c, ConnectivityMode::Star)?;
        if label_clusters(&c, ConnectivityMode::Nearest)?.labels != n.labels {
            return Ok((false, "labeling is not idempotent".into()));
        }
        for i in 0..c.len() {
            let root = n.labels[i];
            if root > 0 && s.labels[i] != s.labels[root as usize - 1] {
                return Ok((false, "a nearest cluster spans two star clusters".into()));
            }
        }
    }
    Ok((true, "50 configurations at p = 0.3".into()))
}

fn enumeration_count() -> Result<(bool, String)> {
    use rayon::prelude::*;
    for depth in [0, 1] {
        let s = Scales::new(1, 6, depth)?;
        let parts = enumeration_parts(3, &s)?;
        let (n, bad) = (0..parts)
            .into_par_iter()
            .map(|p| -> Result<(u64, u64)> {
                let mut acc = (0, 0);
                for t in enumerate_part(3, &s, p)? {
                    acc.0 += 1;
                    acc.1 += !validate_embedding(&t, &s)?.is_empty() as u64;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let want = vmperc::renorm::count_embeddings(3, 6, depth)?;
        if num_bigint::BigUint::from(n) != want || bad > 0 {
            return Ok((false, format!("N = {depth}: {n} enumerated ({bad} invalid), formula {want}")));
        }
    }
    Ok((true, "d = 3, ell = 6, N in {0, 1}".into()))
}

fn crossing_path(dim: usize, inner: i64, outer: i64, r: &mut ChaCha8Rng) -> Vec<LatticePoint> {
    let norm = |c: &[i64]| c.iter().map(|x| x.abs()).max().unwrap();
    let mut p: Vec<i64> = loop {
        let c: Vec<i64> = (0..dim).map(|_| r.random_range(-inner..=inner)).collect();
        if norm(&c) == inner {
            break c;
        }
    };
    let mut path = vec![pt(&p)];
    while norm(&p) < outer {
        let q: Vec<i64> = p.iter().map(|x| x + r.random_range(-1..=1)).collect();
        if q != p && (norm(&q) >= norm(&p) || r.random_bool(0.25)) {
            p = q;
            path.push(pt(&p));
        }
    }
    path
}

fn extraction(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 9);
    for depth in [1, 2] {
        let s = Scales::new(1, 6, depth)?;
        for _ in 0..10 {
            let path = crossing_path(3, s.top() - 1, 2 * s.top(), &mut r);
            let t = extract_embedding(&path, &s)?;
            if !validate_embedding(&t, &s)?.is_empty() || !leaves_crossed(&path, &t, &s) {
                return Ok((false, format!("N = {depth}: extracted embedding fails validation")));
            }
        }
    }
    Ok((true, "20 random crossing paths, N in {1, 2}".into()))
}

fn spread_out(seed: u64) -> Result<(bool, String)> {
    let s1 = Scales::new(1, 6, 1)?;
    use rayon::prelude::*;
    let (fail1, total1) = (0..enumeration_parts(3, &s1)?)
        .into_par_iter()
        .map(|p| -> Result<(u64, u64)> {
            let mut acc = (0, 0);
            for t in enumerate_part(3, &s1, p)? {
                acc.0 += !check_spread_out(&t, &s1).passed() as u64;
                acc.1 += 1;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mut r = rng(seed, 10);
    let mut fail3 = 0;
    for depth in 0..=3 {
        let s = Scales::new(1, 6, depth)?;
        for _ in 0..1000 {
            fail3 += !check_spread_out(&sample_embedding(3, &s, &mut r)?, &s).passed() as u64;
        }
    }
    Ok((
        fail1 == 0 && fail3 == 0,
        format!("{fail1} of {total1} enumerated N = 1 embeddings and {fail3} of 4000 sampled N <= 3 embeddings fail"),
    ))
}

fn admissible_cover() -> Result<(bool, String)> {
    for depth in [0, 1] {
        let s = Scales::new(1, 6, depth)?;
        let t = enumerate_part(3, &s, 0)?.next().unwrap();
        let sum = for_each_admissible_pair(&t, &s, |_, _| true)?;
        if sum.definition_failures + sum.identity_failures > 0 {
            return Ok((false, format!("N = {depth}: {} failures", sum.definition_failures + sum.identity_failures)));
        }
    }
    Ok((true, "N in {0, 1}, L = 1".into()))
}

fn replica_order(seed: u64) -> Result<(bool, String)> {
    let w = Window::cube(3, 3)?;
    let cfg = SamplerConfig { horizon_cap: 16.0, ..desk_sampler(seed) };
    let many = estimate_density(1, 0.4, &w, 24, &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| vmperc::Error::InvalidArgument(e.to_string()))?;
    let one = pool.install(|| estimate_density(1, 0.4, &w, 24, &cfg))?;
    let same = many.estimate.value.to_bits() == one.estimate.value.to_bits() && many.estimate.se.to_bits() == one.estimate.se.to_bits();
    Ok((same, format!("density {} with the default pool, {} with one thread", many.estimate.value, one.estimate.value)))
}
