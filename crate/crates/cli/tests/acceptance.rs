//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Tolerances and frozen oracle values live in this file. Oracle values come
//! from `crates/core/tests/oracles/oracle.py`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vmperc::green::{validate_kernel_bounds, BoundsConfig, GreenSolver};
use vmperc::percolation::{alpha_threshold, verify_bottom_scale_inclusion, CrossingGeometry, CrossingSpec};
use vmperc::renorm::{
    check_spread_out, count_embeddings, enumerate_part, enumeration_parts, extract_embedding,
    for_each_admissible_pair, leaves_crossed, sample_embedding, validate_embedding, Embedding, Scales,
};
use vmperc::stationary::{
    check_annihilation_inequalities, estimate_correlation, estimate_density_multi, estimate_joint_occupation_multi,
    realize_config, sample_structure, CorrelationMethod, SamplerConfig,
};
use vmperc::walks::{coupled_coalescing_annihilating, StepKernel};
use vmperc::{LatticePoint, Result, Window};

const SEED: u64 = 20_240_601;

/// h(e1) for d = 3, R = 1 (Richardson-extrapolated midpoint quadrature).
const H_E1_ORACLE: f64 = 0.340_537_343_358_261;
/// g(0) and g(e1) for d = 3, R = 1 (Bessel integral representation).
const G0_ORACLE: f64 = 1.516_386_059_151_978;
const G_E1_ORACLE: f64 = 0.516_386_059_151_977_9;
/// Single sites plus unordered star-adjacent pairs in B(2L), d = 3.
const ADMISSIBLE_PER_LEAF: [(i64, u64); 2] = [(1, 1161), (2, 8177)];

type Outcome = Result<(bool, String)>;

fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::new(c).unwrap()
}

fn within(limit: u64, t: Duration) -> bool {
    t.as_secs_f64() <= limit as f64
}

fn density_exactness() -> Outcome {
    let t0 = Instant::now();
    let w = Window::cube(3, 8)?;
    let cfg = SamplerConfig { horizon_cap: 16.0, ..SamplerConfig::default() }.with_seed(SEED);
    let alphas = [0.1, 0.3, 0.5];
    let reports = estimate_density_multi(1, &alphas, &w, 200, &cfg)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, r) in alphas.iter().zip(&reports) {
        let e = &r.estimate;
        ok &= (e.value - a).abs() <= 3.0 * e.se;
        parts.push(format!("{a}: {:.5} +- {:.5}", e.value, e.se));
    }
    let dt = t0.elapsed();
    Ok((ok && within(120, dt), format!("{} in {:.1}s", parts.join(", "), dt.as_secs_f64())))
}

fn correlation_vs_green() -> Outcome {
    let t0 = Instant::now();
    let solver = GreenSolver::<f64>::with_default_resolution(3, 1)?;
    let cfg = SamplerConfig { escape_radius: 512, ..SamplerConfig::default() }.with_seed(SEED);
    let h1 = solver.hitting(&[1, 0, 0])?;
    let mut ok = (h1.value - H_E1_ORACLE).abs() <= 1e-4;
    let mut parts = vec![format!("h(e1) = {:.6} vs oracle {H_E1_ORACLE:.6}", h1.value)];
    for r in 1..=3 {
        let x = [r, 0, 0];
        let h = solver.hitting(&x)?;
        let c = estimate_correlation(3, 1, &pt(&x), 10_000, CorrelationMethod::DualPair, &cfg)?;
        let e = &c.estimate;
        ok &= (e.value - h.value).abs() <= 3.0 * e.se + e.bias_bound + h.error;
        parts.push(format!("|x|={r}: {:.4} +- {:.4} (residual {:.1e}) vs h {:.4}", e.value, e.se, e.bias_bound, h.value));
    }
    let dt = t0.elapsed();
    Ok((ok && within(300, dt), format!("{} in {:.1}s", parts.join("; "), dt.as_secs_f64())))
}

fn pathwise_domination() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut runs = 0;
    let mut bad = 0;
    let mut events = 0;
    for d in [1usize, 3] {
        let kernel = StepKernel::new(d, 1)?;
        for i in 0..500u64 {
            let k = r.random_range(4..=8);
            let mut sites: Vec<LatticePoint> = Vec::new();
            while sites.len() < k {
                let p = pt(&(0..d).map(|_| r.random_range(-5..=5)).collect::<Vec<_>>());
                if !sites.contains(&p) {
                    sites.push(p);
                }
            }
            let mut s = vmperc::rng::stream(SEED, vmperc::rng::purpose::ANNIHILATION_COUPLED, i + 1000 * d as u64);
            let trace = coupled_coalescing_annihilating(&sites, &kernel, 50.0, &mut s)?;
            runs += 1;
            events += trace.steps.len();
            let step_bad = trace.steps.iter().any(|st| !st.included || st.annihilating > st.coalescing);
            bad += (step_bad || !trace.all_included) as u64;
        }
    }
    Ok((bad == 0, format!("{bad} of {runs} coupled runs violated inclusion ({events} events)")))
}

fn negative_correlation() -> Outcome {
    let t0 = Instant::now();
    let sites = [pt(&[0, 0, 0]), pt(&[6, 0, 0]), pt(&[0, 6, 0]), pt(&[0, 0, 6])];
    let alpha: f64 = 0.5;
    let lambda = -2.0 * alpha.ln();
    let cfg = SamplerConfig { eps_pair_residual: 1e-2, ..SamplerConfig::default() }.with_seed(SEED);
    let r = check_annihilation_inequalities(&sites, 1, alpha, lambda, 4000, 200.0, &cfg)?;
    let dt = t0.elapsed();
    Ok((
        r.exponential_ok && within(180, dt),
        format!(
            "E[alpha^-2A] = {:.4} +- {:.4} (bias {:.1e}) vs product {:.4}, in {:.1}s",
            r.lhs.value,
            r.lhs.se,
            r.lhs.bias_bound,
            r.rhs_closed_form,
            dt.as_secs_f64()
        ),
    ))
}

fn embedding_count() -> Outcome {
    let t0 = Instant::now();
    let s = Scales::new(1, 6, 1)?;
    let (n, bad) = (0..enumeration_parts(3, &s)?)
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
    let formula = count_embeddings(3, 6, 1)?;
    let ok = n == 2_994_628 && formula == n.into() && bad == 0;
    let dt = t0.elapsed();
    Ok((ok && within(120, dt), format!("{n} enumerated, {bad} invalid, formula {formula}, in {:.1}s", dt.as_secs_f64())))
}

/// Random star path from a uniform point of `S(inner)` out to `S(outer)`;
/// inward moves are taken with probability 1/4.
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

fn extraction() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let (mut aborts, mut bad) = (0, 0);
    for depth in [1, 2] {
        let s = Scales::new(1, 6, depth)?;
        for _ in 0..50 {
            let path = crossing_path(3, s.top() - 1, 2 * s.top(), &mut r);
            match extract_embedding(&path, &s) {
                Ok(t) => bad += (!validate_embedding(&t, &s)?.is_empty() || !leaves_crossed(&path, &t, &s)) as u32,
                Err(vmperc::Error::NoCandidate { .. }) => aborts += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok((aborts + bad == 0, format!("100 paths: {aborts} aborts, {bad} invalid extractions")))
}

fn spread_out() -> Outcome {
    let s1 = Scales::new(1, 6, 1)?;
    let (fail1, overlap1, total1) = (0..enumeration_parts(3, &s1)?)
        .into_par_iter()
        .map(|p| -> Result<(u64, u64, u64)> {
            let mut acc = (0, 0, 0);
            for t in enumerate_part(3, &s1, p)? {
                let rep = check_spread_out(&t, &s1);
                acc.0 += !rep.passed() as u64;
                acc.1 += !rep.disjoint as u64;
                acc.2 += 1;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let s3 = Scales::new(1, 6, 3)?;
    let mut r = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut fail3 = 0;
    for _ in 0..1000 {
        fail3 += !check_spread_out(&sample_embedding(3, &s3, &mut r)?, &s3).passed() as u64;
    }
    Ok((
        fail1 == 0 && fail3 == 0,
        format!(
            "N=1: {fail1} of {total1} fail ({overlap1} with overlapping balls); N=3: {fail3} of 1000 sampled fail"
        ),
    ))
}

fn threshold_identity() -> Outcome {
    let spec = CrossingSpec::for_scale(3, 3)?;
    let w = spec.window()?;
    let geom = CrossingGeometry::new(&w, &spec)?;
    let cfg = SamplerConfig { eps_pair_residual: 1e-2, horizon_cap: 50.0, ..SamplerConfig::default() }.with_seed(SEED);
    let mut r = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let (mut mismatches, mut order) = (0, 0);
    for i in 0..100 {
        let s = sample_structure(&w, 1, &cfg, i)?;
        let star = alpha_threshold(&s, &spec)?.alpha_star;
        for _ in 0..64 {
            let (a, b): (f64, f64) = (r.random(), r.random());
            let c = realize_config(&s, a)?;
            mismatches += (geom.crossing(|j| c.get(j)) != star.crossing_at(a)) as u32;
            let (lo, hi) = if a <= b { (c, realize_config(&s, b)?) } else { (realize_config(&s, b)?, c) };
            order += !lo.le(&hi) as u32;
        }
    }
    Ok((
        mismatches + order == 0,
        format!("6400 draws: {mismatches} threshold mismatches, {order} monotonicity failures"),
    ))
}

fn kernel_bounds() -> Outcome {
    let rep = validate_kernel_bounds(&BoundsConfig::new(3, 1))?;
    let tail = rep.check("green_tail_ratio").map(|c| c.pass && c.value.is_finite() && c.value > 0.0).unwrap_or(false);
    let disp = rep.check("max_displacement").map(|c| c.pass).unwrap_or(false);
    let solver = GreenSolver::<f64>::with_default_resolution(3, 1)?;
    let (g0, g1) = (solver.green(&[0, 0, 0])?.value, solver.green(&[1, 0, 0])?.value);
    let identity = (g0 - 1.0 - g1).abs() <= 1e-4;
    let oracle = (g0 - G0_ORACLE).abs() <= 1e-4 && (g1 - G_E1_ORACLE).abs() <= 1e-4;
    Ok((
        tail && disp && identity && oracle,
        format!("tail ratio {tail}, displacement {disp}, g(0) - 1 - g(e1) = {:.1e}, oracle {oracle}", g0 - 1.0 - g1),
    ))
}

fn claim_inclusion() -> Outcome {
    let t0 = Instant::now();
    let r = verify_bottom_scale_inclusion(3, 1, 10, 200, SEED)?;
    let dt = t0.elapsed();
    Ok((
        r.violations == 0 && within(600, dt),
        format!("{} crossings, {} violations in {} replicas, {:.1}s", r.left_events, r.violations, r.replicas, dt.as_secs_f64()),
    ))
}

fn joint_sandwich() -> Outcome {
    let cfg = SamplerConfig { eps_pair_residual: 1e-2, horizon_cap: 200.0, ..SamplerConfig::default() }.with_seed(SEED);
    let pair = [pt(&[0, 0, 0]), pt(&[1, 0, 0])];
    let triple = [pt(&[0, 0, 0]), pt(&[1, 0, 0]), pt(&[0, 2, 0])];
    let mut ok = true;
    let mut parts = Vec::new();
    for sites in [&pair[..], &triple[..]] {
        for r in estimate_joint_occupation_multi(sites, 1, &[0.3, 0.5], 4000, &cfg)? {
            ok &= r.lower_ok && r.upper_ok && r.closed_form_ok.unwrap_or(true);
            parts.push(format!(
                "|A|={} {}: {:.4} in [{:.4}, {:.4}]",
                sites.len(),
                r.alpha,
                r.estimate.value,
                r.lower,
                r.upper
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn admissible_identity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (l, per_leaf) in ADMISSIBLE_PER_LEAF {
        for depth in [0, 1] {
            let s = Scales::new(l, 6, depth)?;
            let t = match depth {
                0 => Embedding::new(0, vec![pt(&[0, 0, 0])])?,
                _ => Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[6 * l, 6 * l, 0]), pt(&[-12 * l, 3 * l, 0])])?,
            };
            let leaves = 1u64 << depth;
            let mut direct = 0;
            let sum = for_each_admissible_pair(&t, &s, |x, y| {
                direct += (x.len() as u64 + 2 * y.len() as u64 != 2 * leaves) as u64;
                true
            })?;
            let want = per_leaf.pow(leaves as u32);
            ok &= sum.count == want && direct + sum.identity_failures + sum.definition_failures == 0;
            parts.push(format!("N={depth} L={l}: {} (oracle {want})", sum.count));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("1 density exactness", density_exactness),
        ("2 correlation vs green", correlation_vs_green),
        ("3 pathwise domination", pathwise_domination),
        ("4 negative correlation", negative_correlation),
        ("5 embedding count", embedding_count),
        ("6 extraction", extraction),
        ("7 spread-out", spread_out),
        ("8 threshold identity", threshold_identity),
        ("9 kernel bounds", kernel_bounds),
        ("10 bottom-scale inclusion", claim_inclusion),
        ("11 joint sandwich", joint_sandwich),
        ("12 admissible identity", admissible_identity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t0 = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !pass as u32;
        println!("{} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64());
    }
    println!("{} of 12 criteria pass", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
