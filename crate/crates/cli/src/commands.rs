use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use vmperc::green::{default_resolution, default_table_radius, validate_kernel_bounds, BoundsConfig, GreenSolver, HitModel};
use vmperc::percolation::{alpha_c_scan, crossing_curve, threshold_samples, verify_bottom_scale_inclusion};
use vmperc::renorm::{
    count_embeddings, enumerate_part, enumeration_parts, extract_embedding, for_each_admissible_pair,
    leaves_crossed, validate_embedding, Embedding, Scales,
};
use vmperc::stationary::{
    check_annihilation_inequalities, estimate_correlation, estimate_density_multi, estimate_joint_occupation_multi,
};
use vmperc::{Error, LatticePoint, Result};

use crate::config::{bad, Format, Params};
use crate::report::{num, ResultEntry};

/// Rows for a CSV or JSON data file.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        match format {
            Format::Csv => {
                writeln!(w, "{}", self.header.join(","))?;
                for r in &self.rows {
                    let cells: Vec<String> = r
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => s.clone(),
                            Value::Null => String::new(),
                            other => other.to_string(),
                        })
                        .collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let objs: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                serde_json::to_writer_pretty(&mut w, &objs)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Default)]
pub struct Outcome {
    pub results: Vec<ResultEntry>,
    pub details: Value,
    pub table: Option<Table>,
    /// Secondary data file and its rows.
    pub extra: Option<(std::path::PathBuf, Table)>,
    /// Set when an exact check or falsification test failed (exit code 1).
    pub failure: Option<String>,
}

fn details<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn density(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let reps = estimate_density_multi(p.range()?, &p.alphas()?, &p.window()?, p.replicas()?, &cfg)?;
    let mut t = Table::new(&["alpha", "estimate", "se", "bias_bound", "mean_residual", "mean_classes", "n"]);
    let mut results = Vec::new();
    for r in &reps {
        results.push(ResultEntry::estimate(format!("density[alpha={}]", r.alpha), &r.estimate));
        t.push(vec![
            num(r.alpha),
            num(r.estimate.value),
            num(r.estimate.se),
            num(r.estimate.bias_bound),
            num(r.mean_residual),
            num(r.mean_classes),
            json!(r.estimate.n),
        ]);
    }
    Ok(Outcome { results, details: details(&reps)?, table: Some(t), ..Outcome::default() })
}

pub fn corr(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let (d, range) = (p.dim()?, p.range()?);
    let x = p.point()?;
    let method = p.method.unwrap_or(crate::config::Method::DualPair);
    let r = estimate_correlation(d, range, &x, p.replicas()?, method.into(), &cfg)?;
    let h = if d >= 3 { Some(HitModel::for_kernel(d, range)?.h(x.coords())) } else { None };
    let mut t = Table::new(&["x", "method", "estimate", "se", "bias_bound", "h_quadrature", "escaped", "horizon_hits", "n"]);
    t.push(vec![
        json!(x.to_string()),
        serde_json::to_value(method)?,
        num(r.estimate.value),
        num(r.estimate.se),
        num(r.estimate.bias_bound),
        opt(h),
        json!(r.escaped),
        json!(r.horizon_hits),
        json!(r.estimate.n),
    ]);
    let mut results = vec![ResultEntry::estimate("correlation", &r.estimate)];
    if let Some(h) = h {
        results.push(ResultEntry::exact("h_quadrature", num(h)));
    }
    Ok(Outcome { results, details: details(&r)?, table: Some(t), ..Outcome::default() })
}

pub fn joint(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let sites = p.site_list()?;
    let reps = estimate_joint_occupation_multi(&sites, p.range()?, &p.alphas()?, p.replicas()?, &cfg)?;
    let mut t = Table::new(&[
        "alpha", "estimate", "se", "bias_bound", "lower", "upper", "closed_form", "lower_ok", "upper_ok", "closed_form_ok",
    ]);
    let mut results = Vec::new();
    for r in &reps {
        results.push(ResultEntry::estimate(format!("joint[alpha={}]", r.alpha), &r.estimate));
        t.push(vec![
            num(r.alpha),
            num(r.estimate.value),
            num(r.estimate.se),
            num(r.estimate.bias_bound),
            num(r.lower),
            num(r.upper),
            opt(r.closed_form),
            json!(r.lower_ok),
            json!(r.upper_ok),
            json!(r.closed_form_ok),
        ]);
    }
    Ok(Outcome { results, details: details(&reps)?, table: Some(t), ..Outcome::default() })
}

pub fn couple(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let sites = p.site_list()?;
    let alpha = p.alpha()?;
    if alpha <= 0.0 {
        return Err(bad("couple needs alpha > 0"));
    }
    let lambda = p.lambda.unwrap_or(-2.0 * alpha.ln());
    let horizon = p.coupling_horizon.unwrap_or(100.0);
    let r = check_annihilation_inequalities(&sites, p.range()?, alpha, lambda, p.replicas()?, horizon, &cfg)?;
    let results = vec![
        ResultEntry::exact("inclusion_violations", r.inclusion_violations),
        ResultEntry::estimate("coalescing_functional", &r.coalescing_functional),
        ResultEntry::estimate("annihilating_functional", &r.annihilating_functional),
        ResultEntry::estimate("exp_moment", &r.lhs),
        ResultEntry::estimate("exp_moment_independent_pairs", &r.rhs_monte_carlo),
        ResultEntry::exact("exp_moment_closed_form", num(r.rhs_closed_form)),
    ];
    let failure = (!r.pathwise_ok).then(|| format!("{} inclusion violations in the coupled run", r.inclusion_violations));
    Ok(Outcome { results, details: details(&r)?, failure, ..Outcome::default() })
}

pub fn crossing(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let grid = p.alphas()?;
    let c = crossing_curve(p.dim()?, p.range()?, &p.scales()?, &grid, p.replicas()?, &cfg)?;
    let mut t = Table::new(&["L", "alpha", "p_hat", "se", "residual_bound", "n"]);
    let mut results = Vec::new();
    for r in &c.rows {
        t.push(vec![json!(r.scale), num(r.alpha), num(r.p_hat), num(r.se), num(r.residual_bound), json!(r.n)]);
        results.push(ResultEntry::with_bias(format!("p_hat[L={},alpha={}]", r.scale, r.alpha), r.p_hat, r.se, r.residual_bound));
    }
    let extra = p.thresholds_out.clone().map(|path| (path, threshold_table(&c.thresholds)));
    Ok(Outcome { results, details: Value::Null, table: Some(t), extra, ..Outcome::default() })
}

fn threshold_table(rows: &[vmperc::percolation::ThresholdRow]) -> Table {
    let mut t = Table::new(&["L", "alpha_star", "seed"]);
    for r in rows {
        t.push(vec![json!(r.scale), json!(r.alpha_star.to_string()), json!(r.seed)]);
    }
    t
}

pub fn threshold(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let (d, range, n) = (p.dim()?, p.range()?, p.replicas()?);
    let mut all = Vec::new();
    let mut results = Vec::new();
    for l in p.scales()? {
        let (rows, residual) = threshold_samples(d, range, l, n, &cfg)?;
        let finite: Vec<f64> = rows.iter().map(|r| r.alpha_star.as_f64()).filter(|a| a.is_finite()).collect();
        let m = vmperc::stats::Moments::from_values(&finite);
        results.push(ResultEntry::with_bias(format!("mean_alpha_star[L={l}]"), m.mean(), m.std_error(), residual));
        results.push(ResultEntry::exact(format!("never_crossing[L={l}]"), rows.len() - finite.len()));
        all.extend(rows);
    }
    Ok(Outcome { results, table: Some(threshold_table(&all)), ..Outcome::default() })
}

pub fn scan(p: &Params) -> Result<Outcome> {
    let cfg = p.sampler()?;
    let q = p.quantile.unwrap_or(0.5);
    let r = alpha_c_scan(p.dim()?, p.range()?, &p.scales()?, q, p.replicas()?, &cfg)?;
    let mut t = Table::new(&["L", "quantile", "estimate", "ci_lo", "ci_hi", "n", "never"]);
    let mut results = Vec::new();
    for row in &r.rows {
        t.push(vec![
            json!(row.scale),
            num(row.quantile),
            num(row.estimate),
            num(row.ci_lo),
            num(row.ci_hi),
            json!(row.n),
            json!(row.never),
        ]);
        // Interval half-width over 1.96 stands in for a standard error.
        let se = (row.ci_hi - row.ci_lo) / (2.0 * 1.96);
        results.push(ResultEntry { name: format!("alpha_q[L={}]", row.scale), value: num(row.estimate), se: Some(se), bias_bound: None });
    }
    Ok(Outcome { results, details: details(&r)?, table: Some(t), ..Outcome::default() })
}

pub fn green(p: &Params) -> Result<Outcome> {
    let (d, range) = (p.dim()?, p.range()?);
    let res = p.resolution.unwrap_or(default_resolution(d));
    let radius = p.radius.unwrap_or(default_table_radius(d));
    let solver = GreenSolver::<f64>::new(d, range, res)?;
    let mut results = Vec::new();
    let mut e = vec![0; d];
    let g0 = solver.green(&e)?;
    e[0] = 1;
    let ge = solver.green(&e)?;
    let quad = |name: &str, v: vmperc::green::GreenValue<f64>| ResultEntry {
        name: name.into(),
        value: num(v.value),
        se: None,
        bias_bound: Some(v.error),
    };
    results.push(quad("g(0)", g0));
    results.push(quad("g(e1)", ge));
    results.push(ResultEntry { name: "h(e1)".into(), value: num(ge.value / g0.value), se: None, bias_bound: Some((ge.error + g0.error) / g0.value) });
    if let Some(x) = &p.x {
        let pt = LatticePoint::new(x)?;
        results.push(quad(&format!("g({pt})"), solver.green(pt.coords())?));
    }
    if let Some(path) = &p.out {
        let table = solver.table(radius)?;
        table.write_csv(BufWriter::new(std::fs::File::create(path)?))?;
    }
    Ok(Outcome { results, details: json!({ "resolution": res, "radius": radius }), ..Outcome::default() })
}

pub fn bounds(p: &Params) -> Result<Outcome> {
    let mut cfg = BoundsConfig::new(p.dim()?, p.range()?);
    if let Some(r) = p.resolution {
        cfg.resolution = r;
    }
    if let Some(n) = p.mc_samples {
        cfg.mc_samples = n;
    }
    cfg.seed = p.seed()?;
    let r = validate_kernel_bounds(&cfg)?;
    let results = r
        .checks
        .iter()
        .map(|c| ResultEntry { name: c.name.clone(), value: num(c.value), se: c.se, bias_bound: None })
        .collect();
    let mut t = Table::new(&["x", "T", "tail", "ratio"]);
    for row in &r.ratios {
        let x: Vec<String> = row.x.iter().map(|c| c.to_string()).collect();
        t.push(vec![json!(x.join(" ")), num(row.horizon), num(row.tail), num(row.ratio)]);
    }
    let failure = r.checks.iter().find(|c| !c.pass).map(|c| format!("bound check {} failed: {}", c.name, c.detail));
    Ok(Outcome { results, details: json!({ "checks": r.checks }), table: Some(t), failure, ..Outcome::default() })
}

pub fn claim64(p: &Params) -> Result<Outcome> {
    let r = verify_bottom_scale_inclusion(p.dim()?, p.range()?, p.scale()?, p.replicas()?, p.seed()?)?;
    let mut t = Table::new(&["replica", "alpha_star", "left_at_threshold", "right_at_threshold", "left_at_one", "right_at_one", "e_count"]);
    for (i, r) in r.per_replica.iter().enumerate() {
        t.push(vec![
            json!(i),
            json!(r.alpha_star.to_string()),
            json!(r.left[0]),
            json!(r.right[0]),
            json!(r.left[1]),
            json!(r.right[1]),
            json!(r.e_count),
        ]);
    }
    let results = vec![
        ResultEntry::exact("violations", r.violations),
        ResultEntry::exact("left_events", r.left_events),
        ResultEntry::estimate("beta_hat", &r.beta_hat),
        ResultEntry::exact("beta_bound", num(r.beta_bound)),
    ];
    let failure = (r.violations > 0).then(|| format!("{} replicas violate the inclusion", r.violations));
    let summary = json!({
        "horizon": r.horizon, "epsilon": r.epsilon, "beta_ok": r.beta_ok, "left_events": r.left_events,
    });
    Ok(Outcome { results, details: summary, table: Some(t), failure, ..Outcome::default() })
}

fn scales(p: &Params) -> Result<Scales> {
    Scales::new(p.scale()?, p.ell.unwrap_or(6), p.depth.unwrap_or(1))
}

fn big_value(n: &num_bigint::BigUint) -> Value {
    match u64::try_from(n) {
        Ok(v) if v < (1u64 << 53) => json!(v),
        _ => json!(n.to_string()),
    }
}

pub fn renorm_count(p: &Params) -> Result<Outcome> {
    let n = count_embeddings(p.dim()?, p.ell.unwrap_or(6), p.depth.unwrap_or(1))?;
    Ok(Outcome { results: vec![ResultEntry::exact("count", big_value(&n))], ..Outcome::default() })
}

pub fn renorm_enumerate(p: &Params) -> Result<Outcome> {
    let d = p.dim()?;
    let s = scales(p)?;
    let parts = enumeration_parts(d, &s)?;
    let expected = count_embeddings(d, s.ell, s.depth)?;
    let (count, invalid) = if let Some(path) = &p.out {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let (mut n, mut bad) = (0u64, 0u64);
        for part in 0..parts {
            for t in enumerate_part(d, &s, part)? {
                n += 1;
                bad += !validate_embedding(&t, &s)?.is_empty() as u64;
                serde_json::to_writer(&mut w, &t)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        (n, bad)
    } else {
        (0..parts)
            .into_par_iter()
            .map(|part| {
                let mut acc = (0u64, 0u64);
                for t in enumerate_part(d, &s, part)? {
                    acc.0 += 1;
                    acc.1 += !validate_embedding(&t, &s)?.is_empty() as u64;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    let results = vec![
        ResultEntry::exact("enumerated", count),
        ResultEntry::exact("count_formula", big_value(&expected)),
        ResultEntry::exact("invalid", invalid),
    ];
    let failure = if invalid > 0 {
        Some(format!("{invalid} enumerated embeddings are not proper"))
    } else if num_bigint::BigUint::from(count) != expected {
        Some(format!("enumerated {count} embeddings, formula gives {expected}"))
    } else {
        None
    };
    Ok(Outcome { results, failure, ..Outcome::default() })
}

pub fn read_path(path: &Path) -> Result<Vec<LatticePoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let raw: Vec<Vec<i64>> = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    raw.iter().map(|c| LatticePoint::new(c)).collect()
}

pub fn renorm_extract(p: &Params) -> Result<Outcome> {
    let s = scales(p)?;
    let path = read_path(p.path.as_deref().ok_or_else(|| bad("--path is required"))?)?;
    let t = extract_embedding(&path, &s)?;
    let crossed = leaves_crossed(&path, &t, &s);
    if let Some(out) = &p.out {
        std::fs::write(out, t.to_json()? + "\n")?;
    }
    let results = vec![ResultEntry::exact("leaves_crossed", crossed), ResultEntry::exact("path_length", path.len())];
    let failure = (!crossed).then(|| "extracted embedding leaves a leaf annulus uncrossed".to_string());
    Ok(Outcome { results, details: serde_json::to_value(&t)?, failure, ..Outcome::default() })
}

pub fn renorm_admissible(p: &Params) -> Result<Outcome> {
    let d = p.dim()?;
    let s = scales(p)?;
    let t = match &p.embedding {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
            Embedding::from_json(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?
        }
        None => enumerate_part(d, &s, 0)?.next().ok_or(Error::Empty("embedding enumeration"))?,
    };
    let mut writer = match &p.out {
        Some(path) => Some(BufWriter::new(std::fs::File::create(path)?)),
        None => None,
    };
    let mut io_err = None;
    let summary = for_each_admissible_pair(&t, &s, |x, y| {
        if let Some(w) = writer.as_mut() {
            let line = json!({ "X": x, "Y": y });
            if let Err(e) = writeln!(w, "{line}") {
                io_err = Some(e);
                return false;
            }
        }
        true
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    let results = vec![
        ResultEntry::exact("count", summary.count),
        ResultEntry::exact("bound", big_value(&summary.bound)),
        ResultEntry::exact("identity_failures", summary.identity_failures),
        ResultEntry::exact("definition_failures", summary.definition_failures),
    ];
    let failure = (summary.identity_failures + summary.definition_failures > 0)
        .then(|| "admissible pairs fail the counting identity or the definition".to_string());
    Ok(Outcome { results, details: json!({ "embedding": t }), failure, ..Outcome::default() })
}
