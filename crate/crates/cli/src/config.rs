//! Experiment configuration: flags override a JSON config file, which
//! overrides per-command defaults. The merged object is echoed in reports.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use vmperc::stationary::{CorrelationMethod, SamplerConfig};
use vmperc::{Error, LatticePoint, Result, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DualPair,
    Window,
}

impl From<Method> for CorrelationMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::DualPair => CorrelationMethod::DualPair,
            Method::Window => CorrelationMethod::Window,
        }
    }
}

/// Every tunable of every subcommand. All fields are optional so that the
/// same struct serves as flag set, config file and resolved echo.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Lattice dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Walk range (l1 radius of the jump kernel).
    #[arg(long = "R", alias = "range")]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub range: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Comma separated alpha values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    /// l-infinity window radius around the origin.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_pair_residual: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_radius: Option<i64>,
    /// Close surviving pairs heuristically; results are flagged approximate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_closure: Option<bool>,

    /// Target site for `corr`, e.g. `1,0,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<i64>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Site list, `;` between sites and `,` between coordinates.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<String>,
    /// Comma separated scales L.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<i64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
    /// Exponent of the annihilation moment; defaults to `-2 ln alpha`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_horizon: Option<f64>,
    /// Bottom scale L.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub scale: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<i64>,
    /// Tree depth N.
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    /// Quadrature points per axis (multiple of 8).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Green table radius.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,

    /// Path JSON file (array of coordinate arrays) for `renorm extract`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Embedding JSON file for `renorm admissible`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<PathBuf>,
    /// Green table CSV to check in `validate`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub green_table: Option<PathBuf>,
    /// Run only the `validate` checks whose name starts with this prefix.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,
    /// Data file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Second data file: per-sample thresholds for `crossing`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds_out: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Report zero wall time so reports are byte-identical across runs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproducible: Option<bool>,
}

/// Shorthand for config errors (exit code 2).
pub fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// Per-command defaults; commands whose output is random need a seed from
/// flags or file, except `validate`.
fn defaults(command: &str) -> Params {
    let mut p = Params {
        d: Some(3),
        range: Some(1),
        eps_pair_residual: Some(1e-3),
        horizon_cap: Some(1e7),
        escape_radius: Some(512),
        pair_closure: Some(false),
        format: Some(Format::Csv),
        reproducible: Some(false),
        ..Params::default()
    };
    if matches!(command, "crossing" | "threshold" | "scan") {
        // Crossing windows keep hundreds of classes alive; the pair residual
        // decays too slowly for the 1e7 cap to be affordable. It is reported.
        p.horizon_cap = Some(4000.0);
    }
    match command {
        "density" => {
            p.alpha = Some(0.5);
            p.window = Some(8);
            p.replicas = Some(200);
            // Every class carries its own uniform, so truncation leaves the
            // density unbiased; a short run suffices.
            p.horizon_cap = Some(16.0);
        }
        "corr" => {
            p.x = Some(vec![1, 0, 0]);
            p.method = Some(Method::DualPair);
            p.replicas = Some(10_000);
        }
        "joint" | "couple" => {
            p.alpha = Some(0.5);
            p.replicas = Some(1000);
            p.coupling_horizon = Some(100.0);
        }
        "crossing" => {
            p.scales = Some(vec![3, 4, 5]);
            p.alpha_grid = Some((1..=19).map(|i| i as f64 / 20.0).collect());
            p.replicas = Some(100);
        }
        "threshold" => {
            p.scales = Some(vec![4]);
            p.replicas = Some(100);
        }
        "scan" => {
            p.scales = Some(vec![3, 4, 5]);
            p.quantile = Some(0.5);
            p.replicas = Some(100);
        }
        "green" => p.x = None,
        "bounds" => p.mc_samples = Some(20_000),
        "claim64" => {
            p.scale = Some(10);
            p.replicas = Some(200);
        }
        c if c.starts_with("renorm") => {
            p.ell = Some(6);
            p.depth = Some(1);
            p.scale = Some(1);
        }
        "validate" => p.seed = Some(0),
        _ => {}
    }
    p
}

#[derive(Clone, Debug)]
pub struct Resolved {
    pub params: Params,
    /// The merged configuration as echoed in the report.
    pub echo: Value,
}

pub fn resolve(command: &str, flags: &Params) -> Result<Resolved> {
    let mut merged = object(serde_json::to_value(defaults(command))?);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config file {}: {e}", path.display())))?;
        let file: Params = serde_json::from_str(&text).map_err(|e| bad(format!("config file {}: {e}", path.display())))?;
        merged.extend(object(serde_json::to_value(file)?));
    }
    merged.extend(object(serde_json::to_value(flags)?));
    let params: Params = serde_json::from_value(Value::Object(merged.clone()))?;
    let mut echo = Map::new();
    echo.insert("subcommand".into(), Value::String(command.into()));
    echo.extend(merged);
    Ok(Resolved { params, echo: Value::Object(echo) })
}

impl Params {
    pub fn dim(&self) -> Result<usize> {
        match self.d {
            Some(d) if (1..=6).contains(&d) => Ok(d),
            Some(d) => Err(bad(format!("d = {d} outside 1..=6"))),
            None => Err(bad("--d is required")),
        }
    }

    pub fn range(&self) -> Result<u32> {
        match self.range {
            Some(r) if r >= 1 => Ok(r),
            Some(r) => Err(bad(format!("R = {r} must be >= 1"))),
            None => Err(bad("--R is required")),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| bad("--seed is required for reproducibility"))
    }

    pub fn replicas(&self) -> Result<usize> {
        match self.replicas {
            Some(n) if n >= 1 => Ok(n),
            _ => Err(bad("--replicas must be >= 1")),
        }
    }

    pub fn alpha(&self) -> Result<f64> {
        let a = self.alpha.ok_or_else(|| bad("--alpha is required"))?;
        check_alpha(a)?;
        Ok(a)
    }

    /// `alpha_grid` when given, otherwise the single `alpha`.
    pub fn alphas(&self) -> Result<Vec<f64>> {
        let v = match &self.alpha_grid {
            Some(g) if !g.is_empty() => g.clone(),
            _ => vec![self.alpha()?],
        };
        for &a in &v {
            check_alpha(a)?;
        }
        Ok(v)
    }

    pub fn window(&self) -> Result<Window> {
        let r = self.window.ok_or_else(|| bad("--window is required"))?;
        if r < 0 {
            return Err(bad(format!("window radius {r} must be >= 0")));
        }
        Window::cube(self.dim()?, r)
    }

    pub fn scale(&self) -> Result<i64> {
        self.scale.ok_or_else(|| bad("--L is required"))
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let c = SamplerConfig {
            eps_pair_residual: self.eps_pair_residual.unwrap_or(1e-3),
            horizon_cap: self.horizon_cap.unwrap_or(1e7),
            escape_radius: self.escape_radius.unwrap_or(512),
            pair_closure_heuristic: self.pair_closure.unwrap_or(false),
            seed: self.seed()?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn point(&self) -> Result<LatticePoint> {
        let x = self.x.as_ref().ok_or_else(|| bad("--x is required"))?;
        let p = LatticePoint::new(x)?;
        if p.dim() != self.dim()? {
            return Err(Error::DimensionMismatch { expected: self.dim()?, got: p.dim() });
        }
        Ok(p)
    }

    pub fn site_list(&self) -> Result<Vec<LatticePoint>> {
        let s = self.sites.as_ref().ok_or_else(|| bad("--sites is required"))?;
        let d = self.dim()?;
        s.split(';')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                let c = t
                    .split(',')
                    .map(|v| v.trim().parse::<i64>().map_err(|e| bad(format!("site '{t}': {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if c.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: c.len() });
                }
                LatticePoint::new(&c)
            })
            .collect()
    }

    pub fn scales(&self) -> Result<Vec<i64>> {
        match &self.scales {
            Some(s) if !s.is_empty() => Ok(s.clone()),
            _ => Err(bad("--scales is required")),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(bad(format!("alpha = {a} outside [0, 1]")))
    }
}
