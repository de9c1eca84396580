//! Batch driver for the `cvtele` library: single points, parameter sweeps,
//! baseline tables and Monte Carlo cross-checks, written as CSV or JSON.

pub mod config;
pub mod sweep;
pub mod table;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{set_dotted, LoadedConfig};
use crate::sweep::{expand, run_points, tabulate, worst_mc_deviation, Layout};
use crate::table::{Provenance, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Evaluate the fixed parameters, ignoring any axis.
    Point,
    Sweep,
    /// Entanglement-free baseline and classical bound only.
    Baseline,
    /// Sweep with Monte Carlo cross-checks switched on.
    McCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::Sweep => "sweep",
            Command::Baseline => "baseline",
            Command::McCheck => "mc-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub timestamp: bool,
}

impl RunOptions {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            config: None,
            overrides: Vec::new(),
            workers: None,
            seed: None,
            timestamp: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub provenance: Provenance,
    /// Largest |z| of F and ΔF against Monte Carlo, when computed.
    pub worst_mc: Option<(f64, f64)>,
}

impl Report {
    pub fn write<W: std::io::Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => table::write_csv(out, &self.provenance, &self.table),
            Format::Json => table::write_json(out, &self.provenance, &self.table),
        }
    }
}

/// Loads the configuration with command-specific adjustments: `mc-check`
/// enables Monte Carlo, and `--seed` sets its seed.
pub fn load_config(opts: &RunOptions) -> Result<LoadedConfig> {
    let mut overrides = opts.overrides.clone();
    if let Some(seed) = opts.seed {
        overrides.push(format!("mc_check.seed={seed}"));
    }
    let mut tree = match &opts.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Value::Object(Default::default()),
    };
    let has_mc = tree.get("mc_check").is_some_and(|v| !v.is_null())
        || overrides.iter().any(|o| o.starts_with("mc_check") && !o.starts_with("mc_check.seed"));
    if opts.command == Command::McCheck && !has_mc {
        set_dotted(&mut tree, "mc_check", json!({}))?;
    } else if opts.command != Command::McCheck && !has_mc {
        // a seed alone does not switch Monte Carlo on
        overrides.retain(|o| !o.starts_with("mc_check.seed"));
    }
    config::apply_overrides(&mut tree, &overrides)?;
    let loaded = config::resolve(tree)?;
    let first = &loaded.runs[0].1;
    for (label, cfg) in &loaded.runs[1..] {
        if cfg.resources != first.resources || cfg.reference_line.is_some() != first.reference_line.is_some() {
            bail!("variant `{label}` changes `resources` or `reference_line`, which would change the column set");
        }
    }
    Ok(loaded)
}

fn config_hash(tree: &Value) -> String {
    // serde_json maps are key-sorted, so this text is canonical
    hex::encode(Sha256::digest(tree.to_string().as_bytes()))
}

fn provenance(opts: &RunOptions, loaded: &LoadedConfig, layout: Layout) -> Provenance {
    let cfg = &loaded.runs[0].1;
    let t = &cfg.tolerances;
    let defaults = cvtele::MomentOptions::default();
    let mut lines = vec![
        ("tool".to_string(), format!("cvtele-cli {VERSION}")),
        ("command".to_string(), opts.command.as_str().to_string()),
        ("config_sha256".to_string(), config_hash(&loaded.tree)),
        (
            "tolerances".to_string(),
            format!(
                "rel_tol={} max_evals={} rule_points={} max_panels={} gain_grid_points={} gain_x_tol={}",
                t.rel_tol,
                t.max_evals,
                defaults.quadrature.rule_points,
                defaults.quadrature.max_panels,
                t.gain_grid_points,
                defaults.gain_search.x_tol
            ),
        ),
    ];
    if layout.mc {
        if let Some(mc) = cfg.mc_check {
            lines.push((
                "monte_carlo".to_string(),
                format!("n_samples={} seed={} stream=seed+16*row+resource", mc.n_samples, mc.seed),
            ));
        }
    }
    if let Some(d) = &cfg.description {
        lines.push(("description".to_string(), d.clone()));
    }
    if let Some(a) = &cfg.assertion {
        lines.push(("assertion".to_string(), a.clone()));
    }
    lines.push(("config".to_string(), loaded.tree.to_string()));
    if opts.timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        lines.push(("generated_unix".to_string(), secs.to_string()));
    }
    Provenance(lines)
}

/// Runs a command end to end and returns the finished table.
pub fn execute(opts: &RunOptions) -> Result<Report> {
    let loaded = load_config(opts)?;
    let layout = Layout {
        families: opts.command != Command::Baseline,
        baseline: true,
        mc: opts.command != Command::Baseline && loaded.runs.iter().any(|(_, c)| c.mc_check.is_some()),
    };
    let points = expand(&loaded.runs, opts.command != Command::Point);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let rows = pool.install(|| run_points(&points, layout));

    let first = &loaded.runs[0].1;
    let table = tabulate(&rows, &first.resources, first.reference_line, first.advantage_margin, layout);
    Ok(Report {
        provenance: provenance(opts, &loaded, layout),
        table,
        worst_mc: if layout.mc { worst_mc_deviation(&rows) } else { None },
    })
}
