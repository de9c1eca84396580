//! Evaluates configurations point by point and lays the results out as a
//! table whose columns depend only on the configuration.

use cvtele::baselines::{classical_bound_coherent_gaussian, lambda_from_sigma, BoundProvenance, ClassicalBound};
use cvtele::moments::{moments, MomentResult};
use cvtele::{
    entanglement_free_baseline, mc_moments, optimize_gain, InputEnsemble, InputFamily, McEstimate, NoiseSpec,
    ResourceSpec,
};
use rayon::prelude::*;

use crate::config::{AxisName, DistributionName, GainMode, InputName, ResourceName, SweepConfig};
use crate::table::{Cell, Table};

/// Upper end of the well-studied squeezing range.
pub const STUDIED_R_MAX: f64 = 2.0;

/// Which groups of columns to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub families: bool,
    pub baseline: bool,
    pub mc: bool,
}

/// One grid point with every parameter resolved.
#[derive(Debug, Clone)]
pub struct PointSpec {
    pub variant: String,
    pub axis: Option<(AxisName, f64)>,
    pub config: SweepConfig,
    /// Position in the output; seeds Monte Carlo streams.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct FamilyOutcome {
    pub resource: ResourceName,
    pub result: Result<MomentResult, cvtele::Error>,
    pub mc: Option<Result<McEstimate, cvtele::Error>>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: PointSpec,
    pub ensemble_error: Option<cvtele::Error>,
    pub outside_window: bool,
    pub families: Vec<FamilyOutcome>,
    pub baseline: Option<Result<MomentResult, cvtele::Error>>,
    pub bound: Option<Result<ClassicalBound, cvtele::Error>>,
}

/// Expands the runs of a configuration into grid points, in output order.
pub fn expand(runs: &[(String, SweepConfig)], use_axis: bool) -> Vec<PointSpec> {
    let mut points = Vec::new();
    for (label, cfg) in runs {
        match (&cfg.axis, use_axis) {
            (Some(axis), true) => {
                let grid = axis.grid().expect("validated at load time");
                for x in grid {
                    let mut c = cfg.clone();
                    apply_axis(&mut c, axis.name, x);
                    points.push(PointSpec {
                        variant: label.clone(),
                        axis: Some((axis.name, x)),
                        config: c,
                        index: points.len(),
                    });
                }
            }
            _ => points.push(PointSpec {
                variant: label.clone(),
                axis: None,
                config: cfg.clone(),
                index: points.len(),
            }),
        }
    }
    points
}

fn apply_axis(cfg: &mut SweepConfig, axis: AxisName, x: f64) {
    match axis {
        AxisName::Squeezing => cfg.r = x,
        AxisName::Cutoff => cfg.ensemble.cutoff = Some(x),
        AxisName::SigmaS => cfg.ensemble.sigma_s = Some(x),
        AxisName::SigmaC => cfg.ensemble.sigma_c = Some(x),
        AxisName::Reflectivity => cfg.reflectivity = x,
        AxisName::Tau => cfg.tau = x,
    }
}

fn bound_for(ensemble: &InputEnsemble, cfg: &SweepConfig, baseline: &Result<MomentResult, cvtele::Error>) -> Result<ClassicalBound, cvtele::Error> {
    let gaussian_coherent = cfg.ensemble.kind == DistributionName::Gaussian && cfg.ensemble.family == InputName::Coherent;
    if gaussian_coherent && ensemble.family() == InputFamily::Coherent {
        let sigma = cfg.ensemble.sigma_c.unwrap_or(f64::NAN);
        return Ok(ClassicalBound {
            value: classical_bound_coherent_gaussian(lambda_from_sigma(sigma)?)?,
            provenance: BoundProvenance::CoherentGaussianFormula,
        });
    }
    baseline.clone().map(|b| ClassicalBound {
        value: b.avg_fidelity,
        provenance: BoundProvenance::EntanglementFreeNumeric,
    })
}

/// Evaluates one grid point. Numerical failures are recorded in the row.
pub fn run_point(point: &PointSpec, layout: Layout) -> SweepRow {
    let cfg = &point.config;
    let opts = cfg.tolerances.moment_options();
    let mut row = SweepRow {
        point: point.clone(),
        ensemble_error: None,
        outside_window: cfg.r > STUDIED_R_MAX,
        families: Vec::new(),
        baseline: None,
        bound: None,
    };
    let ensemble = match cfg.ensemble.build() {
        Ok(e) => e,
        Err(e) => {
            row.ensemble_error = Some(e);
            return row;
        }
    };
    row.outside_window |= ensemble.outside_studied_window();

    if layout.families {
        let noise = NoiseSpec::new(cfg.tau, cfg.reflectivity);
        for (k, &resource) in cfg.resources.iter().enumerate() {
            let evaluated = noise.clone().and_then(|noise| {
                let res = ResourceSpec::new(resource.family(), cfg.r)?;
                let m = match cfg.gain {
                    GainMode::Optimize(_) => optimize_gain(&res, &ensemble, &noise, &opts)?,
                    GainMode::Fixed(g) => MomentResult::at_gain(g, &moments(&res, &ensemble, g, &noise, &opts)?)?,
                };
                Ok((res, noise, m))
            });
            let mc = match (layout.mc, cfg.mc_check, &evaluated) {
                (true, Some(check), Ok((res, noise, m))) => {
                    let seed = check.seed.wrapping_add((point.index * 16 + k) as u64);
                    Some(mc_moments(res, &ensemble, m.g_opt, noise, check.n_samples, seed))
                }
                _ => None,
            };
            row.families.push(FamilyOutcome {
                resource,
                result: evaluated.map(|(_, _, m)| m),
                mc,
            });
        }
    }

    if layout.baseline {
        let baseline = entanglement_free_baseline(&ensemble, &opts);
        row.bound = Some(bound_for(&ensemble, cfg, &baseline));
        row.baseline = Some(baseline);
    }
    row
}

/// Evaluates all points on the current rayon pool; results keep grid order.
pub fn run_points(points: &[PointSpec], layout: Layout) -> Vec<SweepRow> {
    points.par_iter().map(|p| run_point(p, layout)).collect()
}

/// Builds the output table. Columns depend on `layout` and the configured
/// resource list and reference line only.
pub fn tabulate(rows: &[SweepRow], resources: &[ResourceName], reference_line: Option<f64>, margin: f64, layout: Layout) -> Table {
    let mut columns: Vec<String> = ["variant", "axis", "axis_value", "r", "tau", "R", "L", "sigma_s", "sigma_c", "window"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if layout.families {
        for res in resources {
            let f = res.as_str();
            for c in ["F", "dF", "g_opt", "err_F", "err_f2", "n_evals", "status"] {
                columns.push(format!("{f}_{c}"));
            }
            if layout.mc {
                for c in ["mc_F", "mc_dF", "mc_se_F", "mc_se_dF", "mc_z_F", "mc_z_dF", "mc_n", "mc_seed", "mc_status"] {
                    columns.push(format!("{f}_{c}"));
                }
            }
            if layout.baseline {
                columns.push(format!("{f}_advantage"));
            }
        }
    }
    if layout.baseline {
        for c in ["baseline_F", "baseline_g", "baseline_status", "bound", "bound_provenance"] {
            columns.push(c.to_string());
        }
        if reference_line.is_some() {
            columns.push("reference_line".to_string());
        }
    }

    let mut table = Table::new(columns);
    for row in rows {
        let cfg = &row.point.config;
        let (axis, axis_value) = match row.point.axis {
            Some((a, x)) => (Cell::text(a.as_str()), Cell::Num(x)),
            None => (Cell::Empty, Cell::Empty),
        };
        let opt = |v: Option<f64>| v.map_or(Cell::Empty, Cell::Num);
        let window = match &row.ensemble_error {
            Some(e) => Cell::text(e.code()),
            None if row.outside_window => Cell::text("outside_studied_window"),
            None => Cell::text("ok"),
        };
        let mut cells = vec![
            Cell::text(&row.point.variant),
            axis,
            axis_value,
            Cell::Num(cfg.r),
            Cell::Num(cfg.tau),
            Cell::Num(cfg.reflectivity),
            opt(cfg.ensemble.cutoff),
            opt(cfg.ensemble.sigma_s),
            opt(cfg.ensemble.sigma_c),
            window,
        ];
        let bound_value = row.bound.as_ref().and_then(|b| b.as_ref().ok()).map(|b| b.value);

        if layout.families {
            for (k, _) in resources.iter().enumerate() {
                let outcome = row.families.get(k);
                match outcome.map(|o| &o.result) {
                    Some(Ok(m)) => cells.extend([
                        Cell::Num(m.avg_fidelity),
                        Cell::Num(m.fidelity_deviation),
                        Cell::Num(m.g_opt),
                        Cell::Num(m.quad_error_f),
                        Cell::Num(m.quad_error_f2),
                        Cell::Int(m.n_evals),
                        Cell::text("ok"),
                    ]),
                    Some(Err(e)) => {
                        cells.extend(std::iter::repeat_n(Cell::Empty, 6));
                        cells.push(Cell::text(e.code()));
                    }
                    None => {
                        cells.extend(std::iter::repeat_n(Cell::Empty, 6));
                        cells.push(window_code(row));
                    }
                }
                if layout.mc {
                    let fam = outcome.and_then(|o| o.result.as_ref().ok());
                    match (outcome.and_then(|o| o.mc.as_ref()), fam) {
                        (Some(Ok(mc)), Some(m)) => cells.extend([
                            Cell::Num(mc.mean),
                            Cell::Num(mc.deviation),
                            Cell::Num(mc.stderr),
                            Cell::Num(mc.stderr_deviation),
                            Cell::Num(z_score(m.avg_fidelity, mc.mean, mc.stderr)),
                            Cell::Num(z_score(m.fidelity_deviation, mc.deviation, mc.stderr_deviation)),
                            Cell::Int(mc.n_samples as u64),
                            Cell::Int(mc.seed),
                            Cell::text("ok"),
                        ]),
                        (Some(Err(e)), _) => {
                            cells.extend(std::iter::repeat_n(Cell::Empty, 8));
                            cells.push(Cell::text(e.code()));
                        }
                        _ => {
                            cells.extend(std::iter::repeat_n(Cell::Empty, 8));
                            cells.push(Cell::text("skipped"));
                        }
                    }
                }
                if layout.baseline {
                    // the excess must also clear the quadrature error of F
                    let f = outcome
                        .and_then(|o| o.result.as_ref().ok())
                        .map(|m| m.avg_fidelity - m.quad_error_f.abs());
                    cells.push(match (f, bound_value) {
                        (Some(f), Some(b)) => Cell::Bool(f > b + margin),
                        _ => Cell::Empty,
                    });
                }
            }
        }

        if layout.baseline {
            match &row.baseline {
                Some(Ok(b)) => cells.extend([Cell::Num(b.avg_fidelity), Cell::Num(b.g_opt), Cell::text("ok")]),
                Some(Err(e)) => cells.extend([Cell::Empty, Cell::Empty, Cell::text(e.code())]),
                None => cells.extend([Cell::Empty, Cell::Empty, window_code(row)]),
            }
            match &row.bound {
                Some(Ok(b)) => cells.extend([Cell::Num(b.value), Cell::text(b.provenance.as_str())]),
                Some(Err(_)) | None => cells.extend([Cell::Empty, Cell::Empty]),
            }
            if let Some(line) = reference_line {
                cells.push(Cell::Num(line));
            }
        }
        table.push(cells);
    }
    table
}

fn window_code(row: &SweepRow) -> Cell {
    row.ensemble_error
        .as_ref()
        .map_or(Cell::text("not_evaluated"), |e| Cell::text(e.code()))
}

fn z_score(reference: f64, estimate: f64, stderr: f64) -> f64 {
    let diff = reference - estimate;
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Largest |z| of F and ΔF over all Monte Carlo cells, if any were computed.
pub fn worst_mc_deviation(rows: &[SweepRow]) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for row in rows {
        for fam in &row.families {
            if let (Ok(m), Some(Ok(mc))) = (&fam.result, &fam.mc) {
                let zf = z_score(m.avg_fidelity, mc.mean, mc.stderr).abs();
                let zd = z_score(m.fidelity_deviation, mc.deviation, mc.stderr_deviation).abs();
                let w = worst.get_or_insert((0.0, 0.0));
                w.0 = w.0.max(zf);
                w.1 = w.1.max(zd);
            }
        }
    }
    worst
}
