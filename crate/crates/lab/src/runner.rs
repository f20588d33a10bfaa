//! Executes one scenario and assembles its report.

use rayon::prelude::*;

use doiflow_core::doi::{doi_apply, doi_apply_decomposed};
use doiflow_core::flow::{build_weight_function, flow_integrate, uniform_grid, FlowSettings};
use doiflow_core::kernels::{
    divided_difference_decomposed, exp_kernel, DecomposedKernel, SmoothFunction, WienerFunction, DEFAULT_R_NODES,
    DEFAULT_T_DENSITY,
};
use doiflow_core::norms::op_norm;
use doiflow_core::perturbation::{dk_derivative, fd_derivative, spectral_pvm};
use doiflow_core::{Error, Result};

use crate::config::{Command, ScenarioConfig};
use crate::models::{self, Model};
use crate::report::{num, Check, CsvBuilder, Failure, Report};
use crate::verify;

pub const FLOW_HEADER: &str = "s,gap,min_dist_to_contour,commutator_residual,transport_error,unitarity_defect";
pub const DOI_HEADER: &str = "s,kernel,components,doi_hs_norm,mnorm_bound,oracle_residual,op_ratio";
pub const DK_HEADER: &str = "s,function,fd_step,dk_op_norm,fd_rel_deviation";
pub const WEIGHTFN_HEADER: &str = "kind,x,value";

/// Runs the command; numerical errors end up inside the report.
pub fn run(config: &ScenarioConfig) -> Report {
    let echo = config.echo();
    match config.command {
        Command::Verify => {
            let results = verify::run_suite(config.seed, &[]);
            let checks = results
                .iter()
                .map(|r| Check {
                    name: format!("criterion {}", r.criterion_id),
                    measured: r.measured,
                    tolerance: r.tolerance,
                    passed: r.status == verify::Status::Pass,
                })
                .collect();
            Report { body: verify::summary_json(Some(&echo), &results), checks, failure: None, is_csv: false }
        }
        Command::Flow => flow(config, &echo),
        Command::Doi => per_point(config, &echo, DOI_HEADER, doi_rows),
        Command::Dk => per_point(config, &echo, DK_HEADER, dk_rows),
        Command::Weightfn => weightfn(config, &echo),
    }
}

fn model(config: &ScenarioConfig) -> Result<Model> {
    let m = config.model.as_ref().ok_or_else(|| Error::InvalidInput("command needs a model".into()))?;
    models::build(m, (config.s_grid.start, config.s_grid.end), config.gamma, config.seed)
}

fn failed(csv: CsvBuilder, e: &Error, s: Option<f64>) -> Report {
    csv.finish(Vec::new(), Some(Failure::from_error(e, s)))
}

fn flow(config: &ScenarioConfig, echo: &str) -> Report {
    let csv = CsvBuilder::new(echo, FLOW_HEADER);
    let model = match model(config) {
        Ok(m) => m,
        Err(e) => return failed(csv, &e, None),
    };
    let result = build_weight_function(model.path.gamma, &config.weight_settings()).and_then(|wf| {
        let settings = FlowSettings {
            contour_nodes: config.quadrature.contour_nodes,
            method: config.hastings_method(),
            stride: config.s_grid.stride,
        };
        let grid = uniform_grid(config.s_grid.start, config.s_grid.end, config.s_grid.steps);
        let r = flow_integrate(&model.path, &wf, &grid, &settings)?;
        // built-in paths are linear, so ‖Φ′‖ is the same at every s
        let dphi = op_norm(model.path.path.phi_prime(config.s_grid.start)?.as_matrix())?;
        Ok((r, dphi))
    });
    let (r, dphi) = match result {
        Ok(x) => x,
        Err(e) => return failed(csv, &e, None),
    };
    let mut csv = csv;
    for rec in &r.records {
        let d = &rec.diagnostics;
        csv.row(&[d.s, d.gap, d.min_dist_to_contour, d.commutator_residual, d.transport_error, d.unitarity_defect].map(num));
    }
    let diags = || r.records.iter().map(|rec| &rec.diagnostics);
    let rank0 = r.records.first().map(|rec| rec.diagnostics.rank);
    let checks = vec![
        Check::new("unitarity_defect", diags().map(|d| d.unitarity_defect).fold(0.0, f64::max), 1e-8),
        Check::new("commutator_residual", diags().map(|d| d.commutator_residual).fold(0.0, f64::max), 1e-6 * (1.0 + dphi)),
        Check::flag("constant patch rank", diags().all(|d| Some(d.rank) == rank0)),
    ];
    let failure = r.failure.map(|f| Failure { code: f.code.to_string(), s: Some(f.s), message: f.message });
    csv.finish(checks, failure)
}

/// Rows and check values `(name, measured, tolerance)` at one grid point.
type PointOutput = (Vec<Vec<String>>, Vec<(String, f64, f64)>);

/// Evaluates `rows_at` on every grid point in parallel and merges in grid order.
fn per_point(
    config: &ScenarioConfig,
    echo: &str,
    header: &str,
    rows_at: fn(&Model, &ScenarioConfig, usize) -> Result<PointOutput>,
) -> Report {
    let mut csv = CsvBuilder::new(echo, header);
    let model = match model(config) {
        Ok(m) => m,
        Err(e) => return failed(csv, &e, None),
    };
    let outputs: Vec<Result<PointOutput>> =
        (0..point_count(config)).into_par_iter().map(|k| rows_at(&model, config, k)).collect();
    let mut worst: Vec<Check> = Vec::new();
    for (k, out) in outputs.into_iter().enumerate() {
        match out {
            Ok((rows, checks)) => {
                rows.iter().for_each(|r| csv.row(r));
                for (name, measured, tolerance) in checks {
                    match worst.iter_mut().find(|c| c.name == name) {
                        Some(c) if measured.is_nan() || measured > c.measured => *c = Check::new(name, measured, tolerance),
                        Some(_) => {}
                        None => worst.push(Check::new(name, measured, tolerance)),
                    }
                }
            }
            Err(e) => return csv.finish(worst, Some(Failure::from_error(&e, Some(point(config, k))))),
        }
    }
    csv.finish(worst, None)
}

/// `doi` runs on the grid points, `dk` on the cell midpoints.
fn point_count(config: &ScenarioConfig) -> usize {
    match config.command {
        Command::Dk => config.s_grid.steps,
        _ => config.s_grid.steps + 1,
    }
}

fn point(config: &ScenarioConfig, k: usize) -> f64 {
    let g = &config.s_grid;
    let h = (g.end - g.start) / g.steps as f64;
    match config.command {
        Command::Dk => g.start + (k as f64 + 0.5) * h,
        _ if k == g.steps => g.end,
        _ => g.start + k as f64 * h,
    }
}

fn doi_kernels() -> Result<Vec<(String, DecomposedKernel)>> {
    Ok(vec![
        ("phi_1".into(), exp_kernel(1.0, DEFAULT_R_NODES)?),
        ("dd_exp_i".into(), divided_difference_decomposed(&WienerFunction::exp_i(1.0), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?),
        ("dd_cos".into(), divided_difference_decomposed(&WienerFunction::cos(1.0), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?),
        ("dd_sin".into(), divided_difference_decomposed(&WienerFunction::sin(1.0), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?),
    ])
}

/// `∬ φ dE_s Φ′(s) dE_s` for each kernel, by the Schur product and by the
/// decomposition.
fn doi_rows(model: &Model, config: &ScenarioConfig, k: usize) -> Result<PointOutput> {
    let s = point(config, k);
    let eig = model.path.path.eig(s)?;
    let e = spectral_pvm(&eig)?;
    let t = model.path.path.phi_prime(s)?.into_matrix();
    let (t_hs, t_op) = (t.fro_norm(), op_norm(&t)?);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (label, k) in doi_kernels()? {
        let direct = doi_apply(&k.kernel(), &e, &e, &t)?;
        let oracle = doi_apply_decomposed(&k, &e, &e, &t)?;
        let bound = k.mnorm_upper_bound(&e, &e)?;
        let residual = (&direct - &oracle).fro_norm() / ((1.0 + bound) * t_hs.max(f64::MIN_POSITIVE));
        let ratio = if t_op > 0.0 { op_norm(&direct)? / (bound * t_op) } else { 0.0 };
        rows.push(vec![num(s), label, k.len().to_string(), num(direct.fro_norm()), num(bound), num(residual), num(ratio)]);
        checks.push(("oracle_residual".to_string(), residual, 1e-9));
        checks.push(("op_ratio - 1".to_string(), ratio - 1.0, 1e-10));
    }
    Ok((rows, checks))
}

fn dk_functions() -> Vec<SmoothFunction> {
    vec![SmoothFunction::exp(), WienerFunction::sin(1.0).into(), WienerFunction::lorentzian().into()]
}

/// Daletskii–Krein derivative against a central difference.
fn dk_rows(model: &Model, config: &ScenarioConfig, k: usize) -> Result<PointOutput> {
    let s = point(config, k);
    let half_cell = 0.5 * (config.s_grid.end - config.s_grid.start) / config.s_grid.steps as f64;
    let h = 1e-4f64.min(0.5 * half_cell);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for f in dk_functions() {
        let dk = dk_derivative(&model.path.path, s, &f)?;
        let fd = fd_derivative(&model.path.path, s, &f, h)?;
        let norm = op_norm(&dk)?;
        let rel = op_norm(&(&dk - &fd))? / norm.max(f64::MIN_POSITIVE);
        rows.push(vec![num(s), f.label().to_string(), num(h), num(norm), num(rel)]);
        checks.push(("fd_rel_deviation".to_string(), rel, 1e-5));
    }
    Ok((rows, checks))
}

fn weightfn(config: &ScenarioConfig, echo: &str) -> Report {
    let mut csv = CsvBuilder::new(echo, WEIGHTFN_HEADER);
    let gamma = match config.gamma {
        Some(g) => Ok(g),
        None => model(config).map(|m| m.path.gamma),
    };
    let wf = match gamma.and_then(|g| build_weight_function(g, &config.weight_settings())) {
        Ok(wf) => wf,
        Err(e) => return failed(csv, &e, None),
    };
    let g = wf.gamma();
    csv.row(&["normalization".into(), num(0.0), num(wf.normalization)]);
    csv.row(&["first_moment".into(), num(0.0), num(wf.first_moment)]);
    csv.row(&["tail_ratio".into(), num(wf.t_max()), num(wf.tail_ratio)]);
    let t_span = 20.0 / g;
    let ts: Vec<f64> = (0..=400).map(|k| -t_span + 2.0 * t_span * k as f64 / 400.0).collect();
    for t in ts {
        csv.row(&["t".into(), num(t), num(wf.eval(t))]);
    }
    let xis: Vec<f64> = (0..=200).map(|k| 10.0 * g * k as f64 / 200.0).collect();
    let recon: Vec<f64> = xis.par_iter().map(|&xi| wf.reconstruct(xi)).collect();
    for (xi, r) in xis.iter().zip(&recon) {
        csv.row(&["xi".into(), num(*xi), num(*r)]);
    }
    let leak = xis.iter().zip(&recon).filter(|(xi, _)| **xi >= 1.05 * g).map(|(_, r)| r.abs()).fold(0.0, f64::max);
    let checks = vec![
        Check::new("|normalization - 1|", (wf.normalization - 1.0).abs(), 1e-8),
        Check::new("|first_moment|", wf.first_moment.abs(), 1e-8),
        Check::new("max |reconstructed| beyond 1.05 gamma", leak, 1e-6),
    ];
    csv.finish(checks, None)
}
