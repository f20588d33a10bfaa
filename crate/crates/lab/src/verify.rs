//! The acceptance suite. Every criterion draws its instances from streams
//! derived from `(seed, criterion, instance)` and merges results in instance
//! order, so the summary does not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use doiflow_core::doi::{doi_apply, doi_apply_decomposed, schur_matrix};
use doiflow_core::flow::patch::riesz_projection;
use doiflow_core::flow::{
    build_weight_function, commutator_identity_check, detect_patch, flow_integrate, hastings_generator, uniform_grid,
    verify_automorphic_equivalence, Contour, FdScheme, FlowSettings, HastingsMethod, WeightFunction, WeightFunctionSettings,
};
use doiflow_core::kernels::{
    divided_difference_decomposed, exp_kernel, kernel_const_one, DecomposedKernel, Kernel, SmoothFunction, WienerFunction,
    DEFAULT_R_NODES, DEFAULT_T_DENSITY,
};
use doiflow_core::norms::{op_norm, trace_norm};
use doiflow_core::perturbation::{
    dk_derivative, duhamel_derivative, exp_difference_bound, f_difference, fd_derivative, spectral_pvm, OperatorPath,
    DEFAULT_DUHAMEL_NODES,
};
use doiflow_core::polarization::{quadratic_form_of, recover_operator_from_quadratic_form};
use doiflow_core::pvm::Region;
use doiflow_core::random::SplitMix64;
use doiflow_core::{hermitian_eig, FinitePVM, ProductPVM, Result, C64};

use crate::config::parse_config;
use crate::models;
use crate::report::{Check, Failure};
use crate::runner;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub criterion_id: u32,
    pub name: &'static str,
    pub status: Status,
    /// The most severe check, as `measured` against its `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Failure>,
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    run: fn(u64) -> Result<Vec<Check>>,
}

pub fn criteria() -> Vec<Criterion> {
    let c = |id, name, run| Criterion { id, name, run };
    vec![
        c(1, "pvm axioms and product consistency", c01_pvm),
        c(2, "polarization recovery", c02_polarization),
        c(3, "doi algebra", c03_algebra),
        c(4, "oracle equivalence", c04_oracle),
        c(5, "norm inequalities", c05_norms),
        c(6, "exponential difference", c06_exp_difference),
        c(7, "f(B) - f(A) identity", c07_f_difference),
        c(8, "daletskii-krein derivative", c08_dk),
        c(9, "duhamel formula", c09_duhamel),
        c(10, "weight function", c10_weight),
        c(11, "riesz projection", c11_riesz),
        c(12, "hastings generator equivalence", c12_hastings),
        c(13, "commutator identity", c13_commutator),
        c(14, "automorphic equivalence", c14_automorphic),
        c(15, "determinism", c15_determinism),
    ]
}

pub fn run_criterion(c: &Criterion, seed: u64) -> CriterionResult {
    let (checks, error) = match (c.run)(seed) {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(Failure::from_error(&e, None))),
    };
    let worst = checks.iter().max_by(|a, b| a.severity().total_cmp(&b.severity()));
    let (measured, tolerance) = worst.map(|w| (w.measured, w.tolerance)).unwrap_or((f64::NAN, 0.0));
    let passed = error.is_none() && !checks.is_empty() && checks.iter().all(|k| k.passed);
    CriterionResult {
        criterion_id: c.id,
        name: c.name,
        status: if passed { Status::Pass } else { Status::Fail },
        measured,
        tolerance,
        checks,
        error,
    }
}

/// Runs `ids` (all criteria when empty) in order.
pub fn run_suite(seed: u64, ids: &[u32]) -> Vec<CriterionResult> {
    criteria().iter().filter(|c| ids.is_empty() || ids.contains(&c.id)).map(|c| run_criterion(c, seed)).collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    passed: bool,
    criteria: &'a [CriterionResult],
}

/// The JSON summary written by `verify`.
pub fn summary_json(config_echo: Option<&str>, results: &[CriterionResult]) -> String {
    let summary = Summary {
        command: "verify",
        config: config_echo.map(|e| serde_json::from_str(e).expect("echo is JSON")),
        passed: results.iter().all(|r| r.status == Status::Pass),
        criteria: results,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

fn stream(seed: u64, criterion: u64, instance: usize) -> SplitMix64 {
    SplitMix64::derive(seed, criterion << 32 | instance as u64)
}

/// Largest value; NaN wins.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn par_instances<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

/// Spectrum with repeated levels, so atoms of rank above one are common.
fn random_pvm(rng: &mut SplitMix64, n: usize) -> Result<FinitePVM> {
    let levels = rng.range(1, n);
    let values: Vec<f64> = (0..levels).map(|_| rng.uniform(-3.0, 3.0)).collect();
    let spectrum: Vec<f64> = (0..n).map(|_| values[rng.range(0, levels - 1)]).collect();
    spectral_pvm(&hermitian_eig(&rng.hermitian_with_spectrum(&spectrum))?)
}

fn random_subset(rng: &mut SplitMix64, len: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..len).filter(|_| rng.next_u64() & 1 == 1).collect();
    if out.is_empty() {
        out.push(rng.range(0, len - 1));
    }
    out
}

fn c01_pvm(seed: u64) -> Result<Vec<Check>> {
    let rows = par_instances(200, |i| {
        let mut rng = stream(seed, 1, i);
        let (n, m) = (rng.range(1, 12), rng.range(1, 12));
        let e = random_pvm(&mut rng, n)?;
        let f = random_pvm(&mut rng, m)?;
        let axioms = e.check_axioms(f64::INFINITY)?.max(f.check_axioms(f64::INFINITY)?);
        let (gam, del) = (random_subset(&mut rng, e.len()), random_subset(&mut rng, f.len()));
        let (s, t) = (rng.matrix(n, m), rng.matrix(n, m));
        let region: Region = gam.iter().flat_map(|&a| del.iter().map(move |&b| (a, b))).collect();
        let g = ProductPVM::new(e.clone(), f.clone());
        let direct = s.hs_inner(&e.projector_of(&gam)?.matmul(&t).matmul(&f.projector_of(&del)?));
        let via_region = s.hs_inner(&g.apply(&region, &t)?);
        let weights = g.scalar_measure(&s, &t)?.weights;
        let via_measure: C64 = region.iter().map(|&ij| weights[ij]).sum();
        let scale = s.fro_norm() * t.fro_norm();
        Ok((axioms, (via_region - direct).norm().max((via_measure - direct).norm()) / scale))
    })?;
    Ok(vec![
        Check::new("projection axioms", worst(rows.iter().map(|r| r.0)), 1e-10),
        Check::new("Tr(S† G(Γ×Δ) T) = Tr(S† E(Γ) T F(Δ))", worst(rows.iter().map(|r| r.1)), 1e-10),
    ])
}

fn c02_polarization(seed: u64) -> Result<Vec<Check>> {
    let errs = par_instances(100, |i| {
        let mut rng = stream(seed, 2, i);
        let n = rng.range(1, 32);
        let scale = rng.uniform(0.1, 10.0);
        let m = rng.hermitian(n, scale);
        let rec = recover_operator_from_quadratic_form(quadratic_form_of(m.as_matrix()), n)?;
        Ok(op_norm(&(&rec.operator - m.as_matrix()))? / (1.0 + op_norm(m.as_matrix())?))
    })?;
    Ok(vec![Check::new("‖recovered − M‖ / (1 + ‖M‖)", worst(errs), 1e-12)])
}

/// Bounded trigonometric kernel plus a rational term.
fn random_kernel(rng: &mut SplitMix64) -> Kernel {
    let terms: Vec<(C64, f64, f64)> = (0..3).map(|_| (rng.complex_normal(), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))).collect();
    let c = rng.normal();
    Kernel::from_fn("random", move |x, y| {
        terms.iter().map(|&(a, p, q)| a * C64::from_polar(1.0, p * x + q * y)).sum::<C64>() + c / (1.0 + x * x + y * y)
    })
}

fn c03_algebra(seed: u64) -> Result<Vec<Check>> {
    let rows = par_instances(100, |i| {
        let mut rng = stream(seed, 3, i);
        let (n, m) = (rng.range(1, 16), rng.range(1, 16));
        let e = random_pvm(&mut rng, n)?;
        let f = random_pvm(&mut rng, m)?;
        let t = rng.matrix(n, m);
        let (k1, k2) = (random_kernel(&mut rng), random_kernel(&mut rng));
        let unit = (&doi_apply(&kernel_const_one(), &e, &f, &t)? - &t).fro_norm() / t.fro_norm();
        let joint = doi_apply(&k1.product(&k2), &e, &f, &t)?;
        let nested = doi_apply(&k1, &e, &f, &doi_apply(&k2, &e, &f, &t)?)?;
        let sup = |k: &Kernel| -> Result<f64> { Ok(schur_matrix(k, &e, &f)?.max_abs()) };
        let scale = sup(&k1)? * sup(&k2)? * t.fro_norm();
        Ok((unit, (&joint - &nested).fro_norm() / scale))
    })?;
    Ok(vec![
        Check::new("unit kernel acts as identity", worst(rows.iter().map(|r| r.0)), 1e-12),
        Check::new("multiplicativity", worst(rows.iter().map(|r| r.1)), 1e-9),
    ])
}

/// Every decomposed kernel the suite checks against its induced kernel.
fn decomposed_suite() -> Result<Vec<DecomposedKernel>> {
    let dd = |f: WienerFunction, per_unit, r| divided_difference_decomposed(&f, per_unit, r);
    let mut suite = vec![DecomposedKernel::const_one()];
    for t in [-3.0, -0.7, 1.3, 5.0] {
        suite.push(exp_kernel(t, DEFAULT_R_NODES)?);
    }
    suite.push(dd(WienerFunction::exp_i(1.0), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?);
    suite.push(dd(WienerFunction::cos(0.8), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?);
    let sin = dd(WienerFunction::sin(1.5), DEFAULT_T_DENSITY, DEFAULT_R_NODES)?;
    suite.push(sin.clone());
    suite.push(sin.conj_transpose());
    suite.push(dd(WienerFunction::lorentzian(), 8, 16)?);
    let sep = DecomposedKernel::separated("cos(x) e^{2iy}", 0.7, |x| C64::new(x.cos(), 0.0), |y| C64::from_polar(1.0, 2.0 * y));
    suite.push(sep.clone());
    suite.push(exp_kernel(-0.7, DEFAULT_R_NODES)?.sum(&sep));
    suite.push(exp_kernel(1.3, 16)?.product(&dd(WienerFunction::cos(0.8), DEFAULT_T_DENSITY, 16)?));
    Ok(suite)
}

fn c04_oracle(seed: u64) -> Result<Vec<Check>> {
    let suite = decomposed_suite()?;
    let per_kernel = 5;
    let errs = par_instances(suite.len() * per_kernel, |i| {
        let k = &suite[i / per_kernel];
        let mut rng = stream(seed, 4, i);
        let (n, m) = (rng.range(1, 8), rng.range(1, 8));
        let e = random_pvm(&mut rng, n)?;
        let f = random_pvm(&mut rng, m)?;
        let t = rng.matrix(n, m);
        let direct = doi_apply(&k.kernel(), &e, &f, &t)?;
        let oracle = doi_apply_decomposed(k, &e, &f, &t)?;
        let bound = k.mnorm_upper_bound(&e, &f)?;
        Ok((&direct - &oracle).fro_norm() / ((1.0 + bound) * t.fro_norm()))
    })?;
    Ok(vec![Check::new(format!("doi_apply vs decomposed on {} kernels", suite.len()), worst(errs), 1e-9)])
}

fn c05_norms(seed: u64) -> Result<Vec<Check>> {
    let suite = decomposed_suite()?;
    let rows = par_instances(100, |i| {
        let k = &suite[i % suite.len()];
        let mut rng = stream(seed, 5, i);
        let (n, m) = (rng.range(1, 8), rng.range(1, 8));
        let e = random_pvm(&mut rng, n)?;
        let f = random_pvm(&mut rng, m)?;
        let t = rng.matrix(n, m);
        let bound = k.mnorm_upper_bound(&e, &f)?;
        let sup = schur_matrix(&k.kernel(), &e, &f)?.max_abs();
        let d = doi_apply(&k.kernel(), &e, &f, &t)?;
        let op = op_norm(&d)? / (bound * op_norm(&t)?);
        let tr = trace_norm(&d)? / (bound * trace_norm(&t)?);
        Ok((sup / bound - 1.0, op - 1.0, tr - 1.0))
    })?;
    Ok(vec![
        Check::new("max|φ| / bound − 1", worst(rows.iter().map(|r| r.0)), 1e-10),
        Check::new("‖DOI T‖_op / (bound ‖T‖_op) − 1", worst(rows.iter().map(|r| r.1)), 1e-10),
        Check::new("‖DOI T‖_1 / (bound ‖T‖_1) − 1", worst(rows.iter().map(|r| r.2)), 1e-10),
    ])
}

fn c06_exp_difference(seed: u64) -> Result<Vec<Check>> {
    let excess = par_instances(100, |i| {
        let mut rng = stream(seed, 6, i);
        let n = rng.range(1, 16);
        let a_scale = rng.uniform(0.2, 3.0);
        let a = rng.hermitian(n, a_scale);
        let phi_scale = rng.uniform(0.01, 1.0);
        let phi = rng.hermitian(n, phi_scale);
        let t = rng.uniform(-5.0, 5.0);
        let b = exp_difference_bound(&a, &phi, t)?;
        Ok(b.lhs_norm - b.bound)
    })?;
    Ok(vec![Check::new("‖e^{itB} − e^{itA}‖ − |t|‖Φ‖", worst(excess), 1e-10)])
}

fn smooth_functions() -> Vec<SmoothFunction> {
    vec![SmoothFunction::exp(), WienerFunction::sin(1.0).into(), WienerFunction::lorentzian().into()]
}

fn c07_f_difference(seed: u64) -> Result<Vec<Check>> {
    let fs = smooth_functions();
    let rows = par_instances(50 * fs.len(), |i| {
        let f = &fs[i / 50];
        let mut rng = stream(seed, 7, i);
        let n = rng.range(1, 16);
        let a = rng.hermitian(n, 0.5);
        let phi_scale = rng.uniform(0.01, 0.5);
        let phi = rng.hermitian(n, phi_scale);
        let d = f_difference(&a, &phi, f)?;
        let unit = d.tolerance / 1e-8;
        Ok((d.residual / unit, d.swap_residual / unit))
    })?;
    Ok(vec![
        Check::new("‖DOI − (f(B) − f(A))‖ / (1 + ‖f(B)‖ + ‖f(A)‖)", worst(rows.iter().map(|r| r.0)), 1e-8),
        Check::new("measures interchanged", worst(rows.iter().map(|r| r.1)), 1e-8),
    ])
}

fn c08_dk(seed: u64) -> Result<Vec<Check>> {
    let domain = (-1.0, 2.0);
    let mut rng = stream(seed, 8, 0);
    let mut paths = vec![models::two_level(1.0, (0.0, 1.0), None)?.path.path];
    for family in 0..3 {
        let n = rng.range(2, 6);
        let h0 = rng.hermitian(n, 1.0);
        let path = match family {
            0 => OperatorPath::linear(h0, rng.hermitian(n, 1.0), domain)?,
            1 => OperatorPath::polynomial(h0, vec![rng.hermitian(n, 1.0), rng.hermitian(n, 0.5)], domain)?,
            _ => {
                let omega = rng.uniform(0.5, 3.0);
                OperatorPath::trigonometric(h0, rng.hermitian(n, 1.0), rng.hermitian(n, 1.0), omega, domain)?
            }
        };
        paths.push(path);
    }
    let fs = smooth_functions();
    let points = [0.25, 0.8];
    let cases: Vec<(usize, usize, f64)> =
        (0..paths.len()).flat_map(|p| (0..fs.len()).flat_map(move |f| points.map(move |s| (p, f, s)))).collect();
    let rows = par_instances(cases.len(), |i| {
        let (p, f, s) = cases[i];
        let (path, f) = (&paths[p], &fs[f]);
        let dk = dk_derivative(path, s, f)?;
        let err = |h: f64| -> Result<f64> { op_norm(&(&dk - &fd_derivative(path, s, f, h)?)) };
        let rel = err(1e-4)? / op_norm(&dk)?;
        let ratio = err(1e-3)? / err(5e-4)?;
        Ok((rel, (ratio - 4.0).abs()))
    })?;
    Ok(vec![
        Check::new("relative deviation from central difference, h = 1e-4", worst(rows.iter().map(|r| r.0)), 1e-5),
        Check::new("|e(1e-3)/e(5e-4) − 4|", worst(rows.iter().map(|r| r.1)), 1.0),
    ])
}

fn c09_duhamel(_seed: u64) -> Result<Vec<Check>> {
    let path = models::two_level(1.0, (0.0, 1.0), None)?.path.path;
    let cases: Vec<(f64, f64)> =
        [0.0, 0.5, 1.0].iter().flat_map(|&s| [-5.0, -3.0, -1.0, -0.25, 0.5, 2.0, 5.0].map(|t| (s, t))).collect();
    let errs = par_instances(cases.len(), |i| {
        let (s, t) = cases[i];
        let quad = duhamel_derivative(&path, s, t, DEFAULT_DUHAMEL_NODES)?;
        let dk = dk_derivative(&path, s, &WienerFunction::exp_i(t).into())?;
        op_norm(&(&quad - &dk))
    })?;
    Ok(vec![Check::new("‖Duhamel − DK(φ_t)‖_op, |t| ≤ 5", worst(errs), 1e-8)])
}

fn c10_weight(_seed: u64) -> Result<Vec<Check>> {
    let gammas = [0.5, 1.0, 2.0, 5.0];
    let rows = par_instances(gammas.len(), |i| {
        let g = gammas[i];
        let wf = build_weight_function(g, &WeightFunctionSettings::default())?;
        let leak = worst((0..200).map(|k| wf.reconstruct(g * (1.05 + (10.0 - 1.05) * k as f64 / 199.0)).abs()));
        Ok(((wf.normalization - 1.0).abs(), leak, wf.first_moment.abs()))
    })?;
    Ok(vec![
        Check::new("|∫w − 1|", worst(rows.iter().map(|r| r.0)), 1e-8),
        Check::new("|ŵ| on 1.05γ ≤ |ξ| ≤ 10γ", worst(rows.iter().map(|r| r.1)), 1e-6),
        Check::new("|∫t w|", worst(rows.iter().map(|r| r.2)), 1e-8),
    ])
}

fn c11_riesz(seed: u64) -> Result<Vec<Check>> {
    let errs = par_instances(20, |i| {
        let mut rng = stream(seed, 11, i);
        let n = rng.range(2, 16);
        let gamma = rng.uniform(0.5, 2.0);
        let width = rng.uniform(0.0, gamma);
        let inside = rng.range(1, n - 1);
        let mut spectrum = Vec::with_capacity(n);
        for k in 0..n {
            let x = if k < inside {
                match k {
                    0 => 0.0,
                    1 => width,
                    _ => rng.uniform(0.0, width),
                }
            } else if rng.next_u64() & 1 == 0 {
                rng.uniform(width + gamma, width + gamma + 3.0)
            } else {
                rng.uniform(-gamma - 3.0, -gamma)
            };
            spectrum.push(x);
        }
        let h = rng.hermitian_with_spectrum(&spectrum);
        let eig = hermitian_eig(&h)?;
        let interval = (0.0, width);
        let exact = detect_patch(&spectral_pvm(&eig)?, interval, gamma)?.projector;
        let wide = Contour::around(interval, gamma, 64)?;
        // the circle passes 0.35γ from the interval, just outside the γ/3 margin
        let tight = Contour::new(0.5 * width, width + 0.7 * gamma, 64, gamma / 3.0)?;
        let mut e: f64 = 0.0;
        for c in [wide, tight] {
            e = e.max(op_norm(&(&riesz_projection(&h, eig.eigenvalues(), &c)? - &exact))?);
        }
        Ok(e)
    })?;
    Ok(vec![Check::new("‖P_contour − P_spectral‖_op, 64 nodes", worst(errs), 1e-10)])
}

fn c12_hastings(seed: u64) -> Result<Vec<Check>> {
    let errs = par_instances(20, |i| {
        let mut rng = stream(seed, 12, i);
        let n = rng.range(2, 16);
        let g = rng.uniform(1.0, 3.0);
        let model = models::random_gapped(n, g, 0.25 * g, rng.next_u64(), (0.0, 1.0), None)?;
        let s = rng.uniform(0.0, 1.0);
        let wf = build_weight_function(model.path.gamma, &WeightFunctionSettings::default())?;
        let closed = hastings_generator(&model.path, s, &wf, HastingsMethod::ClosedForm)?;
        let nested = hastings_generator(&model.path, s, &wf, HastingsMethod::Quadrature { u_nodes: 8 })?;
        op_norm(&(closed.as_matrix() - nested.as_matrix()))
    })?;
    Ok(vec![Check::new("‖D_closed − D_nested‖_op", worst(errs), 1e-6)])
}

fn commutator_residuals(model: &models::Model, wf: &WeightFunction) -> Result<Vec<f64>> {
    let samples = uniform_grid(model.domain.0, model.domain.1, 4);
    samples
        .par_iter()
        .map(|&s| Ok(commutator_identity_check(&model.path, s, wf, 64, FdScheme::None)?.residual))
        .collect()
}

fn c13_commutator(seed: u64) -> Result<Vec<Check>> {
    let mut small = Vec::new();
    for (k, n) in [5usize, 16].into_iter().enumerate() {
        let model = models::random_gapped(n, 2.0, 0.5, stream(seed, 13, k).next_u64(), (0.0, 1.0), None)?;
        let wf = build_weight_function(model.path.gamma, &WeightFunctionSettings::default())?;
        small.extend(commutator_residuals(&model, &wf)?);
    }
    let mut tfim = Vec::new();
    for sites in [6, 8] {
        let model = models::tfim(sites, (0.0, 1.0), None)?;
        let wf = build_weight_function(model.path.gamma, &WeightFunctionSettings::default())?;
        tfim.extend(commutator_residuals(&model, &wf)?);
    }
    Ok(vec![
        Check::new("‖P′ − i[D,P]‖_op, random_gapped dims 5 and 16", worst(small), 1e-6),
        Check::new("‖P′ − i[D,P]‖_op, tfim 6 and 8 sites", worst(tfim), 1e-5),
    ])
}

fn c14_automorphic(_seed: u64) -> Result<Vec<Check>> {
    let two = models::two_level(1.0, (0.0, 1.0), None)?;
    let wf2 = build_weight_function(two.path.gamma, &WeightFunctionSettings::default())?;
    let run = |steps: usize, stride: usize| -> Result<_> {
        let settings = FlowSettings { stride, ..Default::default() };
        let r = flow_integrate(&two.path, &wf2, &uniform_grid(0.0, 1.0, steps), &settings)?;
        Ok((r.completed(), verify_automorphic_equivalence(&r)?))
    };
    let (ok_a, a) = run(1000, 1)?;
    let (ok_b, b) = run(2000, 2)?;

    let tfim = models::tfim(6, (0.0, 1.0), None)?;
    let wf = build_weight_function(tfim.path.gamma, &WeightFunctionSettings::default())?;
    let settings = FlowSettings { stride: 20, ..Default::default() };
    let r = flow_integrate(&tfim.path, &wf, &uniform_grid(0.0, 1.0, 2000), &settings)?;
    let t = verify_automorphic_equivalence(&r)?;

    Ok(vec![
        Check::new("two_level, 1000 steps: max ‖U P(0) U† − P(s)‖", a.max_error, 1e-4),
        Check::new("two_level: |e(1000)/e(2000) − 4|", (a.max_error / b.max_error - 4.0).abs(), 1.0),
        Check::new("two_level: unitarity defect", a.max_unitarity_defect.max(b.max_unitarity_defect), 1e-8),
        Check::flag("two_level: flow completed with constant rank", ok_a && ok_b && a.rank_constant && b.rank_constant),
        Check::new("tfim 6 sites, 2000 steps: max ‖U P(0) U† − P(s)‖", t.max_error, 1e-3),
        Check::new("tfim: unitarity defect", t.max_unitarity_defect, 1e-8),
        Check::flag("tfim: flow completed with constant rank", r.completed() && t.rank_constant),
    ])
}

/// Criteria and a flow report rendered under two pool sizes.
fn determinism_artifacts(seed: u64) -> Result<Vec<String>> {
    let mut out: Vec<String> = run_suite(seed, &[1, 3, 4, 6]).iter().map(|r| serde_json::to_string(r).expect("serializes")).collect();
    let config = parse_config(
        r#"{"command": "flow", "model": {"name": "random_gapped", "params": {"dim": 6}}, "s_grid": {"steps": 50}}"#,
    )
    .expect("built-in config parses");
    let mut config = config;
    config.seed = seed;
    out.push(runner::run(&config).body);
    Ok(out)
}

fn c15_determinism(seed: u64) -> Result<Vec<Check>> {
    let in_pool = |threads: usize| -> Result<Vec<String>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| determinism_artifacts(seed))
    };
    let (one, four, again) = (in_pool(1)?, in_pool(4)?, in_pool(4)?);
    let differing = one.iter().zip(&four).zip(&again).filter(|((a, b), c)| a != b || b != c).count();
    Ok(vec![Check::new(format!("artifacts differing across 1/4/4 workers (of {})", one.len()), differing as f64, 0.0)])
}
