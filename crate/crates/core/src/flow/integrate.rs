//! The flow `U′(s) = iD(s)U(s)`, `U(s₀) = 1`, by the exponential midpoint
//! rule, and the check `P(s) = U(s)P(s₀)U(s)†`.

use super::hastings::{hastings_generator_at, HastingsMethod};
use super::patch::{riesz_derivative_eigenbasis, GappedPath, PatchState, DEFAULT_CONTOUR_NODES};
use super::weight::WeightFunction;
use crate::eigen::{exp_i_from_eig, hermitian_eig};
use crate::error::{Error, Result};
use crate::matrix::{commutator, ComplexMatrix, C64};
use crate::norms::op_norm;

#[derive(Clone, Debug)]
pub struct FlowSettings {
    pub contour_nodes: usize,
    pub method: HastingsMethod,
    /// Diagnostics and unitaries are kept at every `stride`-th grid point and
    /// at the last one.
    pub stride: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings { contour_nodes: DEFAULT_CONTOUR_NODES, method: HastingsMethod::ClosedForm, stride: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    pub s: f64,
    pub gap: f64,
    pub min_dist_to_contour: f64,
    /// `‖P′(s) − i[D(s), P(s)]‖_op`, `P′` by the contour rule.
    pub commutator_residual: f64,
    /// `‖U(s)P(s₀)U(s)† − P(s)‖_op`.
    pub transport_error: f64,
    /// `‖U(s)†U(s) − 1‖_op`.
    pub unitarity_defect: f64,
    pub rank: usize,
}

#[derive(Clone, Debug)]
pub struct FlowRecord {
    pub index: usize,
    pub s: f64,
    pub unitary: ComplexMatrix,
    pub projector: ComplexMatrix,
    pub diagnostics: StepDiagnostics,
}

#[derive(Clone, Debug)]
pub struct FlowFailure {
    pub s: f64,
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub s_grid: Vec<f64>,
    pub records: Vec<FlowRecord>,
    /// Set when the flow stopped early; `records` then end before the grid.
    pub failure: Option<FlowFailure>,
}

impl FlowResult {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn initial_projector(&self) -> Option<&ComplexMatrix> {
        self.records.first().map(|r| &r.projector)
    }
}

/// `n` equal steps from `start` to `end`.
pub fn uniform_grid(start: f64, end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| if k == steps { end } else { start + (end - start) * k as f64 / steps as f64 }).collect()
}

fn diagnostics(
    state: &PatchState,
    path: &GappedPath,
    wf: &WeightFunction,
    u: &ComplexMatrix,
    p0: &ComplexMatrix,
    method: HastingsMethod,
) -> Result<StepDiagnostics> {
    let dphi = path.path.phi_prime(state.s)?;
    let p = &state.patch.projector;
    let d = hastings_generator_at(&state.eig, &state.pvm, &dphi, wf, method)?;
    let p_prime = riesz_derivative_eigenbasis(&state.eig, &dphi, &state.contour)?;
    let i_comm = commutator(d.as_matrix(), p)?.scale(C64::new(0.0, 1.0));
    let transported = u.matmul(p0).mul_adjoint(u);
    let n = u.rows();
    Ok(StepDiagnostics {
        s: state.s,
        gap: state.patch.gap,
        min_dist_to_contour: state.contour.min_distance(state.eig.eigenvalues()),
        commutator_residual: op_norm(&(&p_prime - &i_comm))?,
        transport_error: op_norm(&(&transported - p))?,
        unitarity_defect: op_norm(&(&u.adjoint_mul(u) - &ComplexMatrix::identity(n)))?,
        rank: state.patch.rank(),
    })
}

fn record(
    index: usize,
    state: &PatchState,
    path: &GappedPath,
    wf: &WeightFunction,
    u: &ComplexMatrix,
    p0: &ComplexMatrix,
    method: HastingsMethod,
) -> Result<FlowRecord> {
    Ok(FlowRecord {
        index,
        s: state.s,
        unitary: u.clone(),
        projector: state.patch.projector.clone(),
        diagnostics: diagnostics(state, path, wf, u, p0, method)?,
    })
}

/// `U_{k+1} = exp(i h_k D(s_k + h_k/2)) U_k`. The patch is validated at every
/// midpoint and at every recorded grid point; a failure ends the flow and is
/// returned inside the result.
pub fn flow_integrate(path: &GappedPath, wf: &WeightFunction, s_grid: &[f64], settings: &FlowSettings) -> Result<FlowResult> {
    if s_grid.len() < 2 {
        return Err(Error::InvalidInput("flow grid needs at least two points".into()));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("flow grid must be strictly increasing".into()));
    }
    if settings.stride == 0 {
        return Err(Error::InvalidInput("diagnostics stride must be positive".into()));
    }
    let n = path.path.dim();
    let method = settings.method;
    let nodes = settings.contour_nodes;
    let last = s_grid.len() - 1;

    let state0 = path.state(s_grid[0], nodes)?;
    let p0 = state0.patch.projector.clone();
    let mut u = ComplexMatrix::identity(n);
    let mut records = vec![record(0, &state0, path, wf, &u, &p0, method)?];
    let mut failure = None;

    let fail = |s: f64, e: Error| FlowFailure { s, code: e.code(), message: e.to_string() };

    for k in 0..last {
        let (a, b) = (s_grid[k], s_grid[k + 1]);
        let h = b - a;
        let mid = a + 0.5 * h;
        let step = (|| -> Result<ComplexMatrix> {
            let state = path.state(mid, nodes)?;
            let dphi = path.path.phi_prime(mid)?;
            let d = hastings_generator_at(&state.eig, &state.pvm, &dphi, wf, method)?;
            Ok(exp_i_from_eig(&hermitian_eig(&d)?, h))
        })();
        match step {
            Ok(e) => u = e.matmul(&u),
            Err(err) => {
                failure = Some(fail(mid, err));
                break;
            }
        }
        let index = k + 1;
        if index % settings.stride == 0 || index == last {
            match path.state(b, nodes).and_then(|st| record(index, &st, path, wf, &u, &p0, method)) {
                Ok(r) => records.push(r),
                Err(err) => {
                    failure = Some(fail(b, err));
                    break;
                }
            }
        }
    }
    Ok(FlowResult { s_grid: s_grid.to_vec(), records, failure })
}

#[derive(Clone, Debug)]
pub struct AutomorphicReport {
    /// `(s, ‖U P(s₀) U† − P(s)‖_op, ‖U† P(s) U − P(s₀)‖_op)` per record.
    pub points: Vec<(f64, f64, f64)>,
    pub max_error: f64,
    pub mean_error: f64,
    pub max_conserved_error: f64,
    pub max_unitarity_defect: f64,
    pub rank_constant: bool,
}

pub fn verify_automorphic_equivalence(result: &FlowResult) -> Result<AutomorphicReport> {
    let p0 = result.initial_projector().ok_or_else(|| Error::InvalidInput("flow has no records".into()))?;
    let mut points = Vec::with_capacity(result.records.len());
    for r in &result.records {
        let forward = op_norm(&(&r.unitary.matmul(p0).mul_adjoint(&r.unitary) - &r.projector))?;
        let conserved = op_norm(&(&r.unitary.adjoint_mul(&r.projector).matmul(&r.unitary) - p0))?;
        points.push((r.s, forward, conserved));
    }
    let max_error = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let mean_error = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let max_conserved_error = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let max_unitarity_defect = result.records.iter().map(|r| r.diagnostics.unitarity_defect).fold(0.0, f64::max);
    let rank0 = result.records[0].diagnostics.rank;
    let rank_constant = result.records.iter().all(|r| r.diagnostics.rank == rank0);
    Ok(AutomorphicReport { points, max_error, mean_error, max_conserved_error, max_unitarity_defect, rank_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::weight::{build_weight_function, WeightFunctionSettings};
    use crate::matrix::{pauli, HermitianMatrix};
    use crate::perturbation::OperatorPath;

    fn two_level() -> GappedPath {
        let path = OperatorPath::linear(HermitianMatrix::new(pauli::z()).unwrap(), HermitianMatrix::new(pauli::x()).unwrap(), (0.0, 1.0))
            .unwrap();
        GappedPath::new("two_level", path, |s, _| {
            let low = -(1.0 + s * s).sqrt();
            (low - 0.25, low)
        }, 2.0)
    }

    #[test]
    fn constant_path_gives_identity() {
        let wf = build_weight_function(1.5, &WeightFunctionSettings::default()).unwrap();
        let path = GappedPath::new(
            "c",
            OperatorPath::constant(HermitianMatrix::new(pauli::z()).unwrap(), (0.0, 1.0)).unwrap(),
            |_, _| (-1.1, -0.9),
            1.5,
        );
        let r = flow_integrate(&path, &wf, &uniform_grid(0.0, 1.0, 10), &FlowSettings::default()).unwrap();
        assert!(r.completed());
        for rec in &r.records {
            assert!((&rec.unitary - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn two_level_transport_is_second_order() {
        let wf = build_weight_function(2.0, &WeightFunctionSettings::default()).unwrap();
        let path = two_level();
        let coarse = flow_integrate(&path, &wf, &uniform_grid(0.0, 1.0, 100), &FlowSettings::default()).unwrap();
        let fine = flow_integrate(&path, &wf, &uniform_grid(0.0, 1.0, 200), &FlowSettings::default()).unwrap();
        let (a, b) = (verify_automorphic_equivalence(&coarse).unwrap(), verify_automorphic_equivalence(&fine).unwrap());
        assert_eq!(a.points[0].1, 0.0);
        assert!(a.rank_constant && b.rank_constant);
        assert!(a.max_unitarity_defect < 1e-12);
        let ratio = a.max_error / b.max_error;
        assert!((3.0..=5.0).contains(&ratio), "{} / {} = {ratio}", a.max_error, b.max_error);
        assert!((a.max_conserved_error - a.max_error).abs() < 1e-12);
        for rec in &fine.records {
            assert!(rec.diagnostics.commutator_residual < 1e-6);
        }
    }

    #[test]
    fn gap_failure_stops_the_flow() {
        let wf = build_weight_function(2.0, &WeightFunctionSettings::default()).unwrap();
        let mut path = two_level();
        path.gamma = 2.2;
        let r = flow_integrate(&path, &wf, &uniform_grid(0.2, 1.0, 8), &FlowSettings::default());
        assert!(matches!(r, Err(Error::Gap { .. })));
        path.gamma = 2.05;
        let r = flow_integrate(&path, &wf, &uniform_grid(0.5, 0.0 + 1.0, 8), &FlowSettings::default()).unwrap();
        assert!(r.completed());
        let mut shrinking = two_level();
        shrinking.interval = std::sync::Arc::new(|s: f64, _: &[f64]| {
            let low = -(1.0 + s * s).sqrt();
            (low - 0.25, low + s)
        });
        let r = flow_integrate(&shrinking, &wf, &uniform_grid(0.0, 1.0, 10), &FlowSettings::default()).unwrap();
        let failure = r.failure.expect("gap closes");
        assert_eq!(failure.code, "gap");
        assert!(r.records.len() < 11);
    }
}
