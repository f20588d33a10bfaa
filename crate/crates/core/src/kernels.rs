//! Scalar kernels `φ(x, y)`, their finite decompositions
//! `φ(x,y) = Σ_z ν_z α_z(x) β_z(y)`, and Wiener-class functions
//! `f(x) = ∫ e^{itx} dμ(t)` with their divided-difference kernels.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::C64;
use crate::pvm::FinitePVM;
use crate::quadrature::QuadratureRule;

pub type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// Side of the grid used to spot-check a kernel on its declared rectangle.
const SPOT_CHECK_GRID: usize = 32;

/// Relative diagonal threshold for divided differences.
pub const DEFAULT_DIAG_TOL: f64 = 1e-7;
/// Gauss–Legendre nodes for the `r ∈ [0,1]` integral of `φ_t`.
pub const DEFAULT_R_NODES: usize = 32;

pub fn scalar_fn(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

#[derive(Clone)]
pub struct Kernel {
    f: KernelFn,
    label: String,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({})", self.label)
    }
}

impl Kernel {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static) -> Self {
        Kernel { f: Arc::new(f), label: label.into() }
    }

    /// A kernel declared finite on `[-radius, radius]^2`, spot-checked on a
    /// 32x32 grid.
    pub fn new(
        label: impl Into<String>,
        radius: f64,
        f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let k = Self::from_fn(label, f);
        k.check_rectangle(radius)?;
        Ok(k)
    }

    pub fn check_rectangle(&self, radius: f64) -> Result<()> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidInput(format!("rectangle radius {radius}")));
        }
        let step = 2.0 * radius / (SPOT_CHECK_GRID - 1) as f64;
        for i in 0..SPOT_CHECK_GRID {
            for j in 0..SPOT_CHECK_GRID {
                let (x, y) = (-radius + i as f64 * step, -radius + j as f64 * step);
                let v = self.eval(x, y);
                if !v.is_finite() {
                    return Err(Error::Domain(format!("kernel {} is {v} at ({x}, {y})", self.label)));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        (self.f)(x, y)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn product(&self, other: &Kernel) -> Kernel {
        let (a, b) = (self.f.clone(), other.f.clone());
        Kernel::from_fn(format!("({})*({})", self.label, other.label), move |x, y| a(x, y) * b(x, y))
    }

    pub fn sum(&self, other: &Kernel) -> Kernel {
        let (a, b) = (self.f.clone(), other.f.clone());
        Kernel::from_fn(format!("({})+({})", self.label, other.label), move |x, y| a(x, y) + b(x, y))
    }

    pub fn scale(&self, c: C64) -> Kernel {
        let a = self.f.clone();
        Kernel::from_fn(format!("{c}*({})", self.label), move |x, y| c * a(x, y))
    }

    /// `k̃*(x, y) = conj(k(y, x))`, the kernel of the adjoint integral.
    pub fn conj_transpose(&self) -> Kernel {
        let a = self.f.clone();
        Kernel::from_fn(format!("adj({})", self.label), move |x, y| a(y, x).conj())
    }
}

pub fn kernel_const_one() -> Kernel {
    Kernel::from_fn("1", |_, _| C64::new(1.0, 0.0))
}

/// `φ(x, y) = α(x)`.
pub fn kernel_left(alpha: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Kernel {
    Kernel::from_fn("left", move |x, _| alpha(x))
}

/// `φ(x, y) = β(y)`.
pub fn kernel_right(beta: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Kernel {
    Kernel::from_fn("right", move |_, y| beta(y))
}

#[derive(Clone)]
pub struct Component {
    /// `ν_z > 0`; phases live in `alpha`.
    pub weight: f64,
    pub alpha: ScalarFn,
    pub beta: ScalarFn,
}

/// `φ(x, y) = Σ_z ν_z α_z(x) β_z(y)` over a finite index set `Z`.
#[derive(Clone, Default)]
pub struct DecomposedKernel {
    components: Vec<Component>,
    label: String,
}

impl fmt::Debug for DecomposedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DecomposedKernel({}, |Z| = {})", self.label, self.components.len())
    }
}

impl DecomposedKernel {
    pub fn new(label: impl Into<String>, components: Vec<Component>) -> Result<Self> {
        for (z, c) in components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::InvalidInput(format!("component {z} has weight {}", c.weight)));
            }
        }
        Ok(DecomposedKernel { components, label: label.into() })
    }

    /// The empty decomposition, inducing `φ ≡ 0`.
    pub fn zero() -> Self {
        DecomposedKernel { components: Vec::new(), label: "0".into() }
    }

    /// One component with `ν = 1`, `α = β ≡ 1`.
    pub fn const_one() -> Self {
        Self::separated("1", 1.0, |_| C64::new(1.0, 0.0), |_| C64::new(1.0, 0.0))
    }

    /// `ν α(x) β(y)` as a single component; `weight` must be positive.
    pub fn separated(
        label: impl Into<String>,
        weight: f64,
        alpha: impl Fn(f64) -> C64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        assert!(weight > 0.0, "component weight must be positive");
        DecomposedKernel {
            components: vec![Component { weight, alpha: Arc::new(alpha), beta: Arc::new(beta) }],
            label: label.into(),
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        self.components.iter().map(|c| (c.alpha)(x) * (c.beta)(y) * c.weight).sum()
    }

    /// The induced kernel.
    pub fn kernel(&self) -> Kernel {
        let me = self.clone();
        Kernel::from_fn(self.label.clone(), move |x, y| me.eval(x, y))
    }

    /// `Z = Z₁ ⊔ Z₂`.
    pub fn sum(&self, other: &DecomposedKernel) -> DecomposedKernel {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        DecomposedKernel { components, label: format!("({})+({})", self.label, other.label) }
    }

    /// `Z = Z₁ × Z₂`, `ν = ν₁ × ν₂`, `α = α₁α₂`, `β = β₁β₂`.
    pub fn product(&self, other: &DecomposedKernel) -> DecomposedKernel {
        let mut components = Vec::with_capacity(self.len() * other.len());
        for a in &self.components {
            for b in &other.components {
                let (a1, a2) = (a.alpha.clone(), b.alpha.clone());
                let (b1, b2) = (a.beta.clone(), b.beta.clone());
                components.push(Component {
                    weight: a.weight * b.weight,
                    alpha: Arc::new(move |x| a1(x) * a2(x)),
                    beta: Arc::new(move |y| b1(y) * b2(y)),
                });
            }
        }
        DecomposedKernel { components, label: format!("({})*({})", self.label, other.label) }
    }

    /// Pointwise conjugate `(α*, β*)`, same weights.
    pub fn conj(&self) -> DecomposedKernel {
        let components = self
            .components
            .iter()
            .map(|c| {
                let (a, b) = (c.alpha.clone(), c.beta.clone());
                Component {
                    weight: c.weight,
                    alpha: Arc::new(move |x| a(x).conj()),
                    beta: Arc::new(move |y| b(y).conj()),
                }
            })
            .collect();
        DecomposedKernel { components, label: format!("conj({})", self.label) }
    }

    /// Decomposition of `k̃*(x,y) = conj(k(y,x))`: swap and conjugate.
    pub fn conj_transpose(&self) -> DecomposedKernel {
        let components = self
            .components
            .iter()
            .map(|c| {
                let (a, b) = (c.alpha.clone(), c.beta.clone());
                Component {
                    weight: c.weight,
                    alpha: Arc::new(move |x| b(x).conj()),
                    beta: Arc::new(move |y| a(y).conj()),
                }
            })
            .collect();
        DecomposedKernel { components, label: format!("adj({})", self.label) }
    }

    /// Cost of this decomposition on the atoms of `E` and `F`:
    /// `Σ_z ν_z max_i |α_z(x_i)| max_j |β_z(y_j)|`.
    pub fn mnorm_upper_bound(&self, e: &FinitePVM, f: &FinitePVM) -> Result<f64> {
        self.mnorm_upper_bound_on(&e.locations(), &f.locations())
    }

    pub fn mnorm_upper_bound_on(&self, xs: &[f64], ys: &[f64]) -> Result<f64> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::InvalidInput("mnorm bound needs nonempty atom lists".into()));
        }
        let sup = |g: &ScalarFn, pts: &[f64]| pts.iter().map(|&p| g(p).norm()).fold(0.0, f64::max);
        Ok(self.components.iter().map(|c| c.weight * sup(&c.alpha, xs) * sup(&c.beta, ys)).sum())
    }
}

/// `φ_t(x,y) = ∫₀¹ it e^{itxr} e^{ity(1−r)} dr` with Gauss–Legendre in `r`.
///
/// The rule integrates `e^{it(x−y)r}` to about 1e-12 while
/// `|t|·|x−y| ≤ 2·r_nodes` (32 nodes: up to 64; 16 nodes: up to 30).
pub fn exp_kernel(t: f64, r_nodes: usize) -> Result<DecomposedKernel> {
    if r_nodes < 2 {
        return Err(Error::InvalidInput(format!("r_nodes = {r_nodes}, need at least 2")));
    }
    if t == 0.0 {
        return Ok(DecomposedKernel::zero());
    }
    let rule = QuadratureRule::on_interval(r_nodes, 0.0, 1.0);
    Ok(DecomposedKernel { components: exp_components(t, C64::new(1.0, 0.0), &rule), label: format!("phi_t(t={t})") })
}

/// Components of `m·φ_t` for one Fourier atom `(t, m)`.
fn exp_components(t: f64, m: C64, rule: &QuadratureRule) -> Vec<Component> {
    let phase = C64::new(0.0, t.signum()) * (m / m.norm());
    rule.iter()
        .map(|(r, g)| Component {
            weight: t.abs() * m.norm() * g,
            alpha: Arc::new(move |x| phase * C64::from_polar(1.0, t * x * r)),
            beta: Arc::new(move |y| C64::from_polar(1.0, t * y * (1.0 - r))),
        })
        .collect()
}

/// A density part of a Fourier measure, truncated to `[-cutoff, cutoff]`.
#[derive(Clone)]
pub struct FourierDensity {
    pub density: ScalarFn,
    pub cutoff: f64,
    /// Points of non-smoothness inside the cutoff; quadrature panels split there.
    pub breaks: Vec<f64>,
}

/// `μ = Σ atoms + density`, discretized on demand.
#[derive(Clone, Default)]
pub struct FourierMeasure {
    pub atoms: Vec<(f64, C64)>,
    pub density: Option<FourierDensity>,
}

impl fmt::Debug for FourierMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierMeasure")
            .field("atoms", &self.atoms)
            .field("density_cutoff", &self.density.as_ref().map(|d| d.cutoff))
            .finish()
    }
}

/// Gauss–Legendre nodes per unit length of `t` for density discretization.
pub const DEFAULT_T_DENSITY: usize = 32;

impl FourierMeasure {
    pub fn atoms(atoms: Vec<(f64, C64)>) -> Result<Self> {
        if atoms.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite Fourier atom".into()));
        }
        Ok(FourierMeasure { atoms, density: None })
    }

    /// Point masses plus quadrature points of the density, with about
    /// `per_unit` Gauss–Legendre nodes per unit of `t`.
    pub fn discretize(&self, per_unit: usize) -> Vec<(f64, C64)> {
        let mut points = self.atoms.clone();
        if let Some(d) = &self.density {
            let mut edges = vec![-d.cutoff];
            edges.extend(d.breaks.iter().copied().filter(|b| b.abs() < d.cutoff));
            edges.push(d.cutoff);
            const ORDER: usize = 16;
            for w in edges.windows(2) {
                let len = w[1] - w[0];
                let panels = ((len * per_unit as f64) / ORDER as f64).ceil().max(1.0) as usize;
                let rule = QuadratureRule::composite(w[0], w[1], panels, ORDER);
                points.extend(rule.iter().map(|(t, g)| (t, (d.density)(t) * g)));
            }
        }
        points
    }

    /// `∫ |t| d|μ|(t)`, by the default discretization.
    pub fn abs_first_moment(&self) -> f64 {
        self.discretize(DEFAULT_T_DENSITY).iter().map(|(t, w)| t.abs() * w.norm()).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.discretize(DEFAULT_T_DENSITY).iter().map(|(_, w)| w.norm()).sum()
    }
}

/// `f(x) = ∫ e^{itx} dμ(t)`, optionally with a closed form `(f, f′)`.
#[derive(Clone)]
pub struct WienerFunction {
    pub label: String,
    pub measure: FourierMeasure,
    pub closed_form: Option<(ScalarFn, ScalarFn)>,
    points: Arc<Vec<(f64, C64)>>,
}

impl fmt::Debug for WienerFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WienerFunction({})", self.label)
    }
}

impl WienerFunction {
    pub fn new(label: impl Into<String>, measure: FourierMeasure, closed_form: Option<(ScalarFn, ScalarFn)>) -> Self {
        let points = Arc::new(measure.discretize(DEFAULT_T_DENSITY));
        WienerFunction { label: label.into(), measure, closed_form, points }
    }

    /// `e^{iax}`: a unit point mass at `a`.
    pub fn exp_i(a: f64) -> Self {
        let m = FourierMeasure::atoms(vec![(a, C64::new(1.0, 0.0))]).expect("finite atom");
        Self::new(
            format!("exp(i*{a}*x)"),
            m,
            Some((
                scalar_fn(move |x| C64::from_polar(1.0, a * x)),
                scalar_fn(move |x| C64::new(0.0, a) * C64::from_polar(1.0, a * x)),
            )),
        )
    }

    /// `cos(ax)`: atoms `±a` with weight ½.
    pub fn cos(a: f64) -> Self {
        let half = C64::new(0.5, 0.0);
        let m = FourierMeasure::atoms(vec![(-a, half), (a, half)]).expect("finite atoms");
        Self::new(
            format!("cos({a}*x)"),
            m,
            Some((scalar_fn(move |x| C64::new((a * x).cos(), 0.0)), scalar_fn(move |x| C64::new(-a * (a * x).sin(), 0.0)))),
        )
    }

    /// `sin(ax)`: atoms `±a` with weights `∓i/2`.
    pub fn sin(a: f64) -> Self {
        let m = FourierMeasure::atoms(vec![(-a, C64::new(0.0, 0.5)), (a, C64::new(0.0, -0.5))]).expect("finite atoms");
        Self::new(
            format!("sin({a}*x)"),
            m,
            Some((scalar_fn(move |x| C64::new((a * x).sin(), 0.0)), scalar_fn(move |x| C64::new(a * (a * x).cos(), 0.0)))),
        )
    }

    /// `1/(1+x²)` with density `½e^{-|t|}`, truncated where the tail mass
    /// `e^{-L}` drops below 1e-10.
    pub fn lorentzian() -> Self {
        let cutoff = (1e10f64).ln().ceil();
        let density = FourierDensity {
            density: scalar_fn(|t| C64::new(0.5 * (-t.abs()).exp(), 0.0)),
            cutoff,
            breaks: vec![0.0],
        };
        Self::new(
            "1/(1+x^2)",
            FourierMeasure { atoms: Vec::new(), density: Some(density) },
            Some((
                scalar_fn(|x| C64::new(1.0 / (1.0 + x * x), 0.0)),
                scalar_fn(|x| C64::new(-2.0 * x / (1.0 + x * x).powi(2), 0.0)),
            )),
        )
    }

    /// Evaluation through the measure, `Σ_k m_k e^{i t_k x}`.
    pub fn eval_measure(&self, x: f64) -> C64 {
        self.points.iter().map(|&(t, m)| m * C64::from_polar(1.0, t * x)).sum()
    }

    pub fn deriv_measure(&self, x: f64) -> C64 {
        self.points.iter().map(|&(t, m)| m * C64::new(0.0, t) * C64::from_polar(1.0, t * x)).sum()
    }

    pub fn abs_first_moment(&self) -> f64 {
        self.points.iter().map(|(t, w)| t.abs() * w.norm()).sum()
    }

    /// Largest `|f_measure − f_closed|` over `grid`; 0 without a closed form.
    pub fn closed_form_deviation(&self, grid: &[f64]) -> f64 {
        match &self.closed_form {
            Some((f, _)) => grid.iter().map(|&x| (self.eval_measure(x) - f(x)).norm()).fold(0.0, f64::max),
            None => 0.0,
        }
    }
}

pub fn wiener_eval(f: &WienerFunction, x: f64) -> C64 {
    f.eval_measure(x)
}

pub fn wiener_deriv(f: &WienerFunction, x: f64) -> C64 {
    f.deriv_measure(x)
}

/// A `C¹` function given either by its Fourier measure or explicitly.
#[derive(Clone)]
pub enum SmoothFunction {
    Wiener(WienerFunction),
    Explicit { label: String, f: ScalarFn, df: ScalarFn },
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFunction({})", self.label())
    }
}

impl SmoothFunction {
    pub fn explicit(
        label: impl Into<String>,
        f: impl Fn(f64) -> C64 + Send + Sync + 'static,
        df: impl Fn(f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFunction::Explicit { label: label.into(), f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn exp() -> Self {
        Self::explicit("exp", |x| C64::new(x.exp(), 0.0), |x| C64::new(x.exp(), 0.0))
    }

    pub fn identity() -> Self {
        Self::explicit("x", |x| C64::new(x, 0.0), |_| C64::new(1.0, 0.0))
    }

    pub fn square() -> Self {
        Self::explicit("x^2", |x| C64::new(x * x, 0.0), |x| C64::new(2.0 * x, 0.0))
    }

    pub fn label(&self) -> &str {
        match self {
            SmoothFunction::Wiener(w) => &w.label,
            SmoothFunction::Explicit { label, .. } => label,
        }
    }

    /// `(f, f′)`: the closed form when one is known, else the measure.
    pub fn pair(&self) -> (ScalarFn, ScalarFn) {
        match self {
            SmoothFunction::Wiener(w) => match &w.closed_form {
                Some((f, df)) => (f.clone(), df.clone()),
                None => {
                    let (a, b) = (w.clone(), w.clone());
                    (scalar_fn(move |x| a.eval_measure(x)), scalar_fn(move |x| b.deriv_measure(x)))
                }
            },
            SmoothFunction::Explicit { f, df, .. } => (f.clone(), df.clone()),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        (self.pair().0)(x)
    }

    pub fn wiener(&self) -> Option<&WienerFunction> {
        match self {
            SmoothFunction::Wiener(w) => Some(w),
            SmoothFunction::Explicit { .. } => None,
        }
    }
}

impl From<WienerFunction> for SmoothFunction {
    fn from(w: WienerFunction) -> Self {
        SmoothFunction::Wiener(w)
    }
}

/// Loewner kernel `φ_f`: the difference quotient off the diagonal and
/// `f′((x+y)/2)` when `|x−y| ≤ diag_tol·max(1,|x|,|y|)`.
pub fn divided_difference_kernel(f: &SmoothFunction, diag_tol: f64) -> Result<Kernel> {
    if !(diag_tol.is_finite() && diag_tol >= 0.0) {
        return Err(Error::InvalidInput(format!("diag_tol = {diag_tol}")));
    }
    let (func, deriv) = f.pair();
    Ok(Kernel::from_fn(format!("dd[{}]", f.label()), move |x, y| {
        let scale = 1.0f64.max(x.abs()).max(y.abs());
        if (x - y).abs() <= diag_tol * scale {
            deriv(0.5 * (x + y))
        } else {
            (func(x) - func(y)) / (x - y)
        }
    }))
}

/// `φ_f = ∫ φ_t dμ(t)`: every discretized Fourier point `(t, m)` contributes
/// `m·φ_t` with `r_nodes` Gauss–Legendre nodes; densities use `t_per_unit`
/// nodes per unit of `t`.
pub fn divided_difference_decomposed(f: &WienerFunction, t_per_unit: usize, r_nodes: usize) -> Result<DecomposedKernel> {
    if r_nodes < 2 || t_per_unit == 0 {
        return Err(Error::InvalidInput(format!("t_per_unit = {t_per_unit}, r_nodes = {r_nodes}")));
    }
    let rule = QuadratureRule::on_interval(r_nodes, 0.0, 1.0);
    let components = f
        .measure
        .discretize(t_per_unit)
        .into_iter()
        .filter(|&(t, m)| t != 0.0 && m.norm() > 0.0)
        .flat_map(|(t, m)| exp_components(t, m, &rule))
        .collect();
    Ok(DecomposedKernel { components, label: format!("dd[{}]", f.label) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn elementary_kernels() {
        assert_eq!(kernel_const_one().eval(3.7, -2.0), re(1.0));
        assert_eq!(kernel_left(|x| re(x * x)).eval(2.0, 99.0), re(4.0));
        assert_eq!(kernel_right(|y| re(y.exp())).eval(99.0, 0.0), re(1.0));
    }

    #[test]
    fn rectangle_spot_check() {
        assert!(Kernel::new("inv", 1.0, |x, _| re(1.0 / x)).is_ok());
        assert!(matches!(Kernel::new("log", 1.0, |x, _| re((x + 1.0).ln())), Err(Error::Domain(_))));
    }

    #[test]
    fn decomposed_algebra() {
        let kx = DecomposedKernel::separated("x", 1.0, re, |_| re(1.0));
        let ky = DecomposedKernel::separated("y", 1.0, |_| re(1.0), re);
        let prod = kx.product(&ky);
        for &x in &grid(5, -2.0, 2.0) {
            for &y in &grid(5, -1.0, 3.0) {
                assert!((prod.eval(x, y) - re(x * y)).norm() < 1e-15);
            }
        }
        let k = exp_kernel(1.3, 16).unwrap();
        let s = k.sum(&DecomposedKernel::zero());
        assert_eq!(s.len(), k.len());
        let one = k.product(&DecomposedKernel::const_one());
        assert!((one.eval(0.4, -0.2) - k.eval(0.4, -0.2)).norm() < 1e-15);
    }

    #[test]
    fn mnorm_bounds() {
        let xs = [0.0, 1.0];
        assert_eq!(DecomposedKernel::const_one().mnorm_upper_bound_on(&xs, &xs).unwrap(), 1.0);
        let k = DecomposedKernel::separated("k", 2.0, |_| re(3.0), |_| re(5.0));
        assert_eq!(k.mnorm_upper_bound_on(&xs, &xs).unwrap(), 30.0);
        let phi = exp_kernel(2.0, 32).unwrap();
        assert!(phi.mnorm_upper_bound_on(&xs, &[-1.0, 4.0]).unwrap() <= 2.0 + 1e-12);
        assert!(k.mnorm_upper_bound_on(&[], &xs).is_err());
        let c = phi.conj();
        assert_eq!(c.mnorm_upper_bound_on(&xs, &xs).unwrap(), phi.mnorm_upper_bound_on(&xs, &xs).unwrap());
    }

    #[test]
    fn exp_kernel_values() {
        assert!(exp_kernel(0.0, 8).unwrap().is_empty());
        assert!(exp_kernel(1.0, 1).is_err());
        let k = exp_kernel(1.0, 32).unwrap();
        assert!((k.eval(0.0, 0.0) - C64::new(0.0, 1.0)).norm() < 1e-14);
        assert!(k.eval(PI, -PI).norm() < 1e-13);
        for t in [-3.0, 0.7, 5.0] {
            let k = exp_kernel(t, 32).unwrap();
            for &x in &grid(7, -3.0, 3.0) {
                for &y in &grid(7, -2.9, 3.1) {
                    let exact = (C64::from_polar(1.0, t * x) - C64::from_polar(1.0, t * y)) / (x - y);
                    assert!((k.eval(x, y) - exact).norm() < 1e-10, "t={t} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn divided_differences() {
        let sq = divided_difference_kernel(&SmoothFunction::square(), DEFAULT_DIAG_TOL).unwrap();
        assert!((sq.eval(1.0, 3.0) - re(4.0)).norm() < 1e-15);
        let id = divided_difference_kernel(&SmoothFunction::identity(), DEFAULT_DIAG_TOL).unwrap();
        assert!((id.eval(0.3, -7.0) - re(1.0)).norm() < 1e-15);
        let ex = divided_difference_kernel(&SmoothFunction::exp(), DEFAULT_DIAG_TOL).unwrap();
        assert!((ex.eval(0.0, 1.0).re - 1.718281828459045).abs() < 1e-15);
        let cos = divided_difference_kernel(&WienerFunction::cos(2.0).into(), DEFAULT_DIAG_TOL).unwrap();
        assert!(cos.eval(0.0, 0.0).norm() < 1e-15);
    }

    #[test]
    fn diagonal_approach_is_monotone() {
        let ex = divided_difference_kernel(&SmoothFunction::exp(), DEFAULT_DIAG_TOL).unwrap();
        for &x in &grid(9, -1.0, 1.0) {
            let errs: Vec<f64> = [1e-3, 1e-5, 1e-7].iter().map(|&e| (ex.eval(x, x + e) - re(x.exp())).norm()).collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        }
    }

    #[test]
    fn wiener_functions() {
        let one = WienerFunction::new("1", FourierMeasure::atoms(vec![(0.0, re(1.0))]).unwrap(), None);
        assert_eq!(wiener_eval(&one, 2.5), re(1.0));
        assert_eq!(wiener_deriv(&one, 2.5), re(0.0));
        let e = WienerFunction::exp_i(1.5);
        assert!((wiener_eval(&e, 0.7) - C64::from_polar(1.0, 1.05)).norm() < 1e-15);
        let lor = WienerFunction::lorentzian();
        assert!((wiener_eval(&lor, 0.0) - re(1.0)).norm() < 1e-8);
        assert!((wiener_eval(&lor, 1.0) - re(0.5)).norm() < 1e-8);
        assert!(lor.closed_form_deviation(&grid(41, -10.0, 10.0)) < 1e-8);
        assert!((lor.abs_first_moment() - 1.0).abs() < 1e-8);
        let s = WienerFunction::sin(1.0);
        assert!(s.closed_form_deviation(&grid(41, -10.0, 10.0)) < 1e-14);
        assert!((wiener_deriv(&s, 0.3) - re(0.3f64.cos())).norm() < 1e-15);
    }

    #[test]
    fn decomposed_divided_differences() {
        let single = divided_difference_decomposed(&WienerFunction::exp_i(0.8), 8, 32).unwrap();
        let direct = exp_kernel(0.8, 32).unwrap();
        assert!((single.eval(1.0, -2.0) - direct.eval(1.0, -2.0)).norm() < 1e-15);

        let empty = WienerFunction::new("0", FourierMeasure::default(), None);
        assert!(divided_difference_decomposed(&empty, 8, 32).unwrap().is_empty());

        let lor = WienerFunction::lorentzian();
        let dec = divided_difference_decomposed(&lor, 8, 32).unwrap();
        let exact = divided_difference_kernel(&lor.clone().into(), DEFAULT_DIAG_TOL).unwrap();
        for &x in &grid(6, -2.0, 2.0) {
            for &y in &grid(6, -1.7, 2.3) {
                assert!((dec.eval(x, y) - exact.eval(x, y)).norm() < 1e-6);
            }
        }
        assert!(dec.mnorm_upper_bound_on(&[0.0, 1.0], &[0.5]).unwrap() <= 1.0 + 1e-6);
    }
}
