//! Finite atomic projection-valued measures and the product measure on
//! matrix space.
//!
//! A [`FinitePVM`] is a list of atoms `(x_i, P_i)` with mutually orthogonal
//! projections summing to the identity. Each atom also carries an orthonormal
//! basis of its range, so the atoms together give a unitary change of basis
//! that diagonalizes every integral `∫ α dE`. The product measure of two
//! PVMs acts on `n x m` matrices by `T ↦ Σ_{(i,j)∈Λ} P_i T Q_j`.

use std::collections::BTreeSet;

use crate::eigen::{hermitian_eig, EigenDecomposition};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};

/// Tolerance for the projection axioms checked at construction.
pub const PVM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Atom {
    pub location: f64,
    pub projector: ComplexMatrix,
    /// Orthonormal columns spanning the range of `projector`.
    pub basis: ComplexMatrix,
}

impl Atom {
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }
}

#[derive(Clone, Debug)]
pub struct FinitePVM {
    dim: usize,
    atoms: Vec<Atom>,
    /// All atom bases side by side: a unitary with atom blocks in order.
    frame: ComplexMatrix,
}

/// Default clustering tolerance `1e-9 * max(1, spectral diameter)`.
pub fn default_cluster_tol(eigenvalues: &[f64]) -> f64 {
    let diameter = match (eigenvalues.first(), eigenvalues.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    1e-9 * diameter.max(1.0)
}

impl FinitePVM {
    /// Builds a PVM from `(location, projector)` pairs and checks the axioms.
    pub fn new(atoms: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("a PVM needs at least one atom".into()));
        }
        let dim = atoms[0].1.rows();
        let mut built = Vec::with_capacity(atoms.len());
        for (k, (location, p)) in atoms.into_iter().enumerate() {
            if p.shape() != (dim, dim) {
                return Err(Error::Shape(format!("projector {k} is {}x{}, expected {dim}x{dim}", p.rows(), p.cols())));
            }
            if !location.is_finite() {
                return Err(Error::InvalidInput(format!("atom {k} has location {location}")));
            }
            let herm = HermitianMatrix::symmetrized(p.clone())?;
            let eig = hermitian_eig(&herm)?;
            let cols: Vec<usize> = (0..dim).filter(|&c| eig.eigenvalues()[c] > 0.5).collect();
            let basis = ComplexMatrix::from_fn(dim, cols.len(), |r, c| eig.eigenvectors()[(r, cols[c])]);
            built.push(Atom { location, projector: p, basis });
        }
        let pvm = Self::assemble(dim, built)?;
        pvm.check_axioms(PVM_TOLERANCE)?;
        Ok(pvm)
    }

    fn assemble(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.windows(2).any(|w| w[0].location >= w[1].location) {
            return Err(Error::InvalidInput("atom locations must be strictly increasing".into()));
        }
        let total: usize = atoms.iter().map(Atom::rank).sum();
        if total != dim {
            return Err(Error::InvalidInput(format!("atom ranks sum to {total}, dimension is {dim}")));
        }
        let mut frame = ComplexMatrix::zeros(dim, dim);
        let mut col = 0;
        for atom in &atoms {
            for c in 0..atom.rank() {
                for r in 0..dim {
                    frame[(r, col)] = atom.basis[(r, c)];
                }
                col += 1;
            }
        }
        Ok(FinitePVM { dim, atoms, frame })
    }

    /// Idempotence, self-adjointness, mutual orthogonality and completeness,
    /// each within `tol`. Returns the largest defect found.
    pub fn check_axioms(&self, tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for (i, a) in self.atoms.iter().enumerate() {
            let p = &a.projector;
            worst = worst.max((&p.matmul(p) - p).max_abs());
            worst = worst.max(p.hermitian_defect());
            for b in &self.atoms[i + 1..] {
                worst = worst.max(p.matmul(&b.projector).max_abs());
            }
            sum += p;
        }
        worst = worst.max((&sum - &ComplexMatrix::identity(self.dim)).max_abs());
        if worst > tol {
            return Err(Error::InvalidInput(format!("projection axioms violated by {worst:e}")));
        }
        Ok(worst)
    }

    /// Spectral measure of `H`: eigenvalues closer than `cluster_tol`
    /// (chained transitively) share one atom, located at their mean.
    pub fn from_hermitian(h: &HermitianMatrix, cluster_tol: f64) -> Result<Self> {
        let eig = hermitian_eig(h)?;
        Self::from_eigen(&eig, cluster_tol)
    }

    pub fn from_eigen(eig: &EigenDecomposition, cluster_tol: f64) -> Result<Self> {
        if !(cluster_tol >= 0.0) {
            return Err(Error::InvalidInput(format!("cluster tolerance {cluster_tol}")));
        }
        let values = eig.eigenvalues();
        let vectors = eig.eigenvectors();
        let n = values.len();
        let mut atoms = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && values[end] - values[end - 1] <= cluster_tol {
                end += 1;
            }
            let location = values[start..end].iter().sum::<f64>() / (end - start) as f64;
            let basis = vectors.column_block(start, end - start);
            let projector = basis.mul_adjoint(&basis);
            atoms.push(Atom { location, projector, basis });
            start = end;
        }
        // means of chained clusters are strictly increasing because the
        // clusters are separated by more than cluster_tol
        Self::assemble(n, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    /// Unitary whose column blocks are the atom bases, in atom order.
    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    /// Atom index of every frame column.
    pub fn column_atoms(&self) -> Vec<usize> {
        self.atoms.iter().enumerate().flat_map(|(i, a)| std::iter::repeat_n(i, a.rank())).collect()
    }

    /// `Σ_{i ∈ subset} P_i`.
    pub fn projector_of(&self, subset: &[usize]) -> Result<ComplexMatrix> {
        let mut p = ComplexMatrix::zeros(self.dim, self.dim);
        for &i in subset {
            let atom = self
                .atoms
                .get(i)
                .ok_or_else(|| Error::Index(format!("atom {i} of {}", self.atoms.len())))?;
            p += &atom.projector;
        }
        Ok(p)
    }

    /// `∫ α dE = Σ_i α(x_i) P_i`.
    pub fn integrate_scalar(&self, alpha: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
        let values = self.sample(&alpha)?;
        Ok(self.integrate_values(&values))
    }

    /// `Σ_i values[i] P_i`, with the values already evaluated on the atoms.
    pub fn integrate_values(&self, values: &[C64]) -> ComplexMatrix {
        assert_eq!(values.len(), self.atoms.len());
        let owner = self.column_atoms();
        let scaled = ComplexMatrix::from_fn(self.dim, self.dim, |r, c| self.frame[(r, c)] * values[owner[c]]);
        scaled.mul_adjoint(&self.frame)
    }

    /// `alpha` at every atom location, rejecting non-finite values.
    pub fn sample(&self, alpha: impl Fn(f64) -> C64) -> Result<Vec<C64>> {
        self.atoms
            .iter()
            .map(|a| {
                let v = alpha(a.location);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!("function value {v} at atom {}", a.location)))
                }
            })
            .collect()
    }

    /// `E_{v,w}(·) = <v, E(·) w>`.
    pub fn scalar_measure(&self, v: &[C64], w: &[C64]) -> Result<AtomicMeasure> {
        if v.len() != self.dim || w.len() != self.dim {
            return Err(Error::Shape(format!(
                "vectors of length {} and {} for a PVM of dimension {}",
                v.len(),
                w.len(),
                self.dim
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let pw = a.projector.matvec(w);
                let weight: C64 = v.iter().zip(&pw).map(|(x, y)| x.conj() * y).sum();
                (a.location, weight)
            })
            .collect();
        Ok(AtomicMeasure { atoms })
    }
}

/// Complex measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<(f64, C64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, C64)>) -> Result<Self> {
        if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("locations must be strictly increasing".into()));
        }
        if atoms.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite atom".into()));
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn total(&self) -> C64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.1.norm()).sum()
    }

    pub fn weights(&self) -> Vec<C64> {
        self.atoms.iter().map(|a| a.1).collect()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.atoms.iter().map(|&(x, w)| f(x) * w).sum()
    }
}

/// Complex measure on the grid `x_i × y_j`, weights indexed `[i][j]`.
#[derive(Clone, Debug)]
pub struct GridMeasure {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weights: ComplexMatrix,
}

impl GridMeasure {
    pub fn total(&self) -> C64 {
        self.weights.as_slice().iter().sum()
    }
}

/// A set of atom-index pairs of a product grid.
pub type Region = BTreeSet<(usize, usize)>;

/// The product of two finite PVMs, acting on `n x m` matrices.
#[derive(Clone, Debug)]
pub struct ProductPVM {
    pub left: FinitePVM,
    pub right: FinitePVM,
}

impl ProductPVM {
    pub fn new(left: FinitePVM, right: FinitePVM) -> Self {
        ProductPVM { left, right }
    }

    pub fn full_region(&self) -> Region {
        (0..self.left.len()).flat_map(|i| (0..self.right.len()).map(move |j| (i, j))).collect()
    }

    fn check_shape(&self, t: &ComplexMatrix) -> Result<()> {
        if t.shape() != (self.left.dim(), self.right.dim()) {
            return Err(Error::Shape(format!(
                "operator is {}x{}, product measure acts on {}x{}",
                t.rows(),
                t.cols(),
                self.left.dim(),
                self.right.dim()
            )));
        }
        Ok(())
    }

    /// `𝒢(Λ) T = Σ_{(i,j)∈Λ} P_i T Q_j`.
    pub fn apply(&self, region: &Region, t: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_shape(t)?;
        for &(i, j) in region {
            if i >= self.left.len() || j >= self.right.len() {
                return Err(Error::Index(format!(
                    "grid atom ({i}, {j}) outside {}x{}",
                    self.left.len(),
                    self.right.len()
                )));
            }
        }
        let mut out = ComplexMatrix::zeros(t.rows(), t.cols());
        let mut last_i = usize::MAX;
        let mut pt = ComplexMatrix::zeros(0, 0);
        for &(i, j) in region {
            if i != last_i {
                pt = self.left.atoms()[i].projector.matmul(t);
                last_i = i;
            }
            out += &pt.matmul(&self.right.atoms()[j].projector);
        }
        Ok(out)
    }

    /// `𝓔(Γ) T = E(Γ) T`.
    pub fn left_action(&self, subset: &[usize], t: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_shape(t)?;
        Ok(self.left.projector_of(subset)?.matmul(t))
    }

    /// `𝓕(Δ) T = T F(Δ)`.
    pub fn right_action(&self, subset: &[usize], t: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_shape(t)?;
        Ok(t.matmul(&self.right.projector_of(subset)?))
    }

    /// `𝒢_{S,T}`: weight `Tr(S^† P_i T Q_j)` at grid atom `(i, j)`.
    pub fn scalar_measure(&self, s: &ComplexMatrix, t: &ComplexMatrix) -> Result<GridMeasure> {
        self.check_shape(s)?;
        self.check_shape(t)?;
        let mut weights = ComplexMatrix::zeros(self.left.len(), self.right.len());
        for (i, a) in self.left.atoms().iter().enumerate() {
            let pt = a.projector.matmul(t);
            for (j, b) in self.right.atoms().iter().enumerate() {
                weights[(i, j)] = s.hs_inner(&pt.matmul(&b.projector));
            }
        }
        Ok(GridMeasure { x: self.left.locations(), y: self.right.locations(), weights })
    }

    /// Integral of the separated weight `α(x_i) β(y_j)` over the full grid,
    /// summed atom by atom.
    pub fn integrate_separated(
        &self,
        alpha: impl Fn(f64) -> C64,
        beta: impl Fn(f64) -> C64,
        t: &ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        self.check_shape(t)?;
        let a = self.left.sample(alpha)?;
        let b = self.right.sample(beta)?;
        let mut out = ComplexMatrix::zeros(t.rows(), t.cols());
        for (i, ai) in self.left.atoms().iter().enumerate() {
            let pt = ai.projector.matmul(t);
            for (j, bj) in self.right.atoms().iter().enumerate() {
                out.axpy(a[i] * b[j], &pt.matmul(&bj.projector));
            }
        }
        Ok(out)
    }
}
