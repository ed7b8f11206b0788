//! Finite-dimensional bipartite states on `C^{dA} (x) C^{dB}`.
//!
//! Amplitude index `a * dB + b` addresses `|a> (x) |b>`, matching the
//! Kronecker product `A (x) B` of the operators.

mod separable;
mod witness;

pub use separable::{
    classical_prediction, random_commuting_family, random_product_mixture, random_pure_state,
    random_unitary, separable_simulator, ClassicalPrediction, ProductTerm, SeparableState,
};
pub use witness::{
    hs_distance, hyperplane_residual, mix_with_noise, partial_transpose, ppt_threshold,
    witness_suite, WitnessSuite,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const STATE_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrix `sigma_j` for `j` in 1..=3; `sigma_0` is the identity.
pub fn pauli(j: usize) -> CMatrix {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let v = match j {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("pauli index {j} out of range"),
    };
    CMatrix::from_row_slice(2, 2, &v)
}

/// Spectral projector `(1 + s sigma_j) / 2` with `s = +-1`.
pub fn pauli_projector(j: usize, sign: f64) -> CMatrix {
    (pauli(0) + pauli(j) * c(sign, 0.0)) * c(0.5, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn check_square(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimMismatch { expected: n, got: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub dims: (usize, usize),
    pub amplitudes: CVector,
}

impl PureState {
    pub fn new(dims: (usize, usize), amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != dims.0 * dims.1 {
            return Err(Error::DimMismatch { expected: dims.0 * dims.1, got: amplitudes.len() });
        }
        if (amplitudes.norm() - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidArgument(format!(
                "pure state norm is {}, expected 1",
                amplitudes.norm()
            )));
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(dims: (usize, usize), amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero vector is not a state".into()));
        }
        PureState::new(dims, amplitudes.unscale(n))
    }

    pub fn product(a: &CVector, b: &CVector) -> Result<Self> {
        PureState::normalized((a.len(), b.len()), a.kronecker(b))
    }

    /// `(|00> + |11> + ... ) / sqrt(d)`.
    pub fn max_entangled(d: usize) -> Self {
        let mut v = CVector::zeros(d * d);
        for k in 0..d {
            v[k * d + k] = c(1.0 / (d as f64).sqrt(), 0.0);
        }
        PureState { dims: (d, d), amplitudes: v }
    }

    /// `C[a][b]` with `psi = sum C_ab |a> (x) |b>`.
    pub fn coefficient_matrix(&self) -> CMatrix {
        let (da, db) = self.dims;
        CMatrix::from_fn(da, db, |a, b| self.amplitudes[a * db + b])
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { dims: self.dims, entries: &self.amplitudes * self.amplitudes.adjoint() }
    }

    pub fn apply(&self, op: &CMatrix) -> Result<PureState> {
        check_square(op, self.amplitudes.len())?;
        PureState::normalized(self.dims, op * &self.amplitudes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dims: (usize, usize),
    pub entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: (usize, usize), entries: CMatrix) -> Result<Self> {
        check_square(&entries, dims.0 * dims.1)?;
        if hermitian_defect(&entries) > STATE_TOL {
            return Err(Error::InvalidArgument("density matrix is not Hermitian".into()));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}")));
        }
        let min = hermitian_eigenvalues(&entries).into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix has eigenvalue {min}")));
        }
        Ok(DensityMatrix { dims, entries })
    }

    /// Maximally mixed state `I / N`.
    pub fn maximally_mixed(dims: (usize, usize)) -> Self {
        let n = dims.0 * dims.1;
        DensityMatrix { dims, entries: CMatrix::identity(n, n) * c(1.0 / n as f64, 0.0) }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.entries).into_iter().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub dims: (usize, usize),
    pub entries: CMatrix,
}

impl Observable {
    pub fn new(dims: (usize, usize), entries: CMatrix) -> Result<Self> {
        check_square(&entries, dims.0 * dims.1)?;
        if hermitian_defect(&entries) > STATE_TOL * max_abs(&entries).max(1.0) {
            return Err(Error::InvalidArgument("observable is not Hermitian".into()));
        }
        Ok(Observable { dims, entries })
    }

    /// `O_A (x) O_B`.
    pub fn product(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        Observable::new((a.nrows(), b.nrows()), a.kronecker(b))
    }

    pub fn identity(dims: (usize, usize)) -> Self {
        let n = dims.0 * dims.1;
        Observable { dims, entries: CMatrix::identity(n, n) }
    }
}

/// Anything with a density operator.
pub trait QuantumState {
    fn dims(&self) -> (usize, usize);
    /// `tr(M rho)` for a square matrix `M` of matching size.
    fn trace_with(&self, m: &CMatrix) -> Complex64;
}

impl QuantumState for PureState {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }
    fn trace_with(&self, m: &CMatrix) -> Complex64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }
}

impl QuantumState for DensityMatrix {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }
    fn trace_with(&self, m: &CMatrix) -> Complex64 {
        (m * &self.entries).trace()
    }
}

/// `tr(O rho)`.
pub fn expectation<S: QuantumState>(state: &S, obs: &Observable) -> Result<f64> {
    let (da, db) = state.dims();
    if obs.dims != (da, db) {
        return Err(Error::DimMismatch { expected: da * db, got: obs.dims.0 * obs.dims.1 });
    }
    Ok(state.trace_with(&obs.entries).re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schmidt {
    /// Nonnegative, descending, squares summing to one.
    pub coefficients: Vec<f64>,
    pub a_basis: Vec<CVector>,
    pub b_basis: Vec<CVector>,
}

impl Schmidt {
    pub fn reconstruct(&self) -> CVector {
        let len = self.a_basis[0].len() * self.b_basis[0].len();
        let mut v = CVector::zeros(len);
        for ((s, a), b) in self.coefficients.iter().zip(&self.a_basis).zip(&self.b_basis) {
            v += a.kronecker(b) * c(*s, 0.0);
        }
        v
    }
}

/// Schmidt form from the singular value decomposition of the coefficient matrix.
pub fn schmidt(psi: &PureState) -> Schmidt {
    let svd = psi.coefficient_matrix().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    Schmidt {
        coefficients: order.iter().map(|&k| svd.singular_values[k]).collect(),
        a_basis: order.iter().map(|&k| u.column(k).into_owned()).collect(),
        b_basis: order.iter().map(|&k| vt.row(k).transpose()).collect(),
    }
}

/// Local Kraus channel with operators `V_k = A_k (x) B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    pub dims: (usize, usize),
    pub ops: Vec<(CMatrix, CMatrix)>,
}

impl LocalChannel {
    pub fn new(dims: (usize, usize), ops: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        for (a, b) in &ops {
            check_square(a, dims.0)?;
            check_square(b, dims.1)?;
        }
        let n = dims.0 * dims.1;
        let mut sum = CMatrix::zeros(n, n);
        for (a, b) in &ops {
            let v = a.kronecker(b);
            sum += v.adjoint() * v;
        }
        let dev = max_abs(&(sum - CMatrix::identity(n, n)));
        if dev > 1e-10 {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(LocalChannel { dims, ops })
    }

    pub fn identity(dims: (usize, usize)) -> Self {
        LocalChannel {
            dims,
            ops: vec![(CMatrix::identity(dims.0, dims.0), CMatrix::identity(dims.1, dims.1))],
        }
    }

    fn kraus(&self) -> impl Iterator<Item = CMatrix> + '_ {
        self.ops.iter().map(|(a, b)| a.kronecker(b))
    }
}

/// `T(rho) = sum_k V_k rho V_k^dagger`.
pub fn apply_channel(ch: &LocalChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.dims != rho.dims {
        return Err(Error::DimMismatch { expected: ch.dims.0 * ch.dims.1, got: rho.dims.0 * rho.dims.1 });
    }
    let n = rho.entries.nrows();
    let mut out = CMatrix::zeros(n, n);
    for v in ch.kraus() {
        out += &v * &rho.entries * v.adjoint();
    }
    let out = (&out + out.adjoint()) * c(0.5, 0.0);
    Ok(DensityMatrix { dims: rho.dims, entries: out })
}

/// Heisenberg-picture dual `sum_k V_k^dagger O V_k`.
pub fn heisenberg(ch: &LocalChannel, obs: &Observable) -> Result<Observable> {
    if ch.dims != obs.dims {
        return Err(Error::DimMismatch { expected: ch.dims.0 * ch.dims.1, got: obs.dims.0 * obs.dims.1 });
    }
    let n = obs.entries.nrows();
    let mut out = CMatrix::zeros(n, n);
    for v in ch.kraus() {
        out += v.adjoint() * &obs.entries * &v;
    }
    Ok(Observable { dims: obs.dims, entries: (&out + out.adjoint()) * c(0.5, 0.0) })
}

/// Operator `B` on subsystem B with `(A (x) 1) psi = (1 (x) B) psi` for a
/// maximally entangled `psi`. In the Schmidt bases `B` is the transpose of `A`.
pub fn transferred_operator(a_op: &CMatrix, psi: &PureState) -> Result<CMatrix> {
    let (da, db) = psi.dims;
    check_square(a_op, da)?;
    let s = schmidt(psi);
    let target = 1.0 / (da as f64).sqrt();
    if da != db || s.coefficients.iter().any(|v| (v - target).abs() > 1e-10) {
        return Err(Error::NotMaximallyEntangled);
    }
    let phi = CMatrix::from_columns(&s.a_basis);
    let chi = CMatrix::from_columns(&s.b_basis);
    let in_basis = phi.adjoint() * a_op * &phi;
    Ok(&chi * in_basis.transpose() * chi.adjoint())
}

/// `(1 (x) B) psi` with `B` from [`transferred_operator`]; equals `(A (x) 1) psi`.
/// The result is unnormalized when `A` is not unitary.
pub fn transfer_to_b(a_op: &CMatrix, psi: &PureState) -> Result<CVector> {
    let b = transferred_operator(a_op, psi)?;
    let (da, _) = psi.dims;
    Ok(CMatrix::identity(da, da).kronecker(&b) * &psi.amplitudes)
}

/// `(A (x) 1) psi`, the left-hand side of the transfer identity.
pub fn apply_on_a(a_op: &CMatrix, psi: &PureState) -> CVector {
    let db = psi.dims.1;
    a_op.kronecker(&CMatrix::identity(db, db)) * &psi.amplitudes
}
