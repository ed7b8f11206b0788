//! Separable simulation of commuting measurement families and random
//! separable ensembles.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{c, check_square, max_abs, CMatrix, CVector, DensityMatrix, PureState};
use crate::error::{Error, Result};

/// Eigenvalues closer than this are treated as one degenerate level.
const LEVEL_TOL: f64 = 1e-8;

/// `p |a><a| (x) |b><b|` with unit vectors `a`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub a: CVector,
    pub b: CVector,
}

/// Convex mixture of product pure states, kept in explicit product form.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableState {
    pub dims: (usize, usize),
    pub terms: Vec<ProductTerm>,
}

impl SeparableState {
    pub fn density(&self) -> DensityMatrix {
        let n = self.dims.0 * self.dims.1;
        let mut m = CMatrix::zeros(n, n);
        for t in &self.terms {
            let v = t.a.kronecker(&t.b);
            m += &v * v.adjoint() * c(t.weight, 0.0);
        }
        DensityMatrix { dims: self.dims, entries: m }
    }

    /// Checks the product decomposition itself: nonnegative weights summing
    /// to one and unit factor vectors.
    pub fn is_valid_decomposition(&self, tol: f64) -> bool {
        let total: f64 = self.terms.iter().map(|t| t.weight).sum();
        (total - 1.0).abs() <= tol
            && self.terms.iter().all(|t| {
                t.weight >= 0.0
                    && (t.a.norm() - 1.0).abs() <= tol
                    && (t.b.norm() - 1.0).abs() <= tol
                    && t.a.len() == self.dims.0
                    && t.b.len() == self.dims.1
            })
    }
}

/// Rotates `v` so its largest-modulus component is real and positive.
fn fix_phase(v: &CVector) -> CVector {
    let (mut best, mut k) = (0.0, 0);
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best + 1e-12 {
            best = z.norm();
            k = i;
        }
    }
    if best == 0.0 {
        return v.clone();
    }
    v * (v[k].conj() / v[k].norm())
}

/// Common eigenbasis of pairwise commuting Hermitian operators, refined one
/// operator at a time, with vectors ordered lexicographically by their
/// eigenvalue tuples.
fn common_eigenbasis(d: usize, family: &[CMatrix]) -> Vec<(Vec<f64>, CVector)> {
    let mut blocks: Vec<(Vec<f64>, CMatrix)> = vec![(Vec::new(), CMatrix::identity(d, d))];
    for op in family {
        let mut next = Vec::new();
        for (labels, q) in blocks {
            let restricted = q.adjoint() * op * &q;
            let h = (&restricted + restricted.adjoint()) * c(0.5, 0.0);
            let eig = h.symmetric_eigen();
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let mut start = 0;
            while start < order.len() {
                let level = eig.eigenvalues[order[start]];
                let mut end = start + 1;
                while end < order.len() && eig.eigenvalues[order[end]] - level <= LEVEL_TOL {
                    end += 1;
                }
                let cols: Vec<CVector> =
                    order[start..end].iter().map(|&k| &q * eig.eigenvectors.column(k)).collect();
                let mut l = labels.clone();
                l.push(level);
                next.push((l, CMatrix::from_columns(&cols)));
                start = end;
            }
        }
        blocks = next;
    }
    let mut out: Vec<(Vec<f64>, CVector)> = blocks
        .into_iter()
        .flat_map(|(l, q)| {
            (0..q.ncols()).map(move |k| (l.clone(), fix_phase(&q.column(k).into_owned())))
        })
        .collect();
    out.sort_by(|x, y| {
        x.0.iter()
            .zip(&y.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Separable state reproducing every correlation `<O_A (x) O_B>` of `psi`
/// for `O_A` in the commuting family and arbitrary `O_B`.
///
/// With `phi_j` the common eigenbasis and `omega_j = (phi_j^dagger (x) 1) psi`
/// the result is `sum_j ||omega_j||^2 |phi_j><phi_j| (x) |w_j><w_j|` where
/// `w_j` is `omega_j` normalized.
pub fn separable_simulator(psi: &PureState, family: &[CMatrix]) -> Result<SeparableState> {
    let (da, db) = psi.dims;
    for op in family {
        check_square(op, da)?;
    }
    for (i, x) in family.iter().enumerate() {
        for y in &family[i + 1..] {
            let scale = max_abs(x).max(max_abs(y)).max(1.0);
            if max_abs(&(x * y - y * x)) > 1e-10 * scale * scale {
                return Err(Error::NonCommutingFamily);
            }
        }
    }
    let coeffs = psi.coefficient_matrix();
    let mut terms = Vec::new();
    for (_, phi) in common_eigenbasis(da, family) {
        let omega: CVector = (phi.adjoint() * &coeffs).transpose();
        let weight = omega.norm_squared();
        if weight <= 1e-300 {
            continue;
        }
        terms.push(ProductTerm { weight, a: phi, b: omega.unscale(weight.sqrt()) });
    }
    Ok(SeparableState { dims: (da, db), terms })
}

/// Value of a separable-ensemble prediction with its per-term summands.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPrediction {
    pub value: f64,
    pub summands: Vec<f64>,
}

/// `sum_u p_u tr(O_A s_A^u) tr(O_B s_B^u)` with each summand reported.
pub fn classical_prediction(
    ensemble: &[(f64, CMatrix, CMatrix)],
    o_a: &CMatrix,
    o_b: &CMatrix,
) -> Result<ClassicalPrediction> {
    let total: f64 = ensemble.iter().map(|t| t.0).sum();
    if ensemble.is_empty() || ensemble.iter().any(|t| t.0 < 0.0 || !t.0.is_finite()) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution);
    }
    let mut summands = Vec::with_capacity(ensemble.len());
    for (p, sa, sb) in ensemble {
        check_square(sa, o_a.nrows())?;
        check_square(sb, o_b.nrows())?;
        summands.push(p * (o_a * sa).trace().re * (o_b * sb).trace().re);
    }
    Ok(ClassicalPrediction { value: summands.iter().sum(), summands })
}

fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    CVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random unit vector in `C^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = gaussian_vector(d, rng);
    let n = v.norm();
    v.unscale(n)
}

/// Haar-random pure state on `C^{dA} (x) C^{dB}`.
pub fn random_pure_state<R: Rng + ?Sized>(dims: (usize, usize), rng: &mut R) -> PureState {
    PureState { dims, amplitudes: random_unit_vector(dims.0 * dims.1, rng) }
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_diagonal(&CVector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) }
    }));
    q * phases
}

/// `count` commuting Hermitian operators `U D_k U^dagger` sharing a random
/// eigenbasis; eigenvalues are drawn from a small set so degeneracies occur.
pub fn random_commuting_family<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Vec<CMatrix> {
    let u = random_unitary(d, rng);
    (0..count)
        .map(|_| {
            let diag = CVector::from_fn(d, |_, _| c(rng.random_range(-2i32..=2) as f64, 0.0));
            &u * CMatrix::from_diagonal(&diag) * u.adjoint()
        })
        .collect()
}

/// Dirichlet(1, ..., 1) mixture of up to `max_terms` Haar-random product states.
pub fn random_product_mixture<R: Rng + ?Sized>(
    dims: (usize, usize),
    max_terms: usize,
    rng: &mut R,
) -> SeparableState {
    let k = rng.random_range(1..=max_terms.max(1));
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let terms = raw
        .into_iter()
        .map(|w| ProductTerm {
            weight: w / total,
            a: random_unit_vector(dims.0, rng),
            b: random_unit_vector(dims.1, rng),
        })
        .collect();
    SeparableState { dims, terms }
}
