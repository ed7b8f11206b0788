//! Two-qubit witness constructions, noise mixing, the PPT threshold and
//! Hilbert-Schmidt geometry.

use super::{c, pauli_projector, CMatrix, DensityMatrix, Observable, PureState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSuite {
    /// `W = (2/3)(1 - 3 tau0)`.
    pub w: Observable,
    pub tau0: DensityMatrix,
    /// Local projector products `P_j^a (x) P_j^b`, labelled like `"P3++"`.
    pub projectors: Vec<(String, CMatrix)>,
    pub phi_plus: PureState,
}

/// The fixed two-qubit witness, the separable state `tau0` built from three
/// commuting projector pairs, and `Phi+`.
pub fn witness_suite() -> WitnessSuite {
    let mut projectors = Vec::new();
    for j in 1..=3 {
        for (sa, la) in [(1.0, '+'), (-1.0, '-')] {
            for (sb, lb) in [(1.0, '+'), (-1.0, '-')] {
                let m = pauli_projector(j, sa).kronecker(&pauli_projector(j, sb));
                projectors.push((format!("P{j}{la}{lb}"), m));
            }
        }
    }
    let get = |name: &str| projectors.iter().find(|(n, _)| n == name).map(|(_, m)| m.clone()).unwrap();
    let tau = (get("P3++") + get("P3--") + get("P1++") + get("P1--") + get("P2+-") + get("P2-+"))
        * c(1.0 / 6.0, 0.0);
    let w = (CMatrix::identity(4, 4) - &tau * c(3.0, 0.0)) * c(2.0 / 3.0, 0.0);
    WitnessSuite {
        w: Observable { dims: (2, 2), entries: w },
        tau0: DensityMatrix { dims: (2, 2), entries: tau },
        projectors,
        phi_plus: PureState::max_entangled(2),
    }
}

/// `sigma(s) = (1 - s) I/N + s rho`.
pub fn mix_with_noise(rho: &DensityMatrix, s: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("noise mixing parameter {s} outside [0, 1]")));
    }
    let noise = DensityMatrix::maximally_mixed(rho.dims);
    Ok(DensityMatrix {
        dims: rho.dims,
        entries: noise.entries * c(1.0 - s, 0.0) + &rho.entries * c(s, 0.0),
    })
}

/// Transpose on subsystem B.
pub fn partial_transpose(rho: &DensityMatrix) -> CMatrix {
    let (da, db) = rho.dims;
    CMatrix::from_fn(da * db, da * db, |r, col| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (col / db, col % db);
        rho.entries[(a * db + b2, a2 * db + b)]
    })
}

fn pt_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let pt = partial_transpose(rho);
    let h = (&pt + pt.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest `s` for which `sigma(s)` has a positive partial transpose,
/// located by bisection. Only dimensions where PPT decides separability.
pub fn ppt_threshold(rho: &DensityMatrix) -> Result<f64> {
    let (da, db) = rho.dims;
    if !matches!((da, db), (2, 2) | (2, 3) | (3, 2)) {
        return Err(Error::DimUnsupported(da, db));
    }
    let ppt = |s: f64| -> Result<bool> { Ok(pt_min_eigenvalue(&mix_with_noise(rho, s)?) >= -1e-14) };
    if ppt(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ppt(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn same_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::DimMismatch { expected: a.dims.0 * a.dims.1, got: b.dims.0 * b.dims.1 });
    }
    Ok(())
}

/// `sqrt(tr[(a - b)^2])`.
pub fn hs_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dims(a, b)?;
    let d = &a.entries - &b.entries;
    Ok((&d * &d).trace().re.max(0.0).sqrt())
}

/// Signed `tr[(rho - tau0)(tau - tau0)]`.
pub fn hyperplane_residual(rho: &DensityMatrix, tau0: &DensityMatrix, tau: &DensityMatrix) -> Result<f64> {
    same_dims(rho, tau0)?;
    same_dims(tau, tau0)?;
    Ok(((&rho.entries - &tau0.entries) * (&tau.entries - &tau0.entries)).trace().re)
}
