//! Spin-1 zero-field Hamiltonian and the (D, E) <-> (nu1, nu2) mapping.
//!
//! All energies are expressed in frequency units (MHz). The basis is
//! `{m_s = +1, 0, -1}` with the quantization axis along the hBN c axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking symmetry of a Hamiltonian, relative to its
/// largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

/// Agreement required between the closed-form and the iterative spectrum,
/// relative to the spectral radius.
pub const EIGEN_AGREEMENT_TOL: f64 = 1e-9;

/// Zero-field-splitting parameters of a spin-1 ground state, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfsParams {
    d: f64,
    e: f64,
}

impl ZfsParams {
    /// Requires `0 <= e < d`. `E` is stored as a magnitude.
    pub fn new(d: f64, e: f64) -> Result<Self> {
        if !d.is_finite() || !e.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite ZFS ({d}, {e})")));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParameter(format!("D must be positive, got {d}")));
        }
        if e < 0.0 {
            return Err(Error::InvalidParameter(format!("E must be non-negative, got {e}")));
        }
        if e >= d {
            return Err(Error::InvalidParameter(format!("E ({e}) must be smaller than D ({d})")));
        }
        Ok(Self { d, e })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn e(&self) -> f64 {
        self.e
    }
}

/// The two zero-field ODMR resonances, `nu1 <= nu2`, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPair {
    nu1: f64,
    nu2: f64,
}

impl TransitionPair {
    pub fn new(nu1: f64, nu2: f64) -> Result<Self> {
        if !nu1.is_finite() || !nu2.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite transitions ({nu1}, {nu2})")));
        }
        if nu1 <= 0.0 || nu2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "transition frequencies must be positive, got ({nu1}, {nu2})"
            )));
        }
        if nu1 > nu2 {
            return Err(Error::InvalidParameter(format!(
                "transitions must be ordered nu1 <= nu2, got ({nu1}, {nu2})"
            )));
        }
        Ok(Self { nu1, nu2 })
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }
}

/// A real symmetric 3x3 Hamiltonian in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix([[f64; 3]; 3]);

impl HamiltonianMatrix {
    /// Rejects matrices that are not symmetric to machine precision.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let scale = m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                worst = worst.max((m[i][j] - m[j][i]).abs());
            }
        }
        if !m.iter().flatten().all(|x| x.is_finite()) || worst > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(worst / scale));
        }
        Ok(Self(m))
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }
}

/// `H = D (Sz^2 - 2/3) + E (Sx^2 - Sy^2)` in the `{+1, 0, -1}` basis.
///
/// `Sx^2 - Sy^2` only couples `+1` and `-1`, with matrix element 1.
pub fn build_hamiltonian(p: &ZfsParams) -> HamiltonianMatrix {
    let (d, e) = (p.d, p.e);
    HamiltonianMatrix([
        [d / 3.0, 0.0, e],
        [0.0, -2.0 * d / 3.0, 0.0],
        [e, 0.0, d / 3.0],
    ])
}

/// Closed-form zero-field energies `{-2D/3, D/3 - E, D/3 + E}`, ascending.
pub fn zfs_energies(p: &ZfsParams) -> [f64; 3] {
    let mut ev = [-2.0 * p.d / 3.0, p.d / 3.0 - p.e, p.d / 3.0 + p.e];
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a symmetric Hamiltonian, ascending.
///
/// The values come from the cyclic Jacobi solver. When `h` has the
/// zero-field form produced by [`build_hamiltonian`], they are checked against
/// the closed-form spectrum and a disagreement above [`EIGEN_AGREEMENT_TOL`]
/// is reported as an error.
pub fn eigenvalues(h: &HamiltonianMatrix) -> Result<[f64; 3]> {
    let numeric = symmetric_eigenvalues(h.entries());
    if let Some(p) = zfs_form(h) {
        let analytic = zfs_energies(&p);
        let dev = max_relative_deviation(&analytic, &numeric);
        if dev > EIGEN_AGREEMENT_TOL {
            return Err(Error::EigenMismatch(dev));
        }
    }
    Ok(numeric)
}

/// Largest absolute difference between two spectra, relative to the spectral
/// radius of the first.
pub fn max_relative_deviation(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let scale = a.iter().fold(0.0_f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Recovers (D, E) when `h` is exactly of zero-field form.
fn zfs_form(h: &HamiltonianMatrix) -> Option<ZfsParams> {
    let m = h.entries();
    let d = -1.5 * m[1][1];
    let e = m[0][2].abs();
    let candidate = ZfsParams::new(d, e).ok()?;
    let rebuilt = build_hamiltonian(&candidate);
    let scale = d.abs();
    let matches = m
        .iter()
        .flatten()
        .zip(rebuilt.entries().iter().flatten())
        .all(|(x, y)| (x.abs() - y.abs()).abs() <= 1e-12 * scale);
    matches.then_some(candidate)
}

/// Cyclic Jacobi eigenvalue iteration for a real symmetric 3x3 matrix.
pub fn symmetric_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut a = *m;
    let scale = a.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs()));
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A' = J^T A J with the rotation acting on rows/cols p and q.
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn transitions_from_zfs(p: &ZfsParams) -> TransitionPair {
    TransitionPair { nu1: p.d - p.e, nu2: p.d + p.e }
}

/// `D = (nu1 + nu2) / 2`, `E = (nu2 - nu1) / 2`.
pub fn zfs_from_transitions(t: &TransitionPair) -> Result<ZfsParams> {
    let d = 0.5 * (t.nu1 + t.nu2);
    let e = 0.5 * (t.nu2 - t.nu1);
    ZfsParams::new(d, e)
}
