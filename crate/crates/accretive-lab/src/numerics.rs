//! Dense complex linear-algebra kernel: Hermitian eigenvalues, singular
//! values, the matrix exponential, numerical-range support function and
//! resolvent norms. Everything downstream is built on these primitives.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Eigenvalue slack, relative to the matrix scale.
    pub eig_tol: f64,
    /// Kernel detection threshold on singular values, relative.
    pub rank_tol: f64,
    /// Angular slack in radians.
    pub angle_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eig_tol: 1e-10,
            rank_tol: 1e-10,
            angle_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eig_tol < 0.0 || self.rank_tol < 0.0 || self.angle_tol < 0.0 {
            return Err(Error::OutOfDomain("tolerances must be >= 0".into()));
        }
        Ok(())
    }
}

/// One grid point of a bound check: quantity <= bound at parameter t.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridCheck {
    pub t: f64,
    pub quantity: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Measured sector half-angle of a numerical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SectorAngle {
    /// Numerical range contained in |arg z| <= angle.
    Angle(f64),
    /// A boundary point with strictly negative real part was found.
    FullHalfPlane,
}

impl SectorAngle {
    pub fn within(&self, bound: f64, angle_tol: f64) -> bool {
        match self {
            SectorAngle::Angle(a) => *a <= bound + angle_tol,
            SectorAngle::FullHalfPlane => false,
        }
    }
}

pub fn is_square(t: &CMatrix) -> Result<usize> {
    if t.nrows() != t.ncols() {
        return Err(Error::NotSquare {
            rows: t.nrows(),
            cols: t.ncols(),
        });
    }
    Ok(t.nrows())
}

pub fn all_finite(t: &CMatrix) -> bool {
    t.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖T‖` with the zero matrix treated as scale 1, for relative tolerances.
pub fn scale_of(t: &CMatrix) -> f64 {
    let n = operator_norm(t);
    if n == 0.0 {
        1.0
    } else {
        n
    }
}

/// (T + T*)/2, the Hermitian (real) part: x*((T+T*)/2)x = Re<Tx, x>.
pub fn hermitian_part(t: &CMatrix) -> CMatrix {
    (t + t.adjoint()) * Complex64::new(0.5, 0.0)
}

fn hermiticity_deviation(h: &CMatrix) -> f64 {
    (h - h.adjoint()).norm()
}

/// Eigenvalues of a Hermitian matrix, ascending.
fn hermitian_eigenvalues(h: &CMatrix, tol: &ToleranceConfig) -> Result<Vec<f64>> {
    is_square(h)?;
    let dev = hermiticity_deviation(h);
    let threshold = tol.eig_tol * scale_of(h);
    if dev > threshold {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: threshold,
        });
    }
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let hs = hermitian_part(h);
    let mut eigs: Vec<f64> = hs.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

pub fn min_eig_hermitian(h: &CMatrix, tol: &ToleranceConfig) -> Result<f64> {
    Ok(hermitian_eigenvalues(h, tol)?[0])
}

pub fn max_eig_hermitian(h: &CMatrix, tol: &ToleranceConfig) -> Result<f64> {
    Ok(*hermitian_eigenvalues(h, tol)?.last().unwrap())
}

/// Largest singular value.
pub fn operator_norm(t: &CMatrix) -> f64 {
    if t.is_empty() {
        return 0.0;
    }
    t.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Smallest singular value.
pub fn sigma_min(t: &CMatrix) -> f64 {
    t.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `1/sigma_min(lambda*I + T)`.
pub fn resolvent_norm(t: &CMatrix, lambda: Complex64, tol: &ToleranceConfig) -> Result<f64> {
    let n = is_square(t)?;
    let m = t + CMatrix::identity(n, n) * lambda;
    let smin = sigma_min(&m);
    if smin < tol.rank_tol * operator_norm(&m) {
        return Err(Error::Singular { sigma_min: smin });
    }
    Ok(1.0 / smin)
}

/// Support function of the numerical range in direction `phi`:
/// the top eigenvalue of the Hermitian part of e^{i phi} T, together
/// with a unit-norm maximizing vector.
pub fn numerical_range_support(t: &CMatrix, phi: f64) -> (f64, CVector) {
    let rot = Complex64::from_polar(1.0, phi);
    let h = hermitian_part(&(t * rot));
    let se = h.symmetric_eigen();
    let mut best = 0;
    for k in 1..se.eigenvalues.len() {
        if se.eigenvalues[k] > se.eigenvalues[best] {
            best = k;
        }
    }
    let value = se.eigenvalues[best];
    let mut witness: CVector = se.eigenvectors.column(best).into_owned();
    let norm = witness.norm();
    if norm > 0.0 {
        witness /= Complex64::new(norm, 0.0);
    }
    (value, witness)
}

/// Boundary points x*Tx of the numerical range, one per sweep angle,
/// in a fixed deterministic order over phi in [-pi, pi).
pub fn numerical_range_boundary(t: &CMatrix, n_angles: usize) -> Vec<Complex64> {
    let mut points = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let phi = -std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * (k as f64) / (n_angles as f64);
        let (_, x) = numerical_range_support(t, phi);
        let tx = t * &x;
        let z = x.dotc(&tx);
        points.push(z);
    }
    points
}

/// Sector half-angle of the numerical range, measured from boundary
/// points collected by the support-function sweep. Points with modulus
/// below `rank_tol * ||T||` are excluded from arg computations; a point
/// with real part below `-eig_tol * ||T||` yields `FullHalfPlane`.
pub fn sector_half_angle(t: &CMatrix, n_angles: usize, tol: &ToleranceConfig) -> SectorAngle {
    sector_profile(t, n_angles, tol).angle
}

#[derive(Debug, Clone)]
pub struct SectorProfile {
    pub angle: SectorAngle,
    /// Boundary point realizing the extremal argument (or a point with
    /// negative real part in the FullHalfPlane case).
    pub extremal_point: Option<Complex64>,
}

pub fn sector_profile(t: &CMatrix, n_angles: usize, tol: &ToleranceConfig) -> SectorProfile {
    assert!(n_angles >= 8, "sector sweep needs at least 8 angles");
    let scale = scale_of(t);
    let boundary = numerical_range_boundary(t, n_angles);
    let mut max_arg = 0.0_f64;
    let mut extremal = None;
    for z in &boundary {
        if z.re < -tol.eig_tol * scale {
            return SectorProfile {
                angle: SectorAngle::FullHalfPlane,
                extremal_point: Some(*z),
            };
        }
        if z.norm() >= tol.rank_tol * scale {
            let a = z.arg().abs();
            if a > max_arg {
                max_arg = a;
                extremal = Some(*z);
            }
        }
    }
    SectorProfile {
        angle: SectorAngle::Angle(max_arg),
        extremal_point: extremal,
    }
}

// Pade-13 coefficients for the matrix exponential (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(t: &CMatrix) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..t.ncols() {
        let s: f64 = t.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// e^T by scaling-and-squaring with the degree-13 Pade approximant.
pub fn matrix_exp(t: &CMatrix) -> Result<CMatrix> {
    let n = is_square(t)?;
    if !all_finite(t) {
        return Err(Error::Overflow {
            norm: f64::INFINITY,
        });
    }
    let norm = one_norm(t);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = t * Complex64::new((0.5f64).powi(s as i32), 0.0);

    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);

    let u_inner = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let u_poly = &a6 * &u_inner + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1);
    let u = &a * &u_poly;
    let v_inner = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = &a6 * &v_inner + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);

    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .ok_or(Error::Singular { sigma_min: 0.0 })?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !all_finite(&r) {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
