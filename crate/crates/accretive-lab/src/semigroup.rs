//! Semigroup verification: contraction of e^{-tS}, holomorphic
//! contraction on sectors, and fractional powers of accretive matrices
//! by two independent routes (Schur-based principal power and
//! Balakrishnan quadrature).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::accretivity::is_accretive;
use crate::error::{Error, Result};
use crate::numerics::{
    matrix_exp, operator_norm, scale_of, sector_half_angle, CMatrix, GridCheck, SectorAngle,
    ToleranceConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupProbe {
    pub t_grid: Vec<f64>,
    pub angle_grid: Vec<f64>,
    pub radius_grid: Vec<f64>,
}

impl Default for SemigroupProbe {
    fn default() -> Self {
        let log_grid: Vec<f64> = (-3..=3).map(|k| 10f64.powi(k)).collect();
        let angle_grid: Vec<f64> = (0..21).map(|k| -1.5 + 3.0 * (k as f64) / 20.0).collect();
        SemigroupProbe {
            t_grid: log_grid.clone(),
            angle_grid,
            radius_grid: log_grid,
        }
    }
}

/// ||e^{-tS}|| <= 1 over the probe's t grid.
pub fn semigroup_contraction_check(
    s: &CMatrix,
    probe: &SemigroupProbe,
    tol: &ToleranceConfig,
) -> Result<Vec<GridCheck>> {
    let mut out = Vec::with_capacity(probe.t_grid.len());
    for &t in &probe.t_grid {
        assert!(t >= 0.0);
        let e = matrix_exp(&(s * Complex64::new(-t, 0.0)))?;
        let norm = operator_norm(&e);
        out.push(GridCheck {
            t,
            quantity: norm,
            bound: 1.0,
            pass: norm <= 1.0 + tol.eig_tol,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolomorphicCheck {
    pub z: Complex64,
    pub norm: f64,
    pub pass: bool,
}

/// ||e^{-zS}|| <= 1 sampled on z = r e^{i phi} strictly inside the
/// sector |phi| <= omega (inset by angle_tol). Audit semantics:
/// violations are recorded, never raised; an overflowing exponential is
/// recorded as an infinite norm.
pub fn holomorphic_contraction_check(
    s: &CMatrix,
    omega: f64,
    probe: &SemigroupProbe,
    tol: &ToleranceConfig,
) -> Vec<HolomorphicCheck> {
    assert!(omega > 0.0 && omega < std::f64::consts::FRAC_PI_2);
    let mut out = Vec::new();
    for &r in &probe.radius_grid {
        for &phi in &probe.angle_grid {
            if phi.abs() > omega - tol.angle_tol {
                continue;
            }
            let z = Complex64::from_polar(r, phi);
            let norm = match matrix_exp(&(s * (-z))) {
                Ok(e) => operator_norm(&e),
                Err(_) => f64::INFINITY,
            };
            out.push(HolomorphicCheck {
                z,
                norm,
                pass: norm <= 1.0 + tol.eig_tol,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMethod {
    Spectral,
    Integral,
}

#[derive(Debug, Clone)]
pub struct FractionalPowerResult {
    pub alpha: f64,
    pub matrix: CMatrix,
    pub method: PowerMethod,
    /// Set when a near-zero eigenvalue forced the regularization shift.
    pub shifted: bool,
}

/// Principal-branch fractional power T^alpha of an accretive matrix.
pub fn fractional_power(
    t: &CMatrix,
    alpha: f64,
    method: PowerMethod,
    tol: &ToleranceConfig,
) -> Result<FractionalPowerResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfDomain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(FractionalPowerResult {
            alpha,
            matrix: t.clone(),
            method,
            shifted: false,
        });
    }
    match method {
        PowerMethod::Spectral => spectral_power(t, alpha, tol),
        PowerMethod::Integral => integral_power(t, alpha, tol),
    }
}

fn spectral_power(t: &CMatrix, alpha: f64, tol: &ToleranceConfig) -> Result<FractionalPowerResult> {
    let n = t.nrows();
    let scale = scale_of(t);
    let schur = nalgebra::linalg::Schur::try_new(t.clone(), 1e-14, 100_000)
        .ok_or_else(|| Error::OutOfDomain("Schur iteration failed to converge".into()))?;
    let (q, mut r) = schur.unpack();

    let mut shifted = false;
    for i in 0..n {
        let lambda = r[(i, i)];
        if lambda.re < 0.0 && lambda.im.abs() <= tol.rank_tol * scale {
            return Err(Error::SpectrumOnCut { value: lambda });
        }
    }
    if (0..n).any(|i| r[(i, i)].norm() <= tol.rank_tol * scale) {
        let delta = Complex64::new(10.0 * tol.rank_tol * scale, 0.0);
        for i in 0..n {
            r[(i, i)] += delta;
        }
        shifted = true;
    }

    let log_r = triangular_log(&r)?;
    let pow_r = matrix_exp(&(log_r * Complex64::new(alpha, 0.0)))?;
    Ok(FractionalPowerResult {
        alpha,
        matrix: &q * pow_r * q.adjoint(),
        method: PowerMethod::Spectral,
        shifted,
    })
}

/// Principal square root of an upper-triangular matrix
/// (Bjorck-Hammarling recurrence).
fn triangular_sqrt(r: &CMatrix) -> Result<CMatrix> {
    let n = r.nrows();
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = r[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = r[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            if den.norm() == 0.0 {
                return Err(Error::SpectrumOnCut { value: r[(i, i)] });
            }
            u[(i, j)] = s / den;
        }
    }
    Ok(u)
}

/// Principal logarithm of an upper-triangular matrix by inverse scaling
/// and squaring: repeated square roots until close to I, then a
/// Gauss-Legendre approximation of log(I + E) = int_0^1 E (I + sE)^{-1} ds.
fn triangular_log(r: &CMatrix) -> Result<CMatrix> {
    let n = r.nrows();
    let id = CMatrix::identity(n, n);
    let mut x = r.clone();
    let mut k = 0u32;
    while (&x - &id).norm() > 0.25 {
        x = triangular_sqrt(&x)?;
        k += 1;
        if k > 80 {
            return Err(Error::QuadratureNotConverged {
                levels: k,
                delta: (&x - &id).norm(),
            });
        }
    }
    let e = &x - &id;
    let (nodes, weights) = gauss_legendre(16);
    let mut log_small = CMatrix::zeros(n, n);
    for (node, w) in nodes.iter().zip(weights.iter()) {
        let s = 0.5 * (node + 1.0); // map [-1,1] -> [0,1]
        let m = &id + &e * Complex64::new(s, 0.0);
        let inv = m
            .lu()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        log_small += &e * inv * Complex64::new(0.5 * w, 0.0);
    }
    Ok(log_small * Complex64::new(2f64.powi(k as i32), 0.0))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n and derivative by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // recompute derivative at the converged node
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Balakrishnan representation
/// T^alpha = sin(alpha pi)/pi * int_0^inf s^{alpha-1} (s + T)^{-1} T ds,
/// with s = e^u on u in [-30, 30], composite Gauss panels, refined by
/// doubling until successive values agree to 1e-8 relative.
fn integral_power(t: &CMatrix, alpha: f64, _tol: &ToleranceConfig) -> Result<FractionalPowerResult> {
    let n = t.nrows();
    let id = CMatrix::identity(n, n);
    let (nodes, weights) = gauss_legendre(8);
    let factor = (alpha * std::f64::consts::PI).sin() / std::f64::consts::PI;
    let (u_lo, u_hi) = (-30.0, 30.0);
    // analytic tails: the integrand is e^{alpha u} I + O(e^{(1+alpha)u}) as
    // u -> -inf and e^{(alpha-1)u} T + O(e^{(alpha-2)u}) as u -> +inf
    let tail = &id * Complex64::new((alpha * u_lo).exp() / alpha, 0.0)
        + t * Complex64::new(((alpha - 1.0) * u_hi).exp() / (1.0 - alpha), 0.0);

    let evaluate = |panels: usize| -> Result<CMatrix> {
        let h = (u_hi - u_lo) / panels as f64;
        let mut acc = CMatrix::zeros(n, n);
        for p in 0..panels {
            let a = u_lo + h * p as f64;
            for (node, w) in nodes.iter().zip(weights.iter()) {
                let u = a + 0.5 * h * (node + 1.0);
                let s = u.exp();
                let m = &id * Complex64::new(s, 0.0) + t;
                let inv = m
                    .lu()
                    .try_inverse()
                    .ok_or(Error::Singular { sigma_min: 0.0 })?;
                // s^{alpha-1} (s+T)^{-1} T * ds with ds = s du
                acc += inv * t * Complex64::new(s.powf(alpha) * w * 0.5 * h, 0.0);
            }
        }
        Ok((acc + &tail) * Complex64::new(factor, 0.0))
    };

    let mut panels = 32;
    let mut prev = evaluate(panels)?;
    for level in 0..7u32 {
        panels *= 2;
        let next = evaluate(panels)?;
        let delta = (&next - &prev).norm();
        let scale = next.norm().max(f64::MIN_POSITIVE);
        if delta <= 1e-8 * scale {
            return Ok(FractionalPowerResult {
                alpha,
                matrix: next,
                method: PowerMethod::Integral,
                shifted: false,
            });
        }
        prev = next;
        if level == 6 {
            return Err(Error::QuadratureNotConverged {
                levels: level + 1,
                delta: delta / scale,
            });
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FractionalSectorCheck {
    pub measured: SectorAngle,
    pub bound: f64,
    pub pass: bool,
    /// Measured angle within angle_tol of the bound.
    pub marginal: bool,
}

/// T^alpha must be m-(alpha pi / 2)-accretive: its numerical range lies
/// in the sector of half-angle alpha*pi/2.
pub fn fractional_sector_check(
    t: &CMatrix,
    alpha: f64,
    n_angles: usize,
    tol: &ToleranceConfig,
) -> Result<FractionalSectorCheck> {
    if !is_accretive(t, tol)? {
        return Err(Error::OutOfDomain(
            "fractional_sector_check requires an accretive matrix".into(),
        ));
    }
    let power = fractional_power(t, alpha, PowerMethod::Spectral, tol)?;
    let measured = sector_half_angle(&power.matrix, n_angles, tol);
    let bound = alpha * std::f64::consts::FRAC_PI_2;
    let pass = measured.within(bound, tol.angle_tol);
    let marginal = match measured {
        SectorAngle::Angle(a) => (a - bound).abs() <= tol.angle_tol,
        SectorAngle::FullHalfPlane => false,
    };
    Ok(FractionalSectorCheck {
        measured,
        bound,
        pass,
        marginal,
    })
}
