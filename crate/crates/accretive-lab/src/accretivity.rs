//! Accretivity certification: numerical-range positivity, resolvent
//! bounds for m-accretivity, and the rotated m-omega variant.
//!
//! In finite dimension a bounded accretive matrix is automatically
//! m-accretive, so m-accretivity is certified through the resolvent and
//! lower-bound inequalities rather than a surjectivity argument.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{
    hermitian_part, min_eig_hermitian, resolvent_norm, scale_of, sector_half_angle, sigma_min,
    CMatrix, SectorAngle, ToleranceConfig,
};

/// Default logarithmic lambda grid {10^k : k = -3..3}.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=3).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub lambda: f64,
    pub norm: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub lambda: f64,
    pub sigma_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccretivityReport {
    pub min_hermitian_eig: f64,
    pub is_accretive: bool,
    pub sector_half_angle: SectorAngle,
    pub resolvent_checks: Vec<ResolventCheck>,
    pub lower_bound_checks: Vec<LowerBoundCheck>,
}

/// Re<Tx, x> >= 0 for all x, up to a scale-relative slack.
pub fn is_accretive(t: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    let h = hermitian_part(t);
    let min_eig = min_eig_hermitian(&h, tol)?;
    Ok(min_eig >= -tol.eig_tol * scale_of(t))
}

/// ||(lambda + T)^{-1}|| <= 1/lambda for lambda > 0.
pub fn check_resolvent_bound(
    t: &CMatrix,
    lambda_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<ResolventCheck>> {
    let mut checks = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        assert!(lambda > 0.0, "lambda grid entries must be positive");
        let norm = resolvent_norm(t, Complex64::new(lambda, 0.0), tol)?;
        let bound = 1.0 / lambda;
        let pass = norm <= bound * (1.0 + tol.eig_tol) + tol.eig_tol;
        checks.push(ResolventCheck {
            lambda,
            norm,
            bound,
            pass,
        });
    }
    Ok(checks)
}

/// ||(lambda + T)x|| >= lambda ||x||, i.e. sigma_min(lambda I + T) >= lambda.
pub fn check_lower_bound(
    t: &CMatrix,
    lambda_grid: &[f64],
    tol: &ToleranceConfig,
) -> Vec<LowerBoundCheck> {
    let n = t.nrows();
    let mut checks = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        assert!(lambda > 0.0, "lambda grid entries must be positive");
        let m = t + CMatrix::identity(n, n) * Complex64::new(lambda, 0.0);
        let smin = sigma_min(&m);
        let slack = tol.eig_tol * scale_of(t).max(lambda);
        checks.push(LowerBoundCheck {
            lambda,
            sigma_min: smin,
            pass: smin >= lambda - slack,
        });
    }
    checks
}

/// e^{+-i theta} T accretive for theta = pi/2 - omega, 0 < omega <= pi/2.
pub fn is_m_omega_accretive(t: &CMatrix, omega: f64, tol: &ToleranceConfig) -> Result<bool> {
    assert!(
        omega > 0.0 && omega <= std::f64::consts::FRAC_PI_2,
        "omega must lie in (0, pi/2]"
    );
    let theta = std::f64::consts::FRAC_PI_2 - omega;
    let rot_plus = t * Complex64::from_polar(1.0, theta);
    let rot_minus = t * Complex64::from_polar(1.0, -theta);
    Ok(is_accretive(&rot_plus, tol)? && is_accretive(&rot_minus, tol)?)
}

/// Full report combining the pointwise and resolvent characterizations.
pub fn accretivity_report(
    t: &CMatrix,
    lambda_grid: &[f64],
    n_angles: usize,
    tol: &ToleranceConfig,
) -> Result<AccretivityReport> {
    let h = hermitian_part(t);
    let min_eig = min_eig_hermitian(&h, tol)?;
    let accretive = min_eig >= -tol.eig_tol * scale_of(t);
    let resolvent_checks = if accretive {
        check_resolvent_bound(t, lambda_grid, tol)?
    } else {
        Vec::new()
    };
    Ok(AccretivityReport {
        min_hermitian_eig: min_eig,
        is_accretive: accretive,
        sector_half_angle: sector_half_angle(t, n_angles, tol),
        resolvent_checks,
        lower_bound_checks: check_lower_bound(t, lambda_grid, tol),
    })
}
