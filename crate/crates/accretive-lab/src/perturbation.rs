//! Optimal-constant computation and verification of the perturbation
//! bounds for accretive pairs (T, A).
//!
//! The central quantity is b, the largest c >= 0 such that
//! Re<Tx, Ax> >= c ||Ax||^2 for all x, computed as the largest c with
//! H - c G positive semidefinite where H = (A*T + T*A)/2 and G = A*A.
//! Two independent routes (reduced Hermitian-definite pencil and
//! bisection on the minimum eigenvalue) must agree.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::accretivity::{check_resolvent_bound, is_accretive};
use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_part, min_eig_hermitian, operator_norm, resolvent_norm, scale_of,
    sector_profile, CMatrix, CVector, SectorAngle, ToleranceConfig,
};
use crate::semigroup::{holomorphic_contraction_check, semigroup_contraction_check, SemigroupProbe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Diagonal,
    ScalarMultiple,
    Rotated,
    Adversarial,
    User,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "diagonal" => Ok(Family::Diagonal),
            "scalar-multiple" => Ok(Family::ScalarMultiple),
            "rotated" => Ok(Family::Rotated),
            "adversarial" => Ok(Family::Adversarial),
            "user" => Ok(Family::User),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub t: CMatrix,
    pub a: CMatrix,
    pub family: Family,
    pub seed: Option<u64>,
}

impl OperatorPair {
    pub fn new(t: CMatrix, a: CMatrix, family: Family, seed: Option<u64>) -> Result<Self> {
        crate::numerics::is_square(&t)?;
        crate::numerics::is_square(&a)?;
        if t.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                left: t.nrows(),
                right: a.nrows(),
            });
        }
        Ok(OperatorPair { t, a, family, seed })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn sum(&self) -> CMatrix {
        &self.t + &self.a
    }
}

/// Outcome of the optimal-constant computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BValue {
    Finite(f64),
    /// A vanishes; the inequality holds for every c.
    Infinite,
    /// No c >= 0 makes H - c G positive semidefinite.
    ConditionFails,
}

impl BValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BValue::Finite(b) => Some(*b),
            _ => None,
        }
    }
}

fn symmetrize(h: &CMatrix) -> CMatrix {
    hermitian_part(h)
}

/// Eigendecomposition split of a Hermitian PSD gram matrix into kernel
/// (eigenvalue below threshold) and range eigenvectors.
struct GramSplit {
    range_vectors: CMatrix,
    range_values: Vec<f64>,
    kernel_vectors: CMatrix,
}

fn split_gram(g: &CMatrix, threshold: f64) -> GramSplit {
    let se = symmetrize(g).symmetric_eigen();
    let n = g.nrows();
    let mut range_idx = Vec::new();
    let mut kernel_idx = Vec::new();
    for i in 0..n {
        if se.eigenvalues[i] > threshold {
            range_idx.push(i);
        } else {
            kernel_idx.push(i);
        }
    }
    let collect = |idx: &[usize]| {
        let mut m = CMatrix::zeros(n, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            m.set_column(j, &se.eigenvectors.column(i));
        }
        m
    };
    GramSplit {
        range_vectors: collect(&range_idx),
        range_values: range_idx.iter().map(|&i| se.eigenvalues[i]).collect(),
        kernel_vectors: collect(&kernel_idx),
    }
}

/// Largest c >= 0 with H - c G >= 0, via the reduced pencil on the
/// orthocomplement of ker(G), cross-checked by bisection.
pub fn compute_b(pair: &OperatorPair, tol: &ToleranceConfig) -> Result<BValue> {
    let nt = operator_norm(&pair.t);
    let na = operator_norm(&pair.a);
    if na <= tol.rank_tol * nt.max(1.0) {
        return Ok(BValue::Infinite);
    }
    let h = symmetrize(&(pair.a.adjoint() * &pair.t + pair.t.adjoint() * &pair.a))
        * Complex64::new(0.5, 0.0);
    let g = pair.a.adjoint() * &pair.a;
    let sh = (nt * na).max(f64::MIN_POSITIVE);
    let psd_slack = tol.eig_tol * sh;

    let min_h = min_eig_hermitian(&h, tol)?;
    if min_h < -psd_slack {
        return Ok(BValue::ConditionFails);
    }

    // Kernel of A detected through the eigenvalues of G = A*A.
    let sigma_threshold = (tol.rank_tol * na).powi(2);
    let split = split_gram(&g, sigma_threshold);
    if split.range_values.is_empty() {
        return Ok(BValue::Infinite);
    }
    if split.kernel_vectors.ncols() > 0 {
        // A nonzero coupling of H between ker(G) and its complement makes
        // the pencil reduction invalid; the condition is declared failed.
        let coupling = split.kernel_vectors.adjoint() * &h * &split.range_vectors;
        if coupling.norm() > tol.eig_tol * sh {
            return Ok(BValue::ConditionFails);
        }
    }

    // Reduced Hermitian-definite pencil: eig of D^{-1/2} Q1* H Q1 D^{-1/2}.
    let q1 = &split.range_vectors;
    let h11 = q1.adjoint() * &h * q1;
    let k = split.range_values.len();
    let mut w = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let d = (split.range_values[i] * split.range_values[j]).sqrt();
            w[(i, j)] = h11[(i, j)] / Complex64::new(d, 0.0);
        }
    }
    let b_pencil = min_eig_hermitian(&symmetrize(&w), tol)?.max(0.0);

    let b_bisect = bisect_b(&h, &g, min_h, sh, b_pencil);

    let denom = b_pencil.abs().max(b_bisect.abs());
    if (b_pencil - b_bisect).abs() > 1e-8 * denom + 1e-10 {
        return Err(Error::MethodDisagreement {
            pencil: b_pencil,
            bisection: b_bisect,
        });
    }
    Ok(BValue::Finite(b_pencil))
}

/// Largest c with min_eig(H - c G) above a noise-level threshold.
fn bisect_b(h: &CMatrix, g: &CMatrix, min_h: f64, sh: f64, b_hint: f64) -> f64 {
    let thr = min_h.min(0.0) - 1e-13 * sh;
    let f = |c: f64| {
        let m = symmetrize(&(h - g * Complex64::new(c, 0.0)));
        let mut min = f64::INFINITY;
        for v in m.symmetric_eigen().eigenvalues.iter() {
            min = min.min(*v);
        }
        min
    };
    if f(0.0) < thr {
        return 0.0;
    }
    let mut hi = (2.0 * b_hint).max(1.0);
    let mut doublings = 0;
    while f(hi) >= thr {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return hi; // effectively unbounded; caller's agreement check reports it
        }
    }
    let mut lo = 0.0;
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= thr {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Sector predictions of the lemma and corollary for b > 1:
/// (omega_lemma, omega_corollary, M) with
/// omega_lemma = pi/2 - arcsin((b-1)/b), omega_corollary = arcsin((b-1)/b),
/// M = b/(b-1).
pub fn predicted_sector(b: f64) -> Result<(f64, f64, f64)> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::OutOfDomain(format!(
            "predicted_sector requires finite b > 1, got {b}"
        )));
    }
    let omega_corollary = ((b - 1.0) / b).asin();
    let omega_lemma = std::f64::consts::FRAC_PI_2 - omega_corollary;
    let m = b / (b - 1.0);
    Ok((omega_lemma, omega_corollary, m))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelativeBoundResult {
    /// sup ||Ax|| / ||Tx|| over the orthocomplement of ker T
    /// (infinite when ker T is not contained in ker A).
    pub ratio: f64,
    pub pass: bool,
}

/// Eq-style relative bound ||Ax|| <= (1/b) ||Tx||.
pub fn relative_bound_check(
    pair: &OperatorPair,
    b: f64,
    tol: &ToleranceConfig,
) -> Result<RelativeBoundResult> {
    assert!(b > 0.0);
    let nt = operator_norm(&pair.t);
    let na = operator_norm(&pair.a);
    if na == 0.0 {
        return Ok(RelativeBoundResult {
            ratio: 0.0,
            pass: true,
        });
    }
    let gt = pair.t.adjoint() * &pair.t;
    let split = split_gram(&gt, (tol.rank_tol * nt.max(1.0)).powi(2));
    if split.kernel_vectors.ncols() > 0 {
        let on_kernel = &pair.a * &split.kernel_vectors;
        if operator_norm(&on_kernel) > tol.rank_tol * na {
            return Ok(RelativeBoundResult {
                ratio: f64::INFINITY,
                pass: false,
            });
        }
    }
    if split.range_values.is_empty() {
        // T == 0 and A vanishes on everything it could act on
        return Ok(RelativeBoundResult {
            ratio: 0.0,
            pass: true,
        });
    }
    let q1 = &split.range_vectors;
    let ga = pair.a.adjoint() * &pair.a;
    let g11 = q1.adjoint() * &ga * q1;
    let k = split.range_values.len();
    let mut w = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let d = (split.range_values[i] * split.range_values[j]).sqrt();
            w[(i, j)] = g11[(i, j)] / Complex64::new(d, 0.0);
        }
    }
    let top = crate::numerics::max_eig_hermitian(&symmetrize(&w), tol)?.max(0.0);
    let ratio = top.sqrt();
    Ok(RelativeBoundResult {
        ratio,
        pass: ratio <= 1.0 / b + tol.eig_tol,
    })
}

pub use crate::numerics::GridCheck;

fn shifted_inverse(t: &CMatrix, shift: f64) -> Result<CMatrix> {
    let n = t.nrows();
    let m = t + CMatrix::identity(n, n) * Complex64::new(shift, 0.0);
    m.lu()
        .try_inverse()
        .ok_or(Error::Singular { sigma_min: 0.0 })
}

/// ||A (t + T)^{-1}|| <= 1/b for each t in the grid.
pub fn contraction_check(
    pair: &OperatorPair,
    b: f64,
    t_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<GridCheck>> {
    assert!(b > 0.0 && b.is_finite());
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        assert!(t > 0.0);
        let inv = shifted_inverse(&pair.t, t)?;
        let norm = operator_norm(&(&pair.a * inv));
        let bound = 1.0 / b;
        out.push(GridCheck {
            t,
            quantity: norm,
            bound,
            pass: norm <= bound + tol.eig_tol,
        });
    }
    Ok(out)
}

/// ||t (t + T + A)^{-1}|| <= M = b/(b-1) for each t.
pub fn resolvent_uniform_bound(
    pair: &OperatorPair,
    m_const: f64,
    t_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<GridCheck>> {
    assert!(m_const > 1.0);
    let sum = pair.sum();
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        assert!(t > 0.0);
        let norm = t * resolvent_norm(&sum, Complex64::new(t, 0.0), tol)?;
        out.push(GridCheck {
            t,
            quantity: norm,
            bound: m_const,
            pass: norm <= m_const + tol.eig_tol,
        });
    }
    Ok(out)
}

/// Relative residual of t + T + A = [I + A(t+T)^{-1}](t + T).
pub fn factorization_identity_check(pair: &OperatorPair, t: f64) -> Result<f64> {
    assert!(t > 0.0);
    let n = pair.dim();
    let id = CMatrix::identity(n, n);
    let shifted = &pair.t + &id * Complex64::new(t, 0.0);
    let inv = shifted_inverse(&pair.t, t)?;
    let lhs = &shifted + &pair.a;
    let rhs = (&id + &pair.a * inv) * &shifted;
    Ok((&lhs - rhs).norm() / lhs.norm())
}

/// ||(I + A(t+T)^{-1})^{-1}|| <= b/(b-1) for each t.
pub fn neumann_inverse_bound_check(
    pair: &OperatorPair,
    b: f64,
    t_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<GridCheck>> {
    assert!(b > 1.0);
    let n = pair.dim();
    let id = CMatrix::identity(n, n);
    let bound = b / (b - 1.0);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        assert!(t > 0.0);
        let inv = shifted_inverse(&pair.t, t)?;
        let op = &id + &pair.a * inv;
        let op_inv = op
            .lu()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        let norm = operator_norm(&op_inv);
        out.push(GridCheck {
            t,
            quantity: norm,
            bound,
            pass: norm <= bound + tol.eig_tol,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectorSample {
    pub mu: Complex64,
    pub norm: f64,
    pub bound: f64,
    pub pass: bool,
}

/// M_eps = M / (sin(eps) sqrt(M^2 - 1)).
pub fn sector_bound_constant(m_const: f64, eps: f64) -> f64 {
    m_const / (eps.sin() * (m_const * m_const - 1.0).sqrt())
}

/// ||(mu + T + A)^{-1}|| <= M_eps / |mu| on the wedge
/// |arg(mu)| <= pi/2 - arcsin(1/M) + eps, sampled log-uniformly in |mu|.
pub fn sector_resolvent_bound(
    pair: &OperatorPair,
    m_const: f64,
    eps: f64,
    n_samples: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<Vec<SectorSample>> {
    assert!(m_const > 1.0);
    assert!(n_samples >= 1);
    let theta = std::f64::consts::FRAC_PI_2 - (1.0 / m_const).asin();
    if !(eps > 0.0 && eps < (1.0 / m_const).asin()) {
        return Err(Error::OutOfDomain(format!(
            "eps must lie in (0, arcsin(1/M)) = (0, {:.6}), got {eps}",
            (1.0 / m_const).asin()
        )));
    }
    let m_eps = sector_bound_constant(m_const, eps);
    let sum = pair.sum();
    let s = scale_of(&sum);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wedge = theta + eps;
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let log_r = rng.gen_range(-3.0..=3.0);
        let r = s * 10f64.powf(log_r);
        let phi = rng.gen_range(-wedge..=wedge);
        let mu = Complex64::from_polar(r, phi);
        let norm = resolvent_norm(&sum, mu, tol)?;
        let bound = m_eps / r;
        out.push(SectorSample {
            mu,
            norm,
            bound,
            pass: norm <= bound * (1.0 + tol.eig_tol) + tol.eig_tol,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelativeBoundConstants {
    pub beta_or_b_rel: f64,
    pub minimal_a: f64,
}

/// Minimal a >= 0 with Re<Tx, Ax> + a||x||^2 + beta ||Tx||^2 >= 0.
pub fn okazawa_constants(
    pair: &OperatorPair,
    beta: f64,
    tol: &ToleranceConfig,
) -> Result<RelativeBoundConstants> {
    assert!(beta >= 0.0);
    let h = symmetrize(&(pair.a.adjoint() * &pair.t + pair.t.adjoint() * &pair.a))
        * Complex64::new(0.5, 0.0);
    let m = &h + pair.t.adjoint() * &pair.t * Complex64::new(beta, 0.0);
    let min_eig = min_eig_hermitian(&symmetrize(&m), tol)?;
    Ok(RelativeBoundConstants {
        beta_or_b_rel: beta,
        minimal_a: (-min_eig).max(0.0),
    })
}

/// Minimal a >= 0 with ||Ax||^2 <= a ||x||^2 + b_rel ||Tx||^2.
pub fn relative_bound_constants(
    pair: &OperatorPair,
    b_rel: f64,
    tol: &ToleranceConfig,
) -> Result<RelativeBoundConstants> {
    assert!(b_rel >= 0.0);
    let m = pair.a.adjoint() * &pair.a - pair.t.adjoint() * &pair.t * Complex64::new(b_rel, 0.0);
    let max_eig = crate::numerics::max_eig_hermitian(&symmetrize(&m), tol)?;
    Ok(RelativeBoundConstants {
        beta_or_b_rel: b_rel,
        minimal_a: max_eig.max(0.0),
    })
}

/// A(t+T)^{-1} is accretive for each t (Remark-level consequence of the
/// optimal-constant condition).
pub fn accretive_product_check(
    pair: &OperatorPair,
    t_grid: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<(f64, bool)>> {
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        assert!(t > 0.0);
        let inv = shifted_inverse(&pair.t, t)?;
        let prod = &pair.a * inv;
        out.push((t, is_accretive(&prod, tol)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimAuditRecord {
    pub measured_sector: SectorAngle,
    pub omega_lemma: f64,
    pub lemma_claim_holds: bool,
    pub violation_witness: Option<Complex64>,
}

/// Measures the sector of T + A against the lemma's predicted angle.
/// Audit semantics: never raises on violation.
pub fn audit_sector_claim(
    pair: &OperatorPair,
    omega_lemma: f64,
    n_angles: usize,
    tol: &ToleranceConfig,
) -> ClaimAuditRecord {
    let profile = sector_profile(&pair.sum(), n_angles, tol);
    let holds = profile.angle.within(omega_lemma, tol.angle_tol);
    ClaimAuditRecord {
        measured_sector: profile.angle,
        omega_lemma,
        lemma_claim_holds: holds,
        violation_witness: if holds { None } else { profile.extremal_point },
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CheckSummary {
    /// Worst observed value of the checked quantity over its grid.
    pub quantity: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolomorphicAuditSummary {
    pub label: String,
    pub angle: f64,
    pub samples: usize,
    pub violations: usize,
    pub max_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationCertificate {
    pub family: Family,
    pub seed: Option<u64>,
    pub dim: usize,
    pub t_accretive: bool,
    pub a_accretive: bool,
    pub b: BValue,
    pub omega_lemma: Option<f64>,
    pub omega_corollary: Option<f64>,
    pub m_constant: Option<f64>,
    pub bound_checks: BTreeMap<String, CheckSummary>,
    pub claim_audit: Option<ClaimAuditRecord>,
    pub holomorphic_audits: Vec<HolomorphicAuditSummary>,
    pub hard_checks_passed: u32,
    pub hard_checks_failed: u32,
    pub notes: Vec<String>,
}

impl PerturbationCertificate {
    /// Counts only the sector-claim audit. The holomorphic sweeps are
    /// measured on both candidate sectors and reported without deciding
    /// which reading is intended, so they carry their own violation
    /// counts but do not enter this tally.
    pub fn audits_violated(&self) -> u32 {
        match &self.claim_audit {
            Some(audit) if !audit.lemma_claim_holds => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub tol: ToleranceConfig,
    pub t_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub n_sector_samples: usize,
    pub n_angles: usize,
    pub seed: u64,
    pub probe: SemigroupProbe,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let grid: Vec<f64> = (-3..=3).map(|k| 10f64.powi(k)).collect();
        VerifyConfig {
            tol: ToleranceConfig::default(),
            t_grid: grid.clone(),
            lambda_grid: grid,
            eps_list: vec![0.05, 0.1],
            n_sector_samples: 64,
            n_angles: 720,
            seed: 0,
            probe: SemigroupProbe::default(),
        }
    }
}

struct CheckAccumulator {
    checks: BTreeMap<String, CheckSummary>,
    passed: u32,
    failed: u32,
}

impl CheckAccumulator {
    fn new() -> Self {
        CheckAccumulator {
            checks: BTreeMap::new(),
            passed: 0,
            failed: 0,
        }
    }

    fn record(&mut self, name: &str, quantity: f64, bound: f64, pass: bool) {
        self.checks.insert(
            name.to_string(),
            CheckSummary {
                quantity,
                bound,
                pass,
            },
        );
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    fn record_grid(&mut self, name: &str, grid: &[GridCheck]) {
        let mut worst = f64::NEG_INFINITY;
        let mut bound = f64::INFINITY;
        let mut pass = true;
        for ch in grid {
            worst = worst.max(ch.quantity);
            bound = bound.min(ch.bound);
            pass &= ch.pass;
        }
        self.record(name, worst, bound, pass);
    }
}

/// Full verification pipeline for one pair: compute b, branch on its
/// value, run every proof-derived bound as a hard check and the lemma's
/// sector conclusion as a soft audit.
pub fn verify_lemma(pair: &OperatorPair, config: &VerifyConfig) -> Result<PerturbationCertificate> {
    let tol = &config.tol;
    let mut notes = Vec::new();
    let t_accretive = is_accretive(&pair.t, tol)?;
    let a_accretive = is_accretive(&pair.a, tol)?;

    let mut cert = PerturbationCertificate {
        family: pair.family,
        seed: pair.seed,
        dim: pair.dim(),
        t_accretive,
        a_accretive,
        b: BValue::ConditionFails,
        omega_lemma: None,
        omega_corollary: None,
        m_constant: None,
        bound_checks: BTreeMap::new(),
        claim_audit: None,
        holomorphic_audits: Vec::new(),
        hard_checks_passed: 0,
        hard_checks_failed: 0,
        notes: Vec::new(),
    };

    if !t_accretive || !a_accretive {
        notes.push("lemma hypotheses not satisfied (accretivity); no claims tested".into());
        cert.notes = notes;
        return Ok(cert);
    }

    let b = compute_b(pair, tol)?;
    cert.b = b;
    let mut acc = CheckAccumulator::new();
    let sum = pair.sum();

    match b {
        BValue::ConditionFails => {
            notes.push("condition Re<Tx,Ax> >= c||Ax||^2 fails for every c >= 0; lemma inapplicable, no claims tested".into());
        }
        BValue::Infinite => {
            notes.push("degenerate - no sector prediction (A vanishes)".into());
            m_accretivity_checks(&sum, config, &mut acc)?;
        }
        BValue::Finite(bv) if bv <= 1.0 => {
            m_accretivity_checks(&sum, config, &mut acc)?;
        }
        BValue::Finite(bv) => {
            let (omega_lemma, omega_corollary, m_const) = predicted_sector(bv)?;
            cert.omega_lemma = Some(omega_lemma);
            cert.omega_corollary = Some(omega_corollary);
            cert.m_constant = Some(m_const);

            let rel = relative_bound_check(pair, bv, tol)?;
            acc.record("relative_bound", rel.ratio, 1.0 / bv, rel.pass);

            acc.record_grid(
                "contraction",
                &contraction_check(pair, bv, &config.t_grid, tol)?,
            );
            acc.record_grid(
                "neumann_inverse",
                &neumann_inverse_bound_check(pair, bv, &config.t_grid, tol)?,
            );
            acc.record_grid(
                "uniform_resolvent",
                &resolvent_uniform_bound(pair, m_const, &config.t_grid, tol)?,
            );

            let mut worst_residual = 0.0_f64;
            for &t in &config.t_grid {
                worst_residual = worst_residual.max(factorization_identity_check(pair, t)?);
            }
            acc.record(
                "factorization_identity",
                worst_residual,
                1e-12,
                worst_residual <= 1e-12,
            );

            for &eps in &config.eps_list {
                let name = format!("sector_resolvent_eps_{eps}");
                if eps >= (1.0 / m_const).asin() {
                    notes.push(format!(
                        "sector resolvent check at eps = {eps} skipped: eps >= arcsin(1/M)"
                    ));
                    continue;
                }
                let samples =
                    sector_resolvent_bound(pair, m_const, eps, config.n_sector_samples, config.seed, tol)?;
                let mut worst_ratio = 0.0_f64;
                let mut pass = true;
                for s in &samples {
                    worst_ratio = worst_ratio.max(s.norm / s.bound);
                    pass &= s.pass;
                }
                acc.record(&name, worst_ratio, 1.0, pass);
            }

            let products = accretive_product_check(pair, &config.t_grid, tol)?;
            let pass = products.iter().all(|(_, p)| *p);
            acc.record(
                "accretive_product",
                if pass { 0.0 } else { 1.0 },
                0.0,
                pass,
            );

            // Soft audits: the lemma's sector conclusion and the holomorphic
            // contraction sectors at both the lemma and corollary angles.
            cert.claim_audit = Some(audit_sector_claim(pair, omega_lemma, config.n_angles, tol));
            for (label, angle) in [
                ("omega_corollary", omega_corollary),
                ("omega_lemma", omega_lemma),
            ] {
                let angle = angle.min(std::f64::consts::FRAC_PI_2 - 1e-6);
                let zchecks = holomorphic_contraction_check(&sum, angle, &config.probe, tol);
                let violations = zchecks.iter().filter(|z| !z.pass).count();
                let max_norm = zchecks.iter().map(|z| z.norm).fold(0.0, f64::max);
                cert.holomorphic_audits.push(HolomorphicAuditSummary {
                    label: label.into(),
                    angle,
                    samples: zchecks.len(),
                    violations,
                    max_norm,
                });
            }
        }
    }

    cert.bound_checks = acc.checks;
    cert.hard_checks_passed = acc.passed;
    cert.hard_checks_failed = acc.failed;
    cert.notes = notes;

    if cert.hard_checks_failed > 0 {
        let failed = cert.hard_checks_failed;
        let total = cert.hard_checks_failed + cert.hard_checks_passed;
        return Err(Error::CertificateFailure {
            failed,
            total,
            certificate: Box::new(cert),
        });
    }
    Ok(cert)
}

/// Checks shared by the b <= 1 and degenerate branches: the sum is
/// accretive, satisfies the resolvent bound, and generates a contraction
/// semigroup.
fn m_accretivity_checks(
    sum: &CMatrix,
    config: &VerifyConfig,
    acc: &mut CheckAccumulator,
) -> Result<()> {
    let tol = &config.tol;
    let sum_accretive = is_accretive(sum, tol)?;
    let h = hermitian_part(sum);
    let min_eig = min_eig_hermitian(&h, tol)?;
    acc.record(
        "sum_accretive",
        -min_eig,
        tol.eig_tol * scale_of(sum),
        sum_accretive,
    );
    let res = check_resolvent_bound(sum, &config.lambda_grid, tol)?;
    let grid: Vec<GridCheck> = res
        .iter()
        .map(|c| GridCheck {
            t: c.lambda,
            quantity: c.norm * c.lambda,
            bound: 1.0,
            pass: c.pass,
        })
        .collect();
    acc.record_grid("sum_resolvent_bound", &grid);

    let contr = semigroup_contraction_check(sum, &config.probe, tol)?;
    acc.record_grid("semigroup_contraction", &contr);
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    /// Target optimal constant for the diagonal and rotated families.
    pub target_b: f64,
    /// Scalar multiplier for the scalar-multiple family (b = 1/gamma).
    pub gamma: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            target_b: 2.0,
            gamma: 0.5,
        }
    }
}

fn standard_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

fn random_gaussian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| standard_complex(rng))
}

/// Random unitary via QR of a complex Gaussian matrix.
fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    random_gaussian(dim, rng).qr().q()
}

/// Random strictly accretive matrix: positive definite Hermitian part
/// plus a skew-Hermitian part, normalized to unit operator norm.
fn random_strictly_accretive(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let x = random_gaussian(dim, rng);
    let h = &x * x.adjoint() * Complex64::new(1.0 / dim as f64, 0.0)
        + CMatrix::identity(dim, dim) * Complex64::new(0.1, 0.0);
    let y = random_gaussian(dim, rng);
    let s = (&y - y.adjoint()) * Complex64::new(0.5, 0.0);
    let t = h + s;
    let norm = operator_norm(&t);
    t * Complex64::new(1.0 / norm, 0.0)
}

fn diagonal_entries(
    dim: usize,
    target_b: f64,
    rng: &mut impl Rng,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut t_entries = Vec::with_capacity(dim);
    let mut a_entries = Vec::with_capacity(dim);
    for j in 0..dim {
        let r = rng.gen_range(0.5..=2.0);
        let phi = rng.gen_range(-1.25..=1.25);
        let t_j = Complex64::from_polar(r, phi);
        // per-entry ratio Re(conj(a_j) t_j)/|a_j|^2 = target_b * v_j,
        // with v_0 = 1 so the minimum hits the target exactly
        let v = if j == 0 { 1.0 } else { rng.gen_range(1.0..=3.0) };
        let gamma_j = 1.0 / (target_b * v);
        t_entries.push(t_j);
        a_entries.push(t_j * Complex64::new(gamma_j, 0.0));
    }
    (t_entries, a_entries)
}

/// Deterministic instance generation for the lemma's test families.
pub fn generate_pair(
    family: Family,
    dim: usize,
    params: &GenParams,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<OperatorPair> {
    assert!(dim >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Diagonal => {
            if params.target_b <= 0.0 {
                return Err(Error::OutOfDomain("target_b must be > 0".into()));
            }
            let (t_e, a_e) = diagonal_entries(dim, params.target_b, &mut rng);
            OperatorPair::new(
                CMatrix::from_diagonal(&DVector::from_vec(t_e)),
                CMatrix::from_diagonal(&DVector::from_vec(a_e)),
                Family::Diagonal,
                Some(seed),
            )
        }
        Family::ScalarMultiple => {
            if params.gamma <= 0.0 {
                return Err(Error::OutOfDomain("gamma must be > 0".into()));
            }
            let t = random_strictly_accretive(dim, &mut rng);
            let a = &t * Complex64::new(params.gamma, 0.0);
            OperatorPair::new(t, a, Family::ScalarMultiple, Some(seed))
        }
        Family::Rotated => {
            if params.target_b <= 0.0 {
                return Err(Error::OutOfDomain("target_b must be > 0".into()));
            }
            let (t_e, a_e) = diagonal_entries(dim, params.target_b, &mut rng);
            let u = random_unitary(dim, &mut rng);
            let dt = CMatrix::from_diagonal(&DVector::from_vec(t_e));
            let da = CMatrix::from_diagonal(&DVector::from_vec(a_e));
            OperatorPair::new(
                u.adjoint() * dt * &u,
                u.adjoint() * da * &u,
                Family::Rotated,
                Some(seed),
            )
        }
        Family::Adversarial => {
            for attempt in 0..500u64 {
                let mut sub = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
                let t = random_strictly_accretive(dim, &mut sub);
                let a = random_strictly_accretive(dim, &mut sub);
                let pair = OperatorPair::new(t, a, Family::Adversarial, Some(seed))?;
                if matches!(compute_b(&pair, tol)?, BValue::ConditionFails) {
                    return Ok(pair);
                }
            }
            Err(Error::GenerationFailed(
                "adversarial sampling exhausted its retry budget".into(),
            ))
        }
        Family::User => Err(Error::GenerationFailed(
            "the user family is constructed from input matrices, not generated".into(),
        )),
    }
}

/// Per-instance RNG stream derivation (splitmix64 over the master seed).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Brute-force oracle: minimum of x*Hx / x*Gx over random unit vectors
/// with Ax != 0. Lives here for reuse by tests and the acceptance suite;
/// it shares no code path with compute_b.
pub fn brute_force_b(pair: &OperatorPair, samples: usize, seed: u64) -> Option<f64> {
    const STREAMS: u64 = 8; // fixed stream count keeps the result machine-independent
    let dim = pair.dim();
    let h = (pair.a.adjoint() * &pair.t + pair.t.adjoint() * &pair.a) * Complex64::new(0.5, 0.0);
    let g = pair.a.adjoint() * &pair.a;
    let floor = 1e-14 * operator_norm(&pair.a).powi(2);

    let stream_min = |stream: u64, count: usize| -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
        let mut best: Option<f64> = None;
        let mut x = CVector::zeros(dim);
        let mut buf = CVector::zeros(dim);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        for _ in 0..count {
            for k in 0..dim {
                x[k] = standard_complex(&mut rng);
            }
            buf.gemv(one, &g, &x, zero);
            let quad_g = x.dotc(&buf).re;
            if quad_g <= floor {
                continue;
            }
            buf.gemv(one, &h, &x, zero);
            let ratio = x.dotc(&buf).re / quad_g;
            best = Some(best.map_or(ratio, |b| b.min(ratio)));
        }
        best
    };

    let per_stream = samples / STREAMS as usize;
    let remainder = samples % STREAMS as usize;
    let counts: Vec<usize> = (0..STREAMS as usize)
        .map(|s| per_stream + usize::from(s < remainder))
        .collect();
    let threads = thread_budget().min(STREAMS as usize).max(1);
    let results: Vec<Option<f64>> = if threads <= 1 {
        counts
            .iter()
            .enumerate()
            .map(|(s, &count)| stream_min(s as u64, count))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = counts
                .iter()
                .enumerate()
                .map(|(s, &count)| scope.spawn(move || stream_min(s as u64, count)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };
    results
        .into_iter()
        .flatten()
        .fold(None, |acc, r| Some(acc.map_or(r, |b: f64| b.min(r))))
}

/// Parallelism bound: ACCRETIVE_LAB_THREADS when set, otherwise all cores.
pub fn thread_budget() -> usize {
    std::env::var("ACCRETIVE_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}
