//! Report schema and deterministic serialization: canonical JSON (sorted
//! keys, shortest round-trip floats, newline-terminated) plus CSV
//! sidecars for Trotter experiments.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::ToleranceConfig;
use crate::perturbation::{ClaimAuditRecord, PerturbationCertificate};
use crate::trotter::TrotterExperiment;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub master_seed: u64,
    pub tolerance: ToleranceConfig,
    pub input_paths: Vec<String>,
    pub output_path: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Summary {
    pub hard_checks_passed: u32,
    pub hard_checks_failed: u32,
    pub audits_violated: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub manifest: RunManifest,
    pub certificates: Vec<PerturbationCertificate>,
    pub experiments: Vec<TrotterExperiment>,
    pub audits: Vec<ClaimAuditRecord>,
    pub summary: Summary,
}

impl ReportDocument {
    pub fn new(manifest: RunManifest) -> Self {
        ReportDocument {
            manifest,
            certificates: Vec::new(),
            experiments: Vec::new(),
            audits: Vec::new(),
            summary: Summary::default(),
        }
    }

    /// Recomputes the summary from the contained records; the invariant
    /// is that the counts always equal these tallies.
    pub fn finalize(&mut self) {
        let mut s = Summary::default();
        for cert in &self.certificates {
            s.hard_checks_passed += cert.hard_checks_passed;
            s.hard_checks_failed += cert.hard_checks_failed;
            s.audits_violated += cert.audits_violated();
        }
        for exp in &self.experiments {
            if exp.hypothesis_report.all_pass() || exp.hypothesis_waived {
                s.hard_checks_passed += 1;
            } else {
                s.hard_checks_failed += 1;
            }
        }
        for audit in &self.audits {
            if !audit.lemma_claim_holds {
                s.audits_violated += 1;
            }
        }
        self.summary = s;
    }
}

/// Canonical JSON: serialize through `serde_json::Value`, whose map is a
/// BTreeMap, so keys come out sorted; floats use serde_json's shortest
/// round-trip formatting; the document is newline-terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(std::io::Error::other)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(std::io::Error::other)?;
    s.push('\n');
    Ok(s)
}

pub fn experiment_csv(exp: &TrotterExperiment) -> String {
    let mut out = String::from("t,n,error,adjoint_error\n");
    for (i, row) in exp.errors.iter().enumerate() {
        for (j, &err) in row.iter().enumerate() {
            out.push_str(&format!(
                "{:?},{},{:?},{:?}\n",
                exp.t_grid[i], exp.n_grid[j], err, exp.adjoint_errors[i][j]
            ));
        }
    }
    out
}

pub fn csv_sidecar_path(report_path: &Path, index: usize) -> PathBuf {
    let stem = report_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report_path.with_file_name(format!("{stem}_experiment_{index}.csv"))
}

/// Writes the canonical-JSON report and one CSV sidecar per experiment.
pub fn write_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    fs::write(path, canonical_json(doc)?)?;
    for (i, exp) in doc.experiments.iter().enumerate() {
        fs::write(csv_sidecar_path(path, i), experiment_csv(exp))?;
    }
    Ok(())
}
