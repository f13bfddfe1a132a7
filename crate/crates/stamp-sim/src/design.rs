//! Experiment design: how many studies, how much signal, which regime.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stamp_core::NullRegime;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

/// Synthetic LD structure, or a user-supplied genotype panel.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LdProfile {
    /// Block-exchangeable latent correlation 0.10.
    Low,
    /// Block-exchangeable latent correlation 0.45.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    /// Estimate the mixing matrix from each study's own genotypes.
    Internal,
    /// Estimate it once from a shared reference sample.
    External,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_threshold() -> f64 {
    0.5
}
fn default_bootstrap() -> usize {
    199
}
fn default_true() -> bool {
    true
}

/// Full experiment description. Deserializable from a TOML document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDesign {
    /// Total studies S.
    pub n_studies: usize,
    /// Studies with truly associated SNPs, S_C.
    pub n_causal: usize,
    /// SNPs per region.
    pub snps: usize,
    /// Causal SNPs per causal study.
    pub causal_snps: usize,
    pub outcome: OutcomeKind,
    /// Per-study N for causal studies (cases = controls for binary).
    pub sample_size_causal: usize,
    /// Per-study N for null studies.
    pub sample_size_null: usize,
    pub e_mu: f64,
    pub e_tau: f64,
    pub ld: LdProfile,
    pub omega: OmegaMode,
    /// Generation-and-testing regime: "strong" or "weak".
    pub null_regime: DesignRegime,
    pub replications: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Fix all SNPs at one minor-allele frequency instead of drawing
    /// uniformly from [0.05, 0.5].
    #[serde(default)]
    pub maf: Option<f64>,
    /// Optional genotype panel (TSV of 0/1/2) replacing the synthetic
    /// LD model; rows are resampled to form study genotypes.
    #[serde(default)]
    pub panel: Option<PathBuf>,
    /// Greedy pairwise-r^2 pruning threshold applied to a user panel.
    #[serde(default)]
    pub prune_r2: Option<f64>,
    /// Also run the analytic comparison tests.
    #[serde(default = "default_true")]
    pub run_comparisons: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignRegime {
    Strong,
    Weak,
}

impl DesignRegime {
    pub fn to_core(self) -> NullRegime {
        match self {
            DesignRegime::Strong => NullRegime::StrongNull,
            DesignRegime::Weak => NullRegime::WeakNull,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DesignRegime::Strong => "strong",
            DesignRegime::Weak => "weak",
        }
    }
}

impl SimulationDesign {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let design: SimulationDesign = toml::from_str(&text).map_err(|e| SimError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SimError::Design(msg));
        if self.n_studies == 0 {
            return fail("n_studies must be at least 1".into());
        }
        if self.n_causal > self.n_studies {
            return fail(format!(
                "n_causal ({}) exceeds n_studies ({})",
                self.n_causal, self.n_studies
            ));
        }
        if self.snps == 0 || self.causal_snps > self.snps {
            return fail(format!(
                "need 1 <= causal_snps ({}) <= snps ({})",
                self.causal_snps, self.snps
            ));
        }
        if self.sample_size_causal < 2 || self.sample_size_null < 2 {
            return fail("sample sizes must be at least 2".into());
        }
        if self.e_tau < 0.0 || !self.e_tau.is_finite() || !self.e_mu.is_finite() {
            return fail("effect hyperparameters must be finite with e_tau >= 0".into());
        }
        if self.replications == 0 || self.bootstrap_replicates == 0 {
            return fail("replications and bootstrap_replicates must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha {} must lie in (0, 1)", self.alpha));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail(format!("threshold {} must lie in (0, 1)", self.threshold));
        }
        if let Some(m) = self.maf {
            if !(m >= 0.05 && m <= 0.5) {
                return fail(format!("maf {m} must lie in [0.05, 0.5]"));
            }
        }
        if self.null_regime == DesignRegime::Weak && self.n_causal >= self.n_studies {
            return fail(
                "weak-regime designs need at least one null study to act as the control".into(),
            );
        }
        Ok(())
    }
}
