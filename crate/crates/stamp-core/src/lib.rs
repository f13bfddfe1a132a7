//! Region-based meta-analysis of GWAS summary statistics across phenotypes.
//!
//! The crate ingests per-study marginal SNP estimates for one genomic
//! region, rotates them onto the joint-effect scale, combines each study
//! into a linear or quadratic region statistic, and fits a two-component
//! mixture across studies to decide which phenotypes the region is
//! associated with. The likelihood-ratio test against a single density is
//! calibrated by parametric bootstrap under either a strong (no effect, no
//! heterogeneity) or weak (no mean effect) null model.

pub mod bootstrap;
pub mod error;
pub mod geometry;
pub mod io;
pub mod meta;
pub mod mixture;
pub mod moments;
pub mod pipeline;
pub mod rng;
pub mod rotate;
pub mod simplex;
pub mod stats;
pub mod study;
pub mod tau;

pub use bootstrap::{
    bootstrap_strong, bootstrap_weak_linear, bootstrap_weak_quadratic, BootstrapConfig,
    BootstrapSummary, RegionSet, StudyContext,
};
pub use error::{Error, Result};
pub use geometry::Geometry;
pub use meta::{het_meta_linear, het_meta_quadratic, hotelling_meta, single_study_pvalues};
pub use mixture::{
    classify, fit, loglikelihood, posteriors, FitOptions, Hypothesis, MixtureFit, MixtureParams,
    MixtureSpec, NullRegime,
};
pub use moments::{
    statistic_moments, t_linear_moments, t_quadratic_moments, Regime, SuperPopulationMoments,
};
pub use pipeline::{stamp_test, StampOptions, StampResult, StudyReport};
pub use rotate::{build_sigma, marginal_limit_oracle, rotate, RotatedEffects};
pub use stats::{t_linear, t_quadratic, RegionStatistic, StatKind};
pub use study::StudyRegionData;
pub use tau::{estimate_tau_moments, inv_gamma_params, TauMoments};
