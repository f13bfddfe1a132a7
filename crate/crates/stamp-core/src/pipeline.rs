//! End-to-end region test: rotate, fit the mixture, calibrate the LRT by
//! parametric bootstrap, and report per-study posteriors.

use crate::bootstrap::{
    bootstrap_strong, bootstrap_weak_linear, bootstrap_weak_quadratic, BootstrapConfig,
    BootstrapSummary, RegionSet,
};
use crate::error::{Error, Result};
use crate::meta::single_study_pvalues;
use crate::mixture::{classify, fit, posteriors, FitOptions, Hypothesis, MixtureFit, MixtureSpec, NullRegime};
use crate::stats::StatKind;
use crate::study::StudyRegionData;
use crate::tau::{estimate_tau_moments, TauMoments};

/// One full test run's configuration.
#[derive(Debug, Clone)]
pub struct StampOptions {
    pub kind: StatKind,
    pub null_regime: NullRegime,
    /// Study id of the designated negative control; required under the weak
    /// null, ignored under the strong null.
    pub control_id: Option<String>,
    /// Posterior threshold `p*` for calling a study associated.
    pub threshold: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl StampOptions {
    pub fn new(kind: StatKind, null_regime: NullRegime) -> Self {
        StampOptions {
            kind,
            null_regime,
            control_id: None,
            threshold: 0.5,
            replicates: 199,
            seed: 0,
        }
    }
}

/// Per-study line of the report.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub study_id: String,
    pub n_snps: usize,
    pub posterior: f64,
    /// Single-study p-value under strong-null moments.
    pub p_value: f64,
    pub associated: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct StampResult {
    pub studies: Vec<StudyReport>,
    pub lrt_observed: f64,
    /// Bootstrap p-value `#{LRT_obs <= LRT(r)} / R`.
    pub p_value: f64,
    pub fit: MixtureFit,
    pub posteriors: Vec<f64>,
    /// Heterogeneity moment estimates; present under the weak null.
    pub tau_hat: Option<TauMoments>,
    pub bootstrap: BootstrapSummary,
    pub threshold: f64,
}

/// Run the full subset test over one region's studies.
pub fn stamp_test(data: &[StudyRegionData], opts: &StampOptions) -> Result<StampResult> {
    if data.is_empty() {
        return Err(Error::Validation("no studies in the manifest".into()));
    }
    if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
        return Err(Error::Validation(format!(
            "posterior threshold {} must lie strictly inside (0, 1)",
            opts.threshold
        )));
    }

    let control_index = match opts.null_regime {
        NullRegime::WeakNull => {
            let id = opts.control_id.as_deref().ok_or_else(|| {
                Error::Control("weak-null testing requires --control <study_id>".into())
            })?;
            let idx = data
                .iter()
                .position(|d| d.study_id() == id)
                .ok_or_else(|| Error::Control(format!("control study '{id}' not found")))?;
            if !data[idx].is_control() {
                return Err(Error::Control(format!(
                    "study '{id}' is not flagged as a control"
                )));
            }
            Some(idx)
        }
        NullRegime::StrongNull => {
            if let Some(id) = opts.control_id.as_deref() {
                log::warn!("control study '{id}' is ignored under the strong null");
            }
            None
        }
    };

    let set = RegionSet::build(data, opts.kind)?;
    let spec = MixtureSpec {
        kind: opts.kind,
        null_regime: opts.null_regime,
        control_index,
    };

    let tau_hat = match opts.null_regime {
        NullRegime::WeakNull => {
            let pairs = set.rotated_pairs();
            Some(estimate_tau_moments(
                pairs.iter().map(|(b, s)| (b.as_slice(), s.as_slice())),
            ))
        }
        NullRegime::StrongNull => None,
    };

    let stats = set.observed_stats();
    let mut fit_opts = FitOptions::observed(opts.seed);
    fit_opts.tau_hint = tau_hat;
    let mixture_fit = fit(&stats, &spec, Hypothesis::Mixture, &fit_opts)?;
    let post = posteriors(&stats, &mixture_fit, &spec)?;
    let associated = classify(&post, opts.threshold)?;

    let cfg = BootstrapConfig::new(opts.replicates, opts.seed, opts.null_regime);
    let bootstrap = match (opts.null_regime, opts.kind) {
        (NullRegime::StrongNull, _) => bootstrap_strong(&set, &spec, &mixture_fit, &cfg)?,
        (NullRegime::WeakNull, StatKind::Linear) => bootstrap_weak_linear(
            &set,
            &spec,
            &mixture_fit,
            tau_hat.as_ref().expect("weak null estimates tau"),
            &cfg,
        )?,
        (NullRegime::WeakNull, StatKind::Quadratic) => bootstrap_weak_quadratic(
            &set,
            &spec,
            &mixture_fit,
            tau_hat.as_ref().expect("weak null estimates tau"),
            &cfg,
        )?,
    };

    let singles = single_study_pvalues(&set);
    let studies = set
        .studies
        .iter()
        .zip(post.iter())
        .zip(singles.iter())
        .zip(associated.iter())
        .map(|(((ctx, &posterior), &p_value), &assoc)| StudyReport {
            study_id: ctx.study_id.clone(),
            n_snps: ctx.effects.p,
            posterior,
            p_value,
            associated: assoc,
        })
        .collect();

    Ok(StampResult {
        studies,
        lrt_observed: mixture_fit.lrt(),
        p_value: bootstrap.p_value,
        fit: mixture_fit,
        posteriors: post,
        tau_hat,
        bootstrap,
        threshold: opts.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn null_studies(n: usize) -> Vec<StudyRegionData> {
        (0..n)
            .map(|i| {
                let r = 0.05 * (i % 4) as f64;
                let ups = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
                StudyRegionData::from_summary(
                    format!("study{i}"),
                    vec!["a".into(), "b".into()],
                    vec![0.0, 0.0],
                    vec![1.0, 1.1],
                    ups,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn all_zero_input_is_globally_null() {
        let data = null_studies(5);
        let mut opts = StampOptions::new(StatKind::Linear, NullRegime::StrongNull);
        opts.replicates = 49;
        opts.seed = 3;
        let res = stamp_test(&data, &opts).unwrap();
        assert!(res.posteriors.iter().all(|&p| p < 0.5));
        assert!(res.p_value > 0.5, "p = {}", res.p_value);
        assert!(res.studies.iter().all(|s| s.p_value > 0.9));
        assert!(res.tau_hat.is_none());
    }

    #[test]
    fn weak_null_requires_flagged_control() {
        let mut data = null_studies(4);
        let mut opts = StampOptions::new(StatKind::Linear, NullRegime::WeakNull);
        opts.replicates = 9;
        opts.control_id = Some("study0".into());
        // Not flagged yet: refused.
        assert!(matches!(stamp_test(&data, &opts), Err(Error::Control(_))));
        data[0].set_control(true);
        let res = stamp_test(&data, &opts).unwrap();
        assert_eq!(res.posteriors[0], 0.0);
        assert!(res.tau_hat.is_some());
        // Unknown id: refused.
        opts.control_id = Some("nope".into());
        assert!(matches!(stamp_test(&data, &opts), Err(Error::Control(_))));
        // Missing id: refused.
        opts.control_id = None;
        assert!(matches!(stamp_test(&data, &opts), Err(Error::Control(_))));
    }

    #[test]
    fn threshold_validation() {
        let data = null_studies(3);
        let mut opts = StampOptions::new(StatKind::Linear, NullRegime::StrongNull);
        opts.threshold = 1.0;
        assert!(stamp_test(&data, &opts).is_err());
    }
}
