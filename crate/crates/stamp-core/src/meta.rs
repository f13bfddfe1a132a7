//! Comparison meta-analysis statistics with analytic strong-null references,
//! plus the per-study p-values used in reports.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::bootstrap::RegionSet;
use crate::error::{Error, Result};
use crate::stats::StatKind;

/// Two-sided standard-normal p-value.
pub fn normal_two_sided(z: f64) -> f64 {
    let n = Normal::standard();
    2.0 * n.cdf(-z.abs())
}

/// Upper-tail standard-normal p-value.
pub fn normal_upper(z: f64) -> f64 {
    Normal::standard().cdf(-z)
}

/// Upper-tail chi-squared p-value.
pub fn chisq_upper(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").sf(x)
}

/// Inverse-variance-weighted sum of the per-study linear statistics, with
/// each weight the strong-null variance. Standard normal under the strong
/// null; returns the statistic and its two-sided p-value.
pub fn het_meta_linear(set: &RegionSet) -> Result<(f64, f64)> {
    require_kind(set, StatKind::Linear, "het_meta_linear")?;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &set.studies {
        let g = &s.stat.geometry;
        let v0 = g.one[0] / g.diag_sum;
        num += s.stat.value / v0;
        den += 1.0 / v0;
    }
    let stat = num / den.sqrt();
    Ok((stat, normal_two_sided(stat)))
}

/// Sum of the per-study raw quadratic forms, referenced against the normal
/// approximation with strong-null mean `sum tr(P)` and variance
/// `sum 2 tr(P^2)`. Upper-tail p-value.
pub fn het_meta_quadratic(set: &RegionSet) -> Result<(f64, f64)> {
    require_kind(set, StatKind::Quadratic, "het_meta_quadratic")?;
    let stat: f64 = set.studies.iter().map(|s| s.stat.raw).sum();
    let mean: f64 = set.studies.iter().map(|s| s.stat.geometry.tr[0]).sum();
    let var: f64 = set.studies.iter().map(|s| 2.0 * s.stat.geometry.tr[1]).sum();
    let z = (stat - mean) / var.sqrt();
    Ok((stat, normal_upper(z)))
}

/// Sum of per-study Mahalanobis forms `beta_star' P beta_star`; chi-squared
/// with `sum p_s` degrees of freedom under the strong null.
pub fn hotelling_meta(set: &RegionSet) -> Result<(f64, f64)> {
    let mut stat = 0.0;
    let mut df = 0usize;
    for s in &set.studies {
        let v = &s.effects.precision * &s.effects.beta_star;
        stat += v.dot(&s.effects.beta_star);
        df += s.effects.p;
    }
    Ok((stat, chisq_upper(stat, df as f64)))
}

/// Per-study p-values under strong-null moments: two-sided normal for the
/// linear statistic, upper-tail normal for the standardized quadratic.
pub fn single_study_pvalues(set: &RegionSet) -> Vec<f64> {
    set.studies
        .iter()
        .map(|s| {
            let g = &s.stat.geometry;
            match set.kind {
                StatKind::Linear => {
                    let v0 = g.one[0] / g.diag_sum;
                    normal_two_sided(s.stat.value / v0.sqrt())
                }
                StatKind::Quadratic => {
                    let p = s.stat.p as f64;
                    let mean = g.tr[0] / p.sqrt();
                    let var = 2.0 * g.tr[1] / p;
                    normal_upper((s.stat.value - mean) / var.sqrt())
                }
            }
        })
        .collect()
}

fn require_kind(set: &RegionSet, kind: StatKind, what: &str) -> Result<()> {
    if set.kind != kind {
        return Err(Error::Validation(format!(
            "{what} needs {} statistics, got {}",
            kind.as_str(),
            set.kind.as_str()
        )));
    }
    Ok(())
}
