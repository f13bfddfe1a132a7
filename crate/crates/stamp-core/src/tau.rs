//! Method-of-moments estimators for the heterogeneity variance `tau`.
//!
//! Two estimating equations over all studies' per-SNP estimates give
//! `E(tau)` and `E(tau^2)`, clipped at zero; the implied variance is
//! `max(0, E(tau^2) - E(tau)^2)`. The estimates feed weak-null bootstrap
//! generation, where per-SNP heterogeneity is drawn from an inverse-gamma
//! matched to these first two moments.

/// Clipped moment estimates of the heterogeneity distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauMoments {
    /// `E(tau)`, clipped at zero.
    pub e_tau: f64,
    /// `E(tau^2)`, clipped at zero.
    pub e_tau2: f64,
    /// `max(0, E(tau^2) - E(tau)^2)`.
    pub var_tau: f64,
}

impl TauMoments {
    pub fn zero() -> Self {
        TauMoments {
            e_tau: 0.0,
            e_tau2: 0.0,
            var_tau: 0.0,
        }
    }
}

/// Solve the two estimating equations over all studies' `(estimate, sd)`
/// pairs. Estimates in, say, the rotated scale come with
/// `sd_j = sqrt(sigma_star[j][j])`.
///
/// First equation: `sum (b^2/s^2 - 1 - E(tau)/s^2) = 0`.
/// Second: `sum (b^4/s^4 - 1 - 3 E(tau^2)/s^4 - 6 E(tau)/s^2) = 0`,
/// evaluated at the clipped `E(tau)`. Clipping absorbs every degenerate
/// input, so this cannot fail.
pub fn estimate_tau_moments<'a, I>(studies: I) -> TauMoments
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut num1 = 0.0;
    let mut den1 = 0.0;
    let mut terms = Vec::new();
    for (betas, sds) in studies {
        assert_eq!(betas.len(), sds.len(), "estimate/sd lengths differ");
        for (&b, &s) in betas.iter().zip(sds) {
            let s2 = s * s;
            let r2 = b * b / s2;
            num1 += r2 - 1.0;
            den1 += 1.0 / s2;
            terms.push((r2, s2));
        }
    }
    if terms.is_empty() || den1 <= 0.0 {
        return TauMoments::zero();
    }
    let e_tau = (num1 / den1).max(0.0);

    let mut num2 = 0.0;
    let mut den2 = 0.0;
    for (r2, s2) in terms {
        num2 += r2 * r2 - 1.0 - 6.0 * e_tau / s2;
        den2 += 3.0 / (s2 * s2);
    }
    let e_tau2 = (num2 / den2).max(0.0);
    let var_tau = (e_tau2 - e_tau * e_tau).max(0.0);
    TauMoments {
        e_tau,
        e_tau2,
        var_tau,
    }
}

/// Shape and scale of the inverse-gamma distribution whose first two moments
/// are `(mean, mean^2 + variance)`. `None` when the target is degenerate
/// (non-positive mean or variance), in which case draws fall back to the
/// point mass at `mean`.
pub fn inv_gamma_params(mean: f64, variance: f64) -> Option<(f64, f64)> {
    if !(mean > 0.0) || !(variance > 0.0) {
        return None;
    }
    let shape = 2.0 + mean * mean / variance;
    let scale = mean * (shape - 1.0);
    Some((shape, scale))
}
