//! Super-population moments of the SNP-effect hierarchy and the implied
//! mean/variance of the region statistics under each regime.
//!
//! `mu` is the per-SNP mean effect and `tau` the per-SNP effect variance;
//! both are draws from a super-population described only through moments.
//! Central moments of `mu` are written against `mu_c = mu - E(mu)`. Two
//! composites recur:
//!
//! * `psi  = Var(mu) + E(tau)` — total second-order effect variability;
//! * `zeta = 3 Var(tau) + Var(mu_c^2) + 2 E(tau)^2 + 4 Var(mu) E(tau)` —
//!   the fourth-order composite entering the quadratic-statistic variance.
//!
//! Fields are optional so that a regime can complain precisely when a moment
//! it needs was never set.

use crate::error::{Error, Result};
use crate::stats::RegionStatistic;

/// Which data-generating assumption the moments describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// No mean effect and no heterogeneity.
    StrongNull,
    /// No mean effect; per-SNP heterogeneity variance allowed.
    WeakNull,
    /// Mean effects and heterogeneity both allowed.
    Alternative,
}

impl Regime {
    fn as_str(&self) -> &'static str {
        match self {
            Regime::StrongNull => "strong-null",
            Regime::WeakNull => "weak-null",
            Regime::Alternative => "alternative",
        }
    }
}

/// Moments of the effect super-population. Unset fields are simply unknown;
/// operations fail with [`Error::MissingMoment`] when a regime needs one.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuperPopulationMoments {
    /// `E(mu)`, constrained non-negative (the sign is not identifiable for
    /// the quadratic statistic, so the reflection is removed).
    pub e_mu: Option<f64>,
    /// `E(mu_c^2) = Var(mu)`.
    pub var_mu: Option<f64>,
    /// `E(mu_c^3)`.
    pub skew_mu: Option<f64>,
    /// `E(mu_c^4)`.
    pub kurt_mu: Option<f64>,
    /// `E(tau)`.
    pub e_tau: Option<f64>,
    /// `Var(tau)`.
    pub var_tau: Option<f64>,
}

impl SuperPopulationMoments {
    /// All moments unknown; sufficient for the strong null.
    pub fn none() -> Self {
        Self::default()
    }

    /// Weak-null nuisance moments.
    pub fn weak_null(e_tau: f64, var_tau: Option<f64>) -> Self {
        Self {
            e_tau: Some(e_tau),
            var_tau,
            ..Self::default()
        }
    }

    /// Everything set; the full alternative parameterization.
    pub fn full(
        e_mu: f64,
        var_mu: f64,
        skew_mu: f64,
        kurt_mu: f64,
        e_tau: f64,
        var_tau: f64,
    ) -> Self {
        Self {
            e_mu: Some(e_mu),
            var_mu: Some(var_mu),
            skew_mu: Some(skew_mu),
            kurt_mu: Some(kurt_mu),
            e_tau: Some(e_tau),
            var_tau: Some(var_tau),
        }
    }

    fn require(&self, field: &'static str, regime: Regime) -> Result<f64> {
        let v = match field {
            "e_mu" => self.e_mu,
            "var_mu" => self.var_mu,
            "skew_mu" => self.skew_mu,
            "kurt_mu" => self.kurt_mu,
            "e_tau" => self.e_tau,
            "var_tau" => self.var_tau,
            _ => unreachable!("unknown moment field"),
        };
        v.ok_or(Error::MissingMoment {
            field,
            regime: regime.as_str(),
        })
    }

    /// `psi = Var(mu) + E(tau)`.
    pub fn psi(&self) -> Option<f64> {
        Some(self.var_mu? + self.e_tau?)
    }

    /// `zeta = 3 Var(tau) + Var(mu_c^2) + 2 E(tau)^2 + 4 Var(mu) E(tau)`
    /// with `Var(mu_c^2) = E(mu_c^4) - Var(mu)^2`.
    pub fn zeta(&self) -> Option<f64> {
        let var_mu = self.var_mu?;
        let e_tau = self.e_tau?;
        let var_tau = self.var_tau?;
        let kurt = self.kurt_mu?;
        Some(3.0 * var_tau + (kurt - var_mu * var_mu) + 2.0 * e_tau * e_tau
            + 4.0 * var_mu * e_tau)
    }

    /// Sanity constraints: non-negative variance-like moments, non-negative
    /// mean effect, and the fourth central moment at least the squared second.
    pub fn check(&self) -> Result<()> {
        let nonneg = [
            ("e_mu", self.e_mu),
            ("var_mu", self.var_mu),
            ("e_tau", self.e_tau),
            ("var_tau", self.var_tau),
        ];
        for (name, v) in nonneg {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "moment {name} = {v} must be finite and non-negative"
                    )));
                }
            }
        }
        if let (Some(k), Some(v)) = (self.kurt_mu, self.var_mu) {
            if k < v * v - 1e-12 * v.abs().max(1.0) {
                return Err(Error::Validation(format!(
                    "kurt_mu = {k} below var_mu^2 = {}; not a realizable distribution",
                    v * v
                )));
            }
        }
        Ok(())
    }
}

/// Mean and variance of the linear statistic under `regime`, on the scale of
/// the statistic itself.
///
/// The mean is `E(mu) 1'P1 / sqrt(1'diag(P)1)` (zero under either null) and
/// the variance is `{1'P1 + c 1'P^2 1} / 1'diag(P)1` where `c` is zero under
/// the strong null, `E(tau)` under the weak null and `psi` under the
/// alternative.
pub fn t_linear_moments(
    stat: &RegionStatistic,
    moments: &SuperPopulationMoments,
    regime: Regime,
) -> Result<(f64, f64)> {
    let g = &stat.geometry;
    let (mean, het) = match regime {
        Regime::StrongNull => (0.0, 0.0),
        Regime::WeakNull => (0.0, moments.require("e_tau", regime)?),
        Regime::Alternative => {
            let e_mu = moments.require("e_mu", regime)?;
            let e_tau = moments.require("e_tau", regime)?;
            let var_mu = moments.require("var_mu", regime)?;
            (e_mu * g.one[0] / g.diag_sum.sqrt(), e_tau + var_mu)
        }
    };
    let variance = (g.one[0] + het * g.one[1]) / g.diag_sum;
    Ok((mean, variance))
}

/// Mean and variance of the standardized quadratic statistic `Q / sqrt(p)`
/// under `regime`.
///
/// On the raw `Q` scale the strong null gives `(tr(P), 2 tr(P^2))`; the weak
/// null adds the `E(tau)`/`Var(tau)` terms, and the alternative evaluates the
/// full unconditional moment expansion. The returned pair carries the
/// `1/sqrt(p)` and `1/p` standardization so it can be compared with `value`.
pub fn t_quadratic_moments(
    stat: &RegionStatistic,
    moments: &SuperPopulationMoments,
    regime: Regime,
) -> Result<(f64, f64)> {
    let g = &stat.geometry;
    let (mean_raw, var_raw) = match regime {
        Regime::StrongNull => (g.tr[0], 2.0 * g.tr[1]),
        Regime::WeakNull => {
            let e_tau = moments.require("e_tau", regime)?;
            let var_tau = moments.require("var_tau", regime)?;
            let mean = g.tr[0] + e_tau * g.tr[1];
            let var = 2.0 * g.tr[1]
                + 4.0 * g.tr[2] * e_tau
                + 2.0 * g.tr[3] * e_tau * e_tau
                + 3.0 * g.tr_p2_diag_p2 * var_tau;
            (mean, var)
        }
        Regime::Alternative => {
            let e_mu = moments.require("e_mu", regime)?;
            let var_mu = moments.require("var_mu", regime)?;
            let skew_mu = moments.require("skew_mu", regime)?;
            moments.require("kurt_mu", regime)?;
            let e_tau = moments.require("e_tau", regime)?;
            moments.require("var_tau", regime)?;
            let psi = var_mu + e_tau;
            let zeta = moments.zeta().expect("all fields present");
            let emu2 = e_mu * e_mu;
            let mean = g.tr[0] + psi * g.tr[1] + emu2 * g.one[1];
            let var = 2.0 * g.tr[1]
                + 4.0 * g.tr[2] * psi
                + 4.0 * g.one[3] * emu2 * psi
                + 2.0 * g.tr[3] * psi * psi
                + 4.0 * skew_mu * e_mu * g.one_p2_diag_p2
                + g.tr_p2_diag_p2 * (zeta - 2.0 * psi * psi)
                + 4.0 * g.one[2] * emu2;
            (mean, var)
        }
    };
    let scale = (stat.p as f64).sqrt();
    Ok((mean_raw / scale, var_raw / stat.p as f64))
}

/// Dispatch on the statistic kind.
pub fn statistic_moments(
    stat: &RegionStatistic,
    moments: &SuperPopulationMoments,
    regime: Regime,
) -> Result<(f64, f64)> {
    match stat.kind {
        crate::stats::StatKind::Linear => t_linear_moments(stat, moments, regime),
        crate::stats::StatKind::Quadratic => t_quadratic_moments(stat, moments, regime),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::stats::StatKind;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn identity_stat(kind: StatKind, p: usize) -> RegionStatistic {
        RegionStatistic {
            study_id: "s".into(),
            kind,
            value: 0.0,
            raw: 0.0,
            p,
            geometry: Geometry::from_precision(&DMatrix::identity(p, p)),
        }
    }

    #[test]
    fn linear_strong_null_identity_is_unit_variance() {
        let stat = identity_stat(StatKind::Linear, 7);
        let (m, v) =
            t_linear_moments(&stat, &SuperPopulationMoments::none(), Regime::StrongNull).unwrap();
        assert_eq!(m, 0.0);
        // 1'I1 / 1'diag(I)1 = p/p = 1
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_weak_null_at_zero_tau_matches_strong() {
        let stat = identity_stat(StatKind::Linear, 5);
        let strong =
            t_linear_moments(&stat, &SuperPopulationMoments::none(), Regime::StrongNull).unwrap();
        let weak = t_linear_moments(
            &stat,
            &SuperPopulationMoments::weak_null(0.0, None),
            Regime::WeakNull,
        )
        .unwrap();
        assert_eq!(strong, weak);
    }

    #[test]
    fn linear_alternative_at_boundary_matches_strong() {
        let stat = identity_stat(StatKind::Linear, 5);
        let strong =
            t_linear_moments(&stat, &SuperPopulationMoments::none(), Regime::StrongNull).unwrap();
        let m = SuperPopulationMoments {
            e_mu: Some(0.0),
            e_tau: Some(0.0),
            var_mu: Some(0.0),
            ..Default::default()
        };
        let alt = t_linear_moments(&stat, &m, Regime::Alternative).unwrap();
        assert_eq!(strong, alt);
    }

    #[test]
    fn linear_missing_moment_is_reported() {
        let stat = identity_stat(StatKind::Linear, 3);
        let err = t_linear_moments(&stat, &SuperPopulationMoments::none(), Regime::WeakNull);
        match err {
            Err(Error::MissingMoment { field, .. }) => assert_eq!(field, "e_tau"),
            other => panic!("expected MissingMoment, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_strong_null_identity() {
        let stat = identity_stat(StatKind::Quadratic, 6);
        let (m, v) =
            t_quadratic_moments(&stat, &SuperPopulationMoments::none(), Regime::StrongNull)
                .unwrap();
        // Raw mean p, raw variance 2p, then the sqrt(p) standardization.
        assert_relative_eq!(m, 6.0 / 6f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 12.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn quadratic_weak_null_identity_with_constant_tau() {
        // Identity geometry, E(tau)=t, Var(tau)=0:
        // raw mean p(1+t), raw variance 2p(1+t)^2.
        let p = 5usize;
        let t = 0.7;
        let stat = identity_stat(StatKind::Quadratic, p);
        let (m, v) = t_quadratic_moments(
            &stat,
            &SuperPopulationMoments::weak_null(t, Some(0.0)),
            Regime::WeakNull,
        )
        .unwrap();
        let pf = p as f64;
        assert_relative_eq!(m, pf * (1.0 + t) / pf.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(v, 2.0 * pf * (1.0 + t) * (1.0 + t) / pf, max_relative = 1e-13);
    }

    #[test]
    fn quadratic_alternative_zeroed_matches_strong_exactly() {
        let stat = identity_stat(StatKind::Quadratic, 9);
        let strong =
            t_quadratic_moments(&stat, &SuperPopulationMoments::none(), Regime::StrongNull)
                .unwrap();
        let alt = t_quadratic_moments(
            &stat,
            &SuperPopulationMoments::full(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Regime::Alternative,
        )
        .unwrap();
        assert_eq!(strong, alt);
    }

    #[test]
    fn quadratic_alternative_zero_mu_matches_weak_exactly() {
        // With mu identically zero the alternative collapses onto the weak
        // null for any geometry.
        let prec = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 1.0]);
        let stat = RegionStatistic {
            study_id: "s".into(),
            kind: StatKind::Quadratic,
            value: 0.0,
            raw: 0.0,
            p: 3,
            geometry: Geometry::from_precision(&prec),
        };
        let weak = t_quadratic_moments(
            &stat,
            &SuperPopulationMoments::weak_null(0.4, Some(0.09)),
            Regime::WeakNull,
        )
        .unwrap();
        let alt = t_quadratic_moments(
            &stat,
            &SuperPopulationMoments::full(0.0, 0.0, 0.0, 0.0, 0.4, 0.09),
            Regime::Alternative,
        )
        .unwrap();
        assert_relative_eq!(weak.0, alt.0, max_relative = 1e-14);
        assert_relative_eq!(weak.1, alt.1, max_relative = 1e-14);
    }

    #[test]
    fn moment_sanity_checks() {
        let bad = SuperPopulationMoments {
            kurt_mu: Some(0.5),
            var_mu: Some(1.0),
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let neg = SuperPopulationMoments {
            e_tau: Some(-0.1),
            ..Default::default()
        };
        assert!(neg.check().is_err());
        assert!(SuperPopulationMoments::full(0.1, 0.2, 0.0, 0.05, 0.3, 0.4)
            .check()
            .is_ok());
    }

    #[test]
    fn composites() {
        let m = SuperPopulationMoments::full(0.1, 0.2, 0.0, 0.1, 0.3, 0.4);
        assert_relative_eq!(m.psi().unwrap(), 0.5, max_relative = 1e-14);
        // 3*0.4 + (0.1 - 0.04) + 2*0.09 + 4*0.2*0.3 = 1.2 + 0.06 + 0.18 + 0.24
        assert_relative_eq!(m.zeta().unwrap(), 1.68, max_relative = 1e-14);
    }
}
