//! Per-study region statistics: linear and quadratic combinations of the
//! rotated SNP effects.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::rotate::RotatedEffects;

/// Which region statistic a value represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatKind {
    Linear,
    Quadratic,
}

impl StatKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatKind::Linear => "linear",
            StatKind::Quadratic => "quadratic",
        }
    }
}

/// One study's scalar region statistic plus the geometry needed for its
/// moments under any regime.
#[derive(Debug, Clone)]
pub struct RegionStatistic {
    pub study_id: String,
    pub kind: StatKind,
    /// The value entering the mixture: `T^L`, or the standardized `Q / sqrt(p)`.
    pub value: f64,
    /// The un-standardized statistic; equals `value` for the linear kind.
    pub raw: f64,
    pub p: usize,
    pub geometry: Geometry,
}

/// Linear statistic: `1' P beta_star / sqrt(1' diag(P) 1)` with
/// `P = sigma_star^-1`.
pub fn t_linear(study_id: &str, effects: &RotatedEffects) -> Result<RegionStatistic> {
    let geometry = Geometry::from_precision(&effects.precision);
    check_geometry(study_id, &geometry)?;
    let ones = DVector::from_element(effects.p, 1.0);
    let weights = &effects.precision * ones;
    let num = weights.dot(&effects.beta_star);
    let value = num / geometry.diag_sum.sqrt();
    Ok(RegionStatistic {
        study_id: study_id.to_string(),
        kind: StatKind::Linear,
        value,
        raw: value,
        p: effects.p,
        geometry,
    })
}

/// Quadratic statistic: `Q = beta_star' P^2 beta_star`; the stored value is
/// `Q / sqrt(p)`, the scale on which the normal approximation holds.
pub fn t_quadratic(study_id: &str, effects: &RotatedEffects) -> Result<RegionStatistic> {
    let geometry = Geometry::from_precision(&effects.precision);
    check_geometry(study_id, &geometry)?;
    let raw = quadratic_form(effects);
    let value = raw / (effects.p as f64).sqrt();
    Ok(RegionStatistic {
        study_id: study_id.to_string(),
        kind: StatKind::Quadratic,
        value,
        raw,
        p: effects.p,
        geometry,
    })
}

/// `beta_star' P^2 beta_star`, shared with the bootstrap generators.
pub(crate) fn quadratic_form(effects: &RotatedEffects) -> f64 {
    let v = &effects.precision * &effects.beta_star;
    v.dot(&v)
}

/// Recompute a statistic value for a fresh rotated-effect draw against a
/// fixed geometry, without re-deriving the geometry.
pub(crate) fn statistic_value(
    kind: StatKind,
    geometry: &Geometry,
    precision: &nalgebra::DMatrix<f64>,
    beta_star: &DVector<f64>,
) -> f64 {
    match kind {
        StatKind::Linear => {
            let ones = DVector::from_element(geometry.p, 1.0);
            let weights = precision * ones;
            weights.dot(beta_star) / geometry.diag_sum.sqrt()
        }
        StatKind::Quadratic => {
            let v = precision * beta_star;
            v.dot(&v) / (geometry.p as f64).sqrt()
        }
    }
}

fn check_geometry(study_id: &str, geometry: &Geometry) -> Result<()> {
    if !geometry.is_valid() {
        return Err(Error::Validation(format!(
            "study '{study_id}': degenerate precision geometry (non-finite or non-positive traces)"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn effects(beta: Vec<f64>, sigma: DMatrix<f64>) -> RotatedEffects {
        let p = beta.len();
        let chol = sigma.clone().cholesky().unwrap();
        RotatedEffects {
            beta_star: DVector::from_vec(beta),
            precision: chol.inverse(),
            chol_lower: chol.l(),
            sigma_star: sigma,
            p,
        }
    }

    #[test]
    fn linear_null_center() {
        let e = effects(vec![0.0; 4], DMatrix::identity(4, 4));
        assert_eq!(t_linear("s", &e).unwrap().value, 0.0);
    }

    #[test]
    fn linear_identity_ones() {
        let e = effects(vec![1.0; 4], DMatrix::identity(4, 4));
        // 1'1 / sqrt(4) = 2
        assert_relative_eq!(t_linear("s", &e).unwrap().value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn linear_scalar_case() {
        // sigma = 4, beta = 2: (2/4) / sqrt(1/4) = 1
        let e = effects(vec![2.0], DMatrix::from_element(1, 1, 4.0));
        assert_relative_eq!(t_linear("s", &e).unwrap().value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_null_center() {
        let e = effects(vec![0.0, 0.0], DMatrix::identity(2, 2));
        let s = t_quadratic("s", &e).unwrap();
        assert_eq!(s.raw, 0.0);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn quadratic_identity() {
        let e = effects(vec![1.0, 2.0], DMatrix::identity(2, 2));
        let s = t_quadratic("s", &e).unwrap();
        assert_relative_eq!(s.raw, 5.0, max_relative = 1e-12);
        assert_relative_eq!(s.value, 5.0 / 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn quadratic_diagonal() {
        // sigma = diag(2, 2), beta = (2, 0): Q = (2/2)^2 + 0 ... = 4/4 = 1
        let e = effects(vec![2.0, 0.0], DMatrix::from_diagonal_element(2, 2, 2.0));
        let s = t_quadratic("s", &e).unwrap();
        assert_relative_eq!(s.raw, 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.value, 1.0 / 2f64.sqrt(), max_relative = 1e-12);
    }

    /// Simultaneously permuting SNP order leaves the linear statistic
    /// unchanged (equivariance collapses to invariance for a scalar) and the
    /// quadratic statistic unchanged.
    #[test]
    fn permutation_behaviour() {
        let sigma = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.2, -0.1, 0.2, 0.8, 0.05, -0.1, 0.05, 1.3],
        );
        let beta = vec![0.4, -0.2, 0.9];
        let perm = [2usize, 0, 1];
        let sigma_p = DMatrix::from_fn(3, 3, |i, j| sigma[(perm[i], perm[j])]);
        let beta_p: Vec<f64> = perm.iter().map(|&i| beta[i]).collect();
        let a = effects(beta, sigma);
        let b = effects(beta_p, sigma_p);
        assert_relative_eq!(
            t_linear("s", &a).unwrap().value,
            t_linear("s", &b).unwrap().value,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            t_quadratic("s", &a).unwrap().value,
            t_quadratic("s", &b).unwrap().value,
            max_relative = 1e-10
        );
    }
}
