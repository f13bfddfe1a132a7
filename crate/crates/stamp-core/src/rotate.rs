//! Rotation of marginal estimates onto the joint-effect scale.
//!
//! Marginal one-SNP-at-a-time estimates converge to a mixed version of the
//! joint effects, `beta = omega * gamma`. Multiplying by `omega^-1` recovers
//! the joint-effect scale, and the rotated covariance
//! `sigma_star = omega^-1 sigma omega'^-1` becomes the common currency of
//! all downstream statistics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::study::StudyRegionData;

/// Condition number above which a region is declared unusable.
const CONDITION_LIMIT: f64 = 1e8;
/// Relative eigenvalue floor below which the matrix counts as rank deficient:
/// a ridge cannot rescue it, only mask it.
const RANK_DEFICIENT_RATIO: f64 = 1e-12;
/// Relative eigenvalue threshold below which the ridge kicks in.
const RIDGE_TRIGGER_RATIO: f64 = 1e-8;
/// Ridge size, times `trace/p` (which is 1 for a correlation matrix).
const RIDGE_FACTOR: f64 = 1e-6;

/// Rotated effect estimates with their covariance and cached inverse.
#[derive(Debug, Clone)]
pub struct RotatedEffects {
    pub beta_star: DVector<f64>,
    pub sigma_star: DMatrix<f64>,
    /// `sigma_star^-1`, cached because every statistic consumes it.
    pub precision: DMatrix<f64>,
    /// Lower Cholesky factor of `sigma_star`, cached for bootstrap draws.
    pub chol_lower: DMatrix<f64>,
    pub p: usize,
}

/// Covariance of the marginal estimates: `sigma = D upsilon D` with
/// `D = diag(se)`. The lower triangle is mirrored so the result is exactly
/// symmetric, with `se^2` on the diagonal.
pub fn build_sigma(data: &StudyRegionData) -> DMatrix<f64> {
    let se = data.se();
    let ups = data.upsilon();
    let p = data.p();
    let mut sigma = DMatrix::zeros(p, p);
    for i in 0..p {
        sigma[(i, i)] = se[i] * se[i];
        for j in 0..i {
            let v = se[i] * ups[(i, j)] * se[j];
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    sigma
}

/// Invert the mixing matrix and rotate the estimates.
///
/// The mixing matrix factors as `omega = T^-1 upsilon T`, so conditioning and
/// inversion happen on the symmetric `upsilon`: adding a ridge `eps * I` to
/// `upsilon` is identical to adding it to `omega` because `T` is diagonal.
/// Well-conditioned inputs are inverted without any ridge so that exact
/// round trips stay exact; the ridge only enters for borderline spectra, and
/// rank-deficient regions are rejected as [`Error::SingularOmega`].
pub fn rotate(data: &StudyRegionData) -> Result<RotatedEffects> {
    let p = data.p();
    let ups = data.upsilon();
    let eigen = ups.clone().symmetric_eigen();
    let lam_max = eigen.eigenvalues.max();
    let lam_min = eigen.eigenvalues.min();
    if !(lam_max > 0.0) {
        return Err(Error::SingularOmega {
            study: data.study_id().to_string(),
            condition: f64::INFINITY,
        });
    }
    let ridge = RIDGE_FACTOR * ups.trace() / p as f64;
    let conditioned = if lam_min > RIDGE_TRIGGER_RATIO * lam_max {
        ups.clone()
    } else if lam_min > RANK_DEFICIENT_RATIO * lam_max {
        let cond = (lam_max + ridge) / (lam_min + ridge);
        if cond > CONDITION_LIMIT {
            return Err(Error::SingularOmega {
                study: data.study_id().to_string(),
                condition: cond,
            });
        }
        ups + DMatrix::from_diagonal_element(p, p, ridge)
    } else {
        let cond = if lam_min > 0.0 {
            lam_max / lam_min
        } else {
            f64::INFINITY
        };
        return Err(Error::SingularOmega {
            study: data.study_id().to_string(),
            condition: cond,
        });
    };

    let chol = conditioned
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularOmega {
            study: data.study_id().to_string(),
            condition: lam_max / lam_min.max(f64::MIN_POSITIVE),
        })?;

    let t = data.scale();
    // beta_star = omega^-1 beta = T^-1 ups^-1 T beta
    let weighted = DVector::from_fn(p, |i, _| t[i] * data.beta_hat()[i]);
    let solved = chol.solve(&weighted);
    let beta_star = DVector::from_fn(p, |i, _| solved[i] / t[i]);

    // sigma_star = omega^-1 (D ups D) omega'^-1
    //            = T^-1 [ups_c^-1 A ups A ups_c^-1] T^-1,  A = diag(t * se)
    let ups_inv = chol.inverse();
    let a = DVector::from_fn(p, |i, _| t[i] * data.se()[i]);
    // b = ups_c^-1 A  (scale the columns of the inverse)
    let mut b = ups_inv;
    for j in 0..p {
        for i in 0..p {
            b[(i, j)] *= a[j];
        }
    }
    let core = &b * ups * b.transpose();
    let mut sigma_star = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = 0.5 * (core[(i, j)] + core[(j, i)]) / (t[i] * t[j]);
            sigma_star[(i, j)] = v;
            sigma_star[(j, i)] = v;
        }
    }

    let chol_s = sigma_star
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Validation(format!(
            "study '{}': rotated covariance is not positive definite",
            data.study_id()
        )))?;
    let precision = chol_s.inverse();
    let chol_lower = chol_s.l();

    let effects = RotatedEffects {
        beta_star,
        sigma_star,
        precision,
        chol_lower,
        p,
    };
    effects.check_inverse_consistency(data.study_id())?;
    Ok(effects)
}

impl RotatedEffects {
    /// `precision * sigma_star` must be the identity to 1e-8 relative
    /// Frobenius error.
    fn check_inverse_consistency(&self, study: &str) -> Result<()> {
        let prod = &self.precision * &self.sigma_star;
        let ident = DMatrix::<f64>::identity(self.p, self.p);
        let err = (&prod - &ident).norm() / ident.norm();
        if err > 1e-8 {
            return Err(Error::Validation(format!(
                "study '{study}': precision * sigma_star deviates from identity \
                 (relative Frobenius error {err:.3e})"
            )));
        }
        Ok(())
    }
}

/// Expected marginal effects implied by joint effects `gamma` and a genotype
/// covariance: `beta_j = sum_i gamma_i Cov(X_i, X_j) / Var(X_j)`.
///
/// This is a test oracle: rotating its output with the mixing matrix built
/// from the same covariance must recover `gamma` for full-rank covariances.
pub fn marginal_limit_oracle(gamma: &[f64], genotype_cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = gamma.len();
    if genotype_cov.nrows() != p || genotype_cov.ncols() != p {
        return Err(Error::Validation(format!(
            "genotype covariance is {}x{}, expected {p}x{p}",
            genotype_cov.nrows(),
            genotype_cov.ncols()
        )));
    }
    for j in 0..p {
        if !(genotype_cov[(j, j)] > 0.0) {
            return Err(Error::Validation(format!(
                "SNP {j} has non-positive variance; zero-variance SNPs are rejected"
            )));
        }
    }
    Ok((0..p)
        .map(|j| {
            let num: f64 = (0..p).map(|i| gamma[i] * genotype_cov[(i, j)]).sum();
            num / genotype_cov[(j, j)]
        })
        .collect())
}
