//! Per-study summary data for one genomic region.
//!
//! A study contributes marginal SNP effect estimates, their standard errors
//! and the SNP correlation structure. The mixing matrix that maps joint
//! effects to marginal effects is `omega[i][j] = Cov(X_i, X_j) / Var(X_i)`.
//! It always factors as `omega = T^-1 upsilon T` where `upsilon` is the SNP
//! correlation matrix and `T = diag(t)` holds positive per-SNP scales
//! (`t_j = sqrt(Var(X_j))`). We keep that factored form: it makes the unit
//! diagonal automatic and lets every inverse go through a symmetric
//! factorization of `upsilon`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One phenotype/study's marginal estimates and SNP correlation structure.
#[derive(Debug, Clone)]
pub struct StudyRegionData {
    study_id: String,
    snp_ids: Vec<String>,
    beta_hat: DVector<f64>,
    se: DVector<f64>,
    upsilon: DMatrix<f64>,
    /// Per-SNP scale `t_j` of the mixing-matrix factorization.
    scale: DVector<f64>,
    is_control: bool,
}

impl StudyRegionData {
    /// Build from summary statistics only. The genotype-variance scales are
    /// recovered from the standard errors (`Var(X_j)` is proportional to
    /// `1/se_j^2` for marginal GLM fits on a common sample), so
    /// `omega[i][j] = upsilon[i][j] * se_i / se_j`.
    pub fn from_summary(
        study_id: impl Into<String>,
        snp_ids: Vec<String>,
        beta_hat: Vec<f64>,
        se: Vec<f64>,
        upsilon: DMatrix<f64>,
    ) -> Result<Self> {
        let scale: Vec<f64> = se.iter().map(|&s| 1.0 / s).collect();
        Self::with_scales(study_id, snp_ids, beta_hat, se, upsilon, scale)
    }

    /// Build with explicit genotype variances, as when the correlation
    /// structure is estimated from observed genotypes.
    pub fn from_summary_with_variances(
        study_id: impl Into<String>,
        snp_ids: Vec<String>,
        beta_hat: Vec<f64>,
        se: Vec<f64>,
        upsilon: DMatrix<f64>,
        genotype_var: Vec<f64>,
    ) -> Result<Self> {
        if genotype_var.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Validation(
                "genotype variances must be positive and finite".into(),
            ));
        }
        let scale: Vec<f64> = genotype_var.iter().map(|&v| v.sqrt()).collect();
        Self::with_scales(study_id, snp_ids, beta_hat, se, upsilon, scale)
    }

    fn with_scales(
        study_id: impl Into<String>,
        snp_ids: Vec<String>,
        beta_hat: Vec<f64>,
        se: Vec<f64>,
        upsilon: DMatrix<f64>,
        scale: Vec<f64>,
    ) -> Result<Self> {
        let study_id = study_id.into();
        let p = snp_ids.len();
        if p == 0 {
            return Err(Error::Validation(format!(
                "study '{study_id}': a region needs at least one SNP"
            )));
        }
        if beta_hat.len() != p || se.len() != p || scale.len() != p {
            return Err(Error::Validation(format!(
                "study '{study_id}': snp_ids ({}), beta ({}), se ({}) lengths differ",
                p,
                beta_hat.len(),
                se.len()
            )));
        }
        if beta_hat.iter().any(|b| !b.is_finite()) {
            return Err(Error::Validation(format!(
                "study '{study_id}': non-finite beta estimates; drop them first"
            )));
        }
        if se.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::Validation(format!(
                "study '{study_id}': standard errors must be finite and strictly positive"
            )));
        }
        if upsilon.nrows() != p || upsilon.ncols() != p {
            return Err(Error::Validation(format!(
                "study '{study_id}': correlation matrix is {}x{}, expected {p}x{p}",
                upsilon.nrows(),
                upsilon.ncols()
            )));
        }
        for i in 0..p {
            if (upsilon[(i, i)] - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!(
                    "study '{study_id}': correlation diagonal entry {i} is {}, expected 1",
                    upsilon[(i, i)]
                )));
            }
            for j in 0..i {
                let a = upsilon[(i, j)];
                let b = upsilon[(j, i)];
                if (a - b).abs() > 1e-6 {
                    return Err(Error::Validation(format!(
                        "study '{study_id}': correlation matrix is not symmetric at ({i},{j})"
                    )));
                }
                if a.abs() > 1.0 + 1e-9 || !a.is_finite() {
                    return Err(Error::Validation(format!(
                        "study '{study_id}': correlation entry ({i},{j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        // Symmetrize exactly and pin the unit diagonal so downstream
        // products are exactly symmetric.
        let mut ups = upsilon;
        for i in 0..p {
            ups[(i, i)] = 1.0;
            for j in 0..i {
                let v = 0.5 * (ups[(i, j)] + ups[(j, i)]);
                let v = v.clamp(-1.0, 1.0);
                ups[(i, j)] = v;
                ups[(j, i)] = v;
            }
        }
        Ok(Self {
            study_id,
            snp_ids,
            beta_hat: DVector::from_vec(beta_hat),
            se: DVector::from_vec(se),
            upsilon: ups,
            scale: DVector::from_vec(scale),
            is_control: false,
        })
    }

    /// Drop SNPs with non-finite estimates or standard errors, logging one
    /// warning per dropped SNP, and subset the correlation matrix to match.
    /// Returns the surviving index set alongside the cleaned inputs.
    pub fn drop_nonfinite(
        study_id: &str,
        snp_ids: Vec<String>,
        beta_hat: Vec<f64>,
        se: Vec<f64>,
    ) -> (Vec<String>, Vec<f64>, Vec<f64>, Vec<usize>) {
        let mut ids = Vec::with_capacity(snp_ids.len());
        let mut betas = Vec::with_capacity(beta_hat.len());
        let mut ses = Vec::with_capacity(se.len());
        let mut kept = Vec::with_capacity(snp_ids.len());
        for (idx, ((id, b), s)) in snp_ids
            .into_iter()
            .zip(beta_hat.into_iter())
            .zip(se.into_iter())
            .enumerate()
        {
            if b.is_finite() && s.is_finite() {
                ids.push(id);
                betas.push(b);
                ses.push(s);
                kept.push(idx);
            } else {
                log::warn!("study '{study_id}': dropping SNP '{id}' with non-finite beta or se");
            }
        }
        (ids, betas, ses, kept)
    }

    pub fn study_id(&self) -> &str {
        &self.study_id
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    /// SNP count `p` for this study.
    pub fn p(&self) -> usize {
        self.snp_ids.len()
    }

    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    pub fn se(&self) -> &DVector<f64> {
        &self.se
    }

    pub fn upsilon(&self) -> &DMatrix<f64> {
        &self.upsilon
    }

    pub(crate) fn scale(&self) -> &DVector<f64> {
        &self.scale
    }

    /// Materialize the mixing matrix `omega = T^-1 upsilon T`. Unit diagonal
    /// by construction.
    pub fn omega(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| {
            self.upsilon[(i, j)] * self.scale[j] / self.scale[i]
        })
    }

    pub fn is_control(&self) -> bool {
        self.is_control
    }

    pub fn set_control(&mut self, flag: bool) {
        self.is_control = flag;
    }
}
