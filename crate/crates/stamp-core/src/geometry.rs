//! Cached traces and quadratic forms of the rotated-covariance inverse.
//!
//! Every moment formula downstream is a polynomial in these scalars, so one
//! pass of matrix powers per study makes each likelihood evaluation pure
//! arithmetic.

use nalgebra::DMatrix;

/// Scalar summaries of `P = sigma_star^-1` for one study.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub p: usize,
    /// `tr(P^k)` for k = 1..4.
    pub tr: [f64; 4],
    /// `1' P^k 1` for k = 1..4.
    pub one: [f64; 4],
    /// `1' diag(P) 1`, the squared normalizer of the linear statistic.
    /// Equals `tr[0]` by definition; kept under its own name because the
    /// two play different roles.
    pub diag_sum: f64,
    /// `tr(P^2 diag(P^2))`.
    pub tr_p2_diag_p2: f64,
    /// `1' P^2 diag(P^2) 1`.
    pub one_p2_diag_p2: f64,
}

impl Geometry {
    /// Compute all cached scalars from the precision matrix.
    pub fn from_precision(precision: &DMatrix<f64>) -> Self {
        let p = precision.nrows();
        let p2 = precision * precision;
        let p3 = &p2 * precision;
        let p4 = &p2 * &p2;
        let tr = [precision.trace(), p2.trace(), p3.trace(), p4.trace()];
        let one = [precision.sum(), p2.sum(), p3.sum(), p4.sum()];
        let mut tr_p2_diag_p2 = 0.0;
        let mut one_p2_diag_p2 = 0.0;
        for j in 0..p {
            let djj = p2[(j, j)];
            tr_p2_diag_p2 += djj * djj;
            let col_sum: f64 = (0..p).map(|i| p2[(i, j)]).sum();
            one_p2_diag_p2 += col_sum * djj;
        }
        Geometry {
            p,
            tr,
            one,
            diag_sum: tr[0],
            tr_p2_diag_p2,
            one_p2_diag_p2,
        }
    }

    /// All entries finite with positive leading traces.
    pub fn is_valid(&self) -> bool {
        self.p >= 1
            && self.tr.iter().chain(self.one.iter()).all(|v| v.is_finite())
            && self.tr[0] > 0.0
            && self.tr[1] > 0.0
            && self.diag_sum > 0.0
    }

    /// Whether `tr(P^2)` and `1'P^2 1` coincide to relative 1e-6, the
    /// independent-SNP geometry in which within-study heterogeneity and
    /// between-SNP effect variance cannot be told apart.
    pub fn is_degenerate(&self) -> bool {
        (self.tr[1] - self.one[1]).abs() < 1e-6 * self.tr[1]
    }

    /// Relative comparison of the precision-squared summaries, the
    /// identifiability handle for the quadratic mixture.
    pub fn squared_summary_differs(&self, other: &Geometry) -> bool {
        let rel = |a: f64, b: f64| (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300);
        self.p != other.p
            || rel(self.tr[1], other.tr[1])
            || rel(self.one[1], other.one[1])
            || rel(self.tr[2], other.tr[2])
            || rel(self.tr[3], other.tr[3])
            || rel(self.tr_p2_diag_p2, other.tr_p2_diag_p2)
            || rel(self.one_p2_diag_p2, other.one_p2_diag_p2)
    }
}
