//! Low-rank containers for the even-parity unknown: a rank-r matrix
//! factorization of the (space x half-angle) block and a hierarchical Tucker
//! tensor that further splits the angular variables into omega_z and theta
//! leaves. Both support truncated sums, exact Kronecker-operator application,
//! factor-wise inner products and angular integration, so the conjugate
//! gradient loop never densifies.

mod htt;
mod io;
mod matrix;

pub use htt::{HTTensor, HttNodeValues, Tensor3};
pub use io::{load_container, save_container, StoredContainer};
pub use matrix::LowRankMatrix;

use crate::angular::AngularQuadrature;
use crate::operators::{KroneckerOperator, PhaseDims};
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Relative Frobenius tolerance for every truncation, with an optional hard
/// rank cap. The truncation criterion drops the longest tail of singular
/// values whose combined energy stays below `rel_tol * ||full||_F`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub max_rank: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-6,
            max_rank: None,
        }
    }
}

impl TruncationPolicy {
    pub fn new(rel_tol: f64) -> Self {
        TruncationPolicy {
            rel_tol,
            max_rank: None,
        }
    }
}

/// Rank summary of one container, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum RankDesc {
    Matrix { rank: usize },
    Htt { r1: usize, r23: usize, r2: usize, r3: usize },
    Dense,
}

impl std::fmt::Display for RankDesc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankDesc::Matrix { rank } => write!(f, "{rank}"),
            RankDesc::Htt { r1, r2, r3, .. } => write!(f, "[{r1},{r2},{r3}]"),
            RankDesc::Dense => write!(f, "full"),
        }
    }
}

/// Common interface of the two low-rank formats. The solver loops are generic
/// over this trait; everything stays factorized.
pub trait LowRankVector: Clone + Sized + Send + Sync {
    /// The rank-0 object (empty factors).
    fn zero(dims: PhaseDims) -> Self;

    fn dims(&self) -> PhaseDims;

    fn is_zero_rank(&self) -> bool;

    /// Truncated linear combination `sum_i c_i t_i`. The result satisfies
    /// `||R - sum|| <= rel_tol * ||sum||` in the Frobenius norm and carries
    /// orthonormal factors.
    fn truncated_sum(terms: &[(f64, &Self)], policy: &TruncationPolicy) -> Self;

    /// Exact operator application; output rank is the input rank times the
    /// number of Kronecker terms.
    fn apply_operator(op: &KroneckerOperator, v: &Self) -> Self;

    /// Euclidean inner product of the reconstructions, computed factor-wise.
    fn inner(a: &Self, b: &Self) -> f64;

    fn norm(&self) -> f64 {
        Self::inner(self, self).max(0.0).sqrt()
    }

    /// Scalar flux: weighted angular sum over the half sphere.
    fn integrate_angle(&self, quad: &AngularQuadrature) -> Vec<f64>;

    /// Rank-1 object `space_col (x) ones(angle)`; the building block of the
    /// source-iteration right-hand side.
    fn rank_one_isotropic(space_col: &[f64], dims: PhaseDims) -> Self;

    /// Applies a spatial solve to every column of the spatial basis, leaving
    /// the angular factors untouched (the diffusion-preconditioner action).
    fn map_space_basis(&self, f: &mut dyn FnMut(&[f64], &mut [f64])) -> Self;

    /// Stored degrees of freedom of the factorization.
    fn dof(&self) -> usize;

    fn rank_desc(&self) -> RankDesc;

    fn to_dense(&self) -> Mat<f64>;

    fn from_dense(dense: &Mat<f64>, policy: &TruncationPolicy, dims: PhaseDims) -> Self;
}

/// Convenience free functions mirroring the container operations.
pub fn truncated_sum(
    terms: &[(f64, &LowRankMatrix)],
    policy: &TruncationPolicy,
) -> LowRankMatrix {
    LowRankMatrix::truncated_sum(terms, policy)
}

pub fn truncated_sum_ht(terms: &[(f64, &HTTensor)], policy: &TruncationPolicy) -> HTTensor {
    HTTensor::truncated_sum(terms, policy)
}

pub fn inner_product<V: LowRankVector>(a: &V, b: &V) -> f64 {
    V::inner(a, b)
}

pub fn apply_operator<V: LowRankVector>(op: &KroneckerOperator, v: &V) -> V {
    V::apply_operator(op, v)
}

pub fn integrate_angle<V: LowRankVector>(v: &V, quad: &AngularQuadrature) -> Vec<f64> {
    v.integrate_angle(quad)
}
