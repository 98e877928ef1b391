//! Rank-r factorization `psi ~ X B V^T` of the (space x half-angle) unknown.
//!
//! Between truncations the core is allowed to be a general square matrix;
//! every truncated sum restores orthonormal bases and a diagonal core with
//! nonincreasing nonnegative entries (QR of the stacked factors, SVD of the
//! projected core, Frobenius-tail cut).

use super::{LowRankVector, RankDesc, TruncationPolicy};
use crate::angular::AngularQuadrature;
use crate::linalg::{thin_qr, thin_svd, truncation_rank};
use crate::operators::{KroneckerOperator, PhaseDims};
use faer::{Mat, MatRef};

#[derive(Debug, Clone)]
pub struct LowRankMatrix {
    /// n_space x r
    pub space_basis: Mat<f64>,
    /// r x r
    pub core: Mat<f64>,
    /// n_half x r
    pub angle_basis: Mat<f64>,
    pub n_theta_half: usize,
    pub n_oz: usize,
}

impl LowRankMatrix {
    pub fn rank(&self) -> usize {
        self.core.ncols()
    }

    pub fn reconstruct(&self) -> Mat<f64> {
        if self.rank() == 0 {
            return Mat::zeros(self.space_basis.nrows(), self.angle_basis.nrows());
        }
        &self.space_basis * &self.core * self.angle_basis.transpose()
    }

    /// Direct construction from factors (no validation beyond shapes).
    pub fn from_factors(
        space_basis: Mat<f64>,
        core: Mat<f64>,
        angle_basis: Mat<f64>,
        n_theta_half: usize,
        n_oz: usize,
    ) -> Self {
        assert_eq!(space_basis.ncols(), core.nrows());
        assert_eq!(angle_basis.ncols(), core.ncols());
        assert_eq!(angle_basis.nrows(), n_theta_half * n_oz);
        LowRankMatrix {
            space_basis,
            core,
            angle_basis,
            n_theta_half,
            n_oz,
        }
    }

    /// Rank-1 outer product `c * u v^T`.
    pub fn rank_one(u: &[f64], v: &[f64], c: f64, n_theta_half: usize, n_oz: usize) -> Self {
        let space = Mat::from_fn(u.len(), 1, |i, _| u[i]);
        let angle = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        let core = Mat::from_fn(1, 1, |_, _| c);
        Self::from_factors(space, core, angle, n_theta_half, n_oz)
    }

    /// Singular values of the factorization (exact when factors are
    /// orthonormal, which holds after any truncated sum).
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rank() == 0 {
            return Vec::new();
        }
        let (_, rx) = thin_qr(self.space_basis.as_ref());
        let (_, rv) = thin_qr(self.angle_basis.as_ref());
        let mid = &rx * &self.core * rv.transpose();
        let (_, s, _) = thin_svd(mid.as_ref());
        s
    }
}

fn zero_matrix(dims: PhaseDims) -> LowRankMatrix {
    LowRankMatrix {
        space_basis: Mat::zeros(dims.n_space, 0),
        core: Mat::zeros(0, 0),
        angle_basis: Mat::zeros(dims.n_angle_half(), 0),
        n_theta_half: dims.n_theta_half,
        n_oz: dims.n_oz,
    }
}

/// Stacks the scaled factors of all terms: `[X_1 | X_2 | ...]`,
/// `[V_1 | V_2 | ...]` and the block-diagonal core with coefficients folded in.
fn concatenate(terms: &[(f64, &LowRankMatrix)]) -> (Mat<f64>, Mat<f64>, Mat<f64>) {
    let n_space = terms[0].1.space_basis.nrows();
    let n_half = terms[0].1.angle_basis.nrows();
    let total: usize = terms.iter().map(|(_, t)| t.rank()).sum();
    let mut xs = Mat::zeros(n_space, total);
    let mut vs = Mat::zeros(n_half, total);
    let mut core = Mat::zeros(total, total);
    let mut off = 0;
    for (c, t) in terms {
        let r = t.rank();
        for j in 0..r {
            for i in 0..n_space {
                xs[(i, off + j)] = t.space_basis[(i, j)];
            }
            for i in 0..n_half {
                vs[(i, off + j)] = t.angle_basis[(i, j)];
            }
            for i in 0..r {
                core[(off + i, off + j)] = c * t.core[(i, j)];
            }
        }
        off += r;
    }
    (xs, core, vs)
}

impl LowRankVector for LowRankMatrix {
    fn zero(dims: PhaseDims) -> Self {
        zero_matrix(dims)
    }

    fn dims(&self) -> PhaseDims {
        PhaseDims {
            n_space: self.space_basis.nrows(),
            n_theta_half: self.n_theta_half,
            n_oz: self.n_oz,
        }
    }

    fn is_zero_rank(&self) -> bool {
        self.rank() == 0
    }

    fn truncated_sum(terms: &[(f64, &Self)], policy: &TruncationPolicy) -> Self {
        assert!(!terms.is_empty());
        let dims = terms[0].1.dims();
        let live: Vec<(f64, &Self)> = terms
            .iter()
            .filter(|(c, t)| *c != 0.0 && !t.is_zero_rank())
            .map(|&(c, t)| (c, t))
            .collect();
        if live.is_empty() {
            return zero_matrix(dims);
        }
        // Singular values at the rounding noise of the inputs are artifacts
        // of cancellation, not content.
        let input_scale: f64 = live.iter().map(|(c, t)| c.abs() * t.norm()).sum();
        let floor = 64.0 * f64::EPSILON * input_scale;
        let (xs, core, vs) = concatenate(&live);
        let (qx, rx) = thin_qr(xs.as_ref());
        let (qv, rv) = thin_qr(vs.as_ref());
        let mid = &rx * &core * rv.transpose();
        let (u, s, w) = thin_svd(mid.as_ref());
        let mut keep = truncation_rank(&s, policy.rel_tol, policy.max_rank);
        while keep > 0 && s[keep - 1] <= floor {
            keep -= 1;
        }
        if keep == 0 {
            return zero_matrix(dims);
        }
        let space_basis = &qx * u.submatrix(0, 0, u.nrows(), keep);
        let angle_basis = &qv * w.submatrix(0, 0, w.nrows(), keep);
        let core = Mat::from_fn(keep, keep, |i, j| if i == j { s[i] } else { 0.0 });
        LowRankMatrix {
            space_basis,
            core,
            angle_basis,
            n_theta_half: dims.n_theta_half,
            n_oz: dims.n_oz,
        }
    }

    fn apply_operator(op: &KroneckerOperator, v: &Self) -> Self {
        assert_eq!(op.dims, v.dims(), "operator/vector dimension mismatch");
        let r = v.rank();
        if r == 0 {
            return zero_matrix(v.dims());
        }
        let k = op.terms.len();
        let n_space = v.space_basis.nrows();
        let n_half = v.angle_basis.nrows();
        let mut xs = Mat::zeros(n_space, k * r);
        let mut vs = Mat::zeros(n_half, k * r);
        let mut core = Mat::zeros(k * r, k * r);
        for (t, term) in op.terms.iter().enumerate() {
            let sx = term.spatial.apply_mat(v.space_basis.as_ref());
            let off = t * r;
            for j in 0..r {
                for i in 0..n_space {
                    xs[(i, off + j)] = sx[(i, j)];
                }
                for i in 0..n_half {
                    vs[(i, off + j)] = term.angle_diag[i] * v.angle_basis[(i, j)];
                }
                for i in 0..r {
                    core[(off + i, off + j)] = v.core[(i, j)];
                }
            }
        }
        LowRankMatrix {
            space_basis: xs,
            core,
            angle_basis: vs,
            n_theta_half: v.n_theta_half,
            n_oz: v.n_oz,
        }
    }

    fn inner(a: &Self, b: &Self) -> f64 {
        if a.is_zero_rank() || b.is_zero_rank() {
            return 0.0;
        }
        // tr(C_a^T (X_a^T X_b) C_b (V_b^T V_a))
        let gx = a.space_basis.transpose() * &b.space_basis;
        let gv = b.angle_basis.transpose() * &a.angle_basis;
        let left = a.core.transpose() * &gx * &b.core;
        let mut acc = 0.0;
        for i in 0..left.nrows() {
            for j in 0..left.ncols() {
                acc += left[(i, j)] * gv[(j, i)];
            }
        }
        acc
    }

    fn integrate_angle(&self, quad: &AngularQuadrature) -> Vec<f64> {
        let n_space = self.space_basis.nrows();
        if self.rank() == 0 {
            return vec![0.0; n_space];
        }
        assert_eq!(quad.n_half(), self.angle_basis.nrows());
        let w = MatRef::from_column_major_slice(&quad.half_weights, quad.n_half(), 1);
        let vw = self.angle_basis.transpose() * w;
        let phi = &self.space_basis * &self.core * &vw;
        (0..n_space).map(|i| phi[(i, 0)]).collect()
    }

    fn rank_one_isotropic(space_col: &[f64], dims: PhaseDims) -> Self {
        let ones = vec![1.0; dims.n_angle_half()];
        Self::rank_one(space_col, &ones, 1.0, dims.n_theta_half, dims.n_oz)
    }

    fn map_space_basis(&self, f: &mut dyn FnMut(&[f64], &mut [f64])) -> Self {
        let n = self.space_basis.nrows();
        let mut out = self.clone();
        let mut buf = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..self.rank() {
            for i in 0..n {
                col[i] = self.space_basis[(i, j)];
            }
            f(&col, &mut buf);
            for i in 0..n {
                out.space_basis[(i, j)] = buf[i];
            }
        }
        out
    }

    fn dof(&self) -> usize {
        let r = self.rank();
        (self.space_basis.nrows() + self.angle_basis.nrows()) * r + r * r
    }

    fn rank_desc(&self) -> RankDesc {
        RankDesc::Matrix { rank: self.rank() }
    }

    fn to_dense(&self) -> Mat<f64> {
        self.reconstruct()
    }

    fn from_dense(dense: &Mat<f64>, policy: &TruncationPolicy, dims: PhaseDims) -> Self {
        assert_eq!(dense.nrows(), dims.n_space);
        assert_eq!(dense.ncols(), dims.n_angle_half());
        let (u, s, v) = thin_svd(dense.as_ref());
        let keep = truncation_rank(&s, policy.rel_tol, policy.max_rank);
        if keep == 0 {
            return zero_matrix(dims);
        }
        LowRankMatrix {
            space_basis: u.submatrix(0, 0, u.nrows(), keep).to_owned(),
            core: Mat::from_fn(keep, keep, |i, j| if i == j { s[i] } else { 0.0 }),
            angle_basis: v.submatrix(0, 0, v.nrows(), keep).to_owned(),
            n_theta_half: dims.n_theta_half,
            n_oz: dims.n_oz,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_diff;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dims(n_space: usize, n_theta_half: usize, n_oz: usize) -> PhaseDims {
        PhaseDims {
            n_space,
            n_theta_half,
            n_oz,
        }
    }

    fn random_lr(rng: &mut ChaCha8Rng, d: PhaseDims, r: usize) -> LowRankMatrix {
        let x = Mat::from_fn(d.n_space, r, |_, _| rng.random_range(-1.0..1.0));
        let c = Mat::from_fn(r, r, |i, j| if i == j { rng.random_range(0.1..2.0) } else { 0.0 });
        let v = Mat::from_fn(d.n_angle_half(), r, |_, _| rng.random_range(-1.0..1.0));
        LowRankMatrix::from_factors(x, c, v, d.n_theta_half, d.n_oz)
    }

    #[test]
    fn parallel_rank_one_terms_merge() {
        let d = dims(6, 2, 2);
        let u = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let v = vec![1.0, -1.0, 0.5, 2.0];
        let a = LowRankMatrix::rank_one(&u, &v, 1.0, 2, 2);
        let sum = LowRankMatrix::truncated_sum(&[(1.0, &a), (1.0, &a)], &TruncationPolicy::default());
        assert_eq!(sum.rank(), 1);
        let mut doubled = a.reconstruct();
        for j in 0..doubled.ncols() {
            for i in 0..doubled.nrows() {
                doubled[(i, j)] *= 2.0;
            }
        }
        assert!(frob_diff(sum.reconstruct().as_ref(), doubled.as_ref()) < 1e-12);
    }

    #[test]
    fn cancellation_gives_rank_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = dims(10, 2, 3);
        let a = random_lr(&mut rng, d, 3);
        let sum = LowRankMatrix::truncated_sum(&[(1.0, &a), (-1.0, &a)], &TruncationPolicy::default());
        assert_eq!(sum.rank(), 0);
        assert!(sum.norm() == 0.0);
    }

    #[test]
    fn truncated_sum_matches_dense_svd_oracle() {
        // 20 random rank-1 terms on 30 x 30: error bound and rank equality
        // against the tail criterion applied to the dense sum's SVD.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = dims(30, 6, 5);
        let terms: Vec<LowRankMatrix> = (0..20)
            .map(|_| random_lr(&mut rng, d, 1))
            .collect();
        let refs: Vec<(f64, &LowRankMatrix)> = terms.iter().map(|t| (1.0, t)).collect();
        let policy = TruncationPolicy::default();
        let sum = LowRankMatrix::truncated_sum(&refs, &policy);

        let mut dense = Mat::zeros(30, 30);
        for t in &terms {
            let r = t.reconstruct();
            for j in 0..30 {
                for i in 0..30 {
                    dense[(i, j)] += r[(i, j)];
                }
            }
        }
        let err = frob_diff(sum.reconstruct().as_ref(), dense.as_ref());
        let norm = dense.norm_l2();
        assert!(err <= policy.rel_tol * norm, "err {err} vs bound {}", policy.rel_tol * norm);

        let (_, s, _) = thin_svd(dense.as_ref());
        let oracle_rank = truncation_rank(&s, policy.rel_tol, None);
        assert_eq!(sum.rank(), oracle_rank);
    }

    #[test]
    fn truncated_sum_restores_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dims(12, 3, 3);
        let a = random_lr(&mut rng, d, 2);
        let b = random_lr(&mut rng, d, 3);
        let s = LowRankMatrix::truncated_sum(&[(1.0, &a), (0.5, &b)], &TruncationPolicy::new(1e-12));
        // orthonormal bases
        let gx = s.space_basis.transpose() * &s.space_basis;
        let gv = s.angle_basis.transpose() * &s.angle_basis;
        for i in 0..s.rank() {
            for j in 0..s.rank() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gx[(i, j)] - want).abs() < 1e-12);
                assert!((gv[(i, j)] - want).abs() < 1e-12);
            }
        }
        // diagonal nonincreasing core
        for i in 0..s.rank() {
            assert!(s.core[(i, i)] >= 0.0);
            if i > 0 {
                assert!(s.core[(i, i)] <= s.core[(i - 1, i - 1)] + 1e-15);
            }
            for j in 0..s.rank() {
                if i != j {
                    assert_eq!(s.core[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn inner_product_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = dims(14, 4, 2);
        let a = random_lr(&mut rng, d, 3);
        let b = random_lr(&mut rng, d, 2);
        let da = a.reconstruct();
        let db = b.reconstruct();
        let mut dot = 0.0;
        for j in 0..da.ncols() {
            for i in 0..da.nrows() {
                dot += da[(i, j)] * db[(i, j)];
            }
        }
        let lr = LowRankMatrix::inner(&a, &b);
        assert!((lr - dot).abs() <= 1e-12 * dot.abs().max(1.0));
        // <a, a> = ||a||^2 >= 0
        assert!(LowRankMatrix::inner(&a, &a) >= 0.0);
        // orthogonal rank-1 factors -> 0
        let u1 = LowRankMatrix::rank_one(&[1.0, 0.0], &[1.0, 1.0], 1.0, 1, 2);
        let u2 = LowRankMatrix::rank_one(&[0.0, 1.0], &[1.0, -0.3], 1.0, 1, 2);
        assert_eq!(LowRankMatrix::inner(&u1, &u2), 0.0);
    }

    #[test]
    fn integrate_angle_rank_one_isotropic() {
        let quad = AngularQuadrature::build(8, 3).unwrap();
        let d = dims(5, 4, 3);
        let f = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let v = LowRankMatrix::rank_one_isotropic(&f, d);
        let phi = v.integrate_angle(&quad);
        for (a, b) in phi.iter().zip(&f) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = LowRankMatrix::zero(d);
        assert_eq!(z.integrate_angle(&quad), vec![0.0; 5]);
    }

    #[test]
    fn integrate_angle_matches_dense_weighted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let quad = AngularQuadrature::build(6, 2).unwrap();
        let d = dims(9, 3, 2);
        let v = random_lr(&mut rng, d, 3);
        let dense = v.reconstruct();
        let phi = v.integrate_angle(&quad);
        for s in 0..9 {
            let mut want = 0.0;
            for a in 0..quad.n_half() {
                want += quad.half_weights[a] * dense[(s, a)];
            }
            assert!((phi[s] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn from_dense_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = dims(20, 4, 4);
        let dense = Mat::from_fn(20, 16, |_, _| rng.random_range(-1.0..1.0));
        let policy = TruncationPolicy::default();
        let lr = LowRankMatrix::from_dense(&dense, &policy, d);
        let err = frob_diff(lr.to_dense().as_ref(), dense.as_ref());
        assert!(err <= policy.rel_tol * dense.norm_l2());

        // rank-1 input recovers rank 1
        let r1 = LowRankMatrix::rank_one(&vec![1.0; 20], &vec![2.0; 16], 1.5, 4, 4);
        let back = LowRankMatrix::from_dense(&r1.reconstruct(), &policy, d);
        assert_eq!(back.rank(), 1);

        // zeros give rank 0
        let z = LowRankMatrix::from_dense(&Mat::zeros(20, 16), &policy, d);
        assert_eq!(z.rank(), 0);
    }

    #[test]
    fn dof_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = dims(31 * 31, 10, 10);
        let v = random_lr(&mut rng, d, 7);
        assert_eq!(v.dof(), (961 + 100) * 7 + 49);
    }
}
