//! Hierarchical Tucker tensor over the dimension tree
//!
//! ```text
//!        {x, oz, theta}
//!         /          \
//!       {x}      {oz, theta}
//!                 /      \
//!              {oz}    {theta}
//! ```
//!
//! The root factors as `psi = X * B_root * V23^T` with the angular frame
//! `V23 = (Theta (x) Z) * B23m`, where `B23m` is the (r2 r3) x r23
//! matricization of the transfer tensor with the omega_z index fastest.
//! Angular flat index: `a = j_theta * n_oz + j_oz` — consistent with the
//! theta-major ordering of the quadrature and with the rank-1 splits of the
//! angular diagonals carried by the Kronecker operator.
//!
//! Hierarchical rounding orthogonalizes bottom-up, truncates the root
//! matricization by SVD and the two angular leaves by Gramian
//! eigendecompositions, each with per-node tolerance `rel_tol / sqrt(4)`, so
//! the total relative Frobenius error stays below `rel_tol`.

use super::{LowRankVector, RankDesc, TruncationPolicy};
use crate::angular::AngularQuadrature;
use crate::linalg::{eigh_desc, thin_qr, thin_svd, truncation_rank};
use crate::operators::{KroneckerOperator, PhaseDims};
use faer::{Mat, MatRef};

/// Dense order-3 array, column-major with the first index fastest.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    pub d0: usize,
    pub d1: usize,
    pub d2: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 {
            d0,
            d1,
            d2,
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.d0 * (j + self.d1 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let p = self.idx(i, j, k);
        self.data[p] = v;
    }

    /// View as the (d0 d1) x d2 matricization (contiguous).
    pub fn as_mat(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.d0 * self.d1, self.d2)
    }

    pub fn from_mat(m: MatRef<'_, f64>, d0: usize, d1: usize) -> Self {
        assert_eq!(m.nrows(), d0 * d1);
        let d2 = m.ncols();
        let mut t = Tensor3::zeros(d0, d1, d2);
        for k in 0..d2 {
            for r in 0..d0 * d1 {
                t.data[r + d0 * d1 * k] = m[(r, k)];
            }
        }
        t
    }

    /// `out[i', j, k] = sum_i m[i', i] t[i, j, k]`
    pub fn mode0_mult(&self, m: MatRef<'_, f64>) -> Tensor3 {
        assert_eq!(m.ncols(), self.d0);
        let mut out = Tensor3::zeros(m.nrows(), self.d1, self.d2);
        for k in 0..self.d2 {
            for j in 0..self.d1 {
                for ip in 0..m.nrows() {
                    let mut acc = 0.0;
                    for i in 0..self.d0 {
                        acc += m[(ip, i)] * self.get(i, j, k);
                    }
                    out.set(ip, j, k, acc);
                }
            }
        }
        out
    }

    /// `out[i, j', k] = sum_j m[j', j] t[i, j, k]`
    pub fn mode1_mult(&self, m: MatRef<'_, f64>) -> Tensor3 {
        assert_eq!(m.ncols(), self.d1);
        let mut out = Tensor3::zeros(self.d0, m.nrows(), self.d2);
        for k in 0..self.d2 {
            for jp in 0..m.nrows() {
                for i in 0..self.d0 {
                    let mut acc = 0.0;
                    for j in 0..self.d1 {
                        acc += m[(jp, j)] * self.get(i, j, k);
                    }
                    out.set(i, jp, k, acc);
                }
            }
        }
        out
    }

    /// `out[i, j, k'] = sum_k m[k', k] t[i, j, k]`
    pub fn mode2_mult(&self, m: MatRef<'_, f64>) -> Tensor3 {
        assert_eq!(m.ncols(), self.d2);
        let prod = self.as_mat() * m.transpose();
        Tensor3::from_mat(prod.as_ref(), self.d0, self.d1)
    }

    /// Scales slice k by s[k].
    pub fn scale_mode2(&self, s: &[f64]) -> Tensor3 {
        assert_eq!(s.len(), self.d2);
        let mut out = self.clone();
        for k in 0..self.d2 {
            for r in 0..self.d0 * self.d1 {
                out.data[r + self.d0 * self.d1 * k] *= s[k];
            }
        }
        out
    }

    /// Gramian of the mode-0 unfolding: `G = T_(0) T_(0)^T` (d0 x d0).
    pub fn gram_mode0(&self) -> Mat<f64> {
        let mut g = Mat::zeros(self.d0, self.d0);
        for k in 0..self.d2 {
            for j in 0..self.d1 {
                let base = self.d0 * (j + self.d1 * k);
                for a in 0..self.d0 {
                    let va = self.data[base + a];
                    for b in 0..=a {
                        g[(a, b)] += va * self.data[base + b];
                    }
                }
            }
        }
        for a in 0..self.d0 {
            for b in (a + 1)..self.d0 {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// Gramian of the mode-1 unfolding (d1 x d1).
    pub fn gram_mode1(&self) -> Mat<f64> {
        let mut g = Mat::zeros(self.d1, self.d1);
        for k in 0..self.d2 {
            for a in 0..self.d1 {
                for b in 0..=a {
                    let mut acc = 0.0;
                    for i in 0..self.d0 {
                        acc += self.get(i, a, k) * self.get(i, b, k);
                    }
                    g[(a, b)] += acc;
                }
            }
        }
        for a in 0..self.d1 {
            for b in (a + 1)..self.d1 {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }
}

/// Hierarchical Tucker container for the even-parity unknown.
#[derive(Debug, Clone)]
pub struct HTTensor {
    /// n_space x r1
    pub leaf_x: Mat<f64>,
    /// n_oz x r2
    pub leaf_oz: Mat<f64>,
    /// n_theta_half x r3
    pub leaf_theta: Mat<f64>,
    /// r2 x r3 x r23 transfer tensor of the angular node.
    pub transfer_23: Tensor3,
    /// r1 x r23 root transfer.
    pub transfer_root: Mat<f64>,
}

impl HTTensor {
    /// Hierarchical ranks (r1, r23, r2, r3).
    pub fn ranks(&self) -> (usize, usize, usize, usize) {
        (
            self.leaf_x.ncols(),
            self.transfer_root.ncols(),
            self.leaf_oz.ncols(),
            self.leaf_theta.ncols(),
        )
    }

    fn n_half(&self) -> usize {
        self.leaf_oz.nrows() * self.leaf_theta.nrows()
    }

    /// Angular frame `V23 = (Theta (x) Z) B23m`, n_half x r23.
    pub fn angular_frame(&self) -> Mat<f64> {
        let (noz, nth) = (self.leaf_oz.nrows(), self.leaf_theta.nrows());
        let r23 = self.transfer_root.ncols();
        let mut v23 = Mat::zeros(noz * nth, r23);
        // column l23: vec over a = jt * noz + jz of (Z * M_l23 * Theta^T)[jz, jt]
        for l23 in 0..r23 {
            let m = Mat::from_fn(self.transfer_23.d0, self.transfer_23.d1, |l2, l3| {
                self.transfer_23.get(l2, l3, l23)
            });
            let slab = &self.leaf_oz * &m * self.leaf_theta.transpose();
            for jt in 0..nth {
                for jz in 0..noz {
                    v23[(jt * noz + jz, l23)] = slab[(jz, jt)];
                }
            }
        }
        v23
    }

    pub fn reconstruct(&self) -> Mat<f64> {
        if self.is_zero_rank() {
            return Mat::zeros(self.leaf_x.nrows(), self.n_half());
        }
        &self.leaf_x * &self.transfer_root * self.angular_frame().transpose()
    }

    /// Exact linear combination: factors concatenate, transfers embed into
    /// disjoint blocks, coefficients fold into the root transfer.
    pub fn exact_sum(terms: &[(f64, &HTTensor)]) -> HTTensor {
        assert!(!terms.is_empty());
        let dims = terms[0].1.dims();
        let live: Vec<(f64, &HTTensor)> = terms
            .iter()
            .filter(|(c, t)| *c != 0.0 && !t.is_zero_rank())
            .map(|&(c, t)| (c, t))
            .collect();
        if live.is_empty() {
            return HTTensor::zero(dims);
        }
        let tot1: usize = live.iter().map(|(_, t)| t.leaf_x.ncols()).sum();
        let tot2: usize = live.iter().map(|(_, t)| t.leaf_oz.ncols()).sum();
        let tot3: usize = live.iter().map(|(_, t)| t.leaf_theta.ncols()).sum();
        let tot23: usize = live.iter().map(|(_, t)| t.transfer_root.ncols()).sum();
        let mut leaf_x = Mat::zeros(dims.n_space, tot1);
        let mut leaf_oz = Mat::zeros(dims.n_oz, tot2);
        let mut leaf_theta = Mat::zeros(dims.n_theta_half, tot3);
        let mut transfer_23 = Tensor3::zeros(tot2, tot3, tot23);
        let mut transfer_root = Mat::zeros(tot1, tot23);
        let (mut o1, mut o2, mut o3, mut o23) = (0, 0, 0, 0);
        for (c, t) in &live {
            let (r1, r23, r2, r3) = t.ranks();
            for j in 0..r1 {
                for i in 0..dims.n_space {
                    leaf_x[(i, o1 + j)] = t.leaf_x[(i, j)];
                }
            }
            for j in 0..r2 {
                for i in 0..dims.n_oz {
                    leaf_oz[(i, o2 + j)] = t.leaf_oz[(i, j)];
                }
            }
            for j in 0..r3 {
                for i in 0..dims.n_theta_half {
                    leaf_theta[(i, o3 + j)] = t.leaf_theta[(i, j)];
                }
            }
            for k in 0..r23 {
                for j in 0..r3 {
                    for i in 0..r2 {
                        transfer_23.set(o2 + i, o3 + j, o23 + k, t.transfer_23.get(i, j, k));
                    }
                }
            }
            for k in 0..r23 {
                for i in 0..r1 {
                    transfer_root[(o1 + i, o23 + k)] = c * t.transfer_root[(i, k)];
                }
            }
            o1 += r1;
            o2 += r2;
            o3 += r3;
            o23 += r23;
        }
        HTTensor {
            leaf_x,
            leaf_oz,
            leaf_theta,
            transfer_23,
            transfer_root,
        }
    }

    /// Brings all non-root nodes to orthonormal columns, pushing the
    /// triangular factors toward the root.
    pub fn orthogonalize(&mut self) {
        if self.is_zero_rank() {
            return;
        }
        let (q2, r2) = thin_qr(self.leaf_oz.as_ref());
        self.leaf_oz = q2;
        self.transfer_23 = self.transfer_23.mode0_mult(r2.as_ref());
        let (q3, r3) = thin_qr(self.leaf_theta.as_ref());
        self.leaf_theta = q3;
        self.transfer_23 = self.transfer_23.mode1_mult(r3.as_ref());
        let (q1, r1) = thin_qr(self.leaf_x.as_ref());
        self.leaf_x = q1;
        self.transfer_root = &r1 * &self.transfer_root;
        let (q23, r23) = thin_qr(self.transfer_23.as_mat());
        self.transfer_23 = Tensor3::from_mat(q23.as_ref(), self.transfer_23.d0, self.transfer_23.d1);
        self.transfer_root = &self.transfer_root * r23.transpose();
    }

    /// Hierarchical rounding to the policy tolerance.
    pub fn truncate(&self, policy: &TruncationPolicy) -> HTTensor {
        self.truncate_with_floor(policy, 0.0)
    }

    /// Rounding with an additional absolute singular-value floor; the
    /// truncated sum uses it to drop cancellation noise.
    pub fn truncate_with_floor(&self, policy: &TruncationPolicy, floor: f64) -> HTTensor {
        let dims = self.dims();
        let mut t = self.clone();
        t.orthogonalize();
        if t.is_zero_rank() {
            return HTTensor::zero(dims);
        }
        let total_norm = t.transfer_root.norm_l2();
        if total_norm <= floor {
            return HTTensor::zero(dims);
        }
        // Four truncated nodes share the error budget.
        let node_rel = policy.rel_tol / 2.0;

        // Root split {x} | {oz, theta}: one SVD serves both children.
        let (u, s, w) = thin_svd(t.transfer_root.as_ref());
        let mut keep = truncation_rank(&s, node_rel, policy.max_rank);
        while keep > 0 && s[keep - 1] <= floor {
            keep -= 1;
        }
        if keep == 0 {
            return HTTensor::zero(dims);
        }
        let leaf_x = &t.leaf_x * u.submatrix(0, 0, u.nrows(), keep);
        let b23m = t.transfer_23.as_mat() * w.submatrix(0, 0, w.nrows(), keep);
        let mut b23 = Tensor3::from_mat(b23m.as_ref(), t.transfer_23.d0, t.transfer_23.d1);
        let s_kept = s[..keep].to_vec();

        // omega_z leaf: Gramian of the S-weighted mode-0 unfolding.
        let weighted = b23.scale_mode2(&s_kept);
        let (q2, lam2) = eigh_desc(weighted.gram_mode0().as_ref());
        let sv2: Vec<f64> = lam2.iter().map(|l| l.sqrt()).collect();
        let keep2 = truncation_rank(&sv2, node_rel, policy.max_rank).max(1);
        let q2k = q2.submatrix(0, 0, q2.nrows(), keep2);
        let leaf_oz = &t.leaf_oz * q2k;
        b23 = b23.mode0_mult(q2k.transpose());

        // theta leaf, from the state after the omega_z projection.
        let weighted = b23.scale_mode2(&s_kept);
        let (q3, lam3) = eigh_desc(weighted.gram_mode1().as_ref());
        let sv3: Vec<f64> = lam3.iter().map(|l| l.sqrt()).collect();
        let keep3 = truncation_rank(&sv3, node_rel, policy.max_rank).max(1);
        let q3k = q3.submatrix(0, 0, q3.nrows(), keep3);
        let leaf_theta = &t.leaf_theta * q3k;
        b23 = b23.mode1_mult(q3k.transpose());

        // Restore orthonormal transfer columns; the triangular factor and the
        // singular values fold into the root.
        let (qm, rm) = thin_qr(b23.as_mat());
        let transfer_23 = Tensor3::from_mat(qm.as_ref(), keep2, keep3);
        let mut transfer_root = rm.transpose().to_owned();
        for i in 0..keep {
            for j in 0..transfer_root.ncols() {
                transfer_root[(i, j)] *= s_kept[i];
            }
        }
        // transfer_root rows correspond to the x-side singular directions
        HTTensor {
            leaf_x,
            leaf_oz,
            leaf_theta,
            transfer_23,
            transfer_root,
        }
    }

    /// Per-node singular values of the matricizations: the root split
    /// (shared by the {x} and {oz, theta} nodes) and the two angular leaves.
    pub fn node_singular_values(&self) -> HttNodeValues {
        if self.is_zero_rank() {
            return HttNodeValues::default();
        }
        let mut t = self.clone();
        t.orthogonalize();
        let (_, s, w) = thin_svd(t.transfer_root.as_ref());
        let b23m = t.transfer_23.as_mat() * &w;
        let b23 = Tensor3::from_mat(b23m.as_ref(), t.transfer_23.d0, t.transfer_23.d1);
        let weighted = b23.scale_mode2(&s);
        let (_, lam2) = eigh_desc(weighted.gram_mode0().as_ref());
        let (_, lam3) = eigh_desc(weighted.gram_mode1().as_ref());
        HttNodeValues {
            root_split: s,
            oz: lam2.iter().map(|l| l.sqrt()).collect(),
            theta: lam3.iter().map(|l| l.sqrt()).collect(),
        }
    }
}

/// Singular values per dimension-tree node.
#[derive(Debug, Clone, Default)]
pub struct HttNodeValues {
    /// Singular values of the space vs angle matricization (the {x} node and
    /// the {oz, theta} node share these).
    pub root_split: Vec<f64>,
    pub oz: Vec<f64>,
    pub theta: Vec<f64>,
}

impl LowRankVector for HTTensor {
    fn zero(dims: PhaseDims) -> Self {
        HTTensor {
            leaf_x: Mat::zeros(dims.n_space, 0),
            leaf_oz: Mat::zeros(dims.n_oz, 0),
            leaf_theta: Mat::zeros(dims.n_theta_half, 0),
            transfer_23: Tensor3::zeros(0, 0, 0),
            transfer_root: Mat::zeros(0, 0),
        }
    }

    fn dims(&self) -> PhaseDims {
        PhaseDims {
            n_space: self.leaf_x.nrows(),
            n_theta_half: self.leaf_theta.nrows(),
            n_oz: self.leaf_oz.nrows(),
        }
    }

    fn is_zero_rank(&self) -> bool {
        let (r1, r23, r2, r3) = self.ranks();
        r1 == 0 || r23 == 0 || r2 == 0 || r3 == 0
    }

    fn truncated_sum(terms: &[(f64, &Self)], policy: &TruncationPolicy) -> Self {
        let input_scale: f64 = terms.iter().map(|(c, t)| c.abs() * t.norm()).sum();
        let floor = 64.0 * f64::EPSILON * input_scale;
        let sum = Self::exact_sum(terms);
        sum.truncate_with_floor(policy, floor)
    }

    fn apply_operator(op: &KroneckerOperator, v: &Self) -> Self {
        assert_eq!(op.dims, v.dims(), "operator/vector dimension mismatch");
        if v.is_zero_rank() {
            return HTTensor::zero(v.dims());
        }
        let pieces: Vec<HTTensor> = op
            .terms
            .iter()
            .map(|term| {
                let leaf_x = term.spatial.apply_mat(v.leaf_x.as_ref());
                let mut leaf_oz = v.leaf_oz.clone();
                for i in 0..leaf_oz.nrows() {
                    for j in 0..leaf_oz.ncols() {
                        leaf_oz[(i, j)] *= term.oz_diag[i];
                    }
                }
                let mut leaf_theta = v.leaf_theta.clone();
                for i in 0..leaf_theta.nrows() {
                    for j in 0..leaf_theta.ncols() {
                        leaf_theta[(i, j)] *= term.theta_diag[i];
                    }
                }
                HTTensor {
                    leaf_x,
                    leaf_oz,
                    leaf_theta,
                    transfer_23: v.transfer_23.clone(),
                    transfer_root: v.transfer_root.clone(),
                }
            })
            .collect();
        let refs: Vec<(f64, &HTTensor)> = pieces.iter().map(|p| (1.0, p)).collect();
        Self::exact_sum(&refs)
    }

    fn inner(a: &Self, b: &Self) -> f64 {
        if a.is_zero_rank() || b.is_zero_rank() {
            return 0.0;
        }
        let gx = a.leaf_x.transpose() * &b.leaf_x;
        let gz = a.leaf_oz.transpose() * &b.leaf_oz;
        let gt = a.leaf_theta.transpose() * &b.leaf_theta;
        // G_23[c_a, c_b] = gt[l3a, l3b] * gz[l2a, l2b], c = l3 * r2 + l2
        let (r2a, r3a) = (a.transfer_23.d0, a.transfer_23.d1);
        let (r2b, r3b) = (b.transfer_23.d0, b.transfer_23.d1);
        let mut g23 = Mat::zeros(r2a * r3a, r2b * r3b);
        for l3a in 0..r3a {
            for l2a in 0..r2a {
                for l3b in 0..r3b {
                    for l2b in 0..r2b {
                        g23[(l3a * r2a + l2a, l3b * r2b + l2b)] =
                            gt[(l3a, l3b)] * gz[(l2a, l2b)];
                    }
                }
            }
        }
        // Gv[ka, kb] = V23a^T V23b = B23ma^T G23 B23mb
        let gv = a.transfer_23.as_mat().transpose() * &g23 * b.transfer_23.as_mat();
        let left = a.transfer_root.transpose() * &gx * &b.transfer_root;
        let mut acc = 0.0;
        for i in 0..left.nrows() {
            for j in 0..left.ncols() {
                acc += left[(i, j)] * gv[(i, j)];
            }
        }
        acc
    }

    fn integrate_angle(&self, quad: &AngularQuadrature) -> Vec<f64> {
        let n_space = self.leaf_x.nrows();
        if self.is_zero_rank() {
            return vec![0.0; n_space];
        }
        let (wt, wz) = quad.half_weights_split();
        assert_eq!(wt.len(), self.leaf_theta.nrows());
        assert_eq!(wz.len(), self.leaf_oz.nrows());
        let tw = self.leaf_theta.transpose() * MatRef::from_column_major_slice(&wt, wt.len(), 1);
        let zw = self.leaf_oz.transpose() * MatRef::from_column_major_slice(&wz, wz.len(), 1);
        // (V23^T w)[l23] = sum_{l2, l3} B23[l2, l3, l23] zw[l2] tw[l3]
        let r23 = self.transfer_root.ncols();
        let mut vw = Mat::zeros(r23, 1);
        for k in 0..r23 {
            let mut acc = 0.0;
            for l3 in 0..self.transfer_23.d1 {
                for l2 in 0..self.transfer_23.d0 {
                    acc += self.transfer_23.get(l2, l3, k) * zw[(l2, 0)] * tw[(l3, 0)];
                }
            }
            vw[(k, 0)] = acc;
        }
        let phi = &self.leaf_x * &self.transfer_root * &vw;
        (0..n_space).map(|i| phi[(i, 0)]).collect()
    }

    fn rank_one_isotropic(space_col: &[f64], dims: PhaseDims) -> Self {
        let leaf_x = Mat::from_fn(space_col.len(), 1, |i, _| space_col[i]);
        let leaf_oz = Mat::from_fn(dims.n_oz, 1, |_, _| 1.0);
        let leaf_theta = Mat::from_fn(dims.n_theta_half, 1, |_, _| 1.0);
        let mut transfer_23 = Tensor3::zeros(1, 1, 1);
        transfer_23.set(0, 0, 0, 1.0);
        let transfer_root = Mat::from_fn(1, 1, |_, _| 1.0);
        HTTensor {
            leaf_x,
            leaf_oz,
            leaf_theta,
            transfer_23,
            transfer_root,
        }
    }

    fn map_space_basis(&self, f: &mut dyn FnMut(&[f64], &mut [f64])) -> Self {
        let n = self.leaf_x.nrows();
        let mut out = self.clone();
        let mut buf = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..self.leaf_x.ncols() {
            for i in 0..n {
                col[i] = self.leaf_x[(i, j)];
            }
            f(&col, &mut buf);
            for i in 0..n {
                out.leaf_x[(i, j)] = buf[i];
            }
        }
        out
    }

    fn dof(&self) -> usize {
        let (r1, r23, r2, r3) = self.ranks();
        self.leaf_x.nrows() * r1
            + self.leaf_oz.nrows() * r2
            + self.leaf_theta.nrows() * r3
            + r1 * r23
            + r2 * r3 * r23
    }

    fn rank_desc(&self) -> RankDesc {
        let (r1, r23, r2, r3) = self.ranks();
        RankDesc::Htt { r1, r23, r2, r3 }
    }

    fn to_dense(&self) -> Mat<f64> {
        self.reconstruct()
    }

    fn from_dense(dense: &Mat<f64>, policy: &TruncationPolicy, dims: PhaseDims) -> Self {
        assert_eq!(dense.nrows(), dims.n_space);
        assert_eq!(dense.ncols(), dims.n_angle_half());
        let node_rel = policy.rel_tol / 2.0;
        let (u, s, w) = thin_svd(dense.as_ref());
        let keep = truncation_rank(&s, node_rel, policy.max_rank);
        if keep == 0 {
            return HTTensor::zero(dims);
        }
        let leaf_x = u.submatrix(0, 0, u.nrows(), keep).to_owned();
        // S-weighted angular frame as a (n_oz, n_theta_half, keep) tensor
        let mut y = Tensor3::zeros(dims.n_oz, dims.n_theta_half, keep);
        for l in 0..keep {
            for jt in 0..dims.n_theta_half {
                for jz in 0..dims.n_oz {
                    y.set(jz, jt, l, w[(jt * dims.n_oz + jz, l)] * s[l]);
                }
            }
        }
        let (q2, lam2) = eigh_desc(y.gram_mode0().as_ref());
        let sv2: Vec<f64> = lam2.iter().map(|l| l.sqrt()).collect();
        let keep2 = truncation_rank(&sv2, node_rel, policy.max_rank).max(1);
        let q2k = q2.submatrix(0, 0, q2.nrows(), keep2).to_owned();
        let (q3, lam3) = eigh_desc(y.gram_mode1().as_ref());
        let sv3: Vec<f64> = lam3.iter().map(|l| l.sqrt()).collect();
        let keep3 = truncation_rank(&sv3, node_rel, policy.max_rank).max(1);
        let q3k = q3.submatrix(0, 0, q3.nrows(), keep3).to_owned();

        // B23m_raw = (Q3 (x) Q2)^T W_k, then re-orthonormalize.
        let mut b23_raw = Tensor3::zeros(keep2, keep3, keep);
        for l in 0..keep {
            // slab[jz, jt] = W[(jt n_oz + jz), l]
            let slab = Mat::from_fn(dims.n_oz, dims.n_theta_half, |jz, jt| {
                w[(jt * dims.n_oz + jz, l)]
            });
            let reduced = q2k.transpose() * &slab * &q3k;
            for l3 in 0..keep3 {
                for l2 in 0..keep2 {
                    b23_raw.set(l2, l3, l, reduced[(l2, l3)]);
                }
            }
        }
        let (qm, rm) = thin_qr(b23_raw.as_mat());
        let transfer_23 = Tensor3::from_mat(qm.as_ref(), keep2, keep3);
        let mut transfer_root = rm.transpose().to_owned();
        for i in 0..keep {
            for j in 0..transfer_root.ncols() {
                transfer_root[(i, j)] *= s[i];
            }
        }
        HTTensor {
            leaf_x,
            leaf_oz: q2k,
            leaf_theta: q3k,
            transfer_23,
            transfer_root,
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

    fn random_htt(rng: &mut ChaCha8Rng, d: PhaseDims, r: (usize, usize, usize, usize)) -> HTTensor {
        let (r1, r23, r2, r3) = r;
        let mut t23 = Tensor3::zeros(r2, r3, r23);
        for v in &mut t23.data {
            *v = rng.random_range(-1.0..1.0);
        }
        HTTensor {
            leaf_x: Mat::from_fn(d.n_space, r1, |_, _| rng.random_range(-1.0..1.0)),
            leaf_oz: Mat::from_fn(d.n_oz, r2, |_, _| rng.random_range(-1.0..1.0)),
            leaf_theta: Mat::from_fn(d.n_theta_half, r3, |_, _| rng.random_range(-1.0..1.0)),
            transfer_23: t23,
            transfer_root: Mat::from_fn(r1, r23, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    fn add_dense(acc: &mut Mat<f64>, m: &Mat<f64>, c: f64) {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                acc[(i, j)] += c * m[(i, j)];
            }
        }
    }

    #[test]
    fn exact_sum_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = dims(12, 4, 3);
        let a = random_htt(&mut rng, d, (2, 2, 2, 2));
        let b = random_htt(&mut rng, d, (3, 2, 1, 2));
        let sum = HTTensor::exact_sum(&[(1.0, &a), (-2.5, &b)]);
        let mut want = a.reconstruct();
        add_dense(&mut want, &b.reconstruct(), -2.5);
        assert!(frob_diff(sum.reconstruct().as_ref(), want.as_ref()) < 1e-12);
    }

    #[test]
    fn orthogonalize_preserves_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = dims(10, 3, 4);
        let a = random_htt(&mut rng, d, (3, 2, 2, 2));
        let want = a.reconstruct();
        let mut b = a.clone();
        b.orthogonalize();
        assert!(frob_diff(b.reconstruct().as_ref(), want.as_ref()) < 1e-12);
        // leaves and transfer matricization orthonormal
        for m in [&b.leaf_x, &b.leaf_oz, &b.leaf_theta] {
            let g = m.transpose() * m;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let wantij = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - wantij).abs() < 1e-12);
                }
            }
        }
        let gm = b.transfer_23.as_mat().transpose() * b.transfer_23.as_mat();
        for i in 0..gm.nrows() {
            for j in 0..gm.ncols() {
                let wantij = if i == j { 1.0 } else { 0.0 };
                assert!((gm[(i, j)] - wantij).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_term_truncated_sum_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = dims(9, 4, 5);
        let a = random_htt(&mut rng, d, (3, 3, 2, 3));
        let t = HTTensor::truncated_sum(&[(1.0, &a)], &TruncationPolicy::default());
        let err = frob_diff(t.reconstruct().as_ref(), a.reconstruct().as_ref());
        assert!(err <= 1e-6 * a.reconstruct().norm_l2());
    }

    #[test]
    fn cancellation_returns_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = dims(8, 3, 3);
        let a = random_htt(&mut rng, d, (2, 2, 2, 2));
        let z = HTTensor::truncated_sum(&[(1.0, &a), (-1.0, &a)], &TruncationPolicy::default());
        assert!(z.is_zero_rank());
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn truncated_sum_of_five_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let d = dims(25, 8, 6); // 25 x 6 x 8 phase dims
        let policy = TruncationPolicy::default();
        let terms: Vec<HTTensor> = (0..5)
            .map(|_| random_htt(&mut rng, d, (3, 3, 3, 3)))
            .collect();
        let refs: Vec<(f64, &HTTensor)> = terms.iter().map(|t| (1.0, t)).collect();
        let sum = HTTensor::truncated_sum(&refs, &policy);
        let mut want = Mat::zeros(25, 48);
        for t in &terms {
            add_dense(&mut want, &t.reconstruct(), 1.0);
        }
        let err = frob_diff(sum.reconstruct().as_ref(), want.as_ref());
        assert!(
            err <= policy.rel_tol * want.norm_l2(),
            "err {err} vs {}",
            policy.rel_tol * want.norm_l2()
        );
        // invariants after truncation
        for m in [&sum.leaf_x, &sum.leaf_oz, &sum.leaf_theta] {
            let g = m.transpose() * m;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let wantij = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - wantij).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn inner_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let d = dims(11, 3, 4);
        let a = random_htt(&mut rng, d, (2, 3, 2, 2));
        let b = random_htt(&mut rng, d, (3, 2, 2, 3));
        let da = a.reconstruct();
        let db = b.reconstruct();
        let mut dot = 0.0;
        for j in 0..da.ncols() {
            for i in 0..da.nrows() {
                dot += da[(i, j)] * db[(i, j)];
            }
        }
        let got = HTTensor::inner(&a, &b);
        assert!((got - dot).abs() < 1e-11 * dot.abs().max(1.0), "{got} vs {dot}");
        assert!(HTTensor::inner(&a, &a) >= 0.0);
    }

    #[test]
    fn integrate_angle_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let quad = crate::angular::AngularQuadrature::build(8, 3).unwrap();
        let d = dims(7, 4, 3);
        let v = random_htt(&mut rng, d, (3, 2, 2, 2));
        let dense = v.reconstruct();
        let phi = v.integrate_angle(&quad);
        for s in 0..7 {
            let mut want = 0.0;
            for a in 0..quad.n_half() {
                want += quad.half_weights[a] * dense[(s, a)];
            }
            assert!((phi[s] - want).abs() < 1e-12);
        }
        // isotropic rank-1 round trip
        let f = vec![0.4, -1.0, 2.0, 0.0, 1.0, -0.5, 3.0];
        let iso = HTTensor::rank_one_isotropic(&f, d);
        let phi = iso.integrate_angle(&quad);
        for (a, b) in phi.iter().zip(&f) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn from_dense_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = dims(15, 5, 4);
        let dense = Mat::from_fn(15, 20, |_, _| rng.random_range(-1.0..1.0));
        let policy = TruncationPolicy::default();
        let t = HTTensor::from_dense(&dense, &policy, d);
        let err = frob_diff(t.reconstruct().as_ref(), dense.as_ref());
        assert!(err <= policy.rel_tol * dense.norm_l2());

        let z = HTTensor::from_dense(&Mat::zeros(15, 20), &policy, d);
        assert!(z.is_zero_rank());
    }

    #[test]
    fn node_singular_values_match_dense_matricizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let d = dims(9, 4, 3);
        let t = random_htt(&mut rng, d, (3, 3, 2, 2));
        let nsv = t.node_singular_values();
        let dense = t.reconstruct(); // n_space x (nth * noz)

        // root split: svd of the space x angle matrix
        let (_, s_root, _) = thin_svd(dense.as_ref());
        for (a, b) in nsv.root_split.iter().zip(&s_root) {
            assert!((a - b).abs() < 1e-10, "root {a} vs {b}");
        }

        // oz matricization: rows indexed by jz
        let m_oz = Mat::from_fn(d.n_oz, d.n_space * d.n_theta_half, |jz, col| {
            let s = col % d.n_space;
            let jt = col / d.n_space;
            dense[(s, jt * d.n_oz + jz)]
        });
        let (_, s_oz, _) = thin_svd(m_oz.as_ref());
        for (a, b) in nsv.oz.iter().zip(&s_oz) {
            assert!((a - b).abs() < 1e-10, "oz {a} vs {b}");
        }

        // theta matricization
        let m_th = Mat::from_fn(d.n_theta_half, d.n_space * d.n_oz, |jt, col| {
            let s = col % d.n_space;
            let jz = col / d.n_space;
            dense[(s, jt * d.n_oz + jz)]
        });
        let (_, s_th, _) = thin_svd(m_th.as_ref());
        for (a, b) in nsv.theta.iter().zip(&s_th) {
            assert!((a - b).abs() < 1e-10, "theta {a} vs {b}");
        }

        // rank-1 tensor: one nonzero singular value per node
        let iso = HTTensor::rank_one_isotropic(&[1.0; 9], d);
        let one = iso.node_singular_values();
        assert_eq!(one.root_split.len(), 1);
        assert_eq!(one.oz.len(), 1);
        assert_eq!(one.theta.len(), 1);

        // zero tensor: empty lists
        let z = HTTensor::zero(d);
        let zv = z.node_singular_values();
        assert!(zv.root_split.is_empty() && zv.oz.is_empty() && zv.theta.is_empty());
    }

    #[test]
    fn dof_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let d = dims(961, 10, 10);
        let t = random_htt(&mut rng, d, (9, 9, 3, 5));
        assert_eq!(t.dof(), 961 * 9 + 10 * 3 + 10 * 5 + 9 * 9 + 3 * 5 * 9);
    }
}
