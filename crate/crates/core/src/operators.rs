//! Sparse spatial operators of the discretized second-order transport
//! equation and their Kronecker coupling with the angular diagonals.
//!
//! All operators act on interior grid points with boundary neighbors dropped
//! (vacuum treated as homogeneous Dirichlet on the even parity). `dxx` and
//! `dyy` are divergence-form flux stencils with half-point `1/sigma_t`
//! coefficients and a negative center, so `-dxx` and `-dyy` are positive
//! semidefinite and the assembled system is SPD. The inverse cross sections
//! are always computed from sampled `sigma_t`, never by sampling an analytic
//! reciprocal.

use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::geometry::SpatialGrid;
use crate::problems::MaterialSamples;
use crate::sparse::CsrMatrix;
use faer::{Mat, MatRef};

/// Approximates d/dx (sigma_t^{-1} d/dx) on interior points.
pub fn build_dxx(grid: &SpatialGrid, mats: &MaterialSamples) -> CsrMatrix {
    let n = grid.interior_count();
    let idx2 = 1.0 / (grid.dx * grid.dx);
    let mut triplets = Vec::with_capacity(3 * n);
    for (s, ix, iy) in grid.interior_iter() {
        let w_minus = idx2 / mats.sigma_t_half_x(ix - 1, iy);
        let w_plus = idx2 / mats.sigma_t_half_x(ix, iy);
        triplets.push((s, s, -(w_minus + w_plus)));
        if ix > 1 {
            triplets.push((s, grid.interior_index(ix - 1, iy), w_minus));
        }
        if ix < grid.nx - 1 {
            triplets.push((s, grid.interior_index(ix + 1, iy), w_plus));
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Approximates d/dy (sigma_t^{-1} d/dy) on interior points.
pub fn build_dyy(grid: &SpatialGrid, mats: &MaterialSamples) -> CsrMatrix {
    let n = grid.interior_count();
    let idy2 = 1.0 / (grid.dy * grid.dy);
    let mut triplets = Vec::with_capacity(3 * n);
    for (s, ix, iy) in grid.interior_iter() {
        let w_minus = idy2 / mats.sigma_t_half_y(ix, iy - 1);
        let w_plus = idy2 / mats.sigma_t_half_y(ix, iy);
        triplets.push((s, s, -(w_minus + w_plus)));
        if iy > 1 {
            triplets.push((s, grid.interior_index(ix, iy - 1), w_minus));
        }
        if iy < grid.ny - 1 {
            triplets.push((s, grid.interior_index(ix, iy + 1), w_plus));
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Approximates d/dx (sigma_t^{-1} d/dy) + d/dy (sigma_t^{-1} d/dx): the two
/// four-point diagonal-neighbor stencils with whole-node `1/sigma_t` samples,
/// scaled by 1/(4 dx dy). The sum couples only diagonal neighbors and is
/// symmetric.
pub fn build_dcross(grid: &SpatialGrid, mats: &MaterialSamples) -> CsrMatrix {
    let n = grid.interior_count();
    let scale = 1.0 / (4.0 * grid.dx * grid.dy);
    let inv = |ix: usize, iy: usize| scale / mats.sigma_t_node(ix, iy);
    let mut triplets = Vec::with_capacity(4 * n);
    for (s, ix, iy) in grid.interior_iter() {
        // coefficient of psi_{ix+1, iy+1}: (inv(ix+1, iy) + inv(ix, iy+1))
        let mut push = |jx: usize, jy: usize, v: f64| {
            if jx >= 1 && jx < grid.nx && jy >= 1 && jy < grid.ny {
                triplets.push((s, grid.interior_index(jx, jy), v));
            }
        };
        push(ix + 1, iy + 1, inv(ix + 1, iy) + inv(ix, iy + 1));
        push(ix + 1, iy - 1, -(inv(ix + 1, iy) + inv(ix, iy - 1)));
        push(ix - 1, iy + 1, -(inv(ix - 1, iy) + inv(ix, iy + 1)));
        push(ix - 1, iy - 1, inv(ix - 1, iy) + inv(ix, iy - 1));
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Restricts a nodal field to the interior unknowns.
pub fn interior_vector(grid: &SpatialGrid, nodes: &[f64]) -> Vec<f64> {
    grid.interior_iter()
        .map(|(_, ix, iy)| nodes[ix + (grid.nx + 1) * iy])
        .collect()
}

/// The spatial pieces assembled once per (problem, grid).
#[derive(Debug, Clone)]
pub struct SpatialOperators {
    pub dxx: CsrMatrix,
    pub dyy: CsrMatrix,
    pub dcross: CsrMatrix,
    /// Diagonals over interior points.
    pub sigma_t: Vec<f64>,
    pub sigma_s: Vec<f64>,
    pub sigma_a: Vec<f64>,
    pub source: Vec<f64>,
}

impl SpatialOperators {
    pub fn assemble(grid: &SpatialGrid, mats: &MaterialSamples) -> Self {
        SpatialOperators {
            dxx: build_dxx(grid, mats),
            dyy: build_dyy(grid, mats),
            dcross: build_dcross(grid, mats),
            sigma_t: interior_vector(grid, &mats.sigma_t_nodes),
            sigma_s: interior_vector(grid, &mats.sigma_s_nodes),
            sigma_a: interior_vector(grid, &mats.sigma_a_nodes),
            source: interior_vector(grid, &mats.source_nodes),
        }
    }

    pub fn n_space(&self) -> usize {
        self.sigma_t.len()
    }
}

/// Per-direction operator
/// `A_j = -(ox^2 dxx + ox oy dcross + oy^2 dyy) + diag(sigma_t)`.
pub fn build_angle_operator(
    quad: &AngularQuadrature,
    half_index: usize,
    ops: &SpatialOperators,
    _mats: &MaterialSamples,
) -> CsrMatrix {
    let omega = quad.half_point(half_index);
    angle_operator_for_direction(&omega, ops)
}

pub fn angle_operator_for_direction(omega: &[f64; 3], ops: &SpatialOperators) -> CsrMatrix {
    let sigma = CsrMatrix::from_diag(&ops.sigma_t);
    CsrMatrix::linear_combination(&[
        (-(omega[0] * omega[0]), &ops.dxx),
        (-(omega[0] * omega[1]), &ops.dcross),
        (-(omega[1] * omega[1]), &ops.dyy),
        (1.0, &sigma),
    ])
}

/// DSA diffusion operator `-(1/3)(dxx + dyy) + diag(sigma_a)`; SPD for
/// sigma_a >= 0 thanks to the Dirichlet boundary.
pub fn build_dsa_operator(grid: &SpatialGrid, mats: &MaterialSamples) -> CsrMatrix {
    let ops_dxx = build_dxx(grid, mats);
    let ops_dyy = build_dyy(grid, mats);
    let sigma_a = CsrMatrix::from_diag(&interior_vector(grid, &mats.sigma_a_nodes));
    CsrMatrix::linear_combination(&[
        (-1.0 / 3.0, &ops_dxx),
        (-1.0 / 3.0, &ops_dyy),
        (1.0, &sigma_a),
    ])
}

/// Phase-space dimensions shared by the low-rank containers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseDims {
    pub n_space: usize,
    pub n_theta_half: usize,
    pub n_oz: usize,
}

impl PhaseDims {
    pub fn n_angle_half(&self) -> usize {
        self.n_theta_half * self.n_oz
    }

    pub fn dense_dof(&self) -> usize {
        self.n_space * self.n_angle_half()
    }
}

/// One Kronecker term `diag(angle) (x) spatial`, with the exact rank-1 split
/// of the angular diagonal over the theta and omega_z leaves.
#[derive(Debug, Clone)]
pub struct KroneckerTerm {
    /// Diagonal over half-sphere directions, `theta_diag[j1] * oz_diag[j2]`.
    pub angle_diag: Vec<f64>,
    pub theta_diag: Vec<f64>,
    pub oz_diag: Vec<f64>,
    pub spatial: CsrMatrix,
}

/// The discretized second-order transport operator as an ordered sum of
/// (angular diagonal (x) sparse spatial) terms. The assembled operator
/// `-(D_{ox^2} (x) dxx + D_{ox oy} (x) dcross + D_{oy^2} (x) dyy)
///  + I (x) Sigma_t` is SPD.
#[derive(Debug, Clone)]
pub struct KroneckerOperator {
    pub terms: Vec<KroneckerTerm>,
    pub dims: PhaseDims,
}

impl KroneckerOperator {
    pub fn assemble(quad: &AngularQuadrature, ops: &SpatialOperators) -> Self {
        let dims = PhaseDims {
            n_space: ops.n_space(),
            n_theta_half: quad.n_theta / 2,
            n_oz: quad.n_omega_z,
        };
        let nth = dims.n_theta_half;
        let rho2: Vec<f64> = quad.oz_nodes.iter().map(|&z| 1.0 - z * z).collect();
        let cos2: Vec<f64> = quad.theta[..nth].iter().map(|t| t.cos() * t.cos()).collect();
        let sin2: Vec<f64> = quad.theta[..nth].iter().map(|t| t.sin() * t.sin()).collect();
        let cossin: Vec<f64> = quad.theta[..nth].iter().map(|t| t.cos() * t.sin()).collect();

        let neg = |m: &CsrMatrix| {
            let mut c = m.clone();
            c.scale(-1.0);
            c
        };
        let term = |theta_diag: Vec<f64>, oz_diag: Vec<f64>, spatial: CsrMatrix| {
            let mut angle_diag = Vec::with_capacity(nth * dims.n_oz);
            for td in &theta_diag {
                for zd in &oz_diag {
                    angle_diag.push(td * zd);
                }
            }
            KroneckerTerm {
                angle_diag,
                theta_diag,
                oz_diag,
                spatial,
            }
        };

        let terms = vec![
            term(cos2, rho2.clone(), neg(&ops.dxx)),
            term(cossin, rho2.clone(), neg(&ops.dcross)),
            term(sin2, rho2, neg(&ops.dyy)),
            term(
                vec![1.0; nth],
                vec![1.0; dims.n_oz],
                CsrMatrix::from_diag(&ops.sigma_t),
            ),
        ];
        KroneckerOperator { terms, dims }
    }

    /// Applies the operator to a dense (space x half-angle) block.
    pub fn apply_dense(&self, psi: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(psi.nrows(), self.dims.n_space);
        assert_eq!(psi.ncols(), self.dims.n_angle_half());
        let mut out = Mat::zeros(psi.nrows(), psi.ncols());
        for term in &self.terms {
            let sp = term.spatial.apply_mat(psi);
            for a in 0..psi.ncols() {
                let d = term.angle_diag[a];
                for s in 0..psi.nrows() {
                    out[(s, a)] += d * sp[(s, a)];
                }
            }
        }
        out
    }

    /// Full dense matrix over `n_space * n_half` unknowns with angle-major
    /// blocks (the column-major vectorization of the space x angle layout).
    /// Only sensible on tiny instances; used by test oracles.
    pub fn to_dense_matrix(&self) -> Result<Mat<f64>> {
        let n = self.dims.dense_dof();
        if n > 20_000 {
            return Err(Error::InvalidArgument(format!(
                "dense operator of dimension {n} refused"
            )));
        }
        let ns = self.dims.n_space;
        let mut out = Mat::zeros(n, n);
        for term in &self.terms {
            let sp = term.spatial.to_dense();
            for (a, &d) in term.angle_diag.iter().enumerate() {
                for i in 0..ns {
                    for j in 0..ns {
                        out[(a * ns + i, a * ns + j)] += d * sp[(i, j)];
                    }
                }
            }
        }
        Ok(out)
    }
}
