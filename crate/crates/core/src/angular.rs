//! Normalized Chebyshev–Legendre quadrature on the unit sphere and its
//! restriction to the half sphere S+ = { omega_y > 0 }.
//!
//! Points are ordered theta-major: the flat index is `j1 * n_omega_z + j2`
//! with `j1` the azimuthal (Chebyshev) index and `j2` the polar (Legendre)
//! index. The azimuthal offset puts theta_j strictly inside (0, 2pi) and away
//! from multiples of pi, so no point ever lies on omega_y = 0 and S+ is
//! exactly the first `n_theta / 2` azimuthal slabs.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    pub n_theta: usize,
    pub n_omega_z: usize,
    /// Unit directions on the full sphere, length `n_theta * n_omega_z`.
    pub points: Vec<[f64; 3]>,
    /// Full-sphere weights, summing to one.
    pub weights: Vec<f64>,
    /// Indices (into `points`) of the directions with omega_y > 0.
    pub half_indices: Vec<usize>,
    /// Renormalized weights on S+, summing to one (twice the full weights).
    pub half_weights: Vec<f64>,
    /// Azimuthal angles, length `n_theta`.
    pub theta: Vec<f64>,
    /// Normalized Gauss–Legendre nodes and weights for omega_z.
    pub oz_nodes: Vec<f64>,
    pub oz_weights: Vec<f64>,
}

/// Gauss–Legendre rule on [-1, 1], weights normalized to sum to one.
///
/// Roots of the degree-n Legendre polynomial found by Newton iteration from
/// Chebyshev initial guesses, converged to 1e-15 and symmetrized exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs n >= 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Initial guess for the i-th root in descending order.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (pm1 - x * p) / (1.0 - x * x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Mirror to enforce exact symmetry about the origin.
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w / 2.0;
        weights[n - 1 - i] = w / 2.0;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

impl AngularQuadrature {
    /// Builds the CL(n_theta, n_omega_z) rule. `n_theta` must be even so the
    /// half sphere contains exactly half the points.
    pub fn build(n_theta: usize, n_omega_z: usize) -> Result<Self> {
        if n_theta == 0 || n_omega_z == 0 {
            return Err(Error::InvalidArgument(
                "quadrature sizes must be positive".into(),
            ));
        }
        if n_theta % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "n_theta must be even, got {n_theta}"
            )));
        }
        let (oz_nodes, oz_weights) = gauss_legendre(n_omega_z);
        let theta: Vec<f64> = (0..n_theta)
            .map(|j| (2 * (j + 1)) as f64 * std::f64::consts::PI / n_theta as f64
                - std::f64::consts::PI / n_theta as f64)
            .collect();
        let w_theta = 1.0 / n_theta as f64;

        let n_total = n_theta * n_omega_z;
        let mut points = Vec::with_capacity(n_total);
        let mut weights = Vec::with_capacity(n_total);
        for j1 in 0..n_theta {
            let (sin_t, cos_t) = theta[j1].sin_cos();
            for j2 in 0..n_omega_z {
                let oz = oz_nodes[j2];
                let rho = (1.0 - oz * oz).sqrt();
                points.push([cos_t * rho, sin_t * rho, oz]);
                weights.push(w_theta * oz_weights[j2]);
            }
        }

        let mut half_indices = Vec::with_capacity(n_total / 2);
        let mut half_weights = Vec::with_capacity(n_total / 2);
        for (idx, p) in points.iter().enumerate() {
            if p[1] > 0.0 {
                half_indices.push(idx);
                half_weights.push(2.0 * weights[idx]);
            }
        }
        debug_assert_eq!(half_indices.len(), n_total / 2);

        Ok(AngularQuadrature {
            n_theta,
            n_omega_z,
            points,
            weights,
            half_indices,
            half_weights,
            theta,
            oz_nodes,
            oz_weights,
        })
    }

    /// Number of directions on the half sphere.
    pub fn n_half(&self) -> usize {
        self.half_indices.len()
    }

    pub fn half_point(&self, k: usize) -> [f64; 3] {
        self.points[self.half_indices[k]]
    }

    /// Separable half-sphere weights: `half_weights[j1 * n_oz + j2] =
    /// theta_part[j1] * oz_part[j2]`.
    pub fn half_weights_split(&self) -> (Vec<f64>, Vec<f64>) {
        let theta_part = vec![2.0 / self.n_theta as f64; self.n_theta / 2];
        (theta_part, self.oz_weights.clone())
    }

    /// Diagonal of a direction-dependent factor over the half sphere.
    pub fn half_diag(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.half_indices
            .iter()
            .map(|&i| f(&self.points[i]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_one_point() {
        let (n, w) = gauss_legendre(1);
        assert_eq!(n, vec![0.0]);
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn gl_two_point() {
        let (n, w) = gauss_legendre(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((n[0] + r).abs() < 1e-15);
        assert!((n[1] - r).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gl_five_point_quartic_moment() {
        // Oracle: the normalized rule integrates x^4 to the exact value
        // (1/2) * int_{-1}^{1} x^4 dx = 1/5.
        let (n, w) = gauss_legendre(5);
        let m4: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.2).abs() < 1e-15, "m4 = {m4}");
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cl_4_1_matches_formulas() {
        let q = AngularQuadrature::build(4, 1).unwrap();
        let pi = std::f64::consts::PI;
        let want = [pi / 4.0, 3.0 * pi / 4.0, 5.0 * pi / 4.0, 7.0 * pi / 4.0];
        for (t, w) in q.theta.iter().zip(want.iter()) {
            assert!((t - w).abs() < 1e-15);
        }
        for w in &q.weights {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_odd_n_theta() {
        assert!(AngularQuadrature::build(3, 2).is_err());
        assert!(AngularQuadrature::build(0, 2).is_err());
    }

    #[test]
    fn unit_points_and_normalized_weights() {
        for (nt, noz) in [(4, 2), (8, 4), (20, 10), (6, 5)] {
            let q = AngularQuadrature::build(nt, noz).unwrap();
            for p in &q.points {
                let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                assert!((n - 1.0).abs() < 1e-14);
            }
            let sum: f64 = q.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let half_sum: f64 = q.half_weights.iter().sum();
            assert!((half_sum - 1.0).abs() < 1e-14);
            assert_eq!(q.half_indices.len(), nt * noz / 2);
        }
    }

    #[test]
    fn point_symmetry() {
        let q = AngularQuadrature::build(8, 5).unwrap();
        for p in &q.points {
            let neg = [-p[0], -p[1], -p[2]];
            let found = q.points.iter().any(|r| {
                (r[0] - neg[0]).abs() < 1e-13
                    && (r[1] - neg[1]).abs() < 1e-13
                    && (r[2] - neg[2]).abs() < 1e-13
            });
            assert!(found, "missing antipode of {p:?}");
        }
    }

    #[test]
    fn second_moment_exact() {
        // (1/4pi) int omega_x^2 dOmega = 1/3, integrated exactly by CL(2N, N).
        let q = AngularQuadrature::build(8, 4).unwrap();
        let m: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0] * p[0])
            .sum();
        assert!((m - 1.0 / 3.0).abs() < 1e-14, "m = {m}");
    }

    /// Normalized moment of omega_x^a omega_y^b omega_z^c over the sphere:
    /// zero if any exponent is odd, else (a-1)!!(b-1)!!(c-1)!!/(a+b+c+1)!!.
    fn sphere_moment(a: u32, b: u32, c: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        fn dfact(n: i64) -> f64 {
            if n <= 0 {
                1.0
            } else {
                n as f64 * dfact(n - 2)
            }
        }
        dfact(a as i64 - 1) * dfact(b as i64 - 1) * dfact(c as i64 - 1)
            / dfact((a + b + c + 1) as i64)
    }

    #[test]
    fn polynomial_exactness() {
        // CL(2N, N) is exact for total degree <= 2N - 1: the degree-2N
        // monomials (e.g. omega_z^{2N}) alias in both tensor factors.
        let n = 4;
        let deg = 2 * n as u32 - 1;
        let q = AngularQuadrature::build(2 * n, n).unwrap();
        for a in 0..=deg {
            for b in 0..=(deg - a) {
                for c in 0..=(deg - a - b) {
                    let num: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let exact = sphere_moment(a, b, c);
                    assert!(
                        (num - exact).abs() < 1e-12,
                        "moment ({a},{b},{c}): {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn half_weights_are_separable() {
        let q = AngularQuadrature::build(12, 5).unwrap();
        let (wt, wz) = q.half_weights_split();
        for j1 in 0..6 {
            for j2 in 0..5 {
                let k = j1 * 5 + j2;
                assert!((q.half_weights[k] - wt[j1] * wz[j2]).abs() < 1e-15);
            }
        }
    }
}
