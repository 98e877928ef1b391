//! Uniform Cartesian grid for the 2D X-Y geometry. Unknowns live at interior
//! grid points; boundary values are eliminated by the vacuum (homogeneous
//! Dirichlet) closure, so the interior count is `(nx - 1) * (ny - 1)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Number of cells per direction; the grid has `nx + 1` points in x.
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl SpatialGrid {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 cells per direction, got {nx} x {ny}"
            )));
        }
        if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(Error::InvalidArgument(
                "degenerate domain interval".into(),
            ));
        }
        Ok(SpatialGrid {
            x_range,
            y_range,
            nx,
            ny,
            dx: (x_range.1 - x_range.0) / nx as f64,
            dy: (y_range.1 - y_range.0) / ny as f64,
        })
    }

    /// Grid point coordinate, i in 0..=nx.
    pub fn x(&self, i: usize) -> f64 {
        self.x_range.0 + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_range.0 + j as f64 * self.dy
    }

    /// x-coordinate at fractional index (half points use i + 1/2).
    pub fn x_at(&self, alpha: f64) -> f64 {
        self.x_range.0 + alpha * self.dx
    }

    pub fn y_at(&self, beta: f64) -> f64 {
        self.y_range.0 + beta * self.dy
    }

    /// Unknowns after boundary elimination.
    pub fn interior_count(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    /// Flat interior index, x-fastest; ix in 1..nx, iy in 1..ny.
    pub fn interior_index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix >= 1 && ix < self.nx && iy >= 1 && iy < self.ny);
        (ix - 1) + (self.nx - 1) * (iy - 1)
    }

    /// Iterates interior points as (flat, ix, iy).
    pub fn interior_iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let nxi = self.nx - 1;
        (0..self.interior_count()).map(move |s| (s, s % nxi + 1, s / nxi + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_spacing() {
        let g = SpatialGrid::new((-1.0, 1.0), (-1.0, 1.0), 32, 32).unwrap();
        assert_eq!(g.dx, 1.0 / 16.0);
        assert_eq!(g.dy, 1.0 / 16.0);
        assert_eq!(g.interior_count(), 31 * 31);
    }

    #[test]
    fn lattice_domain_spacing() {
        let g = SpatialGrid::new((0.0, 5.0), (0.0, 5.0), 75, 75).unwrap();
        assert!((g.dx - 1.0 / 15.0).abs() < 1e-16);
    }

    #[test]
    fn single_interior_point() {
        let g = SpatialGrid::new((-1.0, 1.0), (-1.0, 1.0), 2, 2).unwrap();
        assert_eq!(g.interior_count(), 1);
        assert_eq!(g.interior_index(1, 1), 0);
    }

    #[test]
    fn endpoints_exact() {
        let g = SpatialGrid::new((-1.0, 1.0), (0.0, 2.0), 10, 4).unwrap();
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(10), 1.0);
        assert_eq!(g.y(0), 0.0);
        assert_eq!(g.y(4), 2.0);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SpatialGrid::new((1.0, 1.0), (0.0, 1.0), 4, 4).is_err());
        assert!(SpatialGrid::new((0.0, 1.0), (0.0, 1.0), 1, 4).is_err());
    }

    #[test]
    fn interior_iter_order() {
        let g = SpatialGrid::new((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let pts: Vec<_> = g.interior_iter().collect();
        assert_eq!(pts, vec![(0, 1, 1), (1, 2, 1), (2, 1, 2), (3, 2, 2)]);
    }
}
