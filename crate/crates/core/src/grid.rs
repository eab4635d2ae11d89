//! Truncated uniform velocity grid.

use crate::Vec3;

/// Cell-centred uniform grid on [−R, R]³ with `n` points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    half_width: f64,
    n: usize,
    h: f64,
}

impl VelocityGrid {
    /// # Panics
    /// If `n < 4` or `half_width` is not positive.
    pub fn new(half_width: f64, n: usize) -> Self {
        assert!(n >= 4, "grid needs at least 4 points per axis, got {n}");
        assert!(half_width > 0.0 && half_width.is_finite(), "half width must be positive");
        Self {
            half_width,
            n,
            h: 2.0 * half_width / n as f64,
        }
    }

    /// Default half width 5.5/√(min mass).
    pub fn default_half_width(min_mass: f64) -> f64 {
        5.5 / min_mass.sqrt()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Quadrature weight h³ of every node.
    pub fn weight(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Coordinate of cell `k` along one axis.
    pub fn coordinate(&self, k: usize) -> f64 {
        -self.half_width + self.h * (k as f64 + 0.5)
    }

    /// Axis indices of flat node `idx` (x slowest, z fastest).
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn flat_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn node(&self, idx: usize) -> Vec3 {
        let [ix, iy, iz] = self.axis_indices(idx);
        Vec3::new(self.coordinate(ix), self.coordinate(iy), self.coordinate(iz))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.num_nodes()).map(|k| self.node(k))
    }

    /// Whether ξ lies in the closed box [−R, R]³.
    pub fn contains(&self, xi: &Vec3) -> bool {
        xi.iter().all(|c| c.abs() <= self.half_width)
    }
}
