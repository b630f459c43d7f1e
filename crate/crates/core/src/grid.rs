#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{config, Result};
use crate::point::TraitPoint;

/// Minimum number of nodes per dimension.
pub const MIN_NODES: usize = 64;

/// Uniform tensor grid on `[-half_width, half_width]^dim`.
///
/// Nodes are stored row-major: in 2-D the flat index is `i * n + j` with `i`
/// the index along the first coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraitGrid {
    dim: usize,
    half_width: f64,
    nodes: usize,
    spacing: f64,
}

impl TraitGrid {
    pub fn new(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(config(alloc::format!("grid dimension {dim} not in {{1, 2}}")));
        }
        if nodes < MIN_NODES {
            return Err(config(alloc::format!(
                "grid needs at least {MIN_NODES} nodes per dimension, got {nodes}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(config("grid half-width must be positive"));
        }
        Ok(Self {
            dim,
            half_width,
            nodes,
            spacing: 2.0 * half_width / (nodes - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Nodes per dimension.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing
    }

    /// Per-dimension indices of a flat index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.nodes, idx % self.nodes],
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        match self.dim {
            1 => mi[0],
            _ => mi[0] * self.nodes + mi[1],
        }
    }

    /// Flat-index stride along dimension `d`.
    pub fn stride(&self, d: usize) -> usize {
        if self.dim == 2 && d == 0 {
            self.nodes
        } else {
            1
        }
    }

    pub fn point(&self, idx: usize) -> TraitPoint {
        let mi = self.multi_index(idx);
        match self.dim {
            1 => TraitPoint::scalar(self.coordinate(mi[0])),
            _ => TraitPoint::planar(self.coordinate(mi[0]), self.coordinate(mi[1])),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = TraitPoint> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// True if `idx` touches the box boundary in any dimension.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dim).any(|d| mi[d] == 0 || mi[d] == self.nodes - 1)
    }

    /// True if `x` lies inside the box with at least `margin` to every face.
    pub fn contains(&self, x: &TraitPoint, margin: f64) -> bool {
        x.dim() == self.dim && x.max_abs() <= self.half_width - margin
    }

    /// Index of the node nearest to `x` (clamped to the box).
    pub fn nearest(&self, x: &TraitPoint) -> usize {
        let mut mi = [0usize; 2];
        for d in 0..self.dim {
            let k = ((x[d] + self.half_width) / self.spacing).round();
            mi[d] = k.clamp(0.0, (self.nodes - 1) as f64) as usize;
        }
        self.flat_index(mi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = TraitGrid::new(2, 1.0, 64).unwrap();
        for idx in [0, 1, 63, 64, 4095] {
            assert_eq!(g.flat_index(g.multi_index(idx)), idx);
        }
        assert_eq!(g.point(0), TraitPoint::planar(-1.0, -1.0));
        assert!((g.point(4095)[0] - 1.0).abs() < 1e-12);
        assert_eq!(g.nearest(&TraitPoint::planar(-1.0, 1.0)), 63);
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(TraitGrid::new(1, 2.0, 63).is_err());
        assert!(TraitGrid::new(3, 2.0, 128).is_err());
    }
}
