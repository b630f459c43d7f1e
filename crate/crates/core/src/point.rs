use core::ops::{Add, Index, IndexMut, Mul, Sub};

/// Maximum supported trait dimension.
pub const MAX_DIM: usize = 2;

/// A point in trait space, dimension 1 or 2.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TraitPoint {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl TraitPoint {
    /// Builds a point from a slice of length 1 or 2.
    ///
    /// Panics on any other length.
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "trait dimension must be 1 or 2, got {}",
            coords.len()
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(&[x])
    }

    pub fn planar(x: f64, y: f64) -> Self {
        Self::new(&[x, y])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        num_traits::Float::sqrt(self.norm_sq())
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        (*self - *other).norm_sq()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = *self;
        for c in out.as_mut_slice() {
            *c = f(*c);
        }
        out
    }
}

impl Index<usize> for TraitPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for TraitPoint {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for TraitPoint {
    type Output = TraitPoint;
    fn add(mut self, rhs: TraitPoint) -> TraitPoint {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for TraitPoint {
    type Output = TraitPoint;
    fn sub(mut self, rhs: TraitPoint) -> TraitPoint {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for TraitPoint {
    type Output = TraitPoint;
    fn mul(self, k: f64) -> TraitPoint {
        self.map(|c| c * k)
    }
}

/// Symmetric `dim x dim` matrix stored row-major in a 2x2 array.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SymMatrix {
    pub entries: [f64; 4],
    pub dim: usize,
}

impl SymMatrix {
    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut entries = [0.0; 4];
        entries[0] = value;
        if dim == 2 {
            entries[3] = value;
        }
        Self { entries, dim }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * 2 + j]
    }

    /// Row-major entries restricted to the active dimension.
    pub fn row_major(&self) -> alloc::vec::Vec<f64> {
        let mut v = alloc::vec::Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                v.push(self.get(i, j));
            }
        }
        v
    }

    pub fn is_negative_definite(&self) -> bool {
        match self.dim {
            1 => self.entries[0] < 0.0,
            _ => {
                let (a, b, d) = (self.entries[0], self.entries[1], self.entries[3]);
                a < 0.0 && a * d - b * b > 0.0
            }
        }
    }

    /// Solves `(-self) z = rhs`.
    pub fn solve_negated(&self, rhs: &TraitPoint) -> Option<TraitPoint> {
        if !self.is_negative_definite() {
            return None;
        }
        match self.dim {
            1 => Some(TraitPoint::scalar(-rhs[0] / self.entries[0])),
            _ => {
                let (a, b, d) = (-self.entries[0], -self.entries[1], -self.entries[3]);
                let det = a * d - b * b;
                Some(TraitPoint::planar(
                    (d * rhs[0] - b * rhs[1]) / det,
                    (a * rhs[1] - b * rhs[0]) / det,
                ))
            }
        }
    }
}
