//! Finite-difference operators for `u_t = f(x) + |Du|^2 + nu Lap u` on a
//! [`TraitGrid`].
//!
//! The gradient term uses the Godunov flux for `+|p|^2`, which in each
//! dimension is `max(min(p-, 0)^2, max(p+, 0)^2)`. The one-sided slopes are
//! either plain differences or second-order ENO reconstructions. At the box
//! edges the first differences are extrapolated linearly.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::TraitGrid;
use crate::numerics::parabola_vertex;
use crate::point::{SymMatrix, TraitPoint};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpatialOrder {
    First,
    #[default]
    Second,
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Scratch buffers for one grid line.
#[derive(Clone, Debug, Default)]
pub struct LineScratch {
    diffs: Vec<f64>,
}

/// Adds `H(p-, p+) + nu * second difference` along one grid line to `out`
/// and returns the largest one-sided slope magnitude on the line.
#[allow(clippy::too_many_arguments)]
fn line_terms(
    u: &[f64],
    start: usize,
    stride: usize,
    n: usize,
    h: f64,
    order: SpatialOrder,
    nu: f64,
    out: &mut [f64],
    scratch: &mut LineScratch,
) -> f64 {
    // diffs[k] = D_{k - 1/2} for k = 0..=n, edges extrapolated.
    let d = &mut scratch.diffs;
    d.clear();
    d.resize(n + 1, 0.0);
    let at = |i: usize| u[start + i * stride];
    for k in 1..n {
        d[k] = (at(k) - at(k - 1)) / h;
    }
    d[0] = 2.0 * d[1] - d[2];
    d[n] = 2.0 * d[n - 1] - d[n - 2];
    let second = |i: usize| h * (d[i + 1] - d[i]);
    let mut grad_max = 0.0f64;
    for i in 0..n {
        let (mut pm, mut pp) = (d[i], d[i + 1]);
        let c = second(i);
        if order == SpatialOrder::Second {
            let l = second(i.saturating_sub(1));
            let r = second((i + 1).min(n - 1));
            pm += minmod(c, l) / (2.0 * h);
            pp -= minmod(c, r) / (2.0 * h);
        }
        let a = pm.min(0.0);
        let b = pp.max(0.0);
        out[start + i * stride] += (a * a).max(b * b) + nu * c / (h * h);
        grad_max = grad_max.max(pm.abs()).max(pp.abs());
    }
    grad_max
}

/// Adds the discrete `|Du|^2 + nu Lap u` to `out` and returns `max |Du|`.
pub fn add_hamiltonian(
    u: &[f64],
    grid: &TraitGrid,
    order: SpatialOrder,
    nu: f64,
    out: &mut [f64],
    scratch: &mut LineScratch,
) -> f64 {
    let n = grid.nodes();
    let h = grid.spacing();
    match grid.dim() {
        1 => line_terms(u, 0, 1, n, h, order, nu, out, scratch),
        _ => {
            let mut g0 = 0.0f64;
            let mut g1 = 0.0f64;
            for j in 0..n {
                g0 = g0.max(line_terms(u, j, n, n, h, order, nu, out, scratch));
            }
            for i in 0..n {
                g1 = g1.max(line_terms(u, i * n, 1, n, h, order, nu, out, scratch));
            }
            (g0 * g0 + g1 * g1).sqrt()
        }
    }
}

/// Largest one-sided slope magnitude, for time-step selection.
pub fn max_gradient(u: &[f64], grid: &TraitGrid) -> f64 {
    let mut sink = alloc::vec![0.0; u.len()];
    add_hamiltonian(u, grid, SpatialOrder::First, 0.0, &mut sink, &mut LineScratch::default())
}

/// Explicit stability limit `min(h^2/(2 N nu), h/(2 max|Du|))`.
pub fn stability_limit(grid: &TraitGrid, nu: f64, grad_max: f64) -> f64 {
    let h = grid.spacing();
    let diffusive = if nu > 0.0 {
        h * h / (2.0 * grid.dim() as f64 * nu)
    } else {
        f64::INFINITY
    };
    let advective = if grad_max > 0.0 {
        h / (2.0 * grad_max)
    } else {
        f64::INFINITY
    };
    diffusive.min(advective)
}

/// Grid maximum (first node on ties) refined by a 3-point parabola per
/// dimension. Returns `(node, refined point, refined value)`.
pub fn subgrid_argmax(u: &[f64], grid: &TraitGrid) -> (usize, TraitPoint, f64) {
    let mut best = 0;
    for (k, &v) in u.iter().enumerate() {
        if v > u[best] {
            best = k;
        }
    }
    let mut x = grid.point(best);
    let mi = grid.multi_index(best);
    let n = grid.nodes();
    let centre = u[best];
    let mut value = centre;
    for d in 0..grid.dim() {
        if mi[d] == 0 || mi[d] == n - 1 {
            continue;
        }
        let s = grid.stride(d);
        let (offset, peak) = parabola_vertex(u[best - s], centre, u[best + s]);
        x[d] += offset * grid.spacing();
        value += peak - centre;
    }
    (best, x, value)
}

/// Centered Hessian at a node; edge nodes use the nearest interior stencil.
pub fn hessian_at(u: &[f64], grid: &TraitGrid, idx: usize) -> SymMatrix {
    let n = grid.nodes();
    let h2 = grid.spacing() * grid.spacing();
    let mut mi = grid.multi_index(idx);
    for d in 0..grid.dim() {
        mi[d] = mi[d].clamp(1, n - 2);
    }
    let c = grid.flat_index(mi);
    let mut m = SymMatrix::scalar(grid.dim(), 0.0);
    for d in 0..grid.dim() {
        let s = grid.stride(d);
        m.entries[3 * d] = (u[c + s] - 2.0 * u[c] + u[c - s]) / h2;
    }
    if grid.dim() == 2 {
        let mixed = (u[c + n + 1] - u[c + n - 1] - u[c - n + 1] + u[c - n - 1]) / (4.0 * h2);
        m.entries[1] = mixed;
        m.entries[2] = mixed;
    }
    m
}

/// Eigenvalue range of a symmetric matrix.
pub fn eigen_range(m: &SymMatrix) -> (f64, f64) {
    match m.dim {
        1 => (m.entries[0], m.entries[0]),
        _ => {
            let (a, b, d) = (m.entries[0], m.entries[1], m.entries[3]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            (mean - rad, mean + rad)
        }
    }
}

/// Range of the Hessian eigenvalues over interior nodes with
/// `u >= max u - depth`.
pub fn concavity_range(u: &[f64], grid: &TraitGrid, max_u: f64, depth: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, &v) in u.iter().enumerate() {
        if v < max_u - depth || grid.on_boundary(k) {
            continue;
        }
        let (a, b) = eigen_range(&hessian_at(u, grid, k));
        lo = lo.min(a);
        hi = hi.max(b);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(grid: &TraitGrid, f: impl Fn(&TraitPoint) -> f64) -> Vec<f64> {
        grid.points().map(|x| f(&x)).collect()
    }

    #[test]
    fn quadratic_gradient_is_exact_at_second_order() {
        let grid = TraitGrid::new(1, 2.0, 81).unwrap();
        let u = field(&grid, |x| -(x[0] - 0.3) * (x[0] - 0.3));
        let mut out = alloc::vec![0.0; u.len()];
        add_hamiltonian(&u, &grid, SpatialOrder::Second, 0.0, &mut out, &mut Default::default());
        for (k, o) in out.iter().enumerate() {
            let x = grid.coordinate(k);
            let exact = 4.0 * (x - 0.3) * (x - 0.3);
            assert!((o - exact).abs() < 1e-9, "{k}: {o} vs {exact}");
        }
    }

    #[test]
    fn first_order_flux_is_upwind() {
        let grid = TraitGrid::new(1, 1.0, 65).unwrap();
        // Linear profile: both one-sided slopes equal the exact one.
        let u = field(&grid, |x| 0.5 * x[0]);
        let mut out = alloc::vec![0.0; u.len()];
        add_hamiltonian(&u, &grid, SpatialOrder::First, 0.0, &mut out, &mut Default::default());
        assert!(out.iter().all(|o| (o - 0.25).abs() < 1e-12));
        // A peak does not move; a valley fills at the full slope.
        let u = field(&grid, |x| -x[0].abs());
        let mut out = alloc::vec![0.0; u.len()];
        add_hamiltonian(&u, &grid, SpatialOrder::First, 0.0, &mut out, &mut Default::default());
        assert_eq!(out[32], 0.0);
        let u = field(&grid, |x| x[0].abs());
        let mut out = alloc::vec![0.0; u.len()];
        add_hamiltonian(&u, &grid, SpatialOrder::First, 0.0, &mut out, &mut Default::default());
        assert!((out[32] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_terms_and_laplacian() {
        let grid = TraitGrid::new(2, 1.0, 65).unwrap();
        let u = field(&grid, |x| -x[0] * x[0] - 2.0 * x[1] * x[1] + x[0] * x[1]);
        let mut out = alloc::vec![0.0; u.len()];
        add_hamiltonian(&u, &grid, SpatialOrder::Second, 0.1, &mut out, &mut Default::default());
        for idx in [0, 100, 2080, 4224] {
            let x = grid.point(idx);
            let (gx, gy) = (-2.0 * x[0] + x[1], -4.0 * x[1] + x[0]);
            let exact = gx * gx + gy * gy + 0.1 * (-6.0);
            assert!((out[idx] - exact).abs() < 1e-8, "{idx}");
        }
        let m = hessian_at(&u, &grid, 2080);
        assert!((m.get(0, 0) + 2.0).abs() < 1e-9);
        assert!((m.get(1, 1) + 4.0).abs() < 1e-9);
        assert!((m.get(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn argmax_refines_below_grid_spacing() {
        let grid = TraitGrid::new(2, 1.0, 64).unwrap();
        let u = field(&grid, |x| -(x[0] - 0.123).powi(2) - 3.0 * (x[1] + 0.456).powi(2) + 0.5);
        let (_, x, v) = subgrid_argmax(&u, &grid);
        assert!((x[0] - 0.123).abs() < 1e-12 && (x[1] + 0.456).abs() < 1e-12);
        assert!((v - 0.5).abs() < 1e-12);
    }
}
