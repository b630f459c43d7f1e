//! Cell problem and effective fitness.

mod fitness;
mod orbit;

pub use fitness::{quadratic_landscape, ClosedFormFitness, EffectiveFitness, Fitness};
pub use orbit::{
    anchor_viability, boundary_decay_check, in_x, period_map, solve_orbit, Anchor,
    FixedPointMethod, OrbitSettings, PeriodicOrbit, Viability, VIABILITY_TOL,
};
