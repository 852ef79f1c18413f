//! Discrete potential theory of the simple random walk on Z^d.

pub mod capacity;
pub mod green;
pub mod solver;

pub use capacity::{
    capacity, capacity_box_sequence, capacity_volume_bound, equilibrium_and_capacity, harmonic_measure,
    relative_capacity, EquilibriumMeasure, HarmonicMeasure, KillingDomain,
};
pub use green::{
    canonical_displacement, free_green, free_green_matrix, free_green_table, killed_green, BoxGreen, FreeGreenConfig,
    GreenEstimate, GreenIterate, KilledGreenOperator,
};
pub use solver::{conjugate_gradient, exit_structure, DirichletSolver, DomainGraph, SolverConfig};
