//! Large-`N` Schwinger–Dyson solvers.

pub mod saddle;
pub mod thermal;

pub use saddle::{
    evaluate_action, fixed_point_residual, iterate, order_parameter, order_parameter_from_logdets,
    sector_weights, sre_solve, sre_value, Evaluation, SaddleClass, SaddleOptions, SaddleProblem,
    SaddleSolution, SeedStrategy, SolveMode,
};
pub use thermal::{
    free_energy, renyi2_per_mode, sff_slope, thermal_solve, thermal_solve_seeded, SlopePoint,
    SlopeSweep, ThermalOptions, ThermalSolution,
};
