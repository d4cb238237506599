//! Semiclassical eigenvalues of one-dimensional Schrödinger operators
//! `(hD)^2 + V(x)` in a single potential well.

pub mod action;
pub mod bs;
pub mod error;
pub mod geometry;
pub mod potential;
pub mod quad;
pub mod reference;
pub mod roots;
pub mod wkb;

pub use action::{
    action_data, action_s0, correction_s2, im_d1, loop_v2, period_t, t1_integrand, ActionData, ImD1, S2Estimate,
};
pub use bs::{
    action_angle_check, enumerate_levels, gram_determinant, gram_scan, gram_zeros, lowest_admissible_energy,
    semiclassical_action, ActionAngleReport, BsLevel, GramValue, Order,
};
pub use error::{Error, EvalError, ParseError, ParseErrorKind, Result};
pub use geometry::{curve_frame, find_turning_points, CurveFrame, Well, WellGeometry};
pub use potential::{parse_expr, Derivs, Expr, Func, Potential};
pub use quad::{quad_well, Estimate, QuadRule, WellPoint};
pub use reference::{
    build_grid_hamiltonian, compare_spectra, fit_order, lowest_eigenvalues, reference_eigenvalues, richardson,
    suggest_domain, GridHamiltonian, LevelPair, ReferenceOptions, SpectrumReport,
};
pub use wkb::{
    connection_mismatch, finite_part_phase, loop_finite_part, residual_estimate, wkb_eval, wkb_phase, Anchor, Branch,
    Residual, WkbState,
};
