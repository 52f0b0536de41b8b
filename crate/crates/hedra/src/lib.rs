//! Stacked tetrahedral tensegrity manipulators.
//!
//! A manipulator is a chain of rigid tetrahedral modules joined by cable-only
//! tensegrity joints: three nearly horizontal saddle cables suspend the apex of
//! each upper module inside the triangle of the module below, and six axial
//! cables pull the stack together. The library builds such models, solves the
//! inverse kinematics by the force density method (cable force densities found
//! with a quadratic program under unilateral `q >= q_min` cable constraints),
//! converts densities to actuator rest lengths, and validates solutions with an
//! independent dynamic-relaxation simulation.
//!
//! Modules:
//! - [`structure`]: geometry, model construction, connectivity
//! - [`statics`]: equilibrium assembly, loads, member forces
//! - [`linalg`]: pseudoinverse and nullspace helpers
//! - [`qp`]: dense strictly convex quadratic programming
//! - [`ik`]: force-density inverse kinematics
//! - [`motion`]: trajectory generation, traces, dynamic relaxation
//! - [`io`]: model, solution, trace, and mesh file formats
//!
//! All quantities are SI: meters, newtons, kilograms, radians unless a name
//! says otherwise (`*_deg`).

pub mod error;
pub mod ik;
pub mod io;
pub mod linalg;
pub mod motion;
pub mod qp;
pub mod statics;
pub mod structure;

pub use error::{Error, Result};
