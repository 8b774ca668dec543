//! Conformally invariant Willmore-type energy of 4-dimensional submanifolds.
//!
//! Charts are evaluated as truncated Taylor jets, so every derivative used by
//! the energy, the obstruction field and the curvature checks is exact up to
//! rounding.

pub mod asymptotics;
pub mod chart;
pub mod cli;
pub mod config;
pub mod conformal;
pub mod energy;
pub mod error;
pub mod families;
pub mod geometry;
pub mod jet;
pub mod obstruction;
pub mod quadrature;
pub mod variation;
pub mod verify;

pub use chart::{make_family_chart, parse_family, Background, Family, ImmersionChart, Perturbation, TrigMode};
pub use conformal::{conformal_invariance_residual, push_forward_chart, AmbientMap};
pub use energy::{energy, energy_density, EnergyReport};
pub use error::{Error, Result};
pub use geometry::{geometry_at, intrinsic_curvature, Depth, GeometryData, IntrinsicCurvature};
pub use jet::Jet;
