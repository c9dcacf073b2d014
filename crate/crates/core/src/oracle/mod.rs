//! Independent reference integrator on the full configuration space.

pub mod geodesic;
pub mod group_chart;

pub use geodesic::{compare, decompose, geodesic_acceleration, geodesic_energy, geodesic_integrate, lift_initial, total_metric, CompareReport, Decomposition, GeodesicTrajectory, OracleReference, Raise};
pub use group_chart::{GroupChart, GroupFrame};
