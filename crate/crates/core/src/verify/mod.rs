//! Audits of the energy, norm and oscillation inequalities along a trajectory.

pub mod energy;
pub mod norms;
pub mod oscillation;
pub mod sweep;

pub use energy::{global_energy_audit, local_energy_audit, EnergyKind, EnergyReport, EnergyRow, EnergySeries, TestFunction};
pub use norms::{
    apriori_audit, caloric_bounds_audit, check_scaling, nonlinear_norm_audit, norm_ledger, AprioriReport, CaloricBoundsReport,
    NonlinearReport, NormLedger,
};
pub use oscillation::{oscillation_audit, pressure_oscillation_audit, OscillationReport};
pub use sweep::{epsilon_sweep, trajectory_distance, SweepReport};

#[cfg(test)]
mod tests;
