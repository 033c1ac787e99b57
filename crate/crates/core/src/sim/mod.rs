//! Desk-scale immiscible water/CO₂ simulator on a vertical cross-section (IMPES).

pub mod archive;
pub mod fluid;
pub mod grid;
pub mod linsolve;
pub mod pressure;
pub mod rock;
pub mod simulate;
pub mod state;
pub mod system;
pub mod transport;
pub mod well;

pub use archive::{read_archive, write_archive, Archive};
pub use fluid::{corey_relperm, FluidProps, RelPermModel};
pub use grid::Grid;
pub use pressure::{pressure_solve, PressureSolution};
pub use rock::{gaussian_log_perm, porosity_from_perm, RockFields};
pub use simulate::{co2_in_place, simulate, SimCase, SimResult, StepControls};
pub use state::SimState;
pub use system::{FlowSystem, WellStatus};
pub use transport::{saturation_update, TransportOutcome};
pub use well::{RatePeriod, RateSchedule, Schedule, WellControl, WellSpec};
