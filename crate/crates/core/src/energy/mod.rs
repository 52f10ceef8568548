//! Solar supply model: PV cells, harvesting converter, load and frame-rate
//! governor.

pub mod governor;
pub mod harvester;
pub mod load;
pub mod pv;

pub use governor::{AccuracyCurve, Governor, GovernorPolicy};
pub use harvester::{
    step_harvester, sustainable_fps, HarvestEvent, HarvesterConfig, HarvesterState, Telemetry,
};
pub use load::LoadModel;
pub use pv::{ArrayConfig, PowerPoint, PvCellParams};
