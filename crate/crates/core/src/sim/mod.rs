//! Synthetic scenes and the closed-loop camera simulation.

pub mod driver;
pub mod run;
pub mod scene;
pub mod tracker;

pub use driver::{GraphDriver, ObsEvent, Reappearance};
pub use run::{run_simulation, run_with, GroundTruth, RunMetrics, RunOptions, SimOutcome};
pub use scene::{generate_scene, EntityId, ScenarioScript, SceneConfig, TargetId, TargetSpec, WorldEvent};
