//! Discrete-time simulator and scheduling library for data delivery over LEO
//! mega-constellations.
//!
//! The library models a Walker-style constellation as a ring of *orbit nodes*:
//! satellites that share an orbital plane are interchangeable carriers whose
//! ground-station visibility differs only by phase. Delivery plans combine
//! physical orbital motion (pickup-carry-offload, "PCO") with inter-satellite
//! links (ISLs) on a +Grid topology, and a min-cost max-flow pass de-conflicts
//! the instants at which tasks cross between planes.
//!
//! Module map:
//! - [`constellation`]: Walker shell generation, two-line-element ingestion,
//!   circular-orbit propagation, sunlight test.
//! - [`topology`]: +Grid ISL edges, elevation-gated ground-station links,
//!   per-tick connectivity snapshots, the bundled station catalog.
//! - [`oan`]: orbit-as-node graph — per-orbit visibility windows, ring hop
//!   distances, per-satellite PCO delivery times.
//! - [`tasking`]: seeded task generation (intensity levels, deadlines,
//!   hotspot origin distributions) plus CSV import/export.
//! - [`energy`]: battery depth-of-discharge, charge/discharge stepping, and
//!   the exponential life-consumption model.
//! - [`scheduler`]: traffic diffusion across neighbor orbits, delivery
//!   planning (PCO-only / hybrid / ISL-only), crossing-time optimization,
//!   and the fault-recovery machinery.
//! - [`flow`]: the time-expanded min-cost max-flow solver used to assign
//!   contention-free crossing slots.
//! - [`baselines`]: nearest / nearest-available station selection crossed
//!   with shortest-ISL and carry-only routing.
//! - [`engine`]: the discrete-time simulation loop, delayed-telemetry state
//!   views, ground-station queues, fault injection, and metrics output.
//! - [`oracle`]: exact small-instance reference — exhaustive schedule
//!   enumeration, binary-product linearization, piecewise-linear `exp`.
//! - [`scenario`]: plain-text scenario configuration, presets, round-trip
//!   serialization.
//! - [`validation`]: cross-cutting soundness checks wired into the CLI
//!   report command.

pub mod baselines;
pub mod constants;
pub mod constellation;
pub mod energy;
pub mod engine;
pub mod flow;
pub mod oan;
pub mod oracle;
pub mod scenario;
pub mod scheduler;
pub mod tasking;
pub mod topology;
pub mod validation;

pub use self::{
    constellation::{Constellation, Propagator, Satellite},
    engine::{MetricsRecord, SimEngine},
    oan::OanGraph,
    scenario::ScenarioConfig,
    scheduler::{DeliveryPlan, Scheduler},
    tasking::Task,
};
