//! Simulator for single-photon input-output networks built around a
//! cavity-QED microwave switch: a driven Jaynes-Cummings system with up to
//! three waveguide channels, single-photon wavepacket inputs, piecewise-
//! constant coupling schedules and a filtering cavity variant.
//!
//! The dynamics are the coupled hierarchy of generalized density operators
//! for Fock-state inputs, integrated with fixed-step RK4. On top of the
//! integrator sit flux/excitation observables and a grid-sweep optimization
//! harness with reference configurations for the bundled benchmark numbers.

pub mod engine;
pub mod error;
pub mod hierarchy;
pub mod model;
pub mod observables;
pub mod operator;
pub mod reference;
pub mod sweep;

pub use engine::{integrate, integrate_with, EngineOptions, Trajectory};
pub use error::{Result, SwitchError};
pub use hierarchy::{
    build_labels, canonical_labels, conjugate_closure, initial_state, HierarchyState,
    OccupancyLabel, Scenario,
};
pub use model::{
    jc_eigenenergy, xi, Branch, CouplingSchedule, NetworkSpec, PhysicalRates, PulseSpec,
    RateConvention, SchedulePreset, Variant,
};
pub use observables::{
    extinction_ratio, p2, photon_flux, ExtinctionRatio, FluxSample, SwitchMetrics,
};
pub use operator::{
    annihilation, basis_projector, embed, expectation, number_op, qubit_lowering, Operator,
    SpaceSignature,
};
