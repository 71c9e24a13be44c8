//! Pole-decomposition toolkit for decoherence in open quantum systems.
//!
//! The crate is organised by model layer:
//!
//! * [`mode_catalogue`]: decaying-mode sums, relaxation and decoherence times.
//! * [`friedrichs`]: second-order Friedrichs poles and an exact discretized oracle.
//! * [`coherent_states`]: truncated coherent states and their overlaps.
//! * [`omnes`]: the two-Gaussian oscillator scenario and its decoherence law.
//! * [`preferred_basis`]: moving preferred basis from slow-mode states.
//! * [`khalfin`]: one- and two-pole evolution profiles with a long-time tail.
//! * [`bifriedrichs`]: two commuting Friedrichs parts with separated bands.

pub mod bifriedrichs;
pub mod coherent_states;
pub mod fit;
pub mod friedrichs;
pub mod khalfin;
pub mod mode_catalogue;
pub mod omnes;
pub mod preferred_basis;
pub mod quadrature;


pub use bifriedrichs::{BiPartModel, BiPartSpec, PartSpec};
pub use coherent_states::{MacroscopicityReport, Normalization, QuasiCoherentState};
pub use fit::{fit_decay_rate, RateFit};
pub use friedrichs::{DensityOfStates, FormFactor, FormFactorShape, PoleResult};
pub use khalfin::{EvolutionProfile, KhalfinTail};
pub use mode_catalogue::{DecayMode, ModeCatalogue};
pub use omnes::{OmnesConfig, OmnesParams};
pub use preferred_basis::{DensityMatrix, EigenBasis, LadderScenario, Level};
pub use quadrature::QuadratureSpec;
