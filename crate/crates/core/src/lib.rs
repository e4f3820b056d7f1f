//! Outcome probabilities for sequences of measurements by several agents,
//! where each measurement's record is either retained to the end or erased.
//!
//! Two independent engines compute the same distributions:
//! [`paths`] sums Feynman path amplitudes, [`oracle`] evolves an explicit
//! unitary dilation with pointer ancillas.

pub mod cli;
pub mod hilbert;
pub mod library;
pub mod oracle;
pub mod paths;
pub mod scenario;

pub use hilbert::{Complex, PROBABILITY_TOL, STRUCTURE_TOL};
pub use library::RegimeTag;
pub use paths::OutcomeDistribution;
pub use scenario::{parse_scenario, validate, Scenario};
