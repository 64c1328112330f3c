//! Error-pattern-preserving (EPP) qubit routing with surface-code verification
//! tooling.
//!
//! The crate compiles abstract stabilizer circuits onto connectivity-constrained
//! device graphs using only SWAP moves that cannot increase the weight of any
//! propagated error pattern, then quantifies the result: fault injection proves
//! pattern preservation exhaustively at low weight, closed-form effective-noise
//! tables predict the strength penalty, and Monte Carlo memory experiments with
//! an exact minimum-weight perfect-matching decoder measure logical error rates
//! before and after embedding.
//!
//! Module map:
//!
//! * [`topology`] — heavy-hexagon and hexagonal device lattices, unit cells,
//!   periodic tori, distances.
//! * [`circuit`] — abstract and device-level stabilizer circuits, layers,
//!   schedules.
//! * [`router`] — greedy EPP router for arbitrary circuits on arbitrary devices.
//! * [`surface_router`] — unit-cell schedule search for surface-code
//!   syndrome-extraction rounds on translation-invariant lattices.
//! * [`embedder`] — tiles a unit-cell schedule over a finite code patch and
//!   certifies the result move by move.
//! * [`noise`] — circuit-level depolarizing noise model and closed-form
//!   effective-noise channels for embedded operations.
//! * [`sim`] — Pauli-frame simulation, fault dictionaries, sampling.
//! * [`decoder`] — exact minimum-weight perfect-matching decoding on matching
//!   graphs derived from the circuit's own fault dictionary.
//! * [`experiment`] — memory experiments, threshold sweeps, scaling fits, and
//!   the schedule certification entry points used by the command-line tool.

pub mod circuit;
pub mod decoder;
pub mod embedder;
pub mod experiment;
pub mod noise;
pub mod router;
pub mod sim;
pub mod surface_router;
pub mod topology;
