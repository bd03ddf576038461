//! Cache-blocked state-vector quantum circuit simulation.
//!
//! The crate is split along the life of a circuit:
//!
//! - [`gates`] defines gate semantics (dense matrices, diagonals, fused gates).
//! - [`circuit`] holds the data model (circuits, programs, layouts, config) and
//!   the text formats used to exchange them.
//! - [`optimizer`] turns a raw circuit into a [`Program`]: gate blocks that each
//!   fit inside one cache-sized chunk, separated by in-memory and cross-rank
//!   qubit swaps, optionally with diagonal and general gate fusion.
//! - [`engine`] executes a program on a single state vector, chunk by chunk.
//! - [`distributed`] executes a program over `2^R` rank slices, implementing the
//!   cross-rank swap as a grouped all-to-all exchange.
//! - [`tools`] carries the gate-by-gate oracle, order validation, fidelity and
//!   benchmark circuit generators.
//!
//! ```
//! use aicsim::{circuit::Config, optimizer::aio_optimize, tools};
//!
//! let circuit = tools::gen_qft(6);
//! let config = Config::new(6).with_chunk_qubits(3);
//! let program = aio_optimize(&circuit, &config).unwrap();
//! let (state, layout) = aicsim::engine::simulate_program(&program, &config, 0).unwrap();
//! let state = tools::layout_apply(&state, &layout);
//! let oracle = tools::oracle_simulate(&circuit, 0).unwrap();
//! assert!(tools::fidelity(&state, &oracle).unwrap() > 1.0 - 1e-10);
//! ```

pub mod circuit;
pub mod distributed;
pub mod engine;
pub mod error;
pub mod gates;
pub mod optimizer;
pub mod tools;

pub use circuit::{Circuit, Config, GateBlock, Program, ProgramItem, QubitLayout, SwapKind, SwapOp};
pub use engine::StateVector;
pub use error::{Error, Result};
pub use gates::{Gate, GateKind};

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex64;
