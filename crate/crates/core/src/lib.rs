//! Quantum Fisher information and Kraus-representation bounds for noisy
//! phase estimation.
//!
//! The crate covers four estimation strategies on `N` uses of a noisy phase
//! channel: sequential (i), parallel entangled (ii), parallel with passive
//! ancillas (iii) and fully adaptive (iv). Exact QFIs are computed by see-saw
//! optimisation over probe states, and upper bounds by convex minimisation
//! over Kraus representations.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod qfi;
pub mod strategies;

pub use bounds::{AlphaBeta, BoundReport, BoundScheme, KrausGenerator, SolverCertificate, SolverOptions};
pub use channels::{ChannelFamily, ChannelModel, PhaseUnitary};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianEigensystem};
pub use num_complex::Complex64;
pub use qfi::{SeesawOptions, SeesawResult, StateFamily};
pub use strategies::{Method, Scheme, StrategyOptions, StrategyPoint};
