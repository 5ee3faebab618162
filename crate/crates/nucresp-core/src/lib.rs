//! Two-body lattice response functions on a simulated quantum computer.
//!
//! The crate is `no_std` (with `alloc`). It contains the lattice model and
//! its classical oracles, the Pauli mapping, a small circuit IR, the circuit
//! constructions, a dense statevector simulator, ground-state preparation and
//! the phase-estimation response pipeline.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod circuit;
pub mod lattice;
pub mod linalg;
pub mod pauli;
pub mod response;
pub mod rng;
pub mod simulator;
pub mod state_prep;
pub mod synthesis;

pub use num_complex::Complex64 as C64;

/// Errors reported by the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidConfig(alloc::string::String),
    InvalidArgument(alloc::string::String),
    Dimension(alloc::string::String),
    NotHermitian(f64),
    NotDiagonal,
    Measurement,
    CircuitTooLarge { qubits: usize, limit: usize },
    PostSelection(f64),
    Budget { gates: usize, cap: usize },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InvalidConfig(s) => write!(f, "invalid configuration: {s}"),
            Error::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
            Error::Dimension(s) => write!(f, "dimension error: {s}"),
            Error::NotHermitian(d) => write!(f, "matrix is not Hermitian (deviation {d:e})"),
            Error::NotDiagonal => write!(f, "operator contains non-diagonal Pauli terms"),
            Error::Measurement => write!(f, "operation not defined for circuits with measurements"),
            Error::CircuitTooLarge { qubits, limit } => {
                write!(f, "{qubits} qubits exceeds the limit of {limit}")
            }
            Error::PostSelection(p) => write!(f, "post-selection probability {p:e} too small"),
            Error::Budget { gates, cap } => write!(f, "circuit has {gates} gates, cap is {cap}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

/// Six significant digits, in the style of C's `%.6g` with trailing zeros kept.
pub fn fmt6(x: f64) -> alloc::string::String {
    #[allow(unused_imports)]
    use num_traits::Float;
    if x == 0.0 || !x.is_finite() {
        return alloc::format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade
    let e = if (x.abs() / 10f64.powi(e)) >= 9.999995 { e + 1 } else { e };
    if (-5..6).contains(&e) {
        alloc::format!("{:.*}", (5 - e) as usize, x)
    } else {
        alloc::format!("{x:.5e}")
    }
}
