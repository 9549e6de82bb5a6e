//! Exact dephasing dynamics of a harmonic oscillator whose energy is coupled
//! to a bath of harmonic oscillators.
//!
//! The system Hamiltonian commutes with the interaction, so populations are
//! conserved and every off-diagonal element of the system density matrix
//! decays (and possibly revives) by a single real function Γ(t):
//!
//! ```text
//! ρ_nm(t) = ρ_nm(0) · exp(-(n-m)² Γ(t))
//! ```
//!
//! The crate computes Γ(t) three independent ways and cross-checks them:
//!
//! * [`finite_bath`] — closed sum over a finite list of bath modes, plus an
//!   exact-arithmetic periodicity analysis of the recurrences ("false
//!   decoherence": Γ returns to zero whenever all mode frequencies are
//!   commensurate).
//! * [`continuum`] — adaptive quadrature against an Ohmic spectral density
//!   with exponential upper cutoff and sharp infrared cutoff, together with
//!   closed-form vacuum/thermal expressions and their short-time and
//!   high-temperature limits.
//! * [`oracle`] — brute-force propagation of the full system⊗bath problem in
//!   a truncated Fock basis, used to validate the analytic map end to end.
//!
//! [`model`] holds the shared validated types, [`evolution`] applies a
//! dephasing map to density matrices, and [`cli`] backs the `dephasim`
//! command-line runner.

pub mod cli;
pub mod continuum;
pub mod evolution;
pub mod finite_bath;
mod math;
pub mod model;
pub mod oracle;
