//! A single discrete level side-coupled to a semi-infinite tight-binding
//! chain, solved two independent ways.
//!
//! The spectral route evaluates the exact self-energy, level shift and
//! spectral density in closed form, locates bound states below, above and
//! *inside* the band, and assembles the exact survival amplitude of the
//! level as a pole term plus a branch-cut integral. The time-domain route
//! integrates the coupled amplitude equations on the truncated chain
//! directly. Each module carries the quadrature or simulation oracle that
//! checks its closed forms.
//!
//! - [`model`]: parameters, dispersion, coupling profile, density of states,
//!   resonance frequencies and the existence window for outside bound states.
//! - [`quad`]: adaptive Gauss–Kronrod integration and Cauchy principal
//!   values by symmetric excision.
//! - [`spectral`]: G(ω), Δ(ω), Σ(s) with branch bookkeeping, bound-state
//!   search, and the flat-coupling limit.
//! - [`lattice`]: Dormand–Prince time evolution with an absorbing tail,
//!   trapped eigenstates in closed form, Hamiltonian residuals.
//! - [`decay`]: pole weight (two candidate closed forms plus empirical
//!   auto-resolution), branch-cut decay integral, trace comparison.

pub mod decay;
pub mod lattice;
pub mod model;
pub mod quad;
pub mod spectral;

pub use num_complex::Complex64;
