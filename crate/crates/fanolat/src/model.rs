//! Model parameters and closed-form band structure.
//!
//! The system is a single discrete level |a⟩ of frequency ω_a side-coupled
//! with strength κ_a to site n₀ of a semi-infinite tight-binding chain with
//! hopping rate κ₀. In momentum space the chain carries a band
//!
//! ```text
//! ω(k) = -2κ₀ cos k,          k ∈ [0, π]
//! ```
//!
//! and the defect couples through the colored profile
//!
//! ```text
//! v(k) = √(2/π) κ_a sin(n₀ k)
//! ```
//!
//! whose zeros at k = mπ/n₀ are what make bound states inside the band
//! possible. Everything downstream (self-energy, level shift, decay law,
//! lattice simulation) consumes the quantities defined here.

use std::f64::consts::PI;
use thiserror::Error;

/// Default absolute tolerance (in units of κ₀) for deciding whether ω_a sits
/// on one of the discrete resonance frequencies of [`bic_frequencies`].
///
/// Exact float equality is too strict: for even resonances the closed-form
/// cosine rounds to ~1e-16 rather than 0, so a caller passing ω_a = 0 must
/// still match. Scans that need looser matching pass their own tolerance.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("rates must be positive: kappa0 = {kappa0}, kappa_a = {kappa_a}")]
    NonPositiveRate { kappa0: f64, kappa_a: f64 },
    #[error("attachment site index must be >= 1, got {0}")]
    InvalidSiteIndex(usize),
    #[error("momentum {0} outside [0, pi]")]
    DomainError(f64),
    #[error("density of states diverges for |omega| >= 2*kappa0 (omega = {0})")]
    BandEdgeSingularity(f64),
}

/// The four physical parameters of the model. Band edges ±2κ₀ are derived,
/// never stored.
///
/// Construction goes through [`ModelParams::new`], which enforces
/// κ₀ > 0, κ_a > 0 and n₀ ≥ 1; ω_a is unconstrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    kappa0: f64,
    kappa_a: f64,
    n0: usize,
    omega_a: f64,
}

impl ModelParams {
    pub fn new(kappa0: f64, kappa_a: f64, n0: usize, omega_a: f64) -> Result<Self, ModelError> {
        if !(kappa0 > 0.0) || !(kappa_a > 0.0) || !omega_a.is_finite() {
            return Err(ModelError::NonPositiveRate { kappa0, kappa_a });
        }
        if n0 < 1 {
            return Err(ModelError::InvalidSiteIndex(n0));
        }
        Ok(Self { kappa0, kappa_a, n0, omega_a })
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    /// Lower band edge -2κ₀.
    pub fn band_low(&self) -> f64 {
        -2.0 * self.kappa0
    }

    /// Upper band edge +2κ₀.
    pub fn band_high(&self) -> f64 {
        2.0 * self.kappa0
    }

    /// Same chain and coupling, different level frequency. Handy for sweeps.
    pub fn with_omega_a(&self, omega_a: f64) -> Self {
        Self { omega_a, ..*self }
    }
}

/// A point on the dispersion curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub k: f64,
    pub omega: f64,
}

impl BandPoint {
    pub fn at(params: &ModelParams, k: f64) -> Result<Self, ModelError> {
        Ok(Self { k, omega: dispersion(params, k)? })
    }
}

/// Band dispersion ω(k) = -2κ₀ cos k for k ∈ [0, π].
pub fn dispersion(params: &ModelParams, k: f64) -> Result<f64, ModelError> {
    if !(0.0..=PI).contains(&k) {
        return Err(ModelError::DomainError(k));
    }
    Ok(-2.0 * params.kappa0 * k.cos())
}

/// Coupling amplitude v(k) = √(2/π) κ_a sin(n₀ k) for k ∈ [0, π].
pub fn coupling(params: &ModelParams, k: f64) -> Result<f64, ModelError> {
    if !(0.0..=PI).contains(&k) {
        return Err(ModelError::DomainError(k));
    }
    Ok((2.0 / PI).sqrt() * params.kappa_a * (params.n0 as f64 * k).sin())
}

/// Density of states ρ(ω) = 1/√(4κ₀² - ω²), defined strictly inside the band.
///
/// The van Hove divergence at the edges is reported as an error rather than
/// returned as infinity; callers that need edge behaviour use the spectral
/// density, which stays finite there.
pub fn density_of_states(params: &ModelParams, omega: f64) -> Result<f64, ModelError> {
    let edge = params.band_high();
    if omega.abs() >= edge {
        return Err(ModelError::BandEdgeSingularity(omega));
    }
    Ok(1.0 / (4.0 * params.kappa0 * params.kappa0 - omega * omega).sqrt())
}

/// The n₀ - 1 discrete frequencies Ω_m = -2κ₀ cos(mπ/n₀), m = 1..n₀-1, at
/// which a bound state inside the band exists when ω_a is resonant with one
/// of them. Returned in increasing order; empty for n₀ = 1.
///
/// These are evaluated in closed form, not root-found, and are bitwise
/// identical to the eigenvalues returned by the lattice-side diagonalization.
pub fn bic_frequencies(params: &ModelParams) -> Vec<f64> {
    (1..params.n0)
        .map(|m| -2.0 * params.kappa0 * (m as f64 * PI / params.n0 as f64).cos())
        .collect()
}

/// Index m (1-based) of the resonance Ω_m within `tol` of ω_a, if any.
///
/// `tol` is an absolute frequency tolerance; pass
/// [`DEFAULT_RESONANCE_TOL`]·κ₀ for the default matching rule.
pub fn resonant_bic_index(params: &ModelParams, tol: f64) -> Option<usize> {
    let freqs = bic_frequencies(params);
    let mut best: Option<(usize, f64)> = None;
    for (i, &f) in freqs.iter().enumerate() {
        let d = (params.omega_a - f).abs();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i + 1, d));
        }
    }
    best.and_then(|(m, d)| (d <= tol).then_some(m))
}

/// Open interval of ω_a for which no bound state outside the band exists,
/// together with the verdict for the stored ω_a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateWindow {
    pub lower: f64,
    pub upper: f64,
    /// true ⇒ ω_a lies strictly inside the window ⇒ no outside bound states.
    pub omega_a_inside: bool,
}

impl BoundStateWindow {
    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }
}

/// No outside bound state exists iff ω_a ∈ (-2κ₀ + κ_a²n₀/κ₀, 2κ₀ - κ_a²n₀/κ₀).
///
/// A root above the band appears once ω_a exceeds the upper limit (the level
/// shift at the upper edge equals κ_a²n₀/κ₀), and symmetrically below. If the
/// coupling is strong enough that κ_a²n₀/κ₀ ≥ 2κ₀ the window is empty and
/// outside states exist for every ω_a.
pub fn outside_bound_state_window(params: &ModelParams) -> BoundStateWindow {
    let shift = params.kappa_a * params.kappa_a * params.n0 as f64 / params.kappa0;
    let lower = -2.0 * params.kappa0 + shift;
    let upper = 2.0 * params.kappa0 - shift;
    let omega_a_inside = lower < params.omega_a && params.omega_a < upper;
    BoundStateWindow { lower, upper, omega_a_inside }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig_params(omega_a: f64) -> ModelParams {
        ModelParams::new(1.0, 0.2, 12, omega_a).unwrap()
    }

    #[test]
    fn validation_accepts_reference_parameters() {
        assert!(ModelParams::new(1.0, 0.2, 12, 0.0).is_ok());
    }

    #[test]
    fn validation_rejects_nonpositive_rates() {
        assert!(matches!(
            ModelParams::new(0.0, 0.2, 1, 0.0),
            Err(ModelError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            ModelParams::new(1.0, -0.1, 1, 0.0),
            Err(ModelError::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn validation_rejects_site_index_zero() {
        assert!(matches!(
            ModelParams::new(1.0, 0.2, 0, 0.0),
            Err(ModelError::InvalidSiteIndex(0))
        ));
    }

    #[test]
    fn dispersion_endpoints_and_center() {
        let p = fig_params(0.0);
        assert_relative_eq!(dispersion(&p, 0.0).unwrap(), -2.0);
        assert_relative_eq!(dispersion(&p, PI / 2.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(dispersion(&p, PI).unwrap(), 2.0);
        assert!(dispersion(&p, -0.1).is_err());
        assert!(dispersion(&p, PI + 0.1).is_err());
    }

    #[test]
    fn dispersion_strictly_increasing_and_spans_band() {
        let p = fig_params(0.0);
        let mut prev = dispersion(&p, 0.0).unwrap();
        assert_relative_eq!(prev, p.band_low());
        for j in 1..=500 {
            let k = PI * j as f64 / 500.0;
            let w = dispersion(&p, k).unwrap();
            assert!(w > prev, "dispersion not increasing at k = {k}");
            prev = w;
        }
        assert_relative_eq!(prev, p.band_high());
    }

    #[test]
    fn coupling_zeros_and_peak() {
        let p = fig_params(0.0);
        // zero at every multiple of pi/n0
        for m in 0..=12 {
            let k = m as f64 * PI / 12.0;
            assert!(coupling(&p, k).unwrap().abs() < 1e-12, "m = {m}");
        }
        let p1 = ModelParams::new(1.0, 0.2, 1, 0.0).unwrap();
        assert_relative_eq!(
            coupling(&p1, PI / 2.0).unwrap(),
            (2.0 / PI).sqrt() * 0.2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn density_of_states_center_and_edges() {
        let p = fig_params(0.0);
        assert_relative_eq!(density_of_states(&p, 0.0).unwrap(), 0.5);
        assert!(matches!(
            density_of_states(&p, 2.5),
            Err(ModelError::BandEdgeSingularity(_))
        ));
        assert!(density_of_states(&p, 2.0).is_err());
        // van Hove growth toward the edge
        let mut prev = 0.0;
        for j in 1..200 {
            let w = 1.99 * j as f64 / 200.0;
            let rho = density_of_states(&p, w).unwrap();
            assert!(rho > prev);
            prev = rho;
        }
    }

    #[test]
    fn bic_frequencies_small_cases() {
        let p1 = ModelParams::new(1.0, 0.2, 1, 0.0).unwrap();
        assert!(bic_frequencies(&p1).is_empty());

        let p2 = ModelParams::new(1.0, 0.2, 2, 0.0).unwrap();
        let f2 = bic_frequencies(&p2);
        assert_eq!(f2.len(), 1);
        assert!(f2[0].abs() < 1e-15);

        let p3 = ModelParams::new(1.0, 0.2, 3, 0.0).unwrap();
        let f3 = bic_frequencies(&p3);
        assert_relative_eq!(f3[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(f3[1], 1.0, epsilon = 1e-15);

        let f12 = bic_frequencies(&fig_params(0.0));
        assert_eq!(f12.len(), 11);
        assert!(f12.iter().any(|f| f.abs() < 1e-15), "m = 6 entry should be 0");
    }

    #[test]
    fn bic_frequencies_sorted_inside_band_and_symmetric() {
        for n0 in 1..=16 {
            let p = ModelParams::new(1.3, 0.2, n0, 0.0).unwrap();
            let f = bic_frequencies(&p);
            assert_eq!(f.len(), n0 - 1);
            for w in f.windows(2) {
                assert!(w[0] < w[1]);
            }
            for (i, &w) in f.iter().enumerate() {
                assert!(w > p.band_low() && w < p.band_high());
                assert_relative_eq!(w, -f[f.len() - 1 - i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn resonance_matching_tolerates_rounding() {
        // omega_a = 0 must match the m = 6 resonance of n0 = 12 even though
        // the closed form rounds to ~1e-16 rather than exactly 0.
        let p = fig_params(0.0);
        assert_eq!(resonant_bic_index(&p, DEFAULT_RESONANCE_TOL), Some(6));
        assert_eq!(resonant_bic_index(&p.with_omega_a(0.15), DEFAULT_RESONANCE_TOL), None);
        assert_eq!(resonant_bic_index(&p.with_omega_a(-1.0), DEFAULT_RESONANCE_TOL), Some(4));
        let p1 = ModelParams::new(1.0, 0.2, 1, 0.0).unwrap();
        assert_eq!(resonant_bic_index(&p1, DEFAULT_RESONANCE_TOL), None);
    }

    #[test]
    fn window_matches_reference_values() {
        let w = outside_bound_state_window(&fig_params(0.15));
        assert_relative_eq!(w.lower, -1.52, epsilon = 1e-12);
        assert_relative_eq!(w.upper, 1.52, epsilon = 1e-12);
        assert!(w.omega_a_inside);

        let w = outside_bound_state_window(&fig_params(1.9));
        assert!(!w.omega_a_inside);

        // strong coupling: empty window, always false
        let p = ModelParams::new(1.0, 2.0, 1, 0.3).unwrap();
        let w = outside_bound_state_window(&p);
        assert!(w.is_empty());
        assert!(!w.omega_a_inside);
    }
}
