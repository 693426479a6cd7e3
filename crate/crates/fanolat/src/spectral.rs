//! Closed-form spectral quantities and bound-state search.
//!
//! Everything here descends from the Laplace-domain self-energy of the
//! defect level,
//!
//! ```text
//! Σ(s) = (2κ_a²/π) ∫₀^π dk sin²(n₀k) / (is + 2κ₀ cos k),
//! ```
//!
//! which evaluates exactly. Writing a = is/(2κ₀) and letting b be the root
//! of b² - 2ab + 1 = 0 with |b| < 1 (the choice that selects the physical
//! sheet; |b| = 1 exactly on the branch cut s = -iω, ω ∈ [-2κ₀, 2κ₀]),
//!
//! ```text
//! Σ(s) = (κ_a²/κ₀) · b · (1 + b² + b⁴ + … + b^(2n₀-2)).
//! ```
//!
//! The finite geometric sum is used directly: it is manifestly finite at the
//! band edges (where b → ±1) and reproduces the -iκ_a²/s falloff at large
//! |s| since b → κ₀/(is). Boundary values on the two sides of the cut give
//! the level shift Δ(ω) = Re Σ(-iω ± 0⁺) and the spectral density through
//! Im Σ = ∓πG(ω).
//!
//! Bound states are roots of Ω - ω_a = Δ(Ω): outside the band they are
//! bracketed and bisected on the outer branches of Δ; inside the band they
//! exist only at the discrete resonances where the coupling has a zero, and
//! are matched by frequency rather than root-found.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::decay;
use crate::model::{self, ModelParams, DEFAULT_RESONANCE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("frequency {0} outside the band")]
    DomainError(f64),
    #[error("band edge {0} excluded; use the one-sided edge limit")]
    BandEdge(f64),
    #[error("s = {0} lies on the branch cut")]
    OnBranchCut(Complex64),
    #[error("root bracketing failed on the {side:?} side: f({lo}) = {f_lo:.3e}, f({hi}) = {f_hi:.3e}")]
    RootFindFailure { side: BandSide, lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    Lower,
    Upper,
}

/// Which side of the branch cut a boundary value is taken from:
/// `Plus` is s = -iω + 0⁺ (retarded side), `Minus` is s = -iω - 0⁺.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStateKind {
    BelowBand,
    InContinuum,
    AboveBand,
}

/// A bound state of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub omega: f64,
    pub kind: BoundStateKind,
    /// Spectral weight of the defect level on the state; populated for
    /// in-band states.
    pub weight: Option<f64>,
    /// Resonance index m of the in-band state.
    pub m_index: Option<usize>,
}

/// Spectral density G(ω) = ρ(ω)|v(ω)|² on the closed band,
///
/// ```text
/// G(ω) = (2κ_a²/π) sin²[n₀ acos(ω/2κ₀)] / √(4κ₀² - ω²),
/// ```
///
/// with the limit value 0 at ω = ±2κ₀: the coupling zeros kill the van Hove
/// divergence of ρ.
pub fn spectral_density(params: &ModelParams, omega: f64) -> Result<f64, SpectralError> {
    let edge = params.band_high();
    if omega.abs() > edge {
        return Err(SpectralError::DomainError(omega));
    }
    if omega.abs() == edge {
        return Ok(0.0);
    }
    let ka = params.kappa_a();
    let theta = (omega / edge).acos();
    let s = (params.n0() as f64 * theta).sin();
    Ok(2.0 * ka * ka / PI * s * s / (edge * edge - omega * omega).sqrt())
}

/// Level shift Δ(ω) = Re Σ(-iω ± 0⁺), in its three closed-form branches:
///
/// ```text
///        ⎧ -κ_a²/√(ω²-4κ₀²) · [1 - ((√(ω²-4κ₀²)+ω)/2κ₀)^(2n₀)]   ω < -2κ₀
/// Δ(ω) = ⎨  κ_a²/√(4κ₀²-ω²) · sin[2n₀ acos(ω/2κ₀)]               |ω| < 2κ₀
///        ⎩  κ_a²/√(ω²-4κ₀²) · [1 - ((√(ω²-4κ₀²)-ω)/2κ₀)^(2n₀)]   ω > 2κ₀
/// ```
///
/// The outer-branch bases are evaluated in rationalized form to avoid the
/// cancellation between √(ω²-4κ₀²) and ω at large |ω|. The edges themselves
/// are excluded; their finite one-sided limits come from
/// [`level_shift_edge`].
pub fn level_shift(params: &ModelParams, omega: f64) -> Result<f64, SpectralError> {
    let edge = params.band_high();
    let ka2 = params.kappa_a() * params.kappa_a();
    let two_n0 = 2 * params.n0() as i32;
    if omega.abs() == edge {
        return Err(SpectralError::BandEdge(omega));
    }
    if omega.abs() < edge {
        let theta = (omega / edge).acos();
        let root = (edge * edge - omega * omega).sqrt();
        return Ok(ka2 / root * (2.0 * params.n0() as f64 * theta).sin());
    }
    let root = (omega * omega - edge * edge).sqrt();
    if omega > 0.0 {
        // (root - ω)/2κ₀ = -2κ₀/(root + ω)
        let q = -edge / (root + omega);
        Ok(ka2 / root * (1.0 - q.powi(two_n0)))
    } else {
        // (root + ω)/2κ₀ = -2κ₀/(root - ω)
        let q = -edge / (root - omega);
        Ok(-ka2 / root * (1.0 - q.powi(two_n0)))
    }
}

/// One-sided limit of Δ at a band edge: ∓κ_a²n₀/κ₀ at the lower/upper edge.
///
/// Both the in-band and out-of-band branches approach this value; it is
/// what enters the existence window for outside bound states.
pub fn level_shift_edge(params: &ModelParams, side: BandSide) -> f64 {
    let v = params.kappa_a() * params.kappa_a() * params.n0() as f64 / params.kappa0();
    match side {
        BandSide::Lower => -v,
        BandSide::Upper => v,
    }
}

/// The |b| < 1 root of b² - 2ab + 1 = 0 with a = is/(2κ₀).
///
/// The two roots are reciprocal, so exactly one lies inside the unit circle
/// except on the cut, where both sit on it. Selecting the smaller modulus
/// is what "first sheet" means operationally: it makes Σ(s) → -iκ_a²/s as
/// |s| → ∞ and gives the retarded boundary values for Re s → 0⁺.
fn cut_parameter(params: &ModelParams, s: Complex64) -> Result<Complex64, SpectralError> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(SpectralError::OnBranchCut(s));
    }
    if s.re == 0.0 && s.im.abs() <= params.band_high() {
        return Err(SpectralError::OnBranchCut(s));
    }
    let a = Complex64::new(0.0, 1.0) * s / (2.0 * params.kappa0());
    let r = (a * a - 1.0).sqrt();
    let b_minus = a - r;
    let b_plus = a + r;
    Ok(if b_minus.norm_sqr() <= b_plus.norm_sqr() { b_minus } else { b_plus })
}

/// Exact self-energy Σ(s) off the branch cut.
pub fn self_energy(params: &ModelParams, s: Complex64) -> Result<Complex64, SpectralError> {
    let b = cut_parameter(params, s)?;
    let b2 = b * b;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for _ in 1..params.n0() {
        term *= b2;
        sum += term;
    }
    Ok(params.kappa_a() * params.kappa_a() / params.kappa0() * b * sum)
}

/// Boundary value Σ(-iω ± 0⁺) = Δ(ω) ∓ iπG(ω) for ω strictly inside the band.
pub fn self_energy_boundary(
    params: &ModelParams,
    omega: f64,
    side: CutSide,
) -> Result<Complex64, SpectralError> {
    if omega.abs() >= params.band_high() {
        return Err(SpectralError::DomainError(omega));
    }
    let delta = level_shift(params, omega)?;
    let g = spectral_density(params, omega)?;
    let sign = match side {
        CutSide::Plus => -1.0,
        CutSide::Minus => 1.0,
    };
    Ok(Complex64::new(delta, sign * PI * g))
}

/// Bound states outside the band: the roots of Ω - ω_a = Δ(Ω) on
/// (-∞, -2κ₀) and (2κ₀, ∞). Zero, one or two states; existence on each side
/// is equivalent to the window test failing on that side.
pub fn outside_bound_states(params: &ModelParams) -> Result<Vec<BoundState>, SpectralError> {
    let window = model::outside_bound_state_window(params);
    let mut states = Vec::new();
    if params.omega_a() <= window.lower {
        let omega = bisect_outside(params, BandSide::Lower)?;
        states.push(BoundState {
            omega,
            kind: BoundStateKind::BelowBand,
            weight: None,
            m_index: None,
        });
    }
    if params.omega_a() >= window.upper {
        let omega = bisect_outside(params, BandSide::Upper)?;
        states.push(BoundState {
            omega,
            kind: BoundStateKind::AboveBand,
            weight: None,
            m_index: None,
        });
    }
    Ok(states)
}

fn bisect_outside(params: &ModelParams, side: BandSide) -> Result<f64, SpectralError> {
    let edge = params.band_high();
    let span = 10.0 * params.kappa0().max(level_shift_edge(params, BandSide::Upper));
    let f = |w: f64| w - params.omega_a() - level_shift(params, w).expect("off-edge");

    // Δ is monotone toward zero outside the band, so the root is simple and
    // bracketed between the edge and a geometrically expanded outer point.
    let (mut lo, mut hi) = match side {
        BandSide::Upper => {
            let lo = edge * (1.0 + 4.0 * f64::EPSILON);
            let mut hi = edge + span;
            let mut grow = 0;
            while f(hi) <= 0.0 && grow < 60 {
                hi = edge + 2.0 * (hi - edge);
                grow += 1;
            }
            (lo, hi)
        }
        BandSide::Lower => {
            let hi = -edge * (1.0 + 4.0 * f64::EPSILON);
            let mut lo = -edge - span;
            let mut grow = 0;
            while f(lo) >= 0.0 && grow < 60 {
                lo = -edge + 2.0 * (lo + edge);
                grow += 1;
            }
            (lo, hi)
        }
    };

    let (f_lo, f_hi) = (f(lo), f(hi));
    let bracket_ok = match side {
        BandSide::Upper => f_lo < 0.0 && f_hi > 0.0,
        BandSide::Lower => f_lo < 0.0 && f_hi > 0.0,
    };
    if !bracket_ok {
        return Err(SpectralError::RootFindFailure { side, lo, hi, f_lo, f_hi });
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bound state inside the band, present iff ω_a matches one of the discrete
/// resonance frequencies within the default tolerance.
///
/// The weight is the defect-level residue; resolving it triggers the
/// one-time residue-formula calibration run (cached process-wide).
pub fn bic_bound_states(params: &ModelParams) -> Vec<BoundState> {
    bic_bound_states_with_tol(params, DEFAULT_RESONANCE_TOL * params.kappa0())
}

/// Same as [`bic_bound_states`] with an explicit absolute frequency
/// tolerance on the resonance match, for scanned inputs.
pub fn bic_bound_states_with_tol(params: &ModelParams, tol: f64) -> Vec<BoundState> {
    match model::resonant_bic_index(params, tol) {
        None => Vec::new(),
        Some(m) => {
            let omega = model::bic_frequencies(params)[m - 1];
            let weight = decay::pole_weight_for_mode(params, m, decay::resolved_residue_formula());
            vec![BoundState {
                omega,
                kind: BoundStateKind::InContinuum,
                weight: Some(weight),
                m_index: Some(m),
            }]
        }
    }
}

/// The n₀ → ∞ limit, where sin²(n₀k) averages to 1/2 and the coupling is
/// effectively flat. In this limit the in-band level shift vanishes
/// identically and in-band bound states disappear, while two outside bound
/// states always exist.
pub mod flat {
    use super::*;

    /// κ_a² / (π √(4κ₀² - ω²)), divergent at the edges.
    pub fn spectral_density(params: &ModelParams, omega: f64) -> Result<f64, SpectralError> {
        let edge = params.band_high();
        if omega.abs() > edge {
            return Err(SpectralError::DomainError(omega));
        }
        if omega.abs() == edge {
            return Err(SpectralError::BandEdge(omega));
        }
        let ka = params.kappa_a();
        Ok(ka * ka / (PI * (edge * edge - omega * omega).sqrt()))
    }

    /// 0 inside the band, ±κ_a²/√(ω²-4κ₀²) outside.
    pub fn level_shift(params: &ModelParams, omega: f64) -> Result<f64, SpectralError> {
        let edge = params.band_high();
        let ka2 = params.kappa_a() * params.kappa_a();
        if omega.abs() == edge {
            return Err(SpectralError::BandEdge(omega));
        }
        if omega.abs() < edge {
            return Ok(0.0);
        }
        let root = (omega * omega - edge * edge).sqrt();
        Ok(omega.signum() * ka2 / root)
    }

    /// -iκ_a²/√(s²+4κ₀²) on the same sheet as the full self-energy.
    pub fn self_energy(params: &ModelParams, s: Complex64) -> Result<Complex64, SpectralError> {
        let b = super::cut_parameter(params, s)?;
        let ka = params.kappa_a();
        Ok(ka * ka / params.kappa0() * b / (1.0 - b * b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::quad::{self, QuadratureSettings};
    use approx::assert_relative_eq;

    fn params(n0: usize, omega_a: f64) -> ModelParams {
        ModelParams::new(1.0, 0.2, n0, omega_a).unwrap()
    }

    #[test]
    fn spectral_density_edges_and_zeros() {
        let p = params(12, 0.0);
        assert_eq!(spectral_density(&p, 2.0).unwrap(), 0.0);
        assert_eq!(spectral_density(&p, -2.0).unwrap(), 0.0);
        assert!(spectral_density(&p, 2.0001).is_err());
        for &w in &model::bic_frequencies(&p) {
            assert!(spectral_density(&p, w).unwrap() < 1e-25, "interior zero at {w}");
        }
    }

    #[test]
    fn spectral_density_reference_value() {
        // n0 = 2: zero at band center, (2κ_a²/π)/√2 at ω = -√2
        let p = params(2, 0.0);
        assert!(spectral_density(&p, 0.0).unwrap() < 1e-30);
        let w = -2.0f64.sqrt();
        assert_relative_eq!(
            spectral_density(&p, w).unwrap(),
            0.08 / (PI * 2.0f64.sqrt()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn spectral_density_matches_dos_times_coupling() {
        // independent route: G(ω(k)) = ρ(ω)|v(k)|²
        let p = params(7, 0.0);
        for j in 1..40 {
            let k = PI * j as f64 / 40.0;
            let w = model::dispersion(&p, k).unwrap();
            let v = model::coupling(&p, k).unwrap();
            let rho = model::density_of_states(&p, w).unwrap();
            assert_relative_eq!(
                spectral_density(&p, w).unwrap(),
                rho * v * v,
                max_relative = 1e-10,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn spectral_density_even_in_omega() {
        let p = params(9, 0.0);
        for j in 1..50 {
            let w = 1.99 * j as f64 / 50.0;
            assert_relative_eq!(
                spectral_density(&p, w).unwrap(),
                spectral_density(&p, -w).unwrap(),
                max_relative = 1e-12,
                epsilon = 1e-16
            );
        }
    }

    #[test]
    fn level_shift_zeros_and_oddness() {
        let p = params(5, 0.0);
        assert_eq!(level_shift(&p, 0.0).unwrap().abs() < 1e-15, true);
        // zeros at -2κ₀ cos(lπ/2n₀), l = 1..2n₀-1
        for l in 1..(2 * 5) {
            let w = -2.0 * (l as f64 * PI / 10.0).cos();
            assert!(level_shift(&p, w).unwrap().abs() < 1e-13, "zero at l = {l}");
        }
        for j in 1..40 {
            let w = 1.95 * j as f64 / 40.0;
            assert_relative_eq!(
                level_shift(&p, w).unwrap(),
                -level_shift(&p, -w).unwrap(),
                max_relative = 1e-11,
                epsilon = 1e-15
            );
        }
        assert!(matches!(level_shift(&p, 2.0), Err(SpectralError::BandEdge(_))));
    }

    #[test]
    fn level_shift_matches_principal_value_oracle() {
        // Δ(ω) = P ∫ dω' G(ω')/(ω - ω') evaluated by excised quadrature
        let p = params(3, 0.0);
        let w0 = 0.5;
        let pv = quad::principal_value(
            |wp| spectral_density(&p, wp).unwrap() / (w0 - wp),
            -2.0,
            2.0,
            &[w0],
            &QuadratureSettings::default(),
        )
        .unwrap();
        assert_relative_eq!(level_shift(&p, w0).unwrap(), pv, epsilon = 1e-6);
        assert_relative_eq!(level_shift(&p, w0).unwrap(), 0.020625, epsilon = 1e-12);
    }

    #[test]
    fn edge_limits() {
        let p = params(12, 0.0);
        assert_relative_eq!(level_shift_edge(&p, BandSide::Upper), 0.48, epsilon = 1e-15);
        assert_relative_eq!(level_shift_edge(&p, BandSide::Lower), -0.48, epsilon = 1e-15);
        // numeric limit just outside the edge
        let near = level_shift(&p, 2.0 * (1.0 + 1e-8)).unwrap();
        assert_relative_eq!(near, 0.48, epsilon = 1e-3);

        let p1 = ModelParams::new(1.0, 1.0, 1, 0.0).unwrap();
        assert_relative_eq!(level_shift_edge(&p1, BandSide::Upper), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn self_energy_large_s_asymptote() {
        let p = params(5, 0.0);
        let s = Complex64::new(100.0, 0.0);
        let sigma = self_energy(&p, s).unwrap();
        let asym = Complex64::new(0.0, -1.0) * 0.04 / s;
        assert!((sigma - asym).norm() < 1e-6, "sigma = {sigma}, asym = {asym}");
    }

    #[test]
    fn self_energy_matches_quadrature_oracle() {
        let p = params(2, 0.0);
        let settings = QuadratureSettings { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
        let s = Complex64::new(1.0, 0.0);
        let oracle = quad::integrate(
            |k| {
                let num = (2.0 * k).sin().powi(2) * 2.0 * 0.04 / PI;
                num / (Complex64::new(0.0, 1.0) * s + 2.0 * k.cos())
            },
            0.0,
            PI,
            &settings,
        )
        .unwrap();
        let closed = self_energy(&p, s).unwrap();
        assert!((closed - oracle).norm() < 1e-10, "closed = {closed}, oracle = {oracle}");
    }

    #[test]
    fn self_energy_boundary_as_limit() {
        let p = params(12, 0.0);
        for &w in &[0.3f64, -1.1, 1.7] {
            let plus = self_energy_boundary(&p, w, CutSide::Plus).unwrap();
            let minus = self_energy_boundary(&p, w, CutSide::Minus).unwrap();
            let lim_plus = self_energy(&p, Complex64::new(1e-8, -w)).unwrap();
            let lim_minus = self_energy(&p, Complex64::new(-1e-8, -w)).unwrap();
            assert!((plus - lim_plus).norm() < 1e-6, "plus side at {w}");
            assert!((minus - lim_minus).norm() < 1e-6, "minus side at {w}");
            assert_relative_eq!(plus.re, minus.re, epsilon = 1e-14);
            assert_relative_eq!(plus.im, -minus.im, epsilon = 1e-14);
        }
        // purely real at a spectral-density zero
        let w = model::bic_frequencies(&p)[3];
        let b = self_energy_boundary(&p, w, CutSide::Plus).unwrap();
        assert!(b.im.abs() < 1e-14);
    }

    #[test]
    fn self_energy_rejects_cut() {
        let p = params(3, 0.0);
        assert!(matches!(
            self_energy(&p, Complex64::new(0.0, 1.0)),
            Err(SpectralError::OnBranchCut(_))
        ));
        assert!(self_energy(&p, Complex64::new(0.0, 2.5)).is_ok());
    }

    #[test]
    fn outside_states_absent_inside_window() {
        let p = params(12, 0.15);
        assert!(outside_bound_states(&p).unwrap().is_empty());
    }

    #[test]
    fn outside_state_above_band() {
        let p = params(12, 1.9);
        let states = outside_bound_states(&p).unwrap();
        assert_eq!(states.len(), 1);
        let s = &states[0];
        assert_eq!(s.kind, BoundStateKind::AboveBand);
        assert!(s.omega > 2.0);
        let residual = (s.omega - 1.9 - level_shift(&p, s.omega).unwrap()).abs();
        assert!(residual < 1e-10, "residual = {residual:e}");
    }

    #[test]
    fn flat_regime_always_has_two_outside_states() {
        let p = ModelParams::new(1.0, 0.2, 200, 0.0).unwrap();
        let states = outside_bound_states(&p).unwrap();
        assert_eq!(states.len(), 2);
        assert_eq!(states[0].kind, BoundStateKind::BelowBand);
        assert_eq!(states[1].kind, BoundStateKind::AboveBand);
    }

    #[test]
    fn bic_detection() {
        let hit = bic_bound_states(&params(12, 0.0));
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].kind, BoundStateKind::InContinuum);
        assert_eq!(hit[0].m_index, Some(6));
        assert!(hit[0].omega.abs() < 1e-15);
        let w = hit[0].weight.unwrap();
        assert!(w > 0.0 && w <= 1.0);

        assert!(bic_bound_states(&params(12, 0.15)).is_empty());
        assert!(bic_bound_states(&params(1, 0.7)).is_empty());
    }

    #[test]
    fn flat_limit_values() {
        let p = params(12, 0.0);
        // in-band level shift vanishes identically
        for j in 0..20 {
            let w = -1.9 + 3.8 * j as f64 / 19.0;
            assert_eq!(flat::level_shift(&p, w).unwrap(), 0.0);
        }
        assert_relative_eq!(flat::level_shift(&p, 2.5).unwrap(), 0.04 / (2.5f64 * 2.5 - 4.0).sqrt());

        let sigma = flat::self_energy(&p, Complex64::new(1.0, 0.0)).unwrap();
        let expect = Complex64::new(0.0, -0.04 / 5.0f64.sqrt());
        assert!((sigma - expect).norm() < 1e-14, "sigma = {sigma}");
    }

    #[test]
    fn flat_density_is_cycle_average() {
        // averaging G over one oscillation period near ω = 0 at n0 = 64
        let p = params(64, 0.0);
        let period = 2.0 * PI / 64.0; // local period of sin²(n₀ acos(ω/2)) near ω = 0
        let settings = QuadratureSettings::default();
        let avg = quad::integrate(
            |w| Complex64::new(spectral_density(&p, w).unwrap(), 0.0),
            -period / 2.0,
            period / 2.0,
            &settings,
        )
        .unwrap()
        .re
            / period;
        let flat_val = flat::spectral_density(&p, 0.0).unwrap();
        assert!((avg - flat_val).abs() / flat_val < 0.02, "avg = {avg}, flat = {flat_val}");
    }

    #[test]
    fn band_integral_of_spectral_density_is_coupling_strength() {
        let p = params(2, 0.0);
        let settings = QuadratureSettings::default();
        let total = quad::integrate(
            |w| Complex64::new(spectral_density(&p, w).unwrap(), 0.0),
            -2.0,
            2.0,
            &settings,
        )
        .unwrap()
        .re;
        assert_relative_eq!(total, 0.04, epsilon = 1e-9);
    }
}
