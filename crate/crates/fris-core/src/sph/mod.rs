//! Complex spherical harmonics and energy-constrained radiation patterns.
//!
//! The harmonic convention used throughout the crate is
//!
//! ```text
//! Y_v^h(θ, φ) = (−1)^h N_v^h P_v^{|h|}(cos θ) e^{jhφ},
//! N_v^h = sqrt((2v+1)(v−|h|)! / (4π (v+|h|)!)),
//! ```
//!
//! with `P_v^h` the associated Legendre function *without* the
//! Condon–Shortley sign (the `(−1)^h` above carries it). Under this
//! convention the basis is orthonormal on the sphere,
//! `∫∫ Y_i Y_s^* sinθ dθ dφ = δ_is`, and `Y_v^{−h} = (Y_v^h)^*`.
//!
//! Basis functions are addressed by the linear index `i = v² + v + h + 1`.
//! A radiation pattern is the complex gain `p(θ, φ) = ω^H η(θ, φ)` where
//! `η` stacks the first `I` basis values; the per-element energy constraint
//! `∫∫ |p|² sinθ dθ dφ = 4π` is then exactly `‖ω‖² = 4π`.
//!
//! All functions here are pure; every type is immutable after construction
//! and freely shareable across threads.

mod gpp38901;
mod legendre;
mod quadrature;

pub use gpp38901::{gpp38901_pattern, gpp38901_unnormalized_db, Gpp38901Pattern};
pub use legendre::assoc_legendre;
pub use quadrature::{
    default_grid, gauss_legendre, quadrature_grid, QuadratureNode, DEFAULT_N_PHI, DEFAULT_N_THETA,
};

use crate::error::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Energy of a pattern integrated over the full sphere: `4π`.
pub const SPHERE_ENERGY: f64 = 4.0 * PI;

/// A (degree, order, linear index) triple with `i = v² + v + h + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicIndex {
    pub degree: u32,
    pub order: i32,
    pub index: usize,
}

impl HarmonicIndex {
    /// Build from degree and order. Panics if `|order| > degree`.
    pub fn new(degree: u32, order: i32) -> Self {
        Self {
            degree,
            order,
            index: index_of(degree, order),
        }
    }

    /// Build from the 1-based linear index.
    pub fn from_index(index: usize) -> Self {
        let (degree, order) = degree_order_of(index);
        Self {
            degree,
            order,
            index,
        }
    }
}

/// Linear index of the `(v, h)` harmonic: `i = v² + v + h + 1`, 1-based.
///
/// Panics if `|h| > v`; the map is a bijection on valid pairs.
pub fn index_of(degree: u32, order: i32) -> usize {
    assert!(
        order.unsigned_abs() <= degree,
        "harmonic order |{order}| exceeds degree {degree}"
    );
    let v = degree as i64;
    (v * v + v + order as i64 + 1) as usize
}

/// Inverse of [`index_of`]: recovers `(v, h)` from the 1-based linear index.
///
/// `v` is the unique degree with `v² ≤ i − 1 ≤ v² + 2v`.
pub fn degree_order_of(index: usize) -> (u32, i32) {
    assert!(index >= 1, "linear harmonic indices start at 1");
    let n = (index - 1) as i64;
    let mut v = (n as f64).sqrt().floor() as i64;
    while (v + 1) * (v + 1) <= n {
        v += 1;
    }
    while v * v > n {
        v -= 1;
    }
    let h = n - v * v - v;
    (v as u32, h as i32)
}

fn normalization_factor(degree: u32, order_abs: u32) -> f64 {
    // (v − |h|)! / (v + |h|)! as a running product to avoid factorial overflow.
    let mut ratio = 1.0;
    let v = degree as u64;
    let h = order_abs as u64;
    for k in (v - h + 1)..=(v + h) {
        ratio /= k as f64;
    }
    ((2.0 * degree as f64 + 1.0) * ratio / (4.0 * PI)).sqrt()
}

/// Complex spherical harmonic `Y_v^h(θ, φ)`.
///
/// Requires `|h| ≤ v` and `θ ∈ [0, π]`.
pub fn sph_harmonic(degree: u32, order: i32, theta: f64, phi: f64) -> Result<Complex64> {
    let order_abs = order.unsigned_abs();
    if order_abs > degree {
        return Err(Error::Domain(format!(
            "harmonic order |{order}| exceeds degree {degree}"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("elevation {theta} outside [0, pi]")));
    }
    let p = assoc_legendre(degree, order_abs, theta.cos())?;
    let sign = if order_abs % 2 == 0 { 1.0 } else { -1.0 };
    let magnitude = sign * normalization_factor(degree, order_abs) * p;
    Ok(Complex64::from_polar(1.0, order as f64 * phi) * magnitude)
}

/// The stacked basis values `η(θ, φ) = [Y_1, …, Y_I]^T` at one direction.
#[derive(Debug, Clone)]
pub struct BasisVector {
    pub values: DVector<Complex64>,
    /// `(θ, φ)` in radians.
    pub direction: (f64, f64),
}

/// Evaluate the first `trunc_len` basis functions at `(θ, φ)`.
pub fn basis_vector(theta: f64, phi: f64, trunc_len: usize) -> Result<BasisVector> {
    if trunc_len == 0 {
        return Err(Error::Domain("truncation length must be >= 1".into()));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("elevation {theta} outside [0, pi]")));
    }
    let x = theta.cos();
    let mut values = DVector::zeros(trunc_len);
    let mut i = 0usize;
    let mut degree = 0u32;
    'outer: loop {
        for order in -(degree as i32)..=(degree as i32) {
            let order_abs = order.unsigned_abs();
            let p = assoc_legendre(degree, order_abs, x)?;
            let sign = if order_abs % 2 == 0 { 1.0 } else { -1.0 };
            let magnitude = sign * normalization_factor(degree, order_abs) * p;
            values[i] = Complex64::from_polar(1.0, order as f64 * phi) * magnitude;
            i += 1;
            if i == trunc_len {
                break 'outer;
            }
        }
        degree += 1;
    }
    Ok(BasisVector {
        values,
        direction: (theta, phi),
    })
}

/// Harmonic coefficient vector `ω` of one surface element.
///
/// The directional gain is `ω^H η(θ, φ)`; after any constrained synthesis or
/// optimization step the energy `‖ω‖²` equals `4π`.
#[derive(Debug, Clone)]
pub struct HarmonicCoefficients {
    pub coeffs: DVector<Complex64>,
    pub element_id: usize,
}

impl HarmonicCoefficients {
    pub fn new(coeffs: DVector<Complex64>, element_id: usize) -> Self {
        Self { coeffs, element_id }
    }

    /// Pure fundamental mode `√(4π)·e_1`: unit gain in every direction.
    pub fn isotropic(trunc_len: usize, element_id: usize) -> Self {
        let mut coeffs = DVector::zeros(trunc_len);
        coeffs[0] = Complex64::new(SPHERE_ENERGY.sqrt(), 0.0);
        Self { coeffs, element_id }
    }

    pub fn trunc_len(&self) -> usize {
        self.coeffs.len()
    }

    /// `‖ω‖²`, which equals the pattern energy over the sphere.
    pub fn energy(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    /// Rescale so the pattern energy equals `4π`. Errors on a zero vector.
    pub fn rescaled_to_sphere(mut self) -> Result<Self> {
        let energy = self.energy();
        if energy <= 0.0 {
            return Err(Error::Degenerate(
                "cannot impose the energy constraint on a zero coefficient vector".into(),
            ));
        }
        self.coeffs *= Complex64::new((SPHERE_ENERGY / energy).sqrt(), 0.0);
        Ok(self)
    }
}

/// Complex directional gain `ω^H η(θ, φ)` of a coefficient vector.
pub fn pattern_gain(omega: &HarmonicCoefficients, theta: f64, phi: f64) -> Result<Complex64> {
    let eta = basis_vector(theta, phi, omega.trunc_len())?;
    pattern_gain_with_basis(omega, &eta)
}

/// Same as [`pattern_gain`] with a precomputed basis vector.
pub fn pattern_gain_with_basis(
    omega: &HarmonicCoefficients,
    eta: &BasisVector,
) -> Result<Complex64> {
    if omega.trunc_len() != eta.values.len() {
        return Err(Error::Dimension(format!(
            "coefficient length {} does not match basis length {}",
            omega.trunc_len(),
            eta.values.len()
        )));
    }
    Ok(omega.coeffs.dotc(&eta.values))
}

/// Result of projecting a sampled pattern onto the truncated basis.
#[derive(Debug, Clone)]
pub struct PatternFit {
    /// Projection coefficients rescaled to satisfy `‖ω‖² = 4π`.
    pub coefficients: HarmonicCoefficients,
    /// Normalized mean square error of the *unscaled* projection,
    /// `∫|p − p̃|² / ∫|p|²` over the quadrature grid.
    pub nmse: f64,
}

/// Project `samples` (one complex gain per grid node) onto the first
/// `trunc_len` harmonics and rescale the result to the sphere energy.
///
/// The expansion coefficient of `Y_i` is the quadrature approximation of
/// `c_i = ∫∫ p Y_i^* sinθ dθ dφ`; the stored vector is `ω = c^*` so that
/// `ω^H η` reproduces the synthesized pattern.
pub fn fit_pattern(
    samples: &[Complex64],
    grid: &[QuadratureNode],
    trunc_len: usize,
) -> Result<PatternFit> {
    if trunc_len == 0 {
        return Err(Error::Domain("truncation length must be >= 1".into()));
    }
    if samples.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "{} samples for {} grid nodes",
            samples.len(),
            grid.len()
        )));
    }
    if grid.len() < trunc_len {
        return Err(Error::Degenerate(format!(
            "grid with {} nodes cannot resolve {} basis functions",
            grid.len(),
            trunc_len
        )));
    }

    let bases: Vec<BasisVector> = grid
        .iter()
        .map(|node| basis_vector(node.theta, node.phi, trunc_len))
        .collect::<Result<_>>()?;

    // c_i += w · p(θ,φ) · Y_i^*(θ,φ), accumulated over the grid.
    let mut expansion = DVector::<Complex64>::zeros(trunc_len);
    for ((node, eta), sample) in grid.iter().zip(&bases).zip(samples) {
        for (c, y) in expansion.iter_mut().zip(eta.values.iter()) {
            *c += node.weight * sample * y.conj();
        }
    }

    let mut residual_energy = 0.0;
    let mut target_energy = 0.0;
    for ((node, eta), sample) in grid.iter().zip(&bases).zip(samples) {
        let synthesized: Complex64 = eta
            .values
            .iter()
            .zip(expansion.iter())
            .map(|(y, c)| c * y)
            .sum();
        residual_energy += node.weight * (sample - synthesized).norm_sqr();
        target_energy += node.weight * sample.norm_sqr();
    }
    if target_energy <= 0.0 {
        return Err(Error::Degenerate("target pattern has zero energy".into()));
    }
    let nmse = residual_energy / target_energy;

    let stored = HarmonicCoefficients::new(expansion.conjugate(), 0);
    Ok(PatternFit {
        coefficients: stored.rescaled_to_sphere()?,
        nmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(trunc_len: usize, seed: u64) -> HarmonicCoefficients {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = DVector::from_fn(trunc_len, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HarmonicCoefficients::new(coeffs, 0)
    }

    #[test]
    fn index_map_matches_enumeration() {
        assert_eq!(index_of(0, 0), 1);
        assert_eq!(index_of(1, -1), 2);
        assert_eq!(index_of(1, 0), 3);
        assert_eq!(index_of(1, 1), 4);
        // Enumerate (v, h) in index order and compare against the inverse map.
        let mut i = 1usize;
        for v in 0u32..=6 {
            for h in -(v as i32)..=(v as i32) {
                assert_eq!(index_of(v, h), i);
                assert_eq!(degree_order_of(i), (v, h));
                i += 1;
            }
        }
        assert_eq!(degree_order_of(9), (2, 2));
    }

    proptest! {
        #[test]
        fn index_map_is_bijective(i in 1usize..=10_000) {
            let (v, h) = degree_order_of(i);
            prop_assert!(h.unsigned_abs() <= v);
            prop_assert_eq!(index_of(v, h), i);
        }
    }

    #[test]
    fn fundamental_mode_is_constant() {
        for &(theta, phi) in &[(0.1, 0.0), (1.0, 2.0), (3.0, -1.5)] {
            let y = sph_harmonic(0, 0, theta, phi).unwrap();
            assert_relative_eq!(y.re, 1.0 / (4.0 * PI).sqrt(), max_relative = 1e-14);
            assert_abs_diff_eq!(y.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn first_zonal_harmonic_vanishes_at_equator() {
        let y = sph_harmonic(1, 0, PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(y.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_order_is_conjugate() {
        for v in 0u32..=6 {
            for h in 0..=(v as i32) {
                let plus = sph_harmonic(v, h, 1.0, 0.7).unwrap();
                let minus = sph_harmonic(v, -h, 1.0, 0.7).unwrap();
                assert_abs_diff_eq!((minus - plus.conj()).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn harmonic_rejects_out_of_range_inputs() {
        assert!(sph_harmonic(1, 2, 0.5, 0.0).is_err());
        assert!(sph_harmonic(1, 0, -0.1, 0.0).is_err());
        assert!(sph_harmonic(1, 0, PI + 0.1, 0.0).is_err());
    }

    #[test]
    fn basis_vector_matches_elementwise_evaluation() {
        let eta = basis_vector(1.2, -0.4, 9).unwrap();
        for i in 1..=9 {
            let (v, h) = degree_order_of(i);
            let y = sph_harmonic(v, h, 1.2, -0.4).unwrap();
            assert_abs_diff_eq!((eta.values[i - 1] - y).norm(), 0.0, epsilon = 1e-14);
        }
        let single = basis_vector(0.3, 0.9, 1).unwrap();
        assert_relative_eq!(
            single.values[0].re,
            1.0 / (4.0 * PI).sqrt(),
            max_relative = 1e-14
        );
        // Entry 3 is Y_1^0, which vanishes at the equator.
        let equator = basis_vector(PI / 2.0, 0.0, 4).unwrap();
        assert_abs_diff_eq!(equator.values[2].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn orthonormality_on_default_grid() {
        let grid = default_grid();
        let n = 25;
        let bases: Vec<BasisVector> = grid
            .iter()
            .map(|node| basis_vector(node.theta, node.phi, n).unwrap())
            .collect();
        let mut max_dev: f64 = 0.0;
        for i in 0..n {
            for s in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (node, eta) in grid.iter().zip(&bases) {
                    acc += node.weight * eta.values[i] * eta.values[s].conj();
                }
                let expected = if i == s { 1.0 } else { 0.0 };
                max_dev = max_dev.max((acc - expected).norm());
            }
        }
        assert!(max_dev < 1e-8, "gram deviation {max_dev}");
    }

    #[test]
    fn quadrature_reproduces_harmonic_norms() {
        let grid = default_grid();
        let norm_sq: f64 = grid
            .iter()
            .map(|node| node.weight * sph_harmonic(2, 1, node.theta, node.phi).unwrap().norm_sqr())
            .sum();
        assert_abs_diff_eq!(norm_sq, 1.0, epsilon = 1e-10);
        let cross: f64 = grid
            .iter()
            .map(|node| {
                node.weight
                    * sph_harmonic(1, 0, node.theta, node.phi).unwrap().re
                    * sph_harmonic(2, 0, node.theta, node.phi).unwrap().re
            })
            .sum();
        assert_abs_diff_eq!(cross, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn pattern_gain_matches_term_by_term_sum() {
        let omega = random_coeffs(16, 7);
        let (theta, phi) = (2.1, 0.35);
        let gain = pattern_gain(&omega, theta, phi).unwrap();
        // Independent summation over individual harmonic evaluations.
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 1..=16 {
            let (v, h) = degree_order_of(i);
            direct += omega.coeffs[i - 1].conj() * sph_harmonic(v, h, theta, phi).unwrap();
        }
        assert_abs_diff_eq!((gain - direct).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn isotropic_pattern_has_unit_gain() {
        let omega = HarmonicCoefficients::isotropic(9, 0);
        for &(theta, phi) in &[(0.2, 0.0), (1.5, 2.5), (2.9, -0.7)] {
            let gain = pattern_gain(&omega, theta, phi).unwrap();
            assert_relative_eq!(gain.re, 1.0, max_relative = 1e-13);
            assert_abs_diff_eq!(gain.im, 0.0, epsilon = 1e-14);
        }
        let zero = HarmonicCoefficients::new(DVector::zeros(9), 0);
        assert_abs_diff_eq!(pattern_gain(&zero, 1.0, 1.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn pattern_gain_rejects_length_mismatch() {
        let omega = HarmonicCoefficients::isotropic(9, 0);
        let eta = basis_vector(1.0, 1.0, 4).unwrap();
        assert!(pattern_gain_with_basis(&omega, &eta).is_err());
    }

    #[test]
    fn parseval_on_random_coefficients() {
        let grid = default_grid();
        let omega = random_coeffs(16, 3);
        let energy: f64 = grid
            .iter()
            .map(|node| {
                node.weight
                    * pattern_gain(&omega, node.theta, node.phi)
                        .unwrap()
                        .norm_sqr()
            })
            .sum();
        assert_relative_eq!(energy, omega.energy(), max_relative = 1e-8);
    }

    #[test]
    fn fit_constant_target_recovers_fundamental_mode() {
        let grid = quadrature_grid(24, 48);
        let samples = vec![Complex64::new(1.0, 0.0); grid.len()];
        let fit = fit_pattern(&samples, &grid, 4).unwrap();
        assert!(fit.nmse < 1e-12, "nmse {}", fit.nmse);
        assert_relative_eq!(
            fit.coefficients.coeffs[0].re,
            SPHERE_ENERGY.sqrt(),
            max_relative = 1e-10
        );
        for i in 1..4 {
            assert_abs_diff_eq!(fit.coefficients.coeffs[i].norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn fit_is_a_projection_on_representable_targets() {
        // A target already inside the span comes back with negligible NMSE.
        let grid = default_grid();
        let samples: Vec<Complex64> = grid
            .iter()
            .map(|node| sph_harmonic(2, 0, node.theta, node.phi).unwrap())
            .collect();
        let fit = fit_pattern(&samples, &grid, 9).unwrap();
        assert!(fit.nmse < 1e-10, "nmse {}", fit.nmse);
        // Energy constraint holds after rescaling.
        assert_relative_eq!(
            fit.coefficients.energy(),
            SPHERE_ENERGY,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fit_rejects_degenerate_grids() {
        let grid = quadrature_grid(2, 2);
        let samples = vec![Complex64::new(1.0, 0.0); grid.len()];
        assert!(fit_pattern(&samples, &grid, 25).is_err());
    }

    proptest! {
        #[test]
        fn rescaling_enforces_sphere_energy(seed in 0u64..256) {
            let omega = random_coeffs(9, seed);
            prop_assume!(omega.energy() > 1e-12);
            let scaled = omega.rescaled_to_sphere().unwrap();
            prop_assert!((scaled.energy() - SPHERE_ENERGY).abs() < 1e-10);
        }
    }
}
