//! Received-power analysis for a point-to-point link reflected by a surface
//! of `M` elements over `L × Z` path pairs.
//!
//! The received power is
//!
//! ```text
//! P = | √(1/LZ) Σ_m ϑ_m Σ_{l,z} g_{m,l,z} f_{m,l,z}
//!       e^{j 2π/λ (k_{r,l} − k_{t,z})·p_m} |² + σ²,
//! ```
//!
//! and the module provides the closed-form optima of the three control
//! mechanisms: the per-element reflection phase (passive beamforming), the
//! element positions (attaining the upper bound only if every path pair can
//! be phase-aligned simultaneously, which a finite grid demonstrates to be
//! generally infeasible), and the per-path pattern phase, which attains the
//! bound `P = (1/LZ)(Σ_{m,l,z} |g f|)² + σ²` exactly.
//!
//! Everything here is a pure function; instances can be evaluated in
//! parallel.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// Geometry and gains of one reflected link.
///
/// Index order is `[element][bs_path, ue_path]` for the `L × Z` matrices and
/// `[element][path]` for the wave-vector lists. Wave vectors are unit
/// directions; positions are in meters.
#[derive(Debug, Clone)]
pub struct LinkGeometry {
    /// Cascaded complex gains `g_{m,l,z}`.
    pub gains: Vec<DMatrix<Complex64>>,
    /// Pattern products `f_{m,l,z}` (receive × transmit directional gain).
    pub patterns: Vec<DMatrix<Complex64>>,
    /// Arrival wave vectors `k_{r,l}` per element.
    pub arrivals: Vec<Vec<Vector3<f64>>>,
    /// Departure wave vectors `k_{t,z}` per element.
    pub departures: Vec<Vec<Vector3<f64>>>,
    /// Element positions `p_m`.
    pub positions: Vec<Vector3<f64>>,
    /// Unit-modulus reflection coefficients `ϑ_m`.
    pub reflection: Vec<Complex64>,
    pub wavelength: f64,
    pub noise_power: f64,
}

/// Which of the four link shapes an instance represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerCase {
    /// `M = L = Z = 1`: power is invariant to every control.
    SingleElementSinglePath,
    /// `M = 1`, multipath.
    SingleElementMultipath,
    /// `L = Z = 1`, many elements.
    MultiElementSinglePath,
    /// The general shape.
    MultiElementMultipath,
}

impl LinkGeometry {
    pub fn num_elements(&self) -> usize {
        self.gains.len()
    }

    pub fn num_bs_paths(&self) -> usize {
        self.gains.first().map_or(0, |g| g.nrows())
    }

    pub fn num_ue_paths(&self) -> usize {
        self.gains.first().map_or(0, |g| g.ncols())
    }

    fn validate(&self) -> Result<()> {
        let m = self.num_elements();
        if m == 0 || self.num_bs_paths() == 0 || self.num_ue_paths() == 0 {
            return Err(Error::Degenerate("empty path list".into()));
        }
        if self.patterns.len() != m
            || self.arrivals.len() != m
            || self.departures.len() != m
            || self.positions.len() != m
            || self.reflection.len() != m
        {
            return Err(Error::Dimension("per-element lists disagree on M".into()));
        }
        let (l, z) = (self.num_bs_paths(), self.num_ue_paths());
        for elem in 0..m {
            if self.gains[elem].shape() != (l, z) || self.patterns[elem].shape() != (l, z) {
                return Err(Error::Dimension("ragged gain/pattern matrices".into()));
            }
            if self.arrivals[elem].len() != l || self.departures[elem].len() != z {
                return Err(Error::Dimension("ragged wave-vector lists".into()));
            }
            for k in self.arrivals[elem].iter().chain(&self.departures[elem]) {
                if (k.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain("wave vectors must have unit norm".into()));
                }
            }
            if (self.reflection[elem].norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(
                    "reflection coefficients must be unit modulus".into(),
                ));
            }
        }
        Ok(())
    }

    /// `e^{j 2π/λ (k_r − k_t)·p}` for one `(element, l, z)` triple at an
    /// arbitrary position.
    fn position_phase(&self, elem: usize, l: usize, z: usize, p: &Vector3<f64>) -> Complex64 {
        let diff = self.arrivals[elem][l] - self.departures[elem][z];
        Complex64::from_polar(1.0, TAU / self.wavelength * diff.dot(p))
    }

    /// One fully-phased term `g f e^{jφ(p_m)}`.
    #[cfg(test)]
    fn term(&self, elem: usize, l: usize, z: usize) -> Complex64 {
        self.gains[elem][(l, z)]
            * self.patterns[elem][(l, z)]
            * self.position_phase(elem, l, z, &self.positions[elem])
    }

    /// Multipath sum of one element at a given position (reflection excluded).
    fn element_sum_at(&self, elem: usize, p: &Vector3<f64>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..self.num_bs_paths() {
            for z in 0..self.num_ue_paths() {
                acc += self.gains[elem][(l, z)]
                    * self.patterns[elem][(l, z)]
                    * self.position_phase(elem, l, z, p);
            }
        }
        acc
    }

    fn element_sum(&self, elem: usize) -> Complex64 {
        self.element_sum_at(elem, &self.positions[elem])
    }

    fn normalizer(&self) -> f64 {
        1.0 / (self.num_bs_paths() as f64 * self.num_ue_paths() as f64)
    }

    /// Σ over every `(m, l, z)` of `|g f|`.
    fn magnitude_sum(&self) -> f64 {
        let mut total = 0.0;
        for elem in 0..self.num_elements() {
            for l in 0..self.num_bs_paths() {
                for z in 0..self.num_ue_paths() {
                    total += (self.gains[elem][(l, z)] * self.patterns[elem][(l, z)]).norm();
                }
            }
        }
        total
    }

    /// Copy with new reflection phases `ϑ_m = e^{jφ_m}`.
    pub fn with_reflection_phases(&self, phases: &[f64]) -> Self {
        let mut link = self.clone();
        link.reflection = phases
            .iter()
            .map(|&phi| Complex64::from_polar(1.0, phi))
            .collect();
        link
    }

    /// Copy with pattern phases replaced per `(m, l, z)`, magnitudes kept.
    pub fn with_pattern_phases(&self, phases: &[DMatrix<f64>]) -> Self {
        let mut link = self.clone();
        for (pattern, phase) in link.patterns.iter_mut().zip(phases) {
            for l in 0..phase.nrows() {
                for z in 0..phase.ncols() {
                    let magnitude = pattern[(l, z)].norm();
                    pattern[(l, z)] = Complex64::from_polar(magnitude, phase[(l, z)]);
                }
            }
        }
        link
    }
}

/// Received power of the link in the stated case shape.
pub fn received_power(link: &LinkGeometry, case: PowerCase) -> Result<f64> {
    link.validate()?;
    let (m, l, z) = (
        link.num_elements(),
        link.num_bs_paths(),
        link.num_ue_paths(),
    );
    let shape_ok = match case {
        PowerCase::SingleElementSinglePath => m == 1 && l == 1 && z == 1,
        PowerCase::SingleElementMultipath => m == 1,
        PowerCase::MultiElementSinglePath => l == 1 && z == 1,
        PowerCase::MultiElementMultipath => true,
    };
    if !shape_ok {
        return Err(Error::Dimension(format!(
            "link of shape M={m}, L={l}, Z={z} does not match {case:?}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for elem in 0..m {
        acc += link.reflection[elem] * link.element_sum(elem);
    }
    Ok(link.normalizer() * acc.norm_sqr() + link.noise_power)
}

/// Optimal passive beamforming: per-element phase and resulting power.
#[derive(Debug, Clone)]
pub struct ReflectionDesign {
    /// `φ_m = −∠(Σ_{l,z} g f e^{jφ_pos})`, zero where the sum vanishes.
    pub phases: Vec<f64>,
    pub power: f64,
    /// True if some element had a vanishing multipath sum.
    pub degenerate: bool,
}

/// Align every element's reflection phase against its multipath sum:
/// the achieved power is `(1/LZ)(Σ_m |Σ_{l,z} g f e^{jφ}|)² + σ²`.
pub fn optimal_reflection_phase(link: &LinkGeometry) -> Result<ReflectionDesign> {
    link.validate()?;
    let mut phases = Vec::with_capacity(link.num_elements());
    let mut magnitude_total = 0.0;
    let mut degenerate = false;
    for elem in 0..link.num_elements() {
        let sum = link.element_sum(elem);
        if sum.norm() <= f64::MIN_POSITIVE {
            degenerate = true;
            phases.push(0.0);
        } else {
            phases.push(-sum.arg());
        }
        magnitude_total += sum.norm();
    }
    Ok(ReflectionDesign {
        phases,
        power: link.normalizer() * magnitude_total * magnitude_total + link.noise_power,
        degenerate,
    })
}

/// The pattern-reconfigurability optimum.
#[derive(Debug, Clone)]
pub struct PatternBound {
    /// `(1/LZ)(Σ_{m,l,z} |g f|)² + σ²`.
    pub power: f64,
    /// Achieving per-path pattern phases
    /// `∠f = −∠(ϑ_m g e^{jφ_pos})`, one `L × Z` matrix per element.
    pub phases: Vec<DMatrix<f64>>,
}

/// Upper bound on the received power over all pattern phase assignments,
/// together with phases that attain it under the current reflection and
/// positions.
pub fn pattern_upper_bound(link: &LinkGeometry) -> Result<PatternBound> {
    link.validate()?;
    let total = link.magnitude_sum();
    let (l, z) = (link.num_bs_paths(), link.num_ue_paths());
    let mut phases = Vec::with_capacity(link.num_elements());
    for elem in 0..link.num_elements() {
        let mut matrix = DMatrix::zeros(l, z);
        for row in 0..l {
            for col in 0..z {
                let rest = link.reflection[elem]
                    * link.gains[elem][(row, col)]
                    * link.position_phase(elem, row, col, &link.positions[elem]);
                matrix[(row, col)] = -rest.arg();
            }
        }
        phases.push(matrix);
    }
    Ok(PatternBound {
        power: link.normalizer() * total * total + link.noise_power,
        phases,
    })
}

/// Outcome of a finite position search against the analytic bound.
#[derive(Debug, Clone)]
pub struct PositionSearch {
    /// The position-reconfigurability upper bound (same value as the pattern
    /// bound).
    pub bound: f64,
    /// Best power over the candidate grid.
    pub best_grid_power: f64,
    /// `bound − best_grid_power ≥ 0`.
    pub gap: f64,
    /// Chosen position per element.
    pub positions: Vec<Vector3<f64>>,
}

/// Search each element's position over `grid`, maximizing its multipath-sum
/// magnitude (exact for `M = 1`; coordinate-wise for larger surfaces), then
/// report the achieved power against the bound.
pub fn position_bound_feasibility(
    link: &LinkGeometry,
    grid: &[Vector3<f64>],
) -> Result<PositionSearch> {
    link.validate()?;
    if grid.is_empty() {
        return Err(Error::Degenerate("empty position grid".into()));
    }
    let total = link.magnitude_sum();
    let bound = link.normalizer() * total * total + link.noise_power;

    let mut best_positions = Vec::with_capacity(link.num_elements());
    for elem in 0..link.num_elements() {
        let best = grid
            .iter()
            .max_by(|a, b| {
                link.element_sum_at(elem, a)
                    .norm()
                    .total_cmp(&link.element_sum_at(elem, b).norm())
            })
            .expect("grid is nonempty");
        best_positions.push(*best);
    }
    let mut moved = link.clone();
    moved.positions = best_positions.clone();
    let best_grid_power = received_power(&moved, PowerCase::MultiElementMultipath)?;
    Ok(PositionSearch {
        bound,
        best_grid_power,
        gap: bound - best_grid_power,
        positions: best_positions,
    })
}

/// Single-path many-element optimum: aligning the reflection phases attains
/// `(Σ_m |g_m f_m|)² + σ²` exactly.
pub fn case3_attainment(link: &LinkGeometry) -> Result<ReflectionDesign> {
    link.validate()?;
    if link.num_bs_paths() != 1 || link.num_ue_paths() != 1 {
        return Err(Error::Dimension(
            "single-path attainment needs L = Z = 1".into(),
        ));
    }
    optimal_reflection_phase(link)
}

/// Uniformly random instance: CN(0,1) gains, random-phase patterns with
/// magnitudes in `[0.5, 1.5]`, random unit wave vectors shared across
/// elements, positions inside a 4λ box, random reflection phases.
/// Deterministic per seed.
pub fn random_link(
    num_elements: usize,
    num_bs_paths: usize,
    num_ue_paths: usize,
    noise_power: f64,
    seed: u64,
) -> LinkGeometry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wavelength = 1.0;
    let unit = |rng: &mut ChaCha8Rng| -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let n = v.norm();
            if n > 1e-6 {
                return v / n;
            }
        }
    };
    let arrivals_shared: Vec<Vector3<f64>> = (0..num_bs_paths).map(|_| unit(&mut rng)).collect();
    let departures_shared: Vec<Vector3<f64>> = (0..num_ue_paths).map(|_| unit(&mut rng)).collect();

    let mut gains = Vec::new();
    let mut patterns = Vec::new();
    let mut positions = Vec::new();
    let mut reflection = Vec::new();
    for _ in 0..num_elements {
        gains.push(DMatrix::from_fn(num_bs_paths, num_ue_paths, |_, _| {
            Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) / 2f64.sqrt()
        }));
        patterns.push(DMatrix::from_fn(num_bs_paths, num_ue_paths, |_, _| {
            Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..TAU))
        }));
        positions.push(Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ));
        reflection.push(Complex64::from_polar(1.0, rng.random_range(0.0..TAU)));
    }
    LinkGeometry {
        gains,
        patterns,
        arrivals: vec![arrivals_shared; num_elements],
        departures: vec![departures_shared; num_elements],
        positions,
        reflection,
        wavelength,
        noise_power,
    }
}

/// A 1-D grid of candidate positions along `axis`, `count` points spaced by
/// `step_wavelengths · λ`, centered at the origin.
pub fn line_grid(
    axis: Vector3<f64>,
    step_wavelengths: f64,
    count: usize,
    wavelength: f64,
) -> Vec<Vector3<f64>> {
    let direction = axis / axis.norm();
    (0..count)
        .map(|i| direction * ((i as f64 - count as f64 / 2.0) * step_wavelengths * wavelength))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn single_term_unit_power() {
        let mut link = random_link(1, 1, 1, 0.0, 1);
        link.gains[0][(0, 0)] = Complex64::new(1.0, 0.0);
        link.patterns[0][(0, 0)] = Complex64::new(0.0, 1.0);
        let p = received_power(&link, PowerCase::SingleElementSinglePath).unwrap();
        assert_relative_eq!(p, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_path_power_is_invariant_to_all_controls() {
        let link = random_link(1, 1, 1, 0.05, 3);
        let base = received_power(&link, PowerCase::SingleElementSinglePath).unwrap();
        for phase in [0.3, 1.2, -2.0] {
            let rotated = link.with_reflection_phases(&[phase]);
            let p = received_power(&rotated, PowerCase::SingleElementSinglePath).unwrap();
            assert_abs_diff_eq!(p, base, epsilon = 1e-12 * base);
        }
        for shift in [0.0, 0.25, 1.7] {
            let mut moved = link.clone();
            moved.positions[0] += Vector3::new(shift, -shift, 0.5 * shift);
            let p = received_power(&moved, PowerCase::SingleElementSinglePath).unwrap();
            assert_abs_diff_eq!(p, base, epsilon = 1e-12 * base);
        }
        let repatterned = link.with_pattern_phases(&[DMatrix::from_element(1, 1, 0.987)]);
        let p = received_power(&repatterned, PowerCase::SingleElementSinglePath).unwrap();
        assert_abs_diff_eq!(p, base, epsilon = 1e-12 * base);
    }

    #[test]
    fn received_power_matches_direct_summation() {
        // Independent evaluation of the triple sum, term by term.
        let link = random_link(2, 3, 2, 0.01, 5);
        let p = received_power(&link, PowerCase::MultiElementMultipath).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..2 {
            let mut inner = Complex64::new(0.0, 0.0);
            for l in 0..3 {
                for z in 0..2 {
                    inner += link.term(m, l, z);
                }
            }
            acc += link.reflection[m] * inner;
        }
        let expected = acc.norm_sqr() / 6.0 + 0.01;
        assert_relative_eq!(p, expected, max_relative = 1e-13);
    }

    #[test]
    fn case_shapes_are_enforced() {
        let link = random_link(2, 2, 2, 0.0, 7);
        assert!(received_power(&link, PowerCase::SingleElementMultipath).is_err());
        assert!(received_power(&link, PowerCase::MultiElementSinglePath).is_err());
        assert!(received_power(&link, PowerCase::MultiElementMultipath).is_ok());
        let empty = LinkGeometry {
            gains: vec![],
            patterns: vec![],
            arrivals: vec![],
            departures: vec![],
            positions: vec![],
            reflection: vec![],
            wavelength: 1.0,
            noise_power: 0.0,
        };
        assert!(received_power(&empty, PowerCase::MultiElementMultipath).is_err());
    }

    #[test]
    fn reflection_alignment_beats_random_search() {
        let link = random_link(3, 2, 2, 0.0, 11);
        let design = optimal_reflection_phase(&link).unwrap();
        assert!(!design.degenerate);
        // Plugging the phases back reproduces the claimed power.
        let aligned = link.with_reflection_phases(&design.phases);
        let achieved = received_power(&aligned, PowerCase::MultiElementMultipath).unwrap();
        assert_relative_eq!(achieved, design.power, max_relative = 1e-12);
        // 10⁴ random phase draws never exceed it.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10_000 {
            let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
            let p = received_power(
                &link.with_reflection_phases(&phases),
                PowerCase::MultiElementMultipath,
            )
            .unwrap();
            assert!(p <= design.power * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pattern_bound_is_attained_by_its_phases() {
        for seed in 0..50u64 {
            let link = random_link(2, 2, 2, 0.001, seed);
            let bound = pattern_upper_bound(&link).unwrap();
            let aligned = link.with_pattern_phases(&bound.phases);
            let achieved = received_power(&aligned, PowerCase::MultiElementMultipath).unwrap();
            assert_relative_eq!(achieved, bound.power, max_relative = 1e-12);
            // And it dominates the passive-beamforming optimum.
            let passive = optimal_reflection_phase(&link).unwrap();
            assert!(bound.power >= passive.power - 1e-12 * bound.power);
        }
    }

    #[test]
    fn already_aligned_terms_meet_the_bound() {
        let mut link = random_link(1, 2, 2, 0.0, 13);
        // Make every term real positive and the reflection neutral.
        link.reflection[0] = Complex64::new(1.0, 0.0);
        for l in 0..2 {
            for z in 0..2 {
                let phase =
                    link.position_phase(0, l, z, &link.positions[0]) * link.gains[0][(l, z)];
                let magnitude = link.patterns[0][(l, z)].norm();
                link.patterns[0][(l, z)] = Complex64::from_polar(magnitude, -phase.arg());
            }
        }
        let p = received_power(&link, PowerCase::SingleElementMultipath).unwrap();
        let bound = pattern_upper_bound(&link).unwrap();
        assert_relative_eq!(p, bound.power, max_relative = 1e-12);
    }

    #[test]
    fn position_grid_stays_below_the_bound() {
        let link = random_link(1, 2, 1, 0.0, 17);
        let grid = line_grid(
            Vector3::new(1.0, 0.0, 0.0),
            1.0 / 64.0,
            512,
            link.wavelength,
        );
        let search = position_bound_feasibility(&link, &grid).unwrap();
        assert!(search.best_grid_power <= search.bound * (1.0 + 1e-12));
        assert!(search.gap >= -1e-12);
        // Formula check on the bound itself.
        let expected = link.magnitude_sum().powi(2) / 2.0;
        assert_relative_eq!(search.bound, expected, max_relative = 1e-12);
        assert!(position_bound_feasibility(&link, &[]).is_err());
    }

    #[test]
    fn single_path_position_search_attains_the_bound() {
        let link = random_link(1, 1, 1, 0.02, 19);
        let grid = line_grid(
            Vector3::new(0.3, 0.7, -0.2),
            1.0 / 32.0,
            64,
            link.wavelength,
        );
        let search = position_bound_feasibility(&link, &grid).unwrap();
        assert_abs_diff_eq!(search.gap, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_path_attainment_closed_form() {
        for seed in 0..20u64 {
            let link = random_link(4, 1, 1, 0.05, seed);
            let design = case3_attainment(&link).unwrap();
            let expected: f64 = (0..4)
                .map(|m| (link.gains[m][(0, 0)] * link.patterns[m][(0, 0)]).norm())
                .sum();
            assert_relative_eq!(
                design.power,
                expected * expected + 0.05,
                max_relative = 1e-12
            );
            let aligned = link.with_reflection_phases(&design.phases);
            let achieved = received_power(&aligned, PowerCase::MultiElementSinglePath).unwrap();
            assert_relative_eq!(achieved, design.power, max_relative = 1e-12);
        }
        // Coherent combining of M unit terms gives M².
        let mut link = random_link(4, 1, 1, 0.0, 31);
        for m in 0..4 {
            link.gains[m][(0, 0)] = Complex64::new(1.0, 0.0);
            link.patterns[m][(0, 0)] = Complex64::from_polar(1.0, 0.4 * m as f64);
        }
        let design = case3_attainment(&link).unwrap();
        assert_relative_eq!(design.power, 16.0, max_relative = 1e-12);
        // Wrong shape is rejected.
        assert!(case3_attainment(&random_link(2, 2, 1, 0.0, 1)).is_err());
    }

    #[test]
    fn ordering_chain_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for seed in 0..100u64 {
            let m = if seed % 2 == 0 { 1 } else { 3 };
            let link = random_link(m, 2, 2, 0.01, seed);
            let random_phases: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..TAU)).collect();
            let random_power = received_power(
                &link.with_reflection_phases(&random_phases),
                PowerCase::MultiElementMultipath,
            )
            .unwrap();
            let passive = optimal_reflection_phase(&link).unwrap();
            let bound = pattern_upper_bound(&link).unwrap();
            assert!(random_power <= passive.power * (1.0 + 1e-12));
            assert!(passive.power <= bound.power * (1.0 + 1e-12));
        }
    }
}
