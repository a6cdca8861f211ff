//! Alternating co-design of beams and patterns, plus the benchmark schemes.
//!
//! [`alternating_optimize`] loops { MMSE auxiliaries → dual-bisection
//! beamforming → conjugate-gradient pattern ascent } until the weighted
//! sum rate stalls. Both halves are ascent steps on the true objective, so
//! the recorded rate trace is nondecreasing (within solver slack).
//!
//! Benchmarks: [`zf_beamformers`] (zero-forcing directions with exact
//! weighted water-filling), [`zf_codesign`] (alternating ZF and pattern
//! ascent; its trace is *not* guaranteed monotone since the ZF step is a
//! projection, not an ascent), and [`passive_beamforming_baseline`]
//! (a fixed real per-element pattern with unit-modulus reflection phases
//! optimized by the same conjugate-gradient machinery on the circle
//! manifold).

use crate::beamforming::{
    build_quadratic, dual_bisection, mmse_update, weighted_sum_rate, BeamformerSet, UserChannels,
};
use crate::channel::{
    effective_channels, path_loss_amplitude, steering_bs, steering_ris, AssembledChannel,
    ChannelRealization, EffectiveChannels,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::manifold::{self, Blocks, RcgOptions};
use crate::pattern::{self, PatternBank};
use crate::sph::gpp38901_pattern;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;

/// Fixed per-element pattern of the conventional-surface baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPattern {
    /// Unit gain in every direction.
    Isotropic,
    /// The 3GPP TR 38.901 element pattern, energy-normalized.
    Gpp38901,
}

impl FixedPattern {
    pub fn amplitude(&self, theta: f64, phi: f64) -> f64 {
        match self {
            FixedPattern::Isotropic => 1.0,
            FixedPattern::Gpp38901 => gpp38901_pattern(theta, phi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FixedPattern::Isotropic => "isotropic",
            FixedPattern::Gpp38901 => "38901",
        }
    }
}

/// Surface configuration a solve converged to.
#[derive(Debug, Clone)]
pub enum SurfaceState {
    /// Harmonic coefficient bank of the pattern-reconfigurable surface.
    Patterns(PatternBank),
    /// Fixed-pattern surface with optimized unit-modulus reflection phases.
    Phases {
        pattern: FixedPattern,
        coefficients: Vec<Complex64>,
    },
}

impl SurfaceState {
    pub fn pattern_bank(&self) -> Option<&PatternBank> {
        match self {
            SurfaceState::Patterns(bank) => Some(bank),
            SurfaceState::Phases { .. } => None,
        }
    }
}

/// Outcome of an alternating solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub beams: BeamformerSet,
    pub surface: SurfaceState,
    /// Weighted sum rate after initialization and after each outer
    /// iteration; nondecreasing within 1e-9 for the ascent solvers.
    pub rate_trace: Vec<f64>,
    pub converged: bool,
    /// Number of outer iterations executed.
    pub iterations: usize,
}

impl SolveResult {
    pub fn final_rate(&self) -> f64 {
        *self
            .rate_trace
            .last()
            .expect("trace holds the initial rate")
    }
}

/// Matched-filter beams with the budget split evenly across UEs.
fn mrt_beams(users: &UserChannels, total_power: f64) -> Vec<DVector<Complex64>> {
    let k = users.num_ues();
    let per_ue = (total_power / k as f64).sqrt();
    users
        .composite
        .iter()
        .map(|c| {
            let norm = c.norm();
            if norm <= f64::MIN_POSITIVE {
                DVector::zeros(c.len())
            } else {
                c * Complex64::new(per_ue / norm, 0.0)
            }
        })
        .collect()
}

/// One MMSE beamforming block update at fixed channels.
fn beamforming_step(
    users: &UserChannels,
    beams: &[DVector<Complex64>],
    config: &ScenarioConfig,
    noise: &[f64],
) -> Result<BeamformerSet> {
    let aux = mmse_update(users, beams, noise);
    let model = build_quadratic(users, &aux, &config.ue_weights, noise);
    let solution = dual_bisection(&model, config.power_budget_w, config.tolerances.bisection)?;
    Ok(solution.beams)
}

/// Alternating co-design of beams and harmonic patterns.
///
/// `seed` controls the perturbed-isotropic starting bank; beams start at the
/// matched filter. Stops when the rate gap between consecutive outer
/// iterations falls below the configured tolerance or the outer budget runs
/// out. In the interference-limited regime of the default noise floor the
/// per-round gains decay roughly like `1/t`, so tight gap tolerances may
/// need far more rounds than the default budget; the trace stays
/// nondecreasing either way.
pub fn alternating_optimize(
    assembled: &AssembledChannel,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<SolveResult> {
    let bank = PatternBank::perturbed_isotropic(
        assembled.num_elements,
        assembled.trunc_len,
        config.tolerances.init_perturbation,
        seed,
    );
    let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
    let beams = mrt_beams(&users, config.power_budget_w);
    alternating_optimize_from(assembled, config, bank, beams)
}

/// [`alternating_optimize`] continued from an explicit starting state.
pub fn alternating_optimize_from(
    assembled: &AssembledChannel,
    config: &ScenarioConfig,
    bank0: PatternBank,
    beams0: Vec<DVector<Complex64>>,
) -> Result<SolveResult> {
    let noise = config.noise_vector();
    let tol = &config.tolerances;
    let mut bank = bank0;
    let mut beams = beams0;
    let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
    let mut rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
    let mut trace = vec![rate];
    let mut converged = false;
    let mut iterations = 0;

    let rcg_opts = RcgOptions {
        block_norm_sq: crate::sph::SPHERE_ENERGY,
        tol: tol.rcg,
        max_iters: tol.rcg_max_iters,
        armijo_c1: tol.armijo_c1,
        armijo_contraction: tol.armijo_contraction,
        armijo_max_backtracks: tol.armijo_max_backtracks,
    };

    for _ in 0..tol.max_outer {
        iterations += 1;
        let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
        beams = beamforming_step(&users, &beams, config, &noise)?.vectors;
        let (next_bank, _) = pattern::rcg_optimize_with(
            bank,
            assembled,
            &beams,
            &config.ue_weights,
            &noise,
            &rcg_opts,
        )?;
        bank = next_bank;

        let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
        let next_rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
        trace.push(next_rate);
        let gap = (next_rate - rate).abs();
        rate = next_rate;
        if gap <= tol.outer {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        beams: BeamformerSet::from_vectors(beams),
        surface: SurfaceState::Patterns(bank),
        rate_trace: trace,
        converged,
        iterations,
    })
}

/// Exact weighted water-filling: maximize `Σ ε_k log2(1 + P_k γ_k)` under
/// `Σ P_k = p_total` by closed-form water levels over shrinking active sets.
pub fn weighted_waterfill(gains: &[f64], weights: &[f64], p_total: f64) -> Vec<f64> {
    let n = gains.len();
    let mut active: Vec<bool> = gains
        .iter()
        .zip(weights)
        .map(|(&g, &w)| g > 0.0 && w > 0.0)
        .collect();
    let mut powers = vec![0.0; n];
    loop {
        let count = active.iter().filter(|&&a| a).count();
        if count == 0 {
            return powers;
        }
        let weight_sum: f64 = (0..n).filter(|&k| active[k]).map(|k| weights[k]).sum();
        let inverse_sum: f64 = (0..n).filter(|&k| active[k]).map(|k| 1.0 / gains[k]).sum();
        // KKT: P_k = ε_k/(μ ln2) − 1/γ_k with μ set by the budget.
        let mu_ln2 = weight_sum / (p_total + inverse_sum);
        let mut any_negative = false;
        for k in 0..n {
            if active[k] {
                let p = weights[k] / mu_ln2 - 1.0 / gains[k];
                if p < 0.0 {
                    active[k] = false;
                    powers[k] = 0.0;
                    any_negative = true;
                } else {
                    powers[k] = p;
                }
            }
        }
        if !any_negative {
            return powers;
        }
    }
}

/// Zero-forcing beams: pseudo-inverse directions with exact weighted
/// water-filling across the decoupled streams.
///
/// Fails with [`Error::RankDeficient`] when the stacked channel matrix does
/// not have full row rank (callers typically resample).
pub fn zf_beamformers(
    channels: &UserChannels,
    p_total: f64,
    weights: &[f64],
    noise: &[f64],
) -> Result<BeamformerSet> {
    let k = channels.num_ues();
    let n_t = channels.num_antennas();
    if k > n_t {
        return Err(Error::RankDeficient(format!(
            "cannot zero-force {k} UEs with {n_t} antennas"
        )));
    }
    // X has rows c_k^H; directions are the columns of X^H (X X^H)^{-1}.
    let mut x = DMatrix::<Complex64>::zeros(k, n_t);
    for (row, c) in channels.composite.iter().enumerate() {
        for col in 0..n_t {
            x[(row, col)] = c[col].conj();
        }
    }
    let gram = &x * x.adjoint();
    let inverse = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| Error::RankDeficient("stacked channel matrix is singular".into()))?
        .inverse();
    let directions = x.adjoint() * inverse;

    // After normalizing column k, UE k sees amplitude 1/‖col_k‖ and zero
    // interference, so its effective SNR slope is γ_k = 1/(‖col_k‖² σ_k²).
    let mut unit_columns = Vec::with_capacity(k);
    let mut slopes = Vec::with_capacity(k);
    for col in 0..k {
        let column = directions.column(col).clone_owned();
        let norm = column.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(Error::RankDeficient(
                "zero-forcing direction collapsed".into(),
            ));
        }
        unit_columns.push(column / Complex64::new(norm, 0.0));
        slopes.push(1.0 / (norm * norm * noise[col]));
    }
    let powers = weighted_waterfill(&slopes, weights, p_total);
    let vectors = unit_columns
        .into_iter()
        .zip(&powers)
        .map(|(dir, &p)| dir * Complex64::new(p.sqrt(), 0.0))
        .collect();
    Ok(BeamformerSet::from_vectors(vectors))
}

/// Outcome of the ZF co-design; the raw trace may oscillate since the ZF
/// step does not ascend the sum rate.
#[derive(Debug, Clone)]
pub struct ZfCodesignResult {
    pub beams: BeamformerSet,
    pub bank: PatternBank,
    pub rate_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Alternate { ZF + water-filling → pattern ascent } until the rate settles.
pub fn zf_codesign(
    assembled: &AssembledChannel,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<ZfCodesignResult> {
    let noise = config.noise_vector();
    let tol = &config.tolerances;
    let mut bank = PatternBank::perturbed_isotropic(
        assembled.num_elements,
        assembled.trunc_len,
        tol.init_perturbation,
        seed,
    );
    let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
    let mut beams =
        zf_beamformers(&users, config.power_budget_w, &config.ue_weights, &noise)?.vectors;
    let mut rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
    let mut trace = vec![rate];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..tol.max_outer {
        iterations += 1;
        let (next_bank, _) = pattern::rcg_optimize(
            bank,
            assembled,
            &beams,
            &config.ue_weights,
            &noise,
            tol.rcg,
            tol.rcg_max_iters,
        )?;
        bank = next_bank;
        let users = UserChannels::from_effective(&effective_channels(&bank, assembled)?);
        beams = zf_beamformers(&users, config.power_budget_w, &config.ue_weights, &noise)?.vectors;
        let next_rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
        trace.push(next_rate);
        let gap = (next_rate - rate).abs();
        rate = next_rate;
        if gap <= tol.outer {
            converged = true;
            break;
        }
    }

    Ok(ZfCodesignResult {
        beams: BeamformerSet::from_vectors(beams),
        bank,
        rate_trace: trace,
        converged,
        iterations,
    })
}

/// Direct fixed-pattern channels of a conventional surface (no reflection
/// phases applied yet): `H[m, :]` and `h_k[m]` carry the real pattern
/// amplitude evaluated at each path's surface angle.
pub fn fixed_pattern_channels(
    realization: &ChannelRealization,
    pattern: FixedPattern,
) -> Result<EffectiveChannels> {
    let geo = &realization.geometry;
    let m = geo.num_elements();
    let mut h_br = DMatrix::<Complex64>::zeros(m, geo.n_t);
    let gamma = realization.bs_normalizer();
    for path in &realization.bs_ris_paths {
        let rho = path_loss_amplitude(
            path.distance,
            realization.reference_gain,
            realization.path_loss_exponent,
        )?;
        let amp = pattern.amplitude(path.ris_angle.theta, path.ris_angle.phi);
        let coef = path.gain * (gamma * rho * amp);
        let a_r = steering_ris(path.ris_angle.theta, path.ris_angle.phi, geo.m_y, geo.m_z);
        let bs = path
            .bs_angle
            .ok_or_else(|| Error::Degenerate("BS-side path without a BS angle".into()))?;
        let a_b = steering_bs(bs.theta, bs.phi, geo.n_t);
        for row in 0..m {
            for col in 0..geo.n_t {
                h_br[(row, col)] += coef * a_r[row] * a_b[col].conj();
            }
        }
    }
    let mut h_ru = Vec::with_capacity(realization.num_ues());
    for (ue, paths) in realization.ris_ue_paths.iter().enumerate() {
        let gamma = realization.ue_normalizer(ue);
        let mut h_k = DVector::<Complex64>::zeros(m);
        for path in paths {
            let rho = path_loss_amplitude(
                path.distance,
                realization.reference_gain,
                realization.path_loss_exponent,
            )?;
            let amp = pattern.amplitude(path.ris_angle.theta, path.ris_angle.phi);
            let coef = path.gain * (gamma * rho * amp);
            let a_r = steering_ris(path.ris_angle.theta, path.ris_angle.phi, geo.m_y, geo.m_z);
            h_k.axpy(coef, &a_r, Complex64::new(1.0, 0.0));
        }
        h_ru.push(h_k);
    }
    Ok(EffectiveChannels { h_br, h_ru })
}

/// Composite channels `c_k = H^H Θ^H h_k` of a phase-controlled surface.
fn composite_with_phases(channels: &EffectiveChannels, phases: &[Complex64]) -> UserChannels {
    let composite = channels
        .h_ru
        .iter()
        .map(|h_k| {
            let shaded = DVector::from_fn(h_k.len(), |m, _| h_k[m] * phases[m].conj());
            channels.h_br.adjoint() * shaded
        })
        .collect();
    UserChannels { composite }
}

/// Euclidean gradient of the weighted sum rate in the reflection phases,
/// under the same ascent convention as the pattern gradient.
fn phase_euclidean_grad(
    channels: &EffectiveChannels,
    phases: &[Complex64],
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
) -> Blocks {
    let m = phases.len();
    let k_total = beams.len();
    // H w_j once per beam.
    let projected: Vec<DVector<Complex64>> = beams.iter().map(|w| &channels.h_br * w).collect();
    let mut grad = vec![Complex64::new(0.0, 0.0); m];
    for (k, h_k) in channels.h_ru.iter().enumerate() {
        // s_j = Σ_m conj(h_k[m]) ϑ_m (H w_j)[m]
        let mut s = vec![Complex64::new(0.0, 0.0); k_total];
        for (j, hw) in projected.iter().enumerate() {
            for elem in 0..m {
                s[j] += h_k[elem].conj() * phases[elem] * hw[elem];
            }
        }
        let total: f64 = s.iter().map(|x| x.norm_sqr()).sum::<f64>() + noise[k];
        let interference = total - s[k].norm_sqr();
        let scale = 2.0 * weights[k] / LN_2;
        for elem in 0..m {
            let mut signal_term = Complex64::new(0.0, 0.0);
            let mut interf_term = Complex64::new(0.0, 0.0);
            for (j, hw) in projected.iter().enumerate() {
                let v = h_k[elem].conj() * hw[elem];
                let contribution = v.conj() * s[j];
                signal_term += contribution;
                if j != k {
                    interf_term += contribution;
                }
            }
            grad[elem] += scale * (signal_term / total - interf_term / interference);
        }
    }
    grad.into_iter()
        .map(|g| DVector::from_vec(vec![g]))
        .collect()
}

/// Conventional-surface baseline: a fixed real pattern per element, with the
/// unit-modulus reflection phases and the beams optimized alternately. The
/// outer loop is structurally the same ascent as [`alternating_optimize`],
/// with phases on the circle manifold in place of the coefficient bank.
pub fn passive_beamforming_baseline(
    realization: &ChannelRealization,
    fixed_pattern: FixedPattern,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<SolveResult> {
    let channels = fixed_pattern_channels(realization, fixed_pattern)?;
    let m = realization.geometry.num_elements();
    let noise = config.noise_vector();
    let tol = &config.tolerances;

    // All-ones phases plus a seeded perturbation, renormalized to the circle.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed_2701_c3a5_9f0b);
    let mut phases: Vec<Complex64> = (0..m)
        .map(|_| {
            let p = Complex64::new(1.0, 0.0)
                + Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    * tol.init_perturbation;
            p / p.norm()
        })
        .collect();

    let users = composite_with_phases(&channels, &phases);
    let mut beams = mrt_beams(&users, config.power_budget_w);
    let mut rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
    let mut trace = vec![rate];
    let mut converged = false;
    let mut iterations = 0;

    let rcg_opts = RcgOptions {
        block_norm_sq: 1.0,
        tol: tol.rcg,
        max_iters: tol.rcg_max_iters,
        armijo_c1: tol.armijo_c1,
        armijo_contraction: tol.armijo_contraction,
        armijo_max_backtracks: tol.armijo_max_backtracks,
    };

    for _ in 0..tol.max_outer {
        iterations += 1;
        let users = composite_with_phases(&channels, &phases);
        beams = beamforming_step(&users, &beams, config, &noise)?.vectors;

        let blocks: Blocks = phases.iter().map(|p| DVector::from_vec(vec![*p])).collect();
        let outcome = manifold::rcg_maximize(
            blocks,
            &rcg_opts,
            |blocks| {
                let candidate: Vec<Complex64> = blocks.iter().map(|b| b[0]).collect();
                let users = composite_with_phases(&channels, &candidate);
                weighted_sum_rate(&users, &beams, &config.ue_weights, &noise)
            },
            |blocks| {
                let candidate: Vec<Complex64> = blocks.iter().map(|b| b[0]).collect();
                phase_euclidean_grad(&channels, &candidate, &beams, &config.ue_weights, &noise)
            },
        )?;
        phases = outcome.point.iter().map(|b| b[0]).collect();

        let users = composite_with_phases(&channels, &phases);
        let next_rate = weighted_sum_rate(&users, &beams, &config.ue_weights, &noise);
        trace.push(next_rate);
        let gap = (next_rate - rate).abs();
        rate = next_rate;
        if gap <= tol.outer {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        beams: BeamformerSet::from_vectors(beams),
        surface: SurfaceState::Phases {
            pattern: fixed_pattern,
            coefficients: phases,
        },
        rate_trace: trace,
        converged,
        iterations,
    })
}
