//! Multipath channel geometry, array steering and factorized assembly.
//!
//! Links are a direct path plus `L` (BS side) or `Z_k` (UE side) scattered
//! paths with `1/√(L+1)`-style normalization, CN(0,1) small-scale gains and
//! large-scale amplitude `ρ(d) = √(ρ₀ / d^α)`.
//!
//! The surface is a `M_y × M_z` half-wavelength grid indexed z-fastest:
//! element `m = t_y · M_z + t_z`. Every module in the crate shares this
//! ordering. The BS is a uniform linear array of `N_t` antennas.
//!
//! [`assemble`] produces the pattern-independent factors `A` (size `I·M × N_t`)
//! and `b_k` (size `I·M`) such that, for a coefficient bank `Ω`, the
//! effective channels are `H = Ω^H A` and `h_k = Ω^H b_k`. The Kronecker
//! structure is exploited blockwise; nothing of size `I·M × M` is ever
//! materialized.
//!
//! Realizations are deterministic per seed; Monte-Carlo batches may sample
//! different seeds in parallel since everything here is immutable once built.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::pattern::PatternBank;
use crate::sph::basis_vector;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Propagation direction in radians: elevation `θ ∈ [0, π]`, azimuth `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

/// One propagation path of a link.
#[derive(Debug, Clone, Copy)]
pub struct PathComponent {
    /// Small-scale complex gain, CN(0, 1).
    pub gain: Complex64,
    /// Path length in meters.
    pub distance: f64,
    /// Angle at the surface: arrival for BS-side paths, departure for
    /// UE-side paths.
    pub ris_angle: Direction,
    /// Departure angle at the BS; `None` for UE-side paths.
    pub bs_angle: Option<Direction>,
    pub is_los: bool,
}

/// Array dimensions shared by all channel objects. Element spacing is fixed
/// at half a wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    pub m_y: usize,
    pub m_z: usize,
    pub n_t: usize,
}

impl ArrayGeometry {
    pub fn num_elements(&self) -> usize {
        self.m_y * self.m_z
    }
}

/// A sampled multipath geometry for one scenario draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Direct path first, then the scattered paths.
    pub bs_ris_paths: Vec<PathComponent>,
    /// Per-UE path lists, direct path first.
    pub ris_ue_paths: Vec<Vec<PathComponent>>,
    pub geometry: ArrayGeometry,
    /// Reference power gain ρ₀ at 1 m (linear).
    pub reference_gain: f64,
    pub path_loss_exponent: f64,
}

impl ChannelRealization {
    /// `√(1/(L+1))` over the total BS-side path count.
    pub fn bs_normalizer(&self) -> f64 {
        (1.0 / self.bs_ris_paths.len() as f64).sqrt()
    }

    /// `√(1/(Z_k+1))` over the total path count towards UE `k`.
    pub fn ue_normalizer(&self, ue: usize) -> f64 {
        (1.0 / self.ris_ue_paths[ue].len() as f64).sqrt()
    }

    pub fn num_ues(&self) -> usize {
        self.ris_ue_paths.len()
    }
}

/// Large-scale amplitude `√(ρ₀ / d^α)`.
pub fn path_loss_amplitude(distance: f64, reference_gain: f64, exponent: f64) -> Result<f64> {
    if distance <= 0.0 {
        return Err(Error::Domain(format!(
            "path distance must be positive (got {distance})"
        )));
    }
    if reference_gain <= 0.0 {
        return Err(Error::Domain("reference gain must be positive".into()));
    }
    Ok((reference_gain / distance.powf(exponent)).sqrt())
}

/// Planar-array response at the surface, entries
/// `exp(−jπ (t_y sinθ sinφ + t_z cosθ))`, z-fastest ordering.
pub fn steering_ris(theta: f64, phi: f64, m_y: usize, m_z: usize) -> DVector<Complex64> {
    let u_y = theta.sin() * phi.sin();
    let u_z = theta.cos();
    DVector::from_fn(m_y * m_z, |m, _| {
        let t_y = (m / m_z) as f64;
        let t_z = (m % m_z) as f64;
        Complex64::from_polar(1.0, -std::f64::consts::PI * (t_y * u_y + t_z * u_z))
    })
}

/// Linear-array response at the BS, entries `exp(−jπ t sinθ cosφ)`.
pub fn steering_bs(theta: f64, phi: f64, n_t: usize) -> DVector<Complex64> {
    let u = theta.sin() * phi.cos();
    DVector::from_fn(n_t, |t, _| {
        Complex64::from_polar(1.0, -std::f64::consts::PI * t as f64 * u)
    })
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn uniform(rng: &mut ChaCha8Rng, support: crate::config::Support) -> f64 {
    if support.0 == support.1 {
        support.0
    } else {
        rng.random_range(support.0..support.1)
    }
}

/// Draw a full multipath realization; identical seeds give identical draws.
///
/// Path counts are uniform over the configured inclusive bounds, angles come
/// from the configured uniform supports, direct-path angles are the fixed
/// scenario geometry, and scattered paths are `1 + U(nlos_excess)` times the
/// direct path length.
pub fn sample_realization(config: &ScenarioConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometry = ArrayGeometry {
        m_y: config.m_y,
        m_z: config.m_z,
        n_t: config.n_t,
    };
    let (lo, hi) = config.path_count_bounds;
    let angles = &config.angles;

    let mut bs_ris_paths = Vec::new();
    bs_ris_paths.push(PathComponent {
        gain: complex_gaussian(&mut rng),
        distance: config.bs_fris_distance_m,
        ris_angle: Direction {
            theta: angles.los_ris_aoa.0,
            phi: angles.los_ris_aoa.1,
        },
        bs_angle: Some(Direction {
            theta: angles.los_bs_aod.0,
            phi: angles.los_bs_aod.1,
        }),
        is_los: true,
    });
    let num_scattered = rng.random_range(lo..=hi);
    for _ in 0..num_scattered {
        let excess = 1.0 + rng.random_range(config.nlos_excess.0..=config.nlos_excess.1);
        bs_ris_paths.push(PathComponent {
            gain: complex_gaussian(&mut rng),
            distance: config.bs_fris_distance_m * excess,
            ris_angle: Direction {
                theta: uniform(&mut rng, angles.nlos_ris_aoa_theta),
                phi: uniform(&mut rng, angles.nlos_ris_aoa_phi),
            },
            bs_angle: Some(Direction {
                theta: uniform(&mut rng, angles.nlos_bs_aod_theta),
                phi: uniform(&mut rng, angles.nlos_bs_aod_phi),
            }),
            is_los: false,
        });
    }

    let mut ris_ue_paths = Vec::with_capacity(config.num_ues);
    for _ in 0..config.num_ues {
        let los_distance = rng.random_range(config.ue_distance_m.0..=config.ue_distance_m.1);
        let mut paths = vec![PathComponent {
            gain: complex_gaussian(&mut rng),
            distance: los_distance,
            ris_angle: Direction {
                theta: uniform(&mut rng, angles.ue_los_aod_theta),
                phi: uniform(&mut rng, angles.ue_los_aod_phi),
            },
            bs_angle: None,
            is_los: true,
        }];
        let num_scattered = rng.random_range(lo..=hi);
        for _ in 0..num_scattered {
            let excess = 1.0 + rng.random_range(config.nlos_excess.0..=config.nlos_excess.1);
            paths.push(PathComponent {
                gain: complex_gaussian(&mut rng),
                distance: los_distance * excess,
                ris_angle: Direction {
                    theta: uniform(&mut rng, angles.ue_nlos_aod_theta),
                    phi: uniform(&mut rng, angles.ue_nlos_aod_phi),
                },
                bs_angle: None,
                is_los: false,
            });
        }
        ris_ue_paths.push(paths);
    }

    ChannelRealization {
        bs_ris_paths,
        ris_ue_paths,
        geometry,
        reference_gain: config.reference_gain,
        path_loss_exponent: config.path_loss_exponent,
    }
}

/// Pattern-independent channel factors: `H = Ω^H A`, `h_k = Ω^H b_k`.
#[derive(Debug, Clone)]
pub struct AssembledChannel {
    /// `I·M × N_t`.
    pub a: DMatrix<Complex64>,
    /// One `I·M` vector per UE.
    pub b: Vec<DVector<Complex64>>,
    pub trunc_len: usize,
    pub num_elements: usize,
    pub n_t: usize,
}

/// Stack `η(θ, φ) ⊗ steering` blockwise: block `m` is `a[m] · η`.
fn stacked_response(
    ris_angle: Direction,
    geometry: &ArrayGeometry,
    trunc_len: usize,
) -> Result<DVector<Complex64>> {
    let eta = basis_vector(ris_angle.theta, ris_angle.phi, trunc_len)?;
    let a_r = steering_ris(ris_angle.theta, ris_angle.phi, geometry.m_y, geometry.m_z);
    let m = geometry.num_elements();
    let mut stacked = DVector::zeros(trunc_len * m);
    for (elem, phase) in a_r.iter().enumerate() {
        for i in 0..trunc_len {
            stacked[elem * trunc_len + i] = phase * eta.values[i];
        }
    }
    Ok(stacked)
}

/// Build the factorized channel objects for truncation length `trunc_len`.
pub fn assemble(realization: &ChannelRealization, trunc_len: usize) -> Result<AssembledChannel> {
    if trunc_len == 0 {
        return Err(Error::Domain("truncation length must be >= 1".into()));
    }
    let geometry = &realization.geometry;
    let m = geometry.num_elements();
    let stacked_len = trunc_len * m;

    let mut a = DMatrix::<Complex64>::zeros(stacked_len, geometry.n_t);
    let gamma_bs = realization.bs_normalizer();
    for path in &realization.bs_ris_paths {
        let rho = path_loss_amplitude(
            path.distance,
            realization.reference_gain,
            realization.path_loss_exponent,
        )?;
        let coef = path.gain * gamma_bs * rho;
        let stacked = stacked_response(path.ris_angle, geometry, trunc_len)?;
        let bs = path
            .bs_angle
            .ok_or_else(|| Error::Degenerate("BS-side path without a BS angle".into()))?;
        let a_b = steering_bs(bs.theta, bs.phi, geometry.n_t);
        // A += coef · stacked · a_B^H  (rank-one update)
        for (col, bs_phase) in a_b.iter().enumerate() {
            let scale = coef * bs_phase.conj();
            for row in 0..stacked_len {
                a[(row, col)] += scale * stacked[row];
            }
        }
    }

    let mut b = Vec::with_capacity(realization.num_ues());
    for (ue, paths) in realization.ris_ue_paths.iter().enumerate() {
        let gamma_ue = realization.ue_normalizer(ue);
        let mut b_k = DVector::<Complex64>::zeros(stacked_len);
        for path in paths {
            let rho = path_loss_amplitude(
                path.distance,
                realization.reference_gain,
                realization.path_loss_exponent,
            )?;
            let coef = path.gain * gamma_ue * rho;
            let stacked = stacked_response(path.ris_angle, geometry, trunc_len)?;
            b_k.axpy(coef, &stacked, Complex64::new(1.0, 0.0));
        }
        b.push(b_k);
    }

    Ok(AssembledChannel {
        a,
        b,
        trunc_len,
        num_elements: m,
        n_t: geometry.n_t,
    })
}

/// The pattern-dependent channels `H = Ω^H A` (size `M × N_t`) and
/// `h_k = Ω^H b_k` (size `M`).
#[derive(Debug, Clone)]
pub struct EffectiveChannels {
    pub h_br: DMatrix<Complex64>,
    pub h_ru: Vec<DVector<Complex64>>,
}

/// Apply a coefficient bank to the assembled factors, blockwise: row `m` of
/// `H` is `ω_m^H A_m` where `A_m` is the m-th row block of `A`.
pub fn effective_channels(
    bank: &PatternBank,
    assembled: &AssembledChannel,
) -> Result<EffectiveChannels> {
    if bank.num_elements() != assembled.num_elements || bank.trunc_len() != assembled.trunc_len {
        return Err(Error::Dimension(format!(
            "bank is {}x{}, channel factors expect {}x{}",
            bank.num_elements(),
            bank.trunc_len(),
            assembled.num_elements,
            assembled.trunc_len
        )));
    }
    let m = assembled.num_elements;
    let i_len = assembled.trunc_len;
    let mut h_br = DMatrix::<Complex64>::zeros(m, assembled.n_t);
    for elem in 0..m {
        let omega = &bank.omega[elem];
        for col in 0..assembled.n_t {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..i_len {
                acc += omega[i].conj() * assembled.a[(elem * i_len + i, col)];
            }
            h_br[(elem, col)] = acc;
        }
    }
    let mut h_ru = Vec::with_capacity(assembled.b.len());
    for b_k in &assembled.b {
        let mut h_k = DVector::<Complex64>::zeros(m);
        for elem in 0..m {
            let omega = &bank.omega[elem];
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..i_len {
                acc += omega[i].conj() * b_k[elem * i_len + i];
            }
            h_k[elem] = acc;
        }
        h_ru.push(h_k);
    }
    Ok(EffectiveChannels { h_br, h_ru })
}
