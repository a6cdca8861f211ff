//! 3GPP TR 38.901 single-element radiation pattern.
//!
//! Vertical and horizontal cuts with 65° half-power beamwidths, 30 dB
//! side-lobe / back-lobe limits and an 8 dBi peak, boresight at
//! `θ = 90°, φ = 0°`. [`Gpp38901Pattern`] converts the dB gain to a real
//! nonnegative amplitude (zero phase) scaled so the pattern energy over the
//! sphere equals `4π`, matching the per-element energy constraint.

use super::quadrature::default_grid;
use std::f64::consts::PI;
use std::sync::OnceLock;

const HALF_POWER_BEAMWIDTH_DEG: f64 = 65.0;
const SIDELOBE_LIMIT_DB: f64 = 30.0;
const BACKLOBE_LIMIT_DB: f64 = 30.0;
const PEAK_GAIN_DBI: f64 = 8.0;

/// Directional element gain in dB before energy normalization.
pub fn gpp38901_unnormalized_db(theta: f64, phi: f64) -> f64 {
    let theta_deg = theta.to_degrees();
    // Wrap azimuth to (-180, 180].
    let phi_deg = phi.sin().atan2(phi.cos()).to_degrees();
    let vertical =
        -(12.0 * ((theta_deg - 90.0) / HALF_POWER_BEAMWIDTH_DEG).powi(2)).min(SIDELOBE_LIMIT_DB);
    let horizontal = -(12.0 * (phi_deg / HALF_POWER_BEAMWIDTH_DEG).powi(2)).min(BACKLOBE_LIMIT_DB);
    PEAK_GAIN_DBI - (-(vertical + horizontal)).min(BACKLOBE_LIMIT_DB)
}

/// The 38.901 element pattern with its amplitude scale fixed so that
/// `∫∫ amplitude² sinθ dθ dφ = 4π` on the default 64 × 128 grid.
#[derive(Debug, Clone, Copy)]
pub struct Gpp38901Pattern {
    scale: f64,
}

impl Gpp38901Pattern {
    pub fn new() -> Self {
        let energy: f64 = default_grid()
            .iter()
            .map(|node| {
                node.weight * 10f64.powf(gpp38901_unnormalized_db(node.theta, node.phi) / 10.0)
            })
            .sum();
        Self {
            scale: (4.0 * PI / energy).sqrt(),
        }
    }

    /// Real nonnegative amplitude in the direction `(θ, φ)`.
    pub fn amplitude(&self, theta: f64, phi: f64) -> f64 {
        self.scale * 10f64.powf(gpp38901_unnormalized_db(theta, phi) / 20.0)
    }
}

impl Default for Gpp38901Pattern {
    fn default() -> Self {
        Self::new()
    }
}

/// Energy-normalized 38.901 amplitude with a process-wide cached scale.
pub fn gpp38901_pattern(theta: f64, phi: f64) -> f64 {
    static PATTERN: OnceLock<Gpp38901Pattern> = OnceLock::new();
    PATTERN
        .get_or_init(Gpp38901Pattern::new)
        .amplitude(theta, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn boresight_is_the_maximum() {
        let boresight = gpp38901_pattern(PI / 2.0, 0.0);
        for node in default_grid() {
            assert!(gpp38901_pattern(node.theta, node.phi) <= boresight + 1e-12);
        }
    }

    #[test]
    fn back_direction_sits_at_the_floor() {
        // Directly behind the element both cuts clamp, leaving the -30 dB
        // floor relative to the 8 dBi peak.
        assert_abs_diff_eq!(
            gpp38901_unnormalized_db(PI / 2.0, PI),
            PEAK_GAIN_DBI - BACKLOBE_LIMIT_DB,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            gpp38901_unnormalized_db(PI / 2.0, 0.0),
            PEAK_GAIN_DBI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_over_sphere_is_normalized() {
        let energy: f64 = default_grid()
            .iter()
            .map(|node| node.weight * gpp38901_pattern(node.theta, node.phi).powi(2))
            .sum();
        assert_abs_diff_eq!(energy, 4.0 * PI, epsilon = 1e-6);
    }
}
