//! Associated Legendre functions by stable upward recurrence.

use crate::error::{Error, Result};

/// `P_v^h(x)` for `0 ≤ h ≤ v` and `|x| ≤ 1`, **without** the Condon–Shortley
/// sign, i.e. `P_h^h(x) = (2h−1)!! (1−x²)^{h/2}`.
///
/// Starts from the sectoral value and climbs the degree with
/// `(v−h) P_v^h = (2v−1) x P_{v−1}^h − (v+h−1) P_{v−2}^h`.
pub fn assoc_legendre(degree: u32, order: u32, x: f64) -> Result<f64> {
    if order > degree {
        return Err(Error::Domain(format!(
            "Legendre order {order} exceeds degree {degree}"
        )));
    }
    if x.abs() > 1.0 {
        return Err(Error::Domain(format!(
            "Legendre argument {x} outside [-1, 1]"
        )));
    }

    // P_h^h = (2h − 1)!! · (1 − x²)^{h/2}
    let sin_theta = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut p_prev = 1.0;
    let mut odd = 1.0;
    for _ in 0..order {
        p_prev *= odd * sin_theta;
        odd += 2.0;
    }
    if degree == order {
        return Ok(p_prev);
    }

    // P_{h+1}^h = (2h + 1) x P_h^h
    let mut p_curr = (2.0 * order as f64 + 1.0) * x * p_prev;
    for v in (order + 2)..=degree {
        let next = ((2.0 * v as f64 - 1.0) * x * p_curr - (v + order - 1) as f64 * p_prev)
            / (v - order) as f64;
        p_prev = p_curr;
        p_curr = next;
    }
    Ok(p_curr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_degree_values() {
        assert_relative_eq!(assoc_legendre(0, 0, 0.3).unwrap(), 1.0);
        assert_relative_eq!(assoc_legendre(1, 0, 0.3).unwrap(), 0.3);
        // P_1^1(x) = sqrt(1 − x²) without the Condon–Shortley sign.
        assert_relative_eq!(assoc_legendre(1, 1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn matches_closed_forms() {
        // Closed forms from differentiating P_v(x) directly:
        //   P_2(x) = (3x² − 1)/2           → P_2^1 = 3x√(1−x²), P_2^2 = 3(1−x²)
        //   P_3(x) = (5x³ − 3x)/2          → P_3^2 = 15x(1−x²)
        for &x in &[-0.9f64, -0.3, 0.0, 0.45, 0.8] {
            let s = (1.0 - x * x).sqrt();
            assert_relative_eq!(
                assoc_legendre(2, 0, x).unwrap(),
                0.5 * (3.0 * x * x - 1.0),
                max_relative = 1e-13,
                epsilon = 1e-14
            );
            assert_relative_eq!(
                assoc_legendre(2, 1, x).unwrap(),
                3.0 * x * s,
                max_relative = 1e-13,
                epsilon = 1e-14
            );
            assert_relative_eq!(
                assoc_legendre(2, 2, x).unwrap(),
                3.0 * (1.0 - x * x),
                max_relative = 1e-13,
                epsilon = 1e-14
            );
            assert_relative_eq!(
                assoc_legendre(3, 2, x).unwrap(),
                15.0 * x * (1.0 - x * x),
                max_relative = 1e-13,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn matches_finite_difference_of_legendre_polynomial() {
        // P_v^h(x) = (1−x²)^{h/2} d^h/dx^h P_v(x); check h = 1 against a
        // central difference of P_v = P_v^0 as an independent oracle.
        let step = 1e-6;
        for v in 1u32..=6 {
            for &x in &[-0.5, 0.1, 0.6] {
                let dp = (assoc_legendre(v, 0, x + step).unwrap()
                    - assoc_legendre(v, 0, x - step).unwrap())
                    / (2.0 * step);
                let expected = (1.0 - x * x).sqrt() * dp;
                let got = assoc_legendre(v, 1, x).unwrap();
                assert_relative_eq!(got, expected, max_relative = 1e-8, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn rejects_invalid_arguments() {
        assert!(assoc_legendre(1, 2, 0.0).is_err());
        assert!(assoc_legendre(2, 0, 1.5).is_err());
        assert!(assoc_legendre(2, 0, -1.0001).is_err());
    }
}
