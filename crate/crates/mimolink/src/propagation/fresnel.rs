//! Plane-wave reflection coefficients at the boundary between air and a lossy
//! dielectric half-space.
//!
//! The material enters through its complex relative permittivity at the
//! carrier, `eps = eps_r - j sigma / (omega eps0)` (engineering `e^{+j w t}`
//! sign convention, so conductive loss is a negative imaginary part). The
//! coefficients are the classic perpendicular (s) and parallel (p)
//! polarization forms written directly in `eps`:
//!
//! ```text
//! gamma_s = (cos t - sqrt(eps - sin^2 t)) / (cos t + sqrt(eps - sin^2 t))
//! gamma_p = (eps cos t - sqrt(eps - sin^2 t)) / (eps cos t + sqrt(eps - sin^2 t))
//! ```
//!
//! where `t` is the angle of incidence measured from the surface normal. The
//! principal complex square root selects the decaying transmitted wave. In
//! this convention `gamma_p(0) = -gamma_s(0)` at normal incidence (the p
//! reference vector flips through the specular point) and a lossless dense
//! medium has a real Brewster zero in `gamma_p`.

use num_complex::Complex64;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Complex relative permittivity of a conductive dielectric at `frequency_hz`.
pub fn complex_permittivity(epsilon_r: f64, sigma_s_per_m: f64, frequency_hz: f64) -> Complex64 {
    let omega = 2.0 * std::f64::consts::PI * frequency_hz;
    Complex64::new(epsilon_r, -sigma_s_per_m / (omega * EPSILON_0))
}

/// Reflection coefficients `(gamma_s, gamma_p)` for incidence with
/// `cos_theta = cos` of the angle from the surface normal (`1` = normal
/// incidence, `0` = grazing).
pub fn reflection_coefficients(
    epsilon_r: f64,
    sigma_s_per_m: f64,
    frequency_hz: f64,
    cos_theta: f64,
) -> (Complex64, Complex64) {
    debug_assert!(
        (0.0..=1.0 + 1e-12).contains(&cos_theta),
        "cos_theta out of range: {cos_theta}"
    );
    let cos_theta = cos_theta.clamp(0.0, 1.0);
    let eps = complex_permittivity(epsilon_r, sigma_s_per_m, frequency_hz);
    let sin_sq = 1.0 - cos_theta * cos_theta;
    let root = (eps - Complex64::new(sin_sq, 0.0)).sqrt();
    let c = Complex64::new(cos_theta, 0.0);
    // Degenerate corner: grazing incidence on vacuum (eps = 1, cos = 0) makes
    // both ratios 0/0. There is no boundary there; nothing reflects.
    if (c + root).norm() == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let gamma_s = (c - root) / (c + root);
    let gamma_p = (eps * c - root) / (eps * c + root);
    (gamma_s, gamma_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: f64 = 3.16e9;

    #[test]
    fn normal_incidence_matches_impedance_form_and_sign_convention() {
        let (gs, gp) = reflection_coefficients(4.0, 0.0, F, 1.0);
        // (1 - sqrt(eps)) / (1 + sqrt(eps)) = -1/3 for eps = 4.
        assert!((gs - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((gp + gs).norm() < 1e-15);
    }

    #[test]
    fn grazing_incidence_reflects_totally() {
        for (er, sig) in [(2.0, 0.0), (5.0, 0.01), (15.0, 1.0)] {
            let (gs, gp) = reflection_coefficients(er, sig, F, 0.0);
            assert!((gs - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
            assert!((gp - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn brewster_zero_for_lossless_dielectric() {
        let er: f64 = 6.5;
        // tan(theta_b) = sqrt(er) -> cos(theta_b) = 1 / sqrt(1 + er).
        let cos_b = 1.0 / (1.0 + er).sqrt();
        let (_, gp) = reflection_coefficients(er, 0.0, F, cos_b);
        assert!(gp.norm() < 1e-14, "gamma_p at Brewster = {gp}");
        // s polarization has no such zero.
        let (gs, _) = reflection_coefficients(er, 0.0, F, cos_b);
        assert!(gs.norm() > 0.3);
    }

    #[test]
    fn magnitudes_never_exceed_unity() {
        for er in [1.0, 2.0, 5.0, 15.0, 81.0] {
            for sigma in [0.0, 1e-3, 0.05, 1.0, 100.0] {
                for k in 0..=40 {
                    let cos_theta = k as f64 / 40.0;
                    let (gs, gp) = reflection_coefficients(er, sigma, F, cos_theta);
                    assert!(gs.norm() <= 1.0 + 1e-12, "er={er} sig={sigma} ct={cos_theta}");
                    assert!(gp.norm() <= 1.0 + 1e-12, "er={er} sig={sigma} ct={cos_theta}");
                }
            }
        }
    }

    #[test]
    fn near_perfect_conductor_limits() {
        let (gs, gp) = reflection_coefficients(1.0, 1e12, F, 0.7);
        assert!((gs - Complex64::new(-1.0, 0.0)).norm() < 1e-3);
        assert!((gp - Complex64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn vacuum_boundary_reflects_nothing() {
        let (gs, gp) = reflection_coefficients(1.0, 0.0, F, 0.5);
        assert!(gs.norm() < 1e-15);
        assert!(gp.norm() < 1e-15);
    }

    #[test]
    fn loss_makes_coefficients_complex() {
        let (gs, _) = reflection_coefficients(5.0, 0.05, F, 0.8);
        assert!(gs.im.abs() > 1e-6);
    }
}
