//! Isotropic couple-stress material and its plane-strain Voigt matrices.

use ccst_linalg::Scalar;

use crate::{CoreError, Result};

/// Isotropic elastic solid with couple-stress modulus `eta`.
///
/// Lamé parameters and the length scale `l = sqrt(eta / mu)` are derived on
/// construction and never stored independently of the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material<T> {
    youngs_modulus: T,
    poisson_ratio: T,
    density: T,
    eta: T,
    lambda: T,
    mu: T,
    length_scale: T,
}

/// Plane-strain stiffness `c` (3×3, engineering shear) and curvature stiffness `d = 4η I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveVoigt<T> {
    pub c: [[T; 3]; 3],
    pub d: [[T; 2]; 2],
}

fn invalid(field: &'static str, value: f64, reason: &'static str) -> CoreError {
    CoreError::InvalidParameter {
        field,
        value,
        reason,
    }
}

impl<T: Scalar> Material<T> {
    pub fn new(youngs_modulus: T, poisson_ratio: T, density: T, eta: T) -> Result<Self> {
        let e = youngs_modulus;
        let nu = poisson_ratio;
        if !(e > T::zero()) || !e.is_finite() {
            return Err(invalid("E", e.to_f64_lossy(), "must be positive"));
        }
        if !(nu > -T::one() && nu < T::lit(0.5)) {
            return Err(invalid("nu", nu.to_f64_lossy(), "must lie in (-1, 0.5)"));
        }
        if !(density > T::zero()) || !density.is_finite() {
            return Err(invalid("rho", density.to_f64_lossy(), "must be positive"));
        }
        if !(eta >= T::zero()) || !eta.is_finite() {
            return Err(invalid("eta", eta.to_f64_lossy(), "must be non-negative"));
        }
        let two = T::lit(2.0);
        let mu = e / (two * (T::one() + nu));
        let lambda = e * nu / ((T::one() + nu) * (T::one() - two * nu));
        Ok(Self {
            youngs_modulus: e,
            poisson_ratio: nu,
            density,
            eta,
            lambda,
            mu,
            length_scale: (eta / mu).sqrt(),
        })
    }

    /// Same solid with a different couple-stress modulus.
    pub fn with_eta(&self, eta: T) -> Result<Self> {
        Self::new(self.youngs_modulus, self.poisson_ratio, self.density, eta)
    }

    /// The couple-stress-free counterpart (`eta = 0`).
    pub fn classical(&self) -> Self {
        Self {
            eta: T::zero(),
            length_scale: T::zero(),
            ..*self
        }
    }

    /// `eta` that yields the requested length scale: `eta = mu l²`.
    pub fn eta_for_length_scale(&self, l: T) -> T {
        self.mu * l * l
    }

    pub fn youngs_modulus(&self) -> T {
        self.youngs_modulus
    }
    pub fn poisson_ratio(&self) -> T {
        self.poisson_ratio
    }
    pub fn density(&self) -> T {
        self.density
    }
    pub fn eta(&self) -> T {
        self.eta
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn length_scale(&self) -> T {
        self.length_scale
    }

    /// Low-frequency transverse wave speed `sqrt(mu / rho)`.
    pub fn shear_wave_speed(&self) -> T {
        (self.mu / self.density).sqrt()
    }

    pub fn voigt(&self) -> ConstitutiveVoigt<T> {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        let one = T::one();
        let two = T::lit(2.0);
        let z = T::zero();
        let scale = e * (one - nu) / ((one + nu) * (one - two * nu));
        let off = scale * nu / (one - nu);
        let shear = scale * (one - two * nu) / (two * (one - nu));
        let d = T::lit(4.0) * self.eta;
        ConstitutiveVoigt {
            c: [[scale, off, z], [off, scale, z], [z, z, shear]],
            d: [[d, z], [z, d]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nu_zero_kills_lambda() {
        let m = Material::new(2.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(m.lambda(), 0.0);
        assert_eq!(m.mu(), 1.0);
        assert_eq!(m.length_scale(), 0.0);
        let v = m.voigt();
        assert_eq!(v.c, [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn derived_values_match_hand_evaluation() {
        // mu = 1/2.58, l = sqrt(0.1 * 2.58), C11 = 0.71 / (1.29 * 0.42)
        let m = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        assert_relative_eq!(m.mu(), 0.387_596_899_224_806_17, max_relative = 1e-14);
        assert_relative_eq!(m.length_scale(), 0.507_937_003_968_011_8, max_relative = 1e-14);
        assert_relative_eq!(m.voigt().c[0][0], 1.310_446_659_283_868_6, max_relative = 1e-14);
        let pulse = Material::new(1.0, 0.29, 1.0, 0.001).unwrap();
        assert_relative_eq!(pulse.length_scale(), 0.050_793_700_396_801_18, max_relative = 1e-14);
    }

    #[test]
    fn curvature_matrix_is_four_eta() {
        let m = Material::new(1.0, 0.29, 1.0, 0.1).unwrap();
        let d = m.voigt().d;
        assert_relative_eq!(d[0][0], 0.4);
        assert_relative_eq!(d[1][1], 0.4);
        assert_eq!(d[0][1], 0.0);
    }

    #[test]
    fn rejects_out_of_range_with_field_name() {
        let cases = [
            (Material::new(0.0, 0.2, 1.0, 0.0), "E"),
            (Material::new(1.0, 0.5, 1.0, 0.0), "nu"),
            (Material::new(1.0, -1.0, 1.0, 0.0), "nu"),
            (Material::new(1.0, 0.2, 0.0, 0.0), "rho"),
            (Material::new(1.0, 0.2, 1.0, -1e-9), "eta"),
        ];
        for (res, name) in cases {
            match res {
                Err(CoreError::InvalidParameter { field, .. }) => assert_eq!(field, name),
                other => panic!("expected rejection of {name}, got {other:?}"),
            }
        }
    }

    #[test]
    fn eta_round_trips_through_length_scale() {
        let m = Material::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let eta = m.eta_for_length_scale(0.01);
        let m2 = m.with_eta(eta).unwrap();
        assert_relative_eq!(m2.length_scale(), 0.01, max_relative = 1e-14);
    }
}
