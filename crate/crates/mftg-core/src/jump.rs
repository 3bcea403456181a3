//! Jump measures on (0, inf) and their cached moment functionals.
//!
//! The measure is an exponential density `c * exp(-decay * theta)` plus an
//! optional finite list of atoms, with the identity amplitude map
//! `mu(theta) = theta`. The three Ito-correction integrands
//!
//!   log:      ln(1 + theta) - theta
//!   square:   theta^2
//!   power k:  (1 + theta)^{2k} - 1 - 2k theta
//!
//! are integrated against the measure once at construction and cached.

use crate::error::{Error, Result};
use crate::quad;

/// Highest power moment cached at construction.
pub const MAX_POWER: u32 = 8;

const QUAD_TOL: f64 = 1e-10;
/// Quadrature domain is truncated where the density integrand falls below
/// this fraction of its peak.
const TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    density_coeff: f64,
    density_decay: f64,
    atoms: Vec<(f64, f64)>,
    total_intensity: f64,
    mean_amplitude: f64,
    moment_log: f64,
    moment_square: f64,
    moment_power: Vec<f64>,
}

impl JumpSpec {
    /// Measure with zero mass: jumps disabled.
    pub fn disabled() -> Self {
        Self {
            density_coeff: 0.0,
            density_decay: 1.0,
            atoms: Vec::new(),
            total_intensity: 0.0,
            mean_amplitude: 0.0,
            moment_log: 0.0,
            moment_square: 0.0,
            moment_power: vec![0.0; MAX_POWER as usize],
        }
    }

    /// Exponential density `coeff * exp(-decay * theta)` on (0, inf).
    pub fn exponential(coeff: f64, decay: f64) -> Result<Self> {
        Self::new(coeff, decay, Vec::new())
    }

    /// Finite atoms `(location, mass)` only.
    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(0.0, 1.0, atoms)
    }

    pub fn new(coeff: f64, decay: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if coeff < 0.0 || !coeff.is_finite() {
            return Err(Error::InvalidInput(format!(
                "density coefficient must be >= 0, got {coeff}"
            )));
        }
        if coeff > 0.0 && !(decay > 0.0) {
            return Err(Error::DivergentMoment(format!(
                "exponential density needs positive decay, got {decay}"
            )));
        }
        for &(loc, mass) in &atoms {
            if loc <= 0.0 || mass < 0.0 || !loc.is_finite() || !mass.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom ({loc}, {mass}) must have positive location and nonnegative mass"
                )));
            }
        }
        let density_intensity = if coeff > 0.0 { coeff / decay } else { 0.0 };
        let atom_intensity: f64 = atoms.iter().map(|a| a.1).sum();
        let total_intensity = density_intensity + atom_intensity;

        let integrate = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
            let mut acc = 0.0;
            if coeff > 0.0 {
                // e^{-decay*theta} drops below TRUNCATION of its peak here
                let cutoff = -TRUNCATION.ln() / decay;
                acc += quad::adaptive(&|th: f64| f(th) * coeff * (-decay * th).exp(),
                                      0.0, cutoff, QUAD_TOL)?;
            }
            for &(loc, mass) in &atoms {
                acc += f(loc) * mass;
            }
            if !acc.is_finite() {
                return Err(Error::DivergentMoment("moment integral non-finite".into()));
            }
            Ok(acc)
        };

        let moment_log = integrate(&|th| (th.ln_1p()) - th)?;
        let moment_square = integrate(&|th| th * th)?;
        let mut moment_power = Vec::with_capacity(MAX_POWER as usize);
        for k in 1..=MAX_POWER {
            let p = 2 * k;
            moment_power
                .push(integrate(&move |th: f64| (1.0 + th).powi(p as i32) - 1.0 - f64::from(p) * th)?);
        }
        let mean_amplitude = integrate(&|th| th)?;

        Ok(Self {
            density_coeff: coeff,
            density_decay: decay,
            atoms,
            total_intensity,
            mean_amplitude,
            moment_log,
            moment_square,
            moment_power,
        })
    }

    pub fn is_disabled(&self) -> bool {
        self.total_intensity == 0.0
    }

    /// Total intensity lambda = nu((0, inf)).
    pub fn total_intensity(&self) -> f64 {
        self.total_intensity
    }

    /// Compensator rate: integral of mu(theta) = theta against the measure.
    pub fn mean_amplitude(&self) -> f64 {
        self.mean_amplitude
    }

    pub fn density_coeff(&self) -> f64 {
        self.density_coeff
    }

    pub fn density_decay(&self) -> f64 {
        self.density_decay
    }

    pub fn atom_list(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// integral of [ln(1 + theta) - theta] nu(d theta); <= 0 by concavity.
    pub fn moment_log(&self) -> f64 {
        self.moment_log
    }

    /// integral of theta^2 nu(d theta).
    pub fn moment_square(&self) -> f64 {
        self.moment_square
    }

    /// integral of [(1 + theta)^{2k} - 1 - 2k theta] nu(d theta); >= 0 by convexity.
    pub fn moment_power(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("power moment needs k >= 1".into()));
        }
        if k > MAX_POWER {
            return Err(Error::Domain(format!(
                "power moment cached up to k = {MAX_POWER}, requested {k}"
            )));
        }
        Ok(self.moment_power[(k - 1) as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_measure_all_zero() {
        let j = JumpSpec::disabled();
        assert_eq!(j.moment_log(), 0.0);
        assert_eq!(j.moment_square(), 0.0);
        assert_eq!(j.moment_power(1).unwrap(), 0.0);
        assert_eq!(j.total_intensity(), 0.0);
    }

    #[test]
    fn point_mass_closed_forms() {
        // nu = delta at theta = 1
        let j = JumpSpec::atoms(vec![(1.0, 1.0)]).unwrap();
        assert!((j.moment_log() - (2f64.ln() - 1.0)).abs() < 1e-14);
        assert!((j.moment_power(1).unwrap() - 1.0).abs() < 1e-14); // 2^2 - 1 - 2
        // nu = delta at theta = 2: square moment = 4
        let j2 = JumpSpec::atoms(vec![(2.0, 1.0)]).unwrap();
        assert!((j2.moment_square() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_closed_form_moments() {
        // c = 5, decay = 5: total intensity 1, mean 1/5, square moment 2/25
        let j = JumpSpec::exponential(5.0, 5.0).unwrap();
        assert!((j.total_intensity() - 1.0).abs() < 1e-10);
        assert!((j.mean_amplitude() - 0.2).abs() < 1e-10);
        assert!((j.moment_square() - 0.08).abs() < 1e-10);
        // k = 1 power moment equals the square moment identically
        assert!((j.moment_power(1).unwrap() - j.moment_square()).abs() < 1e-12);
        // k = 2: 6 m2 + 4 m3 + m4 with mj = c j!/decay^{j+1}
        assert!((j.moment_power(2).unwrap() - 0.7104).abs() < 1e-9);
    }

    #[test]
    fn log_moment_sign_and_value() {
        let j = JumpSpec::exponential(5.0, 5.0).unwrap();
        assert!(j.moment_log() <= 0.0);
        // frozen from an independent high-resolution quadrature oracle
        assert!((j.moment_log() - (-0.029577823715268)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_density() {
        assert!(JumpSpec::exponential(5.0, 0.0).is_err());
        assert!(JumpSpec::exponential(-1.0, 5.0).is_err());
        assert!(JumpSpec::atoms(vec![(-1.0, 1.0)]).is_err());
    }
}
