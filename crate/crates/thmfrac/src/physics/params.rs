//! Material and model parameters of the coupled system.

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter `{0}` must be strictly positive")]
    NotPositive(&'static str),
    #[error("Biot coefficient must lie in [0, 1], got {0}")]
    BiotOutOfRange(f64),
}

/// Isotropic material parameters shared by the matrix and the fractures.
/// Stress terms follow σ = μ(∇u+∇uᵀ) + λ_L tr(∇u)I − αpI − β_sK(T−T₀)I.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams<F> {
    /// Shear modulus μ_L (Pa).
    pub shear_modulus: F,
    /// Lamé first parameter λ_L (Pa).
    pub lame_lambda: F,
    /// Biot coefficient α (–).
    pub biot_alpha: F,
    /// Drained bulk modulus K (Pa).
    pub bulk_modulus: F,
    /// Solid volumetric thermal expansion β_s (1/K).
    pub beta_s: F,
    /// Fluid volumetric thermal expansion β_f (1/K).
    pub beta_f: F,
    /// Porosity φ (–).
    pub porosity: F,
    /// Fluid compressibility c (1/Pa).
    pub fluid_compressibility: F,
    /// Matrix permeability κ (m²).
    pub permeability: F,
    /// Fluid dynamic viscosity μ (Pa·s).
    pub viscosity: F,
    /// Fluid density ρ_f (kg/m³).
    pub rho_f: F,
    /// Fluid specific heat capacity C_f (J/(kg·K)).
    pub c_f: F,
    /// Effective volumetric heat capacity ρC of the saturated medium
    /// (J/(m³·K)).
    pub rho_c: F,
    /// Matrix thermal conductivity θ (W/(m·K)).
    pub conductivity: F,
    /// Fracture tangential thermal conductivity (W/(m·K)).
    pub conductivity_frac: F,
    /// Reference temperature T₀ (K).
    pub t_ref: F,
    /// Friction coefficient F (–).
    pub friction: F,
    /// Interface normal fluid transmissibility κ_j (per unit area).
    pub kappa_j: F,
    /// Interface normal thermal transmissibility θ_j (per unit area).
    pub theta_j: F,
    /// Residual aperture a_res (m): closed fractures keep this opening.
    pub a_residual: F,
    /// Baseline aperture a₀ (m) at zero normal jump.
    pub a_zero: F,
    /// Numerical contact parameter c (Pa/m); zero means "derive the default
    /// 100·G/h from the grid".
    pub contact_c: F,
}

impl<F: Scalar> MaterialParams<F> {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive: [(&'static str, F); 15] = [
            ("shear_modulus", self.shear_modulus),
            ("bulk_modulus", self.bulk_modulus),
            ("porosity", self.porosity),
            ("fluid_compressibility", self.fluid_compressibility),
            ("permeability", self.permeability),
            ("viscosity", self.viscosity),
            ("rho_f", self.rho_f),
            ("c_f", self.c_f),
            ("rho_c", self.rho_c),
            ("conductivity", self.conductivity),
            ("conductivity_frac", self.conductivity_frac),
            ("friction", self.friction),
            ("t_ref", self.t_ref),
            ("a_residual", self.a_residual),
            ("a_zero", self.a_zero),
        ];
        for (name, v) in positive {
            if v <= F::zero() {
                return Err(ParamError::NotPositive(name));
            }
        }
        if self.kappa_j <= F::zero() {
            return Err(ParamError::NotPositive("kappa_j"));
        }
        if self.theta_j <= F::zero() {
            return Err(ParamError::NotPositive("theta_j"));
        }
        let alpha = self.biot_alpha.to_subset().unwrap_or(-1.0);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ParamError::BiotOutOfRange(alpha));
        }
        Ok(())
    }

    /// Specific storage S = φc + (α−φ)/K of the matrix mass balance.
    pub fn storativity(&self) -> F {
        self.porosity * self.fluid_compressibility
            + (self.biot_alpha - self.porosity) / self.bulk_modulus
    }

    /// Thermal stress coefficient β_s·K (Pa/K).
    pub fn thermal_stress(&self) -> F {
        self.beta_s * self.bulk_modulus
    }

    /// Darcy mobility κ/μ of the matrix.
    pub fn mobility(&self) -> F {
        self.permeability / self.viscosity
    }

    /// Volumetric heat capacity of the fluid ρ_f·C_f.
    pub fn rho_cf(&self) -> F {
        self.rho_f * self.c_f
    }

    /// Effective contact parameter for a grid with characteristic cell size
    /// `h`: the configured value, or 100·G/h if unset.
    pub fn contact_c_for(&self, h: F) -> F {
        if self.contact_c > F::zero() {
            self.contact_c
        } else {
            lit::<F>(100.0) * self.shear_modulus / h
        }
    }

    /// Cubic-law tangential conductivity a³/(12μ) of a fracture cell
    /// (transmissibility per unit width including the specific volume).
    pub fn cubic_law(&self, aperture: F) -> F {
        aperture * aperture * aperture / (lit::<F>(12.0) * self.viscosity)
    }

    /// Derivative of [`Self::cubic_law`] with respect to the aperture.
    pub fn cubic_law_da(&self, aperture: F) -> F {
        aperture * aperture / (lit::<F>(4.0) * self.viscosity)
    }
}
