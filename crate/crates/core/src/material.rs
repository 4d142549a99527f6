//! Poro-thermo-elastic material data.
//!
//! Sign convention, used by every coupling term: stresses are tension
//! positive, pore pressure is compression positive, and the total stress is
//! σ = σ' − α p m with m = (1, 1, 0). Thermal expansion coefficients β are
//! volumetric; the linear coefficient is β/3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlaneMode {
    #[default]
    PlaneStrain,
    PlaneStress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolidProps {
    pub e: f64,
    pub nu: f64,
    pub rho_s: f64,
    /// Solid grain bulk modulus; `None` means incompressible grains.
    pub ks: Option<f64>,
    pub beta_s: f64,
    pub lambda_s: f64,
    pub c_s: f64,
    pub f_t: Option<f64>,
    pub g_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    pub rho_f: f64,
    pub kf: f64,
    pub mu_f: f64,
    pub beta_f: f64,
    pub lambda_f: f64,
    pub c_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureProps {
    pub alpha: f64,
    pub inv_qt: f64,
    pub beta_t: f64,
    pub rho: f64,
    pub rhoc_eff: f64,
    pub lambda_eff: f64,
    pub k_f: f64,
    pub n: f64,
    pub d: [[f64; 3]; 3],
    pub kt: f64,
    pub mode: PlaneMode,
    pub e: f64,
    pub nu: f64,
    pub beta_s: f64,
    /// Thermal stress per degree: σ'_th = −gamma·(T − T0)·m.
    pub gamma: f64,
    /// k_f/μ_f, zero for a solid without pore fluid.
    pub mobility: f64,
    pub rho_f: f64,
    /// ρ_f·C_f, the convective heat capacity of the fluid.
    pub rhoc_f: f64,
    pub f_t: Option<f64>,
}

pub fn elasticity_matrix(e: f64, nu: f64, mode: PlaneMode) -> [[f64; 3]; 3] {
    match mode {
        PlaneMode::PlaneStrain => {
            let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
            [
                [c * (1.0 - nu), c * nu, 0.0],
                [c * nu, c * (1.0 - nu), 0.0],
                [0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0],
            ]
        }
        PlaneMode::PlaneStress => {
            let c = e / (1.0 - nu * nu);
            [
                [c, c * nu, 0.0],
                [c * nu, c, 0.0],
                [0.0, 0.0, c * (1.0 - nu) / 2.0],
            ]
        }
    }
}

fn check_solid(s: &SolidProps) -> Result<()> {
    if !(s.e > 0.0) {
        return Err(Error::InvalidArgument(format!("E must be > 0, got {}", s.e)));
    }
    if !(s.nu > -1.0 && s.nu < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "Poisson ratio must lie in (-1, 0.5), got {}",
            s.nu
        )));
    }
    if let Some(ks) = s.ks {
        if !(ks > 0.0) {
            return Err(Error::InvalidArgument(format!("Ks must be > 0, got {ks}")));
        }
    }
    Ok(())
}

fn thermal_modulus(s: &SolidProps, kt: f64, mode: PlaneMode) -> f64 {
    match mode {
        PlaneMode::PlaneStrain => s.beta_s * kt,
        PlaneMode::PlaneStress => s.e * s.beta_s / (3.0 * (1.0 - s.nu)),
    }
}

/// Mixture coefficients for a saturated porous medium.
pub fn derive_mixture(
    solid: &SolidProps,
    fluid: &FluidProps,
    n: f64,
    k_f: f64,
    mode: PlaneMode,
) -> Result<MixtureProps> {
    check_solid(solid)?;
    if !(n > 0.0 && n < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "porosity must lie in (0, 1), got {n}"
        )));
    }
    if !(fluid.kf > 0.0 && fluid.mu_f > 0.0 && fluid.rho_f > 0.0) {
        return Err(Error::InvalidArgument(
            "fluid Kf, mu_f and rho_f must be > 0".into(),
        ));
    }
    if !(k_f >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "permeability must be >= 0, got {k_f}"
        )));
    }
    let kt = solid.e / (3.0 * (1.0 - 2.0 * solid.nu));
    let (alpha, grain) = match solid.ks {
        Some(ks) => (1.0 - kt / ks, 1.0 / ks),
        None => (1.0, 0.0),
    };
    Ok(MixtureProps {
        alpha,
        inv_qt: (alpha - n) * grain + n / fluid.kf,
        beta_t: (alpha - n) * solid.beta_s + n * fluid.beta_f,
        rho: (1.0 - n) * solid.rho_s + n * fluid.rho_f,
        rhoc_eff: (1.0 - n) * solid.rho_s * solid.c_s + n * fluid.rho_f * fluid.c_f,
        lambda_eff: (1.0 - n) * solid.lambda_s + n * fluid.lambda_f,
        k_f,
        n,
        d: elasticity_matrix(solid.e, solid.nu, mode),
        kt,
        mode,
        e: solid.e,
        nu: solid.nu,
        beta_s: solid.beta_s,
        gamma: thermal_modulus(solid, kt, mode),
        mobility: k_f / fluid.mu_f,
        rho_f: fluid.rho_f,
        rhoc_f: fluid.rho_f * fluid.c_f,
        f_t: solid.f_t,
    })
}

/// Coefficients for a dry solid (no pore fluid, no flow coupling).
pub fn derive_solid(solid: &SolidProps, mode: PlaneMode) -> Result<MixtureProps> {
    check_solid(solid)?;
    let kt = solid.e / (3.0 * (1.0 - 2.0 * solid.nu));
    Ok(MixtureProps {
        alpha: 0.0,
        inv_qt: 0.0,
        beta_t: 0.0,
        rho: solid.rho_s,
        rhoc_eff: solid.rho_s * solid.c_s,
        lambda_eff: solid.lambda_s,
        k_f: 0.0,
        n: 0.0,
        d: elasticity_matrix(solid.e, solid.nu, mode),
        kt,
        mode,
        e: solid.e,
        nu: solid.nu,
        beta_s: solid.beta_s,
        gamma: thermal_modulus(solid, kt, mode),
        mobility: 0.0,
        rho_f: 0.0,
        rhoc_f: 0.0,
        f_t: solid.f_t,
    })
}

impl MixtureProps {
    /// Linear thermal expansion coefficient.
    pub fn alpha_lin(&self) -> f64 {
        self.beta_s / 3.0
    }

    /// E′ for the J/K relation: E in plane stress, E/(1−ν²) in plane strain.
    pub fn e_prime(&self) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => self.e / (1.0 - self.nu * self.nu),
            PlaneMode::PlaneStress => self.e,
        }
    }
}

pub fn effective_stress(props: &MixtureProps, strain: [f64; 3], t: f64, t0: f64) -> [f64; 3] {
    let d = &props.d;
    let th = props.gamma * (t - t0);
    [
        d[0][0] * strain[0] + d[0][1] * strain[1] + d[0][2] * strain[2] - th,
        d[1][0] * strain[0] + d[1][1] * strain[1] + d[1][2] * strain[2] - th,
        d[2][0] * strain[0] + d[2][1] * strain[1] + d[2][2] * strain[2],
    ]
}

/// σ = σ' − α p m.
pub fn total_stress(sigma_eff: [f64; 3], p: f64, alpha: f64) -> [f64; 3] {
    [
        sigma_eff[0] - alpha * p,
        sigma_eff[1] - alpha * p,
        sigma_eff[2],
    ]
}

/// Darcy velocity (k/μ)(−∇p + ρ_f b).
pub fn darcy_velocity(props: &MixtureProps, grad_p: [f64; 2], body_force: [f64; 2]) -> [f64; 2] {
    let m = props.mobility;
    [
        m * (-grad_p[0] + props.rho_f * body_force[0]),
        m * (-grad_p[1] + props.rho_f * body_force[1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table5() -> (SolidProps, FluidProps) {
        (
            SolidProps {
                e: 1.6e9,
                nu: 0.33,
                rho_s: 2000.0,
                ks: Some(1e20),
                beta_s: 6.6e-6,
                lambda_s: 2.88,
                c_s: 1170.0,
                f_t: None,
                g_f: None,
            },
            FluidProps {
                rho_f: 1000.0,
                kf: 2e9,
                mu_f: 2e-3,
                beta_f: 0.0,
                lambda_f: 0.6,
                c_f: 4200.0,
            },
        )
    }

    #[test]
    fn mixture_averages() {
        let (s, f) = table5();
        let m = derive_mixture(&s, &f, 0.3, 1e-12, PlaneMode::PlaneStrain).unwrap();
        assert!((m.rho - 1700.0).abs() < 1e-12);
        assert!((m.lambda_eff - 2.196).abs() < 1e-12);
        assert!((m.alpha - 1.0).abs() < 1e-6);
        assert!((m.inv_qt - 0.3 / 2e9).abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_porosity() {
        let (s, f) = table5();
        assert!(derive_mixture(&s, &f, 1.0, 1e-12, PlaneMode::PlaneStrain).is_err());
        assert!(derive_mixture(&s, &f, 0.0, 1e-12, PlaneMode::PlaneStrain).is_err());
    }

    #[test]
    fn thermal_and_hooke_stress() {
        let (s, f) = table5();
        let m = derive_mixture(&s, &f, 0.3, 1e-12, PlaneMode::PlaneStrain).unwrap();
        assert_eq!(effective_stress(&m, [0.0; 3], 20.0, 20.0), [0.0; 3]);
        let sig = effective_stress(&m, [0.0; 3], 30.0, 20.0);
        let expect = -10.0 * s.beta_s * m.kt;
        assert!((sig[0] - expect).abs() < 1e-9 && (sig[1] - expect).abs() < 1e-9);
        let sig = effective_stress(&m, [1e-4, 0.0, 0.0], 0.0, 0.0);
        let d11 = s.e * (1.0 - s.nu) / ((1.0 + s.nu) * (1.0 - 2.0 * s.nu));
        assert!((sig[0] - d11 * 1e-4).abs() < 1e-6);
    }

    #[test]
    fn total_stress_convention() {
        assert_eq!(total_stress([0.0; 3], 1e6, 1.0), [-1e6, -1e6, 0.0]);
        assert_eq!(total_stress([1.0, 2.0, 3.0], 5.0, 0.0), [1.0, 2.0, 3.0]);
        assert_eq!(total_stress([1.0, 2.0, 3.0], 0.0, 1.0), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn darcy() {
        let (s, f) = table5();
        let m = derive_mixture(&s, &f, 0.3, 1e-12, PlaneMode::PlaneStrain).unwrap();
        let v = darcy_velocity(&m, [2e3, 0.0], [0.0, 0.0]);
        assert!((v[0] + 1e-6).abs() < 1e-18 && v[1] == 0.0);
        let g = [0.0, -9.81];
        let v = darcy_velocity(&m, [0.0, -9.81 * 1000.0], g);
        assert!(v[0].abs() < 1e-20 && v[1].abs() < 1e-20);
    }
}
