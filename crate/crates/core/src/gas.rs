//! Pointwise gas-dynamic algebra for p(rho) = rho^gamma / gamma.

use serde::{Deserialize, Serialize};

use crate::error::{EulerError, Result};

/// Densities at or below this are treated as vacuum in every quotient.
pub const VACUUM_FLOOR: f64 = 1e-300;

/// Largest adiabatic exponent accepted. The physical range tops out at 5/3,
/// but gamma = 2 (shallow water) is a useful test case.
pub const GAMMA_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    pub rho: f64,
    pub mom: f64,
}

impl GasState {
    pub fn new(rho: f64, mom: f64) -> Result<Self> {
        if !rho.is_finite() || !mom.is_finite() {
            return Err(EulerError::Domain(format!("non-finite state ({rho}, {mom})")));
        }
        if rho < 0.0 {
            return Err(EulerError::Domain(format!("negative density {rho}")));
        }
        if rho == 0.0 && mom != 0.0 {
            return Err(EulerError::Domain(format!("vacuum with momentum {mom}")));
        }
        Ok(Self { rho, mom })
    }

    pub const fn vacuum() -> Self {
        Self { rho: 0.0, mom: 0.0 }
    }

    pub fn from_velocity(rho: f64, v: f64) -> Self {
        if rho <= VACUUM_FLOOR {
            Self::vacuum()
        } else {
            Self { rho, mom: rho * v }
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho <= VACUUM_FLOOR
    }

    pub fn velocity(&self) -> f64 {
        if self.is_vacuum() {
            0.0
        } else {
            self.mom / self.rho
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    gamma: f64,
    theta: f64,
}

impl GasParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= GAMMA_MAX) {
            return Err(EulerError::Config(format!(
                "gamma must lie in (1, {GAMMA_MAX}], got {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            theta: (gamma - 1.0) / 2.0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// True for 1 < gamma <= 5/3, the range covered by the invariant-region theory.
    pub fn in_physical_range(&self) -> bool {
        self.gamma <= 5.0 / 3.0 + 1e-15
    }

    /// rho^theta, the sound speed.
    pub fn sound(&self, rho: f64) -> f64 {
        pow(rho, self.theta)
    }

    /// Pressure without the sign check; negative input is treated as vacuum.
    pub fn p(&self, rho: f64) -> f64 {
        pow(rho, self.gamma) / self.gamma
    }

    /// Density on a given invariant difference w - z >= 0.
    pub fn rho_from_width(&self, width: f64) -> f64 {
        pow(self.theta * width / 2.0, 1.0 / self.theta)
    }
}

/// x^e for x > 0, and 0 otherwise (all exponents used here are positive).
pub fn pow(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x.powf(e)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannPair {
    pub z: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub big_m: f64,
    pub eps: f64,
    pub kappa: f64,
    pub k: f64,
    pub alpha: f64,
    pub rho_bar: f64,
    pub eta_bar: f64,
}

pub fn pressure(rho: f64, p: &GasParams) -> Result<f64> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(EulerError::Domain(format!("pressure of density {rho}")));
    }
    Ok(p.p(rho))
}

pub fn invariants_of(u: &GasState, p: &GasParams) -> RiemannPair {
    if u.is_vacuum() {
        return RiemannPair { z: 0.0, w: 0.0 };
    }
    let v = u.mom / u.rho;
    let c = p.sound(u.rho) / p.theta;
    RiemannPair { z: v - c, w: v + c }
}

pub fn state_of(pair: &RiemannPair, p: &GasParams) -> Result<GasState> {
    if !(pair.w >= pair.z) {
        return Err(EulerError::Domain(format!("w = {} below z = {}", pair.w, pair.z)));
    }
    let rho = p.rho_from_width(pair.w - pair.z);
    Ok(GasState::from_velocity(rho, 0.5 * (pair.w + pair.z)))
}

pub fn eta_star(u: &GasState, p: &GasParams) -> f64 {
    if u.is_vacuum() {
        return 0.0;
    }
    0.5 * u.mom * u.mom / u.rho + pow(u.rho, p.gamma) / (p.gamma * (p.gamma - 1.0))
}

pub fn q_star(u: &GasState, p: &GasParams) -> f64 {
    if u.is_vacuum() {
        return 0.0;
    }
    let v = u.mom / u.rho;
    u.mom * (0.5 * v * v + pow(u.rho, p.gamma - 1.0) / (p.gamma - 1.0))
}

pub fn zeta(u: &GasState, c: &SchemeConstants, p: &GasParams) -> f64 {
    eta_star(u, p) - c.alpha * u.rho + c.k
}

pub fn v_weight(u: &GasState, c: &SchemeConstants, p: &GasParams) -> f64 {
    q_star(u, p) - c.alpha * u.mom
}

pub fn char_speeds(u: &GasState, p: &GasParams) -> (f64, f64) {
    if u.is_vacuum() {
        return (0.0, 0.0);
    }
    let v = u.mom / u.rho;
    let c = p.sound(u.rho);
    (v - c, v + c)
}

/// Source terms of the shifted invariants. `f_moment` is the running
/// integral of F*m from the left wall to the point.
pub fn g_sources(u: &GasState, k: f64, alpha: f64, f_at_point: f64, f_moment: f64, p: &GasParams) -> (f64, f64) {
    let forcing = f_at_point - f_moment;
    if u.is_vacuum() {
        return (forcing, forcing);
    }
    let g = p.gamma;
    let th = p.theta;
    let rho = u.rho;
    let v = u.mom / rho;
    let (l1, l2) = char_speeds(u, p);
    let rho_th1 = pow(rho, th + 1.0);
    let internal = pow(rho, g + th) / (g * (g - 1.0));
    let flux = pow(rho, g) * v / g;
    let kinetic = 0.5 * rho_th1 * v * v;
    let g1 = -k * l1 + internal + flux + kinetic - alpha * rho_th1 + forcing;
    let g2 = -k * l2 - internal + flux - kinetic + alpha * rho_th1 + forcing;
    (g1, g2)
}

/// Largest admissible eps for a given gamma: 2(gamma-1)/(gamma+1).
pub fn eps_max(p: &GasParams) -> f64 {
    2.0 * (p.gamma - 1.0) / (p.gamma + 1.0)
}

pub fn derive_constants(
    big_m: f64,
    eps: f64,
    kappa: f64,
    rho_bar: f64,
    eta_bar: f64,
    p: &GasParams,
) -> Result<SchemeConstants> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(EulerError::Config(format!("M must be positive, got {big_m}")));
    }
    let top = eps_max(p);
    if !(eps > 0.0 && eps < top) {
        return Err(EulerError::Config(format!("eps must lie in (0, {top}), got {eps}")));
    }
    if !(kappa >= 0.0) {
        return Err(EulerError::Config(format!("kappa must be >= 0, got {kappa}")));
    }
    if !(rho_bar > 0.0) {
        return Err(EulerError::Config(format!(
            "total mass must be positive, got {rho_bar}"
        )));
    }
    if !(eta_bar >= 0.0) {
        return Err(EulerError::Config(format!("total energy must be >= 0, got {eta_bar}")));
    }
    let k = big_m.powf(top - eps);
    Ok(SchemeConstants {
        big_m,
        eps,
        kappa,
        k,
        alpha: (k + eta_bar + 1.0) / rho_bar,
        rho_bar,
        eta_bar,
    })
}

/// d^T Hess(eta_*)(u) d for d = (d_rho, d_mom).
pub fn hessian_form(u: &GasState, d_rho: f64, d_mom: f64, p: &GasParams) -> f64 {
    if u.is_vacuum() {
        return 0.0;
    }
    let v = u.mom / u.rho;
    let a = d_mom - v * d_rho;
    a * a / u.rho + pow(u.rho, p.gamma - 2.0) * d_rho * d_rho
}

/// Gradient of eta_* in (rho, m); zero at vacuum.
pub fn eta_gradient(u: &GasState, p: &GasParams) -> (f64, f64) {
    if u.is_vacuum() {
        return (0.0, 0.0);
    }
    let v = u.mom / u.rho;
    (-0.5 * v * v + pow(u.rho, p.gamma - 1.0) / (p.gamma - 1.0), v)
}

/// Momentum flux m^2/rho + p(rho).
pub fn momentum_flux(u: &GasState, p: &GasParams) -> f64 {
    if u.is_vacuum() {
        return 0.0;
    }
    u.mom * u.mom / u.rho + p.p(u.rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> GasParams {
        GasParams::new(2.0).unwrap()
    }

    #[test]
    fn pressure_examples() {
        assert_eq!(pressure(0.0, &g2()).unwrap(), 0.0);
        assert_eq!(pressure(1.0, &g2()).unwrap(), 0.5);
        assert!(pressure(-1.0, &g2()).is_err());
    }

    #[test]
    fn invariants_at_rest_and_vacuum() {
        let pr = invariants_of(&GasState::new(1.0, 0.0).unwrap(), &g2());
        assert_eq!((pr.z, pr.w), (-2.0, 2.0));
        let vac = invariants_of(&GasState::vacuum(), &g2());
        assert_eq!((vac.z, vac.w), (0.0, 0.0));
        let u = state_of(&RiemannPair { z: -2.0, w: 2.0 }, &g2()).unwrap();
        assert_eq!((u.rho, u.mom), (1.0, 0.0));
        let u = state_of(&RiemannPair { z: 0.3, w: 0.3 }, &g2()).unwrap();
        assert_eq!((u.rho, u.mom), (0.0, 0.0));
        assert!(state_of(&RiemannPair { z: 1.0, w: 0.0 }, &g2()).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(GasState::new(-1.0, 0.0).is_err());
        assert!(GasState::new(0.0, 1.0).is_err());
        assert!(GasState::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn gamma_range() {
        assert!(GasParams::new(1.0).is_err());
        assert!(GasParams::new(3.5).is_err());
        assert!(GasParams::new(1.4).unwrap().in_physical_range());
        assert!(!g2().in_physical_range());
        assert!(GasParams::new(5.0 / 3.0).unwrap().in_physical_range());
    }

    #[test]
    fn derive_constants_rejects_bad_eps() {
        let p = g2();
        assert!(derive_constants(10.0, 0.0, 0.0, 1.0, 0.5, &p).is_err());
        assert!(derive_constants(10.0, 2.0 / 3.0, 0.0, 1.0, 0.5, &p).is_err());
        assert!(derive_constants(0.0, 0.1, 0.0, 1.0, 0.5, &p).is_err());
        assert!(derive_constants(1.0, 0.1, 0.0, 0.0, 0.5, &p).is_err());
    }
}
