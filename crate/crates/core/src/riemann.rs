//! Exact Riemann solver for isentropic gas and the piecewise-constant
//! rarefaction fan used to approximate 1-waves.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{EulerError, Result};
use crate::gas::{self, GasParams, GasState, RiemannPair};
use crate::quad;

pub const SOLVER_TOL: f64 = 1e-12;
pub const SOLVER_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveKind {
    Rarefaction1,
    Shock1,
    Rarefaction2,
    Shock2,
    /// The side is vacuum; no wave of this family is present.
    Vacuum,
}

impl WaveKind {
    pub fn is_shock(self) -> bool {
        matches!(self, WaveKind::Shock1 | WaveKind::Shock2)
    }
}

impl fmt::Display for WaveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WaveKind::Rarefaction1 => "1-rarefaction",
            WaveKind::Shock1 => "1-shock",
            WaveKind::Rarefaction2 => "2-rarefaction",
            WaveKind::Shock2 => "2-shock",
            WaveKind::Vacuum => "vacuum",
        };
        f.write_str(s)
    }
}

/// Wave pattern of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// 1-rarefaction and 2-shock.
    Case1,
    /// 1-shock and 2-rarefaction.
    Case2,
    /// Two rarefactions.
    Case3,
    /// Two shocks.
    Case4,
    /// A vacuum region appears between the waves or on one side.
    Vacuum,
    /// Identical states.
    Degenerate,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pattern::Case1 => "Case 1 (1-rarefaction, 2-shock)",
            Pattern::Case2 => "Case 2 (1-shock, 2-rarefaction)",
            Pattern::Case3 => "Case 3 (1-rarefaction, 2-rarefaction)",
            Pattern::Case4 => "Case 4 (1-shock, 2-shock)",
            Pattern::Vacuum => "vacuum",
            Pattern::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

/// Speed range of one wave: equal ends for a shock, head/tail for a fan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeeds {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannSolution {
    pub left: GasState,
    pub middle: GasState,
    pub right: GasState,
    pub wave1: WaveKind,
    pub wave2: WaveKind,
    pub speeds: [WaveSpeeds; 2],
    pub pattern: Pattern,
    pub iterations: usize,
}

impl RiemannSolution {
    /// Shock speed and the states on either side, for every shock present.
    pub fn shocks(&self) -> impl Iterator<Item = (f64, GasState, GasState)> + '_ {
        let first = (self.wave1 == WaveKind::Shock1).then_some((self.speeds[0].lo, self.left, self.middle));
        let second = (self.wave2 == WaveKind::Shock2).then_some((self.speeds[1].lo, self.middle, self.right));
        first.into_iter().chain(second)
    }

    /// Sum of entropy productions over the shocks.
    pub fn total_production(&self, p: &GasParams) -> f64 {
        self.shocks().map(|(s, l, r)| entropy_production(s, &l, &r, p)).sum()
    }

    pub fn min_speed(&self) -> f64 {
        self.speeds[0].lo
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds[1].hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanParams {
    pub alpha_fan: f64,
    pub beta: f64,
    pub delta: f64,
}

impl FanParams {
    /// Defaults: alpha = 0.75, beta = 0.05, delta at the middle of its interval.
    /// For gamma >= 2 the delta interval is empty and the midpoint is
    /// returned anyway; `validate` rejects it.
    pub fn default_for(p: &GasParams) -> Self {
        let top = 1.0 / (2.0 * p.theta());
        Self {
            alpha_fan: 0.75,
            beta: 0.05,
            delta: 0.5 * (1.0 + top),
        }
    }

    pub fn validate(&self, p: &GasParams) -> Result<()> {
        self.validate_partition(p)?;
        self.validate_delta(p)
    }

    /// The alpha/beta inequalities alone; these do not involve the vacuum rule.
    pub fn validate_partition(&self, p: &GasParams) -> Result<()> {
        let a = self.alpha_fan;
        let b = self.beta;
        let g = p.gamma();
        let bad = |m: String| Err(EulerError::Config(m));
        if !(a > 0.5 && a < 1.0) {
            return bad(format!("alpha_fan must lie in (1/2, 1), got {a}"));
        }
        if !(b >= 0.0) {
            return bad(format!("beta must be >= 0, got {b}"));
        }
        if !(0.5 + b / 2.0 < a && a < 1.0 - 2.0 * b) {
            return bad(format!(
                "need 1/2 + beta/2 < alpha_fan < 1 - 2 beta (alpha_fan={a}, beta={b})"
            ));
        }
        if !(b < 2.0 / (g + 5.0)) {
            return bad(format!("need beta < 2/(gamma+5), got {b}"));
        }
        if !((9.0 - 3.0 * g) * b / 2.0 < a) {
            return bad("need (9 - 3 gamma) beta / 2 < alpha_fan".to_string());
        }
        Ok(())
    }

    pub fn validate_delta(&self, p: &GasParams) -> Result<()> {
        let top = 1.0 / (2.0 * p.theta());
        if !(self.delta > 1.0 && self.delta < top) {
            return Err(EulerError::Config(format!(
                "vacuum exponent delta must lie in (1, {top}) for gamma = {}, got {}",
                p.gamma(),
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanPartition {
    pub p: usize,
    pub z_stars: Vec<f64>,
    pub w_left: f64,
    pub speeds: Vec<f64>,
}

/// (p(rho) - p(rho0)) / (rho - rho0), accurate across the diagonal.
fn pressure_slope(rho: f64, rho0: f64, p: &GasParams) -> f64 {
    let g = p.gamma();
    let h = (rho - rho0) / rho0;
    let base = gas::pow(rho0, g - 1.0) / g;
    if h == 0.0 {
        return base * g;
    }
    if h == -1.0 {
        // rho = 0
        return base;
    }
    base * (g * h.ln_1p()).exp_m1() / h
}

pub fn shock_speed_fn(rho: f64, rho0: f64, p: &GasParams) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(EulerError::Domain(format!(
            "reference density must be positive, got {rho0}"
        )));
    }
    if !(rho >= 0.0) {
        return Err(EulerError::Domain(format!("negative density {rho}")));
    }
    Ok(shock_speed(rho, rho0, p))
}

fn shock_speed(rho: f64, rho0: f64, p: &GasParams) -> f64 {
    (rho / rho0 * pressure_slope(rho, rho0, p)).max(0.0).sqrt()
}

/// Velocity reached from `(rho0, v0)` along the family-1 wave curve at density `rho`.
fn curve1(rho: f64, rho0: f64, v0: f64, p: &GasParams) -> f64 {
    if rho <= rho0 {
        v0 - (p.sound(rho) - p.sound(rho0)) / p.theta()
    } else {
        v0 - (rho - rho0) * (pressure_slope(rho, rho0, p) / (rho * rho0)).sqrt()
    }
}

/// Family-2 curve through the right state, read backwards.
fn curve2(rho: f64, rho0: f64, v0: f64, p: &GasParams) -> f64 {
    if rho <= rho0 {
        v0 + (p.sound(rho) - p.sound(rho0)) / p.theta()
    } else {
        v0 + (rho - rho0) * (pressure_slope(rho, rho0, p) / (rho * rho0)).sqrt()
    }
}

pub fn solve_riemann(ul: &GasState, ur: &GasState, p: &GasParams) -> Result<RiemannSolution> {
    let left = *ul;
    let right = *ur;
    if left == right {
        let (l1, l2) = gas::char_speeds(&left, p);
        let (w1, w2) = if left.is_vacuum() {
            (WaveKind::Vacuum, WaveKind::Vacuum)
        } else {
            (WaveKind::Rarefaction1, WaveKind::Rarefaction2)
        };
        return Ok(RiemannSolution {
            left,
            middle: left,
            right,
            wave1: w1,
            wave2: w2,
            speeds: [WaveSpeeds { lo: l1, hi: l1 }, WaveSpeeds { lo: l2, hi: l2 }],
            pattern: Pattern::Degenerate,
            iterations: 0,
        });
    }
    if left.is_vacuum() || right.is_vacuum() {
        return Ok(one_sided_vacuum(left, right, p));
    }
    let th = p.theta();
    let vl = left.velocity();
    let vr = right.velocity();
    let wl = vl + p.sound(left.rho) / th;
    let zr = vr - p.sound(right.rho) / th;
    if wl <= zr {
        return Ok(RiemannSolution {
            left,
            middle: GasState::vacuum(),
            right,
            wave1: WaveKind::Rarefaction1,
            wave2: WaveKind::Rarefaction2,
            speeds: [
                WaveSpeeds {
                    lo: vl - p.sound(left.rho),
                    hi: wl,
                },
                WaveSpeeds {
                    lo: zr,
                    hi: vr + p.sound(right.rho),
                },
            ],
            pattern: Pattern::Vacuum,
            iterations: 0,
        });
    }

    let mismatch = |r: f64| curve1(r, left.rho, vl, p) - curve2(r, right.rho, vr, p);
    let scale = 1.0 + vl.abs() + vr.abs() + p.sound(left.rho) / th + p.sound(right.rho) / th;

    // mismatch(0) = wl - zr > 0 and mismatch decreases in rho.
    let mut lo = 0.0;
    let mut f_lo = wl - zr;
    let mut hi = left.rho.max(right.rho);
    let mut f_hi = mismatch(hi);
    let mut iterations = 0;
    while f_hi > 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = mismatch(hi);
        iterations += 1;
        if iterations > SOLVER_MAX_ITER || !hi.is_finite() {
            return Err(EulerError::NoConvergence { iterations, lo, hi });
        }
    }

    // Illinois regula falsi with a bisection guard.
    let mut side = 0i8;
    let mut root = hi;
    let mut f_root = f_hi;
    while iterations < SOLVER_MAX_ITER {
        iterations += 1;
        let mut cand = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(cand > lo && cand < hi) {
            cand = 0.5 * (lo + hi);
        }
        let f_c = mismatch(cand);
        root = cand;
        f_root = f_c;
        if f_c == 0.0 || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if f_c > 0.0 {
            lo = cand;
            f_lo = f_c;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = cand;
            f_hi = f_c;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if f_c.abs() <= 1e-3 * f64::EPSILON * scale {
            break;
        }
    }
    if !(f_root.abs() <= SOLVER_TOL * scale) {
        return Err(EulerError::NoConvergence { iterations, lo, hi });
    }

    let rho_m = root;
    let v_m = curve1(rho_m, left.rho, vl, p);
    let middle = GasState::from_velocity(rho_m, v_m);

    let (wave1, s1) = if rho_m <= left.rho {
        (
            WaveKind::Rarefaction1,
            WaveSpeeds {
                lo: vl - p.sound(left.rho),
                hi: v_m - p.sound(rho_m),
            },
        )
    } else {
        let s = vl - shock_speed(rho_m, left.rho, p);
        (WaveKind::Shock1, WaveSpeeds { lo: s, hi: s })
    };
    let (wave2, s2) = if rho_m <= right.rho {
        (
            WaveKind::Rarefaction2,
            WaveSpeeds {
                lo: v_m + p.sound(rho_m),
                hi: vr + p.sound(right.rho),
            },
        )
    } else {
        let s = vr + shock_speed(rho_m, right.rho, p);
        (WaveKind::Shock2, WaveSpeeds { lo: s, hi: s })
    };
    let pattern = match (wave1, wave2) {
        (WaveKind::Rarefaction1, WaveKind::Shock2) => Pattern::Case1,
        (WaveKind::Shock1, WaveKind::Rarefaction2) => Pattern::Case2,
        (WaveKind::Rarefaction1, WaveKind::Rarefaction2) => Pattern::Case3,
        _ => Pattern::Case4,
    };
    Ok(RiemannSolution {
        left,
        middle,
        right,
        wave1,
        wave2,
        speeds: [s1, s2],
        pattern,
        iterations,
    })
}

// Exactly one side is vacuum: a single rarefaction runs into it.
fn one_sided_vacuum(left: GasState, right: GasState, p: &GasParams) -> RiemannSolution {
    let th = p.theta();
    if left.is_vacuum() {
        let vr = right.velocity();
        let zr = vr - p.sound(right.rho) / th;
        RiemannSolution {
            left: GasState::vacuum(),
            middle: GasState::vacuum(),
            right,
            wave1: WaveKind::Vacuum,
            wave2: WaveKind::Rarefaction2,
            speeds: [
                WaveSpeeds { lo: zr, hi: zr },
                WaveSpeeds {
                    lo: zr,
                    hi: vr + p.sound(right.rho),
                },
            ],
            pattern: Pattern::Vacuum,
            iterations: 0,
        }
    } else {
        let vl = left.velocity();
        let wl = vl + p.sound(left.rho) / th;
        RiemannSolution {
            left,
            middle: GasState::vacuum(),
            right: GasState::vacuum(),
            wave1: WaveKind::Rarefaction1,
            wave2: WaveKind::Vacuum,
            speeds: [
                WaveSpeeds {
                    lo: vl - p.sound(left.rho),
                    hi: wl,
                },
                WaveSpeeds { lo: wl, hi: wl },
            ],
            pattern: Pattern::Vacuum,
            iterations: 0,
        }
    }
}

/// Relative residuals of both jump conditions across a discontinuity.
pub fn rankine_hugoniot_residual(sigma: f64, ul: &GasState, ur: &GasState, p: &GasParams) -> (f64, f64) {
    let fl = gas::momentum_flux(ul, p);
    let fr = gas::momentum_flux(ur, p);
    let mass = (sigma * (ur.rho - ul.rho) - (ur.mom - ul.mom)).abs();
    let mom = (sigma * (ur.mom - ul.mom) - (fr - fl)).abs();
    let mass_scale = (sigma * ur.rho).abs() + (sigma * ul.rho).abs() + ur.mom.abs() + ul.mom.abs();
    let mom_scale = (sigma * ur.mom).abs() + (sigma * ul.mom).abs() + fr.abs() + fl.abs();
    (
        mass / mass_scale.max(f64::MIN_POSITIVE),
        mom / mom_scale.max(f64::MIN_POSITIVE),
    )
}

pub fn entropy_production(sigma: f64, ul: &GasState, ur: &GasState, p: &GasParams) -> f64 {
    sigma * (gas::eta_star(ur, p) - gas::eta_star(ul, p)) - (gas::q_star(ur, p) - gas::q_star(ul, p))
}

/// State inside the 1-fan on ray xi (w fixed at `w_left`).
fn fan1_state(xi: f64, w_left: f64, p: &GasParams) -> GasState {
    let th = p.theta();
    let c = th * (w_left - xi) / (th + 1.0);
    let rho = gas::pow(c, 1.0 / th);
    GasState::from_velocity(rho, xi + c)
}

/// State inside the 2-fan on ray xi (z fixed at `z_right`).
fn fan2_state(xi: f64, z_right: f64, p: &GasParams) -> GasState {
    let th = p.theta();
    let c = th * (xi - z_right) / (th + 1.0);
    let rho = gas::pow(c, 1.0 / th);
    GasState::from_velocity(rho, xi - c)
}

pub fn sample_riemann(sol: &RiemannSolution, xi: f64, p: &GasParams) -> GasState {
    match region_at(sol, xi) {
        Region::Left => sol.left,
        Region::Fan1 => fan1_state(xi, gas::invariants_of(&sol.left, p).w, p),
        Region::Middle => sol.middle,
        Region::Fan2 => fan2_state(xi, gas::invariants_of(&sol.right, p).z, p),
        Region::Right => sol.right,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Left,
    Fan1,
    Middle,
    Fan2,
    Right,
}

fn region_at(sol: &RiemannSolution, xi: f64) -> Region {
    let [s1, s2] = sol.speeds;
    match sol.wave1 {
        WaveKind::Rarefaction1 if xi <= s1.lo => return Region::Left,
        WaveKind::Rarefaction1 if xi < s1.hi => return Region::Fan1,
        WaveKind::Shock1 | WaveKind::Vacuum if xi < s1.lo => return Region::Left,
        _ => {}
    }
    match sol.wave2 {
        WaveKind::Rarefaction2 if xi >= s2.hi => Region::Right,
        WaveKind::Rarefaction2 if xi > s2.lo => Region::Fan2,
        WaveKind::Shock2 | WaveKind::Vacuum if xi >= s2.lo => Region::Right,
        _ => Region::Middle,
    }
}

/// Quadrature nodes `(x, weight, state)` for the solution at time `t > 0`
/// restricted to `[a, b]`, with the discontinuity at x = 0. Constant pieces
/// get one node; fans get 16-point Gauss-Legendre nodes.
pub fn quadrature_nodes(sol: &RiemannSolution, a: f64, b: f64, t: f64, p: &GasParams) -> Vec<(f64, f64, GasState)> {
    let [s1, s2] = sol.speeds;
    let mut cuts = vec![a];
    for s in [s1.lo, s1.hi, s2.lo, s2.hi] {
        let x = s * t;
        if x > a && x < b {
            cuts.push(x);
        }
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for piece in cuts.windows(2) {
        let (l, r) = (piece[0], piece[1]);
        if r <= l {
            continue;
        }
        let mid = 0.5 * (l + r);
        match region_at(sol, mid / t) {
            Region::Fan1 | Region::Fan2 => {
                for (x, w) in quad::nodes(l, r) {
                    out.push((x, w, sample_riemann(sol, x / t, p)));
                }
            }
            _ => out.push((mid, r - l, sample_riemann(sol, mid / t, p))),
        }
    }
    out
}

pub fn fan_partition(ul: &GasState, z_m: f64, dx: f64, fp: &FanParams, p: &GasParams) -> Result<FanPartition> {
    let RiemannPair { z: z_l, w: w_l } = gas::invariants_of(ul, p);
    if !(z_m >= z_l) {
        return Err(EulerError::Domain(format!("z_M = {z_m} below z_L = {z_l}")));
    }
    if !(z_m < w_l) {
        return Err(EulerError::Domain(format!(
            "fan end z_M = {z_m} reaches vacuum (w_L = {w_l})"
        )));
    }
    let h = dx.powf(fp.alpha_fan);
    let count = (((z_m - z_l) / h).floor() as usize + 1).max(2);
    let mut z_stars: Vec<f64> = (0..count - 1).map(|i| z_l + i as f64 * h).collect();
    z_stars.push(z_m);
    let speeds = z_stars
        .windows(2)
        .map(|pair| {
            let v = 0.5 * (w_l + pair[0]);
            let rho_i = p.rho_from_width(w_l - pair[0]);
            let rho_next = p.rho_from_width(w_l - pair[1]);
            v - shock_speed(rho_next, rho_i, p)
        })
        .collect();
    Ok(FanPartition {
        p: count,
        z_stars,
        w_left: w_l,
        speeds,
    })
}
