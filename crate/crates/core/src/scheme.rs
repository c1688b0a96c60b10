//! The staggered Lax-Friedrichs recurrence with its R/S corrections,
//! reflecting walls, forcing, and optional cutoff stabilisation.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundState, CutoffKind};
use crate::error::{EulerError, Result};
use crate::exec::Execution;
use crate::gas::{self, GasParams, GasState, SchemeConstants};
use crate::mesh::{ForcingField, GridSpec, StaggeredProfile};
use crate::riemann::{self, FanParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The recurrence as written; negative densities are clamped and counted.
    #[default]
    Raw,
    /// Recurrence followed by the vacuum rule and the invariant clamp.
    Cutoff,
}

#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub gas: GasParams,
    pub grid: GridSpec,
    pub constants: SchemeConstants,
    pub fan: FanParams,
    pub forcing: ForcingField,
    pub mode: Mode,
    pub exec: Execution,
    /// Abort after this many negative-density clamps in one run.
    pub max_clamp_events: usize,
}

impl StepperConfig {
    pub fn new(gas: GasParams, grid: GridSpec, constants: SchemeConstants, forcing: ForcingField, mode: Mode) -> Self {
        Self {
            fan: FanParams::default_for(&gas),
            gas,
            grid,
            constants,
            forcing,
            mode,
            exec: Execution::default(),
            max_clamp_events: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::Cutoff => self.fan.validate(&self.gas),
            Mode::Raw => self.fan.validate_partition(&self.gas),
        }
    }
}

/// Per-slot coefficients at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub g: f64,
    pub h: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEvent {
    pub j: usize,
    pub kind: CutoffKind,
    pub excursion: f64,
}

/// Everything the bound update needs from one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepArtifacts {
    pub n_next: usize,
    pub dt: f64,
    /// Recurrence output before any cutoff, on level n+1.
    pub averaged: StaggeredProfile,
    /// Entropy production rate of the shocks inside each new cell.
    pub production: Vec<f64>,
    /// Jensen gap of each new cell.
    pub jensen: Vec<f64>,
    /// Weighted Taylor remainders per cell, before the prefactor.
    pub remainder: Vec<f64>,
    /// I functional of `averaged`.
    pub i_next: Vec<f64>,
    pub cutoff_events: Vec<CutoffEvent>,
    /// Mesh indices whose density came out negative and was reset to vacuum.
    pub clamp_events: Vec<usize>,
    /// Largest distance of `averaged` outside the invariant limits.
    pub excursion: f64,
}

pub struct StepOutput {
    pub profile: StaggeredProfile,
    pub artifacts: StepArtifacts,
    pub bound: Option<BoundState>,
}

/// Momentum-flux-weighted increment between slots k and k+1 of a level.
pub fn xi_k(profile: &StaggeredProfile, slot: usize, grid: &GridSpec, p: &GasParams) -> f64 {
    let a = &profile.values[slot];
    let b = &profile.values[slot + 1];
    (b.mom + a.mom) * grid.dx - (2.0 * grid.dt / 3.0) * (gas::momentum_flux(b, p) - gas::momentum_flux(a, p))
}

/// Prefix sums sum_{k < i} F(x_{j_k + 1}, t_n) xi_k for every slot i.
pub fn forcing_moments(profile: &StaggeredProfile, forcing: &ForcingField, grid: &GridSpec, p: &GasParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(profile.len());
    let mut acc = 0.0;
    out.push(0.0);
    if forcing.is_zero() {
        out.resize(profile.len(), 0.0);
        return out;
    }
    let t = grid.t(profile.n);
    for slot in 0..profile.len() - 1 {
        let x_mid = grid.x(profile.j_of(slot) + 1);
        acc += forcing.eval(x_mid, t) * xi_k(profile, slot, grid, p);
        out.push(acc);
    }
    out
}

/// G and H of one slot given its forcing moment.
pub fn gh_terms(u: &GasState, f_here: f64, moment: f64, c: &SchemeConstants, p: &GasParams) -> (f64, f64) {
    gas::g_sources(u, c.k, c.alpha, f_here, moment, p)
}

/// R and S corrections of one slot.
pub fn rs_corrections(u: &GasState, g: f64, h: f64, c: &SchemeConstants, grid: &GridSpec, p: &GasParams) -> (f64, f64) {
    if u.is_vacuum() {
        return (0.0, 0.0);
    }
    let pref = grid.dt * grid.dt / (8.0 * grid.dx);
    let rho = u.rho;
    let v = u.mom / rho;
    let sound = p.sound(rho);
    let r = pref * (rho * (h + g) + u.mom / sound * (h - g));
    let s = grid.dx / 4.0 * rho * gas::zeta(u, c, p)
        + pref
            * (2.0 * rho * (h + g + 2.0 * gas::v_weight(u, c, p))
                + (rho * v * v + gas::pow(rho, p.gamma())) / sound * (h - g)
                - 2.0 * u.mom);
    (r, s)
}

/// G, H, R, S for every slot of a level. R vanishes on the wall half-cells.
pub fn coefficients(profile: &StaggeredProfile, cfg: &StepperConfig) -> Vec<Coefficients> {
    let grid = &cfg.grid;
    let p = &cfg.gas;
    let c = &cfg.constants;
    let t = grid.t(profile.n);
    let moments = forcing_moments(profile, &cfg.forcing, grid, p);
    cfg.exec.map_indexed(profile.len(), |i| {
        let u = &profile.values[i];
        let f_here = cfg.forcing.eval(grid.x(profile.j_of(i)), t);
        let (g, h) = gh_terms(u, f_here, moments[i], c, p);
        let (mut r, s) = rs_corrections(u, g, h, c, grid, p);
        if profile.is_wall_slot(i) {
            r = 0.0;
        }
        Coefficients { g, h, r, s }
    })
}

#[derive(Clone, Copy)]
struct Neighbour {
    u: GasState,
    flux: f64,
    r: f64,
    s: f64,
}

impl Neighbour {
    fn mirrored(self) -> Self {
        Neighbour {
            u: GasState {
                rho: self.u.rho,
                mom: -self.u.mom,
            },
            flux: self.flux,
            r: -self.r,
            s: self.s,
        }
    }
}

/// Old-level slots feeding new slot `i` of level n+1 (None = wall ghost).
fn feeders(old_odd: bool, i: usize, old_len: usize) -> (Option<usize>, Option<usize>) {
    if old_odd {
        (Some(i), Some(i + 1))
    } else {
        let left = i.checked_sub(1);
        let right = (i < old_len).then_some(i);
        (left, right)
    }
}

/// One application of the recurrence. With a bound present, the step also
/// produces the accumulator artifacts and the updated bound; cutoff mode
/// requires it.
pub fn step(profile: &StaggeredProfile, cfg: &StepperConfig, bound: Option<&BoundState>) -> Result<StepOutput> {
    let grid = &cfg.grid;
    let p = &cfg.gas;
    profile.check_grid(grid)?;
    if cfg.mode == Mode::Cutoff && bound.is_none() {
        return Err(EulerError::Config("cutoff mode needs a bound state".into()));
    }
    let n = profile.n;
    let t = grid.t(n);
    let lam = grid.lambda();
    let coef = coefficients(profile, cfg);
    let neighbour = |k: usize| Neighbour {
        u: profile.values[k],
        flux: gas::momentum_flux(&profile.values[k], p),
        r: coef[k].r,
        s: coef[k].s,
    };
    let old_odd = profile.odd_level();
    let old_len = profile.len();
    let new_len = grid.level_len(n + 1);
    let next_odd = !old_odd;

    let raw: Vec<(GasState, bool)> = cfg.exec.map_indexed(new_len, |i| {
        let (li, ri) = feeders(old_odd, i, old_len);
        let left = li.map(neighbour).unwrap_or_else(|| neighbour(ri.unwrap()).mirrored());
        let right = ri.map(neighbour).unwrap_or_else(|| neighbour(li.unwrap()).mirrored());
        let j = if next_odd { 2 * i } else { 2 * i + 1 };
        let rho = 0.5 * (left.u.rho + right.u.rho) - 0.5 * lam * (right.u.mom - left.u.mom) - right.r + left.r;
        let wall = next_odd && (i == 0 || i + 1 == new_len);
        let mom = if wall {
            0.0
        } else {
            0.5 * (left.u.mom + right.u.mom) - 0.5 * lam * (right.flux - left.flux) - right.s
                + left.s
                + grid.dt * 0.5 * (left.u.rho + right.u.rho) * cfg.forcing.eval(grid.x(j), t)
        };
        if rho < 0.0 {
            (GasState::vacuum(), true)
        } else if rho <= gas::VACUUM_FLOOR {
            (GasState::vacuum(), false)
        } else {
            (GasState { rho, mom }, false)
        }
    });
    let mut clamp_events = Vec::new();
    let mut values = Vec::with_capacity(new_len);
    for (i, (u, clamped)) in raw.into_iter().enumerate() {
        let j = if next_odd { 2 * i } else { 2 * i + 1 };
        if !u.rho.is_finite() || !u.mom.is_finite() {
            return Err(EulerError::NumericalAbort {
                step: n + 1,
                reason: format!("non-finite state at j = {j}"),
            });
        }
        if clamped {
            clamp_events.push(j);
        }
        values.push(u);
    }
    let averaged = StaggeredProfile {
        n: n + 1,
        nx: grid.nx,
        values,
    };

    let Some(bound) = bound else {
        return Ok(StepOutput {
            profile: averaged.clone(),
            artifacts: StepArtifacts {
                n_next: n + 1,
                dt: grid.dt,
                averaged,
                production: Vec::new(),
                jensen: Vec::new(),
                remainder: Vec::new(),
                i_next: Vec::new(),
                cutoff_events: Vec::new(),
                clamp_events,
                excursion: 0.0,
            },
            bound: None,
        });
    };

    let budget: Vec<Result<(f64, f64, f64)>> = cfg.exec.map_indexed(new_len, |i| {
        let (li, ri) = feeders(old_odd, i, old_len);
        let left = li
            .map(|k| profile.values[k])
            .unwrap_or_else(|| mirror(profile.values[ri.unwrap()]));
        let right = ri
            .map(|k| profile.values[k])
            .unwrap_or_else(|| mirror(profile.values[li.unwrap()]));
        cell_budget(&left, &right, &averaged.values[i], li.is_some(), ri.is_some(), grid, p)
    });
    let mut production = Vec::with_capacity(new_len);
    let mut jensen = Vec::with_capacity(new_len);
    let mut remainder = Vec::with_capacity(new_len);
    for b in budget {
        let (a, j, r) = b?;
        production.push(a);
        jensen.push(j);
        remainder.push(r);
    }
    let i_next = bounds::i_functional(&averaged, &cfg.constants, grid, p);
    let mut artifacts = StepArtifacts {
        n_next: n + 1,
        dt: grid.dt,
        averaged,
        production,
        jensen,
        remainder,
        i_next,
        cutoff_events: Vec::new(),
        clamp_events,
        excursion: 0.0,
    };
    let next_bound = bounds::l_update(bound, &artifacts)?;
    let mut worst = 0.0f64;
    for i in 0..new_len {
        let (lo, hi) = next_bound.limits(i);
        worst = worst.max(bounds::excursion(&artifacts.averaged.values[i], lo, hi, p));
    }
    artifacts.excursion = worst;

    let profile_next = match cfg.mode {
        Mode::Raw => artifacts.averaged.clone(),
        Mode::Cutoff => {
            let mut out = artifacts.averaged.clone();
            for (i, slot) in out.values.iter_mut().enumerate() {
                let wall = artifacts.averaged.is_wall_slot(i);
                let res = bounds::cutoff(slot, &next_bound, next_bound.i_values[i], wall, grid, &cfg.fan, p);
                if res.kind != CutoffKind::Unchanged {
                    artifacts.cutoff_events.push(CutoffEvent {
                        j: artifacts.averaged.j_of(i),
                        kind: res.kind,
                        excursion: res.excursion,
                    });
                }
                *slot = res.state;
            }
            out
        }
    };
    Ok(StepOutput {
        profile: profile_next,
        artifacts,
        bound: Some(next_bound),
    })
}

fn mirror(u: GasState) -> GasState {
    GasState {
        rho: u.rho,
        mom: -u.mom,
    }
}

// Shock production rate, Jensen gap and weighted remainder of one new cell.
// The Riemann problem sits at the cell centre; a wall cell keeps only the
// half on its side of the wall.
fn cell_budget(
    left: &GasState,
    right: &GasState,
    center: &GasState,
    has_left: bool,
    has_right: bool,
    grid: &GridSpec,
    p: &GasParams,
) -> Result<(f64, f64, f64)> {
    let dx = grid.dx;
    let (a, b) = match (has_left, has_right) {
        (false, _) => (0.0, dx),
        (_, false) => (-dx, 0.0),
        _ => (-dx, dx),
    };
    let (production, jensen) = if left == right {
        (0.0, 0.0)
    } else {
        let sol = riemann::solve_riemann(left, right, p)?;
        let production: f64 = sol
            .shocks()
            .filter(|(s, _, _)| match (has_left, has_right) {
                (false, _) => *s > 0.0,
                (_, false) => *s < 0.0,
                _ => true,
            })
            .map(|(s, l, r)| riemann::entropy_production(s, &l, &r, p))
            .sum();
        let nodes = riemann::quadrature_nodes(&sol, a, b, grid.dt, p);
        let width = b - a;
        let (mut rho, mut mom, mut eta) = (0.0, 0.0, 0.0);
        for (_, w, u) in &nodes {
            rho += w * u.rho;
            mom += w * u.mom;
            eta += w * gas::eta_star(u, p);
        }
        let mean = GasState::from_velocity(rho / width, if rho > 0.0 { mom / rho } else { 0.0 });
        (production, eta - width * gas::eta_star(&mean, p))
    };
    let rem_left = if has_left {
        0.75 * dx * bounds::taylor_remainder(left, center, p)
    } else {
        0.0
    };
    let rem_right = if has_right {
        0.25 * dx * bounds::taylor_remainder(right, center, p)
    } else {
        0.0
    };
    Ok((production, jensen, rem_left + rem_right))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub clamp_events: usize,
    pub cutoff_events: usize,
    pub excursion: f64,
}

pub struct RunResult {
    pub final_profile: StaggeredProfile,
    pub trajectory: Vec<StaggeredProfile>,
    pub bound: Option<BoundState>,
    pub records: Vec<RunRecord>,
}

/// Run `periods` unit periods from `initial`, keeping every `stride`-th
/// level (stride 0 keeps only the ends). Bounds are tracked when
/// `track_bounds` is set or the mode needs them.
pub fn run(
    initial: &StaggeredProfile,
    cfg: &StepperConfig,
    periods: usize,
    stride: usize,
    track_bounds: bool,
) -> Result<RunResult> {
    let grid = &cfg.grid;
    initial.check_grid(grid)?;
    let track = track_bounds || cfg.mode == Mode::Cutoff;
    let mut bound = track.then(|| BoundState::new(initial, &cfg.constants, grid, &cfg.gas));
    let total = periods * grid.steps_per_period();
    let mut current = initial.clone();
    let mut trajectory = vec![initial.clone()];
    let mut records = Vec::with_capacity(if track { total } else { 0 });
    let mut clamps = 0usize;
    for k in 0..total {
        let out = step(&current, cfg, bound.as_ref())?;
        clamps += out.artifacts.clamp_events.len();
        if clamps > cfg.max_clamp_events {
            return Err(EulerError::NumericalAbort {
                step: current.n + 1,
                reason: format!(
                    "{clamps} negative-density clamps exceed the limit {}",
                    cfg.max_clamp_events
                ),
            });
        }
        if track {
            records.push(RunRecord {
                n: out.artifacts.n_next,
                clamp_events: out.artifacts.clamp_events.len(),
                cutoff_events: out.artifacts.cutoff_events.len(),
                excursion: out.artifacts.excursion,
            });
        }
        bound = out.bound;
        current = out.profile;
        let last = k + 1 == total;
        if last || (stride > 0 && (k + 1) % stride == 0) {
            trajectory.push(current.clone());
        }
    }
    Ok(RunResult {
        final_profile: current,
        trajectory,
        bound,
        records,
    })
}

/// One unit period with bounds tracked.
pub fn run_period(initial: &StaggeredProfile, cfg: &StepperConfig, stride: usize) -> Result<RunResult> {
    run(initial, cfg, 1, stride, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::derive_constants;
    use crate::mesh::build_grid;

    fn steady(nx: usize) -> (StepperConfig, StaggeredProfile) {
        let p = GasParams::new(2.0).unwrap();
        let grid = build_grid(nx, 10.0).unwrap();
        let u = GasState::new(1.0, 0.0).unwrap();
        let prof = StaggeredProfile::uniform(0, nx, u);
        let c = derive_constants(10.0, 0.1, 0.0, prof.mass(&grid), prof.energy(&grid, &p), &p).unwrap();
        (StepperConfig::new(p, grid, c, ForcingField::Zero, Mode::Raw), prof)
    }

    #[test]
    fn feeders_cover_ghosts() {
        assert_eq!(feeders(false, 0, 4), (None, Some(0)));
        assert_eq!(feeders(false, 4, 4), (Some(3), None));
        assert_eq!(feeders(true, 2, 5), (Some(2), Some(3)));
    }

    #[test]
    fn steady_state_survives_two_steps() {
        let (cfg, prof) = steady(6);
        let one = step(&prof, &cfg, None).unwrap().profile;
        assert_eq!(one.len(), 7);
        let two = step(&one, &cfg, None).unwrap().profile;
        for u in &two.values {
            assert!((u.rho - 1.0).abs() < 1e-14 && u.mom.abs() < 1e-14);
        }
    }

    #[test]
    fn cutoff_mode_needs_bound() {
        let (mut cfg, prof) = steady(4);
        cfg.mode = Mode::Cutoff;
        assert!(step(&prof, &cfg, None).is_err());
    }
}
