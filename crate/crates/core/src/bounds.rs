//! Invariant-region functionals: the running shift I, the accumulators L,
//! the decaying scale M_n, the cutoff, and the containment, energy and
//! decay diagnostics built on them.

use serde::{Deserialize, Serialize};

use crate::error::{EulerError, Result};
use crate::gas::{self, GasParams, GasState, RiemannPair, SchemeConstants};
use crate::mesh::{GridSpec, StaggeredProfile};
use crate::quad;
use crate::riemann::FanParams;
use crate::scheme::StepArtifacts;

/// Increments of the L accumulators below -NEGATIVE_SLACK (relative) are errors.
pub const NEGATIVE_SLACK: f64 = 1e-12;

pub fn c_gamma(p: &GasParams) -> f64 {
    let g = p.gamma();
    let th = p.theta();
    let first = 2f64.powf(th) * (th + 1.0);
    let second = 2.0 * g * (g - 1.0) / (g - 2.0 + 2f64.powf(1.0 - g));
    first.max(second)
}

pub fn decay_bound(big_m: f64, dt: f64, n: usize) -> f64 {
    big_m * (1.0 - dt / 4.0).powi(n as i32)
}

/// Default o(dx) tolerance c_tol * dx^1.05.
pub fn tolerance(dx: f64, c_tol: f64) -> f64 {
    c_tol * dx.powf(1.05)
}

/// Admissible forcing amplitude for the energy estimate: the Gronwall
/// exponent kappa (theta M)^{1/theta} (M + alpha rho_bar + K) stays below 1/2.
pub fn kappa_admissible_bound(c: &SchemeConstants, p: &GasParams) -> f64 {
    let th = p.theta();
    let rho_cap = (th * c.big_m).powf(1.0 / th);
    1.0 / (2.0 * rho_cap * (c.big_m + c.alpha * c.rho_bar + c.k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub big_m: f64,
    pub m_n: f64,
    pub n: usize,
    pub steps_per_period: usize,
    pub dt: f64,
    pub l_shock: f64,
    pub l_jensen: f64,
    pub l_remainder: f64,
    pub i_values: Vec<f64>,
    pub c_gamma: f64,
    /// 1 + C_gamma * alpha * (initial mass).
    pub remainder_prefactor: f64,
}

impl BoundState {
    pub fn new(profile: &StaggeredProfile, c: &SchemeConstants, grid: &GridSpec, p: &GasParams) -> Self {
        let cg = c_gamma(p);
        let n = profile.n;
        Self {
            big_m: c.big_m,
            m_n: decay_bound(c.big_m, grid.dt, period_phase(n, grid.steps_per_period())),
            n,
            steps_per_period: grid.steps_per_period(),
            dt: grid.dt,
            l_shock: 0.0,
            l_jensen: 0.0,
            l_remainder: 0.0,
            i_values: i_functional(profile, c, grid, p),
            c_gamma: cg,
            remainder_prefactor: 1.0 + cg * c.alpha * c.rho_bar,
        }
    }

    pub fn l_total(&self) -> f64 {
        self.l_shock + self.l_jensen + self.l_remainder
    }

    /// Lower and upper invariant bounds at slot i.
    pub fn limits(&self, i: usize) -> (f64, f64) {
        let spread = self.m_n + self.l_total();
        let shift = self.i_values[i];
        (-spread + shift, spread + shift)
    }
}

// Steps since the start of the current period; the period end maps to 2Nt.
fn period_phase(n: usize, spp: usize) -> usize {
    if n == 0 {
        0
    } else {
        (n - 1) % spp + 1
    }
}

/// Running integral of zeta from the left wall to the centre of each cell.
/// On odd levels the wall half-cells [0, dx] and [1 - dx, 1] therefore get
/// half their own integral rather than the value at x = 0 or x = 1.
pub fn i_functional(profile: &StaggeredProfile, c: &SchemeConstants, grid: &GridSpec, p: &GasParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(profile.len());
    let mut prefix = 0.0;
    for (i, u) in profile.values.iter().enumerate() {
        let cell = profile.width(i, grid) * gas::zeta(u, c, p);
        out.push(prefix + 0.5 * cell);
        prefix += cell;
    }
    out
}

/// Total integral of zeta over [0, 1].
pub fn zeta_total(profile: &StaggeredProfile, c: &SchemeConstants, grid: &GridSpec, p: &GasParams) -> f64 {
    profile.weighted_sum(grid, |u| gas::zeta(u, c, p))
}

/// Second-order Taylor remainder of eta_* around `center`, i.e. the
/// integral of (1 - tau) d^T Hess d along the segment. Far from vacuum it is
/// integrated directly (the closed form cancels badly for small d); when the
/// segment approaches vacuum the closed form eta(u) - eta(c) - D_d eta(c) is
/// used, with the one-sided derivative at a vacuum centre.
pub fn taylor_remainder(u_half: &GasState, center: &GasState, p: &GasParams) -> f64 {
    let d_rho = u_half.rho - center.rho;
    let d_mom = u_half.mom - center.mom;
    if d_rho == 0.0 && d_mom == 0.0 {
        return 0.0;
    }
    let lo = u_half.rho.min(center.rho);
    let hi = u_half.rho.max(center.rho);
    if lo > 0.5 * hi {
        let integrand = |tau: f64| {
            let u = GasState {
                rho: center.rho + tau * d_rho,
                mom: center.mom + tau * d_mom,
            };
            (1.0 - tau) * gas::hessian_form(&u, d_rho, d_mom, p)
        };
        let panels = 4;
        let h = 1.0 / panels as f64;
        let total: f64 = (0..panels)
            .map(|k| quad::integrate(k as f64 * h, (k + 1) as f64 * h, integrand))
            .sum();
        return total.max(0.0);
    }
    let slope = if center.is_vacuum() {
        // eta(tau d) = tau m^2 / (2 rho) + O(tau^gamma)
        if u_half.is_vacuum() {
            0.0
        } else {
            0.5 * d_mom * d_mom / d_rho
        }
    } else {
        let (gr, gm) = gas::eta_gradient(center, p);
        gr * d_rho + gm * d_mom
    };
    (gas::eta_star(u_half, p) - gas::eta_star(center, p) - slope).max(0.0)
}

/// Add one step's contributions to the accumulators and move to level n+1.
pub fn l_update(bound: &BoundState, art: &StepArtifacts) -> Result<BoundState> {
    let shock: f64 = art.production.iter().sum::<f64>() * art.dt;
    let jensen: f64 = art.jensen.iter().sum();
    let remainder: f64 = art.remainder.iter().sum::<f64>() * bound.remainder_prefactor;
    let scale = 1.0 + bound.l_total();
    for (name, inc) in [("shock", shock), ("jensen", jensen), ("remainder", remainder)] {
        if !inc.is_finite() || inc < -NEGATIVE_SLACK * scale {
            return Err(EulerError::Consistency(format!(
                "{name} increment {inc:e} at step {} is negative",
                art.n_next
            )));
        }
    }
    let n = art.n_next;
    Ok(BoundState {
        m_n: decay_bound(bound.big_m, bound.dt, period_phase(n, bound.steps_per_period)),
        n,
        l_shock: bound.l_shock + shock.max(0.0),
        l_jensen: bound.l_jensen + jensen.max(0.0),
        l_remainder: bound.l_remainder + remainder.max(0.0),
        i_values: art.i_next.clone(),
        ..bound.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    Unchanged,
    /// Averaged density fell below dx^delta.
    Vacuum,
    Clamped,
    /// The clamped interval was empty; the state was replaced by vacuum.
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffOutcome {
    pub state: GasState,
    pub kind: CutoffKind,
    /// How far the input sat outside [lo, hi] in z or w (0 when inside).
    pub excursion: f64,
}

/// Distance by which a state's invariants leave [lo, hi].
pub fn excursion(u: &GasState, lo: f64, hi: f64, p: &GasParams) -> f64 {
    let RiemannPair { z, w } = gas::invariants_of(u, p);
    (lo - z).max(w - hi).max(0.0)
}

/// Vacuum rule followed by the invariant clamp. `wall` keeps m = 0 by
/// clamping z and w symmetrically.
pub fn cutoff(
    e: &GasState,
    bound: &BoundState,
    i_j: f64,
    wall: bool,
    grid: &GridSpec,
    fp: &FanParams,
    p: &GasParams,
) -> CutoffOutcome {
    let spread = bound.m_n + bound.l_total();
    let lo = -spread + i_j;
    let hi = spread + i_j;
    let floor = grid.dx.powf(fp.delta);
    let exc = excursion(e, lo, hi, p);
    let vacuum = |kind| CutoffOutcome {
        state: GasState::vacuum(),
        kind,
        excursion: exc,
    };
    if e.rho < floor {
        return if e.is_vacuum() && exc == 0.0 {
            CutoffOutcome {
                state: GasState::vacuum(),
                kind: CutoffKind::Unchanged,
                excursion: 0.0,
            }
        } else {
            vacuum(CutoffKind::Vacuum)
        };
    }
    if exc == 0.0 {
        return CutoffOutcome {
            state: *e,
            kind: CutoffKind::Unchanged,
            excursion: 0.0,
        };
    }
    let RiemannPair { z, w } = gas::invariants_of(e, p);
    let (mut z_new, mut w_new) = if wall {
        let c = (0.5 * (w - z)).min(hi).min(-lo);
        (-c, c)
    } else {
        (z.max(lo), w.min(hi))
    };
    if !(w_new >= z_new) {
        return vacuum(CutoffKind::Inverted);
    }
    // Nudge inward until the rebuilt state's invariants respect the limits.
    let mut state = rebuild(z_new, w_new, wall, p);
    for _ in 0..64 {
        let back = gas::invariants_of(&state, p);
        let ok_lo = state.is_vacuum() || back.z >= lo;
        let ok_hi = state.is_vacuum() || back.w <= hi;
        if ok_lo && ok_hi {
            break;
        }
        if !ok_lo {
            z_new = z_new.next_up();
            if wall {
                w_new = -z_new;
            }
        }
        if !ok_hi {
            w_new = w_new.next_down();
            if wall {
                z_new = -w_new;
            }
        }
        if !(w_new >= z_new) {
            return vacuum(CutoffKind::Inverted);
        }
        state = rebuild(z_new, w_new, wall, p);
    }
    if state.rho < floor {
        return vacuum(CutoffKind::Vacuum);
    }
    CutoffOutcome {
        state,
        kind: CutoffKind::Clamped,
        excursion: exc,
    }
}

fn rebuild(z: f64, w: f64, wall: bool, p: &GasParams) -> GasState {
    let rho = p.rho_from_width(w - z);
    if wall {
        GasState::from_velocity(rho, 0.0)
    } else {
        GasState::from_velocity(rho, 0.5 * (w + z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub n: usize,
    /// z - lower limit, per slot.
    pub lower_slack: Vec<f64>,
    /// upper limit - w, per slot.
    pub upper_slack: Vec<f64>,
    pub worst_slack: f64,
    /// Mesh index j of the worst slot.
    pub worst_j: usize,
    pub tol: f64,
    pub pass: bool,
}

pub fn containment_check(profile: &StaggeredProfile, bound: &BoundState, tol: f64, p: &GasParams) -> ContainmentReport {
    let mut lower = Vec::with_capacity(profile.len());
    let mut upper = Vec::with_capacity(profile.len());
    let mut worst = f64::INFINITY;
    let mut worst_j = profile.j_of(0);
    for (i, u) in profile.values.iter().enumerate() {
        let (lo, hi) = bound.limits(i);
        let RiemannPair { z, w } = gas::invariants_of(u, p);
        let a = z - lo;
        let b = hi - w;
        if a.min(b) < worst || worst.is_nan() {
            worst = a.min(b);
            worst_j = profile.j_of(i);
        }
        lower.push(a);
        upper.push(b);
    }
    ContainmentReport {
        n: profile.n,
        lower_slack: lower,
        upper_slack: upper,
        worst_slack: worst,
        worst_j,
        tol,
        pass: worst >= -tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCompatReport {
    /// L(0) + U(0); must be >= 0.
    pub left_sum: f64,
    /// U(0) - L(0) = 2 M_n.
    pub left_gap: f64,
    /// -(L(1) + U(1)); must be >= 0.
    pub right_margin: f64,
    pub pass: bool,
}

pub fn boundary_compat_check(
    profile: &StaggeredProfile,
    bound: &BoundState,
    c: &SchemeConstants,
    grid: &GridSpec,
    p: &GasParams,
) -> BoundaryCompatReport {
    let total = zeta_total(profile, c, grid, p);
    let left_sum = 0.0;
    let right_margin = -2.0 * total;
    BoundaryCompatReport {
        left_sum,
        left_gap: 2.0 * bound.m_n,
        right_margin,
        pass: left_sum >= 0.0 && right_margin >= 0.0,
    }
}

/// Mass, energy and the forcing work dt * sum(width F m) of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub n: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub work: f64,
}

pub fn energy_sample(
    profile: &StaggeredProfile,
    forcing: &crate::mesh::ForcingField,
    grid: &GridSpec,
    p: &GasParams,
) -> EnergySample {
    let t = grid.t(profile.n);
    let work = if forcing.is_zero() {
        0.0
    } else {
        grid.dt
            * profile
                .values
                .iter()
                .enumerate()
                .map(|(i, u)| profile.width(i, grid) * forcing.eval(grid.x(profile.j_of(i)), t) * u.mom)
                .sum::<f64>()
    };
    EnergySample {
        n: profile.n,
        t,
        mass: profile.mass(grid),
        energy: profile.energy(grid, p),
        work,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMassReport {
    pub max_mass_drift: f64,
    /// Largest E_{n+1} - E_n - work_n over the run.
    pub worst_energy_excess: f64,
    /// Steps n where E_{n+1} > E_n + work_n + tol.
    pub energy_violations: Vec<usize>,
    pub gronwall_constant: f64,
    pub gronwall_rate: f64,
    /// max_n E_n / envelope(t_n); at most 1 when the envelope holds.
    pub gronwall_max_ratio: f64,
    pub jensen_total: f64,
    pub jensen_limit: f64,
    pub tol: f64,
    pub energy_pass: bool,
    pub gronwall_pass: bool,
    pub jensen_pass: bool,
}

pub fn energy_mass_report(
    samples: &[EnergySample],
    jensen_total: f64,
    c: &SchemeConstants,
    p: &GasParams,
    tol: f64,
) -> EnergyMassReport {
    let first = samples.first().copied().unwrap_or(EnergySample {
        n: 0,
        t: 0.0,
        mass: 0.0,
        energy: 0.0,
        work: 0.0,
    });
    let mut max_drift: f64 = 0.0;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for pair in samples.windows(2) {
        let excess = pair[1].energy - pair[0].energy - pair[0].work;
        worst = worst.max(excess);
        if excess > tol {
            violations.push(pair[0].n);
        }
    }
    for s in samples {
        max_drift = max_drift.max((s.mass - first.mass).abs());
    }
    let th = p.theta();
    let rate = c.kappa * (th * c.big_m).powf(1.0 / th);
    let constant = first.energy + rate * (c.big_m + c.alpha * c.rho_bar + c.k);
    let ratio = samples
        .iter()
        .map(|s| s.energy / (constant * (rate * s.t).exp()))
        .fold(0.0, f64::max);
    let jensen_limit = first.energy + tol;
    EnergyMassReport {
        max_mass_drift: max_drift,
        worst_energy_excess: if worst.is_finite() { worst } else { 0.0 },
        energy_violations: violations.clone(),
        gronwall_constant: constant,
        gronwall_rate: rate,
        gronwall_max_ratio: ratio,
        jensen_total,
        jensen_limit,
        tol,
        energy_pass: violations.is_empty(),
        gronwall_pass: ratio <= 1.0,
        jensen_pass: jensen_total <= jensen_limit,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchStats {
    pub samples: usize,
    pub g2_min: f64,
    pub g2_max: f64,
    /// Fraction with g2 at or below the quantitative target.
    pub fraction_below_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub big_m: f64,
    /// -1/2 M^{1 + 2(gamma-1)/(gamma+1) - eps}.
    pub target: f64,
    pub split_density: f64,
    pub max_density: f64,
    pub high_density: BranchStats,
    pub low_density: BranchStats,
    /// g2 at a vacuum boundary state (forcing terms only).
    pub vacuum_g2: f64,
    pub all_negative: bool,
    pub fraction_below_target: f64,
}

/// Sample states with shifted upper invariant equal to M across both
/// density branches and evaluate g2 with zero forcing.
pub fn decay_diagnostic(c: &SchemeConstants, p: &GasParams, samples: usize) -> DecayReport {
    let th = p.theta();
    let m = c.big_m;
    let target = -0.5 * m.powf(1.0 + gas::eps_max(p) - c.eps);
    let split = (c.rho_bar * m / 3.0).powf(1.0 / (th + 1.0));
    let rho_max = (th * m).powf(1.0 / th);
    let per_branch = (samples / 2).max(1);
    // Shift I = int_0^x zeta ranges over [-alpha rho_bar, eta_bar + K].
    let (i_lo, i_hi) = (-c.alpha * c.rho_bar, c.eta_bar + c.k);
    let golden = 0.618_033_988_749_894_9;
    let branch = |lo: f64, hi: f64, log_spaced: bool| {
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        let mut hits = 0usize;
        for k in 0..per_branch {
            let s = (k as f64 + 0.5) / per_branch as f64;
            let rho = if log_spaced {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            };
            let frac = (k as f64 * golden).fract();
            let shift = i_lo + frac * (i_hi - i_lo);
            let v = m - p.sound(rho) / th + shift;
            let u = GasState::from_velocity(rho, v);
            let (_, g2) = gas::g_sources(&u, c.k, c.alpha, 0.0, 0.0, p);
            g_min = g_min.min(g2);
            g_max = g_max.max(g2);
            if g2 <= target {
                hits += 1;
            }
        }
        BranchStats {
            samples: per_branch,
            g2_min: g_min,
            g2_max: g_max,
            fraction_below_target: hits as f64 / per_branch as f64,
        }
    };
    let high = branch(split.min(rho_max), rho_max, true);
    let low = branch(split.min(rho_max) * 1e-12, split.min(rho_max), true);
    let (_, vacuum_g2) = gas::g_sources(&GasState::vacuum(), c.k, c.alpha, 0.0, 0.0, p);
    let all_negative = high.g2_max < 0.0 && low.g2_max < 0.0;
    let fraction = 0.5 * (high.fraction_below_target + low.fraction_below_target);
    DecayReport {
        big_m: m,
        target,
        split_density: split,
        max_density: rho_max,
        high_density: high,
        low_density: low,
        vacuum_g2,
        all_negative,
        fraction_below_target: fraction,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AveragingOutcome {
    /// A precondition failed; nothing was checked.
    Skipped,
    Checked {
        w_average: f64,
        bound_average: f64,
        /// bound_average + tol - w_average.
        slack: f64,
        pass: bool,
    },
}

/// Equal-width subcells of one cell carrying (rho_i, w_i), and the bound A
/// as its values at the k + 1 subcell edges (linear in between). Checks
/// the averaged state's w against the mean of A plus c_tol * dx^1.1.
/// Skipped unless every w_i lies below A on its subcell and the mean
/// density reaches dx^delta.
pub fn averaging_check(
    subcells: &[(f64, f64)],
    bound_nodes: &[f64],
    dx: f64,
    delta: f64,
    c_tol: f64,
    p: &GasParams,
) -> AveragingOutcome {
    let k = subcells.len();
    if k == 0 || bound_nodes.len() != k + 1 {
        return AveragingOutcome::Skipped;
    }
    let th = p.theta();
    let mut rho_sum = 0.0;
    let mut mom_sum = 0.0;
    for (i, &(rho, w)) in subcells.iter().enumerate() {
        let (left, right) = (bound_nodes[i], bound_nodes[i + 1]);
        if !(rho >= 0.0) || w > left.min(right) {
            return AveragingOutcome::Skipped;
        }
        let v = w - p.sound(rho) / th;
        rho_sum += rho;
        mom_sum += rho * v;
    }
    let mean = GasState::from_velocity(rho_sum / k as f64, mom_sum / rho_sum.max(f64::MIN_POSITIVE));
    if mean.rho < dx.powf(delta) {
        return AveragingOutcome::Skipped;
    }
    let w_average = gas::invariants_of(&mean, p).w;
    let bound_average = bound_nodes.windows(2).map(|e| 0.5 * (e[0] + e[1])).sum::<f64>() / k as f64;
    let tol = c_tol * dx.powf(1.1);
    let slack = bound_average + tol - w_average;
    AveragingOutcome::Checked {
        w_average,
        bound_average,
        slack,
        pass: slack >= 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEndReport {
    pub n: usize,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub worst_j: usize,
    pub pass: bool,
}

/// -1.1 M + I_j <= z_j and w_j <= 1.1 M + I_j at the end of a period.
pub fn period_end_check(
    profile: &StaggeredProfile,
    bound: &BoundState,
    c: &SchemeConstants,
    p: &GasParams,
) -> PeriodEndReport {
    let reach = 1.1 * c.big_m;
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut worst_j = profile.j_of(0);
    let mut worst = f64::INFINITY;
    for (i, u) in profile.values.iter().enumerate() {
        let shift = bound.i_values[i];
        let RiemannPair { z, w } = gas::invariants_of(u, p);
        let a = z - (-reach + shift);
        let b = reach + shift - w;
        lower = lower.min(a);
        upper = upper.min(b);
        if a.min(b) < worst {
            worst = a.min(b);
            worst_j = profile.j_of(i);
        }
    }
    PeriodEndReport {
        n: profile.n,
        worst_lower_margin: lower,
        worst_upper_margin: upper,
        worst_j,
        pass: lower >= 0.0 && upper >= 0.0,
    }
}
