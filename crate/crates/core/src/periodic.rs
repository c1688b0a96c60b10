//! Shifted invariant coordinates on the level-0 mesh, the one-period map,
//! and damped Picard iteration for its fixed point.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{EulerError, Result};
use crate::gas::{self, GasParams, GasState, SchemeConstants};
use crate::mesh::{GridSpec, StaggeredProfile};
use crate::scheme::{self, StepperConfig};

/// z - I and w - I per level-0 cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedState {
    pub zhat: Vec<f64>,
    pub what: Vec<f64>,
}

impl ShiftedState {
    pub fn len(&self) -> usize {
        self.zhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zhat.is_empty()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.zip(other).fold(0.0, |acc, (a, b)| acc.max(a.abs()).max(b.abs()))
    }

    /// Sum of |dz| + |dw| weighted by the level-0 cell width 2dx.
    pub fn l1_distance(&self, other: &Self, grid: &GridSpec) -> f64 {
        2.0 * grid.dx * self.zip(other).map(|(a, b)| a.abs() + b.abs()).sum::<f64>()
    }

    fn zip<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.zhat
            .iter()
            .zip(&other.zhat)
            .zip(self.what.iter().zip(&other.what))
            .map(|((z0, z1), (w0, w1))| (z1 - z0, w1 - w0))
    }

    /// (1 - damping) * self + damping * other.
    pub fn blend(&self, other: &Self, damping: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(x, y)| (1.0 - damping) * x + damping * y)
                .collect()
        };
        Self {
            zhat: mix(&self.zhat, &other.zhat),
            what: mix(&self.what, &other.what),
        }
    }
}

pub fn to_shifted(
    profile: &StaggeredProfile,
    c: &SchemeConstants,
    grid: &GridSpec,
    p: &GasParams,
) -> Result<ShiftedState> {
    if profile.odd_level() {
        return Err(EulerError::GridMismatch(format!(
            "shifted coordinates live on even levels, got level {}",
            profile.n
        )));
    }
    profile.check_grid(grid)?;
    let shift = bounds::i_functional(profile, c, grid, p);
    let (zhat, what) = profile
        .values
        .iter()
        .zip(&shift)
        .map(|(u, i)| {
            let pair = gas::invariants_of(u, p);
            (pair.z - i, pair.w - i)
        })
        .unzip();
    Ok(ShiftedState { zhat, what })
}

/// Level-0 profile plus the largest a * |v| met in the velocity solves.
pub fn from_shifted_with_contraction(
    s: &ShiftedState,
    c: &SchemeConstants,
    grid: &GridSpec,
    p: &GasParams,
) -> Result<(StaggeredProfile, f64)> {
    if s.zhat.len() != grid.nx || s.what.len() != grid.nx {
        return Err(EulerError::GridMismatch(format!(
            "shifted state has {} / {} entries, mesh needs {}",
            s.zhat.len(),
            s.what.len(),
            grid.nx
        )));
    }
    let half = grid.dx;
    let g = p.gamma();
    let mut prefix = 0.0;
    let mut worst: f64 = 0.0;
    let mut values = Vec::with_capacity(grid.nx);
    for (j, (&zh, &wh)) in s.zhat.iter().zip(&s.what).enumerate() {
        if !(wh >= zh) {
            return Err(EulerError::Domain(format!("w - z = {} < 0 at cell {j}", wh - zh)));
        }
        let rho = p.rho_from_width(wh - zh);
        let u = if rho <= gas::VACUUM_FLOOR {
            GasState::vacuum()
        } else {
            let a = half * rho / 2.0;
            let b = 0.5 * (wh + zh) + prefix + half * (gas::pow(rho, g) / (g * (g - 1.0)) - c.alpha * rho + c.k);
            let disc = 1.0 - 4.0 * a * b;
            if !(disc >= 0.0) {
                return Err(EulerError::Reconstruction { j: 2 * j + 1, disc });
            }
            let v = 2.0 * b / (1.0 + disc.sqrt());
            worst = worst.max(a * v.abs());
            GasState::from_velocity(rho, v)
        };
        prefix += 2.0 * half * gas::zeta(&u, c, p);
        values.push(u);
    }
    Ok((StaggeredProfile::new(0, grid.nx, values)?, worst))
}

pub fn from_shifted(s: &ShiftedState, c: &SchemeConstants, grid: &GridSpec, p: &GasParams) -> Result<StaggeredProfile> {
    from_shifted_with_contraction(s, c, grid, p).map(|(prof, _)| prof)
}

/// One period of the configured stepper, read back in shifted coordinates.
pub fn f_map(s: &ShiftedState, cfg: &StepperConfig) -> Result<ShiftedState> {
    let start = from_shifted(s, &cfg.constants, &cfg.grid, &cfg.gas)?;
    let end = advance_period(&start, cfg)?;
    to_shifted(&end, &cfg.constants, &cfg.grid, &cfg.gas)
}

// Run one period and relabel the result as level 0.
fn advance_period(start: &StaggeredProfile, cfg: &StepperConfig) -> Result<StaggeredProfile> {
    let mut end = scheme::run(start, cfg, 1, 0, false)?.final_profile;
    end.n = 0;
    Ok(end)
}

/// Shifted image of the rest state (rho_bar, 0).
pub fn default_guess(cfg: &StepperConfig, rho_bar: f64) -> Result<ShiftedState> {
    let rest = StaggeredProfile::uniform(0, cfg.grid.nx, GasState::from_velocity(rho_bar, 0.0));
    to_shifted(&rest, &cfg.constants, &cfg.grid, &cfg.gas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// sup |F(x_k) - x_k| per iterate.
    pub history_sup: Vec<f64>,
    pub history_l1: Vec<f64>,
    pub converged: bool,
    pub damping: f64,
    /// L1 and sup distance between the reconstructed profile and its image
    /// after one period; present once converged.
    pub periodicity_l1: Option<f64>,
    pub periodicity_sup: Option<f64>,
    /// Largest a * |v| in the velocity solve at the returned point.
    pub max_contraction: Option<f64>,
}

pub struct FixedPoint {
    pub state: ShiftedState,
    /// Level-0 profile of `state`; the converged orbit starts here.
    pub profile: StaggeredProfile,
    pub report: FixedPointReport,
}

/// Damped Picard iteration x <- (1 - d) x + d F(x) until the sup residual
/// drops below `tol`. Returns `Divergence` when the residual grows tenfold
/// over 20 iterates.
pub fn find_fixed_point(
    guess: &ShiftedState,
    cfg: &StepperConfig,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<FixedPoint> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(EulerError::Config(format!("damping must lie in (0, 1], got {damping}")));
    }
    cfg.validate()?;
    let mut x = guess.clone();
    let mut report = FixedPointReport {
        iterations: 0,
        history_sup: Vec::new(),
        history_l1: Vec::new(),
        converged: false,
        damping,
        periodicity_l1: None,
        periodicity_sup: None,
        max_contraction: None,
    };
    for k in 0..max_iter {
        let fx = f_map(&x, cfg)?;
        let r = x.sup_distance(&fx);
        report.history_sup.push(r);
        report.history_l1.push(x.l1_distance(&fx, &cfg.grid));
        report.iterations = k + 1;
        if !r.is_finite() || (k >= 20 && r >= 10.0 * report.history_sup[k - 20]) {
            return Err(EulerError::Divergence {
                history: report.history_sup,
            });
        }
        if r < tol {
            report.converged = true;
            break;
        }
        x = x.blend(&fx, damping);
    }
    let (profile, contraction) = from_shifted_with_contraction(&x, &cfg.constants, &cfg.grid, &cfg.gas)?;
    report.max_contraction = Some(contraction);
    if report.converged {
        let end = advance_period(&profile, cfg)?;
        let (l1, sup) = periodicity_residual(&profile, &end, &cfg.grid)?;
        report.periodicity_l1 = Some(l1);
        report.periodicity_sup = Some(sup);
    }
    Ok(FixedPoint {
        state: x,
        profile,
        report,
    })
}

/// Sum of width * (|d rho| + |d m|) and the largest componentwise gap.
pub fn periodicity_residual(p0: &StaggeredProfile, p1: &StaggeredProfile, grid: &GridSpec) -> Result<(f64, f64)> {
    p0.check_grid(grid)?;
    p1.check_grid(grid)?;
    if p0.odd_level() != p1.odd_level() {
        return Err(EulerError::GridMismatch(format!(
            "levels {} and {} have different parity",
            p0.n, p1.n
        )));
    }
    let mut l1 = 0.0;
    let mut sup: f64 = 0.0;
    for (i, (a, b)) in p0.values.iter().zip(&p1.values).enumerate() {
        let dr = (a.rho - b.rho).abs();
        let dm = (a.mom - b.mom).abs();
        l1 += p0.width(i, grid) * (dr + dm);
        sup = sup.max(dr).max(dm);
    }
    Ok((l1, sup))
}
