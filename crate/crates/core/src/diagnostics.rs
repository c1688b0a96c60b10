//! Per-step bookkeeping shared by inline runs and trajectory replay. Both
//! go through `Monitor::advance`, so the verdicts agree field for field.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    self, BoundState, BoundaryCompatReport, ContainmentReport, EnergyMassReport, EnergySample, PeriodEndReport,
};
use crate::error::{EulerError, Result};
use crate::mesh::StaggeredProfile;
use crate::scheme::{self, StepperConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub work: f64,
    pub m_n: f64,
    pub l_shock: f64,
    pub l_jensen: f64,
    pub l_remainder: f64,
    pub worst_slack: f64,
    pub worst_j: usize,
    /// Distance of the pre-cutoff state outside the limits.
    pub excursion: f64,
    pub clamp_events: usize,
    pub cutoff_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentSummary {
    pub levels_checked: usize,
    pub failures: usize,
    /// First failing level and mesh index, if any.
    pub first_failure: Option<(usize, usize)>,
    pub worst_slack: f64,
    pub worst_n: usize,
    pub worst_j: usize,
    pub max_excursion: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub energy: bool,
    pub gronwall: bool,
    pub jensen: bool,
    pub containment: bool,
    pub boundary: bool,
    pub period_end: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub final_n: usize,
    pub records: Vec<StepRecord>,
    pub energy: EnergyMassReport,
    pub containment: ContainmentSummary,
    pub boundary: BoundaryCompatReport,
    pub period_end: Vec<PeriodEndReport>,
    pub l_shock: f64,
    pub l_jensen: f64,
    pub l_remainder: f64,
    pub clamp_events: usize,
    pub cutoff_events: usize,
    pub replay_mismatches: usize,
    pub verdicts: Verdicts,
}

pub struct Monitor<'a> {
    cfg: &'a StepperConfig,
    tol: f64,
    bound: BoundState,
    samples: Vec<EnergySample>,
    records: Vec<StepRecord>,
    period_end: Vec<PeriodEndReport>,
    levels_checked: usize,
    failures: usize,
    first_failure: Option<(usize, usize)>,
    worst: (f64, usize, usize),
    max_excursion: f64,
    clamps: usize,
    cutoffs: usize,
    mismatches: usize,
    current: StaggeredProfile,
}

impl<'a> Monitor<'a> {
    /// Start from the level-0 profile; `c_tol` scales the containment and
    /// energy tolerances.
    pub fn new(initial: &StaggeredProfile, cfg: &'a StepperConfig, c_tol: f64) -> Result<Self> {
        cfg.validate()?;
        initial.check_grid(&cfg.grid)?;
        let bound = BoundState::new(initial, &cfg.constants, &cfg.grid, &cfg.gas);
        let tol = bounds::tolerance(cfg.grid.dx, c_tol);
        let mut m = Self {
            cfg,
            tol,
            bound,
            samples: vec![bounds::energy_sample(initial, &cfg.forcing, &cfg.grid, &cfg.gas)],
            records: Vec::new(),
            period_end: Vec::new(),
            levels_checked: 0,
            failures: 0,
            first_failure: None,
            worst: (f64::INFINITY, 0, 0),
            max_excursion: 0.0,
            clamps: 0,
            cutoffs: 0,
            mismatches: 0,
            current: initial.clone(),
        };
        let report = bounds::containment_check(initial, &m.bound, tol, &cfg.gas);
        m.absorb(&report);
        Ok(m)
    }

    pub fn current(&self) -> &StaggeredProfile {
        &self.current
    }

    pub fn bound(&self) -> &BoundState {
        &self.bound
    }

    /// Advance one level. With `stored` given, the stored level replaces the
    /// recomputed one and any difference is counted as a replay mismatch.
    pub fn advance(&mut self, stored: Option<&StaggeredProfile>) -> Result<&StaggeredProfile> {
        let cfg = self.cfg;
        let out = scheme::step(&self.current, cfg, Some(&self.bound))?;
        let bound = out.bound.expect("bound tracked");
        let next = match stored {
            Some(s) => {
                s.check_grid(&cfg.grid)?;
                if s.n != out.profile.n {
                    return Err(EulerError::GridMismatch(format!(
                        "expected level {}, got {}",
                        out.profile.n, s.n
                    )));
                }
                if *s != out.profile {
                    self.mismatches += 1;
                }
                s.clone()
            }
            None => out.profile,
        };
        let art = &out.artifacts;
        self.clamps += art.clamp_events.len();
        self.cutoffs += art.cutoff_events.len();
        if self.clamps > cfg.max_clamp_events {
            return Err(EulerError::NumericalAbort {
                step: next.n,
                reason: format!(
                    "{} negative-density clamps exceed the limit {}",
                    self.clamps, cfg.max_clamp_events
                ),
            });
        }
        self.max_excursion = self.max_excursion.max(art.excursion);
        let report = bounds::containment_check(&next, &bound, self.tol, &cfg.gas);
        self.absorb(&report);
        let sample = bounds::energy_sample(&next, &cfg.forcing, &cfg.grid, &cfg.gas);
        self.records.push(StepRecord {
            n: next.n,
            t: sample.t,
            mass: sample.mass,
            energy: sample.energy,
            work: sample.work,
            m_n: bound.m_n,
            l_shock: bound.l_shock,
            l_jensen: bound.l_jensen,
            l_remainder: bound.l_remainder,
            worst_slack: report.worst_slack,
            worst_j: report.worst_j,
            excursion: art.excursion,
            clamp_events: art.clamp_events.len(),
            cutoff_events: art.cutoff_events.len(),
        });
        self.samples.push(sample);
        if next.n % cfg.grid.steps_per_period() == 0 {
            self.period_end
                .push(bounds::period_end_check(&next, &bound, &cfg.constants, &cfg.gas));
        }
        self.bound = bound;
        self.current = next;
        Ok(&self.current)
    }

    fn absorb(&mut self, report: &ContainmentReport) {
        self.levels_checked += 1;
        if !report.pass {
            self.failures += 1;
            self.first_failure.get_or_insert((report.n, report.worst_j));
        }
        if report.worst_slack < self.worst.0 || report.worst_slack.is_nan() {
            self.worst = (report.worst_slack, report.n, report.worst_j);
        }
    }

    pub fn finish(self) -> Diagnostics {
        let cfg = self.cfg;
        let energy = bounds::energy_mass_report(&self.samples, self.bound.l_jensen, &cfg.constants, &cfg.gas, self.tol);
        let boundary = bounds::boundary_compat_check(&self.current, &self.bound, &cfg.constants, &cfg.grid, &cfg.gas);
        let containment = ContainmentSummary {
            levels_checked: self.levels_checked,
            failures: self.failures,
            first_failure: self.first_failure,
            worst_slack: self.worst.0,
            worst_n: self.worst.1,
            worst_j: self.worst.2,
            max_excursion: self.max_excursion,
            tol: self.tol,
            pass: self.failures == 0,
        };
        let verdicts = Verdicts {
            energy: energy.energy_pass,
            gronwall: energy.gronwall_pass,
            jensen: energy.jensen_pass,
            containment: containment.pass,
            boundary: boundary.pass,
            period_end: self.period_end.iter().all(|r| r.pass),
        };
        Diagnostics {
            final_n: self.current.n,
            records: self.records,
            energy,
            containment,
            boundary,
            period_end: self.period_end,
            l_shock: self.bound.l_shock,
            l_jensen: self.bound.l_jensen,
            l_remainder: self.bound.l_remainder,
            clamp_events: self.clamps,
            cutoff_events: self.cutoffs,
            replay_mismatches: self.mismatches,
            verdicts,
        }
    }
}

/// Run `steps` levels inline, handing each new level to `sink`.
pub fn monitored_run<S>(
    initial: &StaggeredProfile,
    cfg: &StepperConfig,
    steps: usize,
    c_tol: f64,
    mut sink: S,
) -> Result<(StaggeredProfile, Diagnostics)>
where
    S: FnMut(&StaggeredProfile) -> Result<()>,
{
    let mut mon = Monitor::new(initial, cfg, c_tol)?;
    sink(initial)?;
    for _ in 0..steps {
        let next = mon.advance(None)?;
        sink(next)?;
    }
    let last = mon.current().clone();
    Ok((last, mon.finish()))
}

/// Recompute diagnostics from a stored stride-1 trajectory starting at level 0.
pub fn replay(levels: &[StaggeredProfile], cfg: &StepperConfig, c_tol: f64) -> Result<Diagnostics> {
    let (first, rest) = levels
        .split_first()
        .ok_or_else(|| EulerError::Config("empty trajectory".into()))?;
    if first.n != 0 {
        return Err(EulerError::GridMismatch(format!(
            "trajectory starts at level {}, not 0",
            first.n
        )));
    }
    let mut mon = Monitor::new(first, cfg, c_tol)?;
    for level in rest {
        mon.advance(Some(level))?;
    }
    Ok(mon.finish())
}
