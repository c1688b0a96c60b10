//! Configuration, orchestration and file output for the `periodic-euler`
//! binary. Each `cmd_*` returns the process exit code.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use periodic_euler::bounds;
use periodic_euler::diagnostics::{self, Diagnostics};
use periodic_euler::gas::{self, GasParams, GasState};
use periodic_euler::io::{self as pio, TrajectoryWriter};
use periodic_euler::mesh::{self, ForcingField, ForcingTable, InitialData, InitialTable, Shape};
use periodic_euler::periodic;
use periodic_euler::riemann::{self, FanParams};
use periodic_euler::scheme::{self, Mode, StepperConfig};
use periodic_euler::{EulerError, Execution, StaggeredProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

pub fn exit_code(e: &EulerError) -> i32 {
    match e {
        EulerError::Divergence { .. } => EXIT_DIVERGED,
        EulerError::NumericalAbort { .. }
        | EulerError::NoConvergence { .. }
        | EulerError::Consistency(_)
        | EulerError::Reconstruction { .. } => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// amplitude * sin(2 pi t) * shape(x)
    Sinusoidal {
        amplitude: f64,
        #[serde(default = "default_shape")]
        shape: Shape,
    },
    /// CSV with header t,x,F on a rectangular grid.
    Table {
        path: PathBuf,
    },
}

fn default_shape() -> Shape {
    Shape::Sin
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    Uniform {
        rho: f64,
        #[serde(default)]
        v: f64,
    },
    /// rho (1 + amplitude cos 2 pi x), velocity * sin(pi x).
    Wave { rho: f64, amplitude: f64, velocity: f64 },
    /// Short random cosine/sine series drawn from `seed`.
    Random {
        rho: f64,
        amplitude: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
    /// CSV with header x,rho,v.
    Table { path: PathBuf },
}

fn default_modes() -> usize {
    4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FanSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Left and right states as (rho, v).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannSpec {
    pub left: [f64; 2],
    pub right: [f64; 2],
    /// Rays sampled into riemann.csv; 0 writes no file.
    pub samples: usize,
}

impl Default for RiemannSpec {
    fn default() -> Self {
        Self {
            left: [1.0, 0.0],
            right: [0.125, 0.0],
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub big_m: f64,
    /// Defaults to half the admissible maximum 2(gamma-1)/(gamma+1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Defaults to sup |F|.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub nx: usize,
    pub mode: Mode,
    pub exec: Execution,
    pub periods: usize,
    pub stride: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub c_tol: f64,
    pub max_clamp_events: usize,
    pub forcing: ForcingSpec,
    pub initial: InitialSpec,
    pub fan: FanSpec,
    pub riemann: RiemannSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            big_m: 10.0,
            eps: None,
            kappa: None,
            nx: 25,
            mode: Mode::Raw,
            exec: Execution::default(),
            periods: 1,
            stride: 1,
            seed: 0,
            out: PathBuf::from("out"),
            tol: 1e-8,
            max_iter: 200,
            damping: 0.5,
            c_tol: 10.0,
            max_clamp_events: 100,
            forcing: ForcingSpec::Zero,
            initial: InitialSpec::Uniform { rho: 1.0, v: 0.0 },
            fan: FanSpec::default(),
            riemann: RiemannSpec::default(),
        }
    }
}

/// A ready-to-run stepper and its level-0 profile.
pub struct Setup {
    pub cfg: StepperConfig,
    pub initial: StaggeredProfile,
}

impl RunConfig {
    /// Parse a TOML file. Table paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> periodic_euler::Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| EulerError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| EulerError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ForcingSpec::Table { path } = &mut cfg.forcing {
            resolve(path);
        }
        if let InitialSpec::Table { path } = &mut cfg.initial {
            resolve(path);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = o.$field.clone() { $target = v; })*
            };
        }
        set!(mode => self.mode, nx => self.nx, gamma => self.gamma, big_m => self.big_m,
             periods => self.periods, tol => self.tol, max_iter => self.max_iter,
             damping => self.damping, out => self.out, stride => self.stride, seed => self.seed);
        if o.eps.is_some() {
            self.eps = o.eps;
        }
        if o.kappa.is_some() {
            self.kappa = o.kappa;
        }
    }

    pub fn gas(&self) -> periodic_euler::Result<GasParams> {
        GasParams::new(self.gamma)
    }

    fn forcing_field(&self) -> periodic_euler::Result<ForcingField> {
        Ok(match &self.forcing {
            ForcingSpec::Zero => ForcingField::Zero,
            ForcingSpec::Sinusoidal { amplitude, shape } => {
                if !amplitude.is_finite() {
                    return Err(EulerError::Config(format!("forcing amplitude {amplitude}")));
                }
                ForcingField::Sinusoidal {
                    amplitude: *amplitude,
                    shape: *shape,
                }
            }
            ForcingSpec::Table { path } => ForcingField::Tabulated(ForcingTable::from_csv(path)?),
        })
    }

    fn initial_data(&self) -> periodic_euler::Result<InitialData> {
        Ok(match &self.initial {
            InitialSpec::Uniform { rho, v } => InitialData::Uniform { rho: *rho, v: *v },
            InitialSpec::Wave {
                rho,
                amplitude,
                velocity,
            } => {
                if !(*rho > 0.0 && amplitude.abs() < 1.0) {
                    return Err(EulerError::Config(format!(
                        "wave needs rho > 0 and |amplitude| < 1, got {rho}, {amplitude}"
                    )));
                }
                let (r, a, u) = (*rho, *amplitude, *velocity);
                InitialData::Function(Arc::new(move |x| {
                    GasState::from_velocity(r * (1.0 + a * (2.0 * PI * x).cos()), u * (PI * x).sin())
                }))
            }
            InitialSpec::Random { rho, amplitude, modes } => {
                if !(*rho > 0.0 && *amplitude >= 0.0 && *amplitude < 1.0 && *modes >= 1) {
                    return Err(EulerError::Config(
                        "random data needs rho > 0, amplitude in [0, 1), modes >= 1".to_string(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let a: Vec<f64> = (0..*modes).map(|_| rng.random_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..*modes).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm: f64 = (1..=*modes).map(|k| 1.0 / k as f64).sum();
                let (r, amp) = (*rho, *amplitude);
                InitialData::Function(Arc::new(move |x| {
                    let mut dr = 0.0;
                    let mut v = 0.0;
                    for k in 0..a.len() {
                        let kk = (k + 1) as f64;
                        dr += a[k] * (kk * PI * x).cos() / kk;
                        v += b[k] * (kk * PI * x).sin() / kk;
                    }
                    GasState::from_velocity(r * (1.0 + amp * dr / norm), amp * v / norm)
                }))
            }
            InitialSpec::Table { path } => InitialData::Table(InitialTable::from_csv(path)?),
        })
    }

    fn fan_params(&self, p: &GasParams) -> FanParams {
        let d = FanParams::default_for(p);
        FanParams {
            alpha_fan: self.fan.alpha.unwrap_or(d.alpha_fan),
            beta: self.fan.beta.unwrap_or(d.beta),
            delta: self.fan.delta.unwrap_or(d.delta),
        }
    }

    /// Validate everything and build the stepper. Logs warnings for gamma
    /// above 5/3 and for kappa above the admissible bound.
    pub fn setup(&self) -> periodic_euler::Result<Setup> {
        let p = self.gas()?;
        if !p.in_physical_range() {
            warn!(
                "gamma = {} is above 5/3; the invariant-region bounds are not claimed there",
                self.gamma
            );
        }
        if self.periods == 0 {
            return Err(EulerError::Config("periods must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.c_tol > 0.0) {
            return Err(EulerError::Config("tol and c_tol must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(EulerError::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        let grid = mesh::build_grid(self.nx, self.big_m)?;
        let forcing = self.forcing_field()?;
        let initial = self.initial_data()?.project(&grid)?;
        let sup = forcing.sup_norm();
        let kappa = self.kappa.unwrap_or(sup);
        if kappa < sup * (1.0 - 1e-12) {
            return Err(EulerError::Config(format!("sup |F| = {sup} exceeds kappa = {kappa}")));
        }
        let eps = self.eps.unwrap_or(0.5 * gas::eps_max(&p));
        let constants = gas::derive_constants(
            self.big_m,
            eps,
            kappa,
            initial.mass(&grid),
            initial.energy(&grid, &p),
            &p,
        )?;
        let limit = bounds::kappa_admissible_bound(&constants, &p);
        if kappa > limit {
            warn!("kappa = {kappa} exceeds the admissible bound {limit:.3e}; boundary compatibility may fail");
        }
        let mut cfg = StepperConfig::new(p, grid, constants, forcing, self.mode);
        cfg.fan = self.fan_params(&p);
        cfg.exec = self.exec;
        cfg.max_clamp_events = self.max_clamp_events;
        cfg.validate()?;
        Ok(Setup { cfg, initial })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Stepper mode [default: raw]
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Cells per unit length [default: 25]
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Adiabatic exponent in (1, 3] [default: 1.4]
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Invariant-region scale M [default: 10]
    #[arg(long = "bigM", global = true)]
    pub big_m: Option<f64>,
    /// Exponent shift [default: (gamma-1)/(gamma+1)]
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Forcing bound [default: sup |F|]
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Periods to simulate [default: 1]
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    /// Fixed-point tolerance on the sup residual [default: 1e-8]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Picard iteration budget [default: 200]
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    /// Picard damping in (0, 1] [default: 0.5]
    #[arg(long, global = true)]
    pub damping: Option<f64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Keep every stride-th level in trajectory files, 0 for the ends only [default: 1]
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// Seed for randomized initial data [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "raw" => Ok(Mode::Raw),
        "cutoff" => Ok(Mode::Cutoff),
        _ => Err(format!("expected raw or cutoff, got '{s}'")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "periodic-euler",
    version,
    about = "Time-periodic isentropic Euler flow with reflecting walls"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the stepper and write trajectory.csv and diagnostics.json
    Simulate,
    /// Search for a time-periodic solution by damped Picard iteration
    Periodic,
    /// Solve one Riemann problem and print its wave structure
    Riemann {
        /// Left state as RHO,V
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        left: Option<[f64; 2]>,
        /// Right state as RHO,V
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        right: Option<[f64; 2]>,
        /// Number of rays written to riemann.csv
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Recompute diagnostics from a stored stride-1 trajectory
    Diagnose {
        /// Trajectory CSV [default: OUT/trajectory.csv]
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|_| format!("bad number '{a}'"))?,
            b.parse().map_err(|_| format!("bad number '{b}'"))?,
        ]),
        _ => Err(format!("expected RHO,V, got '{s}'")),
    }
}

/// Resolve the configuration and dispatch.
pub fn run(cli: Cli) -> i32 {
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                error!("{e}");
                return EXIT_INPUT;
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Periodic => cmd_periodic(&cfg),
        Command::Riemann { left, right, samples } => {
            if let Some(l) = left {
                cfg.riemann.left = l;
            }
            if let Some(r) = right {
                cfg.riemann.right = r;
            }
            if let Some(s) = samples {
                cfg.riemann.samples = s;
            }
            cmd_riemann(&cfg)
        }
        Command::Diagnose { trajectory } => {
            let path = trajectory.unwrap_or_else(|| cfg.out.join("trajectory.csv"));
            cmd_diagnose(&cfg, &path)
        }
    }
}

fn report<T>(r: periodic_euler::Result<T>) -> Result<T, i32> {
    r.map_err(|e| {
        error!("{e}");
        exit_code(&e)
    })
}

fn prepare_out(dir: &Path) -> periodic_euler::Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> periodic_euler::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| EulerError::Io(e.into()))?;
    fs::write(path, text)?;
    Ok(())
}

fn keep_level(n: usize, last: usize, stride: usize) -> bool {
    n == 0 || n == last || (stride > 0 && n.is_multiple_of(stride))
}

pub fn cmd_simulate(rc: &RunConfig) -> i32 {
    match simulate(rc) {
        Ok(d) => {
            info!(
                "simulated to level {}: mass drift {:.3e}, containment {}, energy {}",
                d.final_n,
                d.energy.max_mass_drift,
                verdict(d.verdicts.containment),
                verdict(d.verdicts.energy)
            );
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn simulate(rc: &RunConfig) -> Result<Diagnostics, i32> {
    let Setup { cfg, initial } = report(rc.setup())?;
    report(prepare_out(&rc.out))?;
    report(fs::write(rc.out.join("config.toml"), rc.to_toml()).map_err(EulerError::from))?;
    let steps = rc.periods * cfg.grid.steps_per_period();
    let mut writer = report(TrajectoryWriter::create(&rc.out.join("trajectory.csv")))?;
    let (_, diag) = report(diagnostics::monitored_run(&initial, &cfg, steps, rc.c_tol, |level| {
        if keep_level(level.n, steps, rc.stride) {
            writer.write_level(level, &cfg.grid, &cfg.gas)?;
        }
        Ok(())
    }))?;
    report(writer.finish())?;
    report(write_json(&rc.out.join("diagnostics.json"), &diag))?;
    Ok(diag)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Serialize)]
struct PeriodicOutput<'a> {
    report: &'a periodic::FixedPointReport,
    /// sup |F(x*) - x*| from one extra evaluation at the returned point.
    recheck_sup: Option<f64>,
}

pub fn cmd_periodic(rc: &RunConfig) -> i32 {
    let setup = match report(rc.setup()) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Err(e) = prepare_out(&rc.out) {
        error!("{e}");
        return EXIT_INPUT;
    }
    let cfg = &setup.cfg;
    let guess = match report(periodic::default_guess(cfg, cfg.constants.rho_bar)) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let fp = match periodic::find_fixed_point(&guess, cfg, rc.tol, rc.max_iter, rc.damping) {
        Ok(fp) => fp,
        Err(EulerError::Divergence { history }) => {
            error!("Picard iteration diverged after {} iterates", history.len());
            let _ = pio::write_history(&rc.out.join("history.csv"), &history, &[]);
            return EXIT_DIVERGED;
        }
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    let rep = &fp.report;
    let written = (|| -> periodic_euler::Result<Option<f64>> {
        pio::write_history(&rc.out.join("history.csv"), &rep.history_sup, &rep.history_l1)?;
        let recheck = if rep.converged {
            let image = periodic::f_map(&fp.state, cfg)?;
            let orbit = scheme::run(&fp.profile, cfg, 1, rc.stride, false)?;
            let mut w = TrajectoryWriter::create(&rc.out.join("orbit.csv"))?;
            for level in &orbit.trajectory {
                w.write_level(level, &cfg.grid, &cfg.gas)?;
            }
            w.finish()?;
            Some(fp.state.sup_distance(&image))
        } else {
            None
        };
        write_json(
            &rc.out.join("fixed_point.json"),
            &PeriodicOutput {
                report: rep,
                recheck_sup: recheck,
            },
        )?;
        Ok(recheck)
    })();
    match written {
        Ok(recheck) if rep.converged => {
            info!(
                "converged in {} iterates; recheck {:.3e}, periodicity L1 {:.3e}",
                rep.iterations,
                recheck.unwrap_or(f64::NAN),
                rep.periodicity_l1.unwrap_or(f64::NAN)
            );
            EXIT_OK
        }
        Ok(_) => {
            error!("no fixed point within {} iterates", rep.iterations);
            EXIT_DIVERGED
        }
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    }
}

pub fn cmd_riemann(rc: &RunConfig) -> i32 {
    match riemann_report(rc) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn state_from(pair: [f64; 2]) -> periodic_euler::Result<GasState> {
    let [rho, v] = pair;
    if !(rho >= 0.0) || !v.is_finite() {
        return Err(EulerError::Domain(format!("invalid state rho = {rho}, v = {v}")));
    }
    Ok(GasState::from_velocity(rho, v))
}

/// The text `cmd_riemann` prints.
pub fn riemann_report(rc: &RunConfig) -> Result<String, i32> {
    use std::fmt::Write;
    let p = report(rc.gas())?;
    let ul = report(state_from(rc.riemann.left))?;
    let ur = report(state_from(rc.riemann.right))?;
    let sol = report(riemann::solve_riemann(&ul, &ur, &p))?;
    let mut s = String::new();
    let _ = writeln!(s, "pattern: {}", sol.pattern);
    let _ = writeln!(
        s,
        "middle: rho = {:.12e}, v = {:.12e}",
        sol.middle.rho,
        sol.middle.velocity()
    );
    for (k, (kind, sp)) in [sol.wave1, sol.wave2].iter().zip(sol.speeds).enumerate() {
        let _ = writeln!(s, "wave {}: {kind}, speeds [{:.12e}, {:.12e}]", k + 1, sp.lo, sp.hi);
    }
    for (sigma, l, r) in sol.shocks() {
        let (rm, rmom) = riemann::rankine_hugoniot_residual(sigma, &l, &r, &p);
        let _ = writeln!(
            s,
            "shock at {sigma:.12e}: entropy production {:.6e}, RH residual {:.3e}",
            riemann::entropy_production(sigma, &l, &r, &p),
            rm.max(rmom)
        );
    }
    let _ = writeln!(s, "total entropy production: {:.6e}", sol.total_production(&p));
    if rc.riemann.samples > 0 {
        let out = (|| -> periodic_euler::Result<()> {
            prepare_out(&rc.out)?;
            let mut w = csv::Writer::from_path(rc.out.join("riemann.csv"))
                .map_err(|e| EulerError::Io(std::io::Error::other(e.to_string())))?;
            let io_err = |e: csv::Error| EulerError::Io(std::io::Error::other(e.to_string()));
            w.write_record(["xi", "rho", "m", "v"]).map_err(io_err)?;
            let lo = sol.min_speed().min(-1.0) * 1.25;
            let hi = sol.max_speed().max(1.0) * 1.25;
            let k = rc.riemann.samples;
            for i in 0..k {
                let xi = if k == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (k - 1) as f64
                };
                let u = riemann::sample_riemann(&sol, xi, &p);
                w.write_record([xi, u.rho, u.mom, u.velocity()].map(|x| format!("{x:?}")))
                    .map_err(io_err)?;
            }
            w.flush()?;
            Ok(())
        })();
        report(out)?;
    }
    Ok(s)
}

pub fn cmd_diagnose(rc: &RunConfig, trajectory: &Path) -> i32 {
    match diagnose(rc, trajectory) {
        Ok(d) => {
            let v = d.verdicts;
            println!(
                "energy {} | gronwall {} | jensen {} | containment {} | boundary {} | period-end {}",
                verdict(v.energy),
                verdict(v.gronwall),
                verdict(v.jensen),
                verdict(v.containment),
                verdict(v.boundary),
                verdict(v.period_end)
            );
            if let Some((n, j)) = d.containment.first_failure {
                println!("first containment failure at n = {n}, j = {j}");
            }
            EXIT_OK
        }
        Err(code) => code,
    }
}

/// Replay a stored trajectory and write diagnose.json next to the outputs.
pub fn diagnose(rc: &RunConfig, trajectory: &Path) -> Result<Diagnostics, i32> {
    let Setup { cfg, .. } = report(rc.setup())?;
    let levels = report(pio::read_trajectory(trajectory, rc.nx))?;
    let expected = rc.periods * cfg.grid.steps_per_period();
    for (k, level) in levels.iter().enumerate() {
        if level.n != k {
            error!(
                "{}: level {} found where {k} was expected; diagnose needs a stride-1 trajectory",
                trajectory.display(),
                level.n
            );
            return Err(EXIT_INPUT);
        }
    }
    let last = levels.last().map_or(0, |l| l.n);
    if last != expected {
        error!(
            "{}: trajectory ends at level {last}, expected {expected}",
            trajectory.display()
        );
        return Err(EXIT_INPUT);
    }
    let diag = report(diagnostics::replay(&levels, &cfg, rc.c_tol))?;
    report(prepare_out(&rc.out))?;
    report(write_json(&rc.out.join("diagnose.json"), &diag))?;
    Ok(diag)
}
