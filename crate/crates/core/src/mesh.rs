//! Staggered space-time mesh: at level n the live cells are the indices j
//! with j + n odd. Even levels hold Nx full cells centred at odd j; odd
//! levels hold Nx - 1 full cells at even interior j plus two wall
//! half-cells at j = 0 and j = 2Nx.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EulerError, Result};
use crate::gas::{self, GasParams, GasState};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
    pub cfl_den: usize,
    pub dx: f64,
    pub dt: f64,
}

pub fn build_grid(nx: usize, big_m: f64) -> Result<GridSpec> {
    if nx < 2 {
        return Err(EulerError::Config(format!("Nx must be >= 2, got {nx}")));
    }
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(EulerError::Config(format!("M must be positive, got {big_m}")));
    }
    let cfl_den = (2.0 * big_m).floor() as usize + 1;
    let nt = nx * cfl_den;
    Ok(GridSpec {
        nx,
        nt,
        cfl_den,
        dx: 1.0 / (2 * nx) as f64,
        dt: 1.0 / (2 * nt) as f64,
    })
}

impl GridSpec {
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / (2 * self.nx) as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 / (2 * self.nt) as f64
    }

    /// 2 Nt, the number of steps in one unit period.
    pub fn steps_per_period(&self) -> usize {
        2 * self.nt
    }

    /// dt / dx.
    pub fn lambda(&self) -> f64 {
        1.0 / self.cfl_den as f64
    }

    pub fn level_len(&self, n: usize) -> usize {
        level_len(self.nx, n)
    }
}

pub(crate) fn level_len(nx: usize, n: usize) -> usize {
    if n.is_multiple_of(2) {
        nx
    } else {
        nx + 1
    }
}

/// Cell values on the live index set of level n, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaggeredProfile {
    pub n: usize,
    pub nx: usize,
    pub values: Vec<GasState>,
}

impl StaggeredProfile {
    pub fn new(n: usize, nx: usize, values: Vec<GasState>) -> Result<Self> {
        let want = level_len(nx, n);
        if values.len() != want {
            return Err(EulerError::GridMismatch(format!(
                "level {n} with Nx = {nx} needs {want} cells, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|u| !(u.rho >= 0.0) || !u.mom.is_finite()) {
            return Err(EulerError::Domain(format!(
                "cell {} has invalid state ({}, {})",
                bad, values[bad].rho, values[bad].mom
            )));
        }
        Ok(Self { n, nx, values })
    }

    pub fn uniform(n: usize, nx: usize, u: GasState) -> Self {
        Self {
            n,
            nx,
            values: vec![u; level_len(nx, n)],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn odd_level(&self) -> bool {
        self.n % 2 == 1
    }

    /// Mesh index j of storage slot i.
    pub fn j_of(&self, i: usize) -> usize {
        2 * i + usize::from(!self.odd_level())
    }

    pub fn slot_of(&self, j: usize) -> Result<usize> {
        let live = (j + self.n) % 2 == 1 && j <= 2 * self.nx;
        if !live {
            return Err(EulerError::Index { j, n: self.n });
        }
        Ok(j / 2)
    }

    pub fn get(&self, j: usize) -> Result<GasState> {
        Ok(self.values[self.slot_of(j)?])
    }

    /// Width of slot i: dx for the wall half-cells, 2 dx otherwise.
    pub fn width(&self, i: usize, grid: &GridSpec) -> f64 {
        if self.is_wall_slot(i) {
            grid.dx
        } else {
            2.0 * grid.dx
        }
    }

    pub fn is_wall_slot(&self, i: usize) -> bool {
        self.odd_level() && (i == 0 || i + 1 == self.values.len())
    }

    /// Interval [a, b] covered by slot i.
    pub fn cell_bounds(&self, i: usize, grid: &GridSpec) -> (f64, f64) {
        let j = self.j_of(i);
        let a = if j == 0 { 0.0 } else { grid.x(j - 1) };
        let b = if j == 2 * self.nx { 1.0 } else { grid.x(j + 1) };
        (a, b)
    }

    pub fn mass(&self, grid: &GridSpec) -> f64 {
        self.weighted_sum(grid, |u| u.rho)
    }

    pub fn energy(&self, grid: &GridSpec, p: &GasParams) -> f64 {
        self.weighted_sum(grid, |u| gas::eta_star(u, p))
    }

    pub fn weighted_sum<F: Fn(&GasState) -> f64>(&self, grid: &GridSpec, f: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, u)| self.width(i, grid) * f(u))
            .sum()
    }

    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.nx != grid.nx || self.values.len() != grid.level_len(self.n) {
            return Err(EulerError::GridMismatch(format!(
                "profile has Nx = {} and {} cells, grid has Nx = {}",
                self.nx,
                self.values.len(),
                grid.nx
            )));
        }
        Ok(())
    }
}

/// Something that can be integrated over [a, b] in (rho, m).
pub trait CellIntegrable {
    fn integral(&self, a: f64, b: f64) -> (f64, f64);
}

/// Piecewise-constant field on a partition of [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseField {
    pub breaks: Vec<f64>,
    pub values: Vec<GasState>,
}

impl PiecewiseField {
    pub fn new(breaks: Vec<f64>, values: Vec<GasState>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(EulerError::Domain("breaks must have one more entry than values".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EulerError::Domain("breaks must be strictly increasing".into()));
        }
        Ok(Self { breaks, values })
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, GasState)> + '_ {
        self.breaks.windows(2).zip(&self.values).map(|(w, u)| (w[0], w[1], *u))
    }

    pub fn value_at(&self, x: f64) -> GasState {
        let k = self.breaks.partition_point(|b| *b <= x);
        self.values[k.saturating_sub(1).min(self.values.len() - 1)]
    }

    pub fn mass(&self) -> f64 {
        self.intervals().map(|(a, b, u)| (b - a) * u.rho).sum()
    }
}

impl CellIntegrable for PiecewiseField {
    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let mut rho = 0.0;
        let mut mom = 0.0;
        for (l, r, u) in self.intervals() {
            let lo = l.max(a);
            let hi = r.min(b);
            if hi > lo {
                rho += (hi - lo) * u.rho;
                mom += (hi - lo) * u.mom;
            }
        }
        (rho, mom)
    }
}

/// A pointwise field integrated by 16-point Gauss-Legendre.
pub struct FnField<F: Fn(f64) -> GasState>(pub F);

impl<F: Fn(f64) -> GasState> CellIntegrable for FnField<F> {
    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let mut rho = 0.0;
        let mut mom = 0.0;
        for (x, w) in quad::nodes(a, b) {
            let u = (self.0)(x);
            rho += w * u.rho;
            mom += w * u.mom;
        }
        (rho, mom)
    }
}

/// Average over cell j of level n: full width inside, half width at the
/// walls on odd levels.
pub fn cell_average<F: CellIntegrable + ?Sized>(field: &F, j: usize, n: usize, grid: &GridSpec) -> Result<GasState> {
    if (j + n).is_multiple_of(2) || j > 2 * grid.nx {
        return Err(EulerError::Index { j, n });
    }
    let a = if j == 0 { 0.0 } else { grid.x(j - 1) };
    let b = if j == 2 * grid.nx { 1.0 } else { grid.x(j + 1) };
    let (rho, mom) = field.integral(a, b);
    let width = b - a;
    Ok(GasState::from_velocity(
        (rho / width).max(0.0),
        if rho > 0.0 { mom / rho } else { 0.0 },
    ))
}

pub fn piecewise_reconstruct(profile: &StaggeredProfile, grid: &GridSpec) -> PiecewiseField {
    let mut breaks = Vec::with_capacity(profile.len() + 1);
    breaks.push(0.0);
    for i in 0..profile.len() {
        breaks.push(profile.cell_bounds(i, grid).1);
    }
    PiecewiseField {
        breaks,
        values: profile.values.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// sin(pi x): vanishes at both walls.
    Sin,
    /// cos(pi x).
    Cos,
    /// Constant 1.
    Unit,
}

impl Shape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Shape::Sin => (PI * x).sin(),
            Shape::Cos => (PI * x).cos(),
            Shape::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTable {
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    /// Row-major in t: values[it * xs.len() + ix].
    pub values: Vec<f64>,
}

impl ForcingTable {
    pub fn new(ts: Vec<f64>, xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() < 2 || xs.len() < 2 {
            return Err(EulerError::Config(
                "forcing table needs at least two t and two x values".into(),
            ));
        }
        if values.len() != ts.len() * xs.len() {
            return Err(EulerError::Config("forcing table is not rectangular".into()));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EulerError::Config("forcing table axes must be increasing".into()));
        }
        if ts[0] != 0.0 || *ts.last().unwrap() != 1.0 {
            return Err(EulerError::Config("forcing table must span t = 0 to t = 1".into()));
        }
        if xs[0] > 0.0 || *xs.last().unwrap() < 1.0 {
            return Err(EulerError::Config("forcing table must span x = 0 to x = 1".into()));
        }
        let nxs = xs.len();
        let last = (ts.len() - 1) * nxs;
        if values[..nxs] != values[last..] {
            return Err(EulerError::Config(
                "forcing table rows at t = 0 and t = 1 differ".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EulerError::Config("forcing table has non-finite entries".into()));
        }
        Ok(Self { ts, xs, values })
    }

    /// Read a "t,x,F" CSV describing a rectangular grid.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(&name, e))?;
        check_header(&mut rdr, &name, &["t", "x", "F"])?;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&name, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let t = parse_field(&rec, 0, &name, line)?;
            let x = parse_field(&rec, 1, &name, line)?;
            let f = parse_field(&rec, 2, &name, line)?;
            rows.push((t, x, f));
        }
        let mut ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut values = vec![f64::NAN; ts.len() * xs.len()];
        for (t, x, f) in rows {
            let it = ts.binary_search_by(|v| v.total_cmp(&t)).unwrap_or(0);
            let ix = xs.binary_search_by(|v| v.total_cmp(&x)).unwrap_or(0);
            values[it * xs.len() + ix] = f;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(EulerError::Config(format!("{name}: forcing table is not a full grid")));
        }
        Self::new(ts, xs, values)
    }

    fn eval(&self, x: f64, t: f64) -> f64 {
        let (it, ft) = bracket(&self.ts, t);
        let (ix, fx) = bracket(&self.xs, x);
        let n = self.xs.len();
        let v = |a: usize, b: usize| self.values[a * n + b];
        let lo = v(it, ix) * (1.0 - fx) + v(it, ix + 1) * fx;
        let hi = v(it + 1, ix) * (1.0 - fx) + v(it + 1, ix + 1) * fx;
        lo * (1.0 - ft) + hi * ft
    }
}

// Index of the left node and the fractional position, clamped to the table.
fn bracket(axis: &[f64], s: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let k = axis.partition_point(|a| *a <= s).saturating_sub(1).min(last);
    let f = ((s - axis[k]) / (axis[k + 1] - axis[k])).clamp(0.0, 1.0);
    (k, f)
}

pub type ForcingFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ForcingField {
    Zero,
    /// amplitude * sin(2 pi t) * shape(x).
    Sinusoidal {
        amplitude: f64,
        shape: Shape,
    },
    Tabulated(ForcingTable),
    /// Arbitrary F(x, t) with a declared sup-norm; the caller vouches for periodicity.
    Custom {
        f: ForcingFn,
        sup: f64,
    },
}

impl fmt::Debug for ForcingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingField::Zero => write!(f, "Zero"),
            ForcingField::Sinusoidal { amplitude, shape } => {
                write!(f, "Sinusoidal({amplitude}, {shape:?})")
            }
            ForcingField::Tabulated(t) => write!(f, "Tabulated({}x{})", t.ts.len(), t.xs.len()),
            ForcingField::Custom { sup, .. } => write!(f, "Custom(sup = {sup})"),
        }
    }
}

impl ForcingField {
    /// F(x, t), with t taken modulo 1 so that periodicity is exact.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let t = t.rem_euclid(1.0);
        match self {
            ForcingField::Zero => 0.0,
            ForcingField::Sinusoidal { amplitude, shape } => amplitude * (2.0 * PI * t).sin() * shape.eval(x),
            ForcingField::Tabulated(table) => table.eval(x, t),
            ForcingField::Custom { f, .. } => f(x, t),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            ForcingField::Zero => 0.0,
            ForcingField::Sinusoidal { amplitude, .. } => amplitude.abs(),
            ForcingField::Tabulated(t) => t.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            ForcingField::Custom { sup, .. } => *sup,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingField::Zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialTable {
    pub xs: Vec<f64>,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
}

impl InitialTable {
    pub fn new(xs: Vec<f64>, rho: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || rho.len() != xs.len() || v.len() != xs.len() {
            return Err(EulerError::Config("initial table needs at least two rows".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EulerError::Config("initial table x values must increase".into()));
        }
        if xs[0] > 0.0 || *xs.last().unwrap() < 1.0 {
            return Err(EulerError::Config("initial table must span x = 0 to x = 1".into()));
        }
        if rho.iter().any(|r| !(*r >= 0.0)) || v.iter().any(|s| !s.is_finite()) {
            return Err(EulerError::Config(
                "initial table has negative density or bad velocity".into(),
            ));
        }
        Ok(Self { xs, rho, v })
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(&name, e))?;
        check_header(&mut rdr, &name, &["x", "rho", "v"])?;
        let (mut xs, mut rho, mut v) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&name, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            xs.push(parse_field(&rec, 0, &name, line)?);
            rho.push(parse_field(&rec, 1, &name, line)?);
            v.push(parse_field(&rec, 2, &name, line)?);
        }
        Self::new(xs, rho, v)
    }

    pub fn eval(&self, x: f64) -> GasState {
        let (k, f) = bracket(&self.xs, x);
        let rho = self.rho[k] * (1.0 - f) + self.rho[k + 1] * f;
        let v = self.v[k] * (1.0 - f) + self.v[k + 1] * f;
        GasState::from_velocity(rho, v)
    }
}

pub type InitialFn = Arc<dyn Fn(f64) -> GasState + Send + Sync>;

#[derive(Clone)]
pub enum InitialData {
    Uniform { rho: f64, v: f64 },
    Table(InitialTable),
    Function(InitialFn),
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Uniform { rho, v } => write!(f, "Uniform({rho}, {v})"),
            InitialData::Table(t) => write!(f, "Table({} rows)", t.xs.len()),
            InitialData::Function(_) => write!(f, "Function"),
        }
    }
}

impl InitialData {
    /// Cell averages over the level-0 cells.
    pub fn project(&self, grid: &GridSpec) -> Result<StaggeredProfile> {
        let nx = grid.nx;
        let values = match self {
            InitialData::Uniform { rho, v } => {
                if !(*rho >= 0.0) || !v.is_finite() {
                    return Err(EulerError::Config(format!("bad uniform state ({rho}, {v})")));
                }
                vec![GasState::from_velocity(*rho, *v); nx]
            }
            InitialData::Table(table) => (0..nx)
                .map(|i| cell_average(&TableField(table), 2 * i + 1, 0, grid))
                .collect::<Result<Vec<_>>>()?,
            InitialData::Function(f) => (0..nx)
                .map(|i| cell_average(&FnField(|x| f(x)), 2 * i + 1, 0, grid))
                .collect::<Result<Vec<_>>>()?,
        };
        StaggeredProfile::new(0, nx, values)
    }
}

// Piecewise-linear table; split at nodes so Gauss-Legendre is exact.
struct TableField<'a>(&'a InitialTable);

impl CellIntegrable for TableField<'_> {
    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let mut cuts = vec![a];
        cuts.extend(self.0.xs.iter().copied().filter(|x| *x > a && *x < b));
        cuts.push(b);
        let mut rho = 0.0;
        let mut mom = 0.0;
        for w in cuts.windows(2) {
            let (r, m) = FnField(|x| self.0.eval(x)).integral(w[0], w[1]);
            rho += r;
            mom += m;
        }
        (rho, mom)
    }
}

pub(crate) fn csv_error(name: &str, e: csv::Error) -> EulerError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EulerError::Io(io),
        other => EulerError::Parse {
            path: name.to_string(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn check_header<R: std::io::Read>(rdr: &mut csv::Reader<R>, name: &str, want: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(name, e))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != want {
        return Err(EulerError::Parse {
            path: name.to_string(),
            line: 1,
            msg: format!("expected header {}, got {}", want.join(","), got.join(",")),
        });
    }
    Ok(())
}

pub(crate) fn parse_field(rec: &csv::StringRecord, k: usize, name: &str, line: usize) -> Result<f64> {
    let raw = rec.get(k).ok_or_else(|| EulerError::Parse {
        path: name.to_string(),
        line,
        msg: format!("missing column {}", k + 1),
    })?;
    raw.trim().parse::<f64>().map_err(|e| EulerError::Parse {
        path: name.to_string(),
        line,
        msg: format!("column {}: {e} ({raw:?})", k + 1),
    })
}
