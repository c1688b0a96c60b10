//! Trajectory and fixed-point history CSV files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{EulerError, Result};
use crate::gas::{self, GasParams, GasState};
use crate::mesh::{self, GridSpec, StaggeredProfile};

pub const TRAJECTORY_HEADER: [&str; 9] = ["n", "t", "j", "x", "rho", "m", "v", "z", "w"];
pub const HISTORY_HEADER: [&str; 3] = ["iter", "residual_sup", "residual_l1"];

// Shortest representation that parses back to the same f64.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl TrajectoryWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(File::create(path)?)
    }
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner
            .write_record(TRAJECTORY_HEADER)
            .map_err(|e| mesh::csv_error("output", e))?;
        Ok(Self { inner })
    }

    pub fn write_level(&mut self, profile: &StaggeredProfile, grid: &GridSpec, p: &GasParams) -> Result<()> {
        let t = grid.t(profile.n);
        for (i, u) in profile.values.iter().enumerate() {
            let j = profile.j_of(i);
            let pair = gas::invariants_of(u, p);
            self.inner
                .write_record([
                    profile.n.to_string(),
                    num(t),
                    j.to_string(),
                    num(grid.x(j)),
                    num(u.rho),
                    num(u.mom),
                    num(u.velocity()),
                    num(pair.z),
                    num(pair.w),
                ])
                .map_err(|e| mesh::csv_error("output", e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| EulerError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Read every level of a trajectory file. Each level must be complete and
/// in slot order; levels must increase.
pub fn read_trajectory(path: &Path, nx: usize) -> Result<Vec<StaggeredProfile>> {
    let name = path.display().to_string();
    let parse_err = |line: usize, msg: String| EulerError::Parse {
        path: name.clone(),
        line,
        msg,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| mesh::csv_error(&name, e))?;
    let header = rdr.headers().map_err(|e| mesh::csv_error(&name, e))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(parse_err(1, format!("expected header {}", TRAJECTORY_HEADER.join(","))));
    }
    let mut levels: Vec<StaggeredProfile> = Vec::new();
    let mut pending: Option<(usize, Vec<GasState>, usize)> = None;
    let close = |n: usize, vals: Vec<GasState>, line: usize, levels: &mut Vec<StaggeredProfile>| -> Result<()> {
        let want = mesh::level_len(nx, n);
        if vals.len() != want {
            return Err(parse_err(line, format!("level {n} has {} of {want} cells", vals.len())));
        }
        levels.push(StaggeredProfile::new(n, nx, vals).map_err(|e| parse_err(line, e.to_string()))?);
        Ok(())
    };
    let mut last_line = 1;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        last_line = line;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != TRAJECTORY_HEADER.len() {
            return Err(parse_err(line, format!("expected 9 fields, got {}", rec.len())));
        }
        let n: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad level '{}'", &rec[0])))?;
        let j: usize = rec[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad index '{}'", &rec[2])))?;
        let rho = mesh::parse_field(&rec, 4, &name, line)?;
        let mom = mesh::parse_field(&rec, 5, &name, line)?;
        match pending.take() {
            Some((m, vals, start)) if m != n => {
                if n < m {
                    return Err(parse_err(line, format!("level {n} after level {m}")));
                }
                close(m, vals, start, &mut levels)?;
                pending = Some((n, Vec::new(), line));
            }
            Some(p) => pending = Some(p),
            None => pending = Some((n, Vec::new(), line)),
        }
        let (_, vals, _) = pending.as_mut().unwrap();
        let want_j = if n.is_multiple_of(2) {
            2 * vals.len() + 1
        } else {
            2 * vals.len()
        };
        if j != want_j {
            return Err(parse_err(
                line,
                format!("index {j} out of order on level {n}, expected {want_j}"),
            ));
        }
        vals.push(GasState { rho, mom });
    }
    match pending {
        Some((n, vals, _)) => close(n, vals, last_line, &mut levels)?,
        None => return Err(parse_err(last_line, "no data rows".into())),
    }
    Ok(levels)
}

/// One row per iterate; the L1 column is left empty where `l1` is shorter.
pub fn write_history(path: &Path, sup: &[f64], l1: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| mesh::csv_error("output", e))?;
    w.write_record(HISTORY_HEADER)
        .map_err(|e| mesh::csv_error("output", e))?;
    for (k, s) in sup.iter().enumerate() {
        let l = l1.get(k).map(|x| num(*x)).unwrap_or_default();
        w.write_record([(k + 1).to_string(), num(*s), l])
            .map_err(|e| mesh::csv_error("output", e))?;
    }
    w.flush()?;
    Ok(())
}
