use std::io::Write;
use std::path::Path;

use crate::args::CompareArgs;
use crate::config::{emit, resolve, CsvTable, Metadata};
use crate::error::{CliError, Result};

const TIME_TOL: f64 = 1e-9;

pub const COMPARE_HEADER: &str = "sup,sup_t,sup_level,l1,points,levels";

/// Distances between two occupancy trajectories on the union of their grids.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDistance {
    /// `max_{t, i} |a_i(t) - b_i(t)|`.
    pub sup: f64,
    pub sup_t: f64,
    /// 1-based level attaining `sup`.
    pub sup_level: usize,
    /// Trapezoidal `int sum_i |a_i(t) - b_i(t)| dt`.
    pub l1: f64,
    pub points: usize,
    pub levels: usize,
}

struct Series {
    times: Vec<f64>,
    /// `values[k][i]` is level `i + 1` at `times[k]`.
    values: Vec<Vec<f64>>,
}

impl Series {
    fn from_table(t: &CsvTable, path: &Path, levels: usize) -> Result<Self> {
        let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
        let tc = t.column("t").ok_or_else(|| bad("no t column".into()))?;
        let cols = (1..=levels)
            .map(|i| t.column(&format!("q{i}")).ok_or_else(|| bad(format!("no q{i} column"))))
            .collect::<Result<Vec<_>>>()?;
        let times: Vec<f64> = t.rows.iter().map(|r| r[tc]).collect();
        if times.is_empty() {
            return Err(bad("no rows".into()));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(bad("times are not strictly increasing".into()));
        }
        let values = t.rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
        Ok(Series { times, values })
    }

    fn at(&self, t: f64, i: usize) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0][i];
        }
        if k == self.times.len() {
            return self.values[k - 1][i];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1][i] * (1.0 - w) + self.values[k][i] * w
    }
}

fn meta_value<'a>(t: &'a CsvTable, path: &Path, key: &str) -> Result<&'a str> {
    t.meta
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::usage(format!("{}: metadata has no {key}", path.display())))
}

fn parse_meta<T: std::str::FromStr>(t: &CsvTable, path: &Path, key: &str) -> Result<T> {
    meta_value(t, path, key)?
        .parse()
        .map_err(|_| CliError::usage(format!("{}: cannot parse metadata {key}", path.display())))
}

/// Refuse inputs with different `lambda`, `d` or `depth`, or different time
/// spans; otherwise compare levels `1..=levels` (all by default).
pub fn trajectory_distance(
    a: &CsvTable,
    a_path: &Path,
    b: &CsvTable,
    b_path: &Path,
    levels: Option<usize>,
) -> Result<TrajectoryDistance> {
    let lambda: (f64, f64) = (parse_meta(a, a_path, "lambda")?, parse_meta(b, b_path, "lambda")?);
    let d: (usize, usize) = (parse_meta(a, a_path, "d")?, parse_meta(b, b_path, "d")?);
    let depth: (usize, usize) = (parse_meta(a, a_path, "depth")?, parse_meta(b, b_path, "depth")?);
    if lambda.0 != lambda.1 {
        return Err(CliError::usage(format!("lambda differs: {} vs {}", lambda.0, lambda.1)));
    }
    if d.0 != d.1 {
        return Err(CliError::usage(format!("d differs: {} vs {}", d.0, d.1)));
    }
    if depth.0 != depth.1 {
        return Err(CliError::usage(format!("depth differs: {} vs {}", depth.0, depth.1)));
    }
    let levels = levels.unwrap_or(depth.0);
    if levels == 0 || levels > depth.0 {
        return Err(CliError::usage(format!("--levels must lie in 1..={}", depth.0)));
    }
    let sa = Series::from_table(a, a_path, levels)?;
    let sb = Series::from_table(b, b_path, levels)?;
    let span = |s: &Series| (s.times[0], *s.times.last().unwrap());
    let ((a0, a1), (b0, b1)) = (span(&sa), span(&sb));
    let tol = TIME_TOL * a1.abs().max(b1.abs()).max(1.0);
    if (a1 - b1).abs() > tol || (a0 - b0).abs() > tol {
        return Err(CliError::usage(format!("horizons differ: [{a0}, {a1}] vs [{b0}, {b1}]")));
    }

    let mut grid: Vec<f64> = sa.times.iter().chain(&sb.times).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() <= tol);

    let mut dist = TrajectoryDistance {
        sup: 0.0,
        sup_t: grid[0],
        sup_level: 1,
        l1: 0.0,
        points: grid.len(),
        levels,
    };
    let mut prev: Option<(f64, f64)> = None;
    for &t in &grid {
        let mut total = 0.0;
        for i in 0..levels {
            let diff = (sa.at(t, i) - sb.at(t, i)).abs();
            total += diff;
            if diff > dist.sup {
                dist.sup = diff;
                dist.sup_t = t;
                dist.sup_level = i + 1;
            }
        }
        if let Some((t0, f0)) = prev {
            dist.l1 += 0.5 * (t - t0) * (f0 + total);
        }
        prev = Some((t, total));
    }
    Ok(dist)
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let cfg = resolve(args.clone(), args.config.as_deref())?;
    let (Some(a_path), Some(b_path)) = (cfg.a.as_deref(), cfg.b.as_deref()) else {
        return Err(CliError::usage("compare needs two CSV files"));
    };
    let a = CsvTable::read(a_path)?;
    let b = CsvTable::read(b_path)?;
    let dist = trajectory_distance(&a, a_path, &b, b_path, cfg.levels)?;

    let mut meta = Metadata::new("compare");
    meta.push("a", a_path.display())
        .push("b", b_path.display())
        .push("lambda", meta_value(&a, a_path, "lambda")?)
        .push("d", meta_value(&a, a_path, "d")?)
        .push("depth", meta_value(&a, a_path, "depth")?)
        .config(&cfg);
    let mut body = Vec::new();
    writeln!(body, "{COMPARE_HEADER}")?;
    writeln!(
        body,
        "{},{},{},{},{},{}",
        dist.sup, dist.sup_t, dist.sup_level, dist.l1, dist.points, dist.levels
    )?;
    emit(cfg.out.as_deref(), &meta, &body)
}
