//! Parameter sweeps and log-log slope fits.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CostSpec, EtaPolicy, Mode, RunConfig};
use super::run::run;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    Horizon(Vec<usize>),
    /// Margin exponent of Tsybakov cost schedules (and of the matching rate
    /// when the base config uses `eta = "tsybakov:..."`).
    Alpha(Vec<f64>),
    Cost(Vec<f64>),
}

/// `horizon:<t>,<t>,...`, `alpha:<a>,...` or `cost:<c>,...`.
impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Config { field: "axis", msg };
        let (name, list) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("expected `<axis>:<values>`, got `{s}`")))?;
        fn values<T: FromStr>(list: &str) -> Option<Vec<T>> {
            list.split(',').map(|v| v.trim().parse().ok()).collect()
        }
        let parsed = match name {
            "horizon" => values(list).map(SweepAxis::Horizon),
            "alpha" => values(list).map(SweepAxis::Alpha),
            "cost" => values(list).map(SweepAxis::Cost),
            _ => return Err(bad(format!("unknown axis `{name}`"))),
        };
        parsed.ok_or_else(|| bad(format!("cannot parse values `{list}`")))
    }
}

impl SweepAxis {
    fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::Horizon(v) => v.iter().map(|&t| t as f64).collect(),
            SweepAxis::Alpha(v) | SweepAxis::Cost(v) => v.clone(),
        }
    }

    fn apply(&self, base: &RunConfig, i: usize) -> Result<RunConfig> {
        let mut c = base.clone();
        match self {
            SweepAxis::Horizon(v) => c.t = v[i],
            SweepAxis::Alpha(v) => {
                let beta = match base.costs {
                    Some(CostSpec::Tsybakov { beta, .. }) => beta,
                    _ => 1.0,
                };
                c.costs = Some(CostSpec::Tsybakov { alpha: v[i], beta });
                if let Some(EtaPolicy::Tsybakov(_)) = c.eta {
                    c.eta = Some(EtaPolicy::Tsybakov(v[i]));
                }
            }
            SweepAxis::Cost(v) => match c.mode {
                Mode::BinaryChangingC | Mode::Adaptive => c.costs = Some(CostSpec::Constant(v[i])),
                _ => c.c = v[i],
            },
        }
        c.validate()?;
        Ok(c)
    }
}

/// One line of the sweep CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    /// Mean regret over the repeats.
    pub regret: f64,
    /// Mean of the report's first bound.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln regret` against `ln T` for horizon sweeps.
    pub slope: Option<f64>,
    /// Whether every underlying run passed its bound checks.
    pub all_pass: bool,
}

impl SweepResult {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs `base` once per axis value and repeat, in parallel. Repeat `j` of
/// point `i` is seeded with `derive_seed(base.seed, i * repeats + j)`.
pub fn sweep(base: &RunConfig, axis: &SweepAxis, repeats: usize) -> Result<SweepResult> {
    let values = axis.values();
    if values.len() < 4 {
        return Err(Error::Config {
            field: "sweep",
            msg: format!("need at least 4 axis values, got {}", values.len()),
        });
    }
    if repeats == 0 {
        return Err(Error::Config {
            field: "repeats",
            msg: "need at least one repeat".into(),
        });
    }
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..repeats).map(move |j| (i, j)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut config = axis.apply(base, i)?;
            config.seed = derive_seed(base.seed, (i * repeats + j) as u64);
            let report = run(&config)?.report;
            let bound = report.bounds.first().map_or(f64::NAN, |b| b.value);
            Ok((i, report.regret, bound, report.pass))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<SweepRow> = values
        .iter()
        .map(|&axis| SweepRow {
            axis,
            regret: 0.0,
            bound: 0.0,
        })
        .collect();
    for &(i, regret, bound, _) in &outcomes {
        rows[i].regret += regret / repeats as f64;
        rows[i].bound += bound / repeats as f64;
    }
    let slope = match axis {
        SweepAxis::Horizon(_) => {
            let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.axis, r.regret)).collect();
            Some(log_log_slope(&points)?)
        }
        _ => None,
    };
    Ok(SweepResult {
        rows,
        slope,
        all_pass: outcomes.iter().all(|o| o.3),
    })
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Shape {
            expected: 2,
            got: points.len(),
        });
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Construction {
            what: "slope fit",
            msg: format!("log of nonpositive point ({x}, {y})"),
        });
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Construction {
            what: "slope fit",
            msg: "all axis values are equal".into(),
        });
    }
    Ok(sxy / sxx)
}
