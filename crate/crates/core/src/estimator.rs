//! The Hsing EI estimator on observable series and its ensemble sweeps.
//!
//! For a series `X_0, …, X_{n-1}`, threshold `u` and gap `q`,
//!
//! ```text
//! θ̂(u,q) = #{i <= n-1-q : X_i > u, X_{i+1} <= u, …, X_{i+q} <= u}
//!          / #{i <= n-1-q : X_i > u}
//! ```
//!
//! Both sums run over the same truncated index range so that `θ̂ ∈ [0,1]`
//! holds structurally; exceedance is strict. A record with no exceedances is
//! flagged undefined rather than erroring, and ensemble means skip undefined
//! records while reporting how many were defined.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::dynamics::ObservableSeries;
use crate::error::{Error, Result};

/// One Hsing estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub u: u32,
    pub q: u32,
    /// Count of cluster-terminating exceedances.
    pub numerator: u64,
    /// Count of exceedances.
    pub denominator: u64,
    /// `numerator / denominator`, or `None` when there were no exceedances.
    pub theta_hat: Option<f64>,
}

/// The Hsing estimator on one series.
pub fn hsing_theta(levels: &[u32], u: u32, q: u32) -> EstimateRecord {
    let n = levels.len();
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    if n > q as usize {
        let last = n - 1 - q as usize;
        for i in 0..=last {
            if levels[i] > u {
                denominator += 1;
                if levels[i + 1..=i + q as usize].iter().all(|&l| l <= u) {
                    numerator += 1;
                }
            }
        }
    }
    EstimateRecord {
        u,
        q,
        numerator,
        denominator,
        theta_hat: (denominator > 0).then(|| numerator as f64 / denominator as f64),
    }
}

/// Same estimate from precomputed exceedance positions (ascending indices
/// `i` with `levels[i] > u` over the full series): an exceedance at `p`
/// terminates its cluster iff the next exceedance is more than `q` steps
/// away.
fn hsing_from_positions(positions: &[usize], n: usize, u: u32, q: u32) -> EstimateRecord {
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    if n > q as usize {
        let last = n - 1 - q as usize;
        for (idx, &p) in positions.iter().enumerate() {
            if p > last {
                break;
            }
            denominator += 1;
            let terminal = match positions.get(idx + 1) {
                Some(&next) => next > p + q as usize,
                None => true,
            };
            if terminal {
                numerator += 1;
            }
        }
    }
    EstimateRecord {
        u,
        q,
        numerator,
        denominator,
        theta_hat: (denominator > 0).then(|| numerator as f64 / denominator as f64),
    }
}

/// Ensemble metadata carried into every sweep output.
#[derive(Debug, Clone)]
pub struct SweepMeta {
    pub map_id: String,
    pub observable: String,
    pub n: usize,
    pub ell: u32,
    pub seed: u64,
    pub burnin: u32,
}

/// One `(u, q)` aggregate over the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub u: u32,
    pub q: u32,
    /// Mean of the defined estimates, `None` when none were defined.
    pub mean: Option<f64>,
    /// Sample standard deviation of the defined estimates (needs >= 2).
    pub sd: Option<f64>,
    pub defined: u32,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub meta: SweepMeta,
    pub rows: Vec<SweepRow>,
}

/// Order-insensitive pairwise summation (inputs are sorted first), so sweep
/// aggregates are bit-identical under any parallelism and any ensemble
/// permutation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn aggregate(thetas: &mut [f64]) -> (Option<f64>, Option<f64>, u32) {
    let defined = thetas.len() as u32;
    if defined == 0 {
        return (None, None, 0);
    }
    thetas.sort_by(f64::total_cmp);
    let mean = pairwise_sum(thetas) / defined as f64;
    let sd = if defined >= 2 {
        let mut sq: Vec<f64> = thetas.iter().map(|t| (t - mean) * (t - mean)).collect();
        sq.sort_by(f64::total_cmp);
        Some((pairwise_sum(&sq) / (defined as f64 - 1.0)).sqrt())
    } else {
        None
    };
    (Some(mean), sd, defined)
}

/// Per-`(u,q)` ensemble means of the Hsing estimator, rows ordered by
/// ascending `u` then ascending `q`.
pub fn sweep(
    ensemble: &[ObservableSeries],
    u_range: RangeInclusive<u32>,
    q_list: &[u32],
    meta: SweepMeta,
) -> Result<SweepTable> {
    if ensemble.is_empty() {
        return Err(Error::Invalid("empty ensemble".into()));
    }
    if q_list.is_empty() {
        return Err(Error::Invalid("empty q list".into()));
    }
    let mut qs = q_list.to_vec();
    qs.sort_unstable();
    qs.dedup();
    let us: Vec<u32> = u_range.clone().collect();
    if us.is_empty() {
        return Err(Error::Invalid("empty threshold range".into()));
    }

    // per-orbit estimates in deterministic orbit order
    let per_orbit: Vec<Vec<Option<f64>>> = ensemble
        .par_iter()
        .map(|series| {
            let n = series.levels.len();
            let mut out = Vec::with_capacity(us.len() * qs.len());
            for &u in &us {
                let positions: Vec<usize> = series
                    .levels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &l)| (l > u).then_some(i))
                    .collect();
                for &q in &qs {
                    out.push(hsing_from_positions(&positions, n, u, q).theta_hat);
                }
            }
            out
        })
        .collect();

    let mut rows = Vec::with_capacity(us.len() * qs.len());
    for (cell, (&u, &q)) in us
        .iter()
        .flat_map(|u| qs.iter().map(move |q| (u, q)))
        .enumerate()
    {
        let mut thetas: Vec<f64> = per_orbit.iter().filter_map(|o| o[cell]).collect();
        let (mean, sd, defined) = aggregate(&mut thetas);
        rows.push(SweepRow {
            u,
            q,
            mean,
            sd,
            defined,
        });
    }
    Ok(SweepTable { meta, rows })
}

/// A maximal threshold interval on which the sweep means are flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub u_lo: u32,
    pub u_hi: u32,
    pub value: f64,
}

/// Maximal `u`-intervals where the means vary by less than `eps` across
/// every window of `window` consecutive thresholds and across all `q`.
/// Thresholds with any undefined mean break a plateau. Windows of fewer
/// than two thresholds are not meaningful; `window` is clamped to 2.
pub fn stability_region(table: &SweepTable, window: usize, eps: f64) -> Vec<Plateau> {
    let window = window.max(2);
    let mut us: Vec<u32> = table.rows.iter().map(|r| r.u).collect();
    us.sort_unstable();
    us.dedup();

    let means_at = |u: u32| -> Option<Vec<f64>> {
        let vals: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.u == u)
            .map(|r| r.mean)
            .collect::<Option<Vec<f64>>>()?;
        (!vals.is_empty()).then_some(vals)
    };
    let columns: Vec<Option<Vec<f64>>> = us.iter().map(|&u| means_at(u)).collect();

    let mut flat_windows = Vec::new();
    if us.len() >= window {
        for start in 0..=us.len() - window {
            let slice = &columns[start..start + window];
            if slice.iter().any(Option::is_none) {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for col in slice.iter().flatten() {
                for &v in col {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi - lo < eps {
                flat_windows.push((start, start + window - 1));
            }
        }
    }

    let mut plateaus: Vec<Plateau> = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for &(s, e) in &flat_windows {
        current = match current {
            Some((cs, ce)) if s <= ce + 1 => Some((cs, ce.max(e))),
            Some(done) => {
                plateaus.push(close_plateau(&us, &columns, done));
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some(done) = current {
        plateaus.push(close_plateau(&us, &columns, done));
    }
    plateaus
}

fn close_plateau(us: &[u32], columns: &[Option<Vec<f64>>], span: (usize, usize)) -> Plateau {
    let mut vals: Vec<f64> = columns[span.0..=span.1]
        .iter()
        .flatten()
        .flat_map(|col| col.iter().copied())
        .collect();
    vals.sort_by(f64::total_cmp);
    Plateau {
        u_lo: us[span.0],
        u_hi: us[span.1],
        value: pairwise_sum(&vals) / vals.len() as f64,
    }
}

/// Decimal with 12 significant digits; `nan` for missing values.
pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// The sweep CSV column header.
pub const SWEEP_CSV_COLUMNS: &str =
    "map,observable,n,ell,seed,u,q,mean_theta,sd_theta,defined_count";

/// Writes only the data rows of a sweep table (callers may concatenate
/// several tables under one column header).
pub fn write_sweep_rows(table: &SweepTable, out: &mut impl Write) -> std::io::Result<()> {
    let m = &table.meta;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            m.map_id,
            m.observable,
            m.n,
            m.ell,
            m.seed,
            r.u,
            r.q,
            r.mean.map_or("nan".into(), fmt_sig12),
            r.sd.map_or("nan".into(), fmt_sig12),
            r.defined
        )?;
    }
    Ok(())
}

/// Writes the sweep CSV: `#`-prefixed header block, the column header, then
/// one row per `(u, q)`.
pub fn write_sweep_csv(
    table: &SweepTable,
    header_lines: &[String],
    out: &mut impl Write,
) -> std::io::Result<()> {
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{SWEEP_CSV_COLUMNS}")?;
    write_sweep_rows(table, out)
}
