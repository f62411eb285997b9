//! Parameter sweeps over independent realizations.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::error::{config_err, SimError, SimResult};
use crate::realization::Prepared;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    PTdBm,
    PIsDb,
    /// Total elements of each square array (`n²`).
    ArraySize,
    StreamCount,
    AngleErrorOn,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::PTdBm,
        SweepParam::PIsDb,
        SweepParam::ArraySize,
        SweepParam::StreamCount,
        SweepParam::AngleErrorOn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::PTdBm => "p_t_dbm",
            SweepParam::PIsDb => "p_is_db",
            SweepParam::ArraySize => "array_size",
            SweepParam::StreamCount => "stream_count",
            SweepParam::AngleErrorOn => "angle_error_on",
        }
    }

    /// Writes `value` into the configuration.
    pub fn apply(self, cfg: &mut SimConfig, value: f64) -> SimResult<()> {
        let name = self.as_str();
        let whole = |v: f64| -> SimResult<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(config_err(name, format!("{v} is not a positive integer")))
            }
        };
        match self {
            SweepParam::PTdBm => cfg.p_t_dbm = value,
            SweepParam::PIsDb => cfg.p_is_db = value,
            SweepParam::ArraySize => {
                let m = whole(value)?;
                let n = (m as f64).sqrt().round() as usize;
                if n * n != m {
                    return Err(config_err(name, format!("{m} is not a perfect square")));
                }
                cfg.set_square_arrays(n);
            }
            SweepParam::StreamCount => {
                let s = whole(value)?;
                cfg.streams = [s, s];
            }
            SweepParam::AngleErrorOn => {
                cfg.imperfect_angles = match value {
                    0.0 => false,
                    1.0 => true,
                    v => return Err(config_err(name, format!("{v} is not 0 or 1"))),
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SimError::UnknownParameter(s.to_string()))
    }
}

/// One row of the long-format output.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub scenario: Arc<str>,
    pub param: Arc<str>,
    pub value: f64,
    pub realization: u64,
    pub seed: u64,
    pub metric: Cow<'static, str>,
    pub metric_value: f64,
}

/// Failure tally for one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub scenario: Arc<str>,
    pub param: Arc<str>,
    pub value: f64,
    pub realizations: usize,
    pub failed: usize,
    pub first_error: Option<String>,
}

impl PointSummary {
    pub fn failure_rate(&self) -> f64 {
        if self.realizations == 0 {
            0.0
        } else {
            self.failed as f64 / self.realizations as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub records: Vec<Record>,
    pub points: Vec<PointSummary>,
}

/// A base configuration swept along one parameter. The realization count
/// comes from the configuration.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub scenario: String,
    pub config: SimConfig,
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(
        scenario: impl Into<String>,
        config: SimConfig,
        param: SweepParam,
        values: Vec<f64>,
    ) -> Self {
        Self {
            scenario: scenario.into(),
            config,
            param,
            values,
        }
    }
}

/// Failed realizations are recorded under this metric name with value 1.
pub const FAILED_METRIC: &str = "failed";

fn pool(workers: usize) -> SimResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))
}

/// Runs every (value, realization) pair, handing the records of each sweep
/// point to `sink` in value order. `workers == 0` uses all cores. Output is
/// independent of the worker count.
pub fn run_sweep_with<F>(sweep: &Sweep, workers: usize, mut sink: F) -> SimResult<Vec<PointSummary>>
where
    F: FnMut(&[Record]) -> SimResult<()>,
{
    let pool = pool(workers)?;
    let scenario: Arc<str> = Arc::from(sweep.scenario.as_str());
    let param: Arc<str> = Arc::from(sweep.param.as_str());
    let n = sweep.config.realizations;
    let mut summaries = Vec::with_capacity(sweep.values.len());
    for &value in &sweep.values {
        let mut cfg = sweep.config.clone();
        sweep.param.apply(&mut cfg, value)?;
        let prepared = Prepared::new(&cfg)?;
        let outcomes: Vec<_> = pool.install(|| {
            (0..n as u64)
                .into_par_iter()
                .map(|r| (r, prepared.run(r)))
                .collect()
        });

        let mut records = Vec::new();
        let mut failed = 0;
        let mut first_error = None;
        for (r, outcome) in outcomes {
            let base = |seed, metric: Cow<'static, str>, metric_value| Record {
                scenario: scenario.clone(),
                param: param.clone(),
                value,
                realization: r,
                seed,
                metric,
                metric_value,
            };
            match outcome {
                Ok(out) => records.extend(
                    out.metrics
                        .iter()
                        .map(|m| base(out.seed, Cow::Borrowed(m.name), m.value)),
                ),
                Err(fail) => {
                    failed += 1;
                    first_error.get_or_insert_with(|| format!("realization {r}: {}", fail.error));
                    records.push(base(fail.seed, Cow::Borrowed(FAILED_METRIC), 1.0));
                }
            }
        }
        sink(&records)?;
        summaries.push(PointSummary {
            scenario: scenario.clone(),
            param: param.clone(),
            value,
            realizations: n,
            failed,
            first_error,
        });
    }
    Ok(summaries)
}

/// [`run_sweep_with`] collecting all records in memory.
pub fn run_sweep(sweep: &Sweep, workers: usize) -> SimResult<SweepResult> {
    let mut records = Vec::new();
    let points = run_sweep_with(sweep, workers, |r| {
        records.extend_from_slice(r);
        Ok(())
    })?;
    Ok(SweepResult { records, points })
}

/// Stable sort by (scenario, param, value, realization); metric order
/// within a realization is kept.
pub fn sort_records(records: &mut [Record]) {
    records.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then_with(|| a.param.cmp(&b.param))
            .then_with(|| a.value.total_cmp(&b.value))
            .then_with(|| a.realization.cmp(&b.realization))
    });
}

/// Mean of `metric` per sweep value, skipping failed realizations.
pub fn mean_by_value(records: &[Record], metric: &str) -> Vec<(f64, f64)> {
    let mut acc: Vec<(f64, f64, usize)> = Vec::new();
    for r in records.iter().filter(|r| r.metric == metric) {
        match acc.iter_mut().find(|a| a.0 == r.value) {
            Some(a) => {
                a.1 += r.metric_value;
                a.2 += 1;
            }
            None => acc.push((r.value, r.metric_value, 1)),
        }
    }
    acc.into_iter().map(|(v, s, n)| (v, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;

    fn small() -> SimConfig {
        let mut c = SimConfig::default();
        c.set_square_arrays(8);
        c.realizations = 6;
        c
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in SweepParam::ALL {
            assert_eq!(p.as_str().parse::<SweepParam>().unwrap(), p);
        }
        assert!(matches!(
            "p_t".parse::<SweepParam>(),
            Err(SimError::UnknownParameter(_))
        ));
    }

    #[test]
    fn apply_checks_values() {
        let mut c = SimConfig::default();
        SweepParam::ArraySize.apply(&mut c, 144.0).unwrap();
        assert_eq!(
            (c.nodes[1].rx_array.rows, c.nodes[0].tx_array.cols),
            (12, 12)
        );
        assert!(SweepParam::ArraySize.apply(&mut c, 150.0).is_err());
        assert!(SweepParam::StreamCount.apply(&mut c, 2.5).is_err());
        SweepParam::StreamCount.apply(&mut c, 3.0).unwrap();
        assert_eq!(c.streams, [3, 3]);
        assert!(SweepParam::AngleErrorOn.apply(&mut c, 0.5).is_err());
        SweepParam::AngleErrorOn.apply(&mut c, 1.0).unwrap();
        assert!(c.imperfect_angles);
    }

    #[test]
    fn empty_values_give_empty_result() {
        let r = run_sweep(&Sweep::new("x", small(), SweepParam::PIsDb, vec![]), 1).unwrap();
        assert!(r.records.is_empty() && r.points.is_empty());
    }

    #[test]
    fn cross_product_and_order() {
        let s = Sweep::new(
            "abjhpc_svd",
            SimConfig {
                mode: Mode::AbjhpcSvd,
                ..small()
            },
            SweepParam::PIsDb,
            vec![20.0, 0.0],
        );
        let r = run_sweep(&s, 2).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r
            .points
            .iter()
            .all(|p| p.failed == 0 && p.realizations == 6));
        let firsts: Vec<(f64, u64)> = r
            .records
            .iter()
            .filter(|x| x.metric == "rate_total")
            .map(|x| (x.value, x.realization))
            .collect();
        assert_eq!(firsts.len(), 12);
        assert_eq!(firsts[0], (20.0, 0));
        assert_eq!(firsts[6], (0.0, 0));
        let mut sorted = r.records.clone();
        sort_records(&mut sorted);
        assert_eq!(sorted[0].value, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let s = Sweep::new("abjhpc_smmse", small(), SweepParam::PTdBm, vec![10.0, 30.0]);
        let a = run_sweep(&s, 1).unwrap();
        let b = run_sweep(&s, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_counted_not_raised() {
        let mut c = small();
        for node in &mut c.nodes {
            let d = node.intended[0].departure;
            node.self_interference[0].departure.elevation_deg = d.elevation_deg;
            node.self_interference[0].departure.azimuth_deg = d.azimuth_deg;
            node.self_interference[0].departure.elevation_spread_deg = 30.0;
            node.self_interference[0].departure.azimuth_spread_deg = 40.0;
        }
        let r = run_sweep(&Sweep::new("bad", c, SweepParam::PIsDb, vec![0.0]), 1).unwrap();
        assert_eq!(r.points[0].failed, 6);
        assert_eq!(r.points[0].failure_rate(), 1.0);
        assert!(r.points[0]
            .first_error
            .as_deref()
            .unwrap()
            .contains("no feasible beams"));
        assert_eq!(r.records.len(), 6);
        assert!(r.records.iter().all(|x| x.metric == FAILED_METRIC));
    }

    #[test]
    fn means_group_by_value() {
        let s = Sweep::new(
            "abjhpc_svd",
            SimConfig {
                mode: Mode::AbjhpcSvd,
                ..small()
            },
            SweepParam::PIsDb,
            vec![0.0, 40.0],
        );
        let r = run_sweep(&s, 1).unwrap();
        let m = mean_by_value(&r.records, "si_los_none");
        assert_eq!(m.len(), 2);
        assert!((10.0 * m[0].1.log10()).abs() < 1e-9);
        assert!((10.0 * m[1].1.log10() + 40.0).abs() < 1e-9);
    }
}
