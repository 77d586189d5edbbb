use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bound_report, clt_conditions, kurtosis_surrogate};
use crate::copies::{binomial_u128, MAX_ENUM_N};
use crate::distance::estimate;
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Output};
use crate::hoeffding::verify;
use crate::moments::{moment_report, variance_exact, Arithmetic, MomentReport};
use crate::pattern::{remove_isolated_vertices, Pattern};
use crate::prob::{ProbabilitySpec, ScheduleSpec};
use crate::sim::{simulate_z, standardize};
use crate::surrogate::surrogates;

pub const SKIPPED: &str = "skipped: guard";

/// One `(n, quantity)` result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub n: u64,
    pub quantity: String,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub witness: String,
    pub status: String,
}

impl Row {
    fn ok(n: u64, quantity: &str, value: f64) -> Self {
        Row {
            n,
            quantity: quantity.into(),
            value: Some(value),
            lower: None,
            upper: None,
            witness: String::new(),
            status: "ok".into(),
        }
    }

    fn witnessed(n: u64, quantity: &str, value: f64, witness: &str) -> Self {
        Row {
            witness: witness.into(),
            ..Self::ok(n, quantity, value)
        }
    }

    fn skipped(n: u64, quantity: &str) -> Self {
        Row {
            value: None,
            status: SKIPPED.into(),
            ..Self::ok(n, quantity, 0.0)
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.status == SKIPPED
    }
}

/// All rows of a sweep, in grid order and then in output order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<Row>,
}

impl SweepTable {
    pub fn has_skips(&self) -> bool {
        self.rows.iter().any(Row::is_skipped)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "quantity", "value", "lower", "upper", "witness", "status"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.quantity.clone(),
                fmt_opt(r.value),
                fmt_opt(r.lower),
                fmt_opt(r.upper),
                r.witness.clone(),
                r.status.clone(),
            ])?;
        }
        finish(w)
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Evaluates every requested output at every grid point on a pool with
/// `workers` threads. The table does not depend on `workers`.
pub fn run_sweep(cfg: &ExperimentConfig, pattern: &Pattern, workers: usize) -> Result<SweepTable> {
    let schedule = cfg.validate(pattern)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per_point: Vec<Vec<Row>> = pool.install(|| {
        cfg.n_grid
            .par_iter()
            .map(|&n| grid_point(cfg, pattern, &schedule, n))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepTable {
        rows: per_point.into_iter().flatten().collect(),
    })
}

fn grid_point(cfg: &ExperimentConfig, pattern: &Pattern, schedule: &ScheduleSpec, n: u64) -> Result<Vec<Row>> {
    let spec = schedule.at(n as f64)?;
    let (core, isolated) = remove_isolated_vertices(pattern)?;
    let point = Point {
        cfg,
        core: &core,
        n,
        spec: &spec,
        scale: binomial_u128((n as usize).saturating_sub(core.vertex_count()), isolated).unwrap_or(0) as f64,
        enumerable: n as usize <= MAX_ENUM_N && n as usize >= pattern.vertex_count(),
    };
    let mut rows = Vec::new();
    for out in &cfg.outputs {
        match out {
            Output::Moments => point.moments(&mut rows)?,
            Output::Bounds => point.bounds(&mut rows)?,
            Output::Conditions => point.conditions(&mut rows)?,
            Output::Distances => point.distances(&mut rows)?,
            Output::HoeffdingVerify => point.hoeffding(&mut rows)?,
            Output::Kurtosis => point.kurtosis(&mut rows)?,
        }
    }
    Ok(rows)
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    core: &'a Pattern,
    n: u64,
    spec: &'a ProbabilitySpec,
    /// Placements of the isolated vertices, multiplying raw counts.
    scale: f64,
    enumerable: bool,
}

/// Maps a guard failure to `None`, passing other errors through.
fn guarded<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Guard { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Point<'_> {
    fn moment_report(&self) -> Result<Option<MomentReport>> {
        if !self.enumerable {
            return Ok(None);
        }
        guarded(moment_report(
            self.core,
            self.n as usize,
            self.spec,
            effective_arithmetic(self.cfg.arithmetic, self.spec),
            &self.cfg.guards,
        ))
    }

    fn moments(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let names = ["mean", "variance", "fourth_central", "excess_kurtosis"];
        match self.moment_report()? {
            Some(r) => {
                rows.push(Row::ok(n, names[0], r.mean * self.scale));
                rows.push(Row::ok(n, names[1], r.variance * self.scale.powi(2)));
                match (r.fourth_central, r.excess_kurtosis) {
                    (Some(f), Some(k)) => {
                        rows.push(Row::ok(n, names[2], f * self.scale.powi(4)));
                        rows.push(Row::ok(n, names[3], k));
                    }
                    _ => {
                        rows.push(Row::skipped(n, names[2]));
                        rows.push(Row::skipped(n, names[3]));
                    }
                }
            }
            None => rows.extend(names.iter().map(|q| Row::skipped(n, q))),
        }
        let s = surrogates(self.core, n as f64, self.spec)?;
        rows.push(Row::ok(n, "mean_surrogate", s.mean_surrogate * self.scale));
        rows.push(Row::witnessed(
            n,
            "variance_surrogate",
            s.variance_surrogate * self.scale.powi(2),
            &s.argmax,
        ));
        Ok(())
    }

    fn bounds(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let b = bound_report(self.core, n as f64, self.spec)?;
        rows.push(Row::witnessed(n, "bound_wasserstein", b.wasserstein.value, &b.wasserstein.witness.witness));
        rows.push(Row::witnessed(n, "bound_kolmogorov", b.kolmogorov.value, &b.kolmogorov.witness.witness));
        rows.push(Row::witnessed(n, "bound_bounded_p", b.bounded_p.value, &b.bounded_p.witness));
        rows.push(Row::witnessed(
            n,
            "bound_sufficient_weighted",
            b.sufficient.weighted,
            &b.sufficient.weighted_witness.witness,
        ));
        rows.push(Row::witnessed(
            n,
            "bound_sufficient_simplified",
            b.sufficient.simplified,
            &b.sufficient.simplified_witness.witness,
        ));
        rows.push(Row::witnessed(n, "bound_jlr", b.jlr.value, &b.jlr.numerator_witness.witness));
        Ok(())
    }

    fn conditions(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let c = clt_conditions(self.core, n as f64, self.spec)?;
        rows.push(Row::witnessed(n, "min_expected", c.min_expected.value, &c.min_expected.witness));
        rows.push(Row::witnessed(
            n,
            "max_variance_weight",
            c.max_variance_weight.value,
            &c.max_variance_weight.witness,
        ));
        let weak = &c.edges[c.weakest_edge];
        rows.push(Row::witnessed(n, "edge_condition_min", weak.value, &weak.edge));
        if let Some(h) = c.homogeneous {
            rows.push(Row::ok(n, "homogeneous_min_expected", h.min_expected));
            rows.push(Row::ok(n, "homogeneous_complement", h.complement));
            rows.push(Row::ok(n, "homogeneous_combined", h.combined));
        }
        Ok(())
    }

    fn distances(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let names = ["dk_empirical", "dw_empirical"];
        let var = if self.enumerable {
            guarded(variance_exact::<f64>(self.core, n as usize, self.spec, &self.cfg.guards))?
        } else {
            None
        };
        let Some(var) = var else {
            rows.extend(names.iter().map(|q| Row::skipped(n, q)));
            return Ok(());
        };
        let mean: f64 = crate::moments::mean_exact(self.core, n as usize, self.spec)?;
        let batch = simulate_z(self.core, n as usize, self.spec, self.cfg.reps, self.cfg.seed)?;
        let z = standardize(&batch.values, mean, var.sqrt())?;
        let d = estimate(&z, self.cfg.delta)?;
        rows.push(Row {
            lower: Some((d.d_k - d.dkw_radius).max(0.0)),
            upper: Some((d.d_k + d.dkw_radius).min(1.0)),
            ..Row::ok(n, names[0], d.d_k)
        });
        rows.push(Row::ok(n, names[1], d.d_w));
        Ok(())
    }

    fn hoeffding(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let names = [
            "hoeffding_completeness_deviation",
            "hoeffding_reconstruction_deviation",
            "hoeffding_alpha_deviation",
        ];
        let report = if self.enumerable {
            guarded(verify(
                self.core,
                n as usize,
                self.spec,
                self.cfg.hoeffding_reps,
                self.cfg.seed,
                &self.cfg.guards,
            ))?
        } else {
            None
        };
        match report {
            Some(r) => {
                rows.push(Row::ok(n, names[0], r.completeness_deviation));
                rows.push(Row::ok(n, names[1], r.max_reconstruction_deviation));
                let alpha = r
                    .alpha
                    .iter()
                    .filter(|a| a.uniform)
                    .map(|a| a.max_deviation)
                    .fold(0.0, f64::max);
                rows.push(Row::ok(n, names[2], alpha));
            }
            None => rows.extend(names.iter().map(|q| Row::skipped(n, q))),
        }
        Ok(())
    }

    fn kurtosis(&self, rows: &mut Vec<Row>) -> Result<()> {
        let n = self.n;
        let sur = match kurtosis_surrogate(self.core, n as f64, self.spec) {
            Ok(s) => s,
            Err(Error::NotHomogeneous) => return Ok(()),
            Err(e) => return Err(e),
        };
        rows.push(Row::witnessed(n, "kurtosis_surrogate", sur.value, &sur.witness.witness));
        rows.push(Row::ok(n, "kurtosis_companion", sur.companion));
        let exact = match self.moment_report()? {
            Some(MomentReport {
                excess_kurtosis: Some(k),
                ..
            }) => Some(k),
            _ => None,
        };
        match exact {
            Some(k) => {
                rows.push(Row::ok(n, "kurtosis_exact", k));
                rows.push(Row::ok(n, "kurtosis_ratio", k / sur.value));
            }
            None => {
                rows.push(Row::skipped(n, "kurtosis_exact"));
                rows.push(Row::skipped(n, "kurtosis_ratio"));
            }
        }
        Ok(())
    }
}

/// Arithmetic that the exact engines can use for a spec.
pub fn effective_arithmetic(requested: Arithmetic, spec: &ProbabilitySpec) -> Arithmetic {
    if requested == Arithmetic::Rational && !spec.is_exact() {
        Arithmetic::Float
    } else {
        requested
    }
}
