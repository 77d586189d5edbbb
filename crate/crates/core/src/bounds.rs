//! Normality conditions and normal-approximation bounds, evaluated with all
//! implied constants set to one.
//!
//! Everything is computed in log space from the stored `(p, q)` pairs, so
//! `n` may be far beyond the enumeration range. Minima and maxima range over
//! every nonempty edge subset of the pattern and report the realising one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::slope::{loglog_slope, Trend};
use crate::moments::check_pattern;
use crate::pattern::{fmt_edge, Pattern};
use crate::prob::{ProbabilitySpec, ScheduleSpec};
use crate::surrogate::{argmax, argmin, sub_terms, SubTerm};

/// An extremum over sub-patterns together with the sub-pattern realising it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witnessed {
    pub value: f64,
    pub witness: String,
    pub edge_subset: u64,
}

impl Witnessed {
    fn from_ln(terms: &[SubTerm], (i, ln): (usize, f64)) -> Self {
        Witnessed {
            value: ln.exp(),
            witness: terms[i].label.clone(),
            edge_subset: terms[i].edge_subset,
        }
    }
}

/// One edge of the pattern with its probabilities under a spec.
#[derive(Clone, Debug)]
struct EdgeData {
    label: String,
    size: usize,
    p: f64,
    q: f64,
}

/// Log-space view of one `(pattern, n, spec)`.
struct Ctx {
    ln_n: f64,
    terms: Vec<SubTerm>,
    edges: Vec<EdgeData>,
}

impl Ctx {
    fn new(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<Self> {
        check_pattern(p)?;
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::OutOfRange(format!("n must be at least 1, got {n}")));
        }
        let edges = p
            .edges()
            .iter()
            .map(|&m| {
                let size = m.count_ones() as usize;
                let e = spec.get(size)?;
                Ok(EdgeData {
                    label: fmt_edge(m as u64),
                    size,
                    p: e.p,
                    q: e.q,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ctx {
            ln_n: n.ln(),
            terms: sub_terms(p, spec)?,
            edges,
        })
    }

    /// `min_F n^{v_F} P_F`.
    fn min_expected(&self) -> Witnessed {
        let best = argmin(self.terms.iter().map(|t| t.ln_expected_copies(self.ln_n))).unwrap();
        Witnessed::from_ln(&self.terms, best)
    }

    /// `max_F n^{-v_F} Q_F / P_F`.
    fn max_variance_weight(&self) -> Witnessed {
        let best = argmax(self.terms.iter().map(|t| t.ln_variance_weight(self.ln_n))).unwrap();
        Witnessed::from_ln(&self.terms, best)
    }

    /// `min_F n^{v_F} P_F / Q_F`.
    fn min_expected_over_q(&self) -> Witnessed {
        let best = argmin(
            self.terms
                .iter()
                .map(|t| t.ln_expected_copies(self.ln_n) - t.ln_q),
        )
        .unwrap();
        Witnessed::from_ln(&self.terms, best)
    }

    /// `ln(n^{-|e|} (1 - p))`.
    fn ln_edge_weight(&self, e: &EdgeData) -> f64 {
        e.q.ln() - e.size as f64 * self.ln_n
    }

    /// `ln(1 / ((1 - p) n^{|e|}))`.
    fn ln_complement(&self, e: &EdgeData) -> f64 {
        -e.q.ln() - e.size as f64 * self.ln_n
    }
}

/// Largest value over the edges with `p > 1/2`; zero when there are none.
fn heavy_max(ctx: &Ctx, f: impl Fn(&EdgeData) -> f64) -> (f64, Option<String>) {
    let mut best: (f64, Option<String>) = (0.0, None);
    for e in ctx.edges.iter().filter(|e| e.p > 0.5) {
        let v = f(e);
        if best.1.is_none() || v > best.0 {
            best = (v, Some(e.label.clone()));
        }
    }
    best
}

/// Outcome of the threshold check along a schedule.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    /// `(n, min_F n^{v_F} P_F)` per grid point.
    pub points: Vec<(f64, f64)>,
    pub witnesses: Vec<String>,
    pub slope: f64,
    pub trend: Trend,
    pub verdict: ThresholdVerdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVerdict {
    /// `P(Z > 0) -> 1`.
    PresentWhp,
    /// `P(Z > 0) -> 0`.
    AbsentWhp,
    Inconclusive,
}

/// Classifies `P(Z > 0)` by the trend of `min_F n^{v_F} P_F` along the grid.
pub fn threshold_classify(p: &Pattern, grid: &[f64], schedule: &ScheduleSpec) -> Result<ThresholdReport> {
    let mut points = Vec::with_capacity(grid.len());
    let mut witnesses = Vec::with_capacity(grid.len());
    for &n in grid {
        let ctx = Ctx::new(p, n, &schedule.at(n)?)?;
        let m = ctx.min_expected();
        points.push((n, m.value));
        witnesses.push(m.witness);
    }
    let slope = loglog_slope(&points)?;
    let trend = Trend::from_slope(slope);
    let verdict = match trend {
        Trend::Diverging => ThresholdVerdict::PresentWhp,
        Trend::Vanishing => ThresholdVerdict::AbsentWhp,
        Trend::Bounded => ThresholdVerdict::Inconclusive,
    };
    Ok(ThresholdReport {
        points,
        witnesses,
        slope,
        trend,
        verdict,
    })
}

/// The per-edge expression `n^{|e|}(1-p) + max_F(...) / (n^{-|e|}(1-p))`.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeCondition {
    pub edge: String,
    pub size: usize,
    pub dense_term: f64,
    pub quotient: f64,
    pub value: f64,
}

/// Conditions that only make sense for one probability shared by all sizes.
#[derive(Clone, Debug, Serialize)]
pub struct HomogeneousConditions {
    /// `min_F p^{e_F} n^{v_F}`.
    pub min_expected: f64,
    /// `(1 - p) n^{min |e|}`.
    pub complement: f64,
    /// `(1 - p) min_F p^{e_F} n^{v_F}`.
    pub combined: f64,
}

/// Both normality conditions at one `n`, with witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub n: f64,
    pub min_expected: Witnessed,
    pub max_variance_weight: Witnessed,
    pub edges: Vec<EdgeCondition>,
    /// Index into `edges` of the smallest per-edge value.
    pub weakest_edge: usize,
    pub homogeneous: Option<HomogeneousConditions>,
}

pub fn clt_conditions(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<ConditionReport> {
    let ctx = Ctx::new(p, n, spec)?;
    let max_w = ctx.max_variance_weight();
    let ln_max = max_w.value.ln();
    let edges: Vec<EdgeCondition> = ctx
        .edges
        .iter()
        .map(|e| {
            let dense_term = (e.q.ln() + e.size as f64 * ctx.ln_n).exp();
            let quotient = (ln_max - ctx.ln_edge_weight(e)).exp();
            EdgeCondition {
                edge: e.label.clone(),
                size: e.size,
                dense_term,
                quotient,
                value: dense_term + quotient,
            }
        })
        .collect();
    let weakest_edge = argmin(edges.iter().map(|e| e.value)).unwrap().0;
    let homogeneous = homogeneous_q(p, spec).map(|q| {
        let min_expected = ctx.min_expected().value;
        let min_size = p.min_edge_size().expect("pattern has edges") as i32;
        HomogeneousConditions {
            min_expected,
            complement: q * n.powi(min_size),
            combined: q * min_expected,
        }
    });
    Ok(ConditionReport {
        n,
        min_expected: ctx.min_expected(),
        max_variance_weight: max_w,
        edges,
        weakest_edge,
        homogeneous,
    })
}

/// `q` when every size of the pattern has the same `(p, q)`.
fn homogeneous_q(p: &Pattern, spec: &ProbabilitySpec) -> Option<f64> {
    let sizes = p.distinct_sizes();
    let first = spec.get(sizes[0]).ok()?;
    sizes[1..]
        .iter()
        .all(|&k| spec.get(k).is_ok_and(|e| e == first))
        .then_some(first.q)
}

/// Trends of both conditions along a schedule.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionTrend {
    pub reports: Vec<ConditionReport>,
    pub min_expected_slope: f64,
    /// Slope of the smallest per-edge value.
    pub weakest_edge_slope: f64,
    /// Both slopes diverge.
    pub normal_limit: bool,
}

pub fn condition_trend(p: &Pattern, grid: &[f64], schedule: &ScheduleSpec) -> Result<ConditionTrend> {
    let reports = grid
        .iter()
        .map(|&n| clt_conditions(p, n, &schedule.at(n)?))
        .collect::<Result<Vec<_>>>()?;
    let series = |f: &dyn Fn(&ConditionReport) -> f64| {
        loglog_slope(&reports.iter().map(|r| (r.n, f(r))).collect::<Vec<_>>())
    };
    let min_expected_slope = series(&|r| r.min_expected.value)?;
    let weakest_edge_slope = series(&|r| r.edges[r.weakest_edge].value)?;
    Ok(ConditionTrend {
        normal_limit: Trend::from_slope(min_expected_slope) == Trend::Diverging
            && Trend::from_slope(weakest_edge_slope) == Trend::Diverging,
        reports,
        min_expected_slope,
        weakest_edge_slope,
    })
}

/// Which operand of a per-edge minimum was selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `n^{-|e|}(1-p) / max_F n^{-v_F} Q_F / P_F`.
    Ratio,
    /// `1 / ((1-p) n^{|e|})`.
    Complement,
}

/// One summand of the per-edge sums, with both operands after their powers.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeTerm {
    pub edge: String,
    pub ratio: f64,
    pub complement: f64,
    pub branch: Branch,
    pub value: f64,
}

/// A rate bound: leading term plus per-edge sum.
#[derive(Clone, Debug, Serialize)]
pub struct RateBound {
    pub value: f64,
    pub leading: f64,
    pub witness: Witnessed,
    pub edges: Vec<EdgeTerm>,
}

fn rate_bound(ctx: &Ctx, lead_power: f64, ratio_power: f64, comp_power: f64) -> RateBound {
    let m = ctx.min_expected();
    let leading = (-lead_power * m.value.ln()).exp();
    let ln_max = ctx.max_variance_weight().value.ln();
    let edges: Vec<EdgeTerm> = ctx
        .edges
        .iter()
        .map(|e| {
            let ratio = (ratio_power * (ctx.ln_edge_weight(e) - ln_max)).exp();
            let complement = (comp_power * ctx.ln_complement(e)).exp();
            let (branch, value) = if ratio <= complement {
                (Branch::Ratio, ratio)
            } else {
                (Branch::Complement, complement)
            };
            EdgeTerm {
                edge: e.label.clone(),
                ratio,
                complement,
                branch,
                value,
            }
        })
        .collect();
    RateBound {
        value: leading + edges.iter().map(|e| e.value).sum::<f64>(),
        leading,
        witness: m,
        edges,
    }
}

/// Wasserstein bound: `m^{-1/4} + sum_e (ratio_e ^ complement_e)^{1/2}`.
pub fn bound_wasserstein(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<RateBound> {
    Ok(rate_bound(&Ctx::new(p, n, spec)?, 0.25, 0.5, 0.5))
}

/// Kolmogorov bound: `m^{-1/5} + sum_e ratio_e^{1/3} ^ complement_e^{1/2}`.
pub fn bound_kolmogorov(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<RateBound> {
    Ok(rate_bound(&Ctx::new(p, n, spec)?, 0.2, 1.0 / 3.0, 0.5))
}

/// Bound for probabilities bounded away from one: `m^{-1/2}`.
pub fn bound_bounded_p(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<Witnessed> {
    let m = Ctx::new(p, n, spec)?.min_expected();
    Ok(Witnessed {
        value: m.value.powf(-0.5),
        ..m
    })
}

/// Both sufficient-condition bounds.
#[derive(Clone, Debug, Serialize)]
pub struct SufficientBounds {
    /// `A^{-1/2} + A * (max_{e: p>1/2} (1-p) / n^{3|e|})^{1/2}` with
    /// `A = min_F n^{v_F} P_F / Q_F`.
    pub weighted: f64,
    pub weighted_witness: Witnessed,
    /// `m^{-1/2} + (max_{e: p>1/2} 1 / ((1-p) n^{|e|}))^{1/2}`.
    pub simplified: f64,
    pub simplified_witness: Witnessed,
    /// Edge realising the heavy maximum, if any edge has `p > 1/2`.
    pub heavy_edge: Option<String>,
}

pub fn bound_sufficient(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<SufficientBounds> {
    let ctx = Ctx::new(p, n, spec)?;
    let a = ctx.min_expected_over_q();
    let ln_a = a.value.ln();
    let (heavy_w, any_heavy) = heavy_max(&ctx, |e| e.q.ln() - 3.0 * e.size as f64 * ctx.ln_n);
    let weighted_tail = if any_heavy.is_some() {
        (ln_a + 0.5 * heavy_w).exp()
    } else {
        0.0
    };
    let m = ctx.min_expected();
    let (heavy_c, heavy_edge) = heavy_max(&ctx, |e| ctx.ln_complement(e));
    let simplified_tail = if heavy_edge.is_some() {
        (0.5 * heavy_c).exp()
    } else {
        0.0
    };
    Ok(SufficientBounds {
        weighted: (-0.5 * ln_a).exp() + weighted_tail,
        weighted_witness: a,
        simplified: m.value.powf(-0.5) + simplified_tail,
        simplified_witness: m,
        heavy_edge,
    })
}

/// Dependency-graph bound
/// `(1 - P_H) (min_F n^{v_F} P_F / (1 - P_F))^{3/2} / (min_F n^{v_F} P_F)^2`.
#[derive(Clone, Debug, Serialize)]
pub struct JlrBound {
    pub value: f64,
    pub numerator_witness: Witnessed,
    pub denominator_witness: Witnessed,
}

pub fn bound_jlr(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<JlrBound> {
    let ctx = Ctx::new(p, n, spec)?;
    // ln(1 - P_F) without cancellation when P_F is close to one
    let ln_one_minus = |t: &SubTerm| (-t.ln_p.exp_m1()).ln();
    let num = argmin(
        ctx.terms
            .iter()
            .map(|t| t.ln_expected_copies(ctx.ln_n) - ln_one_minus(t)),
    )
    .unwrap();
    let m = ctx.min_expected();
    let whole = ctx.terms.last().unwrap();
    let ln_value = ln_one_minus(whole) + 1.5 * num.1 - 2.0 * m.value.ln();
    Ok(JlrBound {
        value: ln_value.exp(),
        numerator_witness: Witnessed::from_ln(&ctx.terms, num),
        denominator_witness: m,
    })
}

/// Excess-kurtosis surrogate `((1-p) min_F p^{e_F} n^{v_F})^{-1}` for a
/// homogeneous spec, with the companion term `n^{-min |e|}`.
#[derive(Clone, Debug, Serialize)]
pub struct KurtosisSurrogate {
    pub value: f64,
    pub companion: f64,
    pub witness: Witnessed,
}

pub fn kurtosis_surrogate(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<KurtosisSurrogate> {
    let q = homogeneous_q(p, spec).ok_or(Error::NotHomogeneous)?;
    let ctx = Ctx::new(p, n, spec)?;
    let m = ctx.min_expected();
    let min_size = p.min_edge_size().expect("pattern has edges") as i32;
    Ok(KurtosisSurrogate {
        value: 1.0 / (q * m.value),
        companion: n.powi(-min_size),
        witness: m,
    })
}

/// Condition for the regime where every probability is at least 1/2:
/// `1/((1-p)n^{|e|}) ^ n^{-|e|}(1-p) / max_{e'} n^{-|e'|}(1-p_{e'})` must
/// vanish for every edge.
#[derive(Clone, Debug, Serialize)]
pub struct LindebergReport {
    /// Whether every edge has `p >= 1/2`, the regime the condition covers.
    pub applies: bool,
    pub edges: Vec<(String, f64)>,
    pub max: f64,
}

pub fn lindeberg_condition(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<LindebergReport> {
    let ctx = Ctx::new(p, n, spec)?;
    let ln_top = ctx
        .edges
        .iter()
        .map(|e| ctx.ln_edge_weight(e))
        .fold(f64::NEG_INFINITY, f64::max);
    let edges: Vec<(String, f64)> = ctx
        .edges
        .iter()
        .map(|e| {
            let v = ctx.ln_complement(e).min(ctx.ln_edge_weight(e) - ln_top);
            (e.label.clone(), v.exp())
        })
        .collect();
    Ok(LindebergReport {
        applies: ctx.edges.iter().all(|e| e.p >= 0.5),
        max: edges.iter().map(|e| e.1).fold(0.0, f64::max),
        edges,
    })
}

/// Every bound at one `n`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: f64,
    pub wasserstein: RateBound,
    pub kolmogorov: RateBound,
    pub bounded_p: Witnessed,
    pub sufficient: SufficientBounds,
    pub jlr: JlrBound,
    pub kurtosis: Option<KurtosisSurrogate>,
}

pub fn bound_report(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<BoundReport> {
    let kurtosis = match kurtosis_surrogate(p, n, spec) {
        Ok(k) => Some(k),
        Err(Error::NotHomogeneous) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        n,
        wasserstein: bound_wasserstein(p, n, spec)?,
        kolmogorov: bound_kolmogorov(p, n, spec)?,
        bounded_p: bound_bounded_p(p, n, spec)?,
        sufficient: bound_sufficient(p, n, spec)?,
        jlr: bound_jlr(p, n, spec)?,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::EdgeProb;

    fn named(s: &str) -> Pattern {
        Pattern::named(s).unwrap()
    }

    fn homog(p: &Pattern, v: f64) -> ProbabilitySpec {
        ProbabilitySpec::homogeneous_f64(&p.distinct_sizes(), v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn triangle_homogeneous_condition() {
        let t = named("triangle");
        let r = clt_conditions(&t, 100.0, &homog(&t, 0.1)).unwrap();
        let h = r.homogeneous.unwrap();
        assert!(rel(h.combined, 900.0) < 1e-12);
        assert!(rel(h.min_expected, 1000.0) < 1e-12);
    }

    #[test]
    fn near_one_single_edge_fails_condition() {
        let e = named("edge");
        for n in [10.0f64, 100.0, 1000.0] {
            let spec = ProbabilitySpec::new().with(2, EdgeProb::from_q(n.powi(-3)).unwrap());
            let r = clt_conditions(&e, n, &spec).unwrap();
            assert!(rel(r.edges[0].dense_term, 1.0 / n) < 1e-9);
            assert!(rel(r.edges[0].quotient, 1.0 / spec.get(2).unwrap().p) < 1e-9);
        }
    }

    #[test]
    fn bounded_p_triangle_value() {
        let t = named("triangle");
        let b = bound_bounded_p(&t, 100.0, &homog(&t, 0.5)).unwrap();
        assert!(rel(b.value, 5000f64.powf(-0.5)) < 1e-12);
        assert_eq!(b.witness, "v2:{1,2}");
    }

    #[test]
    fn complement_branch_for_dense_single_edge() {
        let e = named("edge");
        let n = 1000.0;
        let spec = ProbabilitySpec::new().with(2, EdgeProb::from_q(1.0 / n).unwrap());
        let w = bound_wasserstein(&e, n, &spec).unwrap();
        assert_eq!(w.edges[0].branch, Branch::Complement);
        assert!(rel(w.edges[0].value, n.powf(-0.5)) < 1e-12);
    }

    #[test]
    fn kurtosis_surrogate_needs_homogeneous_spec() {
        let t = named("triangle");
        let k = kurtosis_surrogate(&t, 100.0, &homog(&t, 0.1)).unwrap();
        assert!(rel(k.value, 1.0 / 900.0) < 1e-12);
        let lp = named("loop-pair");
        let spec = ProbabilitySpec::new()
            .with(1, EdgeProb::from_p(0.2).unwrap())
            .with(2, EdgeProb::from_p(0.3).unwrap());
        assert!(matches!(kurtosis_surrogate(&lp, 10.0, &spec), Err(Error::NotHomogeneous)));
    }

    #[test]
    fn sparse_single_edge_jlr() {
        let e = named("edge");
        let n = 1000.0;
        let p = 1e-4;
        let j = bound_jlr(&e, n, &homog(&e, p)).unwrap();
        let lam = n * n * p;
        let expect = (1.0 - p) * (lam / (1.0 - p)).powf(1.5) / (lam * lam);
        assert!(rel(j.value, expect) < 1e-12);
    }

    #[test]
    fn empty_heavy_set_drops_terms() {
        let t = named("triangle");
        let s = bound_sufficient(&t, 100.0, &homog(&t, 0.3)).unwrap();
        assert!(s.heavy_edge.is_none());
        assert!(rel(s.simplified, bound_bounded_p(&t, 100.0, &homog(&t, 0.3)).unwrap().value) < 1e-12);
    }
}
