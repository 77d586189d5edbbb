//! Order-of-magnitude surrogates for the mean and variance of `Z`, evaluated
//! in log space so they stay finite for large `n`.

use serde::Serialize;

use crate::error::Result;
use crate::moments::check_pattern;
use crate::pattern::{sub_patterns, Pattern, SubPattern};
use crate::prob::ProbabilitySpec;

/// Log-space quantities of one sub-pattern `F`.
#[derive(Clone, Debug, Serialize)]
pub struct SubTerm {
    /// Bit `i` set iff pattern edge `i` is in `F`.
    pub edge_subset: u64,
    pub label: String,
    pub vertices: usize,
    pub edges: usize,
    pub ln_p: f64,
    pub ln_q: f64,
    /// True when every edge of `F` has `p <= 1/2`.
    pub light: bool,
}

impl SubTerm {
    /// `ln(n^{v_F} P_F)`.
    pub fn ln_expected_copies(&self, ln_n: f64) -> f64 {
        self.vertices as f64 * ln_n + self.ln_p
    }

    /// `ln(n^{-v_F} Q_F / P_F)`.
    pub fn ln_variance_weight(&self, ln_n: f64) -> f64 {
        -(self.vertices as f64) * ln_n + self.ln_q - self.ln_p
    }
}

/// Every nonempty edge subset of `p` with its probabilities under `spec`.
pub fn sub_terms(p: &Pattern, spec: &ProbabilitySpec) -> Result<Vec<SubTerm>> {
    sub_patterns(p)
        .into_iter()
        .map(|SubPattern { edge_subset, pattern }| {
            let mut ln_p = 0.0;
            let mut ln_q = 0.0;
            let mut light = true;
            for &k in pattern.sizes() {
                let e = spec.get(k)?;
                ln_p += e.ln_p();
                ln_q += e.ln_q();
                light &= e.p <= 0.5;
            }
            Ok(SubTerm {
                edge_subset,
                label: pattern.label(),
                vertices: pattern.vertex_count(),
                edges: pattern.edge_count(),
                ln_p,
                ln_q,
                light,
            })
        })
        .collect()
}

/// Index of the largest value, first on ties.
pub(crate) fn argmax<I: IntoIterator<Item = f64>>(it: I) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in it.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

/// Index of the smallest value, first on ties.
pub(crate) fn argmin<I: IntoIterator<Item = f64>>(it: I) -> Option<(usize, f64)> {
    argmax(it.into_iter().map(|v| -v)).map(|(i, v)| (i, -v))
}

/// Surrogates for `E[Z]` and `Var[Z]` with the realising sub-pattern.
#[derive(Clone, Debug, Serialize)]
pub struct SurrogateReport {
    pub pattern: String,
    pub n: f64,
    /// `n^{v_H} P_H`.
    pub mean_surrogate: f64,
    /// `P_H^2 max_F n^{2 v_H - v_F} Q_F / P_F`.
    pub variance_surrogate: f64,
    pub argmax: String,
    pub argmax_subset: u64,
    /// `max_F n^{-v_F} Q_F / P_F`.
    pub max_variance_weight: f64,
    /// Split form: the light-sub-pattern maximum plus the heavy-edge maximum,
    /// times `P_H^2 n^{2 v_H}`.
    pub split_light: f64,
    pub split_heavy: f64,
    pub split_variance: f64,
}

pub fn surrogates(p: &Pattern, n: f64, spec: &ProbabilitySpec) -> Result<SurrogateReport> {
    check_pattern(p)?;
    let ln_n = n.ln();
    let terms = sub_terms(p, spec)?;
    let whole = terms.last().expect("pattern has edges");
    let v = p.vertex_count() as f64;
    let (i, ln_w) = argmax(terms.iter().map(|t| t.ln_variance_weight(ln_n))).unwrap();
    let ln_scale = 2.0 * whole.ln_p + 2.0 * v * ln_n;

    let light = terms
        .iter()
        .filter(|t| t.light)
        .map(|t| (-t.ln_expected_copies(ln_n)).exp())
        .fold(0.0, f64::max);
    let heavy = p
        .sizes()
        .iter()
        .map(|&k| spec.get(k).map(|e| (e.p > 0.5).then(|| e.q / n.powi(k as i32))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);

    Ok(SurrogateReport {
        pattern: p.label(),
        n,
        mean_surrogate: (whole.ln_expected_copies(ln_n)).exp(),
        variance_surrogate: (ln_scale + ln_w).exp(),
        argmax: terms[i].label.clone(),
        argmax_subset: terms[i].edge_subset,
        max_variance_weight: ln_w.exp(),
        split_light: light,
        split_heavy: heavy,
        split_variance: ln_scale.exp() * (light + heavy),
    })
}
