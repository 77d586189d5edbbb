//! Ground truth for tiny instances: the exact law of `Z` obtained by visiting
//! every state of the relevant edges.
//!
//! States are walked in Gray-code order so each step flips one edge and
//! updates the count incrementally. States are bucketed by `(Z, number of
//! present edges per size)`, whose probabilities are then summed in the
//! requested arithmetic.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;

use crate::copies::{EdgeUniverse, IndexedCopies};
use crate::error::{Error, Result};
use crate::moments::{check_pattern, Arithmetic, ExactValues, Guards, Method, MomentReport};
use crate::pattern::Pattern;
use crate::prob::ProbabilitySpec;
use crate::scalar::{ProbTable, Scalar};

/// A finitely supported law on the non-negative integers.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<S> {
    pub atoms: BTreeMap<u64, S>,
}

impl<S: Scalar> Pmf<S> {
    pub fn total(&self) -> S {
        S::sum(self.atoms.values().cloned())
    }

    pub fn mean(&self) -> S {
        S::sum(self.atoms.iter().map(|(&z, w)| S::from_u128(z as u128) * w.clone()))
    }

    /// `E[(Z - E Z)^k]`.
    pub fn central_moment(&self, k: usize) -> S {
        let mu = self.mean();
        S::sum(
            self.atoms
                .iter()
                .map(|(&z, w)| (S::from_u128(z as u128) - mu.clone()).powi(k) * w.clone()),
        )
    }

    /// The law in `f64` as `(value, probability)` pairs.
    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|(&z, w)| (z as f64, w.to_f64())).collect()
    }
}

/// Exact law of `Z` over the edges of the pattern's sizes.
pub fn pmf_oracle<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    guards: &Guards,
) -> Result<Pmf<S>> {
    pmf_oracle_over::<S>(p, n, spec, &[], guards)
}

/// Exact law of `Z` when edges of `extra_sizes` are also part of the
/// enumerated state space. They never change `Z`, so the result must agree
/// with [`pmf_oracle`].
pub fn pmf_oracle_over<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    extra_sizes: &[usize],
    guards: &Guards,
) -> Result<Pmf<S>> {
    check_pattern(p)?;
    let mut sizes = p.distinct_sizes();
    sizes.extend_from_slice(extra_sizes);
    sizes.sort_unstable();
    sizes.dedup();
    let universe = EdgeUniverse::new(n, &sizes)?;
    let edges = universe.len();
    if edges > guards.oracle_edges {
        return Err(Error::Guard {
            what: "state-space oracle",
            needed: edges as u128,
            limit: guards.oracle_edges as u128,
        });
    }
    let table = ProbTable::<S>::new(spec, &sizes)?;
    let copies = crate::copies::enumerate_copies(p, n)?;
    let indexed = IndexedCopies::from_parts(universe.clone(), copies, p.edge_count());
    let by_edge = indexed.copies_by_edge();
    let slot_of: Vec<usize> = (0..edges)
        .map(|i| universe.size_slot(universe.size_at(i)).unwrap())
        .collect();
    let block_len: Vec<usize> = sizes
        .iter()
        .map(|&k| universe.block(k).map_or(0, |r| r.len()))
        .collect();

    // dense bucket index: z * stride_z + sum_k present_k * stride_k
    let mut strides = vec![0usize; sizes.len()];
    let mut stride = 1usize;
    for (i, len) in block_len.iter().enumerate() {
        strides[i] = stride;
        stride *= len + 1;
    }
    let stride_z = stride;
    let mut buckets = vec![0u64; stride_z * (indexed.len() + 1)];

    let mut missing = vec![p.edge_count() as u32; indexed.len()];
    let mut present = vec![false; edges];
    let mut z = 0usize;
    let mut idx = 0usize;
    buckets[0] += 1;
    for step in 1u64..(1u64 << edges) {
        let b = step.trailing_zeros() as usize;
        if present[b] {
            present[b] = false;
            idx -= strides[slot_of[b]];
            for &c in &by_edge[b] {
                if missing[c as usize] == 0 {
                    z -= 1;
                }
                missing[c as usize] += 1;
            }
        } else {
            present[b] = true;
            idx += strides[slot_of[b]];
            for &c in &by_edge[b] {
                missing[c as usize] -= 1;
                if missing[c as usize] == 0 {
                    z += 1;
                }
            }
        }
        buckets[z * stride_z + idx] += 1;
    }

    let mut atoms: BTreeMap<u64, Vec<S>> = BTreeMap::new();
    for (pos, &mult) in buckets.iter().enumerate() {
        if mult == 0 {
            continue;
        }
        let zval = (pos / stride_z) as u64;
        let mut rest = pos % stride_z;
        let mut weight = S::from_u128(mult as u128);
        for i in (0..sizes.len()).rev() {
            let k = rest / strides[i];
            rest %= strides[i];
            weight = weight * table.p[i].powi(k) * table.q[i].powi(block_len[i] - k);
        }
        atoms.entry(zval).or_default().push(weight);
    }
    Ok(Pmf {
        atoms: atoms.into_iter().map(|(z, ws)| (z, S::sum(ws))).collect(),
    })
}

/// Moment report computed from the oracle law.
pub fn oracle_report(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    arithmetic: Arithmetic,
    guards: &Guards,
) -> Result<MomentReport> {
    match arithmetic {
        Arithmetic::Float => {
            let pmf = pmf_oracle::<f64>(p, n, spec, guards)?;
            Ok(report_from(p, n, spec, &pmf, arithmetic, None))
        }
        Arithmetic::Rational => {
            let pmf = pmf_oracle::<BigRational>(p, n, spec, guards)?;
            Ok(report_from(p, n, spec, &pmf, arithmetic, Some(|r: &BigRational| r.to_string())))
        }
    }
}

fn report_from<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    pmf: &Pmf<S>,
    arithmetic: Arithmetic,
    render: Option<fn(&S) -> String>,
) -> MomentReport {
    let mean = pmf.mean();
    let var = pmf.central_moment(2);
    let mu4 = pmf.central_moment(4);
    let excess = (var.to_f64() > 0.0)
        .then(|| (mu4.clone() / (var.clone() * var.clone()) - S::from_u128(3)).to_f64());
    MomentReport {
        pattern: p.label(),
        n,
        spec: spec.summary(),
        method: Method::Oracle,
        arithmetic,
        mean: mean.to_f64(),
        variance: var.to_f64(),
        fourth_central: Some(mu4.to_f64()),
        excess_kurtosis: excess,
        exact: render.map(|r| ExactValues {
            mean: r(&mean),
            variance: r(&var),
            fourth_central: Some(r(&mu4)),
        }),
        skipped: Vec::new(),
    }
}

/// Serializable form of a law, as written by the CLI.
#[derive(Clone, Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct PmfFile {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl PmfFile {
    pub fn from_pmf<S: Scalar>(pmf: &Pmf<S>) -> Self {
        let (values, probabilities) = pmf.to_f64().into_iter().unzip();
        PmfFile {
            values,
            probabilities,
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .copied()
            .zip(self.probabilities.iter().copied())
            .collect()
    }
}
