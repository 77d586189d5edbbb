//! Exact moments of the copy count `Z` by enumerating overlapping copies.
//!
//! Writing `Z - E[Z] = sum_i Y_i` with `Y_i` the centred indicator of copy
//! `i`, only families of copies that cannot be split into edge-disjoint
//! groups contribute to the centred moments. The variance sums over ordered
//! pairs sharing an edge; the fourth central moment uses the grouped identity
//! for `mu_4 - 3 Var^2` over connected pairs, triples and quadruples.
//! Families are bucketed by the edge-size profile of all their sub-unions so
//! each distinct configuration is evaluated once.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::copies::{count_copies_f64, count_copies_total, IndexedCopies, PlacedCopy};
use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::prob::ProbabilitySpec;
use crate::scalar::{ProbTable, Scalar};

/// Limits on the enumeration work the exact engines accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guards {
    /// Largest copy count for pairwise enumeration (variance).
    pub pair_copies: u128,
    /// Largest copy count for connected-quadruple enumeration (fourth moment).
    pub quad_copies: u128,
    /// Largest number of relevant concrete edges for the full-state oracle.
    pub oracle_edges: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            pair_copies: 5_000,
            quad_copies: 300,
            oracle_edges: 24,
        }
    }
}

/// Fails unless the pattern has at least one edge and no isolated vertices.
pub(crate) fn check_pattern(p: &Pattern) -> Result<()> {
    if p.edge_count() == 0 {
        return Err(Error::EmptyPattern);
    }
    if p.has_isolated_vertices() {
        return Err(Error::InvalidPattern(
            "remove isolated vertices before computing moments".into(),
        ));
    }
    Ok(())
}

/// `(ln P_F, ln Q_F)` for a multiset of edge sizes.
pub fn p_of(sizes: &[usize], spec: &ProbabilitySpec) -> Result<(f64, f64)> {
    let mut lp = 0.0;
    let mut lq = 0.0;
    for &k in sizes {
        let e = spec.get(k)?;
        lp += e.ln_p();
        lq += e.ln_q();
    }
    Ok((lp, lq))
}

/// `E[Z] = N * P_H` in the chosen arithmetic.
pub fn mean_exact<S: Scalar>(p: &Pattern, n: usize, spec: &ProbabilitySpec) -> Result<S> {
    check_pattern(p)?;
    let sizes = p.distinct_sizes();
    let table = ProbTable::<S>::new(spec, &sizes)?;
    let counts = size_counts(p.sizes(), &sizes);
    let total = count_copies_total(p, n);
    let copies = if total == u128::MAX {
        S::from_f64_lossy(count_copies_f64(p, n as f64))
            .ok_or_else(|| Error::OutOfRange("copy count overflows exact arithmetic".into()))?
    } else {
        S::from_u128(total)
    };
    Ok(copies * table.p_of(&counts))
}

pub(crate) fn size_counts(edge_sizes: &[usize], slots: &[usize]) -> Vec<u16> {
    let mut c = vec![0u16; slots.len()];
    for k in edge_sizes {
        let i = slots.iter().position(|s| s == k).expect("size has a slot");
        c[i] += 1;
    }
    c
}

/// `E[prod_t (1{A_t} - P_{A_t})]` for a list of copies (repeats allowed),
/// by inclusion-exclusion over the positions.
pub fn joint_central_moment<S: Scalar>(copies: &[PlacedCopy], spec: &ProbabilitySpec) -> Result<S> {
    let r = copies.len();
    if r == 0 || r > 8 {
        return Err(Error::OutOfRange(format!(
            "joint moments need 1..=8 copies, got {r}"
        )));
    }
    let p_of_edges = |edges: &mut Vec<u64>| -> Result<S> {
        edges.sort_unstable();
        edges.dedup();
        let mut acc = S::one();
        for &e in edges.iter() {
            acc = acc * S::probs(spec, e.count_ones() as usize)?.0;
        }
        Ok(acc)
    };
    let singles: Vec<S> = copies
        .iter()
        .map(|c| p_of_edges(&mut c.edges.clone()))
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(1 << r);
    for mask in 0u32..(1 << r) {
        let mut union: Vec<u64> = (0..r)
            .filter(|i| mask & (1 << i) != 0)
            .flat_map(|i| copies[i].edges.iter().copied())
            .collect();
        let mut term = p_of_edges(&mut union)?;
        for (i, s) in singles.iter().enumerate() {
            if mask & (1 << i) == 0 {
                term = term * -s.clone();
            }
        }
        terms.push(term);
    }
    Ok(S::sum(terms))
}

/// Moment of a monomial in centred indicators of a small family.
/// `positions` lists family members (repeats allowed); `unions[mask]` is the
/// probability that every member in `mask` is present.
fn monomial<S: Scalar>(positions: &[usize], unions: &[S], ph: &S) -> S {
    let r = positions.len();
    let mut acc = S::zero();
    for a in 0u32..(1 << r) {
        let mut members = 0usize;
        for (t, &m) in positions.iter().enumerate() {
            if a & (1 << t) != 0 {
                members |= 1 << m;
            }
        }
        let k = r - a.count_ones() as usize;
        let mut term = unions[members].clone() * ph.powi(k);
        if k % 2 == 1 {
            term = -term;
        }
        acc = acc + term;
    }
    acc
}

/// Undirected graph stored as one adjacency bitset per vertex.
pub(crate) struct BitGraph {
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    pub fn from_adjacency(adj: &[Vec<u32>]) -> Self {
        let words = adj.len().div_ceil(64).max(1);
        let mut rows = vec![0u64; adj.len() * words];
        for (v, list) in adj.iter().enumerate() {
            for &u in list {
                rows[v * words + u as usize / 64] |= 1 << (u % 64);
            }
        }
        BitGraph { words, rows }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.rows.len() / self.words
    }

    fn row(&self, v: u32) -> &[u64] {
        &self.rows[v as usize * self.words..(v as usize + 1) * self.words]
    }
}

fn for_each_bit(set: &[u64], mut f: impl FnMut(u32)) {
    for (w, &word) in set.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            f((w * 64) as u32 + bits.trailing_zeros());
            bits &= bits - 1;
        }
    }
}

/// Enumerates each connected 3- and 4-set whose smallest vertex is `root`
/// exactly once (ESU).
pub(crate) fn connected_sets<F: FnMut(&[u32])>(g: &BitGraph, root: u32, visit: &mut F) {
    fn extend<F: FnMut(&[u32])>(
        g: &BitGraph,
        above: &[u64],
        sub: &mut Vec<u32>,
        closed: &[u64],
        ext: &mut [u64],
        visit: &mut F,
    ) {
        if sub.len() >= 3 {
            visit(sub);
        }
        if sub.len() == 3 {
            for_each_bit(ext, |w| {
                sub.push(w);
                visit(sub);
                sub.pop();
            });
            return;
        }
        let words = ext.len();
        let mut next_ext = vec![0u64; words];
        let mut next_closed = vec![0u64; words];
        for w in 0..words {
            while ext[w] != 0 {
                let bit = ext[w].trailing_zeros();
                ext[w] &= ext[w] - 1;
                let v = (w * 64) as u32 + bit;
                let row = g.row(v);
                for i in 0..words {
                    next_ext[i] = ext[i] | (row[i] & !closed[i] & above[i]);
                    next_closed[i] = closed[i] | row[i];
                }
                sub.push(v);
                extend(g, above, sub, &next_closed, &mut next_ext.clone(), visit);
                sub.pop();
            }
        }
    }
    let words = g.words;
    let mut above = vec![0u64; words];
    for (i, word) in above.iter_mut().enumerate() {
        let lo = i * 64;
        let r = root as usize;
        *word = if r + 1 <= lo {
            u64::MAX
        } else if r + 1 >= lo + 64 {
            0
        } else {
            u64::MAX << (r + 1 - lo)
        };
    }
    let row = g.row(root);
    let mut ext: Vec<u64> = row.iter().zip(&above).map(|(a, b)| a & b).collect();
    let mut closed = row.to_vec();
    closed[root as usize / 64] |= 1 << (root % 64);
    let mut sub = vec![root];
    extend(g, &above, &mut sub, &closed, &mut ext, visit);
}

/// Size profile packed into a `u128`, eight bits per size slot.
pub(crate) type Profile = u128;

const SLOT_BITS: usize = 8;
const MAX_SLOTS: usize = 128 / SLOT_BITS;

/// Family key: for each nonempty membership mask over the (relabelled)
/// members, the packed size profile of the edges held by exactly those
/// members. Triples use the first seven entries.
pub(crate) type FamilyKey = [Profile; 15];

fn unpack(profile: Profile, width: usize) -> Vec<u16> {
    (0..width)
        .map(|s| ((profile >> (s * SLOT_BITS)) & 0xff) as u16)
        .collect()
}

/// Packed profile of the union of the members selected by `subset`.
fn union_profile(key: &FamilyKey, subset: usize) -> Profile {
    (1..16).filter(|m| m & subset != 0).map(|m| key[m - 1]).sum()
}

/// `perm_masks(s)[k][m]` maps mask `m` over relabelled members to the mask
/// over original members under the `k`-th permutation.
fn perm_masks(s: usize) -> Vec<[u8; 16]> {
    let mut perm: Vec<u8> = (0..s as u8).collect();
    let mut out = Vec::new();
    loop {
        let mut table = [0u8; 16];
        for (m, slot) in table.iter_mut().enumerate().take(1 << s) {
            for (i, &pi) in perm.iter().enumerate() {
                if m & (1 << i) != 0 {
                    *slot |= 1 << pi;
                }
            }
        }
        out.push(table);
        if !crate::pattern::next_permutation(&mut perm) {
            break;
        }
    }
    out
}

/// Shared state for the exact engines of one `(pattern, n, spec)`.
pub(crate) struct Overlaps {
    pub copies: IndexedCopies,
    pub slots: Vec<usize>,
    slot_unit: Vec<Profile>,
    pub pattern_counts: Vec<u16>,
}

impl Overlaps {
    pub fn new(p: &Pattern, n: usize) -> Result<Self> {
        let slots = p.distinct_sizes();
        if slots.len() > MAX_SLOTS || 4 * p.edge_count() > 255 {
            return Err(Error::InvalidPattern(format!(
                "exact moments support at most {MAX_SLOTS} edge sizes and 63 edges"
            )));
        }
        let copies = IndexedCopies::new(p, n)?;
        let slot_unit = (0..copies.universe.len())
            .map(|i| {
                let slot = copies.universe.size_slot(copies.universe.size_at(i)).unwrap();
                1u128 << (slot * SLOT_BITS)
            })
            .collect();
        let pattern_counts = size_counts(p.sizes(), &slots);
        Ok(Overlaps {
            copies,
            slots,
            slot_unit,
            pattern_counts,
        })
    }

    pub fn unpack(&self, profile: Profile) -> Vec<u16> {
        unpack(profile, self.slots.len())
    }

    /// Membership histogram of up to four copies: entry `m - 1` is the
    /// profile of the edges held by exactly the members in mask `m`.
    fn membership(&self, members: &[u32], scratch: &mut Vec<u64>) -> FamilyKey {
        scratch.clear();
        for (t, &c) in members.iter().enumerate() {
            scratch.extend(
                self.copies
                    .edge_indices(c as usize)
                    .iter()
                    .map(|&e| (e as u64) << 4 | 1 << t),
            );
        }
        scratch.sort_unstable();
        let mut hist = [0u128; 15];
        let mut i = 0;
        while i < scratch.len() {
            let edge = scratch[i] >> 4;
            let mut mask = 0usize;
            while i < scratch.len() && scratch[i] >> 4 == edge {
                mask |= (scratch[i] & 0xf) as usize;
                i += 1;
            }
            hist[mask - 1] += self.slot_unit[edge as usize];
        }
        hist
    }

    /// Smallest relabelling of the membership histogram.
    fn canonical(hist: &FamilyKey, tables: &[[u8; 16]], s: usize) -> FamilyKey {
        let width = (1 << s) - 1;
        let mut best = [u128::MAX; 15];
        for table in tables {
            let mut cand = [0u128; 15];
            for m in 1..=width {
                cand[m - 1] = hist[table[m] as usize - 1];
            }
            if cand[..width] < best[..width] {
                best = cand;
            }
        }
        best[width..].fill(0);
        best
    }

    // Every copy is the image of every other under a vertex permutation, so
    // each copy lies in the same number of overlapping families of each
    // kind. Enumerating the families through copy 0 and rescaling by
    // `copies / size` gives the full counts.

    /// Ordered pairs of distinct copies sharing an edge, bucketed by the
    /// size profile of their union.
    pub fn pair_profiles(&self) -> BTreeMap<Profile, u128> {
        let mut out = BTreeMap::new();
        if self.copies.is_empty() {
            return out;
        }
        let adj = self.copies.overlap_graph();
        let mut scratch = Vec::new();
        for &j in &adj[0] {
            let hist = self.membership(&[0, j], &mut scratch);
            *out.entry(union_profile(&hist, 0b11)).or_insert(0) += 1;
        }
        let total = self.copies.len() as u128;
        out.values_mut().for_each(|m| *m *= total);
        out
    }

    /// Connected triples and quadruples (unordered), bucketed by family key.
    fn family_profiles(&self) -> (BTreeMap<FamilyKey, u128>, BTreeMap<FamilyKey, u128>) {
        let mut triples = BTreeMap::new();
        let mut quads = BTreeMap::new();
        if self.copies.is_empty() {
            return (triples, quads);
        }
        let graph = BitGraph::from_adjacency(&self.copies.overlap_graph());
        let tables = [perm_masks(3), perm_masks(4)];
        let mut scratch = Vec::new();
        let mut raw: [HashMap<FamilyKey, u128>; 2] = Default::default();
        connected_sets(&graph, 0, &mut |set| {
            let s = set.len();
            let hist = self.membership(set, &mut scratch);
            *raw[s - 3].entry(hist).or_insert(0) += 1;
        });
        let total = self.copies.len() as u128;
        for (s, (counts, target)) in [3, 4].into_iter().zip(raw.into_iter().zip([&mut triples, &mut quads])) {
            for (hist, c) in counts {
                let key = Self::canonical(&hist, &tables[s - 3], s);
                *target.entry(key).or_insert(0) += c;
            }
            for m in target.values_mut() {
                debug_assert_eq!(*m * total % s as u128, 0);
                *m = *m * total / s as u128;
            }
        }
        (triples, quads)
    }
}

fn guard(what: &'static str, copies: u128, limit: u128) -> Result<()> {
    if copies > limit {
        return Err(Error::Guard {
            what,
            needed: copies,
            limit,
        });
    }
    Ok(())
}

/// `Var[Z]`: single-copy variances plus covariances of ordered pairs that
/// share an edge.
pub fn variance_exact<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    guards: &Guards,
) -> Result<S> {
    check_pattern(p)?;
    guard("pairwise enumeration", count_copies_total(p, n), guards.pair_copies)?;
    let ov = Overlaps::new(p, n)?;
    let table = ProbTable::<S>::new(spec, &ov.slots)?;
    Ok(variance_from(&ov, &table))
}

fn variance_from<S: Scalar>(ov: &Overlaps, table: &ProbTable<S>) -> S {
    let ph = table.p_of(&ov.pattern_counts);
    let n_copies = S::from_u128(ov.copies.len() as u128);
    let single = n_copies * (ph.clone() - ph.clone() * ph.clone());
    let pairs = ov.pair_profiles().into_iter().map(|(key, mult)| {
        S::from_u128(mult) * (table.p_of(&ov.unpack(key)) - ph.clone() * ph.clone())
    });
    S::sum(std::iter::once(single).chain(pairs))
}

/// Exact variance and fourth central moment.
#[derive(Clone, Debug)]
pub struct CentralMoments<S> {
    pub mean: S,
    pub variance: S,
    pub fourth_central: S,
}

/// Fourth central moment via the grouped identity, plus mean and variance.
pub fn fourth_central_exact<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    guards: &Guards,
) -> Result<CentralMoments<S>> {
    check_pattern(p)?;
    let total = count_copies_total(p, n);
    guard("pairwise enumeration", total, guards.pair_copies)?;
    guard("quadruple enumeration", total, guards.quad_copies)?;
    let ov = Overlaps::new(p, n)?;
    let table = ProbTable::<S>::new(spec, &ov.slots)?;
    let ph = table.p_of(&ov.pattern_counts);
    let variance = variance_from(&ov, &table);
    let mean = S::from_u128(total) * ph.clone();

    let e2 = monomial(&[0, 0], &[S::one(), ph.clone()], &ph);
    let e4 = monomial(&[0, 0, 0, 0], &[S::one(), ph.clone()], &ph);
    let three = S::from_u128(3);
    let t1 = S::from_u128(total) * (e4 - three.clone() * e2.clone() * e2.clone());

    let mut terms = vec![t1];
    for (key, mult) in ov.pair_profiles() {
        let unions = [S::one(), ph.clone(), ph.clone(), table.p_of(&ov.unpack(key))];
        let e11 = monomial(&[0, 1], &unions, &ph);
        let e22 = monomial(&[0, 0, 1, 1], &unions, &ph);
        let e31 = monomial(&[0, 0, 0, 1], &unions, &ph);
        let summand = three.clone() * e22 + S::from_u128(4) * e31
            - three.clone() * e2.clone() * e2.clone()
            - S::from_u128(12) * e2.clone() * e11.clone()
            - S::from_u128(6) * e11.clone() * e11;
        terms.push(S::from_u128(mult) * summand);
    }

    let (triples, quads) = ov.family_profiles();
    let unions_from = |key: &FamilyKey, s: usize| -> Vec<S> {
        let mut u = vec![S::one()];
        for mask in 1..(1usize << s) {
            u.push(table.p_of(&ov.unpack(union_profile(key, mask))));
        }
        u
    };
    for (key, mult) in triples {
        let u = unions_from(&key, 3);
        let mut perm = [0u8, 1, 2];
        let mut summand = S::zero();
        loop {
            let [i, j, k] = perm.map(|x| x as usize);
            let e_iijk = monomial(&[i, i, j, k], &u, &ph);
            let e_jk = monomial(&[j, k], &u, &ph);
            let e_ij = monomial(&[i, j], &u, &ph);
            summand = summand + e_iijk
                - e2.clone() * e_jk.clone()
                - S::from_u128(2) * e_ij * e_jk;
            if !crate::pattern::next_permutation(&mut perm) {
                break;
            }
        }
        terms.push(S::from_u128(6 * mult) * summand);
    }
    for (key, mult) in quads {
        let u = unions_from(&key, 4);
        let e = |a: usize, b: usize| monomial(&[a, b], &u, &ph);
        let pairings = e(0, 1) * e(2, 3) + e(0, 2) * e(1, 3) + e(0, 3) * e(1, 2);
        let summand = monomial(&[0, 1, 2, 3], &u, &ph) - pairings;
        terms.push(S::from_u128(24 * mult) * summand);
    }

    let excess = S::sum(terms);
    let fourth_central = excess + three * variance.clone() * variance.clone();
    Ok(CentralMoments {
        mean,
        variance,
        fourth_central,
    })
}

/// `mu_4 / Var^2 - 3`.
pub fn excess_kurtosis<S: Scalar>(m: &CentralMoments<S>) -> Result<S> {
    if m.variance.to_f64() <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(m.fourth_central.clone() / (m.variance.clone() * m.variance.clone()) - S::from_u128(3))
}

/// Which engine produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Formula,
    Oracle,
}

/// Arithmetic used for a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Rational,
    Float,
}

impl std::str::FromStr for Arithmetic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Arithmetic::Rational),
            "float" => Ok(Arithmetic::Float),
            other => Err(Error::Config(format!("unknown arithmetic mode `{other}`"))),
        }
    }
}

/// Exact moment values rendered as `numerator/denominator` strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactValues {
    pub mean: String,
    pub variance: String,
    pub fourth_central: Option<String>,
}

/// Mean, variance, fourth central moment and excess kurtosis of `Z`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub pattern: String,
    pub n: usize,
    pub spec: String,
    pub method: Method,
    pub arithmetic: Arithmetic,
    pub mean: f64,
    pub variance: f64,
    pub fourth_central: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub exact: Option<ExactValues>,
    /// Quantities left out because a guard was exceeded.
    pub skipped: Vec<String>,
}

impl MomentReport {
    /// Largest relative disagreement with another report over the shared fields.
    pub fn max_relative_difference(&self, other: &MomentReport) -> f64 {
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        };
        let mut worst = rel(self.mean, other.mean).max(rel(self.variance, other.variance));
        if let (Some(a), Some(b)) = (self.fourth_central, other.fourth_central) {
            worst = worst.max(rel(a, b));
        }
        worst
    }
}

/// Formula-engine moments. The fourth moment is skipped (not an error) when
/// only its guard is exceeded.
pub fn moment_report(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    arithmetic: Arithmetic,
    guards: &Guards,
) -> Result<MomentReport> {
    match arithmetic {
        Arithmetic::Float => build_report::<f64>(p, n, spec, guards, Arithmetic::Float, None),
        Arithmetic::Rational => build_report::<BigRational>(
            p,
            n,
            spec,
            guards,
            Arithmetic::Rational,
            Some(|r: &BigRational| r.to_string()),
        ),
    }
}

fn build_report<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    guards: &Guards,
    arithmetic: Arithmetic,
    render: Option<fn(&S) -> String>,
) -> Result<MomentReport> {
    let mut skipped = Vec::new();
    let (mean, variance, fourth) = match fourth_central_exact::<S>(p, n, spec, guards) {
        Ok(m) => (m.mean.clone(), m.variance.clone(), Some(m)),
        Err(Error::Guard { what: "quadruple enumeration", .. }) => {
            skipped.push("fourth_central".to_string());
            skipped.push("excess_kurtosis".to_string());
            (
                mean_exact::<S>(p, n, spec)?,
                variance_exact::<S>(p, n, spec, guards)?,
                None,
            )
        }
        Err(e) => return Err(e),
    };
    let excess = match &fourth {
        Some(m) => match excess_kurtosis(m) {
            Ok(k) => Some(k.to_f64()),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let exact = render.map(|r| ExactValues {
        mean: r(&mean),
        variance: r(&variance),
        fourth_central: fourth.as_ref().map(|m| r(&m.fourth_central)),
    });
    Ok(MomentReport {
        pattern: p.label(),
        n,
        spec: spec.summary(),
        method: Method::Formula,
        arithmetic,
        mean: mean.to_f64(),
        variance: variance.to_f64(),
        fourth_central: fourth.as_ref().map(|m| m.fourth_central.to_f64()),
        excess_kurtosis: excess,
        exact,
        skipped,
    })
}
