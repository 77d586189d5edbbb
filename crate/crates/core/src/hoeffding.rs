//! Hoeffding decomposition of the standardised copy count.
//!
//! With `r_b = (X_b - p_b) / p_b` (that is `q/p` for a present edge and `-1`
//! for an absent one),
//!
//! ```text
//! Z - E[Z] = P_H * sum_{B nonempty} c(B) * prod_{b in B} r_b
//! ```
//!
//! where `c(B)` counts the copies containing the concrete edge set `B`.
//! `W_B` is the summand divided by `sd(Z)`; `I_F` collects the `W_B` whose
//! edge set is isomorphic to the sub-pattern `F`. Since every placement of
//! `F` is the image of every other under a vertex permutation, `c(B)` only
//! depends on the class of `B` and equals `N_H * s_F / N_F`, with `s_F` the
//! number of edge subsets of `H` in the class and `N_F` the copy count of `F`.

use std::collections::HashMap;

use serde::Serialize;

use crate::copies::{binomial_u128, count_copies_total, IndexedCopies};
use crate::error::{Error, Result};
use crate::moments::{check_pattern, mean_exact, size_counts, variance_exact, Guards};
use crate::pattern::{are_isomorphic, sub_patterns, Pattern, SubPatternClasses};
use crate::prob::ProbabilitySpec;
use crate::scalar::{ProbTable, Scalar};
use crate::sim::{count_in_sample, replication_rng, sample_relevant_edges, Realization};
use crate::surrogate::sub_terms;

/// Projection variance of one isomorphism class of sub-patterns.
#[derive(Clone, Debug, Serialize)]
pub struct ClassVariance<S> {
    pub class: usize,
    pub label: String,
    pub edges: usize,
    pub vertices: usize,
    /// Edge subsets of the pattern in this class.
    pub subsets: usize,
    /// Concrete placements `B` of the class in the complete hypergraph.
    pub placements: u128,
    /// `c(B)`, shared by every placement.
    pub completions: u128,
    pub variance: S,
}

/// Per-class counts that do not depend on the probabilities.
#[derive(Clone, Debug)]
pub struct ClassCounts {
    pub classes: SubPatternClasses,
    pub copies: u128,
    pub placements: Vec<u128>,
    pub completions: Vec<u128>,
}

impl ClassCounts {
    pub fn new(p: &Pattern, n: usize) -> Result<Self> {
        check_pattern(p)?;
        let classes = SubPatternClasses::new(p);
        let copies = count_copies_total(p, n);
        if copies == u128::MAX {
            return Err(Error::OutOfRange("copy count overflows".into()));
        }
        let mut placements = Vec::with_capacity(classes.len());
        let mut completions = Vec::with_capacity(classes.len());
        for (rep, members) in classes.representatives.iter().zip(&classes.members) {
            let placed = count_copies_total(rep, n);
            let c = if placed == 0 {
                0
            } else {
                let num = copies
                    .checked_mul(members.len() as u128)
                    .ok_or_else(|| Error::OutOfRange("completion count overflows".into()))?;
                debug_assert_eq!(num % placed, 0);
                num / placed
            };
            placements.push(placed);
            completions.push(c);
        }
        Ok(ClassCounts {
            classes,
            copies,
            placements,
            completions,
        })
    }
}

/// `Var[I_F]` for every class `F`, given `Var[Z]`:
/// `(P_H^2 / Var Z) * (Q_F / P_F) * N_F * c_F^2`.
pub fn var_if_exact<S: Scalar>(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    var_z: &S,
) -> Result<Vec<ClassVariance<S>>> {
    let counts = ClassCounts::new(p, n)?;
    if *var_z == S::zero() {
        return Err(Error::ZeroVariance);
    }
    let slots = p.distinct_sizes();
    let table = ProbTable::<S>::new(spec, &slots)?;
    let ph = table.p_of(&size_counts(p.sizes(), &slots));
    let scale = ph.clone() * ph / var_z.clone();
    let reps = &counts.classes.representatives;
    Ok((0..reps.len())
        .map(|f| {
            let sizes = size_counts(reps[f].sizes(), &slots);
            let c = counts.completions[f];
            let weight = S::from_u128(counts.placements[f]) * S::from_u128(c) * S::from_u128(c);
            ClassVariance {
                class: f,
                label: reps[f].label(),
                edges: reps[f].edge_count(),
                vertices: reps[f].vertex_count(),
                subsets: counts.classes.members[f].len(),
                placements: counts.placements[f],
                completions: c,
                variance: scale.clone() * table.q_of(&sizes) / table.p_of(&sizes) * weight,
            }
        })
        .collect())
}

/// `Var[I_m]`: the sum of `Var[I_F]` over classes with `m` edges.
pub fn var_im<S: Scalar>(p: &Pattern, n: usize, spec: &ProbabilitySpec, m: usize, var_z: &S) -> Result<S> {
    if m == 0 || m > p.edge_count() {
        return Err(Error::OutOfRange(format!(
            "layer {m} outside 1..={}",
            p.edge_count()
        )));
    }
    let classes = var_if_exact(p, n, spec, var_z)?;
    Ok(S::sum(
        classes.into_iter().filter(|c| c.edges == m).map(|c| c.variance),
    ))
}

/// One nonvanishing term `W_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoeffdingTerm {
    /// Universe indices of the edges of `B`, increasing.
    pub edges: Vec<u32>,
    pub class: usize,
    /// Number of copies containing `B`, counted directly.
    pub completions: u64,
}

/// Every `B` that is the edge set of a sub-pattern of some copy.
#[derive(Clone, Debug)]
pub struct TermTable {
    pub copies: IndexedCopies,
    pub classes: SubPatternClasses,
    pub terms: Vec<HoeffdingTerm>,
}

impl TermTable {
    pub fn new(p: &Pattern, n: usize, guards: &Guards) -> Result<Self> {
        check_pattern(p)?;
        let e = p.edge_count();
        let total = count_copies_total(p, n);
        let work = total.saturating_mul((1u128 << e) - 1);
        if total > guards.pair_copies || work > 64 * guards.pair_copies {
            return Err(Error::Guard {
                what: "Hoeffding term enumeration",
                needed: work,
                limit: 64 * guards.pair_copies,
            });
        }
        let classes = SubPatternClasses::new(p);
        let copies = IndexedCopies::new(p, n)?;
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut terms: Vec<HoeffdingTerm> = Vec::new();
        for i in 0..copies.len() {
            let edges = copies.edge_indices(i);
            for mask in 1u64..(1 << e) {
                let mut b: Vec<u32> = (0..e)
                    .filter(|t| mask & (1 << t) != 0)
                    .map(|t| edges[t])
                    .collect();
                b.sort_unstable();
                match index.get(&b) {
                    Some(&slot) => terms[slot].completions += 1,
                    None => {
                        index.insert(b.clone(), terms.len());
                        terms.push(HoeffdingTerm {
                            edges: b,
                            class: classes.class_of(mask),
                            completions: 1,
                        });
                    }
                }
            }
        }
        terms.sort_by(|a, b| (a.edges.len(), &a.edges).cmp(&(b.edges.len(), &b.edges)));
        Ok(TermTable {
            copies,
            classes,
            terms,
        })
    }

    /// `I_F(x)` for every class, scaled by `P_H / sd`.
    pub fn projections(&self, spec: &ProbabilitySpec, x: &Realization, ph: f64, sd: f64) -> Result<Vec<f64>> {
        let universe = &self.copies.universe;
        let mut ratio = Vec::with_capacity(universe.sizes().len());
        for &k in universe.sizes() {
            let e = spec.get(k)?;
            ratio.push((k, e.q / e.p));
        }
        let r_of = |idx: u32| {
            let k = universe.size_at(idx as usize);
            if x.contains(idx as usize) {
                ratio.iter().find(|(s, _)| *s == k).unwrap().1
            } else {
                -1.0
            }
        };
        let mut out = vec![0.0; self.classes.len()];
        for t in &self.terms {
            let prod: f64 = t.edges.iter().map(|&b| r_of(b)).product();
            out[t.class] += t.completions as f64 * prod;
        }
        let scale = ph / sd;
        Ok(out.into_iter().map(|v| v * scale).collect())
    }
}

/// Directly standardised count and the sum of all `W_B` on one realisation.
pub fn hoeffding_reconstruct(
    table: &TermTable,
    spec: &ProbabilitySpec,
    x: &Realization,
    mean: f64,
    sd: f64,
) -> Result<(f64, f64)> {
    if !(sd > 0.0) {
        return Err(Error::DegenerateCount(sd));
    }
    let z = count_in_sample(&table.copies, x) as f64;
    let ph = ph_f64(table, spec)?;
    let parts = table.projections(spec, x, ph, sd)?;
    Ok(((z - mean) / sd, parts.iter().sum()))
}

fn ph_f64(table: &TermTable, spec: &ProbabilitySpec) -> Result<f64> {
    let full = table.classes.len() - 1;
    let rep = &table.classes.representatives[full];
    rep.sizes().iter().map(|&k| spec.get(k).map(|e| e.p)).product()
}

/// `alpha_n(H', H)` for one class `H'` of sub-patterns of `H`.
#[derive(Clone, Debug, Serialize)]
pub struct Alpha {
    pub class: usize,
    pub label: String,
    pub value: f64,
    /// Completions of one placed `H'` to copies of `H`.
    pub completions: u128,
    /// The same count per choice of the extra vertices.
    pub completions_per_vertex_set: f64,
    /// Whether `c_H(B) = c(H') * c_{H'}(B)` for every class inside `H'`,
    /// which is exactly when the pointwise identity holds.
    pub uniform: bool,
    /// `sqrt(max_{F in H'} n^{-v_F} Q_F/P_F / max_{F in H} n^{-v_F} Q_F/P_F)`.
    pub surrogate: f64,
}

/// `c(H') * P_H * sd(Z_{H'}) / (P_{H'} * sd(Z_H))` for every class.
pub fn alpha_exact(p: &Pattern, n: usize, spec: &ProbabilitySpec, guards: &Guards) -> Result<Vec<Alpha>> {
    let counts = ClassCounts::new(p, n)?;
    let var_h: f64 = variance_exact(p, n, spec, guards)?;
    let ph: f64 = p.sizes().iter().map(|&k| spec.get(k).map(|e| e.p)).product::<Result<f64>>()?;
    let ln_n = (n as f64).ln();
    let weight = |q: &Pattern| -> Result<f64> {
        let terms = sub_terms(q, spec)?;
        Ok(terms
            .iter()
            .map(|t| t.ln_variance_weight(ln_n))
            .fold(f64::NEG_INFINITY, f64::max))
    };
    let w_h = weight(p)?;
    let reps = &counts.classes.representatives;
    let mut out = Vec::with_capacity(reps.len());
    for (f, sub) in reps.iter().enumerate() {
        let c = counts.completions[f];
        let var_sub: f64 = variance_exact(sub, n, spec, guards)?;
        let p_sub: f64 = sub.sizes().iter().map(|&k| spec.get(k).map(|e| e.p)).product::<Result<f64>>()?;
        let value = c as f64 * ph * var_sub.sqrt() / (p_sub * var_h.sqrt());
        let extra = binomial_u128(n.saturating_sub(sub.vertex_count()), p.vertex_count() - sub.vertex_count())
            .unwrap_or(0);
        let uniform = uniform_completions(&counts, sub, n, c)?;
        out.push(Alpha {
            class: f,
            label: sub.label(),
            value,
            completions: c,
            completions_per_vertex_set: c as f64 / extra as f64,
            uniform,
            surrogate: ((weight(sub)? - w_h) * 0.5).exp(),
        });
    }
    Ok(out)
}

fn uniform_completions(counts: &ClassCounts, sub: &Pattern, n: usize, c_sub: u128) -> Result<bool> {
    let sub_copies = count_copies_total(sub, n);
    for sp in sub_patterns(sub) {
        let f = counts
            .classes
            .representatives
            .iter()
            .position(|r| are_isomorphic(r, &sp.pattern))
            .expect("sub-pattern of a sub-pattern is a sub-pattern");
        let placed = counts.placements[f];
        let inner = sub_patterns(sub)
            .iter()
            .filter(|s| are_isomorphic(&s.pattern, &sp.pattern))
            .count() as u128;
        // c_{H'}(B) = N_{H'} * s'_F / N_F
        if counts.completions[f] * placed != c_sub * sub_copies * inner {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Worst deviation of one `alpha` identity over sampled realisations.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaCheck {
    pub label: String,
    pub alpha: f64,
    pub uniform: bool,
    pub max_deviation: f64,
}

/// Outcome of checking the decomposition on one `(pattern, n, spec)`.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub pattern: String,
    pub n: usize,
    pub spec: String,
    pub classes: Vec<ClassVariance<f64>>,
    /// `Var[I_m]` for `m = 1..=e_H`.
    pub layers: Vec<f64>,
    /// `|sum_F Var[I_F] - 1|`.
    pub completeness_deviation: f64,
    /// Whether the completeness sum is exactly one in rational arithmetic.
    pub completeness_exact: Option<bool>,
    pub realizations: usize,
    /// `max |Z~ - sum_B W_B|` over the realisations.
    pub max_reconstruction_deviation: f64,
    pub alpha: Vec<AlphaCheck>,
}

/// Samples `reps` realisations and checks reconstruction, completeness and
/// the `alpha` identity for every class.
pub fn verify(
    p: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    reps: usize,
    seed: u64,
    guards: &Guards,
) -> Result<ProjectionReport> {
    let table = TermTable::new(p, n, guards)?;
    let mean: f64 = mean_exact(p, n, spec)?;
    let var: f64 = variance_exact(p, n, spec, guards)?;
    let sd = var.sqrt();
    let classes = var_if_exact(p, n, spec, &var)?;
    let total: f64 = classes.iter().map(|c| c.variance).sum();
    let completeness_exact = if spec.is_exact() {
        let var_q: num_rational::BigRational = variance_exact(p, n, spec, guards)?;
        let parts = var_if_exact(p, n, spec, &var_q)?;
        Some(num_traits::One::is_one(&Scalar::sum(parts.into_iter().map(|c| c.variance))))
    } else {
        None
    };
    let layers = (1..=p.edge_count())
        .map(|m| classes.iter().filter(|c| c.edges == m).map(|c| c.variance).sum())
        .collect();
    let alphas = alpha_exact(p, n, spec, guards)?;
    let mut subs = Vec::with_capacity(alphas.len());
    for (f, a) in alphas.iter().enumerate() {
        let sub = &table.classes.representatives[f];
        let within = table.classes.classes_within(table.classes.members[f][0]);
        let sub_copies = IndexedCopies::new(sub, n)?;
        let sub_mean: f64 = mean_exact(sub, n, spec)?;
        let sub_sd = variance_exact::<f64>(sub, n, spec, guards)?.sqrt();
        subs.push((within, sub_copies, sub_mean, sub_sd, a));
    }

    let ph = ph_f64(&table, spec)?;
    let mut worst = 0.0f64;
    let mut alpha_dev = vec![0.0f64; subs.len()];
    for rep in 0..reps as u64 {
        let mut rng = replication_rng(seed, rep);
        let x = sample_relevant_edges(&table.copies.universe, spec, &mut rng)?;
        let z = (count_in_sample(&table.copies, &x) as f64 - mean) / sd;
        let parts = table.projections(spec, &x, ph, sd)?;
        worst = worst.max((z - parts.iter().sum::<f64>()).abs());
        for (dev, (within, sub_copies, sub_mean, sub_sd, a)) in alpha_dev.iter_mut().zip(&subs) {
            let x_sub = Realization::from_edges(&sub_copies.universe, &x.edges(&table.copies.universe));
            let z_sub = (count_in_sample(sub_copies, &x_sub) as f64 - sub_mean) / sub_sd;
            let lhs: f64 = within.iter().map(|&f| parts[f]).sum();
            *dev = dev.max((lhs - a.value * z_sub).abs());
        }
    }
    Ok(ProjectionReport {
        pattern: p.label(),
        n,
        spec: spec.summary(),
        classes,
        layers,
        completeness_deviation: (total - 1.0).abs(),
        completeness_exact,
        realizations: reps,
        max_reconstruction_deviation: worst,
        alpha: alphas
            .iter()
            .zip(alpha_dev)
            .map(|(a, d)| AlphaCheck {
                label: a.label.clone(),
                alpha: a.value,
                uniform: a.uniform,
                max_deviation: d,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;

    fn named(s: &str) -> Pattern {
        Pattern::named(s).unwrap()
    }

    #[test]
    fn triangle_edge_projection() {
        let p = named("triangle");
        let spec = ProbabilitySpec::homogeneous(&[2], "0.5").unwrap();
        let var: BigRational = variance_exact(&p, 4, &spec, &Guards::default()).unwrap();
        let classes = var_if_exact(&p, 4, &spec, &var).unwrap();
        let edge = classes.iter().find(|c| c.edges == 1).unwrap();
        assert_eq!(edge.completions, 2);
        assert_eq!(edge.placements, 6);
        assert_eq!(edge.variance, BigRational::new(3.into(), 5.into()));
        let sum: BigRational = Scalar::sum(classes.into_iter().map(|c| c.variance));
        assert!(sum.is_one());
    }

    #[test]
    fn single_edge_is_one_layer() {
        let p = named("edge");
        let spec = ProbabilitySpec::homogeneous(&[2], "0.3").unwrap();
        let var: BigRational = variance_exact(&p, 5, &spec, &Guards::default()).unwrap();
        assert!(var_im(&p, 5, &spec, 1, &var).unwrap().is_one());
        assert!(var_im(&p, 5, &spec, 2, &var).is_err());
    }

    #[test]
    fn counted_completions_match_closed_form() {
        for name in ["2-path", "triangle", "loop-pair", "diamond"] {
            let p = named(name);
            let table = TermTable::new(&p, 6, &Guards::default()).unwrap();
            let counts = ClassCounts::new(&p, 6).unwrap();
            let mut seen = vec![0u128; counts.classes.len()];
            for t in &table.terms {
                assert_eq!(t.completions as u128, counts.completions[t.class], "{name}");
                seen[t.class] += 1;
            }
            assert_eq!(seen, counts.placements, "{name}");
        }
    }

    #[test]
    fn empty_and_full_realizations() {
        let p = named("edge");
        let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.3).unwrap();
        let g = Guards::default();
        let table = TermTable::new(&p, 5, &g).unwrap();
        let mean: f64 = mean_exact(&p, 5, &spec).unwrap();
        let sd = variance_exact::<f64>(&p, 5, &spec, &g).unwrap().sqrt();
        let u = &table.copies.universe;
        let (z, w) = hoeffding_reconstruct(&table, &spec, &Realization::empty(u), mean, sd).unwrap();
        assert!((z + mean / sd).abs() < 1e-12 && (z - w).abs() < 1e-12);
        let (z, w) = hoeffding_reconstruct(&table, &spec, &Realization::full(u), mean, sd).unwrap();
        assert!((z - (10.0 - mean) / sd).abs() < 1e-12 && (z - w).abs() < 1e-12);
    }

    #[test]
    fn alpha_of_whole_pattern_is_one() {
        let p = named("triangle");
        let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.4).unwrap();
        let alphas = alpha_exact(&p, 6, &spec, &Guards::default()).unwrap();
        let whole = alphas.last().unwrap();
        assert!((whole.value - 1.0).abs() < 1e-12);
        assert_eq!(whole.completions, 1);
        assert!(whole.uniform);
    }

    #[test]
    fn path_inside_triangle_is_not_uniform() {
        let p = named("triangle");
        let spec = ProbabilitySpec::homogeneous_f64(&[2], 0.4).unwrap();
        let alphas = alpha_exact(&p, 6, &spec, &Guards::default()).unwrap();
        let path = alphas.iter().find(|a| a.label.matches('{').count() == 2).unwrap();
        assert!(!path.uniform);
        let edge = alphas.iter().find(|a| a.label.matches('{').count() == 1).unwrap();
        assert!(edge.uniform);
    }
}
