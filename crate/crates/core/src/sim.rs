//! Monte Carlo sampling of the model restricted to the edge sizes a pattern
//! uses, and counting of realised copies.
//!
//! Replication `r` of a batch draws from the ChaCha8 stream `r` of the
//! generator seeded with the batch seed, so batches are reproducible at any
//! worker count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copies::{binomial_u128, EdgeUniverse, IndexedCopies};
use crate::error::{Error, Result};
use crate::pattern::{remove_isolated_vertices, Pattern};
use crate::prob::ProbabilitySpec;

/// Below this rate a block is sampled by drawing how many rare events occur
/// and then where, instead of one Bernoulli trial per edge.
const SPARSE_RATE: f64 = 1.0 / 16.0;

/// The generator for replication `rep` of a batch seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// A realised edge set, as a bitset over an [`EdgeUniverse`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realization {
    bits: Vec<u64>,
}

impl Realization {
    pub fn empty(universe: &EdgeUniverse) -> Self {
        Realization {
            bits: vec![0; universe.len().div_ceil(64)],
        }
    }

    pub fn full(universe: &EdgeUniverse) -> Self {
        let mut r = Self::empty(universe);
        r.fill(0..universe.len(), true);
        r
    }

    /// From concrete edges; edges of sizes outside the universe are ignored.
    pub fn from_edges(universe: &EdgeUniverse, edges: &[u64]) -> Self {
        let mut r = Self::empty(universe);
        for &e in edges {
            if let Some(i) = universe.index_of(e) {
                r.insert(i);
            }
        }
        r
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn insert(&mut self, index: usize) {
        self.bits[index / 64] |= 1 << (index % 64);
    }

    pub fn remove(&mut self, index: usize) {
        self.bits[index / 64] &= !(1 << (index % 64));
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Universe indices of the present edges, increasing.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// The present edges as vertex bitmasks.
    pub fn edges(&self, universe: &EdgeUniverse) -> Vec<u64> {
        self.indices().map(|i| universe.edge_at(i)).collect()
    }

    fn fill(&mut self, range: std::ops::Range<usize>, value: bool) {
        for i in range {
            if value {
                self.insert(i);
            } else {
                self.remove(i);
            }
        }
    }

    fn clear(&mut self) {
        self.bits.fill(0);
    }
}

/// Draws every edge of the universe independently with the probability of
/// its size. Only the universe's sizes are ever materialised.
pub fn sample_relevant_edges<R: Rng + ?Sized>(
    universe: &EdgeUniverse,
    spec: &ProbabilitySpec,
    rng: &mut R,
) -> Result<Realization> {
    let mut out = Realization::empty(universe);
    sample_into(universe, spec, rng, &mut out)?;
    Ok(out)
}

fn sample_into<R: Rng + ?Sized>(
    universe: &EdgeUniverse,
    spec: &ProbabilitySpec,
    rng: &mut R,
    out: &mut Realization,
) -> Result<()> {
    out.clear();
    for &k in universe.sizes() {
        let prob = spec.get(k)?;
        let block = universe.block(k).expect("size from universe");
        // the rare event is presence for p <= 1/2 and absence otherwise
        let dense = prob.p > 0.5;
        let rate = if dense { prob.q } else { prob.p };
        if dense {
            out.fill(block.clone(), true);
        }
        let len = block.len();
        if rate < SPARSE_RATE {
            let hits = Binomial::new(len as u64, rate)
                .map_err(|e| Error::InvalidProbability(e.to_string()))?
                .sample(rng) as usize;
            for i in index::sample(rng, len, hits) {
                out.fill(block.start + i..block.start + i + 1, !dense);
            }
        } else {
            for i in block {
                if rng.random_bool(rate) {
                    out.fill(i..i + 1, !dense);
                }
            }
        }
    }
    Ok(())
}

/// Number of copies whose edges are all present.
pub fn count_in_sample(copies: &IndexedCopies, realized: &Realization) -> u64 {
    (0..copies.len())
        .filter(|&i| {
            copies
                .edge_indices(i)
                .iter()
                .all(|&e| realized.contains(e as usize))
        })
        .count() as u64
}

/// Description of the run that produced a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub pattern: String,
    pub n: usize,
    pub spec: String,
}

/// Monte Carlo realisations of the copy count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub reps: usize,
    pub meta: BatchMeta,
    pub values: Vec<u64>,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|&v| (v as f64 - m).powi(2)).sum();
        ss / (self.values.len() as f64 - 1.0)
    }
}

/// Draws `reps` independent copy counts. A pattern with isolated vertices is
/// counted through its isolated-free core times the number of ways to place
/// the isolated vertices.
pub fn simulate_z(
    pattern: &Pattern,
    n: usize,
    spec: &ProbabilitySpec,
    reps: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if reps == 0 {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    let (core, isolated) = remove_isolated_vertices(pattern)?;
    spec.require(&core.distinct_sizes())?;
    let multiplier = if n < pattern.vertex_count() {
        0
    } else {
        u64::try_from(binomial_u128(n - core.vertex_count(), isolated).unwrap_or(u128::MAX))
            .map_err(|_| Error::OutOfRange("isolated-vertex multiplier overflows".into()))?
    };
    let copies = IndexedCopies::new(&core, n)?;
    let values = (0..reps as u64)
        .into_par_iter()
        .map_init(
            || Realization::empty(&copies.universe),
            |scratch, rep| -> Result<u64> {
                let mut rng = replication_rng(seed, rep);
                sample_into(&copies.universe, spec, &mut rng, scratch)?;
                Ok(count_in_sample(&copies, scratch) * multiplier)
            },
        )
        .collect::<Result<Vec<u64>>>()?;
    Ok(SampleBatch {
        seed,
        reps,
        meta: BatchMeta {
            pattern: pattern.label(),
            n,
            spec: spec.summary(),
        },
        values,
    })
}

/// `(z - mean) / sd` for every value.
pub fn standardize(values: &[u64], mean: f64, sd: f64) -> Result<Vec<f64>> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::DegenerateCount(sd));
    }
    Ok(values.iter().map(|&v| (v as f64 - mean) / sd).collect())
}
