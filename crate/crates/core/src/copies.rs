//! Copies of a pattern inside the complete hypergraph on `[n]`.
//!
//! Concrete edges are vertex bitmasks over `[n]`, so enumeration is limited to
//! `n <= MAX_ENUM_N`. Copies are produced in a fixed order: vertex subsets in
//! lexicographic order, then the distinct labelled images of the pattern on
//! that subset in order of the first vertex permutation producing them.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pattern::{automorphism_count, fmt_edge, labelled_images, Pattern};

pub const MAX_ENUM_N: usize = 64;

/// A concrete copy of a pattern: its edges (in pattern-edge order) and the
/// vertices they cover. Two copies are equal when their edge sets are.
#[derive(Clone, Debug, Serialize)]
pub struct PlacedCopy {
    pub edges: Vec<u64>,
    pub vertices: u64,
}

impl PlacedCopy {
    pub fn new(edges: Vec<u64>) -> Self {
        let vertices = edges.iter().fold(0, |a, &e| a | e);
        PlacedCopy { edges, vertices }
    }

    pub fn sorted_edges(&self) -> Vec<u64> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    pub fn shares_edge(&self, other: &PlacedCopy) -> bool {
        self.edges.iter().any(|e| other.edges.contains(e))
    }

    pub fn label(&self) -> String {
        self.edges.iter().map(|&e| fmt_edge(e)).collect()
    }
}

impl PartialEq for PlacedCopy {
    fn eq(&self, other: &Self) -> bool {
        self.sorted_edges() == other.sorted_edges()
    }
}

impl Eq for PlacedCopy {}

pub(crate) fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(acc)
}

/// Binomial coefficient as a float, exact for small arguments.
pub fn binomial_f64(n: f64, k: usize) -> f64 {
    if (k as f64) > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 1..=k {
        acc *= (n - k as f64 + i as f64) / i as f64;
    }
    acc
}

/// Number of copies of an isolated-free pattern in `K*_n`:
/// `C(n, v) * v! / |Aut|`. Zero when `n < v`; saturates at `u128::MAX`.
pub fn count_copies_total(p: &Pattern, n: usize) -> u128 {
    let v = p.vertex_count();
    if n < v {
        return 0;
    }
    let fact: u128 = (1..=v as u128).product();
    let labelled = fact / automorphism_count(p) as u128;
    binomial_u128(n, v)
        .and_then(|c| c.checked_mul(labelled))
        .unwrap_or(u128::MAX)
}

/// Copy count as a float for large `n`.
pub fn count_copies_f64(p: &Pattern, n: f64) -> f64 {
    let v = p.vertex_count();
    let fact: f64 = (1..=v).map(|i| i as f64).product();
    binomial_f64(n, v) * fact / automorphism_count(p) as f64
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_ENUM_N {
        return Err(Error::OutOfRange(format!(
            "enumeration supports n <= {MAX_ENUM_N}, got {n}"
        )));
    }
    Ok(())
}

/// Lexicographic successor of a k-combination of `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The combination of lexicographic rank `rank` among k-subsets of `0..n`.
fn unrank_combination(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let block = binomial_u128(n - next - 1, remaining).unwrap_or(u128::MAX);
            if rank < block {
                out.push(next);
                next += 1;
                break;
            }
            rank -= block;
            next += 1;
        }
    }
    out
}

/// Iterator over the copies of a pattern within a range of vertex subsets.
pub struct CopyEnumerator {
    images: Vec<Vec<u32>>,
    n: usize,
    combo: Vec<usize>,
    remaining_combos: u128,
    image: usize,
}

impl CopyEnumerator {
    /// All copies of `p` in `K*_n`. `p` must be isolated-free.
    pub fn new(p: &Pattern, n: usize) -> Result<Self> {
        let total = binomial_u128(n, p.vertex_count()).unwrap_or(u128::MAX);
        Self::range(p, n, 0, total)
    }

    /// Copies whose vertex subset has lexicographic rank in `start..end`.
    pub fn range(p: &Pattern, n: usize, start: u128, end: u128) -> Result<Self> {
        check_n(n)?;
        if p.has_isolated_vertices() {
            return Err(Error::InvalidPattern(
                "copy enumeration needs an isolated-free pattern".into(),
            ));
        }
        let v = p.vertex_count();
        let total = binomial_u128(n, v).unwrap_or(u128::MAX);
        let end = end.min(total);
        let start = start.min(end);
        let combo = if start < end {
            unrank_combination(start, n, v)
        } else {
            Vec::new()
        };
        Ok(CopyEnumerator {
            images: labelled_images(p),
            n,
            combo,
            remaining_combos: end - start,
            image: 0,
        })
    }
}

impl Iterator for CopyEnumerator {
    type Item = PlacedCopy;

    fn next(&mut self) -> Option<PlacedCopy> {
        if self.remaining_combos == 0 {
            return None;
        }
        let img = &self.images[self.image];
        let edges = img
            .iter()
            .map(|&e| {
                let mut m = 0u64;
                let mut rest = e;
                while rest != 0 {
                    let v = rest.trailing_zeros() as usize;
                    m |= 1u64 << self.combo[v];
                    rest &= rest - 1;
                }
                m
            })
            .collect();
        self.image += 1;
        if self.image == self.images.len() {
            self.image = 0;
            self.remaining_combos -= 1;
            if self.remaining_combos > 0 {
                next_combination(&mut self.combo, self.n);
            }
        }
        Some(PlacedCopy::new(edges))
    }
}

/// Collects all copies of `p` in `K*_n` in the deterministic order.
pub fn enumerate_copies(p: &Pattern, n: usize) -> Result<Vec<PlacedCopy>> {
    Ok(CopyEnumerator::new(p, n)?.collect())
}

/// Splits the vertex-subset ranks of `p` in `K*_n` into `shards` contiguous
/// ranges; enumerating them in order reproduces [`enumerate_copies`].
pub fn shard_ranges(p: &Pattern, n: usize, shards: usize) -> Vec<(u128, u128)> {
    let total = binomial_u128(n, p.vertex_count()).unwrap_or(u128::MAX);
    let shards = shards.max(1) as u128;
    (0..shards)
        .map(|s| (total * s / shards, total * (s + 1) / shards))
        .collect()
}

/// True iff the copies can be split into two nonempty groups whose edge
/// unions are disjoint. Decided by connectivity of the shares-an-edge graph.
pub fn is_edgewise_separable(copies: &[PlacedCopy]) -> Result<bool> {
    if copies.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: copies.len(),
        });
    }
    let m = copies.len();
    let mut reached = vec![false; m];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if !reached[j] && copies[i].shares_edge(&copies[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    Ok(reached.iter().any(|r| !r))
}

/// Exhaustive search for an index set whose edge union is disjoint from the
/// union of the remaining copies. Returns the smallest such set by bitmask,
/// always containing index 0.
pub fn find_separating_split(copies: &[PlacedCopy]) -> Option<Vec<usize>> {
    let m = copies.len();
    if m < 2 || m > 20 {
        return None;
    }
    for mask in 0u32..(1 << (m - 1)) {
        // index 0 always goes in the first group to halve the search
        let group = (mask << 1) | 1;
        if group == (1 << m) - 1 {
            continue;
        }
        let union = |inside: bool| -> Vec<u64> {
            let mut u: Vec<u64> = (0..m)
                .filter(|&i| ((group >> i) & 1 == 1) == inside)
                .flat_map(|i| copies[i].edges.iter().copied())
                .collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        let a = union(true);
        let b = union(false);
        if a.iter().all(|e| b.binary_search(e).is_err()) {
            return Some((0..m).filter(|&i| (group >> i) & 1 == 1).collect());
        }
    }
    None
}

/// A family of copies with its overlap summary.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapClass {
    pub copies: Vec<PlacedCopy>,
    /// Sorted union of all edges.
    pub union: Vec<u64>,
    /// `shared[i][j]` is the number of edges copies `i` and `j` have in common.
    pub shared: Vec<Vec<usize>>,
    pub separable: bool,
}

impl OverlapClass {
    pub fn new(copies: Vec<PlacedCopy>) -> Result<Self> {
        let separable = is_edgewise_separable(&copies)?;
        let mut union: Vec<u64> = copies.iter().flat_map(|c| c.edges.clone()).collect();
        union.sort_unstable();
        union.dedup();
        let shared = copies
            .iter()
            .map(|a| {
                copies
                    .iter()
                    .map(|b| a.edges.iter().filter(|e| b.edges.contains(e)).count())
                    .collect()
            })
            .collect();
        Ok(OverlapClass {
            copies,
            union,
            shared,
            separable,
        })
    }
}

/// All concrete edges of the given sizes over `[n]`, indexed contiguously:
/// sizes in increasing order, each block in colexicographic order.
#[derive(Clone, Debug)]
pub struct EdgeUniverse {
    n: usize,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
    binom: Vec<Vec<u64>>,
}

impl EdgeUniverse {
    pub fn new(n: usize, sizes: &[usize]) -> Result<Self> {
        check_n(n)?;
        let mut sizes = sizes.to_vec();
        sizes.sort_unstable();
        sizes.dedup();
        let mut binom = vec![vec![0u64; n + 2]; n + 1];
        for (i, row) in binom.iter_mut().enumerate() {
            row[0] = 1;
            for k in 1..=i.min(n + 1) {
                row[k] = binomial_u128(i, k).unwrap_or(0) as u64;
            }
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0usize;
        for &k in &sizes {
            offsets.push(total);
            let block = binomial_u128(n, k).unwrap_or(u128::MAX);
            total = total
                .checked_add(usize::try_from(block).map_err(|_| too_big(n))?)
                .ok_or_else(|| too_big(n))?;
        }
        Ok(EdgeUniverse {
            n,
            sizes,
            offsets,
            total,
            binom,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Index range of the edges of size `k`.
    pub fn block(&self, k: usize) -> Option<std::ops::Range<usize>> {
        let i = self.sizes.iter().position(|&s| s == k)?;
        let end = self.offsets.get(i + 1).copied().unwrap_or(self.total);
        Some(self.offsets[i]..end)
    }

    /// Index of a concrete edge, if its size belongs to the universe.
    pub fn index_of(&self, edge: u64) -> Option<usize> {
        let k = edge.count_ones() as usize;
        let i = self.sizes.iter().position(|&s| s == k)?;
        let mut rank = 0u64;
        let mut rest = edge;
        let mut slot = 1;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            if v >= self.n {
                return None;
            }
            rank += self.binom[v][slot];
            slot += 1;
            rest &= rest - 1;
        }
        Some(self.offsets[i] + rank as usize)
    }

    /// The concrete edge stored at `index`.
    pub fn edge_at(&self, index: usize) -> u64 {
        let i = self
            .offsets
            .iter()
            .rposition(|&o| o <= index)
            .expect("index within universe");
        let k = self.sizes[i];
        let mut rank = (index - self.offsets[i]) as u64;
        let mut edge = 0u64;
        for slot in (1..=k).rev() {
            let mut v = slot - 1;
            while v + 1 < self.n && self.binom[v + 1][slot] <= rank {
                v += 1;
            }
            rank -= self.binom[v][slot];
            edge |= 1 << v;
        }
        edge
    }

    /// Size of the edge stored at `index`.
    pub fn size_at(&self, index: usize) -> usize {
        let i = self
            .offsets
            .iter()
            .rposition(|&o| o <= index)
            .expect("index within universe");
        self.sizes[i]
    }

    /// Position of edge size `k` within [`EdgeUniverse::sizes`].
    pub fn size_slot(&self, k: usize) -> Option<usize> {
        self.sizes.iter().position(|&s| s == k)
    }
}

fn too_big(n: usize) -> Error {
    Error::OutOfRange(format!("edge universe over n = {n} too large"))
}

/// The copies of a pattern with their edges translated to universe indices.
#[derive(Clone, Debug)]
pub struct IndexedCopies {
    pub universe: EdgeUniverse,
    pub copies: Vec<PlacedCopy>,
    edges_per_copy: usize,
    flat: Vec<u32>,
}

impl IndexedCopies {
    pub fn new(p: &Pattern, n: usize) -> Result<Self> {
        let universe = EdgeUniverse::new(n, &p.distinct_sizes())?;
        let copies = enumerate_copies(p, n)?;
        Ok(Self::from_parts(universe, copies, p.edge_count()))
    }

    pub(crate) fn from_parts(
        universe: EdgeUniverse,
        copies: Vec<PlacedCopy>,
        edges_per_copy: usize,
    ) -> Self {
        let flat = copies
            .iter()
            .flat_map(|c| {
                c.edges
                    .iter()
                    .map(|&e| universe.index_of(e).expect("copy edge in universe") as u32)
                    .collect::<Vec<_>>()
            })
            .collect();
        IndexedCopies {
            universe,
            copies,
            edges_per_copy,
            flat,
        }
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn edges_per_copy(&self) -> usize {
        self.edges_per_copy
    }

    /// Universe indices of the edges of copy `i`, in pattern-edge order.
    pub fn edge_indices(&self, i: usize) -> &[u32] {
        &self.flat[i * self.edges_per_copy..(i + 1) * self.edges_per_copy]
    }

    /// For each universe edge, the copies that contain it.
    pub fn copies_by_edge(&self) -> Vec<Vec<u32>> {
        let mut by_edge = vec![Vec::new(); self.universe.len()];
        for i in 0..self.len() {
            for &e in self.edge_indices(i) {
                by_edge[e as usize].push(i as u32);
            }
        }
        by_edge
    }

    /// Neighbours of each copy in the shares-an-edge graph, sorted.
    pub fn overlap_graph(&self) -> Vec<Vec<u32>> {
        let by_edge = self.copies_by_edge();
        let mut mark = vec![u32::MAX; self.len()];
        (0..self.len())
            .map(|i| {
                let mut nb = Vec::new();
                for &e in self.edge_indices(i) {
                    for &j in &by_edge[e as usize] {
                        if j as usize != i && mark[j as usize] != i as u32 {
                            mark[j as usize] = i as u32;
                            nb.push(j);
                        }
                    }
                }
                nb.sort_unstable();
                nb
            })
            .collect()
    }
}

/// Count of copies in `copies` fully contained in a set of concrete edges.
pub fn count_contained(copies: &[PlacedCopy], realized: &[u64]) -> u64 {
    let set: HashMap<u64, ()> = realized.iter().map(|&e| (e, ())).collect();
    copies
        .iter()
        .filter(|c| c.edges.iter().all(|e| set.contains_key(e)))
        .count() as u64
}
