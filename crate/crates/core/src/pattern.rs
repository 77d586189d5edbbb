//! Pattern hypergraphs: the motif `H` whose copies are counted.
//!
//! Vertices are `0..vertex_count` and every edge is stored as a vertex bitmask,
//! so a pattern has at most [`MAX_PATTERN_VERTICES`] vertices. Loops are
//! singleton edges. Isomorphism and automorphisms are decided by brute force
//! over vertex permutations, which is fine for motif-sized patterns.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PATTERN_VERTICES: usize = 12;

/// A finite hypergraph with nonempty, pairwise distinct edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct Pattern {
    vertex_count: usize,
    edges: Vec<u32>,
    // cached
    isolated: u32,
    sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPattern {
    vertices: usize,
    edges: Vec<Vec<usize>>,
}

impl TryFrom<RawPattern> for Pattern {
    type Error = Error;
    fn try_from(raw: RawPattern) -> Result<Self> {
        let edges: Vec<Vec<usize>> = raw
            .edges
            .into_iter()
            .map(|e| e.into_iter().map(|v| v.wrapping_sub(1)).collect())
            .collect();
        Pattern::new(raw.vertices, &edges)
    }
}

impl From<Pattern> for RawPattern {
    fn from(p: Pattern) -> Self {
        RawPattern {
            vertices: p.vertex_count,
            edges: p
                .edges
                .iter()
                .map(|&m| mask_vertices(m as u64).into_iter().map(|v| v + 1).collect())
                .collect(),
        }
    }
}

impl Pattern {
    /// Builds a pattern from 0-based vertex lists.
    pub fn new<E: AsRef<[usize]>>(vertex_count: usize, edges: &[E]) -> Result<Self> {
        if vertex_count == 0 || vertex_count > MAX_PATTERN_VERTICES {
            return Err(Error::InvalidPattern(format!(
                "vertex count must be in 1..={MAX_PATTERN_VERTICES}, got {vertex_count}"
            )));
        }
        let mut masks = Vec::with_capacity(edges.len());
        for e in edges {
            let e = e.as_ref();
            if e.is_empty() {
                return Err(Error::InvalidPattern("empty edge".into()));
            }
            let mut m = 0u32;
            for &v in e {
                if v >= vertex_count {
                    return Err(Error::InvalidPattern(format!(
                        "vertex {} out of range 1..={vertex_count}",
                        v.wrapping_add(1)
                    )));
                }
                if m & (1 << v) != 0 {
                    return Err(Error::InvalidPattern(format!(
                        "vertex {} repeated within an edge",
                        v + 1
                    )));
                }
                m |= 1 << v;
            }
            masks.push(m);
        }
        Self::from_masks(vertex_count, masks)
    }

    /// Builds a pattern from edge bitmasks over `0..vertex_count`.
    pub fn from_masks(vertex_count: usize, edges: Vec<u32>) -> Result<Self> {
        if vertex_count == 0 || vertex_count > MAX_PATTERN_VERTICES {
            return Err(Error::InvalidPattern(format!(
                "vertex count must be in 1..={MAX_PATTERN_VERTICES}, got {vertex_count}"
            )));
        }
        let all = full_mask(vertex_count);
        let mut seen = HashSet::new();
        for &e in &edges {
            if e == 0 || e & !all != 0 {
                return Err(Error::InvalidPattern(format!("edge mask {e:#b} invalid")));
            }
            if !seen.insert(e) {
                return Err(Error::InvalidPattern(format!(
                    "duplicate edge {}",
                    fmt_edge(e as u64)
                )));
            }
        }
        let covered = edges.iter().fold(0u32, |acc, &e| acc | e);
        let mut sizes: Vec<usize> = edges.iter().map(|e| e.count_ones() as usize).collect();
        sizes.sort_unstable();
        Ok(Pattern {
            vertex_count,
            isolated: all & !covered,
            edges,
            sizes,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge bitmasks in declaration order.
    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    /// Sorted multiset of edge sizes.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Distinct edge sizes in increasing order.
    pub fn distinct_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        s.dedup();
        s
    }

    pub fn min_edge_size(&self) -> Option<usize> {
        self.sizes.first().copied()
    }

    pub fn isolated_vertices(&self) -> Vec<usize> {
        mask_vertices(self.isolated as u64)
    }

    pub fn has_isolated_vertices(&self) -> bool {
        self.isolated != 0
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut deg: Vec<usize> = (0..self.vertex_count)
            .map(|v| self.edges.iter().filter(|&&e| e & (1 << v) != 0).count())
            .collect();
        deg.sort_unstable();
        deg
    }

    fn sorted_edges(&self) -> Vec<u32> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    /// Short human-readable identifier, e.g. `v3:{1,2}{1,3}{2,3}`.
    pub fn label(&self) -> String {
        let mut s = format!("v{}:", self.vertex_count);
        for &e in &self.edges {
            s.push_str(&fmt_edge(e as u64));
        }
        s
    }

    /// The pattern in the line-oriented text format accepted by [`Pattern::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("vertices: {}\n", self.vertex_count);
        for &e in &self.edges {
            let vs: Vec<String> = mask_vertices(e as u64)
                .into_iter()
                .map(|v| (v + 1).to_string())
                .collect();
            s.push_str(&format!("edge: {}\n", vs.join(" ")));
        }
        s
    }

    /// Parses the text format: a `vertices: <v>` line followed by
    /// `edge: i j ...` lines with 1-based vertices. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices: Option<usize> = None;
        let mut edges: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::PatternParse { line: line_no, msg };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: value`, got `{line}`")))?;
            match key.trim() {
                "vertices" => {
                    if vertices.is_some() {
                        return Err(err("duplicate `vertices` line".into()));
                    }
                    let v = rest
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| err(format!("bad vertex count: {e}")))?;
                    vertices = Some(v);
                }
                "edge" => {
                    let vs = rest
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|e| err(format!("bad vertex `{t}`: {e}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if vs.is_empty() {
                        return Err(err("edge with no vertices".into()));
                    }
                    if vs.contains(&0) {
                        return Err(err("vertices are 1-based".into()));
                    }
                    edges.push((line_no, vs.into_iter().map(|v| v - 1).collect()));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let v = vertices.ok_or(Error::PatternParse {
            line: 0,
            msg: "missing `vertices` line".into(),
        })?;
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for (line, e) in &edges {
            let mut key = e.clone();
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(Error::PatternParse {
                    line: *line,
                    msg: "duplicate edge".into(),
                });
            }
        }
        let lists: Vec<Vec<usize>> = edges.into_iter().map(|(_, e)| e).collect();
        Pattern::new(v, &lists)
    }

    /// Named motifs used across tests and the CLI.
    pub fn named(name: &str) -> Option<Self> {
        let p = match name {
            "edge" => Pattern::new(2, &[[0, 1]]),
            "loop" => Pattern::new(1, &[[0]]),
            "2-path" | "path" => Pattern::new(3, &[[0, 1], [1, 2]]),
            "2-matching" => Pattern::new(4, &[[0, 1], [2, 3]]),
            "triangle" => Pattern::new(3, &[[0, 1], [0, 2], [1, 2]]),
            "loop-pair" => Pattern::new(2, &[vec![0], vec![0, 1]]),
            "3-edge" => Pattern::new(3, &[[0, 1, 2]]),
            "diamond" => Pattern::new(4, &[[0, 1], [0, 2], [1, 2], [1, 3], [2, 3]]),
            _ => return None,
        };
        p.ok()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub(crate) fn full_mask(v: usize) -> u32 {
    if v >= 32 {
        u32::MAX
    } else {
        (1u32 << v) - 1
    }
}

pub(crate) fn mask_vertices(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Formats a vertex mask as a 1-based set, e.g. `{1,3}`.
pub fn fmt_edge(m: u64) -> String {
    let vs: Vec<String> = mask_vertices(m)
        .into_iter()
        .map(|v| (v + 1).to_string())
        .collect();
    format!("{{{}}}", vs.join(","))
}

pub(crate) fn permute_mask(m: u32, perm: &[u8]) -> u32 {
    let mut out = 0u32;
    let mut rest = m;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        out |= 1 << perm[v];
        rest &= rest - 1;
    }
    out
}

/// Lexicographic successor of a permutation; false once the last one is reached.
pub(crate) fn next_permutation(perm: &mut [u8]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Removes isolated vertices, returning the isolated-free pattern and how many
/// vertices were dropped. Raw counts of the original pattern equal counts of
/// the reduced one times `C(n - v', k)`.
pub fn remove_isolated_vertices(p: &Pattern) -> Result<(Pattern, usize)> {
    if p.edges.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let k = p.isolated.count_ones() as usize;
    if k == 0 {
        return Ok((p.clone(), 0));
    }
    Ok((compact(p.vertex_count, &p.edges), k))
}

/// Relabels the covered vertices of `edges` to `0..v'` preserving order.
pub(crate) fn compact(vertex_count: usize, edges: &[u32]) -> Pattern {
    let covered = edges.iter().fold(0u32, |a, &e| a | e);
    let mut map = [0u8; 32];
    let mut next = 0u8;
    for (v, slot) in map.iter_mut().enumerate().take(vertex_count) {
        if covered & (1 << v) != 0 {
            *slot = next;
            next += 1;
        }
    }
    let relabeled = edges.iter().map(|&e| permute_mask(e, &map)).collect();
    Pattern::from_masks(next as usize, relabeled).expect("compaction preserves validity")
}

/// True iff a vertex bijection maps the edges of `a` onto the edges of `b`.
pub fn are_isomorphic(a: &Pattern, b: &Pattern) -> bool {
    if a.vertex_count != b.vertex_count
        || a.edges.len() != b.edges.len()
        || a.sizes != b.sizes
        || a.degree_sequence() != b.degree_sequence()
    {
        return false;
    }
    let target = b.sorted_edges();
    let mut perm: Vec<u8> = (0..a.vertex_count as u8).collect();
    loop {
        let mut img: Vec<u32> = a.edges.iter().map(|&e| permute_mask(e, &perm)).collect();
        img.sort_unstable();
        if img == target {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

/// Order of the group of vertex permutations preserving the edge set.
pub fn automorphism_count(p: &Pattern) -> u64 {
    let target = p.sorted_edges();
    let mut perm: Vec<u8> = (0..p.vertex_count as u8).collect();
    let mut count = 0;
    loop {
        let mut img: Vec<u32> = p.edges.iter().map(|&e| permute_mask(e, &perm)).collect();
        img.sort_unstable();
        if img == target {
            count += 1;
        }
        if !next_permutation(&mut perm) {
            return count;
        }
    }
}

/// Distinct labelled images of `p` on its own vertex set, in order of the
/// lexicographically first permutation producing each. Entry `i` of an image
/// is the image of pattern edge `i`.
pub(crate) fn labelled_images(p: &Pattern) -> Vec<Vec<u32>> {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut out = Vec::new();
    let mut perm: Vec<u8> = (0..p.vertex_count as u8).collect();
    loop {
        let img: Vec<u32> = p.edges.iter().map(|&e| permute_mask(e, &perm)).collect();
        let mut key = img.clone();
        key.sort_unstable();
        if seen.insert(key) {
            out.push(img);
        }
        if !next_permutation(&mut perm) {
            return out;
        }
    }
}

/// A nonempty edge subset of a pattern together with the isolated-free
/// pattern it induces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubPattern {
    /// Bit `i` set iff pattern edge `i` belongs to the subset.
    pub edge_subset: u64,
    pub pattern: Pattern,
}

/// All `2^e - 1` nonempty edge subsets of `p`, ordered by subset bitmask.
/// Subsets are not merged by isomorphism.
pub fn sub_patterns(p: &Pattern) -> Vec<SubPattern> {
    let e = p.edges.len();
    assert!(e < 32, "too many edges for subset enumeration");
    (1u64..(1u64 << e))
        .map(|mask| {
            let chosen: Vec<u32> = (0..e)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| p.edges[i])
                .collect();
            SubPattern {
                edge_subset: mask,
                pattern: compact(p.vertex_count, &chosen),
            }
        })
        .collect()
}

/// Sub-patterns grouped into isomorphism classes.
#[derive(Clone, Debug)]
pub struct SubPatternClasses {
    /// One representative per class, in order of first appearance.
    pub representatives: Vec<Pattern>,
    /// Edge-subset masks belonging to each class.
    pub members: Vec<Vec<u64>>,
    class_of: Vec<usize>,
}

impl SubPatternClasses {
    pub fn new(p: &Pattern) -> Self {
        let subs = sub_patterns(p);
        let mut representatives: Vec<Pattern> = Vec::new();
        let mut members: Vec<Vec<u64>> = Vec::new();
        let mut class_of = vec![usize::MAX; subs.len() + 1];
        for sp in subs {
            let found = representatives
                .iter()
                .position(|r| are_isomorphic(r, &sp.pattern));
            let id = match found {
                Some(id) => id,
                None => {
                    representatives.push(sp.pattern.clone());
                    members.push(Vec::new());
                    representatives.len() - 1
                }
            };
            members[id].push(sp.edge_subset);
            class_of[sp.edge_subset as usize] = id;
        }
        SubPatternClasses {
            representatives,
            members,
            class_of,
        }
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Class of a nonempty edge subset.
    pub fn class_of(&self, edge_subset: u64) -> usize {
        self.class_of[edge_subset as usize]
    }

    /// Classes of all nonempty subsets of `edge_subset`.
    pub fn classes_within(&self, edge_subset: u64) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        let mut t = edge_subset;
        while t != 0 {
            out.push(self.class_of(t));
            t = (t - 1) & edge_subset;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
