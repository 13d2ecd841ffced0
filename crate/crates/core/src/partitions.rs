//! Set partitions of `{1..n}`, their non-crossing and pairing sub-families,
//! and permutations with the Cayley-graph length `|σ| = n - c(σ)`.
//!
//! Elements are 1-based everywhere in the public API. A [`Partition`] is kept
//! in canonical form (each block ascending, blocks ordered by minimum) so that
//! equality is structural.

use std::fmt;

use crate::{Error, Result};

/// Which sub-family of the partition lattice to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionFamily {
    All,
    NonCrossing,
    Pairings,
    NcPairings,
}

impl PartitionFamily {
    fn label(self) -> &'static str {
        match self {
            PartitionFamily::All => "all partitions",
            PartitionFamily::NonCrossing => "non-crossing partitions",
            PartitionFamily::Pairings => "pairings",
            PartitionFamily::NcPairings => "non-crossing pairings",
        }
    }
}

/// Upper bounds on the ground-set size accepted by [`enumerate_with_caps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCaps {
    pub all: usize,
    pub non_crossing: usize,
    pub pairings: usize,
    pub nc_pairings: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps {
            all: 14,
            non_crossing: 16,
            pairings: 20,
            nc_pairings: 30,
        }
    }
}

impl EnumerationCaps {
    pub fn cap(&self, family: PartitionFamily) -> usize {
        match family {
            PartitionFamily::All => self.all,
            PartitionFamily::NonCrossing => self.non_crossing,
            PartitionFamily::Pairings => self.pairings,
            PartitionFamily::NcPairings => self.nc_pairings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from arbitrary blocks, validating that they are
    /// non-empty, disjoint and cover `{1..n}`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("partition of an empty ground set"));
        }
        let mut seen = vec![false; n + 1];
        let mut canon = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::invalid("empty block"));
            }
            block.sort_unstable();
            for &e in &block {
                if e == 0 || e > n {
                    return Err(Error::invalid(format!("element {e} outside 1..={n}")));
                }
                if seen[e] {
                    return Err(Error::invalid(format!("element {e} appears twice")));
                }
                seen[e] = true;
            }
            canon.push(block);
        }
        if let Some(missing) = (1..=n).find(|&e| !seen[e]) {
            return Err(Error::invalid(format!("element {missing} not covered")));
        }
        canon.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { n, blocks: canon })
    }

    /// Builds a partition from a block label per element (`labels[i]` is the
    /// label of element `i + 1`). Labels need not be contiguous.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let n = labels.len();
        let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match blocks.iter_mut().find(|(label, _)| *label == l) {
                Some((_, b)) => b.push(i + 1),
                None => blocks.push((l, vec![i + 1])),
            }
        }
        Partition::new(n, blocks.into_iter().map(|(_, b)| b).collect())
    }

    /// The partition with a single block `{1..n}`.
    pub fn one_block(n: usize) -> Self {
        Partition {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    pub fn is_pairing(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// Restricted growth string: label of each element, blocks numbered by
    /// first appearance. This is the canonical enumeration key.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &e in b {
                labels[e - 1] = i;
            }
        }
        labels
    }

    /// Whether some `a < b < c < d` have `a, c` in one block and `b, d` in
    /// another.
    pub fn is_crossing(&self) -> bool {
        for (i, x) in self.blocks.iter().enumerate() {
            for y in &self.blocks[i + 1..] {
                if blocks_cross(x, y) {
                    return true;
                }
            }
        }
        false
    }

    /// Finest non-crossing partition coarser than `self`: crossing blocks are
    /// merged until no two blocks cross.
    pub fn fuse_crossings(&self) -> Partition {
        let k = self.blocks.len();
        let mut uf = UnionFind::new(k);
        let mut merged: Vec<Vec<usize>> = self.blocks.clone();
        loop {
            let mut changed = false;
            let roots: Vec<usize> = (0..k).filter(|&i| uf.find(i) == i).collect();
            'outer: for (a, &ra) in roots.iter().enumerate() {
                for &rb in &roots[a + 1..] {
                    if blocks_cross(&merged[ra], &merged[rb]) {
                        let (keep, gone) = uf.union(ra, rb);
                        let moved = std::mem::take(&mut merged[gone]);
                        merged[keep].extend(moved);
                        merged[keep].sort_unstable();
                        changed = true;
                        break 'outer;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let blocks = (0..k)
            .filter(|&i| uf.find(i) == i)
            .map(|i| merged[i].clone())
            .collect();
        Partition::new(self.n, blocks).expect("fusion preserves the ground set")
    }

    /// The involution whose 2-cycles are the two-element blocks.
    pub fn to_permutation(&self) -> Result<Permutation> {
        let mut images: Vec<usize> = (0..self.n).collect();
        for b in &self.blocks {
            match b.as_slice() {
                [_] => {}
                [a, c] => {
                    images[a - 1] = c - 1;
                    images[c - 1] = a - 1;
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "block of size {} cannot be read as a transposition",
                        b.len()
                    )))
                }
            }
        }
        Ok(Permutation { images })
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            write!(f, "{{")?;
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

fn blocks_cross(x: &[usize], y: &[usize]) -> bool {
    // Blocks are sorted; x and y cross iff some element of y lies strictly
    // between two consecutive elements of x while another lies outside them.
    let inside = |lo: usize, hi: usize, e: usize| lo < e && e < hi;
    for w in x.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let has_in = y.iter().any(|&e| inside(lo, hi, e));
        let has_out = y.iter().any(|&e| e < lo || e > hi);
        if has_in && has_out {
            return true;
        }
    }
    false
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(k: usize) -> Self {
        UnionFind {
            parent: (0..k).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns (surviving root, absorbed root).
    fn union(&mut self, a: usize, b: usize) -> (usize, usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[gone] = keep;
        (keep, gone)
    }
}

/// Enumerates a partition family with the default caps.
pub fn enumerate(n: usize, family: PartitionFamily) -> Result<Vec<Partition>> {
    enumerate_with_caps(n, family, &EnumerationCaps::default())
}

/// Complete, duplicate-free list of the partitions of `{1..n}` in `family`,
/// ordered lexicographically by restricted growth string.
pub fn enumerate_with_caps(
    n: usize,
    family: PartitionFamily,
    caps: &EnumerationCaps,
) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::invalid("cannot enumerate partitions of an empty set"));
    }
    let cap = caps.cap(family);
    if n > cap {
        return Err(Error::ResourceLimit {
            what: family.label(),
            requested: n,
            cap,
        });
    }
    let mut out = Vec::new();
    let mut labels = Vec::with_capacity(n);
    match family {
        PartitionFamily::All => rgs_all(n, &mut labels, 0, &mut out),
        PartitionFamily::NonCrossing => {
            let mut sizes = Vec::new();
            rgs_nc(n, &mut labels, &mut Vec::new(), &mut sizes, None, &mut out)
        }
        PartitionFamily::Pairings => {
            if n.is_multiple_of(2) {
                rgs_pairings(n, &mut labels, &mut Vec::new(), &mut out)
            }
        }
        PartitionFamily::NcPairings => {
            if n.is_multiple_of(2) {
                let mut sizes = Vec::new();
                rgs_nc(n, &mut labels, &mut Vec::new(), &mut sizes, Some(2), &mut out)
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|l| Partition::from_labels(&l).expect("generated labels are valid"))
        .collect())
}

fn rgs_all(n: usize, labels: &mut Vec<usize>, blocks: usize, out: &mut Vec<Vec<usize>>) {
    if labels.len() == n {
        out.push(labels.clone());
        return;
    }
    for l in 0..=blocks {
        labels.push(l);
        rgs_all(n, labels, blocks.max(l + 1), out);
        labels.pop();
    }
}

/// Pairings in restricted-growth order: each element either closes an open
/// pair or opens a new one, subject to enough elements remaining.
fn rgs_pairings(n: usize, labels: &mut Vec<usize>, sizes: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let pos = labels.len();
    if pos == n {
        out.push(labels.clone());
        return;
    }
    let open = sizes.iter().filter(|&&s| s == 1).count();
    for l in 0..sizes.len() {
        if sizes[l] == 1 {
            sizes[l] = 2;
            labels.push(l);
            rgs_pairings(n, labels, sizes, out);
            labels.pop();
            sizes[l] = 1;
        }
    }
    if open < n - pos {
        sizes.push(1);
        labels.push(sizes.len() - 1);
        rgs_pairings(n, labels, sizes, out);
        labels.pop();
        sizes.pop();
    }
}

/// Non-crossing partitions via a stack of open blocks: joining a block closes
/// every block opened after it. With `block_size = Some(k)` every block must
/// have exactly `k` elements.
fn rgs_nc(
    n: usize,
    labels: &mut Vec<usize>,
    stack: &mut Vec<usize>,
    sizes: &mut Vec<usize>,
    block_size: Option<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let pos = labels.len();
    if pos == n {
        if block_size.is_none_or(|k| sizes.iter().all(|&s| s == k)) {
            out.push(labels.clone());
        }
        return;
    }
    for depth in 0..stack.len() {
        let b = stack[depth];
        if block_size.is_some_and(|k| sizes[b] >= k) {
            continue;
        }
        // Blocks above `b` become closed; with fixed block sizes they must be full.
        if let Some(k) = block_size {
            if stack[depth + 1..].iter().any(|&c| sizes[c] != k) {
                continue;
            }
        }
        let saved: Vec<usize> = stack.drain(depth + 1..).collect();
        sizes[b] += 1;
        labels.push(b);
        rgs_nc(n, labels, stack, sizes, block_size, out);
        labels.pop();
        sizes[b] -= 1;
        stack.extend(saved);
    }
    let new = sizes.len();
    sizes.push(1);
    stack.push(new);
    labels.push(new);
    rgs_nc(n, labels, stack, sizes, block_size, out);
    labels.pop();
    stack.pop();
    sizes.pop();
}

/// A permutation of `{1..n}`. Products compose right to left:
/// `a.compose(&b)` applies `b` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    // 0-based images
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// The full forward cycle `(1 2 … n)`.
    pub fn full_cycle(n: usize) -> Self {
        Permutation {
            images: (0..n).map(|i| (i + 1) % n.max(1)).collect(),
        }
    }

    /// From 1-based images: `images[k - 1] = σ(k)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        let mut zero = Vec::with_capacity(n);
        for &x in images {
            if x == 0 || x > n || seen[x - 1] {
                return Err(Error::invalid(format!("{images:?} is not a bijection of 1..={n}")));
            }
            seen[x - 1] = true;
            zero.push(x - 1);
        }
        Ok(Permutation { images: zero })
    }

    /// From disjoint cycles in 1-based notation, e.g. `&[&[1, 3], &[2, 4]]`.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (i, &a) in cycle.iter().enumerate() {
                if a == 0 || a > n || touched[a - 1] {
                    return Err(Error::invalid(format!("bad cycle {cycle:?} in S({n})")));
                }
                touched[a - 1] = true;
                let b = cycle[(i + 1) % cycle.len()];
                images[a - 1] = b - 1;
            }
        }
        Ok(Permutation { images })
    }


    pub(crate) fn zero_based(&self) -> &[usize] {
        &self.images
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// `σ(k)` for 1-based `k`.
    pub fn apply(&self, k: usize) -> usize {
        self.images[k - 1] + 1
    }

    /// 1-based images.
    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&x| x + 1).collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(Permutation {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Disjoint cycles in 1-based notation, fixed points included, each
    /// starting from its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles().len()
    }

    /// `|σ| = n − c(σ)`, the distance from the identity in the Cayley graph
    /// generated by all transpositions.
    pub fn cayley_distance(&self) -> usize {
        self.n() - self.cycle_count()
    }

    pub fn stats(&self) -> PermutationStats {
        let cycle_count = self.cycle_count();
        PermutationStats {
            cycle_count,
            cayley_distance: self.n() - cycle_count,
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<_> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for c in cycles {
            let body: Vec<String> = c.iter().map(ToString::to_string).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationStats {
    pub cycle_count: usize,
    pub cayley_distance: usize,
}

/// Whether `ρ` and `σ` lie on a geodesic from the identity to `γ`:
/// `|ρ| + |ρ⁻¹σ| + |σ⁻¹γ| = |γ|`.
pub fn is_geodesic(rho: &Permutation, sigma: &Permutation, gamma: &Permutation) -> Result<bool> {
    let step = rho.inverse().compose(sigma)?;
    let last = sigma.inverse().compose(gamma)?;
    Ok(rho.cayley_distance() + step.cayley_distance() + last.cayley_distance()
        == gamma.cayley_distance())
}

/// Every permutation of `{1..n}` in lexicographic order of images.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation {
            images: current.clone(),
        });
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}
