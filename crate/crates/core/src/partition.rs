//! Ground sets, blocks, partial and uniform partitions, and the action of
//! the symmetric group on them.
//!
//! Ground-set elements are 0-based internally. Every textual or JSON
//! rendering is 1-based so that `[ck] = {1, ..., ck}` reads naturally.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block size `c` and block count `k`; the ground set has `n = c * k`
/// elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Params {
    pub c: usize,
    pub k: usize,
}

impl Params {
    /// Largest supported ground set (two 64-bit words per block).
    pub const MAX_GROUND: usize = 128;

    pub fn new(c: usize, k: usize) -> Result<Self> {
        if c == 0 || k == 0 {
            return Err(Error::InvalidParams(format!("c and k must be positive (c={c}, k={k})")));
        }
        match c.checked_mul(k) {
            Some(n) if n <= Self::MAX_GROUND => Ok(Params { c, k }),
            _ => Err(Error::InvalidParams(format!(
                "ground set c*k exceeds {} (c={c}, k={k})",
                Self::MAX_GROUND
            ))),
        }
    }

    /// Ground-set size.
    pub fn n(&self) -> usize {
        self.c * self.k
    }

    /// Bit mask of the whole ground set.
    pub fn ground_mask(&self) -> u128 {
        low_mask(self.n())
    }

    /// Checks `1 <= t <= k`.
    pub fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.k {
            return Err(Error::InvalidParams(format!("t must satisfy 1 <= t <= k (t={t}, k={})", self.k)));
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &Params) -> Result<()> {
        if self != other {
            return Err(Error::ParamsMismatch(format!(
                "(c={}, k={}) vs (c={}, k={})",
                self.c, self.k, other.c, other.k
            )));
        }
        Ok(())
    }

    /// All `c`-subsets of `mask`, in lexicographic order of their element lists.
    pub fn blocks_within(&self, mask: u128) -> Vec<Block> {
        subsets_of_size(mask, self.c).into_iter().map(Block).collect()
    }
}

pub(crate) fn low_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// All subsets of `mask` with exactly `size` elements, ordered
/// lexicographically by their sorted element lists.
pub(crate) fn subsets_of_size(mask: u128, size: usize) -> Vec<u128> {
    let elems: Vec<usize> = bit_elements(mask).collect();
    let mut out = Vec::new();
    if size > elems.len() {
        return out;
    }
    let m = elems.len();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().fold(0u128, |acc, &i| acc | (1u128 << elems[i])));
        let Some(pos) = (0..size).rev().find(|&p| idx[p] < m - size + p) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn bit_elements(mut bits: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if bits == 0 {
            None
        } else {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        }
    })
}

/// A subset of the ground set stored as a 128-bit vector.
///
/// Blocks order lexicographically by their sorted element lists, so
/// `{1,2} < {1,3} < {2,3}`. For pairwise disjoint blocks this is the same as
/// ordering by least element.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block(u128);

impl Block {
    pub const EMPTY: Block = Block(0);

    pub fn from_bits(bits: u128) -> Self {
        Block(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// Builds a block from 0-based elements; duplicates are rejected.
    pub fn from_elements(elements: &[usize]) -> Result<Self> {
        let mut bits = 0u128;
        for &e in elements {
            if e >= Params::MAX_GROUND {
                return Err(Error::InvalidBlock(format!("element {} out of range", e + 1)));
            }
            if bits & (1u128 << e) != 0 {
                return Err(Error::InvalidBlock(format!("element {} repeated", e + 1)));
            }
            bits |= 1u128 << e;
        }
        Ok(Block(bits))
    }

    /// Builds a block from 1-based elements.
    pub fn from_one_based(elements: &[usize]) -> Result<Self> {
        if elements.contains(&0) {
            return Err(Error::InvalidBlock("elements are 1-based; 0 is not allowed".into()));
        }
        let zero: Vec<usize> = elements.iter().map(|&e| e - 1).collect();
        Self::from_elements(&zero)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn min_element(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// 0-based elements in ascending order.
    pub fn elements(self) -> impl Iterator<Item = usize> {
        bit_elements(self.0)
    }

    pub fn to_one_based(self) -> Vec<usize> {
        self.elements().map(|e| e + 1).collect()
    }

    pub fn contains(self, element: usize) -> bool {
        element < 128 && self.0 & (1u128 << element) != 0
    }

    pub fn is_disjoint(self, other: Block) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Block) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Block) -> Block {
        Block(self.0 | other.0)
    }

    /// Checks size `c` and that all elements lie in the ground set.
    pub fn validate(self, params: &Params) -> Result<()> {
        if self.len() != params.c {
            return Err(Error::InvalidBlock(format!("{self} has size {}, expected {}", self.len(), params.c)));
        }
        if self.0 & !params.ground_mask() != 0 {
            return Err(Error::InvalidBlock(format!("{self} leaves the ground set [{}]", params.n())));
        }
        Ok(())
    }
}

impl Ord for Block {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            return Ordering::Equal;
        }
        let low = (self.0 ^ other.0).trailing_zeros();
        // Both agree below `low` and exactly one contains `low`. The other one
        // is smaller only if it has no elements left (it is a prefix).
        let (lacks, self_has) = if (self.0 >> low) & 1 == 1 { (other.0, true) } else { (self.0, false) };
        let has_is_less = lacks >> low != 0;
        if has_is_less == self_has {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for Block {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elems = self.to_one_based();
        if elems.iter().all(|&e| e <= 9) {
            for e in elems {
                write!(f, "{e}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = elems.iter().map(|e| e.to_string()).collect();
            write!(f, "{{{}}}", parts.join(","))
        }
    }
}

/// `l` pairwise disjoint blocks of size `c`, kept in canonical order
/// (ascending by least element).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialPartition {
    params: Params,
    blocks: Vec<Block>,
}

impl PartialPartition {
    pub fn new(params: Params, mut blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() > params.k {
            return Err(Error::InvalidPartition(format!("{} blocks exceed k={}", blocks.len(), params.k)));
        }
        let mut seen = 0u128;
        for b in &blocks {
            b.validate(&params)?;
            if seen & b.bits() != 0 {
                return Err(Error::InvalidPartition(format!("block {b} overlaps another block")));
            }
            seen |= b.bits();
        }
        blocks.sort_unstable();
        Ok(PartialPartition { params, blocks })
    }

    /// Caller guarantees the blocks are valid, disjoint, and sorted.
    pub(crate) fn from_sorted_unchecked(params: Params, blocks: Vec<Block>) -> Self {
        debug_assert!(blocks.windows(2).all(|w| w[0] < w[1]));
        PartialPartition { params, blocks }
    }

    pub fn empty(params: Params) -> Self {
        PartialPartition { params, blocks: Vec::new() }
    }

    pub fn from_one_based(params: Params, blocks: &[Vec<usize>]) -> Result<Self> {
        let blocks = blocks.iter().map(|b| Block::from_one_based(b)).collect::<Result<Vec<_>>>()?;
        Self::new(params, blocks)
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Union of all blocks as a bit mask.
    pub fn support(&self) -> u128 {
        self.blocks.iter().fold(0, |acc, b| acc | b.bits())
    }

    pub fn contains_block(&self, block: Block) -> bool {
        self.blocks.binary_search(&block).is_ok()
    }

    /// Every block of `self` is a block of `other`.
    pub fn is_subset_of(&self, other: &PartialPartition) -> bool {
        self.blocks.iter().all(|b| other.contains_block(*b))
    }

    /// Number of identical blocks, without a parameter check.
    pub fn shared_blocks(&self, other: &PartialPartition) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.blocks.len() && j < other.blocks.len() {
            match self.blocks[i].cmp(&other.blocks[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Adds a block, keeping canonical order.
    pub fn with_block(&self, block: Block) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.push(block);
        Self::new(self.params, blocks)
    }

    /// The blocks of `self` not in `other`.
    pub fn difference(&self, other: &PartialPartition) -> PartialPartition {
        let blocks = self.blocks.iter().copied().filter(|b| !other.contains_block(*b)).collect();
        PartialPartition { params: self.params, blocks }
    }

    /// The blocks shared by `self` and `other`.
    pub fn intersection(&self, other: &PartialPartition) -> PartialPartition {
        let blocks = self.blocks.iter().copied().filter(|b| other.contains_block(*b)).collect();
        PartialPartition { params: self.params, blocks }
    }

    /// Union of two partial partitions; fails if the result is not one.
    pub fn union(&self, other: &PartialPartition) -> Result<PartialPartition> {
        let mut blocks = self.blocks.clone();
        for b in &other.blocks {
            if !self.contains_block(*b) {
                blocks.push(*b);
            }
        }
        Self::new(self.params, blocks)
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.to_one_based()).collect()
    }

    pub fn to_json(&self) -> PartitionJson {
        PartitionJson { blocks: self.to_one_based() }
    }

    pub fn from_json(params: Params, json: &PartitionJson) -> Result<Self> {
        Self::from_one_based(params, &json.blocks)
    }
}

impl Ord for PartialPartition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.blocks.cmp(&other.blocks).then(self.params.cmp(&other.params))
    }
}

impl PartialOrd for PartialPartition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PartialPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PartialPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// External JSON shape of a (partial) partition: `{"blocks": [[1,2],[3,4]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub blocks: Vec<Vec<usize>>,
}

/// A partition of the ground set into `k` blocks of size `c`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniformPartition(PartialPartition);

impl UniformPartition {
    pub fn new(params: Params, blocks: Vec<Block>) -> Result<Self> {
        Self::from_partial(PartialPartition::new(params, blocks)?)
    }

    pub fn from_partial(p: PartialPartition) -> Result<Self> {
        if p.len() != p.params.k {
            return Err(Error::InvalidPartition(format!("{} blocks, expected k={}", p.len(), p.params.k)));
        }
        Ok(UniformPartition(p))
    }

    pub(crate) fn from_sorted_unchecked(params: Params, blocks: Vec<Block>) -> Self {
        UniformPartition(PartialPartition::from_sorted_unchecked(params, blocks))
    }

    pub fn from_one_based(params: Params, blocks: &[Vec<usize>]) -> Result<Self> {
        Self::from_partial(PartialPartition::from_one_based(params, blocks)?)
    }

    /// Parses the external JSON shape, inferring `c` and `k` from the blocks.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: PartitionJson = serde_json::from_str(text)?;
        let k = json.blocks.len();
        let c = json.blocks.first().map(|b| b.len()).unwrap_or(0);
        Self::from_one_based(Params::new(c, k)?, &json.blocks)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("partition JSON is always serialisable")
    }

    pub fn as_partial(&self) -> &PartialPartition {
        &self.0
    }

    pub fn into_partial(self) -> PartialPartition {
        self.0
    }
}

impl Deref for UniformPartition {
    type Target = PartialPartition;

    fn deref(&self) -> &PartialPartition {
        &self.0
    }
}

impl fmt::Debug for UniformPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for UniformPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of blocks present in both arguments.
pub fn common_blocks(a: &PartialPartition, b: &PartialPartition) -> Result<usize> {
    a.params.ensure_same(&b.params)?;
    Ok(a.shared_blocks(b))
}

/// A bijection of the ground set, stored as its image table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// `images[i]` is the 0-based image of element `i`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n > Params::MAX_GROUND {
            return Err(Error::InvalidPermutation(format!("degree {n} exceeds {}", Params::MAX_GROUND)));
        }
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(format!("{:?} is not a bijection of 1..{n}", images)));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation("images are 1-based; 0 is not allowed".into()));
        }
        Self::new(images.iter().map(|x| x - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// Swaps 0-based elements `a` and `b`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(Error::InvalidPermutation(format!("transposition ({a} {b}) outside degree {n}")));
        }
        images.swap(a, b);
        Ok(Permutation { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn apply_block(&self, block: Block) -> Block {
        Block(block.elements().fold(0u128, |acc, e| acc | (1u128 << self.images[e])))
    }

    pub fn apply_partial(&self, p: &PartialPartition) -> Result<PartialPartition> {
        if self.degree() != p.params.n() {
            return Err(Error::InvalidPermutation(format!(
                "degree {} does not match ground set size {}",
                self.degree(),
                p.params.n()
            )));
        }
        let mut blocks: Vec<Block> = p.blocks.iter().map(|b| self.apply_block(*b)).collect();
        blocks.sort_unstable();
        Ok(PartialPartition { params: p.params, blocks })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { images: inv }
    }
}

/// Image of `p` under `sigma`, in canonical form.
pub fn apply_permutation(sigma: &Permutation, p: &UniformPartition) -> Result<UniformPartition> {
    Ok(UniformPartition(sigma.apply_partial(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(c: usize, k: usize, blocks: &[&[usize]]) -> UniformPartition {
        let blocks: Vec<Vec<usize>> = blocks.iter().map(|b| b.to_vec()).collect();
        UniformPartition::from_one_based(Params::new(c, k).unwrap(), &blocks).unwrap()
    }

    #[test]
    fn block_order_is_lexicographic() {
        let b = |e: &[usize]| Block::from_one_based(e).unwrap();
        assert!(b(&[1, 2]) < b(&[1, 3]));
        assert!(b(&[1, 3]) < b(&[2, 3]));
        assert!(b(&[1, 4]) < b(&[2, 3]));
        assert!(b(&[1, 2, 9]) < b(&[1, 3, 4]));
        assert!(b(&[1]) < b(&[1, 2]));
    }

    #[test]
    fn subsets_are_lexicographic() {
        let subsets = subsets_of_size(0b1111, 2);
        assert_eq!(subsets, vec![0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100]);
        assert_eq!(subsets_of_size(0b111, 3), vec![0b111]);
        assert_eq!(subsets_of_size(0b111, 0), vec![0]);
        assert!(subsets_of_size(0b11, 3).is_empty());
    }

    #[test]
    fn rejects_bad_partitions() {
        let p = Params::new(2, 3).unwrap();
        assert!(PartialPartition::from_one_based(p, &[vec![1, 2], vec![2, 3]]).is_err());
        assert!(PartialPartition::from_one_based(p, &[vec![1, 2, 3]]).is_err());
        assert!(PartialPartition::from_one_based(p, &[vec![1, 7]]).is_err());
        assert!(UniformPartition::from_one_based(p, &[vec![1, 2], vec![3, 4]]).is_err());
        assert!(Params::new(0, 3).is_err());
        assert!(Params::new(2, 65).is_err());
        assert!(p.check_t(0).is_err());
        assert!(p.check_t(4).is_err());
    }

    #[test]
    fn common_block_examples() {
        let a = up(2, 3, &[&[1, 2], &[3, 4], &[5, 6]]);
        let b = up(2, 3, &[&[1, 2], &[3, 5], &[4, 6]]);
        let c = up(2, 3, &[&[1, 3], &[2, 5], &[4, 6]]);
        assert_eq!(common_blocks(&a, &b).unwrap(), 1);
        assert_eq!(common_blocks(&a, &c).unwrap(), 0);
        assert_eq!(common_blocks(&a, &a).unwrap(), 3);
        let d = up(2, 4, &[&[1, 2], &[3, 4], &[5, 6], &[7, 8]]);
        assert_eq!(common_blocks(&d, &d).unwrap(), 4);
        assert!(matches!(common_blocks(&a, &d), Err(Error::ParamsMismatch(_))));
    }

    #[test]
    fn permutation_examples() {
        let p = up(2, 3, &[&[1, 2], &[3, 4], &[5, 6]]);
        let id = Permutation::identity(6);
        assert_eq!(apply_permutation(&id, &p).unwrap(), p);
        let swap12 = Permutation::transposition(6, 0, 1).unwrap();
        assert_eq!(apply_permutation(&swap12, &p).unwrap(), p);
        let swap23 = Permutation::transposition(6, 1, 2).unwrap();
        assert_eq!(apply_permutation(&swap23, &p).unwrap(), up(2, 3, &[&[1, 3], &[2, 4], &[5, 6]]));
        assert!(matches!(Permutation::new(vec![0, 0, 1]), Err(Error::InvalidPermutation(_))));
        assert!(apply_permutation(&Permutation::identity(5), &p).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = up(2, 3, &[&[5, 6], &[1, 2], &[3, 4]]);
        let text = p.to_json_string();
        assert_eq!(text, r#"{"blocks":[[1,2],[3,4],[5,6]]}"#);
        assert_eq!(UniformPartition::from_json_str(&text).unwrap(), p);
        assert_eq!(p.to_string(), "12|34|56");
    }
}
