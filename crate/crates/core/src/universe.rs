//! The fully enumerated set of `c`-uniform partitions for fixed `(c, k)`.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::counting::universe_size;
use crate::error::{Error, Result};
use crate::partition::{Block, PartialPartition, Params, Permutation, UniformPartition};

/// Dense ids `0..|universe|` of universe members.
pub type IdSet = FixedBitSet;

/// Limits on what may be enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCap {
    pub max_ground: usize,
    pub max_items: u64,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap { max_ground: 16, max_items: 1_000_000 }
    }
}

impl EnumerationCap {
    pub fn check(&self, params: &Params) -> Result<u64> {
        if params.n() > self.max_ground {
            return Err(Error::CapExceeded(format!(
                "ground set of {} elements exceeds cap {}",
                params.n(),
                self.max_ground
            )));
        }
        let predicted = universe_size(params.c, params.k);
        match predicted.to_u64() {
            Some(count) if count <= self.max_items => Ok(count),
            _ => Err(Error::CapExceeded(format!(
                "{predicted} partitions exceed cap {}; use intensional families",
                self.max_items
            ))),
        }
    }
}

/// Every `c`-uniform partition of `[ck]`, sorted canonically, with a
/// block-to-members incidence index.
#[derive(Clone, Debug)]
pub struct PartitionUniverse {
    params: Params,
    items: Vec<UniformPartition>,
    incidence: BTreeMap<Block, Vec<u32>>,
}

/// Enumerates all uniform partitions with the default cap.
pub fn enumerate_universe(params: Params) -> Result<PartitionUniverse> {
    PartitionUniverse::build(params, &EnumerationCap::default())
}

impl PartitionUniverse {
    /// Enumerates by repeatedly placing the block of the least uncovered
    /// element. Output is in canonical order with no duplicates.
    pub fn build(params: Params, cap: &EnumerationCap) -> Result<Self> {
        let expected = cap.check(&params)?;
        let mut items = Vec::with_capacity(expected as usize);
        let mut stack = Vec::with_capacity(params.k);
        place_blocks(&params, params.ground_mask(), &mut stack, &mut items);
        debug_assert_eq!(items.len() as u64, expected);
        Ok(Self::from_sorted_items(params, items))
    }

    fn from_sorted_items(params: Params, items: Vec<UniformPartition>) -> Self {
        let mut incidence: BTreeMap<Block, Vec<u32>> = BTreeMap::new();
        for (id, item) in items.iter().enumerate() {
            for b in item.blocks() {
                incidence.entry(*b).or_default().push(id as u32);
            }
        }
        PartitionUniverse { params, items, incidence }
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[UniformPartition] {
        &self.items
    }

    pub fn get(&self, id: usize) -> &UniformPartition {
        &self.items[id]
    }

    /// Id of a partition, by binary search over the canonical order.
    pub fn id_of(&self, p: &UniformPartition) -> Option<usize> {
        if p.params() != self.params {
            return None;
        }
        self.items.binary_search(p).ok()
    }

    /// Ids of members containing `block`, ascending.
    pub fn containing_block(&self, block: Block) -> &[u32] {
        self.incidence.get(&block).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every block occurring in some member, in canonical order.
    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        self.incidence.keys().copied()
    }

    pub fn empty_set(&self) -> IdSet {
        IdSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> IdSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    pub fn id_set<I: IntoIterator<Item = usize>>(&self, ids: I) -> IdSet {
        let mut s = self.empty_set();
        s.extend(ids);
        s
    }

    /// Ids of members containing every block of `s`.
    pub fn enumerate_containing(&self, s: &PartialPartition) -> Result<IdSet> {
        self.params.ensure_same(&s.params())?;
        let mut out = self.full_set();
        for b in s.blocks() {
            let mut with_block = self.empty_set();
            with_block.extend(self.containing_block(*b).iter().map(|&i| i as usize));
            out.intersect_with(&with_block);
        }
        Ok(out)
    }

    /// Ids of members sharing at least `t` blocks with `center`.
    pub fn ball(&self, center: &PartialPartition, t: usize) -> Result<IdSet> {
        self.params.ensure_same(&center.params())?;
        let mut counts = vec![0u8; self.len()];
        for b in center.blocks() {
            for &id in self.containing_block(*b) {
                counts[id as usize] += 1;
            }
        }
        Ok(self.id_set(counts.iter().enumerate().filter(|(_, &n)| n as usize >= t).map(|(i, _)| i)))
    }

    /// Id of `sigma(item)`.
    pub fn permuted_id(&self, sigma: &Permutation, id: usize) -> Result<usize> {
        let image = UniformPartition::from_partial(sigma.apply_partial(self.get(id))?)?;
        self.id_of(&image)
            .ok_or_else(|| Error::InvalidPartition(format!("{image} missing from universe")))
    }

    pub fn members<'a>(&'a self, ids: &'a IdSet) -> impl Iterator<Item = &'a UniformPartition> + 'a {
        ids.ones().map(move |i| &self.items[i])
    }

    /// Serialises the universe in the cache format.
    pub fn to_cache(&self) -> UniverseCache {
        UniverseCache {
            format: CACHE_FORMAT.to_string(),
            c: self.params.c,
            k: self.params.k,
            count: self.len() as u64,
            items: self.items.iter().map(|p| p.to_one_based()).collect(),
        }
    }

    /// Rebuilds a universe from a cache file, checking format tag, count,
    /// validity and strictly increasing canonical order.
    pub fn from_cache(cache: &UniverseCache) -> Result<Self> {
        if cache.format != CACHE_FORMAT {
            return Err(Error::CacheCorrupt(format!("unknown format tag {:?}", cache.format)));
        }
        let params = Params::new(cache.c, cache.k).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
        let expected = universe_size(params.c, params.k);
        if cache.count.to_u64() != expected.to_u64() || cache.items.len() as u64 != cache.count {
            return Err(Error::CacheCorrupt(format!(
                "header count {} / {} items, expected {expected}",
                cache.count,
                cache.items.len()
            )));
        }
        let mut items = Vec::with_capacity(cache.items.len());
        for raw in &cache.items {
            let p = UniformPartition::from_one_based(params, raw).map_err(|e| Error::CacheCorrupt(e.to_string()))?;
            if let Some(prev) = items.last() {
                if *prev >= p {
                    return Err(Error::CacheCorrupt(format!("{p} is out of canonical order")));
                }
            }
            items.push(p);
        }
        Ok(Self::from_sorted_items(params, items))
    }
}

fn place_blocks(params: &Params, remaining: u128, stack: &mut Vec<Block>, out: &mut Vec<UniformPartition>) {
    if remaining == 0 {
        out.push(UniformPartition::from_sorted_unchecked(*params, stack.clone()));
        return;
    }
    let least = remaining & remaining.wrapping_neg();
    for rest in crate::partition::subsets_of_size(remaining & !least, params.c - 1) {
        stack.push(Block::from_bits(least | rest));
        place_blocks(params, remaining & !(least | rest), stack, out);
        stack.pop();
    }
}

pub const CACHE_FORMAT: &str = "uniset-universe/1";

/// On-disk universe: header fields followed by the canonical item list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseCache {
    pub format: String,
    pub c: usize,
    pub k: usize,
    pub count: u64,
    pub items: Vec<Vec<Vec<usize>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::theta;
    use num_bigint::BigInt;

    /// Independent oracle: count perfect "c-matchings" recursively without
    /// building any partition.
    fn count_by_recursion(c: usize, remaining: usize) -> u64 {
        if remaining == 0 {
            return 1;
        }
        let choose = crate::counting::binomial(remaining - 1, c - 1).to_u64().unwrap();
        choose * count_by_recursion(c, remaining - c)
    }

    #[test]
    fn counts_match_oracles() {
        for (c, k, expected) in [(2, 3, 15u64), (3, 1, 1), (3, 3, 280), (2, 2, 3), (1, 5, 1)] {
            let u = enumerate_universe(Params::new(c, k).unwrap()).unwrap();
            assert_eq!(u.len() as u64, expected);
            assert_eq!(count_by_recursion(c, c * k), expected);
            assert_eq!(BigInt::from(expected), universe_size(c, k));
        }
    }

    #[test]
    fn canonical_order_is_strict() {
        let u = enumerate_universe(Params::new(2, 4).unwrap()).unwrap();
        assert!(u.items().windows(2).all(|w| w[0] < w[1]));
        for (i, p) in u.items().iter().enumerate() {
            assert_eq!(u.id_of(p), Some(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let cap = EnumerationCap { max_ground: 16, max_items: 100 };
        assert!(matches!(PartitionUniverse::build(Params::new(3, 3).unwrap(), &cap), Err(Error::CapExceeded(_))));
        assert!(matches!(enumerate_universe(Params::new(3, 6).unwrap()), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn containing_examples() {
        let params = Params::new(2, 3).unwrap();
        let u = enumerate_universe(params).unwrap();
        let s = PartialPartition::from_one_based(params, &[vec![1, 2]]).unwrap();
        assert_eq!(u.enumerate_containing(&s).unwrap().count_ones(..), 3);
        assert_eq!(u.enumerate_containing(&PartialPartition::empty(params)).unwrap().count_ones(..), 15);
        let full = u.get(7).as_partial().clone();
        let ids = u.enumerate_containing(&full).unwrap();
        assert_eq!(ids.ones().collect::<Vec<_>>(), vec![7]);
        let other = PartialPartition::empty(Params::new(3, 2).unwrap());
        assert!(matches!(u.enumerate_containing(&other), Err(Error::ParamsMismatch(_))));
        assert_eq!(theta(2, 3, 1).unwrap(), BigInt::from(3));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let u = enumerate_universe(Params::new(2, 3).unwrap()).unwrap();
        let text = serde_json::to_string(&u.to_cache()).unwrap();
        let back: UniverseCache = serde_json::from_str(&text).unwrap();
        let u2 = PartitionUniverse::from_cache(&back).unwrap();
        assert_eq!(u.items(), u2.items());
        assert_eq!(serde_json::to_string(&u2.to_cache()).unwrap(), text);

        let mut bad = back.clone();
        bad.count = 14;
        assert!(matches!(PartitionUniverse::from_cache(&bad), Err(Error::CacheCorrupt(_))));
        let mut bad = back.clone();
        bad.items.swap(0, 1);
        assert!(matches!(PartitionUniverse::from_cache(&bad), Err(Error::CacheCorrupt(_))));
        let mut bad = back;
        bad.format = "other/1".into();
        assert!(matches!(PartitionUniverse::from_cache(&bad), Err(Error::CacheCorrupt(_))));
    }
}
